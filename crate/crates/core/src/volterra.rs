//! Scalar Volterra machinery on uniform grids.
//!
//! Two problems show up when a channel function has no rational transform:
//! recovering a kernel k from φ̇-type data via the first-kind equation
//! r(t) = w·φ(t) + ∫_0^t k(t−s) φ(s) ds, and propagating a decay factor
//! c' = w·c + k ∗ c. Both are solved at two step sizes and
//! Richardson-extrapolated; the step-halving difference doubles as the
//! accuracy estimate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{lagrange4, quad_uniform, GridFunction};

/// Condition estimate above which the triangular solve is refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Finest step tried before giving up on step-halving convergence.
const MIN_STEP: f64 = 1e-4;

/// Kernel recovered from a first-kind Volterra equation.
#[derive(Clone, Debug)]
pub struct DeconvolvedKernel {
    /// Weight of δ(t): r(0)/φ(0).
    pub delta_weight: Complex64,
    /// Smooth part at the output nodes.
    pub smooth: GridFunction,
    /// sup_t |r(t) − w φ(t) − (k ∗ φ)(t)| with an independent quadrature.
    pub residual: f64,
    /// Sup-norm change of the smooth part under the last step halving.
    pub halving_change: f64,
    /// ‖T‖∞ ‖T⁻¹‖∞ of the midpoint system at the finest step used.
    pub condition: f64,
}

struct MidpointSolution {
    nodes: Vec<Complex64>,
    condition: f64,
}

/// Midpoint product integration: unknowns k((m − ½)h), lower-triangular
/// Toeplitz system solved by forward substitution; node values by cubic
/// interpolation of the midpoint values.
fn midpoint_deconvolution<R, P>(rhs: &R, phi: &P, w: Complex64, n: usize, h: f64) -> Result<MidpointSolution>
where
    R: Fn(f64) -> Complex64,
    P: Fn(f64) -> Complex64,
{
    let phis: Vec<Complex64> = (0..n).map(|j| phi((j as f64 + 0.5) * h)).collect();
    let diag = phis[0];
    if diag.norm() == 0.0 {
        return Err(Error::DeconvolutionUnstable {
            condition: f64::INFINITY,
        });
    }
    let mut mid = vec![Complex64::new(0.0, 0.0); n];
    // first column of the inverse, for the condition estimate
    let mut inv = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let t = (i + 1) as f64 * h;
        let target = (rhs(t) - w * phi(t)) / h;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut acc_inv = Complex64::new(0.0, 0.0);
        for m in 0..i {
            acc += mid[m] * phis[i - m];
            acc_inv += inv[m] * phis[i - m];
        }
        mid[i] = (target - acc) / diag;
        inv[i] = if i == 0 { 1.0 / (h * diag) } else { -acc_inv / diag };
    }
    let norm_t: f64 = h * phis.iter().map(|p| p.norm()).sum::<f64>();
    let norm_inv: f64 = inv.iter().map(|x| x.norm()).sum();
    let condition = norm_t * norm_inv;
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DeconvolutionUnstable { condition });
    }
    Ok(MidpointSolution {
        nodes: midpoints_to_nodes(&mid),
        condition,
    })
}

/// Values at nodes i·h (i = 0..=n) from values at (m + ½)h (m = 0..n).
fn midpoints_to_nodes(mid: &[Complex64]) -> Vec<Complex64> {
    let n = mid.len();
    if n < 4 {
        // too short for cubics; linear interpolation/extrapolation
        let mut out = Vec::with_capacity(n + 1);
        let at = |x: f64| -> Complex64 {
            if n == 1 {
                return mid[0];
            }
            let i = (x.floor().max(0.0) as usize).min(n - 2);
            let w = x - i as f64;
            mid[i] * (1.0 - w) + mid[i + 1] * w
        };
        for i in 0..=n {
            out.push(at(i as f64 - 0.5));
        }
        return out;
    }
    (0..=n)
        .map(|i| {
            // node i sits at midpoint coordinate i - 0.5
            let x = i as f64 - 0.5;
            let start = (i.saturating_sub(2)).min(n - 4);
            let xs = [0.0, 1.0, 2.0, 3.0].map(|k| start as f64 + k);
            let ys = [0, 1, 2, 3].map(|k| mid[start + k]);
            lagrange4(xs, ys, x)
        })
        .collect()
}

/// Solves r(t) = w φ(t) + ∫_0^t k(t−s) φ(s) ds for (w, k) on [0, t_end].
///
/// The output step is `step`; internal steps are halved until the smooth
/// part changes by less than `tol` in sup norm, then the two finest
/// solutions are Richardson-combined.
pub fn deconvolve_first_kind<R, P>(
    rhs: R,
    phi: P,
    t_end: f64,
    step: f64,
    tol: f64,
) -> Result<DeconvolvedKernel>
where
    R: Fn(f64) -> Complex64,
    P: Fn(f64) -> Complex64,
{
    let n_out = (t_end / step).round() as usize;
    if n_out < 1 {
        return Err(Error::Validation("deconvolution range shorter than one step".into()));
    }
    let step = t_end / n_out as f64;
    let phi0 = phi(0.0);
    if phi0.norm() == 0.0 {
        return Err(Error::DeconvolutionUnstable {
            condition: f64::INFINITY,
        });
    }
    let w = rhs(0.0) / phi0;

    let mut level = 0u32;
    let mut coarse = midpoint_deconvolution(&rhs, &phi, w, n_out, step)?;
    loop {
        let factor = 1usize << (level + 1);
        let h = step / factor as f64;
        let fine = midpoint_deconvolution(&rhs, &phi, w, n_out * factor, h)?;
        let stride_c = factor / 2;
        let change = (0..=n_out)
            .map(|i| (fine.nodes[i * factor] - coarse.nodes[i * stride_c]).norm())
            .fold(0.0, f64::max);
        if change < tol || h / 2.0 < MIN_STEP {
            if change >= tol {
                return Err(Error::Accuracy {
                    what: "first-kind deconvolution step halving",
                    discrepancy: change,
                    tolerance: tol,
                });
            }
            let values: Vec<Complex64> = (0..=n_out)
                .map(|i| (4.0 * fine.nodes[i * factor] - coarse.nodes[i * stride_c]) / 3.0)
                .collect();
            let smooth = GridFunction::new(step, values);
            let residual = first_kind_residual(&rhs, &phi, w, &smooth);
            return Ok(DeconvolvedKernel {
                delta_weight: w,
                smooth,
                residual,
                halving_change: change,
                condition: fine.condition,
            });
        }
        coarse = fine;
        level += 1;
    }
}

/// sup over nodes of |r − w φ − k ∗ φ| using fourth-order node quadrature.
pub fn first_kind_residual<R, P>(rhs: &R, phi: &P, w: Complex64, kernel: &GridFunction) -> f64
where
    R: Fn(f64) -> Complex64,
    P: Fn(f64) -> Complex64,
{
    let h = kernel.step();
    let k = kernel.values();
    let phis: Vec<Complex64> = (0..k.len()).map(|j| phi(j as f64 * h)).collect();
    let mut buf = Vec::with_capacity(k.len());
    let mut worst: f64 = 0.0;
    for i in 0..k.len() {
        buf.clear();
        buf.extend((0..=i).map(|j| k[i - j] * phis[j]));
        let t = i as f64 * h;
        let conv = quad_uniform(&buf, h);
        worst = worst.max((rhs(t) - w * phis[i] - conv).norm());
    }
    worst
}

/// Decay factor c with c(0) = 1 and c' = w·c + ∫_0^t k(t−s) c(s) ds.
#[derive(Clone, Debug)]
pub struct DecayFactorSolution {
    pub factor: GridFunction,
    pub derivative: GridFunction,
    pub halving_change: f64,
}

fn exp_trapezoid<K: Fn(f64) -> Complex64>(w: Complex64, kernel: &K, n: usize, h: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let ks: Vec<Complex64> = (0..=n).map(|j| kernel(j as f64 * h)).collect();
    let prop = (w * h).exp();
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut memory = vec![Complex64::new(0.0, 0.0); n + 1];
    c[0] = Complex64::new(1.0, 0.0);
    let implicit = 1.0 - 0.25 * h * h * ks[0];
    for j in 0..n {
        // trapezoid history for I_{j+1} without its last (implicit) term
        let mut partial = 0.5 * ks[j + 1] * c[0];
        for i in 1..=j {
            partial += ks[j + 1 - i] * c[i];
        }
        partial *= h;
        let rhs = prop * c[j] + 0.5 * h * (prop * memory[j] + partial);
        c[j + 1] = rhs / implicit;
        memory[j + 1] = partial + 0.5 * h * ks[0] * c[j + 1];
    }
    let deriv = c.iter().zip(&memory).map(|(&ci, &mi)| w * ci + mi).collect();
    (c, deriv)
}

/// Propagates the decay factor on [0, t_end] with output step `step`.
pub fn solve_decay_factor<K>(
    delta_weight: Complex64,
    kernel: K,
    t_end: f64,
    step: f64,
    tol: f64,
) -> Result<DecayFactorSolution>
where
    K: Fn(f64) -> Complex64,
{
    let n_out = ((t_end / step).round() as usize).max(1);
    let step = t_end / n_out as f64;
    let mut factor = 1usize;
    let mut coarse = exp_trapezoid(delta_weight, &kernel, n_out, step);
    loop {
        let fine = exp_trapezoid(delta_weight, &kernel, n_out * 2 * factor, step / (2 * factor) as f64);
        let change = (0..=n_out)
            .map(|i| (fine.0[i * 2 * factor] - coarse.0[i * factor]).norm())
            .fold(0.0, f64::max);
        let h = step / (2 * factor) as f64;
        if change < tol || h / 2.0 < MIN_STEP {
            if change >= tol {
                return Err(Error::Accuracy {
                    what: "decay-factor step halving",
                    discrepancy: change,
                    tolerance: tol,
                });
            }
            let extrap = |f: &[Complex64], c: &[Complex64]| -> Vec<Complex64> {
                (0..=n_out)
                    .map(|i| (4.0 * f[i * 2 * factor] - c[i * factor]) / 3.0)
                    .collect()
            };
            return Ok(DecayFactorSolution {
                factor: GridFunction::new(step, extrap(&fine.0, &coarse.0)),
                derivative: GridFunction::new(step, extrap(&fine.1, &coarse.1)),
                halving_change: change,
            });
        }
        coarse = fine;
        factor *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn recovers_exponential_kernel() {
        // φ = e^{-t}, k = e^{-2t}: k ∗ φ = e^{-t} - e^{-2t}
        let out = deconvolve_first_kind(
            |t| re((-t).exp() - (-2.0 * t).exp()),
            |t| re((-t).exp()),
            5.0,
            0.01,
            1e-8,
        )
        .unwrap();
        assert!(out.delta_weight.norm() < 1e-15);
        for (i, v) in out.smooth.values().iter().enumerate() {
            let t = i as f64 * 0.01;
            assert!((v.re - (-2.0 * t).exp()).abs() < 1e-7, "t = {t}: {}", v.re);
        }
        assert!(out.residual < 1e-7, "residual {}", out.residual);
    }

    #[test]
    fn extracts_delta_weight() {
        // r = 0.5 φ with φ = e^{-t/2}: pure δ kernel
        let out = deconvolve_first_kind(|t| re(0.5 * (-0.5 * t).exp()), |t| re((-0.5 * t).exp()), 3.0, 0.01, 1e-8)
            .unwrap();
        assert!((out.delta_weight.re - 0.5).abs() < 1e-15);
        assert!(out.smooth.values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn decay_factor_for_erlang2_survival() {
        // c' = -(e^{-2t} ∗ c) has solution (1 + t)e^{-t}
        let sol = solve_decay_factor(re(0.0), |t| re(-(-2.0 * t).exp()), 5.0, 0.01, 1e-7).unwrap();
        for (i, v) in sol.factor.values().iter().enumerate() {
            let t = i as f64 * 0.01;
            assert!((v.re - (1.0 + t) * (-t).exp()).abs() < 1e-8);
        }
        for (i, v) in sol.derivative.values().iter().enumerate() {
            let t = i as f64 * 0.01;
            assert!((v.re + t * (-t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn decay_factor_for_pure_delta_is_exact() {
        let sol = solve_decay_factor(re(-1.5), |_| re(0.0), 4.0, 0.1, 1e-10).unwrap();
        for (i, v) in sol.factor.values().iter().enumerate() {
            assert!((v.re - (-1.5 * i as f64 * 0.1).exp()).abs() < 1e-13);
        }
    }
}
