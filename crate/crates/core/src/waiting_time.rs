//! Renewal-process layer: waiting-time distributions and everything derived
//! from them (survival, hazard, memory kernel, sprinkling density, jump-count
//! probabilities, the even/odd difference q and its rate μ).
//!
//! All transforms are rational, so every function except the square-root
//! survival kernel is kept as an exact exponential polynomial.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sign_change_brackets, GridFunction, TimeGrid};
use crate::laplace::{numeric_inverse_laplace, ExpPolynomial, RationalLT};
use crate::volterra::{deconvolve_first_kind, DeconvolvedKernel};

/// Below this survival probability h = f/g is no longer trusted.
pub const SURVIVAL_FLOOR: f64 = 1e-280;
/// |q(t)| below this is treated as a pole of μ.
pub const MU_POLE_THRESHOLD: f64 = 1e-12;
/// With more than one distinct pole, exact p_n are kept only up to this n.
pub const EXACT_MULTI_POLE_MAX: usize = 4;
/// Largest jump-count truncation tried by [`JumpStatistics::with_tail_target`].
pub const MAX_JUMPS: usize = 512;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Declarative waiting-time distribution.
///
/// JSON form is tagged by `type`, e.g. `{"type":"erlang","n":2,"rate":1.0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WaitingTimeSpec {
    Exponential { rate: f64 },
    Erlang { n: u32, rate: f64 },
    Mixture { components: Vec<MixtureComponent> },
    Convolution { parts: Vec<WaitingTimeSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub spec: WaitingTimeSpec,
}

impl WaitingTimeSpec {
    pub fn exponential(rate: f64) -> Self {
        Self::Exponential { rate }
    }

    pub fn erlang(n: u32, rate: f64) -> Self {
        Self::Erlang { n, rate }
    }

    pub fn validate(&self) -> Result<()> {
        let check_rate = |rate: f64| {
            if rate > 0.0 && rate.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("rate must be positive and finite, got {rate}")))
            }
        };
        match self {
            Self::Exponential { rate } => check_rate(*rate),
            Self::Erlang { n, rate } => {
                if *n == 0 {
                    return Err(Error::InvalidSpec("Erlang order must be at least 1".into()));
                }
                check_rate(*rate)
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidSpec("mixture needs at least one component".into()));
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight > 0.0) || !c.weight.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "mixture weights must be positive, got {}",
                            c.weight
                        )));
                    }
                    if !matches!(c.spec, Self::Exponential { .. } | Self::Erlang { .. }) {
                        return Err(Error::InvalidSpec(
                            "mixture components must be exponential or Erlang".into(),
                        ));
                    }
                    c.spec.validate()?;
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidSpec(format!("mixture weights sum to {total}, not 1")));
                }
                Ok(())
            }
            Self::Convolution { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidSpec("convolution needs at least one part".into()));
                }
                parts.iter().try_for_each(Self::validate)
            }
        }
    }

    /// f̃(u), assembled compositionally.
    pub fn transform(&self) -> Result<RationalLT> {
        self.validate()?;
        Ok(self.transform_unchecked())
    }

    fn transform_unchecked(&self) -> RationalLT {
        match self {
            Self::Exponential { rate } => RationalLT::pole(re(-rate), 1).scale(re(*rate)),
            Self::Erlang { n, rate } => {
                RationalLT::pole(re(-rate), *n as usize).scale(re(rate.powi(*n as i32)))
            }
            Self::Mixture { components } => components
                .iter()
                .fold(RationalLT::zero(), |acc, c| {
                    acc.add(&c.spec.transform_unchecked().scale(re(c.weight)))
                }),
            Self::Convolution { parts } => parts
                .iter()
                .fold(RationalLT::constant(re(1.0)), |acc, p| acc.mul(&p.transform_unchecked())),
        }
    }

    /// Mean waiting time.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Erlang { n, rate } => *n as f64 / rate,
            Self::Mixture { components } => components.iter().map(|c| c.weight * c.spec.mean()).sum(),
            Self::Convolution { parts } => parts.iter().map(Self::mean).sum(),
        }
    }

    /// True for a single exponential (the memoryless case).
    pub fn is_exponential(&self) -> bool {
        match self {
            Self::Exponential { .. } => true,
            Self::Erlang { n, .. } => *n == 1,
            Self::Convolution { parts } => parts.len() == 1 && parts[0].is_exponential(),
            Self::Mixture { components } => {
                // a mixture of identical exponentials is still one exponential
                let rates: Vec<f64> = components
                    .iter()
                    .filter_map(|c| match c.spec {
                        Self::Exponential { rate } | Self::Erlang { n: 1, rate } => Some(rate),
                        _ => None,
                    })
                    .collect();
                rates.len() == components.len() && rates.windows(2).all(|w| w[0] == w[1])
            }
        }
    }
}

/// f, g, k, S of a renewal process, with their transforms.
#[derive(Clone, Debug)]
pub struct RenewalFunctions {
    pub spec: WaitingTimeSpec,
    pub f: ExpPolynomial,
    pub g: ExpPolynomial,
    pub k: ExpPolynomial,
    pub s: ExpPolynomial,
    pub f_lt: RationalLT,
    pub g_lt: RationalLT,
    pub k_lt: RationalLT,
    pub s_lt: RationalLT,
}

/// Bound on |Im| of a real-valued function at the sample times.
const REALITY_TOL: f64 = 1e-9;

fn check_real(name: &str, p: &ExpPolynomial, times: &[f64]) -> Result<()> {
    let worst = p.max_imaginary(times);
    if worst > REALITY_TOL {
        return Err(Error::InvariantViolation {
            what: format!("{name} has imaginary part {worst:.3e}"),
            t: f64::NAN,
        });
    }
    Ok(())
}

impl RenewalFunctions {
    /// k̃ = u f̃/(1 − f̃), S̃ = f̃/(1 − f̃), g̃ = (1 − f̃)/u, all inverted exactly.
    pub fn build(spec: &WaitingTimeSpec) -> Result<Self> {
        let f_lt = spec.transform()?;
        let one_minus_f = RationalLT::constant(re(1.0)).sub(&f_lt);
        let g_lt = one_minus_f.div_u();
        let s_lt = f_lt.div(&one_minus_f)?;
        let k_lt = s_lt.mul_u();
        let f = f_lt.inverse_laplace()?;
        let g = g_lt.inverse_laplace()?;
        let k = k_lt.inverse_laplace()?;
        let s = s_lt.inverse_laplace()?;
        let scale = spec.mean();
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5 * scale).collect();
        for (name, p) in [("f", &f), ("g", &g), ("k", &k), ("S", &s)] {
            check_real(name, p, &times)?;
        }
        Ok(Self {
            spec: spec.clone(),
            f,
            g,
            k,
            s,
            f_lt,
            g_lt,
            k_lt,
            s_lt,
        })
    }

    pub fn density(&self, t: f64) -> f64 {
        self.f.evaluate_real(t)
    }

    pub fn survival(&self, t: f64) -> f64 {
        self.g.evaluate_real(t)
    }

    pub fn sprinkling(&self, t: f64) -> f64 {
        self.s.evaluate_real(t)
    }

    /// Smooth part of the memory kernel; the δ weight is [`Self::kernel_delta`].
    pub fn kernel_smooth(&self, t: f64) -> f64 {
        self.k.evaluate_real(t)
    }

    pub fn kernel_delta(&self) -> f64 {
        self.k.delta_weight().re
    }

    /// h(t) = f(t)/g(t).
    pub fn hazard(&self, t: f64) -> Result<f64> {
        let g = self.survival(t);
        if g <= SURVIVAL_FLOOR {
            return Err(Error::SaturatedSurvival {
                t,
                last_valid: self.last_valid_survival(t),
            });
        }
        Ok(self.density(t) / g)
    }

    fn last_valid_survival(&self, t: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, t);
        while hi - lo > 1e-9 * t.max(1.0) {
            let m = 0.5 * (lo + hi);
            if self.survival(m) > SURVIVAL_FLOOR {
                lo = m;
            } else {
                hi = m;
            }
        }
        lo
    }

    /// Rows (t, S, h, S/g), checking S ≤ h ≤ S/g with slack 1e-9.
    pub fn bounds_report(&self, grid: &TimeGrid) -> Result<Vec<BoundsRow>> {
        grid.times()
            .into_iter()
            .map(|t| {
                let g = self.survival(t);
                let s = self.sprinkling(t);
                let h = self.hazard(t)?;
                let row = BoundsRow {
                    t,
                    s,
                    h,
                    s_over_g: s / g,
                };
                if s - 1e-9 > h {
                    return Err(Error::InvariantViolation {
                        what: format!("S = {s} exceeds h = {h}"),
                        t,
                    });
                }
                if h > row.s_over_g + 1e-9 {
                    return Err(Error::InvariantViolation {
                        what: format!("h = {h} exceeds S/g = {}", row.s_over_g),
                        t,
                    });
                }
                Ok(row)
            })
            .collect()
    }

    /// f_√ = −d/dt √g and the kernel k_√ with f_√ = k_√ ∗ √g.
    pub fn sqrt_survival_channel(&self, grid: &TimeGrid) -> Result<SqrtSurvivalChannel> {
        let t_end = grid.t_end;
        if self.survival(t_end) <= SURVIVAL_FLOOR {
            return Err(Error::SaturatedSurvival {
                t: t_end,
                last_valid: self.last_valid_survival(t_end),
            });
        }
        let sqrt_g = |t: f64| re(self.survival(t).sqrt());
        let f_sqrt = |t: f64| re(self.density(t) / (2.0 * self.survival(t).sqrt()));
        let kernel = deconvolve_first_kind(f_sqrt, sqrt_g, t_end, grid.dt(), SQRT_KERNEL_HALVING_TOL)?;
        Ok(SqrtSurvivalChannel {
            f_sqrt: GridFunction::sample(grid, f_sqrt),
            sqrt_g: GridFunction::sample(grid, sqrt_g),
            kernel,
        })
    }
}

/// Step-halving target for the k_√ deconvolution.
pub const SQRT_KERNEL_HALVING_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsRow {
    pub t: f64,
    pub s: f64,
    pub h: f64,
    pub s_over_g: f64,
}

/// Survival √g, its density f_√ and memory kernel k_√ on a grid.
#[derive(Clone, Debug)]
pub struct SqrtSurvivalChannel {
    pub f_sqrt: GridFunction,
    pub sqrt_g: GridFunction,
    pub kernel: DeconvolvedKernel,
}

impl SqrtSurvivalChannel {
    pub fn residual(&self) -> f64 {
        self.kernel.residual
    }
}

/// Jump-count probabilities p_n and the even/odd difference q.
///
/// With several distinct poles the partial-fraction form of f̃^n g̃ has
/// amplitudes growing geometrically in n and loses all accuracy well before
/// n = 20. Exact forms are then kept for n ≤ [`EXACT_MULTI_POLE_MAX`] only;
/// higher p_n come from contour inversion.
#[derive(Clone, Debug)]
pub struct JumpStatistics {
    /// Exact p_n; may be shorter than `n_max + 1`.
    pub p: Vec<ExpPolynomial>,
    n_max: usize,
    pub q: ExpPolynomial,
    pub q_lt: RationalLT,
    q_dot: ExpPolynomial,
    f_lt: RationalLT,
    g_lt: RationalLT,
    /// 1 − Σ_{n ≤ N_max} p_n at `tail_time`.
    pub tail: f64,
    pub tail_time: f64,
}

/// μ(t), or a marker for a pole of μ at a zero of q.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuValue {
    Finite(f64),
    Divergent { sign: f64, bracket: (f64, f64) },
}

impl MuValue {
    /// Finite value, or signed infinity.
    pub fn value(&self) -> f64 {
        match *self {
            Self::Finite(v) => v,
            Self::Divergent { sign, .. } => sign * f64::INFINITY,
        }
    }
}

impl JumpStatistics {
    /// p̃_n = f̃^n g̃ for n = 0..=n_max; q̃ = g̃/(1 + f̃) in closed form.
    pub fn new(rf: &RenewalFunctions, n_max: usize, tail_time: f64) -> Result<Self> {
        let exact_max = if rf.f_lt.poles().len() <= 1 { n_max } else { n_max.min(EXACT_MULTI_POLE_MAX) };
        let mut p = Vec::with_capacity(exact_max + 1);
        let mut lt = rf.g_lt.clone();
        for n in 0..=exact_max {
            if n > 0 {
                lt = lt.mul(&rf.f_lt);
            }
            p.push(lt.inverse_laplace()?);
        }
        let q_lt = rf.g_lt.div(&RationalLT::constant(re(1.0)).add(&rf.f_lt))?;
        let q = q_lt.inverse_laplace()?;
        let q_dot = q.derivative();
        let mut js = Self {
            p,
            n_max,
            q,
            q_lt,
            q_dot,
            f_lt: rf.f_lt.clone(),
            g_lt: rf.g_lt.clone(),
            tail: 0.0,
            tail_time,
        };
        js.tail = 1.0 - (0..=n_max).map(|n| js.p_n(n, tail_time)).sum::<f64>();
        Ok(js)
    }

    /// Smallest truncation (doubling from 8) whose tail at `t_end` is within `target`.
    pub fn with_tail_target(rf: &RenewalFunctions, t_end: f64, target: f64) -> Result<Self> {
        let mut n_max = 8;
        loop {
            let js = Self::new(rf, n_max, t_end)?;
            if js.tail <= target {
                return Ok(js);
            }
            if n_max >= MAX_JUMPS {
                return Err(Error::Truncation {
                    n_max,
                    tail: js.tail,
                });
            }
            n_max = (2 * n_max).min(MAX_JUMPS);
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn p_n(&self, n: usize, t: f64) -> f64 {
        if let Some(p) = self.p.get(n) {
            return p.evaluate_real(t);
        }
        if t <= 0.0 {
            // f carries no δ, so no jump has happened at t = 0
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let (f_lt, g_lt) = (&self.f_lt, &self.g_lt);
        numeric_inverse_laplace(|u| f_lt.eval(u).powu(n as u32) * g_lt.eval(u), &[t])
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    }

    pub fn q_at(&self, t: f64) -> f64 {
        self.q.evaluate_real(t)
    }

    /// Σ (−1)^n p_n over the truncated set.
    pub fn q_truncated(&self, t: f64) -> f64 {
        (0..=self.n_max)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * self.p_n(n, t))
            .sum()
    }

    /// μ = −½ q̇/q. Away from zeros of q this equals −½ d/dt ln|q|.
    pub fn mu(&self, t: f64) -> MuValue {
        let q = self.q_at(t);
        let q_dot = self.q_dot.evaluate_real(t);
        if q.abs() >= MU_POLE_THRESHOLD {
            return MuValue::Finite(-0.5 * q_dot / q);
        }
        // bracket the zero near t
        let width = 1e-6 * t.max(1.0);
        let (lo, hi) = (t - width, t + width);
        let bracket = sign_change_brackets(|s| self.q_at(s), &[lo.max(0.0), hi], 1e-12)
            .first()
            .copied()
            .unwrap_or((t, t));
        let sign = if q == 0.0 { -q_dot.signum() } else { -(q_dot * q).signum() };
        MuValue::Divergent { sign, bracket }
    }

    /// Zeros of q on the grid, bisected to 1e-10.
    pub fn q_zero_brackets(&self, grid: &TimeGrid) -> Vec<(f64, f64)> {
        sign_change_brackets(|t| self.q_at(t), &grid.times(), 1e-10)
    }
}
