//! TCL, NZ and Redfield generators over a shared damping basis.
//!
//! Every generator here is Σ_α m_α(t) M_α with M_α = |τ_α⟩⟨ς_α|, so all
//! conversions act channel by channel on scalar functions. The TCL side is
//! carried by the decay factor c_α = exp ∫_0^t m^TCL_α, which stays finite
//! where m^TCL_α diverges; the NZ side by the kernel m^NZ_α with
//! ċ = m^NZ ∗ c.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, quad_uniform, sign_change_brackets, GridFunction, TimeGrid};
use crate::laplace::{ExpPolynomial, ExpTerm, RationalLT};
use crate::superop::{damping_basis, DampingBasis, KrausMap, SuperOperator};
use crate::volterra::{deconvolve_first_kind, solve_decay_factor};
use crate::waiting_time::RenewalFunctions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// |c(t)| below this means the TCL rate is treated as divergent.
pub const SINGULAR_FLOOR: f64 = 1e-12;
/// Eigenvalues of a jump map minus identity below this are zero channels.
const ZERO_EIGENVALUE: f64 = 1e-12;
/// Sampling density for locating decay-factor zeros.
const ZERO_SCAN_STEPS: usize = 4000;
/// Step-halving target for gridded conversions.
pub const GRID_HALVING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorKind {
    Tcl,
    Nz,
    Redfield,
}

/// How a channel's time dependence is stored.
#[derive(Clone, Debug)]
pub enum ChannelRepr {
    Zero,
    /// Closed form; for NZ kernels the δ weight is part of the polynomial.
    Exact { function: ExpPolynomial, integral: ExpPolynomial },
    /// TCL rate exponent·ḟ/f with decay factor f^exponent.
    DecayFactor { factor: ExpPolynomial, factor_dot: ExpPolynomial, exponent: Complex64 },
    /// Samples on a uniform grid plus a δ weight at t = 0.
    Sampled { values: GridFunction, delta: Complex64, integral: GridFunction },
    /// TCL rate ċ/c from a sampled decay factor.
    SampledDecay { factor: GridFunction, derivative: GridFunction },
}

/// One channel function m_α(t).
#[derive(Clone, Debug)]
pub struct ChannelFunction {
    pub label: usize,
    pub repr: ChannelRepr,
    /// Brackets of zeros of the decay factor, where a TCL rate diverges.
    pub singularities: Vec<(f64, f64)>,
}

impl ChannelFunction {
    pub fn zero(label: usize) -> Self {
        Self { label, repr: ChannelRepr::Zero, singularities: Vec::new() }
    }

    pub fn exact(label: usize, function: ExpPolynomial) -> Result<Self> {
        let integral = function.integral()?;
        Ok(Self { label, repr: ChannelRepr::Exact { function, integral }, singularities: Vec::new() })
    }

    /// Constant rate `value` (a δ of weight `value` when read as a kernel).
    pub fn constant_rate(label: usize, value: f64) -> Result<Self> {
        Self::exact(label, ExpPolynomial::exponential(value, 0.0))
    }

    /// TCL channel with decay factor `factor^exponent`; zeros of a real factor
    /// on [0, horizon] become singularities.
    pub fn decay_factor(label: usize, factor: ExpPolynomial, exponent: Complex64, horizon: f64) -> Self {
        let factor_dot = factor.derivative();
        let singularities = real_zeros(&factor, horizon);
        Self { label, repr: ChannelRepr::DecayFactor { factor, factor_dot, exponent }, singularities }
    }

    pub fn sampled(label: usize, values: GridFunction, delta: Complex64) -> Self {
        let h = values.step();
        let cumulative: Vec<Complex64> =
            cumulative_integral(values.values(), h).into_iter().map(|v| v + delta).collect();
        let integral = GridFunction::new(h, cumulative);
        Self { label, repr: ChannelRepr::Sampled { values, delta, integral }, singularities: Vec::new() }
    }

    fn sampled_decay(label: usize, factor: GridFunction, derivative: GridFunction) -> Self {
        let times: Vec<f64> = (0..factor.values().len()).map(|i| i as f64 * factor.step()).collect();
        let f = factor.clone();
        let singularities = if factor.values().iter().all(|v| v.im.abs() <= 1e-12 * v.norm().max(1.0)) {
            sign_change_brackets(|t| f.eval(t).re, &times, 1e-10)
        } else {
            Vec::new()
        };
        Self { label, repr: ChannelRepr::SampledDecay { factor, derivative }, singularities }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, ChannelRepr::Zero)
    }

    /// Weight of δ(t) (NZ kernels only; zero otherwise).
    pub fn delta_weight(&self) -> Complex64 {
        match &self.repr {
            ChannelRepr::Exact { function, .. } => function.delta_weight(),
            ChannelRepr::Sampled { delta, .. } => *delta,
            _ => ZERO,
        }
    }

    /// Bracket containing `t` widened by `half_width`, if any.
    pub fn singular_window(&self, t: f64, half_width: f64) -> Option<(f64, f64)> {
        self.singularities
            .iter()
            .copied()
            .find(|&(lo, hi)| t >= lo - half_width && t <= hi + half_width)
    }

    /// Smooth part of m(t) (δ excluded).
    pub fn value(&self, t: f64) -> Result<Complex64> {
        match &self.repr {
            ChannelRepr::Zero => Ok(ZERO),
            ChannelRepr::Exact { function, .. } => Ok(function.evaluate(t)),
            ChannelRepr::Sampled { values, .. } => Ok(values.eval(t)),
            ChannelRepr::DecayFactor { factor, factor_dot, exponent } => {
                let c = factor.evaluate(t);
                self.check_singular(t, c)?;
                Ok(exponent * factor_dot.evaluate(t) / c)
            }
            ChannelRepr::SampledDecay { factor, derivative } => {
                let c = factor.eval(t);
                self.check_singular(t, c)?;
                Ok(derivative.eval(t) / c)
            }
        }
    }

    fn check_singular(&self, t: f64, c: Complex64) -> Result<()> {
        if c.norm() < SINGULAR_FLOOR {
            let (lo, hi) = self.singular_window(t, 1e-9).unwrap_or((t, t));
            return Err(Error::TclSingular { lo, hi });
        }
        Ok(())
    }

    /// ∫_0^t m (δ weight included for t > 0).
    pub fn integral(&self, t: f64) -> Complex64 {
        match &self.repr {
            ChannelRepr::Zero => ZERO,
            ChannelRepr::Exact { integral, .. } => {
                integral.evaluate(t) + if t > 0.0 { integral.delta_weight() } else { ZERO }
            }
            ChannelRepr::Sampled { integral, delta, .. } => {
                if t > 0.0 {
                    integral.eval(t)
                } else {
                    integral.eval(0.0) - delta
                }
            }
            ChannelRepr::DecayFactor { .. } | ChannelRepr::SampledDecay { .. } => self.decay(t).ln(),
        }
    }

    /// exp ∫_0^t m, finite through TCL singularities.
    pub fn decay(&self, t: f64) -> Complex64 {
        match &self.repr {
            ChannelRepr::DecayFactor { factor, exponent, .. } => {
                let f = factor.evaluate(t);
                if *exponent == ONE {
                    f
                } else {
                    (exponent * f.ln()).exp()
                }
            }
            ChannelRepr::SampledDecay { factor, .. } => factor.eval(t),
            _ => self.integral(t).exp(),
        }
    }

    /// Laplace transform when the channel is an exact kernel.
    fn exact_transform(&self) -> Option<RationalLT> {
        match &self.repr {
            ChannelRepr::Zero => Some(RationalLT::zero()),
            ChannelRepr::Exact { function, .. } => Some(function.laplace()),
            _ => None,
        }
    }

    /// Samples of m on [0, t_end] at spacing `step`; NaN where singular.
    pub fn sample(&self, t_end: f64, step: f64) -> Vec<f64> {
        let n = (t_end / step).round() as usize;
        (0..=n)
            .map(|i| self.value(i as f64 * step).map(|v| v.re).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Zeros of a real-valued exponential polynomial on [0, horizon].
fn real_zeros(p: &ExpPolynomial, horizon: f64) -> Vec<(f64, f64)> {
    if !(horizon > 0.0) {
        return Vec::new();
    }
    let times: Vec<f64> = (0..=ZERO_SCAN_STEPS).map(|i| horizon * i as f64 / ZERO_SCAN_STEPS as f64).collect();
    let probe: f64 = times.iter().map(|&t| p.evaluate(t).im.abs()).fold(0.0, f64::max);
    if probe > 1e-9 {
        return Vec::new();
    }
    sign_change_brackets(|t| p.evaluate_real(t), &times, 1e-10)
}

/// NZ kernel → TCL channel.
///
/// Exact kernels: c̃ = 1/(u − m̃^NZ) and m^TCL = ċ/c in closed form. Sampled
/// kernels: c' = w c + k ∗ c solved on the grid up to `horizon`.
pub fn tcl_channel_from_nz(m_nz: &ChannelFunction, horizon: f64, step: f64) -> Result<ChannelFunction> {
    let label = m_nz.label;
    if m_nz.is_zero() {
        return Ok(ChannelFunction::zero(label));
    }
    if let Some(m_lt) = m_nz.exact_transform() {
        let c_lt = RationalLT::u().sub(&m_lt).recip()?;
        let c = c_lt.inverse_laplace()?;
        return Ok(ChannelFunction::decay_factor(label, c, ONE, horizon));
    }
    let ChannelRepr::Sampled { values, delta, .. } = &m_nz.repr else {
        return Err(Error::Validation("NZ channel must be a kernel, not a TCL decay factor".into()));
    };
    let sol = solve_decay_factor(*delta, |t| values.eval(t), horizon, step, GRID_HALVING_TOL)?;
    Ok(ChannelFunction::sampled_decay(label, sol.factor, sol.derivative))
}

/// TCL channel → NZ kernel, m̃^NZ = u − 1/c̃.
///
/// Closed form when the decay factor is an exponential polynomial (or m^TCL
/// is constant); otherwise ċ = m^NZ ∗ c is deconvolved on the grid.
pub fn nz_channel_from_tcl(m_tcl: &ChannelFunction, horizon: f64, step: f64) -> Result<ChannelFunction> {
    let label = m_tcl.label;
    match &m_tcl.repr {
        ChannelRepr::Zero => return Ok(ChannelFunction::zero(label)),
        ChannelRepr::DecayFactor { factor, exponent, .. } if closed_power(factor, *exponent).is_some() => {
            let c_lt = closed_power(factor, *exponent).unwrap().laplace();
            let m_lt = RationalLT::u().sub(&c_lt.recip()?);
            return ChannelFunction::exact(label, m_lt.inverse_laplace()?);
        }
        ChannelRepr::Exact { function, .. } if is_constant(function) => {
            // constant rate a: c = e^{a t}, m^NZ = a δ
            let a = function.evaluate(0.0);
            return ChannelFunction::exact(label, ExpPolynomial::new(Vec::new(), a));
        }
        _ => {}
    }
    if let Some((lo, hi)) = m_tcl.singularities.iter().copied().find(|&(lo, _)| lo <= horizon) {
        return Err(Error::TclSingular { lo, hi });
    }
    let c = |t: f64| m_tcl.decay(t);
    let c_dot = |t: f64| m_tcl.value(t).unwrap_or(ZERO) * m_tcl.decay(t);
    let kernel = deconvolve_first_kind(c_dot, c, horizon, step, GRID_HALVING_TOL.max(1e-8))?;
    Ok(ChannelFunction::sampled(label, kernel.smooth, kernel.delta_weight))
}

/// f^e as an exponential polynomial: trivially for e = 1, and for a single
/// pure exponential a·e^{−λt} ↦ a^e·e^{−eλt}.
fn closed_power(f: &ExpPolynomial, e: Complex64) -> Option<ExpPolynomial> {
    if e == ONE {
        return Some(f.clone());
    }
    match f.terms() {
        [term] if term.power == 0 && f.delta_weight() == ZERO => Some(ExpPolynomial::new(
            vec![ExpTerm { amplitude: (e * term.amplitude.ln()).exp(), power: 0, decay: e * term.decay }],
            ZERO,
        )),
        _ => None,
    }
}

fn is_constant(p: &ExpPolynomial) -> bool {
    p.delta_weight() == ZERO
        && p.terms().iter().all(|t| t.power == 0 && t.decay == ZERO)
}

/// m^Red(t) = ∫_0^t m^NZ, δ weight included from t = 0+.
pub fn redfield_channel(m_nz: &ChannelFunction) -> Result<ChannelFunction> {
    let label = m_nz.label;
    match &m_nz.repr {
        ChannelRepr::Zero => Ok(ChannelFunction::zero(label)),
        ChannelRepr::Exact { integral, .. } => {
            // the δ weight of the kernel integrates to a constant
            let w = integral.delta_weight();
            let smooth = integral.smooth().add(&ExpPolynomial::new(
                vec![ExpTerm { amplitude: w, power: 0, decay: ZERO }],
                ZERO,
            ));
            ChannelFunction::exact(label, smooth)
        }
        ChannelRepr::Sampled { integral, .. } => Ok(ChannelFunction::sampled(label, integral.clone(), ZERO)),
        _ => Err(Error::Validation("Redfield channels are built from NZ kernels".into())),
    }
}

/// Result of [`fixed_point_tcl`].
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub channel: ChannelFunction,
    pub iterations: usize,
    pub last_change: f64,
}

/// Picard iteration m^{(j+1)}(t) = ∫_0^t m^NZ(t−s) exp(−∫_s^t m^{(j)}) ds
/// from m^{(0)} = 0 (whose first iterate is the Redfield rate).
pub fn fixed_point_tcl(m_nz: &ChannelFunction, grid: &TimeGrid, max_iter: usize, tol: f64) -> Result<FixedPoint> {
    let n = grid.n_points;
    let h = grid.dt();
    let w = m_nz.delta_weight();
    let kernel: Vec<Complex64> = (0..n).map(|i| m_nz.value(grid.time(i))).collect::<Result<_>>()?;
    let mut current = vec![ZERO; n];
    let mut buf = Vec::with_capacity(n);
    let mut last_change = f64::INFINITY;
    for iteration in 1..=max_iter {
        let big_m = cumulative_integral(&current, h);
        let next: Vec<Complex64> = (0..n)
            .map(|i| {
                buf.clear();
                buf.extend((0..=i).map(|l| kernel[i - l] * (big_m[l] - big_m[i]).exp()));
                let smooth = quad_uniform(&buf, h);
                if i == 0 { w } else { w + smooth }
            })
            .collect();
        last_change = next.iter().zip(&current).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        current = next;
        if !last_change.is_finite() {
            break;
        }
        if last_change < tol {
            let values = GridFunction::new(h, current);
            return Ok(FixedPoint {
                channel: ChannelFunction::sampled(m_nz.label, values, ZERO),
                iterations: iteration,
                last_change,
            });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: last_change })
}

/// Damping basis plus one channel function per basis element.
#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub basis: DampingBasis,
    pub channels: Vec<ChannelFunction>,
    pub kind: GeneratorKind,
}

impl GeneratorSpec {
    /// K^NZ_t = k(t)(E − 𝟙): channels ℓ_α k(t) over the damping basis of E − 𝟙.
    pub fn nz_from_semimarkov(jump: &KrausMap, rf: &RenewalFunctions) -> Result<Self> {
        let generator = jump.liouville().sub(&SuperOperator::identity(jump.dim()));
        Self::from_scalar_kernel(&generator, &rf.k)
    }

    /// Channels ℓ_α·kernel over the damping basis of `generator`.
    pub fn from_scalar_kernel(generator: &SuperOperator, kernel: &ExpPolynomial) -> Result<Self> {
        let basis = damping_basis(generator)?;
        let channels = basis
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(a, &l)| {
                if l.norm() <= ZERO_EIGENVALUE {
                    Ok(ChannelFunction::zero(a))
                } else {
                    ChannelFunction::exact(a, kernel.scale(l))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { basis, channels, kind: GeneratorKind::Nz })
    }

    /// K^TCL_t = h(t)·L with h = −ġ/g: channel decay factors g^{−ℓ_α}.
    pub fn tcl_from_hazard(generator: &SuperOperator, rf: &RenewalFunctions, horizon: f64) -> Result<Self> {
        let basis = damping_basis(generator)?;
        let channels = basis
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(a, &l)| {
                if l.norm() <= ZERO_EIGENVALUE {
                    ChannelFunction::zero(a)
                } else {
                    ChannelFunction::decay_factor(a, rf.g.clone(), -l, horizon)
                }
            })
            .collect();
        Ok(Self { basis, channels, kind: GeneratorKind::Tcl })
    }

    pub fn with_channels(&self, channels: Vec<ChannelFunction>, kind: GeneratorKind) -> Self {
        Self { basis: self.basis.clone(), channels, kind }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// NZ → TCL per channel.
    pub fn to_tcl(&self, horizon: f64, step: f64) -> Result<Self> {
        self.expect_kind(GeneratorKind::Nz)?;
        let channels = self
            .channels
            .par_iter()
            .map(|c| tcl_channel_from_nz(c, horizon, step))
            .collect::<Result<_>>()?;
        Ok(self.with_channels(channels, GeneratorKind::Tcl))
    }

    /// TCL → NZ per channel.
    pub fn to_nz(&self, horizon: f64, step: f64) -> Result<Self> {
        self.expect_kind(GeneratorKind::Tcl)?;
        let channels = self
            .channels
            .par_iter()
            .map(|c| nz_channel_from_tcl(c, horizon, step))
            .collect::<Result<_>>()?;
        Ok(self.with_channels(channels, GeneratorKind::Nz))
    }

    /// NZ → Redfield per channel.
    pub fn to_redfield(&self) -> Result<Self> {
        self.expect_kind(GeneratorKind::Nz)?;
        let channels = self.channels.iter().map(redfield_channel).collect::<Result<_>>()?;
        Ok(self.with_channels(channels, GeneratorKind::Redfield))
    }

    fn expect_kind(&self, kind: GeneratorKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Validation(format!("expected a {kind:?} generator, got {:?}", self.kind)));
        }
        Ok(())
    }

    /// Σ_α m_α(t) M_α with smooth channel values only.
    pub fn assemble(&self, t: f64) -> Result<SuperOperator> {
        let values = self.channels.iter().map(|c| c.value(t)).collect::<Result<Vec<_>>>()?;
        Ok(self.basis.assemble(&values))
    }

    /// Σ_α w_α M_α from the δ weights (NZ only).
    pub fn assemble_delta(&self) -> SuperOperator {
        let values: Vec<Complex64> = self.channels.iter().map(|c| c.delta_weight()).collect();
        self.basis.assemble(&values)
    }

    /// Commutative map Σ_α exp(∫_0^t m_α) M_α.
    pub fn decay_map(&self, t: f64) -> SuperOperator {
        let values: Vec<Complex64> = self.channels.iter().map(|c| c.decay(t)).collect();
        self.basis.assemble(&values)
    }

    /// All singularity brackets across channels, sorted.
    pub fn singularities(&self) -> Vec<(f64, f64)> {
        let mut all: Vec<(f64, f64)> = self.channels.iter().flat_map(|c| c.singularities.iter().copied()).collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        all
    }

    pub fn first_singularity(&self) -> Option<f64> {
        self.singularities().first().map(|s| s.0)
    }
}
