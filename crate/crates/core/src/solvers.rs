//! Propagation routes: time-local ODE, Volterra integro-differential
//! equation and the jump-count series, plus divisibility diagnostics.
//!
//! Every route propagates the dynamical map Λ_t (or a single vectorized
//! state) so the same code serves trajectories and divisibility.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, GeneratorSpec};
use crate::grid::TimeGrid;
use crate::superop::{min_hermitian_eigenvalue, unvec, vec_of, CMatrix, KrausMap, SuperOperator};
use crate::waiting_time::{JumpStatistics, RenewalFunctions, WaitingTimeSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const TCL_HALVING_TOL: f64 = 1e-6;
pub const NZ_HALVING_TOL: f64 = 1e-5;
pub const SERIES_TAIL: f64 = 1e-10;
/// Largest number of sub-steps per grid interval tried before giving up.
pub const MAX_SUBSTEPS: usize = 64;
/// Grids above this size make the O(N²) history sum slow.
pub const VOLTERRA_COST_WARNING: usize = 20_000;
pub const DET_FLOOR: f64 = 1e-12;
pub const CP_TOL: f64 = 1e-8;
pub const DEFAULT_STRIDE: usize = 20;

/// States (and optionally maps) on a grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<CMatrix>,
    pub maps: Option<Vec<SuperOperator>>,
}

impl Trajectory {
    fn from_maps(grid: &TimeGrid, maps: Vec<SuperOperator>, rho0: &CMatrix) -> Self {
        let states = maps.iter().map(|m| m.apply(rho0)).collect();
        Self { grid: *grid, states, maps: Some(maps) }
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.times()
    }

    /// Largest |Tr ρ − 1| along the trajectory.
    pub fn trace_defect(&self) -> f64 {
        self.states.iter().map(|s| (s.trace() - 1.0).norm()).fold(0.0, f64::max)
    }

    /// Largest ‖ρ − ρ†‖_F along the trajectory.
    pub fn hermiticity_defect(&self) -> f64 {
        self.states.iter().map(|s| (s - s.adjoint()).norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part, over all states.
    pub fn min_eigenvalue(&self) -> f64 {
        self.states.iter().map(min_hermitian_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// max_t ½‖ρ_t − σ_t‖_1 against another trajectory on the same grid.
    pub fn max_trace_distance(&self, other: &Self) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| crate::superop::trace_distance(a, b))
            .fold(0.0, f64::max)
    }

    /// Trace and Hermiticity within `tol`, eigenvalues above −`positivity`.
    pub fn check(&self, tol: f64, positivity: f64) -> Result<()> {
        let t = self.trace_defect();
        if t > tol {
            return Err(Error::InvariantViolation { what: format!("trace defect {t:.3e}"), t: f64::NAN });
        }
        let h = self.hermiticity_defect();
        if h > tol {
            return Err(Error::InvariantViolation { what: format!("hermiticity defect {h:.3e}"), t: f64::NAN });
        }
        for (i, s) in self.states.iter().enumerate() {
            let m = min_hermitian_eigenvalue(s);
            if m < -positivity {
                return Err(Error::InvariantViolation {
                    what: format!("negative eigenvalue {m:.3e}"),
                    t: self.grid.time(i),
                });
            }
        }
        Ok(())
    }
}

fn max_entry_difference(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Doubles the sub-step count until two successive runs agree within `tol`.
/// Returns the finer run and its coarse partner.
fn refine<F>(what: &'static str, tol: f64, run: F) -> Result<(Vec<CMatrix>, Vec<CMatrix>)>
where
    F: Fn(usize) -> Result<Vec<CMatrix>>,
{
    let mut m = 1;
    let mut coarse = run(m)?;
    let mut discrepancy = f64::INFINITY;
    while 2 * m <= MAX_SUBSTEPS {
        m *= 2;
        let fine = run(m)?;
        discrepancy = max_entry_difference(&fine, &coarse);
        if discrepancy <= tol {
            return Ok((fine, coarse));
        }
        coarse = fine;
    }
    Err(Error::Accuracy { what, discrepancy, tolerance: tol })
}

fn check_singularities(spec: &GeneratorSpec, t_end: f64) -> Result<()> {
    match spec.singularities().into_iter().find(|&(lo, _)| lo <= t_end) {
        Some((lo, hi)) => Err(Error::TclSingular { lo, hi }),
        None => Ok(()),
    }
}

/// Classic RK4 for Ẋ = K_t X on the grid with `substeps` steps per interval.
fn rk4(spec: &GeneratorSpec, x0: &CMatrix, grid: &TimeGrid, substeps: usize) -> Result<Vec<CMatrix>> {
    let h = grid.dt() / substeps as f64;
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(grid.n_points);
    out.push(x.clone());
    for i in 0..grid.n_points - 1 {
        for s in 0..substeps {
            let t = grid.time(i) + s as f64 * h;
            let k_a = spec.assemble(t)?;
            let k_b = spec.assemble(t + 0.5 * h)?;
            let k_c = spec.assemble(t + h)?;
            let d1 = k_a.matrix() * &x;
            let d2 = k_b.matrix() * (&x + &d1 * (hc * half));
            let d3 = k_b.matrix() * (&x + &d2 * (hc * half));
            let d4 = k_c.matrix() * (&x + &d3 * hc);
            x += (d1 + (d2 + d3) * Complex64::new(2.0, 0.0) + d4) * (hc / 6.0);
        }
        out.push(x.clone());
    }
    Ok(out)
}

fn solve_tcl_raw(spec: &GeneratorSpec, x0: &CMatrix, grid: &TimeGrid) -> Result<Vec<CMatrix>> {
    if spec.kind == GeneratorKind::Nz {
        return Err(Error::Validation("solve_tcl needs a TCL or Redfield generator".into()));
    }
    grid.validate()?;
    check_singularities(spec, grid.t_end)?;
    let (fine, _) = refine("TCL step halving", TCL_HALVING_TOL, |m| rk4(spec, x0, grid, m))?;
    Ok(fine)
}

/// ρ̇ = K^TCL_t ρ by RK4 with step-halving control.
pub fn solve_tcl(spec: &GeneratorSpec, rho0: &CMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    let d = spec.dim();
    let out = solve_tcl_raw(spec, &vec_of(rho0), grid)?;
    let states = out.iter().map(|v| unvec(v.as_slice(), d)).collect();
    Ok(Trajectory { grid: *grid, states, maps: None })
}

/// Λ_t for a TCL or Redfield generator by RK4.
pub fn tcl_maps(spec: &GeneratorSpec, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
    let d = spec.dim();
    let out = solve_tcl_raw(spec, &CMatrix::identity(d * d, d * d), grid)?;
    out.into_iter().map(|m| SuperOperator::from_matrix(d, m)).collect()
}

/// Commutative closed form Λ_t = Σ_α exp(∫_0^t m_α) M_α.
pub fn tcl_closed_maps(spec: &GeneratorSpec, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
    if spec.kind == GeneratorKind::Nz {
        return Err(Error::Validation("closed-form maps need a TCL or Redfield generator".into()));
    }
    Ok(grid.times().into_iter().map(|t| spec.decay_map(t)).collect())
}

/// Product-trapezoid scheme for Ẋ = W X_t + ∫_0^t K(t−s) X_s ds, implicit in
/// the endpoint terms (W carries the δ weights).
fn volterra_trapezoid(spec: &GeneratorSpec, x0: &CMatrix, grid: &TimeGrid, substeps: usize) -> Result<Vec<CMatrix>> {
    let h = grid.dt() / substeps as f64;
    let n = (grid.n_points - 1) * substeps;
    let dd = x0.nrows();
    let w = spec.assemble_delta();
    let kernel: Vec<CMatrix> = (0..=n)
        .map(|i| spec.assemble(i as f64 * h).map(|k| k.matrix().clone()))
        .collect::<Result<_>>()?;
    let hc = Complex64::new(h, 0.0);
    let half_h = Complex64::new(0.5 * h, 0.0);
    let implicit = CMatrix::identity(dd, dd) - (w.matrix() + &kernel[0] * half_h) * half_h;
    let lu = implicit.lu();

    let mut xs: Vec<CMatrix> = Vec::with_capacity(n + 1);
    xs.push(x0.clone());
    let cols = x0.ncols();
    let mut f_prev = w.matrix() * x0;
    let mut acc = CMatrix::zeros(dd, cols);
    for j in 0..n {
        // h·Σ_{i ≤ j} w_i K(t_{j+1} − t_i) X_i with weight ½ at i = 0
        acc.fill(ZERO);
        for (i, x) in xs.iter().enumerate() {
            let weight = if i == 0 { half_h } else { hc };
            acc.gemm(weight, &kernel[j + 1 - i], x, Complex64::new(1.0, 0.0));
        }
        let rhs = &xs[j] + (&f_prev + &acc) * half_h;
        let next = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Validation("singular implicit step in Volterra solver".into()))?;
        // F_{j+1} = W X + history including the endpoint
        f_prev = w.matrix() * &next + &acc + &kernel[0] * &next * half_h;
        xs.push(next);
    }
    Ok(xs.into_iter().step_by(substeps).collect())
}

fn solve_nz_raw(spec: &GeneratorSpec, x0: &CMatrix, grid: &TimeGrid) -> Result<Vec<CMatrix>> {
    if spec.kind != GeneratorKind::Nz {
        return Err(Error::Validation("solve_nz needs an NZ generator".into()));
    }
    grid.validate()?;
    if grid.n_points > VOLTERRA_COST_WARNING {
        log::warn!("Volterra history sum on {} points is O(N²)", grid.n_points);
    }
    let (fine, coarse) = refine("NZ step halving", NZ_HALVING_TOL, |m| volterra_trapezoid(spec, x0, grid, m))?;
    // the trapezoid error is even in h
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (f * Complex64::new(4.0, 0.0) - c) / Complex64::new(3.0, 0.0))
        .collect())
}

/// ρ̇ = ∫_0^t K^NZ_{t−s} ρ_s ds.
pub fn solve_nz(spec: &GeneratorSpec, rho0: &CMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    let d = spec.dim();
    let out = solve_nz_raw(spec, &vec_of(rho0), grid)?;
    let states = out.iter().map(|v| unvec(v.as_slice(), d)).collect();
    Ok(Trajectory { grid: *grid, states, maps: None })
}

/// Λ_t from the NZ equation.
pub fn nz_maps(spec: &GeneratorSpec, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
    let d = spec.dim();
    let out = solve_nz_raw(spec, &CMatrix::identity(d * d, d * d), grid)?;
    out.into_iter().map(|m| SuperOperator::from_matrix(d, m)).collect()
}

/// Λ_t = Σ_n p_n(t) E^n.
pub fn series_maps(jump: &KrausMap, js: &JumpStatistics, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
    grid.validate()?;
    if js.tail.abs() > SERIES_TAIL || js.tail_time < grid.t_end {
        return Err(Error::Truncation { n_max: js.n_max(), tail: js.tail });
    }
    let e = jump.liouville();
    let d = jump.dim();
    let mut powers = vec![SuperOperator::identity(d)];
    for n in 1..=js.n_max() {
        let next = e.compose(&powers[n - 1]);
        powers.push(next);
    }
    Ok(grid
        .times()
        .into_par_iter()
        .map(|t| {
            let mut acc = CMatrix::zeros(d * d, d * d);
            for (n, p) in powers.iter().enumerate() {
                acc += p.matrix() * Complex64::new(js.p_n(n, t), 0.0);
            }
            SuperOperator::from_matrix(d, acc).expect("dimension preserved")
        })
        .collect())
}

/// ρ_t = Σ_n p_n(t) E^n ρ_0.
pub fn solve_series(jump: &KrausMap, js: &JumpStatistics, rho0: &CMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    Ok(Trajectory::from_maps(grid, series_maps(jump, js, grid)?, rho0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Tcl,
    Nz,
    Series,
    Redfield,
}

impl std::str::FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tcl" => Ok(Self::Tcl),
            "nz" => Ok(Self::Nz),
            "series" => Ok(Self::Series),
            "redfield" => Ok(Self::Redfield),
            other => Err(Error::InvalidSpec(format!("unknown route '{other}'"))),
        }
    }
}

/// A jump map E with a renewal waiting time: K^NZ_t = k(t)(E − 𝟙).
#[derive(Clone, Debug)]
pub struct SemiMarkovModel {
    pub jump: KrausMap,
    pub rf: RenewalFunctions,
    pub nz: GeneratorSpec,
}

impl SemiMarkovModel {
    pub fn new(jump: KrausMap, waiting: &WaitingTimeSpec) -> Result<Self> {
        let rf = RenewalFunctions::build(waiting)?;
        let nz = GeneratorSpec::nz_from_semimarkov(&jump, &rf)?;
        Ok(Self { jump, rf, nz })
    }

    pub fn tcl(&self, grid: &TimeGrid) -> Result<GeneratorSpec> {
        self.nz.to_tcl(grid.t_end, grid.dt())
    }

    pub fn redfield(&self) -> Result<GeneratorSpec> {
        self.nz.to_redfield()
    }

    pub fn jump_statistics(&self, t_end: f64) -> Result<JumpStatistics> {
        JumpStatistics::with_tail_target(&self.rf, t_end, SERIES_TAIL)
    }

    pub fn solve(&self, route: Route, rho0: &CMatrix, grid: &TimeGrid) -> Result<Trajectory> {
        match route {
            Route::Tcl => solve_tcl(&self.tcl(grid)?, rho0, grid),
            Route::Nz => solve_nz(&self.nz, rho0, grid),
            Route::Series => solve_series(&self.jump, &self.jump_statistics(grid.t_end)?, rho0, grid),
            Route::Redfield => solve_tcl(&self.redfield()?, rho0, grid),
        }
    }

    /// Λ_t on the grid for a route.
    pub fn maps(&self, route: Route, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
        dynamical_map(self, route, grid)
    }
}

/// Λ_t for the chosen route. TCL and Redfield use the closed decay-factor
/// form, which stays finite through TCL singularities.
pub fn dynamical_map(model: &SemiMarkovModel, route: Route, grid: &TimeGrid) -> Result<Vec<SuperOperator>> {
    match route {
        Route::Tcl => tcl_closed_maps(&model.tcl(grid)?, grid),
        Route::Redfield => tcl_closed_maps(&model.redfield()?, grid),
        Route::Nz => nz_maps(&model.nz, grid),
        Route::Series => series_maps(&model.jump, &model.jump_statistics(grid.t_end)?, grid),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisibilityEntry {
    pub s: f64,
    pub t: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct DivisibilityReport {
    pub entries: Vec<DivisibilityEntry>,
    pub cp_divisible: bool,
    pub singular_times: Vec<f64>,
}

impl DivisibilityReport {
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.iter().map(|e| e.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }
}

/// Minimal Choi eigenvalue of Λ_{t,s} = Λ_t Λ_s^{−1} for s < t over grid
/// indices spaced by `stride`. Singular Λ_s are listed, not fatal.
pub fn divisibility(maps: &[SuperOperator], grid: &TimeGrid, stride: usize) -> DivisibilityReport {
    let stride = stride.max(1);
    let idx: Vec<usize> = (0..maps.len()).step_by(stride).collect();
    let inverses: Vec<Option<SuperOperator>> = idx.par_iter().map(|&i| maps[i].inverse(DET_FLOOR)).collect();
    let singular_times = idx
        .iter()
        .zip(&inverses)
        .filter(|(_, inv)| inv.is_none())
        .map(|(&i, _)| grid.time(i))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..idx.len())
        .flat_map(|a| (a + 1..idx.len()).map(move |b| (a, b)))
        .filter(|&(a, _)| inverses[a].is_some())
        .collect();
    let entries: Vec<DivisibilityEntry> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let inv = inverses[a].as_ref().expect("filtered");
            let propagator = maps[idx[b]].compose(inv);
            DivisibilityEntry {
                s: grid.time(idx[a]),
                t: grid.time(idx[b]),
                min_eigenvalue: min_hermitian_eigenvalue(&propagator.choi()),
            }
        })
        .collect();
    let cp_divisible = entries.iter().all(|e| e.min_eigenvalue >= -CP_TOL);
    DivisibilityReport { entries, cp_divisible, singular_times }
}

/// max ‖[Λ_t, Λ_s]‖_F over strided pairs.
pub fn max_commutator(maps: &[SuperOperator], stride: usize) -> f64 {
    let idx: Vec<usize> = (0..maps.len()).step_by(stride.max(1)).collect();
    idx.iter()
        .flat_map(|&a| idx.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| a < b)
        .map(|(a, b)| maps[a].commutator(&maps[b]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::ChannelFunction;
    use crate::superop::{damping_basis, qubit, DensityMatrix};

    fn plus() -> CMatrix {
        DensityMatrix::plus().into_inner()
    }

    #[test]
    fn zero_generator_keeps_state() {
        let basis = damping_basis(&qubit::dephasing()).unwrap();
        let spec = GeneratorSpec {
            channels: (0..4).map(ChannelFunction::zero).collect(),
            basis,
            kind: GeneratorKind::Tcl,
        };
        let grid = TimeGrid::new(1.0, 11).unwrap();
        let tr = solve_tcl(&spec, &plus(), &grid).unwrap();
        assert!(tr.states.iter().all(|s| (s - plus()).norm() < 1e-15));
    }

    #[test]
    fn series_of_diag_at_one_is_survival() {
        let model = SemiMarkovModel::new(qubit::e_diag(), &WaitingTimeSpec::erlang(2, 1.0)).unwrap();
        let grid = TimeGrid::new(1.0, 11).unwrap();
        let tr = model.solve(Route::Series, &plus(), &grid).unwrap();
        assert!((tr.states[10][(0, 1)].re - 0.5 * 2.0 / 1f64.exp()).abs() < 1e-12);
        assert!((&tr.states[0] - plus()).norm() < 1e-14);
    }

    #[test]
    fn routes_agree_for_exponential() {
        let model = SemiMarkovModel::new(qubit::e_deph(), &WaitingTimeSpec::exponential(1.0)).unwrap();
        let grid = TimeGrid::new(2.0, 201).unwrap();
        let rho0 = plus();
        let tcl = model.solve(Route::Tcl, &rho0, &grid).unwrap();
        let nz = model.solve(Route::Nz, &rho0, &grid).unwrap();
        for (i, t) in grid.times().into_iter().enumerate() {
            let c = 0.5 * (-2.0 * t).exp();
            assert!((tcl.states[i][(0, 1)].re - c).abs() < 1e-8);
            assert!((nz.states[i][(0, 1)].re - c).abs() < 1e-8, "t = {t}: {}", nz.states[i][(0, 1)].re);
        }
    }
}
