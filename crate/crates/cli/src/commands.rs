use num_complex::Complex64;
use semimarkov::grid::TimeGrid;
use semimarkov::montecarlo::{estimate_counts_parallel, estimate_state};
use semimarkov::solvers::{divisibility, dynamical_map, Route, SemiMarkovModel, Trajectory};
use semimarkov::superop::{min_hermitian_eigenvalue, qubit, trace_distance, CMatrix, SuperOperator};
use semimarkov::waiting_time::{JumpStatistics, MuValue, RenewalFunctions, WaitingTimeSpec};
use semimarkov::Error;

use crate::config::RunConfig;
use crate::csv::CsvTable;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RouteArg {
    Tcl,
    Nz,
    Series,
    Redfield,
    Mc,
}

impl RouteArg {
    fn solver_route(self) -> Option<Route> {
        match self {
            Self::Tcl => Some(Route::Tcl),
            Self::Nz => Some(Route::Nz),
            Self::Series => Some(Route::Series),
            Self::Redfield => Some(Route::Redfield),
            Self::Mc => None,
        }
    }

    /// Trace/Hermiticity slack for emitted states.
    fn tolerance(self) -> f64 {
        match self {
            Self::Nz => 1e-7,
            _ => 1e-9,
        }
    }
}

fn spec_json(spec: &WaitingTimeSpec) -> String {
    serde_json::to_string(spec).unwrap_or_default()
}

fn grid_meta(table: &mut CsvTable, grid: &TimeGrid) {
    table.meta(format!("grid: t_end = {}, n_points = {}", grid.t_end, grid.n_points));
}

pub fn curves(cfg: &RunConfig) -> Result<CsvTable, CliError> {
    let rf = RenewalFunctions::build(&cfg.waiting_time)?;
    let js = JumpStatistics::new(&rf, 1, cfg.grid.t_end)?;
    let grid = cfg.grid;
    let poles = js.q_zero_brackets(&grid);
    let dt = grid.dt();
    let header = ["t", "f", "g", "h", "S", "S_over_g", "q", "mu", "k_smooth"];
    let mut table = CsvTable::new(header.iter().map(|s| s.to_string()).collect());
    table.meta(format!("waiting_time: {}", spec_json(&cfg.waiting_time)));
    grid_meta(&mut table, &grid);
    table.meta(format!("k_delta: {}", crate::csv::number(rf.kernel_delta())));
    table.meta("mu = -q'/(2q); NaN within one grid step of a zero of q".to_string());
    let intervals: Vec<String> = poles.iter().map(|(a, b)| format!("[{a:.12}, {b:.12}]")).collect();
    table.meta(format!("mu poles: {}", if intervals.is_empty() { "none".into() } else { intervals.join(" ") }));
    for t in grid.times() {
        let g = rf.survival(t);
        let s = rf.sprinkling(t);
        let h = rf.hazard(t).unwrap_or(f64::NAN);
        let near_pole = poles.iter().any(|&(a, b)| t > a - dt && t < b + dt);
        let mu = match js.mu(t) {
            MuValue::Finite(v) if !near_pole => v,
            _ => f64::NAN,
        };
        let s_over_g = if g > 0.0 { s / g } else { f64::NAN };
        table.push(vec![t, rf.density(t), g, h, s, s_over_g, js.q_at(t), mu, rf.kernel_smooth(t)]);
    }
    Ok(table)
}

fn state_header(d: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..d {
        for j in 0..d {
            h.push(format!("re_{i}{j}"));
            h.push(format!("im_{i}{j}"));
        }
    }
    h.push("trace".into());
    h.push("min_eig".into());
    h
}

/// Runs the route and returns the trajectory plus the trace slack to enforce.
fn trajectory(cfg: &RunConfig, route: RouteArg) -> Result<(Trajectory, f64), CliError> {
    let jump = cfg.require_kraus()?;
    match route.solver_route() {
        Some(r) => {
            let model = SemiMarkovModel::new(jump.clone(), &cfg.waiting_time)?;
            Ok((model.solve(r, &cfg.initial_state, &cfg.grid)?, route.tolerance()))
        }
        None => {
            let o = &cfg.options;
            let counts = estimate_counts_parallel(&cfg.waiting_time, &cfg.grid, o.trials, o.seed, o.streams)?;
            let overflow = (0..cfg.grid.n_points).map(|i| counts.overflow(i)).fold(0.0, f64::max);
            let est = estimate_state(jump, &counts, &cfg.initial_state);
            Ok((est.trajectory, overflow + 1e-12))
        }
    }
}

pub fn solve(cfg: &RunConfig, route: RouteArg) -> Result<CsvTable, CliError> {
    let (tr, tol) = trajectory(cfg, route)?;
    let d = cfg.hilbert_dim;
    let mut table = CsvTable::new(state_header(d));
    table.meta(format!("route: {route:?}").to_lowercase());
    table.meta(format!("waiting_time: {}", spec_json(&cfg.waiting_time)));
    grid_meta(&mut table, &cfg.grid);
    if route == RouteArg::Mc {
        table.meta(format!(
            "trials: {}, seed: {}, streams: {} (ChaCha8)",
            cfg.options.trials, cfg.options.seed, cfg.options.streams
        ));
    }
    for (t, rho) in tr.times().into_iter().zip(&tr.states) {
        let trace = rho.trace();
        let herm = (rho - rho.adjoint()).norm();
        if (trace - 1.0).norm() > tol || herm > tol {
            return Err(CliError::Invariant(format!(
                "state at t = {t} fails checks: trace {trace}, hermiticity defect {herm:.3e}"
            )));
        }
        let mut row = vec![t];
        for i in 0..d {
            for j in 0..d {
                row.push(rho[(i, j)].re);
                row.push(rho[(i, j)].im);
            }
        }
        row.push(trace.re);
        row.push(min_hermitian_eigenvalue(rho));
        table.push(row);
    }
    Ok(table)
}

pub fn divisibility_table(cfg: &RunConfig, route: RouteArg) -> Result<CsvTable, CliError> {
    let r = route
        .solver_route()
        .ok_or_else(|| CliError::Config("route: divisibility needs tcl, nz, series or redfield".into()))?;
    let model = SemiMarkovModel::new(cfg.require_kraus()?.clone(), &cfg.waiting_time)?;
    let maps = dynamical_map(&model, r, &cfg.grid)?;
    let rep = divisibility(&maps, &cfg.grid, cfg.options.stride);
    let mut table = CsvTable::new(vec!["s".into(), "t".into(), "min_choi_eigenvalue".into()]);
    table.meta(format!("route: {route:?}").to_lowercase());
    table.meta(format!("waiting_time: {}", spec_json(&cfg.waiting_time)));
    grid_meta(&mut table, &cfg.grid);
    table.meta(format!("stride: {}", cfg.options.stride));
    table.meta(format!("cp_divisible: {} (tolerance -1e-8)", rep.cp_divisible));
    table.meta(format!("min_choi_eigenvalue: {}", crate::csv::number(rep.min_eigenvalue())));
    let singular: Vec<String> = rep.singular_times.iter().map(|t| crate::csv::number(*t)).collect();
    table.meta(format!("singular_times: {}", if singular.is_empty() { "none".into() } else { singular.join(" ") }));
    for e in rep.entries {
        table.push(vec![e.s, e.t, e.min_eigenvalue]);
    }
    Ok(table)
}

pub fn figure1(rate: f64, n_list: &[u32], grid: &TimeGrid) -> Result<CsvTable, CliError> {
    let mut header = vec!["t".to_string()];
    let mut rfs = Vec::new();
    for &n in n_list {
        header.extend([format!("h_{n}"), format!("S_{n}"), format!("S_over_g_{n}")]);
        rfs.push(build(&WaitingTimeSpec::erlang(n, rate))?);
    }
    let mut table = CsvTable::new(header);
    table.meta(format!("Erlang waiting times, rate {rate}, n = {n_list:?}"));
    grid_meta(&mut table, grid);
    for t in grid.times() {
        let mut row = vec![t];
        for rf in &rfs {
            let g = rf.survival(t);
            let s = rf.sprinkling(t);
            row.push(rf.hazard(t).unwrap_or(f64::NAN));
            row.push(s);
            row.push(if g > 0.0 { s / g } else { f64::NAN });
        }
        table.push(row);
    }
    Ok(table)
}

fn build(spec: &WaitingTimeSpec) -> Result<RenewalFunctions, CliError> {
    spec.validate().map_err(|e| CliError::Config(format!("waiting time: {e}")))?;
    Ok(RenewalFunctions::build(spec)?)
}

/// Decay factor of the channel with eigenvalue `ell` in the TCL form.
fn coherence_factor(jump: semimarkov::superop::KrausMap, spec: &WaitingTimeSpec, ell: f64, grid: &TimeGrid) -> Result<Vec<f64>, CliError> {
    let model = SemiMarkovModel::new(jump, spec)?;
    let tcl = model.tcl(grid)?;
    let alpha = *tcl
        .basis
        .channels_with_eigenvalue(Complex64::new(ell, 0.0), 1e-9)
        .first()
        .ok_or_else(|| CliError::Numeric(format!("no channel with eigenvalue {ell}")))?;
    Ok(grid.times().iter().map(|&t| tcl.channels[alpha].decay(t).re).collect())
}

pub fn figure2(rate: f64, n_list: &[u32], grid: &TimeGrid) -> Result<CsvTable, CliError> {
    let mut header = vec!["t".to_string()];
    let mut columns = Vec::new();
    for &n in n_list {
        let spec = WaitingTimeSpec::erlang(n, rate);
        build(&spec)?;
        header.extend([format!("c_diag_{n}"), format!("c_deph_{n}")]);
        columns.push(coherence_factor(qubit::e_diag(), &spec, -1.0, grid)?);
        columns.push(coherence_factor(qubit::e_deph(), &spec, -2.0, grid)?);
    }
    let mut table = CsvTable::new(header);
    table.meta(format!("coherence decay factors, Erlang rate {rate}, n = {n_list:?}"));
    table.meta("c_diag = g (diagonal jump map), c_deph = q (dephasing jump map)".to_string());
    grid_meta(&mut table, grid);
    for (i, t) in grid.times().into_iter().enumerate() {
        let mut row = vec![t];
        row.extend(columns.iter().map(|c| c[i]));
        table.push(row);
    }
    Ok(table)
}

pub struct Check {
    pub name: String,
    pub pass: Option<bool>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass: Some(pass), detail }
    }

    fn skip(name: &str, detail: &str) -> Self {
        Self { name: name.into(), pass: None, detail: detail.into() }
    }
}

fn sup<F: Fn(f64) -> f64>(times: &[f64], f: F) -> f64 {
    times.iter().map(|&t| f(t).abs()).fold(0.0, f64::max)
}

pub fn validate(cfg: &RunConfig) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let rf = RenewalFunctions::build(&cfg.waiting_time)?;
    let js = JumpStatistics::new(&rf, 1, cfg.grid.t_end)?;
    let times = cfg.grid.times();

    let kernel_nonnegative = times.iter().all(|&t| rf.kernel_smooth(t) >= -1e-12);
    match rf.bounds_report(&cfg.grid) {
        Ok(_) => checks.push(Check::new("bounds S <= h <= S/g", true, "holds on the grid".into())),
        Err(Error::InvariantViolation { what, t }) if !kernel_nonnegative => checks.push(Check::skip(
            "bounds S <= h <= S/g",
            &format!("kernel is negative somewhere, bound not implied ({what} at t = {t})"),
        )),
        Err(Error::SaturatedSurvival { .. }) => {
            checks.push(Check::skip("bounds S <= h <= S/g", "survival underflows on the grid"))
        }
        Err(e) => checks.push(Check::new("bounds S <= h <= S/g", false, e.to_string())),
    }

    if let WaitingTimeSpec::Exponential { rate } = cfg.waiting_time {
        let dh = sup(&times, |t| rf.hazard(t).unwrap_or(f64::NAN) - rate);
        let dmu = sup(&times, |t| js.mu(t).value() - rate);
        let ds = sup(&times, |t| rf.sprinkling(t) - rate);
        let worst = dh.max(dmu).max(ds);
        checks.push(Check::new("h = mu = S = rate", worst <= 1e-10, format!("max deviation {worst:.2e}")));
    }

    let Some(jump) = &cfg.kraus else {
        checks.push(Check::skip("route consistency", "no Kraus operators in config"));
        return Ok(checks);
    };
    let model = SemiMarkovModel::new(jump.clone(), &cfg.waiting_time)?;
    let tcl = model.tcl(&cfg.grid)?;
    let limit = tcl.first_singularity().map_or(cfg.grid.t_end, |s| cfg.grid.t_end.min(s - 0.1));
    let steps = (limit / cfg.grid.dt()).floor() as usize;
    if steps < 1 {
        checks.push(Check::skip("route consistency", "TCL generator singular right away"));
        return Ok(checks);
    }
    let sub = TimeGrid::new(steps as f64 * cfg.grid.dt(), steps + 1)?;
    let rho0 = &cfg.initial_state;
    let routes = [Route::Tcl, Route::Nz, Route::Series];
    let trs = routes.iter().map(|&r| model.solve(r, rho0, &sub)).collect::<Result<Vec<_>, _>>()?;
    let mut worst = 0.0f64;
    for a in 0..3 {
        for b in a + 1..3 {
            worst = worst.max(trs[a].max_trace_distance(&trs[b]));
        }
    }
    checks.push(Check::new(
        "routes tcl/nz/series agree",
        worst <= 1e-4,
        format!("max trace distance {worst:.2e} on [0, {:.4}]", sub.t_end),
    ));
    for (r, tr) in routes.iter().zip(&trs) {
        let tol = if *r == Route::Nz { 1e-7 } else { 1e-9 };
        let defect = tr.trace_defect().max(tr.hermiticity_defect());
        checks.push(Check::new(
            &format!("trace and hermiticity ({r:?})").to_lowercase(),
            defect <= tol,
            format!("max defect {defect:.2e}"),
        ));
    }
    if cfg.waiting_time.is_exponential() {
        let rate = cfg.waiting_time.mean().recip();
        let d = jump.dim();
        let l = jump.liouville().sub(&SuperOperator::identity(d));
        let exact: Vec<CMatrix> = sub
            .times()
            .iter()
            .map(|&t| (l.matrix() * Complex64::new(rate * t, 0.0)).exp() * semimarkov_vec(rho0))
            .map(|v| CMatrix::from_column_slice(d, d, v.as_slice()))
            .collect();
        let dev = trs
            .iter()
            .flat_map(|tr| tr.states.iter().zip(&exact).map(|(a, b)| trace_distance(a, b)))
            .fold(0.0, f64::max);
        checks.push(Check::new("semigroup recovery", dev <= 1e-8, format!("max trace distance {dev:.2e}")));
    }
    let red_maps = dynamical_map(&model, Route::Redfield, &cfg.grid)?;
    let red = divisibility(&red_maps, &cfg.grid, cfg.options.stride);
    checks.push(Check::new(
        "redfield CP-divisible",
        red.cp_divisible,
        format!("min Choi eigenvalue {:.2e}", red.min_eigenvalue()),
    ));
    let star = js.q_zero_brackets(&cfg.grid);
    if !star.is_empty() {
        checks.push(Check::skip(
            "mu poles",
            &format!("q vanishes first at t = {:.10}, mu diverges there", star[0].0),
        ));
    }
    Ok(checks)
}

fn semimarkov_vec(rho: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(rho.len(), 1, rho.as_slice())
}
