//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the report is always printed:
//! `cargo test -p semimarkov-core --test acceptance`. Criteria listed in
//! `KNOWN_UNMET` are reported but do not fail the run.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use semimarkov::generators::{nz_channel_from_tcl, tcl_channel_from_nz, fixed_point_tcl, ChannelFunction, GeneratorSpec};
use semimarkov::grid::TimeGrid;
use semimarkov::montecarlo::estimate_counts_parallel;
use semimarkov::solvers::{divisibility, dynamical_map, Route, SemiMarkovModel};
use semimarkov::superop::{lindblad_form, qubit, trace_distance, CMatrix, DensityMatrix, KrausMap, SuperOperator};
use semimarkov::waiting_time::{JumpStatistics, RenewalFunctions, WaitingTimeSpec};

/// h_n(50) = 1 − O((n−1)/t), so |h_n(50) − 1| ≤ 1e-3 cannot hold for n ≥ 2.
const KNOWN_UNMET: &[usize] = &[2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rf(n: u32) -> RenewalFunctions {
    RenewalFunctions::build(&WaitingTimeSpec::erlang(n, 1.0)).unwrap()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(10.0, 1001).unwrap();
    let mut worst_n1 = 0.0f64;
    for n in 1..=4 {
        let rows = match rf(n).bounds_report(&grid) {
            Ok(rows) => rows,
            Err(e) => return outcome(false, format!("Erlang-{n}: {e}")),
        };
        if n == 1 {
            worst_n1 = rows.iter().map(|r| (r.h - r.s).abs()).fold(0.0, f64::max);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_n1 <= 1e-10 && secs < 5.0,
        format!("S ≤ h ≤ S/g on 1001 points for n = 1..4; n = 1 max|h−S| = {worst_n1:.1e}; {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst_h = 0.0f64;
    let mut worst_s = 0.0f64;
    for n in 1..=4 {
        let r = rf(n);
        worst_h = worst_h.max((r.hazard(50.0).unwrap() - 1.0).abs());
        worst_s = worst_s.max((r.sprinkling(50.0) - 1.0 / n as f64).abs());
    }
    outcome(
        worst_h <= 1e-3 && worst_s <= 1e-3,
        format!("t = 50: max|h_n − 1| = {worst_h:.2e}, max|S_n − 1/n| = {worst_s:.1e} (tol 1e-3)"),
    )
}

fn criterion_3() -> Outcome {
    let grid = TimeGrid::new(10.0, 1001).unwrap();
    let mut worst_increase = f64::NEG_INFINITY;
    for n in 1..=4 {
        let model = SemiMarkovModel::new(qubit::e_diag(), &WaitingTimeSpec::erlang(n, 1.0)).unwrap();
        let tcl = model.tcl(&grid).unwrap();
        let coherence = tcl.basis.channels_with_eigenvalue(c(-1.0), 1e-9)[0];
        let curve: Vec<f64> = grid.times().iter().map(|&t| tcl.channels[coherence].decay(t).re).collect();
        for w in curve.windows(2) {
            worst_increase = worst_increase.max(w[1] - w[0]);
        }
    }
    let model = SemiMarkovModel::new(qubit::e_deph(), &WaitingTimeSpec::erlang(2, 1.0)).unwrap();
    let tcl = model.tcl(&grid).unwrap();
    let alpha = tcl.basis.channels_with_eigenvalue(c(-2.0), 1e-9)[0];
    let q: Vec<f64> = grid.times().iter().map(|&t| tcl.channels[alpha].decay(t).re).collect();
    let q_err = grid
        .times()
        .iter()
        .zip(&q)
        .map(|(&t, v)| (v - (-t).exp() * (t.cos() + t.sin())).abs())
        .fold(0.0, f64::max);
    let crossing = grid
        .times()
        .windows(2)
        .zip(q.windows(2))
        .find(|(_, v)| v[0] > 0.0 && v[1] <= 0.0)
        .map(|(t, _)| t[1]);
    let bracketed = crossing.is_some_and(|t| t > 2.35 && t <= 2.37);
    outcome(
        worst_increase <= 1e-12 && q_err <= 1e-8 && bracketed,
        format!(
            "c_diag max increase {worst_increase:.1e}; |c_deph_2 − q_2| ≤ {q_err:.1e}; sign change at {:?}",
            crossing
        ),
    )
}

/// Sup over [0, 2] of the TCL dephasing rate extracted from the NZ model.
fn dephasing_rate_sup(spec: &WaitingTimeSpec) -> (f64, f64) {
    let grid = TimeGrid::new(2.0, 201).unwrap();
    let model = SemiMarkovModel::new(qubit::e_flip(), spec).unwrap();
    let tcl = model.tcl(&grid).unwrap();
    let js = JumpStatistics::new(&model.rf, 4, 2.0).unwrap();
    let mut sup = 0.0f64;
    let mut closed_err = 0.0f64;
    for t in grid.times() {
        let form = lindblad_form(&tcl.assemble(t).unwrap()).unwrap();
        let rate = form.rate_along(&qubit::sigma_z());
        sup = sup.max(rate.abs());
        let expect = model.rf.hazard(t).unwrap() - js.mu(t).value();
        closed_err = closed_err.max((rate - expect).abs());
    }
    (sup, closed_err)
}

fn criterion_4() -> Outcome {
    let (exp_sup, exp_err) = dephasing_rate_sup(&WaitingTimeSpec::exponential(1.0));
    let (erl_sup, erl_err) = dephasing_rate_sup(&WaitingTimeSpec::erlang(2, 1.0));
    outcome(
        exp_sup <= 1e-10 && erl_sup >= 1e-3 && exp_err.max(erl_err) <= 1e-8,
        format!(
            "dephasing rate sup: exponential {exp_sup:.1e}, Erlang-2 {erl_sup:.3}; matches h − μ to {:.1e}",
            exp_err.max(erl_err)
        ),
    )
}

/// NZ generator derived from K^TCL = h(t)·D[σ₋].
fn amplitude_damping_nz(spec: &WaitingTimeSpec, horizon: f64, step: f64) -> (GeneratorSpec, GeneratorSpec) {
    let r = RenewalFunctions::build(spec).unwrap();
    let tcl = GeneratorSpec::tcl_from_hazard(&qubit::amplitude_damping(), &r, horizon).unwrap();
    let nz = tcl.to_nz(horizon, step).unwrap();
    (tcl, nz)
}

fn criterion_5() -> Outcome {
    let horizon = 5.0;
    let step = 1e-3;
    let spec = WaitingTimeSpec::erlang(2, 1.0);
    let r = RenewalFunctions::build(&spec).unwrap();
    let (tcl, nz) = amplitude_damping_nz(&spec, horizon, step);
    let pop = tcl.basis.channels_with_eigenvalue(c(-1.0), 1e-9)[0];
    let coh = tcl.basis.channels_with_eigenvalue(c(-0.5), 1e-9)[0];

    // independent k_√ and the residual identity f_√ = k_√ ∗ √g
    let sqrt = r.sqrt_survival_channel(&TimeGrid::new(horizon, 5001).unwrap()).unwrap();
    let residual = sqrt.residual();

    let mut coef_err = 0.0f64;
    let mut factor_err = 0.0f64;
    for i in 0..=50 {
        let t = i as f64 * 0.1;
        let form = lindblad_form(&nz.assemble(t).unwrap()).unwrap();
        let expect = sqrt.kernel.smooth.eval(t).re - r.kernel_smooth(t) / 2.0;
        coef_err = coef_err.max((form.rate_along(&qubit::sigma_z()) - expect).abs());
        factor_err = factor_err
            .max((tcl.channels[pop].decay(t).re - r.survival(t)).abs())
            .max((tcl.channels[coh].decay(t).re - r.survival(t).sqrt()).abs());
    }

    let (_, nz_exp) = amplitude_damping_nz(&WaitingTimeSpec::exponential(1.0), horizon, step);
    let w_pop = nz_exp.channels[pop].delta_weight().re;
    let w_coh = nz_exp.channels[coh].delta_weight().re;
    let smooth_exp = (0..=50)
        .map(|i| lindblad_form(&nz_exp.assemble(i as f64 * 0.1).unwrap()).unwrap().rate_along(&qubit::sigma_z()).abs())
        .fold(0.0, f64::max);
    let deltas_equal = (w_coh - w_pop / 2.0).abs() <= 1e-12;
    outcome(
        residual <= 1e-6 && factor_err <= 1e-8 && coef_err <= 1e-6 && deltas_equal && smooth_exp <= 1e-8,
        format!(
            "residual {residual:.1e}; σ_z coefficient vs k_√ − k/2 {coef_err:.1e}; factors vs g, √g {factor_err:.1e}; \
             exponential: δ weights {w_coh} vs {w_pop}/2, smooth {smooth_exp:.1e}"
        ),
    )
}

fn semigroup(jump: &KrausMap, t: f64) -> SuperOperator {
    let d = jump.dim();
    let l = jump.liouville().sub(&SuperOperator::identity(d));
    SuperOperator::from_matrix(d, (l.matrix() * c(t)).exp()).unwrap()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(2.2, 221).unwrap();
    let rho0 = DensityMatrix::plus().into_inner();
    let mut worst_pair = 0.0f64;
    for jump in [qubit::e_diag(), qubit::e_deph()] {
        let model = SemiMarkovModel::new(jump, &WaitingTimeSpec::erlang(2, 1.0)).unwrap();
        let tr: Vec<_> = [Route::Tcl, Route::Nz, Route::Series]
            .iter()
            .map(|&r| model.solve(r, &rho0, &grid).unwrap())
            .collect();
        for a in 0..3 {
            for b in a + 1..3 {
                worst_pair = worst_pair.max(tr[a].max_trace_distance(&tr[b]));
            }
        }
    }
    let mut worst_semigroup = 0.0f64;
    for jump in [qubit::e_diag(), qubit::e_deph(), qubit::e_flip()] {
        let model = SemiMarkovModel::new(jump.clone(), &WaitingTimeSpec::exponential(1.0)).unwrap();
        let exact: Vec<CMatrix> = grid.times().iter().map(|&t| semigroup(&jump, t).apply(&rho0)).collect();
        for route in [Route::Tcl, Route::Nz, Route::Series] {
            let tr = model.solve(route, &rho0, &grid).unwrap();
            for (s, e) in tr.states.iter().zip(&exact) {
                worst_semigroup = worst_semigroup.max(trace_distance(s, e));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_pair <= 1e-4 && worst_semigroup <= 1e-8 && secs < 30.0,
        format!("Erlang-2 pairwise max trace distance {worst_pair:.1e}; exponential vs semigroup {worst_semigroup:.1e}; {secs:.2} s"),
    )
}

/// Sup of |a − b| over times at least `margin` away from singularities.
fn sup_away(a: &ChannelFunction, b: &ChannelFunction, times: &[f64], margin: f64) -> f64 {
    times
        .iter()
        .filter(|&&t| a.singular_window(t, margin).is_none() && b.singular_window(t, margin).is_none())
        .map(|&t| (a.value(t).unwrap() - b.value(t).unwrap()).norm())
        .fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let r = rf(n);
        for (scale, t_end) in [(-2.0, 2.0), (-1.0, 10.0)] {
            let times: Vec<f64> = (0..=1000).map(|i| t_end * i as f64 / 1000.0).collect();
            let nz = ChannelFunction::exact(0, r.k.scale(c(scale))).unwrap();
            let tcl = tcl_channel_from_nz(&nz, t_end, 1e-3).unwrap();
            let back = nz_channel_from_tcl(&tcl, t_end, 1e-3).unwrap();
            worst = worst.max((back.delta_weight() - nz.delta_weight()).norm());
            worst = worst.max(sup_away(&nz, &back, &times, 0.0));
            let again = tcl_channel_from_nz(&back, t_end, 1e-3).unwrap();
            worst = worst.max(sup_away(&tcl, &again, &times, 0.05));
        }
    }
    outcome(worst <= 1e-7, format!("max round-trip discrepancy {worst:.1e} (Erlang 1..4, −k on [0,10], −2k on [0,2])"))
}

fn criterion_8() -> Outcome {
    let grid = TimeGrid::new(10.0, 1001).unwrap();
    let mut diag_min = f64::INFINITY;
    let mut red_min = f64::INFINITY;
    for n in 1..=4 {
        let spec = WaitingTimeSpec::erlang(n, 1.0);
        for jump in [qubit::e_diag(), qubit::e_deph()] {
            let model = SemiMarkovModel::new(jump.clone(), &spec).unwrap();
            let red = divisibility(&dynamical_map(&model, Route::Redfield, &grid).unwrap(), &grid, 20);
            red_min = red_min.min(red.min_eigenvalue());
            if jump == qubit::e_diag() {
                let rep = divisibility(&dynamical_map(&model, Route::Tcl, &grid).unwrap(), &grid, 20);
                diag_min = diag_min.min(rep.min_eigenvalue());
            }
        }
    }
    let window = TimeGrid::new(3.2, 321).unwrap();
    let model = SemiMarkovModel::new(qubit::e_deph(), &WaitingTimeSpec::erlang(2, 1.0)).unwrap();
    let rep = divisibility(&dynamical_map(&model, Route::Tcl, &window).unwrap(), &window, 4);
    let inside = rep
        .entries
        .iter()
        .filter(|e| e.s > 0.75 * PI && e.t < PI)
        .map(|e| e.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    outcome(
        diag_min >= -1e-8 && red_min >= -1e-8 && inside < -1e-4,
        format!(
            "diag min Choi eigenvalue {diag_min:.1e}; Redfield {red_min:.1e}; Erlang-2 deph inside (3π/4, π) {inside:.3}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let grid = TimeGrid::new(10.0, 101).unwrap();
    let trials = 100_000;
    let mut total = 0usize;
    let mut within = 0usize;
    let mut q_crossing = None;
    for n in 1..=4u32 {
        let r = rf(n);
        let js = JumpStatistics::new(&r, 6, 10.0).unwrap();
        let est = estimate_counts_parallel(&WaitingTimeSpec::erlang(n, 1.0), &grid, trials, n as u64, 8).unwrap();
        for (i, t) in grid.times().into_iter().enumerate() {
            for k in 0..=6 {
                let p = js.p_n(k, t);
                let sigma = (p * (1.0 - p) / trials as f64).sqrt();
                total += 1;
                if (est.p_hat(k, i) - p).abs() <= 3.0 * sigma + 1e-12 {
                    within += 1;
                }
            }
        }
        if n == 2 {
            let times = grid.times();
            q_crossing = (1..times.len())
                .find(|&i| est.q_hat(i - 1) > 0.0 && est.q_hat(i) <= 0.0)
                .map(|i| (times[i - 1], times[i]));
        }
    }
    let rate = within as f64 / total as f64;
    let secs = start.elapsed().as_secs_f64();
    let crosses = q_crossing.is_some_and(|(a, b)| a < 0.75 * PI && b > 0.75 * PI);
    outcome(
        rate >= 0.99 && crosses && secs < 60.0,
        format!("{within}/{total} = {:.2}% within 3σ; q̂_2 sign change in {q_crossing:?}; {secs:.2} s", 100.0 * rate),
    )
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let mut ranges = Vec::new();
    for n in 1..=3 {
        let r = rf(n);
        for scale in [-1.0, -2.0] {
            let nz = ChannelFunction::exact(0, r.k.scale(c(scale))).unwrap();
            let laplace = tcl_channel_from_nz(&nz, 5.0, 1e-2).unwrap();
            // stop short of the first singularity of the Laplace-route channel
            let t_end = laplace.singularities.first().map_or(5.0, |s| ((s.0 - 0.2) * 10.0).floor() / 10.0);
            let grid = TimeGrid::new(t_end, (t_end * 100.0).round() as usize + 1).unwrap();
            let fp = match fixed_point_tcl(&nz, &grid, 2000, 1e-10) {
                Ok(fp) => fp,
                Err(e) => return outcome(false, format!("Erlang-{n}, scale {scale}: {e}")),
            };
            let err = grid
                .times()
                .iter()
                .map(|&t| (fp.channel.value(t).unwrap() - laplace.value(t).unwrap()).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err);
            ranges.push(format!("n={n},{scale}k:[0,{t_end}]/{}it", fp.iterations));
        }
    }
    outcome(worst <= 1e-6, format!("max |fixed point − Laplace route| {worst:.1e}; {}", ranges.join(" ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Erlang hazard bounds", criterion_1),
        ("long-time limits of h_n and S_n", criterion_2),
        ("Erlang coherence decay", criterion_3),
        ("dephasing emerges in the TCL form", criterion_4),
        ("√g kernel in the NZ form", criterion_5),
        ("three-route consistency", criterion_6),
        ("round-trip conversion", criterion_7),
        ("divisibility verdicts", criterion_8),
        ("Monte Carlo oracle", criterion_9),
        ("fixed-point TCL", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let o = run();
        let known = KNOWN_UNMET.contains(&id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name}: {}", o.detail);
        if !o.pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria failed: {unexpected:?}");
        std::process::exit(1);
    }
}
