use num_complex::Complex64;
use semimarkov::generators::GeneratorSpec;
use semimarkov::grid::TimeGrid;
use semimarkov::solvers::{
    divisibility, dynamical_map, max_commutator, series_maps, solve_nz, solve_series, solve_tcl, tcl_maps, Route,
    SemiMarkovModel,
};
use semimarkov::superop::{qubit, DensityMatrix};
use semimarkov::waiting_time::{JumpStatistics, RenewalFunctions, WaitingTimeSpec};
use semimarkov::Error;

fn plus() -> semimarkov::superop::CMatrix {
    DensityMatrix::plus().into_inner()
}

fn model(jump: semimarkov::superop::KrausMap, n: u32) -> SemiMarkovModel {
    SemiMarkovModel::new(jump, &WaitingTimeSpec::erlang(n, 1.0)).unwrap()
}

#[test]
fn coherence_factors_of_the_two_examples() {
    let grid = TimeGrid::new(4.0, 401).unwrap();
    let diag = model(qubit::e_diag(), 2).solve(Route::Tcl, &plus(), &TimeGrid::new(4.0, 401).unwrap()).unwrap();
    for (i, t) in grid.times().into_iter().enumerate() {
        assert!((2.0 * diag.states[i][(0, 1)].re - (1.0 + t) * (-t).exp()).abs() < 1e-9);
    }
    // deph has a singular TCL generator at 3π/4, so use the series route
    let deph = model(qubit::e_deph(), 2).solve(Route::Series, &plus(), &grid).unwrap();
    let coh: Vec<f64> = deph.states.iter().map(|s| 2.0 * s[(0, 1)].re).collect();
    for (i, t) in grid.times().into_iter().enumerate() {
        assert!((coh[i] - (-t).exp() * (t.cos() + t.sin())).abs() < 1e-10);
    }
    assert!(coh.windows(2).any(|w| w[1] > w[0]), "revival expected");
}

#[test]
fn tcl_route_refuses_singular_range() {
    let m = model(qubit::e_deph(), 2);
    let grid = TimeGrid::new(3.0, 301).unwrap();
    assert!(matches!(m.solve(Route::Tcl, &plus(), &grid), Err(Error::TclSingular { .. })));
}

#[test]
fn three_routes_agree_on_flip_dynamics() {
    let m = model(qubit::e_flip(), 2);
    let grid = TimeGrid::new(2.0, 201).unwrap();
    let rho0 = DensityMatrix::new(semimarkov::superop::CMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(0.8, 0.0), Complex64::new(0.2, -0.3), Complex64::new(0.2, 0.3), Complex64::new(0.2, 0.0)],
    ))
    .unwrap()
    .into_inner();
    let tcl = m.solve(Route::Tcl, &rho0, &grid).unwrap();
    let nz = m.solve(Route::Nz, &rho0, &grid).unwrap();
    let series = m.solve(Route::Series, &rho0, &grid).unwrap();
    assert!(tcl.max_trace_distance(&nz) < 1e-5);
    assert!(tcl.max_trace_distance(&series) < 1e-5);
    for tr in [&tcl, &series] {
        assert!(tr.trace_defect() < 1e-9);
        assert!(tr.hermiticity_defect() < 1e-9);
    }
    assert!(nz.trace_defect() < 1e-7 && nz.hermiticity_defect() < 1e-7);
    nz.check(1e-7, 1e-8).unwrap();
}

#[test]
fn sqrt_kernel_nz_agrees_with_hazard_tcl() {
    let rf = RenewalFunctions::build(&WaitingTimeSpec::erlang(2, 1.0)).unwrap();
    let grid = TimeGrid::new(3.0, 301).unwrap();
    let tcl = GeneratorSpec::tcl_from_hazard(&qubit::amplitude_damping(), &rf, grid.t_end).unwrap();
    let nz = tcl.to_nz(grid.t_end, 1e-3).unwrap();
    let rho0 = plus();
    let a = solve_tcl(&tcl, &rho0, &grid).unwrap();
    let b = solve_nz(&nz, &rho0, &grid).unwrap();
    assert!(a.max_trace_distance(&b) < 1e-4, "{}", a.max_trace_distance(&b));
    // population decays with g, coherence with √g
    for (i, t) in grid.times().into_iter().enumerate() {
        let g = rf.survival(t);
        assert!((a.states[i][(0, 0)].re - 0.5 * g).abs() < 1e-8);
        assert!((a.states[i][(0, 1)].re - 0.5 * g.sqrt()).abs() < 1e-8);
    }
}

#[test]
fn series_examples() {
    let rf = RenewalFunctions::build(&WaitingTimeSpec::erlang(2, 1.0)).unwrap();
    let js = JumpStatistics::with_tail_target(&rf, 1.0, 1e-10).unwrap();
    let grid = TimeGrid::new(1.0, 11).unwrap();
    let tr = solve_series(&qubit::e_diag(), &js, &plus(), &grid).unwrap();
    assert!((&tr.states[0] - plus()).norm() < 1e-15);
    assert!((2.0 * tr.states[10][(0, 1)].re - 2.0 / 1f64.exp()).abs() < 1e-12);

    let short = JumpStatistics::new(&rf, 2, 1.0).unwrap();
    assert!(matches!(series_maps(&qubit::e_diag(), &short, &grid), Err(Error::Truncation { .. })));
}

#[test]
fn maps_commute() {
    let grid = TimeGrid::new(2.0, 101).unwrap();
    let m = model(qubit::e_flip(), 3);
    for route in [Route::Tcl, Route::Series, Route::Nz] {
        let maps = dynamical_map(&m, route, &grid).unwrap();
        assert!(max_commutator(&maps, 10) < 1e-8, "{route:?}");
    }
    let rk = tcl_maps(&m.tcl(&grid).unwrap(), &grid).unwrap();
    let closed = dynamical_map(&m, Route::Tcl, &grid).unwrap();
    for (a, b) in rk.iter().zip(&closed) {
        assert!(a.sub(b).norm() < 1e-8);
    }
}

#[test]
fn divisibility_verdicts() {
    let grid = TimeGrid::new(6.0, 601).unwrap();
    for n in 1..=4 {
        let diag = divisibility(&dynamical_map(&model(qubit::e_diag(), n), Route::Tcl, &grid).unwrap(), &grid, 20);
        assert!(diag.cp_divisible, "Erlang-{n}: {}", diag.min_eigenvalue());
        for jump in [qubit::e_diag(), qubit::e_deph()] {
            let red = divisibility(&dynamical_map(&model(jump, n), Route::Redfield, &grid).unwrap(), &grid, 20);
            assert!(red.cp_divisible);
        }
    }
    let deph = divisibility(&dynamical_map(&model(qubit::e_deph(), 2), Route::Series, &grid).unwrap(), &grid, 20);
    assert!(!deph.cp_divisible);
    let worst = deph.entries.iter().min_by(|a, b| a.min_eigenvalue.partial_cmp(&b.min_eigenvalue).unwrap()).unwrap();
    assert!(worst.min_eigenvalue < -1e-4);
}

#[test]
fn singular_maps_are_listed_not_fatal() {
    let star = 0.75 * std::f64::consts::PI;
    let grid = TimeGrid::new(2.0 * star, 3).unwrap();
    let maps = dynamical_map(&model(qubit::e_deph(), 2), Route::Tcl, &grid).unwrap();
    let rep = divisibility(&maps, &grid, 1);
    assert_eq!(rep.singular_times.len(), 1);
    assert!((rep.singular_times[0] - star).abs() < 1e-12);
    // only s = 0 is usable as a starting point
    assert_eq!(rep.entries.len(), 2);
    assert!(rep.entries.iter().all(|e| e.s == 0.0));
}

#[test]
fn redfield_rate_approaches_inverse_mean() {
    for n in 1..=4 {
        let red = model(qubit::e_diag(), n).redfield().unwrap();
        let alpha = red.basis.channels_with_eigenvalue(Complex64::new(-1.0, 0.0), 1e-9)[0];
        let rate = -red.channels[alpha].value(50.0).unwrap().re;
        assert!((rate - 1.0 / n as f64).abs() < 1e-4);
    }
}
