//! Stochastic oracle: sampled renewal processes and jump-count histograms.
//!
//! Draws come from ChaCha8 keyed by a 64-bit seed with the stream id as the
//! ChaCha stream number, so streams are independent and reproducible.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::solvers::Trajectory;
use crate::superop::{CMatrix, KrausMap};
use crate::waiting_time::WaitingTimeSpec;

/// Jump counts at or above this share one overflow bin.
pub const HISTOGRAM_CAP: usize = 64;

#[derive(Clone, Debug)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Uniform on (0, 1].
    fn open_unit(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        -self.open_unit().ln() / rate
    }
}

pub fn sample_waiting_time(spec: &WaitingTimeSpec, rng: &mut RngStream) -> f64 {
    match spec {
        WaitingTimeSpec::Exponential { rate } => rng.exponential(*rate),
        WaitingTimeSpec::Erlang { n, rate } => (0..*n).map(|_| rng.exponential(*rate)).sum(),
        WaitingTimeSpec::Mixture { components } => {
            let u = rng.rng.random::<f64>();
            let mut acc = 0.0;
            for c in components {
                acc += c.weight;
                if u < acc {
                    return sample_waiting_time(&c.spec, rng);
                }
            }
            sample_waiting_time(&components[components.len() - 1].spec, rng)
        }
        WaitingTimeSpec::Convolution { parts } => parts.iter().map(|p| sample_waiting_time(p, rng)).sum(),
    }
}

/// Histogram of N(t) over trials, one row per grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct CountEstimate {
    pub grid: TimeGrid,
    pub trials: u64,
    /// Row-major, `HISTOGRAM_CAP + 1` bins per time; the last is overflow.
    counts: Vec<u64>,
}

impl CountEstimate {
    fn empty(grid: &TimeGrid) -> Self {
        Self { grid: *grid, trials: 0, counts: vec![0; grid.n_points * (HISTOGRAM_CAP + 1)] }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.counts[i * (HISTOGRAM_CAP + 1)..(i + 1) * (HISTOGRAM_CAP + 1)]
    }

    pub fn p_hat(&self, n: usize, i: usize) -> f64 {
        if n > HISTOGRAM_CAP {
            return 0.0;
        }
        self.row(i)[n] as f64 / self.trials as f64
    }

    /// Binomial standard error √(p(1−p)/trials) of p̂_n at grid index i.
    pub fn sigma(&self, n: usize, i: usize) -> f64 {
        let p = self.p_hat(n, i);
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Fraction of trials in the overflow bin; bounds the bias of q̂.
    pub fn overflow(&self, i: usize) -> f64 {
        self.p_hat(HISTOGRAM_CAP, i)
    }

    /// q̂ = Σ_{n < cap} (−1)^n p̂_n.
    pub fn q_hat(&self, i: usize) -> f64 {
        (0..HISTOGRAM_CAP).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * self.p_hat(n, i)).sum()
    }

    /// Standard error of q̂ from the multinomial variance of ±1 outcomes.
    pub fn q_sigma(&self, i: usize) -> f64 {
        let q = self.q_hat(i);
        let second: f64 = (0..HISTOGRAM_CAP).map(|n| self.p_hat(n, i)).sum();
        ((second - q * q).max(0.0) / self.trials as f64).sqrt()
    }

    /// Pools two estimates on the same grid.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Validation("cannot merge count estimates on different grids".into()));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, trials: self.trials + other.trials, counts })
    }
}

/// Counts N(t) at each grid time for `trials` renewal trajectories.
pub fn estimate_counts(spec: &WaitingTimeSpec, grid: &TimeGrid, trials: u64, rng: &mut RngStream) -> CountEstimate {
    let mut est = CountEstimate::empty(grid);
    let times = grid.times();
    let width = HISTOGRAM_CAP + 1;
    for _ in 0..trials {
        let mut n = 0usize;
        let mut next = sample_waiting_time(spec, rng);
        for (i, &t) in times.iter().enumerate() {
            while next <= t {
                n += 1;
                next += sample_waiting_time(spec, rng);
            }
            est.counts[i * width + n.min(HISTOGRAM_CAP)] += 1;
        }
    }
    est.trials = trials;
    est
}

/// Splits `trials` over `streams` independent streams of one seed, run in
/// parallel and merged. Deterministic for fixed (seed, trials, streams).
pub fn estimate_counts_parallel(
    spec: &WaitingTimeSpec,
    grid: &TimeGrid,
    trials: u64,
    seed: u64,
    streams: u64,
) -> Result<CountEstimate> {
    spec.validate()?;
    grid.validate()?;
    if trials == 0 || streams == 0 {
        return Err(Error::InvalidSpec("trials and streams must be positive".into()));
    }
    let base = trials / streams;
    let extra = trials % streams;
    let parts: Vec<CountEstimate> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let n = base + u64::from(s < extra);
            estimate_counts(spec, grid, n, &mut RngStream::new(seed, s))
        })
        .collect();
    parts.iter().skip(1).try_fold(parts[0].clone(), |acc, p| acc.merge(p))
}

/// ρ̂_t = Σ_n p̂_n(t) E^n ρ_0 with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct StateEstimate {
    pub trajectory: Trajectory,
    /// Real part: σ of Re ρ̂; imaginary part: σ of Im ρ̂.
    pub sigma: Vec<CMatrix>,
}

pub fn estimate_state(jump: &KrausMap, counts: &CountEstimate, rho0: &CMatrix) -> StateEstimate {
    let mut powers = vec![rho0.clone()];
    for n in 1..HISTOGRAM_CAP {
        let next = jump.apply(&powers[n - 1]);
        powers.push(next);
    }
    let d = rho0.nrows();
    let trials = counts.trials as f64;
    let mut states = Vec::with_capacity(counts.grid.n_points);
    let mut sigma = Vec::with_capacity(counts.grid.n_points);
    for i in 0..counts.grid.n_points {
        let mut mean = CMatrix::zeros(d, d);
        let mut second_re = nalgebra::DMatrix::<f64>::zeros(d, d);
        let mut second_im = nalgebra::DMatrix::<f64>::zeros(d, d);
        for (n, m) in powers.iter().enumerate() {
            let p = counts.p_hat(n, i);
            if p == 0.0 {
                continue;
            }
            mean += m * Complex64::new(p, 0.0);
            second_re += m.map(|z| z.re * z.re) * p;
            second_im += m.map(|z| z.im * z.im) * p;
        }
        let s = CMatrix::from_fn(d, d, |r, c| {
            let z = mean[(r, c)];
            Complex64::new(
                ((second_re[(r, c)] - z.re * z.re).max(0.0) / trials).sqrt(),
                ((second_im[(r, c)] - z.im * z.im).max(0.0) / trials).sqrt(),
            )
        });
        states.push(mean);
        sigma.push(s);
    }
    StateEstimate { trajectory: Trajectory { grid: counts.grid, states, maps: None }, sigma }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_reproduce() {
        let spec = WaitingTimeSpec::erlang(2, 1.0);
        let grid = TimeGrid::new(3.0, 31).unwrap();
        let a = estimate_counts_parallel(&spec, &grid, 2000, 7, 4).unwrap();
        let b = estimate_counts_parallel(&spec, &grid, 2000, 7, 4).unwrap();
        assert_eq!(a, b);
        let c = estimate_counts_parallel(&spec, &grid, 2000, 8, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rows_sum_to_trials() {
        let spec = WaitingTimeSpec::exponential(3.0);
        let grid = TimeGrid::new(30.0, 16).unwrap();
        let est = estimate_counts_parallel(&spec, &grid, 1001, 1, 3).unwrap();
        for i in 0..grid.n_points {
            assert_eq!(est.row(i).iter().sum::<u64>(), 1001);
        }
        // rate 3 over t = 30 puts most mass above the cap
        assert!(est.overflow(15) > 0.9);
    }

    #[test]
    fn streams_differ() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 1);
        let x: Vec<f64> = (0..4).map(|_| a.open_unit()).collect();
        let y: Vec<f64> = (0..4).map(|_| b.open_unit()).collect();
        assert_ne!(x, y);
    }
}
