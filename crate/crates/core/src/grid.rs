//! Uniform time grids and sampled functions on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid t_i = i·Δt on [0, t_end] with `n_points` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_points: usize) -> Result<Self> {
        let g = Self { t_end, n_points };
        g.validate()?;
        Ok(g)
    }

    /// [0, 20] with 2001 points.
    pub fn default_curves() -> Self {
        Self {
            t_end: 20.0,
            n_points: 2001,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 points, got {}",
                self.n_points
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Validation(format!(
                "grid end must be positive and finite, got {}",
                self.t_end
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_end / (self.n_points - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.t_end
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.time(i)).collect()
    }

    /// Same interval, `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            t_end: self.t_end,
            n_points: (self.n_points - 1) * factor + 1,
        }
    }
}

/// Function sampled at t_i = i·step, i = 0..len, with cubic interpolation
/// in between and clamping outside.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    step: f64,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<Complex64>) -> Self {
        assert!(step > 0.0 && values.len() >= 2, "grid function needs step > 0 and two samples");
        Self { step, values }
    }

    pub fn from_real(step: f64, values: &[f64]) -> Self {
        Self::new(step, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn sample<F: Fn(f64) -> Complex64>(grid: &TimeGrid, f: F) -> Self {
        Self::new(grid.dt(), grid.times().into_iter().map(f).collect())
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn t_end(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let n = self.values.len();
        let x = (t / self.step).clamp(0.0, (n - 1) as f64);
        let i = x.floor() as usize;
        if (x - i as f64).abs() < 1e-12 {
            return self.values[i.min(n - 1)];
        }
        if n < 4 {
            let i = i.min(n - 2);
            let w = x - i as f64;
            return self.values[i] * (1.0 - w) + self.values[i + 1] * w;
        }
        let start = i.saturating_sub(1).min(n - 4);
        let xs = [0.0, 1.0, 2.0, 3.0].map(|k| start as f64 + k);
        let ys = [0, 1, 2, 3].map(|k| self.values[start + k]);
        lagrange4(xs, ys, x)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self::new(self.step, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Cubic Lagrange interpolation through four points.
pub fn lagrange4(xs: [f64; 4], ys: [Complex64; 4], x: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += ys[i] * w;
    }
    acc
}

/// ∫ over `values.len() - 1` uniform intervals of width `h`, fourth order.
///
/// Composite Simpson, finishing with a 3/8 panel when the interval count is
/// odd; one interval falls back to the trapezoid.
pub fn quad_uniform(values: &[Complex64], h: f64) -> Complex64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => Complex64::new(0.0, 0.0),
        1 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let (simpson_end, tail) = if n % 2 == 0 { (n, false) } else { (n - 3, true) };
            let mut acc = Complex64::new(0.0, 0.0);
            let mut i = 0;
            while i < simpson_end {
                acc += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
                i += 2;
            }
            if tail {
                let j = simpson_end;
                acc += 3.0 * h / 8.0
                    * (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
            }
            acc
        }
    }
}

/// Cumulative ∫_0^{t_i} on a uniform grid, fourth order except the first step.
pub fn cumulative_integral(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 1..n {
        out[i] = if i < 3 {
            // cubic through the first four samples when available
            if n >= 4 {
                integrate_cubic_head(&values[..4], h, i)
            } else {
                out[i - 1] + 0.5 * h * (values[i - 1] + values[i])
            }
        } else {
            quad_uniform(&values[..=i], h)
        };
    }
    out
}

fn integrate_cubic_head(v: &[Complex64], h: f64, upto: usize) -> Complex64 {
    // exact integrals of the cubic interpolant through v[0..4] from 0 to upto·h
    let w: [[f64; 4]; 2] = [
        [9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0],
        [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0, 0.0],
    ];
    let row = &w[upto - 1];
    h * (0..4).map(|k| v[k] * row[k]).sum::<Complex64>()
}

/// Zero crossings of `f` on the grid, each refined by bisection to `tol`.
pub fn sign_change_brackets<F: Fn(f64) -> f64>(f: F, times: &[f64], tol: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for w in times.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (f(a), f(b));
        if fa == 0.0 && a > 0.0 {
            out.push((a, a));
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        while b - a > tol {
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        out.push((a, b));
    }
    out
}
