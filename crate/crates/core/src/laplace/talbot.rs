use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Contour nodes for fixed-Talbot inversion.
pub const TALBOT_NODES: usize = 32;

/// Fixed-Talbot numerical inverse Laplace transform of a real-valued function.
///
/// Contour s(θ) = rθ(cot θ + i), θ ∈ (−π, π), r = 2M/(5t), evaluated with
/// M = 32 nodes using conjugate symmetry. Each sample time gets its own
/// contour. `t = 0` is rejected: the one-sided limit must come from the
/// initial-value theorem, not from the contour.
pub fn numeric_inverse_laplace<F>(transform: F, times: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(Complex64) -> Complex64,
{
    times.iter().map(|&t| invert_at(&transform, t)).collect()
}

fn invert_at<F>(transform: &F, t: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::UnsupportedTime {
            t,
            reason: "contour inversion needs t > 0; use the u→∞ limit for t = 0+",
        });
    }
    let m = TALBOT_NODES as f64;
    let r = 2.0 * m / (5.0 * t);
    let eval = |u: Complex64| -> Result<Complex64> {
        let v = transform(u);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluator(u))
        }
    };
    let mut acc = 0.5 * (eval(Complex64::new(r, 0.0))? * (r * t).exp()).re;
    for k in 1..TALBOT_NODES {
        let theta = k as f64 * PI / m;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let w = Complex64::new(1.0, sigma);
        acc += ((s * t).exp() * eval(s)? * w).re;
    }
    Ok(acc * r / m)
}
