use std::sync::OnceLock;

use num_complex::Complex64;

use super::rational::{Pole, RationalLT};
use super::polynomial::Polynomial;
use crate::error::Result;

/// One term `amplitude · t^power / power! · e^{-decay·t}`.
///
/// The factorial normalization keeps amplitudes representable for the
/// high-order poles of jump-count probabilities (f̃^n g̃).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpTerm {
    pub amplitude: Complex64,
    pub power: u32,
    pub decay: Complex64,
}

impl ExpTerm {
    pub fn eval(&self, t: f64) -> Complex64 {
        if self.power == 0 {
            return self.amplitude * (-self.decay * t).exp();
        }
        if t <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let log_mag = self.power as f64 * t.ln() - ln_factorial(self.power);
        self.amplitude * (Complex64::new(log_mag, 0.0) - self.decay * t).exp()
    }
}

fn ln_factorial(n: u32) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(4097);
        let mut acc = 0.0;
        v.push(0.0);
        for k in 1..=4096u32 {
            acc += (k as f64).ln();
            v.push(acc);
        }
        v
    });
    match table.get(n as usize) {
        Some(&v) => v,
        None => table[4096] + (4097..=n).map(|k| (k as f64).ln()).sum::<f64>(),
    }
}

/// Time-domain function Σ terms + delta_weight·δ(t).
///
/// This is the inverse transform of a proper `RationalLT`; the δ weight is
/// the transform's limit at u → ∞.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExpPolynomial {
    terms: Vec<ExpTerm>,
    delta_weight: Complex64,
}

impl ExpPolynomial {
    pub fn new(terms: Vec<ExpTerm>, delta_weight: Complex64) -> Self {
        let mut p = Self {
            terms,
            delta_weight,
        };
        p.simplify();
        p
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `amplitude · e^{-decay t}`.
    pub fn exponential(amplitude: f64, decay: f64) -> Self {
        Self::new(
            vec![ExpTerm {
                amplitude: Complex64::new(amplitude, 0.0),
                power: 0,
                decay: Complex64::new(decay, 0.0),
            }],
            Complex64::new(0.0, 0.0),
        )
    }

    /// `weight · δ(t)`.
    pub fn delta(weight: f64) -> Self {
        Self::new(Vec::new(), Complex64::new(weight, 0.0))
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn delta_weight(&self) -> Complex64 {
        self.delta_weight
    }

    /// Smooth part without the δ contribution.
    pub fn smooth(&self) -> Self {
        Self {
            terms: self.terms.clone(),
            delta_weight: Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.delta_weight == Complex64::new(0.0, 0.0)
    }

    fn simplify(&mut self) {
        let mut merged: Vec<ExpTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            let tol = 1e-12 * t.decay.norm().max(1.0);
            match merged
                .iter_mut()
                .find(|m| m.power == t.power && (m.decay - t.decay).norm() <= tol)
            {
                Some(m) => m.amplitude += t.amplitude,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.amplitude != Complex64::new(0.0, 0.0));
        self.terms = merged;
    }

    /// Value of the smooth part at `t` (the δ weight is not included).
    pub fn evaluate(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Real part of `evaluate`, for functions generated by real transforms.
    pub fn evaluate_real(&self, t: f64) -> f64 {
        self.evaluate(t).re
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| ExpTerm {
                    amplitude: t.amplitude * s,
                    ..*t
                })
                .collect(),
            self.delta_weight * s,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::new(terms, self.delta_weight + other.delta_weight)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Derivative of the smooth part (δ is dropped).
    pub fn derivative(&self) -> Self {
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.power > 0 {
                terms.push(ExpTerm {
                    power: t.power - 1,
                    ..*t
                });
            }
            terms.push(ExpTerm {
                amplitude: -t.amplitude * t.decay,
                ..*t
            });
        }
        Self::new(terms, Complex64::new(0.0, 0.0))
    }

    /// Forward Laplace transform; exact.
    pub fn laplace(&self) -> RationalLT {
        // group terms by decay so each group shares one pole
        let mut groups: Vec<(Complex64, Vec<&ExpTerm>)> = Vec::new();
        for t in &self.terms {
            match groups.iter_mut().find(|(d, _)| *d == t.decay) {
                Some((_, g)) => g.push(t),
                None => groups.push((t.decay, vec![t])),
            }
        }
        let mut out = RationalLT::constant(self.delta_weight);
        for (decay, group) in groups {
            let top = group.iter().map(|t| t.power).max().unwrap_or(0) as usize;
            let pole = -decay;
            let lin = Polynomial::linear(pole);
            // Σ A_m / (u - pole)^{m+1} = Σ A_m (u - pole)^{top - m} / (u - pole)^{top+1}
            let num = group.iter().fold(Polynomial::zero(), |acc, t| {
                &acc + &lin.pow(top - t.power as usize).scale(t.amplitude)
            });
            out = out.add(&RationalLT::from_poles(
                num,
                vec![Pole {
                    location: pole,
                    order: top + 1,
                }],
            ));
        }
        out
    }

    /// Running integral ∫_0^t (including the δ weight) as an exponential polynomial.
    pub fn integral(&self) -> Result<Self> {
        self.laplace().div_u().inverse_laplace()
    }

    /// ∫_0^t p(s) ds, with the δ weight counted for every t > 0.
    pub fn integrate_0_to_t(&self, t: f64) -> Result<Complex64> {
        let i = self.integral()?;
        Ok(i.evaluate(t) + if t > 0.0 { i.delta_weight } else { Complex64::new(0.0, 0.0) })
    }

    /// (a ∗ b)(t) computed as the inverse of the product of transforms.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.laplace().mul(&other.laplace()).inverse_laplace()
    }

    /// Largest |Im| of the smooth part over the sample times.
    pub fn max_imaginary(&self, times: &[f64]) -> f64 {
        times
            .iter()
            .map(|&t| self.evaluate(t).im.abs())
            .fold(self.delta_weight.im.abs(), f64::max)
    }
}

/// Free-function spelling of [`ExpPolynomial::convolve`].
pub fn convolve(a: &ExpPolynomial, b: &ExpPolynomial) -> Result<ExpPolynomial> {
    a.convolve(b)
}

/// Free-function spelling of [`ExpPolynomial::evaluate`].
pub fn evaluate(p: &ExpPolynomial, t: f64) -> Complex64 {
    p.evaluate(t)
}

/// Free-function spelling of [`ExpPolynomial::integrate_0_to_t`].
pub fn integrate_0_to_t(p: &ExpPolynomial, t: f64) -> Result<Complex64> {
    p.integrate_0_to_t(t)
}
