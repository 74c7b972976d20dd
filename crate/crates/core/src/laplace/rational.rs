use num_complex::Complex64;

use super::exppoly::{ExpPolynomial, ExpTerm};
use super::polynomial::{Polynomial, ROOT_MERGE_ABS, ROOT_MERGE_REL};
use crate::error::{Error, Result};

/// Relative residual under which a numerator is considered to vanish at a pole.
const CANCEL_TOL: f64 = 1e-9;
/// Relative size under which top numerator coefficients are treated as cancelled.
const TRIM_TOL: f64 = 1e-12;

/// A pole of a rational transform: a root of the denominator with its order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub location: Complex64,
    pub order: usize,
}

/// One partial-fraction term `residue / (u - pole)^order`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialFraction {
    pub pole: Complex64,
    pub order: usize,
    pub residue: Complex64,
}

/// Expansion r(u) = constant + Σ residue / (u - pole)^order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFractions {
    pub terms: Vec<PartialFraction>,
    pub constant: Complex64,
}

impl PartialFractions {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| t.residue / (u - t.pole).powu(t.order as u32))
                .sum::<Complex64>()
    }
}

/// Rational Laplace-domain function N(u) / Π (u - p_i)^{m_i}.
///
/// The denominator is kept monic and factored: poles are known exactly when
/// built from exponential/Erlang pieces, and only found numerically when a
/// new denominator arises from a subtraction. Values are always reduced,
/// i.e. no pole is a zero of the numerator.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalLT {
    numerator: Polynomial,
    poles: Vec<Pole>,
}

fn same_location(a: Complex64, b: Complex64) -> bool {
    let scale = a.norm().max(b.norm());
    (a - b).norm() <= (ROOT_MERGE_REL * scale).max(ROOT_MERGE_ABS)
}

fn merge_into(poles: &mut Vec<Pole>, p: Pole) {
    if let Some(q) = poles.iter_mut().find(|q| same_location(q.location, p.location)) {
        q.order += p.order;
    } else {
        poles.push(p);
    }
}

impl RationalLT {
    /// Builds and reduces `numerator / denominator`.
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidTransform("zero denominator".into()));
        }
        let lead = denominator.leading();
        let poles = denominator
            .roots()?
            .into_iter()
            .map(|(location, order)| Pole { location, order })
            .collect();
        Ok(Self::from_poles(numerator.scale(lead.inv()), poles))
    }

    /// `numerator / Π (u - p)^m` with the denominator already factored.
    pub fn from_poles(numerator: Polynomial, poles: Vec<Pole>) -> Self {
        let mut merged = Vec::with_capacity(poles.len());
        for p in poles.into_iter().filter(|p| p.order > 0) {
            merge_into(&mut merged, p);
        }
        let mut r = Self {
            numerator,
            poles: merged,
        };
        r.cancel();
        r
    }

    pub fn constant(c: Complex64) -> Self {
        Self::from_poles(Polynomial::constant(c), Vec::new())
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    /// `1 / (u - pole)^order`.
    pub fn pole(location: Complex64, order: usize) -> Self {
        Self::from_poles(Polynomial::one(), vec![Pole { location, order }])
    }

    /// The identity `u` (improper; only valid as an intermediate).
    pub fn u() -> Self {
        Self::from_poles(Polynomial::linear(Complex64::new(0.0, 0.0)), Vec::new())
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// The expanded (monic) denominator polynomial.
    pub fn denominator(&self) -> Polynomial {
        self.poles.iter().fold(Polynomial::one(), |acc, p| {
            &acc * &Polynomial::linear(p.location).pow(p.order)
        })
    }

    fn denominator_degree(&self) -> usize {
        self.poles.iter().map(|p| p.order).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_proper(&self) -> bool {
        self.numerator
            .degree()
            .is_none_or(|d| d <= self.denominator_degree())
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        let den: Complex64 = self
            .poles
            .iter()
            .map(|p| (u - p.location).powu(p.order as u32))
            .product();
        self.numerator.eval(u) / den
    }

    /// lim_{u→∞} r(u); this is the weight of δ(t) in the inverse transform.
    pub fn delta_weight(&self) -> Result<Complex64> {
        let dd = self.denominator_degree();
        match self.numerator.degree() {
            None => Ok(Complex64::new(0.0, 0.0)),
            Some(d) if d < dd => Ok(Complex64::new(0.0, 0.0)),
            Some(d) if d == dd => Ok(self.numerator.leading()),
            Some(_) => Err(Error::InvalidTransform(
                "improper rational function (numerator degree exceeds denominator)".into(),
            )),
        }
    }

    /// Re-runs cancellation of common factors. Values are kept reduced by
    /// every constructor, so this is idempotent.
    pub fn reduce(&self) -> Self {
        let mut r = self.clone();
        r.cancel();
        r
    }

    fn cancel(&mut self) {
        self.numerator = std::mem::replace(&mut self.numerator, Polynomial::zero())
            .trim_relative(TRIM_TOL);
        if self.numerator.is_zero() {
            self.poles.clear();
            return;
        }
        for pole in &mut self.poles {
            while pole.order > 0 && !self.numerator.is_zero() {
                let residual = self.numerator.eval(pole.location).norm();
                let scale = self.numerator.magnitude_at(pole.location);
                if residual > CANCEL_TOL * scale {
                    break;
                }
                self.numerator = self.numerator.deflate(pole.location).0;
                pole.order -= 1;
            }
        }
        self.poles.retain(|p| p.order > 0);
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_poles(self.numerator.scale(s), self.poles.clone())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut poles = self.poles.clone();
        for &p in &other.poles {
            merge_into(&mut poles, p);
        }
        Self::from_poles(&self.numerator * &other.numerator, poles)
    }

    pub fn add(&self, other: &Self) -> Self {
        // least common denominator over the factored poles
        let mut lcd: Vec<Pole> = self.poles.clone();
        for &p in &other.poles {
            match lcd.iter_mut().find(|q| same_location(q.location, p.location)) {
                Some(q) => q.order = q.order.max(p.order),
                None => lcd.push(p),
            }
        }
        let lift = |r: &Self| -> Polynomial {
            lcd.iter().fold(r.numerator.clone(), |acc, q| {
                let have = r
                    .poles
                    .iter()
                    .find(|p| same_location(p.location, q.location))
                    .map_or(0, |p| p.order);
                &acc * &Polynomial::linear(q.location).pow(q.order - have)
            })
        };
        let num = &lift(self) + &lift(other);
        Self::from_poles(num, lcd)
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// 1 / r; needs the numerator's roots.
    pub fn recip(&self) -> Result<Self> {
        if self.numerator.is_zero() {
            return Err(Error::InvalidTransform("reciprocal of zero".into()));
        }
        Self::new(self.denominator(), self.numerator.clone())
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn mul_u(&self) -> Self {
        self.mul(&Self::u())
    }

    pub fn div_u(&self) -> Self {
        self.mul(&Self::pole(Complex64::new(0.0, 0.0), 1))
    }

    /// Partial-fraction expansion (requires a proper function).
    pub fn partial_fractions(&self) -> Result<PartialFractions> {
        let constant = self.delta_weight()?;
        let smooth_num = if constant != Complex64::new(0.0, 0.0) {
            (&self.numerator - &self.denominator().scale(constant)).trim_relative(TRIM_TOL)
        } else {
            self.numerator.clone()
        };
        let mut terms = Vec::new();
        for (i, pole) in self.poles.iter().enumerate() {
            let m = pole.order;
            // Taylor series in h = u - pole of numerator / other factors
            let mut series: Vec<Complex64> = smooth_num.shift(pole.location);
            series.resize(m.max(series.len()), Complex64::new(0.0, 0.0));
            series.truncate(m);
            for (j, other) in self.poles.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = pole.location - other.location;
                let inv = inverse_power_series(d, other.order, m);
                series = truncated_product(&series, &inv, m);
            }
            for (j, &s) in series.iter().enumerate() {
                let order = m - j;
                if s != Complex64::new(0.0, 0.0) {
                    terms.push(PartialFraction {
                        pole: pole.location,
                        order,
                        residue: s,
                    });
                }
            }
        }
        Ok(PartialFractions { terms, constant })
    }

    /// Closed-form inverse transform.
    pub fn inverse_laplace(&self) -> Result<ExpPolynomial> {
        let pf = self.partial_fractions()?;
        let terms = pf
            .terms
            .iter()
            .map(|t| ExpTerm {
                amplitude: t.residue,
                power: (t.order - 1) as u32,
                decay: -t.pole,
            })
            .collect();
        Ok(ExpPolynomial::new(terms, pf.constant))
    }

    /// True if N and the pole set are conjugation symmetric.
    pub fn has_real_coefficients(&self, rel: f64) -> bool {
        self.numerator.has_real_coeffs(rel) && self.denominator().has_real_coeffs(rel)
    }
}

/// Series of (d + h)^{-m} in h, truncated to `len` coefficients.
fn inverse_power_series(d: Complex64, m: usize, len: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(len);
    let mut c = d.powi(-(m as i32));
    for j in 0..len {
        out.push(c);
        c *= -((m + j) as f64) / ((j + 1) as f64) / d;
    }
    out
}

fn truncated_product(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, &x) in a.iter().enumerate().take(len) {
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}
