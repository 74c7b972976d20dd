use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative distance under which two computed roots are treated as one.
pub const ROOT_MERGE_REL: f64 = 1e-8;
/// Absolute floor for the merge distance.
pub const ROOT_MERGE_ABS: f64 = 1e-10;
/// Roots closer than this (relative) are examined as a possible multiple root.
const CLUSTER_SUSPECT_REL: f64 = 2e-2;
/// Taylor coefficients below this fraction of their magnitude bound count as zero.
const MULTIPLICITY_TOL: f64 = 1e-11;

/// Dense complex polynomial, coefficients in ascending degree.
///
/// Trailing (highest-degree) exact zeros are always trimmed, so the zero
/// polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The monic linear factor `u - root`.
    pub fn linear(root: Complex64) -> Self {
        Self::new(vec![-root, Complex64::new(1.0, 0.0)])
    }

    /// Monic polynomial with the given roots (with repetition).
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots
            .iter()
            .fold(Self::one(), |acc, &r| &acc * &Self::linear(r))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn eval(&self, u: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    /// Σ |c_i| |u|^i, the natural scale for round-off in `eval(u)`.
    pub fn magnitude_at(&self, u: Complex64) -> f64 {
        let r = u.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Drops leading coefficients smaller than `rel` times the largest one.
    ///
    /// Used after subtractions whose top-degree terms cancel analytically.
    pub fn trim_relative(mut self, rel: f64) -> Self {
        let scale = self.max_coeff();
        while self
            .coeffs
            .last()
            .is_some_and(|c| c.norm() <= rel * scale)
        {
            self.coeffs.pop();
        }
        self
    }

    /// Taylor coefficients about `center`: returns `a` with P(center + h) = Σ a_j h^j.
    pub fn shift(&self, center: Complex64) -> Vec<Complex64> {
        let mut a = self.coeffs.clone();
        let n = a.len();
        // repeated synthetic division (Horner shift)
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let hi = a[j + 1];
                a[j] += center * hi;
            }
        }
        a
    }

    /// Synthetic division by `u - root`; returns (quotient, remainder).
    pub fn deflate(&self, root: Complex64) -> (Self, Complex64) {
        let n = self.coeffs.len();
        if n == 0 {
            return (Self::zero(), Complex64::new(0.0, 0.0));
        }
        let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut carry = Complex64::new(0.0, 0.0);
        for i in (0..n).rev() {
            let v = self.coeffs[i] + carry * root;
            if i == 0 {
                return (Self::new(q), v);
            }
            q[i - 1] = v;
            carry = v;
        }
        unreachable!()
    }

    /// Polynomial long division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let Some(nd) = self.degree() else {
            return (Self::zero(), Self::zero());
        };
        if nd < dd {
            return (Self::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Complex64::new(0.0, 0.0); nd - dd + 1];
        let lead = divisor.leading();
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            quot[k] = c;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= c * dc;
            }
        }
        rem.truncate(dd);
        (Self::new(quot), Self::new(rem))
    }

    /// True when every coefficient is real to within `rel` of the largest.
    pub fn has_real_coeffs(&self, rel: f64) -> bool {
        let scale = self.max_coeff();
        self.coeffs.iter().all(|c| c.im.abs() <= rel * scale)
    }

    /// Roots with multiplicities.
    ///
    /// Companion-matrix eigenvalues, clustered (simple roots Newton-polished): roots
    /// within `ROOT_MERGE_REL` merge outright; tighter-than-`CLUSTER_SUSPECT_REL`
    /// clusters merge only when the Taylor coefficients at the centroid
    /// vanish up to the cluster size, otherwise the cluster is reported.
    pub fn roots(&self) -> Result<Vec<(Complex64, usize)>> {
        let Some(n) = self.degree() else {
            return Err(Error::InvalidTransform(
                "roots of the zero polynomial".into(),
            ));
        };
        if n == 0 {
            return Ok(Vec::new());
        }
        let raw = self.companion_eigenvalues(n);
        let mut clusters = self.cluster(raw)?;
        for (r, m) in clusters.iter_mut() {
            if *m == 1 {
                *r = self.polish(*r);
            }
        }
        if self.has_real_coeffs(1e-14) {
            symmetrize_conjugates(&mut clusters);
        }
        clusters.sort_by(|a, b| {
            (a.0.re, a.0.im)
                .partial_cmp(&(b.0.re, b.0.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(clusters)
    }

    fn companion_eigenvalues(&self, n: usize) -> Vec<Complex64> {
        let lead = self.leading();
        if n == 1 {
            return vec![-self.coeffs[0] / lead];
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -self.coeffs[i] / lead;
        }
        let schur = Schur::new(m);
        let (_, t) = schur.unpack();
        (0..n).map(|i| t[(i, i)]).collect()
    }

    fn polish(&self, mut r: Complex64) -> Complex64 {
        let d = self.derivative();
        let mut best = self.eval(r).norm();
        for _ in 0..8 {
            let dp = d.eval(r);
            if dp.norm() == 0.0 {
                break;
            }
            let cand = r - self.eval(r) / dp;
            let val = self.eval(cand).norm();
            if !(val < best) {
                break;
            }
            best = val;
            r = cand;
        }
        r
    }

    fn cluster(&self, roots: Vec<Complex64>) -> Result<Vec<(Complex64, usize)>> {
        let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let merge = (ROOT_MERGE_REL * scale).max(ROOT_MERGE_ABS);
        let suspect = (CLUSTER_SUSPECT_REL * scale.max(1.0)).max(merge);

        let groups = single_linkage(&roots, suspect);
        let mut out = Vec::new();
        for group in groups {
            let members: Vec<Complex64> = group.iter().map(|&i| roots[i]).collect();
            if members.len() == 1 {
                out.push((members[0], 1));
                continue;
            }
            let centroid = members.iter().sum::<Complex64>() / members.len() as f64;
            let spread = members
                .iter()
                .map(|r| (r - centroid).norm())
                .fold(0.0, f64::max);
            if spread <= merge || self.is_multiple_root(centroid, members.len()) {
                out.push((centroid, members.len()));
                continue;
            }
            // Not a single multiple root; accept the sub-clusters only if they
            // are well separated at the merge scale.
            let fine = single_linkage(&members, merge);
            if fine.iter().all(|g| g.len() == 1) && spread > 1e3 * merge * members.len() as f64
            {
                out.extend(members.iter().map(|&r| (r, 1)));
                continue;
            }
            return Err(Error::DegeneratePoles {
                center: centroid,
                cluster: members,
            });
        }
        Ok(out)
    }

    fn is_multiple_root(&self, center: Complex64, m: usize) -> bool {
        let taylor = self.shift(center);
        let r = center.norm();
        (0..m).all(|j| {
            // magnitude bound of the j-th Taylor coefficient
            let bound: f64 = self
                .coeffs
                .iter()
                .enumerate()
                .skip(j)
                .map(|(k, c)| c.norm() * binomial(k, j) * r.powi((k - j) as i32))
                .sum();
            taylor[j].norm() <= MULTIPLICITY_TOL * bound.max(f64::MIN_POSITIVE)
        })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn single_linkage(points: &[Complex64], dist: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i] - points[j]).norm() <= dist {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(i);
    }
    groups
}

/// Forces exact conjugate symmetry on the roots of a real polynomial.
fn symmetrize_conjugates(roots: &mut [(Complex64, usize)]) {
    let n = roots.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] {
            continue;
        }
        let (r, m) = roots[i];
        let tol = 1e-7 * r.norm().max(1.0);
        if r.im.abs() <= tol {
            roots[i].0 = Complex64::new(r.re, 0.0);
            paired[i] = true;
            continue;
        }
        let partner = (0..n)
            .filter(|&j| j != i && !paired[j] && roots[j].1 == m)
            .min_by(|&a, &b| {
                let da = (roots[a].0 - r.conj()).norm();
                let db = (roots[b].0 - r.conj()).norm();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(j) = partner {
            if (roots[j].0 - r.conj()).norm() <= tol {
                let re = 0.5 * (r.re + roots[j].0.re);
                let im = 0.5 * (r.im - roots[j].0.im);
                roots[i].0 = Complex64::new(re, im);
                roots[j].0 = Complex64::new(re, -im);
                paired[j] = true;
            }
        }
        paired[i] = true;
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        Polynomial::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).copied().unwrap_or(zero)
                        + rhs.coeffs.get(i).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eval_and_shift_agree() {
        let p = Polynomial::from_real(&[2.0, -3.0, 0.5, 1.0]);
        let center = Complex64::new(0.3, -1.2);
        let taylor = p.shift(center);
        let h = Complex64::new(0.7, 0.1);
        let via_taylor = taylor
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * h + a);
        assert!((via_taylor - p.eval(center + h)).norm() < 1e-12);
    }

    #[test]
    fn div_rem_reconstructs() {
        let p = Polynomial::from_real(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let d = Polynomial::from_real(&[-1.0, 0.0, 1.0]);
        let (q, r) = p.div_rem(&d);
        let back = &(&q * &d) + &r;
        for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(r.degree().unwrap() < 2);
    }

    #[test]
    fn simple_roots() {
        let p = Polynomial::from_roots(&[c(-1.0), c(-2.0), c(-3.0)]);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 3);
        for ((r, m), want) in roots.iter().zip([-3.0, -2.0, -1.0]) {
            assert_eq!(*m, 1);
            assert!((r - c(want)).norm() < 1e-12);
        }
    }

    #[test]
    fn erlang_style_multiple_root_is_merged() {
        for n in 1..=6 {
            let p = Polynomial::linear(c(-1.0)).pow(n);
            let roots = p.roots().unwrap();
            assert_eq!(roots.len(), 1, "order {n}: {roots:?}");
            assert_eq!(roots[0].1, n);
            assert!((roots[0].0 - c(-1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn mixed_multiplicities() {
        let p = &Polynomial::linear(c(-1.0)).pow(3) * &Polynomial::linear(c(-2.0));
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!((roots[0].1, roots[1].1), (1, 3));
        assert!((roots[0].0 - c(-2.0)).norm() < 1e-12);
        assert!((roots[1].0 - c(-1.0)).norm() < 1e-12);
    }

    #[test]
    fn conjugate_roots_are_exact_pairs() {
        // (u + 1)^2 + 1
        let p = Polynomial::from_real(&[2.0, 2.0, 1.0]);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].0, roots[1].0.conj());
        assert!((roots[0].0.re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn ambiguous_cluster_is_reported() {
        // two genuinely distinct roots 2e-5 apart, not a double root
        let p = Polynomial::from_roots(&[c(-1.0), c(-1.0 - 2e-5)]);
        match p.roots() {
            Err(Error::DegeneratePoles { cluster, .. }) => assert_eq!(cluster.len(), 2),
            other => panic!("expected degenerate-poles error, got {other:?}"),
        }
    }
}
