//! Operators, maps and generators on d×d matrices.
//!
//! Vectorization is column stacking everywhere: vec(ρ)[i + d·j] = ρ[i, j],
//! which is nalgebra's native storage order. With it vec(AρB) = (Bᵀ ⊗ A) vec(ρ),
//! so a Kraus term CρC† is conj(C) ⊗ C.

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Hilbert–Schmidt product Tr(a† b).
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn vec_of(m: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(m.len(), 1, m.as_slice())
}

pub(crate) fn unvec(v: &[Complex64], d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Trace norm ‖m‖₁ = Σ singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.singular_values().iter().sum()
}

/// ½‖a − b‖₁.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm(&(a - b))
}

/// Orthonormal Hermitian operator basis: 𝟙/√d first, then the generalized
/// Gell-Mann matrices (symmetric, antisymmetric per pair, then diagonal),
/// each scaled to unit Hilbert–Schmidt norm. For d = 2 this is
/// (𝟙, σx, σy, σz)/√2.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    out.push(identity(d) / Complex64::new((d as f64).sqrt(), 0.0));
    let s = Complex64::new(0.5f64.sqrt(), 0.0);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = s;
            sym[(k, j)] = s;
            out.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, k)] = Complex64::new(0.0, -s.re);
            anti[(k, j)] = Complex64::new(0.0, s.re);
            out.push(anti);
        }
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for m in 0..l {
            diag[(m, m)] = Complex64::new(1.0 / norm, 0.0);
        }
        diag[(l, l)] = Complex64::new(-(l as f64) / norm, 0.0);
        out.push(diag);
    }
    out
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let herm = (&m - m.adjoint()).norm();
        if herm > 1e-12 {
            return Err(Error::Validation(format!("density matrix not Hermitian (defect {herm:.2e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::Validation(format!("density matrix trace is {tr}, not 1")));
        }
        let min = min_hermitian_eigenvalue(&m);
        if min < -1e-10 {
            return Err(Error::Validation(format!("density matrix has eigenvalue {min:.3e}")));
        }
        Ok(Self(m))
    }

    /// |+⟩⟨+| on a qubit, maximal coherence.
    pub fn plus() -> Self {
        Self(CMatrix::from_element(2, 2, Complex64::new(0.5, 0.0)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// Kraus representation Σ C_i ρ C_i† of a trace-preserving map.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausMap {
    ops: Vec<CMatrix>,
    dim: usize,
}

impl KrausMap {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let dim = ops
            .first()
            .ok_or_else(|| Error::Validation("Kraus map needs at least one operator".into()))?
            .nrows();
        if ops.iter().any(|c| c.nrows() != dim || c.ncols() != dim) {
            return Err(Error::Dimension("Kraus operators must be square and equal size".into()));
        }
        let sum = ops.iter().fold(CMatrix::zeros(dim, dim), |acc, c| acc + c.adjoint() * c);
        let defect = (sum - identity(dim)).norm();
        if defect > 1e-10 {
            return Err(Error::Validation(format!(
                "Kraus operators are not trace preserving (‖Σ C†C − 𝟙‖ = {defect:.3e})"
            )));
        }
        Ok(Self { ops, dim })
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Σ conj(C) ⊗ C.
    pub fn liouville(&self) -> SuperOperator {
        let d2 = self.dim * self.dim;
        let m = self
            .ops
            .iter()
            .fold(CMatrix::zeros(d2, d2), |acc, c| acc + c.conjugate().kronecker(c));
        SuperOperator { dim: self.dim, matrix: m }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, c| acc + c * rho * c.adjoint())
    }
}

/// Linear map on d×d matrices as a d²×d² matrix in the column-stacked
/// matrix-unit basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: CMatrix,
}

impl SuperOperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "superoperator for d = {dim} must be {0}×{0}",
                dim * dim
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: identity(dim * dim) }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    /// ρ ↦ A ρ B.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self { dim: a.nrows(), matrix: b.transpose().kronecker(a) }
    }

    /// ρ ↦ −i[H, ρ].
    pub fn hamiltonian(h: &CMatrix) -> Self {
        let d = h.nrows();
        let i = Complex64::new(0.0, 1.0);
        let id = identity(d);
        Self::sandwich(h, &id).scale(-i).add(&Self::sandwich(&id, h).scale(i))
    }

    /// ρ ↦ LρL† − ½{L†L, ρ}.
    pub fn dissipator(l: &CMatrix) -> Self {
        let d = l.nrows();
        let id = identity(d);
        let ll = l.adjoint() * l;
        Self::sandwich(l, &l.adjoint())
            .add(&Self::sandwich(&ll, &id).scale(Complex64::new(-0.5, 0.0)))
            .add(&Self::sandwich(&id, &ll).scale(Complex64::new(-0.5, 0.0)))
    }

    /// ρ ↦ ρᵀ; positive but not completely positive.
    pub fn transpose_map(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim * dim, dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(j + dim * i, i + dim * j)] = ONE;
            }
        }
        Self { dim, matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec((&self.matrix * vec_of(rho)).as_slice(), self.dim)
    }

    /// self ∘ other.
    pub fn compose(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix * &other.matrix }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { dim: self.dim, matrix: &self.matrix - &other.matrix }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, matrix: &self.matrix * s }
    }

    /// Frobenius norm of the d²×d² matrix.
    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn determinant(&self) -> Complex64 {
        self.matrix.determinant()
    }

    /// Inverse map; `None` when |det| ≤ `det_floor`.
    pub fn inverse(&self, det_floor: f64) -> Option<Self> {
        if self.determinant().norm() <= det_floor {
            return None;
        }
        self.matrix
            .clone()
            .try_inverse()
            .map(|m| Self { dim: self.dim, matrix: m })
    }

    /// Choi matrix Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|), unnormalized (trace d for TP maps).
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut c = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                // column i + d·j of the matrix is Λ(|i⟩⟨j|) stacked
                let col = self.matrix.column(i + d * j);
                for a in 0..d {
                    for b in 0..d {
                        c[(i * d + a, j * d + b)] = col[a + d * b];
                    }
                }
            }
        }
        c
    }

    /// (CP within tolerance, smallest Choi eigenvalue).
    pub fn is_cp(&self, tol: f64) -> (bool, f64) {
        let min = min_hermitian_eigenvalue(&self.choi());
        (min >= -tol, min)
    }

    /// Tr Λ(|i⟩⟨j|) = δ_ij within `tol`.
    pub fn is_tp(&self, tol: f64) -> bool {
        let d = self.dim;
        (0..d).all(|i| {
            (0..d).all(|j| {
                let col = self.matrix.column(i + d * j);
                let tr: Complex64 = (0..d).map(|a| col[a + d * a]).sum();
                let expect = if i == j { ONE } else { ZERO };
                (tr - expect).norm() <= tol
            })
        })
    }

    /// Largest |Tr Λ(|i⟩⟨j|)|, zero for generators of trace-preserving dynamics.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix.column(i + d * j);
                let tr: Complex64 = (0..d).map(|a| col[a + d * a]).sum();
                worst = worst.max(tr.norm());
            }
        }
        worst
    }

    /// max over basis elements of ‖Λ(F)† − Λ(F)‖ for Hermitian F.
    pub fn hermiticity_defect(&self) -> f64 {
        hermitian_basis(self.dim)
            .iter()
            .map(|f| {
                let out = self.apply(f);
                (&out - out.adjoint()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Right/left eigen-operators of a diagonalizable superoperator.
#[derive(Clone, Debug)]
pub struct DampingBasis {
    pub right: Vec<CMatrix>,
    pub left: Vec<CMatrix>,
    pub eigenvalues: Vec<Complex64>,
    /// Condition number of the right-eigenvector matrix.
    pub condition: f64,
}

/// Eigenvector-matrix condition above which the basis is flagged.
pub const ILL_CONDITIONED: f64 = 1e10;

impl DampingBasis {
    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.right[0].nrows()
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition > ILL_CONDITIONED
    }

    /// M_α: ρ ↦ τ_α Tr[ς_α† ρ].
    pub fn projector(&self, alpha: usize) -> SuperOperator {
        let m = vec_of(&self.right[alpha]) * vec_of(&self.left[alpha]).adjoint();
        SuperOperator { dim: self.dim(), matrix: m }
    }

    /// Σ_α values[α] M_α.
    pub fn assemble(&self, values: &[Complex64]) -> SuperOperator {
        let d2 = self.dim() * self.dim();
        let mut r = CMatrix::zeros(d2, self.len());
        let mut l = CMatrix::zeros(d2, self.len());
        for (a, &v) in values.iter().enumerate() {
            r.set_column(a, &(vec_of(&self.right[a]) * v).column(0));
            l.set_column(a, &vec_of(&self.left[a]).column(0));
        }
        SuperOperator { dim: self.dim(), matrix: r * l.adjoint() }
    }

    /// Largest |⟨ς_α, τ_β⟩ − δ_αβ|.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, s) in self.left.iter().enumerate() {
            for (b, t) in self.right.iter().enumerate() {
                let expect = if a == b { ONE } else { ZERO };
                worst = worst.max((hs_inner(s, t) - expect).norm());
            }
        }
        worst
    }

    /// Indices of channels whose eigenvalue is within `tol` of `value`.
    pub fn channels_with_eigenvalue(&self, value: Complex64, tol: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&a| (self.eigenvalues[a] - value).norm() <= tol)
            .collect()
    }
}

/// Eigenvalues closer than this (relative to the spectral scale) share an eigenspace.
const EIGEN_CLUSTER_REL: f64 = 1e-8;
/// Singular values below this (relative) count toward a null space.
const NULL_SPACE_REL: f64 = 1e-9;

/// Orthonormal basis (as columns) of the null space of `m`.
fn null_space(m: &CMatrix, rel: f64) -> Vec<CMatrix> {
    let n = m.ncols();
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let scale = svd.singular_values.max().max(1.0);
    (0..n)
        .filter(|&i| svd.singular_values[i] <= rel * scale)
        .map(|i| {
            let col = v_t.row(i).adjoint();
            CMatrix::from_column_slice(n, 1, col.as_slice())
        })
        .collect()
}

/// Bi-orthonormal damping basis of `s`.
///
/// Eigenvalues are sorted by real part (descending), then imaginary part.
/// Inside a degenerate eigenspace the right operators are obtained by
/// projecting the Hermitian basis in order onto the eigenspace and
/// Gram–Schmidt orthonormalizing, which makes the choice reproducible.
pub fn damping_basis(s: &SuperOperator) -> Result<DampingBasis> {
    let d = s.dim();
    let n = d * d;
    let (_, t) = Schur::new(s.matrix.clone()).unpack();
    let raw: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = raw.iter().map(|z| z.norm()).fold(1.0, f64::max);

    // cluster eigenvalues
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in raw {
        match clusters
            .iter_mut()
            .find(|c| c.iter().any(|w| (w - z).norm() <= EIGEN_CLUSTER_REL * scale))
        {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut centers: Vec<(Complex64, usize)> = clusters
        .iter()
        .map(|c| (c.iter().sum::<Complex64>() / c.len() as f64, c.len()))
        .collect();
    centers.sort_by(|a, b| {
        b.0.re
            .partial_cmp(&a.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });

    let seeds: Vec<CMatrix> = hermitian_basis(d).iter().map(vec_of).collect();
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for &(lambda, mult) in &centers {
        let shifted = &s.matrix - CMatrix::identity(n, n) * lambda;
        let r_null = null_space(&shifted, NULL_SPACE_REL);
        let l_null = null_space(&shifted.adjoint(), NULL_SPACE_REL);
        if r_null.len() < mult || l_null.len() < mult {
            return Err(Error::DefectiveGenerator {
                eigenvalue: lambda,
                algebraic: mult,
                geometric: r_null.len().min(l_null.len()),
            });
        }
        // projector onto the right eigenspace
        let basis = CMatrix::from_columns(&r_null.iter().map(|v| v.column(0)).collect::<Vec<_>>());
        let proj = &basis * basis.adjoint();
        let mut chosen: Vec<CMatrix> = Vec::with_capacity(mult);
        let candidates = seeds.iter().cloned().chain(r_null.iter().cloned());
        for seed in candidates {
            if chosen.len() == mult {
                break;
            }
            let mut v = &proj * seed;
            for c in &chosen {
                let overlap = (c.adjoint() * &v)[(0, 0)];
                v -= c * overlap;
            }
            let norm = v.norm();
            if norm > 1e-6 {
                chosen.push(v / Complex64::new(norm, 0.0));
            }
        }
        // left vectors from the left eigenspace, dual to `chosen`
        let w = CMatrix::from_columns(&l_null.iter().take(mult).map(|v| v.column(0)).collect::<Vec<_>>());
        let tmat = CMatrix::from_columns(&chosen.iter().map(|v| v.column(0)).collect::<Vec<_>>());
        let overlap = w.adjoint() * &tmat;
        let inv = overlap.try_inverse().ok_or(Error::DefectiveGenerator {
            eigenvalue: lambda,
            algebraic: mult,
            geometric: 0,
        })?;
        let duals = w * inv.adjoint();
        for (k, tau) in chosen.iter().enumerate() {
            right.push(unvec(tau.as_slice(), d));
            left.push(unvec(duals.column(k).as_slice(), d));
        }
    }
    // eigenvalues as Rayleigh quotients ⟨ς, S τ⟩
    let eigenvalues = right
        .iter()
        .zip(&left)
        .map(|(t, l)| hs_inner(l, &s.apply(t)))
        .collect();
    let rmat = CMatrix::from_columns(&right.iter().map(|t| vec_of(t).column(0).into_owned()).collect::<Vec<_>>());
    let sv = rmat.singular_values();
    let condition = sv.max() / sv.min();
    Ok(DampingBasis { right, left, eigenvalues, condition })
}

/// GKS form −i[H, ·] + Σ γ_k D[L_k] of a generator.
#[derive(Clone, Debug)]
pub struct LindbladForm {
    pub hamiltonian: CMatrix,
    pub rates: Vec<f64>,
    pub operators: Vec<CMatrix>,
    /// Kossakowski matrix in the traceless part of [`hermitian_basis`].
    pub kossakowski: CMatrix,
}

impl LindbladForm {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn reassemble(&self) -> SuperOperator {
        self.rates.iter().zip(&self.operators).fold(
            SuperOperator::hamiltonian(&self.hamiltonian),
            |acc, (&g, l)| acc.add(&SuperOperator::dissipator(l).scale(Complex64::new(g, 0.0))),
        )
    }

    /// Σ_k γ_k |⟨L_k, X̂⟩|² for X̂ = X/‖X‖; independent of how degenerate
    /// rates were diagonalized. `op` should be traceless.
    pub fn rate_along(&self, op: &CMatrix) -> f64 {
        let x = op / Complex64::new(op.norm(), 0.0);
        let basis = hermitian_basis(self.dim());
        let coords: Vec<Complex64> = basis[1..].iter().map(|f| hs_inner(f, &x)).collect();
        let mut acc = ZERO;
        for (i, ci) in coords.iter().enumerate() {
            for (j, cj) in coords.iter().enumerate() {
                acc += ci.conj() * self.kossakowski[(i, j)] * cj;
            }
        }
        acc.re
    }

    /// Most negative rate (zero if all are nonnegative).
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::min)
    }
}

/// Rates with |γ| below this fraction of the largest are dropped.
const NEGLIGIBLE_RATE_REL: f64 = 1e-13;

/// Standard GKS extraction.
pub fn lindblad_form(s: &SuperOperator) -> Result<LindbladForm> {
    let d = s.dim();
    let scale = s.norm().max(1.0);
    let defect = s.trace_defect();
    if defect > 1e-9 * scale {
        return Err(Error::NotAGenerator(format!(
            "output trace not annihilated (defect {defect:.3e})"
        )));
    }
    let herm = s.hermiticity_defect();
    if herm > 1e-9 * scale {
        return Err(Error::NotAGenerator(format!(
            "hermiticity not preserved (defect {herm:.3e})"
        )));
    }
    let basis = hermitian_basis(d);
    let n = d * d;
    // a_ij = ⟨conj(F_j) ⊗ F_i, S⟩ so that S = Σ a_ij F_i · F_j†
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let e = basis[j].conjugate().kronecker(&basis[i]);
            a[(i, j)] = hs_inner(&e, s.matrix());
        }
    }
    let c = hermitian_part(&a.view((1, 1), (n - 1, n - 1)).into_owned());
    let sqrt_d = Complex64::new((d as f64).sqrt(), 0.0);
    let f = (1..n).fold(CMatrix::zeros(d, d), |acc, i| acc + &basis[i] * a[(i, 0)]) / sqrt_d;
    let hamiltonian = (f.adjoint() - &f) / Complex64::new(0.0, 2.0);

    let eig = SymmetricEigen::new(c.clone());
    let max_rate = eig.eigenvalues.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let mut channels: Vec<(f64, CMatrix)> = (0..n - 1)
        .filter(|&k| eig.eigenvalues[k].abs() > NEGLIGIBLE_RATE_REL * max_rate.max(1e-300))
        .map(|k| {
            let op = (1..n).fold(CMatrix::zeros(d, d), |acc, i| {
                acc + &basis[i] * eig.eigenvectors[(i - 1, k)]
            });
            (eig.eigenvalues[k], op)
        })
        .collect();
    channels.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let (rates, operators) = channels.into_iter().unzip();
    Ok(LindbladForm { hamiltonian, rates, operators, kossakowski: c })
}

/// Pauli matrices and the qubit maps used throughout.
pub mod qubit {
    use super::*;

    fn m(entries: [[Complex64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| entries[i][j])
    }

    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn sigma_x() -> CMatrix {
        m([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> CMatrix {
        m([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma_z() -> CMatrix {
        m([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// σ₊ = |0⟩⟨1| with σ_z|0⟩ = |0⟩.
    pub fn sigma_plus() -> CMatrix {
        m([[ZERO, ONE], [ZERO, ZERO]])
    }

    pub fn sigma_minus() -> CMatrix {
        m([[ZERO, ZERO], [ONE, ZERO]])
    }

    /// Jump map with C₁ = σ₋, C₂ = σ₊.
    pub fn e_flip() -> KrausMap {
        KrausMap::new(vec![sigma_minus(), sigma_plus()]).expect("σ₋, σ₊ form a TP Kraus set")
    }

    /// Diagonalization in the σ_z eigenbasis: C₁ = σ₊σ₋, C₂ = σ₋σ₊.
    pub fn e_diag() -> KrausMap {
        KrausMap::new(vec![sigma_plus() * sigma_minus(), sigma_minus() * sigma_plus()])
            .expect("projectors form a TP Kraus set")
    }

    /// Phase flip C = σ_z.
    pub fn e_deph() -> KrausMap {
        KrausMap::new(vec![sigma_z()]).expect("σ_z is unitary")
    }

    /// Amplitude-damping generator σ₋ρσ₊ − ½{σ₊σ₋, ρ}.
    pub fn amplitude_damping() -> SuperOperator {
        SuperOperator::dissipator(&sigma_minus())
    }

    /// Pure dephasing σ_zρσ_z − ρ.
    pub fn dephasing() -> SuperOperator {
        SuperOperator::sandwich(&sigma_z(), &sigma_z()).sub(&SuperOperator::identity(2))
    }
}
