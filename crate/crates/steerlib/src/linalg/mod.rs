//! Dense complex Hermitian linear algebra and the entropic functionals the
//! solvers are built on.
//!
//! Everything here is exact-shape and allocation-simple: matrices are small
//! (dimension a few tens at most), so clarity and determinism win over BLAS.

mod eig;
mod entropy;

pub use eig::{eig_hermitian, EigenDecomposition};
pub use entropy::{
    conditional_mutual_information, entropy_psd, log_frechet_apply, log_frechet_trace,
    relative_entropy, relative_entropy_psd, von_neumann_entropy, RelEntropy,
};

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Relative eigenvalue threshold defining numerical support.
///
/// An eigenvalue is on the support of an operator iff it exceeds
/// `SUPPORT_CUT` times the largest eigenvalue magnitude. All support
/// decisions in the crate go through this one constant.
pub const SUPPORT_CUT: f64 = 1e-10;

/// Hermitian-symmetry admission tolerance (max-entry norm of `M - M†`).
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Natural log of 2; converts nats to bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from a row-major entry list; errors when the shape disagrees.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let aij = self.get(i, j);
                if aij.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, aij * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Max-entry norm of `M - M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// Square complex matrix with Hermitian symmetry, symmetrized on admission.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    mat: ComplexMatrix,
}

impl HermitianOperator {
    /// Admits a matrix as Hermitian. The defect `‖M − M†‖_max` must not
    /// exceed [`HERMITICITY_TOL`]; the stored matrix is `(M + M†)/2`.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if mat.rows() != mat.cols() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let defect = mat.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "matrix is not Hermitian: ‖M − M†‖_max = {defect:.3e}"
            )));
        }
        Ok(Self::symmetrize(mat))
    }

    /// Symmetrizes without a defect check. For internal arithmetic whose
    /// result is Hermitian by construction up to roundoff.
    pub(crate) fn symmetrize(mat: ComplexMatrix) -> Self {
        let dim = mat.rows();
        let sym = ComplexMatrix::from_fn(dim, dim, |i, j| {
            (mat.get(i, j) + mat.get(j, i).conj()) * Complex64::new(0.5, 0.0)
        });
        Self { dim, mat: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, mat: ComplexMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, mat: ComplexMatrix::identity(dim) }
    }

    /// Diagonal operator from real entries.
    pub fn diagonal(entries: &[f64]) -> Self {
        let dim = entries.len();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        Self { dim, mat: m }
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` from a (not necessarily normalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let norm_sqr: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let mat = if norm_sqr == 0.0 {
            ComplexMatrix::zeros(dim, dim)
        } else {
            let inv = 1.0 / norm_sqr;
            ComplexMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj() * inv)
        };
        Self { dim, mat }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.mat.get(i, j)
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { dim: self.dim, mat: self.mat.add(&other.mat) }
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { dim: self.dim, mat: self.mat.sub(&other.mat) }
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        HermitianOperator { dim: self.dim, mat: self.mat.scale(Complex64::new(s, 0.0)) }
    }

    /// `self + t·other`, the workhorse of line searches.
    pub fn axpy(&self, t: f64, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { dim: self.dim, mat: self.mat.add(&other.mat.scale(Complex64::new(t, 0.0))) }
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    /// Real Hilbert–Schmidt inner product `Tr(A B)`.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.get(i, j) * other.get(j, i);
            }
        }
        acc.re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.frobenius_norm()
    }

    /// Conjugation `K self K†` for a (possibly rectangular) Kraus operator.
    pub fn conjugate_by(&self, k: &ComplexMatrix) -> HermitianOperator {
        assert_eq!(k.cols(), self.dim);
        let out = k.matmul(&self.mat).matmul(&k.dagger());
        HermitianOperator::symmetrize(out)
    }

    /// Eigendecomposition via cyclic complex Jacobi rotations.
    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig_hermitian(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Sum of absolute eigenvalues, `‖M‖₁ = Tr √(M†M)` for Hermitian `M`.
    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }

    /// Projection onto the PSD cone by clipping negative eigenvalues.
    pub fn psd_clip(&self) -> HermitianOperator {
        let ed = self.eig().expect("eig convergence on psd_clip");
        let clipped: Vec<f64> = ed.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        ed.reassemble(&clipped)
    }
}

/// Applies a real scalar function to a Hermitian operator through its
/// eigendecomposition: `V f(diag) V†`.
pub fn matrix_function(m: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let ed = m.eig()?;
    let mut vals = Vec::with_capacity(ed.eigenvalues.len());
    for &l in &ed.eigenvalues {
        let y = f(l);
        if !y.is_finite() {
            return Err(Error::FunctionDomain(l));
        }
        vals.push(y);
    }
    Ok(ed.reassemble(&vals))
}

/// Same as [`matrix_function`] but eigenvalues off the numerical support
/// (below [`SUPPORT_CUT`] relative to the largest) map to 0 instead of
/// entering `f`.
pub fn matrix_function_on_support(
    m: &HermitianOperator,
    f: impl Fn(f64) -> f64,
) -> Result<HermitianOperator> {
    let ed = m.eig()?;
    let cut = support_cutoff(&ed.eigenvalues);
    let mut vals = Vec::with_capacity(ed.eigenvalues.len());
    for &l in &ed.eigenvalues {
        if l <= cut {
            vals.push(0.0);
        } else {
            let y = f(l);
            if !y.is_finite() {
                return Err(Error::FunctionDomain(l));
            }
            vals.push(y);
        }
    }
    Ok(ed.reassemble(&vals))
}

/// Absolute cutoff below which eigenvalues count as off-support.
pub(crate) fn support_cutoff(eigenvalues: &[f64]) -> f64 {
    let max_abs = eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    SUPPORT_CUT * max_abs.max(f64::MIN_POSITIVE)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &HermitianOperator) -> f64 {
    let ed = m.eig().expect("eig convergence in trace_norm");
    ed.eigenvalues.iter().map(|l| l.abs()).sum()
}

/// A quantum state: PSD within tolerance and unit trace.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub const MIN_EIG_TOL: f64 = -1e-10;
    pub const TRACE_TOL: f64 = 1e-10;

    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvariantViolation(format!(
                "density operator trace {tr} deviates from 1 by more than {}",
                Self::TRACE_TOL
            )));
        }
        let min_eig = op.min_eigenvalue()?;
        if min_eig < Self::MIN_EIG_TOL {
            return Err(Error::InvariantViolation(format!(
                "density operator has eigenvalue {min_eig:.3e} below tolerance"
            )));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self { op: HermitianOperator::identity(dim).scale(1.0 / dim as f64) }
    }

    /// Pure state from a normalized amplitude vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(HermitianOperator::projector(psi))
    }
}

/// Partial trace over the registers not listed in `keep`.
///
/// `dims` are the tensor factor dimensions in row-major (big-endian) order;
/// `keep` lists register indices to retain, in ascending order.
pub fn partial_trace(
    m: &HermitianOperator,
    dims: &[usize],
    keep: &[usize],
) -> Result<HermitianOperator> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "register dims {:?} multiply to {}, operator has dim {}",
            dims,
            total,
            m.dim()
        )));
    }
    let n = dims.len();
    if keep.iter().any(|&k| k >= n) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "keep set {keep:?} must be strictly ascending register indices below {n}"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let keep_dim: usize = keep.iter().map(|&i| dims[i]).product();
    let trace_dim: usize = traced.iter().map(|&i| dims[i]).product();

    // Strides of each register in the flat index.
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    // Flat offset contributed by a multi-index over a register subset.
    let offset = |regs: &[usize], multi: usize| -> usize {
        let mut rem = multi;
        let mut off = 0;
        for &r in regs.iter().rev() {
            off += (rem % dims[r]) * strides[r];
            rem /= dims[r];
        }
        off
    };

    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for ki in 0..keep_dim {
        let oi = offset(keep, ki);
        for kj in 0..keep_dim {
            let oj = offset(keep, kj);
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..trace_dim {
                let ot = offset(&traced, t);
                acc += m.get(oi + ot, oj + ot);
            }
            out.set(ki, kj, acc);
        }
    }
    Ok(HermitianOperator::symmetrize(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_admission_rejects_skew() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 1, c(0.0, 1.0));
        m.set(1, 0, c(0.0, 1.0)); // conj would be (0,-1): defect 2
        assert!(HermitianOperator::new(m).is_err());
    }

    #[test]
    fn kron_and_trace() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::from_fn(2, 2, |i, j| c((i * 2 + j) as f64, 0.0));
        let k = a.kron(&b);
        assert_eq!(k.rows(), 4);
        assert!((k.trace().re - 2.0 * b.trace().re).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // Tr_A(ρ_A ⊗ ρ_B) = ρ_B
        let rho_a = HermitianOperator::diagonal(&[0.25, 0.75]);
        let rho_b = HermitianOperator::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let joint = HermitianOperator::symmetrize(rho_a.matrix().kron(rho_b.matrix()));
        let back = partial_trace(&joint, &[2, 2], &[1]).unwrap();
        assert!(back.sub(&rho_b).frobenius_norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        // Tr_B of the maximally entangled 2-qubit state is I/2.
        let s = 1.0 / 2f64.sqrt();
        let psi = [c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let bell = HermitianOperator::projector(&psi);
        let red = partial_trace(&bell, &[2, 2], &[0]).unwrap();
        let half = HermitianOperator::identity(2).scale(0.5);
        assert!(red.sub(&half).frobenius_norm() < 1e-12);
    }

    #[test]
    fn partial_trace_full_system() {
        let m = HermitianOperator::diagonal(&[0.5, 0.3, 0.1, 0.1]);
        let t = partial_trace(&m, &[2, 2], &[]).unwrap();
        assert_eq!(t.dim(), 1);
        assert!((t.get(0, 0).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((HermitianOperator::diagonal(&[1.0, -1.0]).trace_norm() - 2.0).abs() < 1e-12);
        assert!(HermitianOperator::zeros(2).trace_norm() < 1e-14);
        assert!((HermitianOperator::diagonal(&[0.5, -0.5]).trace_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_function_log2() {
        let m = HermitianOperator::identity(2);
        let l = matrix_function(&m, f64::log2).unwrap();
        assert!(l.frobenius_norm() < 1e-12);

        let d = HermitianOperator::diagonal(&[4.0, 2.0]);
        let l = matrix_function(&d, f64::log2).unwrap();
        assert!(l.sub(&HermitianOperator::diagonal(&[2.0, 1.0])).frobenius_norm() < 1e-12);

        // Off-support convention: log of diag(1, 0) restricted to support.
        let d = HermitianOperator::diagonal(&[1.0, 0.0]);
        let l = matrix_function_on_support(&d, f64::log2).unwrap();
        assert!(l.frobenius_norm() < 1e-12);

        // Unrestricted log of a singular matrix is a domain error.
        assert!(matrix_function(&d, f64::log2).is_err());
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::new(HermitianOperator::diagonal(&[0.5, 0.5])).is_ok());
        assert!(DensityOperator::new(HermitianOperator::diagonal(&[0.9, 0.2])).is_err());
        assert!(DensityOperator::new(HermitianOperator::diagonal(&[1.1, -0.1])).is_err());
    }
}
