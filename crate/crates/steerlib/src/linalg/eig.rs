//! Cyclic complex Jacobi eigensolver for Hermitian matrices.
//!
//! Chosen for determinism: the rotation order is fixed, so identical input
//! bits give identical output bits on every run.

use super::{ComplexMatrix, HermitianOperator};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Sweep cap; the solver reports non-convergence past this.
const MAX_SWEEPS: usize = 64;

/// Off-diagonal Frobenius norm (relative to ‖M‖_F) at which a sweep pass
/// declares convergence.
const OFF_DIAG_TOL: f64 = 1e-14;

/// Spectral factorization `M = V diag(λ) V†` with ascending eigenvalues and
/// eigenvectors as columns of a unitary.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(vals) V†` for arbitrary replacement values, the building block
    /// of matrix functions.
    pub fn reassemble(&self, vals: &[f64]) -> HermitianOperator {
        let dim = self.eigenvalues.len();
        assert_eq!(vals.len(), dim);
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(dim, dim);
        for k in 0..dim {
            let lk = vals[k];
            if lk == 0.0 {
                continue;
            }
            for i in 0..dim {
                let vik = v.get(i, k);
                if vik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..dim {
                    let add = vik * v.get(j, k).conj() * lk;
                    let cur = out.get(i, j) + add;
                    out.set(i, j, cur);
                }
            }
        }
        HermitianOperator::symmetrize(out)
    }

    /// Frobenius norm of `V diag(λ) V† − M`.
    pub fn reconstruction_residual(&self, m: &HermitianOperator) -> f64 {
        self.reassemble(&self.eigenvalues).sub(m).frobenius_norm()
    }

    /// Frobenius norm of `V†V − I`.
    pub fn unitarity_residual(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = v.dagger().matmul(v);
        g.sub(&ComplexMatrix::identity(v.rows())).frobenius_norm()
    }
}

/// Eigendecomposition of a Hermitian operator by cyclic complex Jacobi
/// rotations with a fixed sweep cap.
pub fn eig_hermitian(m: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut a = m.matrix().clone();
    let mut v = ComplexMatrix::identity(n);

    if n <= 1 {
        return Ok(EigenDecomposition {
            eigenvalues: (0..n).map(|i| a.get(i, i).re).collect(),
            eigenvectors: v,
        });
    }

    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        (2.0 * off).sqrt()
    };
    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        if off_norm(&a) <= OFF_DIAG_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        // The final sweep may have finished the job.
        let last_off = off_norm(&a);
        if last_off > OFF_DIAG_TOL * scale * 10.0 {
            return Err(Error::EigenConvergence { residual: last_off, sweeps: MAX_SWEEPS });
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i).re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors =
        ComplexMatrix::from_fn(n, n, |i, k| v.get(i, pairs[k].1));
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// One complex Jacobi rotation zeroing the (p,q) entry.
///
/// Uses the unitary G with G_pp = c, G_pq = s·e^{iθ}, G_qp = −s·e^{−iθ},
/// G_qq = c for a_pq = r·e^{iθ}, applied as A ← G† A G, V ← V G.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = a.rows();
    let phase = apq / r; // e^{iθ}
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let spe = phase * s; // s·e^{iθ}
    let sme = phase.conj() * s; // s·e^{−iθ}

    // Column update A ← A G.
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * c - akq * sme);
        a.set(k, q, akp * spe + akq * c);
    }
    // Row update A ← G† A.
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, apk * c - aqk * spe);
        a.set(q, k, apk * sme + aqk * c);
    }
    // Clean the rotated 2x2 block against roundoff drift.
    let app_new = a.get(p, p).re;
    let aqq_new = a.get(q, q).re;
    a.set(p, p, Complex64::new(app_new, 0.0));
    a.set(q, q, Complex64::new(aqq_new, 0.0));
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));

    // Accumulate V ← V G.
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * c - vkq * sme);
        v.set(k, q, vkp * spe + vkq * c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_spectrum() {
        let ed = eig_hermitian(&HermitianOperator::identity(2)).unwrap();
        assert!((ed.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((ed.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let ed = eig_hermitian(&HermitianOperator::diagonal(&[2.0, -1.0])).unwrap();
        assert!((ed.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((ed.eigenvalues[1] - 2.0).abs() < 1e-14);
        // Standard basis vectors, up to phase/order.
        assert!((ed.eigenvectors.get(1, 0).norm() - 1.0).abs() < 1e-12);
        assert!((ed.eigenvectors.get(0, 1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = HermitianOperator::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let ed = eig_hermitian(&x).unwrap();
        assert!((ed.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((ed.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_matrix_reconstruction() {
        let m = HermitianOperator::new(
            ComplexMatrix::from_vec(
                3,
                3,
                vec![
                    c(1.0, 0.0),
                    c(0.3, 0.4),
                    c(-0.2, 0.1),
                    c(0.3, -0.4),
                    c(-0.5, 0.0),
                    c(0.6, -0.2),
                    c(-0.2, -0.1),
                    c(0.6, 0.2),
                    c(2.0, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let ed = eig_hermitian(&m).unwrap();
        assert!(ed.reconstruction_residual(&m) <= 1e-9 * m.frobenius_norm().max(1.0));
        assert!(ed.unitarity_residual() <= 1e-10);
        // Ascending order.
        assert!(ed.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn deterministic_output() {
        let m = HermitianOperator::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.2, 0.0), c(0.1, -0.7), c(0.1, 0.7), c(-0.9, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let e1 = eig_hermitian(&m).unwrap();
        let e2 = eig_hermitian(&m).unwrap();
        assert_eq!(e1.eigenvalues, e2.eigenvalues);
        assert_eq!(e1.eigenvectors.entries(), e2.eigenvectors.entries());
    }
}
