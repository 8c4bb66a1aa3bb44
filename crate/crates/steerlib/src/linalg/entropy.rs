//! Entropic functionals: quantum relative entropy, von Neumann entropy,
//! conditional mutual information, and the Fréchet derivative of the
//! operator logarithm used by the gradient-based solvers.
//!
//! All logarithms are base 2; the natural-log conversion lives entirely in
//! the divided-difference kernel `phi`.

use super::{partial_trace, support_cutoff, DensityOperator, HermitianOperator, LN_2};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Quantum relative entropy value. Infinity is a tag, not a float, so
/// comparisons stay explicit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RelEntropy {
    Finite(f64),
    Infinite,
}

impl RelEntropy {
    pub fn is_finite(&self) -> bool {
        matches!(self, RelEntropy::Finite(_))
    }

    /// Finite value, panicking on the infinity tag.
    pub fn value(&self) -> f64 {
        match self {
            RelEntropy::Finite(v) => *v,
            RelEntropy::Infinite => panic!("relative entropy is +infinity"),
        }
    }

    /// Collapses the tag into an IEEE infinity for solver-internal math.
    pub fn to_f64(&self) -> f64 {
        match self {
            RelEntropy::Finite(v) => *v,
            RelEntropy::Infinite => f64::INFINITY,
        }
    }
}

/// Fraction of ρ-mass allowed outside supp(σ) before the value is declared
/// infinite. Matches the trace tolerances used by the assemblage types.
const SUPPORT_LEAK_TOL: f64 = 1e-9;

/// `Tr ρ (log₂ ρ − log₂ σ)` for PSD (possibly subnormalized) operators,
/// with logarithms on supports. Returns `Infinite` when the support of
/// `rho` leaks outside the support of `sigma`.
///
/// For subnormalized inputs the value may legitimately be negative; the
/// normalized wrapper [`relative_entropy`] clamps tiny negatives instead.
pub fn relative_entropy_psd(rho: &HermitianOperator, sigma: &HermitianOperator) -> RelEntropy {
    assert_eq!(rho.dim(), sigma.dim(), "relative entropy needs equal dims");
    let er = rho.eig().expect("eig convergence on rho");
    let es = sigma.eig().expect("eig convergence on sigma");
    let cut_r = support_cutoff(&er.eigenvalues);
    let cut_s = support_cutoff(&es.eigenvalues);
    let dim = rho.dim();

    // Overlap matrix W[j][i] = ⟨v_j | u_i⟩ between σ- and ρ-eigenbases.
    let u = &er.eigenvectors;
    let v = &es.eigenvectors;
    let w = v.dagger().matmul(u);

    let mut term_rho = 0.0;
    let mut term_sigma = 0.0;
    let mut leak = 0.0;
    for i in 0..dim {
        let p = er.eigenvalues[i];
        if p <= cut_r {
            continue;
        }
        term_rho += p * p.log2();
        for j in 0..dim {
            let q = es.eigenvalues[j];
            let ov = w.get(j, i).norm_sqr();
            if q <= cut_s {
                leak += p * ov;
            } else {
                term_sigma += p * ov * q.log2();
            }
        }
    }
    if leak > SUPPORT_LEAK_TOL {
        return RelEntropy::Infinite;
    }
    RelEntropy::Finite(term_rho - term_sigma)
}

/// Quantum relative entropy `D(ρ‖σ)` of two states, in bits.
///
/// Finite exactly when supp(ρ) ⊆ supp(σ) at the numerical support cut;
/// never negative (values inside −1e-9 round to 0).
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<RelEntropy> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    Ok(match relative_entropy_psd(rho.op(), sigma.op()) {
        RelEntropy::Infinite => RelEntropy::Infinite,
        RelEntropy::Finite(v) => {
            debug_assert!(v > -1e-9, "Klein inequality violated beyond slack: {v}");
            RelEntropy::Finite(v.max(0.0))
        }
    })
}

/// `−Tr κ log₂ κ` over retained eigenvalues, for PSD possibly-subnormalized
/// operators (the blockwise building block of classical–quantum entropies).
pub fn entropy_psd(kappa: &HermitianOperator) -> f64 {
    let ed = kappa.eig().expect("eig convergence in entropy");
    let cut = support_cutoff(&ed.eigenvalues);
    let mut h = 0.0;
    for &l in &ed.eigenvalues {
        if l > cut {
            h -= l * l.log2();
        }
    }
    h
}

/// Von Neumann entropy `H(ρ) = −Tr ρ log₂ ρ` in bits, clamped to `[0, log₂ d]`
/// against roundoff.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_psd(rho.op()).max(0.0)
}

/// Conditional mutual information `I(K;L|M) = H(KM) + H(LM) − H(M) − H(KLM)`
/// of a tripartite state with registers ordered (K, L, M), in bits.
pub fn conditional_mutual_information(
    rho: &DensityOperator,
    dims: (usize, usize, usize),
) -> Result<f64> {
    let (dk, dl, dm) = dims;
    if dk * dl * dm != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "register dims {}x{}x{} do not factor operator dim {}",
            dk,
            dl,
            dm,
            rho.dim()
        )));
    }
    let all = &[dk, dl, dm][..];
    let h_km = entropy_psd(&partial_trace(rho.op(), all, &[0, 2])?);
    let h_lm = entropy_psd(&partial_trace(rho.op(), all, &[1, 2])?);
    let h_m = entropy_psd(&partial_trace(rho.op(), all, &[2])?);
    let h_klm = entropy_psd(rho.op());
    let i = h_km + h_lm - h_m - h_klm;
    debug_assert!(i > -1e-9, "CMI strong subadditivity violated beyond slack: {i}");
    Ok(i.max(0.0))
}

/// Divided-difference kernel of the natural logarithm.
#[inline]
fn phi(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= 1e-9 * a.max(b) {
        2.0 / (a + b)
    } else {
        ((a / b).ln()) / (a - b)
    }
}

/// Fréchet derivative of the operator base-2 logarithm at `sigma` applied to
/// a Hermitian direction `h`:
/// `D log₂(σ)[h] = V (Ṽh ∘ Φ) V† / ln 2` with `Φ_ij = φ(λ_i, λ_j)` in σ's
/// eigenbasis.
///
/// Requires `sigma` PSD and `supp(h) ⊆ supp(sigma)`; components of `h`
/// coupling to the σ-kernel are dropped (they must be numerically zero).
pub fn log_frechet_apply(
    sigma: &HermitianOperator,
    h: &HermitianOperator,
) -> Result<HermitianOperator> {
    if sigma.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "log Fréchet derivative between dims {} and {}",
            sigma.dim(),
            h.dim()
        )));
    }
    let ed = sigma.eig()?;
    let cut = support_cutoff(&ed.eigenvalues);
    if ed.eigenvalues[0] < -cut.max(1e-12) {
        return Err(Error::SupportViolation(format!(
            "sigma has negative eigenvalue {:.3e}",
            ed.eigenvalues[0]
        )));
    }
    let dim = sigma.dim();
    let v = &ed.eigenvectors;
    let ht = v.dagger().matmul(h.matrix()).matmul(v);
    let mut out = super::ComplexMatrix::zeros(dim, dim);
    let inv_ln2 = 1.0 / LN_2;
    for i in 0..dim {
        let li = ed.eigenvalues[i];
        for j in 0..dim {
            let lj = ed.eigenvalues[j];
            if li <= cut || lj <= cut {
                continue; // off-support coupling; precondition says it is ~0
            }
            out.set(i, j, ht.get(i, j) * Complex64::new(phi(li, lj) * inv_ln2, 0.0));
        }
    }
    let back = v.matmul(&out).matmul(&v.dagger());
    Ok(HermitianOperator::symmetrize(back))
}

/// `Tr[t · D log₂(σ)[d]]` without materializing the derivative, used by
/// line searches. Same support conventions as [`log_frechet_apply`].
pub fn log_frechet_trace(
    sigma: &HermitianOperator,
    t: &HermitianOperator,
    d: &HermitianOperator,
) -> f64 {
    let ed = sigma.eig().expect("eig convergence in log_frechet_trace");
    let cut = support_cutoff(&ed.eigenvalues);
    let dim = sigma.dim();
    let v = &ed.eigenvectors;
    let tt = v.dagger().matmul(t.matrix()).matmul(v);
    let dt = v.dagger().matmul(d.matrix()).matmul(v);
    let inv_ln2 = 1.0 / LN_2;
    let mut acc = 0.0;
    for i in 0..dim {
        let li = ed.eigenvalues[i];
        if li <= cut {
            continue;
        }
        for j in 0..dim {
            let lj = ed.eigenvalues[j];
            if lj <= cut {
                continue;
            }
            // Tr[T (D∘Φ)] = Σ_ij T_ij D_ji Φ_ji
            acc += (tt.get(i, j) * dt.get(j, i)).re * phi(lj, li) * inv_ln2;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matrix_function, ComplexMatrix};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn state_diag(entries: &[f64]) -> DensityOperator {
        DensityOperator::new(HermitianOperator::diagonal(entries)).unwrap()
    }

    #[test]
    fn relative_entropy_of_state_with_itself_is_zero() {
        let rho = state_diag(&[0.7, 0.3]);
        let d = relative_entropy(&rho, &rho).unwrap();
        assert!(d.is_finite());
        assert!(d.value().abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_pure_vs_mixed_is_one_bit() {
        let rho = state_diag(&[1.0, 0.0]);
        let sigma = state_diag(&[0.5, 0.5]);
        let d = relative_entropy(&rho, &sigma).unwrap();
        assert!((d.value() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_support_violation_is_infinite() {
        let rho = state_diag(&[1.0, 0.0]);
        let sigma = state_diag(&[0.0, 1.0]);
        assert_eq!(relative_entropy(&rho, &sigma).unwrap(), RelEntropy::Infinite);
    }

    #[test]
    fn entropy_examples() {
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        assert!(von_neumann_entropy(&state_diag(&[1.0, 0.0])).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(4)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cmi_product_state_is_zero() {
        // κ_K ⊗ κ_L ⊗ κ_M with nontrivial marginals.
        let k = HermitianOperator::diagonal(&[0.6, 0.4]);
        let l = HermitianOperator::diagonal(&[0.3, 0.7]);
        let m = HermitianOperator::diagonal(&[0.5, 0.5]);
        let joint = HermitianOperator::symmetrize(k.matrix().kron(&l.matrix().kron(m.matrix())));
        let rho = DensityOperator::new(joint).unwrap();
        let i = conditional_mutual_information(&rho, (2, 2, 2)).unwrap();
        assert!(i.abs() < 1e-10);
    }

    #[test]
    fn cmi_classical_copy_is_one_bit() {
        // Maximally correlated classical KL, trivial M.
        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(0, 0, c(0.5, 0.0));
        m.set(3, 3, c(0.5, 0.0));
        let rho = DensityOperator::new(HermitianOperator::new(m).unwrap()).unwrap();
        let i = conditional_mutual_information(&rho, (2, 2, 1)).unwrap();
        assert!((i - 1.0).abs() < 1e-10);
    }

    #[test]
    fn log_frechet_identity_base_point() {
        // σ = I ⇒ φ ≡ 1 and the derivative is h / ln 2.
        let h = HermitianOperator::new(
            ComplexMatrix::from_vec(2, 2, vec![c(0.2, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(-0.4, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let d = log_frechet_apply(&HermitianOperator::identity(2), &h).unwrap();
        assert!(d.sub(&h.scale(1.0 / LN_2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn log_frechet_scaled_identity() {
        let sigma = HermitianOperator::diagonal(&[2.0, 2.0]);
        let h = HermitianOperator::diagonal(&[1.0, 0.0]);
        let d = log_frechet_apply(&sigma, &h).unwrap();
        let expect = HermitianOperator::diagonal(&[1.0 / (2.0 * LN_2), 0.0]);
        assert!(d.sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn log_frechet_matches_finite_differences() {
        let sigma = HermitianOperator::new(
            ComplexMatrix::from_vec(
                3,
                3,
                vec![
                    c(1.0, 0.0),
                    c(0.2, 0.1),
                    c(0.0, -0.1),
                    c(0.2, -0.1),
                    c(0.8, 0.0),
                    c(0.1, 0.2),
                    c(0.0, 0.1),
                    c(0.1, -0.2),
                    c(1.3, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let h = HermitianOperator::new(
            ComplexMatrix::from_vec(
                3,
                3,
                vec![
                    c(0.3, 0.0),
                    c(-0.1, 0.2),
                    c(0.2, 0.0),
                    c(-0.1, -0.2),
                    c(0.0, 0.0),
                    c(0.1, -0.1),
                    c(0.2, 0.0),
                    c(0.1, 0.1),
                    c(-0.2, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let analytic = log_frechet_apply(&sigma, &h).unwrap();
        let eps = 1e-5;
        let plus = matrix_function(&sigma.axpy(eps, &h), f64::log2).unwrap();
        let minus = matrix_function(&sigma.axpy(-eps, &h), f64::log2).unwrap();
        let fd = plus.sub(&minus).scale(1.0 / (2.0 * eps));
        let err = analytic.sub(&fd).frobenius_norm();
        assert!(err < 1e-6 * h.frobenius_norm().max(1.0), "fd mismatch {err:.3e}");
    }

    #[test]
    fn log_frechet_trace_agrees_with_apply() {
        let sigma = HermitianOperator::diagonal(&[0.9, 0.4, 1.7]);
        let t = HermitianOperator::diagonal(&[0.2, 0.5, 0.3]);
        let d = HermitianOperator::new(
            ComplexMatrix::from_vec(
                3,
                3,
                vec![
                    c(0.1, 0.0),
                    c(0.0, 0.2),
                    c(0.0, 0.0),
                    c(0.0, -0.2),
                    c(-0.3, 0.0),
                    c(0.1, 0.0),
                    c(0.0, 0.0),
                    c(0.1, 0.0),
                    c(0.2, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let via_apply = log_frechet_apply(&sigma, &d).unwrap().inner(&t);
        let direct = log_frechet_trace(&sigma, &t, &d);
        assert!((via_apply - direct).abs() < 1e-12);
    }
}
