//! Random-instance generation and the theorem-by-theorem property suite.
//!
//! Trials are independent with per-trial derived RNG streams, so the suite
//! is reproducible bit-for-bit regardless of thread count; the report merge
//! uses fixed trial indexing.

use crate::assemblage::{
    Assemblage, Instrument, MeasurementStrategy, Povm, ProbabilityVector, RestrictedOneWayLocc,
};
use crate::error::{Error, Result};
use crate::lhs::{
    lhs_feasibility_with, InnerProblem, LhsModel, SolverConfig,
};
use crate::linalg::{
    matrix_function_on_support, relative_entropy, relative_entropy_psd, ComplexMatrix,
    DensityOperator, HermitianOperator, RelEntropy, LN_2,
};
use crate::quantifiers::{
    g_eps, restricted_res_with, restricted_trace_distance, restricted_upper_bound,
    trace_distance_lower_bound,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

/// Deterministic splittable counter-based generator (SplitMix64 core):
/// the state advances by a fixed odd constant and the output is a bijective
/// mix of it, so identical seeds give identical streams on every platform.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
    gauss_spare: Option<f64>,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, gauss_spare: None }
    }

    /// Independent child stream derived from the parent's counter.
    pub fn split(&mut self) -> Rng {
        let s = self.next_u64();
        Rng::new(mix(s ^ 0x5851_F42D_4C95_7F2D))
    }

    /// Stream for a fixed (label, index) pair, independent of call order.
    pub fn for_index(seed: u64, label: u64, index: u64) -> Rng {
        Rng::new(mix(mix(seed ^ mix(label)) ^ index.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_range(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n
    }

    /// Standard normal via Box–Muller with a cached spare.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        let u1 = (1.0 - self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.gauss_spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn next_complex_gaussian(&mut self) -> Complex64 {
        Complex64::new(self.next_gaussian(), self.next_gaussian()) * (0.5f64).sqrt()
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.next_complex_gaussian())
}

/// Haar-like random state: `ρ = GG†/Tr(GG†)` for a Gaussian `dim×rank` factor.
pub fn random_density(dim: usize, rank: usize, rng: &mut Rng) -> DensityOperator {
    assert!(rank >= 1 && rank <= dim, "rank must be in 1..=dim");
    let g = gaussian_matrix(dim, rank, rng);
    let gg = HermitianOperator::symmetrize(g.matmul(&g.dagger()));
    let tr = gg.trace();
    DensityOperator::new(gg.scale(1.0 / tr)).expect("Gaussian factor state is valid")
}

/// Random Hermitian with Gaussian entries (not PSD), for eigensolver tests.
pub fn random_hermitian(dim: usize, rng: &mut Rng) -> HermitianOperator {
    HermitianOperator::symmetrize(gaussian_matrix(dim, dim, rng))
}

/// Random POVM: Gaussian Gram factors normalized by the inverse square root
/// of their sum, `Λ_a = S^{-1/2} G_a G_a† S^{-1/2}`.
pub fn random_povm(dim: usize, n_outcomes: usize, rng: &mut Rng) -> Povm {
    let raw: Vec<HermitianOperator> = (0..n_outcomes)
        .map(|_| {
            let g = gaussian_matrix(dim, dim, rng);
            HermitianOperator::symmetrize(g.matmul(&g.dagger()))
        })
        .collect();
    let mut s = HermitianOperator::zeros(dim);
    for e in &raw {
        s = s.add(e);
    }
    let s_inv_sqrt = matrix_function_on_support(&s, |l| 1.0 / l.sqrt())
        .expect("sum of Gaussian Grams is positive definite");
    let elements = raw
        .iter()
        .map(|e| {
            HermitianOperator::symmetrize(
                s_inv_sqrt.matrix().matmul(e.matrix()).matmul(s_inv_sqrt.matrix()),
            )
        })
        .collect();
    Povm::new(elements).expect("normalized Gram factors form a POVM")
}

/// Random isometry (`rows ≥ cols`) via the polar factor of a Gaussian matrix.
fn random_isometry(rows: usize, cols: usize, rng: &mut Rng) -> ComplexMatrix {
    assert!(rows >= cols);
    let g = gaussian_matrix(rows, cols, rng);
    let gram = HermitianOperator::symmetrize(g.dagger().matmul(&g));
    let inv_sqrt = matrix_function_on_support(&gram, |l| 1.0 / l.sqrt())
        .expect("Gaussian Gram is positive definite");
    g.matmul(inv_sqrt.matrix())
}

/// Random instrument: a random isometry `B → Z ⊗ B'` split into branches,
/// one Kraus operator per branch.
pub fn random_instrument(
    dim_in: usize,
    dim_out: usize,
    n_branches: usize,
    rng: &mut Rng,
) -> Instrument {
    assert!(n_branches * dim_out >= dim_in, "instrument needs an isometry target");
    let v = random_isometry(n_branches * dim_out, dim_in, rng);
    let branches = (0..n_branches)
        .map(|z| {
            let k = ComplexMatrix::from_fn(dim_out, dim_in, |r, c| v.get(z * dim_out + r, c));
            vec![k]
        })
        .collect();
    Instrument::new(branches, dim_in, dim_out).expect("isometry split is an instrument")
}

/// Random assemblage from a Haar-like state on `A ⊗ B` (with `|A|`-dim
/// Alice side) measured by random POVMs.
pub fn random_assemblage(
    n_inputs: usize,
    n_outcomes: usize,
    dim_b: usize,
    rng: &mut Rng,
) -> Assemblage {
    let dim_a = n_outcomes.max(2);
    let rho = random_density(dim_a * dim_b, dim_a * dim_b, rng);
    let povms: Vec<Povm> = (0..n_inputs).map(|_| random_povm(dim_a, n_outcomes, rng)).collect();
    Assemblage::from_state(&rho, (dim_a, dim_b), &povms).expect("measured state is an assemblage")
}

/// Random LHS model with full-support strategy states and Dirichlet weights.
pub fn random_lhs_model(
    n_inputs: usize,
    n_outcomes: usize,
    dim_b: usize,
    rng: &mut Rng,
) -> LhsModel {
    let n = n_outcomes.pow(n_inputs as u32);
    let mut weights: Vec<f64> = (0..n).map(|_| -rng.next_f64().max(1e-12).ln()).collect();
    let z: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= z;
    }
    let states = weights
        .iter()
        .map(|&w| random_density(dim_b, dim_b, rng).into_op().scale(w))
        .collect();
    LhsModel::new(n_inputs, n_outcomes, states).expect("weighted states form a model")
}

fn random_distribution(n: usize, rng: &mut Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -rng.next_f64().max(1e-12).ln()).collect();
    let z: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= z;
    }
    v
}

/// Random restricted 1W-LOCC operation for a given initial shape.
pub fn random_restricted_op(
    shape: (usize, usize, usize, usize),
    dim_in: usize,
    dim_out: usize,
    n_branches: usize,
    rng: &mut Rng,
) -> RestrictedOneWayLocc {
    let (n_x, n_a, n_xf, n_af) = shape;
    let p_x: Vec<Vec<f64>> = (0..n_xf).map(|_| random_distribution(n_x, rng)).collect();
    let mut p_af = Vec::with_capacity(n_a * n_x * n_xf * n_branches * n_af);
    for _ in 0..n_a * n_x * n_xf * n_branches {
        p_af.extend(random_distribution(n_af, rng));
    }
    let instrument = random_instrument(dim_in, dim_out, n_branches, rng);
    RestrictedOneWayLocc::new(p_x, p_af, instrument, shape)
        .expect("random conditionals form a restricted operation")
}

/// Random 1W-LOCC measurement strategy.
pub fn random_strategy(
    n_inputs: usize,
    dim_b: usize,
    dim_out: usize,
    n_branches: usize,
    rng: &mut Rng,
) -> MeasurementStrategy {
    let p = (0..n_branches).map(|_| random_distribution(n_inputs, rng)).collect();
    let instrument = random_instrument(dim_b, dim_out, n_branches, rng);
    MeasurementStrategy::new(p, instrument).expect("random rows are stochastic")
}

/// Werner-family assemblage: `η|ψ⁻⟩⟨ψ⁻| + (1−η)I/4` measured with Z and X
/// on Alice's qubit. Unsteerable for `η ≤ 1/√2` under these two
/// measurements.
pub fn werner_assemblage(visibility: f64) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidParameter(format!(
            "Werner visibility must be in [0,1], got {visibility}"
        )));
    }
    let s = 1.0 / 2f64.sqrt();
    let singlet = HermitianOperator::projector(&[
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(0.0, 0.0),
    ]);
    let noise = HermitianOperator::identity(4).scale(0.25);
    let rho = DensityOperator::new(
        singlet.scale(visibility).add(&noise.scale(1.0 - visibility)),
    )?;
    let z = Povm::projective(&[
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ])?;
    let x = Povm::projective(&[
        vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        vec![Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
    ])?;
    Assemblage::from_state(&rho, (2, 2), &[z, x])
}

/// Suite configuration: base per-property trial count and master seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { trials: 20, seed: 1 }
    }
}

/// Per-property outcome. `worst_margin` is the smallest signed slack over
/// the trials: nonnegative margins pass, so near-violations stay visible.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
    #[serde(skip)]
    pub runtime: Duration,
}

/// Machine-readable suite outcome. The serialized form omits runtimes so
/// reports are byte-identical for identical (config, seed); timings go to
/// the diagnostics channel instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.failures == 0)
    }

    pub fn total_failures(&self) -> usize {
        self.properties.iter().map(|p| p.failures).sum()
    }
}

/// Desk-scale shapes cycled by the generators.
fn desk_shape(i: usize) -> (usize, usize, usize) {
    match i % 6 {
        0 | 1 => (2, 2, 2),
        2 => (3, 2, 2),
        3 => (2, 3, 2),
        4 => (2, 2, 3),
        _ => (3, 3, 2),
    }
}

fn run_property(
    name: &str,
    label: u64,
    seed: u64,
    trials: usize,
    body: impl Fn(usize, &mut Rng) -> Result<f64> + Sync,
) -> PropertyReport {
    let start = Instant::now();
    let margins: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Rng::for_index(seed, label, t as u64);
            body(t, &mut rng).unwrap_or(f64::NEG_INFINITY)
        })
        .collect();
    let failures = margins.iter().filter(|&&m| !(m >= 0.0)).count();
    let worst_margin = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    PropertyReport {
        name: name.to_string(),
        trials,
        failures,
        worst_margin: if trials == 0 { 0.0 } else { worst_margin },
        runtime: start.elapsed(),
    }
}

/// Runs every module's invariant-and-property entry at the configured trial
/// counts and returns the merged report. Failures are data, not errors.
pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    init_thread_pool();
    let seed = config.seed;
    let n = config.trials;
    // Solver-heavy properties run a fraction of the base count.
    let nh = if n == 0 { 0 } else { (n / 4).max(1) };
    let fast_cfg = suite_solver_config();

    let mut properties = Vec::new();

    // linalg: eigendecomposition residuals on random Hermitian inputs.
    properties.push(run_property("linalg/eig-reconstruction", 1, seed, n, |t, rng| {
        let dim = 2 + t % 7;
        let m = random_hermitian(dim, rng);
        let ed = m.eig()?;
        let recon = 1e-9 * m.frobenius_norm().max(1e-12) - ed.reconstruction_residual(&m);
        let unit = 1e-10 - ed.unitarity_residual();
        Ok(recon.min(unit))
    }));

    // linalg: Klein inequality, with exact-equality spot checks.
    properties.push(run_property("linalg/klein-inequality", 2, seed, n, |t, rng| {
        let dim = 2 + t % 3;
        let rho = random_density(dim, dim, rng);
        let sigma = if t % 3 == 0 { rho.clone() } else { random_density(dim, dim, rng) };
        let d = match relative_entropy(&rho, &sigma)? {
            RelEntropy::Finite(v) => v,
            RelEntropy::Infinite => return Ok(f64::NEG_INFINITY),
        };
        let tn = rho.op().sub(sigma.op()).trace_norm();
        if tn <= 1e-6 {
            Ok(1e-6 - d)
        } else {
            Ok(d)
        }
    }));

    // linalg: data processing under partial trace.
    properties.push(run_property("linalg/data-processing", 3, seed, n, |_, rng| {
        let rho = random_density(4, 4, rng);
        let sigma = random_density(4, 4, rng);
        let d_ab = relative_entropy(&rho, &sigma)?.to_f64();
        let rho_b = crate::linalg::partial_trace(rho.op(), &[2, 2], &[1])?;
        let sigma_b = crate::linalg::partial_trace(sigma.op(), &[2, 2], &[1])?;
        let d_b = relative_entropy_psd(&rho_b, &sigma_b).to_f64();
        Ok(d_ab - d_b + 1e-8)
    }));

    // linalg: block decomposition of relative entropy on cq pairs.
    properties.push(run_property("linalg/block-property", 4, seed, n, |t, rng| {
        let n_blocks = 2 + t % 2;
        let d = 2;
        let r = random_distribution(n_blocks, rng);
        let s = random_distribution(n_blocks, rng);
        let mut full1 = ComplexMatrix::zeros(n_blocks * d, n_blocks * d);
        let mut full2 = ComplexMatrix::zeros(n_blocks * d, n_blocks * d);
        let mut rhs = 0.0;
        for x in 0..n_blocks {
            let lam = random_density(d, d, rng);
            let mu = random_density(d, d, rng);
            rhs += r[x] * relative_entropy(&lam, &mu)?.to_f64();
            for i in 0..d {
                for j in 0..d {
                    full1.set(x * d + i, x * d + j, lam.op().get(i, j) * r[x]);
                    full2.set(x * d + i, x * d + j, mu.op().get(i, j) * s[x]);
                }
            }
        }
        for x in 0..n_blocks {
            rhs += r[x] * (r[x] / s[x]).log2();
        }
        let d1 = DensityOperator::new(HermitianOperator::symmetrize(full1))?;
        let d2 = DensityOperator::new(HermitianOperator::symmetrize(full2))?;
        let lhs_val = relative_entropy(&d1, &d2)?.to_f64();
        Ok(1e-8 - (lhs_val - rhs).abs())
    }));

    // linalg: Fréchet derivative of the log against central differences.
    properties.push(run_property("linalg/frechet-finite-diff", 5, seed, n, |t, rng| {
        let dim = 2 + t % 2;
        let base = random_density(dim, dim, rng).into_op();
        let sigma = base.scale(0.8).add(&HermitianOperator::identity(dim).scale(0.2 / dim as f64));
        let h = random_hermitian(dim, rng);
        let analytic = crate::linalg::log_frechet_apply(&sigma, &h)?;
        let eps = 1e-5;
        let plus = crate::linalg::matrix_function(&sigma.axpy(eps, &h), f64::log2)?;
        let minus = crate::linalg::matrix_function(&sigma.axpy(-eps, &h), f64::log2)?;
        let fd = plus.sub(&minus).scale(1.0 / (2.0 * eps));
        let rel = analytic.sub(&fd).frobenius_norm() / analytic.frobenius_norm().max(1e-12);
        Ok(1e-4 - rel)
    }));

    // assemblage: restricted operations preserve the type invariants.
    properties.push(run_property("assemblage/restricted-op-invariants", 6, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let op = random_restricted_op((nx, na, 2, 2), db, 2, 2, rng);
        let out = asm.apply_restricted_1wlocc(&op)?;
        out.validate()?;
        Ok(0.0)
    }));

    // assemblage: identity strategy reproduces the plain embedding.
    properties.push(run_property("assemblage/identity-strategy-embed", 7, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let p = ProbabilityVector::new(random_distribution(nx, rng))?;
        let cq1 = asm.embed_cq(&p)?;
        let strat = MeasurementStrategy::trivial(&p, db);
        let cq2 = asm.apply_measurement_strategy(&strat)?;
        let mut worst: f64 = 0.0;
        for x in 0..nx {
            for a in 0..na {
                worst = worst
                    .max(cq1.block(&[x, a]).sub(cq2.block(&[x, a, 0])).matrix().max_abs());
            }
        }
        Ok(-worst)
    }));

    // assemblage: measured states satisfy no-signaling analytically.
    properties.push(run_property("assemblage/from-state-no-signaling", 8, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let mut worst: f64 = 0.0;
        for x in 1..nx {
            let mut diff = HermitianOperator::zeros(db);
            for a in 0..na {
                diff = diff.add(&asm.element(x, a).sub(asm.element(0, a)));
            }
            worst = worst.max(diff.trace_norm());
        }
        Ok(1e-12 - worst)
    }));

    // assemblage: sequential restricted ops equal their explicit composite.
    properties.push(run_property("assemblage/composition", 9, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let op1 = random_restricted_op((nx, na, 2, 2), db, 2, 2, rng);
        let op2 = random_restricted_op((2, 2, 2, 2), 2, 2, 2, rng);
        let seq = asm.apply_restricted_1wlocc(&op1)?.apply_restricted_1wlocc(&op2)?;
        let composite = asm.apply_restricted_1wlocc(&op1.compose(&op2)?)?;
        let mut worst: f64 = 0.0;
        for (e1, e2) in seq.elements().iter().zip(composite.elements()) {
            worst = worst.max(e1.sub(e2).matrix().max_abs());
        }
        Ok(1e-10 - worst)
    }));

    // lhs: Frank–Wolfe descent is monotone along sampled iterates.
    properties.push(run_property("lhs/monotone-descent", 10, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let mut cfg = suite_solver_config();
        cfg.record_snapshots = true;
        let p = ProbabilityVector::uniform(nx);
        let res = crate::lhs::inner_inf_relative_entropy_with(&asm, &p, &cfg, None)?;
        let mut margin = f64::INFINITY;
        for w in res.snapshots.windows(2) {
            margin = margin.min(w[0].value - w[1].value + 1e-12);
        }
        Ok(margin.min(1.0))
    }));

    // lhs: the certified lower bound never exceeds any feasible objective.
    properties.push(run_property("lhs/certificate-soundness", 11, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let cfg = suite_solver_config();
        let p = ProbabilityVector::uniform(nx);
        let res = crate::lhs::inner_inf_relative_entropy_with(&asm, &p, &cfg, None)?;
        let lower = res.lower_bound();
        let problem = InnerProblem::from_assemblage(&asm, &cfg)?;
        let mut margin = f64::INFINITY;
        for _ in 0..20 {
            let m = random_lhs_model(nx, na, db, rng);
            let d = problem.per_x_divergence(m.states());
            let f: f64 = d.iter().map(|v| v / nx as f64).sum();
            margin = margin.min(f - lower + 1e-9);
        }
        Ok(margin)
    }));

    // lhs: inner value vanishes on constructed LHS assemblages.
    properties.push(run_property("lhs/zero-on-lhs", 12, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let model = random_lhs_model(nx, na, db, rng);
        let asm = model.to_assemblage()?;
        let cfg = suite_solver_config();
        let feas = lhs_feasibility_with(&asm, &cfg)?;
        if !feas.feasible() || feas.residual > 1e-8 {
            return Ok(f64::NEG_INFINITY);
        }
        let p = ProbabilityVector::uniform(nx);
        let res = crate::lhs::inner_inf_relative_entropy_with(&asm, &p, &cfg, None)?;
        Ok(1e-5 - res.value)
    }));

    // lhs: pointwise quantum Pinsker at sampled solver iterates.
    properties.push(run_property("lhs/pinsker-pointwise", 13, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let mut cfg = suite_solver_config();
        cfg.record_snapshots = true;
        let p = ProbabilityVector::uniform(nx);
        let res = crate::lhs::inner_inf_relative_entropy_with(&asm, &p, &cfg, None)?;
        let mut margin = f64::INFINITY;
        for s in &res.snapshots {
            margin = margin.min(s.value - s.trace_norm_diff.powi(2) / (2.0 * LN_2) + 1e-8);
        }
        Ok(margin.min(1.0))
    }));

    // lhs: uniform outcome relabeling leaves the inner value invariant.
    properties.push(run_property("lhs/relabel-symmetry", 14, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        // Cyclic shift of outcomes, uniform across inputs.
        let shift = 1 + rng.next_range(na.max(2) - 1);
        let elements = (0..nx)
            .flat_map(|x| {
                (0..na).map(move |a| (x, a))
            })
            .map(|(x, a)| asm.element(x, (a + shift) % na).clone())
            .collect();
        let relabeled = Assemblage::new(nx, na, db, elements)?;
        let cfg = suite_solver_config();
        let p = ProbabilityVector::uniform(nx);
        let v1 = crate::lhs::inner_inf_relative_entropy_with(&asm, &p, &cfg, None)?.value;
        let v2 = crate::lhs::inner_inf_relative_entropy_with(&relabeled, &p, &cfg, None)?.value;
        Ok(2.0 * cfg.inner_tol - (v1 - v2).abs())
    }));

    // quantifiers: sup–inf and inf–sup brackets agree (minimax exchange).
    properties.push(run_property("quantifiers/minimax-brackets", 15, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let r1 = restricted_res_with(&asm, &fast_cfg)?;
        let r2 = crate::quantifiers::restricted_res_exchanged_with(&asm, &fast_cfg)?;
        Ok((r2.hi + 2e-3 - r1.lo).min(r1.hi + 2e-3 - r2.lo))
    }));

    // quantifiers: steering bracket sits under the entropic bound chain.
    properties.push(run_property("quantifiers/bound-chain", 16, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let r = restricted_res_with(&asm, &fast_cfg)?;
        let chain = restricted_upper_bound(&asm)?;
        let m1 = chain.tightest() + 1e-6 - r.hi;
        let m2 = chain.entropy_layer + 1e-9 - chain.cmi_layer;
        let m3 = chain.dimension_layer + 1e-9 - chain.entropy_layer;
        Ok(m1.min(m2).min(m3))
    }));

    // quantifiers: restricted trace distance is a metric.
    properties.push(run_property("quantifiers/distance-metric", 17, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let a1 = random_assemblage(nx, na, db, rng);
        let a2 = random_assemblage(nx, na, db, rng);
        let a3 = random_assemblage(nx, na, db, rng);
        let d12 = restricted_trace_distance(&a1, &a2)?;
        let d21 = restricted_trace_distance(&a2, &a1)?;
        let d13 = restricted_trace_distance(&a1, &a3)?;
        let d32 = restricted_trace_distance(&a3, &a2)?;
        let self_d = restricted_trace_distance(&a1, &a1)?;
        let mut margin = d12; // nonnegativity
        margin = margin.min(1e-9 - self_d); // identity of indiscernibles
        margin = margin.min(if d12 == d21 { 0.0 } else { -1.0 }); // symmetry, exact
        margin = margin.min(d13 + d32 - d12 + 1e-9); // triangle
        // Same axioms for the strategy lower-bound functional.
        let l12 = trace_distance_lower_bound(&a1, &a2, &[])?;
        let l21 = trace_distance_lower_bound(&a2, &a1, &[])?;
        margin = margin.min(if l12 == l21 { 0.0 } else { -1.0 });
        let l13 = trace_distance_lower_bound(&a1, &a3, &[])?;
        let l32 = trace_distance_lower_bound(&a3, &a2, &[])?;
        margin = margin.min(l13 + l32 - l12 + 1e-9);
        Ok(margin)
    }));

    // quantifiers: convexity in the sound bracket form.
    properties.push(run_property("quantifiers/convexity", 18, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let a1 = random_assemblage(nx, na, db, rng);
        let a2 = random_assemblage(nx, na, db, rng);
        let r1 = restricted_res_with(&a1, &fast_cfg)?;
        let r2 = restricted_res_with(&a2, &fast_cfg)?;
        let mut margin = f64::INFINITY;
        for &lam in &[0.25, 0.5, 0.75] {
            let mix = a1.mix(&a2, lam)?;
            let rm = restricted_res_with(&mix, &fast_cfg)?;
            margin = margin.min(lam * r1.hi + (1.0 - lam) * r2.hi + 1e-3 - rm.lo);
        }
        Ok(margin)
    }));

    // quantifiers: restricted 1W-LOCC monotonicity in bracket form.
    properties.push(run_property("quantifiers/monotonicity", 19, seed, nh, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        let asm = random_assemblage(nx, na, db, rng);
        let op = random_restricted_op((nx, na, 2, 2), db, 2, 2, rng);
        let out = asm.apply_restricted_1wlocc(&op)?;
        let before = restricted_res_with(&asm, &fast_cfg)?;
        let after = restricted_res_with(&out, &fast_cfg)?;
        Ok(before.hi + 1e-3 - after.lo)
    }));

    // quantifiers: the continuity modulus is monotone on [0,1].
    properties.push(run_property("quantifiers/g-monotone", 20, seed, 1.min(n), |_, _| {
        let mut margin = f64::INFINITY;
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = g_eps(i as f64 * 0.01)?;
            margin = margin.min(v - prev + 1e-12);
            prev = v;
        }
        Ok(margin)
    }));

    // harness: generated objects satisfy their type invariants.
    properties.push(run_property("harness/generator-validity", 21, seed, n, |t, rng| {
        let (nx, na, db) = desk_shape(t);
        random_assemblage(nx, na, db, rng).validate()?;
        let povm = random_povm(db, na, rng);
        let mut sum = HermitianOperator::zeros(db);
        for a in 0..povm.n_outcomes() {
            sum = sum.add(povm.element(a));
        }
        let povm_defect = sum.sub(&HermitianOperator::identity(db)).matrix().max_abs();
        random_instrument(db, 2, 2, rng);
        random_restricted_op((nx, na, 2, 2), db, 2, 2, rng);
        let pure = random_density(db, 1, rng);
        let h_pure = crate::linalg::von_neumann_entropy(&pure);
        Ok((1e-10 - povm_defect).min(1e-9 - h_pure))
    }));

    // harness: identical seeds give bit-identical generator output.
    properties.push(run_property("harness/reproducibility", 22, seed, 1.min(n), |_, _| {
        let a1 = random_assemblage(2, 2, 2, &mut Rng::new(42));
        let a2 = random_assemblage(2, 2, 2, &mut Rng::new(42));
        for (e1, e2) in a1.elements().iter().zip(a2.elements()) {
            if e1.matrix().entries() != e2.matrix().entries() {
                return Ok(-1.0);
            }
        }
        Ok(0.0)
    }));

    SuiteReport { seed, trials: n, properties }
}

/// Solver configuration used inside the suite: the stated defaults.
fn suite_solver_config() -> SolverConfig {
    SolverConfig::default()
}

/// Honors the `STEERLIB_THREADS` cap; later calls are no-ops.
pub fn init_thread_pool() {
    if let Ok(v) = std::env::var("STEERLIB_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_is_deterministic() {
        let mut r1 = Rng::new(42);
        let mut r2 = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(r1.next_u64(), r2.next_u64());
        }
        let rho1 = random_density(2, 2, &mut Rng::new(42));
        let rho2 = random_density(2, 2, &mut Rng::new(42));
        assert_eq!(rho1.op().matrix().entries(), rho2.op().matrix().entries());
    }

    #[test]
    fn random_density_rank_one_is_pure() {
        let mut rng = Rng::new(7);
        for _ in 0..5 {
            let rho = random_density(3, 1, &mut rng);
            assert!(crate::linalg::von_neumann_entropy(&rho) <= 1e-9);
        }
    }

    #[test]
    fn random_povm_sums_to_identity() {
        let mut rng = Rng::new(11);
        let povm = random_povm(2, 3, &mut rng);
        let mut sum = HermitianOperator::zeros(2);
        for a in 0..3 {
            sum = sum.add(povm.element(a));
        }
        assert!(sum.sub(&HermitianOperator::identity(2)).matrix().max_abs() < 1e-10);
    }

    #[test]
    fn random_instrument_is_trace_preserving() {
        let mut rng = Rng::new(13);
        let inst = random_instrument(2, 2, 2, &mut rng);
        let rho = random_density(2, 2, &mut rng);
        let total: f64 =
            (0..2).map(|z| inst.apply_branch(z, rho.op()).trace()).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn werner_family_endpoints() {
        // η = 0: white noise, elements (1/2)·(I/2).
        let asm = werner_assemblage(0.0).unwrap();
        let expect = HermitianOperator::identity(2).scale(0.25);
        for x in 0..2 {
            for a in 0..2 {
                assert!(asm.element(x, a).sub(&expect).frobenius_norm() < 1e-12);
            }
        }
        // η = 1: singlet assemblage with pure conditional states.
        let asm = werner_assemblage(1.0).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                let evs = asm.element(x, a).eigenvalues().unwrap();
                assert!(evs[0].abs() < 1e-12 && (evs[1] - 0.5).abs() < 1e-12);
            }
        }
        assert!(werner_assemblage(1.5).is_err());
    }

    #[test]
    fn empty_suite_passes() {
        let report = run_suite(&SuiteConfig { trials: 0, seed: 1 });
        assert!(report.all_pass());
        for p in &report.properties {
            assert_eq!(p.trials, 0);
            assert_eq!(p.failures, 0);
        }
    }
}
