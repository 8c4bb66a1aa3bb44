//! Top-level steering quantities: the restricted relative entropy of
//! steering with two-sided certificates, restricted and strategy-based
//! trace distances, entropic upper bounds, the continuity modulus, and
//! report-producing theorem checks.
//!
//! Every optimized quantity is interval-valued. Lower bounds come from
//! certified inner solves (value − gap at probed input distributions);
//! upper bounds come from explicit LHS models (any model's worst-case
//! per-input divergence upper-bounds the sup–inf value by weak duality).
//! Theorem tests compare the `lo` of one side against the `hi` of the
//! other, so every assertion is sound under solver error.

use crate::assemblage::{Assemblage, MeasurementStrategy, ProbabilityVector};
use crate::error::{Error, Result};
use crate::lhs::{
    lhs_feasibility_with, FeasibilityStatus, InnerProblem, LhsModel, SolverConfig,
};
use crate::linalg::{entropy_psd, ComplexMatrix, HermitianOperator, LN_2};
use serde::Serialize;

/// Log-sum-exp temperature schedule for the inf–sup solves, in inverse bits.
const LSE_BETAS: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];
/// Frank–Wolfe iteration cap per annealing stage.
const LSE_STAGE_CAP: usize = 400;

/// Certified bracket `[lo, hi]` for an optimized quantity, in bits.
#[derive(Clone, Debug, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub diagnostics: Diagnostics,
}

/// Solver trace attached to an [`Interval`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub best_inner_gap: f64,
    /// Input distribution achieving the reported lower bound.
    pub best_p: Vec<f64>,
    /// Number of candidate models probed for the upper bound.
    pub hi_candidates: usize,
}

impl Interval {
    fn new(lo: f64, hi: f64, diagnostics: Diagnostics) -> Result<Self> {
        if lo > hi + 1e-12 {
            return Err(Error::SolverFailure(format!(
                "bracket inversion: lo {lo} > hi {hi} (outer {}, inner {}, gap {:.3e})",
                diagnostics.outer_iterations,
                diagnostics.inner_iterations,
                diagnostics.best_inner_gap
            )));
        }
        Ok(Self { lo, hi, diagnostics })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

fn finite_max(d: &[f64]) -> Option<f64> {
    let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m.is_finite().then_some(m)
}

/// Stable softmax of `β ln 2 · d` over inputs.
fn softmax_weights(d: &[f64], beta: f64) -> Vec<f64> {
    let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = d.iter().map(|&v| ((v - m) * beta * LN_2).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / s).collect()
}

/// Log-sum-exp smoothed inf–sup pass: anneals Frank–Wolfe over the β
/// schedule and returns the final model together with the best per-stage
/// worst-case divergence (a valid upper bound on the sup–inf value).
fn lse_infsup(
    problem: &InnerProblem,
    cfg: &SolverConfig,
) -> Result<(LhsModel, f64, usize)> {
    let mut model = problem.default_init();
    let mut best_hi = f64::INFINITY;
    let mut total_iters = 0;
    let gamma_max = 1.0 - 1e-9;

    for &beta in &LSE_BETAS {
        let mut stall_anchor = f64::INFINITY;
        let mut stall_count = 0usize;
        for _ in 0..LSE_STAGE_CAP {
            total_iters += 1;
            let d = problem.per_x_divergence(&model);
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverFailure("smoothed objective became infinite".into()));
            }
            let w = softmax_weights(&d, beta);
            let (gap, vertex_slot, vertex) = problem.oracle_step(&w, &model)?;
            if gap <= cfg.inner_tol {
                break;
            }
            // Line search on the smoothed objective along the vertex segment.
            let seg = problem.segment(&model, vertex_slot, &vertex);
            let phi_deriv = |gamma: f64| -> f64 {
                let (dg, ddg) = seg.divergences_at(gamma);
                let wg = softmax_weights(&dg, beta);
                wg.iter().zip(&ddg).map(|(w, dd)| w * dd).sum()
            };
            let mut lo = 0.0f64;
            let mut hi = gamma_max;
            if phi_deriv(hi) <= 0.0 {
                lo = hi;
            } else {
                for _ in 0..cfg.line_search_iters.min(40) {
                    let mid = 0.5 * (lo + hi);
                    if phi_deriv(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let gamma = (0.5 * (lo + hi)).min(gamma_max);
            if gamma <= 1e-15 {
                break;
            }
            for (i, s) in model.iter_mut().enumerate() {
                let mut t = s.scale(1.0 - gamma);
                if i == vertex_slot {
                    t = t.add(&vertex.scale(gamma));
                }
                *s = t;
            }
            let worst = finite_max(&problem.per_x_divergence(&model))
                .ok_or_else(|| Error::SolverFailure("divergence became infinite".into()))?;
            best_hi = best_hi.min(worst);
            stall_count += 1;
            if stall_count >= 50 {
                if stall_anchor - worst < 1e-9 {
                    break;
                }
                stall_anchor = worst;
                stall_count = 0;
            }
        }
        if let Some(worst) = finite_max(&problem.per_x_divergence(&model)) {
            best_hi = best_hi.min(worst);
        }
    }
    let lhs = LhsModel::new(problem.n_inputs, problem.n_outcomes, normalize(model))?;
    Ok((lhs, best_hi, total_iters))
}

fn normalize(states: Vec<HermitianOperator>) -> Vec<HermitianOperator> {
    let total: f64 = states.iter().map(HermitianOperator::trace).sum();
    if total <= 1e-12 {
        return states;
    }
    states.into_iter().map(|s| s.scale(1.0 / total)).collect()
}

/// Restricted relative entropy of steering
/// `sup_{p_X} inf_{LHS} D(ρ_{XĀB} ‖ σ_{XĀB})`, bracketed.
///
/// The lower bound is the best certified inner bound over input
/// distributions probed by multiplicative-weights ascent; the upper bound is
/// the smallest worst-case per-input divergence over every LHS model seen
/// (annealed inf–sup iterates, ascent iterates, the product reference, and —
/// when the assemblage tests feasible — the feasibility model floored onto
/// full support).
pub fn restricted_res(assemblage: &Assemblage) -> Result<Interval> {
    restricted_res_with(assemblage, &SolverConfig::default())
}

pub fn restricted_res_with(assemblage: &Assemblage, cfg: &SolverConfig) -> Result<Interval> {
    if cfg.outer_iters == 0 {
        return Err(Error::InvalidParameter("outer_iters must be positive".into()));
    }
    let problem = InnerProblem::from_assemblage(assemblage, cfg)?;
    let n_x = assemblage.n_inputs();

    let mut lo = 0.0f64;
    let mut best_gap = f64::INFINITY;
    let mut best_p = vec![1.0 / n_x as f64; n_x];
    let mut p = best_p.clone();
    let mut inner_iterations = 0;
    let mut hi = f64::INFINITY;
    let mut hi_candidates = 0;
    let mut outer_done = 0;
    let mut since_improvement = 0;

    // A feasible assemblage admits a near-exact model: it seeds the first
    // inner solve and bounds the value from above on its own.
    let feas_model = crate::lhs::feasibility_init(assemblage, cfg)?;
    if let Some(m) = &feas_model {
        if let Some(worst) = finite_max(&problem.per_x_divergence(m.states())) {
            hi = hi.min(worst);
            hi_candidates += 1;
        }
    }
    let mut warm: Option<Vec<HermitianOperator>> = feas_model.map(|m| m.states().to_vec());

    let outer_cap = if n_x == 1 { 1 } else { cfg.outer_iters };
    for t in 1..=outer_cap {
        outer_done = t;
        let res = problem.solve(&p, warm.take(), cfg)?;
        inner_iterations += res.iterations;
        let lb = res.lower_bound();
        if lb > lo + 1e-9 {
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if lb > lo {
            lo = lb;
            best_gap = res.gap;
            best_p = p.clone();
        }
        let d = problem.per_x_divergence(res.model.states());
        if let Some(worst) = finite_max(&d) {
            hi = hi.min(worst);
            hi_candidates += 1;
        }
        warm = Some(res.model.states().to_vec());
        if t == outer_cap {
            break;
        }
        // Multiplicative-weights ascent on the concave value function.
        let eta = 0.1 / (t as f64).sqrt();
        let mx = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= ((dx - mx) * eta).exp();
            z += *px;
        }
        for px in p.iter_mut() {
            *px /= z;
        }
        if since_improvement >= 15 && t >= 40 {
            break;
        }
    }

    // Upper-bound candidates beyond the ascent iterates.
    let (_lse_model, lse_hi, lse_iters) = lse_infsup(&problem, cfg)?;
    inner_iterations += lse_iters;
    hi = hi.min(lse_hi);
    hi_candidates += 1;

    let product = LhsModel::product_reference(assemblage)?;
    if let Some(worst) = finite_max(&problem.per_x_divergence(product.states())) {
        hi = hi.min(worst);
        hi_candidates += 1;
    }

    // Both sides are sound; sub-tolerance crossings are roundoff.
    let lo = lo.max(0.0).min(hi.max(0.0));
    Interval::new(
        lo,
        hi,
        Diagnostics {
            outer_iterations: outer_done,
            inner_iterations,
            best_inner_gap: if best_gap.is_finite() { best_gap } else { 0.0 },
            best_p,
            hi_candidates,
        },
    )
}

/// Restricted relative entropy of steering computed purely in the exchanged
/// inf–sup order: log-sum-exp smoothed Frank–Wolfe, annealed over the
/// temperature schedule. The lower bound probes the single input
/// distribution suggested by the final model's softmax weights, so the two
/// orders are computed independently and can cross-check each other.
pub fn restricted_res_exchanged(assemblage: &Assemblage) -> Result<Interval> {
    restricted_res_exchanged_with(assemblage, &SolverConfig::default())
}

pub fn restricted_res_exchanged_with(
    assemblage: &Assemblage,
    cfg: &SolverConfig,
) -> Result<Interval> {
    let problem = InnerProblem::from_assemblage(assemblage, cfg)?;
    let (model, hi, lse_iters) = lse_infsup(&problem, cfg)?;
    let d = problem.per_x_divergence(model.states());
    let p = if d.iter().all(|v| v.is_finite()) {
        softmax_weights(&d, *LSE_BETAS.last().unwrap())
    } else {
        vec![1.0 / problem.n_inputs as f64; problem.n_inputs]
    };
    let res = problem.solve(&p, Some(model.states().to_vec()), cfg)?;
    let lo = res.lower_bound().min(hi.max(0.0));
    Interval::new(
        lo,
        hi,
        Diagnostics {
            outer_iterations: LSE_BETAS.len(),
            inner_iterations: lse_iters + res.iterations,
            best_inner_gap: res.gap,
            best_p: p,
            hi_candidates: LSE_BETAS.len(),
        },
    )
}

/// Certified lower bound on the (unrestricted) relative entropy of steering,
/// evaluated on the supplied 1W-LOCC strategies only: the best
/// `value − gap` of the inner solve over the strategy-processed states.
pub fn res_lower_bound_full(
    assemblage: &Assemblage,
    strategies: &[MeasurementStrategy],
) -> Result<f64> {
    res_lower_bound_full_with(assemblage, strategies, &SolverConfig::default())
}

pub fn res_lower_bound_full_with(
    assemblage: &Assemblage,
    strategies: &[MeasurementStrategy],
    cfg: &SolverConfig,
) -> Result<f64> {
    let mut best = 0.0f64;
    for strat in strategies {
        let problem = InnerProblem::from_strategy(assemblage, strat, cfg)?;
        let ones = vec![1.0; problem.n_inputs];
        let res = problem.solve(&ones, None, cfg)?;
        best = best.max(res.lower_bound());
    }
    Ok(best)
}

/// Entropic upper bounds on the unrestricted relative entropy of steering:
/// the smallest of the per-strategy mutual information `I(XB'Y;Ā)`, the
/// maximized output entropy `sup_{p_X} H(Ā)`, and `log₂|Ā|`.
pub fn upper_bound_full(
    assemblage: &Assemblage,
    strategies: &[MeasurementStrategy],
) -> Result<f64> {
    let mut layers = vec![(assemblage.n_outcomes() as f64).log2()];
    layers.push(sup_output_entropy(assemblage));
    let mut strat_layer: Option<f64> = None;
    for strat in strategies {
        let cq = assemblage.apply_measurement_strategy(strat)?;
        // S = X, Y and the quantum output; T = Ā.
        let i = cq.mutual_information(&[0, 2], true);
        strat_layer = Some(strat_layer.map_or(i, |v| v.max(i)));
    }
    if let Some(v) = strat_layer {
        layers.push(v);
    }
    Ok(layers.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// `sup_{p_X} H(Ā)` where `p_Ā = Σ_x p(x) p(·|x)`: concave in `p_X`,
/// maximized by projected gradient ascent on the simplex with a vertex
/// sweep as the starting lower bound.
fn sup_output_entropy(assemblage: &Assemblage) -> f64 {
    let probs = assemblage.conditional_probs();
    let n_x = assemblage.n_inputs();
    let n_a = assemblage.n_outcomes();
    let entropy_at = |p: &[f64]| -> f64 {
        let mut pa = vec![0.0; n_a];
        for x in 0..n_x {
            for a in 0..n_a {
                pa[a] += p[x] * probs[x][a];
            }
        }
        shannon(&pa)
    };
    // Vertex sweep lower bound.
    let mut best = (0..n_x)
        .map(|x| shannon(&probs[x]))
        .fold(0.0, f64::max);
    let mut p = vec![1.0 / n_x as f64; n_x];
    best = best.max(entropy_at(&p));
    for _ in 0..200 {
        let mut pa = vec![0.0; n_a];
        for x in 0..n_x {
            for a in 0..n_a {
                pa[a] += p[x] * probs[x][a];
            }
        }
        let grad: Vec<f64> = (0..n_x)
            .map(|x| {
                (0..n_a)
                    .map(|a| {
                        if probs[x][a] <= 0.0 || pa[a] <= 1e-300 {
                            0.0
                        } else {
                            -probs[x][a] * (pa[a].log2() + 1.0 / LN_2)
                        }
                    })
                    .sum()
            })
            .collect();
        let trial: Vec<f64> = p.iter().zip(&grad).map(|(pi, g)| pi + 0.5 * g).collect();
        p = project_simplex(&trial);
        best = best.max(entropy_at(&p));
    }
    best
}

fn shannon(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 1e-300 {
            h -= v * v.log2();
        }
    }
    h.max(0.0)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// The three-layer entropic upper bound chain on the restricted relative
/// entropy of steering.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictedBoundChain {
    /// `sup_{p_X} I(Ā;B|X)`: linear in `p_X`, so the sup sits at a vertex.
    pub cmi_layer: f64,
    /// `min{ sup_{p_X} H(Ā), H(B) }`.
    pub entropy_layer: f64,
    /// `min{ log₂|Ā|, log₂|B| }`.
    pub dimension_layer: f64,
}

impl RestrictedBoundChain {
    pub fn tightest(&self) -> f64 {
        self.cmi_layer.min(self.entropy_layer).min(self.dimension_layer)
    }
}

/// Computes the full restricted upper-bound chain and asserts its ordering.
pub fn restricted_upper_bound(assemblage: &Assemblage) -> Result<RestrictedBoundChain> {
    let probs = assemblage.conditional_probs();
    let rho_b = assemblage.reduced_state()?;
    let h_b = entropy_psd(rho_b.op());
    // I(Ā;B|X) is linear in p_X: per-input blocks give
    // I(Ā;B)_x = H(Ā)_x + H(B) − H(ĀB)_x.
    let mut cmi_layer = 0.0f64;
    for x in 0..assemblage.n_inputs() {
        let h_a = shannon(&probs[x]);
        let h_ab: f64 =
            (0..assemblage.n_outcomes()).map(|a| entropy_psd(assemblage.element(x, a))).sum();
        cmi_layer = cmi_layer.max((h_a + h_b - h_ab).max(0.0));
    }
    let entropy_layer = sup_output_entropy(assemblage).min(h_b);
    let dimension_layer = (assemblage.n_outcomes() as f64)
        .log2()
        .min((assemblage.dim_b() as f64).log2());
    if cmi_layer > entropy_layer + 1e-9 || entropy_layer > dimension_layer + 1e-9 {
        return Err(Error::SolverFailure(format!(
            "upper bound chain out of order: {cmi_layer} ≤ {entropy_layer} ≤ {dimension_layer}"
        )));
    }
    Ok(RestrictedBoundChain { cmi_layer, entropy_layer, dimension_layer })
}

/// Restricted normalized trace distance of assemblages,
/// `Δ^R = ½ sup_{p_X} ‖ρ_{XĀB} − θ_{XĀB}‖₁`. The objective is linear in
/// `p_X`, so the sup is attained at a vertex:
/// `½ max_x Σ_a ‖ρ̂^{a,x} − θ̂^{a,x}‖₁`.
pub fn restricted_trace_distance(a1: &Assemblage, a2: &Assemblage) -> Result<f64> {
    check_same_shape(a1, a2)?;
    let mut worst = 0.0f64;
    for x in 0..a1.n_inputs() {
        let s: f64 = (0..a1.n_outcomes())
            .map(|a| a1.element(x, a).sub(a2.element(x, a)).trace_norm())
            .sum();
        worst = worst.max(s);
    }
    Ok(0.5 * worst)
}

/// Lower bound on the (unrestricted) trace distance of assemblages:
/// the best of the restricted closed form (restricted strategies are a
/// subset of 1W-LOCC) and `½‖ρ_{XĀB'Y} − θ_{XĀB'Y}‖₁` over the supplied
/// strategies plus the trivial uniform one.
pub fn trace_distance_lower_bound(
    a1: &Assemblage,
    a2: &Assemblage,
    strategies: &[MeasurementStrategy],
) -> Result<f64> {
    check_same_shape(a1, a2)?;
    let mut best = restricted_trace_distance(a1, a2)?;
    let trivial =
        MeasurementStrategy::trivial(&ProbabilityVector::uniform(a1.n_inputs()), a1.dim_b());
    let all = std::iter::once(&trivial).chain(strategies.iter());
    for strat in all {
        let c1 = a1.apply_measurement_strategy(strat)?;
        let c2 = a2.apply_measurement_strategy(strat)?;
        best = best.max(0.5 * c1.trace_norm_diff(&c2));
    }
    Ok(best)
}

fn check_same_shape(a1: &Assemblage, a2: &Assemblage) -> Result<()> {
    if (a1.n_inputs(), a1.n_outcomes(), a1.dim_b())
        != (a2.n_inputs(), a2.n_outcomes(), a2.dim_b())
    {
        return Err(Error::DimensionMismatch("assemblage shapes differ".into()));
    }
    Ok(())
}

/// Seesaw search for distinguishing 1W-LOCC strategies: each restart draws a
/// random pure instrument and alternates between the exact optimal input
/// assignment per branch and a sign-linearized isometry ascent step
/// (Procrustes update via the polar factor). Returns the sampled strategies;
/// feed them to [`trace_distance_lower_bound`] for the certified bound.
pub fn seesaw_strategies(
    a1: &Assemblage,
    a2: &Assemblage,
    restarts: usize,
    seed: u64,
) -> Result<Vec<MeasurementStrategy>> {
    check_same_shape(a1, a2)?;
    let n_x = a1.n_inputs();
    let n_a = a1.n_outcomes();
    let d = a1.dim_b();
    let n_y = 2usize;
    let rounds = 8;
    let diff: Vec<HermitianOperator> = a1
        .elements()
        .iter()
        .zip(a2.elements())
        .map(|(e1, e2)| e1.sub(e2))
        .collect();

    let mut out = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut rng = crate::harness::Rng::for_index(seed, 0x5ee5a3, r as u64);
        let mut instrument = crate::harness::random_instrument(d, d, n_y, &mut rng);
        let mut assignment = vec![0usize; n_y];
        for _ in 0..rounds {
            // Exact input choice per branch.
            for y in 0..n_y {
                let mut best = (0usize, f64::NEG_INFINITY);
                for x in 0..n_x {
                    let score: f64 = (0..n_a)
                        .map(|a| instrument.apply_branch(y, &diff[x * n_a + a]).trace_norm())
                        .sum();
                    if score > best.1 {
                        best = (x, score);
                    }
                }
                assignment[y] = best.0;
            }
            // Sign-linearized isometry ascent: V ← polar(Σ (|y⟩⟨y| ⊗ S) V Δ).
            let mut grad = ComplexMatrix::zeros(n_y * d, d);
            let v_cur = stack_kraus(&instrument, n_y, d);
            for y in 0..n_y {
                let x = assignment[y];
                for a in 0..n_a {
                    let delta = &diff[x * n_a + a];
                    let mapped = instrument.apply_branch(y, delta);
                    let sign = sign_operator(&mapped)?;
                    // Row block y of the gradient: S · K_y · Δ.
                    let k = &instrument.kraus(y)[0];
                    let block = sign.matrix().matmul(k).matmul(delta.matrix());
                    for i in 0..d {
                        for j in 0..d {
                            let cur = grad.get(y * d + i, j) + block.get(i, j);
                            grad.set(y * d + i, j, cur);
                        }
                    }
                }
            }
            if grad.frobenius_norm() < 1e-12 {
                break;
            }
            let stepped = v_cur.add(&grad.scale(num_complex::Complex64::new(
                v_cur.frobenius_norm() / grad.frobenius_norm().max(1e-12),
                0.0,
            )));
            let v_new = polar_isometry(&stepped)?;
            let branches: Vec<Vec<ComplexMatrix>> = (0..n_y)
                .map(|y| {
                    vec![ComplexMatrix::from_fn(d, d, |i, j| v_new.get(y * d + i, j))]
                })
                .collect();
            instrument = crate::assemblage::Instrument::new(branches, d, d)?;
        }
        let p: Vec<Vec<f64>> = (0..n_y)
            .map(|y| {
                let mut row = vec![0.0; n_x];
                row[assignment[y]] = 1.0;
                row
            })
            .collect();
        out.push(MeasurementStrategy::new(p, instrument)?);
    }
    Ok(out)
}

fn stack_kraus(instrument: &crate::assemblage::Instrument, n_y: usize, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n_y * d, d, |i, j| instrument.kraus(i / d)[0].get(i % d, j))
}

/// Hermitian sign operator `V sign(λ) V†`.
fn sign_operator(m: &HermitianOperator) -> Result<HermitianOperator> {
    let ed = m.eig()?;
    let signs: Vec<f64> = ed.eigenvalues.iter().map(|&l| if l >= 0.0 { 1.0 } else { -1.0 }).collect();
    Ok(ed.reassemble(&signs))
}

/// Polar factor `G (G†G)^{-1/2}` of a tall matrix, the closest isometry.
fn polar_isometry(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = HermitianOperator::symmetrize(g.dagger().matmul(g));
    let inv_sqrt = crate::linalg::matrix_function_on_support(&gram, |l| 1.0 / l.sqrt())?;
    Ok(g.matmul(inv_sqrt.matrix()))
}

/// Continuity modulus `g(ε) = (ε+1)log₂(ε+1) − ε log₂ ε`, with `g(0) = 0`.
pub fn g_eps(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("g(ε) needs ε in [0,1], got {eps}")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok((eps + 1.0) * (eps + 1.0).log2() - eps * eps.log2())
}

/// Report of a uniform-continuity check between two assemblages.
#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub eps: f64,
    pub bound: f64,
    pub r1_lo: f64,
    pub r1_hi: f64,
    pub r2_lo: f64,
    pub r2_hi: f64,
    /// Certified part of |R₁ − R₂| after discounting bracket widths.
    pub certified_difference: f64,
    pub pass: bool,
}

/// Checks the uniform-continuity bound
/// `|R^R(ρ̂) − R^R(θ̂)| ≤ ε log₂ min{|Ā|,|B|} + g(ε)` at `ε = Δ^R`,
/// using brackets so the assertion is sound under solver error.
pub fn continuity_bound_check(a1: &Assemblage, a2: &Assemblage) -> Result<ContinuityReport> {
    continuity_bound_check_with(a1, a2, &SolverConfig::default())
}

pub fn continuity_bound_check_with(
    a1: &Assemblage,
    a2: &Assemblage,
    cfg: &SolverConfig,
) -> Result<ContinuityReport> {
    let eps = restricted_trace_distance(a1, a2)?.min(1.0);
    let dim_term = (a1.n_outcomes() as f64).min(a1.dim_b() as f64).log2();
    let bound = eps * dim_term + g_eps(eps)?;
    let r1 = restricted_res_with(a1, cfg)?;
    let r2 = restricted_res_with(a2, cfg)?;
    let certified = (r1.lo - r2.hi).max(r2.lo - r1.hi).max(0.0);
    let pass = certified <= bound + 1e-9;
    Ok(ContinuityReport {
        eps,
        bound,
        r1_lo: r1.lo,
        r1_hi: r1.hi,
        r2_lo: r2.lo,
        r2_hi: r2.hi,
        certified_difference: certified,
        pass,
    })
}

/// Report of a faithfulness check on a single assemblage.
#[derive(Clone, Debug, Serialize)]
pub struct FaithfulnessReport {
    /// Pointwise Pinsker checks along the inner solve (count, worst slack).
    pub pinsker_checks: usize,
    pub pinsker_min_slack: f64,
    pub rres_lo: f64,
    pub rres_hi: f64,
    pub feasible: bool,
    pub feasibility_residual: f64,
    /// Zero bracket ⟺ LHS membership, at the report's resolutions.
    pub consistent: bool,
    pub pass: bool,
}

/// Faithfulness check: pointwise quantum Pinsker along the uniform-input
/// inner solve, plus agreement between the steering bracket and the LHS
/// membership test (hi ≤ 1e-4 ⇒ feasible; feasible ⇒ hi ≤ 1e-3).
pub fn faithfulness_check(assemblage: &Assemblage) -> Result<FaithfulnessReport> {
    faithfulness_check_with(assemblage, &SolverConfig::default())
}

pub fn faithfulness_check_with(
    assemblage: &Assemblage,
    cfg: &SolverConfig,
) -> Result<FaithfulnessReport> {
    let mut snap_cfg = cfg.clone();
    snap_cfg.record_snapshots = true;
    let p = ProbabilityVector::uniform(assemblage.n_inputs());
    let inner = crate::lhs::inner_inf_relative_entropy_with(assemblage, &p, &snap_cfg, None)?;
    let mut pinsker_min_slack = f64::INFINITY;
    for s in &inner.snapshots {
        let rhs = s.trace_norm_diff.powi(2) / (2.0 * LN_2);
        pinsker_min_slack = pinsker_min_slack.min(s.value - rhs);
    }
    let pinsker_checks = inner.snapshots.len();
    let pinsker_pass = pinsker_checks > 0 && pinsker_min_slack >= -1e-8;

    let rres = restricted_res_with(assemblage, cfg)?;
    let feas = lhs_feasibility_with(assemblage, cfg)?;
    let mut consistent = true;
    if rres.hi <= 1e-4 && feas.status != FeasibilityStatus::Feasible {
        consistent = false;
    }
    if feas.status == FeasibilityStatus::Feasible && rres.hi > 1e-3 {
        consistent = false;
    }
    Ok(FaithfulnessReport {
        pinsker_checks,
        pinsker_min_slack,
        rres_lo: rres.lo,
        rres_hi: rres.hi,
        feasible: feas.status == FeasibilityStatus::Feasible,
        feasibility_residual: feas.residual,
        consistent,
        pass: pinsker_pass && consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_eps_endpoints_and_midpoint() {
        assert_eq!(g_eps(0.0).unwrap(), 0.0);
        assert!((g_eps(1.0).unwrap() - 2.0).abs() < 1e-12);
        let expect = 1.5f64 * 1.5f64.log2() + 0.5;
        assert!((g_eps(0.5).unwrap() - expect).abs() < 1e-12);
        assert!(g_eps(-0.1).is_err());
        assert!(g_eps(1.1).is_err());
    }

    #[test]
    fn g_eps_monotone() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let e = i as f64 * 0.01;
            let v = g_eps(e).unwrap();
            assert!(v + 1e-12 >= prev, "g not monotone at {e}");
            prev = v;
        }
    }

    #[test]
    fn simplex_projection_is_a_distribution() {
        let p = project_simplex(&[0.4, -0.2, 1.3]);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_assemblages_have_zero_distance() {
        let elements = vec![
            HermitianOperator::diagonal(&[0.5, 0.0]),
            HermitianOperator::diagonal(&[0.0, 0.5]),
            HermitianOperator::diagonal(&[0.25, 0.25]),
            HermitianOperator::diagonal(&[0.25, 0.25]),
        ];
        let a = Assemblage::new(2, 2, 2, elements).unwrap();
        assert_eq!(restricted_trace_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(trace_distance_lower_bound(&a, &a, &[]).unwrap(), 0.0);
    }

    #[test]
    fn orthogonal_pure_assemblages_have_unit_distance() {
        let mk = |which: usize| {
            let proj = if which == 0 {
                HermitianOperator::diagonal(&[1.0, 0.0])
            } else {
                HermitianOperator::diagonal(&[0.0, 1.0])
            };
            let elements = vec![proj.scale(0.5), proj.scale(0.5), proj.scale(0.5), proj.scale(0.5)];
            Assemblage::new(2, 2, 2, elements).unwrap()
        };
        let d = restricted_trace_distance(&mk(0), &mk(1)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }
}
