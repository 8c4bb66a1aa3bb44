//! The local-hidden-state set: deterministic-strategy parameterization,
//! membership testing, and the inner infimum of relative entropy over LHS
//! models via Frank–Wolfe with a duality-gap certificate.
//!
//! The LHS set is parameterized in absorbed-weight form: one subnormalized
//! PSD operator `σ_λ` per deterministic strategy `λ: X → A`, with
//! `Σ_λ Tr σ_λ = 1`. This makes the domain a compact convex spectrahedron
//! whose extreme points are rank-one in a single strategy slot, so the
//! Frank–Wolfe linear oracle is exact (a minimal-eigenvector problem).

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::linalg::{
    log_frechet_apply, log_frechet_trace, relative_entropy_psd, support_cutoff, ComplexMatrix,
    HermitianOperator, RelEntropy,
};

/// Deterministic classical strategy `λ: X → A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    response: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(response: Vec<usize>) -> Self {
        Self { response }
    }

    pub fn respond(&self, x: usize) -> usize {
        self.response[x]
    }

    pub fn response(&self) -> &[usize] {
        &self.response
    }
}

/// All `|A|^|X|` deterministic strategies in lexicographic order over
/// `(λ(0), …, λ(|X|−1))`.
pub fn enumerate_strategies(
    n_inputs: usize,
    n_outcomes: usize,
    cap: usize,
) -> Result<Vec<DeterministicStrategy>> {
    let count = n_outcomes.checked_pow(n_inputs as u32).ok_or_else(|| {
        Error::StrategyCapExceeded(usize::MAX, cap)
    })?;
    if count > cap {
        return Err(Error::StrategyCapExceeded(count, cap));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut response = vec![0usize; n_inputs];
        let mut rem = i;
        for x in (0..n_inputs).rev() {
            response[x] = rem % n_outcomes;
            rem /= n_outcomes;
        }
        out.push(DeterministicStrategy::new(response));
    }
    Ok(out)
}

/// LHS model in absorbed-weight form: one subnormalized PSD state per
/// deterministic strategy, in enumeration order.
#[derive(Clone, Debug)]
pub struct LhsModel {
    n_inputs: usize,
    n_outcomes: usize,
    sigma_lams: Vec<HermitianOperator>,
}

impl LhsModel {
    pub fn new(
        n_inputs: usize,
        n_outcomes: usize,
        sigma_lams: Vec<HermitianOperator>,
    ) -> Result<Self> {
        let expected = n_outcomes.pow(n_inputs as u32);
        if sigma_lams.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "LHS model needs {} strategy states, got {}",
                expected,
                sigma_lams.len()
            )));
        }
        let mut total = 0.0;
        for s in &sigma_lams {
            if s.min_eigenvalue()? < -1e-10 {
                return Err(Error::InvariantViolation("LHS state is not PSD".into()));
            }
            total += s.trace();
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "LHS model total trace {total}, expected 1"
            )));
        }
        Ok(Self { n_inputs, n_outcomes, sigma_lams })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn states(&self) -> &[HermitianOperator] {
        &self.sigma_lams
    }

    /// The assemblage `σ̂^{a,x} = Σ_λ δ_{a,λ(x)} σ_λ` realized by the model.
    pub fn to_assemblage(&self) -> Result<Assemblage> {
        let dim_b = self.sigma_lams[0].dim();
        let strategies = enumerate_strategies(self.n_inputs, self.n_outcomes, usize::MAX)?;
        let mut elements =
            vec![HermitianOperator::zeros(dim_b); self.n_inputs * self.n_outcomes];
        for (lam, sigma) in strategies.iter().zip(&self.sigma_lams) {
            for x in 0..self.n_inputs {
                let a = lam.respond(x);
                elements[x * self.n_outcomes + a] =
                    elements[x * self.n_outcomes + a].add(sigma);
            }
        }
        Assemblage::new(self.n_inputs, self.n_outcomes, dim_b, elements)
    }

    /// Convex mixture of two models on the same shape.
    pub fn mix(&self, other: &LhsModel, lambda: f64) -> LhsModel {
        let sigma_lams = self
            .sigma_lams
            .iter()
            .zip(&other.sigma_lams)
            .map(|(a, b)| a.scale(lambda).add(&b.scale(1.0 - lambda)))
            .collect();
        LhsModel { n_inputs: self.n_inputs, n_outcomes: self.n_outcomes, sigma_lams }
    }

    /// The uniform full-support model `σ_λ = ρ̄/|Λ|` for a given reference
    /// state; realizes the assemblage `{ρ̄/|A|}` and has finite divergence to
    /// any assemblage with reduced state supported inside `ρ̄`.
    pub fn uniform(n_inputs: usize, n_outcomes: usize, rho_b: &HermitianOperator) -> LhsModel {
        let n = n_outcomes.pow(n_inputs as u32);
        let sigma = rho_b.scale(1.0 / n as f64);
        LhsModel { n_inputs, n_outcomes, sigma_lams: vec![sigma; n] }
    }

    /// The product-reference model realizing `σ̂^{a,x} = p(a|x)·ρ_B` for a
    /// given assemblage: `σ_λ = Π_x p(λ(x)|x) · ρ_B`. Its per-input
    /// divergence equals the conditional mutual information layer of the
    /// upper-bound chain.
    pub fn product_reference(assemblage: &Assemblage) -> Result<LhsModel> {
        let probs = assemblage.conditional_probs();
        let rho_b = assemblage.reduced_state()?.into_op();
        let strategies =
            enumerate_strategies(assemblage.n_inputs(), assemblage.n_outcomes(), usize::MAX)?;
        let sigma_lams = strategies
            .iter()
            .map(|lam| {
                let q: f64 = (0..assemblage.n_inputs()).map(|x| probs[x][lam.respond(x)]).product();
                rho_b.scale(q)
            })
            .collect();
        LhsModel::new(assemblage.n_inputs(), assemblage.n_outcomes(), sigma_lams)
    }
}

/// Solver knobs with the crate's stated defaults.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Trace-norm residual below which an assemblage counts as LHS.
    pub feas_tol: f64,
    /// Projected-gradient iteration cap for feasibility.
    pub feas_iter_cap: usize,
    /// Frank–Wolfe duality-gap target, in bits.
    pub inner_tol: f64,
    /// Frank–Wolfe iteration cap.
    pub inner_iter_cap: usize,
    /// Bisection steps in the exact line search.
    pub line_search_iters: usize,
    /// Cap on `|A|^|X|`.
    pub strategy_cap: usize,
    /// Multiplicative-weights outer iterations for sup–inf solves.
    pub outer_iters: usize,
    /// Record (value, trace-distance) snapshots along inner solves.
    pub record_snapshots: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            feas_iter_cap: 20_000,
            inner_tol: 1e-5,
            inner_iter_cap: 5_000,
            line_search_iters: 60,
            strategy_cap: 4096,
            outer_iters: 200,
            record_snapshots: false,
        }
    }
}

/// Outcome of an LHS membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    /// Iteration cap hit while the residual was still improving.
    Inconclusive,
}

/// Result of [`lhs_feasibility`].
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    /// Total trace-norm mismatch `Σ_{x,a} ‖σ̂^{a,x} − ρ̂^{a,x}‖₁` at the
    /// final iterate.
    pub residual: f64,
    /// Separating-functional value when infeasible: positive means the
    /// residual-gradient functional separates the assemblage from LHS.
    /// A diagnostic, not a formal dual certificate.
    pub witness_value: f64,
    /// The final model; a valid LHS decomposition when feasible.
    pub model: LhsModel,
    pub iterations: usize,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Tests LHS membership by minimizing the squared Frobenius mismatch
/// `Σ_{x,a} ‖Σ_λ δ_{a,λ(x)} σ_λ − ρ̂^{a,x}‖_F²` over PSD strategy states
/// with accelerated projected gradient (eigenvalue clipping), restarting
/// momentum on objective increase.
pub fn lhs_feasibility(assemblage: &Assemblage) -> Result<FeasibilityReport> {
    lhs_feasibility_with(assemblage, &SolverConfig::default())
}

pub fn lhs_feasibility_with(
    assemblage: &Assemblage,
    cfg: &SolverConfig,
) -> Result<FeasibilityReport> {
    let n_x = assemblage.n_inputs();
    let n_a = assemblage.n_outcomes();
    let dim = assemblage.dim_b();
    let strategies = enumerate_strategies(n_x, n_a, cfg.strategy_cap)?;
    let n_lam = strategies.len();

    // Lipschitz constant of the gradient: 2·|X|·|A|^{|X|−1} bounds the
    // operator norm of the normal map.
    let lip = 2.0 * n_x as f64 * (n_lam as f64 / n_a as f64);
    let step = 1.0 / lip;

    let rho_b = assemblage.reduced_state()?.into_op();
    let mut sigma: Vec<HermitianOperator> =
        vec![rho_b.scale(1.0 / n_lam as f64); n_lam];
    let mut momentum = sigma.clone();
    let mut t_prev = 1.0f64;
    let mut obj_prev = f64::INFINITY;

    let sigma_hat = |model: &[HermitianOperator]| -> Vec<HermitianOperator> {
        let mut hats = vec![HermitianOperator::zeros(dim); n_x * n_a];
        for (lam, s) in strategies.iter().zip(model) {
            for x in 0..n_x {
                hats[x * n_a + lam.respond(x)] = hats[x * n_a + lam.respond(x)].add(s);
            }
        }
        hats
    };
    let objective = |hats: &[HermitianOperator]| -> f64 {
        let mut r = 0.0;
        for x in 0..n_x {
            for a in 0..n_a {
                let d = hats[x * n_a + a].sub(assemblage.element(x, a));
                r += d.frobenius_norm().powi(2);
            }
        }
        r
    };

    let mut iterations = 0;
    let mut best_residual = f64::INFINITY;
    let mut last_window_best = f64::INFINITY;
    let check_every = 50;
    let mut stagnant = false;

    for it in 0..cfg.feas_iter_cap {
        iterations = it + 1;
        let hats_y = sigma_hat(&momentum);
        // Gradient step on the momentum point.
        let mut next = Vec::with_capacity(n_lam);
        for (lam, y) in strategies.iter().zip(&momentum) {
            let mut grad = HermitianOperator::zeros(dim);
            for x in 0..n_x {
                let a = lam.respond(x);
                grad = grad.add(&hats_y[x * n_a + a].sub(assemblage.element(x, a)));
            }
            next.push(y.axpy(-2.0 * step, &grad).psd_clip());
        }
        let hats_next = sigma_hat(&next);
        let obj = objective(&hats_next);
        // Adaptive restart keeps the accelerated scheme monotone.
        if obj > obj_prev {
            momentum = sigma.clone();
            t_prev = 1.0;
            obj_prev = f64::INFINITY;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_prev * t_prev).sqrt());
        let beta = (t_prev - 1.0) / t_next;
        momentum = next
            .iter()
            .zip(&sigma)
            .map(|(n, s)| n.add(&n.sub(s).scale(beta)))
            .collect();
        sigma = next;
        t_prev = t_next;
        obj_prev = obj;

        if it % check_every == check_every - 1 {
            let resid: f64 = (0..n_x * n_a)
                .map(|i| {
                    hats_next[i]
                        .sub(&assemblage.elements()[i])
                        .trace_norm()
                })
                .sum();
            best_residual = best_residual.min(resid);
            if resid <= cfg.feas_tol {
                break;
            }
            // Stagnation over a 10-check window means the minimum is
            // positive: the assemblage sits outside LHS.
            if it >= 10 * check_every && it % (10 * check_every) == 10 * check_every - 1 {
                if best_residual > last_window_best * (1.0 - 1e-6) {
                    stagnant = true;
                    break;
                }
                last_window_best = best_residual;
            }
        }
    }

    let hats = sigma_hat(&sigma);
    let residual: f64 = (0..n_x * n_a)
        .map(|i| hats[i].sub(&assemblage.elements()[i]).trace_norm())
        .sum();

    // Normalize the model for reporting (the optimizer's trace drifts
    // freely; feasible solutions end at total trace 1 anyway).
    let total: f64 = sigma.iter().map(HermitianOperator::trace).sum();
    let model_states: Vec<HermitianOperator> = if total > 1e-12 {
        sigma.iter().map(|s| s.scale(1.0 / total)).collect()
    } else {
        vec![rho_b.scale(1.0 / n_lam as f64); n_lam]
    };
    let model = LhsModel::new(n_x, n_a, model_states)?;

    let status = if residual <= cfg.feas_tol {
        FeasibilityStatus::Feasible
    } else if stagnant {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Inconclusive
    };

    // Witness from the residual gradient at the final point:
    // G = ρ̂ − σ̂*, witness = ⟨G,ρ̂⟩ − max_{LHS} ⟨G,σ̂⟩.
    let witness_value = if status == FeasibilityStatus::Feasible {
        0.0
    } else {
        let g: Vec<HermitianOperator> = (0..n_x * n_a)
            .map(|i| assemblage.elements()[i].sub(&hats[i]))
            .collect();
        let value_rho: f64 =
            g.iter().zip(assemblage.elements()).map(|(gi, ri)| gi.inner(ri)).sum();
        let mut best_lhs = f64::NEG_INFINITY;
        for lam in &strategies {
            let mut m = HermitianOperator::zeros(dim);
            for x in 0..n_x {
                m = m.add(&g[x * n_a + lam.respond(x)]);
            }
            let top = *m.eigenvalues()?.last().unwrap();
            best_lhs = best_lhs.max(top);
        }
        value_rho - best_lhs
    };

    Ok(FeasibilityReport { status, residual, witness_value, model, iterations })
}

/// One sampled iterate of an inner solve: the objective value (bits) and the
/// trace-norm distance between the classical–quantum states at that iterate.
#[derive(Clone, Copy, Debug)]
pub struct IterateSnapshot {
    pub value: f64,
    pub trace_norm_diff: f64,
}

/// Certified result of an inner Frank–Wolfe solve. `value` upper-bounds the
/// infimum, `value − gap` lower-bounds it.
#[derive(Clone, Debug)]
pub struct InnerSolveResult {
    pub value: f64,
    pub gap: f64,
    pub model: LhsModel,
    pub iterations: usize,
    pub snapshots: Vec<IterateSnapshot>,
}

impl InnerSolveResult {
    pub fn lower_bound(&self) -> f64 {
        (self.value - self.gap).max(0.0)
    }
}

/// One relative-entropy block of an inner problem:
/// `weight · [Tr T log₂ T − Tr T log₂ K(σ̂^{a,x})]`.
pub(crate) struct BlockTerm {
    pub x: usize,
    pub a: usize,
    pub weight: f64,
    pub target: HermitianOperator,
    pub t_entropy: f64,
    pub t_trace: f64,
    /// Index into [`InnerProblem::maps`]; `None` applies σ̂ directly.
    pub map: Option<usize>,
}

/// Inner minimization problem over LHS models: a weighted sum of
/// relative-entropy blocks, each comparing a fixed target against a
/// CP-mapped mixture of strategy states.
pub(crate) struct InnerProblem {
    pub n_inputs: usize,
    pub n_outcomes: usize,
    pub dim_b: usize,
    pub maps: Vec<Vec<ComplexMatrix>>,
    pub map_out_dims: Vec<usize>,
    pub blocks: Vec<BlockTerm>,
    pub strategies: Vec<DeterministicStrategy>,
    /// Reference state for the default full-support initialization.
    pub rho_b: HermitianOperator,
}

fn psd_entropy_terms(t: &HermitianOperator) -> (f64, f64) {
    let tr = t.trace();
    if tr <= 1e-14 {
        return (0.0, 0.0);
    }
    let ed = t.eig().expect("eig convergence on block target");
    let cut = support_cutoff(&ed.eigenvalues);
    let mut h = 0.0;
    for &l in &ed.eigenvalues {
        if l > cut {
            h += l * l.log2();
        }
    }
    (h, tr)
}

impl InnerProblem {
    /// Restricted problem: identity maps, one block per (x, a).
    pub fn from_assemblage(asm: &Assemblage, cfg: &SolverConfig) -> Result<Self> {
        let strategies = enumerate_strategies(asm.n_inputs(), asm.n_outcomes(), cfg.strategy_cap)?;
        let mut blocks = Vec::new();
        for x in 0..asm.n_inputs() {
            for a in 0..asm.n_outcomes() {
                let target = asm.element(x, a).clone();
                let (t_entropy, t_trace) = psd_entropy_terms(&target);
                blocks.push(BlockTerm { x, a, weight: 1.0, target, t_entropy, t_trace, map: None });
            }
        }
        Ok(Self {
            n_inputs: asm.n_inputs(),
            n_outcomes: asm.n_outcomes(),
            dim_b: asm.dim_b(),
            maps: Vec::new(),
            map_out_dims: Vec::new(),
            blocks,
            strategies,
            rho_b: asm.reduced_state()?.into_op(),
        })
    }

    /// Strategy problem: blocks (x, a, y) with conditional weights `p(x|y)`
    /// and targets `K_y(ρ̂^{a,x})`; the model is mapped through the same
    /// branches.
    pub fn from_strategy(
        asm: &Assemblage,
        strat: &crate::assemblage::MeasurementStrategy,
        cfg: &SolverConfig,
    ) -> Result<Self> {
        if strat.instrument().dim_in() != asm.dim_b() {
            return Err(Error::DimensionMismatch("strategy instrument dim mismatch".into()));
        }
        let strategies = enumerate_strategies(asm.n_inputs(), asm.n_outcomes(), cfg.strategy_cap)?;
        let n_y = strat.instrument().n_branches();
        let maps: Vec<Vec<ComplexMatrix>> =
            (0..n_y).map(|y| strat.instrument().kraus(y).to_vec()).collect();
        let map_out_dims = vec![strat.instrument().dim_out(); n_y];
        let mut blocks = Vec::new();
        for x in 0..asm.n_inputs() {
            for a in 0..asm.n_outcomes() {
                for y in 0..n_y {
                    let w = strat.p_x_given_y(x, y);
                    if w == 0.0 {
                        continue;
                    }
                    let target = strat.instrument().apply_branch(y, asm.element(x, a));
                    let (t_entropy, t_trace) = psd_entropy_terms(&target);
                    blocks.push(BlockTerm {
                        x,
                        a,
                        weight: w,
                        target,
                        t_entropy,
                        t_trace,
                        map: Some(y),
                    });
                }
            }
        }
        Ok(Self {
            n_inputs: asm.n_inputs(),
            n_outcomes: asm.n_outcomes(),
            dim_b: asm.dim_b(),
            maps,
            map_out_dims,
            blocks,
            strategies,
            rho_b: asm.reduced_state()?.into_op(),
        })
    }

    pub fn default_init(&self) -> Vec<HermitianOperator> {
        let n = self.strategies.len();
        vec![self.rho_b.scale(1.0 / n as f64); n]
    }

    fn apply_map(&self, map: Option<usize>, m: &HermitianOperator) -> HermitianOperator {
        match map {
            None => m.clone(),
            Some(idx) => {
                let mut out = HermitianOperator::zeros(self.map_out_dims[idx]);
                for k in &self.maps[idx] {
                    out = out.add(&m.conjugate_by(k));
                }
                out
            }
        }
    }

    fn apply_map_adjoint(&self, map: Option<usize>, m: &HermitianOperator) -> HermitianOperator {
        match map {
            None => m.clone(),
            Some(idx) => {
                let mut out = HermitianOperator::zeros(self.dim_b);
                for k in &self.maps[idx] {
                    out = out.add(&m.conjugate_by(&k.dagger()));
                }
                out
            }
        }
    }

    pub fn sigma_hat(&self, model: &[HermitianOperator]) -> Vec<HermitianOperator> {
        let mut hats = vec![HermitianOperator::zeros(self.dim_b); self.n_inputs * self.n_outcomes];
        for (lam, s) in self.strategies.iter().zip(model) {
            for x in 0..self.n_inputs {
                let idx = x * self.n_outcomes + lam.respond(x);
                hats[idx] = hats[idx].add(s);
            }
        }
        hats
    }

    /// Mapped model blocks `C_k = K(σ̂^{a,x})` per block term.
    fn mapped_blocks(&self, hats: &[HermitianOperator]) -> Vec<HermitianOperator> {
        self.blocks
            .iter()
            .map(|b| self.apply_map(b.map, &hats[b.x * self.n_outcomes + b.a]))
            .collect()
    }

    /// Objective `Σ_k xw(x_k)·w_k·relent(T_k, C_k)`; +∞ when a target leaks
    /// outside its model block's support.
    fn objective(&self, x_weights: &[f64], mapped: &[HermitianOperator]) -> f64 {
        let mut f = 0.0;
        for (b, c) in self.blocks.iter().zip(mapped) {
            let w = x_weights[b.x] * b.weight;
            if w == 0.0 || b.t_trace <= 1e-14 {
                continue;
            }
            let ed = c.eig().expect("eig convergence on model block");
            let cut = support_cutoff(&ed.eigenvalues);
            let v = &ed.eigenvectors;
            let tv = v.dagger().matmul(b.target.matrix()).matmul(v);
            let mut cross = 0.0;
            let mut leak = 0.0;
            for j in 0..c.dim() {
                let q = ed.eigenvalues[j];
                let mass = tv.get(j, j).re.max(0.0);
                if q <= cut {
                    leak += mass;
                } else {
                    cross += mass * q.log2();
                }
            }
            if leak > 1e-9 * b.t_trace.max(1e-12) {
                return f64::INFINITY;
            }
            f += w * (b.t_entropy - cross);
        }
        f
    }

    /// Gradient with respect to each strategy state:
    /// `G_λ = −Σ_{k: λ(x_k)=a_k} xw·w · K†(D log₂(C_k)[T_k])`.
    fn gradient(
        &self,
        x_weights: &[f64],
        mapped: &[HermitianOperator],
    ) -> Vec<HermitianOperator> {
        let n_lam = self.strategies.len();
        // Per-(x,a) accumulated back-mapped Fréchet terms.
        let mut per_xa =
            vec![HermitianOperator::zeros(self.dim_b); self.n_inputs * self.n_outcomes];
        for (b, c) in self.blocks.iter().zip(mapped) {
            let w = x_weights[b.x] * b.weight;
            if w == 0.0 || b.t_trace <= 1e-14 {
                continue;
            }
            let fre = log_frechet_apply(c, &b.target).expect("gradient Fréchet term");
            let back = self.apply_map_adjoint(b.map, &fre);
            let idx = b.x * self.n_outcomes + b.a;
            per_xa[idx] = per_xa[idx].add(&back.scale(-w));
        }
        let mut grads = Vec::with_capacity(n_lam);
        for lam in &self.strategies {
            let mut g = HermitianOperator::zeros(self.dim_b);
            for x in 0..self.n_inputs {
                g = g.add(&per_xa[x * self.n_outcomes + lam.respond(x)]);
            }
            grads.push(g);
        }
        grads
    }

    /// Per-input divergence vector `d_x(model) = Σ_{k: x_k=x} w_k·relent`,
    /// with IEEE infinity for support violations.
    pub fn per_x_divergence(&self, model: &[HermitianOperator]) -> Vec<f64> {
        let hats = self.sigma_hat(model);
        let mapped = self.mapped_blocks(&hats);
        let mut d = vec![0.0; self.n_inputs];
        for (b, c) in self.blocks.iter().zip(mapped.iter()) {
            if b.t_trace <= 1e-14 || b.weight == 0.0 {
                continue;
            }
            match relative_entropy_psd(&b.target, c) {
                RelEntropy::Finite(v) => d[b.x] += b.weight * v,
                RelEntropy::Infinite => d[b.x] = f64::INFINITY,
            }
        }
        d
    }

    /// Trace-norm difference between the target and model cq blocks at a
    /// given model, `Σ_k xw·w·‖T_k − C_k‖₁`.
    fn cq_trace_norm_diff(&self, x_weights: &[f64], mapped: &[HermitianOperator]) -> f64 {
        self.blocks
            .iter()
            .zip(mapped)
            .map(|(b, c)| x_weights[b.x] * b.weight * b.target.sub(c).trace_norm())
            .sum()
    }

    /// One Frank–Wolfe oracle evaluation at a model: returns the duality
    /// gap for the given input weights together with the minimizing vertex
    /// (strategy slot and rank-one state).
    pub(crate) fn oracle_step(
        &self,
        x_weights: &[f64],
        model: &[HermitianOperator],
    ) -> Result<(f64, usize, HermitianOperator)> {
        let hats = self.sigma_hat(model);
        let mapped = self.mapped_blocks(&hats);
        let grads = self.gradient(x_weights, &mapped);
        let mut best_slot = 0;
        let mut best_eig = f64::INFINITY;
        let mut best_vec: Vec<num_complex::Complex64> = Vec::new();
        for (i, g) in grads.iter().enumerate() {
            let ed = g.eig()?;
            if ed.eigenvalues[0] < best_eig {
                best_eig = ed.eigenvalues[0];
                best_slot = i;
                best_vec = (0..self.dim_b).map(|r| ed.eigenvectors.get(r, 0)).collect();
            }
        }
        let grad_dot_model: f64 = grads.iter().zip(model).map(|(g, s)| g.inner(s)).sum();
        let gap = (grad_dot_model - best_eig).max(0.0);
        Ok((gap, best_slot, HermitianOperator::projector(&best_vec)))
    }

    /// Prepares the per-block base and tip operators of the Frank–Wolfe
    /// segment toward a vertex, for repeated divergence evaluations along it.
    pub(crate) fn segment<'a>(
        &'a self,
        model: &[HermitianOperator],
        slot: usize,
        vertex: &HermitianOperator,
    ) -> Segment<'a> {
        let hats = self.sigma_hat(model);
        let base = self.mapped_blocks(&hats);
        let tip = self
            .blocks
            .iter()
            .map(|b| {
                if self.strategies[slot].respond(b.x) == b.a {
                    self.apply_map(b.map, vertex)
                } else {
                    HermitianOperator::zeros(b.map.map_or(self.dim_b, |i| self.map_out_dims[i]))
                }
            })
            .collect();
        Segment { problem: self, base, tip }
    }

    /// Frank–Wolfe with exact line search on the LHS spectrahedron.
    ///
    /// Stops at duality gap ≤ `cfg.inner_tol`, at a tiny objective (the
    /// infimum is nonnegative, so the reported gap stays sound), on stall,
    /// or at the iteration cap. The step is capped at `1 − 1e-9` so the
    /// iterate keeps full support over the targets' support.
    pub fn solve(
        &self,
        x_weights: &[f64],
        init: Option<Vec<HermitianOperator>>,
        cfg: &SolverConfig,
    ) -> Result<InnerSolveResult> {
        let gamma_max = 1.0 - 1e-9;
        let value_floor = 1e-8;
        let mut model = init.unwrap_or_else(|| self.default_init());
        let mut mapped = self.mapped_blocks(&self.sigma_hat(&model));
        let mut f = self.objective(x_weights, &mapped);
        if !f.is_finite() {
            return Err(Error::SolverFailure(
                "inner objective infinite at initialization".into(),
            ));
        }
        let mut best_f = f;
        let mut best_model = model.clone();
        let mut best_lower = 0.0f64;
        let mut last_gap = f;
        let mut snapshots = Vec::new();
        let mut iterations = 0;
        let mut stall_anchor = f;
        let mut stall_count = 0;

        for it in 0..cfg.inner_iter_cap {
            iterations = it + 1;
            if cfg.record_snapshots && it % 25 == 0 {
                snapshots.push(IterateSnapshot {
                    value: f,
                    trace_norm_diff: self.cq_trace_norm_diff(x_weights, &mapped),
                });
            }
            if f <= value_floor {
                last_gap = f;
                break;
            }
            let grads = self.gradient(x_weights, &mapped);
            // Linear oracle: minimal eigenvector over all strategy slots.
            let mut best_slot = 0;
            let mut best_eig = f64::INFINITY;
            let mut best_vec: Vec<num_complex::Complex64> = Vec::new();
            for (i, g) in grads.iter().enumerate() {
                let ed = g.eig()?;
                if ed.eigenvalues[0] < best_eig {
                    best_eig = ed.eigenvalues[0];
                    best_slot = i;
                    best_vec = (0..self.dim_b).map(|r| ed.eigenvectors.get(r, 0)).collect();
                }
            }
            let grad_dot_model: f64 =
                grads.iter().zip(&model).map(|(g, s)| g.inner(s)).sum();
            let gap = grad_dot_model - best_eig;
            last_gap = gap.max(0.0);
            best_lower = best_lower.max(f - last_gap);
            if gap <= cfg.inner_tol {
                break;
            }

            // Vertex: rank-one in the winning slot.
            let vertex = HermitianOperator::projector(&best_vec);
            // Per-block mapped vertex contributions V_k.
            let mapped_vertex: Vec<HermitianOperator> = self
                .blocks
                .iter()
                .map(|b| {
                    if self.strategies[best_slot].respond(b.x) == b.a {
                        self.apply_map(b.map, &vertex)
                    } else {
                        HermitianOperator::zeros(
                            b.map.map_or(self.dim_b, |i| self.map_out_dims[i]),
                        )
                    }
                })
                .collect();

            // Exact line search: bisection on the monotone directional
            // derivative of the convex restriction.
            let deriv = |gamma: f64| -> f64 {
                let mut g = 0.0;
                for ((b, c), v) in self.blocks.iter().zip(&mapped).zip(&mapped_vertex) {
                    let w = x_weights[b.x] * b.weight;
                    if w == 0.0 || b.t_trace <= 1e-14 {
                        continue;
                    }
                    let c_gamma = c.scale(1.0 - gamma).add(&v.scale(gamma));
                    let dir = v.sub(c);
                    g -= w * log_frechet_trace(&c_gamma, &b.target, &dir);
                }
                g
            };
            let mut lo = 0.0f64;
            let mut hi = gamma_max;
            if deriv(hi) <= 0.0 {
                lo = hi;
            } else {
                for _ in 0..cfg.line_search_iters {
                    let mid = 0.5 * (lo + hi);
                    if deriv(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            let mut gamma = 0.5 * (lo + hi).min(2.0 * gamma_max);
            if gamma > gamma_max {
                gamma = gamma_max;
            }

            // Apply the step, retreating on (rare) numeric non-descent.
            let mut accepted = false;
            for _ in 0..6 {
                let trial: Vec<HermitianOperator> = model
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let mut t = s.scale(1.0 - gamma);
                        if i == best_slot {
                            t = t.add(&vertex.scale(gamma));
                        }
                        t
                    })
                    .collect();
                let trial_mapped = self.mapped_blocks(&self.sigma_hat(&trial));
                let trial_f = self.objective(x_weights, &trial_mapped);
                if trial_f <= f + 1e-12 {
                    model = trial;
                    mapped = trial_mapped;
                    f = trial_f;
                    accepted = true;
                    break;
                }
                gamma *= 0.5;
            }
            if !accepted {
                break;
            }
            if f < best_f {
                best_f = f;
                best_model = model.clone();
            }
            // Stall guard: no meaningful progress in value or certificate.
            stall_count += 1;
            if stall_count >= 100 {
                if stall_anchor - best_f < 1e-13 && last_gap > cfg.inner_tol {
                    break;
                }
                stall_anchor = best_f;
                stall_count = 0;
            }
        }

        if cfg.record_snapshots {
            snapshots.push(IterateSnapshot {
                value: f,
                trace_norm_diff: self.cq_trace_norm_diff(x_weights, &mapped),
            });
        }

        best_f = best_f.min(f);
        if f <= best_f {
            best_model = model;
        }
        // Report the tightest certified pair seen: value = best objective,
        // gap chosen so value − gap equals the best certified lower bound
        // (the infimum is ≥ 0, so the floor exit keeps soundness).
        let gap = (best_f - best_lower).max(0.0).min(last_gap.max(best_f - best_lower));
        let model = LhsModel::new(self.n_inputs, self.n_outcomes, normalize_model(best_model))?;
        Ok(InnerSolveResult { value: best_f, gap, model, iterations, snapshots })
    }
}

/// Frank–Wolfe segment `(1−γ)·C + γ·V` through mapped block space.
pub(crate) struct Segment<'a> {
    problem: &'a InnerProblem,
    base: Vec<HermitianOperator>,
    tip: Vec<HermitianOperator>,
}

impl Segment<'_> {
    /// Per-input divergences `d_x(γ)` and their derivatives `d'_x(γ)` along
    /// the segment, sharing one eigendecomposition per block.
    pub fn divergences_at(&self, gamma: f64) -> (Vec<f64>, Vec<f64>) {
        let p = self.problem;
        let mut d = vec![0.0; p.n_inputs];
        let mut dd = vec![0.0; p.n_inputs];
        for ((b, c), v) in p.blocks.iter().zip(&self.base).zip(&self.tip) {
            if b.t_trace <= 1e-14 || b.weight == 0.0 {
                continue;
            }
            let c_gamma = c.scale(1.0 - gamma).add(&v.scale(gamma));
            let dir = v.sub(c);
            let ed = c_gamma.eig().expect("eig convergence along segment");
            let cut = support_cutoff(&ed.eigenvalues);
            let vm = &ed.eigenvectors;
            let tt = vm.dagger().matmul(b.target.matrix()).matmul(vm);
            let mut cross = 0.0;
            let mut leak = 0.0;
            for j in 0..c_gamma.dim() {
                let q = ed.eigenvalues[j];
                let mass = tt.get(j, j).re.max(0.0);
                if q <= cut {
                    leak += mass;
                } else {
                    cross += mass * q.log2();
                }
            }
            if leak > 1e-9 * b.t_trace.max(1e-12) {
                d[b.x] = f64::INFINITY;
                continue;
            }
            d[b.x] += b.weight * (b.t_entropy - cross);
            dd[b.x] -= b.weight * log_frechet_trace(&c_gamma, &b.target, &dir);
        }
        (d, dd)
    }
}

/// Rescales a model onto the unit-trace slice, guarding the type invariant
/// against accumulated roundoff.
fn normalize_model(states: Vec<HermitianOperator>) -> Vec<HermitianOperator> {
    let total: f64 = states.iter().map(HermitianOperator::trace).sum();
    if (total - 1.0).abs() <= 1e-12 || total <= 1e-12 {
        return states;
    }
    states.into_iter().map(|s| s.scale(1.0 / total)).collect()
}

/// When a capped feasibility pre-solve certifies membership, the inner solve
/// starts from the feasibility model floored onto full support (a tiny
/// mixture with the uniform model keeps the objective finite). Frank–Wolfe
/// alone closes the final decades slowly when the optimum sits on the
/// boundary of the spectrahedron; the certificates stay sound either way.
pub(crate) fn feasibility_init(
    assemblage: &Assemblage,
    cfg: &SolverConfig,
) -> Result<Option<LhsModel>> {
    let mut f_cfg = cfg.clone();
    f_cfg.feas_iter_cap = cfg.feas_iter_cap.min(6000);
    let report = lhs_feasibility_with(assemblage, &f_cfg)?;
    if report.feasible() && report.residual <= 1e-7 {
        let uniform = LhsModel::uniform(
            assemblage.n_inputs(),
            assemblage.n_outcomes(),
            assemblage.reduced_state()?.op(),
        );
        Ok(Some(report.model.mix(&uniform, 1.0 - 1e-7)))
    } else {
        Ok(None)
    }
}

/// Inner infimum of the restricted relative entropy objective
/// `inf_{LHS} D(ρ_{XĀB} ‖ σ_{XĀB})` at a fixed input distribution, via
/// Frank–Wolfe with a duality-gap certificate.
pub fn inner_inf_relative_entropy(
    assemblage: &Assemblage,
    p_x: &crate::assemblage::ProbabilityVector,
) -> Result<InnerSolveResult> {
    inner_inf_relative_entropy_with(assemblage, p_x, &SolverConfig::default(), None)
}

pub fn inner_inf_relative_entropy_with(
    assemblage: &Assemblage,
    p_x: &crate::assemblage::ProbabilityVector,
    cfg: &SolverConfig,
    warm_start: Option<&LhsModel>,
) -> Result<InnerSolveResult> {
    if p_x.len() != assemblage.n_inputs() {
        return Err(Error::DimensionMismatch("p_X length mismatch".into()));
    }
    let problem = InnerProblem::from_assemblage(assemblage, cfg)?;
    let init = match warm_start {
        Some(m) => Some(m.states().to_vec()),
        None => feasibility_init(assemblage, cfg)?.map(|m| m.states().to_vec()),
    };
    problem.solve(p_x.as_slice(), init, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblage::ProbabilityVector;

    #[test]
    fn strategy_enumeration_counts() {
        assert_eq!(enumerate_strategies(1, 2, 4096).unwrap().len(), 2);
        assert_eq!(enumerate_strategies(2, 2, 4096).unwrap().len(), 4);
        assert_eq!(enumerate_strategies(3, 3, 4096).unwrap().len(), 27);
        assert!(enumerate_strategies(7, 4, 4096).is_err());
    }

    #[test]
    fn strategy_enumeration_is_lexicographic_and_complete() {
        let strategies = enumerate_strategies(2, 2, 4096).unwrap();
        let responses: Vec<&[usize]> = strategies.iter().map(|s| s.response()).collect();
        assert_eq!(responses, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
    }

    fn deterministic_model() -> LhsModel {
        // Single strategy carries all the weight.
        let mut states = vec![HermitianOperator::zeros(2); 4];
        states[2] = HermitianOperator::diagonal(&[0.7, 0.3]);
        LhsModel::new(2, 2, states).unwrap()
    }

    #[test]
    fn deterministic_model_assemblage() {
        let model = deterministic_model();
        let asm = model.to_assemblage().unwrap();
        // Strategy index 2 responds (1, 0).
        assert!((asm.element(0, 1).trace() - 1.0).abs() < 1e-12);
        assert!(asm.element(0, 0).trace() < 1e-14);
        assert!((asm.element(1, 0).trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_mixture_of_strategies_gives_white_noise() {
        let rho = HermitianOperator::diagonal(&[0.5, 0.5]);
        let model = LhsModel::uniform(2, 2, &rho);
        let asm = model.to_assemblage().unwrap();
        for x in 0..2 {
            for a in 0..2 {
                let expect = rho.scale(0.5);
                assert!(asm.element(x, a).sub(&expect).frobenius_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lhs_assemblage_is_feasible() {
        let model = deterministic_model();
        let asm = model.to_assemblage().unwrap();
        let report = lhs_feasibility(&asm).unwrap();
        assert!(report.feasible(), "residual {}", report.residual);
        assert!(report.residual <= 1e-7);
    }

    #[test]
    fn zero_information_assemblage_is_feasible() {
        let rho = HermitianOperator::diagonal(&[0.6, 0.4]);
        let model = LhsModel::uniform(2, 2, &rho);
        let asm = model.to_assemblage().unwrap();
        let report = lhs_feasibility(&asm).unwrap();
        assert!(report.feasible());
    }

    #[test]
    fn inner_value_vanishes_on_lhs_assemblage() {
        let model = deterministic_model();
        let asm = model.to_assemblage().unwrap();
        let res =
            inner_inf_relative_entropy(&asm, &ProbabilityVector::uniform(2)).unwrap();
        assert!(res.value <= 1e-5, "value {}", res.value);
        assert!(res.gap >= 0.0);
    }

    #[test]
    fn single_input_assemblage_has_zero_inner_value() {
        // Any single-input assemblage is unsteerable.
        let elements = vec![
            HermitianOperator::diagonal(&[0.5, 0.1]),
            HermitianOperator::diagonal(&[0.1, 0.3]),
        ];
        let asm = Assemblage::new(1, 2, 2, elements).unwrap();
        let res =
            inner_inf_relative_entropy(&asm, &ProbabilityVector::point_mass(1, 0)).unwrap();
        assert!(res.value <= 1e-5, "value {}", res.value);
    }
}
