//! Assemblages, POVMs, instruments, classical–quantum states, and the
//! one-way-LOCC transformations between them.
//!
//! Conventions: inputs `x`, outcomes `a`, communication symbols `y`/`z` are
//! 0-based indices; outcome alphabets are uniform across inputs (ragged
//! setups pad with zero operators). All values are immutable after
//! construction and the transformations are pure.

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, ComplexMatrix, DensityOperator, HermitianOperator};
use num_complex::Complex64;

/// PSD admission tolerance for assemblage elements and cq blocks.
pub const PSD_TOL: f64 = -1e-10;
/// No-signaling and total-trace tolerance.
pub const NOSIG_TOL: f64 = 1e-9;
/// Normalization tolerance for classical conditionals.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Probability distribution over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&v| v < -STOCHASTIC_TOL || !v.is_finite()) {
            return Err(Error::InvalidParameter("probability vector has negative entries".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probability vector sums to {s}, expected 1"
            )));
        }
        Ok(Self(p.into_iter().map(|v| v.max(0.0)).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Positive operator-valued measure on Alice's space.
#[derive(Clone, Debug)]
pub struct Povm {
    outcomes: Vec<HermitianOperator>,
}

impl Povm {
    pub fn new(outcomes: Vec<HermitianOperator>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidParameter("POVM needs at least one outcome".into()));
        }
        let dim = outcomes[0].dim();
        let mut sum = HermitianOperator::zeros(dim);
        for e in &outcomes {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch("POVM elements differ in dim".into()));
            }
            if e.min_eigenvalue()? < PSD_TOL {
                return Err(Error::InvariantViolation("POVM element is not PSD".into()));
            }
            sum = sum.add(e);
        }
        let defect = sum.sub(&HermitianOperator::identity(dim)).matrix().max_abs();
        if defect > 1e-10 {
            return Err(Error::InvariantViolation(format!(
                "POVM elements sum to identity only within {defect:.3e}"
            )));
        }
        Ok(Self { outcomes })
    }

    /// The trivial single-outcome POVM `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self { outcomes: vec![HermitianOperator::identity(dim)] }
    }

    /// Projective measurement onto the given orthonormal vectors.
    pub fn projective(basis: &[Vec<Complex64>]) -> Result<Self> {
        let elements = basis.iter().map(|v| HermitianOperator::projector(v)).collect();
        Self::new(elements)
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].dim()
    }

    pub fn element(&self, a: usize) -> &HermitianOperator {
        &self.outcomes[a]
    }
}

/// Quantum instrument: branches of Kraus-operator lists. Each branch is a
/// completely positive trace-non-increasing map; the branch sum is trace
/// preserving.
#[derive(Clone, Debug)]
pub struct Instrument {
    branches: Vec<Vec<ComplexMatrix>>,
    dim_in: usize,
    dim_out: usize,
}

impl Instrument {
    pub fn new(branches: Vec<Vec<ComplexMatrix>>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidParameter("instrument needs at least one branch".into()));
        }
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for kraus_list in &branches {
            let mut branch_sum = ComplexMatrix::zeros(dim_in, dim_in);
            for k in kraus_list {
                if k.rows() != dim_out || k.cols() != dim_in {
                    return Err(Error::DimensionMismatch(format!(
                        "Kraus operator is {}x{}, expected {}x{}",
                        k.rows(),
                        k.cols(),
                        dim_out,
                        dim_in
                    )));
                }
                branch_sum = branch_sum.add(&k.dagger().matmul(k));
            }
            // Branch must be trace non-increasing: K†K ≤ I.
            let gap = HermitianOperator::symmetrize(
                ComplexMatrix::identity(dim_in).sub(&branch_sum),
            );
            if gap.min_eigenvalue()? < -1e-9 {
                return Err(Error::InvariantViolation("instrument branch increases trace".into()));
            }
            sum = sum.add(&branch_sum);
        }
        let defect = sum.sub(&ComplexMatrix::identity(dim_in)).max_abs();
        if defect > 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "instrument sum map preserves trace only within {defect:.3e}"
            )));
        }
        Ok(Self { branches, dim_in, dim_out })
    }

    /// Identity instrument: a single branch with Kraus `{I}`.
    pub fn identity(dim: usize) -> Self {
        Self { branches: vec![vec![ComplexMatrix::identity(dim)]], dim_in: dim, dim_out: dim }
    }

    /// Fully dephasing instrument that measures in the computational basis
    /// and reports the outcome, leaving a trivial 1-dimensional remainder.
    pub fn trace_out(dim: usize) -> Self {
        let branches = (0..dim)
            .map(|i| {
                let mut k = ComplexMatrix::zeros(1, dim);
                k.set(0, i, Complex64::new(1.0, 0.0));
                vec![k]
            })
            .collect();
        Self { branches, dim_in: dim, dim_out: 1 }
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self, branch: usize) -> &[ComplexMatrix] {
        &self.branches[branch]
    }

    /// Applies branch `z`: `Σ_t K_{z,t} m K_{z,t}†`.
    pub fn apply_branch(&self, branch: usize, m: &HermitianOperator) -> HermitianOperator {
        let mut out = HermitianOperator::zeros(self.dim_out);
        for k in &self.branches[branch] {
            out = out.add(&m.conjugate_by(k));
        }
        out
    }

    /// Adjoint of branch `z`: `Σ_t K_{z,t}† m K_{z,t}`.
    pub fn apply_branch_adjoint(&self, branch: usize, m: &HermitianOperator) -> HermitianOperator {
        let mut out = HermitianOperator::zeros(self.dim_in);
        for k in &self.branches[branch] {
            out = out.add(&m.conjugate_by(&k.dagger()));
        }
        out
    }
}

/// One-way-LOCC measurement strategy: Bob measures with an instrument
/// (branches `y`), communicates `y`, and Alice picks `x ~ p(x|y)`.
#[derive(Clone, Debug)]
pub struct MeasurementStrategy {
    /// Row `y` is the distribution of `x` given `y`.
    p_x_given_y: Vec<Vec<f64>>,
    instrument: Instrument,
}

impl MeasurementStrategy {
    pub fn new(p_x_given_y: Vec<Vec<f64>>, instrument: Instrument) -> Result<Self> {
        if p_x_given_y.len() != instrument.n_branches() {
            return Err(Error::DimensionMismatch(
                "strategy needs one input distribution per instrument branch".into(),
            ));
        }
        for row in &p_x_given_y {
            validate_distribution(row)?;
        }
        Ok(Self { p_x_given_y, instrument })
    }

    /// The trivial strategy: identity instrument with a single branch and a
    /// fixed input distribution.
    pub fn trivial(p_x: &ProbabilityVector, dim_b: usize) -> Self {
        Self {
            p_x_given_y: vec![p_x.as_slice().to_vec()],
            instrument: Instrument::identity(dim_b),
        }
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn n_inputs(&self) -> usize {
        self.p_x_given_y[0].len()
    }

    pub fn p_x_given_y(&self, x: usize, y: usize) -> f64 {
        self.p_x_given_y[y][x]
    }
}

/// Restricted one-way-LOCC operation: Bob's communication reaches Alice only
/// after her box produced its outcome. Specified by `p(x|x_f)`, the outcome
/// post-processing `p(a_f|a,x,x_f,z)`, and an instrument with branches `z`.
#[derive(Clone, Debug)]
pub struct RestrictedOneWayLocc {
    /// Row `x_f` is the distribution of `x`.
    p_x_given_xf: Vec<Vec<f64>>,
    /// `p_af[[((a, x), x_f), z]][a_f]` flattened; see [`Self::p_af`].
    p_af_given: Vec<f64>,
    instrument: Instrument,
    n_inputs: usize,
    n_outcomes: usize,
    n_final_inputs: usize,
    n_final_outcomes: usize,
}

impl RestrictedOneWayLocc {
    pub fn new(
        p_x_given_xf: Vec<Vec<f64>>,
        p_af_given: Vec<f64>,
        instrument: Instrument,
        shape: (usize, usize, usize, usize),
    ) -> Result<Self> {
        let (n_inputs, n_outcomes, n_final_inputs, n_final_outcomes) = shape;
        if p_x_given_xf.len() != n_final_inputs
            || p_x_given_xf.iter().any(|row| row.len() != n_inputs)
        {
            return Err(Error::DimensionMismatch("p(x|x_f) shape mismatch".into()));
        }
        for row in &p_x_given_xf {
            validate_distribution(row)?;
        }
        let n_z = instrument.n_branches();
        let expected = n_outcomes * n_inputs * n_final_inputs * n_z * n_final_outcomes;
        if p_af_given.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "p(a_f|a,x,x_f,z) table has {} entries, expected {}",
                p_af_given.len(),
                expected
            )));
        }
        for chunk in p_af_given.chunks(n_final_outcomes) {
            validate_distribution(chunk)?;
        }
        Ok(Self {
            p_x_given_xf,
            p_af_given,
            instrument,
            n_inputs,
            n_outcomes,
            n_final_inputs,
            n_final_outcomes,
        })
    }

    /// The identity operation on an assemblage shape.
    pub fn identity(n_inputs: usize, n_outcomes: usize, dim_b: usize) -> Self {
        let p_x_given_xf =
            (0..n_inputs).map(|xf| (0..n_inputs).map(|x| f64::from(u8::from(x == xf))).collect()).collect();
        let n = n_outcomes * n_inputs * n_inputs * n_outcomes;
        let mut p_af = vec![0.0; n];
        for a in 0..n_outcomes {
            for x in 0..n_inputs {
                for xf in 0..n_inputs {
                    let base = ((a * n_inputs + x) * n_inputs + xf) * n_outcomes;
                    p_af[base + a] = 1.0;
                }
            }
        }
        Self {
            p_x_given_xf,
            p_af_given: p_af,
            instrument: Instrument::identity(dim_b),
            n_inputs,
            n_outcomes,
            n_final_inputs: n_inputs,
            n_final_outcomes: n_outcomes,
        }
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn n_final_inputs(&self) -> usize {
        self.n_final_inputs
    }

    pub fn n_final_outcomes(&self) -> usize {
        self.n_final_outcomes
    }

    pub fn p_x(&self, x: usize, xf: usize) -> f64 {
        self.p_x_given_xf[xf][x]
    }

    pub fn p_af(&self, af: usize, a: usize, x: usize, xf: usize, z: usize) -> f64 {
        let idx = ((((a * self.n_inputs + x) * self.n_final_inputs + xf)
            * self.instrument.n_branches()
            + z)
            * self.n_final_outcomes)
            + af;
        self.p_af_given[idx]
    }

    /// Sequential composition: `other` applied after `self` equals the
    /// returned single operation. Branches multiply; the classical parts
    /// fold through the Bayes-consistent mixture over the intermediate
    /// input alphabet.
    pub fn compose(&self, other: &RestrictedOneWayLocc) -> Result<RestrictedOneWayLocc> {
        if other.n_inputs != self.n_final_inputs || other.n_outcomes != self.n_final_outcomes {
            return Err(Error::DimensionMismatch(
                "composition shapes do not chain".into(),
            ));
        }
        if other.instrument.dim_in() != self.instrument.dim_out() {
            return Err(Error::DimensionMismatch(
                "composition instrument dims do not chain".into(),
            ));
        }
        let n_x = self.n_inputs;
        let n_a = self.n_outcomes;
        let n_xm = self.n_final_inputs; // intermediate inputs
        let n_xf = other.n_final_inputs;
        let n_af = other.n_final_outcomes;
        let n_z1 = self.instrument.n_branches();
        let n_z2 = other.instrument.n_branches();

        // p'(x|x_f) = Σ_{x_m} p₂(x_m|x_f) p₁(x|x_m)
        let p_x_given_xf: Vec<Vec<f64>> = (0..n_xf)
            .map(|xf| {
                (0..n_x)
                    .map(|x| {
                        (0..n_xm).map(|xm| other.p_x(xm, xf) * self.p_x(x, xm)).sum()
                    })
                    .collect()
            })
            .collect();

        // p'(a_f|a,x,x_f,(z1,z2)) folds the intermediate registers with
        // Bayes weights q(x_m|x,x_f) ∝ p₂(x_m|x_f) p₁(x|x_m).
        let n_z = n_z1 * n_z2;
        let mut p_af_given = vec![0.0; n_a * n_x * n_xf * n_z * n_af];
        for a in 0..n_a {
            for x in 0..n_x {
                for xf in 0..n_xf {
                    let total = p_x_given_xf[xf][x];
                    for z1 in 0..n_z1 {
                        for z2 in 0..n_z2 {
                            let z = z1 * n_z2 + z2;
                            let base = (((a * n_x + x) * n_xf + xf) * n_z + z) * n_af;
                            for af in 0..n_af {
                                let mut acc = 0.0;
                                for xm in 0..n_xm {
                                    let w = other.p_x(xm, xf) * self.p_x(x, xm);
                                    let q = if total > 0.0 { w / total } else {
                                        1.0 / n_xm as f64
                                    };
                                    if q == 0.0 {
                                        continue;
                                    }
                                    let mut inner = 0.0;
                                    for am in 0..self.n_final_outcomes {
                                        inner += self.p_af(am, a, x, xm, z1)
                                            * other.p_af(af, am, xm, xf, z2);
                                    }
                                    acc += q * inner;
                                }
                                p_af_given[base + af] = acc;
                            }
                        }
                    }
                }
            }
        }

        // Branch Kraus lists compose pairwise.
        let mut branches = Vec::with_capacity(n_z);
        for z1 in 0..n_z1 {
            for z2 in 0..n_z2 {
                let mut list = Vec::new();
                for k1 in self.instrument.kraus(z1) {
                    for k2 in other.instrument.kraus(z2) {
                        list.push(k2.matmul(k1));
                    }
                }
                branches.push(list);
            }
        }
        let instrument =
            Instrument::new(branches, self.instrument.dim_in(), other.instrument.dim_out())?;

        RestrictedOneWayLocc::new(
            p_x_given_xf,
            p_af_given,
            instrument,
            (n_x, n_a, n_xf, n_af),
        )
    }
}

fn validate_distribution(row: &[f64]) -> Result<()> {
    if row.iter().any(|&v| v < -STOCHASTIC_TOL || !v.is_finite()) {
        return Err(Error::InvalidParameter("conditional has negative entries".into()));
    }
    let s: f64 = row.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL.max(1e-9) {
        return Err(Error::InvalidParameter(format!("conditional sums to {s}, expected 1")));
    }
    Ok(())
}

/// Assemblage: subnormalized positive operators `ρ̂_B^{a,x}` on Bob's space,
/// indexed by Alice's input `x` and outcome `a`, constrained by
/// no-signaling and unit total trace per input.
#[derive(Clone, Debug)]
pub struct Assemblage {
    n_inputs: usize,
    n_outcomes: usize,
    dim_b: usize,
    /// Row-major by `(x, a)`.
    elements: Vec<HermitianOperator>,
}

impl Assemblage {
    pub fn new(
        n_inputs: usize,
        n_outcomes: usize,
        dim_b: usize,
        elements: Vec<HermitianOperator>,
    ) -> Result<Self> {
        if elements.len() != n_inputs * n_outcomes {
            return Err(Error::DimensionMismatch(format!(
                "assemblage needs {} elements, got {}",
                n_inputs * n_outcomes,
                elements.len()
            )));
        }
        if n_inputs == 0 || n_outcomes == 0 || dim_b == 0 {
            return Err(Error::InvalidParameter("assemblage shape must be nonzero".into()));
        }
        let asm = Self { n_inputs, n_outcomes, dim_b, elements };
        asm.validate()?;
        Ok(asm)
    }

    /// Checks element shape and PSD-ness, the no-signaling constraint, and
    /// unit total trace per input.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.elements.iter().enumerate() {
            if e.dim() != self.dim_b {
                return Err(Error::DimensionMismatch(format!(
                    "element {} has dim {}, expected {}",
                    i,
                    e.dim(),
                    self.dim_b
                )));
            }
            let min = e.min_eigenvalue()?;
            if min < PSD_TOL {
                return Err(Error::InvariantViolation(format!(
                    "element {i} has eigenvalue {min:.3e} below PSD tolerance"
                )));
            }
        }
        let sums: Vec<HermitianOperator> =
            (0..self.n_inputs).map(|x| self.outcome_sum(x)).collect();
        let tr = sums[0].trace();
        if (tr - 1.0).abs() > NOSIG_TOL {
            return Err(Error::InvariantViolation(format!(
                "total trace per input is {tr}, expected 1"
            )));
        }
        for x in 1..self.n_inputs {
            let resid = sums[x].sub(&sums[0]).trace_norm();
            if resid > NOSIG_TOL {
                return Err(Error::InvariantViolation(format!(
                    "no-signaling violated between inputs 0 and {x}: residual {resid:.3e}"
                )));
            }
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn element(&self, x: usize, a: usize) -> &HermitianOperator {
        &self.elements[x * self.n_outcomes + a]
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    fn outcome_sum(&self, x: usize) -> HermitianOperator {
        let mut s = HermitianOperator::zeros(self.dim_b);
        for a in 0..self.n_outcomes {
            s = s.add(self.element(x, a));
        }
        s
    }

    /// Bob's reduced state `ρ_B = Σ_a ρ̂^{a,x}` (independent of `x`).
    pub fn reduced_state(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.outcome_sum(0).psd_clip_if_needed())
    }

    /// Conditional outcome distribution `p(a|x) = Tr ρ̂^{a,x}`, rows indexed
    /// by `x`.
    pub fn conditional_probs(&self) -> Vec<Vec<f64>> {
        (0..self.n_inputs)
            .map(|x| (0..self.n_outcomes).map(|a| self.element(x, a).trace().max(0.0)).collect())
            .collect()
    }

    /// Assemblage induced by measuring POVMs on Alice's side of a bipartite
    /// state: `ρ̂_B^{a,x} = Tr_A[(Λ_a^{(x)} ⊗ I_B) ρ_AB]`.
    pub fn from_state(
        rho_ab: &DensityOperator,
        dims: (usize, usize),
        povms: &[Povm],
    ) -> Result<Assemblage> {
        let (d_a, d_b) = dims;
        if d_a * d_b != rho_ab.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dim {} does not factor as {}x{}",
                rho_ab.dim(),
                d_a,
                d_b
            )));
        }
        if povms.is_empty() {
            return Err(Error::InvalidParameter("need at least one POVM".into()));
        }
        let n_outcomes = povms.iter().map(Povm::n_outcomes).max().unwrap();
        let mut elements = Vec::with_capacity(povms.len() * n_outcomes);
        let id_b = ComplexMatrix::identity(d_b);
        for povm in povms {
            if povm.dim() != d_a {
                return Err(Error::DimensionMismatch("POVM does not act on Alice's space".into()));
            }
            for a in 0..n_outcomes {
                if a < povm.n_outcomes() {
                    let op = HermitianOperator::symmetrize(
                        povm.element(a).matrix().kron(&id_b),
                    );
                    let weighted = HermitianOperator::symmetrize(
                        op.matrix().matmul(rho_ab.op().matrix()),
                    );
                    let elem = partial_trace(&weighted, &[d_a, d_b], &[1])?;
                    elements.push(elem);
                } else {
                    elements.push(HermitianOperator::zeros(d_b));
                }
            }
        }
        Assemblage::new(povms.len(), n_outcomes, d_b, elements)
    }

    /// Convex mixture `λ·self + (1−λ)·other`, elementwise.
    pub fn mix(&self, other: &Assemblage, lambda: f64) -> Result<Assemblage> {
        if (self.n_inputs, self.n_outcomes, self.dim_b)
            != (other.n_inputs, other.n_outcomes, other.dim_b)
        {
            return Err(Error::DimensionMismatch("mixing assemblages of different shape".into()));
        }
        let elements = self
            .elements
            .iter()
            .zip(&other.elements)
            .map(|(a, b)| a.scale(lambda).add(&b.scale(1.0 - lambda)))
            .collect();
        Assemblage::new(self.n_inputs, self.n_outcomes, self.dim_b, elements)
    }

    /// The LHS assemblage `{p(a|x) ρ_B}` with this assemblage's statistics
    /// and reduced state (the product reference used by the upper bounds).
    pub fn product_reference(&self) -> Result<Assemblage> {
        let rho_b = self.reduced_state()?;
        let probs = self.conditional_probs();
        let elements = (0..self.n_inputs)
            .flat_map(|x| {
                let rho = rho_b.op().clone();
                let row = probs[x].clone();
                (0..self.n_outcomes).map(move |a| rho.scale(row[a])).collect::<Vec<_>>()
            })
            .collect();
        Assemblage::new(self.n_inputs, self.n_outcomes, self.dim_b, elements)
    }

    /// Embeds the assemblage into the classical–quantum state
    /// `ρ_{XĀB} = Σ_{x,a} p_X(x) |x⟩⟨x| ⊗ |a⟩⟨a| ⊗ ρ̂_B^{a,x}`.
    pub fn embed_cq(&self, p_x: &ProbabilityVector) -> Result<CqState> {
        if p_x.len() != self.n_inputs {
            return Err(Error::DimensionMismatch(format!(
                "p_X has {} entries for {} inputs",
                p_x.len(),
                self.n_inputs
            )));
        }
        let registers = vec![
            Register { name: "x".into(), size: self.n_inputs },
            Register { name: "a".into(), size: self.n_outcomes },
        ];
        let mut blocks = Vec::with_capacity(self.n_inputs * self.n_outcomes);
        for x in 0..self.n_inputs {
            for a in 0..self.n_outcomes {
                blocks.push(self.element(x, a).scale(p_x.get(x)));
            }
        }
        CqState::new(registers, self.dim_b, blocks)
    }

    /// State after a 1W-LOCC measurement strategy:
    /// `ρ_{XĀB'Y} = Σ_{x,a,y} p(x|y) |x⟩⟨x| ⊗ |a⟩⟨a| ⊗ K_y(ρ̂^{a,x}) ⊗ |y⟩⟨y|`.
    pub fn apply_measurement_strategy(&self, strat: &MeasurementStrategy) -> Result<CqState> {
        if strat.instrument().dim_in() != self.dim_b {
            return Err(Error::DimensionMismatch(format!(
                "instrument acts on dim {}, assemblage has dim {}",
                strat.instrument().dim_in(),
                self.dim_b
            )));
        }
        if strat.n_inputs() != self.n_inputs {
            return Err(Error::DimensionMismatch("strategy input alphabet mismatch".into()));
        }
        let n_y = strat.instrument().n_branches();
        let registers = vec![
            Register { name: "x".into(), size: self.n_inputs },
            Register { name: "a".into(), size: self.n_outcomes },
            Register { name: "y".into(), size: n_y },
        ];
        let mut blocks = Vec::with_capacity(self.n_inputs * self.n_outcomes * n_y);
        for x in 0..self.n_inputs {
            for a in 0..self.n_outcomes {
                for y in 0..n_y {
                    let mapped = strat.instrument().apply_branch(y, self.element(x, a));
                    blocks.push(mapped.scale(strat.p_x_given_y(x, y)));
                }
            }
        }
        CqState::new(registers, strat.instrument().dim_out(), blocks)
    }

    /// Applies a restricted 1W-LOCC operation, producing the assemblage
    /// `ω̂^{a_f,x_f} = Σ_{a,x,z} p(x|x_f) p(a_f|a,x,x_f,z) K_z(ρ̂^{a,x})`.
    ///
    /// The output is validated; an invariant failure signals an invalid
    /// operation rather than a numerical accident.
    pub fn apply_restricted_1wlocc(&self, op: &RestrictedOneWayLocc) -> Result<Assemblage> {
        if op.n_inputs != self.n_inputs || op.n_outcomes != self.n_outcomes {
            return Err(Error::DimensionMismatch("operation alphabet mismatch".into()));
        }
        if op.instrument.dim_in() != self.dim_b {
            return Err(Error::DimensionMismatch("operation instrument dim mismatch".into()));
        }
        let d_out = op.instrument.dim_out();
        let n_z = op.instrument.n_branches();
        // Precompute K_z(ρ̂^{a,x}).
        let mapped: Vec<Vec<HermitianOperator>> = (0..n_z)
            .map(|z| self.elements.iter().map(|e| op.instrument.apply_branch(z, e)).collect())
            .collect();
        let mut elements = Vec::with_capacity(op.n_final_inputs * op.n_final_outcomes);
        for xf in 0..op.n_final_inputs {
            for af in 0..op.n_final_outcomes {
                let mut acc = HermitianOperator::zeros(d_out);
                for x in 0..self.n_inputs {
                    let px = op.p_x(x, xf);
                    if px == 0.0 {
                        continue;
                    }
                    for a in 0..self.n_outcomes {
                        for z in 0..n_z {
                            let w = px * op.p_af(af, a, x, xf, z);
                            if w == 0.0 {
                                continue;
                            }
                            acc = acc.add(&mapped[z][x * self.n_outcomes + a].scale(w));
                        }
                    }
                }
                elements.push(acc);
            }
        }
        Assemblage::new(op.n_final_inputs, op.n_final_outcomes, d_out, elements)
    }
}

trait PsdClipIfNeeded {
    fn psd_clip_if_needed(self) -> HermitianOperator;
}

impl PsdClipIfNeeded for HermitianOperator {
    /// Clears the tiny negative eigenvalues admitted by the PSD tolerance so
    /// the result passes strict `DensityOperator` validation.
    fn psd_clip_if_needed(self) -> HermitianOperator {
        match self.min_eigenvalue() {
            Ok(min) if min < 0.0 => {
                let clipped = self.psd_clip();
                let tr = clipped.trace();
                clipped.scale(1.0 / tr)
            }
            _ => self,
        }
    }
}

/// Classical register of a classical–quantum state.
#[derive(Clone, Debug)]
pub struct Register {
    pub name: String,
    pub size: usize,
}

/// Classical–quantum state stored as explicit blocks over the classical
/// index tuple; the full matrix is never materialized. Entropies and
/// relative entropies decompose blockwise.
#[derive(Clone, Debug)]
pub struct CqState {
    registers: Vec<Register>,
    dim_q: usize,
    /// Mixed-radix row-major over the registers; blocks absorb the classical
    /// probabilities (subnormalized).
    blocks: Vec<HermitianOperator>,
}

impl CqState {
    pub fn new(registers: Vec<Register>, dim_q: usize, blocks: Vec<HermitianOperator>) -> Result<Self> {
        let n: usize = registers.iter().map(|r| r.size).product();
        if blocks.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "cq state needs {} blocks, got {}",
                n,
                blocks.len()
            )));
        }
        let state = Self { registers, dim_q, blocks };
        let tr = state.total_trace();
        if (tr - 1.0).abs() > NOSIG_TOL {
            return Err(Error::InvariantViolation(format!(
                "cq state trace is {tr}, expected 1"
            )));
        }
        Ok(state)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn blocks(&self) -> &[HermitianOperator] {
        &self.blocks
    }

    pub fn block(&self, idx: &[usize]) -> &HermitianOperator {
        &self.blocks[self.flat_index(idx)]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.registers.len());
        let mut flat = 0;
        for (i, r) in self.registers.iter().enumerate() {
            assert!(idx[i] < r.size);
            flat = flat * r.size + idx[i];
        }
        flat
    }

    pub fn total_trace(&self) -> f64 {
        self.blocks.iter().map(HermitianOperator::trace).sum()
    }

    /// Entropy of the full state in bits (block-diagonal, so the blockwise
    /// eigenvalues are the state's spectrum).
    pub fn entropy(&self) -> f64 {
        self.blocks.iter().map(crate::linalg::entropy_psd).sum::<f64>().max(0.0)
    }

    /// Marginal keeping the listed classical registers (ascending indices)
    /// and, optionally, the quantum register.
    pub fn marginal(&self, keep: &[usize], keep_quantum: bool) -> CqState {
        let kept_regs: Vec<Register> = keep.iter().map(|&i| self.registers[i].clone()).collect();
        let out_q = if keep_quantum { self.dim_q } else { 1 };
        let n_out: usize = kept_regs.iter().map(|r| r.size).product();
        let mut out_blocks = vec![HermitianOperator::zeros(out_q); n_out];
        let sizes: Vec<usize> = self.registers.iter().map(|r| r.size).collect();
        let mut idx = vec![0usize; sizes.len()];
        for flat in 0..self.blocks.len() {
            // Decode mixed-radix.
            let mut rem = flat;
            for i in (0..sizes.len()).rev() {
                idx[i] = rem % sizes[i];
                rem /= sizes[i];
            }
            let mut out_flat = 0;
            for &k in keep {
                out_flat = out_flat * sizes[k] + idx[k];
            }
            let contrib = if keep_quantum {
                self.blocks[flat].clone()
            } else {
                HermitianOperator::diagonal(&[self.blocks[flat].trace()])
            };
            out_blocks[out_flat] = out_blocks[out_flat].add(&contrib);
        }
        CqState { registers: kept_regs, dim_q: out_q, blocks: out_blocks }
    }

    /// Relative entropy `D(self‖other)` in bits, decomposed blockwise.
    pub fn relative_entropy_to(&self, other: &CqState) -> crate::linalg::RelEntropy {
        use crate::linalg::RelEntropy;
        assert_eq!(self.blocks.len(), other.blocks.len(), "cq block structure mismatch");
        let mut total = 0.0;
        for (b1, b2) in self.blocks.iter().zip(&other.blocks) {
            if b1.trace() <= 1e-14 {
                continue;
            }
            if b2.trace() <= 1e-14 {
                return RelEntropy::Infinite;
            }
            match crate::linalg::relative_entropy_psd(b1, b2) {
                RelEntropy::Finite(v) => total += v,
                RelEntropy::Infinite => return RelEntropy::Infinite,
            }
        }
        RelEntropy::Finite(total.max(0.0))
    }

    /// Trace norm `‖self − other‖₁` (blockwise sum).
    pub fn trace_norm_diff(&self, other: &CqState) -> f64 {
        assert_eq!(self.blocks.len(), other.blocks.len(), "cq block structure mismatch");
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b).trace_norm()).sum()
    }

    /// Mutual information `I(S;T)` in bits where `S` is the listed classical
    /// register set plus (optionally) the quantum register and `T` is the
    /// complement of the classical registers (without the quantum register
    /// when it is part of `S`).
    pub fn mutual_information(&self, s_regs: &[usize], s_has_quantum: bool) -> f64 {
        let t_regs: Vec<usize> =
            (0..self.registers.len()).filter(|i| !s_regs.contains(i)).collect();
        let h_s = self.marginal(s_regs, s_has_quantum).entropy();
        let h_t = self.marginal(&t_regs, !s_has_quantum).entropy();
        let h_st = self.entropy();
        (h_s + h_t - h_st).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qubit_zx_povms() -> Vec<Povm> {
        let z = Povm::projective(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]])
            .unwrap();
        let s = 1.0 / 2f64.sqrt();
        let x = Povm::projective(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]])
            .unwrap();
        vec![z, x]
    }

    fn singlet() -> DensityOperator {
        let s = 1.0 / 2f64.sqrt();
        DensityOperator::pure(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn product_state_assemblage_factorizes() {
        let rho_a = HermitianOperator::diagonal(&[0.3, 0.7]);
        let rho_b = HermitianOperator::diagonal(&[0.6, 0.4]);
        let joint =
            DensityOperator::new(HermitianOperator::symmetrize(rho_a.matrix().kron(rho_b.matrix())))
                .unwrap();
        let povms = qubit_zx_povms();
        let asm = Assemblage::from_state(&joint, (2, 2), &povms).unwrap();
        // Elements must be p(a|x)·ρ_B.
        let probs = asm.conditional_probs();
        for x in 0..2 {
            for a in 0..2 {
                let expect = rho_b.scale(probs[x][a]);
                assert!(asm.element(x, a).sub(&expect).frobenius_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singlet_assemblage_conditional_states() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        // Each element is (1/2)·(pure qubit state); Z outcomes steer to Z
        // eigenstates (anti-correlated), X outcomes to X eigenstates.
        for x in 0..2 {
            for a in 0..2 {
                let e = asm.element(x, a);
                assert!((e.trace() - 0.5).abs() < 1e-12);
                let evs = e.eigenvalues().unwrap();
                assert!(evs[0].abs() < 1e-12 && (evs[1] - 0.5).abs() < 1e-12);
            }
        }
        let z0 = asm.element(0, 0);
        assert!((z0.get(1, 1).re - 0.5).abs() < 1e-12, "Z outcome 0 steers Bob to |1⟩");
        let rho_b = asm.reduced_state().unwrap();
        assert!(
            rho_b.op().sub(&HermitianOperator::identity(2).scale(0.5)).frobenius_norm() < 1e-12
        );
        let probs = asm.conditional_probs();
        for row in probs {
            for p in row {
                assert!((p - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trivial_povm_gives_reduced_state() {
        let rho = singlet();
        let asm = Assemblage::from_state(&rho, (2, 2), &[Povm::trivial(2)]).unwrap();
        assert_eq!(asm.n_outcomes(), 1);
        let expect = HermitianOperator::identity(2).scale(0.5);
        assert!(asm.element(0, 0).sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn embed_cq_point_mass() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        let cq = asm.embed_cq(&ProbabilityVector::point_mass(2, 0)).unwrap();
        assert!((cq.total_trace() - 1.0).abs() < 1e-12);
        for a in 0..2 {
            assert!(cq.block(&[1, a]).frobenius_norm() < 1e-14, "x=1 blocks vanish");
        }
        // Marginal on B is the reduced state regardless of p_X.
        let b = cq.marginal(&[], true);
        let expect = HermitianOperator::identity(2).scale(0.5);
        assert!(b.blocks()[0].sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn identity_strategy_matches_embed() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        let p = ProbabilityVector::uniform(2);
        let cq1 = asm.embed_cq(&p).unwrap();
        let cq2 = asm.apply_measurement_strategy(&MeasurementStrategy::trivial(&p, 2)).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                let d = cq1.block(&[x, a]).sub(cq2.block(&[x, a, 0])).frobenius_norm();
                assert!(d < 1e-14);
            }
        }
    }

    #[test]
    fn trace_out_strategy_is_classical() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        let strat =
            MeasurementStrategy::new(vec![vec![0.5, 0.5]; 2], Instrument::trace_out(2)).unwrap();
        let cq = asm.apply_measurement_strategy(&strat).unwrap();
        assert_eq!(cq.dim_q(), 1);
        assert!((cq.total_trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_restricted_op_preserves_assemblage() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        let op = RestrictedOneWayLocc::identity(2, 2, 2);
        let out = asm.apply_restricted_1wlocc(&op).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                assert!(out.element(x, a).sub(asm.element(x, a)).frobenius_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_outcome_op_discards_information() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        // a_f always 0, x_f = x, identity instrument.
        let p_x = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut p_af = vec![0.0; 2 * 2 * 2 * 1 * 2];
        for a in 0..2 {
            for x in 0..2 {
                for xf in 0..2 {
                    let base = (((a * 2 + x) * 2 + xf) * 1) * 2;
                    p_af[base] = 1.0;
                }
            }
        }
        let op = RestrictedOneWayLocc::new(p_x, p_af, Instrument::identity(2), (2, 2, 2, 2))
            .unwrap();
        let out = asm.apply_restricted_1wlocc(&op).unwrap();
        let half = HermitianOperator::identity(2).scale(0.5);
        for x in 0..2 {
            assert!(out.element(x, 0).sub(&half).frobenius_norm() < 1e-12);
            assert!(out.element(x, 1).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn mutual_information_of_singlet_cq() {
        let asm = Assemblage::from_state(&singlet(), (2, 2), &qubit_zx_povms()).unwrap();
        let cq = asm.embed_cq(&ProbabilityVector::uniform(2)).unwrap();
        // I({x} ∪ B ; a)
        let i = cq.mutual_information(&[0], true);
        assert!((i - 1.0).abs() < 1e-9, "got {i}");
    }
}
