//! JSON interchange format for assemblages and the command implementations
//! behind the `steer` binary.
//!
//! Exit-code taxonomy: 0 success/feasible, 1 malformed input or bad
//! parameters, 2 infeasible, 3 inconclusive — so scripts can branch on
//! steerability without parsing JSON. All payloads are UTF-8 JSON on
//! stdout; diagnostics go to stderr.

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::harness::{
    init_thread_pool, random_assemblage, run_suite, werner_assemblage, Rng, SuiteConfig,
};
use crate::lhs::{lhs_feasibility_with, FeasibilityStatus, SolverConfig};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::quantifiers::{
    restricted_res_with, restricted_trace_distance, restricted_upper_bound,
    trace_distance_lower_bound,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// On-disk assemblage document. Matrix entries are `[re, im]` pairs of
/// IEEE-754 doubles; serialization uses the shortest round-trip decimal
/// form, so serialize ∘ deserialize is value-identical.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AssemblageDocument {
    pub version: String,
    pub n_inputs: usize,
    pub n_outcomes: usize,
    pub dim_b: usize,
    /// `elements[x][a]` is a `dim_b × dim_b` row-major matrix of `[re, im]`.
    pub elements: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

pub const DOCUMENT_VERSION: &str = "1";

impl AssemblageDocument {
    pub fn from_assemblage(asm: &Assemblage) -> Self {
        let elements = (0..asm.n_inputs())
            .map(|x| {
                (0..asm.n_outcomes())
                    .map(|a| {
                        let e = asm.element(x, a);
                        (0..asm.dim_b())
                            .map(|i| {
                                (0..asm.dim_b())
                                    .map(|j| {
                                        let v = e.get(i, j);
                                        [v.re, v.im]
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            version: DOCUMENT_VERSION.into(),
            n_inputs: asm.n_inputs(),
            n_outcomes: asm.n_outcomes(),
            dim_b: asm.dim_b(),
            elements,
        }
    }

    pub fn to_assemblage(&self) -> Result<Assemblage> {
        if self.version != DOCUMENT_VERSION {
            return Err(Error::Document(format!(
                "unsupported document version {:?}",
                self.version
            )));
        }
        if self.elements.len() != self.n_inputs {
            return Err(Error::Document("elements outer length differs from n_inputs".into()));
        }
        let mut ops = Vec::with_capacity(self.n_inputs * self.n_outcomes);
        for (x, row) in self.elements.iter().enumerate() {
            if row.len() != self.n_outcomes {
                return Err(Error::Document(format!(
                    "elements[{x}] length differs from n_outcomes"
                )));
            }
            for (a, mat) in row.iter().enumerate() {
                if mat.len() != self.dim_b || mat.iter().any(|r| r.len() != self.dim_b) {
                    return Err(Error::Document(format!(
                        "elements[{x}][{a}] is not a {0}x{0} matrix",
                        self.dim_b
                    )));
                }
                let cm = ComplexMatrix::from_fn(self.dim_b, self.dim_b, |i, j| {
                    Complex64::new(mat[i][j][0], mat[i][j][1])
                });
                let op = HermitianOperator::new(cm).map_err(|e| {
                    Error::Document(format!("elements[{x}][{a}]: {e}"))
                })?;
                ops.push(op);
            }
        }
        Assemblage::new(self.n_inputs, self.n_outcomes, self.dim_b, ops)
    }
}

/// Reads and validates an assemblage document from a file.
pub fn load_assemblage(path: &str) -> Result<Assemblage> {
    let text = std::fs::read_to_string(path)?;
    let doc: AssemblageDocument =
        serde_json::from_str(&text).map_err(|e| Error::Document(e.to_string()))?;
    doc.to_assemblage()
}

pub fn save_assemblage(asm: &Assemblage, path: &str) -> Result<()> {
    let doc = AssemblageDocument::from_assemblage(asm);
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Outcome of a command: exit code plus the JSON payload for stdout.
pub struct CommandOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    fn ok(value: &impl Serialize) -> Self {
        Self {
            exit_code: 0,
            stdout: serde_json::to_string_pretty(value).expect("report serializes"),
            stderr: String::new(),
        }
    }
}

#[derive(Serialize)]
struct CheckLhsReport {
    status: String,
    feasible: bool,
    residual: f64,
    witness_value: f64,
    iterations: usize,
}

/// `steer check-lhs`: LHS membership with exit code 0/2/3.
pub fn cmd_check_lhs(path: &str, tol: Option<f64>) -> Result<CommandOutput> {
    let asm = load_assemblage(path)?;
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        if t <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        cfg.feas_tol = t;
    }
    let report = lhs_feasibility_with(&asm, &cfg)?;
    let (status, exit_code) = match report.status {
        FeasibilityStatus::Feasible => ("feasible", 0),
        FeasibilityStatus::Infeasible => ("infeasible", 2),
        FeasibilityStatus::Inconclusive => ("inconclusive", 3),
    };
    let payload = CheckLhsReport {
        status: status.into(),
        feasible: report.feasible(),
        residual: report.residual,
        witness_value: report.witness_value,
        iterations: report.iterations,
    };
    Ok(CommandOutput { exit_code, ..CommandOutput::ok(&payload) })
}

/// `steer rres`: restricted relative entropy of steering bracket.
pub fn cmd_rres(
    path: &str,
    inner_tol: Option<f64>,
    outer_iters: Option<usize>,
) -> Result<CommandOutput> {
    let asm = load_assemblage(path)?;
    let mut cfg = SolverConfig::default();
    if let Some(t) = inner_tol {
        if t <= 0.0 {
            return Err(Error::InvalidParameter("inner tolerance must be positive".into()));
        }
        cfg.inner_tol = t;
    }
    if let Some(n) = outer_iters {
        if n == 0 {
            return Err(Error::InvalidParameter("outer iterations must be positive".into()));
        }
        cfg.outer_iters = n;
    }
    let interval = restricted_res_with(&asm, &cfg)?;
    Ok(CommandOutput::ok(&interval))
}

#[derive(Serialize)]
struct DistanceReport {
    restricted: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    seesaw_lower_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seesaw_strategies: Option<usize>,
}

/// `steer distance`: restricted trace distance and, optionally, a seesaw
/// lower bound on the unrestricted distance from sampled strategies.
pub fn cmd_distance(
    path1: &str,
    path2: &str,
    seesaw: Option<usize>,
    seed: u64,
) -> Result<CommandOutput> {
    let a1 = load_assemblage(path1)?;
    let a2 = load_assemblage(path2)?;
    let restricted = restricted_trace_distance(&a1, &a2)?;
    let (seesaw_lower_bound, seesaw_strategies) = match seesaw {
        None => (None, None),
        Some(n) => {
            let strategies = crate::quantifiers::seesaw_strategies(&a1, &a2, n, seed)?;
            let lb = trace_distance_lower_bound(&a1, &a2, &strategies)?;
            (Some(lb), Some(strategies.len()))
        }
    };
    Ok(CommandOutput::ok(&DistanceReport { restricted, seesaw_lower_bound, seesaw_strategies }))
}

#[derive(Serialize)]
struct BoundsReport {
    /// sup over input distributions of the conditional mutual information
    /// between outcome and Bob's system given the input.
    cmi_layer: f64,
    /// min of the maximized outcome entropy and Bob's entropy.
    entropy_layer: f64,
    /// min of the logarithmic alphabet and dimension sizes.
    dimension_layer: f64,
    upper_bound: f64,
}

/// `steer bounds`: the entropic upper-bound chain, tightest first.
pub fn cmd_bounds(path: &str) -> Result<CommandOutput> {
    let asm = load_assemblage(path)?;
    let chain = restricted_upper_bound(&asm)?;
    Ok(CommandOutput::ok(&BoundsReport {
        cmi_layer: chain.cmi_layer,
        entropy_layer: chain.entropy_layer,
        dimension_layer: chain.dimension_layer,
        upper_bound: chain.tightest(),
    }))
}

/// `steer suite`: runs the property suite; exit 0 iff all properties pass.
pub fn cmd_suite(trials: usize, seed: u64, out: Option<&str>) -> Result<CommandOutput> {
    init_thread_pool();
    let report = run_suite(&SuiteConfig { trials, seed });
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(path) = out {
        std::fs::write(path, &json)?;
    }
    let mut stderr = String::new();
    for p in &report.properties {
        stderr.push_str(&format!(
            "{}: trials={} failures={} worst_margin={:+.3e} runtime={:.1?}\n",
            p.name, p.trials, p.failures, p.worst_margin, p.runtime
        ));
    }
    Ok(CommandOutput {
        exit_code: if report.all_pass() { 0 } else { 2 },
        stdout: json,
        stderr,
    })
}

/// `steer gen`: writes a generated assemblage document.
pub fn cmd_gen(
    kind: &str,
    params: &[f64],
    seed: u64,
    out: Option<&str>,
) -> Result<CommandOutput> {
    let asm = match kind {
        "werner" => {
            let eta = *params.first().ok_or_else(|| {
                Error::InvalidParameter("werner needs a visibility parameter".into())
            })?;
            werner_assemblage(eta)?
        }
        "random" => {
            let get = |i: usize, default: usize| -> usize {
                params.get(i).map(|&v| v as usize).unwrap_or(default)
            };
            let (nx, na, db) = (get(0, 2), get(1, 2), get(2, 2));
            if nx == 0 || na == 0 || db == 0 || na.pow(nx as u32) > 4096 {
                return Err(Error::InvalidParameter(format!(
                    "bad random shape ({nx}, {na}, {db})"
                )));
            }
            random_assemblage(nx, na, db, &mut Rng::new(seed))
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown generator kind {other:?} (expected werner|random)"
            )))
        }
    };
    let doc = AssemblageDocument::from_assemblage(&asm);
    let json = serde_json::to_string_pretty(&doc)?;
    if let Some(path) = out {
        std::fs::write(path, &json)?;
    }
    Ok(CommandOutput { exit_code: 0, stdout: json, stderr: String::new() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_round_trip_is_value_identical() {
        let asm = random_assemblage(2, 2, 2, &mut Rng::new(99));
        let doc = AssemblageDocument::from_assemblage(&asm);
        let json = serde_json::to_string(&doc).unwrap();
        let back: AssemblageDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, back);
        let json2 = serde_json::to_string(&back).unwrap();
        assert_eq!(json, json2);
        let asm2 = back.to_assemblage().unwrap();
        for (e1, e2) in asm.elements().iter().zip(asm2.elements()) {
            assert_eq!(e1.matrix().entries(), e2.matrix().entries());
        }
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let err = serde_json::from_str::<AssemblageDocument>("{\"version\":");
        assert!(err.is_err());
        let doc = AssemblageDocument {
            version: "1".into(),
            n_inputs: 2,
            n_outcomes: 2,
            dim_b: 2,
            elements: vec![],
        };
        assert!(doc.to_assemblage().is_err());
    }
}
