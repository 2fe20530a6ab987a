//! CP instruments in Kraus form, composition with a POVM, and the two
//! information-conservation conditions for `I * B`.
//!
//! Condition 1: some statistic `f: Ω₁×Ω₂ → Ω₂` is sufficient for the
//! composed POVM and pushes it forward onto `B` exactly.
//! Condition 2: the composed POVM is fuzzy equivalent to `B`.
//! Condition 1 implies condition 2, not conversely.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matops::{eig_hermitian, CMatrix, HermitianMatrix};
use crate::order::{equivalent, EquivalenceMethod};
use crate::povm::{DiscretePovm, JointPovm};
use crate::reduction::is_sufficient_statistic;

pub const DEFAULT_EXHAUSTIVE_LIMIT: u64 = 1_000_000;
/// Largest `|C| * |B|` for which condition 2 is cross-checked by the lp method.
pub const LP_CROSS_CHECK_LIMIT: usize = 144;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentOutcome {
    pub label: String,
    pub kraus: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrausInstrument {
    dim: usize,
    outcomes: Vec<InstrumentOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstrument {
    pub dim: usize,
    pub outcomes: Vec<InstrumentOutcome>,
}

impl KrausInstrument {
    pub fn new(dim: usize, outcomes: Vec<(String, Vec<CMatrix>)>, tol: &Tolerances) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Schema("dim must be positive".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidInstrument("no outcomes".into()));
        }
        let mut seen = HashSet::new();
        for (label, kraus) in &outcomes {
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
            if kraus.is_empty() {
                return Err(Error::InvalidInstrument(format!(
                    "outcome {label:?} has no Kraus operators"
                )));
            }
            if let Some(k) = kraus.iter().find(|k| k.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.dim(),
                });
            }
        }
        let inst = Self {
            dim,
            outcomes: outcomes
                .into_iter()
                .map(|(label, kraus)| InstrumentOutcome { label, kraus })
                .collect(),
        };
        let defect = inst.normalization_defect();
        if defect > tol.comp {
            return Err(Error::InvalidInstrument(format!(
                "||sum K^† K - I||_F = {defect:.6e} exceeds {:.1e}",
                tol.comp
            )));
        }
        Ok(inst)
    }

    pub fn from_raw(raw: RawInstrument, tol: &Tolerances) -> Result<Self> {
        Self::new(
            raw.dim,
            raw.outcomes.into_iter().map(|o| (o.label, o.kraus)).collect(),
            tol,
        )
    }

    pub fn from_json(s: &str, tol: &Tolerances) -> Result<Self> {
        Self::from_raw(serde_json::from_str(s)?, tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instrument serialization cannot fail")
    }

    /// The one-outcome instrument with Kraus operator `I`.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            outcomes: vec![InstrumentOutcome {
                label: "0".into(),
                kraus: vec![CMatrix::identity(dim)],
            }],
        }
    }

    /// Lüders instrument of `povm`: one Kraus operator `sqrt(A(x))` per outcome.
    pub fn luders(povm: &DiscretePovm) -> Result<Self> {
        let outcomes = povm
            .outcomes()
            .iter()
            .map(|o| {
                let root = eig_hermitian(o.effect.matrix())?.map_values(|v| v.max(0.0).sqrt());
                Ok(InstrumentOutcome {
                    label: o.label.clone(),
                    kraus: vec![root.into_matrix()],
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dim: povm.dim(),
            outcomes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[InstrumentOutcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> Vec<&str> {
        self.outcomes.iter().map(|o| o.label.as_str()).collect()
    }

    /// `||sum_{x,k} K^† K - I||_F`.
    pub fn normalization_defect(&self) -> f64 {
        let mut s = CMatrix::zeros(self.dim);
        for k in self.outcomes.iter().flat_map(|o| &o.kraus) {
            s = &s + &k.adjoint().matmul(k);
        }
        s.distance(&CMatrix::identity(self.dim))
    }

    /// Heisenberg-picture action `sum_k K_{x,k}^† a K_{x,k}`.
    pub fn heisenberg_apply(&self, label: &str, a: &HermitianMatrix) -> Result<HermitianMatrix> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        let o = self
            .outcomes
            .iter()
            .find(|o| o.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        Ok(apply_kraus(&o.kraus, a))
    }

    /// The instrument's own POVM `x -> I_x(I)`.
    pub fn povm(&self) -> DiscretePovm {
        let id = HermitianMatrix::identity(self.dim);
        DiscretePovm::from_parts(
            self.dim,
            self.outcomes
                .iter()
                .map(|o| (o.label.clone(), apply_kraus(&o.kraus, &id)))
                .collect(),
        )
    }
}

fn apply_kraus(kraus: &[CMatrix], a: &HermitianMatrix) -> HermitianMatrix {
    kraus.iter().map(|k| a.congruence(k)).sum()
}

/// Joint POVM `C(x,y) = I_x(B(y))` of the instrument followed by `b`.
pub fn compose(inst: &KrausInstrument, b: &DiscretePovm) -> Result<JointPovm> {
    if inst.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: inst.dim(),
            found: b.dim(),
        });
    }
    let mut items = Vec::with_capacity(inst.outcomes().len() * b.len());
    for io in inst.outcomes() {
        for bo in b.outcomes() {
            items.push((
                (io.label.clone(), bo.label.clone()),
                apply_kraus(&io.kraus, bo.effect.matrix()),
            ));
        }
    }
    JointPovm::from_pairs(b.dim(), items)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "statistic", rename_all = "snake_case")]
pub enum ExhaustiveSearch {
    /// The projection already witnesses condition 1.
    NotNeeded,
    /// Candidate count exceeds the configured limit.
    NotAttempted {
        candidates: f64,
    },
    Found(BTreeMap<String, String>),
    NoneExists,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition1 {
    pub holds_for_projection: bool,
    pub exhaustive_search: ExhaustiveSearch,
}

impl Condition1 {
    /// `Some(true/false)` when decided, `None` when unknown.
    pub fn verdict(&self) -> Option<bool> {
        if self.holds_for_projection {
            return Some(true);
        }
        match self.exhaustive_search {
            ExhaustiveSearch::Found(_) => Some(true),
            ExhaustiveSearch::NoneExists => Some(false),
            ExhaustiveSearch::NotNeeded | ExhaustiveSearch::NotAttempted { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationVerdict {
    pub condition1: Condition1,
    pub condition2: bool,
    /// Condition 2 decided by the lp method, when the instance is small enough.
    pub condition2_lp: Option<bool>,
    /// Bijection between reduced POVMs witnessing condition 2.
    pub bijection: Option<BTreeMap<String, String>>,
    /// Condition 1 does not hold without condition 2, and both methods agree.
    pub consistent: bool,
}

/// `C_f = B` on every label of `B` (labels outside `B` must carry zero effect).
fn pushes_onto(c: &DiscretePovm, f: &BTreeMap<String, String>, b: &DiscretePovm, tol: &Tolerances) -> bool {
    let image = c.pushforward(|l| f[l].clone());
    for o in image.outcomes() {
        let target = b.effect(&o.label);
        let diff = match target {
            Some(t) => o.effect.matrix().distance(t.matrix()),
            None => o.effect.matrix().frobenius_norm(),
        };
        if diff > tol.comp {
            return false;
        }
    }
    b.outcomes()
        .iter()
        .filter(|o| image.effect(&o.label).is_none())
        .all(|o| o.effect.matrix().frobenius_norm() <= tol.comp)
}

fn condition1_holds(c: &DiscretePovm, f: &BTreeMap<String, String>, b: &DiscretePovm, tol: &Tolerances) -> bool {
    pushes_onto(c, f, b, tol) && is_sufficient_statistic(c, |l| f[l].clone(), tol).holds
}

fn exhaustive(c: &DiscretePovm, b: &DiscretePovm, tol: &Tolerances, limit: u64) -> ExhaustiveSearch {
    let n = c.len();
    let k = b.len();
    let candidates = (k as f64).powi(n as i32);
    if candidates > limit as f64 {
        return ExhaustiveSearch::NotAttempted { candidates };
    }
    let labels_c: Vec<String> = c.labels().into_iter().map(String::from).collect();
    let labels_b: Vec<String> = b.labels().into_iter().map(String::from).collect();
    let mut digits = vec![0usize; n];
    loop {
        let f: BTreeMap<String, String> = labels_c
            .iter()
            .zip(&digits)
            .map(|(l, &d)| (l.clone(), labels_b[d].clone()))
            .collect();
        if condition1_holds(c, &f, b, tol) {
            return ExhaustiveSearch::Found(f);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return ExhaustiveSearch::NoneExists;
            }
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

pub fn check_conservation(
    inst: &KrausInstrument,
    b: &DiscretePovm,
    tol: &Tolerances,
    exhaustive_limit: u64,
) -> Result<ConservationVerdict> {
    let c = compose(inst, b)?;
    let pi2 = c.second_projection();
    let holds_for_projection = condition1_holds(&c.povm, &pi2, b, tol);
    let exhaustive_search = if holds_for_projection {
        ExhaustiveSearch::NotNeeded
    } else {
        exhaustive(&c.povm, b, tol, exhaustive_limit)
    };
    let condition1 = Condition1 {
        holds_for_projection,
        exhaustive_search,
    };

    let by_reduce = equivalent(&c.povm, b, EquivalenceMethod::Reduce, tol)?;
    let condition2_lp = if c.povm.len() * b.len() <= LP_CROSS_CHECK_LIMIT {
        Some(equivalent(&c.povm, b, EquivalenceMethod::Lp, tol)?.equivalent)
    } else {
        None
    };
    let condition2 = by_reduce.equivalent;
    let methods_agree = condition2_lp.is_none_or(|lp| lp == condition2);
    let implication_ok = condition1.verdict() != Some(true) || condition2;
    Ok(ConservationVerdict {
        condition1,
        condition2,
        condition2_lp,
        bijection: by_reduce.bijection,
        consistent: methods_agree && implication_ok,
    })
}
