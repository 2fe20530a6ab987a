//! Discrete POVMs, density matrices and informationally complete ensembles.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matops::{eig_hermitian, CMatrix, HermitianMatrix};

/// Tolerance on the unit trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-9;
/// Outcome probabilities this far outside `[0, 1]` are clamped silently.
pub const PROB_CLAMP_TOL: f64 = 1e-10;

/// One POVM element: a PSD operator bounded by the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Effect(HermitianMatrix);

impl Effect {
    pub fn new(m: HermitianMatrix, tol: f64) -> Result<Self> {
        Self::checked(m, "", tol)
    }

    fn checked(m: HermitianMatrix, label: &str, tol: f64) -> Result<Self> {
        let e = eig_hermitian(&m)?;
        if e.min() < -tol {
            return Err(Error::NotPsd {
                label: label.to_string(),
                min_eig: e.min(),
            });
        }
        if e.max() > 1.0 + tol {
            return Err(Error::EffectTooLarge {
                label: label.to_string(),
                norm: e.max(),
            });
        }
        Ok(Self(m))
    }

    pub(crate) fn unchecked(m: HermitianMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub label: String,
    #[serde(rename = "matrix")]
    pub effect: Effect,
}

/// Unvalidated POVM as read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPovm {
    pub dim: usize,
    pub outcomes: Vec<RawOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawOutcome {
    pub label: String,
    pub matrix: CMatrix,
}

/// A finite family of labelled effects summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePovm {
    dim: usize,
    outcomes: Vec<Outcome>,
}

impl DiscretePovm {
    /// Validates labelled matrices against the POVM axioms.
    pub fn new(dim: usize, outcomes: Vec<(String, CMatrix)>, tol: &Tolerances) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Schema("dim must be positive".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::Empty);
        }
        let mut seen = HashSet::new();
        let mut validated = Vec::with_capacity(outcomes.len());
        for (label, m) in outcomes {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label));
            }
            let h = HermitianMatrix::new(m)?;
            let effect = Effect::checked(h, &label, tol.psd)?;
            validated.push(Outcome { label, effect });
        }
        let povm = Self {
            dim,
            outcomes: validated,
        };
        let deficit = povm.completeness_defect();
        if deficit > tol.comp {
            return Err(Error::CompletenessViolated { deficit });
        }
        Ok(povm)
    }

    pub fn from_raw(raw: RawPovm, tol: &Tolerances) -> Result<Self> {
        Self::new(
            raw.dim,
            raw.outcomes.into_iter().map(|o| (o.label, o.matrix)).collect(),
            tol,
        )
    }

    pub fn from_json(s: &str, tol: &Tolerances) -> Result<Self> {
        Self::from_raw(serde_json::from_str(s)?, tol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("POVM serialization cannot fail")
    }

    /// Builds from Hermitian parts already known to satisfy the axioms.
    pub(crate) fn from_parts(dim: usize, outcomes: Vec<(String, HermitianMatrix)>) -> Self {
        Self {
            dim,
            outcomes: outcomes
                .into_iter()
                .map(|(label, m)| Outcome {
                    label,
                    effect: Effect::unchecked(m),
                })
                .collect(),
        }
    }

    /// Convenience constructor from real diagonal effects with labels "0", "1", ...
    pub fn from_diagonals(diags: &[&[f64]], tol: &Tolerances) -> Result<Self> {
        let dim = diags.first().map_or(0, |d| d.len());
        Self::new(
            dim,
            diags
                .iter()
                .enumerate()
                .map(|(i, d)| (i.to_string(), CMatrix::from_real_diag(d)))
                .collect(),
            tol,
        )
    }

    /// Computational-basis projective measurement.
    pub fn computational_basis(dim: usize) -> Self {
        Self::from_parts(
            dim,
            (0..dim)
                .map(|j| {
                    let mut d = vec![0.0; dim];
                    d[j] = 1.0;
                    (j.to_string(), HermitianMatrix::from_real_diag(&d))
                })
                .collect(),
        )
    }

    /// The single-outcome POVM `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self::from_parts(dim, vec![("0".into(), HermitianMatrix::identity(dim))])
    }

    /// Qubit trine `{(2/3)|psi_k><psi_k|}` with `psi_k` at 120 degree Bloch separation.
    pub fn trine() -> Self {
        Self::from_parts(
            2,
            (0..3)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                    let v = [Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)];
                    (k.to_string(), HermitianMatrix::outer(&v).scale(2.0 / 3.0))
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> Vec<&str> {
        self.outcomes.iter().map(|o| o.label.as_str()).collect()
    }

    pub fn effect(&self, label: &str) -> Option<&Effect> {
        self.outcomes.iter().find(|o| o.label == label).map(|o| &o.effect)
    }

    pub fn effects(&self) -> impl Iterator<Item = &HermitianMatrix> {
        self.outcomes.iter().map(|o| o.effect.matrix())
    }

    pub fn sum(&self) -> HermitianMatrix {
        self.effects().cloned().sum()
    }

    /// `||sum_x A(x) - I||_F`.
    pub fn completeness_defect(&self) -> f64 {
        self.sum().distance(&HermitianMatrix::identity(self.dim))
    }

    /// Relabels through `f`, summing effects that share an image label.
    /// Output labels follow the order of first appearance.
    pub fn pushforward(&self, f: impl Fn(&str) -> String) -> DiscretePovm {
        let mut order: Vec<String> = Vec::new();
        let mut sums: HashMap<String, HermitianMatrix> = HashMap::new();
        for o in &self.outcomes {
            let target = f(&o.label);
            match sums.get_mut(&target) {
                Some(acc) => *acc = &*acc + o.effect.matrix(),
                None => {
                    order.push(target.clone());
                    sums.insert(target, o.effect.matrix().clone());
                }
            }
        }
        Self::from_parts(
            self.dim,
            order
                .into_iter()
                .map(|l| {
                    let m = sums.remove(&l).expect("label recorded on insertion");
                    (l, m)
                })
                .collect(),
        )
    }

    /// Pushforward through an explicit label map, which must be total.
    pub fn pushforward_map(&self, map: &BTreeMap<String, String>) -> Result<DiscretePovm> {
        for o in &self.outcomes {
            if !map.contains_key(&o.label) {
                return Err(Error::UnknownLabel(o.label.clone()));
            }
        }
        Ok(self.pushforward(|l| map[l].clone()))
    }

    /// Drops the outcomes whose effect trace is below `eps_zero`.
    pub fn non_vanishing(&self, eps_zero: f64) -> (DiscretePovm, Vec<String>) {
        let (kept, dropped): (Vec<&Outcome>, Vec<&Outcome>) =
            self.outcomes.iter().partition(|o| o.effect.trace() >= eps_zero);
        (
            Self {
                dim: self.dim,
                outcomes: kept.into_iter().cloned().collect(),
            },
            dropped.into_iter().map(|o| o.label.clone()).collect(),
        )
    }

    pub fn relabel(&self, f: impl Fn(&str) -> String) -> DiscretePovm {
        Self {
            dim: self.dim,
            outcomes: self
                .outcomes
                .iter()
                .map(|o| Outcome {
                    label: f(&o.label),
                    effect: o.effect.clone(),
                })
                .collect(),
        }
    }
}

/// Label `"(x,y)"` of a pair outcome.
pub fn pair_label(x: &str, y: &str) -> String {
    format!("({x},{y})")
}

/// POVM on a product outcome set, remembering both components of each label.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPovm {
    pub povm: DiscretePovm,
    /// `(first, second)` components, aligned with `povm.outcomes()`.
    pub pairs: Vec<(String, String)>,
}

impl JointPovm {
    /// Builds `C(x,y)` from effects listed with their components.
    pub(crate) fn from_pairs(dim: usize, items: Vec<((String, String), HermitianMatrix)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut pairs = Vec::with_capacity(items.len());
        let mut outcomes = Vec::with_capacity(items.len());
        for ((x, y), m) in items {
            let label = pair_label(&x, &y);
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label));
            }
            outcomes.push((label, m));
            pairs.push((x, y));
        }
        Ok(Self {
            povm: DiscretePovm::from_parts(dim, outcomes),
            pairs,
        })
    }

    /// Map from pair label to its second component (the projection `pi_2`).
    pub fn second_projection(&self) -> BTreeMap<String, String> {
        self.povm
            .labels()
            .into_iter()
            .zip(&self.pairs)
            .map(|(l, (_, y))| (l.to_string(), y.clone()))
            .collect()
    }

    /// Map from pair label to its first component (the projection `pi_1`).
    pub fn first_projection(&self) -> BTreeMap<String, String> {
        self.povm
            .labels()
            .into_iter()
            .zip(&self.pairs)
            .map(|(l, (x, _))| (l.to_string(), x.clone()))
            .collect()
    }

    pub fn marginal_first(&self) -> DiscretePovm {
        let map = self.first_projection();
        self.povm.pushforward(|l| map[l].clone())
    }

    pub fn marginal_second(&self) -> DiscretePovm {
        let map = self.second_projection();
        self.povm.pushforward(|l| map[l].clone())
    }
}

impl<'de> Deserialize<'de> for DiscretePovm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPovm::deserialize(d)?;
        DiscretePovm::from_raw(raw, &Tolerances::default()).map_err(serde::de::Error::custom)
    }
}

/// Positive semidefinite operator with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawState {
    pub dim: usize,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: HermitianMatrix, tol: f64) -> Result<Self> {
        let tr = m.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = eig_hermitian(&m)?.min();
        if min_eig < -tol {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:.3e} is negative"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn unchecked(m: HermitianMatrix) -> Self {
        Self(m)
    }

    /// Normalized projector onto `v`.
    pub fn pure(v: &[Complex64]) -> Self {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        Self(HermitianMatrix::outer(v).scale(1.0 / norm))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|j><j|`.
    pub fn basis(dim: usize, j: usize) -> Self {
        let mut d = vec![0.0; dim];
        d[j] = 1.0;
        Self(HermitianMatrix::from_real_diag(&d))
    }

    pub fn from_raw(raw: RawState, tol: &Tolerances) -> Result<Self> {
        if raw.matrix.dim() != raw.dim {
            return Err(Error::DimensionMismatch {
                expected: raw.dim,
                found: raw.matrix.dim(),
            });
        }
        Self::new(HermitianMatrix::new(raw.matrix)?, tol.psd)
    }

    pub fn from_json(s: &str, tol: &Tolerances) -> Result<Self> {
        Self::from_raw(serde_json::from_str(s)?, tol)
    }

    pub fn to_raw(&self) -> RawState {
        RawState {
            dim: self.dim(),
            matrix: self.0.as_matrix().clone(),
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Finite weighted family of states with a strictly positive mixture.
#[derive(Debug, Clone)]
pub struct StateEnsemble {
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
    pivotal: DensityMatrix,
    informationally_complete: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEnsemble {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub pivotal: CMatrix,
    pub informationally_complete: bool,
}

impl StateEnsemble {
    /// Forms the mixture `sum_i c_i rho_i`, which must be positive definite.
    pub fn new(states: Vec<DensityMatrix>, weights: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidEnsemble("no states".into()));
        }
        if states.len() != weights.len() {
            return Err(Error::LengthMismatch(states.len(), weights.len()));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidEnsemble("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        let pivotal: HermitianMatrix = states.iter().zip(&weights).map(|(s, &w)| s.matrix().scale(w)).sum();
        let min_eig = eig_hermitian(&pivotal)?.min();
        if min_eig <= 0.0 {
            return Err(Error::InvalidEnsemble(format!(
                "pivotal state is not positive definite (minimum eigenvalue {min_eig:.3e})"
            )));
        }
        let informationally_complete = gram_rank(&states)? == dim * dim;
        Ok(Self {
            states,
            weights,
            pivotal: DensityMatrix(pivotal),
            informationally_complete,
        })
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pivotal(&self) -> &DensityMatrix {
        &self.pivotal
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.informationally_complete
    }

    pub fn dim(&self) -> usize {
        self.pivotal.dim()
    }

    pub fn to_raw(&self) -> RawEnsemble {
        RawEnsemble {
            dim: self.dim(),
            weights: self.weights.clone(),
            states: self.states.iter().map(|s| s.matrix().as_matrix().clone()).collect(),
            pivotal: self.pivotal.matrix().as_matrix().clone(),
            informationally_complete: self.informationally_complete,
        }
    }
}

/// Numerical rank of the Hilbert-Schmidt Gram matrix `tr(rho_i rho_j)`.
pub fn gram_rank(states: &[DensityMatrix]) -> Result<usize> {
    let m = states.len();
    let mut g = CMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = Complex64::new(states[i].matrix().trace_product(states[j].matrix()), 0.0);
        }
    }
    let vals = eig_hermitian(&HermitianMatrix::symmetrize(&g))?.values;
    let cutoff = 1e-10 * vals.first().copied().unwrap_or(0.0).max(1.0);
    Ok(vals.iter().filter(|&&v| v > cutoff).count())
}

/// The `d^2` pure states `|j>`, `(|j>+|k>)/sqrt2`, `(|j>+i|k>)/sqrt2` with uniform weights.
pub fn tomographic_ensemble(dim: usize) -> StateEnsemble {
    assert!(dim >= 1, "ensemble dimension must be positive");
    let zero = Complex64::new(0.0, 0.0);
    let mut states = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        states.push(DensityMatrix::basis(dim, j));
    }
    for j in 0..dim {
        for k in (j + 1)..dim {
            let mut v = vec![zero; dim];
            v[j] = Complex64::new(1.0, 0.0);
            v[k] = Complex64::new(1.0, 0.0);
            states.push(DensityMatrix::pure(&v));
            v[k] = Complex64::new(0.0, 1.0);
            states.push(DensityMatrix::pure(&v));
        }
    }
    let n = states.len();
    let ensemble = StateEnsemble::new(states, vec![1.0 / n as f64; n])
        .expect("tomographic ensemble has a positive definite mixture");
    debug_assert!(ensemble.informationally_complete);
    ensemble
}

/// `p(x) = tr(rho A(x))`, clamped into `[0, 1]`.
pub fn outcome_distribution(povm: &DiscretePovm, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho.dim(),
        });
    }
    Ok(povm
        .effects()
        .map(|a| rho.matrix().trace_product(a).clamp(0.0, 1.0))
        .collect())
}
