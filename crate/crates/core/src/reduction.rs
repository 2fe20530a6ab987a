//! Minimal sufficient reduction of discrete POVMs.
//!
//! Two outcomes carry the same information exactly when their effects are
//! positive multiples of each other. Grouping proportional effects and
//! summing each group yields the pairwise linearly independent POVM that is
//! unique up to relabelling within the fuzzy equivalence class.
//!
//! The grouping is computed two ways:
//!
//! - [`reduce`] compares trace-normalized effects directly;
//! - [`reduce_via_lsb`] compares likelihood-ratio vectors
//!   `tr(rho_i A(x)) / tr(rho* A(x))` over an informationally complete
//!   ensemble, which is the statistic the general existence argument uses.
//!
//! Both must produce the same partition.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matching::match_effects;
use crate::matops::HermitianMatrix;
use crate::povm::{DiscretePovm, StateEnsemble};
use crate::union_find::UnionFind;

/// Groups whose members deviate from the representative by more than this
/// multiple of the grouping tolerance are rejected as ambiguous.
pub const COHERENCE_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionReport {
    /// Input label to group label (the sufficient statistic `S`).
    pub groups: BTreeMap<String, String>,
    /// Vanishing outcomes removed before grouping.
    pub dropped: Vec<String>,
    pub reduced: DiscretePovm,
    /// `h(x) = tr A(x) / tr Ā(S(x))`, so that `A(x) = h(x) Ā(S(x))`.
    pub h: BTreeMap<String, f64>,
}

impl ReductionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    /// Partition of the kept input labels, each block sorted, blocks sorted.
    pub fn partition(&self) -> Vec<Vec<String>> {
        let mut blocks: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (x, g) in &self.groups {
            blocks.entry(g.as_str()).or_default().push(x.clone());
        }
        let mut out: Vec<Vec<String>> = blocks.into_values().collect();
        for b in &mut out {
            b.sort();
        }
        out.sort();
        out
    }

    /// Largest `||A(x) - h(x) Ā(S(x))||_F / tr A(x)` over kept outcomes.
    pub fn factorization_defect(&self, input: &DiscretePovm) -> f64 {
        let mut worst: f64 = 0.0;
        for o in input.outcomes() {
            let Some(g) = self.groups.get(&o.label) else {
                continue;
            };
            let rep = self.reduced.effect(g).expect("group labels name reduced outcomes");
            let approx = rep.matrix().scale(self.h[&o.label]);
            let d = o.effect.matrix().distance(&approx) / o.effect.trace();
            worst = worst.max(d);
        }
        worst
    }
}

fn normalized(m: &HermitianMatrix) -> HermitianMatrix {
    m.scale(1.0 / m.trace())
}

/// Assembles a report from a partition of `kept` (indices into its outcomes).
/// `deviation(i, j)` measures how far member `i` is from member `j`.
fn assemble(
    kept: &DiscretePovm,
    dropped: Vec<String>,
    sets: Vec<Vec<usize>>,
    deviation: impl Fn(usize, usize) -> f64,
    limit: f64,
) -> Result<ReductionReport> {
    let outcomes = kept.outcomes();
    let mut groups = BTreeMap::new();
    let mut h = BTreeMap::new();
    let mut reduced = Vec::with_capacity(sets.len());
    for set in sets {
        let rep = *set
            .iter()
            .max_by(|&&i, &&j| {
                outcomes[i]
                    .effect
                    .trace()
                    .total_cmp(&outcomes[j].effect.trace())
                    .then(j.cmp(&i))
            })
            .expect("union-find sets are non-empty");
        for &i in &set {
            let dev = deviation(i, rep);
            if dev > limit {
                return Err(Error::ToleranceAmbiguity {
                    member: outcomes[i].label.clone(),
                    representative: outcomes[rep].label.clone(),
                    deviation: dev,
                    limit,
                });
            }
        }
        let label = set
            .iter()
            .map(|&i| outcomes[i].label.as_str())
            .min()
            .expect("non-empty")
            .to_string();
        let sum: HermitianMatrix = set.iter().map(|&i| outcomes[i].effect.matrix().clone()).sum();
        let total = sum.trace();
        for &i in &set {
            groups.insert(outcomes[i].label.clone(), label.clone());
            h.insert(outcomes[i].label.clone(), outcomes[i].effect.trace() / total);
        }
        reduced.push((label, sum));
    }
    Ok(ReductionReport {
        groups,
        dropped,
        reduced: DiscretePovm::from_parts(kept.dim(), reduced),
        h,
    })
}

/// Minimal sufficient reduction by trace-normalized proportionality.
pub fn reduce(a: &DiscretePovm, tol: &Tolerances) -> Result<ReductionReport> {
    let (kept, dropped) = a.non_vanishing(tol.zero);
    let normed: Vec<HermitianMatrix> = kept.effects().map(normalized).collect();
    let n = normed.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if normed[i].distance(&normed[j]) <= tol.prop {
                uf.union(i, j);
            }
        }
    }
    assemble(
        &kept,
        dropped,
        uf.sets(),
        |i, j| normed[i].distance(&normed[j]),
        COHERENCE_FACTOR * tol.prop,
    )
}

/// Likelihood-ratio vector of one outcome against the pivotal state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsbVector {
    pub label: String,
    pub ratios: Vec<f64>,
}

impl LsbVector {
    pub fn max_distance(&self, other: &LsbVector) -> f64 {
        self.ratios
            .iter()
            .zip(&other.ratios)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `tr(rho_i A(x)) / tr(rho* A(x))` for every outcome and ensemble state.
pub fn lsb_vectors(a: &DiscretePovm, ensemble: &StateEnsemble, tol: &Tolerances) -> Result<Vec<LsbVector>> {
    if a.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: ensemble.dim(),
        });
    }
    if !ensemble.is_informationally_complete() {
        return Err(Error::InvalidEnsemble(
            "ensemble is not informationally complete".into(),
        ));
    }
    let pivotal = ensemble.pivotal().matrix();
    a.outcomes()
        .iter()
        .map(|o| {
            let denom = pivotal.trace_product(o.effect.matrix());
            if denom < tol.zero {
                return Err(Error::VanishingOutcome {
                    label: o.label.clone(),
                    prob: denom,
                });
            }
            Ok(LsbVector {
                label: o.label.clone(),
                ratios: ensemble
                    .states()
                    .iter()
                    .map(|s| s.matrix().trace_product(o.effect.matrix()) / denom)
                    .collect(),
            })
        })
        .collect()
}

/// Reduction by grouping equal likelihood-ratio vectors.
pub fn reduce_via_lsb(a: &DiscretePovm, ensemble: &StateEnsemble, tol: &Tolerances) -> Result<ReductionReport> {
    let (kept, dropped) = a.non_vanishing(tol.zero);
    let vectors = lsb_vectors(&kept, ensemble, tol)?;
    let n = vectors.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if vectors[i].max_distance(&vectors[j]) <= tol.lsb {
                uf.union(i, j);
            }
        }
    }
    assemble(
        &kept,
        dropped,
        uf.sets(),
        |i, j| vectors[i].max_distance(&vectors[j]),
        COHERENCE_FACTOR * tol.lsb,
    )
}

/// No vanishing effect and no two effects proportional.
pub fn is_pairwise_linearly_independent(a: &DiscretePovm, tol: &Tolerances) -> bool {
    if a.effects().any(|e| e.trace() < tol.zero) {
        return false;
    }
    let normed: Vec<HermitianMatrix> = a.effects().map(normalized).collect();
    for i in 0..normed.len() {
        for j in (i + 1)..normed.len() {
            if normed[i].distance(&normed[j]) <= tol.prop {
                return false;
            }
        }
    }
    true
}

/// Per-fiber factorization `A(x) = h(x) G(T(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberCertificate {
    pub target: String,
    /// Trace-normalized common direction; `None` when every member vanishes.
    pub g: Option<HermitianMatrix>,
    /// `h(x) = tr A(x)` for the non-vanishing members.
    pub h: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SufficiencyCertificate {
    pub holds: bool,
    pub fibers: Vec<FiberCertificate>,
    /// First non-proportional pair found, with its normalized distance.
    pub violation: Option<(String, String, f64)>,
}

/// Whether relabelling through `t` loses no information: within each fiber
/// all non-vanishing effects must be pairwise proportional.
pub fn is_sufficient_statistic(
    a: &DiscretePovm,
    t: impl Fn(&str) -> String,
    tol: &Tolerances,
) -> SufficiencyCertificate {
    let mut fibers: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, o) in a.outcomes().iter().enumerate() {
        let target = t(&o.label);
        match fibers.iter_mut().find(|(l, _)| *l == target) {
            Some((_, members)) => members.push(i),
            None => fibers.push((target, vec![i])),
        }
    }
    let outcomes = a.outcomes();
    let mut certs = Vec::with_capacity(fibers.len());
    let mut violation = None;
    for (target, members) in fibers {
        let live: Vec<usize> = members
            .into_iter()
            .filter(|&i| outcomes[i].effect.trace() >= tol.zero)
            .collect();
        let normed: Vec<HermitianMatrix> = live.iter().map(|&i| normalized(outcomes[i].effect.matrix())).collect();
        'pairs: for p in 0..live.len() {
            for q in (p + 1)..live.len() {
                let d = normed[p].distance(&normed[q]);
                if d > tol.prop && violation.is_none() {
                    violation = Some((outcomes[live[p]].label.clone(), outcomes[live[q]].label.clone(), d));
                    break 'pairs;
                }
            }
        }
        let rep = live
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| outcomes[i].effect.trace().total_cmp(&outcomes[j].effect.trace()))
            .map(|(k, _)| normed[k].clone());
        certs.push(FiberCertificate {
            target,
            g: rep,
            h: live
                .iter()
                .map(|&i| (outcomes[i].label.clone(), outcomes[i].effect.trace()))
                .collect(),
        });
    }
    SufficiencyCertificate {
        holds: violation.is_none(),
        fibers: certs,
        violation,
    }
}

/// Bijection `A-label -> B-label` matching effects within the `iso` tolerance.
pub fn strict_isomorphic(
    a: &DiscretePovm,
    b: &DiscretePovm,
    tol: &Tolerances,
) -> Result<Option<BTreeMap<String, String>>> {
    if a.dim() != b.dim() || a.len() != b.len() {
        return Ok(None);
    }
    let left: Vec<(&str, &HermitianMatrix)> = a
        .outcomes()
        .iter()
        .map(|o| (o.label.as_str(), o.effect.matrix()))
        .collect();
    let right: Vec<(&str, &HermitianMatrix)> = b
        .outcomes()
        .iter()
        .map(|o| (o.label.as_str(), o.effect.matrix()))
        .collect();
    Ok(match_effects(&left, &right, tol.iso)?.map(|m| {
        m.into_iter()
            .enumerate()
            .map(|(i, j)| (left[i].0.to_string(), right[j].0.to_string()))
            .collect()
    }))
}

/// Strict isomorphism after discarding vanishing outcomes on both sides.
pub fn almost_isomorphic(
    a: &DiscretePovm,
    b: &DiscretePovm,
    tol: &Tolerances,
) -> Result<Option<BTreeMap<String, String>>> {
    let (a, _) = a.non_vanishing(tol.zero);
    let (b, _) = b.non_vanishing(tol.zero);
    strict_isomorphic(&a, &b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matops::CMatrix;
    use crate::povm::tomographic_ensemble;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn intro_example_reduces_to_coarse() {
        let b = fixtures::intro_split(0.3);
        let r = reduce(&b, &tol()).unwrap();
        assert_eq!(r.reduced.len(), 2);
        assert!(strict_isomorphic(&r.reduced, &fixtures::intro_coarse(), &tol())
            .unwrap()
            .is_some());
        assert_eq!(r.groups["01"], "00");
        assert_eq!(r.groups["11"], "10");
        assert!((r.h["00"] - 0.3).abs() < 1e-15);
        assert!((r.h["01"] - 0.7).abs() < 1e-15);
        assert!(r.factorization_defect(&b) < 1e-15);
    }

    #[test]
    fn pvm_is_already_minimal() {
        let p = DiscretePovm::computational_basis(3);
        let r = reduce(&p, &tol()).unwrap();
        assert_eq!(r.reduced, p);
        assert!(r.dropped.is_empty());
    }

    #[test]
    fn zero_effects_dropped() {
        let p = DiscretePovm::new(
            2,
            vec![
                ("a".into(), CMatrix::from_real_diag(&[1.0, 0.0])),
                ("z".into(), CMatrix::zeros(2)),
                ("b".into(), CMatrix::from_real_diag(&[0.0, 1.0])),
            ],
            &tol(),
        )
        .unwrap();
        let r = reduce(&p, &tol()).unwrap();
        assert_eq!(r.dropped, vec!["z".to_string()]);
        assert_eq!(r.reduced.labels(), vec!["a", "b"]);
    }

    #[test]
    fn tolerance_ambiguity_on_chains() {
        // Six effects whose normalized forms are spaced 0.8 eps_prop apart along
        // a line: every link joins, but the chain spans 4 eps_prop end to end.
        let eps = tol().prop;
        let step = 0.8 * eps / 2f64.sqrt();
        let k = 6;
        let mut outcomes = Vec::new();
        let w = 0.5 / k as f64;
        for i in 0..k {
            let x = 0.9 + i as f64 * step;
            outcomes.push((format!("p{i}"), CMatrix::from_real_diag(&[w * x, w * (1.0 - x)])));
        }
        let mut rest = HermitianMatrix::identity(2);
        for (_, m) in &outcomes {
            rest = &rest - &HermitianMatrix::new(m.clone()).unwrap();
        }
        outcomes.push(("rest".into(), rest.into_matrix()));
        let p = DiscretePovm::new(2, outcomes, &tol()).unwrap();
        let err = reduce(&p, &tol()).unwrap_err();
        assert!(matches!(err, Error::ToleranceAmbiguity { .. }), "{err:?}");
    }

    #[test]
    fn lsb_vectors_examples() {
        let e2 = tomographic_ensemble(2);
        let third = DiscretePovm::new(
            2,
            (0..3)
                .map(|i| (i.to_string(), CMatrix::identity(2).scale(1.0 / 3.0)))
                .collect(),
            &tol(),
        )
        .unwrap();
        for v in lsb_vectors(&third, &e2, &tol()).unwrap() {
            assert!(v.ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
        }
        // PVM: p(x|rho_i) over (|0>, |1>, |+>, |+i>) is (1,0,.5,.5) and (0,1,.5,.5),
        // pivotal probability 1/2 each.
        let pvm = DiscretePovm::computational_basis(2);
        let v = lsb_vectors(&pvm, &e2, &tol()).unwrap();
        let want = [[2.0, 0.0, 1.0, 1.0], [0.0, 2.0, 1.0, 1.0]];
        for (v, w) in v.iter().zip(want) {
            for (a, b) in v.ratios.iter().zip(w) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let b = fixtures::intro_split(0.3);
        let vs = lsb_vectors(&b, &e2, &tol()).unwrap();
        assert!(vs[0].max_distance(&vs[1]) < 1e-12);
        assert!(vs[2].max_distance(&vs[3]) < 1e-12);
        assert!(vs[0].max_distance(&vs[2]) > 0.1);
    }

    #[test]
    fn lsb_weighted_average_is_one() {
        let e = tomographic_ensemble(3);
        let p = DiscretePovm::computational_basis(3);
        for v in lsb_vectors(&p, &e, &tol()).unwrap() {
            let avg: f64 = v.ratios.iter().zip(e.weights()).map(|(r, w)| r * w).sum();
            assert!((avg - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lsb_rejects_vanishing() {
        let p = DiscretePovm::new(
            2,
            vec![("a".into(), CMatrix::identity(2)), ("z".into(), CMatrix::zeros(2))],
            &tol(),
        )
        .unwrap();
        let err = lsb_vectors(&p, &tomographic_ensemble(2), &tol()).unwrap_err();
        assert!(matches!(err, Error::VanishingOutcome { .. }));
        // reduce_via_lsb drops it first.
        let r = reduce_via_lsb(&p, &tomographic_ensemble(2), &tol()).unwrap();
        assert_eq!(r.dropped, vec!["z".to_string()]);
    }

    #[test]
    fn lsb_reduction_matches_on_examples() {
        let e = tomographic_ensemble(2);
        let b = fixtures::intro_split(0.3);
        assert_eq!(reduce_via_lsb(&b, &e, &tol()).unwrap(), reduce(&b, &tol()).unwrap());
        let t = DiscretePovm::trivial(2);
        assert_eq!(reduce_via_lsb(&t, &e, &tol()).unwrap().reduced, t);
    }

    #[test]
    fn pairwise_independence_examples() {
        assert!(is_pairwise_linearly_independent(
            &DiscretePovm::computational_basis(2),
            &tol()
        ));
        assert!(!is_pairwise_linearly_independent(&fixtures::intro_split(0.3), &tol()));
        let halves = DiscretePovm::new(
            2,
            vec![
                ("a".into(), CMatrix::identity(2).scale(0.5)),
                ("b".into(), CMatrix::identity(2).scale(0.5)),
            ],
            &tol(),
        )
        .unwrap();
        assert!(!is_pairwise_linearly_independent(&halves, &tol()));
    }

    #[test]
    fn sufficiency_examples() {
        let b = fixtures::intro_split(0.3);
        assert!(is_sufficient_statistic(&b, |l| l.to_string(), &tol()).holds);
        let cert = is_sufficient_statistic(&b, |l| l[..1].to_string(), &tol());
        assert!(cert.holds);
        assert_eq!(cert.fibers.len(), 2);
        let g0 = cert.fibers[0].g.as_ref().unwrap();
        assert!(g0.distance(&HermitianMatrix::from_real_diag(&[6.0 / 7.0, 1.0 / 7.0])) < 1e-15);
        let pvm = DiscretePovm::computational_basis(2);
        let cert = is_sufficient_statistic(&pvm, |_| "*".into(), &tol());
        assert!(!cert.holds);
        assert!(cert.violation.is_some());
    }

    #[test]
    fn isomorphism_examples() {
        let a = DiscretePovm::trine();
        let permuted = DiscretePovm::from_parts(
            2,
            a.outcomes()
                .iter()
                .rev()
                .map(|o| (format!("r{}", o.label), o.effect.matrix().clone()))
                .collect(),
        );
        let m = strict_isomorphic(&a, &permuted, &tol()).unwrap().unwrap();
        assert_eq!(m["0"], "r0");
        assert_eq!(m["2"], "r2");
        assert!(strict_isomorphic(&DiscretePovm::computational_basis(2), &a, &tol())
            .unwrap()
            .is_none());
    }

    #[test]
    fn almost_isomorphism_ignores_zero_effects() {
        let a = DiscretePovm::computational_basis(2);
        let mut parts: Vec<(String, HermitianMatrix)> = a
            .outcomes()
            .iter()
            .map(|o| (o.label.clone(), o.effect.matrix().clone()))
            .collect();
        parts.push(("zero".into(), HermitianMatrix::zeros(2)));
        let padded = DiscretePovm::from_parts(2, parts);
        assert!(strict_isomorphic(&a, &padded, &tol()).unwrap().is_none());
        assert!(almost_isomorphic(&a, &padded, &tol()).unwrap().is_some());
        assert!(almost_isomorphic(&a, &DiscretePovm::trine(), &tol()).unwrap().is_none());
    }
}
