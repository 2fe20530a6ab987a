//! The post-processing preorder on discrete POVMs.
//!
//! `A ⪯ B` holds when some column-stochastic `κ` gives
//! `A(x) = sum_y κ(x|y) B(y)` for every `x`. Feasibility is decided by an
//! l-infinity slack program: minimize `s` subject to
//! `|sum_y κ(x|y) B(y)_ij - A(x)_ij| <= s` on the real and imaginary parts
//! of the upper triangle of every effect. The relation holds when the
//! optimal `s` is below the configured `lp` tolerance.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matops::HermitianMatrix;
use crate::povm::{DiscretePovm, JointPovm};
use crate::reduction::{almost_isomorphic, reduce};
use crate::simplex::{LinearProgram, LpOutcome, Relation};

const MARKOV_NEG_TOL: f64 = 1e-12;
const MARKOV_SUM_TOL: f64 = 1e-9;
/// Verdicts with residual in `(lp, BORDERLINE_FACTOR * lp]` are flagged.
pub const BORDERLINE_FACTOR: f64 = 10.0;

/// Column-stochastic matrix `κ(x|y)`: rows are target labels, columns source labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major entries.
    pub entries: Vec<Vec<f64>>,
}

impl MarkovMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self { rows, cols, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(labels: &[&str]) -> Self {
        let n = labels.len();
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        Self {
            rows: labels.clone(),
            cols: labels,
            entries: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != self.rows.len() {
            return Err(Error::InvalidMarkov(format!(
                "{} row labels but {} rows",
                self.rows.len(),
                self.entries.len()
            )));
        }
        if self.rows.is_empty() || self.cols.is_empty() {
            return Err(Error::InvalidMarkov("empty matrix".into()));
        }
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != self.cols.len() {
                return Err(Error::InvalidMarkov(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    self.cols.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < -MARKOV_NEG_TOL {
                    return Err(Error::InvalidMarkov(format!("entry ({i}, {j}) = {v}")));
                }
            }
        }
        for (j, s) in self.column_sums().into_iter().enumerate() {
            if (s - 1.0).abs() > MARKOV_SUM_TOL {
                return Err(Error::InvalidMarkov(format!("column {:?} sums to {s}", self.cols[j])));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols.len())
            .map(|j| self.entries.iter().map(|r| r[j]).sum())
            .collect()
    }

    fn column_index(&self, label: &str) -> Result<usize> {
        self.cols
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::LabelMismatch(format!("no Markov column for label {label:?}")))
    }

    /// Checks that the columns are exactly the outcome labels of `povm`.
    fn check_columns(&self, povm: &DiscretePovm) -> Result<Vec<usize>> {
        if self.cols.len() != povm.len() {
            return Err(Error::LabelMismatch(format!(
                "Markov matrix has {} columns, POVM has {} outcomes",
                self.cols.len(),
                povm.len()
            )));
        }
        povm.labels().into_iter().map(|l| self.column_index(l)).collect()
    }

    /// Post-processing `A(x) = sum_y κ(x|y) B(y)`, labelled by the rows.
    pub fn apply(&self, b: &DiscretePovm) -> Result<DiscretePovm> {
        let cols = self.check_columns(b)?;
        let outcomes = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, label)| {
                let m = b.effects().zip(&cols).map(|(e, &y)| e.scale(self.get(x, y))).sum();
                (label.clone(), m)
            })
            .collect();
        Ok(DiscretePovm::from_parts(b.dim(), outcomes))
    }

    /// Largest real or imaginary entry of `sum_y κ(x|y) B(y) - A(x)` over all `x`.
    pub fn reconstruction_defect(&self, a: &DiscretePovm, b: &DiscretePovm) -> Result<f64> {
        if a.len() != self.rows.len() {
            return Err(Error::LabelMismatch(format!(
                "Markov matrix has {} rows, A has {} outcomes",
                self.rows.len(),
                a.len()
            )));
        }
        let image = self.apply(b)?;
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let target = a
                .effect(row)
                .ok_or_else(|| Error::LabelMismatch(format!("row {row:?} is not a label of A")))?;
            let produced = image.effect(row).expect("apply labels outputs by rows");
            worst = worst.max((produced.matrix() - target.matrix()).as_matrix().max_abs_component());
        }
        Ok(worst)
    }
}

impl fmt::Display for MarkovMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>10}", "")?;
        for c in &self.cols {
            write!(f, " {c:>10}")?;
        }
        writeln!(f)?;
        for (r, row) in self.rows.iter().zip(&self.entries) {
            write!(f, "{r:>10}")?;
            for v in row {
                write!(f, " {v:>10.6}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub holds: bool,
    /// Residual in `(lp, 10 lp]`: the verdict is sensitive to the tolerance.
    pub borderline: bool,
    pub witness: Option<MarkovMatrix>,
    /// Achieved max-norm reconstruction defect.
    pub residual: f64,
}

/// Real scalar equations `Re/Im m_ij` over the upper triangle of a Hermitian matrix.
fn real_components(m: &HermitianMatrix) -> Vec<f64> {
    let n = m.dim();
    let a = m.as_matrix();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(a[(i, i)].re);
        for j in (i + 1)..n {
            out.push(a[(i, j)].re);
            out.push(a[(i, j)].im);
        }
    }
    out
}

/// Decides `A ⪯ B` (A is a classical post-processing of B).
pub fn preceq(a: &DiscretePovm, b: &DiscretePovm, tol: &Tolerances) -> Result<OrderVerdict> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.len(), b.len());
    let var = |x: usize, y: usize| x * nb + y;
    let slack = na * nb;
    let mut lp = LinearProgram::new(na * nb + 1);
    lp.objective[slack] = 1.0;

    let b_comps: Vec<Vec<f64>> = b.effects().map(real_components).collect();
    for (x, ax) in a.effects().enumerate() {
        for (k, &target) in real_components(ax).iter().enumerate() {
            let terms: Vec<(usize, f64)> = (0..nb)
                .filter(|&y| b_comps[y][k] != 0.0)
                .map(|y| (var(x, y), b_comps[y][k]))
                .collect();
            let mut upper = terms.clone();
            upper.push((slack, -1.0));
            lp.add(upper, Relation::Le, target);
            let mut lower: Vec<(usize, f64)> = terms.into_iter().map(|(j, v)| (j, -v)).collect();
            lower.push((slack, -1.0));
            lp.add(lower, Relation::Le, -target);
        }
    }
    for y in 0..nb {
        lp.add((0..na).map(|x| (var(x, y), 1.0)).collect(), Relation::Eq, 1.0);
    }

    let x = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible { phase_one_objective } => {
            return Err(Error::SolverFailure(format!(
                "slack program reported infeasible (phase one objective {phase_one_objective:.3e})"
            )))
        }
        LpOutcome::Unbounded => return Err(Error::SolverFailure("slack program reported unbounded".into())),
    };

    // Clean the solver output into an exactly stochastic matrix, then
    // measure its defect independently of the reported slack.
    let mut entries = vec![vec![0.0; nb]; na];
    for y in 0..nb {
        let total: f64 = (0..na).map(|i| x[var(i, y)].max(0.0)).sum();
        for (i, row) in entries.iter_mut().enumerate() {
            row[y] = if total > 0.0 {
                x[var(i, y)].max(0.0) / total
            } else {
                1.0 / na as f64
            };
        }
    }
    let kappa = MarkovMatrix {
        rows: a.labels().into_iter().map(String::from).collect(),
        cols: b.labels().into_iter().map(String::from).collect(),
        entries,
    };
    let residual = kappa.reconstruction_defect(a, b)?;
    let holds = residual <= tol.lp;
    Ok(OrderVerdict {
        holds,
        borderline: !holds && residual <= BORDERLINE_FACTOR * tol.lp,
        witness: holds.then_some(kappa),
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivalenceMethod {
    Lp,
    Reduce,
}

impl std::str::FromStr for EquivalenceMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Self::Lp),
            "reduce" => Ok(Self::Reduce),
            other => Err(Error::Schema(format!(
                "unknown method {other:?} (expected lp or reduce)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub method: EquivalenceMethod,
    pub borderline: bool,
    /// `A ⪯ B` and `B ⪯ A` verdicts for the lp method.
    pub forward: Option<OrderVerdict>,
    pub backward: Option<OrderVerdict>,
    /// Bijection between the reduced POVMs for the reduce method.
    pub bijection: Option<BTreeMap<String, String>>,
}

pub fn equivalent(
    a: &DiscretePovm,
    b: &DiscretePovm,
    method: EquivalenceMethod,
    tol: &Tolerances,
) -> Result<EquivalenceVerdict> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    match method {
        EquivalenceMethod::Lp => {
            let forward = preceq(a, b, tol)?;
            let backward = preceq(b, a, tol)?;
            Ok(EquivalenceVerdict {
                equivalent: forward.holds && backward.holds,
                method,
                borderline: forward.borderline || backward.borderline,
                forward: Some(forward),
                backward: Some(backward),
                bijection: None,
            })
        }
        EquivalenceMethod::Reduce => {
            let ra = reduce(a, tol)?;
            let rb = reduce(b, tol)?;
            let bijection = almost_isomorphic(&ra.reduced, &rb.reduced, tol)?;
            Ok(EquivalenceVerdict {
                equivalent: bijection.is_some(),
                method,
                borderline: false,
                forward: None,
                backward: None,
                bijection,
            })
        }
    }
}

/// Joint POVM `C(x,y) = κ(x|y) B(y)` over pair labels.
pub fn kernel_product(kappa: &MarkovMatrix, b: &DiscretePovm) -> Result<JointPovm> {
    kappa.validate()?;
    let cols = kappa.check_columns(b)?;
    let mut items = Vec::with_capacity(kappa.n_rows() * b.len());
    for (x, xl) in kappa.rows.iter().enumerate() {
        for (o, &y) in b.outcomes().iter().zip(&cols) {
            items.push(((xl.clone(), o.label.clone()), o.effect.matrix().scale(kappa.get(x, y))));
        }
    }
    JointPovm::from_pairs(b.dim(), items)
}
