//! Seeded random POVMs, states, Markov matrices and instruments.
//!
//! Every generator takes an explicit seed and draws from a ChaCha8 stream,
//! so the same seed reproduces bit-identical output on every platform.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::instrument::KrausInstrument;
use crate::matops::{inv_sqrt_psd, CMatrix, HermitianMatrix};
use crate::order::MarkovMatrix;
use crate::povm::{pair_label, DensityMatrix, DiscretePovm};

const MAX_ATTEMPTS: usize = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Square matrix with i.i.d. standard complex Gaussian entries.
pub fn complex_gaussian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * s, im * s)
                })
                .collect()
        })
        .collect();
    CMatrix::from_rows(rows).expect("gaussian samples are finite")
}

fn gram(m: &CMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrize(&m.matmul(&m.adjoint()))
}

/// `A(i) = S^{-1/2} G_i S^{-1/2}` with `G_i = M_i M_i^†` and `S = sum_i G_i`.
pub fn random_povm(dim: usize, n_outcomes: usize, seed: u64) -> Result<DiscretePovm> {
    if n_outcomes == 0 {
        return Err(Error::Empty);
    }
    if n_outcomes == 1 {
        return Ok(DiscretePovm::trivial(dim));
    }
    let mut rng = rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let gs: Vec<HermitianMatrix> = (0..n_outcomes)
            .map(|_| gram(&complex_gaussian(dim, &mut rng)))
            .collect();
        let s: HermitianMatrix = gs.iter().cloned().sum();
        let root = match inv_sqrt_psd(&s) {
            Ok(r) => r,
            Err(Error::NotPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        };
        let outcomes = gs
            .iter()
            .enumerate()
            .map(|(i, g)| (i.to_string(), g.congruence(root.as_matrix()).into_matrix()))
            .collect();
        return DiscretePovm::new(dim, outcomes, &Tolerances::default());
    }
    Err(Error::DegenerateSample(format!(
        "no positive definite normalizer after {MAX_ATTEMPTS} attempts"
    )))
}

/// `M M^† / tr(M M^†)` for complex Gaussian `M`.
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = rng(seed);
    let g = gram(&complex_gaussian(dim, &mut rng));
    let tr = g.trace();
    DensityMatrix::unchecked(g.scale(1.0 / tr))
}

/// Columns drawn uniformly from the probability simplex.
pub fn random_markov(n_rows: usize, n_cols: usize, seed: u64) -> MarkovMatrix {
    let mut rng = rng(seed);
    let mut entries = vec![vec![0.0; n_cols]; n_rows];
    for j in 0..n_cols {
        let draws: Vec<f64> = (0..n_rows).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        for (row, d) in entries.iter_mut().zip(draws) {
            row[j] = d / total;
        }
    }
    MarkovMatrix {
        rows: (0..n_rows).map(|i| i.to_string()).collect(),
        cols: (0..n_cols).map(|j| j.to_string()).collect(),
        entries,
    }
}

/// Redundant refinement `B(x,y) = κ(x|y) A(y)` over the positive entries of
/// `κ`, with outcome order shuffled by `seed`.
///
/// The columns of `κ` are matched to the labels of `a` by position.
pub fn split_povm(a: &DiscretePovm, kappa: &MarkovMatrix, seed: u64) -> Result<DiscretePovm> {
    kappa.validate()?;
    if kappa.n_cols() != a.len() {
        return Err(Error::LabelMismatch(format!(
            "Markov matrix has {} columns, POVM has {} outcomes",
            kappa.n_cols(),
            a.len()
        )));
    }
    let mut items: Vec<(String, HermitianMatrix)> = Vec::new();
    for (x, xl) in kappa.rows.iter().enumerate() {
        for (y, o) in a.outcomes().iter().enumerate() {
            let w = kappa.get(x, y);
            if w > 0.0 {
                items.push((pair_label(xl, &o.label), o.effect.matrix().scale(w)));
            }
        }
    }
    items.shuffle(&mut rng(seed));
    Ok(DiscretePovm::from_parts(a.dim(), items))
}

/// Random split of `a` into `n_rows * |a|` outcomes, all seeded from `seed`.
pub fn random_split(a: &DiscretePovm, n_rows: usize, seed: u64) -> Result<DiscretePovm> {
    let kappa = random_markov(n_rows, a.len(), seed);
    split_povm(a, &kappa, seed.wrapping_add(1))
}

/// Kraus instrument with `kraus_per_outcome` Gaussian operators per outcome,
/// normalized by `K -> K S^{-1/2}` with `S = sum K^† K`.
pub fn random_instrument(
    dim: usize,
    n_outcomes: usize,
    kraus_per_outcome: usize,
    seed: u64,
) -> Result<KrausInstrument> {
    if n_outcomes == 0 || kraus_per_outcome == 0 {
        return Err(Error::InvalidInstrument(
            "need at least one outcome and one Kraus operator".into(),
        ));
    }
    let mut rng = rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let ks: Vec<Vec<CMatrix>> = (0..n_outcomes)
            .map(|_| {
                (0..kraus_per_outcome)
                    .map(|_| complex_gaussian(dim, &mut rng))
                    .collect()
            })
            .collect();
        let s: HermitianMatrix = ks
            .iter()
            .flatten()
            .map(|k| HermitianMatrix::symmetrize(&k.adjoint().matmul(k)))
            .sum();
        let root = match inv_sqrt_psd(&s) {
            Ok(r) => r,
            Err(Error::NotPositiveDefinite { .. }) => continue,
            Err(e) => return Err(e),
        };
        let outcomes = ks
            .into_iter()
            .enumerate()
            .map(|(i, kk)| {
                (
                    i.to_string(),
                    kk.into_iter().map(|k| k.matmul(root.as_matrix())).collect(),
                )
            })
            .collect();
        return KrausInstrument::new(dim, outcomes, &Tolerances::default());
    }
    Err(Error::DegenerateSample(format!(
        "no positive definite normalizer after {MAX_ATTEMPTS} attempts"
    )))
}
