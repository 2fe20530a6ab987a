//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Quantities are re-derived here with straightforward loops over matrix
//! entries wherever possible, so the library is checked against code it does
//! not share.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use povm_reduce::divergence::{hellinger, tv_metric};
use povm_reduce::fixtures::{intro_coarse, intro_split, INTRO_LAMBDA};
use povm_reduce::generators::{random_density, random_markov, random_povm, random_split};
use povm_reduce::instrument::{check_conservation, KrausInstrument, DEFAULT_EXHAUSTIVE_LIMIT};
use povm_reduce::matops::trace_norm;
use povm_reduce::order::{equivalent, kernel_product, preceq, EquivalenceMethod, MarkovMatrix};
use povm_reduce::povm::{outcome_distribution, tomographic_ensemble};
use povm_reduce::reduction::{
    almost_isomorphic, is_pairwise_linearly_independent, is_sufficient_statistic, reduce, reduce_via_lsb,
    strict_isomorphic,
};
use povm_reduce::{DensityMatrix, DiscretePovm, HermitianMatrix, Tolerances};

const DIVERGENCE_TOL: f64 = 1e-8;
const NEGATIVE_CONTROL_DROP: f64 = 1e-4;
const MONOTONE_SLACK: f64 = 1e-9;
const METRIC_SLACK: f64 = 1e-9;
const MARGINAL_TOL: f64 = 1e-9;
const WITNESS_TOL: f64 = 1e-7;

type Check = Result<String, String>;

fn instance(seed: u64) -> DiscretePovm {
    let dim = 2 + (seed % 3) as usize;
    let n = 2 + ((seed / 3) % 4) as usize;
    random_povm(dim, n, seed).expect("random POVM")
}

fn split_of(a: &DiscretePovm, seed: u64) -> DiscretePovm {
    let rows = (12 / a.len()).clamp(1, 3);
    random_split(a, rows, seed.wrapping_mul(7919).wrapping_add(13)).expect("random split")
}

fn entry(m: &HermitianMatrix, i: usize, j: usize) -> Complex64 {
    m.as_matrix()[(i, j)]
}

/// Hilbert-Schmidt inner product `tr(a^† b)`.
fn hs(a: &HermitianMatrix, b: &HermitianMatrix) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            s += entry(a, i, j).conj() * entry(b, i, j);
        }
    }
    s
}

/// Cauchy-Schwarz proportionality test on nonzero PSD matrices.
fn proportional(a: &HermitianMatrix, b: &HermitianMatrix, rel: f64) -> bool {
    let ab = hs(a, b).norm();
    let aa = hs(a, a).re;
    let bb = hs(b, b).re;
    aa * bb - ab * ab <= rel * aa * bb
}

fn prob(a: &HermitianMatrix, rho: &DensityMatrix) -> f64 {
    let r = rho.matrix();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            s += entry(a, i, j) * entry(r, j, i);
        }
    }
    s.re
}

fn oracle_distribution(a: &DiscretePovm, rho: &DensityMatrix) -> Vec<f64> {
    a.effects().map(|e| prob(e, rho)).collect()
}

fn oracle_hellinger(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(x, y)| (x.max(0.0).sqrt() - y.max(0.0).sqrt()).powi(2))
        .sum()
}

fn max_entry_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            worst = worst.max((entry(a, i, j) - entry(b, i, j)).norm());
        }
    }
    worst
}

/// Grouping by pairwise proportionality, computed without the library's reducer.
fn oracle_partition(a: &DiscretePovm, tol: &Tolerances) -> Vec<Vec<String>> {
    let live: Vec<_> = a.outcomes().iter().filter(|o| o.effect.trace() >= tol.zero).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, o) in live.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| proportional(live[g[0]].effect.matrix(), o.effect.matrix(), 1e-10))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let mut out: Vec<Vec<String>> = groups
        .into_iter()
        .map(|g| {
            let mut v: Vec<String> = g.into_iter().map(|i| live[i].label.clone()).collect();
            v.sort();
            v
        })
        .collect();
    out.sort();
    out
}

fn sorted_partition(groups: &BTreeMap<String, String>) -> Vec<Vec<String>> {
    let mut by: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (x, g) in groups {
        by.entry(g.as_str()).or_default().push(x.clone());
    }
    let mut out: Vec<Vec<String>> = by
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect();
    out.sort();
    out
}

/// Witness check: nonnegative, column-stochastic, and `sum_y κ(x|y) B(y) = A(x)`.
fn verify_witness(k: &MarkovMatrix, a: &DiscretePovm, b: &DiscretePovm) -> Result<(), String> {
    for j in 0..k.n_cols() {
        let s: f64 = (0..k.n_rows()).map(|i| k.get(i, j)).sum();
        if (s - 1.0).abs() > WITNESS_TOL {
            return Err(format!("column {j} sums to {s}"));
        }
    }
    if k.entries.iter().flatten().any(|&v| v < -WITNESS_TOL) {
        return Err("negative witness entry".into());
    }
    for (i, row) in k.rows.iter().enumerate() {
        let target = a.effect(row).ok_or(format!("row {row} not in A"))?.matrix();
        let mut acc = HermitianMatrix::zeros(a.dim());
        for (j, col) in k.cols.iter().enumerate() {
            let e = b.effect(col).ok_or(format!("column {col} not in B"))?.matrix();
            acc = &acc + &e.scale(k.get(i, j));
        }
        let d = max_entry_diff(&acc, target);
        if d > WITNESS_TOL {
            return Err(format!("row {row} reconstructed with defect {d:.3e}"));
        }
    }
    Ok(())
}

fn count_pass(trials: u64, mut f: impl FnMut(u64) -> Result<(), String>) -> Check {
    let mut first = None;
    let mut ok = 0;
    for seed in 0..trials {
        match f(seed) {
            Ok(()) => ok += 1,
            Err(e) => {
                first.get_or_insert(format!("seed {seed}: {e}"));
            }
        }
    }
    match first {
        None => Ok(format!("{ok}/{trials}")),
        Some(e) => Err(format!("{ok}/{trials}, first failure {e}")),
    }
}

fn criterion_1(tol: &Tolerances) -> Check {
    let a = intro_coarse();
    let b = intro_split(INTRO_LAMBDA);
    let r = reduce(&b, tol).map_err(|e| e.to_string())?;
    let bij = strict_isomorphic(&r.reduced, &a, tol)
        .map_err(|e| e.to_string())?
        .ok_or("reduced B is not strictly isomorphic to A")?;
    let expected: BTreeMap<String, String> = [("00", "0"), ("10", "1")]
        .map(|(x, y)| (x.to_string(), y.to_string()))
        .into();
    if bij != expected {
        return Err(format!("unexpected bijection {bij:?}"));
    }
    for m in [EquivalenceMethod::Lp, EquivalenceMethod::Reduce] {
        if !equivalent(&a, &b, m, tol).map_err(|e| e.to_string())?.equivalent {
            return Err(format!("equiv(A, B) false by {m:?}"));
        }
    }
    Ok("reduce(B) ≅ A, equiv by lp and reduce".into())
}

fn criteria_2_3(tol: &Tolerances) -> (Check, Check) {
    let mut reduced = Vec::new();
    let uniq = count_pass(100, |seed| {
        let a = instance(seed);
        let b = split_of(&a, seed);
        let ra = reduce(&a, tol).map_err(|e| e.to_string())?;
        let rb = reduce(&b, tol).map_err(|e| e.to_string())?;
        if oracle_partition(&b, tol) != sorted_partition(&rb.groups) {
            return Err("split partition differs from proportionality oracle".into());
        }
        reduced.push(rb.reduced.clone());
        reduced.push(ra.reduced.clone());
        almost_isomorphic(&ra.reduced, &rb.reduced, tol)
            .map_err(|e| e.to_string())?
            .map(|_| ())
            .ok_or_else(|| "reductions not almost isomorphic".into())
    });
    let indep = count_pass(reduced.len() as u64, |i| {
        let r = &reduced[i as usize];
        if !is_pairwise_linearly_independent(r, tol) {
            return Err("not pairwise independent".into());
        }
        for (k, x) in r.outcomes().iter().enumerate() {
            for y in &r.outcomes()[k + 1..] {
                if proportional(x.effect.matrix(), y.effect.matrix(), 1e-10) {
                    return Err(format!("oracle finds {} ∝ {}", x.label, y.label));
                }
            }
        }
        let rr = reduce(r, tol).map_err(|e| e.to_string())?;
        strict_isomorphic(&rr.reduced, r, tol)
            .map_err(|e| e.to_string())?
            .map(|_| ())
            .ok_or_else(|| "reduce not idempotent".into())
    });
    (uniq, indep)
}

fn merge_first_two(a: &DiscretePovm) -> DiscretePovm {
    let first = a.outcomes()[0].label.clone();
    let second = a.outcomes()[1].label.clone();
    a.pushforward(|l| if l == second { first.clone() } else { l.to_string() })
}

fn criterion_4(tol: &Tolerances) -> Check {
    let mut worst: f64 = 0.0;
    let conserved = count_pass(100, |seed| {
        let a = split_of(&instance(seed), seed);
        let rho = random_density(a.dim(), seed ^ 0x1111);
        let sigma = random_density(a.dim(), seed ^ 0x2222);
        let r = reduce(&a, tol).map_err(|e| e.to_string())?;
        let h = oracle_hellinger(&oracle_distribution(&a, &rho), &oracle_distribution(&a, &sigma));
        let hr = oracle_hellinger(
            &oracle_distribution(&r.reduced, &rho),
            &oracle_distribution(&r.reduced, &sigma),
        );
        worst = worst.max((h - hr).abs());
        if (h - hr).abs() > DIVERGENCE_TOL {
            return Err(format!("divergence changed by {:.3e}", (h - hr).abs()));
        }
        Ok(())
    })?;
    let mut max_drop: f64 = 0.0;
    for seed in 0..100 {
        let a = instance(seed);
        let merged = merge_first_two(&a);
        let rho = random_density(a.dim(), seed ^ 0x1111);
        let sigma = random_density(a.dim(), seed ^ 0x2222);
        let h = oracle_hellinger(&oracle_distribution(&a, &rho), &oracle_distribution(&a, &sigma));
        let hm = oracle_hellinger(
            &oracle_distribution(&merged, &rho),
            &oracle_distribution(&merged, &sigma),
        );
        max_drop = max_drop.max(h - hm);
    }
    if max_drop <= NEGATIVE_CONTROL_DROP {
        return Err(format!("negative control drop only {max_drop:.3e}"));
    }
    Ok(format!(
        "{conserved}, max change {worst:.1e}; lossy merge drops up to {max_drop:.3e}"
    ))
}

fn criterion_5() -> Check {
    let mut min_slack = f64::INFINITY;
    let res = count_pass(100, |seed| {
        let a = instance(seed);
        let k = random_markov(1 + (seed % 4) as usize, a.len(), seed ^ 0x3333);
        let coarse = k.apply(&a).map_err(|e| e.to_string())?;
        let rho = random_density(a.dim(), seed ^ 0x4444);
        let sigma = random_density(a.dim(), seed ^ 0x5555);
        let p = |m: &DiscretePovm, s: &DensityMatrix| outcome_distribution(m, s).map_err(|e| e.to_string());
        let h = hellinger(&p(&a, &rho)?, &p(&a, &sigma)?).map_err(|e| e.to_string())?;
        let hc = hellinger(&p(&coarse, &rho)?, &p(&coarse, &sigma)?).map_err(|e| e.to_string())?;
        let ho = oracle_hellinger(
            &oracle_distribution(&coarse, &rho),
            &oracle_distribution(&coarse, &sigma),
        );
        if (hc - ho).abs() > 1e-12 {
            return Err(format!("library {hc} vs oracle {ho}"));
        }
        min_slack = min_slack.min(h - hc);
        if h - hc < -MONOTONE_SLACK {
            return Err(format!("increase by {:.3e}", hc - h));
        }
        Ok(())
    })?;
    Ok(format!("{res}, min slack {min_slack:.3e}"))
}

/// Trace norm of a traceless-or-not 2x2 Hermitian matrix in closed form.
fn trace_norm_2x2(m: &HermitianMatrix) -> f64 {
    let a = entry(m, 0, 0).re;
    let d = entry(m, 1, 1).re;
    let b = entry(m, 0, 1).norm();
    let mean = (a + d) / 2.0;
    let r = (((a - d) / 2.0).powi(2) + b * b).sqrt();
    (mean + r).abs() + (mean - r).abs()
}

fn criterion_6() -> Check {
    count_pass(200, |seed| {
        let a = instance(seed);
        let rho = random_density(a.dim(), seed ^ 0x6666);
        let sigma = random_density(a.dim(), seed ^ 0x7777);
        let p = oracle_distribution(&a, &rho);
        let q = oracle_distribution(&a, &sigma);
        let tv = tv_metric(&p, &q).map_err(|e| e.to_string())?;
        let tv_oracle = 0.5 * p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum::<f64>();
        if (tv - tv_oracle).abs() > 1e-12 {
            return Err(format!("tv {tv} vs oracle {tv_oracle}"));
        }
        let diff = rho.matrix() - sigma.matrix();
        let tn = trace_norm(&diff).map_err(|e| e.to_string())?;
        if a.dim() == 2 && (tn - trace_norm_2x2(&diff)).abs() > 1e-10 {
            return Err(format!("trace norm {tn} vs closed form {}", trace_norm_2x2(&diff)));
        }
        if tv > tn + METRIC_SLACK {
            return Err(format!("tv {tv} > trace norm {tn}"));
        }
        let h = hellinger(&p, &q).map_err(|e| e.to_string())?;
        if !(0.0..=2.0).contains(&h) {
            return Err(format!("hellinger {h} outside [0, 2]"));
        }
        Ok(())
    })
}

fn criterion_7(tol: &Tolerances) -> Check {
    count_pass(200, |seed| {
        let base = random_povm(2 + (seed % 3) as usize, 2 + ((seed / 3) % 3) as usize, seed ^ 0x8888)
            .map_err(|e| e.to_string())?;
        let a = if seed % 2 == 0 { split_of(&base, seed) } else { base };
        let e = tomographic_ensemble(a.dim());
        let r = reduce(&a, tol).map_err(|e| e.to_string())?;
        let l = reduce_via_lsb(&a, &e, tol).map_err(|e| e.to_string())?;
        if sorted_partition(&r.groups) != sorted_partition(&l.groups) {
            return Err("partitions differ".into());
        }
        Ok(())
    })
}

fn criterion_8(tol: &Tolerances) -> Check {
    let trine = DiscretePovm::trine();
    let pvm = DiscretePovm::computational_basis(2);
    let v = preceq(&trine, &pvm, tol).map_err(|e| e.to_string())?;
    if v.holds || v.residual <= 10.0 * tol.lp {
        return Err(format!("trine ⪯ PVM: holds {} residual {:.3e}", v.holds, v.residual));
    }
    let pvm3 = DiscretePovm::computational_basis(3);
    let coarse = pvm3.pushforward(|l| if l == "2" { "b".into() } else { "a".into() });
    let v = preceq(&coarse, &pvm3, tol).map_err(|e| e.to_string())?;
    let w = v.witness.as_ref().ok_or("coarse-graining: no witness")?;
    if !v.holds {
        return Err("coarse-graining ⪯ PVM false".into());
    }
    verify_witness(w, &coarse, &pvm3)?;
    let trine_residual = preceq(&trine, &pvm, tol).map_err(|e| e.to_string())?.residual;
    let agree = count_pass(100, |seed| {
        let a = instance(seed);
        let b = match seed % 3 {
            0 => split_of(&a, seed),
            1 => merge_first_two(&a),
            _ => random_povm(a.dim(), a.len(), seed ^ 0x9999).map_err(|e| e.to_string())?,
        };
        let lp = equivalent(&a, &b, EquivalenceMethod::Lp, tol).map_err(|e| e.to_string())?;
        let rd = equivalent(&a, &b, EquivalenceMethod::Reduce, tol).map_err(|e| e.to_string())?;
        if lp.equivalent != rd.equivalent {
            return Err(format!("lp {} vs reduce {}", lp.equivalent, rd.equivalent));
        }
        if seed % 3 == 0 && !lp.equivalent {
            return Err("split not equivalent".into());
        }
        for (o, x, y) in [(&lp.forward, &a, &b), (&lp.backward, &b, &a)] {
            if let Some(o) = o.as_ref().filter(|o| o.holds) {
                verify_witness(o.witness.as_ref().ok_or("holds without witness")?, x, y)?;
            }
        }
        Ok(())
    })?;
    Ok(format!(
        "trine residual {trine_residual:.3e}, coarse witness verified, methods agree {agree}"
    ))
}

fn criterion_9(tol: &Tolerances) -> Check {
    count_pass(50, |seed| {
        let b = instance(seed);
        let k = random_markov(1 + (seed % 3) as usize, b.len(), seed ^ 0xAAAA);
        let joint = kernel_product(&k, &b).map_err(|e| e.to_string())?;
        for (yi, o) in b.outcomes().iter().enumerate() {
            let mut acc = HermitianMatrix::zeros(b.dim());
            for (xl, yl) in &joint.pairs {
                if *yl == o.label {
                    let label = povm_reduce::povm::pair_label(xl, yl);
                    acc = &acc + joint.povm.effect(&label).ok_or("missing joint label")?.matrix();
                }
            }
            let d = max_entry_diff(&acc, o.effect.matrix());
            if d > MARGINAL_TOL {
                return Err(format!("marginal at {yi} off by {d:.3e}"));
            }
        }
        let proj = joint.second_projection();
        let cert = is_sufficient_statistic(&joint.povm, |l| proj[l].clone(), tol);
        if !cert.holds {
            return Err(format!("π₂ not sufficient: {:?}", cert.violation));
        }
        Ok(())
    })
}

fn criterion_10(tol: &Tolerances) -> Check {
    let pvm = DiscretePovm::computational_basis(2);
    let luders = KrausInstrument::luders(&pvm).map_err(|e| e.to_string())?;
    let same = check_conservation(&luders, &pvm, tol, DEFAULT_EXHAUSTIVE_LIMIT).map_err(|e| e.to_string())?;
    if !same.condition1.holds_for_projection || !same.condition2 {
        return Err(format!(
            "Lüders PVM ∘ PVM: projection {} condition2 {}",
            same.condition1.holds_for_projection, same.condition2
        ));
    }
    let trine = DiscretePovm::trine();
    let tr = check_conservation(&luders, &trine, tol, DEFAULT_EXHAUSTIVE_LIMIT).map_err(|e| e.to_string())?;
    if tr.condition2 {
        return Err("Lüders PVM ∘ trine: condition2 true".into());
    }
    let inv = count_pass(20, |seed| {
        let (b, expected) = if seed % 2 == 0 { (&pvm, true) } else { (&trine, false) };
        let split = random_split(b, 2, seed ^ 0xBBBB).map_err(|e| e.to_string())?;
        let v = check_conservation(&luders, &split, tol, DEFAULT_EXHAUSTIVE_LIMIT).map_err(|e| e.to_string())?;
        if v.condition2 != expected {
            return Err(format!("condition2 {} on split, expected {expected}", v.condition2));
        }
        Ok(())
    })?;
    Ok(format!(
        "PVM: both conditions hold; trine: condition2 fails; invariant under splits {inv}"
    ))
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let start = Instant::now();
    let t = Instant::now();
    let (c2, c3) = criteria_2_3(&tol);
    let shared = t.elapsed().as_secs_f64();
    let mut results: Vec<(u32, Check, f64)> = vec![(2, c2, shared), (3, c3, shared)];
    let singles: [(u32, &dyn Fn() -> Check); 8] = [
        (1, &|| criterion_1(&tol)),
        (4, &|| criterion_4(&tol)),
        (5, &criterion_5),
        (6, &criterion_6),
        (7, &|| criterion_7(&tol)),
        (8, &|| criterion_8(&tol)),
        (9, &|| criterion_9(&tol)),
        (10, &|| criterion_10(&tol)),
    ];
    for (n, f) in singles {
        let t = Instant::now();
        let r = f();
        results.push((n, r, t.elapsed().as_secs_f64()));
    }
    results.sort_by_key(|r| r.0);

    let mut all = true;
    for (n, r, secs) in &results {
        match r {
            Ok(msg) => println!("criterion {n:>2}: PASS ({secs:.2}s) {msg}"),
            Err(msg) => {
                all = false;
                println!("criterion {n:>2}: FAIL ({secs:.2}s) {msg}");
            }
        }
    }
    println!("total {:.2}s", start.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
