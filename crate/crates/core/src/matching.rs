//! Tolerance-aware bipartite matching of effect lists.

use crate::error::{Error, Result};
use crate::matops::HermitianMatrix;

/// Finds a perfect matching `left[i] ~ right[m[i]]` with Frobenius distance
/// at most `eps`.
///
/// Returns an error when one matrix is within `eps` of two partners that are
/// themselves further than `eps` apart: the tolerance cannot tell which
/// pairing is meant.
pub fn match_effects(
    left: &[(&str, &HermitianMatrix)],
    right: &[(&str, &HermitianMatrix)],
    eps: f64,
) -> Result<Option<Vec<usize>>> {
    if left.len() != right.len() {
        return Ok(None);
    }
    let n = left.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (_, a)) in left.iter().enumerate() {
        for (j, (_, b)) in right.iter().enumerate() {
            if a.distance(b) <= eps {
                adj[i].push(j);
            }
        }
    }
    check_ambiguity(left, right, &adj, eps)?;
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, js) in adj.iter().enumerate() {
        for &j in js {
            radj[j].push(i);
        }
    }
    check_ambiguity(right, left, &radj, eps)?;

    let mut match_right: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut seen, &mut match_right) {
            return Ok(None);
        }
    }
    let mut out = vec![0; n];
    for (j, m) in match_right.into_iter().enumerate() {
        out[m.expect("perfect matching covers every right vertex")] = j;
    }
    Ok(Some(out))
}

fn check_ambiguity(
    from: &[(&str, &HermitianMatrix)],
    to: &[(&str, &HermitianMatrix)],
    adj: &[Vec<usize>],
    eps: f64,
) -> Result<()> {
    for (i, js) in adj.iter().enumerate() {
        for (k, &j1) in js.iter().enumerate() {
            for &j2 in &js[k + 1..] {
                if to[j1].1.distance(to[j2].1) > eps {
                    return Err(Error::AmbiguousMatching {
                        label: from[i].0.to_string(),
                        first: to[j1].0.to_string(),
                        second: to[j2].0.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

// Kuhn's augmenting path search.
fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], match_right: &mut [Option<usize>]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match match_right[j] {
            None => true,
            Some(other) => augment(other, adj, seen, match_right),
        };
        if free {
            match_right[j] = Some(i);
            return true;
        }
    }
    false
}
