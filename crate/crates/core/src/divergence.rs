//! f-divergences and the total-variation metric between outcome distributions.
//!
//! `D_f(P, Q) = sum_x q(x) f(p(x)/q(x))` with the conventions `0 f(0/0) = 0`
//! and `0 f(p/0) = p f*(0)` where `f*(0) = lim_{t->inf} f(t)/t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::EPS_PROB_ZERO;
use crate::error::{Error, Result};
use crate::povm::{outcome_distribution, DensityMatrix, DiscretePovm};

const SUM_TOL: f64 = 1e-9;
const NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FGenerator {
    /// `(sqrt t - 1)^2`, bounded by 2.
    Hellinger,
    /// `t ln t`.
    Kl,
    /// `(t - 1)^2`.
    Chi2,
}

impl FGenerator {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            FGenerator::Hellinger => (t.sqrt() - 1.0).powi(2),
            FGenerator::Kl => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
            FGenerator::Chi2 => (t - 1.0).powi(2),
        }
    }

    /// `lim_{t->inf} f(t)/t`.
    pub fn f_star_at_zero(self) -> f64 {
        match self {
            FGenerator::Hellinger => 1.0,
            FGenerator::Kl | FGenerator::Chi2 => f64::INFINITY,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FGenerator::Hellinger => "hellinger",
            FGenerator::Kl => "kl",
            FGenerator::Chi2 => "chi2",
        }
    }
}

impl fmt::Display for FGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FGenerator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hellinger" => Ok(FGenerator::Hellinger),
            "kl" => Ok(FGenerator::Kl),
            "chi2" => Ok(FGenerator::Chi2),
            other => Err(Error::Schema(format!(
                "unknown f-divergence {other:?} (expected hellinger, kl or chi2)"
            ))),
        }
    }
}

fn check_probability(p: &[f64], name: &str) -> Result<()> {
    for (i, &x) in p.iter().enumerate() {
        if !x.is_finite() || x < -NEG_TOL {
            return Err(Error::NotProbability(format!("{name}[{i}] = {x}")));
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::NotProbability(format!("{name} sums to {s}")));
    }
    Ok(())
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    check_probability(p, "P")?;
    check_probability(q, "Q")
}

/// `D_f(P, Q)`, possibly `+inf` for unbounded generators.
pub fn f_divergence(f: FGenerator, p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    let mut total = 0.0;
    for (&px, &qx) in p.iter().zip(q) {
        let px = if px < EPS_PROB_ZERO { 0.0 } else { px };
        let qx = if qx < EPS_PROB_ZERO { 0.0 } else { qx };
        let term = if qx == 0.0 {
            if px == 0.0 {
                0.0
            } else {
                px * f.f_star_at_zero()
            }
        } else {
            qx * f.eval(px / qx)
        };
        total += term;
    }
    Ok(total.max(0.0))
}

/// Squared Hellinger distance `sum (sqrt p - sqrt q)^2`, in `[0, 2]`.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64> {
    f_divergence(FGenerator::Hellinger, p, q)
}

/// `(1/2) sum |p - q|`, the supremum over events for discrete measures.
pub fn tv_metric(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn divergence_between_states(
    f: FGenerator,
    povm: &DiscretePovm,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<f64> {
    let p = outcome_distribution(povm, rho)?;
    let q = outcome_distribution(povm, sigma)?;
    f_divergence(f, &p, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hellinger_examples() {
        assert_eq!(hellinger(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_abs_diff_eq!(hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            hellinger(&[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            2.0 - 2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_metric(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(tv_metric(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(tv_metric(&[0.7, 0.3], &[0.5, 0.5]).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn unbounded_generators_diverge_off_support() {
        assert_eq!(
            f_divergence(FGenerator::Kl, &[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            f_divergence(FGenerator::Chi2, &[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            f64::INFINITY
        );
        // p = 0 where q > 0 stays finite: KL(P||Q) = ln 2 for P=(1,0), Q=(1/2,1/2).
        assert_abs_diff_eq!(
            f_divergence(FGenerator::Kl, &[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        // chi2 = sum (p-q)^2/q = 0.25/0.5 + 0.25/0.5 = 1.
        assert_abs_diff_eq!(
            f_divergence(FGenerator::Chi2, &[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn tiny_q_uses_zero_convention() {
        let h = hellinger(&[0.5, 0.5], &[1.0 - 1e-16, 1e-16]).unwrap();
        assert_abs_diff_eq!(h, (0.5f64.sqrt() - 1.0).powi(2) + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            hellinger(&[1.0], &[0.5, 0.5]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            hellinger(&[0.6, 0.6], &[0.5, 0.5]),
            Err(Error::NotProbability(_))
        ));
        assert!(matches!(
            tv_metric(&[1.5, -0.5], &[0.5, 0.5]),
            Err(Error::NotProbability(_))
        ));
    }

    #[test]
    fn parse_tags() {
        assert_eq!("Hellinger".parse::<FGenerator>().unwrap(), FGenerator::Hellinger);
        assert_eq!("kl".parse::<FGenerator>().unwrap(), FGenerator::Kl);
        assert!("js".parse::<FGenerator>().is_err());
    }

    #[test]
    fn state_divergence_examples() {
        let pvm = DiscretePovm::computational_basis(2);
        let rho = DensityMatrix::basis(2, 0);
        let sigma = DensityMatrix::maximally_mixed(2);
        let h = divergence_between_states(FGenerator::Hellinger, &pvm, &rho, &sigma).unwrap();
        assert_abs_diff_eq!(h, 2.0 - 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(
            divergence_between_states(FGenerator::Hellinger, &pvm, &rho, &rho).unwrap(),
            0.0
        );
        let trivial = DiscretePovm::trivial(2);
        assert_eq!(
            divergence_between_states(FGenerator::Kl, &trivial, &rho, &sigma).unwrap(),
            0.0
        );
    }
}
