//! Numerical thresholds shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative Hermiticity defect accepted before symmetrization.
pub const EPS_HERM: f64 = 1e-10;
/// Minimum eigenvalue for [`crate::matops::inv_sqrt_psd`].
pub const EPS_PD: f64 = 1e-9;
/// Probabilities below this are exact zeros in divergence computations.
pub const EPS_PROB_ZERO: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// PSD slack for effects and states.
    pub psd: f64,
    /// Frobenius bound on `sum_x A(x) - I`.
    pub comp: f64,
    /// Trace-normalized proportionality threshold.
    pub prop: f64,
    /// Max-norm agreement of likelihood-ratio vectors.
    pub lsb: f64,
    /// Feasibility threshold of the post-processing program.
    pub lp: f64,
    /// Frobenius matching threshold for isomorphisms.
    pub iso: f64,
    /// Effects with trace below this are vanishing.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: 1e-9,
            comp: 1e-8,
            prop: 1e-8,
            lsb: 1e-7,
            lp: 1e-7,
            iso: 1e-7,
            zero: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("psd", self.psd),
            ("comp", self.comp),
            ("prop", self.prop),
            ("lsb", self.lsb),
            ("lp", self.lp),
            ("iso", self.iso),
            ("zero", self.zero),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}
