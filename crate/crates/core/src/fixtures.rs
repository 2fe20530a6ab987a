//! Bundled example objects, addressable from the CLI as `fixture:<name>`.

use crate::instrument::KrausInstrument;
use crate::matops::HermitianMatrix;
use crate::povm::{tomographic_ensemble, DiscretePovm};

/// Diagonal of `A₀` in the two-outcome coarse POVM `{A₀, I - A₀}`.
pub const INTRO_A0: [f64; 2] = [0.6, 0.1];
pub const INTRO_LAMBDA: f64 = 0.3;

/// `{A₀, A₁}` with `A₀ = diag(0.6, 0.1)`, `A₁ = I - A₀`.
pub fn intro_coarse() -> DiscretePovm {
    DiscretePovm::from_parts(
        2,
        vec![
            ("0".into(), HermitianMatrix::from_real_diag(&INTRO_A0)),
            (
                "1".into(),
                HermitianMatrix::from_real_diag(&[1.0 - INTRO_A0[0], 1.0 - INTRO_A0[1]]),
            ),
        ],
    )
}

/// `B_{i0} = λ A_i`, `B_{i1} = (1-λ) A_i`, labelled `"ij"`.
pub fn intro_split(lambda: f64) -> DiscretePovm {
    let a = intro_coarse();
    let mut outcomes = Vec::with_capacity(4);
    for o in a.outcomes() {
        for (j, w) in [(0, lambda), (1, 1.0 - lambda)] {
            outcomes.push((format!("{}{}", o.label, j), o.effect.matrix().scale(w)));
        }
    }
    DiscretePovm::from_parts(2, outcomes)
}

/// Names accepted by [`lookup`].
pub const NAMES: &[&str] = &[
    "intro_A",
    "intro_B",
    "trine",
    "pvm2",
    "pvm3",
    "pvm4",
    "luders_pvm2",
    "luders_pvm3",
    "identity2",
    "ensemble2",
    "ensemble3",
    "ensemble4",
];

/// JSON text of a bundled fixture.
pub fn lookup(name: &str) -> Option<String> {
    let json = match name {
        "intro_A" => intro_coarse().to_json(),
        "intro_B" => intro_split(INTRO_LAMBDA).to_json(),
        "trine" => DiscretePovm::trine().to_json(),
        "pvm2" => DiscretePovm::computational_basis(2).to_json(),
        "pvm3" => DiscretePovm::computational_basis(3).to_json(),
        "pvm4" => DiscretePovm::computational_basis(4).to_json(),
        "luders_pvm2" => KrausInstrument::luders(&DiscretePovm::computational_basis(2))
            .ok()?
            .to_json(),
        "luders_pvm3" => KrausInstrument::luders(&DiscretePovm::computational_basis(3))
            .ok()?
            .to_json(),
        "identity2" => KrausInstrument::identity(2).to_json(),
        "ensemble2" => serde_json::to_string(&tomographic_ensemble(2).to_raw()).ok()?,
        "ensemble3" => serde_json::to_string(&tomographic_ensemble(3).to_raw()).ok()?,
        "ensemble4" => serde_json::to_string(&tomographic_ensemble(4).to_raw()).ok()?,
        _ => return None,
    };
    Some(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for n in NAMES {
            assert!(lookup(n).is_some(), "{n}");
        }
        assert!(lookup("nope").is_none());
    }

    #[test]
    fn shipped_files_match_generated() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        for n in NAMES {
            let path = dir.join(format!("{n}.json"));
            let on_disk = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(on_disk.trim_end(), lookup(n).unwrap(), "{n}");
        }
    }
}
