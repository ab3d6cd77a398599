//! The three thought experiments, built by composing dilation unitaries and
//! cross-checked against hand-assembled closed-form states.

pub mod brukner;
pub mod epr;
pub mod fr;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qsim::{LocalKet, RegisterLayout, StateVector};
use crate::scalar::re;

/// Fidelity threshold for "same state as the closed form".
pub const STATE_MATCH_TOL: f64 = 1e-12;

/// `Σ coef · ⊗ factors` as a normalized state. Registers not covered by a
/// term's factors sit in their first basis state (`ready` for every lab).
pub(crate) fn assemble(
    layout: &Arc<RegisterLayout>,
    terms: &[(f64, Vec<&LocalKet<f64>>)],
) -> Result<StateVector<f64>> {
    let states = terms
        .iter()
        .map(|(_, f)| StateVector::product(layout.clone(), f))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<_> = terms.iter().zip(&states).map(|((c, _), s)| (re(*c), s)).collect();
    StateVector::superpose(&pairs)
}

/// Fails with a numerical-contract error unless `built` matches `reference`.
pub(crate) fn require_match(
    what: &str,
    built: &StateVector<f64>,
    reference: &StateVector<f64>,
) -> Result<f64> {
    let f = built.fidelity(reference)?;
    if (1.0 - f) > STATE_MATCH_TOL {
        return Err(Error::Numerical(format!(
            "{what}: dilation-built state has fidelity {f} with its closed form"
        )));
    }
    Ok(f)
}
