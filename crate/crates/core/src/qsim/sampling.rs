use crate::error::{Error, Result};
use crate::qsim::projector::{born_probability, project_collapse, ProjectorSpec};
use crate::qsim::rng::TrialRng;
use crate::qsim::state::StateVector;
use crate::scalar::Real;

/// Born weights of an orthogonal partition, evaluated once and sampled many times.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OutcomeDistribution {
    /// Checks pairwise orthogonality of `partition` and that its Born
    /// weights exhaust the state (sum to 1 within the composed tolerance).
    pub fn from_partition<T: Real>(
        state: &StateVector<T>,
        partition: &[ProjectorSpec<T>],
    ) -> Result<Self> {
        if partition.is_empty() {
            return Err(Error::NonExhaustive(0.0));
        }
        let layout = state.layout();
        for i in 0..partition.len() {
            for j in i + 1..partition.len() {
                let mut union = partition[i].registers();
                for r in partition[j].registers() {
                    if !union.contains(&r) {
                        union.push(r);
                    }
                }
                if union.is_empty() {
                    return Err(Error::NonOrthogonal(i, j));
                }
                let a = partition[i].operator_on(layout, &union)?;
                let b = partition[j].operator_on(layout, &union)?;
                let overlap = a
                    .compose(&b)?
                    .entries()
                    .iter()
                    .map(|e| e.norm().as_f64())
                    .fold(0.0, f64::max);
                if overlap > T::IDENTITY_TOL {
                    return Err(Error::NonOrthogonal(i, j));
                }
            }
        }
        let probabilities = partition
            .iter()
            .map(|p| born_probability(state, p).map(Real::as_f64))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_weights(probabilities, T::COMPOSED_TOL)
    }

    /// Distribution from explicit weights that must sum to 1 within `tol`.
    pub fn from_weights(probabilities: Vec<f64>, tol: f64) -> Result<Self> {
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > tol || probabilities.iter().any(|p| *p < -tol) {
            return Err(Error::NonExhaustive(total));
        }
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p.max(0.0) / total;
                acc
            })
            .collect();
        Ok(Self {
            probabilities,
            cumulative,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Inverse-CDF lookup for a uniform `u ∈ [0, 1)`; zero-weight outcomes are
    /// never returned.
    pub fn pick(&self, u: f64) -> usize {
        let last = self
            .probabilities
            .iter()
            .rposition(|p| *p > 0.0)
            .unwrap_or(0);
        self.cumulative
            .iter()
            .position(|c| u < *c)
            .map_or(last, |k| k.min(last))
    }

    pub fn draw(&self, rng: &mut TrialRng) -> usize {
        self.pick(rng.uniform())
    }
}

/// Draws one outcome of `partition` with Born weights and returns it with the
/// collapsed branch. Deterministic in `(seed, trial)`; uses draw index 0.
pub fn sample_outcome<T: Real>(
    state: &StateVector<T>,
    partition: &[ProjectorSpec<T>],
    rng_seed: (u64, u64),
) -> Result<(usize, StateVector<T>)> {
    let dist = OutcomeDistribution::from_partition(state, partition)?;
    let k = dist.pick(TrialRng::uniform_at(rng_seed.0, rng_seed.1, 0));
    let branch = project_collapse(state, &partition[k])?;
    Ok((k, branch))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::qsim::layout::RegisterLayout;
    use crate::scalar::re;

    fn coin() -> StateVector<f64> {
        let l = Arc::new(RegisterLayout::new([("c", vec!["heads", "tails"])]).unwrap());
        let h = StateVector::basis_state(l.clone(), &[("c", "heads")]).unwrap();
        let t = StateVector::basis_state(l, &[("c", "tails")]).unwrap();
        StateVector::superpose(&[(re((1.0f64 / 3.0).sqrt()), &h), (re((2.0f64 / 3.0).sqrt()), &t)])
            .unwrap()
    }

    #[test]
    fn sampling_is_deterministic_per_trial() {
        let s = coin();
        let part = [ProjectorSpec::basis("c", &["heads"]), ProjectorSpec::basis("c", &["tails"])];
        let a = sample_outcome(&s, &part, (9, 123)).unwrap();
        let b = sample_outcome(&s, &part, (9, 123)).unwrap();
        assert_eq!(a, b);
        assert_eq!(born_probability(&a.1, &part[a.0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_partitions() {
        let s = coin();
        let heads = ProjectorSpec::basis("c", &["heads"]);
        assert!(matches!(
            OutcomeDistribution::from_partition(&s, &[heads.clone()]),
            Err(Error::NonExhaustive(_))
        ));
        assert!(matches!(
            OutcomeDistribution::from_partition(&s, &[heads.clone(), ProjectorSpec::full()]),
            Err(Error::NonOrthogonal(0, 1))
        ));
    }

    #[test]
    fn pick_skips_zero_weights() {
        let d = OutcomeDistribution::from_weights(vec![0.0, 0.5, 0.0, 0.5, 0.0], 1e-12).unwrap();
        assert_eq!(d.pick(0.0), 1);
        assert_eq!(d.pick(0.49), 1);
        assert_eq!(d.pick(0.5), 3);
        assert_eq!(d.pick(0.999_999_999_999), 3);
    }
}
