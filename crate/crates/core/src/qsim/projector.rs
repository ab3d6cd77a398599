use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::qsim::layout::RegisterLayout;
use crate::qsim::operator::{OperatorKind, OperatorMatrix};
use crate::qsim::state::{LocalKet, StateVector};
use crate::scalar::{one, zero, Real, C};

/// One factor of a product projector.
#[derive(Debug, Clone, PartialEq)]
pub enum Clause<T: Real> {
    /// Span of the named computational basis states of one register.
    Basis { register: String, names: Vec<String> },
    /// Span of orthonormal vectors on a register group (e.g. an entangled
    /// pointer state such as "OK" on the coin-plus-lab pair).
    Span { label: String, kets: Vec<LocalKet<T>> },
}

impl<T: Real> Clause<T> {
    pub fn registers(&self) -> Vec<String> {
        match self {
            Clause::Basis { register, .. } => vec![register.clone()],
            Clause::Span { kets, .. } => kets[0].registers().to_vec(),
        }
    }

    fn operator(&self, layout: &RegisterLayout) -> Result<OperatorMatrix<T>> {
        match self {
            Clause::Basis { register, names } => {
                let d = layout.register(register)?.dim();
                let mut entries = vec![zero(); d * d];
                for n in names {
                    let i = layout.basis_index(register, n)?;
                    entries[i * d + i] = one();
                }
                OperatorMatrix::new(vec![register.clone()], vec![d], entries, OperatorKind::Hermitian)
            }
            Clause::Span { kets, .. } => {
                let regs = kets[0].registers().to_vec();
                let dims: Vec<usize> = layout
                    .positions(&regs)?
                    .iter()
                    .map(|&p| layout.registers()[p].dim())
                    .collect();
                let d: usize = dims.iter().product();
                let mut entries = vec![zero(); d * d];
                for k in kets {
                    let v = k.amplitudes();
                    if v.len() != d {
                        return Err(Error::Dimension {
                            expected: d,
                            actual: v.len(),
                        });
                    }
                    for r in 0..d {
                        for c in 0..d {
                            entries[r * d + c] += v[r] * v[c].conj();
                        }
                    }
                }
                OperatorMatrix::new(regs, dims, entries, OperatorKind::Hermitian)
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            Clause::Basis { register, names } => format!("{register}∈{{{}}}", names.join(",")),
            Clause::Span { label, .. } => label.clone(),
        }
    }
}

/// Projector onto the product-basis states matching every clause.
///
/// An empty clause list is the identity (the whole space).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectorSpec<T: Real> {
    clauses: Vec<Clause<T>>,
}

impl<T: Real> ProjectorSpec<T> {
    pub fn full() -> Self {
        Self { clauses: Vec::new() }
    }

    /// Projector selecting `names` on `register`.
    pub fn basis(register: &str, names: &[&str]) -> Self {
        Self::full().and_basis(register, names)
    }

    /// Projector onto the span of orthonormal `kets` on one register group.
    pub fn span(label: &str, kets: Vec<LocalKet<T>>) -> Result<Self> {
        Self::full().and_span(label, kets)
    }

    pub fn and_basis(mut self, register: &str, names: &[&str]) -> Self {
        self.clauses.push(Clause::Basis {
            register: register.to_string(),
            names: names.iter().map(|s| s.to_string()).collect(),
        });
        self
    }

    pub fn and_span(mut self, label: &str, kets: Vec<LocalKet<T>>) -> Result<Self> {
        let first = kets
            .first()
            .ok_or_else(|| Error::Config(format!("span clause {label:?} has no vectors")))?;
        if kets.iter().any(|k| k.registers() != first.registers()) {
            return Err(Error::LayoutMismatch(format!(
                "span clause {label:?} mixes register groups"
            )));
        }
        let mut worst = 0.0f64;
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                let target = if i == j { one() } else { zero() };
                worst = worst.max((a.inner(b) - target).norm().as_f64());
            }
        }
        if worst > T::IDENTITY_TOL {
            return Err(Error::NotOrthonormal(worst));
        }
        self.clauses.push(Clause::Span {
            label: label.to_string(),
            kets,
        });
        Ok(self)
    }

    /// Conjunction of projectors on disjoint registers.
    pub fn and(mut self, other: &Self) -> Self {
        self.clauses.extend(other.clauses.iter().cloned());
        self
    }

    pub fn clauses(&self) -> &[Clause<T>] {
        &self.clauses
    }

    pub fn registers(&self) -> Vec<String> {
        self.clauses.iter().flat_map(|c| c.registers()).collect()
    }

    pub fn describe(&self) -> String {
        if self.clauses.is_empty() {
            return "⊤".into();
        }
        self.clauses
            .iter()
            .map(Clause::describe)
            .collect::<Vec<_>>()
            .join(" ∧ ")
    }

    /// Checks names and registers against `layout` and that clauses are disjoint.
    pub fn validate(&self, layout: &RegisterLayout) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.clauses {
            for r in c.registers() {
                layout.position(&r)?;
                if !seen.insert(r.clone()) {
                    return Err(Error::Config(format!(
                        "register {r:?} constrained by two clauses"
                    )));
                }
            }
            if let Clause::Basis { register, names } = c {
                for n in names {
                    layout.basis_index(register, n)?;
                }
            }
            if let Clause::Span { kets, .. } = c {
                let d = layout.group_dim(&c.registers())?;
                if kets.iter().any(|k| k.amplitudes().len() != d) {
                    return Err(Error::Dimension {
                        expected: d,
                        actual: kets[0].amplitudes().len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `P·amps` (unnormalized).
    pub(crate) fn apply_raw(&self, layout: &RegisterLayout, amps: &[C<T>]) -> Result<Vec<C<T>>> {
        self.validate(layout)?;
        let mut out = amps.to_vec();
        for c in &self.clauses {
            match c {
                Clause::Basis { register, names } => {
                    let pos = layout.position(register)?;
                    let mut keep = vec![false; layout.registers()[pos].dim()];
                    for n in names {
                        keep[layout.basis_index(register, n)?] = true;
                    }
                    for (idx, a) in out.iter_mut().enumerate() {
                        if !keep[layout.digit(idx, pos)] {
                            *a = zero();
                        }
                    }
                }
                Clause::Span { .. } => {
                    out = c.operator(layout)?.act_raw(layout, &out)?;
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the projector on `targets` (which must cover its registers).
    pub fn operator_on(&self, layout: &RegisterLayout, targets: &[String]) -> Result<OperatorMatrix<T>> {
        self.validate(layout)?;
        let dims: Vec<usize> = layout
            .positions(targets)?
            .iter()
            .map(|&p| layout.registers()[p].dim())
            .collect();
        let mut acc = OperatorMatrix::identity(targets.to_vec(), dims);
        for c in &self.clauses {
            let op = c.operator(layout)?.embed(layout, targets)?;
            acc = acc.compose(&op)?;
        }
        Ok(acc)
    }
}

fn squared_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
}

/// Born probability `‖P ψ‖²`.
pub fn born_probability<T: Real>(state: &StateVector<T>, proj: &ProjectorSpec<T>) -> Result<T> {
    let v = proj.apply_raw(state.layout(), state.amplitudes())?;
    Ok(squared_norm(&v).min(T::one()))
}

/// Largest entry of the commutator of two projectors, computed only on the
/// registers where their clauses overlap.
pub fn commutator_defect<T: Real>(
    layout: &RegisterLayout,
    p: &ProjectorSpec<T>,
    q: &ProjectorSpec<T>,
) -> Result<f64> {
    let q_regs: HashSet<String> = q.registers().into_iter().collect();
    let p_regs: HashSet<String> = p.registers().into_iter().collect();
    let p_overlap: Vec<&Clause<T>> = p
        .clauses
        .iter()
        .filter(|c| c.registers().iter().any(|r| q_regs.contains(r)))
        .collect();
    if p_overlap.is_empty() {
        return Ok(0.0);
    }
    let q_overlap: Vec<&Clause<T>> = q
        .clauses
        .iter()
        .filter(|c| c.registers().iter().any(|r| p_regs.contains(r)))
        .collect();
    let mut union: Vec<String> = Vec::new();
    for c in p_overlap.iter().chain(q_overlap.iter()) {
        for r in c.registers() {
            if !union.contains(&r) {
                union.push(r);
            }
        }
    }
    let sub_p = ProjectorSpec {
        clauses: p_overlap.into_iter().cloned().collect(),
    };
    let sub_q = ProjectorSpec {
        clauses: q_overlap.into_iter().cloned().collect(),
    };
    let a = sub_p.operator_on(layout, &union)?;
    let b = sub_q.operator_on(layout, &union)?;
    a.compose(&b)?.max_difference(&b.compose(&a)?)
}

/// `P(target | condition) = ‖P_T P_C ψ‖² / ‖P_C ψ‖²` for commuting projectors.
pub fn conditional_probability<T: Real>(
    state: &StateVector<T>,
    condition: &ProjectorSpec<T>,
    target: &ProjectorSpec<T>,
) -> Result<T> {
    let layout = state.layout();
    condition.validate(layout)?;
    target.validate(layout)?;
    let defect = commutator_defect(layout, condition, target)?;
    if defect > T::IDENTITY_TOL {
        return Err(Error::NonCommuting(defect));
    }
    let conditioned = condition.apply_raw(layout, state.amplitudes())?;
    let p_cond = squared_norm(&conditioned);
    if p_cond <= T::identity_tol() {
        return Err(Error::ZeroProbability(p_cond.as_f64()));
    }
    let both = target.apply_raw(layout, &conditioned)?;
    Ok((squared_norm(&both) / p_cond).min(T::one()))
}

/// Projects onto `proj` and renormalizes.
pub fn project_collapse<T: Real>(
    state: &StateVector<T>,
    proj: &ProjectorSpec<T>,
) -> Result<StateVector<T>> {
    let mut v = proj.apply_raw(state.layout(), state.amplitudes())?;
    let p = squared_norm(&v);
    if p <= T::identity_tol() {
        return Err(Error::ZeroProbability(p.as_f64()));
    }
    let n = p.sqrt();
    for a in v.iter_mut() {
        *a = *a / n;
    }
    Ok(StateVector::from_raw_unchecked(state.shared_layout(), v))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::scalar::re;

    fn two_qubits() -> Arc<RegisterLayout> {
        Arc::new(RegisterLayout::new([("1", vec!["up", "down"]), ("2", vec!["up", "down"])]).unwrap())
    }

    fn singlet(l: &Arc<RegisterLayout>) -> StateVector<f64> {
        let ud = StateVector::basis_state(l.clone(), &[("1", "up"), ("2", "down")]).unwrap();
        let du = StateVector::basis_state(l.clone(), &[("1", "down"), ("2", "up")]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::superpose(&[(re(h), &ud), (re(-h), &du)]).unwrap()
    }

    #[test]
    fn born_probabilities_of_a_singlet() {
        let l = two_qubits();
        let s = singlet(&l);
        let uu = ProjectorSpec::basis("1", &["up"]).and_basis("2", &["up"]);
        assert_eq!(born_probability(&s, &uu).unwrap(), 0.0);
        let ud = ProjectorSpec::basis("1", &["up"]).and_basis("2", &["down"]);
        assert!((born_probability(&s, &ud).unwrap() - 0.5).abs() < 1e-15);
        assert!((born_probability(&s, &ProjectorSpec::full()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_with_full_condition_is_born() {
        let l = two_qubits();
        let s = singlet(&l);
        let t = ProjectorSpec::basis("2", &["down"]);
        let c = conditional_probability(&s, &ProjectorSpec::full(), &t).unwrap();
        assert!((c - born_probability(&s, &t).unwrap()).abs() < 1e-15);
        let c = conditional_probability(&s, &ProjectorSpec::basis("1", &["up"]), &t).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_condition_is_an_error() {
        let l = two_qubits();
        let s = StateVector::<f64>::basis_state(l, &[("1", "up"), ("2", "up")]).unwrap();
        let r = conditional_probability(&s, &ProjectorSpec::basis("1", &["down"]), &ProjectorSpec::full());
        assert!(matches!(r, Err(Error::ZeroProbability(_))));
        assert!(matches!(
            project_collapse(&s, &ProjectorSpec::basis("2", &["down"])),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn non_commuting_projectors_are_rejected() {
        let l = two_qubits();
        let s = singlet(&l);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let up = LocalKet::basis(&l, &[("1", "up")]).unwrap();
        let down = LocalKet::basis(&l, &[("1", "down")]).unwrap();
        let plus = LocalKet::combine(&[(re(h), &up), (re(h), &down)]).unwrap();
        let x_plus = ProjectorSpec::span("1:+x", vec![plus]).unwrap();
        let z_up = ProjectorSpec::basis("1", &["up"]);
        assert!(matches!(
            conditional_probability(&s, &z_up, &x_plus),
            Err(Error::NonCommuting(_))
        ));
        // Same register, same basis: fine.
        let both = ProjectorSpec::basis("1", &["up", "down"]);
        assert!(conditional_probability(&s, &z_up, &both).is_ok());
    }

    #[test]
    fn span_rejects_non_orthonormal_vectors() {
        let l = two_qubits();
        let up = LocalKet::<f64>::basis(&l, &[("1", "up")]).unwrap();
        assert!(matches!(
            ProjectorSpec::span("bad", vec![up.clone(), up]),
            Err(Error::NotOrthonormal(_))
        ));
    }

    #[test]
    fn collapse_onto_own_basis_state_is_identity() {
        let l = two_qubits();
        let s = StateVector::<f64>::basis_state(l, &[("1", "up"), ("2", "down")]).unwrap();
        let p = ProjectorSpec::basis("1", &["up"]).and_basis("2", &["down"]);
        assert_eq!(project_collapse(&s, &p).unwrap(), s);
    }

    #[test]
    fn overlapping_clauses_are_invalid() {
        let l = two_qubits();
        let s = singlet(&l);
        let p = ProjectorSpec::basis("1", &["up"]).and_basis("1", &["down"]);
        assert!(born_probability(&s, &p).is_err());
    }
}
