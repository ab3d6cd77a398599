use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qsim::layout::RegisterLayout;
use crate::qsim::operator::{OperatorKind, OperatorMatrix};
use crate::scalar::{one, zero, Real, C};

/// A vector on a group of registers (not necessarily normalized), used as a
/// factor when assembling product states and as a projector direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalKet<T: Real> {
    registers: Vec<String>,
    amplitudes: Vec<C<T>>,
}

impl<T: Real> LocalKet<T> {
    pub fn new(layout: &RegisterLayout, registers: &[&str], amplitudes: Vec<C<T>>) -> Result<Self> {
        let registers: Vec<String> = registers.iter().map(|s| s.to_string()).collect();
        let dim = layout.group_dim(&registers)?;
        if amplitudes.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: amplitudes.len(),
            });
        }
        Ok(Self {
            registers,
            amplitudes,
        })
    }

    /// Product basis ket `|name_1, name_2, ...⟩` on the listed registers.
    pub fn basis(layout: &RegisterLayout, assignment: &[(&str, &str)]) -> Result<Self> {
        let registers: Vec<&str> = assignment.iter().map(|(r, _)| *r).collect();
        let owned: Vec<String> = registers.iter().map(|s| s.to_string()).collect();
        let dim = layout.group_dim(&owned)?;
        let mut idx = 0;
        for (reg, name) in assignment {
            let d = layout.register(reg)?.dim();
            idx = idx * d + layout.basis_index(reg, name)?;
        }
        let mut amplitudes = vec![zero(); dim];
        amplitudes[idx] = one();
        Self::new(layout, &registers, amplitudes)
    }

    /// `Σ coef_i · ket_i` for kets on the same registers.
    pub fn combine(terms: &[(C<T>, &LocalKet<T>)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Config("empty linear combination".into()))?
            .1;
        let mut amplitudes = vec![zero(); first.amplitudes.len()];
        for (coef, ket) in terms {
            if ket.registers != first.registers {
                return Err(Error::LayoutMismatch(format!(
                    "kets on {:?} and {:?}",
                    first.registers, ket.registers
                )));
            }
            for (a, b) in amplitudes.iter_mut().zip(&ket.amplitudes) {
                *a += *coef * *b;
            }
        }
        Ok(Self {
            registers: first.registers.clone(),
            amplitudes,
        })
    }

    pub fn registers(&self) -> &[String] {
        &self.registers
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &Self) -> C<T> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }
}

/// Normalized amplitude vector over a layout's product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    layout: Arc<RegisterLayout>,
    amplitudes: Vec<C<T>>,
}

impl<T: Real> StateVector<T> {
    /// Wraps raw amplitudes, checking the unit-norm invariant.
    pub fn from_amplitudes(layout: Arc<RegisterLayout>, amplitudes: Vec<C<T>>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Dimension {
                expected: layout.dim(),
                actual: amplitudes.len(),
            });
        }
        let s = Self { layout, amplitudes };
        let n = s.norm();
        if (n - T::one()).abs() > T::identity_tol() {
            return Err(Error::NotNormalized(n.as_f64()));
        }
        Ok(s)
    }

    pub(crate) fn from_raw_unchecked(layout: Arc<RegisterLayout>, amplitudes: Vec<C<T>>) -> Self {
        Self { layout, amplitudes }
    }

    /// Product basis state; every register must be named exactly once.
    pub fn basis_state(layout: Arc<RegisterLayout>, names: &[(&str, &str)]) -> Result<Self> {
        let mut digits = vec![None; layout.len()];
        for (reg, name) in names {
            let p = layout.position(reg)?;
            if digits[p].is_some() {
                return Err(Error::Config(format!("register {reg:?} assigned twice")));
            }
            digits[p] = Some(layout.basis_index(reg, name)?);
        }
        let mut idx = 0;
        for (p, d) in digits.iter().enumerate() {
            let d = d.ok_or_else(|| {
                Error::Config(format!(
                    "register {:?} has no basis state assigned",
                    layout.registers()[p].label()
                ))
            })?;
            idx += d * layout.stride(p);
        }
        let mut amplitudes = vec![zero(); layout.dim()];
        amplitudes[idx] = one();
        Ok(Self { layout, amplitudes })
    }

    /// Tensor product of local kets on disjoint register groups. Registers
    /// not covered by any factor are put in their first basis state (by
    /// convention "ready" for labs and pointers). The result must have unit norm.
    pub fn product(layout: Arc<RegisterLayout>, factors: &[&LocalKet<T>]) -> Result<Self> {
        let mut covered = vec![false; layout.len()];
        let mut factor_pos = Vec::with_capacity(factors.len());
        for f in factors {
            let pos = layout.positions(&f.registers)?;
            for &p in &pos {
                if covered[p] {
                    return Err(Error::Config(format!(
                        "register {:?} appears in two factors",
                        layout.registers()[p].label()
                    )));
                }
                covered[p] = true;
            }
            factor_pos.push(pos);
        }
        let mut amplitudes = vec![zero(); layout.dim()];
        'outer: for (idx, amp) in amplitudes.iter_mut().enumerate() {
            for (p, c) in covered.iter().enumerate() {
                if !c && layout.digit(idx, p) != 0 {
                    continue 'outer;
                }
            }
            let mut v = one();
            for (f, pos) in factors.iter().zip(&factor_pos) {
                let mut local = 0;
                for &p in pos {
                    local = local * layout.registers()[p].dim() + layout.digit(idx, p);
                }
                v *= f.amplitudes[local];
                if v == zero() {
                    break;
                }
            }
            *amp = v;
        }
        Self::from_amplitudes(layout, amplitudes)
    }

    /// Linear combination of states on one layout.
    ///
    /// The coefficients must already give unit norm within the composed
    /// tolerance; the result is then renormalized once by its computed norm.
    pub fn superpose(terms: &[(C<T>, &StateVector<T>)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Config("empty superposition".into()))?
            .1;
        let mut amplitudes = vec![zero(); first.amplitudes.len()];
        for (coef, s) in terms {
            if s.layout != first.layout {
                return Err(Error::LayoutMismatch("superposed states use different layouts".into()));
            }
            for (a, b) in amplitudes.iter_mut().zip(&s.amplitudes) {
                *a += *coef * *b;
            }
        }
        let norm = amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt();
        if norm <= T::identity_tol() {
            return Err(Error::ZeroVector);
        }
        if (norm - T::one()).abs() > T::composed_tol() {
            return Err(Error::NotNormalized(norm.as_f64()));
        }
        for a in amplitudes.iter_mut() {
            *a = *a / norm;
        }
        Ok(Self {
            layout: first.layout.clone(),
            amplitudes,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn shared_layout(&self) -> Arc<RegisterLayout> {
        self.layout.clone()
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    /// Amplitude of a fully specified product basis state.
    pub fn amplitude(&self, names: &[(&str, &str)]) -> Result<C<T>> {
        let probe = Self::basis_state(self.layout.clone(), names)?;
        let idx = probe
            .amplitudes
            .iter()
            .position(|a| *a == one())
            .expect("basis state has a unit entry");
        Ok(self.amplitudes[idx])
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("inner product across layouts".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// `|⟨self|other⟩|²`, clamped into [0, 1].
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        let f = self.inner(other)?.norm_sqr();
        Ok(f.max(T::zero()).min(T::one()))
    }

    /// Unitary evolution by `op ⊗ identity`.
    pub fn evolve(&self, op: &OperatorMatrix<T>) -> Result<Self> {
        if op.kind() != OperatorKind::Unitary {
            return Err(Error::Config(format!(
                "evolution requires a unitary operator, got {:?}",
                op.kind()
            )));
        }
        let amplitudes = op.act_raw(&self.layout, &self.amplitudes)?;
        let out = Self {
            layout: self.layout.clone(),
            amplitudes,
        };
        let drift = (out.norm() - T::one()).abs();
        if drift > T::identity_tol() {
            return Err(Error::Numerical(format!(
                "norm drifted by {:e} under unitary evolution",
                drift.as_f64()
            )));
        }
        Ok(out)
    }

    /// `op ⊗ identity` applied without normalization (any operator kind).
    pub fn act(&self, op: &OperatorMatrix<T>) -> Result<Vec<C<T>>> {
        op.act_raw(&self.layout, &self.amplitudes)
    }

    /// `⟨ψ|op|ψ⟩`; real for hermitian operators.
    pub fn expectation(&self, op: &OperatorMatrix<T>) -> Result<C<T>> {
        let image = self.act(op)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&image)
            .fold(zero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Born distribution over one register's computational basis.
    pub fn register_probabilities(&self, label: &str) -> Result<Vec<T>> {
        let pos = self.layout.position(label)?;
        let mut probs = vec![T::zero(); self.layout.registers()[pos].dim()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            probs[self.layout.digit(idx, pos)] += a.norm_sqr();
        }
        Ok(probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    fn qubit_lab() -> Arc<RegisterLayout> {
        Arc::new(
            RegisterLayout::new([
                ("1", vec!["up", "down"]),
                ("X", vec!["ready", "up", "down"]),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn basis_state_is_a_unit_vector() {
        let coin = Arc::new(RegisterLayout::new([("c", vec!["ready", "heads", "tails"])]).unwrap());
        let s = StateVector::<f64>::basis_state(coin, &[("c", "ready")]).unwrap();
        assert_eq!(s.amplitudes(), &[re(1.0), re(0.0), re(0.0)]);

        let l = qubit_lab();
        let s = StateVector::<f64>::basis_state(l, &[("1", "up"), ("X", "ready")]).unwrap();
        assert_eq!(s.amplitude(&[("1", "up"), ("X", "ready")]).unwrap(), re(1.0));
        assert_eq!(s.norm(), 1.0);
    }

    #[test]
    fn basis_state_errors() {
        let l = qubit_lab();
        assert!(matches!(
            StateVector::<f64>::basis_state(l.clone(), &[("1", "sideways"), ("X", "ready")]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            StateVector::<f64>::basis_state(l, &[("1", "up")]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn superpose_checks_norm() {
        let l = qubit_lab();
        let up = StateVector::<f64>::basis_state(l.clone(), &[("1", "up"), ("X", "ready")]).unwrap();
        let down = StateVector::basis_state(l.clone(), &[("1", "down"), ("X", "ready")]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let x = StateVector::superpose(&[(re(h), &up), (re(h), &down)]).unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-15);
        assert!((x.amplitude(&[("1", "down"), ("X", "ready")]).unwrap().re - h).abs() < 1e-15);

        let same = StateVector::superpose(&[(re(1.0), &up), (re(0.0), &down)]).unwrap();
        assert_eq!(same, up);

        assert!(matches!(
            StateVector::superpose(&[(re(1.0), &up), (re(1.0), &down)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            StateVector::superpose(&[(re(1.0), &up), (re(-1.0), &up)]),
            Err(Error::ZeroVector)
        ));
        let other = Arc::new(RegisterLayout::new([("1", vec!["up", "down"])]).unwrap());
        let lone = StateVector::basis_state(other, &[("1", "up")]).unwrap();
        assert!(matches!(
            StateVector::superpose(&[(re(h), &up), (re(h), &lone)]),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn fidelity_of_orthogonal_and_equal_states() {
        let l = qubit_lab();
        let up = StateVector::<f64>::basis_state(l.clone(), &[("1", "up"), ("X", "ready")]).unwrap();
        let down = StateVector::basis_state(l, &[("1", "down"), ("X", "ready")]).unwrap();
        assert_eq!(up.fidelity(&up).unwrap(), 1.0);
        assert_eq!(up.fidelity(&down).unwrap(), 0.0);
    }

    #[test]
    fn evolution_rejects_non_unitary_and_foreign_registers() {
        let l = qubit_lab();
        let up = StateVector::<f64>::basis_state(l, &[("1", "up"), ("X", "ready")]).unwrap();
        let z = OperatorMatrix::new(
            vec!["1".into()],
            vec![2],
            vec![re(1.0), re(0.0), re(0.0), re(-1.0)],
            OperatorKind::Hermitian,
        )
        .unwrap();
        assert!(up.evolve(&z).is_err());
        let id = OperatorMatrix::identity(vec!["Q".into()], vec![2]);
        assert!(up.evolve(&id).is_err());
        let id3 = OperatorMatrix::identity(vec!["1".into()], vec![3]);
        assert!(matches!(up.evolve(&id3), Err(Error::Dimension { .. })));
        let id = OperatorMatrix::identity(vec!["1".into()], vec![2]);
        assert_eq!(up.evolve(&id).unwrap(), up);
    }

    #[test]
    fn product_defaults_uncovered_registers_to_first_basis_state() {
        let l = qubit_lab();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let up = LocalKet::basis(&l, &[("1", "up")]).unwrap();
        let down = LocalKet::basis(&l, &[("1", "down")]).unwrap();
        let x = LocalKet::combine(&[(re(h), &up), (re(h), &down)]).unwrap();
        let s = StateVector::product(l.clone(), &[&x]).unwrap();
        assert!((s.amplitude(&[("1", "up"), ("X", "ready")]).unwrap().re - h).abs() < 1e-15);
        assert!((s.register_probabilities("X").unwrap()[0] - 1.0).abs() < 1e-15);
    }
}
