use crate::error::{Error, Result};
use crate::qsim::layout::{GroupPlan, RegisterLayout};
use crate::scalar::{one, zero, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// Square complex matrix acting on an ordered subset of registers.
///
/// Rows and columns are indexed by the local product basis of `targets`
/// (first target most significant). Values are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    targets: Vec<String>,
    local_dims: Vec<usize>,
    dim: usize,
    entries: Vec<C<T>>,
    kind: OperatorKind,
}

impl<T: Real> OperatorMatrix<T> {
    /// Builds an operator and checks the `kind` flag against the entries.
    pub fn new(
        targets: Vec<String>,
        local_dims: Vec<usize>,
        entries: Vec<C<T>>,
        kind: OperatorKind,
    ) -> Result<Self> {
        if targets.is_empty() || targets.len() != local_dims.len() {
            return Err(Error::Config(
                "operator needs one dimension per target register".into(),
            ));
        }
        let dim: usize = local_dims.iter().product();
        if entries.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        let op = Self {
            targets,
            local_dims,
            dim,
            entries,
            kind,
        };
        match kind {
            OperatorKind::Unitary => {
                let d = op.unitarity_defect();
                if d > T::IDENTITY_TOL {
                    return Err(Error::NotUnitary(d));
                }
            }
            OperatorKind::Hermitian => {
                let d = op.hermiticity_defect();
                if d > T::IDENTITY_TOL {
                    return Err(Error::Config(format!(
                        "operator flagged hermitian deviates from its adjoint by {d:e}"
                    )));
                }
            }
            OperatorKind::General => {}
        }
        Ok(op)
    }

    /// Same as [`new`](Self::new) with target dimensions read from `layout`.
    pub fn on_layout(
        layout: &RegisterLayout,
        targets: &[&str],
        entries: Vec<C<T>>,
        kind: OperatorKind,
    ) -> Result<Self> {
        let targets: Vec<String> = targets.iter().map(|s| s.to_string()).collect();
        let dims = layout
            .positions(&targets)?
            .iter()
            .map(|&p| layout.registers()[p].dim())
            .collect();
        Self::new(targets, dims, entries, kind)
    }

    pub fn identity(targets: Vec<String>, local_dims: Vec<usize>) -> Self {
        let dim: usize = local_dims.iter().product();
        let mut entries = vec![zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = one();
        }
        Self {
            targets,
            local_dims,
            dim,
            entries,
            kind: OperatorKind::Unitary,
        }
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn entries(&self) -> &[C<T>] {
        &self.entries
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> C<T> {
        self.entries[row * self.dim + col]
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                entries[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        Self {
            targets: self.targets.clone(),
            local_dims: self.local_dims.clone(),
            dim: n,
            entries,
            kind: self.kind,
        }
    }

    /// Matrix product `self · other` on identical targets.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.targets != other.targets || self.local_dims != other.local_dims {
            return Err(Error::LayoutMismatch(format!(
                "cannot compose operators on {:?} and {:?}",
                self.targets, other.targets
            )));
        }
        let n = self.dim;
        let mut entries = vec![zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a == zero() {
                    continue;
                }
                for c in 0..n {
                    entries[r * n + c] += a * other.entries[k * n + c];
                }
            }
        }
        let kind = if self.kind == OperatorKind::Unitary && other.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(Self {
            targets: self.targets.clone(),
            local_dims: self.local_dims.clone(),
            dim: n,
            entries,
            kind,
        })
    }

    /// Kronecker product on disjoint targets; `self` supplies the leading registers.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.targets.iter().any(|t| other.targets.contains(t)) {
            return Err(Error::Config(format!(
                "tensor product needs disjoint targets, got {:?} and {:?}",
                self.targets, other.targets
            )));
        }
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut entries = vec![zero(); dim * dim];
        for r1 in 0..n {
            for c1 in 0..n {
                let a = self.entries[r1 * n + c1];
                if a == zero() {
                    continue;
                }
                for r2 in 0..m {
                    for c2 in 0..m {
                        entries[(r1 * m + r2) * dim + c1 * m + c2] = a * other.entries[r2 * m + c2];
                    }
                }
            }
        }
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            (OperatorKind::Hermitian, OperatorKind::Hermitian) => OperatorKind::Hermitian,
            _ => OperatorKind::General,
        };
        let mut targets = self.targets.clone();
        targets.extend(other.targets.iter().cloned());
        let mut local_dims = self.local_dims.clone();
        local_dims.extend(other.local_dims.iter().copied());
        Ok(Self {
            targets,
            local_dims,
            dim,
            entries,
            kind,
        })
    }

    /// `max |M†M - I|` over entries.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero::<T>();
                for k in 0..n {
                    acc += self.entries[k * n + i].conj() * self.entries[k * n + j];
                }
                if i == j {
                    acc -= one();
                }
                worst = worst.max(acc.norm().as_f64());
            }
        }
        worst
    }

    /// `max |M - M†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.entries[i * n + j] - self.entries[j * n + i].conj();
                worst = worst.max(d.norm().as_f64());
            }
        }
        worst
    }

    /// Largest entry of `|self - other|` for operators on the same targets.
    pub fn max_difference(&self, other: &Self) -> Result<f64> {
        if self.targets != other.targets || self.local_dims != other.local_dims {
            return Err(Error::LayoutMismatch("operators act on different targets".into()));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (*a - *b).norm().as_f64())
            .fold(0.0, f64::max))
    }

    /// Applies the matrix to a raw amplitude vector over `layout`.
    pub(crate) fn act_raw(&self, layout: &RegisterLayout, amps: &[C<T>]) -> Result<Vec<C<T>>> {
        self.check_layout(layout)?;
        let plan = GroupPlan::new(layout, &self.targets)?;
        Ok(self.act_with_plan(&plan, amps))
    }

    pub(crate) fn act_with_plan(&self, plan: &GroupPlan, amps: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim;
        let mut out = vec![zero(); amps.len()];
        let mut local = vec![zero(); n];
        for &b in &plan.bases {
            for (l, off) in plan.offsets.iter().enumerate() {
                local[l] = amps[b + off];
            }
            for (r, off) in plan.offsets.iter().enumerate() {
                let row = &self.entries[r * n..(r + 1) * n];
                let mut acc = zero::<T>();
                for (m, v) in row.iter().zip(&local) {
                    acc += *m * *v;
                }
                out[b + off] = acc;
            }
        }
        out
    }

    pub(crate) fn check_layout(&self, layout: &RegisterLayout) -> Result<()> {
        for (t, &d) in self.targets.iter().zip(&self.local_dims) {
            let reg = layout.register(t)?;
            if reg.dim() != d {
                return Err(Error::Dimension {
                    expected: reg.dim(),
                    actual: d,
                });
            }
        }
        Ok(())
    }

    /// Extends the operator by identity onto `targets` (a superset of its own
    /// targets, in any order), using `layout` for the extra dimensions.
    pub fn embed(&self, layout: &RegisterLayout, targets: &[String]) -> Result<Self> {
        if let Some(t) = self.targets.iter().find(|t| !targets.contains(t)) {
            return Err(Error::Config(format!(
                "embedding target set misses register {t:?}"
            )));
        }
        let sub = layout.sublayout(targets)?;
        self.check_layout(&sub)?;
        let n = sub.dim();
        let plan = GroupPlan::new(&sub, &self.targets)?;
        let mut entries = vec![zero(); n * n];
        let mut basis = vec![zero(); n];
        for col in 0..n {
            basis[col] = one();
            let image = self.act_with_plan(&plan, &basis);
            for (row, v) in image.into_iter().enumerate() {
                entries[row * n + col] = v;
            }
            basis[col] = zero();
        }
        let local_dims = sub.registers().iter().map(|r| r.dim()).collect();
        Ok(Self {
            targets: targets.to_vec(),
            local_dims,
            dim: n,
            entries,
            kind: self.kind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    fn pauli_x() -> OperatorMatrix<f64> {
        OperatorMatrix::new(
            vec!["q".into()],
            vec![2],
            vec![re(0.0), re(1.0), re(1.0), re(0.0)],
            OperatorKind::Hermitian,
        )
        .unwrap()
    }

    #[test]
    fn kind_flags_are_checked() {
        let bad = OperatorMatrix::<f64>::new(
            vec!["q".into()],
            vec![2],
            vec![re(1.0), re(1.0), re(0.0), re(1.0)],
            OperatorKind::Unitary,
        );
        assert!(matches!(bad, Err(Error::NotUnitary(_))));
        let bad_h = OperatorMatrix::<f64>::new(
            vec!["q".into()],
            vec![2],
            vec![re(0.0), re(1.0), re(0.0), re(0.0)],
            OperatorKind::Hermitian,
        );
        assert!(bad_h.is_err());
    }

    #[test]
    fn dagger_is_an_involution() {
        let m = OperatorMatrix::<f64>::new(
            vec!["q".into()],
            vec![2],
            vec![
                C::new(1.0, 2.0),
                C::new(0.5, -1.0),
                C::new(-3.0, 0.25),
                C::new(0.0, 1.0),
            ],
            OperatorKind::General,
        )
        .unwrap();
        assert_eq!(m.dagger().dagger(), m);
        assert_eq!(m.dagger().entry(0, 1), C::new(-3.0, -0.25));
        let id = OperatorMatrix::<f64>::identity(vec!["q".into()], vec![2]);
        assert_eq!(id.dagger(), id);
        assert_eq!(pauli_x().dagger(), pauli_x());
    }

    #[test]
    fn tensor_and_embed_agree() {
        let layout = RegisterLayout::new([("p", vec!["0", "1"]), ("q", vec!["0", "1"])]).unwrap();
        let x = pauli_x();
        let id_p = OperatorMatrix::<f64>::identity(vec!["p".into()], vec![2]);
        let kron = id_p.tensor(&x).unwrap();
        let embedded = x.embed(&layout, &["p".into(), "q".into()]).unwrap();
        assert!(kron.max_difference(&embedded).unwrap() < 1e-15);
        assert!(x.tensor(&x).is_err());
    }
}
