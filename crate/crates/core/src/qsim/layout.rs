use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest composite dimension the dense engine accepts.
pub const MAX_DIMENSION: usize = 1 << 20;

/// One labeled subsystem with named basis states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    label: String,
    basis: Vec<String>,
}

impl Register {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[String] {
        &self.basis
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == name)
    }
}

/// Ordered list of registers; the first register is the most significant
/// digit of a product-basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    strides: Vec<usize>,
    dim: usize,
}

impl RegisterLayout {
    /// Builds a layout from `(label, basis names)` pairs.
    pub fn new<L, B, N>(registers: L) -> Result<Self>
    where
        L: IntoIterator<Item = (N, B)>,
        B: IntoIterator,
        B::Item: Into<String>,
        N: Into<String>,
    {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(label, basis)| Register {
                label: label.into(),
                basis: basis.into_iter().map(Into::into).collect(),
            })
            .collect();
        if registers.is_empty() {
            return Err(Error::Config("layout needs at least one register".into()));
        }
        let mut labels = HashSet::new();
        for r in &registers {
            if !labels.insert(r.label.as_str()) {
                return Err(Error::Config(format!("duplicate register label {:?}", r.label)));
            }
            if r.dim() < 2 {
                return Err(Error::Config(format!(
                    "register {:?} has dimension {} (< 2)",
                    r.label,
                    r.dim()
                )));
            }
            let mut names = HashSet::new();
            for b in &r.basis {
                if !names.insert(b.as_str()) {
                    return Err(Error::Config(format!(
                        "duplicate basis name {b:?} in register {:?}",
                        r.label
                    )));
                }
            }
        }
        let mut dim: usize = 1;
        for r in &registers {
            dim = dim
                .checked_mul(r.dim())
                .filter(|&d| d <= MAX_DIMENSION)
                .ok_or_else(|| {
                    Error::Config(format!("total dimension exceeds {MAX_DIMENSION}"))
                })?;
        }
        let mut strides = vec![1; registers.len()];
        for i in (0..registers.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * registers[i + 1].dim();
        }
        Ok(Self { registers, strides, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.label == label)
            .ok_or_else(|| Error::Config(format!("unknown register {label:?}")))
    }

    pub fn register(&self, label: &str) -> Result<&Register> {
        Ok(&self.registers[self.position(label)?])
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    /// Basis index of `name` within register `label`.
    pub fn basis_index(&self, label: &str, name: &str) -> Result<usize> {
        let reg = self.register(label)?;
        reg.index_of(name).ok_or_else(|| {
            Error::Config(format!("register {label:?} has no basis state {name:?}"))
        })
    }

    /// Digit of register `pos` in product index `idx`.
    #[inline]
    pub fn digit(&self, idx: usize, pos: usize) -> usize {
        (idx / self.strides[pos]) % self.registers[pos].dim()
    }

    /// Resolves labels to positions, rejecting repeats.
    pub fn positions(&self, labels: &[String]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        labels
            .iter()
            .map(|l| {
                if !seen.insert(l.as_str()) {
                    return Err(Error::Config(format!("register {l:?} listed twice")));
                }
                self.position(l)
            })
            .collect()
    }

    /// Product of the dimensions of the given registers.
    pub fn group_dim(&self, labels: &[String]) -> Result<usize> {
        Ok(self
            .positions(labels)?
            .iter()
            .map(|&p| self.registers[p].dim())
            .product())
    }

    /// Layout restricted to `labels`, in the given order.
    pub fn sublayout(&self, labels: &[String]) -> Result<RegisterLayout> {
        let pos = self.positions(labels)?;
        RegisterLayout::new(
            pos.iter()
                .map(|&p| (self.registers[p].label.clone(), self.registers[p].basis.clone())),
        )
    }

    /// Human-readable name of a product-basis index, e.g. `|up,ready⟩`.
    pub fn ket_name(&self, idx: usize) -> String {
        let parts: Vec<&str> = (0..self.registers.len())
            .map(|p| self.registers[p].basis[self.digit(idx, p)].as_str())
            .collect();
        format!("|{}⟩", parts.join(","))
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .registers
            .iter()
            .map(|r| format!("{}:{}", r.label, r.dim()))
            .collect();
        write!(f, "[{}]", parts.join(" ⊗ "))
    }
}

/// Precomputed index arithmetic for acting on a subset of registers.
///
/// `offsets[l]` is the full-index offset of local index `l` (local digits in
/// target order, big-endian); `bases` are the full indices whose target
/// digits are all zero.
#[derive(Debug, Clone)]
pub(crate) struct GroupPlan {
    pub offsets: Vec<usize>,
    pub bases: Vec<usize>,
}

impl GroupPlan {
    pub fn new(layout: &RegisterLayout, targets: &[String]) -> Result<Self> {
        let pos = layout.positions(targets)?;
        let local_dim: usize = pos.iter().map(|&p| layout.registers[p].dim()).product();
        let mut offsets = Vec::with_capacity(local_dim);
        for l in 0..local_dim {
            let mut rem = l;
            let mut off = 0;
            for &p in pos.iter().rev() {
                let d = layout.registers[p].dim();
                off += (rem % d) * layout.strides[p];
                rem /= d;
            }
            offsets.push(off);
        }
        let bases = (0..layout.dim)
            .filter(|&i| pos.iter().all(|&p| layout.digit(i, p) == 0))
            .collect();
        Ok(Self { offsets, bases })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spin_lab() -> RegisterLayout {
        RegisterLayout::new([
            ("1", vec!["up", "down"]),
            ("X", vec!["ready", "up", "down"]),
        ])
        .unwrap()
    }

    #[test]
    fn dimension_and_strides() {
        let l = spin_lab();
        assert_eq!(l.dim(), 6);
        assert_eq!(l.stride(0), 3);
        assert_eq!(l.stride(1), 1);
        assert_eq!(l.digit(4, 0), 1);
        assert_eq!(l.digit(4, 1), 1);
        assert_eq!(l.ket_name(4), "|down,up⟩");
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(RegisterLayout::new([("a", vec!["x"])]).is_err());
        assert!(RegisterLayout::new([("a", vec!["x", "x"])]).is_err());
        assert!(RegisterLayout::new([("a", vec!["x", "y"]), ("a", vec!["x", "y"])]).is_err());
        let too_big = (0..21).map(|i| (format!("q{i}"), vec!["0", "1"]));
        assert!(RegisterLayout::new(too_big).is_err());
        let ok = (0..20).map(|i| (format!("q{i}"), vec!["0", "1"]));
        assert_eq!(RegisterLayout::new(ok).unwrap().dim(), 1 << 20);
    }

    #[test]
    fn unknown_names_are_config_errors() {
        let l = spin_lab();
        assert!(matches!(l.basis_index("1", "sideways"), Err(Error::Config(_))));
        assert!(matches!(l.position("Q"), Err(Error::Config(_))));
    }

    #[test]
    fn group_plan_respects_target_order() {
        let l = spin_lab();
        let plan = GroupPlan::new(&l, &["X".into(), "1".into()]).unwrap();
        // local index = x_digit * 2 + spin_digit
        assert_eq!(plan.offsets, vec![0, 3, 1, 4, 2, 5]);
        assert_eq!(plan.bases, vec![0]);
    }
}
