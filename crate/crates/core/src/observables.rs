//! Builders for the operators used by the scenarios: planar spin
//! components, pointer and indicator observables, OK/fail basis changes and
//! measurement-dilation unitaries.
//!
//! Phase conventions: with the register basis ordered `[up, down]`, the spin
//! eigenvectors along angle φ are `up_φ = (cos φ/2, sin φ/2)` and
//! `down_φ = (−sin φ/2, cos φ/2)`, all real.

use crate::error::{Error, Result};
use crate::qsim::{LocalKet, OperatorKind, OperatorMatrix, RegisterLayout};
use crate::scalar::{one, re, zero, Real, C};

/// Direction in the fixed measurement plane, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct DirectionAngle<T: Real>(T);

impl<T: Real> DirectionAngle<T> {
    pub fn from_radians(rad: T) -> Result<Self> {
        if !rad.is_finite() {
            return Err(Error::Config(format!("angle {rad} is not finite")));
        }
        Ok(Self(rad))
    }

    pub fn from_degrees(deg: T) -> Result<Self> {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(self) -> T {
        self.0
    }

    pub fn degrees(self) -> T {
        self.0.to_degrees()
    }

    /// Angle reduced into `[0, 2π)`.
    pub fn reduced(self) -> T {
        let tau = T::TAU();
        let r = self.0 % tau;
        if r < T::zero() {
            r + tau
        } else {
            r
        }
    }
}

/// Which Brukner-style party a pointer observable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Particle `1` and Xena's lab `X`.
    A,
    /// Particle `2` and Yvonne's lab `Y`.
    B,
}

impl Side {
    pub fn registers(self) -> (&'static str, &'static str) {
        match self {
            Side::A => ("1", "X"),
            Side::B => ("2", "Y"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointerKind {
    Z,
    X,
}

/// Real eigenvectors `(up_φ, down_φ)` of the spin component along `angle`,
/// in the `[up, down]` basis.
pub fn spin_eigenvectors<T: Real>(angle: DirectionAngle<T>) -> ([C<T>; 2], [C<T>; 2]) {
    let half = angle.radians() / T::lit(2.0);
    let (s, c) = half.sin_cos();
    ([re(c), re(s)], [re(-s), re(c)])
}

/// Eigenkets of the spin component along `angle` on `register`.
pub fn spin_eigenkets<T: Real>(
    layout: &RegisterLayout,
    register: &str,
    angle: DirectionAngle<T>,
) -> Result<(LocalKet<T>, LocalKet<T>)> {
    check_spin_register(layout, register)?;
    let (up, down) = spin_eigenvectors(angle);
    Ok((
        LocalKet::new(layout, &[register], up.to_vec())?,
        LocalKet::new(layout, &[register], down.to_vec())?,
    ))
}

fn check_spin_register(layout: &RegisterLayout, register: &str) -> Result<()> {
    let r = layout.register(register)?;
    if r.basis() != ["up", "down"] {
        return Err(Error::Config(format!(
            "register {register:?} must have basis [up, down], has {:?}",
            r.basis()
        )));
    }
    Ok(())
}

/// `cos φ · σ_z + sin φ · σ_x` on a spin register with basis `[up, down]`.
pub fn spin_observable<T: Real>(register: &str, angle: DirectionAngle<T>) -> OperatorMatrix<T> {
    let (s, c) = angle.radians().sin_cos();
    OperatorMatrix::new(
        vec![register.to_string()],
        vec![2],
        vec![re(c), re(s), re(s), re(-c)],
        OperatorKind::Hermitian,
    )
    .expect("planar spin observable is hermitian")
}

/// `Σ coef · |ket⟩⟨bra|` on one register group.
pub fn dyad_sum<T: Real>(
    terms: &[(C<T>, &LocalKet<T>, &LocalKet<T>)],
    kind: OperatorKind,
    layout: &RegisterLayout,
) -> Result<OperatorMatrix<T>> {
    let regs = terms
        .first()
        .ok_or_else(|| Error::Config("empty dyad sum".into()))?
        .1
        .registers()
        .to_vec();
    let dims: Vec<usize> = layout
        .positions(&regs)?
        .iter()
        .map(|&p| layout.registers()[p].dim())
        .collect();
    let n: usize = dims.iter().product();
    let mut entries = vec![zero(); n * n];
    for (coef, ket, bra) in terms {
        if ket.registers() != regs.as_slice() || bra.registers() != regs.as_slice() {
            return Err(Error::LayoutMismatch("dyads on different register groups".into()));
        }
        let (k, b) = (ket.amplitudes(), bra.amplitudes());
        for r in 0..n {
            if k[r] == zero() {
                continue;
            }
            for c in 0..n {
                entries[r * n + c] += *coef * k[r] * b[c].conj();
            }
        }
    }
    OperatorMatrix::new(regs, dims, entries, kind)
}

/// `|plus⟩⟨plus| − |minus⟩⟨minus|`: eigenvalue +1 on `plus`, −1 on `minus`,
/// 0 on the orthogonal complement.
pub fn indicator_observable<T: Real>(
    layout: &RegisterLayout,
    plus: &LocalKet<T>,
    minus: &LocalKet<T>,
) -> Result<OperatorMatrix<T>> {
    dyad_sum(
        &[(one(), plus, plus), (-one::<T>(), minus, minus)],
        OperatorKind::Hermitian,
        layout,
    )
}

/// Records `|↑⟩|"up"⟩` and `|↓⟩|"down"⟩` of one side's particle-plus-lab pair.
pub fn pointer_records<T: Real>(
    layout: &RegisterLayout,
    side: Side,
) -> Result<(LocalKet<T>, LocalKet<T>)> {
    let (p, lab) = side.registers();
    Ok((
        LocalKet::basis(layout, &[(p, "up"), (lab, "up")])?,
        LocalKet::basis(layout, &[(p, "down"), (lab, "down")])?,
    ))
}

/// Eigenkets `(+1, −1)` of a pointer observable inside the pointer subspace.
pub fn pointer_eigenkets<T: Real>(
    layout: &RegisterLayout,
    side: Side,
    kind: PointerKind,
) -> Result<(LocalKet<T>, LocalKet<T>)> {
    let (up, down) = pointer_records(layout, side)?;
    match kind {
        PointerKind::Z => Ok((up, down)),
        PointerKind::X => {
            let h = re(T::FRAC_1_SQRT_2());
            Ok((
                LocalKet::combine(&[(h, &up), (h, &down)])?,
                LocalKet::combine(&[(h, &up), (-h, &down)])?,
            ))
        }
    }
}

/// Pointer observables on a particle-plus-lab pair, written as the dyads
/// `|↑,up⟩⟨↑,up| − |↓,down⟩⟨↓,down|` (kind z) and
/// `|↑,up⟩⟨↓,down| + |↓,down⟩⟨↑,up|` (kind x). Both vanish off the
/// two-dimensional pointer subspace.
pub fn pointer_observable<T: Real>(
    layout: &RegisterLayout,
    side: Side,
    kind: PointerKind,
) -> Result<OperatorMatrix<T>> {
    let (up, down) = pointer_records(layout, side)?;
    match kind {
        PointerKind::Z => indicator_observable(layout, &up, &down),
        PointerKind::X => dyad_sum(
            &[(one(), &up, &down), (one(), &down, &up)],
            OperatorKind::Hermitian,
            layout,
        ),
    }
}

/// `(fail, OK) = ((o₁ + o₂)/√2, (o₁ − o₂)/√2)` for outcome records `o₁, o₂`.
pub fn okfail_kets<T: Real>(
    outcome1: &LocalKet<T>,
    outcome2: &LocalKet<T>,
) -> Result<(LocalKet<T>, LocalKet<T>)> {
    let h = re(T::FRAC_1_SQRT_2());
    Ok((
        LocalKet::combine(&[(h, outcome1), (h, outcome2)])?,
        LocalKet::combine(&[(h, outcome1), (-h, outcome2)])?,
    ))
}

/// Unitary sending `o₁ → fail`, `o₂ → OK` and acting as identity off
/// `span{o₁, o₂}`. It is its own inverse.
pub fn okfail_transform<T: Real>(
    layout: &RegisterLayout,
    outcome1: &LocalKet<T>,
    outcome2: &LocalKet<T>,
) -> Result<OperatorMatrix<T>> {
    let (fail, ok) = okfail_kets(outcome1, outcome2)?;
    let regs = outcome1.registers().to_vec();
    let dims: Vec<usize> = layout
        .positions(&regs)?
        .iter()
        .map(|&p| layout.registers()[p].dim())
        .collect();
    let rotation = dyad_sum(
        &[
            (one(), &fail, outcome1),
            (one(), &ok, outcome2),
            (-one::<T>(), outcome1, outcome1),
            (-one::<T>(), outcome2, outcome2),
        ],
        OperatorKind::General,
        layout,
    )?;
    let n = rotation.dim();
    let mut entries = rotation.entries().to_vec();
    for i in 0..n {
        entries[i * n + i] += one();
    }
    OperatorMatrix::new(regs, dims, entries, OperatorKind::Unitary)
}

/// Hadamard-type rotation on a two-level register: first basis state to
/// `(|0⟩ + |1⟩)/√2`, second to `(|0⟩ − |1⟩)/√2`.
pub fn hadamard<T: Real>(layout: &RegisterLayout, register: &str) -> Result<OperatorMatrix<T>> {
    let h = re(T::FRAC_1_SQRT_2());
    OperatorMatrix::on_layout(layout, &[register], vec![h, h, h, -h], OperatorKind::Unitary)
}

/// `|name⟩⟨name| ⊗ U + (I − |name⟩⟨name|) ⊗ I` with the control register first.
pub fn controlled<T: Real>(
    layout: &RegisterLayout,
    control: (&str, &str),
    target: &OperatorMatrix<T>,
) -> Result<OperatorMatrix<T>> {
    let (reg, name) = control;
    if target.targets().iter().any(|t| t == reg) {
        return Err(Error::Config("control register is also a target".into()));
    }
    let cd = layout.register(reg)?.dim();
    let ci = layout.basis_index(reg, name)?;
    let td = target.dim();
    let n = cd * td;
    let mut entries = vec![zero(); n * n];
    for k in 0..cd {
        for r in 0..td {
            for c in 0..td {
                let v = if k == ci {
                    target.entry(r, c)
                } else if r == c {
                    one()
                } else {
                    zero()
                };
                entries[(k * td + r) * n + k * td + c] = v;
            }
        }
    }
    let mut targets = vec![reg.to_string()];
    targets.extend(target.targets().iter().cloned());
    let mut dims = vec![cd];
    dims.extend(target.local_dims().iter().copied());
    OperatorMatrix::new(targets, dims, entries, OperatorKind::Unitary)
}

/// A measurement modeled as a unitary interaction: the measured basis is
/// copied into a pointer register that starts in `ready`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementDilation<T: Real> {
    measured: Vec<String>,
    pointer: String,
    basis: Vec<LocalKet<T>>,
    outcome_names: Vec<String>,
}

pub const READY: &str = "ready";

impl<T: Real> MeasurementDilation<T> {
    /// `basis[i]` (orthonormal, on the measured group) is recorded as
    /// pointer state `outcome_names[i]`.
    pub fn new(
        layout: &RegisterLayout,
        pointer: &str,
        basis: Vec<LocalKet<T>>,
        outcome_names: &[&str],
    ) -> Result<Self> {
        let measured = basis
            .first()
            .ok_or_else(|| Error::Config("dilation needs a measured basis".into()))?
            .registers()
            .to_vec();
        if basis.iter().any(|b| b.registers() != measured.as_slice()) {
            return Err(Error::LayoutMismatch("basis vectors on different registers".into()));
        }
        if measured.iter().any(|m| m == pointer) {
            return Err(Error::Config("pointer register is also measured".into()));
        }
        if basis.len() != outcome_names.len() {
            return Err(Error::Config(format!(
                "{} basis vectors but {} outcome names",
                basis.len(),
                outcome_names.len()
            )));
        }
        layout.basis_index(pointer, READY)?;
        for (i, n) in outcome_names.iter().enumerate() {
            layout.basis_index(pointer, n)?;
            if *n == READY || outcome_names[..i].contains(n) {
                return Err(Error::Config(format!("invalid or repeated outcome name {n:?}")));
            }
        }
        let mut worst = 0.0f64;
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { one() } else { zero() };
                worst = worst.max((a.inner(b) - target).norm().as_f64());
            }
        }
        if worst > T::IDENTITY_TOL {
            return Err(Error::NotOrthonormal(worst));
        }
        Ok(Self {
            measured,
            pointer: pointer.to_string(),
            basis,
            outcome_names: outcome_names.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Computational-basis measurement of one register: `(basis name, outcome name)` pairs.
    pub fn computational(
        layout: &RegisterLayout,
        register: &str,
        pointer: &str,
        names: &[(&str, &str)],
    ) -> Result<Self> {
        let basis = names
            .iter()
            .map(|(b, _)| LocalKet::basis(layout, &[(register, b)]))
            .collect::<Result<Vec<_>>>()?;
        let outcomes: Vec<&str> = names.iter().map(|(_, o)| *o).collect();
        Self::new(layout, pointer, basis, &outcomes)
    }

    /// Spin measurement along `angle`, recorded as pointer states "up"/"down".
    pub fn spin(
        layout: &RegisterLayout,
        particle: &str,
        pointer: &str,
        angle: DirectionAngle<T>,
    ) -> Result<Self> {
        let (up, down) = spin_eigenkets(layout, particle, angle)?;
        Self::new(layout, pointer, vec![up, down], &["up", "down"])
    }

    pub fn measured(&self) -> &[String] {
        &self.measured
    }

    pub fn pointer(&self) -> &str {
        &self.pointer
    }

    pub fn basis(&self) -> &[LocalKet<T>] {
        &self.basis
    }

    pub fn outcome_names(&self) -> &[String] {
        &self.outcome_names
    }
}

/// Unitary on `measured ⊗ pointer` acting as `|bᵢ⟩|ready⟩ → |bᵢ⟩|"bᵢ"⟩`.
///
/// On the `bᵢ` sector the pointer is cyclically shifted so that `ready`
/// lands on the outcome name; on the complement of the measured basis the
/// pointer is left alone. The result is block diagonal in the measured basis,
/// so measured populations are unchanged.
pub fn dilation_unitary<T: Real>(
    layout: &RegisterLayout,
    d: &MeasurementDilation<T>,
) -> Result<OperatorMatrix<T>> {
    let m = layout.group_dim(&d.measured)?;
    let preg = layout.register(&d.pointer)?;
    let p = preg.dim();
    let ready = layout.basis_index(&d.pointer, READY)?;
    let shifts: Vec<usize> = d
        .outcome_names
        .iter()
        .map(|n| layout.basis_index(&d.pointer, n).map(|k| (k + p - ready) % p))
        .collect::<Result<_>>()?;

    // Complement projector Q = I − Σ|bᵢ⟩⟨bᵢ|.
    let mut q = vec![zero::<T>(); m * m];
    for i in 0..m {
        q[i * m + i] = one();
    }
    for b in &d.basis {
        let v = b.amplitudes();
        for r in 0..m {
            for c in 0..m {
                q[r * m + c] -= v[r] * v[c].conj();
            }
        }
    }

    let n = m * p;
    let mut entries = vec![zero::<T>(); n * n];
    for a in 0..m {
        for b in 0..m {
            let q_ab = q[a * m + b];
            for y in 0..p {
                entries[(a * p + y) * n + b * p + y] += q_ab;
            }
            for (basis, &shift) in d.basis.iter().zip(&shifts) {
                let v = basis.amplitudes();
                let proj = v[a] * v[b].conj();
                if proj == zero() {
                    continue;
                }
                for y in 0..p {
                    let x = (y + shift) % p;
                    entries[(a * p + x) * n + b * p + y] += proj;
                }
            }
        }
    }
    let mut targets = d.measured.clone();
    targets.push(d.pointer.clone());
    let mut dims: Vec<usize> = layout
        .positions(&d.measured)?
        .iter()
        .map(|&i| layout.registers()[i].dim())
        .collect();
    dims.push(p);
    OperatorMatrix::new(targets, dims, entries, OperatorKind::Unitary)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::qsim::{born_probability, ProjectorSpec, StateVector};

    fn brukner_a() -> Arc<RegisterLayout> {
        Arc::new(
            RegisterLayout::new([
                ("1", vec!["up", "down"]),
                ("X", vec!["ready", "up", "down"]),
            ])
            .unwrap(),
        )
    }

    fn dense(op: &OperatorMatrix<f64>) -> Vec<Vec<C<f64>>> {
        (0..op.dim())
            .map(|r| (0..op.dim()).map(|c| op.entry(r, c)).collect())
            .collect()
    }

    #[test]
    fn spin_observable_conventions() {
        let z = spin_observable::<f64>("q", DirectionAngle::from_radians(0.0).unwrap());
        assert_eq!(dense(&z), vec![vec![re(1.0), re(0.0)], vec![re(0.0), re(-1.0)]]);
        let x = spin_observable::<f64>("q", DirectionAngle::from_degrees(90.0).unwrap());
        assert!((x.entry(0, 1).re - 1.0).abs() < 1e-15 && x.entry(0, 0).re.abs() < 1e-15);
    }

    #[test]
    fn spin_eigenvectors_have_eigenvalues_plus_minus_one() {
        for deg in [0.0, 17.0, 45.0, 90.0, 135.0, 200.0, -33.0] {
            let a = DirectionAngle::<f64>::from_degrees(deg).unwrap();
            let op = spin_observable("q", a);
            let (up, down) = spin_eigenvectors(a);
            for (v, ev) in [(up, 1.0), (down, -1.0)] {
                for r in 0..2 {
                    let img = op.entry(r, 0) * v[0] + op.entry(r, 1) * v[1];
                    assert!((img - v[r] * ev).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn direction_reduction() {
        let a = DirectionAngle::<f64>::from_degrees(-90.0).unwrap();
        assert!((a.reduced() - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert!(DirectionAngle::<f64>::from_radians(f64::NAN).is_err());
    }

    #[test]
    fn pointer_x_squares_to_identity_on_pointer_subspace() {
        let l = brukner_a();
        let ax = pointer_observable::<f64>(&l, Side::A, PointerKind::X).unwrap();
        let sq = ax.compose(&ax).unwrap();
        // Pointer subspace indices: |up,up⟩ = 1, |down,down⟩ = 5.
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j && (i == 1 || i == 5) { 1.0 } else { 0.0 };
                assert!((sq.entry(i, j) - re(expect)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pointer_z_eigenvalue_on_up_record() {
        let l = brukner_a();
        let az = pointer_observable::<f64>(&l, Side::A, PointerKind::Z).unwrap();
        let s = StateVector::basis_state(l, &[("1", "up"), ("X", "up")]).unwrap();
        let img = s.act(&az).unwrap();
        assert_eq!(img, s.amplitudes().to_vec());
    }

    #[test]
    fn okfail_transform_is_self_inverse_and_maps_heads() {
        let l = Arc::new(
            RegisterLayout::new([("c", vec!["heads", "tails"]), ("Xm", vec!["ready", "heads", "tails"])])
                .unwrap(),
        );
        let h = LocalKet::<f64>::basis(&l, &[("c", "heads"), ("Xm", "heads")]).unwrap();
        let t = LocalKet::basis(&l, &[("c", "tails"), ("Xm", "tails")]).unwrap();
        let tr = okfail_transform(&l, &h, &t).unwrap();
        let id = OperatorMatrix::identity(tr.targets().to_vec(), tr.local_dims().to_vec());
        assert!(tr.compose(&tr).unwrap().max_difference(&id).unwrap() < 1e-15);
        // heads = (fail + OK)/√2
        let (fail, ok) = okfail_kets(&h, &t).unwrap();
        let r = FRAC_1_SQRT_2;
        let recon = LocalKet::combine(&[(re(r), &fail), (re(r), &ok)]).unwrap();
        for (a, b) in recon.amplitudes().iter().zip(h.amplitudes()) {
            assert!((*a - *b).norm() < 1e-15);
        }
    }

    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn z_dilation_builds_the_entangled_record() {
        let l = brukner_a();
        let d = MeasurementDilation::computational(&l, "1", "X", &[("up", "up"), ("down", "down")])
            .unwrap();
        let u = dilation_unitary(&l, &d).unwrap();
        assert!(u.unitarity_defect() < 1e-15);
        let up = StateVector::<f64>::basis_state(l.clone(), &[("1", "up"), ("X", "ready")]).unwrap();
        let down = StateVector::basis_state(l.clone(), &[("1", "down"), ("X", "ready")]).unwrap();
        let x = StateVector::superpose(&[(re(FRAC_1_SQRT_2), &up), (re(FRAC_1_SQRT_2), &down)])
            .unwrap();
        let phi = x.evolve(&u).unwrap();
        let a = phi.amplitude(&[("1", "up"), ("X", "up")]).unwrap();
        let b = phi.amplitude(&[("1", "down"), ("X", "down")]).unwrap();
        assert!((a.re - FRAC_1_SQRT_2).abs() < 1e-15 && (b.re - FRAC_1_SQRT_2).abs() < 1e-15);
        // Undo returns the ready sector.
        let back = phi.evolve(&u.dagger()).unwrap();
        assert!((back.fidelity(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dilation_rejects_bad_bases() {
        let l = brukner_a();
        let up = LocalKet::<f64>::basis(&l, &[("1", "up")]).unwrap();
        assert!(matches!(
            MeasurementDilation::new(&l, "X", vec![up.clone(), up.clone()], &["up", "down"]),
            Err(Error::NotOrthonormal(_))
        ));
        assert!(MeasurementDilation::new(&l, "X", vec![up.clone()], &["ready"]).is_err());
        assert!(MeasurementDilation::new(&l, "X", vec![up], &["sideways"]).is_err());
    }

    #[test]
    fn controlled_rotation_prepares_conditional_states() {
        let l = Arc::new(
            RegisterLayout::new([("Xm", vec!["ready", "heads", "tails"]), ("s", vec!["down", "up"])])
                .unwrap(),
        );
        let cu = controlled(&l, ("Xm", "tails"), &hadamard::<f64>(&l, "s").unwrap()).unwrap();
        let t = StateVector::basis_state(l.clone(), &[("Xm", "tails"), ("s", "down")]).unwrap();
        let out = t.evolve(&cu).unwrap();
        let p_up = born_probability(&out, &ProjectorSpec::basis("s", &["up"])).unwrap();
        assert!((p_up - 0.5).abs() < 1e-15);
        let h = StateVector::basis_state(l, &[("Xm", "heads"), ("s", "down")]).unwrap();
        assert_eq!(h.evolve(&cu).unwrap(), h);
    }
}
