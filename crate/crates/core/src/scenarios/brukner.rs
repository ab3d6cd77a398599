//! Zeus/Xena preliminary run and the two-lab extension with its CHSH test.
//!
//! Pooled contexts map onto the four-variable cycle as `a = A_x`, `b = B_x`,
//! `c = A_z`, `d = B_z`, so `ab = ⟨A_xB_x⟩`, `bc = ⟨A_zB_x⟩`, `cd = ⟨A_zB_z⟩`,
//! `ad = ⟨A_xB_z⟩`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{assemble, require_match};
use crate::bell::{chsh_all, fine_joint_exists, CorrelationSet, FeasibilityResult, PairLabel};
use crate::error::{Error, Result};
use crate::observables::{
    dilation_unitary, pointer_eigenkets, pointer_observable, pointer_records, MeasurementDilation,
    PointerKind, Side,
};
use crate::qsim::{
    born_probability, conditional_probability, LocalKet, ProjectorSpec, RegisterLayout,
    StateVector,
};
use crate::report::{Check, MapBuilder, ScenarioReport, Value};
use crate::scalar::re;

const EXACT: f64 = 1e-12;
const COMPOSED: f64 = 1e-9;

fn preliminary_layout() -> Arc<RegisterLayout> {
    Arc::new(
        RegisterLayout::new([
            ("1", vec!["up", "down"]),
            ("X", vec!["ready", "up", "down"]),
            ("Zx", vec!["ready", "+1", "-1"]),
            ("Zz", vec!["ready", "+1", "-1"]),
        ])
        .expect("static layout"),
    )
}

/// Registers `1, X, 2, Y`: two spins and their friends' labs.
pub fn extended_layout() -> Arc<RegisterLayout> {
    Arc::new(
        RegisterLayout::new([
            ("1", vec!["up", "down"]),
            ("X", vec!["ready", "up", "down"]),
            ("2", vec!["up", "down"]),
            ("Y", vec!["ready", "up", "down"]),
        ])
        .expect("static layout"),
    )
}

fn z_dilation(layout: &RegisterLayout, particle: &str, lab: &str) -> Result<MeasurementDilation<f64>> {
    MeasurementDilation::computational(layout, particle, lab, &[("up", "up"), ("down", "down")])
}

fn pointer_projector(layout: &RegisterLayout, side: Side, kind: PointerKind, plus: bool) -> Result<ProjectorSpec<f64>> {
    let (p, m) = pointer_eigenkets(layout, side, kind)?;
    let label = format!("{}{}", if side == Side::A { "A" } else { "B" }, kind_name(kind));
    ProjectorSpec::span(&label, vec![if plus { p } else { m }])
}

fn kind_name(kind: PointerKind) -> &'static str {
    match kind {
        PointerKind::Z => "z",
        PointerKind::X => "x",
    }
}

/// `|Φ⟩₁X = (|↑⟩|up⟩ + |↓⟩|down⟩)/√2`, produced by Xena's z-measurement dilation.
fn phi_state(layout: &Arc<RegisterLayout>) -> Result<StateVector<f64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let up = LocalKet::basis(layout, &[("1", "up")])?;
    let down = LocalKet::basis(layout, &[("1", "down")])?;
    let x = LocalKet::combine(&[(re(h), &up), (re(h), &down)])?;
    let start = StateVector::product(layout.clone(), &[&x])?;
    let built = start.evolve(&dilation_unitary(layout, &z_dilation(layout, "1", "X")?)?)?;
    let (rec_up, rec_down) = pointer_records(layout, Side::A)?;
    let reference = assemble(layout, &[(h, vec![&rec_up]), (h, vec![&rec_down])])?;
    require_match("Φ₁X", &built, &reference)?;
    Ok(built)
}

/// Preliminary run: Zeus measures `A_x` (non-disturbing) and then `A_z`.
pub fn brukner_preliminary_run() -> Result<ScenarioReport> {
    let layout = preliminary_layout();
    let l = layout.as_ref();
    let phi = phi_state(&layout)?;

    let p_ax_plus = born_probability(&phi, &pointer_projector(l, Side::A, PointerKind::X, true)?)?;
    let p_ax_minus = born_probability(&phi, &pointer_projector(l, Side::A, PointerKind::X, false)?)?;

    let (xp, xm) = pointer_eigenkets(l, Side::A, PointerKind::X)?;
    let ax = MeasurementDilation::new(l, "Zx", vec![xp, xm], &["+1", "-1"])?;
    let after_ax = phi.evolve(&dilation_unitary(l, &ax)?)?;
    let phi_with_pointer = {
        let mut amps = vec![re(0.0); l.dim()];
        let shift = l.basis_index("Zx", "+1")? * l.stride(l.position("Zx")?);
        for (i, a) in phi.amplitudes().iter().enumerate() {
            if *a != re(0.0) {
                amps[i + shift] = *a;
            }
        }
        StateVector::from_amplitudes(layout.clone(), amps)?
    };
    let nondisturbance = after_ax.fidelity(&phi_with_pointer)?;

    let (zp, zm) = pointer_eigenkets(l, Side::A, PointerKind::Z)?;
    let az = MeasurementDilation::new(l, "Zz", vec![zp, zm], &["+1", "-1"])?;
    let after_az = after_ax.evolve(&dilation_unitary(l, &az)?)?;
    let zz_plus = ProjectorSpec::basis("Zz", &["+1"]);
    let zz_minus = ProjectorSpec::basis("Zz", &["-1"]);
    let p_az_plus = born_probability(&after_az, &zz_plus)?;
    let p_az_minus = born_probability(&after_az, &zz_minus)?;
    let x_up = ProjectorSpec::basis("X", &["up"]);
    let x_down = ProjectorSpec::basis("X", &["down"]);
    let agreement = born_probability(&after_az, &zz_plus.clone().and(&x_up))?
        + born_probability(&after_az, &zz_minus.clone().and(&x_down))?;
    let up_given_plus = conditional_probability(&after_az, &zz_plus, &x_up)?;
    let down_given_minus = conditional_probability(&after_az, &zz_minus, &x_down)?;
    // Zeus's x-record is untouched by the later z-measurement.
    let zx_plus_final = born_probability(&after_az, &ProjectorSpec::basis("Zx", &["+1"]))?;

    let mut r = ScenarioReport::new("brukner-preliminary");
    r.result("p_ax_plus", p_ax_plus)
        .result("p_ax_minus", p_ax_minus)
        .result("nondisturbance_fidelity", nondisturbance)
        .result("p_az_plus", p_az_plus)
        .result("p_az_minus", p_az_minus)
        .result("record_agreement", agreement)
        .result("p_xena_up_given_az_plus", up_given_plus)
        .result("p_xena_down_given_az_minus", down_given_minus)
        .result("p_ax_record_plus_after_az", zx_plus_final);
    r.check(Check::close("p_ax_plus", 1.0, p_ax_plus, EXACT))
        .check(Check::close("nondisturbance_fidelity", 1.0, nondisturbance, EXACT))
        .check(Check::close("p_az_plus", 0.5, p_az_plus, EXACT))
        .check(Check::close("p_az_minus", 0.5, p_az_minus, EXACT))
        .check(Check::close("record_agreement", 1.0, agreement, EXACT))
        .check(Check::close("p_xena_up_given_az_plus", 1.0, up_given_plus, EXACT))
        .check(Check::close("p_xena_down_given_az_minus", 1.0, down_given_minus, EXACT));
    Ok(r)
}

/// `−sin(θ/2)|φ⁺⟩ + cos(θ/2)|ψ⁻⟩` on the spins, labs ready.
pub fn initial_pair_state(theta: f64) -> Result<StateVector<f64>> {
    let layout = extended_layout();
    let k = |a: &str, b: &str| LocalKet::basis(&layout, &[("1", a), ("2", b)]);
    let (uu, ud, du, dd) = (k("up", "up")?, k("up", "down")?, k("down", "up")?, k("down", "down")?);
    let (s, c) = (theta / 2.0).sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assemble(
        &layout,
        &[(-s * h, vec![&uu]), (-s * h, vec![&dd]), (c * h, vec![&ud]), (-c * h, vec![&du])],
    )
}

/// The joint state of `1X2Y` after both friends' z-measurements, built by
/// dilation and checked against `−sin(θ/2)|Φ⁺⟩ + cos(θ/2)|Ψ⁻⟩`.
pub fn brukner_extended_state(theta: f64) -> Result<StateVector<f64>> {
    if !theta.is_finite() {
        return Err(Error::Config(format!("theta = {theta} is not finite")));
    }
    let layout = extended_layout();
    let l = layout.as_ref();
    let built = initial_pair_state(theta)?
        .evolve(&dilation_unitary(l, &z_dilation(l, "1", "X")?)?)?
        .evolve(&dilation_unitary(l, &z_dilation(l, "2", "Y")?)?)?;
    let (au, ad) = pointer_records(l, Side::A)?;
    let (bu, bd) = pointer_records(l, Side::B)?;
    let (s, c) = (theta / 2.0).sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let reference = assemble(
        &layout,
        &[
            (-s * h, vec![&au, &bu]),
            (-s * h, vec![&ad, &bd]),
            (c * h, vec![&au, &bd]),
            (-c * h, vec![&ad, &bu]),
        ],
    )?;
    require_match("Ψ₁₂XY", &built, &reference)?;
    Ok(built)
}

/// Sign placements in `⟨A_zB_z⟩ ± ⟨A_zB_x⟩ ± ⟨A_xB_z⟩ ± ⟨A_xB_x⟩` with one minus.
/// `Literal` carries the minus on `⟨A_xB_x⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BruknerVariant {
    Literal,
    MinusAxBz,
    MinusAzBx,
    MinusAzBz,
}

impl BruknerVariant {
    pub const ALL: [BruknerVariant; 4] = [
        BruknerVariant::Literal,
        BruknerVariant::MinusAxBz,
        BruknerVariant::MinusAzBx,
        BruknerVariant::MinusAzBz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BruknerVariant::Literal => "literal",
            BruknerVariant::MinusAxBz => "minus-axbz",
            BruknerVariant::MinusAzBx => "minus-azbx",
            BruknerVariant::MinusAzBz => "minus-azbz",
        }
    }

    /// Signs on `(zz, zx, xz, xx)`.
    fn signs(self) -> [f64; 4] {
        match self {
            BruknerVariant::Literal => [1.0, 1.0, 1.0, -1.0],
            BruknerVariant::MinusAxBz => [1.0, 1.0, -1.0, 1.0],
            BruknerVariant::MinusAzBx => [1.0, -1.0, 1.0, 1.0],
            BruknerVariant::MinusAzBz => [-1.0, 1.0, 1.0, 1.0],
        }
    }
}

impl fmt::Display for BruknerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BruknerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BruknerVariant::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown CHSH variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruknerChsh {
    pub theta: f64,
    /// `⟨A_zB_z⟩`
    pub zz: f64,
    /// `⟨A_zB_x⟩`
    pub zx: f64,
    /// `⟨A_xB_z⟩`
    pub xz: f64,
    /// `⟨A_xB_x⟩`
    pub xx: f64,
}

impl BruknerChsh {
    pub fn value(&self, variant: BruknerVariant) -> f64 {
        let v = [self.zz, self.zx, self.xz, self.xx];
        variant.signs().iter().zip(v).map(|(s, x)| s * x).sum()
    }

    pub fn all(&self) -> [(BruknerVariant, f64); 4] {
        BruknerVariant::ALL.map(|v| (v, self.value(v)))
    }
}

fn product_expectation(state: &StateVector<f64>, a: PointerKind, b: PointerKind) -> Result<f64> {
    let l = state.layout();
    let op = pointer_observable(l, Side::A, a)?.tensor(&pointer_observable(l, Side::B, b)?)?;
    Ok(state.expectation(&op)?.re)
}

/// The four product expectations on the extended state.
pub fn brukner_chsh(theta: f64) -> Result<BruknerChsh> {
    let s = brukner_extended_state(theta)?;
    use PointerKind::{X, Z};
    Ok(BruknerChsh {
        theta,
        zz: product_expectation(&s, Z, Z)?,
        zx: product_expectation(&s, Z, X)?,
        xz: product_expectation(&s, X, Z)?,
        xx: product_expectation(&s, X, X)?,
    })
}

/// Born distribution over one context's four joint outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    pub a: PointerKind,
    pub b: PointerKind,
    /// `joint[i][j]`: A outcome `+1` (i = 0) or `−1`, B likewise.
    pub joint: [[f64; 2]; 2],
    /// For z-sides: probabilities of the friend's own record `up`/`down`,
    /// which the identification `A_z⁺ ⟺ Xena saw up` makes equal to the
    /// pointer marginals.
    pub friend_records: Vec<(String, [f64; 2])>,
}

impl ContextTable {
    pub fn total(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }

    pub fn correlation(&self) -> f64 {
        self.joint[0][0] + self.joint[1][1] - self.joint[0][1] - self.joint[1][0]
    }

    pub fn marginal_a(&self) -> [f64; 2] {
        [self.joint[0][0] + self.joint[0][1], self.joint[1][0] + self.joint[1][1]]
    }

    pub fn marginal_b(&self) -> [f64; 2] {
        [self.joint[0][0] + self.joint[1][0], self.joint[0][1] + self.joint[1][1]]
    }
}

fn context_on(state: &StateVector<f64>, a: PointerKind, b: PointerKind) -> Result<ContextTable> {
    let l = state.layout();
    let mut joint = [[0.0; 2]; 2];
    for (i, ap) in [true, false].into_iter().enumerate() {
        for (j, bp) in [true, false].into_iter().enumerate() {
            let p = pointer_projector(l, Side::A, a, ap)?.and(&pointer_projector(l, Side::B, b, bp)?);
            joint[i][j] = born_probability(state, &p)?;
        }
    }
    let mut friend_records = Vec::new();
    for (kind, lab) in [(a, "X"), (b, "Y")] {
        if kind == PointerKind::Z {
            friend_records.push((
                lab.to_string(),
                [
                    born_probability(state, &ProjectorSpec::basis(lab, &["up"]))?,
                    born_probability(state, &ProjectorSpec::basis(lab, &["down"]))?,
                ],
            ));
        }
    }
    Ok(ContextTable { a, b, joint, friend_records })
}

/// Born probabilities within one measurement context `(A-choice, B-choice)`.
pub fn brukner_context_measure(theta: f64, a: PointerKind, b: PointerKind) -> Result<ContextTable> {
    context_on(&brukner_extended_state(theta)?, a, b)
}

/// Correlations of all four contexts pooled into one set (see module docs
/// for the variable assignment).
pub fn pooled_correlations(theta: f64) -> Result<CorrelationSet> {
    use PointerKind::{X, Z};
    let s = brukner_extended_state(theta)?;
    let corr = |a, b| context_on(&s, a, b).map(|t| t.correlation().clamp(-1.0, 1.0));
    let mut set = CorrelationSet::default();
    set.insert(PairLabel::AB, corr(X, X)?)?;
    set.insert(PairLabel::BC, corr(Z, X)?)?;
    set.insert(PairLabel::CD, corr(Z, Z)?)?;
    set.insert(PairLabel::AD, corr(X, Z)?)?;
    Ok(set)
}

pub fn pooled_feasibility(theta: f64) -> Result<FeasibilityResult> {
    fine_joint_exists(&pooled_correlations(theta)?)
}

/// Extended-scenario report at `theta`, with the chosen variant highlighted.
pub fn brukner_extended_report(theta: f64, variant: BruknerVariant) -> Result<ScenarioReport> {
    let chsh = brukner_chsh(theta)?;
    let state = brukner_extended_state(theta)?;
    let mut r = ScenarioReport::new("brukner-extended");
    r.parameter("theta", theta).parameter("variant", variant.name());
    r.result(
        "correlations",
        MapBuilder::new()
            .with("azbz", chsh.zz)
            .with("azbx", chsh.zx)
            .with("axbz", chsh.xz)
            .with("axbx", chsh.xx)
            .build(),
    );
    let mut variants = MapBuilder::new();
    for (v, s) in chsh.all() {
        variants.push(v.name(), s);
    }
    r.result("chsh_variants", variants.build())
        .result("chsh_selected", chsh.value(variant))
        .result("literal_variant", BruknerVariant::Literal.name());

    use PointerKind::{X, Z};
    let mut contexts = Vec::new();
    for (a, b) in [(Z, Z), (Z, X), (X, Z), (X, X)] {
        let t = context_on(&state, a, b)?;
        let name = format!("A{}B{}", kind_name(a), kind_name(b));
        r.check(Check::close(format!("context_{name}_total"), 1.0, t.total(), EXACT));
        for (lab, rec) in &t.friend_records {
            let pointer = if lab == "X" { t.marginal_a() } else { t.marginal_b() };
            r.check(Check::close(
                format!("context_{name}_{lab}_record_identification"),
                pointer[0],
                rec[0],
                EXACT,
            ));
        }
        contexts.push(
            MapBuilder::new()
                .with("context", name)
                .with("p_pp", t.joint[0][0])
                .with("p_pm", t.joint[0][1])
                .with("p_mp", t.joint[1][0])
                .with("p_mm", t.joint[1][1])
                .with("correlation", t.correlation())
                .build(),
        );
    }
    r.result("contexts", Value::List(contexts));

    let pooled = pooled_correlations(theta)?;
    let feas = fine_joint_exists(&pooled)?;
    let worst = chsh_all(&pooled)?.worst;
    r.result(
        "pooled_feasibility",
        MapBuilder::new()
            .with("feasible", feas.feasible)
            .with("worst_inequality", worst.id())
            .with("worst_value", worst.value)
            .with("marginals", "unconstrained")
            .build(),
    );

    let closed_form = -2.0 * (theta.cos() + theta.sin());
    r.check(Check::close("literal_variant_vanishes", 0.0, chsh.value(BruknerVariant::Literal), EXACT))
        .check(Check::close(
            "minus_axbz_closed_form",
            closed_form,
            chsh.value(BruknerVariant::MinusAxBz),
            COMPOSED,
        ))
        .check(Check::flag(
            "pooled_feasibility_matches_chsh",
            worst.value <= 2.0 + 1e-9,
            feas.feasible,
        ));
    Ok(r)
}
