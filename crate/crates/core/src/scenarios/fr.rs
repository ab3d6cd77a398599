//! Four-agent coin/spin timeline with Zeus's optional measurement at t = 3.
//!
//! Registers, in order: coin `c`, Xena's lab `Xm`, the spin `s`, Yvonne's lab
//! `Ym`, and the pointers `Z` (Zeus) and `W` (Wigner). `X` means the pair
//! `(c, Xm)` and `Y` the pair `(s, Ym)`; their records `heads_X`, `−1/2_Y`, …
//! are product vectors on those pairs.
//!
//! Timeline, one unitary per step (the state "at t" includes step t):
//!
//! | t | step |
//! |---|------|
//! | 0 | Xena records the coin into `Xm` |
//! | 1 | if `Xm = tails`, `s` is rotated from `↓` to `→ = (↓ + ↑)/√2` |
//! | 2 | Yvonne records `S_z` of `s` into `Ym` |
//! | 3 | Zeus records `X` in the fail/OK basis into `Z` (optional) |
//! | 4 | Wigner records `Y` in the fail/OK basis into `W` |
//! | 5 | Wigner reads Zeus's record; no change to the state |
//!
//! Counterfactuals "if A had been the case, B would have been" are read as
//! conditional probabilities `P(B | A)` on a stated state; "with certainty"
//! means the conditional is 1 (and the excluded alternative 0) within 1e-12.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{assemble, require_match};
use crate::error::{Error, Result};
use crate::observables::{
    controlled, dilation_unitary, hadamard, indicator_observable, okfail_kets, okfail_transform,
    MeasurementDilation,
};
use crate::qsim::{
    born_probability, conditional_probability, project_collapse, LocalKet, OperatorMatrix,
    ProjectorSpec, RegisterLayout, StateVector,
};
use crate::report::{Check, MapBuilder, ScenarioReport, Value};
use crate::scalar::re;

const EXACT: f64 = 1e-12;
pub const LAST_TIME: u32 = 5;

/// Which history to build and when to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FRTimeline {
    pub zeus_intervenes: bool,
    pub query_time: u32,
}

impl FRTimeline {
    pub fn new(zeus_intervenes: bool, query_time: u32) -> Result<Self> {
        if query_time > LAST_TIME {
            return Err(Error::InvalidTime(query_time));
        }
        Ok(Self { zeus_intervenes, query_time })
    }
}

pub fn fr_layout() -> Arc<RegisterLayout> {
    Arc::new(
        RegisterLayout::new([
            ("c", vec!["heads", "tails"]),
            ("Xm", vec!["ready", "heads", "tails"]),
            ("s", vec!["down", "up"]),
            ("Ym", vec!["ready", "-1/2", "+1/2"]),
            ("Z", vec!["ready", "fail", "OK"]),
            ("W", vec!["ready", "fail", "OK"]),
        ])
        .expect("static layout"),
    )
}

/// Record vectors on `X = (c, Xm)` and `Y = (s, Ym)`.
#[derive(Debug, Clone)]
pub struct FrKets {
    pub heads_x: LocalKet<f64>,
    pub tails_x: LocalKet<f64>,
    pub fail_x: LocalKet<f64>,
    pub ok_x: LocalKet<f64>,
    pub minus_y: LocalKet<f64>,
    pub plus_y: LocalKet<f64>,
    pub fail_y: LocalKet<f64>,
    pub ok_y: LocalKet<f64>,
}

impl FrKets {
    pub fn new(layout: &RegisterLayout) -> Result<Self> {
        let heads_x = LocalKet::basis(layout, &[("c", "heads"), ("Xm", "heads")])?;
        let tails_x = LocalKet::basis(layout, &[("c", "tails"), ("Xm", "tails")])?;
        let minus_y = LocalKet::basis(layout, &[("s", "down"), ("Ym", "-1/2")])?;
        let plus_y = LocalKet::basis(layout, &[("s", "up"), ("Ym", "+1/2")])?;
        let (fail_x, ok_x) = okfail_kets(&heads_x, &tails_x)?;
        let (fail_y, ok_y) = okfail_kets(&minus_y, &plus_y)?;
        Ok(Self { heads_x, tails_x, fail_x, ok_x, minus_y, plus_y, fail_y, ok_y })
    }

    fn span(label: &str, k: &LocalKet<f64>) -> ProjectorSpec<f64> {
        ProjectorSpec::span(label, vec![k.clone()]).expect("unit record vector")
    }

    pub fn heads(&self) -> ProjectorSpec<f64> {
        Self::span("heads_X", &self.heads_x)
    }

    pub fn tails(&self) -> ProjectorSpec<f64> {
        Self::span("tails_X", &self.tails_x)
    }

    pub fn coin(&self, c: Coin) -> ProjectorSpec<f64> {
        match c {
            Coin::Heads => self.heads(),
            Coin::Tails => self.tails(),
        }
    }

    pub fn fail_x(&self) -> ProjectorSpec<f64> {
        Self::span("fail_X", &self.fail_x)
    }

    pub fn ok_x(&self) -> ProjectorSpec<f64> {
        Self::span("OK_X", &self.ok_x)
    }

    pub fn minus_y(&self) -> ProjectorSpec<f64> {
        Self::span("-1/2_Y", &self.minus_y)
    }

    pub fn plus_y(&self) -> ProjectorSpec<f64> {
        Self::span("+1/2_Y", &self.plus_y)
    }

    pub fn fail_y(&self) -> ProjectorSpec<f64> {
        Self::span("fail_Y", &self.fail_y)
    }

    pub fn ok_y(&self) -> ProjectorSpec<f64> {
        Self::span("OK_Y", &self.ok_y)
    }
}

/// The unitary applied at time `t` (`None` when nothing happens).
fn step_unitary(layout: &RegisterLayout, kets: &FrKets, t: u32, zeus: bool) -> Result<Option<OperatorMatrix<f64>>> {
    let op = match t {
        0 => dilation_unitary(
            layout,
            &MeasurementDilation::computational(layout, "c", "Xm", &[("heads", "heads"), ("tails", "tails")])?,
        )?,
        1 => controlled(layout, ("Xm", "tails"), &hadamard(layout, "s")?)?,
        2 => dilation_unitary(
            layout,
            &MeasurementDilation::computational(layout, "s", "Ym", &[("down", "-1/2"), ("up", "+1/2")])?,
        )?,
        3 if zeus => dilation_unitary(
            layout,
            &MeasurementDilation::new(layout, "Z", vec![kets.fail_x.clone(), kets.ok_x.clone()], &["fail", "OK"])?,
        )?,
        4 => dilation_unitary(
            layout,
            &MeasurementDilation::new(layout, "W", vec![kets.fail_y.clone(), kets.ok_y.clone()], &["fail", "OK"])?,
        )?,
        _ => return Ok(None),
    };
    Ok(Some(op))
}

/// Coin `(1/√3)|heads⟩ + √(2/3)|tails⟩`, `s = ↓`, every lab ready.
pub fn fr_initial_state() -> Result<StateVector<f64>> {
    let layout = fr_layout();
    let h = LocalKet::basis(&layout, &[("c", "heads")])?;
    let t = LocalKet::basis(&layout, &[("c", "tails")])?;
    let coin = LocalKet::combine(&[(re(1.0 / 3f64.sqrt()), &h), (re((2.0f64 / 3.0).sqrt()), &t)])?;
    StateVector::product(layout, &[&coin])
}

/// Applies steps `from..=to`.
fn evolve_steps(state: StateVector<f64>, from: u32, to: u32, zeus: bool) -> Result<StateVector<f64>> {
    let layout = state.shared_layout();
    let kets = FrKets::new(&layout)?;
    let mut s = state;
    for t in from..=to {
        if let Some(u) = step_unitary(&layout, &kets, t, zeus)? {
            s = s.evolve(&u)?;
        }
    }
    Ok(s)
}

/// Closed forms of the states at `t` (empty where none is written down).
pub fn fr_closed_forms(zeus: bool, t: u32) -> Result<Vec<(&'static str, StateVector<f64>)>> {
    let layout = fr_layout();
    let l = &layout;
    let k = FrKets::new(l)?;
    let z = |n: &str| LocalKet::basis(l, &[("Z", n)]);
    let w = |n: &str| LocalKet::basis(l, &[("W", n)]);
    let (zf, zo, wf, wo) = (z("fail")?, z("OK")?, w("fail")?, w("OK")?);
    let r3 = 1.0 / 3f64.sqrt();
    let r2 = std::f64::consts::SQRT_2;
    let mut out = Vec::new();
    match t {
        0 => {
            out.push(("coin record", assemble(l, &[(r3, vec![&k.heads_x]), (r2 * r3, vec![&k.tails_x])])?));
        }
        2 => {
            out.push((
                "t=2 heads/tails branches",
                assemble(
                    l,
                    &[
                        (r3, vec![&k.heads_x, &k.minus_y]),
                        (r3, vec![&k.tails_x, &k.minus_y]),
                        (r3, vec![&k.tails_x, &k.plus_y]),
                    ],
                )?,
            ));
            out.push((
                "t=2 fail_X form",
                assemble(l, &[(r2 * r3, vec![&k.fail_x, &k.minus_y]), (r3, vec![&k.tails_x, &k.plus_y])])?,
            ));
            out.push((
                "t=2 fail_Y form",
                assemble(l, &[(r3, vec![&k.heads_x, &k.minus_y]), (r2 * r3, vec![&k.tails_x, &k.fail_y])])?,
            ));
            let q = r3 / 2.0;
            out.push((
                "t=2 fail/OK form",
                assemble(
                    l,
                    &[
                        (3.0 * q, vec![&k.fail_x, &k.fail_y]),
                        (q, vec![&k.fail_x, &k.ok_y]),
                        (-q, vec![&k.ok_x, &k.fail_y]),
                        (q, vec![&k.ok_x, &k.ok_y]),
                    ],
                )?,
            ));
        }
        3 if zeus => {
            out.push((
                "t=3 (fail/OK form)",
                assemble(
                    l,
                    &[
                        (r2 * r3, vec![&k.fail_x, &zf, &k.minus_y]),
                        (r3 / r2, vec![&k.fail_x, &zf, &k.plus_y]),
                        (-r3 / r2, vec![&k.ok_x, &zo, &k.plus_y]),
                    ],
                )?,
            ));
            let e = 1.0 / 24f64.sqrt();
            out.push((
                "t=3 (heads/tails form)",
                assemble(
                    l,
                    &[
                        (3.0 * e, vec![&k.heads_x, &k.fail_y, &zf]),
                        (e, vec![&k.heads_x, &k.ok_y, &zf]),
                        (e, vec![&k.heads_x, &k.ok_y, &zo]),
                        (-e, vec![&k.heads_x, &k.fail_y, &zo]),
                        (3.0 * e, vec![&k.tails_x, &k.fail_y, &zf]),
                        (e, vec![&k.tails_x, &k.ok_y, &zf]),
                        (-e, vec![&k.tails_x, &k.ok_y, &zo]),
                        (e, vec![&k.tails_x, &k.fail_y, &zo]),
                    ],
                )?,
            ));
        }
        4 | 5 if zeus => {
            // Same branches as t = 3, with Wigner's record attached to Y.
            let e = 1.0 / 24f64.sqrt();
            out.push((
                "XYZ at t=4",
                assemble(
                    l,
                    &[
                        (3.0 * e, vec![&k.heads_x, &k.fail_y, &wf, &zf]),
                        (e, vec![&k.heads_x, &k.ok_y, &wo, &zf]),
                        (e, vec![&k.heads_x, &k.ok_y, &wo, &zo]),
                        (-e, vec![&k.heads_x, &k.fail_y, &wf, &zo]),
                        (3.0 * e, vec![&k.tails_x, &k.fail_y, &wf, &zf]),
                        (e, vec![&k.tails_x, &k.ok_y, &wo, &zf]),
                        (-e, vec![&k.tails_x, &k.ok_y, &wo, &zo]),
                        (e, vec![&k.tails_x, &k.fail_y, &wf, &zo]),
                    ],
                )?,
            ));
        }
        4 | 5 => {
            // heads·(−1/2)_Y = heads·(fail_Y + OK_Y)/√2, each with its W record.
            out.push((
                "XY at t=4 without Zeus",
                assemble(
                    l,
                    &[
                        (r3 / r2, vec![&k.heads_x, &k.fail_y, &wf]),
                        (r3 / r2, vec![&k.heads_x, &k.ok_y, &wo]),
                        (r2 * r3, vec![&k.tails_x, &k.fail_y, &wf]),
                    ],
                )?,
            ));
        }
        _ => {}
    }
    Ok(out)
}

/// State at `tl.query_time`, built by composing the step unitaries and
/// cross-checked against every closed form for that time.
pub fn fr_state_at(tl: FRTimeline) -> Result<StateVector<f64>> {
    let tl = FRTimeline::new(tl.zeus_intervenes, tl.query_time)?;
    let s = evolve_steps(fr_initial_state()?, 0, tl.query_time, tl.zeus_intervenes)?;
    for (name, reference) in fr_closed_forms(tl.zeus_intervenes, tl.query_time)? {
        require_match(name, &s, &reference)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coin {
    Heads,
    Tails,
}

impl Coin {
    pub const ALL: [Coin; 2] = [Coin::Heads, Coin::Tails];

    pub fn name(self) -> &'static str {
        match self {
            Coin::Heads => "heads",
            Coin::Tails => "tails",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pointer {
    Z,
    W,
}

impl Pointer {
    fn register(self) -> &'static str {
        match self {
            Pointer::Z => "Z",
            Pointer::W => "W",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Pointer::Z => "z",
            Pointer::W => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrOutcome {
    Fail,
    Ok,
}

impl FrOutcome {
    pub fn name(self) -> &'static str {
        match self {
            FrOutcome::Fail => "fail",
            FrOutcome::Ok => "OK",
        }
    }

    fn other(self) -> Self {
        match self {
            FrOutcome::Fail => FrOutcome::Ok,
            FrOutcome::Ok => FrOutcome::Fail,
        }
    }
}

/// Observed pointer values, e.g. `z=OK,w=OK`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrObservation {
    pub z: Option<FrOutcome>,
    pub w: Option<FrOutcome>,
}

impl FrObservation {
    pub fn ok_ok() -> Self {
        Self { z: Some(FrOutcome::Ok), w: Some(FrOutcome::Ok) }
    }

    fn entries(&self) -> Vec<(Pointer, FrOutcome)> {
        [(Pointer::Z, self.z), (Pointer::W, self.w)]
            .into_iter()
            .filter_map(|(p, o)| o.map(|o| (p, o)))
            .collect()
    }

    pub fn projector(&self) -> ProjectorSpec<f64> {
        self.entries().into_iter().fold(ProjectorSpec::full(), |acc, (p, o)| {
            acc.and_basis(p.register(), &[o.name()])
        })
    }
}

impl fmt::Display for FrObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries()
            .into_iter()
            .map(|(p, o)| format!("{}={}", p.name(), o.name()))
            .collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for FrObservation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut obs = FrObservation::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("observation {part:?} is not pointer=outcome")))?;
            let outcome = match v.trim().to_ascii_lowercase().as_str() {
                "ok" => FrOutcome::Ok,
                "fail" => FrOutcome::Fail,
                other => return Err(Error::Config(format!("unknown outcome {other:?}"))),
            };
            let slot = match k.trim().to_ascii_lowercase().as_str() {
                "z" => &mut obs.z,
                "w" => &mut obs.w,
                other => return Err(Error::Config(format!("unknown pointer {other:?}"))),
            };
            if slot.replace(outcome).is_some_and(|old| old != outcome) {
                return Err(Error::DuplicateConstraint(format!("pointer {k} observed twice")));
            }
        }
        Ok(obs)
    }
}

/// One step of the reasoning chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditStep {
    pub id: &'static str,
    /// Steps whose conclusions this one uses.
    pub premises: Vec<&'static str>,
    /// Which state the conditional queries were evaluated on.
    pub state: String,
    /// The conditional probability the step relies on.
    pub query: String,
    pub probability: Option<f64>,
    /// `(variable, value)` concluded, if any.
    pub conclusion: Option<(String, String)>,
    pub certain: bool,
    /// Why the step was not taken, if it was not.
    pub skipped: Option<String>,
}

impl AuditStep {
    fn skipped(id: &'static str, premises: Vec<&'static str>, why: &str) -> Self {
        Self {
            id,
            premises,
            state: String::new(),
            query: String::new(),
            probability: None,
            conclusion: None,
            certain: false,
            skipped: Some(why.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceAudit {
    pub zeus_intervenes: bool,
    pub observed: FrObservation,
    pub steps: Vec<AuditStep>,
    pub contradiction: bool,
    pub conflict: Option<(&'static str, &'static str)>,
    /// `(heads, tails)` from the coin amplitudes.
    pub prior: [f64; 2],
    /// `P(observation | coin record)` on the actual t = 4 state.
    pub likelihoods: [f64; 2],
    pub posterior: [f64; 2],
    /// Coin-record marginal of the actual t = 4 state.
    pub record_marginal: [f64; 2],
}

fn is_zero(p: f64) -> bool {
    p.abs() <= EXACT
}

fn find_conflict(steps: &[AuditStep]) -> Option<(&'static str, &'static str)> {
    let certain: Vec<_> = steps
        .iter()
        .filter(|s| s.certain)
        .filter_map(|s| s.conclusion.as_ref().map(|c| (s.id, c)))
        .collect();
    for (i, (a, ca)) in certain.iter().enumerate() {
        for (b, cb) in &certain[i + 1..] {
            if ca.0 == cb.0 && ca.1 != cb.1 {
                return Some((a, b));
            }
        }
    }
    None
}

/// Runs steps 1, 2, 3, 4* and 4 as conditional-probability queries.
pub fn fr_inference_audit(zeus_intervenes: bool, observed: FrObservation) -> Result<InferenceAudit> {
    if !zeus_intervenes && observed.z.is_some() {
        return Err(Error::Config("no z record exists when Zeus does not measure".into()));
    }
    let layout = fr_layout();
    let k = FrKets::new(&layout)?;
    let t0 = fr_state_at(FRTimeline::new(zeus_intervenes, 0)?)?;
    let t2 = fr_state_at(FRTimeline::new(zeus_intervenes, 2)?)?;
    let t4_off = fr_state_at(FRTimeline::new(false, 4)?)?;
    let actual = fr_state_at(FRTimeline::new(zeus_intervenes, 4)?)?;
    let obs_proj = observed.projector();
    let p_obs = born_probability(&actual, &obs_proj)?;
    if is_zero(p_obs) {
        return Err(Error::ZeroProbability(p_obs));
    }

    let mut steps = Vec::new();

    // Step 1: Zeus's report is taken at face value.
    let z_fact = match observed.z {
        Some(z) => {
            steps.push(AuditStep {
                id: "1",
                premises: vec![],
                state: "Zeus's report at t=5".into(),
                query: format!("z={}", z.name()),
                probability: Some(1.0),
                conclusion: Some(("z".into(), z.name().into())),
                certain: true,
                skipped: None,
            });
            Some(z)
        }
        None => {
            let why = if zeus_intervenes { "z not observed" } else { "Zeus makes no measurement" };
            steps.push(AuditStep::skipped("1", vec![], why));
            None
        }
    };

    // Step 2: on the fail_X form at t=2, which y values are compatible with the z record?
    let y_fact = match z_fact {
        Some(z) => {
            let z_proj = match z {
                FrOutcome::Ok => k.ok_x(),
                FrOutcome::Fail => k.fail_x(),
            };
            let ys = [("-1/2", k.minus_y()), ("+1/2", k.plus_y())];
            let mut compatible = Vec::new();
            let mut excluded = None;
            for (name, proj) in &ys {
                let q = conditional_probability(&t2, proj, &z_proj)?;
                if is_zero(q) {
                    excluded = Some((*name, 1.0 - q));
                } else {
                    compatible.push(*name);
                }
            }
            let concluded = (compatible.len() == 1).then(|| compatible[0]);
            steps.push(AuditStep {
                id: "2",
                premises: vec!["1"],
                state: "t=2, fail_X form".into(),
                query: match excluded {
                    Some((y, _)) => format!("P(z={} | y={y})", z.other().name()),
                    None => format!("P(z={} | y)", z.name()),
                },
                probability: excluded.map(|(_, p)| p),
                conclusion: concluded.map(|y| ("y".to_string(), y.to_string())),
                certain: concluded.is_some(),
                skipped: None,
            });
            concluded
        }
        None => {
            steps.push(AuditStep::skipped("2", vec!["1"], "step 1 gave no z record"));
            None
        }
    };

    // Step 3: on the heads/tails form at t=2, which coin values are compatible with y?
    match y_fact {
        Some(y) => {
            let (y_proj, y_other) = if y == "+1/2" { (k.plus_y(), "-1/2") } else { (k.minus_y(), "+1/2") };
            let mut compatible = Vec::new();
            let mut excluded = None;
            for c in Coin::ALL {
                let q = conditional_probability(&t2, &k.coin(c), &y_proj)?;
                if is_zero(q) {
                    excluded = Some((c, 1.0 - q));
                } else {
                    compatible.push(c);
                }
            }
            let concluded = (compatible.len() == 1).then(|| compatible[0]);
            steps.push(AuditStep {
                id: "3",
                premises: vec!["2"],
                state: "t=2, heads/tails branches".into(),
                query: match excluded {
                    Some((c, _)) => format!("P(y={y_other} | {})", c.name()),
                    None => format!("P(y={y} | coin)"),
                },
                probability: excluded.map(|(_, p)| p),
                conclusion: concluded.map(|c| ("coin".to_string(), c.name().to_string())),
                certain: concluded.is_some(),
                skipped: None,
            });
        }
        None => steps.push(AuditStep::skipped("3", vec!["2"], "step 2 gave no y value")),
    }

    // Step 4*: the Zeus-free conditional, whatever actually happened at t=3.
    match observed.w {
        Some(w) => {
            let w_proj = ProjectorSpec::basis("W", &[w.name()]);
            let mut compatible = Vec::new();
            let mut excluded = None;
            for c in Coin::ALL {
                let q = conditional_probability(&t4_off, &k.coin(c), &w_proj)?;
                if is_zero(q) {
                    excluded = Some((c, 1.0 - q));
                } else {
                    compatible.push(c);
                }
            }
            let concluded = (compatible.len() == 1).then(|| compatible[0]);
            steps.push(AuditStep {
                id: "4*",
                premises: vec![],
                state: "t=4 without Zeus".into(),
                query: match excluded {
                    Some((c, _)) => format!("P(w={} | {})", w.other().name(), c.name()),
                    None => format!("P(w={} | coin)", w.name()),
                },
                probability: excluded.map(|(_, p)| p),
                conclusion: concluded.map(|c| ("coin".to_string(), c.name().to_string())),
                certain: concluded.is_some(),
                skipped: None,
            });
        }
        None => steps.push(AuditStep::skipped("4*", vec![], "w not observed")),
    }

    // Step 4: Bayes on the state that matches what happened, prior from t=0.
    let prior = [
        born_probability(&t0, &k.heads())?,
        born_probability(&t0, &k.tails())?,
    ];
    let record_marginal = [
        born_probability(&actual, &k.heads())?,
        born_probability(&actual, &k.tails())?,
    ];
    let likelihoods = [
        conditional_probability(&actual, &k.heads(), &obs_proj)?,
        conditional_probability(&actual, &k.tails(), &obs_proj)?,
    ];
    let evidence = prior[0] * likelihoods[0] + prior[1] * likelihoods[1];
    if is_zero(evidence) {
        return Err(Error::ZeroProbability(evidence));
    }
    let posterior = [prior[0] * likelihoods[0] / evidence, prior[1] * likelihoods[1] / evidence];
    let certain_coin = Coin::ALL
        .into_iter()
        .zip(posterior)
        .find(|(_, p)| (p - 1.0).abs() <= EXACT)
        .map(|(c, _)| c);
    steps.push(AuditStep {
        id: "4",
        premises: vec![],
        state: if zeus_intervenes { "XYZ at t=4".into() } else { "XY at t=4 without Zeus".into() },
        query: format!("P(heads | {observed})"),
        probability: Some(posterior[0]),
        conclusion: certain_coin.map(|c| ("coin".to_string(), c.name().to_string())),
        certain: certain_coin.is_some(),
        skipped: None,
    });

    let conflict = find_conflict(&steps);
    Ok(InferenceAudit {
        zeus_intervenes,
        observed,
        steps,
        contradiction: conflict.is_some(),
        conflict,
        prior,
        likelihoods,
        posterior,
        record_marginal,
    })
}

/// Pointer-outcome probabilities at t = 4.
#[derive(Debug, Clone, PartialEq)]
pub struct FrOutcomeTable {
    pub zeus_intervenes: bool,
    /// `[z][w]` with index 0 = fail, 1 = OK; `None` without Zeus.
    pub joint_zw: Option<[[f64; 2]; 2]>,
    pub p_w_ok: f64,
    pub p_heads: f64,
    pub p_w_ok_given_heads: f64,
    pub p_w_ok_given_tails: f64,
    pub p_heads_given_w_ok: f64,
    /// `⟨x̂⟩`, `⟨ŷ⟩` on the record indicators.
    pub x_indicator: f64,
    pub y_indicator: f64,
}

pub fn fr_outcomes(zeus_intervenes: bool) -> Result<FrOutcomeTable> {
    let s = fr_state_at(FRTimeline::new(zeus_intervenes, 4)?)?;
    let l = s.layout();
    let k = FrKets::new(l)?;
    let w_ok = ProjectorSpec::basis("W", &["OK"]);
    let joint_zw = if zeus_intervenes {
        let mut j = [[0.0; 2]; 2];
        for (zi, z) in ["fail", "OK"].into_iter().enumerate() {
            for (wi, w) in ["fail", "OK"].into_iter().enumerate() {
                j[zi][wi] = born_probability(&s, &ProjectorSpec::basis("Z", &[z]).and_basis("W", &[w]))?;
            }
        }
        Some(j)
    } else {
        None
    };
    let x_hat = indicator_observable(l, &k.heads_x, &k.tails_x)?;
    let y_hat = indicator_observable(l, &k.plus_y, &k.minus_y)?;
    Ok(FrOutcomeTable {
        zeus_intervenes,
        joint_zw,
        p_w_ok: born_probability(&s, &w_ok)?,
        p_heads: born_probability(&s, &k.heads())?,
        p_w_ok_given_heads: conditional_probability(&s, &k.heads(), &w_ok)?,
        p_w_ok_given_tails: conditional_probability(&s, &k.tails(), &w_ok)?,
        p_heads_given_w_ok: conditional_probability(&s, &w_ok, &k.heads())?,
        x_indicator: s.expectation(&x_hat)?.re,
        y_indicator: s.expectation(&y_hat)?.re,
    })
}

/// `⟨fail/OK_X, fail/OK_Y | ψ²⟩` read off after applying both OK/fail
/// transforms: `[(ff), (f OK), (OK f), (OK OK)]`.
pub fn okfail_amplitudes_t2() -> Result<[f64; 4]> {
    let s = fr_state_at(FRTimeline::new(true, 2)?)?;
    let l = s.layout();
    let k = FrKets::new(l)?;
    let rotated = s
        .evolve(&okfail_transform(l, &k.heads_x, &k.tails_x)?)?
        .evolve(&okfail_transform(l, &k.minus_y, &k.plus_y)?)?;
    let amp = |x: [&str; 2], y: [&str; 2]| {
        rotated
            .amplitude(&[
                ("c", x[0]),
                ("Xm", x[1]),
                ("s", y[0]),
                ("Ym", y[1]),
                ("Z", "ready"),
                ("W", "ready"),
            ])
            .map(|a| a.re)
    };
    let (h, t) = (["heads", "heads"], ["tails", "tails"]);
    let (m, p) = (["down", "-1/2"], ["up", "+1/2"]);
    Ok([amp(h, m)?, amp(h, p)?, amp(t, m)?, amp(t, p)?])
}

pub fn fr_outcome_table(zeus_intervenes: bool) -> Result<ScenarioReport> {
    let o = fr_outcomes(zeus_intervenes)?;
    let mut r = ScenarioReport::new("fr-outcomes");
    r.parameter("zeus", zeus_intervenes);
    if let Some(j) = o.joint_zw {
        r.result(
            "joint_zw",
            MapBuilder::new()
                .with("fail,fail", j[0][0])
                .with("fail,OK", j[0][1])
                .with("OK,fail", j[1][0])
                .with("OK,OK", j[1][1])
                .build(),
        );
        let total: f64 = j.iter().flatten().sum();
        r.check(Check::close("p_ok_ok", 1.0 / 12.0, j[1][1], EXACT))
            .check(Check::close("zw_partition_total", 1.0, total, EXACT))
            .check(Check::close("p_w_ok_given_heads", 1.0 / 6.0, o.p_w_ok_given_heads, EXACT))
            .check(Check::close("p_w_ok_given_tails", 1.0 / 6.0, o.p_w_ok_given_tails, EXACT))
            .check(Check::close("p_heads_t4", 0.5, o.p_heads, EXACT))
            .check(Check::close("p_heads_given_w_ok", 0.5, o.p_heads_given_w_ok, EXACT));
    } else {
        r.check(Check::close("p_heads_given_w_ok", 1.0, o.p_heads_given_w_ok, EXACT));
    }
    r.check(Check::close("p_w_ok", 1.0 / 6.0, o.p_w_ok, EXACT));
    r.result("p_w_ok", o.p_w_ok)
        .result("p_heads_t4", o.p_heads)
        .result("p_w_ok_given_heads", o.p_w_ok_given_heads)
        .result("p_w_ok_given_tails", o.p_w_ok_given_tails)
        .result("p_heads_given_w_ok", o.p_heads_given_w_ok)
        .result("x_indicator_t4", o.x_indicator)
        .result("y_indicator_t4", o.y_indicator);

    // The fail/OK form and its consequences at t = 2.
    let t2 = fr_state_at(FRTimeline::new(zeus_intervenes, 2)?)?;
    let k = FrKets::new(t2.layout())?;
    let p_fail_x = born_probability(&t2, &k.fail_x())?;
    let p_okok_t2 = born_probability(&t2, &k.ok_x().and(&k.ok_y()))?;
    let amps = okfail_amplitudes_t2()?;
    let q = 1.0 / (2.0 * 3f64.sqrt());
    r.result("p_fail_x_t2", p_fail_x)
        .result("p_okx_oky_t2", p_okok_t2)
        .result("okfail_amplitudes_t2", amps.to_vec());
    r.check(Check::close("p_fail_x_t2", 5.0 / 6.0, p_fail_x, EXACT))
        .check(Check::close("p_okx_oky_t2", 1.0 / 12.0, p_okok_t2, EXACT));
    for (name, (got, want)) in ["ff", "fok", "okf", "okok"].iter().zip(amps.iter().zip([3.0 * q, q, -q, q])) {
        r.check(Check::close(format!("okfail_amplitude_{name}"), want, *got, EXACT));
    }
    Ok(r)
}

fn audit_value(a: &InferenceAudit) -> Value {
    let steps: Vec<Value> = a
        .steps
        .iter()
        .map(|s| {
            MapBuilder::new()
                .with("id", s.id)
                .with("premises", s.premises.iter().map(|p| Value::from(*p)).collect::<Vec<_>>())
                .with("state", s.state.clone())
                .with("query", s.query.clone())
                .with("probability", s.probability)
                .with(
                    "conclusion",
                    s.conclusion.as_ref().map(|(k, v)| format!("{k}={v}")),
                )
                .with("certain", s.certain)
                .with("skipped", s.skipped.clone())
                .build()
        })
        .collect();
    let pair = |x: [f64; 2]| MapBuilder::new().with("heads", x[0]).with("tails", x[1]).build();
    MapBuilder::new()
        .with("observed", a.observed.to_string())
        .with("steps", Value::List(steps))
        .with("contradiction", a.contradiction)
        .with("conflict", a.conflict.map(|(x, y)| format!("{x} vs {y}")))
        .with("prior", pair(a.prior))
        .with("likelihoods", pair(a.likelihoods))
        .with("posterior", pair(a.posterior))
        .with("record_marginal_t4", pair(a.record_marginal))
        .build()
}

fn conclusion_of(a: &InferenceAudit, id: &str) -> Option<String> {
    a.steps
        .iter()
        .find(|s| s.id == id && s.certain)
        .and_then(|s| s.conclusion.as_ref().map(|c| c.1.clone()))
}

/// Audit report with the checks that apply to the given setting.
pub fn fr_audit_report(zeus_intervenes: bool, observed: FrObservation) -> Result<ScenarioReport> {
    let a = fr_inference_audit(zeus_intervenes, observed)?;
    let mut r = ScenarioReport::new("fr-audit");
    r.parameter("zeus", zeus_intervenes).parameter("observe", observed.to_string());
    r.result("audit", audit_value(&a));
    let is = |id: &str, v: &str| conclusion_of(&a, id).as_deref() == Some(v);
    if zeus_intervenes && observed == FrObservation::ok_ok() {
        r.check(Check::flag("contradiction", true, a.contradiction))
            .check(Check::flag("step2_concludes_plus_half", true, is("2", "+1/2")))
            .check(Check::flag("step3_concludes_tails", true, is("3", "tails")))
            .check(Check::flag("step4star_concludes_heads", true, is("4*", "heads")));
    }
    if zeus_intervenes {
        r.check(Check::close("posterior_heads_equals_prior", a.prior[0], a.posterior[0], EXACT))
            .check(Check::close("posterior_tails_equals_prior", a.prior[1], a.posterior[1], EXACT))
            .check(Check::close("prior_heads", 1.0 / 3.0, a.prior[0], EXACT));
    }
    if !zeus_intervenes && observed.w == Some(FrOutcome::Ok) {
        r.check(Check::flag("contradiction", false, a.contradiction))
            .check(Check::flag("concludes_heads", true, is("4", "heads")));
    }
    Ok(r)
}

/// `P(w = fail | tails)` read two ways: collapsing the coin at t = 0 and
/// evolving the remaining steps, versus conditioning the unitary t = 4 state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixComparison {
    pub collapse: f64,
    pub unitary: f64,
    pub discrepancy: f64,
}

pub fn fr_appendix_values() -> Result<AppendixComparison> {
    let k = FrKets::new(&fr_layout())?;
    let w_fail = ProjectorSpec::basis("W", &["fail"]);
    let t0 = fr_state_at(FRTimeline::new(true, 0)?)?;
    let collapsed = project_collapse(&t0, &k.tails())?;
    let after = evolve_steps(collapsed, 1, 4, true)?;
    let collapse = born_probability(&after, &w_fail)?;
    let t4 = fr_state_at(FRTimeline::new(true, 4)?)?;
    let unitary = conditional_probability(&t4, &k.tails(), &w_fail)?;
    Ok(AppendixComparison { collapse, unitary, discrepancy: collapse - unitary })
}

pub fn fr_appendix_comparison() -> Result<ScenarioReport> {
    let v = fr_appendix_values()?;
    let mut r = ScenarioReport::new("fr-appendix");
    r.result("collapse_p_w_fail_given_tails", v.collapse)
        .result("unitary_p_w_fail_given_tails", v.unitary)
        .result("discrepancy", v.discrepancy);
    r.check(Check::close("collapse_reading", 1.0, v.collapse, EXACT))
        .check(Check::close("unitary_reading", 5.0 / 6.0, v.unitary, EXACT))
        .check(Check::close("discrepancy", 1.0 / 6.0, v.discrepancy, EXACT));
    Ok(r)
}
