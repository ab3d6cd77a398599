//! Bohm-EPR pair measured twice per side, with the friends' measurements
//! undone in between.
//!
//! Registers: particles `1`, `2` (`[up, down]`) and labs `C`, `D`, `A`, `B`
//! (`[ready, up, down]`). Carol and Alice measure particle 1 along `c` and
//! `a`; Dan and Bob measure particle 2 along `d` and `b`. Outcome `up` is +1.
//!
//! Two orderings of the same six events:
//!
//! ```text
//! F : U_D, U_C, U_C†, A, U_D†, B
//! F*: U_C, U_D, U_D†, B, U_C†, A
//! ```
//!
//! In unitary mode a pairwise correlation is the two-time Born expectation of
//! both pointer records, evaluated right after the first event at which both
//! records exist together. `(a,d)` has no such point in F*, `(b,c)` none in F;
//! each pair falls back to the other frame when needed.
//!
//! In collapse mode every measurement projects the state onto its record, the
//! undo unitaries still act, and each trial yields a full `⟨a,b,c,d⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{assemble, require_match};
use crate::bell::{
    assignment, chsh_all, fine_joint_exists, ChshVariant, CorrelationSet, CorrelationTally, OutcomeRow,
    PairLabel, Variable, NUM_ASSIGNMENTS,
};
use crate::error::{Error, Result};
use crate::observables::{dilation_unitary, spin_eigenkets, DirectionAngle, MeasurementDilation, READY};
use crate::qsim::{
    born_probability, project_collapse, LocalKet, OperatorMatrix, OutcomeDistribution, ProjectorSpec,
    RegisterLayout, StateVector, TrialRng, GENERATOR_NAME,
};
use crate::report::{Check, MapBuilder, ScenarioReport, Value};

pub const MAX_TRIALS: u64 = 10_000_000;
const ANALYTIC_TOL: f64 = 1e-9;
const EXACT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Unitary,
    Collapse,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Unitary => "unitary",
            Mode::Collapse => "collapse",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unitary" => Ok(Mode::Unitary),
            "collapse" => Ok(Mode::Collapse),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    F,
    FStar,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::F => "F",
            Frame::FStar => "Fstar",
        }
    }

    fn other(self) -> Self {
        match self {
            Frame::F => Frame::FStar,
            Frame::FStar => Frame::F,
        }
    }

    pub fn events(self) -> [Event; 6] {
        use Event::*;
        match self {
            Frame::F => [MeasureD, MeasureC, UndoC, MeasureA, UndoD, MeasureB],
            Frame::FStar => [MeasureC, MeasureD, UndoD, MeasureB, UndoC, MeasureA],
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F" => Ok(Frame::F),
            "Fstar" | "F*" | "fstar" => Ok(Frame::FStar),
            _ => Err(Error::Config(format!("unknown frame {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    MeasureC,
    MeasureD,
    UndoC,
    UndoD,
    MeasureA,
    MeasureB,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::MeasureC => "U_C",
            Event::MeasureD => "U_D",
            Event::UndoC => "U_C†",
            Event::UndoD => "U_D†",
            Event::MeasureA => "A",
            Event::MeasureB => "B",
        }
    }

    /// The variable whose record this event creates.
    fn measures(self) -> Option<Variable> {
        match self {
            Event::MeasureA => Some(Variable::A),
            Event::MeasureB => Some(Variable::B),
            Event::MeasureC => Some(Variable::C),
            Event::MeasureD => Some(Variable::D),
            _ => None,
        }
    }

    fn erases(self) -> Option<Variable> {
        match self {
            Event::UndoC => Some(Variable::C),
            Event::UndoD => Some(Variable::D),
            _ => None,
        }
    }
}

fn lab(v: Variable) -> &'static str {
    match v {
        Variable::A => "A",
        Variable::B => "B",
        Variable::C => "C",
        Variable::D => "D",
    }
}

fn particle(v: Variable) -> &'static str {
    match v {
        Variable::A | Variable::C => "1",
        Variable::B | Variable::D => "2",
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprUndoConfig {
    /// `(a, b, c, d)`.
    pub angles: [DirectionAngle<f64>; 4],
    pub mode: Mode,
    pub frame: Frame,
    pub trials: u64,
    pub seed: u64,
}

impl EprUndoConfig {
    pub fn new(angles: [DirectionAngle<f64>; 4], mode: Mode, frame: Frame, trials: u64, seed: u64) -> Result<Self> {
        let c = Self { angles, mode, frame, trials, seed };
        c.validate()?;
        Ok(c)
    }

    /// Unitary mode, frame F, no trials.
    pub fn analytic(angles_deg: [f64; 4]) -> Result<Self> {
        Self::new(degrees(angles_deg)?, Mode::Unitary, Frame::F, 0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials > MAX_TRIALS {
            return Err(Error::Config(format!("trials {} exceeds {MAX_TRIALS}", self.trials)));
        }
        Ok(())
    }

    pub fn angle(&self, v: Variable) -> f64 {
        self.angles[v.index()].radians()
    }

    /// Unitary-mode prediction `−cos(x − y)`.
    pub fn singlet_correlation(&self, pair: PairLabel) -> f64 {
        let (x, y) = pair.variables();
        -(self.angle(x) - self.angle(y)).cos()
    }

    /// Collapse-mode prediction: the outer measurements see particles
    /// already collapsed along `c` and `d`.
    pub fn collapse_correlation(&self, pair: PairLabel) -> f64 {
        let [a, b, c, d] = [Variable::A, Variable::B, Variable::C, Variable::D].map(|v| self.angle(v));
        let cd = -(c - d).cos();
        match pair {
            PairLabel::AB => (a - c).cos() * (b - d).cos() * cd,
            PairLabel::BC => (b - d).cos() * cd,
            PairLabel::CD => cd,
            PairLabel::AD => (a - c).cos() * cd,
        }
    }
}

pub fn degrees(deg: [f64; 4]) -> Result<[DirectionAngle<f64>; 4]> {
    let mut out = [DirectionAngle::default(); 4];
    for (o, d) in out.iter_mut().zip(deg) {
        *o = DirectionAngle::from_degrees(d)?;
    }
    Ok(out)
}

pub fn epr_layout() -> Arc<RegisterLayout> {
    let lab = vec![READY, "up", "down"];
    Arc::new(
        RegisterLayout::new([
            ("1", vec!["up", "down"]),
            ("2", vec!["up", "down"]),
            ("C", lab.clone()),
            ("D", lab.clone()),
            ("A", lab.clone()),
            ("B", lab),
        ])
        .expect("static layout"),
    )
}

/// `(|↑↓⟩ − |↓↑⟩)/√2` with every lab ready.
pub fn singlet_state() -> Result<StateVector<f64>> {
    let l = epr_layout();
    let ud = LocalKet::basis(&l, &[("1", "up"), ("2", "down")])?;
    let du = LocalKet::basis(&l, &[("1", "down"), ("2", "up")])?;
    assemble(&l, &[(FRAC_1_SQRT_2, vec![&ud]), (-FRAC_1_SQRT_2, vec![&du])])
}

/// The six event unitaries for one angle setting.
struct Dynamics {
    measure: [OperatorMatrix<f64>; 4],
}

impl Dynamics {
    fn new(config: &EprUndoConfig) -> Result<Self> {
        let layout = epr_layout();
        let build = |v: Variable| -> Result<OperatorMatrix<f64>> {
            let d = MeasurementDilation::spin(&layout, particle(v), lab(v), config.angles[v.index()])?;
            dilation_unitary(&layout, &d)
        };
        let measure = [build(Variable::A)?, build(Variable::B)?, build(Variable::C)?, build(Variable::D)?];
        Ok(Self { measure })
    }

    fn unitary(&self, e: Event) -> OperatorMatrix<f64> {
        match (e.measures(), e.erases()) {
            (Some(v), _) => self.measure[v.index()].clone(),
            (_, Some(v)) => self.measure[v.index()].dagger(),
            _ => unreachable!("every event measures or erases"),
        }
    }

    /// State after each event of `frame` (index k = after event k).
    fn history(&self, frame: Frame) -> Result<Vec<StateVector<f64>>> {
        let mut s = singlet_state()?;
        let mut out = Vec::with_capacity(6);
        for e in frame.events() {
            s = s.evolve(&self.unitary(e))?;
            out.push(s.clone());
        }
        Ok(out)
    }
}

fn record(v: Variable, outcome: &str) -> ProjectorSpec<f64> {
    ProjectorSpec::basis(lab(v), &[outcome])
}

const OUTCOMES: [(&str, i8); 2] = [("up", 1), ("down", -1)];

/// First event index after which both records of `pair` exist in `frame`.
pub fn coexistence_point(frame: Frame, pair: PairLabel) -> Option<usize> {
    let (x, y) = pair.variables();
    let mut live = [false; 4];
    for (k, e) in frame.events().into_iter().enumerate() {
        if let Some(v) = e.measures() {
            live[v.index()] = true;
        }
        if let Some(v) = e.erases() {
            live[v.index()] = false;
        }
        if live[x.index()] && live[y.index()] {
            return Some(k);
        }
    }
    None
}

/// Where a pairwise correlation was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEvaluation {
    pub pair: PairLabel,
    pub frame: Frame,
    /// Index into the frame's event list; the state just after that event.
    pub after_event: usize,
}

impl PairEvaluation {
    pub fn locate(preferred: Frame, pair: PairLabel) -> Result<Self> {
        for frame in [preferred, preferred.other()] {
            if let Some(k) = coexistence_point(frame, pair) {
                return Ok(Self { pair, frame, after_event: k });
            }
        }
        Err(Error::MissingPair(pair.name().to_string()))
    }

    pub fn describe(&self) -> String {
        format!("{} after {} (event {})", self.frame, self.frame.events()[self.after_event].name(), self.after_event)
    }
}

/// Joint distribution of the two records, `[(up,up), (up,down), (down,up), (down,down)]`.
fn pair_distribution(state: &StateVector<f64>, pair: PairLabel) -> Result<[f64; 4]> {
    let (x, y) = pair.variables();
    let mut p = [0.0; 4];
    for (i, (ox, _)) in OUTCOMES.iter().enumerate() {
        for (j, (oy, _)) in OUTCOMES.iter().enumerate() {
            p[2 * i + j] = born_probability(state, &record(x, ox).and(&record(y, oy)))?;
        }
    }
    Ok(p)
}

fn product_sign(k: usize) -> f64 {
    let (i, j) = (k / 2, k % 2);
    f64::from(OUTCOMES[i].1 * OUTCOMES[j].1)
}

#[derive(Debug, Clone)]
pub struct EprAnalytic {
    pub correlations: CorrelationSet,
    pub evaluations: Vec<PairEvaluation>,
    /// Joint record distributions at each evaluation point, in `PairLabel::ALL` order.
    pub distributions: [[f64; 4]; 4],
    /// `|⟨Ψ₃|Ψ₁⟩|²`.
    pub psi_fidelity: f64,
    /// `P(C = ready)`, `P(D = ready)` after the last event.
    pub labs_ready: [f64; 2],
    /// Largest difference between the F-first and F*-first evaluations.
    pub frame_defect: f64,
    /// `1 − |⟨final_F|final_F*⟩|²`.
    pub final_state_defect: f64,
}

fn correlations_in(dynamics: &Dynamics, preferred: Frame) -> Result<(CorrelationSet, Vec<PairEvaluation>, [[f64; 4]; 4])> {
    let hist = [dynamics.history(Frame::F)?, dynamics.history(Frame::FStar)?];
    let mut values = [0.0; 4];
    let mut evals = Vec::new();
    let mut dists = [[0.0; 4]; 4];
    for pair in PairLabel::ALL {
        let ev = PairEvaluation::locate(preferred, pair)?;
        let h = &hist[usize::from(ev.frame == Frame::FStar)];
        let dist = pair_distribution(&h[ev.after_event], pair)?;
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > EXACT {
            return Err(Error::Numerical(format!("records of {pair} not both live at {}", ev.describe())));
        }
        values[pair.index()] = (0..4).map(|k| product_sign(k) * dist[k]).sum();
        dists[pair.index()] = dist;
        evals.push(ev);
    }
    let [ab, bc, cd, ad] = values;
    Ok((CorrelationSet::new(ab, bc, cd, ad)?, evals, dists))
}

/// Closed forms of `Ψ₁` and `Ψ₂` in frame F.
pub fn epr_closed_forms(config: &EprUndoConfig) -> Result<[StateVector<f64>; 2]> {
    let l = epr_layout();
    let c = config.angles[Variable::C.index()];
    let d = config.angles[Variable::D.index()];
    let (up1_d, down1_d) = spin_eigenkets(&l, "1", d)?;
    let (up2_d, down2_d) = spin_eigenkets(&l, "2", d)?;
    let (up1_c, down1_c) = spin_eigenkets(&l, "1", c)?;
    let rec = |r: &str, o: &str| LocalKet::basis(&l, &[(r, o)]);
    let (d_up, d_down, c_up, c_down) = (rec("D", "up")?, rec("D", "down")?, rec("C", "up")?, rec("C", "down")?);
    let psi1 = assemble(
        &l,
        &[(FRAC_1_SQRT_2, vec![&up1_d, &down2_d, &d_down]), (-FRAC_1_SQRT_2, vec![&down1_d, &up2_d, &d_up])],
    )?;
    // |↑_d⟩ = cos h|↑_c⟩ + sin h|↓_c⟩, |↓_d⟩ = −sin h|↑_c⟩ + cos h|↓_c⟩, h = (d − c)/2.
    let (sh, ch) = ((d.radians() - c.radians()) / 2.0).sin_cos();
    let (sh, ch) = (sh * FRAC_1_SQRT_2, ch * FRAC_1_SQRT_2);
    let psi2 = assemble(
        &l,
        &[
            (ch, vec![&up1_c, &c_up, &down2_d, &d_down]),
            (sh, vec![&down1_c, &c_down, &down2_d, &d_down]),
            (sh, vec![&up1_c, &c_up, &up2_d, &d_up]),
            (-ch, vec![&down1_c, &c_down, &up2_d, &d_up]),
        ],
    )?;
    Ok([psi1, psi2])
}

/// Two-time Born correlations with the undo identity and frame checks.
pub fn epr_undo_analytic(config: &EprUndoConfig) -> Result<EprAnalytic> {
    config.validate()?;
    if config.mode != Mode::Unitary {
        return Err(Error::Config("analytic correlations are defined in unitary mode".into()));
    }
    let dynamics = Dynamics::new(config)?;
    let hist_f = dynamics.history(Frame::F)?;
    let hist_s = dynamics.history(Frame::FStar)?;
    let [psi1_ref, psi2_ref] = epr_closed_forms(config)?;
    require_match("Ψ₁", &hist_f[0], &psi1_ref)?;
    require_match("Ψ₂", &hist_f[1], &psi2_ref)?;
    require_match("Ψ₃", &hist_f[2], &psi1_ref)?;
    let psi_fidelity = hist_f[2].fidelity(&hist_f[0])?;

    let last = &hist_f[5];
    let labs_ready = [
        born_probability(last, &record(Variable::C, READY))?,
        born_probability(last, &record(Variable::D, READY))?,
    ];
    let final_state_defect = 1.0 - last.fidelity(&hist_s[5])?;

    let (correlations, evaluations, distributions) = correlations_in(&dynamics, config.frame)?;
    let (other, _, _) = correlations_in(&dynamics, config.frame.other())?;
    let frame_defect = PairLabel::ALL
        .into_iter()
        .map(|p| (correlations.get(p).unwrap_or(f64::NAN) - other.get(p).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);
    Ok(EprAnalytic {
        correlations,
        evaluations,
        distributions,
        psi_fidelity,
        labs_ready,
        frame_defect,
        final_state_defect,
    })
}

fn config_parameters(r: &mut ScenarioReport, config: &EprUndoConfig) {
    let deg: Vec<f64> = config.angles.iter().map(|a| a.degrees()).collect();
    let rad: Vec<f64> = config.angles.iter().map(|a| a.radians()).collect();
    r.parameter("angles_deg", deg)
        .parameter("angles_rad", rad)
        .parameter("mode", config.mode.name())
        .parameter("frame", config.frame.name())
        .parameter("trials", config.trials)
        .parameter("seed", config.seed);
}

fn correlation_map(c: &CorrelationSet) -> Value {
    let mut m = MapBuilder::new();
    for p in PairLabel::ALL {
        m.push(p.name(), c.get(p));
    }
    m.build()
}

fn chsh_value_map(c: &CorrelationSet) -> Result<Value> {
    let s = chsh_all(c)?;
    let mut m = MapBuilder::new();
    for (variant, value) in s.values {
        m.push(variant.name(), value);
    }
    Ok(m.build())
}

/// `corr(a,b) + corr(b,c) + corr(c,d) − corr(a,d)`.
pub fn chsh_sum(c: &CorrelationSet) -> Result<f64> {
    let [ab, bc, cd, ad] = c.values()?;
    Ok(ab + bc + cd - ad)
}

pub fn epr_analytic_report(config: &EprUndoConfig) -> Result<ScenarioReport> {
    let a = epr_undo_analytic(config)?;
    let mut r = ScenarioReport::new("epr-undo-analytic");
    config_parameters(&mut r, config);
    r.result("correlations", correlation_map(&a.correlations));
    let mut where_ = MapBuilder::new();
    for ev in &a.evaluations {
        where_.push(ev.pair.name(), ev.describe());
    }
    r.result("evaluated_at", where_.build());
    let s = chsh_sum(&a.correlations)?;
    r.result("chsh", s)
        .result("chsh_variants", chsh_value_map(&a.correlations)?)
        .result("psi3_psi1_fidelity", a.psi_fidelity)
        .result("p_carol_ready_final", a.labs_ready[0])
        .result("p_dan_ready_final", a.labs_ready[1])
        .result("frame_defect", a.frame_defect);
    for p in PairLabel::ALL {
        r.check(Check::close(
            format!("corr_{}", p.name()),
            config.singlet_correlation(p),
            a.correlations.get(p).unwrap_or(f64::NAN),
            ANALYTIC_TOL,
        ));
    }
    let expected_s: f64 = PairLabel::ALL
        .into_iter()
        .map(|p| if p == PairLabel::AD { -1.0 } else { 1.0 } * config.singlet_correlation(p))
        .sum();
    r.check(Check::close("chsh", expected_s, s, ANALYTIC_TOL))
        .check(Check::at_least("psi3_equals_psi1", 1.0, a.psi_fidelity, EXACT))
        .check(Check::close("carol_lab_restored", 1.0, a.labs_ready[0], EXACT))
        .check(Check::close("dan_lab_restored", 1.0, a.labs_ready[1], EXACT))
        .check(Check::at_most("frame_invariance", 0.0, a.frame_defect, EXACT))
        .check(Check::at_most("frames_reach_same_final_state", 0.0, a.final_state_defect, EXACT));
    let fine = fine_joint_exists(&a.correlations)?;
    let worst = chsh_all(&a.correlations)?.worst.value;
    r.result("joint_distribution_exists", fine.feasible);
    r.check(Check::flag("fine_matches_chsh", worst <= 2.0 + ANALYTIC_TOL, fine.feasible));
    Ok(r)
}

/// Measurement order and the 16-leaf outcome tree for collapse mode.
#[derive(Debug, Clone)]
pub struct CollapseTree {
    /// Variables in measurement order.
    pub order: [Variable; 4],
    /// `P(⟨a,b,c,d⟩)` indexed like [`assignment`].
    pub distribution: [f64; NUM_ASSIGNMENTS],
    /// Conditional outcome distributions; node `n` at depth `k` has children `2n`, `2n + 1`.
    nodes: Vec<Vec<OutcomeDistribution>>,
}

fn assignment_index(row: &[i8; 4]) -> usize {
    row.iter().fold(0, |acc, v| (acc << 1) | usize::from(*v < 0))
}

impl CollapseTree {
    pub fn new(config: &EprUndoConfig) -> Result<Self> {
        let dynamics = Dynamics::new(config)?;
        let events = config.frame.events();
        let order: Vec<Variable> = events.iter().filter_map(|e| e.measures()).collect();
        let order: [Variable; 4] = order.try_into().expect("four measurements");
        let mut nodes: Vec<Vec<OutcomeDistribution>> = vec![Vec::new(); 4];
        let mut distribution = [0.0; NUM_ASSIGNMENTS];

        // Depth-first over (state, next event, depth, node, path probability, partial row).
        struct Frontier {
            state: Option<StateVector<f64>>,
            next: usize,
            depth: usize,
            node: usize,
            prob: f64,
            row: [i8; 4],
        }
        let mut stack = vec![Frontier { state: Some(singlet_state()?), next: 0, depth: 0, node: 0, prob: 1.0, row: [0; 4] }];
        let mut pending: Vec<Vec<Option<OutcomeDistribution>>> = (0..4).map(|k| vec![None; 1 << k]).collect();
        while let Some(mut f) = stack.pop() {
            // Apply undo events until the next measurement.
            let mut state = f.state.take();
            while f.next < events.len() && events[f.next].measures().is_none() {
                state = match state {
                    Some(s) => Some(s.evolve(&dynamics.unitary(events[f.next]))?),
                    None => None,
                };
                f.next += 1;
            }
            if f.next == events.len() {
                if f.prob > 0.0 {
                    distribution[assignment_index(&f.row)] += f.prob;
                }
                continue;
            }
            let v = events[f.next].measures().expect("measurement event");
            let measured = match state {
                Some(s) => Some(s.evolve(&dynamics.unitary(events[f.next]))?),
                None => None,
            };
            let weights = match &measured {
                Some(s) => OUTCOMES
                    .iter()
                    .map(|(o, _)| born_probability(s, &record(v, o)))
                    .collect::<Result<Vec<f64>>>()?,
                None => vec![0.5, 0.5],
            };
            pending[f.depth][f.node] = Some(OutcomeDistribution::from_weights(weights.clone(), 1e-9)?);
            for (i, (o, sign)) in OUTCOMES.iter().enumerate() {
                let w = weights[i];
                let child = match &measured {
                    Some(s) if w > EXACT => Some(project_collapse(s, &record(v, o))?),
                    _ => None,
                };
                let mut row = f.row;
                row[v.index()] = *sign;
                stack.push(Frontier {
                    state: child,
                    next: f.next + 1,
                    depth: f.depth + 1,
                    node: 2 * f.node + i,
                    prob: if w > EXACT { f.prob * w } else { 0.0 },
                    row,
                });
            }
        }
        for (k, level) in pending.into_iter().enumerate() {
            nodes[k] = level.into_iter().map(|d| d.expect("every node visited")).collect();
        }
        Ok(Self { order, distribution, nodes })
    }

    /// One four-tuple; the k-th measurement uses draw k of the trial.
    pub fn sample(&self, rng: &mut TrialRng) -> [i8; 4] {
        let mut row = [0i8; 4];
        let mut node = 0;
        for (k, v) in self.order.iter().enumerate() {
            let i = self.nodes[k][node].draw(rng);
            row[v.index()] = OUTCOMES[i].1;
            node = 2 * node + i;
        }
        row
    }

    pub fn correlations(&self) -> Result<CorrelationSet> {
        CorrelationSet::from_distribution(&self.distribution, false)
    }
}

/// Exact `P(⟨a,b,c,d⟩)` under sequential collapse.
pub fn collapse_distribution(config: &EprUndoConfig) -> Result<[f64; NUM_ASSIGNMENTS]> {
    Ok(CollapseTree::new(config)?.distribution)
}

/// One sampled trial. Unitary mode fills only the two slots of `pair`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    /// `None` for a full four-tuple (collapse mode).
    pub pair: Option<PairLabel>,
    pub outcomes: OutcomeRow,
}

impl TrialRecord {
    pub fn pair_or_full(&self) -> &'static str {
        self.pair.map_or("full", PairLabel::name)
    }
}

pub const CSV_HEADER: &str = "trial,pair_or_full,out_a,out_b,out_c,out_d";

impl fmt::Display for TrialRecord {
    /// CSV row matching [`CSV_HEADER`]; unsampled slots are empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.trial, self.pair_or_full())?;
        for o in self.outcomes {
            match o {
                Some(v) => write!(f, ",{v}")?,
                None => f.write_str(",")?,
            }
        }
        Ok(())
    }
}

/// Monte Carlo run. Records are streamed to `sink` in trial order.
pub fn epr_undo_sample<S: FnMut(&TrialRecord)>(config: &EprUndoConfig, mut sink: S) -> Result<ScenarioReport> {
    config.validate()?;
    if config.trials == 0 {
        return Err(Error::Config("sampling needs at least one trial".into()));
    }
    let n = config.trials;
    let mut tally = CorrelationTally::default();
    let mut r = ScenarioReport::new("epr-undo-sample");
    config_parameters(&mut r, config);
    r.parameter("generator", GENERATOR_NAME);

    let expected: fn(&EprUndoConfig, PairLabel) -> f64 = match config.mode {
        Mode::Unitary => {
            let dynamics = Dynamics::new(config)?;
            let (_, _, dists) = correlations_in(&dynamics, config.frame)?;
            for pair in PairLabel::ALL {
                let dist = OutcomeDistribution::from_weights(dists[pair.index()].to_vec(), 1e-9)?;
                let (x, y) = pair.variables();
                let base = pair.index() as u64 * n;
                for i in 0..n {
                    let trial = base + i;
                    let k = dist.pick(TrialRng::uniform_at(config.seed, trial, 0));
                    let mut row: OutcomeRow = [None; 4];
                    row[x.index()] = Some(OUTCOMES[k / 2].1);
                    row[y.index()] = Some(OUTCOMES[k % 2].1);
                    tally.add(&row);
                    sink(&TrialRecord { trial, pair: Some(pair), outcomes: row });
                }
            }
            EprUndoConfig::singlet_correlation
        }
        Mode::Collapse => {
            let tree = CollapseTree::new(config)?;
            let mut chsh_numerator = 0i64;
            for trial in 0..n {
                let mut rng = TrialRng::new(config.seed, trial);
                let row = tree.sample(&mut rng);
                let [a, b, c, d] = row.map(i64::from);
                chsh_numerator += a * b + b * c + c * d - a * d;
                let row = row.map(Some);
                tally.add(&row);
                sink(&TrialRecord { trial, pair: None, outcomes: row });
            }
            // Every trial contributes ±2, so |Σ| ≤ 2N holds in integers.
            let bound = 2 * n as i64;
            r.result("chsh_numerator", chsh_numerator);
            r.check(Check::at_most("empirical_chsh_at_most_2", bound as f64, chsh_numerator.unsigned_abs() as f64, 0.0));
            EprUndoConfig::collapse_correlation
        }
    };

    let mut corr = MapBuilder::new();
    let mut est = [0.0; 4];
    for pair in PairLabel::ALL {
        let s = tally.correlation(pair)?;
        est[pair.index()] = s.estimate;
        let want = expected(config, pair);
        corr.push(
            pair.name(),
            MapBuilder::new()
                .with("estimate", s.estimate)
                .with("std_error", s.std_error)
                .with("n", s.n)
                .with("expected", want)
                .build(),
        );
        r.check(Check::at_most(
            format!("corr_{}_within_4sigma", pair.name()),
            4.0 * s.std_error,
            (s.estimate - want).abs(),
            0.0,
        ));
    }
    r.result("correlations", corr.build());
    let empirical = CorrelationSet::new(est[0], est[1], est[2], est[3])?;
    r.result("chsh", chsh_sum(&empirical)?);
    if config.mode == Mode::Collapse {
        let fine = fine_joint_exists(&empirical)?;
        r.result("joint_distribution_exists", fine.feasible);
        r.check(Check::flag("four_tuples_admit_joint_distribution", true, fine.feasible));
    }
    Ok(r)
}

/// Exact collapse-mode statistics.
pub fn epr_collapse_report(config: &EprUndoConfig) -> Result<ScenarioReport> {
    let tree = CollapseTree::new(config)?;
    let c = tree.correlations()?;
    let mut r = ScenarioReport::new("epr-undo-collapse");
    config_parameters(&mut r, config);
    let order: Vec<Value> = tree.order.iter().map(|v| Value::from(v.name())).collect();
    r.result("measurement_order", Value::List(order));
    let mut dist = MapBuilder::new();
    for (k, p) in tree.distribution.iter().enumerate() {
        let label: String = assignment(k).iter().map(|v| if *v > 0 { '+' } else { '-' }).collect();
        dist.push(&label, *p);
    }
    r.result("distribution_abcd", dist.build())
        .result("correlations", correlation_map(&c))
        .result("chsh", chsh_sum(&c)?);
    let total: f64 = tree.distribution.iter().sum();
    r.check(Check::close("distribution_total", 1.0, total, EXACT));
    for p in PairLabel::ALL {
        r.check(Check::close(
            format!("corr_{}", p.name()),
            config.collapse_correlation(p),
            c.get(p).unwrap_or(f64::NAN),
            ANALYTIC_TOL,
        ));
    }
    let fine = fine_joint_exists(&c)?;
    r.result("joint_distribution_exists", fine.feasible);
    r.check(Check::at_most("chsh_at_most_2", 2.0, chsh_all(&c)?.worst.value, ANALYTIC_TOL))
        .check(Check::flag("joint_distribution_exists", true, fine.feasible));
    Ok(r)
}

/// The full run the CLI performs: exact statistics for the mode, plus Monte
/// Carlo when `trials > 0`.
pub fn epr_undo_run<S: FnMut(&TrialRecord)>(config: &EprUndoConfig, sink: S) -> Result<ScenarioReport> {
    config.validate()?;
    let mut r = ScenarioReport::new("epr-undo");
    config_parameters(&mut r, config);
    match config.mode {
        Mode::Unitary => r.absorb("analytic", epr_analytic_report(config)?),
        Mode::Collapse => r.absorb("exact", epr_collapse_report(config)?),
    }
    if config.trials > 0 {
        r.absorb("sample", epr_undo_sample(config, sink)?);
    }
    Ok(r)
}

/// The CHSH variant written in the text: minus on `(a,d)`.
pub const TEXT_VARIANT: ChshVariant = ChshVariant::MinusAD;

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

    #[test]
    fn coexistence_points() {
        assert_eq!(coexistence_point(Frame::F, PairLabel::CD), Some(1));
        assert_eq!(coexistence_point(Frame::F, PairLabel::AD), Some(3));
        assert_eq!(coexistence_point(Frame::F, PairLabel::AB), Some(5));
        assert_eq!(coexistence_point(Frame::F, PairLabel::BC), None);
        assert_eq!(coexistence_point(Frame::FStar, PairLabel::BC), Some(3));
        assert_eq!(coexistence_point(Frame::FStar, PairLabel::AD), None);
    }

    #[test]
    fn canonical_angles_violate_maximally() {
        let cfg = EprUndoConfig::analytic(CANONICAL).unwrap();
        let a = epr_undo_analytic(&cfg).unwrap();
        let s = chsh_sum(&a.correlations).unwrap();
        assert!((s.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{s}");
        assert!(a.frame_defect < 1e-12);
        assert!(a.psi_fidelity > 1.0 - 1e-12);
        let r = epr_analytic_report(&cfg).unwrap();
        assert!(r.all_passed(), "{:#?}", r.checks);
        assert_eq!(r.get_result("joint_distribution_exists"), Some(&Value::Bool(false)));
    }

    #[test]
    fn analytic_rejects_collapse_mode() {
        let mut cfg = EprUndoConfig::analytic(CANONICAL).unwrap();
        cfg.mode = Mode::Collapse;
        assert!(matches!(epr_undo_analytic(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn trial_cap() {
        let angles = degrees(CANONICAL).unwrap();
        assert!(EprUndoConfig::new(angles, Mode::Unitary, Frame::F, MAX_TRIALS + 1, 0).is_err());
    }

    #[test]
    fn collapse_tree_matches_closed_form() {
        for frame in [Frame::F, Frame::FStar] {
            let cfg = EprUndoConfig::new(degrees([10.0, 70.0, 200.0, 33.0]).unwrap(), Mode::Collapse, frame, 0, 0).unwrap();
            let r = epr_collapse_report(&cfg).unwrap();
            assert!(r.all_passed(), "{:#?}", r.checks);
        }
    }

    #[test]
    fn degenerate_angles_are_fine() {
        let cfg = EprUndoConfig::new(degrees([30.0, 30.0, 30.0, 30.0]).unwrap(), Mode::Collapse, Frame::F, 200, 1).unwrap();
        let mut rows = Vec::new();
        let r = epr_undo_sample(&cfg, |t| rows.push(*t)).unwrap();
        assert!(r.all_passed(), "{:#?}", r.checks);
        // a = c and b = d with perfect anticorrelation between c and d.
        for t in rows {
            let [a, b, c, d] = t.outcomes.map(Option::unwrap);
            assert_eq!((a, b), (c, d));
            assert_eq!(c, -d);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let cfg = EprUndoConfig::new(degrees(CANONICAL).unwrap(), Mode::Unitary, Frame::F, 50, 9).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        epr_undo_sample(&cfg, |t| a.push(*t)).unwrap();
        epr_undo_sample(&cfg, |t| b.push(*t)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        assert_eq!(a[0].to_string().matches(',').count(), 5);
        assert_eq!(a[0].trial, 0);
        assert_eq!(a[50].pair, Some(PairLabel::BC));
    }

    #[test]
    fn zero_trials_is_rejected_for_sampling() {
        let cfg = EprUndoConfig::analytic(CANONICAL).unwrap();
        assert!(epr_undo_sample(&cfg, |_| {}).is_err());
        assert!(epr_undo_run(&cfg, |_| {}).unwrap().all_passed());
    }
}
