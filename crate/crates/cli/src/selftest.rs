//! Every acceptance criterion as a named block of checks (`c1` … `c9`).

use std::f64::consts::{FRAC_PI_4, SQRT_2, TAU};

use friendsim::bell::{chsh_all, fine_joint_exists, CorrelationSet, PairLabel};
use friendsim::qsim::TrialRng;
use friendsim::report::{Check, ScenarioReport};
use friendsim::scenarios::brukner::{brukner_chsh, brukner_extended_report, brukner_preliminary_run, BruknerVariant};
use friendsim::scenarios::epr::{
    chsh_sum, epr_analytic_report, epr_undo_analytic, epr_undo_sample, EprUndoConfig, Frame, Mode,
};
use friendsim::scenarios::fr::{fr_appendix_comparison, fr_audit_report, fr_outcome_table, FrObservation};
use friendsim::observables::DirectionAngle;
use friendsim::Result;

use crate::document::ReportDocument;

pub const CANONICAL_DEG: [f64; 4] = [0.0, 45.0, 90.0, 135.0];
pub const RANDOM_ANGLE_SETS: u64 = 20;
pub const MC_TRIALS: u64 = 100_000;
pub const RANDOM_CORRELATION_VECTORS: u64 = 1000;
pub const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

// Stream offsets so the random inputs of different criteria never share draws.
const ANGLE_STREAM: u64 = 6;
const CORRELATION_STREAM: u64 = 8;

pub fn criterion_1() -> Result<ScenarioReport> {
    brukner_preliminary_run()
}

pub fn criterion_2() -> Result<ScenarioReport> {
    let mut r = brukner_extended_report(FRAC_PI_4, BruknerVariant::MinusAxBz)?;
    let chsh = brukner_chsh(FRAC_PI_4)?;
    r.check(Check::close("abs_s_minus_axbz", 2.0 * SQRT_2, chsh.value(BruknerVariant::MinusAxBz).abs(), 1e-9))
        .check(Check::close("s_literal", 0.0, chsh.value(BruknerVariant::Literal), 1e-12));
    Ok(r)
}

pub fn criterion_3() -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("fr-probabilities");
    r.absorb("zeus_on", fr_outcome_table(true)?);
    r.absorb("zeus_off", fr_outcome_table(false)?);
    Ok(r)
}

pub fn criterion_4() -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("fr-audit");
    r.absorb("zeus_on", fr_audit_report(true, FrObservation::ok_ok())?);
    let w_ok = FrObservation { z: None, ..FrObservation::ok_ok() };
    r.absorb("zeus_off", fr_audit_report(false, w_ok)?);
    Ok(r)
}

pub fn criterion_5() -> Result<ScenarioReport> {
    fr_appendix_comparison()
}

pub fn random_angle_sets(seed: u64) -> Result<Vec<[DirectionAngle<f64>; 4]>> {
    (0..RANDOM_ANGLE_SETS)
        .map(|k| {
            let mut rng = TrialRng::new(seed.wrapping_add(ANGLE_STREAM), k);
            let mut set = [DirectionAngle::default(); 4];
            for a in &mut set {
                *a = DirectionAngle::from_radians(TAU * rng.uniform())?;
            }
            Ok(set)
        })
        .collect()
}

pub fn criterion_6(seed: u64) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("epr-undo-analytic");
    let canonical = EprUndoConfig::analytic(CANONICAL_DEG)?;
    let s = chsh_sum(&epr_undo_analytic(&canonical)?.correlations)?;
    r.absorb("canonical", epr_analytic_report(&canonical)?);
    r.check(Check::close("canonical_abs_chsh", 2.0 * SQRT_2, s.abs(), 1e-9));

    let (mut max_err, mut min_fid, mut max_frame) = (0.0f64, 1.0f64, 0.0f64);
    for angles in random_angle_sets(seed)? {
        let cfg = EprUndoConfig::new(angles, Mode::Unitary, Frame::F, 0, seed)?;
        let a = epr_undo_analytic(&cfg)?;
        for p in PairLabel::ALL {
            let got = a.correlations.get(p).unwrap_or(f64::NAN);
            max_err = max_err.max((got - cfg.singlet_correlation(p)).abs());
        }
        min_fid = min_fid.min(a.psi_fidelity);
        max_frame = max_frame.max(a.frame_defect);
    }
    r.parameter("random_angle_sets", RANDOM_ANGLE_SETS);
    r.result("random_max_correlation_error", max_err)
        .result("random_min_psi_fidelity", min_fid)
        .result("random_max_frame_defect", max_frame);
    r.check(Check::at_most("random_correlations_match_cosine", 0.0, max_err, 1e-9))
        .check(Check::at_least("random_psi3_equals_psi1", 1.0, min_fid, 1e-12))
        .check(Check::at_most("random_frame_invariance", 0.0, max_frame, 1e-12));
    Ok(r)
}

pub fn monte_carlo_config(mode: Mode, trials: u64, seed: u64) -> Result<EprUndoConfig> {
    EprUndoConfig::new(friendsim::scenarios::epr::degrees(CANONICAL_DEG)?, mode, Frame::F, trials, seed)
}

pub fn criterion_7(seed: u64) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("epr-undo-monte-carlo");
    r.parameter("trials", MC_TRIALS);
    r.absorb("unitary", epr_undo_sample(&monte_carlo_config(Mode::Unitary, MC_TRIALS, seed)?, |_| {})?);
    r.absorb("collapse", epr_undo_sample(&monte_carlo_config(Mode::Collapse, MC_TRIALS, seed)?, |_| {})?);
    Ok(r)
}

/// Fine's theorem as a decision rule: all eight CHSH forms within 2.
pub fn chsh_decision(c: &CorrelationSet) -> Result<bool> {
    Ok(chsh_all(c)?.worst.value <= 2.0 + 1e-9)
}

/// Largest deviation of the witness's correlations from the inputs.
pub fn witness_error(c: &CorrelationSet, witness: &[f64; 16]) -> Result<f64> {
    let back = CorrelationSet::from_distribution(witness, false)?;
    let (want, got) = (c.values()?, back.values()?);
    Ok(want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn grid_vectors() -> Vec<[f64; 4]> {
    let mut out = Vec::with_capacity(GRID.len().pow(4));
    for a in GRID {
        for b in GRID {
            for c in GRID {
                for d in GRID {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

pub fn random_vectors(seed: u64) -> Vec<[f64; 4]> {
    (0..RANDOM_CORRELATION_VECTORS)
        .map(|k| {
            let mut rng = TrialRng::new(seed.wrapping_add(CORRELATION_STREAM), k);
            [(); 4].map(|_| 2.0 * rng.uniform() - 1.0)
        })
        .collect()
}

pub fn criterion_8(seed: u64) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("fine-checker");
    let vectors: Vec<[f64; 4]> = random_vectors(seed).into_iter().chain(grid_vectors()).collect();
    let (mut agree, mut feasible, mut max_witness) = (0usize, 0usize, 0.0f64);
    for v in &vectors {
        let c = CorrelationSet::new(v[0], v[1], v[2], v[3])?;
        let res = fine_joint_exists(&c)?;
        if res.feasible == chsh_decision(&c)? {
            agree += 1;
        }
        if let Some(w) = res.witness {
            feasible += 1;
            max_witness = max_witness.max(witness_error(&c, &w)?);
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let quantum = fine_joint_exists(&CorrelationSet::new(-h, -h, -h, h)?)?;
    let violated = quantum.violated_inequality.as_ref().map_or(f64::NAN, |v| v.value);
    r.parameter("random_vectors", RANDOM_CORRELATION_VECTORS).parameter("grid_points", GRID.len().pow(4));
    r.result("agreements", agree)
        .result("feasible_cases", feasible)
        .result("max_witness_error", max_witness)
        .result("quantum_feasible", quantum.feasible)
        .result("quantum_violated_inequality", quantum.violated_inequality.map(|v| v.id()))
        .result("quantum_certificate_value", violated)
        .result("quantum_farkas_value", quantum.farkas.map(|f| f.value));
    r.check(Check::close("decision_agreement", vectors.len() as f64, agree as f64, 0.0))
        .check(Check::at_most("witness_reproduces_inputs", 0.0, max_witness, 1e-9))
        .check(Check::flag("quantum_infeasible", false, quantum.feasible))
        .check(Check::close("quantum_certificate_value", 2.0 * SQRT_2, violated, 1e-9));
    Ok(r)
}

/// Same-seed sample reports and record streams must match byte for byte.
pub fn criterion_9(seed: u64) -> Result<ScenarioReport> {
    let run = |mode| -> Result<(String, Vec<String>)> {
        let mut rows = Vec::new();
        let rep = epr_undo_sample(&monte_carlo_config(mode, 1000, seed)?, |t| rows.push(t.to_string()))?;
        Ok((ReportDocument::from(&rep).to_json(), rows))
    };
    let mut r = ScenarioReport::new("determinism");
    for mode in [Mode::Unitary, Mode::Collapse] {
        let same = run(mode)? == run(mode)?;
        r.check(Check::flag(format!("{}_repeatable", mode.name()), true, same));
    }
    Ok(r)
}

pub fn selftest(seed: u64) -> Result<ScenarioReport> {
    let mut r = ScenarioReport::new("selftest");
    r.parameter("seed", seed);
    r.absorb("c1_brukner_preliminary", criterion_1()?);
    r.absorb("c2_brukner_extended", criterion_2()?);
    r.absorb("c3_fr_probabilities", criterion_3()?);
    r.absorb("c4_fr_audit", criterion_4()?);
    r.absorb("c5_appendix", criterion_5()?);
    r.absorb("c6_epr_analytic", criterion_6(seed)?);
    r.absorb("c7_epr_monte_carlo", criterion_7(seed)?);
    r.absorb("c8_fine_checker", criterion_8(seed)?);
    r.absorb("c9_determinism", criterion_9(seed)?);
    Ok(r)
}
