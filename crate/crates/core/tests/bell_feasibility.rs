#[path = "support/lp_oracle.rs"]
mod lp_oracle;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use friendsim::bell::{assignment, chsh_all, fine_joint_exists, CorrelationSet, FeasibilityResult, NUM_ASSIGNMENTS};
use friendsim::qsim::TrialRng;
use proptest::prelude::*;

fn decide(corr: [f64; 4], marginals: Option<[f64; 4]>) -> FeasibilityResult {
    let mut c = CorrelationSet::new(corr[0], corr[1], corr[2], corr[3]).unwrap();
    if let Some(m) = marginals {
        c = c.with_marginals(m).unwrap();
    }
    fine_joint_exists(&c).unwrap()
}

fn assert_witness(corr: [f64; 4], marginals: Option<[f64; 4]>, r: &FeasibilityResult) {
    let w = r.witness.expect("feasible result carries a witness");
    let total: f64 = w.iter().sum();
    assert!((total - 1.0).abs() <= 1e-9, "total {total}");
    assert!(w.iter().all(|p| *p >= 0.0));
    // Recompute the moments by hand from the library's assignment order.
    let mut got = [0.0; 8];
    for (k, p) in w.iter().enumerate() {
        let [a, b, c, d] = assignment(k).map(f64::from);
        for (g, v) in got.iter_mut().zip([a * b, b * c, c * d, a * d, a, b, c, d]) {
            *g += p * v;
        }
    }
    for i in 0..4 {
        assert!((got[i] - corr[i]).abs() <= 1e-9, "corr {i}: {} vs {}", got[i], corr[i]);
    }
    if let Some(m) = marginals {
        for i in 0..4 {
            assert!((got[4 + i] - m[i]).abs() <= 1e-9, "mean {i}");
        }
    }
}

fn assert_farkas(corr: [f64; 4], marginals: Option<[f64; 4]>, r: &FeasibilityResult) {
    let f = r.farkas.as_ref().expect("infeasible result carries a certificate");
    assert!(f.value > 0.0);
    for k in 0..NUM_ASSIGNMENTS {
        let [a, b, c, d] = assignment(k).map(f64::from);
        let mut col = vec![1.0, a * b, b * c, c * d, a * d];
        if marginals.is_some() {
            col.extend([a, b, c, d]);
        }
        let dot: f64 = col.iter().zip(&f.multipliers).map(|(x, y)| x * y).sum();
        assert!(dot <= 1e-9, "assignment {k}: y·col = {dot}");
    }
    let mut rhs = vec![1.0];
    rhs.extend(corr);
    if let Some(m) = marginals {
        rhs.extend(m);
    }
    let value: f64 = rhs.iter().zip(&f.multipliers).map(|(x, y)| x * y).sum();
    assert!((value - f.value).abs() < 1e-9);
}

#[test]
fn oracle_self_consistency() {
    // The oracle's own witnesses reproduce their inputs.
    let corr = [0.3, -0.2, 0.5, 0.1];
    let p = lp_oracle::basic_feasible_solution(corr, None).unwrap();
    let m = lp_oracle::moments(&p);
    for i in 0..4 {
        assert!((m[1 + i] - corr[i]).abs() < 1e-9);
    }
    assert!(!lp_oracle::oracle_feasible([-FRAC_1_SQRT_2, -FRAC_1_SQRT_2, -FRAC_1_SQRT_2, FRAC_1_SQRT_2], None));
}

#[test]
fn agrees_with_oracle_on_random_vectors() {
    let mut disagreements = Vec::new();
    for k in 0..1000 {
        let mut rng = TrialRng::new(2024, k);
        let v = [(); 4].map(|_| 2.0 * rng.uniform() - 1.0);
        let r = decide(v, None);
        if r.feasible != lp_oracle::oracle_feasible(v, None) {
            disagreements.push(v);
        }
        if r.feasible {
            assert_witness(v, None, &r);
        } else {
            assert_farkas(v, None, &r);
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
}

#[test]
fn agrees_with_oracle_on_grid() {
    let g = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut n = 0;
    for a in g {
        for b in g {
            for c in g {
                for d in g {
                    let v = [a, b, c, d];
                    let r = decide(v, None);
                    assert_eq!(r.feasible, lp_oracle::oracle_feasible(v, None), "{v:?}");
                    if r.feasible {
                        assert_witness(v, None, &r);
                    }
                    n += 1;
                }
            }
        }
    }
    assert_eq!(n, 625);
}

#[test]
fn agrees_with_oracle_with_marginals() {
    for k in 0..120 {
        let mut rng = TrialRng::new(77, k);
        // Half the cases come from a real distribution, so both answers occur.
        let (corr, means) = if k % 2 == 0 {
            let mut p = [0.0; 16];
            for w in &mut p {
                *w = rng.uniform();
            }
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|w| *w /= s);
            let m = lp_oracle::moments(&p);
            ([m[1], m[2], m[3], m[4]], [m[5], m[6], m[7], m[8]])
        } else {
            ([(); 4].map(|_| 2.0 * rng.uniform() - 1.0), [(); 4].map(|_| 2.0 * rng.uniform() - 1.0))
        };
        let r = decide(corr, Some(means));
        assert_eq!(r.feasible, lp_oracle::oracle_feasible(corr, Some(means)), "{corr:?} {means:?}");
        if r.feasible {
            assert_witness(corr, Some(means), &r);
        } else {
            assert_farkas(corr, Some(means), &r);
        }
    }
}

#[test]
fn quantum_correlations_are_infeasible_with_value_2_sqrt_2() {
    let h = FRAC_1_SQRT_2;
    let r = decide([-h, -h, -h, h], None);
    assert!(!r.feasible);
    let v = r.violated_inequality.unwrap();
    assert!((v.value - 2.0 * SQRT_2).abs() <= 1e-9);
    assert_farkas([-h, -h, -h, h], None, &r);
}

#[test]
fn marginal_infeasibility_without_chsh_violation_names_no_inequality() {
    // ab = bc = cd = 1 forces a = b = c = d, so ad = 1; with ad = 1 the
    // correlations are fine, but means a = 1 and d = −1 cannot both hold.
    let r = decide([1.0, 1.0, 1.0, 1.0], Some([1.0, 1.0, 1.0, -1.0]));
    assert!(!r.feasible);
    assert!(r.violated_inequality.is_none());
    assert!(r.worst_chsh.unwrap().value <= 2.0 + 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decision_matches_chsh_characterization(v in prop::array::uniform4(-1.0f64..=1.0)) {
        let c = CorrelationSet::new(v[0], v[1], v[2], v[3]).unwrap();
        let r = fine_joint_exists(&c).unwrap();
        let worst = chsh_all(&c).unwrap().worst.value;
        // Stay off the facet, where either answer is numerically acceptable.
        prop_assume!((worst - 2.0).abs() > 1e-7);
        prop_assert_eq!(r.feasible, worst < 2.0);
        prop_assert_eq!(r.feasible, lp_oracle::oracle_feasible(v, None));
    }

    #[test]
    fn distributions_are_always_feasible(w in prop::array::uniform16(0.0f64..1.0)) {
        let s: f64 = w.iter().sum();
        prop_assume!(s > 1e-3);
        let p = w.map(|x| x / s);
        let c = CorrelationSet::from_distribution(&p, true).unwrap();
        let r = fine_joint_exists(&c).unwrap();
        prop_assert!(r.feasible);
        let [ab, bc, cd, ad] = c.values().unwrap();
        let m = [0, 1, 2, 3].map(|i| c.marginal(friendsim::bell::Variable::ALL[i]).unwrap());
        assert_witness([ab, bc, cd, ad], Some(m), &r);
    }
}
