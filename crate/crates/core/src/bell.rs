//! CHSH functionals, joint-distribution feasibility over the 16 sign
//! assignments of four ±1 variables, and estimators for sampled outcomes.
//!
//! Feasibility is a phase-1 simplex (Bland's rule, so it terminates) on
//! `{p ≥ 0, Σp = 1, Σ_k s_i(k) s_j(k) p_k = E_ij, Σ_k s_i(k) p_k = m_i}`.
//! A feasible answer carries a witness distribution; an infeasible one
//! carries a Farkas vector `y` with `y·column ≤ 0` for every assignment and
//! `y·rhs > 0`, plus the most violated CHSH inequality when there is one.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const NUM_ASSIGNMENTS: usize = 16;

/// Decision tolerance for the phase-1 objective.
const PHASE_ONE_TOL: f64 = 1e-10;
/// Witnesses must reproduce every constraint this closely.
pub const WITNESS_TOL: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-12;
const MAX_PIVOTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    A,
    B,
    C,
    D,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::A, Variable::B, Variable::C, Variable::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["a", "b", "c", "d"][self.index()]
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .into_iter()
            .find(|v| v.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown variable {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairLabel {
    AB,
    BC,
    CD,
    AD,
}

impl PairLabel {
    pub const ALL: [PairLabel; 4] = [PairLabel::AB, PairLabel::BC, PairLabel::CD, PairLabel::AD];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn variables(self) -> (Variable, Variable) {
        use Variable::*;
        match self {
            PairLabel::AB => (A, B),
            PairLabel::BC => (B, C),
            PairLabel::CD => (C, D),
            PairLabel::AD => (A, D),
        }
    }

    pub fn name(self) -> &'static str {
        ["ab", "bc", "cd", "ad"][self.index()]
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| c.is_ascii_alphabetic()).collect();
        let t = t.to_ascii_lowercase();
        PairLabel::ALL
            .into_iter()
            .find(|p| {
                let (x, y) = p.variables();
                t == format!("{}{}", x.name(), y.name()) || t == format!("{}{}", y.name(), x.name())
            })
            .ok_or_else(|| Error::Config(format!("unknown pair {s:?}")))
    }
}

/// ±1 values `(a, b, c, d)` of assignment `k`: bit 3 → a, …, bit 0 → d, set bit = −1.
pub fn assignment(k: usize) -> [i8; 4] {
    let s = |bit: usize| if k & (1 << bit) != 0 { -1 } else { 1 };
    [s(3), s(2), s(1), s(0)]
}

fn check_range(what: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && (-1.0..=1.0).contains(&v)) {
        return Err(Error::Config(format!("{what} = {v} is outside [-1, 1]")));
    }
    Ok(())
}

/// Pairwise correlations keyed by pair label, plus optional marginals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CorrelationSet {
    values: [Option<f64>; 4],
    marginals: [Option<f64>; 4],
}

impl CorrelationSet {
    pub fn new(ab: f64, bc: f64, cd: f64, ad: f64) -> Result<Self> {
        let mut s = Self::default();
        for (p, v) in PairLabel::ALL.into_iter().zip([ab, bc, cd, ad]) {
            s.insert(p, v)?;
        }
        Ok(s)
    }

    /// Adds a correlation. Re-inserting the same value is allowed; a
    /// different value for an existing pair is rejected.
    pub fn insert(&mut self, pair: PairLabel, value: f64) -> Result<()> {
        check_range(&format!("corr({pair})"), value)?;
        match self.values[pair.index()] {
            Some(old) if old != value => Err(Error::DuplicateConstraint(format!(
                "corr({pair}) given as both {old} and {value}"
            ))),
            _ => {
                self.values[pair.index()] = Some(value);
                Ok(())
            }
        }
    }

    pub fn insert_marginal(&mut self, var: Variable, value: f64) -> Result<()> {
        check_range(&format!("mean({})", var.name()), value)?;
        match self.marginals[var.index()] {
            Some(old) if old != value => Err(Error::DuplicateConstraint(format!(
                "mean({}) given as both {old} and {value}",
                var.name()
            ))),
            _ => {
                self.marginals[var.index()] = Some(value);
                Ok(())
            }
        }
    }

    pub fn with_marginals(mut self, m: [f64; 4]) -> Result<Self> {
        for (v, x) in Variable::ALL.into_iter().zip(m) {
            self.insert_marginal(v, x)?;
        }
        Ok(self)
    }

    pub fn get(&self, pair: PairLabel) -> Option<f64> {
        self.values[pair.index()]
    }

    pub fn marginal(&self, var: Variable) -> Option<f64> {
        self.marginals[var.index()]
    }

    pub fn has_marginals(&self) -> bool {
        self.marginals.iter().any(Option::is_some)
    }

    fn require(&self, pair: PairLabel) -> Result<f64> {
        self.get(pair).ok_or_else(|| Error::MissingPair(pair.name().to_string()))
    }

    /// All four values in `ab, bc, cd, ad` order.
    pub fn values(&self) -> Result<[f64; 4]> {
        Ok([
            self.require(PairLabel::AB)?,
            self.require(PairLabel::BC)?,
            self.require(PairLabel::CD)?,
            self.require(PairLabel::AD)?,
        ])
    }

    /// Correlations (and, if `with_marginals`, means) of a distribution over
    /// the 16 assignments.
    pub fn from_distribution(p: &[f64; NUM_ASSIGNMENTS], with_marginals: bool) -> Result<Self> {
        let mut s = Self::default();
        for pair in PairLabel::ALL {
            let (x, y) = pair.variables();
            let v: f64 = (0..NUM_ASSIGNMENTS)
                .map(|k| {
                    let a = assignment(k);
                    f64::from(a[x.index()] * a[y.index()]) * p[k]
                })
                .sum();
            s.insert(pair, v.clamp(-1.0, 1.0))?;
        }
        if with_marginals {
            for var in Variable::ALL {
                let v: f64 = (0..NUM_ASSIGNMENTS)
                    .map(|k| f64::from(assignment(k)[var.index()]) * p[k])
                    .sum();
                s.insert_marginal(var, v.clamp(-1.0, 1.0))?;
            }
        }
        Ok(s)
    }
}

/// Sign placement in `±ab ± bc ± cd ± ad`, named by the pair carrying the
/// single minus sign. `MinusAD` is `ab + bc + cd − ad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChshVariant {
    MinusAB,
    MinusBC,
    MinusCD,
    MinusAD,
}

impl ChshVariant {
    pub const ALL: [ChshVariant; 4] = [
        ChshVariant::MinusAB,
        ChshVariant::MinusBC,
        ChshVariant::MinusCD,
        ChshVariant::MinusAD,
    ];

    pub fn signs(self) -> [f64; 4] {
        let mut s = [1.0; 4];
        s[self as usize] = -1.0;
        s
    }

    pub fn name(self) -> &'static str {
        ["minus-ab", "minus-bc", "minus-cd", "minus-ad"][self as usize]
    }
}

impl FromStr for ChshVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChshVariant::ALL
            .into_iter()
            .find(|v| v.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown CHSH variant {s:?}")))
    }
}

pub fn chsh_value(corrs: &CorrelationSet, variant: ChshVariant) -> Result<f64> {
    let v = corrs.values()?;
    Ok(variant.signs().iter().zip(v).map(|(s, x)| s * x).sum())
}

/// One of the eight inequalities `sign · S_variant ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshInequality {
    pub variant: ChshVariant,
    pub sign: i8,
    /// `sign · S_variant`
    pub value: f64,
}

impl ChshInequality {
    pub fn id(&self) -> String {
        format!("{}{}", if self.sign < 0 { "-" } else { "+" }, self.variant.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshSummary {
    pub values: [(ChshVariant, f64); 4],
    /// Largest of the eight signed values.
    pub worst: ChshInequality,
}

pub fn chsh_all(corrs: &CorrelationSet) -> Result<ChshSummary> {
    let mut values = [(ChshVariant::MinusAB, 0.0); 4];
    let mut worst: Option<ChshInequality> = None;
    for (i, v) in ChshVariant::ALL.into_iter().enumerate() {
        let s = chsh_value(corrs, v)?;
        values[i] = (v, s);
        for sign in [1i8, -1] {
            let value = f64::from(sign) * s;
            if worst.map_or(true, |w| value > w.value) {
                worst = Some(ChshInequality { variant: v, sign, value });
            }
        }
    }
    Ok(ChshSummary { values, worst: worst.expect("four variants") })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    /// Constraint names, aligned with `multipliers`.
    pub rows: Vec<String>,
    pub multipliers: Vec<f64>,
    /// `multipliers · rhs`, strictly positive.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub witness: Option<[f64; NUM_ASSIGNMENTS]>,
    /// Set when infeasible and some CHSH inequality exceeds 2 (always the
    /// case without marginal constraints).
    pub violated_inequality: Option<ChshInequality>,
    pub farkas: Option<FarkasCertificate>,
    /// Names of the constraints that were imposed.
    pub constraints: Vec<String>,
    /// Worst CHSH inequality, when all four pairs are present.
    pub worst_chsh: Option<ChshInequality>,
}

struct ConstraintSystem {
    names: Vec<String>,
    rows: Vec<[f64; NUM_ASSIGNMENTS]>,
    rhs: Vec<f64>,
}

fn constraint_system(corrs: &CorrelationSet) -> ConstraintSystem {
    let mut names = vec!["normalization".to_string()];
    let mut rows = vec![[1.0; NUM_ASSIGNMENTS]];
    let mut rhs = vec![1.0];
    for pair in PairLabel::ALL {
        if let Some(v) = corrs.get(pair) {
            let (x, y) = pair.variables();
            let mut row = [0.0; NUM_ASSIGNMENTS];
            for (k, r) in row.iter_mut().enumerate() {
                let a = assignment(k);
                *r = f64::from(a[x.index()] * a[y.index()]);
            }
            names.push(format!("corr({pair})"));
            rows.push(row);
            rhs.push(v);
        }
    }
    for var in Variable::ALL {
        if let Some(v) = corrs.marginal(var) {
            let mut row = [0.0; NUM_ASSIGNMENTS];
            for (k, r) in row.iter_mut().enumerate() {
                *r = f64::from(assignment(k)[var.index()]);
            }
            names.push(format!("mean({})", var.name()));
            rows.push(row);
            rhs.push(v);
        }
    }
    ConstraintSystem { names, rows, rhs }
}

struct PhaseOne {
    x: [f64; NUM_ASSIGNMENTS],
    objective: f64,
    /// Dual multipliers in the original row orientation.
    duals: Vec<f64>,
}

/// Minimizes the sum of artificials for `A x = b, x ≥ 0` with Bland's rule.
fn phase_one(rows: &[[f64; NUM_ASSIGNMENTS]], rhs: &[f64]) -> Result<PhaseOne> {
    let m = rows.len();
    let n = NUM_ASSIGNMENTS;
    let width = n + m + 1;
    let flip: Vec<f64> = rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = flip[i] * rows[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = flip[i] * rhs[i];
    }
    let mut cost = vec![0.0; width];
    for j in 0..n {
        cost[j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    for _ in 0..MAX_PIVOTS {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -PIVOT_EPS) else {
            let mut x = [0.0; NUM_ASSIGNMENTS];
            let mut objective = 0.0;
            for (i, &bv) in basis.iter().enumerate() {
                let v = t[i][width - 1];
                if bv < n {
                    x[bv] = v.max(0.0);
                } else {
                    objective += v;
                }
            }
            let duals = (0..m).map(|i| flip[i] * (1.0 - cost[n + i])).collect();
            return Ok(PhaseOne { x, objective, duals });
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_EPS
                            || (ratio <= lr + PIVOT_EPS && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let (r, _) = leave
            .ok_or_else(|| Error::Numerical("phase-one simplex reported an unbounded ray".into()))?;
        let p = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[enter] != 0.0 {
                let f = row[enter];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = cost[enter];
        for (v, pv) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        basis[r] = enter;
    }
    Err(Error::Numerical("phase-one simplex exceeded its pivot budget".into()))
}

/// Dense Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn max_residual(sys: &ConstraintSystem, p: &[f64; NUM_ASSIGNMENTS]) -> f64 {
    sys.rows
        .iter()
        .zip(&sys.rhs)
        .map(|(row, b)| (row.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() - b).abs())
        .fold(0.0, f64::max)
}

/// The point of `{A p = b}` nearest the uniform distribution, if it is
/// nonnegative. Gives the symmetric witness when one exists.
fn central_witness(sys: &ConstraintSystem) -> Option<[f64; NUM_ASSIGNMENTS]> {
    let u = 1.0 / NUM_ASSIGNMENTS as f64;
    let m = sys.rows.len();
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| sys.rows[i].iter().zip(&sys.rows[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let resid: Vec<f64> = (0..m)
        .map(|i| sys.rhs[i] - sys.rows[i].iter().sum::<f64>() * u)
        .collect();
    let lambda = solve_dense(gram, resid)?;
    let mut p = [u; NUM_ASSIGNMENTS];
    for (k, pk) in p.iter_mut().enumerate() {
        *pk += (0..m).map(|i| sys.rows[i][k] * lambda[i]).sum::<f64>();
        if *pk < -1e-15 {
            return None;
        }
        *pk = pk.max(0.0);
    }
    (max_residual(sys, &p) <= 1e-12).then_some(p)
}

/// Decides whether some distribution over the 16 assignments reproduces the
/// given correlations (and marginals, if any).
pub fn fine_joint_exists(corrs: &CorrelationSet) -> Result<FeasibilityResult> {
    let sys = constraint_system(corrs);
    let worst_chsh = chsh_all(corrs).ok().map(|s| s.worst);
    let sol = phase_one(&sys.rows, &sys.rhs)?;
    if sol.objective <= PHASE_ONE_TOL {
        let witness = central_witness(&sys).unwrap_or(sol.x);
        let resid = max_residual(&sys, &witness);
        if resid > WITNESS_TOL {
            return Err(Error::Numerical(format!(
                "feasibility witness misses a constraint by {resid:e}"
            )));
        }
        return Ok(FeasibilityResult {
            feasible: true,
            witness: Some(witness),
            violated_inequality: None,
            farkas: None,
            constraints: sys.names,
            worst_chsh,
        });
    }
    let value: f64 = sol.duals.iter().zip(&sys.rhs).map(|(y, b)| y * b).sum();
    Ok(FeasibilityResult {
        feasible: false,
        witness: None,
        violated_inequality: worst_chsh.filter(|w| w.value > 2.0 + WITNESS_TOL),
        farkas: Some(FarkasCertificate { rows: sys.names.clone(), multipliers: sol.duals, value }),
        constraints: sys.names,
        worst_chsh,
    })
}

/// One sampled trial: `±1` outcomes for `a, b, c, d`, `None` where unsampled.
pub type OutcomeRow = [Option<i8>; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleCorrelation {
    pub estimate: f64,
    /// Sample standard deviation (N − 1 normalization) over √N.
    pub std_error: f64,
    pub n: u64,
}

/// Order-insensitive integer tallies of pair products.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorrelationTally {
    pub n: [u64; 4],
    pub sum: [i64; 4],
}

impl CorrelationTally {
    pub fn add(&mut self, row: &OutcomeRow) {
        for pair in PairLabel::ALL {
            let (x, y) = pair.variables();
            if let (Some(u), Some(v)) = (row[x.index()], row[y.index()]) {
                self.n[pair.index()] += 1;
                self.sum[pair.index()] += i64::from(u * v);
            }
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for i in 0..4 {
            self.n[i] += other.n[i];
            self.sum[i] += other.sum[i];
        }
    }

    pub fn correlation(&self, pair: PairLabel) -> Result<SampleCorrelation> {
        let n = self.n[pair.index()];
        if n < 2 {
            return Err(Error::InsufficientData(format!(
                "{n} complete samples for pair {pair}; need at least 2"
            )));
        }
        let nf = n as f64;
        let s = self.sum[pair.index()] as f64;
        let mean = s / nf;
        // Products are ±1, so Σx² = n.
        let var = ((nf - s * s / nf) / (nf - 1.0)).max(0.0);
        Ok(SampleCorrelation { estimate: mean, std_error: (var / nf).sqrt(), n })
    }
}

/// Mean of `out_x · out_y` over rows where both are present.
pub fn correlation_from_samples(records: &[OutcomeRow], pair: PairLabel) -> Result<SampleCorrelation> {
    let mut t = CorrelationTally::default();
    for r in records {
        t.add(r);
    }
    t.correlation(pair)
}
