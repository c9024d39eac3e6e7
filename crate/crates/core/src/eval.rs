//! Empirical error measurement and the three-route comparison.
//!
//! Two estimators:
//!
//! * exhaustive confusion — enumerate the bounded sparse class, encode
//!   everything, and count colliding pairs. Zero collisions certifies
//!   range-limited injectivity.
//! * design failure rate — Monte Carlo over seeds: generate a random
//!   design and check whether (d-1)-double-disjunctness failed. Failure of
//!   that property is necessary for any confusion, so the rate is an
//!   upper-bound proxy for the code's error probability, which is also
//!   how the planner's epsilon guarantee is stated.
//!
//! Trials derive per-seed streams from a master seed and aggregate
//! order-independently, so runs are reproducible under any parallel
//! schedule.

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{CodecError, ScheduleMatrix};
use crate::design::{check_disjunct, DesignError, DisjunctLevel};
use crate::prob::{
    binomial, derive_seed, generate_design, plan, default_delta, ConstructionParams, ProbError,
};
use crate::tropical::{SparsityClass, TropicalError};

/// Vector-count ceiling for exhaustive confusion checks.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

/// Minimum trials before a normal-approximation interval is reported.
pub const MIN_TRIALS_FOR_INTERVAL: u64 = 100;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("enumeration budget exceeded: {vectors} vectors > {budget}")]
    BudgetExceeded { vectors: BigUint, budget: u64 },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    ExhaustiveConfusion,
    DesignFailureMc,
}

impl std::fmt::Display for EstimateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimateMode::ExhaustiveConfusion => write!(f, "exhaustive_confusion"),
            EstimateMode::DesignFailureMc => write!(f, "design_failure_mc"),
        }
    }
}

/// A failure-rate measurement. For the exhaustive mode `trials` counts
/// vector pairs and the result is a census, so no interval is attached;
/// for Monte Carlo the half-width is the 95% normal approximation,
/// reported from 100 trials up.
#[derive(Debug, Clone)]
pub struct ErrorEstimate {
    pub mode: EstimateMode,
    pub trials: u64,
    pub failures: u64,
    pub estimate: BigRational,
    pub ct_max: Option<u64>,
    pub confidence_halfwidth: Option<f64>,
}

impl ErrorEstimate {
    pub fn estimate_f64(&self) -> f64 {
        self.estimate.to_f64().unwrap_or(f64::NAN)
    }

    /// `key=value` lines, the CLI report format.
    pub fn report_lines(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode={}\n", self.mode));
        out.push_str(&format!("trials={}\n", self.trials));
        out.push_str(&format!("failures={}\n", self.failures));
        out.push_str(&format!("estimate={}\n", self.estimate));
        out.push_str(&format!("estimate_f64={:.6}\n", self.estimate_f64()));
        if let Some(ct) = self.ct_max {
            out.push_str(&format!("ct_max={ct}\n"));
        }
        match self.confidence_halfwidth {
            Some(hw) => out.push_str(&format!("halfwidth95={hw:.6}\n")),
            None => out.push_str("halfwidth95=NA\n"),
        }
        out
    }
}

fn halfwidth95(failures: u64, trials: u64) -> Option<f64> {
    if trials < MIN_TRIALS_FOR_INTERVAL {
        return None;
    }
    let p = failures as f64 / trials as f64;
    Some(1.96 * (p * (1.0 - p) / trials as f64).sqrt())
}

/// Counts colliding pairs `S ⊙ x = S ⊙ y` over all distinct vectors of
/// the bounded sparse class. `estimate = 0` certifies injectivity on the
/// enumerated range.
pub fn exhaustive_confusion(
    schedule: &ScheduleMatrix,
    d: usize,
    ct_max: u64,
) -> Result<ErrorEstimate, EvalError> {
    let cls = SparsityClass::new(schedule.n(), d, ct_max)?;
    let count = cls.vector_count();
    if count > BigUint::from(ENUMERATION_BUDGET) {
        return Err(EvalError::BudgetExceeded { vectors: count, budget: ENUMERATION_BUDGET });
    }

    // group by encoded outcome; a strong digest stands in for the full
    // outcome vector to keep memory flat
    let mut groups: std::collections::HashMap<[u8; 32], u64> = std::collections::HashMap::new();
    let mut total: u64 = 0;
    for x in cls.enumerate() {
        let y = schedule.encode(&x)?;
        let digest: [u8; 32] = Sha256::digest(y.to_string().as_bytes()).into();
        *groups.entry(digest).or_insert(0) += 1;
        total += 1;
    }
    let pairs = |m: u64| m * (m - 1) / 2;
    let failures: u64 = groups.values().map(|&m| pairs(m)).sum();
    let trials = pairs(total);
    let estimate = if trials == 0 {
        BigRational::zero()
    } else {
        BigRational::new(BigInt::from(failures), BigInt::from(trials))
    };
    Ok(ErrorEstimate {
        mode: EstimateMode::ExhaustiveConfusion,
        trials,
        failures,
        estimate,
        ct_max: Some(ct_max),
        confidence_halfwidth: None,
    })
}

/// Monte Carlo over `trials` seeded designs: the fraction failing the
/// (d-1)-doubly-disjunct check. Per-trial seeds derive from `master_seed`,
/// so a fixed master reproduces the exact failure set.
pub fn design_failure_rate(
    params: &ConstructionParams,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate, EvalError> {
    if trials == 0 {
        return Err(EvalError::InvalidParams("need at least one trial".into()));
    }
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<bool, EvalError> {
            let generated = generate_design(params, derive_seed(master_seed, i))?;
            let report =
                check_disjunct(&generated.design, params.d() - 1, DisjunctLevel::DoublyDisjunct)?;
            Ok(!report.holds)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failures = outcomes.iter().filter(|&&failed| failed).count() as u64;
    Ok(ErrorEstimate {
        mode: EstimateMode::DesignFailureMc,
        trials,
        failures,
        estimate: BigRational::new(BigInt::from(failures), BigInt::from(trials)),
        ct_max: None,
        confidence_halfwidth: halfwidth95(failures, trials),
    })
}

/// One row of the three-route comparison table.
#[derive(Debug, Clone)]
pub struct MethodRow {
    pub method: u8,
    pub label: &'static str,
    /// Planner bound on t; route 1 has an unspecified constant.
    pub t_bound: Option<f64>,
    /// Tests actually used by the constructed artifact.
    pub t_actual: Option<u64>,
    pub epsilon_target: f64,
    /// Outcome of the exhaustive property check on the seed design, when
    /// the check budget allowed running it.
    pub property_verified: Option<bool>,
    pub failure_rate: Option<f64>,
    pub halfwidth: Option<f64>,
}

impl MethodRow {
    fn csv_cell_f(v: Option<f64>) -> String {
        v.map_or_else(|| "NA".into(), |x| format!("{x:.6}"))
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            Self::csv_cell_f(self.t_bound),
            self.t_actual.map_or_else(|| "NA".into(), |t| t.to_string()),
            self.epsilon_target,
            self.property_verified
                .map_or_else(|| "NA".into(), |v| v.to_string()),
            Self::csv_cell_f(self.failure_rate),
            Self::csv_cell_f(self.halfwidth),
        )
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub rows: Vec<MethodRow>,
}

impl CompareReport {
    pub fn csv_header() -> &'static str {
        "method,t_bound,t_actual,epsilon_target,property_verified,failure_rate,halfwidth"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub trials: u64,
    pub seed: u64,
    /// Skip exhaustive property checks costing more than this many
    /// (Z, covering) choices.
    pub verify_budget: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { trials: 100, seed: 0, verify_budget: 10_000_000 }
    }
}

/// Choice cost of one exhaustive check, `n * C(n-1, d)`, saturating.
fn check_cost(n: usize, d: usize) -> u64 {
    let choices = BigUint::from(n) * binomial(n - 1, d);
    choices.to_u64().unwrap_or(u64::MAX)
}

/// Smallest Reed-Solomon parameters (q, k) giving at least `n` blocks of
/// disjunctness order >= `d_stage`, minimizing vertex count q^2.
fn ks_params_for(n: usize, d_stage: usize) -> Option<(u64, u32)> {
    let mut best: Option<(u64, u32)> = None;
    for k in 1..=16u32 {
        // q must reach n blocks, support degree-(k-1) separation at
        // order d_stage, and satisfy k <= q
        let mut q = 2u64.max(k as u64);
        if k >= 2 {
            q = q.max((d_stage as u64) * (k as u64 - 1) + 1);
        }
        loop {
            if q > 10_000 {
                break;
            }
            let enough = if k == 1 {
                q >= n as u64
            } else {
                q.checked_pow(k).is_some_and(|nk| nk >= n as u64)
            };
            if enough && crate::gf::prime_power(q).is_some() {
                if best.is_none_or(|(bq, _)| q < bq) {
                    best = Some((q, k));
                }
                break;
            }
            q += 1;
        }
    }
    best
}

/// Builds the three-route comparison: (1) deterministic disjunct design
/// doubled, (2) probabilistic disjunct design doubled, (3) direct
/// probabilistic doubly disjunct design. Bounds are always reported;
/// construction and measurement happen when the exhaustive check fits the
/// budget.
pub fn compare_methods(
    n: usize,
    d: usize,
    epsilon: f64,
    opts: &CompareOptions,
) -> Result<CompareReport, EvalError> {
    let planned = plan(n, d, epsilon)?;
    let d_stage = d - 1;
    let can_verify = d_stage + 1 < n && check_cost(n, d_stage) <= opts.verify_budget;
    // d = 1 collapses the weight-system support, so the probabilistic
    // routes report bounds only
    let can_construct = can_verify && d >= 2;

    // route 1: Reed-Solomon disjunct stage, then doubling; zero error
    let mut row1 = MethodRow {
        method: 1,
        label: "deterministic disjunct + doubling",
        t_bound: None,
        t_actual: None,
        epsilon_target: 0.0,
        property_verified: None,
        failure_rate: None,
        halfwidth: None,
    };
    if let Some((q, k)) = ks_params_for(n, d_stage) {
        row1.t_actual = Some(2 * q * q);
        if can_verify {
            let stage = crate::design::kautz_singleton(q, k)?.take_blocks(n)?;
            let doubled = stage.double();
            let report = check_disjunct(&doubled, d_stage, DisjunctLevel::DoublyDisjunct)?;
            row1.property_verified = Some(report.holds);
            if report.holds {
                row1.failure_rate = Some(0.0);
            }
        }
    }

    // route 2: probabilistic disjunct stage at (1+delta)/t, doubled
    let stage_bound = planned.t_method2 / 2.0;
    let t_stage = stage_bound.ceil() as usize + 1;
    let mut row2 = MethodRow {
        method: 2,
        label: "probabilistic disjunct + doubling",
        t_bound: Some(planned.t_method2),
        t_actual: Some(2 * t_stage as u64),
        epsilon_target: epsilon,
        property_verified: None,
        failure_rate: None,
        halfwidth: None,
    };
    if can_construct && opts.trials > 0 {
        let params = ConstructionParams::new(
            n,
            d,
            t_stage,
            BigRational::from_float(default_delta(n, d, epsilon))
                .expect("delta is finite"),
            DisjunctLevel::Disjunct,
        )?;
        let outcomes: Vec<bool> = (0..opts.trials)
            .into_par_iter()
            .map(|i| -> Result<bool, EvalError> {
                let generated = generate_design(&params, derive_seed(opts.seed, i))?;
                let doubled = generated.design.double();
                Ok(!check_disjunct(&doubled, d_stage, DisjunctLevel::DoublyDisjunct)?.holds)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let failures = outcomes.iter().filter(|&&f| f).count() as u64;
        row2.property_verified = Some(!outcomes[0]);
        row2.failure_rate = Some(failures as f64 / opts.trials as f64);
        row2.halfwidth = halfwidth95(failures, opts.trials);
    }

    // route 3: direct doubly disjunct construction
    let mut row3 = MethodRow {
        method: 3,
        label: "probabilistic doubly disjunct",
        t_bound: Some(planned.t_method3),
        t_actual: Some(planned.t_recommended as u64),
        epsilon_target: epsilon,
        property_verified: None,
        failure_rate: None,
        halfwidth: None,
    };
    if can_construct && opts.trials > 0 {
        let params = ConstructionParams::with_default_delta(
            n,
            d,
            planned.t_recommended,
            epsilon,
            DisjunctLevel::DoublyDisjunct,
        )?;
        let estimate = design_failure_rate(&params, opts.trials, derive_seed(opts.seed, 1 << 32))?;
        let first = generate_design(&params, derive_seed(derive_seed(opts.seed, 1 << 32), 0))?;
        row3.property_verified = Some(
            check_disjunct(&first.design, d_stage, DisjunctLevel::DoublyDisjunct)?.holds,
        );
        row3.failure_rate = Some(estimate.estimate_f64());
        row3.halfwidth = estimate.confidence_halfwidth;
    }

    debug_assert!(row2.t_bound.unwrap() > row3.t_bound.unwrap());
    Ok(CompareReport { n, d, epsilon, rows: vec![row1, row2, row3] })
}
