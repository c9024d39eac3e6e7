//! Random schedule-design generation and test-count planning.
//!
//! Rows of the schedule support are drawn i.i.d. from a weight-symmetric
//! distribution over nonzero binary vectors: vectors of equal Hamming
//! weight get equal probability, so the law is a vector `p` of per-vector
//! probabilities indexed by weight. The two defining constraints are
//!
//! ```text
//!   sum_w C(n,w)   * p_w = 1                 (total mass)
//!   sum_w C(n-d,w-1) * p_w = (c + delta)/t   (marginal of the pattern
//!                                             s_{i1}=1, s_{i2..id}=0)
//! ```
//!
//! with `c = 2` when targeting double disjunctness and `c = 1` for plain
//! disjunctness. Feasibility of a nonnegative solution is decided by the
//! exact ratio test `C(n-d, w*-1)/C(n, w*) > (c+delta)/t` at
//! `w* = floor(n/d)`, the maximizer of that ratio; the closed-form witness
//! puts mass on weights `{w*, n}` only. Everything is exact rational: no
//! tolerance anywhere.
//!
//! Planning converts a target error `epsilon` into a recommended test
//! count via concentration bounds; all logarithms there are natural
//! (forced by the `exp(-mu*delta^2/2)` tail shape).

use std::f64::consts::{E, LN_2};
use std::fmt;

use num::bigint::{BigInt, BigUint};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::design::{BlockDesign, DisjunctLevel};

#[derive(Debug, Error, PartialEq)]
pub enum ProbError {
    #[error("infeasible: weight-ratio maximum {lhs} is not strictly above the target ({c}+Δ)/t = {rhs}")]
    Infeasible { lhs: Box<BigRational>, rhs: Box<BigRational>, c: usize },
    #[error("degenerate weight support at d=1: the system needs (2+Δ)/t = 1 exactly, got {rhs}")]
    DegenerateWeightSupport { rhs: Box<BigRational> },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Exact binomial coefficient; 0 when k > n.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

fn big_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The weight-ratio function `C(n-d, w-1) / C(n, w)`, exact. Zero when
/// `w-1 > n-d`. Requires `1 <= w <= n` and `d < n`.
pub fn f_ratio(n: usize, d: usize, w: usize) -> BigRational {
    assert!(w >= 1 && w <= n && d < n, "need 1 <= w <= n and d < n");
    big_ratio(binomial(n - d, w - 1), binomial(n, w))
}

/// Where `f_ratio` peaks: `floor(n/d)`. Verified against brute force in
/// tests; when a tie with `w*+1` occurs this is the smaller maximizer.
pub fn argmax_f(n: usize, d: usize) -> usize {
    assert!(d >= 1 && d < n, "need 1 <= d < n");
    n / d
}

/// Parameters of one randomized construction run.
///
/// `d` is the number of infected the code must handle; the generated
/// design is checked at order `d-1`. `delta` is the slack above the
/// minimum row mass; [`default_delta`] gives the default used by the planner.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionParams {
    n: usize,
    d: usize,
    t: usize,
    delta: BigRational,
    target: DisjunctLevel,
    epsilon: Option<f64>,
}

impl ConstructionParams {
    pub fn new(
        n: usize,
        d: usize,
        t: usize,
        delta: BigRational,
        target: DisjunctLevel,
    ) -> Result<Self, ProbError> {
        if n < 2 || d == 0 || d >= n {
            return Err(ProbError::InvalidParams(format!(
                "need 1 <= d < n with n >= 2, got n={n}, d={d}"
            )));
        }
        if t == 0 {
            return Err(ProbError::InvalidParams(
                "t = 0 would generate an empty design".into(),
            ));
        }
        if delta.is_negative() {
            return Err(ProbError::InvalidParams(format!("delta must be >= 0, got {delta}")));
        }
        Ok(ConstructionParams { n, d, t, delta, target, epsilon: None })
    }

    /// Uses the default slack `delta = 2 + 2 ln((d/eps) C(n,d))` for the
    /// given error budget.
    pub fn with_default_delta(
        n: usize,
        d: usize,
        t: usize,
        epsilon: f64,
        target: DisjunctLevel,
    ) -> Result<Self, ProbError> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ProbError::InvalidParams(format!(
                "epsilon must be in (0,1), got {epsilon}"
            )));
        }
        let delta = BigRational::from_float(default_delta(n, d, epsilon))
            .expect("delta is finite");
        let mut params = Self::new(n, d, t, delta, target)?;
        params.epsilon = Some(epsilon);
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn target(&self) -> DisjunctLevel {
        self.target
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Right-hand side of the pattern constraint: `(c + delta) / t`.
    pub fn rhs(&self) -> BigRational {
        let c = BigRational::from_integer(BigInt::from(self.target.required_residual()));
        (c + &self.delta) / BigRational::from_integer(BigInt::from(self.t))
    }
}

/// Strict exact-rational feasibility test: true iff
/// `f_ratio(n, d, floor(n/d)) > (c+delta)/t`. Boundary equality is
/// rejected (the planner always leaves slack).
pub fn feasible(params: &ConstructionParams) -> bool {
    f_ratio(params.n, params.d, argmax_f(params.n, params.d)) > params.rhs()
}

/// Weight-symmetric row law: `p[w-1]` is the probability of each
/// individual weight-w vector, `w` in `1..=n`. Weight 0 carries no mass,
/// so no generated test is ever empty.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    n: usize,
    p: Vec<BigRational>,
}

impl WeightDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Per-vector probability at Hamming weight `w`.
    pub fn p(&self, w: usize) -> &BigRational {
        &self.p[w - 1]
    }

    /// Total mass of the weight-w class: `C(n,w) * p_w`.
    pub fn class_mass(&self, w: usize) -> BigRational {
        big_ratio(binomial(self.n, w), BigUint::one()) * self.p(w)
    }

    pub fn support_weights(&self) -> Vec<usize> {
        (1..=self.n).filter(|&w| !self.p(w).is_zero()).collect()
    }

    /// Exact invariant check: masses sum to one and nothing is negative.
    pub fn validate(&self) -> Result<(), ProbError> {
        if self.p.iter().any(|p| p.is_negative()) {
            return Err(ProbError::InvalidParams("negative weight probability".into()));
        }
        let total: BigRational = (1..=self.n).map(|w| self.class_mass(w)).sum();
        if total != BigRational::one() {
            return Err(ProbError::InvalidParams(format!("masses sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Evaluates the pattern-constraint row `sum_w C(n-d, w-1) p_w`.
    pub fn pattern_mass(&self, d: usize) -> BigRational {
        (1..=self.n)
            .map(|w| big_ratio(binomial(self.n - d, w - 1), BigUint::one()) * self.p(w))
            .sum()
    }
}

/// Closed-form nonnegative solution of the two-constraint system,
/// supported on weights `{floor(n/d), n}`:
///
/// ```text
///   p_{w*} = (c + delta) / (t * C(n-d, w*-1)),
///   p_n    = 1 - C(n, w*) * p_{w*}.
/// ```
///
/// Weight n has zero coefficient in the pattern row (for d >= 2), so the
/// pattern constraint pins `p_{w*}` and the mass constraint pins `p_n`;
/// strict feasibility makes both positive. At d = 1 the two support
/// weights collide at n and the system is only consistent when
/// `(c+delta)/t = 1` exactly.
pub fn solve_weights(params: &ConstructionParams) -> Result<WeightDistribution, ProbError> {
    let (n, d, t) = (params.n, params.d, params.t);
    let w_star = argmax_f(n, d);
    let rhs = params.rhs();
    let mut p = vec![BigRational::zero(); n];

    if w_star == n {
        // d = 1: single-weight fallback
        if rhs != BigRational::one() {
            return Err(ProbError::DegenerateWeightSupport { rhs: Box::new(rhs) });
        }
        p[n - 1] = BigRational::one();
        return Ok(WeightDistribution { n, p });
    }

    let lhs = f_ratio(n, d, w_star);
    if lhs <= rhs {
        return Err(ProbError::Infeasible {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            c: params.target.required_residual(),
        });
    }
    let coeff = big_ratio(binomial(n - d, w_star - 1), BigUint::one())
        * BigRational::from_integer(BigInt::from(t));
    let p_star = ((BigRational::from_integer(BigInt::from(
        params.target.required_residual(),
    )) + &params.delta)
        / coeff)
        .clone();
    let p_n = BigRational::one() - big_ratio(binomial(n, w_star), BigUint::one()) * &p_star;
    debug_assert!(!p_n.is_negative());
    p[w_star - 1] = p_star;
    p[n - 1] = p_n;
    let dist = WeightDistribution { n, p };
    debug_assert!(dist.validate().is_ok());
    debug_assert_eq!(dist.pattern_mass(d), params.rhs());
    Ok(dist)
}

/// Inverse-CDF row sampler with 128-bit draws: picks a weight class by
/// cumulative mass, then a uniform subset of that weight via partial
/// Fisher-Yates. Quantization bias is 2^-128 per class boundary.
pub struct RowSampler {
    n: usize,
    /// (weight, cumulative threshold scaled by 2^128), ascending.
    thresholds: Vec<(usize, BigUint)>,
}

impl RowSampler {
    pub fn new(dist: &WeightDistribution) -> Self {
        let scale: BigUint = BigUint::one() << 128u32;
        let mut cum = BigRational::zero();
        let mut thresholds = Vec::new();
        for w in dist.support_weights() {
            cum += dist.class_mass(w);
            let scaled = (&cum * BigRational::from_integer(BigInt::from(scale.clone())))
                .floor()
                .to_integer()
                .to_biguint()
                .expect("cumulative mass is nonnegative");
            thresholds.push((w, scaled));
        }
        // the final class always wins any draw
        if let Some(last) = thresholds.last_mut() {
            last.1 = scale;
        }
        RowSampler { n: dist.n(), thresholds }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<bool> {
        let draw = BigUint::from(rng.gen::<u128>());
        let weight = self
            .thresholds
            .iter()
            .find(|(_, cut)| draw < *cut)
            .map(|(w, _)| *w)
            .expect("thresholds cover the draw space");
        let mut indices: Vec<usize> = (0..self.n).collect();
        for slot in 0..weight {
            let pick = rng.gen_range(slot..self.n);
            indices.swap(slot, pick);
        }
        let mut row = vec![false; self.n];
        for &j in &indices[..weight] {
            row[j] = true;
        }
        row
    }
}

/// Draws one schedule-support row from the distribution.
pub fn sample_row(dist: &WeightDistribution, rng: &mut impl Rng) -> Vec<bool> {
    RowSampler::new(dist).sample(rng)
}

/// A generated design plus provenance for the reproducibility contract.
#[derive(Debug, Clone)]
pub struct GeneratedDesign {
    pub design: BlockDesign,
    pub seed: u64,
    /// Distinct columns came out equal as sets; the disjunctness checker
    /// fails such families naturally, so they are flagged, not rejected.
    pub duplicate_columns: bool,
    /// Some individual landed in no test (possible, vanishingly rare).
    pub empty_columns: bool,
}

/// SplitMix64-style mixing for deriving per-trial seeds from a master.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Samples `t` i.i.d. rows and reads the columns back as blocks. Row `k`
/// draws from its own counter-derived stream, so rows are independent and
/// a fixed seed reproduces the design bit for bit.
pub fn generate_design(
    params: &ConstructionParams,
    seed: u64,
) -> Result<GeneratedDesign, ProbError> {
    let dist = solve_weights(params)?;
    let sampler = RowSampler::new(&dist);
    let (n, t) = (params.n, params.t);
    let mut columns = vec![std::collections::BTreeSet::new(); n];
    for row_idx in 0..t {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(row_idx as u64);
        let row = sampler.sample(&mut rng);
        for (j, &hit) in row.iter().enumerate() {
            if hit {
                columns[j].insert(row_idx + 1);
            }
        }
    }
    let design = BlockDesign::new_relaxed(t, columns)
        .map_err(|e| ProbError::InvalidParams(e.to_string()))?;
    let duplicate_columns = design.has_duplicate_blocks();
    let empty_columns = design.has_empty_blocks();
    Ok(GeneratedDesign { design, seed, duplicate_columns, empty_columns })
}

/// Natural log of a big integer via its bit length.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("small value fits f64").ln();
    }
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    top.to_f64().expect("53-bit value fits f64").ln() + shift as f64 * LN_2
}

/// Natural log of C(n, k); exact big-integer binomial underneath.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_biguint(&binomial(n, k))
}

/// Binary entropy h(x) in bits; h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// The default slack: `2 + 2 ln((d/eps) * C(n,d))`.
pub fn default_delta(n: usize, d: usize, epsilon: f64) -> f64 {
    2.0 + 2.0 * ((d as f64 / epsilon).ln() + ln_binomial(n, d))
}

/// Test-count bounds for the three construction routes.
#[derive(Debug, Clone)]
pub struct PlanReport {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    /// Default slack for the pattern constraint at these parameters.
    pub delta: f64,
    /// Route 1 (deterministic disjunct + doubling) has an unspecified
    /// constant, so it is reported as a scaling law, not a number.
    pub t_method1_scale: &'static str,
    /// Route 2: probabilistic disjunct stage, then doubling.
    pub t_method2: f64,
    /// Route 3: direct probabilistic doubly disjunct construction.
    pub t_method3: f64,
    /// Sharper route-3 bound using the exact binomial term.
    pub t_gross: f64,
    /// `ceil(t_method3) + 1`, the count used when constructing.
    pub t_recommended: usize,
    /// Exact feasibility of the weight system at `t_recommended`.
    pub feasible: bool,
    /// Set when `ln C(n,d)` is at most half of `d ln n`: the binomial
    /// bound regime where `t_gross` grows strictly slower than
    /// `d^2 log n + d log(d/eps)`.
    pub dense_regime: bool,
}

impl PlanReport {
    /// CSV row: `n,d,epsilon,delta,t_method1_scale,t_method2,t_method3,t_gross,feasible`.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{:.3},{:.3},{:.3},{}",
            self.n,
            self.d,
            self.epsilon,
            self.delta,
            self.t_method1_scale,
            self.t_method2,
            self.t_method3,
            self.t_gross,
            self.feasible
        )
    }

    pub fn csv_header() -> &'static str {
        "n,d,epsilon,delta,t_method1_scale,t_method2,t_method3,t_gross,feasible"
    }
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={} d={} epsilon={}", self.n, self.d, self.epsilon)?;
        writeln!(f, "delta={:.6}", self.delta)?;
        writeln!(f, "t_method1={} (epsilon = 0)", self.t_method1_scale)?;
        writeln!(f, "t_method2={:.3} (disjunct stage doubled)", self.t_method2)?;
        writeln!(f, "t_method3={:.3} (direct)", self.t_method3)?;
        writeln!(f, "t_gross={:.3}", self.t_gross)?;
        writeln!(f, "t_recommended={}", self.t_recommended)?;
        writeln!(f, "feasible={}", self.feasible)?;
        write!(f, "dense_regime={}", self.dense_regime)
    }
}

/// Evaluates all route bounds with natural logs and recommends
/// `t = ceil(t_method3) + 1` together with the default slack.
pub fn plan(n: usize, d: usize, epsilon: f64) -> Result<PlanReport, ProbError> {
    if d == 0 || d >= n {
        return Err(ProbError::InvalidParams(format!("need 1 <= d < n, got n={n}, d={d}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ProbError::InvalidParams(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    let (nf, df) = (n as f64, d as f64);
    let log_ne_d = (nf * E / df).ln();
    let log_d_eps = (df / epsilon).ln();
    let ln_binom = ln_binomial(n, d);
    let delta = 2.0 + 2.0 * (log_d_eps + ln_binom);

    let t_method3 = 2.0 * E * (df * df * log_ne_d + df * log_d_eps + 2.0 * df);
    let t_method2 = 2.0 * E * (2.0 * df * df * log_ne_d + 2.0 * df * log_d_eps + 3.0 * df);
    let t_gross = ((nf - df) / nf).sqrt() * E * df * (4.0 + 2.0 * (log_d_eps + ln_binom));
    debug_assert!(t_method2 > t_method3);

    let t_recommended = t_method3.ceil() as usize + 1;
    let params = ConstructionParams::with_default_delta(
        n,
        d,
        t_recommended,
        epsilon,
        DisjunctLevel::DoublyDisjunct,
    )?;
    Ok(PlanReport {
        n,
        d,
        epsilon,
        delta,
        t_method1_scale: "O(d^2 log n)",
        t_method2,
        t_method3,
        t_gross,
        t_recommended,
        feasible: feasible(&params),
        dense_regime: ln_binom < 0.5 * df * nf.ln(),
    })
}

/// The exact class-count ratio `C(n, w*) / C(n-d, w*-1)` at
/// `w* = floor(n/d)` alongside its entropy approximation
/// `sqrt((n-d)/n) * 2^(d h(1/d))` and the weaker `sqrt((n-d)/n) * e * d`
/// cap the planner leans on.
#[derive(Debug, Clone)]
pub struct EntropyBoundReport {
    pub exact: BigRational,
    pub entropy_approx: f64,
    pub ed_bound: f64,
}

pub fn entropy_bound_ratio(n: usize, d: usize) -> Result<EntropyBoundReport, ProbError> {
    if d < 2 || d >= n {
        return Err(ProbError::InvalidParams(format!("need 2 <= d < n, got n={n}, d={d}")));
    }
    let w_star = argmax_f(n, d);
    let exact = big_ratio(binomial(n, w_star), binomial(n - d, w_star - 1));
    let root = ((n - d) as f64 / n as f64).sqrt();
    let df = d as f64;
    Ok(EntropyBoundReport {
        exact,
        entropy_approx: root * (df * binary_entropy(1.0 / df)).exp2(),
        ed_bound: root * E * df,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn params(n: usize, d: usize, t: usize, delta: i64, target: DisjunctLevel) -> ConstructionParams {
        ConstructionParams::new(n, d, t, BigRational::from_integer(BigInt::from(delta)), target)
            .unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), BigUint::from(20u32));
        assert_eq!(binomial(4, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn f_ratio_examples() {
        assert_eq!(f_ratio(6, 2, 3), ratio(3, 10));
        assert_eq!(f_ratio(9, 2, 1), ratio(1, 9));
        assert_eq!(f_ratio(6, 2, 6), BigRational::zero());
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_f(100, 5), 20);
        assert_eq!(argmax_f(7, 2), 3);
        assert_eq!(argmax_f(12, 5), 2);
        let best = (1..=12).max_by_key(|&w| f_ratio(12, 5, w)).unwrap();
        assert_eq!(f_ratio(12, 5, 2), f_ratio(12, 5, best));
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasible(&params(6, 2, 20, 1, DisjunctLevel::DoublyDisjunct)));
        // boundary 3/10 = 3/10 is rejected: strictness matters
        assert!(!feasible(&params(6, 2, 10, 1, DisjunctLevel::DoublyDisjunct)));
        // disjunct target: 3/10 > 2/5 is false
        assert!(!feasible(&params(6, 2, 5, 1, DisjunctLevel::Disjunct)));
    }

    #[test]
    fn solve_weights_closed_form() {
        let p = params(6, 2, 20, 1, DisjunctLevel::DoublyDisjunct);
        let dist = solve_weights(&p).unwrap();
        assert_eq!(dist.p(3), &ratio(1, 40));
        assert_eq!(dist.p(6), &ratio(1, 2));
        assert_eq!(dist.support_weights(), vec![3, 6]);
        dist.validate().unwrap();
        // both constraint rows hold with exact equality
        let total: BigRational = (1..=6).map(|w| dist.class_mass(w)).sum();
        assert_eq!(total, BigRational::one());
        assert_eq!(dist.pattern_mass(2), ratio(3, 20));
    }

    #[test]
    fn solve_weights_rejects_infeasible() {
        let p = params(6, 2, 10, 1, DisjunctLevel::DoublyDisjunct);
        match solve_weights(&p) {
            Err(ProbError::Infeasible { lhs, rhs, c }) => {
                assert_eq!(*lhs, ratio(3, 10));
                assert_eq!(*rhs, ratio(3, 10));
                assert_eq!(c, 2);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn solve_weights_degenerate_d1() {
        let ok = params(5, 1, 3, 2, DisjunctLevel::Disjunct);
        let dist = solve_weights(&ok).unwrap();
        assert_eq!(dist.p(5), &BigRational::one());
        let bad = params(5, 1, 4, 2, DisjunctLevel::Disjunct);
        assert!(matches!(
            solve_weights(&bad),
            Err(ProbError::DegenerateWeightSupport { .. })
        ));
    }

    #[test]
    fn t_zero_is_rejected() {
        assert!(matches!(
            ConstructionParams::new(
                6,
                2,
                0,
                BigRational::one(),
                DisjunctLevel::DoublyDisjunct
            ),
            Err(ProbError::InvalidParams(_))
        ));
    }

    #[test]
    fn forced_all_ones_row() {
        let p = params(5, 1, 3, 2, DisjunctLevel::Disjunct); // p_n = 1
        let dist = solve_weights(&p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert!(sample_row(&dist, &mut rng).iter().all(|&b| b));
        }
    }

    #[test]
    fn sample_row_weight_marginal() {
        // class mass of weight 3 is C(6,3)/40 = 1/2
        let p = params(6, 2, 20, 1, DisjunctLevel::DoublyDisjunct);
        let dist = solve_weights(&p).unwrap();
        let sampler = RowSampler::new(&dist);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let trials = 100_000;
        let mut weight3 = 0u32;
        for _ in 0..trials {
            let row = sampler.sample(&mut rng);
            let w = row.iter().filter(|&&b| b).count();
            assert!(w == 3 || w == 6);
            if w == 3 {
                weight3 += 1;
            }
        }
        let freq = f64::from(weight3) / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "weight-3 frequency {freq}");
    }

    #[test]
    fn sample_row_pattern_marginal() {
        // P(s_i1 = 1, s_i2 = s_i3 = 0) must hit (2+delta)/t = 3/20
        let p = params(6, 3, 20, 1, DisjunctLevel::DoublyDisjunct);
        let dist = solve_weights(&p).unwrap();
        assert_eq!(dist.pattern_mass(3), ratio(3, 20));
        let sampler = RowSampler::new(&dist);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let trials = 100_000u32;
        let mut hits = 0u32;
        for _ in 0..trials {
            let row = sampler.sample(&mut rng);
            if row[0] && !row[2] && !row[4] {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / f64::from(trials);
        let target = 3.0 / 20.0;
        let se = (target * (1.0 - target) / f64::from(trials)).sqrt();
        // the example tolerance is 3 sigma, the property tolerance 5; the
        // fixed seed sits inside the tighter one
        assert!(
            (freq - target).abs() < 3.0 * se,
            "pattern frequency {freq} vs {target} (se {se})"
        );
    }

    #[test]
    fn sample_row_subsets_uniform_within_weight() {
        // chi-square over the C(5,2) = 10 supports of the weight-2 class
        let n = 5;
        let dist = WeightDistribution {
            n,
            p: vec![
                BigRational::zero(),
                ratio(1, 10),
                BigRational::zero(),
                BigRational::zero(),
                BigRational::zero(),
            ],
        };
        dist.validate().unwrap();
        let sampler = RowSampler::new(&dist);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let trials = 50_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..trials {
            let row = sampler.sample(&mut rng);
            let support: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(j, _)| j)
                .collect();
            *counts.entry(support).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 10);
        let expected = trials as f64 / 10.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let diff = f64::from(c) - expected;
                diff * diff / expected
            })
            .sum();
        // df = 9; 33.7 is far beyond the 99.99% quantile (seed-fixed)
        assert!(chi2 < 33.7, "chi-square {chi2}");
    }

    #[test]
    fn generated_design_is_reproducible() {
        let p = params(6, 2, 30, 1, DisjunctLevel::DoublyDisjunct);
        let a = generate_design(&p, 99).unwrap();
        let b = generate_design(&p, 99).unwrap();
        assert_eq!(a.design, b.design);
        let c = generate_design(&p, 100).unwrap();
        assert_ne!(a.design, c.design);
        assert_eq!(a.design.t(), 30);
        assert_eq!(a.design.n(), 6);
        assert!(!a.design.blocks().iter().any(|b| b.is_empty()) || a.empty_columns);
    }

    #[test]
    fn generate_rejects_infeasible() {
        let p = params(6, 2, 10, 1, DisjunctLevel::DoublyDisjunct);
        assert!(matches!(generate_design(&p, 1), Err(ProbError::Infeasible { .. })));
    }

    #[test]
    fn derive_seed_spreads() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        let c = derive_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, 0));
    }

    #[test]
    fn row_streams_are_independent_of_generator_use() {
        // row k depends only on (seed, k), not on how many rows precede it
        let p = params(8, 2, 12, 1, DisjunctLevel::DoublyDisjunct);
        let dist = solve_weights(&p).unwrap();
        let sampler = RowSampler::new(&dist);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        rng.set_stream(3);
        let direct = sampler.sample(&mut rng);
        let mut rng2 = ChaCha12Rng::seed_from_u64(5);
        rng2.set_stream(2);
        let _ = rng2.next_u64(); // perturb another stream first
        rng2.set_stream(3);
        let mut rng3 = ChaCha12Rng::seed_from_u64(5);
        rng3.set_stream(3);
        assert_eq!(sampler.sample(&mut rng3), direct);
    }

    #[test]
    fn plan_golden_values() {
        let report = plan(100, 3, 0.01).unwrap();
        // 2e(9 ln(100e/3) + 3 ln 300 + 6), recomputed independently
        assert!((report.t_method3 - 346.148).abs() < 0.01, "{}", report.t_method3);
        assert!((report.t_method2 - 675.986).abs() < 0.01, "{}", report.t_method2);
        assert!((report.t_gross - 316.401).abs() < 0.01, "{}", report.t_gross);
        assert!((report.delta - 37.3946).abs() < 0.001, "{}", report.delta);
        assert_eq!(report.t_recommended, 348);
        assert!(report.feasible);
        assert!(report.t_method2 > report.t_method3);
        assert!(!report.dense_regime);
    }

    #[test]
    fn plan_flags_dense_regime() {
        let sparse = plan(1000, 2, 0.01).unwrap();
        assert!(!sparse.dense_regime);
        let dense = plan(24, 12, 0.01).unwrap();
        assert!(dense.dense_regime);
    }

    #[test]
    fn plan_ordering_holds_across_grid() {
        for n in [20, 50, 100] {
            for d in [2, 5] {
                for eps in [0.1, 0.001] {
                    let r = plan(n, d, eps).unwrap();
                    assert!(r.t_method2 > r.t_method3, "n={n} d={d} eps={eps}");
                    assert!(r.t_gross <= r.t_method3, "gross must not exceed relaxed");
                }
            }
        }
    }

    #[test]
    fn entropy_bound_examples() {
        assert_eq!(binary_entropy(0.5), 1.0);
        let r = entropy_bound_ratio(6, 2).unwrap();
        assert_eq!(r.exact, ratio(10, 3));
        assert!((r.ed_bound - 4.4389).abs() < 1e-3);
        assert!(r.exact.to_f64().unwrap() < r.ed_bound);
        let big = entropy_bound_ratio(100, 5).unwrap();
        assert!(big.exact.to_f64().unwrap() < big.ed_bound);
        assert!(big.entropy_approx < big.ed_bound);
    }

    #[test]
    fn ln_biguint_matches_f64() {
        let x = BigUint::from(123_456_789u64);
        assert!((ln_biguint(&x) - (123_456_789f64).ln()).abs() < 1e-9);
        let huge = BigUint::one() << 400;
        assert!((ln_biguint(&huge) - 400.0 * LN_2).abs() < 1e-6);
    }
}
