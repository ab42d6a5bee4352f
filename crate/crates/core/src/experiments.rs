//! Scenario generators and the experiment runners behind the reference
//! figures: the counting-query comparison against LDP baselines and the
//! safe-versus-optimal sweeps over prior concentration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::leakage::corollary_epsilon;
use crate::mechanisms::{exponential_mechanism, ldp_budget, piecewise_safe_for_budget, randomized_response};
use crate::model::{worst_case_value, Mechanism, Prior, Scenario, UtilityOrder, UtilityValues};
use crate::optimizer::{min_epsilon_with, Mode, SearchOptions};

/// Baseline budgets at or beyond `-log p_min` are evaluated this far below it.
pub const BASELINE_CLAMP_MARGIN: f64 = 1e-6;

/// Counting query over 6 records: squared error plus a unit penalty for
/// under-reporting. Rows are true counts, columns released counts.
pub const COUNTING_VALUES: [[f64; 7]; 7] = [
    [0., -1., -4., -9., -16., -25., -36.],
    [-2., 0., -1., -4., -9., -16., -25.],
    [-5., -2., 0., -1., -4., -9., -16.],
    [-9., -5., -2., 0., -1., -4., -9.],
    [-17., -9., -5., -2., 0., -1., -4.],
    [-26., -17., -9., -5., -2., 0., -1.],
    [-37., -26., -17., -9., -5., -2., 0.],
];

pub const COUNTING_ORDER: [[usize; 7]; 7] = [
    [7, 6, 5, 4, 3, 2, 1],
    [5, 7, 6, 4, 3, 2, 1],
    [3, 5, 7, 6, 4, 2, 1],
    [1, 3, 5, 7, 6, 4, 2],
    [1, 2, 3, 5, 7, 6, 4],
    [1, 2, 3, 4, 5, 7, 6],
    [1, 2, 3, 4, 5, 6, 7],
];

pub fn counting_query_scenario() -> Scenario {
    let values = UtilityValues::new(COUNTING_VALUES.iter().map(|r| r.to_vec()).collect()).expect("finite table");
    let order = UtilityOrder::new(COUNTING_ORDER.iter().map(|r| r.to_vec()).collect()).expect("permutation rows");
    Scenario::new(Prior::uniform(7).expect("n > 0"), order, Some(values), None)
        .expect("stored order matches the values")
}

/// Cyclic shifts of `[n, n-1, ..., 1]`: row `i` is the first row rotated
/// right by `i`, so every input is symmetric to every other.
pub fn cyclic_order(n: usize) -> Result<UtilityOrder> {
    let rows = (0..n).map(|i| (0..n).map(|j| n - (j + n - i) % n).collect()).collect();
    UtilityOrder::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PriorPattern {
    /// One letter at `p_min`, the others sharing the rest equally.
    OneLowRestHigh {
        p_min: f64,
        n: usize,
    },
    /// All but one letter at `p_min`.
    RestLowOneHigh {
        p_min: f64,
        n: usize,
    },
    Uniform {
        n: usize,
    },
    Explicit {
        probs: Vec<f64>,
    },
}

impl PriorPattern {
    pub fn one_low_three_high(p_min: f64) -> Self {
        PriorPattern::OneLowRestHigh { p_min, n: 4 }
    }

    pub fn three_low_one_high(p_min: f64) -> Self {
        PriorPattern::RestLowOneHigh { p_min, n: 4 }
    }

    pub fn len(&self) -> usize {
        match self {
            PriorPattern::OneLowRestHigh { n, .. }
            | PriorPattern::RestLowOneHigh { n, .. }
            | PriorPattern::Uniform { n } => *n,
            PriorPattern::Explicit { probs } => probs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Prior with the distinguished letter (the low one, or the high one)
    /// at `index`. Ignored for uniform and explicit patterns.
    pub fn generate(&self, index: usize) -> Result<Prior> {
        let check = |p_min: f64, n: usize| -> Result<()> {
            if n < 2 {
                return Err(Error::InvalidPrior(format!("pattern needs n >= 2, got {n}")));
            }
            if !(p_min > 0.0 && p_min <= 1.0 / n as f64) {
                return Err(Error::InvalidPrior(format!("p_min = {p_min} must lie in (0, 1/{n}]")));
            }
            if index >= n {
                return Err(Error::InvalidPrior(format!("index {index} outside 0..{n}")));
            }
            Ok(())
        };
        match *self {
            PriorPattern::OneLowRestHigh { p_min, n } => {
                check(p_min, n)?;
                let high = (1.0 - p_min) / (n - 1) as f64;
                Prior::new((0..n).map(|i| if i == index { p_min } else { high }).collect())
            }
            PriorPattern::RestLowOneHigh { p_min, n } => {
                check(p_min, n)?;
                let high = 1.0 - (n - 1) as f64 * p_min;
                Prior::new((0..n).map(|i| if i == index { high } else { p_min }).collect())
            }
            PriorPattern::Uniform { n } => Prior::uniform(n),
            PriorPattern::Explicit { ref probs } => Prior::new(probs.clone()),
        }
    }
}

/// The 4x4 cyclic order with a patterned prior.
pub fn cyclic_scenario(pattern: &PriorPattern, index: usize) -> Result<Scenario> {
    if pattern.len() != 4 {
        return Err(Error::InvalidParameter(format!(
            "cyclic scenario has 4 inputs, pattern has {}",
            pattern.len()
        )));
    }
    Scenario::new(pattern.generate(index)?, cyclic_order(4)?, None, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilitySample {
    pub sample_min: f64,
    pub deterministic_min: f64,
    pub trials: usize,
    pub seed: u64,
    pub stream: u64,
}

fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    // u landed past the rounded total
    weights.iter().rposition(|&w| w > 0.0).expect("distribution has mass")
}

/// Draws `(X, Y)` pairs `trials` times and records the smallest utility
/// seen. The stream is ChaCha8 keyed by `seed` on substream `stream`.
pub fn sample_min_utility(
    scenario: &Scenario,
    mech: &Mechanism,
    trials: usize,
    seed: u64,
    stream: u64,
) -> Result<UtilitySample> {
    let values = scenario
        .values()
        .ok_or_else(|| Error::InvalidScenario("sampling needs utility values".into()))?;
    scenario.check_mechanism(mech)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let prior = scenario.prior().probs();
    let mut sample_min = f64::INFINITY;
    for _ in 0..trials {
        let x = inverse_cdf(prior, rng.gen::<f64>());
        let y = inverse_cdf(mech.row(x), rng.gen::<f64>());
        sample_min = sample_min.min(values.get(x, y));
    }
    Ok(UtilitySample {
        sample_min,
        deterministic_min: worst_case_value(mech, values),
        trials,
        seed,
        stream,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fig1Mechanism {
    Safe,
    Exponential,
    RandomizedResponse,
}

impl Fig1Mechanism {
    pub const ALL: [Fig1Mechanism; 3] = [
        Fig1Mechanism::Safe,
        Fig1Mechanism::Exponential,
        Fig1Mechanism::RandomizedResponse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fig1Mechanism::Safe => "safe",
            Fig1Mechanism::Exponential => "exponential",
            Fig1Mechanism::RandomizedResponse => "randomized_response",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub eps: f64,
    pub mechanism: Fig1Mechanism,
    pub sample_min: f64,
    pub det_min: f64,
    pub trials: usize,
    pub seed: u64,
    /// Baseline built from a clamped budget (eps >= -log p_min).
    pub clamped: bool,
    /// Threshold of the safe mechanism; absent for baselines.
    pub h: Option<usize>,
}

/// `eps = 0.50, 0.55, ..., 2.00`.
pub fn fig1_grid() -> Vec<f64> {
    (0..=30).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

pub fn fig1_run(trials: usize, seed: u64) -> Result<Vec<RunRecord>> {
    let scenario = counting_query_scenario();
    let values = scenario.values().expect("counting scenario has values");
    let p_min = scenario.prior().p_min();
    let limit = -p_min.ln();
    let mut records = Vec::new();
    for (k, &eps) in fig1_grid().iter().enumerate() {
        let clamped = eps >= limit;
        let baseline_eps = if clamped { limit - BASELINE_CLAMP_MARGIN } else { eps };
        for (slot, kind) in Fig1Mechanism::ALL.into_iter().enumerate() {
            let (mech, h) = match kind {
                Fig1Mechanism::Safe => {
                    let (h, mech) = piecewise_safe_for_budget(scenario.prior(), scenario.order(), eps)?;
                    (mech, Some(h))
                }
                Fig1Mechanism::Exponential => (exponential_mechanism(values, ldp_budget(baseline_eps, p_min)?)?, None),
                Fig1Mechanism::RandomizedResponse => {
                    (randomized_response(values, ldp_budget(baseline_eps, p_min)?)?, None)
                }
            };
            let stream = (k * Fig1Mechanism::ALL.len() + slot) as u64;
            let sample = sample_min_utility(&scenario, &mech, trials, seed, stream)?;
            records.push(RunRecord {
                eps,
                mechanism: kind,
                sample_min: sample.sample_min,
                det_min: sample.deterministic_min,
                trials,
                seed,
                clamped: clamped && kind != Fig1Mechanism::Safe,
                h,
            });
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub p_min: f64,
    pub h: usize,
    pub mode: Mode,
    pub min_eps: f64,
    /// `h = 1` and `h = M` are trivial thresholds.
    pub naive: bool,
}

/// `p_min = 0.02, 0.04, ..., 0.20`.
pub fn pmin_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 50.0).collect()
}

fn sweep(pattern: fn(f64) -> PriorPattern, opts: &SearchOptions) -> Result<Vec<SweepRecord>> {
    let order = cyclic_order(4)?;
    let mut out = Vec::new();
    for p_min in pmin_grid() {
        let prior = pattern(p_min).generate(0)?;
        for h in 1..=order.cols() {
            for mode in [Mode::Safe, Mode::Optimal] {
                let point = min_epsilon_with(&prior, &order, h, mode, opts)?;
                out.push(SweepRecord {
                    p_min,
                    h,
                    mode,
                    min_eps: point.min_eps,
                    naive: h == 1 || h == order.cols(),
                });
            }
        }
    }
    Ok(out)
}

/// One-low-three-high sweep.
pub fn fig2_run() -> Result<Vec<SweepRecord>> {
    fig2_run_with(&SearchOptions::default())
}

pub fn fig2_run_with(opts: &SearchOptions) -> Result<Vec<SweepRecord>> {
    sweep(PriorPattern::one_low_three_high, opts)
}

/// Three-low-one-high sweep.
pub fn fig3_run() -> Result<Vec<SweepRecord>> {
    fig3_run_with(&SearchOptions::default())
}

pub fn fig3_run_with(opts: &SearchOptions) -> Result<Vec<SweepRecord>> {
    sweep(PriorPattern::three_low_one_high, opts)
}

/// Closed-form safe budget of the cyclic scenario, for every placement of
/// the distinguished letter.
pub fn cyclic_safe_budgets(pattern: &PriorPattern, h: usize) -> Result<Vec<f64>> {
    (0..4)
        .map(|idx| {
            let s = cyclic_scenario(pattern, idx)?;
            corollary_epsilon(s.prior(), s.order(), h)
        })
        .collect()
}
