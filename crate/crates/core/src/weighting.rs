//! Rate-weight schemes: equal, independent random, and proportional fair.
//!
//! Proportional fairness keeps a per-user, per-direction tally of
//! delivered weighted rates and sets the next slot's weight of user k
//! inversely proportional to its cumulative rate, normalized to the
//! simplex.  The first slot (empty history) uses equal weights; a user
//! with zero cumulative rate takes absolute priority, which is the limit
//! of the inverse rule.

use rand::Rng;

use crate::channel::{place_users, sample_channels_at, ChannelScenario};
use crate::designs::{bcd_joint, BcdOptions, BcdStart, Solution};
use crate::error::Result;
use crate::metrics::{rate, sinr_dl, sinr_ul, DuplexParams, RatePoint, Weights};

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

/// Weighting scheme selector for experiments and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingScheme {
    /// 1/K in both directions.
    Equal,
    /// Independent uniform draws, normalized per direction.
    Independent,
    /// Proportional fair from a simulated rate history.
    ProportionalFair,
}

impl WeightingScheme {
    /// Stable kebab-case name used for CLI flags.
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightingScheme::Equal => "equal",
            WeightingScheme::Independent => "independent",
            WeightingScheme::ProportionalFair => "proportional-fair",
        }
    }
}

impl std::str::FromStr for WeightingScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "equal" => Ok(WeightingScheme::Equal),
            "independent" => Ok(WeightingScheme::Independent),
            "proportional-fair" => Ok(WeightingScheme::ProportionalFair),
            other => Err(format!("unknown weighting '{other}'")),
        }
    }
}

impl std::fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Independent uniform(0, 1) draws per user and direction, normalized to
/// sum to one in each direction.
pub fn independent_weights<R: Rng + ?Sized>(users: usize, rng: &mut R) -> Weights {
    let dl: Vec<f64> = (0..users).map(|_| rng.gen::<f64>()).collect();
    let ul: Vec<f64> = (0..users).map(|_| rng.gen::<f64>()).collect();
    Weights::normalized(&dl, &ul)
}

// ---------------------------------------------------------------------------
// Proportional fairness
// ---------------------------------------------------------------------------

/// Cumulative delivered weighted rates per user and direction.
#[derive(Debug, Clone)]
pub struct RateHistory {
    /// Cumulative downlink rates.
    pub dl: Vec<f64>,
    /// Cumulative uplink rates.
    pub ul: Vec<f64>,
    /// Number of recorded slots.
    pub slots: usize,
}

impl RateHistory {
    /// Empty history for `users` users.
    pub fn new(users: usize) -> RateHistory {
        RateHistory { dl: vec![0.0; users], ul: vec![0.0; users], slots: 0 }
    }

    /// Record one slot of delivered rates.
    pub fn record(&mut self, dl: &[f64], ul: &[f64]) {
        assert_eq!(dl.len(), self.dl.len(), "one downlink rate per user");
        assert_eq!(ul.len(), self.ul.len(), "one uplink rate per user");
        for (acc, r) in self.dl.iter_mut().zip(dl) {
            *acc += r;
        }
        for (acc, r) in self.ul.iter_mut().zip(ul) {
            *acc += r;
        }
        self.slots += 1;
    }
}

/// Proportional-fair weights for the next slot: inversely proportional to
/// the cumulative rates, equal on a cold start, and concentrated on
/// starved users if any cumulative rate is zero.
pub fn pf_weights(history: &RateHistory) -> Weights {
    Weights {
        dl: pf_direction(&history.dl, history.slots),
        ul: pf_direction(&history.ul, history.slots),
    }
}

fn pf_direction(cumulative: &[f64], slots: usize) -> Vec<f64> {
    let users = cumulative.len();
    if slots == 0 {
        return vec![1.0 / users as f64; users];
    }
    let starved: Vec<usize> =
        (0..users).filter(|&k| cumulative[k] <= 0.0).collect();
    if !starved.is_empty() {
        let mut w = vec![0.0; users];
        for &k in &starved {
            w[k] = 1.0 / starved.len() as f64;
        }
        return w;
    }
    let inv: Vec<f64> = cumulative.iter().map(|&c| 1.0 / c).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|v| v / total).collect()
}

/// One proportional-fair simulation.
#[derive(Debug, Clone)]
pub struct PfRun {
    /// Final cumulative history.
    pub history: RateHistory,
    /// Weights applied in each slot.
    pub weights_per_slot: Vec<Weights>,
    /// Weighted rate pair achieved in each slot.
    pub points: Vec<RatePoint>,
}

/// Per-user weighted rates of a converged operating point: the downlink
/// entries carry the alpha bandwidth factor, the uplink entries (1-alpha).
pub fn solution_user_rates(
    solution: &Solution,
    channels: &crate::channel::DuplexChannelSet,
    params: &DuplexParams,
) -> (Vec<f64>, Vec<f64>) {
    let users = channels.dl.users();
    let h_dl = channels.dl.effective_rows(solution.theta_dl.values());
    let h_ul = channels.ul.effective_rows(solution.theta_ul.values());
    let dl = (0..users)
        .map(|u| params.alpha * rate(sinr_dl(&h_dl, &solution.precoders, params.noise_dl, u)))
        .collect();
    let ul = (0..users)
        .map(|u| {
            (1.0 - params.alpha)
                * rate(sinr_ul(&h_ul, &solution.combiners[u], &solution.powers, params.noise_ul, u))
        })
        .collect();
    (dl, ul)
}

/// Simulate `slots` scheduling slots of proportional-fair weighting: user
/// positions are drawn once, fading is redrawn each slot, and each slot
/// solves a joint design under the current fairness weights.
pub fn pf_simulate<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    params: &DuplexParams,
    beta: f64,
    slots: usize,
    opts: &BcdOptions,
    rng: &mut R,
) -> Result<PfRun> {
    let positions = place_users(&scenario.geometry, scenario.users, rng);
    pf_simulate_at(scenario, &positions, params, beta, slots, opts, rng)
}

/// [`pf_simulate`] with externally fixed user positions.
pub fn pf_simulate_at<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    positions: &[[f64; 3]],
    params: &DuplexParams,
    beta: f64,
    slots: usize,
    opts: &BcdOptions,
    rng: &mut R,
) -> Result<PfRun> {
    let mut history = RateHistory::new(scenario.users);
    let mut weights_per_slot = Vec::with_capacity(slots);
    let mut points = Vec::with_capacity(slots);
    for _ in 0..slots {
        let set = sample_channels_at(scenario, positions, rng)?;
        let weights = pf_weights(&history);
        let start = BcdStart::random(set.dl.irs_elements(), rng);
        let solution = bcd_joint(&set, params, beta, &weights, start, opts)?;
        let (dl, ul) = solution_user_rates(&solution, &set, params);
        history.record(&dl, &ul);
        weights_per_slot.push(weights);
        points.push(solution.rate_point);
    }
    Ok(PfRun { history, weights_per_slot, points })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
