//! Block-coordinate designs for joint uplink-downlink surface configuration.
//!
//! The central routine is [`bcd_joint`]: starting from an initial phase
//! configuration it cycles uplink powers (fractional programming), uplink
//! combiners (MMSE), downlink precoders (WMMSE or zero-forcing) and the
//! surface phases (Riemannian conjugate gradient) until the scalarized
//! objective
//!
//!   J = beta * dl_weighted + (1 - beta) * ul_weighted
//!
//! stalls, where the two terms are the alpha-weighted sum rates of
//! [`crate::metrics::weighted_rate_point`].  A finalization pass refreshes
//! powers, combiners and precoders on the frozen final phases so the
//! reported rate point is self-consistent.
//!
//! The benchmark designs reuse the same routine:
//! * fixed-downlink / fixed-uplink force beta to 1 or 0 and warm-start
//!   from a joint solution, so their traces start at the joint operating
//!   point and can only improve their own direction;
//! * the individual benchmark composes the two forced runs (downlink
//!   coordinates from the beta = 1 run, uplink from the beta = 0 run),
//!   pretending two surfaces could serve the two directions separately;
//! * surface slicing dedicates elements [0, N/2) to downlink and
//!   [N/2, N) to uplink, either evaluated in isolation (no cross-half
//!   reflections) or jointly on the full channels.
//!
//! One sweep subtlety: at the resource corners (alpha = 0 or alpha = 1)
//! the cell itself silences one direction, so that direction's forced
//! solve would maximize an identically zero objective and simply keep the
//! joint phases.  The benchmark constructors therefore take a second,
//! interior-split parameter set and run a silenced direction's solve
//! there before re-evaluating on the cell parameters; away from the
//! corners the argument is ignored.  This is sound because a direction's
//! optimal phases do not depend on its resource share, which scales the
//! power budget and the noise power together and leaves every SINR
//! unchanged.

use std::f64::consts::LN_2;

use crate::channel::DuplexChannelSet;
use crate::error::Result;
use crate::metrics::{sinr_dl, sinr_ul, weighted_rate_point, wsp_objective, DuplexParams, RatePoint, Weights};
use crate::rcg::{precompute_terms, rcg_optimize, PhaseVector, RcgOptions};
use crate::uplink::{combiner_gains, fp_power_control, mmse_combiners, FpOptions};
use crate::wmmse::{mrt_precoders, wmmse_solve, zf_beamform, WmmseOptions};
use crate::CVector;

// ---------------------------------------------------------------------------
// Configuration types
// ---------------------------------------------------------------------------

/// Downlink beamforming strategy used inside the coordinate loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beamformer {
    /// Weighted-MMSE precoding (ascends the weighted sum rate).
    Wmmse,
    /// Zero-forcing with equal per-user power (no monotonicity guarantee).
    Zf,
}

/// The design variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Joint,
    Individual,
    FixedDownlink,
    FixedUplink,
    SlicingWithInterference,
    SlicingWithoutInterference,
}

impl DesignKind {
    /// All variants in canonical output order.
    pub const ALL: [DesignKind; 6] = [
        DesignKind::Joint,
        DesignKind::Individual,
        DesignKind::FixedDownlink,
        DesignKind::FixedUplink,
        DesignKind::SlicingWithInterference,
        DesignKind::SlicingWithoutInterference,
    ];

    /// Stable kebab-case name used for CLI flags and CSV values.
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignKind::Joint => "joint",
            DesignKind::Individual => "individual",
            DesignKind::FixedDownlink => "fixed-downlink",
            DesignKind::FixedUplink => "fixed-uplink",
            DesignKind::SlicingWithInterference => "slicing-with-interference",
            DesignKind::SlicingWithoutInterference => "slicing-without-interference",
        }
    }
}

impl std::str::FromStr for DesignKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DesignKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown design '{s}'"))
    }
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Iteration controls for the outer coordinate loop and its blocks.
#[derive(Debug, Clone)]
pub struct BcdOptions {
    /// Relative objective-change threshold for the outer loop.
    pub tol_outer: f64,
    /// Maximum outer iterations.
    pub max_outer: usize,
    /// Inner precoder solver controls.
    pub wmmse: WmmseOptions,
    /// Inner power-control controls.
    pub fp: FpOptions,
    /// Inner phase-ascent controls.
    pub rcg: RcgOptions,
    /// Downlink beamforming strategy.
    pub beamformer: Beamformer,
}

impl Default for BcdOptions {
    fn default() -> Self {
        BcdOptions {
            tol_outer: 1e-4,
            max_outer: 50,
            wmmse: WmmseOptions::default(),
            fp: FpOptions::default(),
            rcg: RcgOptions::default(),
            beamformer: Beamformer::Wmmse,
        }
    }
}

/// Soft-degradation indicators accumulated over a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveFlags {
    /// Power control saw an all-zero gain matrix.
    pub fp_degenerate: bool,
    /// A phase line search failed along the steepest direction.
    pub rcg_stalled: bool,
    /// A rank-deficient precoder system was regularized.
    pub wmmse_regularized: bool,
}

impl SolveFlags {
    fn merge(&mut self, other: SolveFlags) {
        self.fp_degenerate |= other.fp_degenerate;
        self.rcg_stalled |= other.rcg_stalled;
        self.wmmse_regularized |= other.wmmse_regularized;
    }
}

/// A converged operating point.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Phases applied while serving downlink traffic.
    pub theta_dl: PhaseVector,
    /// Phases applied while serving uplink traffic (same as `theta_dl`
    /// except for the individual benchmark).
    pub theta_ul: PhaseVector,
    /// Downlink precoders (power absorbed in the norms).
    pub precoders: Vec<CVector>,
    /// Unit-norm uplink combiners.
    pub combiners: Vec<CVector>,
    /// Uplink transmit powers.
    pub powers: Vec<f64>,
    /// Achieved weighted rate pair.
    pub rate_point: RatePoint,
    /// Scalarized objective after initialization, each outer iteration
    /// and the finalization pass.
    pub objective_trace: Vec<f64>,
    /// Outer iterations executed.
    pub outer_iters: usize,
    /// Soft-degradation indicators.
    pub flags: SolveFlags,
}

/// Starting point for [`bcd_joint`].
#[derive(Debug, Clone)]
pub struct BcdStart {
    /// Initial phases.
    pub theta: PhaseVector,
    /// Optional warm-start precoders (scaled down if infeasible).
    pub precoders: Option<Vec<CVector>>,
    /// Optional warm-start uplink powers (clamped to the budget).
    pub powers: Option<Vec<f64>>,
}

impl BcdStart {
    /// Cold start from uniform random phases.
    pub fn random<R: rand::Rng + ?Sized>(elements: usize, rng: &mut R) -> BcdStart {
        BcdStart { theta: PhaseVector::random(elements, rng), precoders: None, powers: None }
    }

    /// Warm start from a previously converged solution.
    pub fn warm(solution: &Solution) -> BcdStart {
        BcdStart {
            theta: solution.theta_dl.clone(),
            precoders: Some(solution.precoders.clone()),
            powers: Some(solution.powers.clone()),
        }
    }
}

// ---------------------------------------------------------------------------
// Core block-coordinate loop
// ---------------------------------------------------------------------------

/// Non-phase blocks refreshed on a frozen phase configuration.
struct RefreshedPoint {
    precoders: Vec<CVector>,
    combiners: Vec<CVector>,
    powers: Vec<f64>,
    flags: SolveFlags,
}

/// Recompute powers, combiners and precoders for fixed effective channels,
/// warm-starting each block from the supplied values.
fn refresh_operating_point(
    h_dl: &[CVector],
    h_ul: &[CVector],
    warm_precoders: &[CVector],
    warm_combiners: &[CVector],
    warm_powers: &[f64],
    params: &DuplexParams,
    weights: &Weights,
    opts: &BcdOptions,
) -> Result<RefreshedPoint> {
    let mut flags = SolveFlags::default();
    let gains = combiner_gains(h_ul, warm_combiners);
    let fp = fp_power_control(
        &gains,
        &weights.ul,
        params.noise_ul,
        params.p_max_ul,
        warm_powers,
        &opts.fp,
    );
    flags.fp_degenerate = fp.degenerate;
    let powers = fp.powers;
    let combiners = mmse_combiners(h_ul, &powers, params.noise_ul);
    let precoders = match opts.beamformer {
        Beamformer::Wmmse => {
            let run = wmmse_solve(
                h_dl,
                &weights.dl,
                params.noise_dl,
                params.p_max_dl,
                Some(warm_precoders),
                &opts.wmmse,
            )?;
            flags.wmmse_regularized = run.regularized;
            run.state.precoders
        }
        Beamformer::Zf => zf_beamform(h_dl, params.p_max_dl.max(0.0))?,
    };
    Ok(RefreshedPoint { precoders, combiners, powers, flags })
}

/// Evaluate the weighted rate pair of an operating point through the
/// given effective channels.
pub fn evaluate_rate_point(
    h_dl: &[CVector],
    h_ul: &[CVector],
    precoders: &[CVector],
    combiners: &[CVector],
    powers: &[f64],
    params: &DuplexParams,
    weights: &Weights,
) -> RatePoint {
    let users = h_dl.len();
    let sdl: Vec<f64> =
        (0..users).map(|u| sinr_dl(h_dl, precoders, params.noise_dl, u)).collect();
    let sul: Vec<f64> =
        (0..users).map(|u| sinr_ul(h_ul, &combiners[u], powers, params.noise_ul, u)).collect();
    weighted_rate_point(&sdl, &sul, weights, params.alpha)
}

/// Maximize the beta-scalarized objective by block-coordinate ascent.
///
/// Blocks run in the order powers, combiners, precoders, phases; the loop
/// stops when the relative objective change drops below `tol_outer` or
/// after `max_outer` iterations.  A final pass refreshes powers, combiners
/// and precoders on the frozen phases.
pub fn bcd_joint(
    channels: &DuplexChannelSet,
    params: &DuplexParams,
    beta: f64,
    weights: &Weights,
    start: BcdStart,
    opts: &BcdOptions,
) -> Result<Solution> {
    assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1], got {beta}");
    let users = channels.dl.users();
    assert!(users >= 1, "need at least one user");
    assert_eq!(weights.users(), users, "one weight pair per user");
    assert_eq!(
        start.theta.len(),
        channels.dl.irs_elements(),
        "initial phases must match the surface size"
    );

    let mut theta = start.theta;
    let mut h_dl = channels.dl.effective_rows(theta.values());
    let mut h_ul = channels.ul.effective_rows(theta.values());
    let mut powers = start.powers.unwrap_or_else(|| vec![params.p_max_ul.max(0.0); users]);
    for p in powers.iter_mut() {
        *p = p.clamp(0.0, params.p_max_ul.max(0.0));
    }
    let mut precoders = match start.precoders {
        Some(w) => w,
        None => mrt_precoders(&h_dl, params.p_max_dl.max(0.0)),
    };
    let mut combiners = mmse_combiners(&h_ul, &powers, params.noise_ul);
    let mut flags = SolveFlags::default();

    let point =
        evaluate_rate_point(&h_dl, &h_ul, &precoders, &combiners, &powers, params, weights);
    let mut objective = wsp_objective(&point, beta);
    let mut trace = vec![objective];
    let mut outer = 0;

    while outer < opts.max_outer {
        outer += 1;

        // Power block: fractional programming on the current combiners.
        let gains = combiner_gains(&h_ul, &combiners);
        let fp = fp_power_control(
            &gains,
            &weights.ul,
            params.noise_ul,
            params.p_max_ul,
            &powers,
            &opts.fp,
        );
        if fp.degenerate {
            flags.fp_degenerate = true;
        }
        powers = fp.powers;

        // Combiner block: exact MMSE given the new powers.
        combiners = mmse_combiners(&h_ul, &powers, params.noise_ul);

        // Precoder block.
        precoders = match opts.beamformer {
            Beamformer::Wmmse => {
                let run = wmmse_solve(
                    &h_dl,
                    &weights.dl,
                    params.noise_dl,
                    params.p_max_dl,
                    Some(&precoders),
                    &opts.wmmse,
                )?;
                if run.regularized {
                    flags.wmmse_regularized = true;
                }
                run.state.precoders
            }
            Beamformer::Zf => zf_beamform(&h_dl, params.p_max_dl.max(0.0))?,
        };

        // Phase block: Riemannian ascent on the full objective.
        let terms = precompute_terms(channels, &precoders, &combiners, &powers, params, beta, weights);
        let rcg = rcg_optimize(&theta, &terms, &opts.rcg);
        if rcg.stalled {
            flags.rcg_stalled = true;
        }
        theta = rcg.theta;
        h_dl = channels.dl.effective_rows(theta.values());
        h_ul = channels.ul.effective_rows(theta.values());

        // The final phase objective equals the scalarized rate objective
        // up to the log base.
        let objective_new = rcg.j_trace.last().unwrap() / LN_2;
        trace.push(objective_new);
        let converged =
            (objective_new - objective).abs() <= opts.tol_outer * objective.abs().max(1e-12);
        objective = objective_new;
        if converged {
            break;
        }
    }

    // Finalization: refresh the non-phase blocks on the frozen phases so
    // the reported operating point carries no stale quantities.
    let refreshed =
        refresh_operating_point(&h_dl, &h_ul, &precoders, &combiners, &powers, params, weights, opts)?;
    flags.merge(refreshed.flags);
    let precoders = refreshed.precoders;
    let combiners = refreshed.combiners;
    let powers = refreshed.powers;

    let rate_point =
        evaluate_rate_point(&h_dl, &h_ul, &precoders, &combiners, &powers, params, weights);
    trace.push(wsp_objective(&rate_point, beta));

    Ok(Solution {
        theta_dl: theta.clone(),
        theta_ul: theta,
        precoders,
        combiners,
        powers,
        rate_point,
        objective_trace: trace,
        outer_iters: outer,
        flags,
    })
}

// ---------------------------------------------------------------------------
// Benchmark designs
// ---------------------------------------------------------------------------

/// Fixed-direction and individual benchmarks derived from a joint solution.
#[derive(Debug, Clone)]
pub struct FixedOutcomes {
    /// Phases tuned for downlink only (beta forced to 1).
    pub fixed_downlink: Solution,
    /// Phases tuned for uplink only (beta forced to 0).
    pub fixed_uplink: Solution,
    /// Composition of the two forced runs, as if each direction had its
    /// own surface.
    pub individual: Solution,
}

/// Solve one direction-forced problem: beta forced to 1 (downlink) or 0
/// (uplink), starting from `start`.
///
/// At interior resource splits this is a plain [`bcd_joint`] call on the
/// cell parameters.  At a corner that silences the forced direction
/// (alpha = 0 for downlink, alpha = 1 for uplink) the solve instead runs
/// on the `reference` parameters, where the direction keeps a positive
/// share, and the resulting phases are re-evaluated on the cell: the
/// returned rate point and beamformers belong to the cell, while the
/// objective trace documents the reference solve.  Beamformers and powers
/// are re-initialized for the reference solve because the warm values are
/// scaled for the cell's budgets (at the corner the warm precoders are
/// identically zero, a fixed point the precoder block cannot leave).
fn forced_solve(
    channels: &DuplexChannelSet,
    params: &DuplexParams,
    reference: &DuplexParams,
    toward_downlink: bool,
    weights: &Weights,
    start: BcdStart,
    opts: &BcdOptions,
) -> Result<Solution> {
    let beta = if toward_downlink { 1.0 } else { 0.0 };
    let share = if toward_downlink { params.alpha } else { 1.0 - params.alpha };
    if share > 0.0 {
        return bcd_joint(channels, params, beta, weights, start, opts);
    }
    let reference_share = if toward_downlink { reference.alpha } else { 1.0 - reference.alpha };
    assert!(
        reference_share > 0.0,
        "reference split must give the forced direction a positive share"
    );
    let ref_start = BcdStart { theta: start.theta, precoders: None, powers: None };
    let solved = bcd_joint(channels, reference, beta, weights, ref_start, opts)?;

    let theta = solved.theta_dl;
    let h_dl = channels.dl.effective_rows(theta.values());
    let h_ul = channels.ul.effective_rows(theta.values());
    let refreshed = refresh_operating_point(
        &h_dl,
        &h_ul,
        &solved.precoders,
        &solved.combiners,
        &solved.powers,
        params,
        weights,
        opts,
    )?;
    let mut flags = solved.flags;
    flags.merge(refreshed.flags);
    let rate_point = evaluate_rate_point(
        &h_dl,
        &h_ul,
        &refreshed.precoders,
        &refreshed.combiners,
        &refreshed.powers,
        params,
        weights,
    );
    Ok(Solution {
        theta_dl: theta.clone(),
        theta_ul: theta,
        precoders: refreshed.precoders,
        combiners: refreshed.combiners,
        powers: refreshed.powers,
        rate_point,
        objective_trace: solved.objective_trace,
        outer_iters: solved.outer_iters,
        flags,
    })
}

/// Run the beta-forced benchmarks warm-started from `joint`.
///
/// `reference` describes the same system at an interior resource split and
/// is consulted only when the cell parameters silence a forced direction
/// (alpha = 0 or alpha = 1); callers away from the sweep corners can pass
/// `params` again.
pub fn derived_designs(
    channels: &DuplexChannelSet,
    params: &DuplexParams,
    reference: &DuplexParams,
    weights: &Weights,
    joint: &Solution,
    opts: &BcdOptions,
) -> Result<FixedOutcomes> {
    let fixed_downlink =
        forced_solve(channels, params, reference, true, weights, BcdStart::warm(joint), opts)?;
    let fixed_uplink =
        forced_solve(channels, params, reference, false, weights, BcdStart::warm(joint), opts)?;
    let mut flags = fixed_downlink.flags;
    flags.merge(fixed_uplink.flags);
    let individual = Solution {
        theta_dl: fixed_downlink.theta_dl.clone(),
        theta_ul: fixed_uplink.theta_ul.clone(),
        precoders: fixed_downlink.precoders.clone(),
        combiners: fixed_uplink.combiners.clone(),
        powers: fixed_uplink.powers.clone(),
        rate_point: RatePoint {
            dl: fixed_downlink.rate_point.dl,
            ul: fixed_uplink.rate_point.ul,
        },
        objective_trace: Vec::new(),
        outer_iters: fixed_downlink.outer_iters + fixed_uplink.outer_iters,
        flags,
    };
    Ok(FixedOutcomes { fixed_downlink, fixed_uplink, individual })
}

/// Surface-slicing benchmarks derived from a joint solution.
#[derive(Debug, Clone)]
pub struct SlicingOutcomes {
    /// Both halves active on the full channels; cross-half reflections
    /// interfere.
    pub with_interference: Solution,
    /// Each half evaluated in isolation on its restricted channels.
    pub without_interference: Solution,
}

/// Split the surface into a downlink half `[0, N/2)` and an uplink half
/// `[N/2, N)`, tune each on its restricted channels and evaluate with and
/// without cross-half interference.  Requires an even element count.
/// `reference` plays the same corner role as in [`derived_designs`].
pub fn slicing_designs(
    channels: &DuplexChannelSet,
    params: &DuplexParams,
    reference: &DuplexParams,
    weights: &Weights,
    joint: &Solution,
    opts: &BcdOptions,
) -> Result<SlicingOutcomes> {
    let elements = channels.dl.irs_elements();
    assert!(elements % 2 == 0, "surface slicing needs an even element count, got {elements}");
    let half = elements / 2;

    let dl_channels = channels.restrict_elements(0, half);
    let dl_start = BcdStart {
        theta: joint.theta_dl.restrict(0, half),
        precoders: Some(joint.precoders.clone()),
        powers: Some(joint.powers.clone()),
    };
    let dl_half = forced_solve(&dl_channels, params, reference, true, weights, dl_start, opts)?;

    let ul_channels = channels.restrict_elements(half, elements);
    let ul_start = BcdStart {
        theta: joint.theta_ul.restrict(half, elements),
        precoders: Some(joint.precoders.clone()),
        powers: Some(joint.powers.clone()),
    };
    let ul_half = forced_solve(&ul_channels, params, reference, false, weights, ul_start, opts)?;

    let mut flags = dl_half.flags;
    flags.merge(ul_half.flags);

    let without_interference = Solution {
        theta_dl: dl_half.theta_dl.clone(),
        theta_ul: ul_half.theta_ul.clone(),
        precoders: dl_half.precoders.clone(),
        combiners: ul_half.combiners.clone(),
        powers: ul_half.powers.clone(),
        rate_point: RatePoint { dl: dl_half.rate_point.dl, ul: ul_half.rate_point.ul },
        objective_trace: Vec::new(),
        outer_iters: dl_half.outer_iters + ul_half.outer_iters,
        flags,
    };

    // Both halves applied at once: concatenate the phases, then refresh
    // powers, combiners and precoders on the full channels.
    let theta_full = dl_half.theta_dl.concat(&ul_half.theta_ul);
    let h_dl = channels.dl.effective_rows(theta_full.values());
    let h_ul = channels.ul.effective_rows(theta_full.values());

    let refreshed = refresh_operating_point(
        &h_dl,
        &h_ul,
        &dl_half.precoders,
        &ul_half.combiners,
        &ul_half.powers,
        params,
        weights,
        opts,
    )?;
    let mut with_flags = flags;
    with_flags.merge(refreshed.flags);
    let rate_point = evaluate_rate_point(
        &h_dl,
        &h_ul,
        &refreshed.precoders,
        &refreshed.combiners,
        &refreshed.powers,
        params,
        weights,
    );

    let with_interference = Solution {
        theta_dl: theta_full.clone(),
        theta_ul: theta_full,
        precoders: refreshed.precoders,
        combiners: refreshed.combiners,
        powers: refreshed.powers,
        rate_point,
        objective_trace: Vec::new(),
        outer_iters: 0,
        flags: with_flags,
    };

    Ok(SlicingOutcomes { with_interference, without_interference })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{
        sample_channels, ChannelScenario, DuplexMode, RicianParams, SimGeometry, SPEED_OF_LIGHT,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scenario(users: usize, bs: (usize, usize), irs: (usize, usize)) -> ChannelScenario {
        ChannelScenario {
            geometry: SimGeometry {
                bs_position: [0.0, 25.0, 25.0],
                irs_position: [300.0, 0.0, 15.0],
                user_disc_center: [300.0, 25.0],
                user_disc_radius: 20.0,
                user_height: 1.5,
                bs_array: bs,
                irs_array: irs,
                element_spacing: SPEED_OF_LIGHT / 1.95e9 / 2.0,
            },
            rician: RicianParams { kappa_bs_irs: 3.98, kappa_irs_user: 6.3 },
            mode: DuplexMode::Tdd,
            dl_carrier_hz: 1.95e9,
            ul_carrier_hz: 1.95e9,
            users,
        }
    }

    fn params() -> DuplexParams {
        DuplexParams {
            mode: DuplexMode::Tdd,
            alpha: 0.5,
            p_max_dl: 1.0,
            p_max_ul: 0.0501,
            noise_dl: 1.59e-12,
            noise_ul: 1.0e-12,
        }
    }

    fn solve(seed: u64, users: usize, irs: (usize, usize), beta: f64) -> (Solution, DuplexChannelSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = sample_channels(&scenario(users, (2, 2), irs), &mut rng).unwrap();
        let start = BcdStart::random(set.dl.irs_elements(), &mut rng);
        let weights = Weights::equal(users);
        let sol = bcd_joint(&set, &params(), beta, &weights, start, &BcdOptions::default()).unwrap();
        (sol, set)
    }

    #[test]
    fn joint_trace_is_nondecreasing() {
        for seed in [401, 402, 403] {
            let (sol, _) = solve(seed, 2, (3, 2), 0.5);
            for pair in sol.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9, "trace dropped: {:?}", pair);
            }
            assert!(sol.outer_iters >= 1);
            assert_eq!(sol.objective_trace.len(), sol.outer_iters + 2);
        }
    }

    #[test]
    fn joint_improves_over_random_start() {
        let (sol, _) = solve(405, 2, (3, 2), 0.5);
        let first = sol.objective_trace[0];
        let last = *sol.objective_trace.last().unwrap();
        assert!(last > first, "no improvement: {first} -> {last}");
    }

    #[test]
    fn rate_point_matches_stored_operating_point() {
        let (sol, set) = solve(407, 2, (3, 2), 0.4);
        let p = params();
        let h_dl = set.dl.effective_rows(sol.theta_dl.values());
        let h_ul = set.ul.effective_rows(sol.theta_ul.values());
        let again = evaluate_rate_point(
            &h_dl,
            &h_ul,
            &sol.precoders,
            &sol.combiners,
            &sol.powers,
            &p,
            &Weights::equal(2),
        );
        assert_eq!(again.dl, sol.rate_point.dl);
        assert_eq!(again.ul, sol.rate_point.ul);
    }

    #[test]
    fn forced_runs_dominate_their_direction() {
        let (joint, set) = solve(409, 2, (3, 2), 0.5);
        let p = params();
        let weights = Weights::equal(2);
        let out = derived_designs(&set, &p, &p, &weights, &joint, &BcdOptions::default()).unwrap();
        assert!(
            out.fixed_downlink.rate_point.dl >= joint.rate_point.dl - 1e-9,
            "fixed-downlink lost downlink rate: {} < {}",
            out.fixed_downlink.rate_point.dl,
            joint.rate_point.dl
        );
        assert!(
            out.fixed_uplink.rate_point.ul >= joint.rate_point.ul - 1e-9,
            "fixed-uplink lost uplink rate: {} < {}",
            out.fixed_uplink.rate_point.ul,
            joint.rate_point.ul
        );
        // The forced traces start exactly at the joint operating point.
        assert_eq!(out.fixed_downlink.objective_trace[0], joint.rate_point.dl);
        assert_eq!(out.fixed_uplink.objective_trace[0], joint.rate_point.ul);
    }

    #[test]
    fn individual_composes_the_forced_runs() {
        let (joint, set) = solve(411, 2, (2, 2), 0.3);
        let p = params();
        let weights = Weights::equal(2);
        let out = derived_designs(&set, &p, &p, &weights, &joint, &BcdOptions::default()).unwrap();
        assert_eq!(out.individual.rate_point.dl, out.fixed_downlink.rate_point.dl);
        assert_eq!(out.individual.rate_point.ul, out.fixed_uplink.rate_point.ul);
        assert_eq!(out.individual.theta_dl.values(), out.fixed_downlink.theta_dl.values());
        assert_eq!(out.individual.theta_ul.values(), out.fixed_uplink.theta_ul.values());
    }

    #[test]
    fn corner_cells_still_tune_the_silenced_direction() {
        // At alpha = 0 the downlink holds no band, so the beta = 1 solve
        // must run at the interior reference split; the fixed-downlink
        // benchmark should come back with downlink-tuned phases instead of
        // silently keeping the joint's uplink-tuned configuration.
        let mut rng = ChaCha8Rng::seed_from_u64(423);
        let mut scen = scenario(2, (2, 2), (3, 2));
        scen.mode = DuplexMode::Fdd;
        scen.ul_carrier_hz = 2.14e9;
        let set = sample_channels(&scen, &mut rng).unwrap();
        let split = |alpha| DuplexParams::split(DuplexMode::Fdd, alpha, 1.0, 0.0501, 1.59e-12, 1.0e-12);
        let reference = split(0.5);
        let weights = Weights::equal(2);
        let opts = BcdOptions::default();

        let max_move = |a: &PhaseVector, b: &PhaseVector| {
            a.values()
                .iter()
                .zip(b.values().iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0f64, f64::max)
        };

        let corner_dl = split(0.0);
        let start = BcdStart::random(6, &mut rng);
        let joint = bcd_joint(&set, &corner_dl, 0.4, &weights, start, &opts).unwrap();
        let out = derived_designs(&set, &corner_dl, &reference, &weights, &joint, &opts).unwrap();
        assert_eq!(out.fixed_downlink.rate_point.dl, 0.0, "no band, no downlink rate");
        let moved = max_move(&out.fixed_downlink.theta_dl, &joint.theta_dl);
        assert!(moved > 1e-3, "corner solve kept the joint phases (max move {moved:.2e})");
        assert!(
            out.fixed_downlink.rate_point.ul <= joint.rate_point.ul + 1e-9,
            "downlink-tuned surface beat the uplink-tuned joint: {} > {}",
            out.fixed_downlink.rate_point.ul,
            joint.rate_point.ul
        );
        for pair in out.fixed_downlink.objective_trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "reference trace dropped: {:?}", pair);
        }

        // Mirror corner: alpha = 1 silences the uplink.
        let corner_ul = split(1.0);
        let start = BcdStart::random(6, &mut rng);
        let joint = bcd_joint(&set, &corner_ul, 0.6, &weights, start, &opts).unwrap();
        let out = derived_designs(&set, &corner_ul, &reference, &weights, &joint, &opts).unwrap();
        assert_eq!(out.fixed_uplink.rate_point.ul, 0.0, "no band, no uplink rate");
        let moved = max_move(&out.fixed_uplink.theta_ul, &joint.theta_ul);
        assert!(moved > 1e-3, "corner solve kept the joint phases (max move {moved:.2e})");
        assert!(
            out.fixed_uplink.rate_point.dl <= joint.rate_point.dl + 1e-9,
            "uplink-tuned surface beat the downlink-tuned joint: {} > {}",
            out.fixed_uplink.rate_point.dl,
            joint.rate_point.dl
        );
    }

    #[test]
    fn single_user_single_antenna_fixed_designs_align() {
        // K = M = 1 TDD with matched budgets and noise: tuning for either
        // direction aligns the reflected path with the direct one, so the
        // downlink-tuned surface serves the uplink as well as the
        // uplink-tuned one does.
        let mut rng = ChaCha8Rng::seed_from_u64(425);
        let set = sample_channels(&scenario(1, (1, 1), (2, 2)), &mut rng).unwrap();
        let p = DuplexParams {
            mode: DuplexMode::Tdd,
            alpha: 0.5,
            p_max_dl: 0.05,
            p_max_ul: 0.05,
            noise_dl: 1.0e-12,
            noise_ul: 1.0e-12,
        };
        let weights = Weights::equal(1);
        let mut opts = BcdOptions::default();
        opts.tol_outer = 1e-8;
        let start = BcdStart::random(4, &mut rng);
        let joint = bcd_joint(&set, &p, 0.5, &weights, start, &opts).unwrap();
        let out = derived_designs(&set, &p, &p, &weights, &joint, &opts).unwrap();
        let rel = (out.fixed_downlink.rate_point.ul - out.individual.rate_point.ul).abs()
            / out.individual.rate_point.ul;
        assert!(rel < 1e-6, "single-user fixed-downlink uplink rate off by {rel:.2e}");
        let rel = (out.fixed_uplink.rate_point.dl - out.individual.rate_point.dl).abs()
            / out.individual.rate_point.dl;
        assert!(rel < 1e-6, "single-user fixed-uplink downlink rate off by {rel:.2e}");
    }

    #[test]
    fn single_user_tdd_is_direction_symmetric() {
        // With identical channels, budgets and noise in both directions,
        // K = 1 gives matched-filter optima in both directions, so the
        // converged weighted rates coincide.
        let mut rng = ChaCha8Rng::seed_from_u64(413);
        let set = sample_channels(&scenario(1, (2, 2), (2, 2)), &mut rng).unwrap();
        let p = DuplexParams {
            mode: DuplexMode::Tdd,
            alpha: 0.5,
            p_max_dl: 0.05,
            p_max_ul: 0.05,
            noise_dl: 1.0e-12,
            noise_ul: 1.0e-12,
        };
        let start = BcdStart::random(4, &mut rng);
        let weights = Weights::equal(1);
        let mut opts = BcdOptions::default();
        opts.tol_outer = 1e-8;
        let sol = bcd_joint(&set, &p, 0.5, &weights, start, &opts).unwrap();
        let rel = (sol.rate_point.dl - sol.rate_point.ul).abs() / sol.rate_point.dl;
        assert!(rel < 1e-6, "asymmetric point: {:?}", sol.rate_point);
    }

    #[test]
    fn zf_design_runs_and_degenerates_predictably() {
        let mut rng = ChaCha8Rng::seed_from_u64(415);
        let set = sample_channels(&scenario(2, (2, 2), (2, 2)), &mut rng).unwrap();
        let mut opts = BcdOptions::default();
        opts.beamformer = Beamformer::Zf;
        let start = BcdStart::random(4, &mut rng);
        let sol = bcd_joint(&set, &params(), 0.5, &Weights::equal(2), start, &opts).unwrap();
        assert!(sol.rate_point.dl.is_finite() && sol.rate_point.dl > 0.0);

        // More users than antennas cannot be zero-forced.
        let crowded = sample_channels(&scenario(3, (2, 1), (2, 2)), &mut rng).unwrap();
        let start = BcdStart::random(4, &mut rng);
        let err = bcd_joint(&crowded, &params(), 0.5, &Weights::equal(3), start, &opts);
        assert!(matches!(err, Err(crate::Error::Degenerate(_))));
    }

    #[test]
    fn slicing_concatenates_the_half_solutions() {
        let (joint, set) = solve(417, 1, (2, 1), 0.5);
        let p = params();
        let weights = Weights::equal(1);
        let out = slicing_designs(&set, &p, &p, &weights, &joint, &BcdOptions::default()).unwrap();
        let n = set.dl.irs_elements();
        let with = &out.with_interference;
        assert_eq!(with.theta_dl.len(), n);
        // First half carries the downlink-tuned phases, second half the
        // uplink-tuned ones.
        let without = &out.without_interference;
        for i in 0..n / 2 {
            assert_eq!(with.theta_dl.values()[i], without.theta_dl.values()[i]);
            assert_eq!(with.theta_dl.values()[n / 2 + i], without.theta_ul.values()[i]);
        }
        assert!(without.rate_point.dl > 0.0 && without.rate_point.ul > 0.0);
        assert!(with.rate_point.dl > 0.0 && with.rate_point.ul > 0.0);
    }

    #[test]
    #[should_panic(expected = "even element count")]
    fn slicing_rejects_odd_surfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(419);
        let set = sample_channels(&scenario(1, (2, 1), (3, 1)), &mut rng).unwrap();
        let start = BcdStart::random(3, &mut rng);
        let weights = Weights::equal(1);
        let joint =
            bcd_joint(&set, &params(), 0.5, &weights, start, &BcdOptions::default()).unwrap();
        let _ = slicing_designs(&set, &params(), &params(), &weights, &joint, &BcdOptions::default());
    }

    #[test]
    fn design_kind_names_round_trip() {
        for kind in DesignKind::ALL {
            let parsed: DesignKind = kind.as_str().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("sideways".parse::<DesignKind>().is_err());
    }

    #[test]
    fn beta_extremes_stay_finite() {
        for beta in [0.0, 1.0] {
            let (sol, _) = solve(421, 2, (2, 2), beta);
            assert!(sol.rate_point.dl.is_finite());
            assert!(sol.rate_point.ul.is_finite());
            for pair in sol.objective_trace.windows(2) {
                assert!(pair[1] >= pair[0] - 1e-9);
            }
        }
    }
}
