//! Sweep driver, trade-off envelopes and derived gain/loss metrics.
//!
//! A sweep evaluates the configured designs on a grid of bandwidth splits
//! (alpha) and scalarization weights (beta) over independent channel
//! realizations, averages the achieved rate pairs per grid cell, and
//! summarizes each design by the upper-right envelope of its mean points.
//! All randomness derives from one base seed through per-purpose RNG
//! streams, so results are byte-identical for any worker count.
//!
//! Envelope construction: the cell means plus their axis projections are
//! reduced to the concave upper-right frontier (Andrew's monotone chain
//! keeping collinear points, then a mutual-nondomination filter).  Between
//! envelope breakpoints the relative gap of two piecewise-linear frontiers
//! is a ratio of affine functions, hence monotone, so the gain and loss
//! maxima are attained at breakpoints and evaluated only there.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{place_users, sample_channels_at, ChannelScenario};
use crate::config::SystemConfig;
use crate::designs::{
    bcd_joint, derived_designs, slicing_designs, BcdOptions, BcdStart, DesignKind,
};
use crate::error::{Error, Result};
use crate::metrics::{RatePoint, Weights};
use crate::weighting::{independent_weights, pf_simulate_at, pf_weights, WeightingScheme};

// ---------------------------------------------------------------------------
// Deterministic RNG streams
// ---------------------------------------------------------------------------

/// RNG purposes, kept disjoint through the stream id.
#[derive(Debug, Clone, Copy)]
pub enum RngPurpose {
    /// User positions and channel fading of a realization.
    Channels,
    /// Per-realization weight draws.
    Weights,
    /// Phase initializations (indexed by grid cell).
    PhaseInit,
    /// Proportional-fair scheduling history.
    ProportionalFair,
}

impl RngPurpose {
    fn code(self) -> u64 {
        match self {
            RngPurpose::Channels => 0,
            RngPurpose::Weights => 1,
            RngPurpose::PhaseInit => 2,
            RngPurpose::ProportionalFair => 3,
        }
    }
}

/// Independent stream for (realization, purpose, index) under one seed.
pub fn stream_rng(seed: u64, realization: u64, purpose: RngPurpose, index: u64) -> ChaCha8Rng {
    assert!(index < (1 << 16), "stream index too large: {index}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((realization << 24) | (purpose.code() << 16) | index);
    rng
}

// ---------------------------------------------------------------------------
// Sweep results
// ---------------------------------------------------------------------------

/// Aggregated statistics of one design at one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub design: DesignKind,
    pub alpha: f64,
    pub beta: f64,
    pub dl_mean: f64,
    pub ul_mean: f64,
    pub dl_stderr: f64,
    pub ul_stderr: f64,
    pub outer_iters_mean: f64,
}

/// Envelope-derived comparison metrics (present only when both involved
/// designs were swept and the comparison is well defined).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GainLossMetrics {
    /// Peak relative downlink gain of joint over fixed-uplink at matched
    /// uplink rate.
    pub max_dl_gain: Option<f64>,
    /// Peak relative uplink gain of joint over fixed-downlink at matched
    /// downlink rate.
    pub max_ul_gain: Option<f64>,
    /// Peak relative downlink shortfall of joint under the individual
    /// benchmark at matched uplink rate.
    pub max_dl_loss: Option<f64>,
    /// Peak relative uplink shortfall of joint under the individual
    /// benchmark at matched downlink rate.
    pub max_ul_loss: Option<f64>,
}

/// Complete sweep output.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Designs in output order.
    pub designs: Vec<DesignKind>,
    /// Cell statistics, grouped by design, then alpha, then beta.
    pub cells: Vec<CellRecord>,
    /// Trade-off envelope of each design's mean points.
    pub envelopes: Vec<(DesignKind, Vec<RatePoint>)>,
    /// Cross-design comparison metrics.
    pub metrics: GainLossMetrics,
}

impl SweepOutput {
    /// Cell records of one design.
    pub fn cells_of(&self, kind: DesignKind) -> Vec<&CellRecord> {
        self.cells.iter().filter(|c| c.design == kind).collect()
    }

    /// Envelope of one design, if swept.
    pub fn envelope_of(&self, kind: DesignKind) -> Option<&[RatePoint]> {
        self.envelopes.iter().find(|(k, _)| *k == kind).map(|(_, e)| e.as_slice())
    }
}

// ---------------------------------------------------------------------------
// Sweep execution
// ---------------------------------------------------------------------------

type CellSample = (RatePoint, usize);

struct RealizationData {
    /// Indexed by [computed design][cell].
    samples: Vec<Vec<CellSample>>,
}

/// Run the full sweep described by `config`.
pub fn run_sweep(config: &SystemConfig) -> Result<SweepOutput> {
    config.validate()?;
    let scenario = config.scenario()?;
    let requested = config.design_kinds()?;
    let scheme = config.weighting_scheme()?;
    let opts = config.bcd_options()?;
    let elements = config.irs_element_count();

    let slicing_wanted = requested.iter().any(|k| {
        matches!(k, DesignKind::SlicingWithInterference | DesignKind::SlicingWithoutInterference)
    });
    if slicing_wanted && elements % 2 != 0 {
        return Err(Error::Config(format!(
            "surface slicing needs an even element count, got {elements}"
        )));
    }
    let derived_wanted = requested.iter().any(|k| {
        matches!(k, DesignKind::Individual | DesignKind::FixedDownlink | DesignKind::FixedUplink)
    });

    // Designs computed per cell, in canonical order.
    let mut computed = vec![DesignKind::Joint];
    if derived_wanted {
        computed.extend([DesignKind::Individual, DesignKind::FixedDownlink, DesignKind::FixedUplink]);
    }
    if slicing_wanted {
        computed
            .extend([DesignKind::SlicingWithInterference, DesignKind::SlicingWithoutInterference]);
    }

    let cells: Vec<(f64, f64)> = config
        .alpha_grid
        .iter()
        .flat_map(|&a| config.beta_grid.iter().map(move |&b| (a, b)))
        .collect();
    assert!(cells.len() < (1 << 16), "grid too large for the stream layout");

    let per_realization: Result<Vec<RealizationData>> = (0..config.realizations)
        .into_par_iter()
        .map(|r| {
            run_realization(
                config,
                &scenario,
                scheme,
                &opts,
                &computed,
                &cells,
                derived_wanted,
                slicing_wanted,
                r as u64,
            )
        })
        .collect();
    let per_realization = per_realization?;

    // Sequential reduction in realization order keeps sums bit-stable.
    let reals = config.realizations as f64;
    let mut cells_out = Vec::new();
    let mut envelopes = Vec::new();
    let mut mean_points: BTreeMap<usize, Vec<RatePoint>> = BTreeMap::new();
    for (di, &kind) in computed.iter().enumerate() {
        let mut design_means = Vec::with_capacity(cells.len());
        for ci in 0..cells.len() {
            let dl: Vec<f64> =
                per_realization.iter().map(|rd| rd.samples[di][ci].0.dl).collect();
            let ul: Vec<f64> =
                per_realization.iter().map(|rd| rd.samples[di][ci].0.ul).collect();
            let iters: f64 =
                per_realization.iter().map(|rd| rd.samples[di][ci].1 as f64).sum::<f64>() / reals;
            let (dl_mean, dl_stderr) = mean_stderr(&dl);
            let (ul_mean, ul_stderr) = mean_stderr(&ul);
            design_means.push(RatePoint { dl: dl_mean, ul: ul_mean });
            cells_out.push(CellRecord {
                design: kind,
                alpha: cells[ci].0,
                beta: cells[ci].1,
                dl_mean,
                ul_mean,
                dl_stderr,
                ul_stderr,
                outer_iters_mean: iters,
            });
        }
        mean_points.insert(di, design_means);
    }

    // Keep only the requested designs, in canonical order.
    let ordered: Vec<DesignKind> =
        DesignKind::ALL.iter().copied().filter(|k| requested.contains(k)).collect();
    cells_out.retain(|c| ordered.contains(&c.design));
    cells_out.sort_by(|a, b| {
        let ka = order_index(a.design);
        let kb = order_index(b.design);
        ka.cmp(&kb)
            .then(a.alpha.partial_cmp(&b.alpha).unwrap())
            .then(a.beta.partial_cmp(&b.beta).unwrap())
    });
    for &kind in &ordered {
        let di = computed.iter().position(|&k| k == kind).unwrap();
        envelopes.push((kind, envelope(&mean_points[&di])));
    }

    let metrics = gain_loss_metrics(
        lookup(&envelopes, DesignKind::Joint),
        lookup(&envelopes, DesignKind::FixedDownlink),
        lookup(&envelopes, DesignKind::FixedUplink),
        lookup(&envelopes, DesignKind::Individual),
    );

    Ok(SweepOutput { designs: ordered, cells: cells_out, envelopes, metrics })
}

fn order_index(kind: DesignKind) -> usize {
    DesignKind::ALL.iter().position(|&k| k == kind).unwrap()
}

fn lookup(envelopes: &[(DesignKind, Vec<RatePoint>)], kind: DesignKind) -> Option<&[RatePoint]> {
    envelopes.iter().find(|(k, _)| *k == kind).map(|(_, e)| e.as_slice())
}

#[allow(clippy::too_many_arguments)]
fn run_realization(
    config: &SystemConfig,
    scenario: &ChannelScenario,
    scheme: WeightingScheme,
    opts: &BcdOptions,
    computed: &[DesignKind],
    cells: &[(f64, f64)],
    derived_wanted: bool,
    slicing_wanted: bool,
    r: u64,
) -> Result<RealizationData> {
    let mut channel_rng = stream_rng(config.seed, r, RngPurpose::Channels, 0);
    let positions = place_users(&scenario.geometry, scenario.users, &mut channel_rng);
    let channels = sample_channels_at(scenario, &positions, &mut channel_rng)?;

    let weights = match scheme {
        WeightingScheme::Equal => Weights::equal(scenario.users),
        WeightingScheme::Independent => {
            let mut rng = stream_rng(config.seed, r, RngPurpose::Weights, 0);
            independent_weights(scenario.users, &mut rng)
        }
        WeightingScheme::ProportionalFair => {
            let mut rng = stream_rng(config.seed, r, RngPurpose::ProportionalFair, 0);
            let reference = config.duplex_params(0.5)?;
            let run = pf_simulate_at(
                scenario,
                &positions,
                &reference,
                0.5,
                config.pf_slots,
                opts,
                &mut rng,
            )?;
            pf_weights(&run.history)
        }
    };

    // Interior split used by the direction-forced benchmark solves when a
    // sweep corner (alpha = 0 or 1) silences their direction.
    let forced_reference = config.duplex_params(0.5)?;

    let mut samples: Vec<Vec<CellSample>> = vec![Vec::with_capacity(cells.len()); computed.len()];
    for (ci, &(alpha, beta)) in cells.iter().enumerate() {
        let params = config.duplex_params(alpha)?;
        let mut theta_rng = stream_rng(config.seed, r, RngPurpose::PhaseInit, ci as u64);
        let start = BcdStart::random(channels.dl.irs_elements(), &mut theta_rng);
        let joint = bcd_joint(&channels, &params, beta, &weights, start, opts)?;
        samples[0].push((joint.rate_point, joint.outer_iters));
        let mut slot = 1;
        if derived_wanted {
            let fixed =
                derived_designs(&channels, &params, &forced_reference, &weights, &joint, opts)?;
            samples[slot].push((fixed.individual.rate_point, fixed.individual.outer_iters));
            samples[slot + 1]
                .push((fixed.fixed_downlink.rate_point, fixed.fixed_downlink.outer_iters));
            samples[slot + 2].push((fixed.fixed_uplink.rate_point, fixed.fixed_uplink.outer_iters));
            slot += 3;
        }
        if slicing_wanted {
            let sliced =
                slicing_designs(&channels, &params, &forced_reference, &weights, &joint, opts)?;
            samples[slot]
                .push((sliced.with_interference.rate_point, sliced.with_interference.outer_iters));
            samples[slot + 1].push((
                sliced.without_interference.rate_point,
                sliced.without_interference.outer_iters,
            ));
        }
    }
    Ok(RealizationData { samples })
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1, "empty sample");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

/// Upper-right trade-off envelope of a point cloud: the concave frontier
/// of the points and their axis projections, with collinear breakpoints
/// retained and dominated points removed.  Sorted by downlink rate.
pub fn envelope(points: &[RatePoint]) -> Vec<RatePoint> {
    if points.is_empty() {
        return Vec::new();
    }
    let max_dl = points.iter().map(|p| p.dl).fold(f64::NEG_INFINITY, f64::max);
    let max_ul = points.iter().map(|p| p.ul).fold(f64::NEG_INFINITY, f64::max);
    let mut cand: Vec<RatePoint> = points.to_vec();
    cand.push(RatePoint { dl: max_dl, ul: 0.0 });
    cand.push(RatePoint { dl: 0.0, ul: max_ul });
    cand.sort_by(|a, b| {
        a.dl.partial_cmp(&b.dl).unwrap().then(b.ul.partial_cmp(&a.ul).unwrap())
    });
    // Points sharing a downlink rate are dominated by the first (highest
    // uplink) of their run.
    cand.dedup_by(|a, b| a.dl == b.dl);

    // Upper hull, popping only on strict left turns so collinear points
    // survive.
    let mut hull: Vec<RatePoint> = Vec::with_capacity(cand.len());
    for p in cand {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let a = hull[hull.len() - 1];
            let cross = (a.dl - o.dl) * (p.ul - o.ul) - (a.ul - o.ul) * (p.dl - o.dl);
            if cross > 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    // Nondomination: scanning right to left, keep points whose uplink rate
    // strictly exceeds everything to their right.
    let mut frontier = Vec::with_capacity(hull.len());
    let mut best_ul = f64::NEG_INFINITY;
    for p in hull.into_iter().rev() {
        if p.ul > best_ul {
            best_ul = p.ul;
            frontier.push(p);
        }
    }
    frontier.reverse();
    frontier
}

/// Piecewise-linear view of an envelope, with flat extension toward the
/// axes (rates below the frontier minimum map to the frontier maximum of
/// the other coordinate).
#[derive(Debug, Clone)]
pub struct EnvelopeCurve {
    /// Frontier points sorted by downlink rate with strictly decreasing
    /// uplink rate.
    points: Vec<RatePoint>,
}

impl EnvelopeCurve {
    /// Wrap a frontier produced by [`envelope`]; `None` when empty.
    pub fn new(frontier: &[RatePoint]) -> Option<EnvelopeCurve> {
        if frontier.is_empty() {
            return None;
        }
        Some(EnvelopeCurve { points: frontier.to_vec() })
    }

    /// Largest achievable uplink rate.
    pub fn max_ul(&self) -> f64 {
        self.points.first().unwrap().ul
    }

    /// Largest achievable downlink rate.
    pub fn max_dl(&self) -> f64 {
        self.points.last().unwrap().dl
    }

    /// Uplink coordinates of the breakpoints.
    pub fn ul_breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.ul)
    }

    /// Downlink coordinates of the breakpoints.
    pub fn dl_breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.dl)
    }

    /// Downlink rate achievable at uplink rate `ul` (`None` beyond the
    /// frontier).
    pub fn dl_at(&self, ul: f64) -> Option<f64> {
        if ul > self.max_ul() {
            return None;
        }
        let pts = &self.points;
        let last = pts.last().unwrap();
        if ul <= last.ul {
            return Some(last.dl);
        }
        // pts[i].ul decreases; find the segment bracketing ul.
        for w in pts.windows(2) {
            let (hi, lo) = (w[0], w[1]);
            if ul <= hi.ul && ul >= lo.ul {
                let t = (hi.ul - ul) / (hi.ul - lo.ul);
                return Some(hi.dl + t * (lo.dl - hi.dl));
            }
        }
        Some(pts[0].dl)
    }

    /// Uplink rate achievable at downlink rate `dl` (`None` beyond the
    /// frontier).
    pub fn ul_at(&self, dl: f64) -> Option<f64> {
        if dl > self.max_dl() {
            return None;
        }
        let pts = &self.points;
        let first = pts.first().unwrap();
        if dl <= first.dl {
            return Some(first.ul);
        }
        for w in pts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if dl >= lo.dl && dl <= hi.dl {
                let t = (dl - lo.dl) / (hi.dl - lo.dl);
                return Some(lo.ul + t * (hi.ul - lo.ul));
            }
        }
        Some(pts.last().unwrap().ul)
    }

    /// The same frontier with the two directions exchanged.
    pub fn swapped(&self) -> EnvelopeCurve {
        let mut pts: Vec<RatePoint> =
            self.points.iter().map(|p| RatePoint { dl: p.ul, ul: p.dl }).collect();
        pts.reverse();
        EnvelopeCurve { points: pts }
    }
}

// ---------------------------------------------------------------------------
// Gain and loss metrics
// ---------------------------------------------------------------------------

/// Which curve supplies the denominator of the relative difference.
#[derive(Debug, Clone, Copy)]
enum Denominator {
    First,
    Second,
}

/// Maximum of (DL_a(u) - DL_b(u)) / DL_denom(u) over the shared uplink
/// range, evaluated at the breakpoints of both curves.  Levels where either
/// curve has already fallen to zero are skipped: at the uplink level where a
/// frontier terminates on the axis its downlink rate is exactly zero, and a
/// relative comparison there reads 100% off an arbitrarily small excess of
/// the other curve, which says nothing about the interior trade-off.
fn max_rel_dl_difference(
    a: &EnvelopeCurve,
    b: &EnvelopeCurve,
    denom: Denominator,
) -> Option<f64> {
    let hi = a.max_ul().min(b.max_ul());
    if hi < 0.0 {
        return None;
    }
    let mut candidates: Vec<f64> = a
        .ul_breakpoints()
        .chain(b.ul_breakpoints())
        .filter(|&u| u >= 0.0 && u <= hi)
        .chain([0.0, hi])
        .collect();
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
    candidates.dedup();

    let mut best: Option<f64> = None;
    for u in candidates {
        let (Some(da), Some(db)) = (a.dl_at(u), b.dl_at(u)) else { continue };
        if da <= 0.0 || db <= 0.0 {
            continue;
        }
        let d = match denom {
            Denominator::First => da,
            Denominator::Second => db,
        };
        let rel = (da - db) / d;
        best = Some(best.map_or(rel, |x: f64| x.max(rel)));
    }
    best
}

/// Envelope comparison metrics for the standard design pairs.
pub fn gain_loss_metrics(
    joint: Option<&[RatePoint]>,
    fixed_dl: Option<&[RatePoint]>,
    fixed_ul: Option<&[RatePoint]>,
    individual: Option<&[RatePoint]>,
) -> GainLossMetrics {
    let joint = joint.and_then(EnvelopeCurve::new);
    let fixed_dl = fixed_dl.and_then(EnvelopeCurve::new);
    let fixed_ul = fixed_ul.and_then(EnvelopeCurve::new);
    let individual = individual.and_then(EnvelopeCurve::new);

    // Reported as nonnegative fractions: sub-tolerance dips below zero are
    // solver noise, not a meaningful negative gain or loss.
    let clamp = |v: Option<f64>| v.map(|x: f64| x.max(0.0));
    let mut m = GainLossMetrics::default();
    if let (Some(j), Some(fu)) = (&joint, &fixed_ul) {
        m.max_dl_gain = clamp(max_rel_dl_difference(j, fu, Denominator::Second));
    }
    if let (Some(j), Some(fd)) = (&joint, &fixed_dl) {
        m.max_ul_gain =
            clamp(max_rel_dl_difference(&j.swapped(), &fd.swapped(), Denominator::Second));
    }
    if let (Some(i), Some(j)) = (&individual, &joint) {
        m.max_dl_loss = clamp(max_rel_dl_difference(i, j, Denominator::First));
        m.max_ul_loss =
            clamp(max_rel_dl_difference(&i.swapped(), &j.swapped(), Denominator::First));
    }
    m
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Format with 12 significant digits; negative zero normalizes to zero.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Write per-design cell tables, the envelope table and the metrics table
/// into `dir` (created if missing).  Returns the paths written.
pub fn write_sweep_csvs(output: &SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    for &kind in &output.designs {
        let path = dir.join(format!("{}.csv", kind.as_str()));
        let mut file = std::fs::File::create(&path)?;
        writeln!(
            file,
            "design,alpha,beta,dl_rate_mean,ul_rate_mean,dl_rate_stderr,ul_rate_stderr,outer_iters_mean"
        )?;
        for cell in output.cells.iter().filter(|c| c.design == kind) {
            writeln!(
                file,
                "{},{},{},{},{},{},{},{}",
                kind.as_str(),
                format_float(cell.alpha),
                format_float(cell.beta),
                format_float(cell.dl_mean),
                format_float(cell.ul_mean),
                format_float(cell.dl_stderr),
                format_float(cell.ul_stderr),
                format_float(cell.outer_iters_mean),
            )?;
        }
        written.push(path);
    }

    let path = dir.join("envelope.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "design,dl,ul")?;
    for (kind, points) in &output.envelopes {
        for p in points {
            writeln!(file, "{},{},{}", kind.as_str(), format_float(p.dl), format_float(p.ul))?;
        }
    }
    written.push(path);

    let path = dir.join("metrics.csv");
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "design_pair,metric,value")?;
    let rows = [
        ("joint_vs_fixed_uplink", "max_dl_gain", output.metrics.max_dl_gain),
        ("joint_vs_fixed_downlink", "max_ul_gain", output.metrics.max_ul_gain),
        ("individual_vs_joint", "max_dl_loss", output.metrics.max_dl_loss),
        ("individual_vs_joint", "max_ul_loss", output.metrics.max_ul_loss),
    ];
    for (pair, metric, value) in rows {
        if let Some(v) = value {
            writeln!(file, "{pair},{metric},{}", format_float(v))?;
        }
    }
    written.push(path);

    Ok(written)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
