//! Uplink optimization: MMSE combining and fractional-programming power
//! control.
//!
//! For fixed uplink powers the SINR-optimal unit-norm combiner of user k is
//!     v_k = (sigma^2 I + sum_i p_i h_i h_i^H)^{-1} h_k, normalized.
//! For fixed combiners the transmit powers are driven by the quadratic
//! transform of the weighted sum rate.  With gains a_{k,i} = |v_k^H h_i|^2
//! one pass updates, in order,
//!     gamma_k = a_kk p_k / (sum_{i!=k} a_ki p_i + sigma^2)
//!     chi_k   = sqrt(eps_k (1+gamma_k) a_kk p_k) / (sum_i a_ki p_i + sigma^2)
//!     p_k     = min(P_max, chi_k^2 eps_k (1+gamma_k) a_kk
//!                          / (sum_i chi_i^2 a_ik)^2)
//! and the weighted uplink sum rate never decreases across passes.

use nalgebra::DMatrix;

use crate::metrics::{rate, sinr_ul};
use crate::{C64, CMatrix, CVector};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Iteration controls for [`fp_power_control`].
#[derive(Debug, Clone, Copy)]
pub struct FpOptions {
    /// Relative tolerance on the weighted uplink sum rate between passes.
    pub tol: f64,
    /// Maximum number of passes.
    pub max_iters: usize,
}

impl Default for FpOptions {
    fn default() -> Self {
        FpOptions { tol: 1e-6, max_iters: 100 }
    }
}

/// Combiners and power-control state of the uplink direction.
#[derive(Debug, Clone)]
pub struct UplinkState {
    /// Unit-norm combiners v_k, each of length M.
    pub combiners: Vec<CVector>,
    /// Transmit powers p_k in [0, P_max].
    pub powers: Vec<f64>,
    /// SINR auxiliaries gamma_k at the returned powers.
    pub gamma_aux: Vec<f64>,
    /// Quadratic-transform auxiliaries chi_k of the final pass.
    pub chi_aux: Vec<f64>,
}

/// Result of one power-control solve.
#[derive(Debug, Clone)]
pub struct FpRun {
    /// Final powers.
    pub powers: Vec<f64>,
    /// Achieved SINRs at the final powers.
    pub gammas: Vec<f64>,
    /// Final quadratic-transform auxiliaries.
    pub chis: Vec<f64>,
    /// Weighted uplink sum rate after the initial point and each pass.
    pub wsr_trace: Vec<f64>,
    /// True if every gain was zero and the initial powers were returned.
    pub degenerate: bool,
}

// ---------------------------------------------------------------------------
// MMSE combining
// ---------------------------------------------------------------------------

/// SINR-optimal unit-norm combiners for the given powers.  Falls back to
/// matched filters if the covariance is numerically singular (zero noise
/// with too few active users).
pub fn mmse_combiners(channels: &[CVector], powers: &[f64], noise: f64) -> Vec<CVector> {
    let k = channels.len();
    assert!(k > 0, "need at least one user");
    assert_eq!(powers.len(), k, "one power per user");
    let m = channels[0].len();
    assert!(channels.iter().all(|h| h.len() == m), "channel length mismatch");

    let mut cov = CMatrix::identity(m, m).scale(noise);
    for (h, &p) in channels.iter().zip(powers) {
        if p > 0.0 {
            cov += (h * h.adjoint()).scale(p);
        }
    }
    let chol = cov.cholesky();
    channels
        .iter()
        .map(|h| {
            let dir = match &chol {
                Some(c) => c.solve(h),
                None => h.clone(),
            };
            let norm = dir.norm();
            if norm == 0.0 {
                let mut e = CVector::zeros(m);
                e[0] = C64::new(1.0, 0.0);
                e
            } else {
                dir.scale(1.0 / norm)
            }
        })
        .collect()
}

/// Gain matrix a_{k,i} = |v_k^H h_i|^2 consumed by the power control.
pub fn combiner_gains(channels: &[CVector], combiners: &[CVector]) -> DMatrix<f64> {
    let k = channels.len();
    assert_eq!(combiners.len(), k, "one combiner per user");
    DMatrix::from_fn(k, k, |row, col| combiners[row].dotc(&channels[col]).norm_sqr())
}

// ---------------------------------------------------------------------------
// Fractional-programming power control
// ---------------------------------------------------------------------------

/// Iterate the quadratic-transform power updates from `p_init` until the
/// weighted uplink sum rate stalls.  `gains` is the K x K matrix
/// a_{k,i} = |v_k^H h_i|^2.
pub fn fp_power_control(
    gains: &DMatrix<f64>,
    weights: &[f64],
    noise: f64,
    p_max: f64,
    p_init: &[f64],
    opts: &FpOptions,
) -> FpRun {
    let k = gains.nrows();
    assert_eq!(gains.ncols(), k, "gain matrix must be square");
    assert_eq!(weights.len(), k, "one weight per user");
    assert_eq!(p_init.len(), k, "one initial power per user");
    let cap = p_max.max(0.0);

    let mut p: Vec<f64> = p_init.iter().map(|&x| x.clamp(0.0, cap)).collect();

    let gamma_at = |p: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|u| {
                let num = gains[(u, u)] * p[u];
                let mut den = noise;
                for i in 0..k {
                    if i != u {
                        den += gains[(u, i)] * p[i];
                    }
                }
                if num == 0.0 { 0.0 } else { num / den }
            })
            .collect()
    };
    let wsr_at = |p: &[f64]| -> f64 {
        gamma_at(p).iter().zip(weights).map(|(&g, &e)| e * rate(g)).sum()
    };

    if gains.iter().all(|&a| a == 0.0) {
        let w = wsr_at(&p);
        return FpRun {
            gammas: gamma_at(&p),
            chis: vec![0.0; k],
            powers: p,
            wsr_trace: vec![w],
            degenerate: true,
        };
    }

    let mut trace = vec![wsr_at(&p)];
    let mut chis = vec![0.0; k];
    for _ in 0..opts.max_iters {
        let gammas = gamma_at(&p);
        for u in 0..k {
            let mut den = noise;
            for i in 0..k {
                den += gains[(u, i)] * p[i];
            }
            let num = (weights[u] * (1.0 + gammas[u]) * gains[(u, u)] * p[u]).sqrt();
            chis[u] = if num == 0.0 { 0.0 } else { num / den };
        }
        for u in 0..k {
            let num = chis[u] * chis[u] * weights[u] * (1.0 + gammas[u]) * gains[(u, u)];
            let den: f64 = (0..k).map(|i| chis[i] * chis[i] * gains[(i, u)]).sum::<f64>();
            p[u] = if num == 0.0 { 0.0 } else { (num / (den * den)).min(cap) };
        }
        let j = wsr_at(&p);
        let j_prev = *trace.last().unwrap();
        trace.push(j);
        if (j - j_prev).abs() <= opts.tol * j_prev.abs().max(1e-12) {
            break;
        }
    }

    FpRun { gammas: gamma_at(&p), chis, powers: p, wsr_trace: trace, degenerate: false }
}

/// Weighted uplink sum rate for explicit channels, combiners and powers.
pub fn ul_weighted_sum_rate(
    channels: &[CVector],
    combiners: &[CVector],
    powers: &[f64],
    weights: &[f64],
    noise: f64,
) -> f64 {
    (0..channels.len())
        .map(|u| weights[u] * rate(sinr_ul(channels, &combiners[u], powers, noise, u)))
        .sum()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
