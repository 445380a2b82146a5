//! Downlink beamforming: WMMSE precoding and the zero-forcing baseline.
//!
//! The WMMSE cycle for weighted-sum-rate maximization under a sum power
//! constraint alternates, for fixed effective channels {h_k}:
//!
//!   u_k = (sum_i |h_k^T w_i|^2 + sigma^2) / (sum_{i!=k} |h_k^T w_i|^2 + sigma^2)
//!   t_k = h_k^T w_k / (sum_i |h_k^T w_i|^2 + sigma^2)
//!   w_k = eps_k u_k t_k (nu I + sum_i eps_i u_i |t_i|^2 h_i^* h_i^T)^{-1} h_k^*
//!
//! with nu >= 0 the smallest multiplier for which sum_k ||w_k||^2 <=
//! P_max.  The system matrix is Hermitian PSD, so one eigendecomposition
//! per cycle turns every power evaluation during the nu search into an
//! O(KM) sum; nu = 0 uses the pseudo-inverse restricted to the nonzero
//! eigenspace.  Each full cycle does not decrease the weighted sum rate.
//!
//! Zero-forcing inverts the row matrix of effective channels (transpose
//! pairing) from the right and splits the power budget equally.

use crate::error::{Error, Result};
use crate::metrics::{rate, sinr_dl};
use crate::{C64, CMatrix, CVector};

// ---------------------------------------------------------------------------
// Options and state
// ---------------------------------------------------------------------------

/// Iteration controls for [`wmmse_solve`].
#[derive(Debug, Clone, Copy)]
pub struct WmmseOptions {
    /// Relative tolerance on the weighted sum rate between cycles.
    pub tol: f64,
    /// Maximum number of cycles.
    pub max_iters: usize,
    /// Relative tolerance on the active power constraint.
    pub power_tol: f64,
    /// Maximum bracket doublings in the nu search.
    pub max_doublings: u32,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        WmmseOptions { tol: 1e-6, max_iters: 100, power_tol: 1e-8, max_doublings: 60 }
    }
}

/// Converged WMMSE quantities.
#[derive(Debug, Clone)]
pub struct WmmseState {
    /// Receiver MSE weights u_k (>= 1).
    pub receiver_gains: Vec<f64>,
    /// Receiver coefficients t_k.
    pub receiver_coeffs: Vec<C64>,
    /// Precoders w_k, each of length M.
    pub precoders: Vec<CVector>,
    /// Power multiplier nu of the final cycle.
    pub nu: f64,
}

/// Result of one WMMSE solve.
#[derive(Debug, Clone)]
pub struct WmmseRun {
    /// Final state.
    pub state: WmmseState,
    /// Weighted sum rate after the initial point and after each cycle.
    pub wsr_trace: Vec<f64>,
    /// True if a rank-deficient system matrix forced the pseudo-inverse path.
    pub regularized: bool,
}

// ---------------------------------------------------------------------------
// Initial precoders
// ---------------------------------------------------------------------------

/// Maximum-ratio precoders w_k = sqrt(P/K) h_k^* / ||h_k|| (transpose
/// pairing), the default warm start.  A zero channel gets a zero precoder.
pub fn mrt_precoders(channels: &[CVector], p_max: f64) -> Vec<CVector> {
    let k = channels.len();
    assert!(k > 0, "need at least one user");
    let per_user = (p_max.max(0.0) / k as f64).sqrt();
    channels
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm == 0.0 {
                CVector::zeros(h.len())
            } else {
                h.map(|c| c.conj()).scale(per_user / norm)
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// WMMSE solver
// ---------------------------------------------------------------------------

/// Run the WMMSE cycle from `init` (or MRT) until the weighted sum rate
/// stalls.  `channels` are effective downlink channels, `weights` the
/// per-user rate weights.
pub fn wmmse_solve(
    channels: &[CVector],
    weights: &[f64],
    noise: f64,
    p_max: f64,
    init: Option<&[CVector]>,
    opts: &WmmseOptions,
) -> Result<WmmseRun> {
    let k = channels.len();
    assert!(k > 0, "need at least one user");
    assert_eq!(weights.len(), k, "one weight per user");
    let m = channels[0].len();
    assert!(channels.iter().all(|h| h.len() == m), "channel length mismatch");

    if p_max <= 0.0 {
        let state = WmmseState {
            receiver_gains: vec![1.0; k],
            receiver_coeffs: vec![C64::new(0.0, 0.0); k],
            precoders: vec![CVector::zeros(m); k],
            nu: 0.0,
        };
        return Ok(WmmseRun { state, wsr_trace: vec![0.0], regularized: false });
    }

    let mut precoders: Vec<CVector> = match init {
        Some(w0) => {
            assert_eq!(w0.len(), k, "one initial precoder per user");
            let total: f64 = w0.iter().map(|w| w.norm_squared()).sum();
            if total > p_max {
                let s = (p_max / total).sqrt();
                w0.iter().map(|w| w.scale(s)).collect()
            } else {
                w0.to_vec()
            }
        }
        None => mrt_precoders(channels, p_max),
    };

    let wsr = |w: &[CVector]| -> f64 {
        (0..k).map(|i| weights[i] * rate(sinr_dl(channels, w, noise, i))).sum()
    };

    let mut trace = vec![wsr(&precoders)];
    let mut gains = vec![1.0; k];
    let mut coeffs = vec![C64::new(0.0, 0.0); k];
    let mut nu = 0.0;
    let mut regularized = false;

    for _ in 0..opts.max_iters {
        // Receiver updates from the current precoders.
        for i in 0..k {
            let h = &channels[i];
            let mut total = noise;
            let mut interf = noise;
            for (j, w) in precoders.iter().enumerate() {
                let g = h.dot(w).norm_sqr();
                total += g;
                if j != i {
                    interf += g;
                }
            }
            gains[i] = if total == interf || interf == 0.0 { 1.0 } else { total / interf };
            coeffs[i] =
                if total == 0.0 { C64::new(0.0, 0.0) } else { h.dot(&precoders[i]) / total };
        }

        // System matrix B = sum_i eps_i u_i |t_i|^2 h_i^* h_i^T.
        let mut b = CMatrix::zeros(m, m);
        for i in 0..k {
            let c = weights[i] * gains[i] * coeffs[i].norm_sqr();
            if c > 0.0 {
                let hc = channels[i].map(|x| x.conj());
                b += (&hc * hc.adjoint()).scale(c);
            }
        }
        let eig = b.symmetric_eigen();
        let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let lambda_max = lambda.iter().cloned().fold(0.0f64, f64::max);
        let rank_tol = lambda_max * 1e-12;

        // Per-user coefficient c_k and spectral coordinates of h_k^*.
        let scales: Vec<C64> =
            (0..k).map(|i| coeffs[i] * (weights[i] * gains[i])).collect();
        let coords: Vec<CVector> = (0..k)
            .map(|i| eig.eigenvectors.adjoint() * channels[i].map(|x| x.conj()))
            .collect();

        let power = |nu: f64| -> f64 {
            let mut total = 0.0;
            for i in 0..k {
                let c2 = scales[i].norm_sqr();
                if c2 == 0.0 {
                    continue;
                }
                let mut s = 0.0;
                for (j, &l) in lambda.iter().enumerate() {
                    if nu == 0.0 && l <= rank_tol {
                        continue;
                    }
                    s += coords[i][j].norm_sqr() / ((l + nu) * (l + nu));
                }
                total += c2 * s;
            }
            total
        };

        if power(0.0) <= p_max {
            nu = 0.0;
            if lambda.iter().any(|&l| l <= rank_tol) {
                regularized = true;
            }
        } else {
            nu = nu_bisection(&power, p_max, opts)?;
        }

        for i in 0..k {
            let mut w = CVector::zeros(m);
            if scales[i].norm_sqr() > 0.0 {
                for (j, &l) in lambda.iter().enumerate() {
                    if nu == 0.0 && l <= rank_tol {
                        continue;
                    }
                    w += eig.eigenvectors.column(j).scale(1.0) * (coords[i][j] / C64::new(l + nu, 0.0));
                }
                w *= scales[i];
            }
            precoders[i] = w;
        }

        let j = wsr(&precoders);
        let j_prev = *trace.last().unwrap();
        trace.push(j);
        if (j - j_prev).abs() <= opts.tol * j_prev.abs().max(1e-12) {
            break;
        }
    }

    let state = WmmseState { receiver_gains: gains, receiver_coeffs: coeffs, precoders, nu };
    Ok(WmmseRun { state, wsr_trace: trace, regularized })
}

/// Find the smallest nu >= 0 with power(nu) <= p_max for a continuous
/// nonincreasing power function, to relative tolerance `opts.power_tol` on
/// the active constraint.  The upper bracket grows by doubling, at most
/// `opts.max_doublings` times.
pub fn nu_bisection(power: &dyn Fn(f64) -> f64, p_max: f64, opts: &WmmseOptions) -> Result<f64> {
    assert!(p_max > 0.0, "power budget must be positive");
    if power(0.0) <= p_max {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while power(hi) > p_max {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::Numerical(format!(
                "nu bracket not found after {} doublings (power({hi:.3e}) still above {p_max:.3e})",
                opts.max_doublings
            )));
        }
    }
    let tol = opts.power_tol * p_max;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let p = power(mid);
        if (p - p_max).abs() <= tol {
            return Ok(mid);
        }
        if p > p_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    // The interval has collapsed; the boundary solves the constraint as
    // tightly as f64 permits.
    Ok(hi)
}

// ---------------------------------------------------------------------------
// Zero-forcing
// ---------------------------------------------------------------------------

/// Zero-forcing precoders: columns of the right pseudo-inverse of the
/// K x M row matrix of effective channels (transpose pairing), scaled to
/// equal per-user power with total p_max.  Requires K <= M and a full-rank
/// channel matrix.
pub fn zf_beamform(channels: &[CVector], p_max: f64) -> Result<Vec<CVector>> {
    let k = channels.len();
    assert!(k > 0, "need at least one user");
    let m = channels[0].len();
    assert!(channels.iter().all(|h| h.len() == m), "channel length mismatch");
    if k > m {
        return Err(Error::Degenerate(format!(
            "zero-forcing needs K <= M, got K={k}, M={m}"
        )));
    }

    let mut h = CMatrix::zeros(k, m);
    for (i, ch) in channels.iter().enumerate() {
        for j in 0..m {
            h[(i, j)] = ch[j];
        }
    }
    // Rank check through the Gram spectrum; Cholesky can slip past exact
    // rank deficiency on a roundoff-positive pivot.
    let gram = &h * h.adjoint();
    let eig = gram.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if lambda_max <= 0.0 || eig.eigenvalues.iter().any(|&l| l <= lambda_max * 1e-12) {
        return Err(Error::Degenerate("rank-deficient channel matrix in zero-forcing".into()));
    }
    let mut gram_inv = CMatrix::zeros(k, k);
    for j in 0..k {
        let q = eig.eigenvectors.column(j).clone_owned();
        gram_inv += (&q * q.adjoint()).unscale(eig.eigenvalues[j]);
    }
    // Right pseudo-inverse H^H (H H^H)^{-1}, taken column by column.
    let pinv = h.adjoint() * gram_inv;
    let per_user = (p_max.max(0.0) / k as f64).sqrt();
    let mut precoders = Vec::with_capacity(k);
    for i in 0..k {
        let x = pinv.column(i).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::Degenerate("zero pseudo-inverse column in zero-forcing".into()));
        }
        precoders.push(x.scale(per_user / norm));
    }
    Ok(precoders)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
