//! SINRs, weighted rates and the scalarized uplink-downlink objective.
//!
//! Downlink SINR of user k under precoders {w_i}:
//!     gamma_dl_k = |h_k^T w_k|^2 / (sigma^2 + sum_{i!=k} |h_k^T w_i|^2)
//! (transpose pairing, no conjugation on the channel).  Uplink SINR under
//! unit-norm combiner v_k and powers {p_i}:
//!     gamma_ul_k = p_k |h_k^H v_k|^2
//!               / (sigma^2 ||v_k||^2 + sum_{i!=k} p_i |h_i^H v_k|^2)
//! (conjugate pairing).  Weighted rates fold in the bandwidth split alpha:
//!     dl = alpha * sum_k eps_dl_k log2(1 + gamma_dl_k)
//!     ul = (1 - alpha) * sum_k eps_ul_k log2(1 + gamma_ul_k)
//! and the scalarized objective for trade-off parameter beta is
//!     J = beta * dl + (1 - beta) * ul.

use crate::channel::DuplexMode;
use crate::CVector;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Per-user rate weights for both directions; positive, each direction
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    /// Downlink weights, length K.
    pub dl: Vec<f64>,
    /// Uplink weights, length K.
    pub ul: Vec<f64>,
}

impl Weights {
    /// Equal weights 1/K for both directions.
    pub fn equal(users: usize) -> Weights {
        assert!(users > 0, "need at least one user");
        let w = vec![1.0 / users as f64; users];
        Weights { dl: w.clone(), ul: w }
    }

    /// Normalize raw positive weights to sum to one per direction.
    pub fn normalized(dl: &[f64], ul: &[f64]) -> Weights {
        Weights { dl: normalize_simplex(dl), ul: normalize_simplex(ul) }
    }

    /// Number of users K.
    pub fn users(&self) -> usize {
        self.dl.len()
    }

    /// Copy with the two directions exchanged.
    pub fn swapped(&self) -> Weights {
        Weights { dl: self.ul.clone(), ul: self.dl.clone() }
    }
}

fn normalize_simplex(raw: &[f64]) -> Vec<f64> {
    assert!(!raw.is_empty(), "weights must be nonempty");
    assert!(raw.iter().all(|&x| x > 0.0), "weights must be positive");
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|&x| x / sum).collect()
}

/// Achieved weighted rates of one configuration, in bit/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// alpha-weighted downlink sum rate.
    pub dl: f64,
    /// (1-alpha)-weighted uplink sum rate.
    pub ul: f64,
}

/// Physical-layer parameters after the duplex split for a given alpha.
///
/// TDD uses the full band in both directions; FDD assigns a fraction alpha
/// of the band to the downlink, which scales the downlink power budget and
/// noise power by alpha and the uplink counterparts by (1 - alpha).
#[derive(Debug, Clone, Copy)]
pub struct DuplexParams {
    /// Duplexing mode.
    pub mode: DuplexMode,
    /// Downlink bandwidth fraction in [0, 1].
    pub alpha: f64,
    /// Downlink sum power budget in W.
    pub p_max_dl: f64,
    /// Uplink per-user power budget in W.
    pub p_max_ul: f64,
    /// Downlink noise power in W.
    pub noise_dl: f64,
    /// Uplink noise power in W.
    pub noise_ul: f64,
}

impl DuplexParams {
    /// Apply the duplex split to full-band power budgets and noise powers.
    pub fn split(
        mode: DuplexMode,
        alpha: f64,
        p_dl_full: f64,
        p_ul_full: f64,
        noise_dl_full: f64,
        noise_ul_full: f64,
    ) -> DuplexParams {
        assert!((0.0..=1.0).contains(&alpha), "alpha must lie in [0, 1]");
        match mode {
            DuplexMode::Tdd => DuplexParams {
                mode,
                alpha,
                p_max_dl: p_dl_full,
                p_max_ul: p_ul_full,
                noise_dl: noise_dl_full,
                noise_ul: noise_ul_full,
            },
            DuplexMode::Fdd => DuplexParams {
                mode,
                alpha,
                p_max_dl: alpha * p_dl_full,
                p_max_ul: (1.0 - alpha) * p_ul_full,
                noise_dl: alpha * noise_dl_full,
                noise_ul: (1.0 - alpha) * noise_ul_full,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// SINRs and rates
// ---------------------------------------------------------------------------

/// Downlink SINR of user k (transpose pairing).
pub fn sinr_dl(channels: &[CVector], precoders: &[CVector], noise: f64, k: usize) -> f64 {
    assert_eq!(channels.len(), precoders.len(), "one precoder per user");
    assert!(k < channels.len(), "user index out of range");
    let h = &channels[k];
    let signal = h.dot(&precoders[k]).norm_sqr();
    let mut denom = noise;
    for (i, w) in precoders.iter().enumerate() {
        if i != k {
            denom += h.dot(w).norm_sqr();
        }
    }
    safe_ratio(signal, denom)
}

/// Uplink SINR of user k under combiner v_k (conjugate pairing).
pub fn sinr_ul(channels: &[CVector], combiner: &CVector, powers: &[f64], noise: f64, k: usize) -> f64 {
    assert_eq!(channels.len(), powers.len(), "one power per user");
    assert!(k < channels.len(), "user index out of range");
    let signal = powers[k] * channels[k].dotc(combiner).norm_sqr();
    let mut denom = noise * combiner.norm_squared();
    for (i, h) in channels.iter().enumerate() {
        if i != k {
            denom += powers[i] * h.dotc(combiner).norm_sqr();
        }
    }
    safe_ratio(signal, denom)
}

/// 0/0 (zero-power link) resolves to zero SINR.
fn safe_ratio(num: f64, denom: f64) -> f64 {
    if num == 0.0 { 0.0 } else { num / denom }
}

/// Shannon rate log2(1 + gamma).
pub fn rate(gamma: f64) -> f64 {
    (1.0 + gamma).log2()
}

/// Weighted rate pair for given per-user SINRs.
pub fn weighted_rate_point(
    sinrs_dl: &[f64],
    sinrs_ul: &[f64],
    weights: &Weights,
    alpha: f64,
) -> RatePoint {
    assert_eq!(sinrs_dl.len(), weights.dl.len(), "DL SINR/weight length mismatch");
    assert_eq!(sinrs_ul.len(), weights.ul.len(), "UL SINR/weight length mismatch");
    let dl: f64 = sinrs_dl.iter().zip(&weights.dl).map(|(&g, &e)| e * rate(g)).sum();
    let ul: f64 = sinrs_ul.iter().zip(&weights.ul).map(|(&g, &e)| e * rate(g)).sum();
    RatePoint { dl: alpha * dl, ul: (1.0 - alpha) * ul }
}

/// Scalarized objective J = beta * dl + (1 - beta) * ul.
pub fn wsp_objective(point: &RatePoint, beta: f64) -> f64 {
    beta * point.dl + (1.0 - beta) * point.ul
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::standard_complex;
    use crate::{C64, CMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sinr_dl_single_user_closed_form() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let p = 4.0f64;
        let w = CVector::from_vec(vec![C64::new(p.sqrt(), 0.0), C64::new(0.0, 0.0)]);
        let noise = 0.5;
        let got = sinr_dl(&[h], &[w], noise, 0);
        assert!((got - p / noise).abs() < 1e-12);
    }

    #[test]
    fn sinr_dl_zero_precoders_and_zero_noise() {
        let h = CVector::from_element(2, C64::new(1.0, 1.0));
        let w = CVector::zeros(2);
        assert_eq!(sinr_dl(&[h.clone()], &[w.clone()], 1.0, 0), 0.0);
        assert_eq!(sinr_dl(&[h], &[w], 0.0, 0), 0.0);
    }

    #[test]
    fn sinr_dl_orthogonal_interference_vanishes() {
        // h_0^T w_1 = 0 by construction, so user 0 sees no interference.
        let h0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let h1 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let w0 = CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        let w1 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(3.0, 0.0)]);
        let got = sinr_dl(&[h0, h1], &[w0, w1], 1.0, 0);
        assert!((got - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_ul_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let m = 4;
        let k = 3;
        let chans: Vec<CVector> =
            (0..k).map(|_| CVector::from_fn(m, |_, _| standard_complex(&mut rng))).collect();
        let mut v = CVector::from_fn(m, |_, _| standard_complex(&mut rng));
        v /= C64::new(v.norm(), 0.0);
        let powers = [0.5, 1.2, 0.8];
        let noise = 0.3;
        for user in 0..k {
            // Oracle: v^H (sigma^2 I + sum_{i!=user} p_i h_i h_i^H) v.
            let mut cov = CMatrix::identity(m, m).scale(noise);
            for i in 0..k {
                if i != user {
                    cov += (&chans[i] * chans[i].adjoint()).scale(powers[i]);
                }
            }
            let denom = (v.adjoint() * &cov * &v)[(0, 0)].re;
            let num = powers[user] * chans[user].dotc(&v).norm_sqr();
            let got = sinr_ul(&chans, &v, &powers, noise, user);
            assert!((got - num / denom).abs() / (num / denom) < 1e-12);
        }
    }

    #[test]
    fn sinr_ul_single_user_matched_filter() {
        let h = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0)]);
        let v = &h / C64::new(h.norm(), 0.0);
        let p = 0.7;
        let noise = 0.2;
        let got = sinr_ul(std::slice::from_ref(&h), &v, &[p], noise, 0);
        assert!((got - p * h.norm_squared() / noise).abs() < 1e-12);
    }

    #[test]
    fn sinr_ul_zero_power_is_zero() {
        let h = CVector::from_element(2, C64::new(1.0, 0.0));
        let v = CVector::from_element(2, C64::new(0.5, 0.0));
        assert_eq!(sinr_ul(std::slice::from_ref(&h), &v, &[0.0], 1.0, 0), 0.0);
    }

    #[test]
    fn weighted_rates_alpha_extremes() {
        let w = Weights::equal(2);
        let p0 = weighted_rate_point(&[1.0, 3.0], &[7.0, 15.0], &w, 0.0);
        assert_eq!(p0.dl, 0.0);
        assert!((p0.ul - 0.5 * (3.0 + 4.0)).abs() < 1e-12);
        let p1 = weighted_rate_point(&[1.0, 3.0], &[7.0, 15.0], &w, 1.0);
        assert_eq!(p1.ul, 0.0);
        assert!((p1.dl - 0.5 * (1.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn wsp_is_beta_blend() {
        let point = RatePoint { dl: 2.0, ul: 0.5 };
        assert!((wsp_objective(&point, 0.0) - 0.5).abs() < 1e-15);
        assert!((wsp_objective(&point, 1.0) - 2.0).abs() < 1e-15);
        assert!((wsp_objective(&point, 0.25) - (0.25 * 2.0 + 0.75 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn direction_swap_mirrors_rate_point() {
        let weights = Weights::normalized(&[1.0, 2.0], &[3.0, 1.0]);
        let dl_sinr = [1.5, 0.7];
        let ul_sinr = [0.2, 2.5];
        let alpha = 0.3;
        let p = weighted_rate_point(&dl_sinr, &ul_sinr, &weights, alpha);
        let q = weighted_rate_point(&ul_sinr, &dl_sinr, &weights.swapped(), 1.0 - alpha);
        assert!((p.dl - q.ul).abs() < 1e-12);
        assert!((p.ul - q.dl).abs() < 1e-12);
    }

    #[test]
    fn duplex_split_tdd_keeps_full_band() {
        let p = DuplexParams::split(DuplexMode::Tdd, 0.3, 1.0, 0.05, 1e-12, 2e-12);
        assert_eq!(p.p_max_dl, 1.0);
        assert_eq!(p.p_max_ul, 0.05);
        assert_eq!(p.noise_dl, 1e-12);
        assert_eq!(p.noise_ul, 2e-12);
    }

    #[test]
    fn duplex_split_fdd_scales_with_alpha() {
        let p = DuplexParams::split(DuplexMode::Fdd, 0.25, 1.0, 0.05, 1e-12, 2e-12);
        assert!((p.p_max_dl - 0.25).abs() < 1e-15);
        assert!((p.p_max_ul - 0.75 * 0.05).abs() < 1e-15);
        assert!((p.noise_dl - 0.25e-12).abs() < 1e-27);
        assert!((p.noise_ul - 1.5e-12).abs() < 1e-27);
        let p0 = DuplexParams::split(DuplexMode::Fdd, 0.0, 1.0, 0.05, 1e-12, 2e-12);
        assert_eq!(p0.p_max_dl, 0.0);
        assert_eq!(p0.noise_dl, 0.0);
        let p1 = DuplexParams::split(DuplexMode::Fdd, 1.0, 1.0, 0.05, 1e-12, 2e-12);
        assert_eq!(p1.p_max_ul, 0.0);
        assert_eq!(p1.noise_ul, 0.0);
    }

    #[test]
    fn weights_constructors_normalize() {
        let w = Weights::normalized(&[2.0, 6.0], &[1.0, 1.0]);
        assert!((w.dl[0] - 0.25).abs() < 1e-15);
        assert!((w.dl[1] - 0.75).abs() < 1e-15);
        assert!((w.ul.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let e = Weights::equal(4);
        assert!(e.dl.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }
}
