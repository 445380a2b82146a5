//! IRS phase optimization on the product-of-circles manifold via
//! Riemannian conjugate gradient (RCG) ascent.
//!
//! The phase configuration theta lives on the complex circle manifold
//! {theta in C^N : |theta_n| = 1}.  The scalarized objective is expressed
//! through precomputed per-user-pair terms (lambda, mu) such that
//! theta^H lambda_{k,i} + mu_{k,i} equals the conjugated downlink pairing
//! conj(h_k^T w_i) (downlink) or sqrt(p_i) h_i^H v_k (uplink).  With
//! z_{k,i} = theta^H lambda_{k,i} + mu_{k,i},
//!
//!   J(theta) = c_dl sum_k eps_dl_k ln(A_k / B_k)
//!            + c_ul sum_k eps_ul_k ln(A'_k / B'_k),
//!
//! where A_k sums |z_{k,i}|^2 over all i plus noise and B_k excludes
//! i = k; c_dl = alpha beta, c_ul = (1-alpha)(1-beta).  Natural log keeps
//! the gradient clean; J / ln 2 equals the weighted-sum-performance
//! objective evaluated through effective channels.
//!
//! Euclidean gradient (convention grad = 2 dJ/dtheta^*):
//!   grad = sum_dir 2 c eps_k [ (sum_i lambda_i z_i^*) / A
//!                            - (sum_{i!=k} lambda_i z_i^*) / B ].
//! Riemannian gradient / transport project out the radial component
//! (eta -> eta - Re(eta o conj theta) o theta); retraction renormalizes
//! each entry.  Search directions follow Polak-Ribiere with nonnegative
//! restart and an Armijo backtracking line search.

use rand::Rng;

use crate::channel::DuplexChannelSet;
use crate::error::{Error, Result};
use crate::metrics::{DuplexParams, Weights};
use crate::{C64, CVector};

// ---------------------------------------------------------------------------
// Phase vectors and tangent vectors
// ---------------------------------------------------------------------------

/// Unit-modulus phase configuration of the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    values: CVector,
}

/// Tangent vectors at a phase configuration are plain complex vectors
/// satisfying Re(eta o conj(theta)) = 0 elementwise.
pub type TangentVector = CVector;

impl PhaseVector {
    /// Wrap a vector of unit-modulus entries (each renormalized exactly;
    /// entries further than 1e-9 from the circle are rejected).
    pub fn new(values: CVector) -> Result<PhaseVector> {
        for (n, v) in values.iter().enumerate() {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!(
                    "phase entry {n} has modulus {} (must be 1)",
                    v.norm()
                )));
            }
        }
        Ok(PhaseVector::renormalized(values))
    }

    /// Build from explicit phases in radians.
    pub fn from_phases(phases: &[f64]) -> PhaseVector {
        PhaseVector {
            values: CVector::from_fn(phases.len(), |n, _| C64::from_polar(1.0, phases[n])),
        }
    }

    /// Uniform random phases.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PhaseVector {
        let phases: Vec<f64> =
            (0..n).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect();
        PhaseVector::from_phases(&phases)
    }

    fn renormalized(values: CVector) -> PhaseVector {
        PhaseVector {
            values: values.map(|v| {
                let m = v.norm();
                if m == 0.0 { v } else { v / m }
            }),
        }
    }

    /// Underlying complex vector.
    pub fn values(&self) -> &CVector {
        &self.values
    }

    /// Number of surface elements.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True for an empty configuration.
    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    /// Concatenate two configurations (used by the slicing designs).
    pub fn concat(&self, other: &PhaseVector) -> PhaseVector {
        let mut v = CVector::zeros(self.len() + other.len());
        v.rows_mut(0, self.len()).copy_from(&self.values);
        v.rows_mut(self.len(), other.len()).copy_from(&other.values);
        PhaseVector { values: v }
    }

    /// Sub-configuration over elements `[lo, hi)`.
    pub fn restrict(&self, lo: usize, hi: usize) -> PhaseVector {
        assert!(lo <= hi && hi <= self.len(), "bad element range {lo}..{hi}");
        PhaseVector { values: self.values.rows(lo, hi - lo).into_owned() }
    }
}

/// Real inner product Re(a^H b) of the ambient space C^N ~ R^2N.
pub fn inner(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).re
}

/// Project an ambient vector onto the tangent space at theta.
pub fn riemannian_gradient(egrad: &CVector, theta: &PhaseVector) -> TangentVector {
    project_tangent(egrad, theta.values())
}

/// Transport a tangent vector to the tangent space at theta_new.
pub fn transport(eta: &TangentVector, theta_new: &PhaseVector) -> TangentVector {
    project_tangent(eta, theta_new.values())
}

fn project_tangent(eta: &CVector, theta: &CVector) -> CVector {
    assert_eq!(eta.len(), theta.len(), "tangent/base length mismatch");
    CVector::from_fn(eta.len(), |n, _| {
        let radial = (eta[n] * theta[n].conj()).re;
        eta[n] - theta[n].scale(radial)
    })
}

/// Retraction: renormalize theta + step * eta entrywise; an entry of zero
/// magnitude keeps its previous phase.
pub fn retract(theta: &PhaseVector, step: f64, eta: &TangentVector) -> PhaseVector {
    assert_eq!(theta.len(), eta.len(), "tangent length mismatch");
    if step == 0.0 {
        return theta.clone();
    }
    let base = theta.values();
    PhaseVector {
        values: CVector::from_fn(theta.len(), |n, _| {
            let x = base[n] + eta[n].scale(step);
            let m = x.norm();
            if m == 0.0 { base[n] } else { x / m }
        }),
    }
}

// ---------------------------------------------------------------------------
// Precomputed objective terms
// ---------------------------------------------------------------------------

/// Channel/beamformer interaction terms entering the phase objective.
///
/// Indexing is `[k][i]` with k the rate owner and i the interfering
/// precoder (downlink) or transmitting user (uplink).
#[derive(Debug, Clone)]
pub struct PrecomputedTerms {
    /// Downlink lambda vectors, each of length N.
    pub lambda_dl: Vec<Vec<CVector>>,
    /// Downlink mu scalars.
    pub mu_dl: Vec<Vec<C64>>,
    /// Uplink lambda vectors (power-scaled), each of length N.
    pub lambda_ul: Vec<Vec<CVector>>,
    /// Uplink mu scalars (power-scaled).
    pub mu_ul: Vec<Vec<C64>>,
    /// Per-user downlink noise power.
    pub noise_dl: Vec<f64>,
    /// Per-user uplink noise power.
    pub noise_ul: Vec<f64>,
    /// Downlink direction weight c_dl = alpha * beta.
    pub weight_dl: f64,
    /// Uplink direction weight c_ul = (1 - alpha) * (1 - beta).
    pub weight_ul: f64,
    /// Per-user downlink rate weights.
    pub eps_dl: Vec<f64>,
    /// Per-user uplink rate weights.
    pub eps_ul: Vec<f64>,
}

impl PrecomputedTerms {
    /// Number of users K.
    pub fn users(&self) -> usize {
        self.eps_dl.len()
    }

    /// Number of surface elements N.
    pub fn elements(&self) -> usize {
        self.lambda_dl[0][0].len()
    }
}

/// Assemble the phase-objective terms from raw channels and the current
/// precoders, combiners and powers.
pub fn precompute_terms(
    channels: &DuplexChannelSet,
    precoders: &[CVector],
    combiners: &[CVector],
    powers: &[f64],
    params: &DuplexParams,
    beta: f64,
    weights: &Weights,
) -> PrecomputedTerms {
    let k = channels.dl.users();
    assert_eq!(precoders.len(), k, "one precoder per user");
    assert_eq!(combiners.len(), k, "one combiner per user");
    assert_eq!(powers.len(), k, "one power per user");
    assert_eq!(weights.users(), k, "one weight pair per user");

    // Downlink: lambda[k][i] = conj(h_r_k) o (G^H conj(w_i)),
    //           mu[k][i] = conj(h_d_k^T w_i).
    let g_dl_h = channels.dl.bs_irs.adjoint();
    let w_conj: Vec<CVector> = precoders.iter().map(|w| w.map(|c| c.conj())).collect();
    let g_w: Vec<CVector> = w_conj.iter().map(|wc| &g_dl_h * wc).collect();
    let mut lambda_dl = Vec::with_capacity(k);
    let mut mu_dl = Vec::with_capacity(k);
    for owner in 0..k {
        let hr = channels.dl.reflected.row(owner).transpose();
        let hd = channels.dl.direct.row(owner).transpose();
        let mut lam_row = Vec::with_capacity(k);
        let mut mu_row = Vec::with_capacity(k);
        for i in 0..k {
            lam_row.push(CVector::from_fn(hr.len(), |n, _| hr[n].conj() * g_w[i][n]));
            mu_row.push(hd.dot(&precoders[i]).conj());
        }
        lambda_dl.push(lam_row);
        mu_dl.push(mu_row);
    }

    // Uplink: lambda[k][i] = sqrt(p_i) conj(h_r_i) o (G^H v_k),
    //         mu[k][i] = sqrt(p_i) h_d_i^H v_k.
    let g_ul_h = channels.ul.bs_irs.adjoint();
    let g_v: Vec<CVector> = combiners.iter().map(|v| &g_ul_h * v).collect();
    let mut lambda_ul = Vec::with_capacity(k);
    let mut mu_ul = Vec::with_capacity(k);
    for owner in 0..k {
        let mut lam_row = Vec::with_capacity(k);
        let mut mu_row = Vec::with_capacity(k);
        for i in 0..k {
            let sp = powers[i].max(0.0).sqrt();
            let hr = channels.ul.reflected.row(i).transpose();
            let hd = channels.ul.direct.row(i).transpose();
            lam_row.push(CVector::from_fn(hr.len(), |n, _| {
                hr[n].conj() * g_v[owner][n] * sp
            }));
            mu_row.push(hd.dotc(&combiners[owner]) * sp);
        }
        lambda_ul.push(lam_row);
        mu_ul.push(mu_row);
    }

    PrecomputedTerms {
        lambda_dl,
        mu_dl,
        lambda_ul,
        mu_ul,
        noise_dl: vec![params.noise_dl; k],
        noise_ul: vec![params.noise_ul; k],
        weight_dl: params.alpha * beta,
        weight_ul: (1.0 - params.alpha) * (1.0 - beta),
        eps_dl: weights.dl.clone(),
        eps_ul: weights.ul.clone(),
    }
}

// ---------------------------------------------------------------------------
// Objective and gradient
// ---------------------------------------------------------------------------

/// Phase objective J(theta) in nats.  Accepts any complex vector so that
/// finite-difference probes may leave the manifold.
pub fn j_mo(theta: &CVector, terms: &PrecomputedTerms) -> f64 {
    let mut j = 0.0;
    if terms.weight_dl != 0.0 {
        j += terms.weight_dl
            * direction_sum(theta, &terms.lambda_dl, &terms.mu_dl, &terms.noise_dl, &terms.eps_dl);
    }
    if terms.weight_ul != 0.0 {
        j += terms.weight_ul
            * direction_sum(theta, &terms.lambda_ul, &terms.mu_ul, &terms.noise_ul, &terms.eps_ul);
    }
    j
}

fn direction_sum(
    theta: &CVector,
    lambda: &[Vec<CVector>],
    mu: &[Vec<C64>],
    noise: &[f64],
    eps: &[f64],
) -> f64 {
    let k = eps.len();
    let mut acc = 0.0;
    for owner in 0..k {
        let mut total = noise[owner];
        let mut interf = noise[owner];
        for i in 0..k {
            let z = theta.dotc(&lambda[owner][i]) + mu[owner][i];
            let pw = z.norm_sqr();
            total += pw;
            if i != owner {
                interf += pw;
            }
        }
        if total > interf && interf > 0.0 {
            acc += eps[owner] * (total / interf).ln();
        }
    }
    acc
}

/// Euclidean gradient of [`j_mo`] with the convention grad = 2 dJ/dtheta^*,
/// so dJ/dRe(theta_n) = Re(grad_n) and dJ/dIm(theta_n) = Im(grad_n).
pub fn euclidean_gradient(theta: &CVector, terms: &PrecomputedTerms) -> CVector {
    let n = theta.len();
    let mut grad = CVector::zeros(n);
    if terms.weight_dl != 0.0 {
        direction_gradient(
            theta,
            &terms.lambda_dl,
            &terms.mu_dl,
            &terms.noise_dl,
            &terms.eps_dl,
            terms.weight_dl,
            &mut grad,
        );
    }
    if terms.weight_ul != 0.0 {
        direction_gradient(
            theta,
            &terms.lambda_ul,
            &terms.mu_ul,
            &terms.noise_ul,
            &terms.eps_ul,
            terms.weight_ul,
            &mut grad,
        );
    }
    grad
}

fn direction_gradient(
    theta: &CVector,
    lambda: &[Vec<CVector>],
    mu: &[Vec<C64>],
    noise: &[f64],
    eps: &[f64],
    weight: f64,
    grad: &mut CVector,
) {
    let k = eps.len();
    let n = theta.len();
    for owner in 0..k {
        let mut z = Vec::with_capacity(k);
        let mut total = noise[owner];
        let mut interf = noise[owner];
        for i in 0..k {
            let zi = theta.dotc(&lambda[owner][i]) + mu[owner][i];
            total += zi.norm_sqr();
            if i != owner {
                interf += zi.norm_sqr();
            }
            z.push(zi);
        }
        if !(total > interf) || interf <= 0.0 {
            continue;
        }
        let mut s_all = CVector::zeros(n);
        for i in 0..k {
            s_all += lambda[owner][i].scale(1.0) * z[i].conj();
        }
        let s_int = &s_all - lambda[owner][owner].scale(1.0) * z[owner].conj();
        let c = 2.0 * weight * eps[owner];
        *grad += (s_all.unscale(total) - s_int.unscale(interf)).scale(c);
    }
}

// ---------------------------------------------------------------------------
// RCG ascent
// ---------------------------------------------------------------------------

/// Iteration controls for [`rcg_optimize`].
#[derive(Debug, Clone, Copy)]
pub struct RcgOptions {
    /// Gradient-norm tolerance per sqrt(N).
    pub grad_tol_scale: f64,
    /// Maximum accepted steps.
    pub max_iters: usize,
    /// Initial Armijo step.
    pub armijo_init: f64,
    /// Armijo contraction factor in (0, 1).
    pub armijo_contraction: f64,
    /// Armijo sufficient-increase coefficient.
    pub armijo_coeff: f64,
    /// Maximum backtracks per line search.
    pub max_backtracks: usize,
}

impl Default for RcgOptions {
    fn default() -> Self {
        RcgOptions {
            grad_tol_scale: 1e-5,
            max_iters: 500,
            armijo_init: 1.0,
            armijo_contraction: 0.5,
            armijo_coeff: 1e-4,
            max_backtracks: 50,
        }
    }
}

/// Result of one RCG ascent.
#[derive(Debug, Clone)]
pub struct RcgRun {
    /// Final phase configuration.
    pub theta: PhaseVector,
    /// Objective value at the initial point and after each accepted step.
    pub j_trace: Vec<f64>,
    /// Number of accepted steps.
    pub iters: usize,
    /// True if the line search failed along the steepest direction.
    pub stalled: bool,
}

/// Maximize [`j_mo`] over the phase manifold starting from `theta0`.
pub fn rcg_optimize(theta0: &PhaseVector, terms: &PrecomputedTerms, opts: &RcgOptions) -> RcgRun {
    let n = theta0.len();
    let tol = opts.grad_tol_scale * (n as f64).sqrt();

    let mut theta = theta0.clone();
    let mut j = j_mo(theta.values(), terms);
    let mut grad = riemannian_gradient(&euclidean_gradient(theta.values(), terms), &theta);
    let mut dir: TangentVector = grad.clone();
    let mut trace = vec![j];
    let mut stalled = false;
    let mut iters = 0;

    while iters < opts.max_iters {
        let grad_sq = inner(&grad, &grad);
        if grad_sq.sqrt() < tol {
            break;
        }

        // Guarantee an ascent direction.
        let mut slope = inner(&grad, &dir);
        if slope <= 0.0 {
            dir = grad.clone();
            slope = grad_sq;
        }

        let mut accepted = armijo(&theta, j, &dir, slope, terms, opts);
        if accepted.is_none() && !std::ptr::eq(&dir, &grad) {
            // Conjugate direction failed; retry along the gradient.
            dir = grad.clone();
            accepted = armijo(&theta, j, &dir, grad_sq, terms, opts);
        }
        let Some((theta_new, j_new)) = accepted else {
            stalled = true;
            break;
        };

        let grad_new =
            riemannian_gradient(&euclidean_gradient(theta_new.values(), terms), &theta_new);
        // Polak-Ribiere coefficient with nonnegative restart.
        let transported_grad = transport(&grad, &theta_new);
        let tau = (inner(&grad_new, &(&grad_new - transported_grad)) / grad_sq).max(0.0);
        dir = &grad_new + transport(&dir, &theta_new).scale(tau);

        theta = theta_new;
        j = j_new;
        grad = grad_new;
        trace.push(j);
        iters += 1;
    }

    RcgRun { theta, j_trace: trace, iters, stalled }
}

fn armijo(
    theta: &PhaseVector,
    j: f64,
    dir: &TangentVector,
    slope: f64,
    terms: &PrecomputedTerms,
    opts: &RcgOptions,
) -> Option<(PhaseVector, f64)> {
    let mut step = opts.armijo_init;
    for _ in 0..opts.max_backtracks {
        let cand = retract(theta, step, dir);
        let j_cand = j_mo(cand.values(), terms);
        if j_cand >= j + opts.armijo_coeff * step * slope {
            return Some((cand, j_cand));
        }
        step *= opts.armijo_contraction;
    }
    None
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
