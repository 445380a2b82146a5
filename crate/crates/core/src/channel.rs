//! Channel model: geometry, path loss, Rician fading and effective channels.
//!
//! The scene is a base station (BS) with an M-element uniform rectangular
//! array (URA) in the y-z plane, an IRS with an N-element URA in the x-z
//! plane, and K single-antenna users dropped uniformly on a horizontal
//! disc.  Three channel groups are drawn per link direction:
//!
//! * `bs_irs` (M x N): Rician, LOS phases from exact per-element-pair
//!   distances, path loss from the 3GPP UMa LOS model.
//! * `reflected` (K x N): IRS-user rows, Rician with the same LOS rule.
//! * `direct` (K x M): BS-user rows, Rayleigh with the UMa NLOS model.
//!
//! Path losses enter as amplitude factors 10^(-PL_dB/20).  In TDD both
//! directions share one draw (bitwise identical); in FDD each direction
//! gets its own carrier-dependent LOS phases and path losses and an
//! independent fading draw.
//!
//! The effective BS-user channel for phase configuration theta is
//! h = h_d + G diag(theta) h_r.

use rand::Rng;

use crate::error::{Error, Result};
use crate::{C64, CMatrix, CVector};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Duplexing mode of the link pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DuplexMode {
    /// Time division: uplink and downlink share carrier and channel draw.
    Tdd,
    /// Frequency division: per-direction carriers and independent fading.
    Fdd,
}

/// Rician K-factors (linear, not dB).
#[derive(Debug, Clone, Copy)]
pub struct RicianParams {
    /// K-factor of the BS-IRS link.
    pub kappa_bs_irs: f64,
    /// K-factor of the IRS-user links.
    pub kappa_irs_user: f64,
}

/// Static deployment geometry.
#[derive(Debug, Clone)]
pub struct SimGeometry {
    /// BS array reference point [x, y, z] in meters.
    pub bs_position: [f64; 3],
    /// IRS array reference point [x, y, z] in meters.
    pub irs_position: [f64; 3],
    /// Center [x, y] of the user disc.
    pub user_disc_center: [f64; 2],
    /// Radius of the user disc in meters.
    pub user_disc_radius: f64,
    /// Height of every user in meters.
    pub user_height: f64,
    /// BS URA size (elements along y, elements along z).
    pub bs_array: (usize, usize),
    /// IRS URA size (elements along x, elements along z).
    pub irs_array: (usize, usize),
    /// Element spacing in meters for both arrays.
    pub element_spacing: f64,
}

impl SimGeometry {
    /// Number of BS antennas M.
    pub fn bs_antennas(&self) -> usize {
        self.bs_array.0 * self.bs_array.1
    }

    /// Number of IRS elements N.
    pub fn irs_elements(&self) -> usize {
        self.irs_array.0 * self.irs_array.1
    }

    /// Position of BS element m; the URA is centered on `bs_position` and
    /// flattened y-major (m = iy * nz + iz).
    pub fn bs_element_position(&self, m: usize) -> [f64; 3] {
        let (ny, nz) = self.bs_array;
        assert!(m < ny * nz, "BS element index {m} out of range {}", ny * nz);
        let iy = m / nz;
        let iz = m % nz;
        let d = self.element_spacing;
        [
            self.bs_position[0],
            self.bs_position[1] + (iy as f64 - (ny as f64 - 1.0) / 2.0) * d,
            self.bs_position[2] + (iz as f64 - (nz as f64 - 1.0) / 2.0) * d,
        ]
    }

    /// Position of IRS element n; the URA is centered on `irs_position` and
    /// flattened x-major (n = ix * nz + iz).
    pub fn irs_element_position(&self, n: usize) -> [f64; 3] {
        let (nx, nz) = self.irs_array;
        assert!(n < nx * nz, "IRS element index {n} out of range {}", nx * nz);
        let ix = n / nz;
        let iz = n % nz;
        let d = self.element_spacing;
        [
            self.irs_position[0] + (ix as f64 - (nx as f64 - 1.0) / 2.0) * d,
            self.irs_position[1],
            self.irs_position[2] + (iz as f64 - (nz as f64 - 1.0) / 2.0) * d,
        ]
    }
}

/// All channel matrices of one link direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannels {
    /// BS-IRS matrix G, M x N.
    pub bs_irs: CMatrix,
    /// IRS-user rows, K x N (row k is h_r for user k).
    pub reflected: CMatrix,
    /// BS-user rows, K x M (row k is h_d for user k).
    pub direct: CMatrix,
    /// Carrier frequency in Hz.
    pub carrier_hz: f64,
}

impl LinkChannels {
    /// Number of users K.
    pub fn users(&self) -> usize {
        self.direct.nrows()
    }

    /// Number of BS antennas M.
    pub fn bs_antennas(&self) -> usize {
        self.direct.ncols()
    }

    /// Number of IRS elements N.
    pub fn irs_elements(&self) -> usize {
        self.bs_irs.ncols()
    }

    /// Effective channel of user k for phase configuration theta.
    pub fn effective_row(&self, k: usize, theta: &CVector) -> CVector {
        effective_channel(
            &self.direct.row(k).transpose(),
            &self.bs_irs,
            theta,
            &self.reflected.row(k).transpose(),
        )
    }

    /// Effective channels of all users for phase configuration theta.
    pub fn effective_rows(&self, theta: &CVector) -> Vec<CVector> {
        (0..self.users()).map(|k| self.effective_row(k, theta)).collect()
    }

    /// Copy with the reflective path restricted to IRS elements
    /// `[lo, hi)`; used by the surface-slicing designs.
    pub fn restrict_elements(&self, lo: usize, hi: usize) -> LinkChannels {
        assert!(lo <= hi && hi <= self.irs_elements(), "bad element range {lo}..{hi}");
        LinkChannels {
            bs_irs: self.bs_irs.columns(lo, hi - lo).into_owned(),
            reflected: self.reflected.columns(lo, hi - lo).into_owned(),
            direct: self.direct.clone(),
            carrier_hz: self.carrier_hz,
        }
    }
}

/// Channel matrices for both link directions of one realization.
#[derive(Debug, Clone)]
pub struct DuplexChannelSet {
    /// Downlink channels.
    pub dl: LinkChannels,
    /// Uplink channels.
    pub ul: LinkChannels,
    /// Duplexing mode the set was drawn for.
    pub mode: DuplexMode,
}

impl DuplexChannelSet {
    /// Copy with both directions restricted to IRS elements `[lo, hi)`.
    pub fn restrict_elements(&self, lo: usize, hi: usize) -> DuplexChannelSet {
        DuplexChannelSet {
            dl: self.dl.restrict_elements(lo, hi),
            ul: self.ul.restrict_elements(lo, hi),
            mode: self.mode,
        }
    }
}

/// Everything needed to draw one channel realization.
#[derive(Debug, Clone)]
pub struct ChannelScenario {
    /// Deployment geometry.
    pub geometry: SimGeometry,
    /// Rician K-factors (linear).
    pub rician: RicianParams,
    /// Duplexing mode.
    pub mode: DuplexMode,
    /// Downlink carrier in Hz (equals the uplink carrier in TDD).
    pub dl_carrier_hz: f64,
    /// Uplink carrier in Hz.
    pub ul_carrier_hz: f64,
    /// Number of users K.
    pub users: usize,
}

// ---------------------------------------------------------------------------
// Path loss and LOS phases
// ---------------------------------------------------------------------------

/// LOS path loss in dB: 28 + 22 log10(d) + 20 log10(fc) for d in meters
/// and fc in GHz.
pub fn pathloss_los_db(distance_m: f64, carrier_ghz: f64) -> Result<f64> {
    check_positive(distance_m, carrier_ghz)?;
    Ok(28.0 + 22.0 * distance_m.log10() + 20.0 * carrier_ghz.log10())
}

/// NLOS path loss in dB:
/// 13.54 + 39.08 log10(d) + 20 log10(fc) - 0.6 (h - 1.5)
/// for d in meters, fc in GHz and terminal height h in meters.
pub fn pathloss_nlos_db(distance_m: f64, carrier_ghz: f64, height_m: f64) -> Result<f64> {
    check_positive(distance_m, carrier_ghz)?;
    Ok(13.54 + 39.08 * distance_m.log10() + 20.0 * carrier_ghz.log10()
        - 0.6 * (height_m - 1.5))
}

fn check_positive(distance_m: f64, carrier_ghz: f64) -> Result<()> {
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance_m}")));
    }
    if !(carrier_ghz > 0.0) {
        return Err(Error::Domain(format!("carrier must be positive, got {carrier_ghz} GHz")));
    }
    Ok(())
}

/// Amplitude factor corresponding to a path loss in dB.
pub fn pathloss_amplitude(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 20.0)
}

/// Unit-modulus LOS entry exp(j 2 pi d / lambda) for propagation distance d.
pub fn los_phase_entry(distance_m: f64, wavelength_m: f64) -> C64 {
    let phase = 2.0 * std::f64::consts::PI * distance_m / wavelength_m;
    C64::new(phase.cos(), phase.sin())
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

// ---------------------------------------------------------------------------
// Random draws
// ---------------------------------------------------------------------------

/// One CN(0,1) sample via Box-Muller (two uniforms per complex value; the
/// draw order is part of the reproducibility contract).
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let phi = 2.0 * std::f64::consts::PI * u2;
    // Real and imaginary parts each N(0, 1/2).
    C64::new(r * phi.cos(), r * phi.sin()) / C64::new(std::f64::consts::SQRT_2, 0.0)
}

/// Drop K users uniformly on the configured disc (area-uniform: the radial
/// coordinate is R sqrt(u)).  Two uniforms are consumed per user.
pub fn place_users<R: Rng + ?Sized>(geom: &SimGeometry, users: usize, rng: &mut R) -> Vec<[f64; 3]> {
    (0..users)
        .map(|_| {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            let r = geom.user_disc_radius * u1.sqrt();
            let phi = 2.0 * std::f64::consts::PI * u2;
            [
                geom.user_disc_center[0] + r * phi.cos(),
                geom.user_disc_center[1] + r * phi.sin(),
                geom.user_height,
            ]
        })
        .collect()
}

/// Draw a full channel realization: users are placed first, then the
/// downlink channels, then (in FDD) the uplink channels.  TDD clones the
/// single draw into both directions.
pub fn sample_channels<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    rng: &mut R,
) -> Result<DuplexChannelSet> {
    let positions = place_users(&scenario.geometry, scenario.users, rng);
    sample_channels_at(scenario, &positions, rng)
}

/// As [`sample_channels`] but with fixed user positions.
///
/// Per link the draw order is: G fading (row-major), then per user the
/// reflected fading (N values), then per user the direct fading (M values).
pub fn sample_channels_at<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    positions: &[[f64; 3]],
    rng: &mut R,
) -> Result<DuplexChannelSet> {
    assert_eq!(positions.len(), scenario.users, "one position per user required");
    match scenario.mode {
        DuplexMode::Tdd => {
            let link = sample_link(scenario, positions, scenario.dl_carrier_hz, rng)?;
            Ok(DuplexChannelSet { dl: link.clone(), ul: link, mode: DuplexMode::Tdd })
        }
        DuplexMode::Fdd => {
            let dl = sample_link(scenario, positions, scenario.dl_carrier_hz, rng)?;
            let ul = sample_link(scenario, positions, scenario.ul_carrier_hz, rng)?;
            Ok(DuplexChannelSet { dl, ul, mode: DuplexMode::Fdd })
        }
    }
}

fn sample_link<R: Rng + ?Sized>(
    scenario: &ChannelScenario,
    positions: &[[f64; 3]],
    carrier_hz: f64,
    rng: &mut R,
) -> Result<LinkChannels> {
    let geom = &scenario.geometry;
    let m = geom.bs_antennas();
    let n = geom.irs_elements();
    let k = scenario.users;
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    let f_ghz = carrier_hz / 1e9;

    let bs_el: Vec<[f64; 3]> = (0..m).map(|i| geom.bs_element_position(i)).collect();
    let irs_el: Vec<[f64; 3]> = (0..n).map(|i| geom.irs_element_position(i)).collect();

    // BS-IRS link: Rician around per-element-pair LOS phases.
    let amp_g = pathloss_amplitude(pathloss_los_db(
        dist3(geom.bs_position, geom.irs_position),
        f_ghz,
    )?);
    let (los_w, nlos_w) = rician_weights(scenario.rician.kappa_bs_irs);
    let mut bs_irs = CMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let los = los_phase_entry(dist3(bs_el[i], irs_el[j]), lambda);
            bs_irs[(i, j)] = (los * los_w + standard_complex(rng) * nlos_w).scale(amp_g);
        }
    }

    // IRS-user links: Rician per user.
    let (los_wu, nlos_wu) = rician_weights(scenario.rician.kappa_irs_user);
    let mut reflected = CMatrix::zeros(k, n);
    for u in 0..k {
        let amp = pathloss_amplitude(pathloss_los_db(
            dist3(geom.irs_position, positions[u]),
            f_ghz,
        )?);
        for j in 0..n {
            let los = los_phase_entry(dist3(irs_el[j], positions[u]), lambda);
            reflected[(u, j)] = (los * los_wu + standard_complex(rng) * nlos_wu).scale(amp);
        }
    }

    // BS-user links: Rayleigh.
    let mut direct = CMatrix::zeros(k, m);
    for u in 0..k {
        let amp = pathloss_amplitude(pathloss_nlos_db(
            dist3(geom.bs_position, positions[u]),
            f_ghz,
            scenario.geometry.user_height,
        )?);
        for i in 0..m {
            direct[(u, i)] = standard_complex(rng).scale(amp);
        }
    }

    Ok(LinkChannels { bs_irs, reflected, direct, carrier_hz })
}

fn rician_weights(kappa: f64) -> (f64, f64) {
    ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
}

// ---------------------------------------------------------------------------
// Effective channels
// ---------------------------------------------------------------------------

/// Effective BS-user channel h = direct + G diag(theta) reflected.
pub fn effective_channel(
    direct: &CVector,
    bs_irs: &CMatrix,
    theta: &CVector,
    reflected: &CVector,
) -> CVector {
    let n = bs_irs.ncols();
    assert_eq!(direct.len(), bs_irs.nrows(), "direct/bs_irs row mismatch");
    assert_eq!(theta.len(), n, "theta length must match IRS size");
    assert_eq!(reflected.len(), n, "reflected length must match IRS size");
    let scaled = CVector::from_fn(n, |i, _| theta[i] * reflected[i]);
    direct + bs_irs * scaled
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
