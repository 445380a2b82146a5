//! Simulation configuration: TOML-backed, flat keys, strict parsing.
//!
//! Every field has a default matching the reference system setup (uniform
//! rectangular arrays, 3GPP-style path loss constants, 20 MHz band), so an
//! empty file is a valid configuration.  Unknown keys are rejected.  The
//! raw config stores strings and scalars only; [`SystemConfig::scenario`],
//! [`SystemConfig::duplex_params`] and friends derive the typed objects
//! used by the solvers.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelScenario, DuplexMode, RicianParams, SimGeometry, SPEED_OF_LIGHT};
use crate::designs::{BcdOptions, Beamformer, DesignKind};
use crate::error::{Error, Result};
use crate::metrics::DuplexParams;
use crate::weighting::WeightingScheme;

/// Default downlink carrier used when duplexing over separate bands.
pub const DEFAULT_FDD_DL_CARRIER_HZ: f64 = 2.14e9;

// ---------------------------------------------------------------------------
// Raw configuration
// ---------------------------------------------------------------------------

/// Complete simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Duplexing scheme: "tdd" or "fdd".
    pub duplex: String,
    /// Number of served users K.
    pub users: usize,
    /// Base-station array as (horizontal, vertical) element counts.
    pub bs_antennas: [usize; 2],
    /// Surface array as (horizontal, vertical) element counts.
    pub irs_elements: [usize; 2],

    /// Downlink sum power budget in dBm.
    pub dl_power_dbm: f64,
    /// Per-user uplink power budget in dBm.
    pub ul_power_dbm: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_density_dbm_hz: f64,
    /// Downlink (user equipment) noise figure in dB.
    pub noise_figure_dl_db: f64,
    /// Uplink (base station) noise figure in dB.
    pub noise_figure_ul_db: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,

    /// Uplink carrier frequency in Hz.
    pub ul_carrier_hz: f64,
    /// Downlink carrier in Hz; defaults to the uplink carrier under TDD
    /// and to 2.14 GHz under FDD.
    pub dl_carrier_hz: Option<f64>,
    /// Array element spacing in meters; defaults to half the uplink
    /// wavelength.
    pub element_spacing_m: Option<f64>,

    /// Base-station position [x, y, z] in meters.
    pub bs_position: [f64; 3],
    /// Surface position [x, y, z] in meters.
    pub irs_position: [f64; 3],
    /// Center [x, y] of the user disc in meters.
    pub user_disc_center: [f64; 2],
    /// Radius of the user disc in meters.
    pub user_disc_radius: f64,
    /// User terminal height in meters.
    pub user_height_m: f64,

    /// Rician factor of the base-station-to-surface link in dB.
    pub rician_bs_irs_db: f64,
    /// Rician factor of the surface-to-user links in dB.
    pub rician_irs_user_db: f64,

    /// Downlink beamformer: "wmmse" or "zf".
    pub beamformer: String,
    /// Relative objective tolerance of the outer coordinate loop.
    pub tol_outer: f64,
    /// Maximum outer iterations.
    pub max_outer: usize,

    /// Weighting scheme: "equal", "independent" or "proportional-fair".
    pub weighting: String,
    /// Scheduling slots simulated for proportional-fair weights.
    pub pf_slots: usize,
    /// Independent channel realizations per sweep.
    pub realizations: usize,
    /// Base seed for all random draws.
    pub seed: u64,
    /// Bandwidth-split grid (values in [0, 1]).
    pub alpha_grid: Vec<f64>,
    /// Scalarization grid (values in [0, 1]).
    pub beta_grid: Vec<f64>,
    /// Designs to evaluate, by kebab-case name.
    pub designs: Vec<String>,
}

fn decigrid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            duplex: "tdd".into(),
            users: 4,
            bs_antennas: [4, 2],
            irs_elements: [20, 10],
            dl_power_dbm: 30.0,
            ul_power_dbm: 17.0,
            noise_density_dbm_hz: -170.0,
            noise_figure_dl_db: 9.0,
            noise_figure_ul_db: 7.0,
            bandwidth_hz: 20e6,
            ul_carrier_hz: 1.95e9,
            dl_carrier_hz: None,
            element_spacing_m: None,
            bs_position: [0.0, 25.0, 25.0],
            irs_position: [300.0, 0.0, 15.0],
            user_disc_center: [300.0, 25.0],
            user_disc_radius: 20.0,
            user_height_m: 1.5,
            rician_bs_irs_db: 6.0,
            rician_irs_user_db: 8.0,
            beamformer: "wmmse".into(),
            tol_outer: 1e-4,
            max_outer: 50,
            weighting: "equal".into(),
            pf_slots: 100,
            realizations: 100,
            seed: 0,
            alpha_grid: decigrid(),
            beta_grid: decigrid(),
            designs: DesignKind::ALL.iter().map(|k| k.as_str().to_string()).collect(),
        }
    }
}

fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl SystemConfig {
    /// Parse a TOML string and validate.
    pub fn from_toml(text: &str) -> Result<SystemConfig> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a file and validate.
    pub fn load(path: &std::path::Path) -> Result<SystemConfig> {
        let text = std::fs::read_to_string(path)?;
        SystemConfig::from_toml(&text)
    }

    /// Check ranges and enum spellings.
    pub fn validate(&self) -> Result<()> {
        self.mode()?;
        self.beamformer_kind()?;
        self.weighting_scheme()?;
        self.design_kinds()?;
        if self.users == 0 {
            return Err(Error::Config("users must be at least 1".into()));
        }
        if self.bs_antennas.iter().any(|&n| n == 0) {
            return Err(Error::Config("bs_antennas entries must be at least 1".into()));
        }
        if self.irs_elements.iter().any(|&n| n == 0) {
            return Err(Error::Config("irs_elements entries must be at least 1".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth_hz must be positive".into()));
        }
        if !(self.ul_carrier_hz > 0.0) {
            return Err(Error::Config("ul_carrier_hz must be positive".into()));
        }
        if let Some(f) = self.dl_carrier_hz {
            if !(f > 0.0) {
                return Err(Error::Config("dl_carrier_hz must be positive".into()));
            }
            if self.mode()? == DuplexMode::Tdd && f != self.ul_carrier_hz {
                return Err(Error::Config(
                    "tdd uses a single carrier; drop dl_carrier_hz or match ul_carrier_hz".into(),
                ));
            }
        }
        if let Some(s) = self.element_spacing_m {
            if !(s > 0.0) {
                return Err(Error::Config("element_spacing_m must be positive".into()));
            }
        }
        if !(self.user_disc_radius >= 0.0) {
            return Err(Error::Config("user_disc_radius must be nonnegative".into()));
        }
        if !(self.tol_outer > 0.0) {
            return Err(Error::Config("tol_outer must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.pf_slots == 0 {
            return Err(Error::Config("pf_slots must be at least 1".into()));
        }
        for (name, grid) in [("alpha_grid", &self.alpha_grid), ("beta_grid", &self.beta_grid)] {
            if grid.is_empty() {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
            if grid.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Config(format!("{name} values must lie in [0, 1]")));
            }
        }
        if self.designs.is_empty() {
            return Err(Error::Config("designs must not be empty".into()));
        }
        Ok(())
    }

    /// Parsed duplexing mode.
    pub fn mode(&self) -> Result<DuplexMode> {
        match self.duplex.as_str() {
            "tdd" => Ok(DuplexMode::Tdd),
            "fdd" => Ok(DuplexMode::Fdd),
            other => Err(Error::Config(format!("unknown duplex '{other}' (use tdd or fdd)"))),
        }
    }

    /// Parsed beamformer.
    pub fn beamformer_kind(&self) -> Result<Beamformer> {
        match self.beamformer.as_str() {
            "wmmse" => Ok(Beamformer::Wmmse),
            "zf" => Ok(Beamformer::Zf),
            other => Err(Error::Config(format!("unknown beamformer '{other}' (use wmmse or zf)"))),
        }
    }

    /// Parsed weighting scheme.
    pub fn weighting_scheme(&self) -> Result<WeightingScheme> {
        self.weighting.parse().map_err(Error::Config)
    }

    /// Parsed design list in the configured order.
    pub fn design_kinds(&self) -> Result<Vec<DesignKind>> {
        self.designs.iter().map(|s| s.parse().map_err(Error::Config)).collect()
    }

    /// Resolved downlink carrier.
    pub fn resolved_dl_carrier_hz(&self) -> Result<f64> {
        Ok(match (self.mode()?, self.dl_carrier_hz) {
            (_, Some(f)) => f,
            (DuplexMode::Tdd, None) => self.ul_carrier_hz,
            (DuplexMode::Fdd, None) => DEFAULT_FDD_DL_CARRIER_HZ,
        })
    }

    /// Resolved element spacing (half the uplink wavelength by default).
    pub fn resolved_element_spacing_m(&self) -> f64 {
        self.element_spacing_m
            .unwrap_or(SPEED_OF_LIGHT / self.ul_carrier_hz / 2.0)
    }

    /// Channel scenario used for sampling realizations.
    pub fn scenario(&self) -> Result<ChannelScenario> {
        Ok(ChannelScenario {
            geometry: SimGeometry {
                bs_position: self.bs_position,
                irs_position: self.irs_position,
                user_disc_center: self.user_disc_center,
                user_disc_radius: self.user_disc_radius,
                user_height: self.user_height_m,
                bs_array: (self.bs_antennas[0], self.bs_antennas[1]),
                irs_array: (self.irs_elements[0], self.irs_elements[1]),
                element_spacing: self.resolved_element_spacing_m(),
            },
            rician: RicianParams {
                kappa_bs_irs: db_to_linear(self.rician_bs_irs_db),
                kappa_irs_user: db_to_linear(self.rician_irs_user_db),
            },
            mode: self.mode()?,
            dl_carrier_hz: self.resolved_dl_carrier_hz()?,
            ul_carrier_hz: self.ul_carrier_hz,
            users: self.users,
        })
    }

    /// Budgets and noise powers for a bandwidth split alpha: TDD serves
    /// both directions over the full band, FDD splits power and noise
    /// bandwidth proportionally.
    pub fn duplex_params(&self, alpha: f64) -> Result<DuplexParams> {
        let noise_dl =
            self.bandwidth_hz * dbm_to_watt(self.noise_density_dbm_hz + self.noise_figure_dl_db);
        let noise_ul =
            self.bandwidth_hz * dbm_to_watt(self.noise_density_dbm_hz + self.noise_figure_ul_db);
        Ok(DuplexParams::split(
            self.mode()?,
            alpha,
            dbm_to_watt(self.dl_power_dbm),
            dbm_to_watt(self.ul_power_dbm),
            noise_dl,
            noise_ul,
        ))
    }

    /// Solver controls with the configured outer loop and beamformer.
    pub fn bcd_options(&self) -> Result<BcdOptions> {
        let mut opts = BcdOptions::default();
        opts.tol_outer = self.tol_outer;
        opts.max_outer = self.max_outer;
        opts.beamformer = self.beamformer_kind()?;
        Ok(opts)
    }

    /// Total base-station antennas M.
    pub fn bs_antenna_count(&self) -> usize {
        self.bs_antennas[0] * self.bs_antennas[1]
    }

    /// Total surface elements N.
    pub fn irs_element_count(&self) -> usize {
        self.irs_elements[0] * self.irs_elements[1]
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg = SystemConfig::from_toml("").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(cfg.users, 4);
        assert_eq!(cfg.bs_antenna_count(), 8);
        assert_eq!(cfg.irs_element_count(), 200);
        assert_eq!(cfg.alpha_grid.len(), 11);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = SystemConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = SystemConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SystemConfig::from_toml("bogus = 1").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("bogus"), "message: {msg}");
    }

    #[test]
    fn validation_catches_bad_values() {
        for text in [
            "users = 0",
            "duplex = \"xdd\"",
            "alpha_grid = [0.0, 1.5]",
            "beta_grid = []",
            "designs = [\"flying\"]",
            "beamformer = \"dirty\"",
            "weighting = \"round-robin\"",
            "bandwidth_hz = 0.0",
            "realizations = 0",
        ] {
            assert!(SystemConfig::from_toml(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn tdd_carrier_resolution() {
        let cfg = SystemConfig::from_toml("duplex = \"tdd\"").unwrap();
        assert_eq!(cfg.resolved_dl_carrier_hz().unwrap(), cfg.ul_carrier_hz);
        let conflict = SystemConfig::from_toml("duplex = \"tdd\"\ndl_carrier_hz = 2.14e9");
        assert!(conflict.is_err());
        let matched =
            SystemConfig::from_toml("duplex = \"tdd\"\ndl_carrier_hz = 1.95e9").unwrap();
        assert_eq!(matched.resolved_dl_carrier_hz().unwrap(), 1.95e9);
    }

    #[test]
    fn fdd_carrier_resolution() {
        let cfg = SystemConfig::from_toml("duplex = \"fdd\"").unwrap();
        assert_eq!(cfg.resolved_dl_carrier_hz().unwrap(), DEFAULT_FDD_DL_CARRIER_HZ);
        let cfg = SystemConfig::from_toml("duplex = \"fdd\"\ndl_carrier_hz = 2.6e9").unwrap();
        assert_eq!(cfg.resolved_dl_carrier_hz().unwrap(), 2.6e9);
    }

    #[test]
    fn power_and_noise_conversion() {
        let cfg = SystemConfig::default();
        let p = cfg.duplex_params(0.3).unwrap();
        // 30 dBm = 1 W shared by the downlink; 17 dBm ~ 50.1 mW per user.
        assert!((p.p_max_dl - 1.0).abs() < 1e-12);
        assert!((p.p_max_ul - 0.05011872336272722).abs() < 1e-15);
        // 20 MHz of -170 + 9 dBm/Hz noise density.
        let expect_dl = 20e6 * 10f64.powf((-170.0 + 9.0 - 30.0) / 10.0);
        assert!((p.noise_dl - expect_dl).abs() < 1e-25, "{} vs {expect_dl}", p.noise_dl);
        assert!(p.noise_ul < p.noise_dl);
        assert_eq!(p.alpha, 0.3);
    }

    #[test]
    fn fdd_split_scales_power_and_noise() {
        let cfg = SystemConfig::from_toml("duplex = \"fdd\"").unwrap();
        let full = cfg.duplex_params(1.0).unwrap();
        let part = cfg.duplex_params(0.25).unwrap();
        assert!((part.p_max_dl - 0.25 * full.p_max_dl).abs() < 1e-15);
        assert!((part.noise_dl - 0.25 * full.noise_dl).abs() < 1e-25);
        let tdd = SystemConfig::default().duplex_params(0.25).unwrap();
        assert_eq!(tdd.p_max_dl, 1.0);
    }

    #[test]
    fn scenario_derivation() {
        let cfg = SystemConfig::default();
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.users, 4);
        assert_eq!(sc.geometry.bs_array, (4, 2));
        assert_eq!(sc.geometry.irs_array, (20, 10));
        let spacing = SPEED_OF_LIGHT / 1.95e9 / 2.0;
        assert!((sc.geometry.element_spacing - spacing).abs() < 1e-12);
        // 6 dB and 8 dB Rician factors in linear scale.
        assert!((sc.rician.kappa_bs_irs - 3.9810717055349722).abs() < 1e-12);
        assert!((sc.rician.kappa_irs_user - 6.309573444801933).abs() < 1e-12);
    }

    #[test]
    fn solver_options_follow_config() {
        let cfg =
            SystemConfig::from_toml("beamformer = \"zf\"\ntol_outer = 1e-6\nmax_outer = 7").unwrap();
        let opts = cfg.bcd_options().unwrap();
        assert_eq!(opts.beamformer, Beamformer::Zf);
        assert_eq!(opts.tol_outer, 1e-6);
        assert_eq!(opts.max_outer, 7);
    }

    #[test]
    fn load_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "users = 2\nseed = 9").unwrap();
        let cfg = SystemConfig::load(&path).unwrap();
        assert_eq!(cfg.users, 2);
        assert_eq!(cfg.seed, 9);
        let missing = SystemConfig::load(&dir.path().join("nope.toml"));
        assert!(matches!(missing, Err(Error::Io(_))));
    }
}
