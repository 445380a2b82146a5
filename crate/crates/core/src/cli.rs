//! Command-line front end: flag parsing, config overrides, exit codes.
//!
//! Exit codes: 0 on success (including --help/--version), 2 for
//! configuration or usage problems, 1 for runtime failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::config::SystemConfig;
use crate::error::Error;
use crate::experiment::{run_sweep, write_sweep_csvs};

/// Trade-off simulator for jointly configured reflecting surfaces.
#[derive(Debug, Parser)]
#[command(name = "irsim", version, about)]
pub struct Cli {
    /// TOML configuration file (defaults apply when omitted).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Designs to evaluate (comma separated): joint, individual,
    /// fixed-downlink, fixed-uplink, slicing-with-interference,
    /// slicing-without-interference.
    #[arg(long, value_delimiter = ',')]
    pub design: Vec<String>,

    /// Duplexing scheme: tdd or fdd.
    #[arg(long)]
    pub duplex: Option<String>,

    /// Weighting scheme: equal, independent or proportional-fair.
    #[arg(long)]
    pub weighting: Option<String>,

    /// Downlink beamformer: wmmse or zf.
    #[arg(long)]
    pub beamformer: Option<String>,

    /// Base seed for all random draws.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Independent channel realizations.
    #[arg(long)]
    pub realizations: Option<usize>,

    /// Bandwidth-split grid (comma separated values in [0, 1]).
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Vec<f64>,

    /// Scalarization grid (comma separated values in [0, 1]).
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Vec<f64>,

    /// Output directory for the CSV tables.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl Cli {
    /// Overlay the flags onto a base configuration.
    pub fn apply(&self, mut cfg: SystemConfig) -> SystemConfig {
        if !self.design.is_empty() {
            cfg.designs = self.design.clone();
        }
        if let Some(d) = &self.duplex {
            cfg.duplex = d.clone();
        }
        if let Some(w) = &self.weighting {
            cfg.weighting = w.clone();
        }
        if let Some(b) = &self.beamformer {
            cfg.beamformer = b.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.realizations {
            cfg.realizations = r;
        }
        if !self.alpha_grid.is_empty() {
            cfg.alpha_grid = self.alpha_grid.clone();
        }
        if !self.beta_grid.is_empty() {
            cfg.beta_grid = self.beta_grid.clone();
        }
        cfg
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let base = match &cli.config {
        Some(path) => match SystemConfig::load(path) {
            Ok(cfg) => cfg,
            Err(Error::Io(e)) => {
                eprintln!("cannot read config {}: {e}", path.display());
                return 2;
            }
            Err(e) => {
                eprintln!("{e}");
                return 2;
            }
        },
        None => SystemConfig::default(),
    };

    let cfg = cli.apply(base);
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return 2;
    }

    let output = match run_sweep(&cfg) {
        Ok(out) => out,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            return 2;
        }
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };

    let written = match write_sweep_csvs(&output, &cli.out) {
        Ok(paths) => paths,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };

    for path in &written {
        println!("wrote {}", path.display());
    }
    let m = output.metrics;
    if let Some(g) = m.max_dl_gain {
        println!("joint vs fixed-uplink: max downlink gain {:.2}%", 100.0 * g);
    }
    if let Some(g) = m.max_ul_gain {
        println!("joint vs fixed-downlink: max uplink gain {:.2}%", 100.0 * g);
    }
    if let Some(l) = m.max_dl_loss {
        println!("individual vs joint: max downlink loss {:.2}%", 100.0 * l);
    }
    if let Some(l) = m.max_ul_loss {
        println!("individual vs joint: max uplink loss {:.2}%", 100.0 * l);
    }
    0
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn flags_override_config() {
        let cli = parse(&[
            "irsim",
            "--design",
            "joint,fixed-downlink",
            "--duplex",
            "fdd",
            "--seed",
            "42",
            "--realizations",
            "3",
            "--alpha-grid",
            "0.2,0.8",
            "--beta-grid",
            "0.5",
            "--weighting",
            "independent",
            "--beamformer",
            "zf",
        ]);
        let cfg = cli.apply(SystemConfig::default());
        assert_eq!(cfg.designs, vec!["joint", "fixed-downlink"]);
        assert_eq!(cfg.duplex, "fdd");
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.realizations, 3);
        assert_eq!(cfg.alpha_grid, vec![0.2, 0.8]);
        assert_eq!(cfg.beta_grid, vec![0.5]);
        assert_eq!(cfg.weighting, "independent");
        assert_eq!(cfg.beamformer, "zf");
        assert_eq!(cli.out, PathBuf::from("out"));
    }

    #[test]
    fn absent_flags_keep_config() {
        let cli = parse(&["irsim"]);
        let cfg = cli.apply(SystemConfig::default());
        assert_eq!(cfg, SystemConfig::default());
    }

    #[test]
    fn help_exits_zero_and_bad_flag_exits_two() {
        assert_eq!(cli_main(["irsim", "--help"]), 0);
        assert_eq!(cli_main(["irsim", "--version"]), 0);
        assert_eq!(cli_main(["irsim", "--no-such-flag"]), 2);
    }

    #[test]
    fn missing_config_file_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("absent.toml");
        let code = cli_main(["irsim", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn invalid_override_exits_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = cli_main([
            "irsim",
            "--duplex",
            "half",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        assert!(!out.exists());
    }

    #[test]
    fn smoke_run_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("tiny.toml");
        std::fs::write(
            &cfg_path,
            "users = 1\nbs_antennas = [1, 1]\nirs_elements = [2, 1]\n",
        )
        .unwrap();
        let out = dir.path().join("results");
        let code = cli_main([
            "irsim",
            "--config",
            cfg_path.to_str().unwrap(),
            "--design",
            "joint",
            "--realizations",
            "1",
            "--alpha-grid",
            "0.5",
            "--beta-grid",
            "0.5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(out.join("joint.csv").exists());
        assert!(out.join("envelope.csv").exists());
        assert!(out.join("metrics.csv").exists());
    }
}
