//! Run configuration: defaults, flat key=value config files, and CLI
//! overrides.
//!
//! Precedence: built-in defaults, then the config file, then command-line
//! flags. The defaults reproduce the reference comparison scenario, so
//! `netscs compare` with an empty config is a complete experiment.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use netscs_core::coeffs::Method;
use netscs_core::dist::GridOptions;
use netscs_core::platoon::PlatoonConfig;
use netscs_core::SystemSpec;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; exit code 2. The message names the field.
    Config(String),
    /// Engine failure at run time; exit code 1.
    Runtime(String),
    /// Output I/O failure; exit code 1.
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "error: config: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: runtime: {msg}"),
            CliError::Io(msg) => write!(f, "error: io: {msg}"),
        }
    }
}

impl From<netscs_core::Error> for CliError {
    fn from(err: netscs_core::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Per-key command-line overrides shared by all subcommands.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    /// Flat key = value configuration file ('#' starts a comment).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Plant gain.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Input gain.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Noise standard deviation.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Initial state.
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Triggering threshold.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    /// Maximum inter-communication interval (steps).
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    /// quadrature | particle | open-loop | open-loop-particle | monte-carlo.
    #[arg(long)]
    pub method: Option<String>,
    /// Number of transient steps to tabulate.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Particle count.
    #[arg(long)]
    pub particles: Option<usize>,
    /// Kernel bandwidth.
    #[arg(long, allow_negative_numbers = true)]
    pub bandwidth: Option<f64>,
    /// Master seed for all random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Approximate grid node count.
    #[arg(long = "grid-nodes")]
    pub grid_nodes: Option<usize>,
    /// Grid half-width in noise standard deviations.
    #[arg(long = "support-factor", allow_negative_numbers = true)]
    pub support_factor: Option<f64>,
    /// csv | json.
    #[arg(long)]
    pub format: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Platoon: desired gap (m).
    #[arg(long, allow_negative_numbers = true)]
    pub gap: Option<f64>,
    /// Platoon: velocity feedback weight.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Platoon: control weight divisor.
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Platoon: position feedback gain.
    #[arg(long = "k-gain", allow_negative_numbers = true)]
    pub k_gain: Option<f64>,
    /// Platoon: sampling period (s).
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Platoon: total time (s).
    #[arg(long, allow_negative_numbers = true)]
    pub duration: Option<f64>,
    /// Platoon: maximum inter-communication interval (steps).
    #[arg(long = "platoon-t-max")]
    pub platoon_t_max: Option<usize>,
    /// Platoon: comma-separated threshold sweep, e.g. "1,2,3,4".
    #[arg(long)]
    pub etas: Option<String>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub method: Method,
    pub horizon: usize,
    pub trials: u64,
    pub particles: usize,
    pub bandwidth: f64,
    pub seed: u64,
    pub grid: GridOptions,
    pub format: OutputFormat,
    pub output: Option<PathBuf>,
    pub gap: f64,
    pub gamma: f64,
    pub q: f64,
    pub k_gain: f64,
    pub dt: f64,
    pub duration: f64,
    pub platoon_t_max: usize,
    pub etas: Vec<f64>,
}

/// Raw key/value state before validation.
struct Raw {
    a: f64,
    b: f64,
    sigma: f64,
    x0: f64,
    eta: f64,
    t_max: usize,
    method: String,
    horizon: usize,
    trials: u64,
    particles: usize,
    bandwidth: f64,
    seed: u64,
    grid_nodes: usize,
    support_factor: f64,
    format: String,
    output: Option<PathBuf>,
    gap: f64,
    gamma: f64,
    q: f64,
    k_gain: f64,
    dt: f64,
    duration: f64,
    platoon_t_max: usize,
    etas: String,
}

impl Default for Raw {
    fn default() -> Self {
        Self {
            a: 1.25,
            b: 1.0,
            sigma: 1.0,
            x0: -2.0,
            eta: 1.0,
            t_max: 5,
            method: "quadrature".into(),
            horizon: 20,
            trials: 10_000,
            particles: 10_000,
            bandwidth: 0.1,
            seed: 1,
            grid_nodes: 4001,
            support_factor: 8.0,
            format: "csv".into(),
            output: None,
            gap: 3.0,
            gamma: 1.0,
            q: 1.0,
            k_gain: 1.0,
            dt: 0.1,
            duration: 40.0,
            platoon_t_max: 20,
            etas: "1,2,3,4".into(),
        }
    }
}

fn config_err(field: &str, what: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {what}"))
}

fn parse<T: core::str::FromStr>(field: &'static str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(field, format!("cannot parse '{}'", value.trim())))
}

impl Raw {
    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(
                    "config",
                    format!("line {}: expected 'key = value'", lineno + 1),
                ));
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "a" => self.a = parse("a", value)?,
            "b" => self.b = parse("b", value)?,
            "sigma" => self.sigma = parse("sigma", value)?,
            "x0" => self.x0 = parse("x0", value)?,
            "eta" => self.eta = parse("eta", value)?,
            "t_max" => self.t_max = parse("t_max", value)?,
            "method" => self.method = value.trim().to_string(),
            "horizon" => self.horizon = parse("horizon", value)?,
            "trials" => self.trials = parse("trials", value)?,
            "particles" => self.particles = parse("particles", value)?,
            "bandwidth" => self.bandwidth = parse("bandwidth", value)?,
            "seed" => self.seed = parse("seed", value)?,
            "grid_nodes" => self.grid_nodes = parse("grid_nodes", value)?,
            "support_factor" => self.support_factor = parse("support_factor", value)?,
            "format" => self.format = value.trim().to_string(),
            "output" => self.output = Some(PathBuf::from(value.trim())),
            "gap" => self.gap = parse("gap", value)?,
            "gamma" => self.gamma = parse("gamma", value)?,
            "q" => self.q = parse("q", value)?,
            "k_gain" => self.k_gain = parse("k_gain", value)?,
            "dt" => self.dt = parse("dt", value)?,
            "duration" => self.duration = parse("duration", value)?,
            "platoon_t_max" => self.platoon_t_max = parse("platoon_t_max", value)?,
            "etas" => self.etas = value.trim().to_string(),
            other => return Err(config_err("config", format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &o.$field { self.$field = v.clone(); })*
            };
        }
        take!(a, b, sigma, x0, eta, t_max, method, horizon, trials, particles, bandwidth, seed);
        take!(
            grid_nodes,
            support_factor,
            format,
            gap,
            gamma,
            q,
            k_gain,
            dt,
            duration
        );
        take!(platoon_t_max, etas);
        if o.output.is_some() {
            self.output = o.output.clone();
        }
    }
}

impl RunConfig {
    pub fn load(overrides: &Overrides) -> Result<Self, CliError> {
        let mut raw = Raw::default();
        if let Some(path) = &overrides.config {
            raw.apply_file(path)?;
        }
        raw.apply_overrides(overrides);
        Self::from_raw(raw)
    }

    fn from_raw(raw: Raw) -> Result<Self, CliError> {
        let system = SystemSpec::new(raw.a, raw.b, raw.sigma, raw.x0, raw.eta, raw.t_max)
            .map_err(|e| CliError::Config(e.to_string().replace("invalid parameter: ", "")))?;
        let method = match raw.method.as_str() {
            "quadrature" => Method::Quadrature,
            "particle" => Method::Particle,
            "open-loop" => Method::OpenLoop,
            "open-loop-particle" => Method::OpenLoopParticle,
            "monte-carlo" => Method::MonteCarlo,
            other => return Err(config_err("method", format!("unknown method '{other}'"))),
        };
        let format = match raw.format.as_str() {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return Err(config_err("format", format!("unknown format '{other}'"))),
        };
        if raw.horizon < 1 {
            return Err(config_err("horizon", "must be at least 1"));
        }
        if raw.trials < 1 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if raw.particles < 100 {
            return Err(config_err("particles", "must be at least 100"));
        }
        if !raw.bandwidth.is_finite() || raw.bandwidth <= 0.0 {
            return Err(config_err("bandwidth", "must be positive and finite"));
        }
        let grid = GridOptions {
            nodes_hint: raw.grid_nodes,
            support_factor: raw.support_factor,
        };
        grid.validate()
            .map_err(|e| CliError::Config(e.to_string().replace("invalid parameter: ", "")))?;
        let mut etas = Vec::new();
        for part in raw.etas.split(',') {
            let value: f64 = parse("etas", part)?;
            if !value.is_finite() || value <= 0.0 {
                return Err(config_err("etas", "thresholds must be positive"));
            }
            etas.push(value);
        }
        if etas.is_empty() {
            return Err(config_err("etas", "must list at least one threshold"));
        }
        let cfg = Self {
            system,
            method,
            horizon: raw.horizon,
            trials: raw.trials,
            particles: raw.particles,
            bandwidth: raw.bandwidth,
            seed: raw.seed,
            grid,
            format,
            output: raw.output,
            gap: raw.gap,
            gamma: raw.gamma,
            q: raw.q,
            k_gain: raw.k_gain,
            dt: raw.dt,
            duration: raw.duration,
            platoon_t_max: raw.platoon_t_max,
            etas,
        };
        cfg.platoon(cfg.system.eta)
            .validate()
            .map_err(|e| CliError::Config(e.to_string().replace("invalid parameter: ", "")))?;
        Ok(cfg)
    }

    /// Platoon parameters for a given threshold, sharing the run's noise,
    /// trial, and particle settings.
    pub fn platoon(&self, eta: f64) -> PlatoonConfig {
        PlatoonConfig {
            gap: self.gap,
            gamma: self.gamma,
            q: self.q,
            k_gain: self.k_gain,
            dt: self.dt,
            duration: self.duration,
            eta,
            t_max: self.platoon_t_max,
            sigma: self.system.sigma,
            trials: self.trials,
            particles: self.particles,
            bandwidth: self.bandwidth,
            grid: self.grid.clone(),
        }
    }

    /// The configuration as a JSON object (sorted keys, deterministic).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "a": self.system.a,
            "b": self.system.b,
            "sigma": self.system.sigma,
            "x0": self.system.x0,
            "eta": self.system.eta,
            "t_max": self.system.t_max,
            "method": self.method.name(),
            "horizon": self.horizon,
            "trials": self.trials,
            "particles": self.particles,
            "bandwidth": self.bandwidth,
            "seed": self.seed,
            "grid_nodes": self.grid.nodes_hint,
            "support_factor": self.grid.support_factor,
            "gap": self.gap,
            "gamma": self.gamma,
            "q": self.q,
            "k_gain": self.k_gain,
            "dt": self.dt,
            "duration": self.duration,
            "platoon_t_max": self.platoon_t_max,
            "etas": self.etas,
        })
    }

    /// Summary line embedded as a comment in CSV outputs.
    pub fn tag(&self) -> String {
        format!(
            "method={} a={} b={} sigma={} x0={} eta={} t_max={} seed={}",
            self.method.name(),
            self.system.a,
            self.system.b,
            self.system.sigma,
            self.system.x0,
            self.system.eta,
            self.system.t_max,
            self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_the_reference_scenario() {
        let cfg = RunConfig::load(&Overrides::default()).unwrap();
        assert_eq!(cfg.system.a, 1.25);
        assert_eq!(cfg.system.x0, -2.0);
        assert_eq!(cfg.system.t_max, 5);
        assert_eq!(cfg.trials, 10_000);
        assert_eq!(cfg.particles, 10_000);
        assert_eq!(cfg.bandwidth, 0.1);
        assert_eq!(cfg.platoon_t_max, 20);
        assert_eq!(cfg.etas, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn file_and_flags_override_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\n a = 2.0 \neta = 0.5 # trailing\nmethod = particle\n",
        )
        .unwrap();
        let overrides = Overrides {
            config: Some(path),
            eta: Some(0.75),
            ..Overrides::default()
        };
        let cfg = RunConfig::load(&overrides).unwrap();
        assert_eq!(cfg.system.a, 2.0);
        assert_eq!(cfg.system.eta, 0.75);
        assert_eq!(cfg.method, Method::Particle);
    }

    #[test]
    fn errors_name_the_field() {
        let overrides = Overrides {
            sigma: Some(-1.0),
            ..Overrides::default()
        };
        let err = RunConfig::load(&overrides).unwrap_err();
        assert!(
            matches!(&err, CliError::Config(m) if m.contains("sigma")),
            "{err}"
        );

        let overrides = Overrides {
            method: Some("magic".into()),
            ..Overrides::default()
        };
        let err = RunConfig::load(&overrides).unwrap_err();
        assert!(
            matches!(&err, CliError::Config(m) if m.contains("method")),
            "{err}"
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "nonsense = 1\n").unwrap();
        let overrides = Overrides {
            config: Some(path),
            ..Overrides::default()
        };
        let err = RunConfig::load(&overrides).unwrap_err();
        assert!(
            matches!(&err, CliError::Config(m) if m.contains("nonsense")),
            "{err}"
        );
    }
}
