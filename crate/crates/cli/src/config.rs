//! Scenario configuration: flat `key = value` files plus flag overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { key: String, at: Location },
    #[error("{at}: expected `key = value`, got `{text}`")]
    Syntax { text: String, at: Location },
    #[error("{at}: malformed value for `{key}`: `{value}`")]
    Malformed {
        key: String,
        value: String,
        at: Location,
    },
    #[error("invalid configuration: {0}")]
    Constraint(String),
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Flag,
    Environment,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Flag => f.write_str("command line"),
            Location::Environment => f.write_str("SQUASHLAB_SEED"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Spectra,
    LoopSim,
    Atom,
    Fluorescence,
    Verify,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "spectra" => Mode::Spectra,
            "loop-sim" => Mode::LoopSim,
            "atom" => Mode::Atom,
            "fluorescence" => Mode::Fluorescence,
            "verify" => Mode::Verify,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Spectra => "spectra",
            Mode::LoopSim => "loop-sim",
            Mode::Atom => "atom",
            Mode::Fluorescence => "fluorescence",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    Y,
}

pub const DEFAULT_SEED: u64 = 1;

/// Every recognized key, in the order the effective config is echoed.
pub const KEYS: &[&str] = &[
    "mode",
    "out",
    "seed",
    "L",
    "eta",
    "gx",
    "gy",
    "epsilon_x",
    "epsilon_y",
    "tau",
    "bandwidth",
    "dt",
    "samples",
    "omega_min",
    "omega_max",
    "n_bins",
    "segment_len",
    "quadrature",
    "x0",
    "y0",
    "z0",
    "t_max",
    "allow_unstable",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub l: f64,
    pub eta: f64,
    /// Round-loop gains; `None` selects the optimal gain for the channel.
    pub gx: Option<f64>,
    pub gy: Option<f64>,
    pub epsilon_x: f64,
    pub epsilon_y: f64,
    pub tau: f64,
    pub bandwidth: f64,
    pub dt: f64,
    pub samples: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_bins: usize,
    pub segment_len: usize,
    pub quadrature: Quadrature,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub t_max: f64,
    pub allow_unstable: bool,
}

impl ScenarioConfig {
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            out: None,
            seed: DEFAULT_SEED,
            l: 1.0,
            eta: 0.5,
            gx: None,
            gy: None,
            epsilon_x: 0.0,
            epsilon_y: 0.0,
            tau: 0.001,
            bandwidth: 100.0,
            dt: 1e-4,
            samples: 1 << 22,
            omega_min: 0.0,
            omega_max: 10.0,
            n_bins: 201,
            segment_len: 1 << 17,
            quadrature: Quadrature::X,
            x0: 0.0,
            y0: 0.0,
            z0: 1.0,
            t_max: 10.0,
            allow_unstable: false,
        }
    }

    /// Effective configuration as `key = value` lines.
    pub fn echo(&self) -> String {
        let opt = |g: Option<f64>| g.map_or_else(|| "optimal".to_string(), |v| v.to_string());
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        line("mode", self.mode.as_str().into());
        line(
            "out",
            self.out
                .as_ref()
                .map_or_else(|| "-".into(), |p| p.display().to_string()),
        );
        line("seed", self.seed.to_string());
        line("L", self.l.to_string());
        line("eta", self.eta.to_string());
        line("gx", opt(self.gx));
        line("gy", opt(self.gy));
        line("epsilon_x", self.epsilon_x.to_string());
        line("epsilon_y", self.epsilon_y.to_string());
        line("tau", self.tau.to_string());
        line("bandwidth", self.bandwidth.to_string());
        line("dt", self.dt.to_string());
        line("samples", self.samples.to_string());
        line("omega_min", self.omega_min.to_string());
        line("omega_max", self.omega_max.to_string());
        line("n_bins", self.n_bins.to_string());
        line("segment_len", self.segment_len.to_string());
        line(
            "quadrature",
            match self.quadrature {
                Quadrature::X => "x",
                Quadrature::Y => "y",
            }
            .into(),
        );
        line("x0", self.x0.to_string());
        line("y0", self.y0.to_string());
        line("z0", self.z0.to_string());
        line("t_max", self.t_max.to_string());
        line("allow_unstable", self.allow_unstable.to_string());
        s
    }

    /// Checks that hold for every mode.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Constraint(msg));
        if !(self.l > 0.0 && self.l.is_finite()) {
            return fail(format!("L = {} must be > 0", self.l));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return fail(format!("eta = {} must lie in [0, 1]", self.eta));
        }
        for (name, e) in [("epsilon_x", self.epsilon_x), ("epsilon_y", self.epsilon_y)] {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("{name} = {e} must lie in [0, 1]"));
            }
        }
        if self.epsilon_x + self.epsilon_y > 1.0 + 1e-12 {
            return fail(format!(
                "epsilon_x + epsilon_y > 1 ({} + {})",
                self.epsilon_x, self.epsilon_y
            ));
        }
        for (name, g, e) in [
            ("gx", self.gx, self.epsilon_x),
            ("gy", self.gy, self.epsilon_y),
        ] {
            match g {
                Some(1.0) => return fail(format!("{name} = 1 is singular")),
                Some(g) if !g.is_finite() => return fail(format!("{name} = {g} must be finite")),
                Some(g) if g != 0.0 && e == 0.0 => {
                    return fail(format!(
                        "{name} = {g} requires a detector on that quadrature"
                    ))
                }
                _ => {}
            }
        }
        if !(self.tau >= 0.0) {
            return fail(format!("tau = {} must be >= 0", self.tau));
        }
        if !(self.bandwidth > 0.0) {
            return fail(format!("bandwidth = {} must be > 0", self.bandwidth));
        }
        if !(self.dt > 0.0) {
            return fail(format!("dt = {} must be > 0", self.dt));
        }
        if !self.samples.is_power_of_two() {
            return fail(format!("samples = {} must be a power of two", self.samples));
        }
        if !self.segment_len.is_power_of_two() {
            return fail(format!(
                "segment_len = {} must be a power of two",
                self.segment_len
            ));
        }
        if !(self.omega_max >= self.omega_min) {
            return fail(format!(
                "omega_max = {} is below omega_min = {}",
                self.omega_max, self.omega_min
            ));
        }
        if self.n_bins == 0 {
            return fail("n_bins must be at least 1".into());
        }
        if !(self.t_max >= 0.0) {
            return fail(format!("t_max = {} must be >= 0", self.t_max));
        }
        if self.x0 * self.x0 + self.y0 * self.y0 + self.z0 * self.z0 > 1.0 + 1e-10 {
            return fail("initial Bloch vector (x0, y0, z0) lies outside the sphere".into());
        }
        Ok(())
    }
}

/// A raw setting with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub value: String,
    pub at: Location,
}

/// Parses the flat `key = value` format. Later lines override earlier ones.
pub fn parse_settings(text: &str) -> Result<BTreeMap<String, Setting>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let at = Location::Line(i + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                text: line.to_string(),
                at,
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                at,
            });
        }
        out.insert(
            key.to_string(),
            Setting {
                value: value.trim().to_string(),
                at,
            },
        );
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<BTreeMap<String, Setting>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings(&text)
}

fn malformed(key: &str, s: &Setting) -> ConfigError {
    ConfigError::Malformed {
        key: key.to_string(),
        value: s.value.clone(),
        at: s.at.clone(),
    }
}

fn parse_f64(key: &str, s: &Setting) -> Result<f64, ConfigError> {
    // `str::parse` is locale-independent and only accepts `.` decimals.
    s.value
        .parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| malformed(key, s))
}

/// Like [`parse_f64`] but also accepts `optimal`.
fn parse_gain(key: &str, s: &Setting) -> Result<Option<f64>, ConfigError> {
    if s.value == "optimal" {
        Ok(None)
    } else {
        parse_f64(key, s).map(Some)
    }
}

fn parse_usize(key: &str, s: &Setting) -> Result<usize, ConfigError> {
    // Powers of two may be written as 2^k.
    if let Some(exp) = s.value.strip_prefix("2^") {
        let k: u32 = exp.parse().map_err(|_| malformed(key, s))?;
        return 1usize.checked_shl(k).ok_or_else(|| malformed(key, s));
    }
    s.value.parse().map_err(|_| malformed(key, s))
}

fn parse_bool(key: &str, s: &Setting) -> Result<bool, ConfigError> {
    match s.value.as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(malformed(key, s)),
    }
}

/// Builds the effective config from merged settings. The seed falls back
/// to `env_seed` when no setting provides one.
pub fn resolve(
    settings: &BTreeMap<String, Setting>,
    env_seed: Option<&str>,
) -> Result<ScenarioConfig, ConfigError> {
    let mode = match settings.get("mode") {
        Some(s) => Mode::parse(&s.value).ok_or_else(|| malformed("mode", s))?,
        None => {
            return Err(ConfigError::Constraint(
                "mode not set (use --mode or `mode = ...`)".into(),
            ))
        }
    };
    let mut cfg = ScenarioConfig::defaults(mode);
    if let Some(v) = env_seed {
        let s = Setting {
            value: v.to_string(),
            at: Location::Environment,
        };
        cfg.seed = s.value.parse().map_err(|_| malformed("seed", &s))?;
    }
    for (key, s) in settings {
        let key = key.as_str();
        match key {
            "mode" => {}
            "out" => cfg.out = Some(PathBuf::from(&s.value)),
            "seed" => cfg.seed = s.value.parse().map_err(|_| malformed(key, s))?,
            "L" => cfg.l = parse_f64(key, s)?,
            "eta" => cfg.eta = parse_f64(key, s)?,
            "gx" => cfg.gx = parse_gain(key, s)?,
            "gy" => cfg.gy = parse_gain(key, s)?,
            "epsilon_x" => cfg.epsilon_x = parse_f64(key, s)?,
            "epsilon_y" => cfg.epsilon_y = parse_f64(key, s)?,
            "tau" => cfg.tau = parse_f64(key, s)?,
            "bandwidth" => cfg.bandwidth = parse_f64(key, s)?,
            "dt" => cfg.dt = parse_f64(key, s)?,
            "samples" => cfg.samples = parse_usize(key, s)?,
            "omega_min" => cfg.omega_min = parse_f64(key, s)?,
            "omega_max" => cfg.omega_max = parse_f64(key, s)?,
            "n_bins" => cfg.n_bins = parse_usize(key, s)?,
            "segment_len" => cfg.segment_len = parse_usize(key, s)?,
            "quadrature" => {
                cfg.quadrature = match s.value.as_str() {
                    "x" | "X" => Quadrature::X,
                    "y" | "Y" => Quadrature::Y,
                    _ => return Err(malformed(key, s)),
                }
            }
            "x0" => cfg.x0 = parse_f64(key, s)?,
            "y0" => cfg.y0 = parse_f64(key, s)?,
            "z0" => cfg.z0 = parse_f64(key, s)?,
            "t_max" => cfg.t_max = parse_f64(key, s)?,
            "allow_unstable" => cfg.allow_unstable = parse_bool(key, s)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                    at: s.at.clone(),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flag(v: &str) -> Setting {
        Setting {
            value: v.into(),
            at: Location::Flag,
        }
    }

    #[test]
    fn flag_overrides_file() {
        let mut s = parse_settings("mode = spectra\nL = 0.25 # squeezed\n").unwrap();
        s.insert("L".into(), flag("0.5"));
        let cfg = resolve(&s, None).unwrap();
        assert_eq!(cfg.l, 0.5);
    }

    #[test]
    fn infeasible_split_is_named() {
        let s = parse_settings("mode = spectra\nepsilon_x = 0.6\nepsilon_y = 0.6\n").unwrap();
        let err = resolve(&s, None).unwrap_err().to_string();
        assert!(err.contains("epsilon_x + epsilon_y > 1"), "{err}");
    }

    #[test]
    fn empty_file_uses_defaults() {
        let mut s = parse_settings("").unwrap();
        s.insert("mode".into(), flag("atom"));
        let cfg = resolve(&s, None).unwrap();
        assert_eq!(cfg, ScenarioConfig::defaults(Mode::Atom));
        assert!(cfg.echo().contains("bandwidth = 100\n"));
        assert!(cfg.echo().contains("samples = 4194304\n"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_settings("mode = atom\n\nfoo = 1\n").unwrap_err();
        assert!(matches!(
            err,
            ConfigError::UnknownKey {
                at: Location::Line(3),
                ..
            }
        ));
        let s = parse_settings("mode = atom\nL = 0,25\n").unwrap();
        let err = resolve(&s, None).unwrap_err();
        assert!(err.to_string().starts_with("line 2:"), "{err}");
        assert!(matches!(
            parse_settings("mode atom").unwrap_err(),
            ConfigError::Syntax { .. }
        ));
    }

    #[test]
    fn seed_precedence() {
        let s = parse_settings("mode = verify\n").unwrap();
        assert_eq!(resolve(&s, None).unwrap().seed, DEFAULT_SEED);
        assert_eq!(resolve(&s, Some("42")).unwrap().seed, 42);
        let s = parse_settings("mode = verify\nseed = 7\n").unwrap();
        assert_eq!(resolve(&s, Some("42")).unwrap().seed, 7);
        assert!(resolve(&s, Some("x")).is_err());
    }

    #[test]
    fn power_of_two_notation() {
        let s = parse_settings("mode = loop-sim\nsamples = 2^20\n").unwrap();
        assert_eq!(resolve(&s, None).unwrap().samples, 1 << 20);
        let s = parse_settings("mode = loop-sim\nsamples = 1000\n").unwrap();
        assert!(matches!(resolve(&s, None), Err(ConfigError::Constraint(_))));
    }

    #[test]
    fn gains_accept_optimal() {
        let s = parse_settings("mode = spectra\nepsilon_x = 0.5\ngx = optimal\ngy = 0\n").unwrap();
        let cfg = resolve(&s, None).unwrap();
        assert_eq!(cfg.gx, None);
        assert_eq!(cfg.gy, Some(0.0));
    }
}
