//! Command-line front end for the squashed-light toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod csv;
mod run;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, Location, Setting};

/// Squashed and squeezed light: spectra, loop simulation and atomic decay.
///
/// Settings come from an optional `key = value` file; flags override it.
/// Omitted gains select the optimal gain for their channel.
#[derive(Debug, Parser)]
#[command(name = "squashlab", version)]
struct Cli {
    /// spectra | loop-sim | atom | fluorescence | verify
    #[arg(long)]
    mode: Option<String>,
    /// Flat `key = value` scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    /// RNG seed; falls back to the config file, then SQUASHLAB_SEED.
    #[arg(long)]
    seed: Option<String>,
    /// Input squeezing parameter.
    #[arg(long = "L")]
    l: Option<String>,
    /// Mode matching of the atom to the beam.
    #[arg(long)]
    eta: Option<String>,
    /// X-loop round gain (or `optimal`).
    #[arg(long, allow_hyphen_values = true)]
    gx: Option<String>,
    /// Y-loop round gain (or `optimal`).
    #[arg(long, allow_hyphen_values = true)]
    gy: Option<String>,
    /// Detection efficiency on X.
    #[arg(long)]
    ex: Option<String>,
    /// Detection efficiency on Y.
    #[arg(long)]
    ey: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    bandwidth: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// Recorded samples (power of two, `2^k` accepted).
    #[arg(long)]
    samples: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega_max: Option<String>,
    /// Grid points for spectra, fluorescence and atom trajectories.
    #[arg(long)]
    n_bins: Option<String>,
    /// Welch segment length for loop-sim.
    #[arg(long)]
    segment_len: Option<String>,
    /// Quadrature reported by loop-sim: x | y.
    #[arg(long)]
    quadrature: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z0: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    /// Simulate loops that fail the stability check.
    #[arg(long)]
    allow_unstable: bool,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let pairs: [(&'static str, &Option<String>); 22] = [
            ("mode", &self.mode),
            ("out", &self.out),
            ("seed", &self.seed),
            ("L", &self.l),
            ("eta", &self.eta),
            ("gx", &self.gx),
            ("gy", &self.gy),
            ("epsilon_x", &self.ex),
            ("epsilon_y", &self.ey),
            ("tau", &self.tau),
            ("bandwidth", &self.bandwidth),
            ("dt", &self.dt),
            ("samples", &self.samples),
            ("omega_min", &self.omega_min),
            ("omega_max", &self.omega_max),
            ("n_bins", &self.n_bins),
            ("segment_len", &self.segment_len),
            ("quadrature", &self.quadrature),
            ("x0", &self.x0),
            ("y0", &self.y0),
            ("z0", &self.z0),
            ("t_max", &self.t_max),
        ];
        let mut v: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.allow_unstable {
            v.push(("allow_unstable", "true".into()));
        }
        v
    }
}

fn settings(cli: &Cli) -> Result<BTreeMap<String, Setting>, ConfigError> {
    let mut s = match &cli.config {
        Some(path) => config::read_settings(path)?,
        None => BTreeMap::new(),
    };
    for (k, v) in cli.overrides() {
        s.insert(
            k.to_string(),
            Setting {
                value: v,
                at: Location::Flag,
            },
        );
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var("SQUASHLAB_SEED").ok();
    let cfg = match settings(&cli).and_then(|s| config::resolve(&s, env_seed.as_deref())) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let stderr = io::stderr();
    let mut log = stderr.lock();
    for line in cfg.echo().lines() {
        let _ = writeln!(log, "# {line}");
    }

    let result = match &cfg.out {
        Some(path) if path.as_os_str() != "-" => match File::create(path) {
            Ok(f) => run::run(&cfg, BufWriter::new(f), &mut log),
            Err(e) => {
                eprintln!("error: cannot create {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        _ => run::run(&cfg, BufWriter::new(io::stdout().lock()), &mut log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
