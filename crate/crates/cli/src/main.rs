use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plasmon_cli::commands;
use plasmon_cli::config::{Command, OutputFormat, PotentialKind, RunConfig};
use plasmon_cli::THREADS_ENV;

/// Plasmon spectra, correlation energies and trial-state bounds on the torus.
///
/// Exit status: 0 when every internal assertion holds, 1 when one fails or a computation
/// errors, 2 for invalid configuration.
#[derive(Parser, Debug)]
#[command(name = "plasmon", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fermi ball `|p|² ≤ R²`.
    #[arg(long, global = true)]
    radius_sq: Option<i64>,
    #[arg(long, global = true, value_enum)]
    potential: Option<PotentialKind>,
    /// Momentum `x,y,z`; repeat for a list. Replaces the axis sweep.
    #[arg(long = "k", global = true, value_parser = parse_k, allow_hyphen_values = true)]
    k: Vec<[i64; 3]>,
    /// Worker threads; defaults to PLASMON_THREADS, then to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Plasmon branch, continuum edge, two-moment estimate and continuum dispersion for k = (j,0,0).
    Figure1 {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Lattice plasmon dispersion against the continuum formula.
    Dispersion {
        /// Fermi radius squared; same as --radius-sq.
        #[arg(long)]
        kf2: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        #[arg(long)]
        kmax: Option<u32>,
    },
    /// Correlation energy summed over 0 < |k| ≤ kcut plus a tail estimate.
    Ecorr {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        #[arg(long)]
        kcut: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        tol: Option<f64>,
    },
    /// One-body bounds at full R² and trial-state residuals on a small truncation.
    Bounds {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        #[arg(long)]
        shell_cap: Option<i64>,
        #[arg(long = "M")]
        m: Option<u32>,
    },
    /// Fermionic Fock-space identity and inequality suite.
    Verify {
        #[arg(long, allow_hyphen_values = true)]
        g: Option<f64>,
        #[arg(long)]
        shell_cap: Option<i64>,
        #[arg(long = "M")]
        m: Option<u32>,
        #[arg(long, allow_hyphen_values = true)]
        check_tol: Option<f64>,
    },
}

fn parse_k(s: &str) -> Result<[i64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got `{s}`"));
    }
    let mut k = [0; 3];
    for (slot, p) in k.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|e| format!("`{p}`: {e}"))?;
    }
    Ok(k)
}

fn build_config(cli: &Cli) -> Result<(Command, RunConfig), String> {
    let mut cfg = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if c.radius_sq.is_some() {
        cfg.radius_sq = c.radius_sq;
    }
    if let Some(p) = c.potential {
        cfg.potential = p;
    }
    if !c.k.is_empty() {
        cfg.k_list = Some(c.k.clone());
    }
    if c.threads.is_some() {
        cfg.threads = c.threads;
    }
    if c.out.is_some() {
        cfg.output = c.out.clone();
    }
    if let Some(f) = c.format {
        cfg.format = f;
    }
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    let cmd = match &cli.cmd {
        Cmd::Figure1 { g, kmax } => {
            set(&mut cfg.g, *g);
            cfg.k_max = kmax.or(cfg.k_max);
            Command::Figure1
        }
        Cmd::Dispersion { kf2, g, kmax } => {
            set(&mut cfg.g, *g);
            cfg.radius_sq = kf2.or(cfg.radius_sq);
            cfg.k_max = kmax.or(cfg.k_max);
            Command::Dispersion
        }
        Cmd::Ecorr { g, kcut, tol } => {
            set(&mut cfg.g, *g);
            set(&mut cfg.tol, *tol);
            cfg.k_cut = kcut.unwrap_or(cfg.k_cut);
            Command::Ecorr
        }
        Cmd::Bounds { g, shell_cap, m } => {
            set(&mut cfg.g, *g);
            cfg.shell_cap = shell_cap.unwrap_or(cfg.shell_cap);
            cfg.m = m.unwrap_or(cfg.m);
            Command::Bounds
        }
        Cmd::Verify { g, shell_cap, m, check_tol } => {
            set(&mut cfg.g, *g);
            set(&mut cfg.check_tol, *check_tol);
            cfg.shell_cap = shell_cap.unwrap_or(cfg.shell_cap);
            cfg.m = m.unwrap_or(cfg.m);
            Command::Verify
        }
    };
    if cfg.threads.is_none() {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            let n = v.trim().parse::<usize>().map_err(|e| format!("{THREADS_ENV}=`{v}`: {e}"))?;
            cfg.threads = Some(n);
        }
    }
    let cfg = cfg.resolve(cmd).map_err(|e| e.to_string())?;
    Ok((cmd, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, cfg) = match build_config(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("plasmon: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.common.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return ExitCode::SUCCESS;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("plasmon: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    let table = match pool.install(|| commands::run(cmd, &cfg)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("plasmon {}: {e}", cmd.name());
            return ExitCode::FAILURE;
        }
    };
    let text = table.render(&cfg);
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("plasmon: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{text}"),
    }
    for f in &table.failures {
        eprintln!("plasmon {}: assertion failed: {f}", cmd.name());
    }
    if table.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
