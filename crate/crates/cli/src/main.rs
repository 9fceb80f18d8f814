//! `fbse`: reproducible numerical experiments on non-Hermitian flat-band chains.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbse_core::model::ParamSet;
use fbse_core::Error;

use config::{default_cells, default_grid, Command, Grid, Method, RunConfig};

#[derive(Parser)]
#[command(name = "fbse", version, about = "Flat-band skin-effect experiments; every run writes CSV files and a manifest.json")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Cmd {
    /// PBC bands and open-chain eigenvalues
    Spectrum,
    /// chi over a (gamma1, gamma2) grid, with region boundaries
    PhaseMap,
    /// normalized Green's-function response at E = i*eta
    Response,
    /// growth of max |G| with chain length
    Scaling,
    /// flat-band right/left eigenvectors
    Modes,
    /// generalized Brillouin zone of the dispersive bands
    Gbz,
    /// open-chain EP curves and GBZ EP3s over a grid
    EpScan,
    /// quantum distances around an EP3 (default gamma2 = 1.0)
    Qdist,
    /// 90 degree spectral rotation to a real Hamiltonian
    Transform,
    /// write the model as a spec file
    EmitModel,
    /// exact Jordan structure on t1 = gamma1, t2 = gamma2 (those are the defaults)
    JordanLocus,
    /// zero-energy multiplicities, numeric and exact
    Multiplicity,
    /// repeat a run from a manifest.json or config file
    Rerun { config: PathBuf },
    /// check files in a directory against its manifest.json
    Verify { dir: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// `builtin` or a model-spec JSON file
    #[arg(long, global = true, default_value = "builtin")]
    model: String,
    #[arg(long, global = true, allow_hyphen_values = true)]
    t1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    t2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma2: Option<f64>,
    /// extra model parameter, `name=value`
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    extra: Vec<String>,
    /// set gamma1 = gamma2 = 0
    #[arg(long, global = true)]
    hermitian: bool,
    #[arg(long, global = true)]
    cells: Option<usize>,
    #[arg(long, global = true, default_value_t = 256)]
    kpoints: usize,
    /// `g1min:g1max:n,g2min:g2max:n`
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true, default_value_t = fbse_core::response::DEFAULT_ETA)]
    eta: f64,
    #[arg(long, global = true, value_enum, default_value_t = Method::Direct)]
    method: Method,
    /// 0-based excitation site
    #[arg(long, global = true, default_value_t = 2)]
    source_site: usize,
    /// chain lengths for `scaling`
    #[arg(long, global = true, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    delta_beta: Vec<f64>,
    #[arg(long, global = true, default_value_t = 36)]
    dtheta_points: usize,
    /// random rational parameter draws for `multiplicity`
    #[arg(long, global = true, default_value_t = 0)]
    draws: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn build_config(cmd: Command, o: &Opts) -> Result<RunConfig, Error> {
    let spec = if o.model == "builtin" {
        fbse_core::model::builtin_flatband3()
    } else {
        let text = std::fs::read_to_string(&o.model)
            .map_err(|e| Error::Config(format!("cannot read model file {}: {e}", o.model)))?;
        fbse_core::model::load_model_spec(&text)?
    };
    let mut p = ParamSet::from_defaults(&spec);
    if cmd == Command::Qdist && o.gamma2.is_none() {
        p.gamma2 = 1.0;
    }
    for (name, v) in [("t1", o.t1), ("t2", o.t2), ("gamma1", o.gamma1), ("gamma2", o.gamma2)] {
        if let Some(v) = v {
            p.set(name, v);
        }
    }
    if cmd == Command::JordanLocus {
        p.gamma1 = o.gamma1.unwrap_or(p.t1);
        p.gamma2 = o.gamma2.unwrap_or(p.t2);
    }
    for kv in &o.extra {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects name=value, got '{kv}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("--set {k}: '{v}' is not a number")))?;
        p.set(k.trim(), v);
    }
    if o.hermitian {
        p.gamma1 = 0.0;
        p.gamma2 = 0.0;
    }
    let mut params = BTreeMap::new();
    for name in ["t1", "t2", "gamma1", "gamma2"] {
        params.insert(name.to_string(), p.get(name).unwrap());
    }
    params.extend(p.extras.clone());
    let grid = match &o.grid {
        Some(s) => Some(s.parse::<Grid>()?),
        None => default_grid(cmd),
    };
    let cfg = RunConfig {
        command: cmd,
        model: o.model.clone(),
        params,
        cells: o.cells.unwrap_or(default_cells(cmd)),
        kpoints: o.kpoints,
        grid,
        eta: o.eta,
        method: o.method,
        source_site: o.source_site,
        sizes: o.sizes.clone().unwrap_or_else(|| (8..=24).collect()),
        delta_beta: o.delta_beta.clone(),
        dtheta_points: o.dtheta_points,
        draws: o.draws,
        seed: o.seed,
        output_dir: o.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cmd.name())),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("FBSE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("FBSE_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let cfg = match cli.cmd {
        Cmd::Verify { dir } => {
            let bad = output::verify(&dir)?;
            if bad.is_empty() {
                println!("all files match manifest.json");
                return Ok(());
            }
            return Err(Error::Numerical(format!("checksum drift in: {}", bad.join(", "))).into());
        }
        Cmd::Rerun { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = RunConfig::from_json(&text)?;
            if let Some(out) = cli.opts.out {
                cfg.output_dir = out;
            }
            cfg
        }
        Cmd::Spectrum => build_config(Command::Spectrum, &cli.opts)?,
        Cmd::PhaseMap => build_config(Command::PhaseMap, &cli.opts)?,
        Cmd::Response => build_config(Command::Response, &cli.opts)?,
        Cmd::Scaling => build_config(Command::Scaling, &cli.opts)?,
        Cmd::Modes => build_config(Command::Modes, &cli.opts)?,
        Cmd::Gbz => build_config(Command::Gbz, &cli.opts)?,
        Cmd::EpScan => build_config(Command::EpScan, &cli.opts)?,
        Cmd::Qdist => build_config(Command::Qdist, &cli.opts)?,
        Cmd::Transform => build_config(Command::Transform, &cli.opts)?,
        Cmd::EmitModel => build_config(Command::EmitModel, &cli.opts)?,
        Cmd::JordanLocus => build_config(Command::JordanLocus, &cli.opts)?,
        Cmd::Multiplicity => build_config(Command::Multiplicity, &cli.opts)?,
    };
    log::info!("running {} into {}", cfg.command.name(), cfg.output_dir.display());
    let outcome = commands::run(&cfg)?;
    let files: Vec<(String, String)> = outcome.files.iter().map(|f| (f.name.clone(), f.text().to_string())).collect();
    output::write_all(&cfg.output_dir, &cfg, &files)
        .map_err(|e| Error::Config(format!("cannot write to {}: {e}", cfg.output_dir.display())))?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for (name, _) in &files {
        println!("wrote {}", cfg.output_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
