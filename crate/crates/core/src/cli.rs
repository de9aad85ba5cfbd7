//! `gencal` subcommands: `gen-event`, `rank` and `calibrate`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, ErrorKind, Result};
use crate::events::{load_event_csv, save_event_csv, synth_event, DisturbanceKind, NoiseSpec};
use crate::model::initialize_equilibrium;
use crate::qcal::{calibrate_event, QTable, WarmStart};
use crate::sensitivity::rank_parameters;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gencal", version, about = "Generator parameter calibration from PMU event playback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a disturbance event from the configured model.
    GenEvent(GenEventArgs),
    /// Rank candidate parameters by trajectory sensitivity.
    Rank(CommonArgs),
    /// Search the parameter grid for the best match to an event.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub event: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides the learning seed and the noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenEventArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// voltage-dip, angle-step or frequency-ramp
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub magnitude: Option<f64>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub warm_qtable: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Simulation => EXIT_SIMULATION,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, errors to `err`.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::GenEvent(a) => cmd_gen_event(a, out),
        Command::Rank(a) => cmd_rank(a, out),
        Command::Calibrate(a) => cmd_calibrate(a, out),
    }
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.hyper.seed = seed;
        if let Some(n) = cfg.event.noise.as_mut() {
            n.seed = seed;
        }
    }
    if common.event.is_some() {
        cfg.paths.event = common.event.clone();
    }
    if common.out_dir.is_some() {
        cfg.paths.out_dir = common.out_dir.clone();
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.paths.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn event_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.paths
        .event
        .as_deref()
        .ok_or_else(|| Error::Usage("no event given: pass --event or set paths.event".into()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn report(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_gen_event(args: &GenEventArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    let d = &mut cfg.event.disturbance;
    if let Some(k) = &args.kind {
        d.kind = k.parse::<DisturbanceKind>()?;
    }
    if let Some(v) = args.magnitude {
        d.magnitude = v;
    }
    if let Some(v) = args.start {
        d.start = v;
    }
    if let Some(v) = args.duration {
        d.duration = v;
    }
    if let Some(sigma) = args.noise_sigma {
        cfg.event.noise = Some(NoiseSpec {
            sigma_pq: sigma,
            seed: args.common.seed.unwrap_or(0),
        });
    }
    d.validate()?;

    let ev = &cfg.event;
    let event = synth_event(&cfg.model, &ev.disturbance, ev.length, ev.rate, ev.p0, ev.q0, ev.noise.as_ref())?;
    let path = match &cfg.paths.event {
        Some(p) => p.clone(),
        None => out_dir(&cfg)?.join("event.csv"),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    save_event_csv(&event, &path)?;

    let eq = initialize_equilibrium(&cfg.model, &event.samples[0], ev.p0, ev.q0)?;
    report(
        out,
        format_args!(
            "K = {}\nequilibrium: delta = {:.6} rad, Efd = {:.6}, Vref = {:.6}, Pref = {:.6}, Pm = {:.6}\nwrote {}\n",
            event.len(),
            eq.state.delta,
            eq.state.efd,
            eq.params.exciter.vref,
            eq.params.governor.pref,
            eq.state.pm,
            path.display()
        ),
    )
}

pub fn cmd_rank(args: &CommonArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(args)?;
    let event = load_event_csv(event_path(&cfg)?)?;
    let ranking = rank_parameters(&cfg.model, &event, &cfg.rank.candidates, cfg.rank.delta_frac)?;
    let path = out_dir(&cfg)?.join("sensitivity.csv");
    write_file(&path, &ranking.to_csv())?;
    for e in &ranking.entries {
        report(out, format_args!("{:>2}  {:<10} {:.6e}\n", e.rank, e.parameter, e.sensitivity))?;
    }
    report(out, format_args!("wrote {}\n", path.display()))
}

pub fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if args.warm_qtable.is_some() {
        cfg.paths.qtable_in = args.warm_qtable.clone();
    }
    let event = load_event_csv(event_path(&cfg)?)?;
    let grid = cfg.grid.build()?;
    let warm = match &cfg.paths.qtable_in {
        Some(p) => Some(WarmStart {
            qtable: QTable::load(p, grid.n_states, grid.n_actions())?,
            pool: None,
        }),
        None => None,
    };
    let cal = calibrate_event(&grid, &cfg.model, &event, &cfg.hyper, &cfg.reward, warm)?;
    let r = &cal.result;

    let dir = out_dir(&cfg)?;
    let mut est = String::from("parameter,true_if_known,estimated,error_pct\n");
    for (j, name) in grid.names.iter().enumerate() {
        let value = r.estimate[j];
        match cfg.grid.truth[j] {
            Some(t) => writeln!(est, "{name},{t},{value},{}", 100.0 * (value - t) / t),
            None => writeln!(est, "{name},,{value},"),
        }
        .expect("writing to a String");
    }
    write_file(&dir.join("estimate.csv"), &est)?;

    let mut hist = String::from("episode,cumulative_reward\n");
    for (i, v) in r.reward_history.iter().enumerate() {
        writeln!(hist, "{},{v}", i + 1).expect("writing to a String");
    }
    write_file(&dir.join("reward_history.csv"), &hist)?;
    cal.qtable.save(dir.join("qtable.csv"))?;
    cal.pool.save(dir.join("pool.csv"))?;

    let terminal = r.episodes_to_terminal.map_or_else(|| "none".to_string(), |e| e.to_string());
    report(
        out,
        format_args!(
            "episodes_to_terminal = {terminal}\nmodel_evaluations = {}\nbest_eps = {:.6e}\n",
            r.model_evaluations, r.best_eps
        ),
    )?;
    for (name, v) in grid.names.iter().zip(&r.estimate) {
        report(out, format_args!("{name} = {v}\n"))?;
    }
    report(out, format_args!("wrote {}\n", dir.display()))
}
