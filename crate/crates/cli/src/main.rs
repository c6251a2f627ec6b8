use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use nodswitch::bifurcation::{
    classify_criticality, neutral_stability, switching_thresholds, trace_diagram, write_branches_csv,
    EquilibriumBranch, Fold,
};
use nodswitch::config::Config;
use nodswitch::sim::{self, RunSummary};
use nodswitch::{scenarios, Param};

mod svg;

const THRESHOLDS_CSV_HEADER: &str = "param_value,b1_star,b2_star,z1_star,z2_star,failed";

#[derive(Parser)]
#[command(
    name = "nodswitch",
    version,
    about = "Opinion-driven patch switching: simulation and bifurcation analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario and write trajectory.csv, summary.json and trajectory.svg
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Skip the SVG plot
        #[arg(long)]
        no_svg: bool,
    },
    /// Continue equilibria in `u` or `b`; writes branch.csv and folds.json
    Bifurcate(RunArgs),
    /// Neutral-equilibrium stability and criticality of the bifurcation parameters
    Classify(RunArgs),
    /// Switching thresholds over a grid of `u` or `k_x`; writes thresholds.csv
    Sweep(RunArgs),
    /// Print a complete config document
    DumpDefaults {
        /// Shipped scenario to start from
        #[arg(long, value_enum, default_value_t = Preset::FastVsSlow)]
        scenario: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if absent
    #[arg(long, env = "NODSWITCH_OUT", default_value = "out")]
    out: PathBuf,
    /// Dotted override, e.g. `bifurcation.params.u=1.1`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Replace existing output files
    #[arg(long)]
    overwrite: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    FastVsSlow,
    EnvironmentAdaptation,
    Declustering,
    LoneAgent,
}

impl Preset {
    fn scenario(self, seed: u64) -> sim::Scenario {
        match self {
            Preset::FastVsSlow => scenarios::fast_vs_slow(seed),
            Preset::EnvironmentAdaptation => scenarios::environment_adaptation(seed),
            Preset::Declustering => scenarios::declustering(seed),
            Preset::LoneAgent => scenarios::lone_agent(seed),
        }
    }
}

impl RunArgs {
    fn load(&self) -> anyhow::Result<Config> {
        let text = match &self.config {
            Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            None => Config::default().to_json_pretty(),
        };
        let origin = self
            .config
            .as_deref()
            .map_or("defaults".into(), |p| p.display().to_string());
        Config::parse(&text, &self.overrides).with_context(|| format!("in {origin}"))
    }

    /// Creates the output directory and refuses to clobber any of `files`.
    fn prepare(&self, files: &[&str]) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let paths: Vec<PathBuf> = files.iter().map(|f| self.out.join(f)).collect();
        if !self.overwrite {
            if let Some(p) = paths.iter().find(|p| p.exists()) {
                bail!(Invalid(format!(
                    "{} exists; pass --overwrite to replace it",
                    p.display()
                )));
            }
        }
        Ok(paths)
    }
}

/// Bad input that is not a core validation error.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn create(path: &Path) -> anyhow::Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &RunArgs, no_svg: bool) -> anyhow::Result<()> {
    let cfg = args.load()?;
    let scenario = cfg.to_scenario();
    scenario.validate()?;
    let mut files = vec!["trajectory.csv", "summary.json"];
    if !no_svg {
        files.push("trajectory.svg");
    }
    let paths = args.prepare(&files)?;
    let out = sim::run(&scenario)?;

    let mut w = create(&paths[0])?;
    out.log.write_csv(&mut w)?;
    w.flush()?;
    let summary = RunSummary::new(&scenario, &out);
    write_json(&paths[1], &summary)?;
    if !no_svg {
        fs::write(&paths[2], svg::render(&scenario, &out))?;
    }
    for (id, t) in summary.first_switch.iter().enumerate() {
        match t {
            Some(t) => println!("agent {id}: first switch at t = {t}"),
            None => println!("agent {id}: no switch"),
        }
    }
    Ok(())
}

fn bifurcate(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.load()?;
    let section = &cfg.bifurcation;
    if section.free == Param::Kx {
        bail!(Invalid("bifurcation.free must be `u` or `b`".into()));
    }
    let problem = section.problem()?;
    let paths = args.prepare(&["branch.csv", "folds.json"])?;
    let branches = trace_diagram(&problem, &section.continuation)?;

    let mut w = create(&paths[0])?;
    write_branches_csv(&mut w, &branches)?;
    w.flush()?;

    let folds: Vec<Fold> = branches.iter().flat_map(|b| b.folds.iter().copied()).collect();
    let merged = EquilibriumBranch {
        folds: folds.clone(),
        ..EquilibriumBranch::default()
    };
    let thresholds = (problem.free == Param::B).then(|| merged.threshold_folds()).flatten();
    let branch_points: Vec<f64> = branches.iter().flat_map(|b| b.branch_points.iter().copied()).collect();
    let notes: Vec<&str> = branches.iter().filter_map(|b| b.terminated.as_deref()).collect();
    write_json(
        &paths[1],
        &json!({
            "free": problem.free,
            "range": problem.range,
            "rho": problem.rho,
            "branches": branches.len(),
            "folds": folds,
            "thresholds": thresholds,
            "branch_points": branch_points,
            "terminated": notes,
        }),
    )?;
    println!("{} branches, {} folds", branches.len(), folds.len());
    Ok(())
}

fn classify(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.load()?;
    let section = &cfg.bifurcation;
    let mut unbiased = section.params;
    unbiased.b = 0.0;
    let paths = args.prepare(&["classify.json"])?;
    let report = json!({
        "params": unbiased,
        "rho": section.rho,
        "critical_attention": unbiased.critical_attention(),
        "neutral": neutral_stability(&unbiased)?,
        "criticality": classify_criticality(&unbiased, section.rho)?,
    });
    write_json(&paths[0], &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn sweep(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.load()?;
    let section = &cfg.bifurcation;
    let grid = &section.sweep;
    if grid.param == Param::B {
        bail!(Invalid("bifurcation.sweep.param must be `u` or `k_x`".into()));
    }
    if grid.values.is_empty() {
        bail!(Invalid("bifurcation.sweep.values is empty".into()));
    }
    let paths = args.prepare(&["thresholds.csv"])?;
    let rows: Vec<_> = grid
        .values
        .par_iter()
        .map(|&v| {
            let mut p = section.params;
            grid.param.set(&mut p, v);
            (
                v,
                switching_thresholds(&p, section.rho, grid.b_range, &section.continuation),
            )
        })
        .collect();

    let mut w = create(&paths[0])?;
    writeln!(w, "{THRESHOLDS_CSV_HEADER}")?;
    let mut failed = 0;
    for (v, r) in &rows {
        match r {
            Ok(t) => writeln!(
                w,
                "{v:?},{:?},{:?},{:?},{:?},0",
                t.lower.param, t.upper.param, t.lower.z, t.upper.z
            )?,
            Err(e) => {
                failed += 1;
                eprintln!("{} = {v}: {e}", grid.param.name());
                writeln!(w, "{v:?},,,,,1")?;
            }
        }
    }
    w.flush()?;
    println!("{} grid points, {failed} failed", rows.len());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<nodswitch::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { run, no_svg } => simulate(run, *no_svg),
        Command::Bifurcate(run) => bifurcate(run),
        Command::Classify(run) => classify(run),
        Command::Sweep(run) => sweep(run),
        Command::DumpDefaults { scenario, seed } => {
            println!("{}", Config::from_scenario(&scenario.scenario(*seed)).to_json_pretty());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
