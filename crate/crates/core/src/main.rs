use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use darkfilter::runner::{analyze, exit_code, render_analysis, run};
use darkfilter::{parse_config, preset, EngineKind, Error, ExperimentConfig, Result, SweepOptions};

#[derive(Parser)]
#[command(name = "darkfilter", version, about = "Post-selected dark-state filtering in waveguide networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the propagation length and write CSV + summary JSON
    Run(RunArgs),
    /// Print the effective model, its spectrum and dark states
    Analyze(Source),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// JSON experiment file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in experiment (fig1 or fig2)
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    engine: Option<EngineKind>,
    #[arg(long)]
    zmax: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    bath_sites: Option<usize>,
    /// Output CSV path; summary and plot files are written beside it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a matplotlib script
    #[arg(long)]
    plot: bool,
}

fn load(source: &Source) -> Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => parse_config(&std::fs::read_to_string(path)?),
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::Config(vec!["either --config or --preset is required".into()])),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut config = load(&args.source)?;
    if let Some(engine) = args.engine {
        config.engine = engine;
    }
    if let Some(z) = args.zmax {
        config.set_z_max(z);
    }
    if let Some(n) = args.steps {
        config.z_steps = n;
    }
    if let Some(l) = args.bath_sites {
        config.set_bath_sites(l);
    }
    config.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| config.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("darkfilter.csv"));
    let output = run(&config, &SweepOptions::from_env(), &out, args.plot)?;
    let r = &output.result;
    if let (Some(p), Some(d)) = (r.purity.last(), r.trace_distance.last()) {
        println!(
            "{}: {} points to z = {}, final purity {:.6}, trace distance {:.6}",
            out.display(),
            r.len(),
            config.z_max,
            p,
            d
        );
    }
    Ok(())
}

fn cmd_analyze(source: &Source) -> Result<()> {
    let config = load(source)?;
    config.validate()?;
    print!("{}", render_analysis(&config, &analyze(&config)?));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Analyze(source) => cmd_analyze(source),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
