use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mwrelay::experiment::{self, Experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "mwrelay", version, about = "Multi-way massive MIMO relay experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user ergodic SE, bounds and sum SE across antenna counts.
    SweepM(Common),
    /// Sum SE of both broadcast schemes, simulated and closed form.
    CompareSchemes(Common),
    /// Sum-SE distribution over random user placements.
    Cdf(Common),
    /// Closed-form bounds and limits only.
    BoundsTable(Common),
    /// Fast invariant checks.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` settings file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<String>,
    /// Antenna count or start:stop:step.
    #[arg(long)]
    m: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pu_db: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pr_db: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    profiles: Option<String>,
    #[arg(long)]
    trials_per_profile: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// conventional, proposed or both.
    #[arg(long)]
    scheme: Option<String>,
    /// unit, geometry or file:PATH.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    cell_radius: Option<String>,
    #[arg(long)]
    exclusion_radius: Option<String>,
    #[arg(long)]
    ploss_exp: Option<String>,
    #[arg(long)]
    shadow_db: Option<String>,
    #[arg(long)]
    ref_dist: Option<String>,
    /// Worker threads (also MWRELAY_THREADS).
    #[arg(long)]
    threads: Option<String>,
}

impl Common {
    fn settings(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("k", &self.k),
            ("m", &self.m),
            ("pu-db", &self.pu_db),
            ("pr-db", &self.pr_db),
            ("trials", &self.trials),
            ("profiles", &self.profiles),
            ("trials-per-profile", &self.trials_per_profile),
            ("seed", &self.seed),
            ("out", &self.out),
            ("scheme", &self.scheme),
            ("beta", &self.beta),
            ("cell-radius", &self.cell_radius),
            ("exclusion-radius", &self.exclusion_radius),
            ("ploss-exp", &self.ploss_exp),
            ("shadow-db", &self.shadow_db),
            ("ref-dist", &self.ref_dist),
            ("threads", &self.threads),
        ]
    }
}

fn build_spec(experiment: Experiment, args: &Common) -> mwrelay::Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(experiment);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| mwrelay::Error::Io(format!("{}: {e}", path.display())))?;
        spec.apply_config(&text)?;
        spec.experiment = experiment;
    }
    for (key, value) in args.settings() {
        if let Some(v) = value {
            spec.apply(key, v)?;
        }
    }
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::SweepM(a) => (Experiment::SweepM, a),
        Command::CompareSchemes(a) => (Experiment::CompareSchemes, a),
        Command::Cdf(a) => (Experiment::Cdf, a),
        Command::BoundsTable(a) => (Experiment::BoundsTable, a),
        Command::Selftest(a) => (Experiment::Selftest, a),
    };
    match execute(experiment, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("mwrelay: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(experiment: Experiment, args: &Common) -> mwrelay::Result<bool> {
    let spec = build_spec(experiment, args)?;
    if experiment == Experiment::Selftest {
        let checks = experiment::run_selftest(spec.seed);
        for c in &checks {
            println!("{c}");
        }
        return Ok(checks.iter().all(|c| c.passed));
    }
    let output = experiment::run(&spec)?;
    match &spec.out {
        Some(path) => experiment::write_csv_file(path, &output.metadata, &output.rows)?,
        None => experiment::write_csv(io::stdout().lock(), &output.metadata, &output.rows)
            .map_err(|e| mwrelay::Error::Io(e.to_string()))?,
    }
    Ok(true)
}
