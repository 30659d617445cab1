use std::path::PathBuf;
use std::process::ExitCode;

use assist_cli::runner::CleanSubset;
use assist_cli::{CliError, ExperimentConfig, Runner};
use clap::{Parser, Subcommand};

/// Noisy-label dialogue state tracking experiments.
///
/// Exit status: 0 success, 1 usage or config error, 2 missing or
/// inconsistent upstream artifacts, 3 numerical failure.
/// `ASSIST_WORKERS` and `ASSIST_OUTPUT_ROOT` override the worker count
/// and the root that a relative `output_dir` resolves against.
#[derive(Parser)]
#[command(name = "assist", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, short, global = true, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Rerun stages even when cached.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and split the synthetic corpus.
    GenCorpus,
    /// Corrupt the training split with each configured noise preset.
    InjectNoise,
    /// Train the auxiliary model on the whole clean pool.
    TrainAux,
    /// Label every noisy training corpus with the auxiliary model.
    GenPseudo,
    /// Train the primary model of the `[primary]` plan.
    TrainPrimary,
    /// Evaluate that model on the test split.
    Eval,
    SweepAlpha,
    SweepCleanSize,
    SweepDomain,
    SweepComposition,
    /// Monte Carlo check of the combined-label error curve.
    VerifyTheorem,
    /// Rebuild every CSV from stored artifacts and compare.
    Report,
    /// Every stage in order.
    All,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&cli.config)?;
    let mut r = Runner::open(cfg)?;
    r.force = cli.force;
    match cli.command {
        Command::GenCorpus => r.gen_corpus(),
        Command::InjectNoise => r.inject_noise(),
        Command::TrainAux => r.train_aux(&[CleanSubset::Fraction(1.0)]),
        Command::GenPseudo => {
            let presets = r.cfg.noise.presets();
            r.gen_pseudo(&["full".to_string()], &presets)
        }
        Command::TrainPrimary | Command::Eval => {
            let arm = r.main_arm();
            if matches!(cli.command, Command::Eval) {
                r.manifest.require(&arm.train_stage())?;
            }
            r.train_main()?;
            let m = r.metrics(&arm.eval_stage())?;
            println!(
                "{}: jga {:.4} jta {:.4} slot_acc {:.4}",
                arm.name(),
                m.joint_goal_accuracy,
                m.joint_turn_accuracy,
                m.slot_accuracy
            );
            Ok(())
        }
        Command::SweepAlpha => r.sweep_alpha(),
        Command::SweepCleanSize => r.sweep_clean_size(),
        Command::SweepDomain => r.sweep_domain(),
        Command::SweepComposition => r.sweep_composition(),
        Command::VerifyTheorem => r.verify_theorem(),
        Command::Report => assist_cli::report::report(&mut r).map(|_| ()),
        Command::All => r.run_all(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
