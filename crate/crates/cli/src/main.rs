mod commands;
mod config;
mod preview;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reidc::protocol::{CrossMode, EvalSetting};

/// Corruption robustness benchmark for person re-identification.
#[derive(Debug, Parser)]
#[command(name = "reidc", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Master seed for corruption plans and synthetic embeddings.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Evaluation repeats (default 10; 3 for MSMT17).
    #[arg(long, global = true)]
    pub repeats: Option<u32>,
    /// Corrupted side: query, gallery, both or clean.
    #[arg(long, global = true)]
    pub setting: Option<EvalSetting>,
    /// Cross-modality mode (SYSU-MM01: A all-search, B indoor-search;
    /// RegDB: A visible-to-thermal, B thermal-to-visible).
    #[arg(long, global = true)]
    pub mode: Option<CrossMode>,
    /// TOML file overriding defaults; flags override the file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Do not enforce the published split sizes of known datasets.
    #[arg(long, global = true)]
    pub skip_stats: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample corruption plans.
    Plan(commands::PlanArgs),
    /// Write corrupted images for a manifest or a single image.
    Corrupt(commands::CorruptArgs),
    /// Score embeddings under a corruption setting.
    Eval(commands::EvalArgs),
    /// Score embeddings over fixed corruption cells.
    Sweep(commands::SweepArgs),
    /// Write synthetic embeddings in the layout `eval` and `sweep` read.
    SynthEmbed(commands::SynthArgs),
    /// Compute identity and consistent-ID losses from a logits file.
    Losses(commands::LossArgs),
    /// Render a sheet of augmented samples.
    PreviewAug(preview::PreviewArgs),
    /// Print a report or correlate two result tables.
    Report(commands::ReportArgs),
}

/// Invalid invocation; exits with code 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<reidc::Error>() {
        Some(err) if err.is_invariant() => 3,
        Some(
            reidc::Error::InvalidParameter(_)
            | reidc::Error::InvalidSeverity(_)
            | reidc::Error::UnknownCorruption(_)
            | reidc::Error::UnknownAugOp(_)
            | reidc::Error::ForbiddenAugOp(_),
        ) => 1,
        _ => 2,
    }
}

/// `outer: inner` chain, skipping causes already included in their parent's message.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if last.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
        last = msg;
    }
    out
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = config::Settings::resolve(&cli.global)?;
    if let Some(n) = settings.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Plan(a) => commands::plan(&settings, a),
        Command::Corrupt(a) => commands::corrupt(&settings, a),
        Command::Eval(a) => commands::eval(&settings, a),
        Command::Sweep(a) => commands::sweep(&settings, a),
        Command::SynthEmbed(a) => commands::synth_embed(&settings, a),
        Command::Losses(a) => commands::losses(&settings, a),
        Command::PreviewAug(a) => preview::preview(&settings, a),
        Command::Report(a) => commands::report(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_classes() {
        assert_eq!(exit_code(&Usage("x".into()).into()), 1);
        assert_eq!(exit_code(&reidc::Error::InvalidSeverity(7).into()), 1);
        assert_eq!(exit_code(&reidc::Error::EmptyManifest.into()), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("disk full")), 2);
        assert_eq!(exit_code(&reidc::Error::Invariant("broken".into()).into()), 3);
        let wrapped = anyhow::Error::from(reidc::Error::Invariant("broken".into())).context("eval");
        assert_eq!(exit_code(&wrapped), 3);
    }

    #[test]
    fn describe_skips_repeated_causes() {
        let e = anyhow::Error::from(std::io::Error::other("gone")).context("reading x: gone");
        assert_eq!(describe(&e), "reading x: gone");
        let e = anyhow::Error::from(std::io::Error::other("gone")).context("reading x");
        assert_eq!(describe(&e), "reading x: gone");
    }
}
