use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;
use textprop_cli::{
    output, run_bench, run_eval, run_propose, run_rank, run_synth, BenchReport, RunConfig, SynthOptions,
};

#[derive(Parser)]
#[command(name = "textprop", version, about = "Scene-text object proposals with text-probability re-ranking")]
struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores). Defaults to $TEXTPROP_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate proposals (dendrogram order) for each image.
    Propose(PipelineArgs),
    /// Generate and rank proposals for each image.
    Rank(PipelineArgs),
    /// Rank proposals and measure detection rate against ground truth.
    Eval(PipelineArgs),
    /// Write a synthetic corpus: images, ICDAR ground truth and heatmaps.
    Synth(SynthArgs),
    /// Time the full pipeline on one synthetic image.
    Bench(BenchArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// Image files or directories.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heatmap directory (default: next to each image), paired by file stem.
    #[arg(long)]
    heatmaps: Option<PathBuf>,
    /// Ground truth: a directory of gt_<stem>.txt files or a COCO-Text JSON file.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// icdar | cocotext
    #[arg(long)]
    gt_format: Option<String>,
    /// Comma-separated list of bas, mtp, sup.
    #[arg(long)]
    strategy: Option<String>,
    /// Suppression threshold(s) for sup, comma-separated.
    #[arg(long)]
    tau: Option<String>,
    /// IoU threshold for a match.
    #[arg(long)]
    iou: Option<String>,
    /// Proposal budgets, comma-separated.
    #[arg(long)]
    budgets: Option<String>,
    /// Average the heatmap over member-region pixels instead of the whole box.
    #[arg(long)]
    mtp_mask: bool,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    clutter: Option<usize>,
    /// Heatmap noise standard deviation.
    #[arg(long)]
    noise: Option<f64>,
    /// Heatmap blur sigma in pixels.
    #[arg(long)]
    blur: Option<f64>,
}

impl SceneArgs {
    fn options(&self, count: u64) -> SynthOptions {
        SynthOptions {
            first_seed: self.seed,
            count,
            width: self.width,
            height: self.height,
            words: self.words,
            clutter: self.clutter,
            noise: self.noise,
            blur: self.blur,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long, default_value_t = 100)]
    count: u64,
    #[command(flatten)]
    scene: SceneArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 5)]
    repeat: usize,
    #[command(flatten)]
    scene: SceneArgs,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let from_file = cli.config.as_ref().is_some_and(|_| cfg.threads != 0);
    if let Some(t) = cli.threads {
        cfg.threads = t;
    } else if !from_file {
        if let Ok(v) = std::env::var("TEXTPROP_THREADS") {
            cfg.threads = v.trim().parse().with_context(|| format!("TEXTPROP_THREADS={v:?}"))?;
        }
    }
    Ok(cfg)
}

fn apply_pipeline_args(cfg: &mut RunConfig, a: &PipelineArgs) -> Result<()> {
    let mut pairs = BTreeMap::new();
    let mut put = |k: &str, v: &Option<String>| {
        if let Some(v) = v {
            pairs.insert(k.to_owned(), v.clone());
        }
    };
    put("gt_format", &a.gt_format);
    put("strategy", &a.strategy);
    put("tau", &a.tau);
    put("iou", &a.iou);
    put("budgets", &a.budgets);
    cfg.apply_pairs(&pairs)?;
    if !a.inputs.is_empty() {
        cfg.inputs = a.inputs.clone();
    }
    cfg.out = a.out.clone().or(cfg.out.take());
    cfg.heatmaps = a.heatmaps.clone().or(cfg.heatmaps.take());
    cfg.gt = a.gt.clone().or(cfg.gt.take());
    cfg.mtp_mask |= a.mtp_mask;
    Ok(())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Propose(a) => {
            apply_pipeline_args(&mut cfg, a)?;
            let s = run_propose(&cfg)?;
            println!("{} image(s), {} file(s) written", s.images, s.files.len());
        }
        Command::Rank(a) => {
            apply_pipeline_args(&mut cfg, a)?;
            let s = run_rank(&cfg)?;
            println!("{} image(s), {} file(s) written", s.images, s.files.len());
        }
        Command::Eval(a) => {
            apply_pipeline_args(&mut cfg, a)?;
            let r = run_eval(&cfg)?;
            for (run, pts) in &r.curves {
                let cells: Vec<String> =
                    pts.iter().map(|&(n, m, t)| format!("@{n} {:.4} ({m}/{t})", output::rate(m, t))).collect();
                println!("{:<10} {}", run.label(), cells.join("  "));
            }
            println!("{} image(s), {} file(s) written", r.summary.images, r.summary.files.len());
        }
        Command::Synth(a) => {
            let s = run_synth(&a.scene.options(a.count), &a.out, cfg.threads)?;
            println!("{} scene(s) written to {}", s.images, a.out.display());
        }
        Command::Bench(a) => {
            let mut opts = a.scene.options(1);
            opts.width = opts.width.or(Some(640));
            opts.height = opts.height.or(Some(480));
            let r = run_bench(&opts, a.repeat, &cfg)?;
            println!("{}x{}: {} regions, {} proposals", r.width, r.height, r.regions, r.proposals);
            println!(
                "propose median {:.1} ms, rank median {:.2} ms, over {} run(s)",
                ms(BenchReport::median(&r.propose)),
                ms(BenchReport::median(&r.rank)),
                r.propose.len()
            );
        }
    }
    Ok(())
}
