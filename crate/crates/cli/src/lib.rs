//! Batch front-end for the `textprop` binary.
//!
//! Every command resolves its inputs up front, runs one pipeline per image on a
//! dedicated rayon pool, and writes per-image files. Aggregates are reduced in
//! input order, so outputs do not depend on the thread count.

pub mod config;
pub mod output;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use textprop::evaluation::{budget_counts, parse_cocotext_gt, parse_icdar_gt, GtBox};
use textprop::imaging::{build_integral, load_color_image, load_heatmap, save_heatmap};
use textprop::pipeline::propose;
use textprop::ranking::{annotate_mtp, annotate_with, rank_annotated};
use textprop::synthgen::{generate_scene, SceneConfig};
use textprop::{Proposal, RankingStrategy, StrategyKind};

pub use config::{GtFormat, RunConfig};

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "pgm", "ppm", "pnm"];
const HEATMAP_EXTENSIONS: [&str; 2] = ["tphm", "pgm"];

/// One ranking pass: a strategy and, for SUP, its threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankRun {
    pub kind: StrategyKind,
    pub tau: Option<f64>,
}

impl RankRun {
    /// File-name label, e.g. `bas` or `sup-0.1`.
    pub fn label(&self) -> String {
        match self.tau {
            Some(t) => format!("{}-{t}", self.kind),
            None => self.kind.to_string(),
        }
    }

    fn strategy(&self) -> Result<RankingStrategy> {
        Ok(RankingStrategy::new(self.kind, self.tau.unwrap_or(0.0))?)
    }
}

/// Expands the configured strategies; SUP runs once per tau.
pub fn rank_runs(cfg: &RunConfig) -> Vec<RankRun> {
    let mut out: Vec<RankRun> = Vec::new();
    for &kind in &cfg.strategies {
        let runs: Vec<RankRun> = match kind {
            StrategyKind::Sup => cfg.taus.iter().map(|&t| RankRun { kind, tau: Some(t) }).collect(),
            _ => vec![RankRun { kind, tau: None }],
        };
        for s in runs {
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building thread pool")
}

fn is_image(p: &Path) -> bool {
    p.extension().and_then(|e| e.to_str()).is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn stem_of(p: &Path) -> Result<String> {
    p.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| anyhow!("{}: no usable file name", p.display()))
}

/// Image files named by `inputs` (directories are scanned, non-recursively), sorted by stem.
pub fn list_images(inputs: &[PathBuf]) -> Result<Vec<(String, PathBuf)>> {
    if inputs.is_empty() {
        bail!("no input images given");
    }
    let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut add = |p: PathBuf| -> Result<()> {
        let stem = stem_of(&p)?;
        if let Some(prev) = by_stem.insert(stem.clone(), p.clone()) {
            bail!("two inputs share the stem {stem:?}: {} and {}", prev.display(), p.display());
        }
        Ok(())
    };
    for input in inputs {
        if input.is_dir() {
            let entries = std::fs::read_dir(input).with_context(|| format!("listing {}", input.display()))?;
            for e in entries {
                let p = e?.path();
                if p.is_file() && is_image(&p) {
                    add(p)?;
                }
            }
        } else if input.is_file() {
            add(input.clone())?;
        } else {
            bail!("input {} does not exist", input.display());
        }
    }
    if by_stem.is_empty() {
        bail!("no images found in {}", inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
    }
    Ok(by_stem.into_iter().collect())
}

/// `<dir>/<stem>.tphm` or `<dir>/<stem>.pgm`, where `dir` defaults to the image's directory.
pub fn find_heatmap(image: &Path, stem: &str, dir: Option<&Path>) -> Option<PathBuf> {
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| image.parent().unwrap_or(Path::new(".")).to_path_buf());
    HEATMAP_EXTENSIONS.iter().map(|ext| dir.join(format!("{stem}.{ext}"))).find(|p| p.is_file() && p != image)
}

struct Job {
    stem: String,
    image: PathBuf,
    heatmap: Option<PathBuf>,
    gt: Option<Vec<GtBox>>,
}

fn resolve_jobs(cfg: &RunConfig, want_gt: bool) -> Result<Vec<Job>> {
    if let Some(d) = &cfg.heatmaps {
        if !d.is_dir() {
            bail!("heatmap directory {} does not exist", d.display());
        }
    }
    let images = list_images(&cfg.inputs)?;
    let mut missing = Vec::new();
    let mut jobs = Vec::with_capacity(images.len());
    for (stem, image) in images {
        let heatmap = find_heatmap(&image, &stem, cfg.heatmaps.as_deref());
        if heatmap.is_none() && cfg.needs_heatmaps() {
            let dir = cfg.heatmaps.clone().unwrap_or_else(|| image.parent().unwrap_or(Path::new(".")).to_path_buf());
            missing.push(dir.join(format!("{stem}.tphm")));
        }
        jobs.push(Job { stem, image, heatmap, gt: None });
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|p| format!("  {}", p.display())).collect();
        bail!("missing heatmaps for {} image(s):\n{}", missing.len(), list.join("\n"));
    }
    if want_gt {
        attach_ground_truth(cfg, &mut jobs)?;
    }
    Ok(jobs)
}

fn attach_ground_truth(cfg: &RunConfig, jobs: &mut Vec<Job>) -> Result<()> {
    let gt_path = cfg.gt.as_ref().ok_or_else(|| anyhow!("eval needs ground truth (--gt)"))?;
    match cfg.gt_format {
        GtFormat::Icdar => {
            if !gt_path.is_dir() {
                bail!("ICDAR ground truth {} must be a directory of gt_<stem>.txt files", gt_path.display());
            }
            let mut missing = Vec::new();
            for job in jobs.iter_mut() {
                let found = [format!("gt_{}.txt", job.stem), format!("{}.txt", job.stem)]
                    .into_iter()
                    .map(|n| gt_path.join(n))
                    .find(|p| p.is_file());
                match found {
                    Some(p) => job.gt = Some(parse_icdar_gt(&p)?),
                    None => missing.push(gt_path.join(format!("gt_{}.txt", job.stem))),
                }
            }
            if !missing.is_empty() {
                let list: Vec<String> = missing.iter().map(|p| format!("  {}", p.display())).collect();
                bail!("missing ground truth for {} image(s):\n{}", missing.len(), list.join("\n"));
            }
        }
        GtFormat::CocoText => {
            let gt = parse_cocotext_gt(gt_path)?;
            let before = jobs.len();
            jobs.retain_mut(|job| match gt.get(&job.stem) {
                Some(b) => {
                    job.gt = Some(b.to_vec());
                    true
                }
                None => false,
            });
            if jobs.is_empty() {
                bail!("none of the {before} input images has legible text in {}", gt_path.display());
            }
            if jobs.len() < before {
                eprintln!("note: {} image(s) without legible annotations skipped", before - jobs.len());
            }
        }
    }
    Ok(())
}

/// Ranked lists for one image, in `rank_runs` order.
struct ImageOutcome {
    stem: String,
    ranked: Vec<Vec<Proposal>>,
    gt: Vec<GtBox>,
}

fn process(job: &Job, cfg: &RunConfig, runs: &[RankRun]) -> Result<ImageOutcome> {
    let img = load_color_image(&job.image)?;
    let set = propose::<f64>(&img, &cfg.params).with_context(|| format!("{}", job.image.display()))?;
    let ii = match &job.heatmap {
        Some(p) => {
            let h = load_heatmap::<f64>(p)?;
            if (h.width(), h.height()) != (img.width(), img.height()) {
                bail!(
                    "heatmap {} is {}x{} but image {} is {}x{}",
                    p.display(),
                    h.width(),
                    h.height(),
                    job.image.display(),
                    img.width(),
                    img.height()
                );
            }
            Some(build_integral(&h))
        }
        None => None,
    };
    let annotated = match &ii {
        Some(ii) if cfg.mtp_mask => annotate_with(set.proposals.clone(), |p| set.mask_mtp(ii, p))?,
        Some(ii) => annotate_mtp(set.proposals.clone(), ii)?,
        None => set.proposals.clone(),
    };
    let ranked =
        runs.iter().map(|s| Ok(rank_annotated(annotated.clone(), &s.strategy()?))).collect::<Result<Vec<_>>>()?;
    let gt = job
        .gt
        .as_ref()
        .map(|g| {
            g.iter()
                .filter_map(|b| b.bbox.clipped(img.width(), img.height()).map(|bbox| GtBox { bbox, ..*b }))
                .collect()
        })
        .unwrap_or_default();
    Ok(ImageOutcome { stem: job.stem.clone(), ranked, gt })
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.out.clone().ok_or_else(|| anyhow!("no output directory given (--out)"))?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Runs `f` over all jobs on the configured pool; reports every failure, not just the first.
fn run_jobs<R: Send>(cfg: &RunConfig, jobs: &[Job], f: impl Fn(&Job) -> Result<R> + Sync) -> Result<Vec<R>> {
    let pool = thread_pool(cfg.threads)?;
    let results: Vec<Result<R>> =
        pool.install(|| jobs.par_iter().map(|j| f(j).with_context(|| j.stem.clone())).collect());
    let mut ok = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push(format!("  {e:#}")),
        }
    }
    if !errors.is_empty() {
        bail!("{} of {} image(s) failed:\n{}", errors.len(), jobs.len(), errors.join("\n"));
    }
    Ok(ok)
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Summary {
    pub images: usize,
    pub files: Vec<PathBuf>,
}

/// Writes `<stem>.proposals.csv` (dendrogram order, no heatmap needed).
pub fn run_propose(cfg: &RunConfig) -> Result<Summary> {
    let mut cfg = cfg.clone();
    cfg.strategies = vec![StrategyKind::Bas];
    cfg.validate()?;
    let out = out_dir(&cfg)?;
    let jobs = resolve_jobs(&cfg, false)?;
    let files = run_jobs(&cfg, &jobs, |job| {
        let img = load_color_image(&job.image)?;
        let set = propose::<f64>(&img, &cfg.params)?;
        let path = out.join(format!("{}.proposals.csv", job.stem));
        write_file(&path, &output::ranked_csv(&set.proposals))?;
        Ok(path)
    })?;
    Ok(Summary { images: jobs.len(), files })
}

/// Writes `<stem>.<label>.csv` ranked lists for every strategy run.
pub fn run_rank(cfg: &RunConfig) -> Result<Summary> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let out = out_dir(&cfg)?;
    let jobs = resolve_jobs(&cfg, false)?;
    let runs = rank_runs(&cfg);
    let files = run_jobs(&cfg, &jobs, |job| write_ranked(&out, &process(job, &cfg, &runs)?, &runs))?;
    Ok(Summary { images: jobs.len(), files: files.into_iter().flatten().collect() })
}

fn write_ranked(out: &Path, o: &ImageOutcome, runs: &[RankRun]) -> Result<Vec<PathBuf>> {
    runs.iter()
        .zip(&o.ranked)
        .map(|(s, r)| {
            let path = out.join(format!("{}.{}.csv", o.stem, s.label()));
            write_file(&path, &output::ranked_csv(r))?;
            Ok(path)
        })
        .collect()
}

/// `(N, matched, total)` per budget.
pub type CountCurve = Vec<(usize, usize, usize)>;

/// Result of `eval`: corpus curves plus the files written.
#[derive(Debug)]
pub struct EvalReport {
    pub summary: Summary,
    /// `(run, [(N, matched, total)])`, micro-averaged over images.
    pub curves: Vec<(RankRun, CountCurve)>,
}

/// Ranked CSVs plus `recall.csv` and `recall_per_image.csv`.
pub fn run_eval(cfg: &RunConfig) -> Result<EvalReport> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let out = out_dir(&cfg)?;
    let jobs = resolve_jobs(&cfg, true)?;
    let runs = rank_runs(&cfg);
    let per_image = run_jobs(&cfg, &jobs, |job| {
        let o = process(job, &cfg, &runs)?;
        let files = write_ranked(&out, &o, &runs)?;
        let counts: Vec<Vec<(usize, usize)>> =
            o.ranked.iter().map(|r| budget_counts(r, &o.gt, &cfg.budgets, cfg.iou)).collect();
        Ok((o.stem, counts, files))
    })?;

    let mut curves: Vec<(RankRun, CountCurve)> =
        runs.iter().map(|&s| (s, cfg.budgets.iter().map(|&n| (n, 0, 0)).collect())).collect();
    let mut detail = Vec::new();
    let mut files = Vec::new();
    for (stem, counts, f) in per_image {
        files.extend(f);
        for ((run, acc), c) in curves.iter_mut().zip(&counts) {
            for ((n, m, t), &(cm, ct)) in acc.iter_mut().zip(c) {
                *m += cm;
                *t += ct;
                detail.push(output::DetailRow { image: stem.clone(), run: *run, n: *n, matched: cm, total: ct });
            }
        }
    }
    let recall = out.join("recall.csv");
    write_file(&recall, &output::recall_csv(&curves))?;
    let per = out.join("recall_per_image.csv");
    write_file(&per, &output::detail_csv(&detail))?;
    files.push(recall);
    files.push(per);
    Ok(EvalReport { summary: Summary { images: jobs.len(), files }, curves })
}

/// Overrides applied on top of [`SceneConfig::corpus`].
#[derive(Clone, Debug, Default)]
pub struct SynthOptions {
    pub first_seed: u64,
    pub count: u64,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub words: Option<usize>,
    pub clutter: Option<usize>,
    pub noise: Option<f64>,
    pub blur: Option<f64>,
}

impl SynthOptions {
    pub fn scene(&self, seed: u64) -> SceneConfig {
        let mut c = SceneConfig::corpus(seed);
        c.width = self.width.unwrap_or(c.width);
        c.height = self.height.unwrap_or(c.height);
        c.n_words = self.words.unwrap_or(c.n_words);
        c.n_clutter = self.clutter.unwrap_or(c.n_clutter);
        c.heatmap_noise = self.noise.unwrap_or(c.heatmap_noise);
        c.heatmap_blur = self.blur.unwrap_or(c.heatmap_blur);
        c
    }
}

/// Writes `img_NNN.png`, `img_NNN.tphm` and `gt_img_NNN.txt` per seed.
pub fn run_synth(opts: &SynthOptions, out: &Path, threads: usize) -> Result<Summary> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let seeds: Vec<u64> = (opts.first_seed..opts.first_seed + opts.count).collect();
    let pool = thread_pool(threads)?;
    let files: Vec<Vec<PathBuf>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let scene = generate_scene(&opts.scene(seed)).with_context(|| format!("seed {seed}"))?;
                let stem = format!("img_{seed:03}");
                let png = out.join(format!("{stem}.png"));
                let tphm = out.join(format!("{stem}.tphm"));
                let gt = out.join(format!("gt_{stem}.txt"));
                scene.image.save_png(&png)?;
                save_heatmap(&scene.heatmap, &tphm)?;
                write_file(&gt, &textprop::evaluation::format_icdar(&scene.ground_truth))?;
                Ok(vec![png, tphm, gt])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Summary { images: seeds.len(), files: files.into_iter().flatten().collect() })
}

/// Wall-clock timings of the full pipeline on one synthetic scene.
#[derive(Debug)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub regions: usize,
    pub proposals: usize,
    /// Proposal generation, one entry per repetition.
    pub propose: Vec<Duration>,
    /// MTP annotation plus all three rankings, one entry per repetition.
    pub rank: Vec<Duration>,
}

impl BenchReport {
    pub fn median(d: &[Duration]) -> Duration {
        let mut v = d.to_vec();
        v.sort_unstable();
        v.get(v.len() / 2).copied().unwrap_or_default()
    }
}

pub fn run_bench(opts: &SynthOptions, repeat: usize, cfg: &RunConfig) -> Result<BenchReport> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let scene = generate_scene(&opts.scene(opts.first_seed))?;
    let ii = build_integral(&scene.heatmap);
    let pool = thread_pool(cfg.threads)?;
    pool.install(|| {
        let mut report = BenchReport {
            width: scene.image.width(),
            height: scene.image.height(),
            regions: 0,
            proposals: 0,
            propose: Vec::new(),
            rank: Vec::new(),
        };
        for _ in 0..repeat.max(1) {
            let t = Instant::now();
            let set = propose::<f64>(&scene.image, &cfg.params)?;
            report.propose.push(t.elapsed());
            report.regions = set.regions.len();
            report.proposals = set.proposals.len();

            let t = Instant::now();
            let annotated = annotate_mtp(set.proposals, &ii)?;
            for kind in [StrategyKind::Bas, StrategyKind::Mtp, StrategyKind::Sup] {
                let s = RankingStrategy::new(kind, cfg.taus[0])?;
                std::hint::black_box(rank_annotated(annotated.clone(), &s));
            }
            report.rank.push(t.elapsed());
        }
        Ok(report)
    })
}
