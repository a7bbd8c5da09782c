//! Command-line interface: `fcsn encode|decode|roundtrip|train-demo|eval-perturbed|erf|synth`.
//!
//! Flags override values from a `--config` JSON file, which override the
//! built-in defaults. Exit status is 0 on success, 1 for usage and I/O
//! problems and 2 for domain errors such as an empty mask.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{FcsnError, Result};
use crate::fourier::{encode_mask, estimate_ranges, truncate, CoefficientVector, DEFAULT_K, DEFAULT_RANGE_MARGIN};
use crate::grid::Grid;
use crate::heatmap::DEFAULT_SIGMA;
use crate::loss::LossConfig;
use crate::mask::BinaryMask;
use crate::metrics::{evaluate_pair, summarize, write_records_csv, EvalSummary};
use crate::model::{
    checkpoint, erf_map, evaluate, fit, history_csv, holdout_split, mass_fraction_in_box, Architecture, Axis, EvalItem,
    HeadKind, OutputUnit, ToyModel, TrainConfig, TrainSample,
};
use crate::perturb::{apply, default_sweep, Perturbation, PerturbationKind, SWEEP_KINDS};
use crate::raster::{rasterize, DEFAULT_SAMPLES};
use crate::synth::{generate_dataset, read_dataset, write_dataset, DatasetItem, DatasetKind, DEFAULT_TEXTURE};
use crate::contour::DEFAULT_POINTS;

/// Epoch count used by `train-demo` when none is given.
pub const DEMO_EPOCHS: usize = 200;
pub const RUN_MANIFEST: &str = "run.json";

#[derive(Debug, Parser)]
#[command(name = "fcsn", version, about = "Fourier-coefficient shape segmentation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace a mask and write its Fourier coefficients as JSON.
    Encode {
        mask: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Rasterise coefficients into a mask image.
    Decode {
        coeffs: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 256)]
        height: usize,
        #[arg(long, default_value_t = 256)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Encode, rasterise at the original size and compare with the input.
    Roundtrip {
        mask: PathBuf,
        /// Where to write the reconstructed mask.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Generate a synthetic dataset directory.
    Synth {
        out: PathBuf,
        #[arg(long, default_value = "ellipses")]
        kind: DatasetKind,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_TEXTURE)]
        texture: f64,
    },
    /// Train the toy model on a dataset directory and evaluate a held-out split.
    TrainDemo {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Evaluate a checkpoint under perturbation sweeps.
    EvalPerturbed {
        checkpoint: PathBuf,
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated specs such as `gauss:0.1,mblur:9:45`; the
        /// default is five levels of each kind.
        #[arg(long)]
        perturb: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Effective receptive field of one output unit, as an image.
    Erf {
        checkpoint: PathBuf,
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Harmonic index of the output coefficient.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, default_value = "re")]
        axis: String,
        /// Reference mask; its bounding box is used for the mass fraction.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CodecArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub head: Option<HeadKind>,
    #[arg(long)]
    pub no_js: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Optional settings read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub k: Option<usize>,
    pub points: Option<usize>,
    pub sigma: Option<f64>,
    pub lr: Option<f64>,
    pub batch: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub head: Option<HeadKind>,
    pub js: Option<bool>,
    pub perturb: Option<String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| FcsnError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| FcsnError::format(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub k: usize,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainDemoConfig {
    pub k: usize,
    pub head: HeadKind,
    pub train: TrainConfig,
    pub loss: LossConfig,
    pub range_margin: f64,
}

impl CodecArgs {
    pub fn resolve(&self) -> Result<CodecConfig> {
        let file = ConfigFile::load(self.config.as_deref())?;
        Ok(CodecConfig {
            k: self.k.or(file.k).unwrap_or(DEFAULT_K),
            points: self.points.or(file.points).unwrap_or(DEFAULT_POINTS),
        })
    }
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<TrainDemoConfig> {
        let file = ConfigFile::load(self.config.as_deref())?;
        let train = TrainConfig {
            batch_size: self.batch.or(file.batch).unwrap_or(8),
            epochs: self.epochs.or(file.epochs).unwrap_or(DEMO_EPOCHS),
            learning_rate: self.lr.or(file.lr).unwrap_or(3e-4),
            seed: self.seed.or(file.seed).unwrap_or(0),
            ..TrainConfig::default()
        };
        let js_enabled = if self.no_js { false } else { file.js.unwrap_or(true) };
        let loss = LossConfig {
            sigma: self.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
            js_enabled,
            ..LossConfig::default()
        };
        Ok(TrainDemoConfig {
            k: self.k.or(file.k).unwrap_or(DEFAULT_K),
            head: self.head.or(file.head).unwrap_or(HeadKind::Dsnt),
            train,
            loss,
            range_margin: DEFAULT_RANGE_MARGIN,
        })
    }
}

/// Written as `run.json` into every output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str, config: impl Serialize, seed: Option<u64>, inputs: &[&Path], outputs: &[&str]) -> Self {
        RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join(RUN_MANIFEST), &(serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"))
    }
}

/// Failure of a command, with the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Pipeline(FcsnError),
}

impl From<FcsnError> for CliError {
    fn from(e: FcsnError) -> Self {
        CliError::Pipeline(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Pipeline(e) if e.is_domain() => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Pipeline(e) => write!(f, "{e}"),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| FcsnError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| FcsnError::io(dir, e))
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fcsn: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> std::result::Result<(), CliError> {
    match command {
        Command::Encode { mask, output, codec } => {
            cmd_encode(&mask, output.as_deref(), &codec.resolve()?)?;
        }
        Command::Decode {
            coeffs,
            output,
            height,
            width,
            samples,
        } => cmd_decode(&coeffs, &output, height, width, samples)?,
        Command::Roundtrip { mask, output, codec } => {
            let line = cmd_roundtrip(&mask, output.as_deref(), &codec.resolve()?)?;
            println!("{line}");
        }
        Command::Synth {
            out,
            kind,
            count,
            seed,
            texture,
        } => cmd_synth(&out, kind, count, seed.unwrap_or(0), texture)?,
        Command::TrainDemo { dataset, out, train } => {
            let summary = cmd_train_demo(&dataset, &out, &train.resolve()?)?;
            println!(
                "held-out: dice {:.4} +- {:.4}, hausdorff {:.3} +- {:.3}, empty {}",
                summary.mean_dice, summary.std_dice, summary.mean_hausdorff, summary.std_hausdorff, summary.empty_count
            );
        }
        Command::EvalPerturbed {
            checkpoint,
            dataset,
            out,
            perturb,
            seed,
            config,
        } => {
            let file = ConfigFile::load(config.as_deref())?;
            let sweep = match perturb.or(file.perturb) {
                Some(specs) => parse_sweep(&specs).map_err(CliError::Usage)?,
                None => default_sweeps(),
            };
            let rows = cmd_eval_perturbed(&checkpoint, &dataset, &out, &sweep, seed.or(file.seed).unwrap_or(0))?;
            for (kind, r) in monotonicity(&rows) {
                println!("{kind}: correlation of mean dice with level {r:.3}");
            }
        }
        Command::Erf {
            checkpoint,
            image,
            output,
            n,
            axis,
            mask,
        } => {
            let axis = match axis.as_str() {
                "re" => Axis::Re,
                "im" => Axis::Im,
                other => return Err(CliError::Usage(format!("axis must be `re` or `im`, got `{other}`"))),
            };
            if let Some(fraction) = cmd_erf(&checkpoint, &image, &output, OutputUnit { n, axis }, mask.as_deref())? {
                println!("mass fraction inside the object box: {fraction:.4}");
            }
        }
    }
    Ok(())
}

pub fn cmd_encode(mask_path: &Path, output: Option<&Path>, cfg: &CodecConfig) -> Result<CoefficientVector> {
    let mask = BinaryMask::read(mask_path)?;
    let coeffs = encode_mask(&mask, cfg.points, cfg.k)?;
    match output {
        Some(path) => coeffs.write(path)?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{}", coeffs.to_json()).map_err(|e| FcsnError::io("<stdout>", e))?;
        }
    }
    Ok(coeffs)
}

pub fn cmd_decode(coeffs_path: &Path, output: &Path, height: usize, width: usize, samples: usize) -> Result<()> {
    let coeffs = CoefficientVector::read(coeffs_path)?;
    let raster = rasterize(&coeffs, height, width, samples)?;
    if raster.degenerate {
        eprintln!("fcsn: warning: curve encloses no area, writing an empty mask");
    }
    raster.mask.write(output)
}

/// Returns the printed metrics line.
pub fn cmd_roundtrip(mask_path: &Path, output: Option<&Path>, cfg: &CodecConfig) -> Result<String> {
    let mask = BinaryMask::read(mask_path)?;
    let coeffs = encode_mask(&mask, cfg.points, cfg.k)?;
    let (h, w) = mask.shape();
    let recon = rasterize(&coeffs, h, w, DEFAULT_SAMPLES)?.mask;
    if let Some(path) = output {
        recon.write(path)?;
    }
    let record = evaluate_pair(mask_path.display().to_string(), &mask, &recon)?;
    Ok(match record.hausdorff {
        Some(hd) => format!("dice {:.6} hausdorff {hd:.6}", record.dice),
        None => format!("dice {:.6} hausdorff undefined (empty reconstruction)", record.dice),
    })
}

pub fn cmd_synth(out: &Path, kind: DatasetKind, count: usize, seed: u64, texture: f64) -> Result<()> {
    if count == 0 {
        return Err(FcsnError::EmptyDataset);
    }
    let items = generate_dataset(kind, count, seed, texture)?;
    write_dataset(out, &items)?;
    #[derive(Serialize)]
    struct SynthConfig {
        kind: DatasetKind,
        count: usize,
        texture: f64,
    }
    RunManifest::new("synth", SynthConfig { kind, count, texture }, Some(seed), &[], &[crate::synth::MANIFEST]).write(out)
}

/// Coefficients of a dataset truncated (never extended) to order `k`.
fn dataset_targets(items: &[DatasetItem], k: usize) -> Result<Vec<CoefficientVector>> {
    items
        .iter()
        .map(|item| {
            if item.coeffs.k() < k {
                return Err(FcsnError::ShapeMismatch(format!(
                    "dataset item {} has k = {}, model needs {k}",
                    item.id,
                    item.coeffs.k()
                )));
            }
            truncate(&item.coeffs, k)
        })
        .collect()
}

fn eval_items<'a>(items: &'a [DatasetItem], idx: &[usize]) -> Vec<EvalItem<'a>> {
    idx.iter()
        .map(|&i| EvalItem {
            id: &items[i].id,
            image: &items[i].image,
            truth: &items[i].mask,
        })
        .collect()
}

/// Summary written by `train-demo` as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub held_out: EvalSummary,
    pub final_loss: f64,
    /// Mean `|z_hat_n - z_n| / s_n` over the held-out split for `n = -1, 0, 1`.
    pub relative_error_low_orders: [f64; 3],
}

pub fn cmd_train_demo(dataset: &Path, out: &Path, cfg: &TrainDemoConfig) -> Result<EvalSummary> {
    let items = read_dataset(dataset)?;
    let targets = dataset_targets(&items, cfg.k)?;
    let (train_idx, test_idx) = holdout_split(items.len(), cfg.train.seed);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(FcsnError::EmptyDataset);
    }
    let train_targets: Vec<CoefficientVector> = train_idx.iter().map(|&i| targets[i].clone()).collect();
    let ranges = estimate_ranges(&train_targets, cfg.range_margin)?;
    let arch = Architecture::new(cfg.k, cfg.head);
    let mut model = ToyModel::new(arch, ranges, cfg.train.seed)?;
    let samples: Vec<TrainSample> = train_idx
        .iter()
        .map(|&i| TrainSample {
            image: items[i].image.clone(),
            coeffs: targets[i].clone(),
        })
        .collect();
    let history = fit(&mut model, &samples, &cfg.train, &cfg.loss)?;

    create_dir(out)?;
    checkpoint::save(&model, &out.join("model.bin"))?;
    write_text(&out.join("history.csv"), &history_csv(&history))?;
    let held_out = eval_items(&items, &test_idx);
    let records = evaluate(&model, &held_out)?;
    write_records_csv(&out.join("eval.csv"), &records)?;
    let summary = summarize(&records);

    let mut rel = [0.0; 3];
    for &i in &test_idx {
        let pred = model.forward(&items[i].image)?;
        for (slot, n) in rel.iter_mut().zip([-1i64, 0, 1]) {
            *slot += (pred.coeffs.get(n) - targets[i].get(n)).norm() / model.ranges().get(n) / test_idx.len() as f64;
        }
    }
    let report = TrainSummary {
        held_out: summary.clone(),
        final_loss: history.last().map_or(f64::NAN, |l| l.total),
        relative_error_low_orders: rel,
    };
    write_text(&out.join("summary.json"), &(serde_json::to_string_pretty(&report).expect("summary serializes") + "\n"))?;

    // Figure-style outputs for the first held-out image.
    let first = &items[test_idx[0]];
    let pred = model.forward(&first.image)?;
    let (h, w) = first.mask.shape();
    rasterize(&pred.coeffs, h, w, DEFAULT_SAMPLES)?.mask.write(&out.join("example_reconstruction.pgm"))?;
    first.mask.write(&out.join("example_truth.pgm"))?;
    if !pred.heatmaps.is_empty() {
        let dir = out.join("heatmaps");
        create_dir(&dir)?;
        for ((n, _), heatmap) in pred.coeffs.harmonics().zip(&pred.heatmaps) {
            heatmap.write_image(&dir.join(format!("n{n:+03}.pgm")))?;
        }
    }

    RunManifest::new(
        "train-demo",
        cfg,
        Some(cfg.train.seed),
        &[dataset],
        &["model.bin", "model.json", "history.csv", "eval.csv", "summary.json"],
    )
    .write(out)?;
    Ok(summary)
}

/// Perturbations of one kind, ordered by level (level 0 first).
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub kind: String,
    pub levels: Vec<PerturbationKind>,
}

pub fn default_sweeps() -> Vec<Sweep> {
    SWEEP_KINDS
        .iter()
        .map(|&kind| Sweep {
            kind: kind.to_string(),
            levels: default_sweep(kind).expect("built-in kind"),
        })
        .collect()
}

/// Groups comma-separated specs by kind, in order of first appearance, and
/// puts the identity of each kind at level 0.
pub fn parse_sweep(specs: &str) -> std::result::Result<Vec<Sweep>, String> {
    let mut sweeps: Vec<Sweep> = Vec::new();
    for spec in specs.split(',').filter(|s| !s.trim().is_empty()) {
        let p: PerturbationKind = spec.parse().map_err(|e: FcsnError| e.to_string())?;
        let name = p.name();
        let sweep = match sweeps.iter().position(|s| s.kind == name) {
            Some(i) => &mut sweeps[i],
            None => {
                let identity = default_sweep(name).map_err(|e| e.to_string())?[0];
                sweeps.push(Sweep {
                    kind: name.to_string(),
                    levels: vec![identity],
                });
                sweeps.last_mut().expect("just pushed")
            }
        };
        sweep.levels.push(p);
    }
    if sweeps.is_empty() {
        return Err("no perturbation specs given".into());
    }
    Ok(sweeps)
}

/// One CSV row of `eval-perturbed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: String,
    pub level: usize,
    pub spec: String,
    pub mean_dice: f64,
    pub std_dice: f64,
    pub mean_hausdorff: f64,
    pub std_hausdorff: f64,
    pub empty_count: usize,
}

fn perturbation_seed(seed: u64, level: usize, item: usize) -> u64 {
    seed ^ ((level as u64) << 32).wrapping_add(item as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Evaluates every level of every sweep on `items`.
pub fn perturbed_sweep(model: &ToyModel, items: &[EvalItem<'_>], sweeps: &[Sweep], seed: u64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for sweep in sweeps {
        for (level, kind) in sweep.levels.iter().enumerate() {
            let images: Vec<Grid> = items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    apply(
                        item.image,
                        &Perturbation {
                            kind: *kind,
                            seed: perturbation_seed(seed, level, i),
                        },
                    )
                })
                .collect::<Result<_>>()?;
            let perturbed: Vec<EvalItem<'_>> = items
                .iter()
                .zip(&images)
                .map(|(item, image)| EvalItem { image, ..*item })
                .collect();
            let s = summarize(&evaluate(model, &perturbed)?);
            rows.push(SweepRow {
                kind: sweep.kind.clone(),
                level,
                spec: kind.to_string(),
                mean_dice: s.mean_dice,
                std_dice: s.std_dice,
                mean_hausdorff: s.mean_hausdorff,
                std_hausdorff: s.std_hausdorff,
                empty_count: s.empty_count,
            });
        }
    }
    Ok(rows)
}

/// Pearson correlation between level and mean Dice, per kind.
pub fn monotonicity(rows: &[SweepRow]) -> Vec<(String, f64)> {
    let mut kinds: Vec<&str> = Vec::new();
    for r in rows {
        if !kinds.contains(&r.kind.as_str()) {
            kinds.push(&r.kind);
        }
    }
    kinds
        .into_iter()
        .map(|kind| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.kind == kind)
                .map(|r| (r.level as f64, r.mean_dice))
                .collect();
            let n = pts.len() as f64;
            let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
            (kind.to_string(), sxy / (sxx * syy).sqrt())
        })
        .collect()
}

pub fn cmd_eval_perturbed(checkpoint_path: &Path, dataset: &Path, out: &Path, sweeps: &[Sweep], seed: u64) -> Result<Vec<SweepRow>> {
    let model = checkpoint::load(checkpoint_path)?;
    let items = read_dataset(dataset)?;
    let n = model.architecture().input_size;
    if let Some(bad) = items.iter().find(|i| i.image.shape() != (n, n)) {
        return Err(FcsnError::ShapeMismatch(format!(
            "image {} is {:?}, checkpoint expects {n}x{n}",
            bad.id,
            bad.image.shape()
        )));
    }
    let (_, test_idx) = holdout_split(items.len(), model.seed());
    let rows = perturbed_sweep(&model, &eval_items(&items, &test_idx), sweeps, seed)?;

    create_dir(out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).expect("csv write");
    }
    write_text(&out.join("perturbed.csv"), &String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8"))?;
    let trend: Vec<serde_json::Value> = monotonicity(&rows)
        .into_iter()
        .map(|(kind, r)| serde_json::json!({ "kind": kind, "dice_level_correlation": r }))
        .collect();
    write_text(&out.join("trend.json"), &(serde_json::to_string_pretty(&trend).expect("trend serializes") + "\n"))?;
    let specs: Vec<Vec<String>> = sweeps.iter().map(|s| s.levels.iter().map(|l| l.to_string()).collect()).collect();
    RunManifest::new(
        "eval-perturbed",
        serde_json::json!({ "sweeps": specs }),
        Some(seed),
        &[checkpoint_path, dataset],
        &["perturbed.csv", "trend.json"],
    )
    .write(out)?;
    Ok(rows)
}

/// Writes the ERF map and, given a reference mask, returns the share of the
/// map inside the mask's bounding box (scaled to the image grid).
pub fn cmd_erf(checkpoint_path: &Path, image: &Path, output: &Path, unit: OutputUnit, mask: Option<&Path>) -> Result<Option<f64>> {
    let model = checkpoint::load(checkpoint_path)?;
    let image = Grid::read(image)?;
    let map = erf_map(&model, &image, unit)?;
    map.write(output)?;
    let Some(mask) = mask else {
        return Ok(None);
    };
    let mask = BinaryMask::read(mask)?;
    Ok(Some(mass_fraction_in_box(&map, bounding_box(&mask, map.shape())?)))
}

/// Inclusive bounding box of the foreground, mapped onto a `(h, w)` grid.
pub fn bounding_box(mask: &BinaryMask, (h, w): (usize, usize)) -> Result<(usize, usize, usize, usize)> {
    let (mh, mw) = mask.shape();
    let mut fg = mask.foreground();
    let first = fg.next().ok_or(FcsnError::EmptyMask)?;
    let (mut r0, mut c0, mut r1, mut c1) = (first.0, first.1, first.0, first.1);
    for (r, c) in fg {
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    Ok((r0 * h / mh, c0 * w / mw, r1 * h / mh, c1 * w / mw))
}
