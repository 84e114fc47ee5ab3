//! On-disk runs: directory layout, artifact formats, and the `train`,
//! `eval`, `sweep` and `plot` commands behind the binary.
//!
//! A training run directory holds
//!
//! ```text
//! config.json                  fully resolved RunConfig
//! metrics.jsonl                schema header, then one EpochMetrics per line
//! timing.jsonl                 schema header, then wall-clock seconds per epoch
//! distributions/epoch-N.json   distribution snapshots
//! policies/epoch-N.json        policy snapshots
//! checkpoints/epoch-N.json     full training state, for resuming
//! ranges.csv, report.md        fitted ranges per snapshot and the final table
//! ```
//!
//! Directories are never reused: every command creates a fresh, timestamped
//! one (evaluations and plots go in a fresh subdirectory of the run), and
//! resuming writes a new run that starts from a copy of the old history.
//! Wall-clock data lives only in `timing.jsonl`, so `metrics.jsonl` of two
//! runs with the same config and seed are byte-identical.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::distributions::{DistributionSnapshot, Family};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::eval::{
    aggregate_curves, curve_summary, finetune_eval, grid_sweep, make_test_set, range_report,
    smooth_curve, GridSweepResult, LearningCurve, RangeReport, ReferenceRange,
};
use crate::plot;
use crate::policy::PolicySnapshot;
use crate::train::{train, EpochMetrics, TrainObserver, TrainRunRecord, TrainState, METRICS_SCHEMA};

/// Environment variable naming the default root for run directories.
pub const OUTPUT_ROOT_ENV: &str = "LSDR_OUTPUT_ROOT";
pub const TIMING_SCHEMA: &str = "lsdr.timing/v1";
pub const CHECKPOINT_SCHEMA: &str = "lsdr.checkpoint/v1";
pub const RANGES_SCHEMA: &str = "lsdr.ranges/v1";
pub const CURVES_SCHEMA: &str = "lsdr.curves/v1";
pub const COMPARISON_SCHEMA: &str = "lsdr.comparison/v1";
pub const EVAL_SUMMARY_SCHEMA: &str = "lsdr.eval-summary/v1";
pub const GRID_SCHEMA: &str = "lsdr.grid/v1";
pub const SWEEP_SCHEMA: &str = "lsdr.sweep/v1";

/// Grid resolution of the analytic reference range.
const ORACLE_POINTS: usize = 1001;
/// Savitzky-Golay settings for plotted training curves.
const SMOOTH_WINDOW: usize = 10;
const SMOOTH_ORDER: usize = 5;

pub fn output_root(config: &RunConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn timestamp() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now())
        .to_string()
        .replace(['-', ':'], "")
}

/// Creates `parent/stem`, or `parent/stem-2`, `-3`, ... if taken.
fn create_unique(parent: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(parent)?;
    for n in 1.. {
        let name = if n == 1 { stem.to_string() } else { format!("{stem}-{n}") };
        let dir = parent.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("unbounded search")
}

/// New `<root>/<kind>-<timestamp>-s<seed>` directory.
pub fn create_run_dir(root: &Path, kind: &str, seed: u64) -> Result<PathBuf> {
    create_unique(root, &format!("{kind}-{}-s{seed}", timestamp()))
}

fn epoch_file(dir: &Path, epoch: usize) -> PathBuf {
    dir.join(format!("epoch-{epoch:06}.json"))
}

/// Files of a snapshot directory in epoch order.
fn epoch_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| {
        p.file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("epoch-") && n.ends_with(".json"))
    });
    files.sort();
    Ok(files)
}

fn write_new(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::options().write(true).create_new(true).open(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
        _ => e.into(),
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
}

fn header_line(schema: &str) -> String {
    format!("{}\n", json!({ "schema": schema }))
}

/// Lines of a JSONL file after checking its schema header.
fn read_jsonl(path: &Path, schema: &str) -> Result<Vec<String>> {
    let text = read(path)?;
    let mut lines = text.lines();
    let header: Header = serde_json::from_str(lines.next().unwrap_or("{}")).map_err(|_| Error::Schema {
        path: path.to_path_buf(),
        expected: schema.into(),
        found: "<no header>".into(),
    })?;
    if header.schema != schema {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: schema.into(),
            found: header.schema,
        });
    }
    Ok(lines.filter(|l| !l.trim().is_empty()).map(str::to_string).collect())
}

pub fn load_run_config(run_dir: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
    let path = run_dir.join("config.json");
    if !path.is_file() {
        return Err(Error::Missing(format!("{} (not a run directory?)", path.display())));
    }
    RunConfig::load(Some(&path), overrides)
}

pub fn load_metrics(run_dir: &Path) -> Result<Vec<EpochMetrics>> {
    read_jsonl(&run_dir.join("metrics.jsonl"), METRICS_SCHEMA)?
        .iter()
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

pub fn load_distributions(run_dir: &Path) -> Result<Vec<DistributionSnapshot>> {
    let files = epoch_files(&run_dir.join("distributions"))?;
    if files.is_empty() {
        return Err(Error::Missing(format!("distribution snapshots in {}", run_dir.display())));
    }
    files.iter().map(|p| DistributionSnapshot::from_json(&read(p)?)).collect()
}

pub fn load_final_policy(run_dir: &Path) -> Result<PolicySnapshot> {
    let files = epoch_files(&run_dir.join("policies"))?;
    let last = files
        .last()
        .ok_or_else(|| Error::Missing(format!("policy snapshots in {}", run_dir.display())))?;
    PolicySnapshot::from_json(&read(last)?)
}

/// Full training state saved alongside policy snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema: String,
    pub env: String,
    pub state: TrainState,
}

pub fn load_checkpoint(run_dir: &Path) -> Result<Checkpoint> {
    let files = epoch_files(&run_dir.join("checkpoints"))?;
    let last = files
        .last()
        .ok_or_else(|| Error::Missing(format!("checkpoints in {}", run_dir.display())))?;
    let ckpt: Checkpoint = serde_json::from_str(&read(last)?)?;
    if ckpt.schema != CHECKPOINT_SCHEMA {
        return Err(Error::Schema {
            path: last.clone(),
            expected: CHECKPOINT_SCHEMA.into(),
            found: ckpt.schema,
        });
    }
    Ok(ckpt)
}

/// Streams training artifacts to a run directory as they are produced, so
/// a failed run leaves everything up to the failure on disk.
struct RunWriter {
    dir: PathBuf,
    env: String,
    metrics: BufWriter<File>,
    timing: BufWriter<File>,
    epochs: usize,
    checkpoint_every: usize,
}

impl RunWriter {
    fn create(dir: &Path, config: &RunConfig) -> Result<Self> {
        for sub in ["distributions", "policies", "checkpoints"] {
            fs::create_dir(dir.join(sub))?;
        }
        write_new(&dir.join("config.json"), &config.to_json_pretty()?)?;
        let open = |name: &str, schema: &str| -> Result<BufWriter<File>> {
            let mut w = BufWriter::new(File::options().write(true).create_new(true).open(dir.join(name))?);
            w.write_all(header_line(schema).as_bytes())?;
            Ok(w)
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            env: config.env.clone(),
            metrics: open("metrics.jsonl", METRICS_SCHEMA)?,
            timing: open("timing.jsonl", TIMING_SCHEMA)?,
            epochs: config.lsdr.epochs,
            checkpoint_every: config.lsdr.policy_snapshot_every,
        })
    }

    /// Copies the history of `from` up to and including `epoch`.
    fn copy_history(&mut self, from: &Path, epoch: usize) -> Result<()> {
        for (name, schema) in [("metrics.jsonl", METRICS_SCHEMA), ("timing.jsonl", TIMING_SCHEMA)] {
            let out = if name == "metrics.jsonl" { &mut self.metrics } else { &mut self.timing };
            for line in read_jsonl(&from.join(name), schema)? {
                let record: serde_json::Value = serde_json::from_str(&line)?;
                if record["epoch"].as_u64().is_some_and(|e| (e as usize) < epoch) {
                    writeln!(out, "{line}")?;
                }
            }
            out.flush()?;
        }
        for sub in ["distributions", "policies", "checkpoints"] {
            for file in epoch_files(&from.join(sub))? {
                let name = file.file_name().expect("listed file");
                if *name.to_string_lossy() <= *format!("epoch-{epoch:06}.json") {
                    fs::copy(&file, self.dir.join(sub).join(name))?;
                }
            }
        }
        Ok(())
    }
}

impl TrainObserver for RunWriter {
    fn on_epoch(&mut self, state: &TrainState, metrics: &EpochMetrics, wall_seconds: f64) -> Result<()> {
        writeln!(self.metrics, "{}", serde_json::to_string(metrics)?)?;
        self.metrics.flush()?;
        writeln!(
            self.timing,
            "{}",
            json!({ "epoch": metrics.epoch, "wall_seconds": wall_seconds })
        )?;
        self.timing.flush()?;
        if state.epoch % self.checkpoint_every == 0 || state.epoch == self.epochs {
            let ckpt = Checkpoint {
                schema: CHECKPOINT_SCHEMA.into(),
                env: self.env.clone(),
                state: state.clone(),
            };
            write_new(
                &epoch_file(&self.dir.join("checkpoints"), state.epoch),
                &serde_json::to_string(&ckpt)?,
            )?;
        }
        Ok(())
    }

    fn on_distribution(&mut self, snapshot: &DistributionSnapshot) -> Result<()> {
        write_new(&epoch_file(&self.dir.join("distributions"), snapshot.epoch), &snapshot.to_json()?)
    }

    fn on_policy(&mut self, snapshot: &PolicySnapshot) -> Result<()> {
        write_new(&epoch_file(&self.dir.join("policies"), snapshot.epoch), &snapshot.to_json()?)
    }

    fn on_error(&mut self, state: &TrainState, error: &Error) {
        let _ = self.metrics.flush();
        let _ = self.timing.flush();
        let _ = write_new(
            &self.dir.join("error.txt"),
            &format!("epoch {}: {error}\n", state.epoch + 1),
        );
    }
}

fn reference_range(env: &dyn Environment) -> Option<ReferenceRange> {
    ReferenceRange::analytic(env, ORACLE_POINTS)
}

fn write_range_artifacts(dir: &Path, report: &RangeReport) -> Result<()> {
    let mut csv = format!("# schema: {RANGES_SCHEMA}\nepoch");
    for name in &report.names {
        csv.push_str(&format!(",{name}_lower,{name}_upper"));
    }
    csv.push_str(",mass\n");
    for (epoch, r) in &report.series {
        csv.push_str(&epoch.to_string());
        for k in 0..r.lower.len() {
            csv.push_str(&format!(",{},{}", r.lower[k], r.upper[k]));
        }
        csv.push_str(&format!(",{}\n", r.mass));
    }
    write_new(&dir.join("ranges.csv"), &csv)?;
    write_new(&dir.join("report.md"), &report.to_markdown())
}

/// Outcome of [`cmd_train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub run_dir: PathBuf,
    pub record: TrainRunRecord,
}

/// Trains per `config` into a new run directory. With `resume`, training
/// continues from the latest checkpoint of that run directory; the new run
/// starts with a copy of the old history up to the checkpoint and, in
/// single-process mode, ends byte-identical to an uninterrupted run.
pub fn cmd_train(config: &RunConfig, resume: Option<&Path>) -> Result<TrainOutcome> {
    config.validate()?;
    let env = config.build_env()?;
    let train_config = config.train_config();
    let state = match resume {
        Some(from) => {
            let ckpt = load_checkpoint(from)?;
            if ckpt.env != config.env {
                return Err(Error::Config(format!(
                    "checkpoint is for `{}`, config selects `{}`",
                    ckpt.env, config.env
                )));
            }
            let previous = load_run_config(from, &[])?;
            let mut comparable = previous.clone();
            comparable.lsdr.epochs = config.lsdr.epochs;
            comparable.workers = config.workers;
            comparable.output_dir = config.output_dir.clone();
            if comparable != *config {
                log::warn!("resuming with a config that differs from the original beyond epochs/workers/output_dir");
            }
            ckpt.state
        }
        None => TrainState::initial(&train_config, env.as_ref(), config.family, config.bins, config.diagonal_only)?,
    };
    let run_dir = create_run_dir(&output_root(config), "train", config.lsdr.seed)?;
    let mut writer = RunWriter::create(&run_dir, config)?;
    if let Some(from) = resume {
        writer.copy_history(from, state.epoch)?;
        write_new(&run_dir.join("resumed_from.txt"), &format!("{}\nepoch {}\n", from.display(), state.epoch))?;
        log::info!("resuming {} at epoch {}", from.display(), state.epoch);
    }
    log::info!("writing run to {}", run_dir.display());
    let record = train(&train_config, env.as_ref(), state, config.workers, &mut writer)?;
    let history = load_distributions(&run_dir)?;
    let report = range_report(&history, config.eval.range_mass, reference_range(env.as_ref()))?;
    write_range_artifacts(&run_dir, &report)?;
    Ok(TrainOutcome { run_dir, record })
}

fn context_columns(env: &dyn Environment) -> String {
    env.context_spec().names().join(",")
}

fn solvable_cell(s: Option<bool>) -> &'static str {
    match s {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn curves_csv(env: &dyn Environment, curves: &[LearningCurve]) -> String {
    let mut csv = format!(
        "# schema: {CURVES_SCHEMA}\ncontext_id,{},solvable,point,env_steps,mean_return\n",
        context_columns(env)
    );
    for c in curves {
        for (i, p) in c.points.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{i},{},{}\n",
                c.context_id,
                join(&c.context.0),
                solvable_cell(c.solvable),
                p.env_steps,
                p.mean_return
            ));
        }
    }
    csv
}

/// Mean jumpstart and asymptotic returns, over all and over solvable
/// contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveStats {
    pub contexts: usize,
    pub jumpstart: f64,
    pub asymptotic: f64,
    pub solvable_contexts: usize,
    pub solvable_jumpstart: Option<f64>,
    pub solvable_asymptotic: Option<f64>,
}

impl CurveStats {
    pub fn of(curves: &[LearningCurve]) -> Self {
        let solvable = |c: &LearningCurve| c.solvable == Some(true);
        let (jumpstart, asymptotic) = curve_summary(curves, |_| true).unwrap_or((f64::NAN, f64::NAN));
        let sub = curve_summary(curves, solvable);
        Self {
            contexts: curves.len(),
            jumpstart,
            asymptotic,
            solvable_contexts: curves.iter().filter(|c| solvable(c)).count(),
            solvable_jumpstart: sub.map(|s| s.0),
            solvable_asymptotic: sub.map(|s| s.1),
        }
    }
}

/// Outcome of [`cmd_eval`].
pub struct EvalOutcome {
    pub eval_dir: PathBuf,
    pub curves: Vec<LearningCurve>,
    pub compared: Option<Vec<LearningCurve>>,
}

fn finetune_run(run_dir: &Path, config: &RunConfig, env: &dyn Environment, test: &crate::eval::TestSet) -> Result<Vec<LearningCurve>> {
    let snapshot = load_final_policy(run_dir)?;
    let ctx_dim = env.context_spec().prior.dim();
    snapshot.check_compatible(&config.env, env.observation_dim(), ctx_dim, env.action_dim())?;
    finetune_eval(&snapshot.agent, test, env, &config.eval.finetune, config.eval_seed(), config.workers)
}

/// Fine-tunes the final policy of `run_dir` on a fresh test set and writes
/// curves, a summary and the range report into a new `eval-*` directory of
/// that run. With `compare`, the second run is evaluated on the same test
/// set and seed and a merged per-context table is written too.
pub fn cmd_eval(run_dir: &Path, compare: Option<&Path>, overrides: &[(String, String)]) -> Result<EvalOutcome> {
    let config = load_run_config(run_dir, overrides)?;
    let env = config.build_env()?;
    let history = load_distributions(run_dir)?;
    let report = range_report(&history, config.eval.range_mass, reference_range(env.as_ref()))?;
    let test = make_test_set(&env.context_spec().uniform_prior(), config.eval.test_set_size, config.eval_seed())?;
    let curves = finetune_run(run_dir, &config, env.as_ref(), &test)?;
    let compared = match compare {
        Some(other) => {
            let other_config = load_run_config(other, overrides)?;
            if (other_config.env.as_str(), &other_config.context_dims) != (config.env.as_str(), &config.context_dims) {
                return Err(Error::Config("compared runs use different environments or context dims".into()));
            }
            // Same test set, seed and fine-tuning settings for both runs.
            Some(finetune_run(other, &config, env.as_ref(), &test)?)
        }
        None => None,
    };

    let eval_dir = create_unique(run_dir, &format!("eval-{}", timestamp()))?;
    write_new(&eval_dir.join("curves.csv"), &curves_csv(env.as_ref(), &curves))?;
    write_new(&eval_dir.join("curves.json"), &serde_json::to_string(&curves)?)?;
    write_new(&eval_dir.join("report.md"), &report.to_markdown())?;
    let mut summary = json!({
        "schema": EVAL_SUMMARY_SCHEMA,
        "run": run_dir.display().to_string(),
        "test_set_size": test.contexts.len(),
        "seed": config.eval_seed(),
        "finetune_budget": config.eval.finetune.budget,
        "stats": CurveStats::of(&curves),
    });
    if let (Some(other), Some(b)) = (compare, &compared) {
        write_new(&eval_dir.join("curves_compared.csv"), &curves_csv(env.as_ref(), b))?;
        let mut csv = format!(
            "# schema: {COMPARISON_SCHEMA}\ncontext_id,{},solvable,a_jumpstart,a_asymptotic,b_jumpstart,b_asymptotic\n",
            context_columns(env.as_ref())
        );
        for (x, y) in curves.iter().zip(b) {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                x.context_id,
                join(&x.context.0),
                solvable_cell(x.solvable),
                x.jumpstart(),
                x.asymptotic(),
                y.jumpstart(),
                y.asymptotic()
            ));
        }
        write_new(&eval_dir.join("comparison.csv"), &csv)?;
        summary["compared_run"] = json!(other.display().to_string());
        summary["compared_stats"] = serde_json::to_value(CurveStats::of(b))?;
    }
    write_new(&eval_dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(EvalOutcome {
        eval_dir,
        curves,
        compared,
    })
}

/// Outcome of [`cmd_sweep`].
pub struct SweepOutcome {
    pub run_dir: PathBuf,
    pub result: GridSweepResult,
}

/// Trains one policy per grid cell and writes the grid CSV, the raw
/// result, a heatmap and the empirical range.
pub fn cmd_sweep(config: &RunConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let env = config.build_env()?;
    let result = grid_sweep(env.as_ref(), &config.sweep, config.lsdr.seed, config.workers)?;
    let run_dir = create_run_dir(&output_root(config), "sweep", config.lsdr.seed)?;
    write_new(&run_dir.join("config.json"), &config.to_json_pretty()?)?;
    let names = env.context_spec().names().to_vec();
    let cols = |suffix: &str| names.iter().map(|n| format!("{n}_{suffix}")).collect::<Vec<_>>().join(",");
    let mut csv = format!(
        "# schema: {GRID_SCHEMA}\ncell,{},{},{},best_return,env_steps,solvable,solved\n",
        cols("lower"),
        cols("upper"),
        context_columns(env.as_ref())
    );
    for (i, c) in result.cells.iter().enumerate() {
        csv.push_str(&format!(
            "{i},{},{},{},{},{},{},{}\n",
            join(&c.lower),
            join(&c.upper),
            join(&c.context.0),
            c.best_return,
            c.env_steps,
            solvable_cell(c.solvable),
            result.solved(c)
        ));
    }
    write_new(&run_dir.join("grid.csv"), &csv)?;
    write_new(
        &run_dir.join("sweep.json"),
        &serde_json::to_string(&json!({ "schema": SWEEP_SCHEMA, "result": result }))?,
    )?;
    match plot::sweep_heatmap(&result) {
        Ok(svg) => write_new(&run_dir.join("heatmap.svg"), &svg)?,
        Err(Error::Unsupported(why)) => log::warn!("no heatmap: {why}"),
        Err(e) => return Err(e),
    }
    let (agree, judged) = result.oracle_agreement();
    let mut report = String::from("| parameter | initial range | empirical solvable range |\n|---|---|---|\n");
    let range = result.empirical_range();
    for (k, name) in names.iter().enumerate() {
        let cell = range
            .as_ref()
            .map_or("none solved".to_string(), |(lo, hi)| format!("[{:.3}, {:.3}]", lo[k], hi[k]));
        report.push_str(&format!(
            "| {name} | [{:.3}, {:.3}] | {cell} |\n",
            result.support.lower()[k],
            result.support.upper()[k]
        ));
    }
    if judged > 0 {
        report.push_str(&format!("\nAgreement with the analytic oracle: {agree}/{judged} cells.\n"));
    }
    report.push_str(&format!("\nTotal environment steps: {}\n", result.total_env_steps));
    write_new(&run_dir.join("report.md"), &report)?;
    Ok(SweepOutcome { run_dir, result })
}

/// Renders the figures of one or more training runs into a new `plots-*`
/// directory of the first one. Several runs (e.g. seeds) share the
/// training-curve figure as a mean with a min/max band.
pub fn cmd_plot(run_dirs: &[PathBuf]) -> Result<PathBuf> {
    let first = run_dirs.first().ok_or_else(|| Error::Empty("run directories".into()))?;
    let history = load_distributions(first)?;
    let mut figures: Vec<(String, String)> = Vec::new();
    match history[0].distribution.family() {
        Family::Discrete => figures.push(("distribution.svg".into(), plot::distribution_heatmap(&history)?)),
        Family::Gaussian => {
            let d = history[0].distribution.dim();
            if d == 1 {
                figures.push(("distribution.svg".into(), plot::gaussian_band_plot(&history)?));
            }
            for i in 0..d {
                for j in (i + 1)..d {
                    figures.push((format!("ellipses-{i}-{j}.svg"), plot::ellipse_plot(&history, (i, j))?));
                }
            }
        }
    }

    let runs = run_dirs.iter().map(|d| load_metrics(d)).collect::<Result<Vec<_>>>()?;
    if runs.iter().any(Vec::is_empty) {
        return Err(Error::Empty("training metrics".into()));
    }
    let smooth = |series: Vec<f64>| -> Result<Vec<f64>> {
        if series.len() >= SMOOTH_WINDOW {
            smooth_curve(&series, SMOOTH_WINDOW, SMOOTH_ORDER)
        } else {
            Ok(series)
        }
    };
    let returns = runs
        .iter()
        .map(|m| smooth(m.iter().map(|e| e.mean_return).collect()))
        .collect::<Result<Vec<_>>>()?;
    let band = aggregate_curves(&returns)?;
    let x: Vec<f64> = (1..=band.mean.len()).map(|e| e as f64).collect();
    figures.push((
        "training_return.svg".into(),
        plot::curve_plot("Training return", "epoch", "mean episode return", &x, &[("return".into(), band)])?,
    ));

    // Fine-tuning curves of the latest evaluation of the first run, if any.
    let mut evals: Vec<PathBuf> = fs::read_dir(first)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("curves.json").is_file())
        .collect();
    evals.sort();
    if let Some(eval) = evals.last() {
        let curves: Vec<LearningCurve> = serde_json::from_str(&read(&eval.join("curves.json"))?)?;
        let series: Vec<Vec<f64>> = curves.iter().map(LearningCurve::returns).collect();
        if let Ok(band) = aggregate_curves(&series) {
            let x: Vec<f64> = curves[0].points.iter().map(|p| p.env_steps as f64).collect();
            let x = x[..band.mean.len()].to_vec();
            figures.push((
                "finetune.svg".into(),
                plot::curve_plot("Fine-tuning on the test set", "env steps", "evaluation return", &x, &[("test contexts".into(), band)])?,
            ));
        }
    }

    let out = create_unique(first, &format!("plots-{}", timestamp()))?;
    for (name, svg) in figures {
        write_new(&out.join(name), &svg)?;
    }
    Ok(out)
}
