//! File-level entry points behind the command-line subcommands. Each reads
//! its inputs from disk, writes CSV (and checkpoint or dataset) files into
//! the configured output directory, and returns what it wrote.

use std::path::{Path, PathBuf};

use super::counterexample::{run_counterexamples, CounterexampleReport};
use super::protocols::{bootstrap, curriculum_round, train_model, write_bootstrap_csv, BootstrapRow};
use super::train::{solve_with_base, write_train_log, EpochStats, TrainItem};
use super::{
    base_training_samples, eval_row, evaluate_model, generate_set, list_instance_files, load_set, optimal_costs,
    write_set, EvalReport, ExperimentConfig, Generate, IndexedSample, NamedInstance, Split,
};
use crate::dataset::{load_dataset, peek_domain, save_dataset, Dataset, Provenance};
use crate::domains::{AnyInstance, DomainKind, MazeGrid, SearchDomain, SokobanLevel};
use crate::model::HeuristicModel;
use crate::{Error, Real, Result};

macro_rules! dispatch {
    ($kind:expr, $f:ident($($arg:expr),*)) => {
        match $kind {
            DomainKind::Maze => $f::<MazeGrid>($($arg),*),
            DomainKind::Sokoban => $f::<SokobanLevel>($($arg),*),
        }
    };
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Instance files named directly, or every `*.txt` inside named directories.
pub fn expand_instance_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(list_instance_files(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Domain of a set of instance files, taken from the first one.
fn domain_of(paths: &[PathBuf], fallback: DomainKind) -> Result<DomainKind> {
    match paths.first() {
        Some(p) => Ok(AnyInstance::load(p)?.kind()),
        None => Ok(fallback),
    }
}

fn load_model(path: &Path) -> Result<HeuristicModel<Real>> {
    HeuristicModel::load(path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateOutput {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
}

/// Writes `train_count` and `test_count` instances under
/// `<output>/instances/{train,test}/`.
pub fn cmd_generate(config: &ExperimentConfig) -> Result<GenerateOutput> {
    fn run<D: Generate>(config: &ExperimentConfig) -> Result<GenerateOutput> {
        let root = config.output_dir.join("instances");
        let train = write_set(&root.join("train"), &generate_set::<D>(config, Split::Train, config.train_count)?)?;
        let test = write_set(&root.join("test"), &generate_set::<D>(config, Split::Test, config.test_count)?)?;
        Ok(GenerateOutput { train, test })
    }
    dispatch!(config.domain, run(config))
}

/// Solves instances with the base heuristic, or with a model when given;
/// writes `solve.csv`.
pub fn cmd_solve(config: &ExperimentConfig, inputs: &[PathBuf], model: Option<&Path>) -> Result<EvalReport> {
    fn run<D: SearchDomain>(config: &ExperimentConfig, paths: &[PathBuf], model: Option<&Path>) -> Result<EvalReport> {
        let set = load_set::<D>(paths)?;
        let optimal = optimal_costs(&set, config.labeling_budget);
        let report = match model {
            Some(m) => evaluate_model(&load_model(m)?, &set, config.search_options(), &optimal)?,
            None => EvalReport {
                rows: set
                    .iter()
                    .zip(&optimal)
                    .map(|(n, &o)| eval_row(&n.name, &solve_with_base(&n.instance, config.search_options()), o))
                    .collect(),
            },
        };
        write_with(&config.output_dir.join("solve.csv"), |w| report.write_csv(w))?;
        Ok(report)
    }
    let paths = expand_instance_paths(inputs)?;
    dispatch!(domain_of(&paths, config.domain)?, run(config, &paths, model))
}

/// Solves each instance with the base heuristic and writes the samples of
/// the solved ones to `dataset.txt`, labelled unless `label` is false.
pub fn cmd_make_dataset(config: &ExperimentConfig, inputs: &[PathBuf], label: bool) -> Result<PathBuf> {
    fn run<D: SearchDomain>(config: &ExperimentConfig, paths: &[PathBuf], label: bool) -> Result<PathBuf> {
        let set = load_set::<D>(paths)?;
        let samples = base_training_samples(&set, config, label)?;
        if samples.len() < set.len() {
            log::warn!("{} of {} instances were not solved within the budget", set.len() - samples.len(), set.len());
        }
        let mut dataset = Dataset::new(D::KIND);
        for (_, sample) in samples {
            let provenance = Provenance {
                instance_path: sample.instance_ref.clone(),
                heuristic: D::base_heuristic_name().to_string(),
                seed: config.seed,
                budget: config.budget,
            };
            dataset.push(sample, provenance)?;
        }
        let path = config.output_dir.join("dataset.txt");
        create_dir(&config.output_dir)?;
        save_dataset::<D, f64>(&dataset, &path)?;
        Ok(path)
    }
    let paths = expand_instance_paths(inputs)?;
    dispatch!(domain_of(&paths, config.domain)?, run(config, &paths, label))
}

/// Instances named in a dataset, with its samples indexed into them.
type TrainingSet<D> = (Vec<NamedInstance<D>>, Vec<IndexedSample<D>>);

fn load_training_set<D: SearchDomain>(path: &Path) -> Result<TrainingSet<D>> {
    let dataset = load_dataset::<D, f64>(path)?;
    let paths: Vec<PathBuf> = dataset.entries.iter().map(|e| PathBuf::from(&e.provenance.instance_path)).collect();
    let instances = load_set::<D>(&paths)?;
    let samples = dataset.entries.into_iter().enumerate().map(|(i, e)| (i, e.sample)).collect();
    Ok((instances, samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub epochs: Vec<EpochStats>,
}

/// Trains on a dataset file (from `init` or a fresh model) and writes
/// `model.ckpt` and `train_log.csv`.
pub fn cmd_train(config: &ExperimentConfig, dataset: &Path, init: Option<&Path>) -> Result<TrainOutput> {
    fn run<D: SearchDomain>(config: &ExperimentConfig, dataset: &Path, init: Option<&Path>) -> Result<TrainOutput> {
        let (instances, samples) = load_training_set::<D>(dataset)?;
        let items: Vec<TrainItem<'_, D>> =
            samples.iter().map(|(i, s)| TrainItem { instance: &instances[*i].instance, sample: s }).collect();
        let model = match init {
            Some(p) => load_model(p)?,
            None => HeuristicModel::init(config.model_config(D::CHANNELS))?,
        };
        let (model, epochs) = train_model(model, &items, config)?;
        let checkpoint = config.output_dir.join("model.ckpt");
        let log = config.output_dir.join("train_log.csv");
        create_dir(&config.output_dir)?;
        model.save(&checkpoint)?;
        write_with(&log, |w| write_train_log(&epochs, w))?;
        Ok(TrainOutput { checkpoint, log, epochs })
    }
    dispatch!(peek_domain(dataset)?, run(config, dataset, init))
}

/// Searches every instance with the model; writes `eval.csv` (one row per
/// instance) and `eval_summary.csv`.
pub fn cmd_evaluate(config: &ExperimentConfig, model: &Path, inputs: &[PathBuf]) -> Result<EvalReport> {
    fn run<D: SearchDomain>(config: &ExperimentConfig, model: &Path, paths: &[PathBuf]) -> Result<EvalReport> {
        let set = load_set::<D>(paths)?;
        let optimal = optimal_costs(&set, config.labeling_budget);
        let report = evaluate_model(&load_model(model)?, &set, config.search_options(), &optimal)?;
        write_with(&config.output_dir.join("eval.csv"), |w| report.write_csv(w))?;
        write_with(&config.output_dir.join("eval_summary.csv"), |w| report.write_summary_csv(w))?;
        Ok(report)
    }
    let paths = expand_instance_paths(inputs)?;
    dispatch!(domain_of(&paths, config.domain)?, run(config, model, &paths))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumOutput {
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    pub before: EvalReport,
    pub after: EvalReport,
    pub added: usize,
}

/// One curriculum round; writes `curriculum_model.ckpt`,
/// `curriculum_dataset.txt` and `curriculum.csv` (coverage before and after).
pub fn cmd_curriculum(
    config: &ExperimentConfig,
    model: &Path,
    dataset: &Path,
    inputs: &[PathBuf],
) -> Result<CurriculumOutput> {
    fn run<D: SearchDomain>(
        config: &ExperimentConfig,
        model: &Path,
        dataset: &Path,
        paths: &[PathBuf],
    ) -> Result<CurriculumOutput> {
        let (train, samples) = load_training_set::<D>(dataset)?;
        let test = load_set::<D>(paths)?;
        let optimal = optimal_costs(&test, config.labeling_budget);
        let result = curriculum_round(load_model(model)?, samples, &train, &test, &optimal, config)?;
        let mut out = Dataset::new(D::KIND);
        for (_, sample) in result.samples {
            let provenance = Provenance {
                instance_path: sample.instance_ref.clone(),
                heuristic: D::base_heuristic_name().to_string(),
                seed: config.seed,
                budget: config.budget,
            };
            out.push(sample, provenance)?;
        }
        create_dir(&config.output_dir)?;
        let checkpoint = config.output_dir.join("curriculum_model.ckpt");
        let dataset_path = config.output_dir.join("curriculum_dataset.txt");
        result.model.save(&checkpoint)?;
        save_dataset::<D, f64>(&out, &dataset_path)?;
        write_with(&config.output_dir.join("curriculum.csv"), |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["stage", "solved", "coverage", "mean_expanded", "added", "train_samples"])?;
            for (stage, r) in [("before", &result.before), ("after", &result.after)] {
                c.write_record([
                    stage.to_string(),
                    r.solved().to_string(),
                    r.coverage().to_string(),
                    r.mean_expanded().to_string(),
                    result.added.to_string(),
                    out.len().to_string(),
                ])?;
            }
            c.flush().map_err(|e| Error::io("<csv>", e))
        })?;
        Ok(CurriculumOutput {
            checkpoint,
            dataset: dataset_path,
            before: result.before,
            after: result.after,
            added: result.added,
        })
    }
    let paths = expand_instance_paths(inputs)?;
    dispatch!(peek_domain(dataset)?, run(config, model, dataset, &paths))
}

/// Bootstrap from an untrained model (or `init`); writes `bootstrap.csv`
/// and `bootstrap_model.ckpt`.
pub fn cmd_bootstrap(config: &ExperimentConfig, inputs: &[PathBuf], init: Option<&Path>) -> Result<Vec<BootstrapRow>> {
    fn run<D: SearchDomain>(
        config: &ExperimentConfig,
        paths: &[PathBuf],
        init: Option<&Path>,
    ) -> Result<Vec<BootstrapRow>> {
        let set = load_set::<D>(paths)?;
        let model = match init {
            Some(p) => load_model(p)?,
            None => HeuristicModel::init(config.model_config(D::CHANNELS))?,
        };
        let (model, rows) = bootstrap(model, &set, config)?;
        create_dir(&config.output_dir)?;
        model.save(&config.output_dir.join("bootstrap_model.ckpt"))?;
        write_with(&config.output_dir.join("bootstrap.csv"), |w| write_bootstrap_csv(&rows, w))?;
        Ok(rows)
    }
    let paths = expand_instance_paths(inputs)?;
    dispatch!(domain_of(&paths, config.domain)?, run(config, &paths, init))
}

/// Runs the hand-built examples; writes `counterexample.csv`.
pub fn cmd_counterexample(config: &ExperimentConfig) -> Result<CounterexampleReport> {
    let report = run_counterexamples()?;
    write_with(&config.output_dir.join("counterexample.csv"), |w| report.write_csv(w))?;
    Ok(report)
}
