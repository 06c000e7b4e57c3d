//! Training samples from solved searches, cost-to-go labels and the dataset
//! file format.
//!
//! ```text
//! lstar-dataset v1
//! domain maze
//! sample data/maze-0001.txt manhattan 7 100000 4
//! O 0 0 2 0,0
//! O 1 1 1 1,0
//! O 2 2 0 2,0
//! N - 1 DEAD 0,1
//! ```
//!
//! A `sample` line carries the instance path, base heuristic name, seed,
//! search budget and record count. Records are `O|N <path index|-> <g>
//! <cost-to-go|DEAD|?> <state>`; numbers are written in shortest
//! round-trip form.

use std::hash::Hash;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::domains::{Domain, DomainKind};
use crate::losses::{CostToGo, LabeledState, TrainingSample};
use crate::search::{shortest_path_oracle, ProblemInstance, SearchOutcome};
use crate::{Error, Result, Scalar};

pub const DATASET_HEADER: &str = "lstar-dataset v1";

/// Splits a solved search into plan states and the remaining generated
/// states. Off-path states keep their best recorded g and generation order.
pub fn build_sample<St, S>(instance_ref: &str, outcome: &SearchOutcome<St, S>) -> Result<TrainingSample<St, S>>
where
    St: Clone + Eq + Hash,
    S: Scalar,
{
    let plan = outcome.plan.as_ref().ok_or(Error::UnsolvedOutcome)?;
    let on_path: Vec<LabeledState<St, S>> = plan
        .states
        .iter()
        .zip(&plan.g_values)
        .enumerate()
        .map(|(i, (s, &g))| LabeledState { state: s.clone(), g, cost_to_go: CostToGo::Unknown, path_index: Some(i) })
        .collect();
    let on: std::collections::HashSet<&St> = plan.states.iter().collect();
    let off_path = outcome
        .records
        .iter()
        .filter(|(s, _)| !on.contains(s))
        .map(|(s, r)| LabeledState { state: s.clone(), g: r.g, cost_to_go: CostToGo::Unknown, path_index: None })
        .collect();
    Ok(TrainingSample { instance_ref: instance_ref.to_string(), on_path, off_path })
}

/// Labels every state with its exact cost-to-go, found by enumerating at
/// most `labeling_budget` reachable states and searching backwards from the
/// goals. States with no route to a goal become [`CostToGo::DeadEnd`].
///
/// If the state space is larger than the budget the sample is left
/// unlabelled and [`Error::LabelingBudgetExceeded`] is returned.
pub fn label_cost_to_go<P, S>(
    sample: &mut TrainingSample<P::State, S>,
    instance: &P,
    labeling_budget: usize,
) -> Result<()>
where
    P: ProblemInstance<S>,
    S: Scalar,
{
    let labels = match shortest_path_oracle(instance, labeling_budget) {
        Ok(labels) => labels,
        Err(Error::CapExceeded { .. }) => return Err(Error::LabelingBudgetExceeded { budget: labeling_budget }),
        Err(e) => return Err(e),
    };
    for s in sample.on_path.iter_mut().chain(sample.off_path.iter_mut()) {
        s.cost_to_go = match labels.get(&s.state) {
            Some(Some(c)) => CostToGo::Cost(*c),
            Some(None) => CostToGo::DeadEnd,
            None => CostToGo::Unknown,
        };
    }
    Ok(())
}

/// Removes off-path states proven to be dead ends.
pub fn drop_dead_ends<St, S>(sample: &mut TrainingSample<St, S>) {
    sample.off_path.retain(|s| !matches!(s.cost_to_go, CostToGo::DeadEnd));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub instance_path: String,
    pub heuristic: String,
    pub seed: u64,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry<St, S> {
    pub sample: TrainingSample<St, S>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<St, S> {
    pub domain: DomainKind,
    pub entries: Vec<DatasetEntry<St, S>>,
}

impl<St, S: Scalar> Dataset<St, S> {
    pub fn new(domain: DomainKind) -> Self {
        Dataset { domain, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a sample, rejecting a repeated `instance_ref`.
    pub fn push(&mut self, sample: TrainingSample<St, S>, provenance: Provenance) -> Result<()> {
        if self.entries.iter().any(|e| e.sample.instance_ref == sample.instance_ref) {
            return Err(Error::InvalidArgument(format!("duplicate sample {:?}", sample.instance_ref)));
        }
        self.entries.push(DatasetEntry { sample, provenance });
        Ok(())
    }

    pub fn samples(&self) -> impl Iterator<Item = &TrainingSample<St, S>> + '_ {
        self.entries.iter().map(|e| &e.sample)
    }

    pub fn max_finite_label(&self) -> Option<S> {
        self.samples()
            .flat_map(|s| s.states())
            .filter_map(|s| match s.cost_to_go {
                CostToGo::Cost(c) => Some(c),
                _ => None,
            })
            .reduce(S::max)
    }

    /// Regression target substituted for dead ends: `multiplier` times the
    /// largest finite label (or `multiplier` if there is none).
    pub fn dead_end_value(&self, multiplier: S) -> S {
        multiplier * self.max_finite_label().unwrap_or_else(S::one).max(S::one())
    }
}

fn fmt_num<S: Scalar>(v: S) -> String {
    format!("{}", v.to_f64_lossy())
}

fn check_token(text: &str) -> Result<()> {
    if text.is_empty() || text.contains(char::is_whitespace) {
        return Err(Error::InvalidArgument(format!("{text:?} cannot be written as a single token")));
    }
    Ok(())
}

pub fn write_dataset<D: Domain, S: Scalar>(dataset: &Dataset<D::State, S>, out: &mut impl Write) -> Result<()> {
    let io = |e| Error::io("<dataset>", e);
    writeln!(out, "{DATASET_HEADER}").map_err(io)?;
    writeln!(out, "domain {}", dataset.domain.name()).map_err(io)?;
    for entry in &dataset.entries {
        let p = &entry.provenance;
        check_token(&p.instance_path)?;
        check_token(&p.heuristic)?;
        let sample = &entry.sample;
        writeln!(out, "sample {} {} {} {} {}", p.instance_path, p.heuristic, p.seed, p.budget, sample.len())
            .map_err(io)?;
        for s in sample.states() {
            let side = if s.path_index.is_some() { "O" } else { "N" };
            let index = s.path_index.map_or_else(|| "-".to_string(), |i| i.to_string());
            let label = match s.cost_to_go {
                CostToGo::Cost(c) => fmt_num(c),
                CostToGo::DeadEnd => "DEAD".to_string(),
                CostToGo::Unknown => "?".to_string(),
            };
            writeln!(out, "{side} {index} {} {label} {}", fmt_num(s.g), D::format_state(&s.state)).map_err(io)?;
        }
    }
    Ok(())
}

pub fn save_dataset<D: Domain, S: Scalar>(dataset: &Dataset<D::State, S>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_dataset::<D, S>(dataset, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>> {
        self.number += 1;
        self.inner.next().transpose().map_err(|e| Error::io("<dataset>", e))
    }

    fn malformed(&self, msg: impl Into<String>) -> Error {
        Error::MalformedRecord { line: self.number, msg: msg.into() }
    }

    fn field<T: std::str::FromStr>(&self, text: Option<&str>, what: &str) -> Result<T> {
        text.and_then(|t| t.parse().ok()).ok_or_else(|| self.malformed(format!("bad {what}")))
    }
}

/// Reads only the domain line of a dataset file.
pub fn peek_domain(path: &Path) -> Result<DomainKind> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Lines { inner: std::io::BufReader::new(file).lines(), number: 0 };
    read_preamble(&mut lines)
}

fn read_preamble<R: BufRead>(lines: &mut Lines<R>) -> Result<DomainKind> {
    let header = lines.next()?.unwrap_or_default();
    if header != DATASET_HEADER {
        return Err(Error::VersionMismatch(header));
    }
    let domain = lines.next()?.ok_or_else(|| lines.malformed("missing domain line"))?;
    domain.strip_prefix("domain ").and_then(|d| d.parse().ok()).ok_or_else(|| lines.malformed("bad domain line"))
}

pub fn read_dataset<D: Domain, S: Scalar>(input: impl BufRead) -> Result<Dataset<D::State, S>> {
    let mut lines = Lines { inner: input.lines(), number: 0 };
    let domain = read_preamble(&mut lines)?;
    if domain != D::KIND {
        return Err(lines.malformed(format!("dataset is for {}, expected {}", domain.name(), D::KIND.name())));
    }
    let mut dataset = Dataset::new(domain);
    while let Some(line) = lines.next()? {
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(' ');
        if it.next() != Some("sample") {
            return Err(lines.malformed("expected a sample line"));
        }
        let provenance = Provenance {
            instance_path: lines.field(it.next(), "instance path")?,
            heuristic: lines.field(it.next(), "heuristic")?,
            seed: lines.field(it.next(), "seed")?,
            budget: lines.field(it.next(), "budget")?,
        };
        let count: usize = lines.field(it.next(), "record count")?;
        let mut sample = TrainingSample {
            instance_ref: provenance.instance_path.clone(),
            on_path: Vec::new(),
            off_path: Vec::new(),
        };
        for _ in 0..count {
            let line = lines.next()?.ok_or_else(|| lines.malformed("truncated sample"))?;
            let mut it = line.split(' ');
            let on = match it.next() {
                Some("O") => true,
                Some("N") => false,
                _ => return Err(lines.malformed("record must start with O or N")),
            };
            let path_index = match it.next() {
                Some("-") if !on => None,
                text if on => Some(lines.field(text, "path index")?),
                _ => return Err(lines.malformed("bad path index")),
            };
            let g = S::from_f64_lossy(lines.field(it.next(), "g")?);
            let cost_to_go = match it.next() {
                Some("DEAD") => CostToGo::DeadEnd,
                Some("?") => CostToGo::Unknown,
                text => CostToGo::Cost(S::from_f64_lossy(lines.field(text, "cost-to-go")?)),
            };
            let state_text = it.next().ok_or_else(|| lines.malformed("missing state"))?;
            if it.next().is_some() {
                return Err(lines.malformed("trailing fields"));
            }
            let state = D::parse_state(state_text).map_err(|e| lines.malformed(e.to_string()))?;
            let record = LabeledState { state, g, cost_to_go, path_index };
            if on {
                sample.on_path.push(record);
            } else {
                sample.off_path.push(record);
            }
        }
        dataset.push(sample, provenance).map_err(|e| lines.malformed(e.to_string()))?;
    }
    Ok(dataset)
}

pub fn load_dataset<D: Domain, S: Scalar>(path: &Path) -> Result<Dataset<D::State, S>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset::<D, S>(std::io::BufReader::new(file))
}
