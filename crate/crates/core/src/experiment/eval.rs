use rayon::prelude::*;

use super::train::solve_with_model;
use super::NamedInstance;
use crate::domains::{SearchDomain, StateOf};
use crate::model::HeuristicModel;
use crate::search::{shortest_path_oracle, ProblemInstance, SearchOptions, SearchOutcome};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub instance: String,
    pub solved: bool,
    pub expanded: usize,
    pub generated: usize,
    /// Plan cost (number of moves in the unit-cost domains).
    pub plan_length: Option<f64>,
    pub optimal_length: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn solved(&self) -> usize {
        self.rows.iter().filter(|r| r.solved).count()
    }

    pub fn coverage(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.solved() as f64 / self.rows.len() as f64
        }
    }

    /// Mean expansions over all instances; unsolved ones count the
    /// expansions spent before giving up.
    pub fn mean_expanded(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.rows.iter().map(|r| r.expanded as f64).sum::<f64>() / self.rows.len() as f64
        }
    }

    /// Mean gap over solved instances with a known optimum.
    pub fn mean_gap(&self) -> Option<f64> {
        let gaps: Vec<f64> = self.rows.iter().filter_map(|r| r.gap).collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instance", "solved", "expanded", "generated", "plan_length", "optimal_length", "gap"])?;
        for r in &self.rows {
            w.write_record([
                r.instance.clone(),
                u8::from(r.solved).to_string(),
                r.expanded.to_string(),
                r.generated.to_string(),
                opt(r.plan_length),
                opt(r.optimal_length),
                opt(r.gap),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn write_summary_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["instances", "solved", "coverage", "mean_expanded", "mean_gap"])?;
        w.write_record([
            self.rows.len().to_string(),
            self.solved().to_string(),
            self.coverage().to_string(),
            self.mean_expanded().to_string(),
            self.mean_gap().map_or_else(String::new, |g| g.to_string()),
        ])?;
        w.flush().map_err(|e| Error::io("<csv>", e))
    }
}

/// Optimal cost from the initial state, if the oracle finishes within `cap`
/// states and a goal is reachable.
pub fn optimal_cost<P: ProblemInstance<f64>>(instance: &P, cap: usize) -> Option<f64> {
    let labels = shortest_path_oracle(instance, cap).ok()?;
    labels.get(&instance.initial_state()).copied().flatten()
}

pub fn optimal_costs<D: SearchDomain>(instances: &[NamedInstance<D>], cap: usize) -> Vec<Option<f64>> {
    instances.par_iter().map(|n| optimal_cost(&n.instance, cap)).collect()
}

pub fn eval_row<St: Clone + Eq + std::hash::Hash>(
    name: &str,
    outcome: &SearchOutcome<St, f64>,
    optimal: Option<f64>,
) -> EvalRow {
    let plan_length = outcome.plan.as_ref().map(|p| p.total_cost);
    EvalRow {
        instance: name.to_string(),
        solved: outcome.solved(),
        expanded: outcome.expanded_count,
        generated: outcome.generated_count,
        plan_length,
        optimal_length: optimal,
        gap: plan_length.zip(optimal).map(|(p, o)| p - o),
    }
}

/// Searches every instance with the model (in parallel; the model is only
/// read) and returns the outcomes in instance order.
pub fn run_model<D: SearchDomain, S: Scalar>(
    model: &HeuristicModel<S>,
    instances: &[NamedInstance<D>],
    options: SearchOptions,
) -> Vec<SearchOutcome<StateOf<D>, f64>> {
    instances.par_iter().map(|n| solve_with_model(model, &n.instance, options)).collect()
}

pub fn report_from_outcomes<D: SearchDomain>(
    instances: &[NamedInstance<D>],
    outcomes: &[SearchOutcome<StateOf<D>, f64>],
    optimal: &[Option<f64>],
) -> EvalReport {
    EvalReport {
        rows: instances.iter().zip(outcomes).zip(optimal).map(|((n, o), &opt)| eval_row(&n.name, o, opt)).collect(),
    }
}

pub fn evaluate_model<D: SearchDomain, S: Scalar>(
    model: &HeuristicModel<S>,
    instances: &[NamedInstance<D>],
    options: SearchOptions,
    optimal: &[Option<f64>],
) -> Result<EvalReport> {
    super::train::check_channels::<D, S>(model)?;
    let outcomes = run_model(model, instances, options);
    Ok(report_from_outcomes(instances, &outcomes, optimal))
}
