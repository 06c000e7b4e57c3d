//! Best-first search over implicit state spaces.
//!
//! [`astar`] is the main entry point. [`AStar`] exposes the same search one
//! expansion at a time, which is what the counter-example reports use to look
//! at the open list mid-search. [`shortest_path_oracle`] computes exact
//! cost-to-go values by a separate route (reverse uniform-cost search) and is
//! used for labelling and as a test oracle.

mod astar;
mod graph;
mod oracle;

use std::fmt::Debug;
use std::hash::Hash;

pub use astar::{astar, reconstruct_path, AStar, SearchNode, Step};
pub use graph::ExplicitGraph;
pub use oracle::{enumerate_states, shortest_path_oracle, CostToGoMap};

use indexmap::IndexMap;

use crate::Scalar;

/// A search problem: initial state, goal predicate and weighted successors.
///
/// Successor lists must be deterministic and all weights non-negative.
pub trait ProblemInstance<S: Scalar> {
    type State: Clone + Eq + Hash + Debug;

    fn initial_state(&self) -> Self::State;

    fn is_goal(&self, state: &Self::State) -> bool;

    /// Appends `(successor, edge weight)` pairs to `out` in a fixed order.
    fn successors(&self, state: &Self::State, out: &mut Vec<(Self::State, S)>);

    fn state_count_hint(&self) -> Option<usize> {
        None
    }
}

/// Ordering among open nodes with equal `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Larger `g` first, then insertion order.
    #[default]
    HighG,
    /// Smaller `g` first, then insertion order.
    LowG,
    /// Insertion order only.
    Fifo,
    /// Most recently inserted first.
    Lifo,
}

impl std::str::FromStr for TieBreak {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "high-g" => Ok(TieBreak::HighG),
            "low-g" => Ok(TieBreak::LowG),
            "fifo" => Ok(TieBreak::Fifo),
            "lifo" => Ok(TieBreak::Lifo),
            other => Err(crate::Error::InvalidArgument(format!("unknown tie-break {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub tie_break: TieBreak,
    /// Maximum number of states selected from the open list.
    pub budget: usize,
    /// Move closed states back to the open list when a cheaper path is found.
    pub reopen: bool,
}

impl SearchOptions {
    pub const DEFAULT_BUDGET: usize = 100_000;

    pub fn with_budget(budget: usize) -> Self {
        SearchOptions { budget, ..Self::default() }
    }
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { tie_break: TieBreak::HighG, budget: Self::DEFAULT_BUDGET, reopen: true }
    }
}

/// What the search knows about one generated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRecord<S> {
    /// Best known cost from the initial state.
    pub g: S,
    pub h: S,
    /// Index of the parent in the record map.
    pub parent: Option<usize>,
    /// Weight of the edge from `parent`.
    pub parent_cost: S,
    pub expanded: bool,
    /// 1-based position in the selection sequence of the first time this
    /// state was taken from the open list.
    pub pop_order: Option<usize>,
}

impl<S: Scalar> StateRecord<S> {
    pub fn f(&self) -> S {
        self.g + self.h
    }
}

/// Generated states in generation order.
pub type GeneratedRecords<St, S> = IndexMap<St, StateRecord<S>>;

/// A path from the initial state to a goal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<St, S> {
    /// `s_0 ... s_l`.
    pub states: Vec<St>,
    /// Cumulative cost to reach each entry of `states`; `g_values[0] = 0`.
    pub g_values: Vec<S>,
    pub total_cost: S,
}

impl<St: Clone, S: Scalar> Plan<St, S> {
    pub fn len(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edges(&self) -> Vec<(St, St)> {
        self.states.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
    }

    /// Checks the plan against the instance: starts at the initial state,
    /// every step is an edge with the recorded weight, and ends in a goal.
    pub fn validate<P>(&self, instance: &P) -> bool
    where
        P: ProblemInstance<S, State = St>,
        St: Eq + Hash + Debug,
    {
        let Some(first) = self.states.first() else {
            return false;
        };
        if *first != instance.initial_state() || self.g_values.len() != self.states.len() {
            return false;
        }
        let mut succ = Vec::new();
        let mut cost = S::zero();
        for (i, w) in self.states.windows(2).enumerate() {
            succ.clear();
            instance.successors(&w[0], &mut succ);
            let Some(edge) = succ.iter().filter(|(s, _)| *s == w[1]).map(|&(_, c)| c).reduce(|a, b| a.min(b)) else {
                return false;
            };
            cost = cost + edge;
            if cost != self.g_values[i + 1] {
                return false;
            }
        }
        cost == self.total_cost && instance.is_goal(self.states.last().unwrap())
    }
}

/// Result of one A* run.
#[derive(Debug, Clone)]
pub struct SearchOutcome<St, S> {
    pub plan: Option<Plan<St, S>>,
    /// Number of selections from the open list, including the final goal pop
    /// and re-expansions of reopened states.
    pub expanded_count: usize,
    /// Number of distinct states ever inserted into the open list.
    pub generated_count: usize,
    pub reopened_count: usize,
    /// Selections made while another open node had the same `f`.
    pub tie_pops: usize,
    pub budget_exhausted: bool,
    pub records: GeneratedRecords<St, S>,
}

impl<St: Clone + Eq + Hash, S: Scalar> SearchOutcome<St, S> {
    pub fn solved(&self) -> bool {
        self.plan.is_some()
    }

    /// Distinct states that were expanded (goal excluded).
    pub fn expanded_states(&self) -> impl Iterator<Item = &St> + '_ {
        self.records.iter().filter(|(_, r)| r.expanded).map(|(s, _)| s)
    }
}

#[cfg(test)]
mod tests;
