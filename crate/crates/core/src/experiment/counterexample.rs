//! Two seven-state graphs on which regression-style heuristics mislead A*.
//!
//! Graph A: the plan is `s0 s1 s2`. `s3` and `s4` start a detour that reaches
//! the goal only through `s6`, and `s5` is a dead end. The heuristic is exact
//! on the plan but underestimates `s3`, so `f(s3) < f(s1)` and A* expands the
//! off-path state `s3` before `s1`.
//!
//! Graph B: two cost-3 routes `s0 s1 s3 s4` and `s0 s2 s3 s4`. Under the
//! perfect heuristic both `s1` and `s2` have `f = 3` after `s0` is expanded,
//! so the search depends on tie-breaking.

use super::super::dataset::build_sample;
use crate::losses::{lstar_hard, MonotoneDirection};
use crate::search::{astar, shortest_path_oracle, AStar, ExplicitGraph, SearchOptions, Step, TieBreak};
use crate::Result;

pub fn graph_a() -> ExplicitGraph<f64> {
    let mut g = ExplicitGraph::new(7, 0, vec![2]);
    g.add_edge(0, 1, 1.0)
        .add_edge(1, 2, 1.0)
        .add_edge(0, 3, 1.0)
        .add_edge(3, 4, 1.0)
        .add_edge(1, 5, 1.0)
        .add_edge(4, 6, 1.0)
        .add_edge(6, 2, 1.0);
    g
}

/// Exact except at `s3` (true distance 3) and the dead end `s5`.
pub const GRAPH_A_H: [f64; 7] = [2.0, 1.0, 0.0, 0.0, 2.0, 10.0, 1.0];

pub fn graph_b() -> ExplicitGraph<f64> {
    let mut g = ExplicitGraph::new(7, 0, vec![4]);
    g.add_edge(0, 1, 1.0)
        .add_edge(0, 2, 1.0)
        .add_edge(1, 3, 1.0)
        .add_edge(2, 3, 1.0)
        .add_edge(3, 4, 1.0)
        .add_edge(2, 5, 1.0)
        .add_edge(5, 6, 1.0);
    g
}

/// Perfect on the states that reach the goal; `s5` and `s6` are dead ends.
pub const GRAPH_B_H: [f64; 7] = [3.0, 2.0, 2.0, 1.0, 0.0, 1e3, 1e3];

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    /// Oracle cost-to-go of graph A (`None` for dead ends).
    pub a_distances: Vec<Option<f64>>,
    /// States of graph A in the order they were taken from the open list.
    pub a_pop_order: Vec<usize>,
    pub a_generated: Vec<usize>,
    pub a_s3_before_s1: bool,
    pub a_plan: Vec<usize>,
    pub a_term1_hard: f64,
    pub a_term2_hard: f64,
    /// `f` of the open nodes of graph B right after expanding `s0`.
    pub b_open_f: Vec<(usize, f64)>,
    pub b_plan_cost: f64,
    /// `(policy, selections made while another open node tied on f, expansions)`.
    pub b_tie_pops: Vec<(TieBreak, usize, usize)>,
}

impl CounterexampleReport {
    /// Both properties the examples exist to show.
    pub fn holds(&self) -> bool {
        self.a_s3_before_s1
            && self.a_term1_hard > 0.0
            && self.b_open_f.len() == 2
            && self.b_open_f.iter().all(|&(_, f)| f == 3.0)
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let list = |v: &[usize]| v.iter().map(|s| format!("s{s}")).collect::<Vec<_>>().join(" ");
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["key", "value"])?;
        let dist = self
            .a_distances
            .iter()
            .enumerate()
            .map(|(i, d)| format!("s{i}={}", d.map_or_else(|| "inf".to_string(), |d| d.to_string())))
            .collect::<Vec<_>>()
            .join(" ");
        let mut rows = vec![
            ("a.distances".to_string(), dist),
            ("a.pop_order".to_string(), list(&self.a_pop_order)),
            ("a.generated".to_string(), list(&self.a_generated)),
            ("a.plan".to_string(), list(&self.a_plan)),
            ("a.s3_expanded_before_s1".to_string(), self.a_s3_before_s1.to_string()),
            ("a.term1_hard".to_string(), self.a_term1_hard.to_string()),
            ("a.term2_hard".to_string(), self.a_term2_hard.to_string()),
            (
                "b.open_after_s0".to_string(),
                self.b_open_f.iter().map(|(s, f)| format!("s{s}:f={f}")).collect::<Vec<_>>().join(" "),
            ),
            ("b.plan_cost".to_string(), self.b_plan_cost.to_string()),
        ];
        for (policy, ties, expanded) in &self.b_tie_pops {
            rows.push((format!("b.tie_pops.{policy:?}").to_lowercase(), ties.to_string()));
            rows.push((format!("b.expanded.{policy:?}").to_lowercase(), expanded.to_string()));
        }
        rows.push(("holds".to_string(), self.holds().to_string()));
        for (k, v) in rows {
            w.write_record([k, v])?;
        }
        w.flush().map_err(|e| crate::Error::io("<csv>", e))
    }
}

pub fn run_counterexamples() -> Result<CounterexampleReport> {
    let a = graph_a();
    let a_distances: Vec<Option<f64>> = {
        let labels = shortest_path_oracle::<_, f64>(&a, 100)?;
        (0..7).map(|s| labels.get(&s).copied().flatten()).collect()
    };
    let outcome = astar(&a, |s: &usize| GRAPH_A_H[*s], SearchOptions::default());
    let mut popped: Vec<(usize, usize)> =
        outcome.records.iter().filter_map(|(&s, r)| r.pop_order.map(|p| (p, s))).collect();
    popped.sort_unstable();
    let a_pop_order: Vec<usize> = popped.into_iter().map(|(_, s)| s).collect();
    let pos = |s: usize| a_pop_order.iter().position(|&x| x == s);
    let a_s3_before_s1 = matches!((pos(3), pos(1)), (Some(i), Some(j)) if i < j);
    let sample = build_sample("graph-a", &outcome)?;
    let h: Vec<f64> = sample.states().map(|s| GRAPH_A_H[s.state]).collect();
    let (a_term1_hard, a_term2_hard) = lstar_hard(&sample, &h, MonotoneDirection::NonIncreasing)?;

    let b = graph_b();
    let mut search = AStar::new(&b, |s: &usize| GRAPH_B_H[*s], SearchOptions::default());
    let first = search.step();
    debug_assert_eq!(first, Step::Expanded(0));
    let mut b_open_f: Vec<(usize, f64)> = search.open_nodes().into_iter().map(|(&s, n)| (s, n.f())).collect();
    b_open_f.sort_by_key(|&(s, _)| s);
    let b_plan_cost = search.run().plan.map_or(f64::INFINITY, |p| p.total_cost);
    let b_tie_pops = [TieBreak::HighG, TieBreak::Fifo, TieBreak::Lifo]
        .into_iter()
        .map(|tie_break| {
            let o = astar(&b, |s: &usize| GRAPH_B_H[*s], SearchOptions { tie_break, ..SearchOptions::default() });
            (tie_break, o.tie_pops, o.expanded_count)
        })
        .collect();

    Ok(CounterexampleReport {
        a_distances,
        a_pop_order,
        a_generated: outcome.records.keys().copied().collect(),
        a_s3_before_s1,
        a_plan: outcome.plan.map(|p| p.states).unwrap_or_default(),
        a_term1_hard,
        a_term2_hard,
        b_open_f,
        b_plan_cost,
        b_tie_pops,
    })
}
