use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use indexmap::IndexMap;

use super::ProblemInstance;
use crate::{Error, Result, Scalar};

/// Optimal cost-to-goal for every state reachable from the initial state;
/// `None` marks states from which no goal is reachable.
pub type CostToGoMap<St, S> = IndexMap<St, Option<S>>;

/// Breadth-first enumeration of the states reachable from the initial state,
/// together with the forward edges. Fails once more than `cap` states are seen.
#[allow(clippy::type_complexity)]
pub fn enumerate_states<P, S>(instance: &P, cap: usize) -> Result<(IndexMap<P::State, ()>, Vec<Vec<(usize, S)>>)>
where
    P: ProblemInstance<S>,
    S: Scalar,
{
    let mut index: IndexMap<P::State, ()> = IndexMap::new();
    let mut edges: Vec<Vec<(usize, S)>> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(instance.initial_state(), ());
    edges.push(Vec::new());
    queue.push_back(0usize);
    let mut succ = Vec::new();
    while let Some(u) = queue.pop_front() {
        succ.clear();
        let state = index.get_index(u).unwrap().0.clone();
        instance.successors(&state, &mut succ);
        for (next, w) in succ.drain(..) {
            let (v, fresh) = index.insert_full(next, ());
            if fresh.is_none() {
                if index.len() > cap {
                    return Err(Error::CapExceeded { cap });
                }
                edges.push(Vec::new());
                queue.push_back(v);
            }
            edges[u].push((v, w));
        }
    }
    Ok((index, edges))
}

struct Frontier<S> {
    cost: S,
    node: usize,
}

impl<S: Scalar> PartialEq for Frontier<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for Frontier<S> {}
impl<S: Scalar> PartialOrd for Frontier<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for Frontier<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal).then_with(|| other.node.cmp(&self.node))
    }
}

/// Exact cost-to-goal of every reachable state.
///
/// Enumerates the reachable state space (at most `cap` states), reverses the
/// edges and runs uniform-cost search outward from all goal states at once.
pub fn shortest_path_oracle<P, S>(instance: &P, cap: usize) -> Result<CostToGoMap<P::State, S>>
where
    P: ProblemInstance<S>,
    S: Scalar,
{
    let (states, edges) = enumerate_states(instance, cap)?;
    let n = states.len();
    let mut reverse: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
    for (u, adj) in edges.iter().enumerate() {
        for &(v, w) in adj {
            reverse[v].push((u, w));
        }
    }
    let mut dist: Vec<Option<S>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for (i, (s, _)) in states.iter().enumerate() {
        if instance.is_goal(s) {
            dist[i] = Some(S::zero());
            heap.push(Frontier { cost: S::zero(), node: i });
        }
    }
    let mut done = vec![false; n];
    while let Some(Frontier { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for &(pred, w) in &reverse[node] {
            let c = cost + w;
            if dist[pred].is_none_or(|d| c < d) {
                dist[pred] = Some(c);
                heap.push(Frontier { cost: c, node: pred });
            }
        }
    }
    Ok(states.into_iter().map(|(s, _)| s).zip(dist).collect())
}
