use super::ProblemInstance;
use crate::Scalar;

/// A finite digraph given by adjacency lists; states are node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGraph<S> {
    pub adjacency: Vec<Vec<(usize, S)>>,
    pub initial: usize,
    pub goals: Vec<usize>,
}

impl<S: Scalar> ExplicitGraph<S> {
    pub fn new(node_count: usize, initial: usize, goals: Vec<usize>) -> Self {
        ExplicitGraph { adjacency: vec![Vec::new(); node_count], initial, goals }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, weight: S) -> &mut Self {
        assert!(weight >= S::zero(), "edge weights must be non-negative");
        self.adjacency[from].push((to, weight));
        self
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, adj)| adj.iter().map(move |&(v, w)| (u, v, w)))
    }
}

impl<S: Scalar> ProblemInstance<S> for ExplicitGraph<S> {
    type State = usize;

    fn initial_state(&self) -> usize {
        self.initial
    }

    fn is_goal(&self, state: &usize) -> bool {
        self.goals.contains(state)
    }

    fn successors(&self, state: &usize, out: &mut Vec<(usize, S)>) {
        out.extend_from_slice(&self.adjacency[*state]);
    }

    fn state_count_hint(&self) -> Option<usize> {
        Some(self.adjacency.len())
    }
}
