use std::cmp::Ordering;
use std::collections::BinaryHeap;

use indexmap::map::Entry;
use indexmap::IndexMap;

use super::{GeneratedRecords, Plan, ProblemInstance, SearchOptions, SearchOutcome, StateRecord, TieBreak};
use crate::{Error, Result, Scalar};

/// An entry of the open list.
///
/// Entries are never removed from the heap when a state's `g` improves; a new
/// entry is pushed and the old one is skipped when it surfaces.
#[derive(Debug, Clone, Copy)]
pub struct SearchNode<S> {
    /// Index into the record map.
    pub index: usize,
    pub g: S,
    pub h: S,
    pub insertion_seq: u64,
}

impl<S: Scalar> SearchNode<S> {
    pub fn f(&self) -> S {
        self.g + self.h
    }
}

struct OpenEntry<S> {
    node: SearchNode<S>,
    tie_break: TieBreak,
}

impl<S: Scalar> OpenEntry<S> {
    /// `Less` means "pops first".
    fn priority_cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.node, &other.node);
        let by_f = a.f().partial_cmp(&b.f()).unwrap_or(Ordering::Equal);
        let fifo = a.insertion_seq.cmp(&b.insertion_seq);
        by_f.then_with(|| match self.tie_break {
            TieBreak::HighG => b.g.partial_cmp(&a.g).unwrap_or(Ordering::Equal).then(fifo),
            TieBreak::LowG => a.g.partial_cmp(&b.g).unwrap_or(Ordering::Equal).then(fifo),
            TieBreak::Fifo => fifo,
            TieBreak::Lifo => fifo.reverse(),
        })
    }
}

impl<S: Scalar> PartialEq for OpenEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.priority_cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for OpenEntry<S> {}

impl<S: Scalar> PartialOrd for OpenEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for OpenEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap.
        other.priority_cmp(self)
    }
}

/// Result of a single [`AStar::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// The state with this record index was expanded.
    Expanded(usize),
    /// A goal state was selected; the search is over.
    GoalFound(usize),
    /// The open list ran empty; no plan exists.
    Exhausted,
    /// The expansion budget was used up before a goal was selected.
    BudgetExhausted,
}

/// Incremental A* search with reopening and lazy open-list updates.
pub struct AStar<'a, P, H, S>
where
    P: ProblemInstance<S>,
    S: Scalar,
{
    instance: &'a P,
    heuristic: H,
    options: SearchOptions,
    records: GeneratedRecords<P::State, S>,
    /// Sequence number of the live open entry of each record, if any.
    open_seq: Vec<Option<u64>>,
    closed: Vec<bool>,
    heap: BinaryHeap<OpenEntry<S>>,
    next_seq: u64,
    expanded_count: usize,
    reopened_count: usize,
    tie_pops: usize,
    finished: Option<Step>,
    scratch: Vec<(P::State, S)>,
}

impl<'a, P, H, S> AStar<'a, P, H, S>
where
    P: ProblemInstance<S>,
    H: FnMut(&P::State) -> S,
    S: Scalar,
{
    pub fn new(instance: &'a P, heuristic: H, options: SearchOptions) -> Self {
        assert!(options.budget >= 1, "search budget must be at least 1");
        let mut search = AStar {
            instance,
            heuristic,
            options,
            records: IndexMap::new(),
            open_seq: Vec::new(),
            closed: Vec::new(),
            heap: BinaryHeap::new(),
            next_seq: 0,
            expanded_count: 0,
            reopened_count: 0,
            tie_pops: 0,
            finished: None,
            scratch: Vec::new(),
        };
        let start = instance.initial_state();
        let h = search.eval(&start);
        let record =
            StateRecord { g: S::zero(), h, parent: None, parent_cost: S::zero(), expanded: false, pop_order: None };
        search.records.insert(start, record);
        search.open_seq.push(None);
        search.closed.push(false);
        search.push(0);
        search
    }

    fn eval(&mut self, state: &P::State) -> S {
        let h = (self.heuristic)(state);
        debug_assert!(h.is_finite() && h >= S::zero(), "heuristic returned {h:?} for {state:?}");
        h
    }

    fn push(&mut self, index: usize) {
        let record = &self.records[index];
        let node = SearchNode { index, g: record.g, h: record.h, insertion_seq: self.next_seq };
        self.open_seq[index] = Some(self.next_seq);
        self.next_seq += 1;
        self.heap.push(OpenEntry { node, tie_break: self.options.tie_break });
    }

    fn is_live(&self, entry: &OpenEntry<S>) -> bool {
        self.open_seq[entry.node.index] == Some(entry.node.insertion_seq)
    }

    fn drop_stale_top(&mut self) {
        while let Some(top) = self.heap.peek() {
            if self.is_live(top) {
                break;
            }
            self.heap.pop();
        }
    }

    pub fn records(&self) -> &GeneratedRecords<P::State, S> {
        &self.records
    }

    /// Live open nodes in the order they would be selected.
    pub fn open_nodes(&self) -> Vec<(&P::State, SearchNode<S>)> {
        let mut live: Vec<&OpenEntry<S>> = self.heap.iter().filter(|e| self.is_live(e)).collect();
        live.sort_by(|a, b| a.priority_cmp(b));
        live.into_iter().map(|e| (self.records.get_index(e.node.index).unwrap().0, e.node)).collect()
    }

    pub fn expanded_count(&self) -> usize {
        self.expanded_count
    }

    /// Selects and processes one open node.
    pub fn step(&mut self) -> Step {
        if let Some(done) = self.finished {
            return done;
        }
        if self.expanded_count >= self.options.budget {
            self.drop_stale_top();
            let result = if self.heap.is_empty() { Step::Exhausted } else { Step::BudgetExhausted };
            self.finished = Some(result);
            return result;
        }
        self.drop_stale_top();
        let Some(entry) = self.heap.pop() else {
            self.finished = Some(Step::Exhausted);
            return Step::Exhausted;
        };
        let index = entry.node.index;
        self.open_seq[index] = None;
        self.expanded_count += 1;

        self.drop_stale_top();
        if let Some(next) = self.heap.peek() {
            if next.node.f() == entry.node.f() {
                self.tie_pops += 1;
            }
        }

        let pop_order = self.expanded_count;
        let (state, record) = self.records.get_index_mut(index).unwrap();
        record.pop_order.get_or_insert(pop_order);
        if self.instance.is_goal(state) {
            self.finished = Some(Step::GoalFound(index));
            return Step::GoalFound(index);
        }
        record.expanded = true;
        let g = record.g;
        let state = state.clone();
        self.closed[index] = true;

        let mut succ = std::mem::take(&mut self.scratch);
        succ.clear();
        self.instance.successors(&state, &mut succ);
        for (next, w) in succ.drain(..) {
            debug_assert!(w >= S::zero(), "negative edge weight");
            let next_g = g + w;
            match self.records.entry(next) {
                Entry::Occupied(mut occ) => {
                    let ni = occ.index();
                    let rec = occ.get_mut();
                    if next_g >= rec.g {
                        continue;
                    }
                    if self.closed[ni] {
                        if !self.options.reopen {
                            continue;
                        }
                        self.closed[ni] = false;
                        self.reopened_count += 1;
                    }
                    rec.g = next_g;
                    rec.parent = Some(index);
                    rec.parent_cost = w;
                    self.push(ni);
                }
                Entry::Vacant(vac) => {
                    let h = (self.heuristic)(vac.key());
                    debug_assert!(h.is_finite() && h >= S::zero(), "heuristic returned {h:?}");
                    let ni = vac.index();
                    vac.insert(StateRecord {
                        g: next_g,
                        h,
                        parent: Some(index),
                        parent_cost: w,
                        expanded: false,
                        pop_order: None,
                    });
                    self.open_seq.push(None);
                    self.closed.push(false);
                    self.push(ni);
                }
            }
        }
        self.scratch = succ;
        Step::Expanded(index)
    }

    /// Runs to completion.
    pub fn run(mut self) -> SearchOutcome<P::State, S> {
        loop {
            match self.step() {
                Step::Expanded(_) => continue,
                _ => return self.into_outcome(),
            }
        }
    }

    pub fn into_outcome(self) -> SearchOutcome<P::State, S> {
        let (plan, budget_exhausted) = match self.finished {
            Some(Step::GoalFound(goal)) => {
                let plan = reconstruct_path(&self.records, goal)
                    .expect("parent chain of a popped goal reaches the initial state");
                (Some(plan), false)
            }
            Some(Step::BudgetExhausted) => (None, true),
            _ => (None, false),
        };
        SearchOutcome {
            plan,
            expanded_count: self.expanded_count,
            generated_count: self.records.len(),
            reopened_count: self.reopened_count,
            tie_pops: self.tie_pops,
            budget_exhausted,
            records: self.records,
        }
    }
}

/// Runs A* from the instance's initial state until a goal is selected, the
/// open list empties, or `options.budget` selections have been made.
pub fn astar<P, H, S>(instance: &P, heuristic: H, options: SearchOptions) -> SearchOutcome<P::State, S>
where
    P: ProblemInstance<S>,
    H: FnMut(&P::State) -> S,
    S: Scalar,
{
    AStar::new(instance, heuristic, options).run()
}

/// Follows parent links from `goal` back to the record without a parent.
///
/// Record 0 is always the initial state. Plan costs are accumulated from the
/// stored edge weights along the chain.
pub fn reconstruct_path<St: Clone, S: Scalar>(records: &GeneratedRecords<St, S>, goal: usize) -> Result<Plan<St, S>> {
    let mut chain = vec![goal];
    let mut current = goal;
    loop {
        let Some((_, rec)) = records.get_index(current) else {
            return Err(Error::BrokenChain { index: current });
        };
        match rec.parent {
            Some(p) => {
                if chain.len() > records.len() {
                    return Err(Error::BrokenChain { index: current });
                }
                chain.push(p);
                current = p;
            }
            None if current == 0 => break,
            None => return Err(Error::BrokenChain { index: current }),
        }
    }
    chain.reverse();
    let mut g_values = Vec::with_capacity(chain.len());
    let mut cost = S::zero();
    for (k, &i) in chain.iter().enumerate() {
        if k > 0 {
            cost = cost + records[i].parent_cost;
        }
        g_values.push(cost);
    }
    let states = chain.iter().map(|&i| records.get_index(i).unwrap().0.clone()).collect();
    Ok(Plan { states, g_values, total_cost: cost })
}
