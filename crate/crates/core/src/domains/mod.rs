//! Grid domains: mazes with teleports and Sokoban.
//!
//! Both domains are unit-cost, share the [`Cell`] coordinate type, encode
//! states as four binary planes ([`FeatureTensor`]) at native resolution,
//! and round-trip through a line-oriented text format (see [`AnyInstance`]).

mod features;
mod maze;
mod sokoban;
mod text;

use std::fmt::Debug;
use std::hash::Hash;

pub use features::FeatureTensor;
pub use maze::{maze_generate, MazeGrid, MazeState};
pub use sokoban::{sokoban_generate, SokobanLevel, SokobanState};
pub use text::{load_instance, AnyInstance};

use crate::search::ProblemInstance;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn step(self, dir: Direction) -> Cell {
        let (dx, dy) = dir.delta();
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub(crate) fn parse(text: &str) -> Result<Cell> {
        let bad = || Error::InvalidArgument(format!("bad cell {text:?}"));
        let (x, y) = text.split_once(',').ok_or_else(bad)?;
        Ok(Cell::new(x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Right,
    Down,
    Left,
}

impl Direction {
    /// Successor generation order.
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Right, Direction::Down, Direction::Left];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (0, -1),
            Direction::Right => (1, 0),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Maze,
    Sokoban,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Maze => "maze",
            DomainKind::Sokoban => "sokoban",
        }
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maze" => Ok(DomainKind::Maze),
            "sokoban" => Ok(DomainKind::Sokoban),
            other => Err(Error::InvalidArgument(format!("unknown domain {other:?}"))),
        }
    }
}

/// A concrete unit-cost grid domain that can be searched, encoded for the
/// model and written to disk.
pub trait Domain: Clone + Send + Sync + Debug + 'static {
    type State: Clone + Eq + Hash + Debug + Send + Sync;

    const KIND: DomainKind;
    /// Number of planes produced by [`Domain::encode`].
    const CHANNELS: usize = 4;

    fn start(&self) -> Self::State;

    fn goal_reached(&self, state: &Self::State) -> bool;

    /// Unit-cost successors in a fixed order.
    fn moves(&self, state: &Self::State, out: &mut Vec<Self::State>);

    fn encode<S: Scalar>(&self, state: &Self::State) -> FeatureTensor<S>;

    /// Classical heuristic used to generate training searches.
    fn base_heuristic(&self, state: &Self::State) -> f64;

    fn base_heuristic_name() -> &'static str;

    fn format_state(state: &Self::State) -> String;

    fn parse_state(text: &str) -> Result<Self::State>;

    fn into_any(self) -> AnyInstance;

    fn from_any(any: AnyInstance) -> Result<Self>;

    fn width(&self) -> usize;

    fn height(&self) -> usize;
}

pub type StateOf<D> = <D as Domain>::State;

/// A [`Domain`] searchable with `f64` costs; implemented for every domain.
pub trait SearchDomain: Domain + ProblemInstance<f64, State = <Self as Domain>::State> {}

impl<D> SearchDomain for D where D: Domain + ProblemInstance<f64, State = <D as Domain>::State> {}

macro_rules! unit_cost_instance {
    ($ty:ty) => {
        impl<S: Scalar> crate::search::ProblemInstance<S> for $ty {
            type State = <$ty as Domain>::State;

            fn initial_state(&self) -> Self::State {
                Domain::start(self)
            }

            fn is_goal(&self, state: &Self::State) -> bool {
                Domain::goal_reached(self, state)
            }

            fn successors(&self, state: &Self::State, out: &mut Vec<(Self::State, S)>) {
                let mut next = Vec::with_capacity(4);
                Domain::moves(self, state, &mut next);
                out.extend(next.into_iter().map(|s| (s, S::one())));
            }
        }
    };
}

unit_cost_instance!(MazeGrid);
unit_cost_instance!(SokobanLevel);
