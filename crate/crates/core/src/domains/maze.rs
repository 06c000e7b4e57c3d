use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnyInstance, Cell, Direction, Domain, DomainKind, FeatureTensor};
use crate::{Error, Result, Scalar};

/// Rectangular maze whose walls occupy whole cells, with teleport pairs.
///
/// Stepping onto a teleport endpoint moves the agent to the paired endpoint
/// within the same unit-cost move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MazeGrid {
    width: usize,
    height: usize,
    passable: Vec<bool>,
    teleports: Vec<(Cell, Cell)>,
    start: Cell,
    goal: Cell,
    partner: Vec<Option<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MazeState {
    pub position: Cell,
}

impl MazeGrid {
    pub fn new(
        width: usize,
        height: usize,
        passable: Vec<bool>,
        mut teleports: Vec<(Cell, Cell)>,
        start: Cell,
        goal: Cell,
    ) -> Result<Self> {
        // Canonical order: endpoints and pairs sorted row-major, which is also
        // the digit order of the text format.
        let row_major = |c: &Cell| (c.y, c.x);
        for pair in &mut teleports {
            if row_major(&pair.1) < row_major(&pair.0) {
                *pair = (pair.1, pair.0);
            }
        }
        teleports.sort_by_key(|p| row_major(&p.0));
        if width == 0 || height == 0 || passable.len() != width * height {
            return Err(Error::InconsistentDimensions(format!("{width}x{height} grid with {} cells", passable.len())));
        }
        let mut grid =
            MazeGrid { width, height, passable, teleports, start, goal, partner: vec![None; width * height] };
        for (what, cell) in [("start", start), ("goal", goal)] {
            if !grid.is_passable(cell) {
                return Err(Error::MalformedInstance(format!("{what} {cell} is not a passable cell")));
            }
        }
        for &(a, b) in &grid.teleports.clone() {
            for (cell, other) in [(a, b), (b, a)] {
                if !grid.is_passable(cell) || cell == start || cell == goal || cell == other {
                    return Err(Error::MalformedInstance(format!("invalid teleport endpoint {cell}")));
                }
                let i = grid.offset(cell).unwrap();
                if grid.partner[i].is_some() {
                    return Err(Error::MalformedInstance(format!("teleport endpoint {cell} used twice")));
                }
                grid.partner[i] = Some(other);
            }
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    /// Teleport pairs in row-major order of their first endpoint.
    pub fn teleports(&self) -> &[(Cell, Cell)] {
        &self.teleports
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn offset(&self, c: Cell) -> Option<usize> {
        self.in_bounds(c).then(|| c.y as usize * self.width + c.x as usize)
    }

    pub fn is_passable(&self, c: Cell) -> bool {
        self.offset(c).is_some_and(|i| self.passable[i])
    }

    pub fn teleport_partner(&self, c: Cell) -> Option<Cell> {
        self.offset(c).and_then(|i| self.partner[i])
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
    }

    /// Up/right/down/left moves into passable cells, resolving teleports.
    pub fn successors(&self, state: MazeState) -> Vec<(MazeState, u32)> {
        let mut out = Vec::with_capacity(4);
        for dir in Direction::ALL {
            let next = state.position.step(dir);
            if !self.is_passable(next) {
                continue;
            }
            let position = self.teleport_partner(next).unwrap_or(next);
            out.push((MazeState { position }, 1));
        }
        out
    }

    /// Rotates clockwise by `quarter_turns` × 90°.
    pub fn rotate(&self, quarter_turns: u32) -> MazeGrid {
        let mut grid = self.clone();
        for _ in 0..quarter_turns % 4 {
            grid = grid.rotate_once();
        }
        grid
    }

    fn rotate_once(&self) -> MazeGrid {
        let (w, h) = (self.height, self.width);
        let map = |c: Cell| Cell::new(self.height as i32 - 1 - c.y, c.x);
        let mut passable = vec![false; w * h];
        for c in self.cells() {
            let r = map(c);
            passable[r.y as usize * w + r.x as usize] = self.is_passable(c);
        }
        let teleports = self.teleports.iter().map(|&(a, b)| (map(a), map(b))).collect();
        MazeGrid::new(w, h, passable, teleports, map(self.start), map(self.goal)).expect("rotation preserves validity")
    }
}

/// Generates an `n`×`n`-room maze.
///
/// Rooms sit at even coordinates of a `(2n-1)`×`(2n-1)` grid, with odd
/// positions holding walls. A seeded recursive backtracker carves a perfect
/// maze; each remaining wall between two rooms is then removed with
/// probability `wall_break_rate`, and `teleport_pairs` pairs of distinct
/// passable cells (never the start or goal) become teleports. The start is
/// the top-left room, the goal the bottom-right one.
pub fn maze_generate(n: usize, seed: u64, wall_break_rate: f64, teleport_pairs: usize) -> Result<MazeGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("maze side must be at least 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&wall_break_rate) {
        return Err(Error::InvalidArgument(format!("wall break rate {wall_break_rate} outside [0, 1]")));
    }
    if teleport_pairs > 9 {
        return Err(Error::InvalidArgument("at most 9 teleport pairs fit the text format".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 2 * n - 1;
    let mut passable = vec![false; side * side];
    let at = |x: usize, y: usize| y * side + x;

    let mut visited = vec![false; n * n];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    passable[at(0, 0)] = true;
    while let Some(&(rx, ry)) = stack.last() {
        let mut options: Vec<(usize, usize)> = Vec::with_capacity(4);
        for dir in Direction::ALL {
            let (dx, dy) = dir.delta();
            let (nx, ny) = (rx as i32 + dx, ry as i32 + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < n && (ny as usize) < n && !visited[ny as usize * n + nx as usize] {
                options.push((nx as usize, ny as usize));
            }
        }
        match options.choose(&mut rng) {
            Some(&(nx, ny)) => {
                visited[ny * n + nx] = true;
                passable[at(2 * nx, 2 * ny)] = true;
                passable[at(rx + nx, ry + ny)] = true;
                stack.push((nx, ny));
            }
            None => {
                stack.pop();
            }
        }
    }

    for y in 0..side {
        for x in 0..side {
            // Walls between two rooms have exactly one odd coordinate.
            if (x + y) % 2 == 1 && !passable[at(x, y)] && rng.gen_bool(wall_break_rate) {
                passable[at(x, y)] = true;
            }
        }
    }

    let start = Cell::new(0, 0);
    let goal = Cell::new(side as i32 - 1, side as i32 - 1);
    let free: Vec<Cell> = (0..side)
        .flat_map(|y| (0..side).map(move |x| (x, y)))
        .filter(|&(x, y)| passable[at(x, y)])
        .map(|(x, y)| Cell::new(x as i32, y as i32))
        .filter(|&c| c != start && c != goal)
        .collect();
    let needed = 2 * teleport_pairs;
    if free.len() < needed {
        return Err(Error::TeleportPlacement { needed, available: free.len() });
    }
    let chosen: Vec<Cell> = free.choose_multiple(&mut rng, needed).copied().collect();
    let teleports = chosen.chunks(2).map(|p| (p[0], p[1])).collect();
    MazeGrid::new(side, side, passable, teleports, start, goal)
}

impl Domain for MazeGrid {
    type State = MazeState;

    const KIND: DomainKind = DomainKind::Maze;

    fn start(&self) -> MazeState {
        MazeState { position: self.start }
    }

    fn goal_reached(&self, state: &MazeState) -> bool {
        state.position == self.goal
    }

    fn moves(&self, state: &MazeState, out: &mut Vec<MazeState>) {
        out.extend(self.successors(*state).into_iter().map(|(s, _)| s));
    }

    /// Planes: walls, agent, goal, teleport endpoints.
    fn encode<S: Scalar>(&self, state: &MazeState) -> FeatureTensor<S> {
        let mut t = FeatureTensor::zeros(4, self.height, self.width);
        let one = S::one();
        for c in self.cells() {
            let (x, y) = (c.x as usize, c.y as usize);
            if !self.is_passable(c) {
                t.set(0, y, x, one);
            } else if self.teleport_partner(c).is_some() {
                t.set(3, y, x, one);
            }
        }
        t.set(1, state.position.y as usize, state.position.x as usize, one);
        t.set(2, self.goal.y as usize, self.goal.x as usize, one);
        t
    }

    /// Manhattan distance to the goal, ignoring teleports.
    fn base_heuristic(&self, state: &MazeState) -> f64 {
        state.position.manhattan(self.goal) as f64
    }

    fn base_heuristic_name() -> &'static str {
        "manhattan"
    }

    fn format_state(state: &MazeState) -> String {
        state.position.to_string()
    }

    fn parse_state(text: &str) -> Result<MazeState> {
        Ok(MazeState { position: Cell::parse(text)? })
    }

    fn into_any(self) -> AnyInstance {
        AnyInstance::Maze(self)
    }

    fn from_any(any: AnyInstance) -> Result<Self> {
        match any {
            AnyInstance::Maze(m) => Ok(m),
            AnyInstance::Sokoban(_) => Err(Error::MalformedInstance("expected a maze, found sokoban".into())),
        }
    }

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{astar, shortest_path_oracle, SearchOptions};

    fn open_grid(w: usize, h: usize, teleports: Vec<(Cell, Cell)>) -> MazeGrid {
        MazeGrid::new(w, h, vec![true; w * h], teleports, Cell::new(0, 0), Cell::new(w as i32 - 1, h as i32 - 1))
            .unwrap()
    }

    fn optimal_cost(grid: &MazeGrid) -> Option<f64> {
        let costs = shortest_path_oracle::<_, f64>(grid, 100_000).unwrap();
        costs[&Domain::start(grid)]
    }

    #[test]
    fn smallest_maze_is_solvable() {
        let grid = maze_generate(2, 7, 0.0, 0).unwrap();
        assert_eq!((grid.width(), grid.height()), (3, 3));
        assert!(optimal_cost(&grid).is_some());
    }

    #[test]
    fn four_pairs_give_eight_distinct_endpoints() {
        for seed in 0..20 {
            let grid = maze_generate(6, seed, 0.1, 4).unwrap();
            let mut cells: Vec<Cell> = grid.teleports().iter().flat_map(|&(a, b)| [a, b]).collect();
            cells.sort();
            cells.dedup();
            assert_eq!(cells.len(), 8);
        }
    }

    #[test]
    fn teleport_placement_failure() {
        let err = maze_generate(2, 0, 0.0, 5).unwrap_err();
        assert!(matches!(err, Error::TeleportPlacement { needed: 10, .. }));
    }

    #[test]
    fn generated_mazes_are_solvable() {
        for seed in 0..100 {
            let grid = maze_generate(15, seed, 0.1, 4).unwrap();
            assert!(optimal_cost(&grid).is_some(), "seed {seed}");
        }
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(maze_generate(10, 3, 0.1, 4).unwrap(), maze_generate(10, 3, 0.1, 4).unwrap());
        assert_ne!(maze_generate(10, 3, 0.1, 4).unwrap(), maze_generate(10, 4, 0.1, 4).unwrap());
    }

    #[test]
    fn open_center_has_four_unit_moves() {
        let grid = open_grid(3, 3, vec![]);
        let succ = grid.successors(MazeState { position: Cell::new(1, 1) });
        assert_eq!(succ.len(), 4);
        assert!(succ.iter().all(|&(_, c)| c == 1));
    }

    #[test]
    fn stepping_on_an_endpoint_teleports() {
        let a = Cell::new(2, 0);
        let b = Cell::new(0, 3);
        let grid = open_grid(4, 4, vec![(a, b)]);
        let succ = grid.successors(MazeState { position: Cell::new(1, 0) });
        assert!(succ.contains(&(MazeState { position: b }, 1)));
        assert!(!succ.iter().any(|(s, _)| s.position == a));
    }

    #[test]
    fn plain_moves_are_symmetric() {
        let grid = maze_generate(8, 11, 0.2, 4).unwrap();
        let endpoint = |c: Cell| grid.teleport_partner(c).is_some();
        for c in grid.cells().filter(|&c| grid.is_passable(c) && !endpoint(c)) {
            for (next, _) in grid.successors(MazeState { position: c }) {
                if endpoint(next.position) || next.position.manhattan(c) != 1 {
                    continue;
                }
                let back = grid.successors(next);
                assert!(back.iter().any(|(s, _)| s.position == c), "{c} -> {}", next.position);
            }
        }
    }

    #[test]
    fn four_quarter_turns_are_identity() {
        let grid = maze_generate(7, 5, 0.1, 4).unwrap();
        assert_eq!(grid.rotate(2).rotate(2), grid);
        assert_eq!(grid.rotate(4), grid);
    }

    #[test]
    fn half_turn_swaps_corners() {
        let grid = maze_generate(7, 5, 0.1, 4).unwrap();
        let r = grid.rotate(2);
        assert_eq!(r.start(), Cell::new(12, 12));
        assert_eq!(r.goal(), Cell::new(0, 0));
        let q = grid.rotate(1);
        assert_eq!(q.start(), Cell::new(12, 0));
    }

    #[test]
    fn rotation_preserves_optimal_cost() {
        for seed in 0..50 {
            let grid = maze_generate(8, seed, 0.1, 4).unwrap();
            let base = optimal_cost(&grid);
            for turns in 1..=3 {
                assert_eq!(optimal_cost(&grid.rotate(turns)), base, "seed {seed} turns {turns}");
            }
        }
    }

    #[test]
    fn plan_cost_equals_length() {
        let grid = maze_generate(10, 1, 0.1, 4).unwrap();
        let out = astar::<_, _, f64>(&grid, |_| 0.0, SearchOptions::default());
        let plan = out.plan.unwrap();
        assert_eq!(plan.total_cost, plan.len() as f64);
        assert!(plan.validate(&grid));
    }

    #[test]
    fn encoding_planes() {
        let grid = maze_generate(5, 2, 0.1, 4).unwrap();
        let t: FeatureTensor<f64> = grid.encode(&Domain::start(&grid));
        assert_eq!(t.get(1, 0, 0), 1.0);
        assert_eq!(t.plane_sum(1), 1.0);
        assert_eq!(t.plane_sum(2), 1.0);
        assert_eq!(t.plane_sum(3), 8.0);
        assert!(t.values.iter().all(|&v| v == 0.0 || v == 1.0));
    }
}
