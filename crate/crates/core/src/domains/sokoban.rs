use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnyInstance, Cell, Direction, Domain, DomainKind, FeatureTensor};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SokobanLevel {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    goals: Vec<Cell>,
    player: Cell,
    boxes: Vec<Cell>,
    /// Drop pushes that leave a box in a non-goal corner.
    pub prune_corner_deadlocks: bool,
}

/// Player position plus box cells in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SokobanState {
    pub player: Cell,
    pub boxes: Vec<Cell>,
}

impl SokobanState {
    pub fn new(player: Cell, mut boxes: Vec<Cell>) -> Self {
        boxes.sort();
        SokobanState { player, boxes }
    }

    pub fn has_box(&self, c: Cell) -> bool {
        self.boxes.binary_search(&c).is_ok()
    }
}

impl SokobanLevel {
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        mut goals: Vec<Cell>,
        player: Cell,
        mut boxes: Vec<Cell>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || walls.len() != width * height {
            return Err(Error::InconsistentDimensions(format!("{width}x{height} level with {} cells", walls.len())));
        }
        goals.sort();
        boxes.sort();
        let level = SokobanLevel { width, height, walls, goals, player, boxes, prune_corner_deadlocks: false };
        if level.goals.len() != level.boxes.len() {
            return Err(Error::MalformedInstance(format!(
                "{} boxes but {} goal cells",
                level.boxes.len(),
                level.goals.len()
            )));
        }
        let distinct = |v: &[Cell]| v.windows(2).all(|w| w[0] != w[1]);
        if !distinct(&level.goals) || !distinct(&level.boxes) {
            return Err(Error::MalformedInstance("duplicate box or goal cell".into()));
        }
        for &c in level.boxes.iter().chain(&level.goals).chain([&player]) {
            if !level.is_floor(c) {
                return Err(Error::MalformedInstance(format!("{c} is a wall or outside the level")));
            }
        }
        if level.boxes.contains(&player) {
            return Err(Error::MalformedInstance("player stands on a box".into()));
        }
        Ok(level)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goals(&self) -> &[Cell] {
        &self.goals
    }

    pub fn initial_player(&self) -> Cell {
        self.player
    }

    pub fn initial_boxes(&self) -> &[Cell] {
        &self.boxes
    }

    pub fn is_floor(&self, c: Cell) -> bool {
        c.x >= 0
            && c.y >= 0
            && (c.x as usize) < self.width
            && (c.y as usize) < self.height
            && !self.walls[c.y as usize * self.width + c.x as usize]
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        !self.is_floor(c)
    }

    pub fn is_goal_cell(&self, c: Cell) -> bool {
        self.goals.binary_search(&c).is_ok()
    }

    fn dead_corner(&self, c: Cell) -> bool {
        if self.is_goal_cell(c) {
            return false;
        }
        let blocked = |d: Direction| self.is_wall(c.step(d));
        (blocked(Direction::Up) || blocked(Direction::Down)) && (blocked(Direction::Left) || blocked(Direction::Right))
    }

    /// Four player moves; walking into a box pushes it if the cell behind is free floor.
    pub fn successors(&self, state: &SokobanState) -> Vec<(SokobanState, u32)> {
        let mut out = Vec::with_capacity(4);
        for dir in Direction::ALL {
            let target = state.player.step(dir);
            if !self.is_floor(target) {
                continue;
            }
            if let Ok(bi) = state.boxes.binary_search(&target) {
                let dest = target.step(dir);
                if !self.is_floor(dest) || state.has_box(dest) {
                    continue;
                }
                if self.prune_corner_deadlocks && self.dead_corner(dest) {
                    continue;
                }
                let mut boxes = state.boxes.clone();
                boxes[bi] = dest;
                out.push((SokobanState::new(target, boxes), 1));
            } else {
                out.push((SokobanState { player: target, boxes: state.boxes.clone() }, 1));
            }
        }
        out
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32).flat_map(move |y| (0..self.width as i32).map(move |x| Cell::new(x, y)))
    }
}

const MAX_ATTEMPTS: usize = 200;

/// Generates an `n`×`n` level by playing the game backwards.
///
/// The border is wall and roughly one interior cell in ten is a random wall
/// (keeping the floor connected). Boxes start on their goals; a seeded random
/// walk of player moves and box pulls then scatters them. Every pull is the
/// inverse of a legal push, so the level is solvable by construction.
pub fn sokoban_generate(n: usize, boxes: usize, seed: u64) -> Result<SokobanLevel> {
    if n < 3 || (n - 2) * (n - 2) < boxes + 1 {
        return Err(Error::InvalidArgument(format!("{n}x{n} board cannot hold {boxes} boxes and a player")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(level) = try_generate(n, boxes, &mut rng) {
            return Ok(level);
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_ATTEMPTS })
}

fn try_generate(n: usize, box_count: usize, rng: &mut ChaCha8Rng) -> Option<SokobanLevel> {
    let mut walls = vec![false; n * n];
    for y in 0..n {
        for x in 0..n {
            let border = x == 0 || y == 0 || x == n - 1 || y == n - 1;
            walls[y * n + x] = border || rng.gen_bool(0.1);
        }
    }
    let floor: Vec<Cell> =
        (0..n * n).filter(|&i| !walls[i]).map(|i| Cell::new((i % n) as i32, (i / n) as i32)).collect();
    if floor.len() < box_count + 1 || !connected(&walls, n, &floor) {
        return None;
    }
    let picks: Vec<Cell> = floor.choose_multiple(rng, box_count + 1).copied().collect();
    let goals = picks[..box_count].to_vec();
    let mut level = SokobanLevel::new(n, n, walls, goals.clone(), picks[box_count], goals).ok()?;
    if box_count == 0 {
        return Some(level);
    }

    let mut state = SokobanState::new(level.player, level.boxes.clone());
    let steps = 4 * n * n * box_count.max(1);
    for _ in 0..steps {
        let mut pulls = Vec::new();
        let mut walks = Vec::new();
        for dir in Direction::ALL {
            let to = state.player.step(dir);
            if !level.is_floor(to) || state.has_box(to) {
                continue;
            }
            let behind = state.player.step(dir.opposite());
            if let Ok(bi) = state.boxes.binary_search(&behind) {
                pulls.push((to, bi));
            }
            walks.push(to);
        }
        if !pulls.is_empty() && rng.gen_bool(0.5) {
            let &(to, bi) = pulls.choose(rng).unwrap();
            let mut boxes = state.boxes.clone();
            boxes[bi] = state.player;
            state = SokobanState::new(to, boxes);
        } else if let Some(&to) = walks.choose(rng) {
            state.player = to;
        } else {
            break;
        }
    }
    if state.boxes == level.goals {
        return None;
    }
    level.player = state.player;
    level.boxes = state.boxes;
    Some(level)
}

fn connected(walls: &[bool], n: usize, floor: &[Cell]) -> bool {
    let mut seen = vec![false; n * n];
    let mut queue = VecDeque::from([floor[0]]);
    seen[floor[0].y as usize * n + floor[0].x as usize] = true;
    let mut count = 1;
    while let Some(c) = queue.pop_front() {
        for dir in Direction::ALL {
            let d = c.step(dir);
            if d.x < 0 || d.y < 0 || d.x as usize >= n || d.y as usize >= n {
                continue;
            }
            let i = d.y as usize * n + d.x as usize;
            if !walls[i] && !seen[i] {
                seen[i] = true;
                count += 1;
                queue.push_back(d);
            }
        }
    }
    count == floor.len()
}

impl Domain for SokobanLevel {
    type State = SokobanState;

    const KIND: DomainKind = DomainKind::Sokoban;

    fn start(&self) -> SokobanState {
        SokobanState::new(self.player, self.boxes.clone())
    }

    fn goal_reached(&self, state: &SokobanState) -> bool {
        state.boxes == self.goals
    }

    fn moves(&self, state: &SokobanState, out: &mut Vec<SokobanState>) {
        out.extend(self.successors(state).into_iter().map(|(s, _)| s));
    }

    /// Planes: walls, player, boxes, goal cells.
    fn encode<S: Scalar>(&self, state: &SokobanState) -> FeatureTensor<S> {
        let mut t = FeatureTensor::zeros(4, self.height, self.width);
        let one = S::one();
        for c in self.cells() {
            if self.is_wall(c) {
                t.set(0, c.y as usize, c.x as usize, one);
            }
        }
        t.set(1, state.player.y as usize, state.player.x as usize, one);
        for b in &state.boxes {
            t.set(2, b.y as usize, b.x as usize, one);
        }
        for g in &self.goals {
            t.set(3, g.y as usize, g.x as usize, one);
        }
        t
    }

    /// Sum over boxes of the Manhattan distance to the nearest goal cell.
    fn base_heuristic(&self, state: &SokobanState) -> f64 {
        state.boxes.iter().map(|b| self.goals.iter().map(|g| b.manhattan(*g)).min().unwrap_or(0) as f64).sum()
    }

    fn base_heuristic_name() -> &'static str {
        "box-goal-manhattan"
    }

    fn format_state(state: &SokobanState) -> String {
        let mut s = state.player.to_string();
        for b in &state.boxes {
            s.push(';');
            s.push_str(&b.to_string());
        }
        s
    }

    fn parse_state(text: &str) -> Result<SokobanState> {
        let mut parts = text.split(';');
        let player = Cell::parse(parts.next().unwrap_or_default())?;
        let boxes = parts.map(Cell::parse).collect::<Result<Vec<_>>>()?;
        Ok(SokobanState::new(player, boxes))
    }

    fn into_any(self) -> AnyInstance {
        AnyInstance::Sokoban(self)
    }

    fn from_any(any: AnyInstance) -> Result<Self> {
        match any {
            AnyInstance::Sokoban(s) => Ok(s),
            AnyInstance::Maze(_) => Err(Error::MalformedInstance("expected sokoban, found a maze".into())),
        }
    }

    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }
}
