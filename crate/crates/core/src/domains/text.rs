//! Instance files.
//!
//! ```text
//! maze            sokoban
//! 5 3             6 3
//! S.1.#           ######
//! #.#.#           #@$ .#
//! ..1.G           ######
//! ```
//!
//! Mazes: `#` wall, `.` passable, `S` start, `G` goal, digits `1`–`9`
//! teleport endpoints (each digit exactly twice). Sokoban uses the standard
//! glyphs `#`, space, `@`, `$`, `.`, `*` (box on goal) and `+` (player on
//! goal); short Sokoban lines are padded with floor.

use std::path::Path;

use super::{Cell, Domain, DomainKind, MazeGrid, SokobanLevel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyInstance {
    Maze(MazeGrid),
    Sokoban(SokobanLevel),
}

impl AnyInstance {
    pub fn kind(&self) -> DomainKind {
        match self {
            AnyInstance::Maze(_) => DomainKind::Maze,
            AnyInstance::Sokoban(_) => DomainKind::Sokoban,
        }
    }

    pub fn parse(text: &str) -> Result<AnyInstance> {
        let mut lines = text.lines();
        let kind: DomainKind =
            lines.next().ok_or_else(|| Error::MalformedInstance("empty file".into()))?.trim().parse()?;
        let dims = lines.next().ok_or_else(|| Error::MalformedInstance("missing dimensions line".into()))?;
        let (w, h) = dims
            .trim()
            .split_once(' ')
            .and_then(|(w, h)| Some((w.parse::<usize>().ok()?, h.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| Error::InconsistentDimensions(format!("bad dimensions line {dims:?}")))?;
        let rows: Vec<&str> = lines.collect();
        let rows = trim_trailing_empty(rows);
        if rows.len() != h {
            return Err(Error::InconsistentDimensions(format!("expected {h} rows, found {}", rows.len())));
        }
        match kind {
            DomainKind::Maze => parse_maze(w, h, &rows).map(AnyInstance::Maze),
            DomainKind::Sokoban => parse_sokoban(w, h, &rows).map(AnyInstance::Sokoban),
        }
    }

    pub fn render(&self) -> String {
        match self {
            AnyInstance::Maze(m) => render_maze(m),
            AnyInstance::Sokoban(s) => render_sokoban(s),
        }
    }

    pub fn load(path: &Path) -> Result<AnyInstance> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        AnyInstance::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Loads an instance file of a known domain.
pub fn load_instance<D: Domain>(path: &Path) -> Result<D> {
    D::from_any(AnyInstance::load(path)?)
}

fn trim_trailing_empty(mut rows: Vec<&str>) -> Vec<&str> {
    while rows.last().is_some_and(|r| r.is_empty()) {
        rows.pop();
    }
    rows
}

fn parse_maze(w: usize, h: usize, rows: &[&str]) -> Result<MazeGrid> {
    let mut passable = vec![false; w * h];
    let mut start = None;
    let mut goal = None;
    let mut endpoints: [Vec<Cell>; 9] = Default::default();
    for (y, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != w {
            return Err(Error::InconsistentDimensions(format!("row {y} has {} cells, expected {w}", chars.len())));
        }
        for (x, ch) in chars.into_iter().enumerate() {
            let cell = Cell::new(x as i32, y as i32);
            passable[y * w + x] = ch != '#';
            match ch {
                '#' | '.' => {}
                'S' | 'G' => {
                    let slot = if ch == 'S' { &mut start } else { &mut goal };
                    if slot.replace(cell).is_some() {
                        return Err(Error::MalformedInstance(format!("more than one {ch:?}")));
                    }
                }
                '1'..='9' => endpoints[ch as usize - '1' as usize].push(cell),
                _ => return Err(Error::MalformedCharacter { line: y + 3, ch }),
            }
        }
    }
    let mut teleports = Vec::new();
    for (d, cells) in endpoints.iter().enumerate() {
        match cells.len() {
            0 => {}
            2 => teleports.push((cells[0], cells[1])),
            _ => return Err(Error::UnpairedTeleport(char::from(b'1' + d as u8))),
        }
    }
    let start = start.ok_or_else(|| Error::MalformedInstance("no start 'S'".into()))?;
    let goal = goal.ok_or_else(|| Error::MalformedInstance("no goal 'G'".into()))?;
    MazeGrid::new(w, h, passable, teleports, start, goal)
}

fn render_maze(m: &MazeGrid) -> String {
    let mut grid: Vec<Vec<char>> = (0..m.height())
        .map(|y| (0..m.width()).map(|x| if m.is_passable(Cell::new(x as i32, y as i32)) { '.' } else { '#' }).collect())
        .collect();
    let mut put = |c: Cell, ch: char| grid[c.y as usize][c.x as usize] = ch;
    put(m.start(), 'S');
    put(m.goal(), 'G');
    for (i, &(a, b)) in m.teleports().iter().enumerate() {
        let ch = char::from(b'1' + i as u8);
        put(a, ch);
        put(b, ch);
    }
    let mut out = format!("maze\n{} {}\n", m.width(), m.height());
    for row in grid {
        out.extend(row);
        out.push('\n');
    }
    out
}

fn parse_sokoban(w: usize, h: usize, rows: &[&str]) -> Result<SokobanLevel> {
    let mut walls = vec![false; w * h];
    let mut goals = Vec::new();
    let mut boxes = Vec::new();
    let mut player = None;
    for (y, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() > w {
            return Err(Error::InconsistentDimensions(format!("row {y} has {} cells, expected {w}", chars.len())));
        }
        for x in 0..w {
            let ch = chars.get(x).copied().unwrap_or(' ');
            let cell = Cell::new(x as i32, y as i32);
            let (wall, goal, bx, pl) = match ch {
                '#' => (true, false, false, false),
                ' ' | '-' | '_' => (false, false, false, false),
                '.' => (false, true, false, false),
                '$' => (false, false, true, false),
                '*' => (false, true, true, false),
                '@' => (false, false, false, true),
                '+' => (false, true, false, true),
                _ => return Err(Error::MalformedCharacter { line: y + 3, ch }),
            };
            walls[y * w + x] = wall;
            if goal {
                goals.push(cell);
            }
            if bx {
                boxes.push(cell);
            }
            if pl && player.replace(cell).is_some() {
                return Err(Error::MalformedInstance("more than one player".into()));
            }
        }
    }
    let player = player.ok_or_else(|| Error::MalformedInstance("no player".into()))?;
    SokobanLevel::new(w, h, walls, goals, player, boxes)
}

fn render_sokoban(s: &SokobanLevel) -> String {
    let mut out = format!("sokoban\n{} {}\n", s.width(), s.height());
    for y in 0..s.height() as i32 {
        for x in 0..s.width() as i32 {
            let c = Cell::new(x, y);
            let goal = s.is_goal_cell(c);
            let ch = if s.is_wall(c) {
                '#'
            } else if s.initial_player() == c {
                if goal {
                    '+'
                } else {
                    '@'
                }
            } else if s.initial_boxes().contains(&c) {
                if goal {
                    '*'
                } else {
                    '$'
                }
            } else if goal {
                '.'
            } else {
                ' '
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::domains::{maze_generate, sokoban_generate, FeatureTensor, MazeState};

    #[test]
    fn maze_round_trip() {
        for seed in 0..20 {
            let m = AnyInstance::Maze(maze_generate(6, seed, 0.2, 4).unwrap());
            let text = m.render();
            let back = AnyInstance::parse(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.render(), text);
        }
    }

    #[test]
    fn sokoban_round_trip() {
        for seed in 0..20 {
            let s = AnyInstance::Sokoban(sokoban_generate(8, 2, seed).unwrap());
            assert_eq!(AnyInstance::parse(&s.render()).unwrap(), s);
        }
    }

    #[test]
    fn single_teleport_digit_is_rejected() {
        let text = "maze\n3 3\nS.3\n...\n..G\n";
        assert!(matches!(AnyInstance::parse(text), Err(Error::UnpairedTeleport('3'))));
    }

    #[test]
    fn bad_glyph_and_dimensions() {
        assert!(matches!(AnyInstance::parse("maze\n3 1\nS?G\n"), Err(Error::MalformedCharacter { ch: '?', .. })));
        assert!(matches!(AnyInstance::parse("maze\n3 2\nS.G\n"), Err(Error::InconsistentDimensions(_))));
        assert!(matches!(AnyInstance::parse("maze\n4 1\nS.G\n"), Err(Error::InconsistentDimensions(_))));
    }

    #[test]
    fn overlapping_sokoban_glyphs() {
        let text = "sokoban\n7 3\n#######\n#+*$  #\n#######\n";
        let AnyInstance::Sokoban(l) = AnyInstance::parse(text).unwrap() else { panic!() };
        assert_eq!(l.initial_player(), Cell::new(1, 1));
        assert_eq!(l.goals(), &[Cell::new(1, 1), Cell::new(2, 1)]);
        assert_eq!(l.initial_boxes(), &[Cell::new(2, 1), Cell::new(3, 1)]);
        // '+' is not accepted in place of two players.
        assert!(AnyInstance::parse("sokoban\n4 1\n+@.$\n").is_err());
    }

    #[test]
    fn encoding_agrees_with_text() {
        let text = "maze\n4 3\nS.1#\n#..#\n1.#G\n";
        let AnyInstance::Maze(m) = AnyInstance::parse(text).unwrap() else { panic!() };
        let t: FeatureTensor<f64> = m.encode(&MazeState { position: m.start() });
        for (y, row) in text.lines().skip(2).enumerate() {
            for (x, ch) in row.chars().enumerate() {
                assert_eq!(t.get(0, y, x) == 1.0, ch == '#');
                assert_eq!(t.get(1, y, x) == 1.0, ch == 'S');
                assert_eq!(t.get(2, y, x) == 1.0, ch == 'G');
                assert_eq!(t.get(3, y, x) == 1.0, ch.is_ascii_digit());
            }
        }
    }

    proptest! {
        #[test]
        fn generated_instances_round_trip(seed in 0u64..10_000, n in 2usize..9, rate in 0.0f64..1.0) {
            let pairs = if n >= 3 { 4 } else { 0 };
            let m = AnyInstance::Maze(maze_generate(n, seed, rate, pairs).unwrap());
            prop_assert_eq!(AnyInstance::parse(&m.render()).unwrap(), m);
        }
    }
}
