//! Grid maps and the slippery four-action grid world built from them.
//!
//! Map files start with `width:`, `height:` and an optional `props:` header,
//! followed by a `(2h+1) × (2w+1)` character grid. Cell `(x, y)` sits at row
//! `2y+1`, column `2x+1` and holds `.`, `S` (start) or a one-letter
//! proposition; the characters between neighbouring cells are `#` for a wall
//! and anything else for an opening. Row 0 is the top (`y` grows southward).

use std::collections::HashSet;
use std::path::Path;

use crate::automata::{Label, PropSet};
use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};

pub type Cell = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    /// The two perpendicular directions.
    pub fn lateral(self) -> [Direction; 2] {
        match self {
            Direction::North | Direction::South => [Direction::East, Direction::West],
            Direction::East | Direction::West => [Direction::North, Direction::South],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    props: PropSet,
    /// Unordered blocked neighbour pairs, stored with the smaller cell first.
    walls: HashSet<(Cell, Cell)>,
    landmarks: Vec<Option<usize>>,
    start: Cell,
}

fn wall_key(a: Cell, b: Cell) -> (Cell, Cell) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut width = None;
        let mut height = None;
        let mut props_line = None;
        let mut lines = text.lines().enumerate().peekable();
        while let Some(&(i, line)) = lines.peek() {
            let t = line.trim();
            let field = |key: &str| t.strip_prefix(key).map(str::trim);
            if t.is_empty() {
            } else if let Some(v) = field("width:") {
                width = Some(
                    v.parse::<usize>()
                        .map_err(|_| Error::parse(i + 1, 1, "bad width"))?,
                );
            } else if let Some(v) = field("height:") {
                height = Some(
                    v.parse::<usize>()
                        .map_err(|_| Error::parse(i + 1, 1, "bad height"))?,
                );
            } else if let Some(v) = field("props:") {
                props_line = Some((i + 1, v.to_string()));
            } else {
                break;
            }
            lines.next();
        }
        let (w, h) = match (width, height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => (w, h),
            _ => {
                return Err(Error::parse(
                    1,
                    1,
                    "map needs positive `width:` and `height:`",
                ))
            }
        };
        let grid: Vec<(usize, Vec<char>)> =
            lines.map(|(i, l)| (i + 1, l.chars().collect())).collect();
        if grid.len() < 2 * h + 1 {
            return Err(Error::parse(
                grid.last().map_or(1, |g| g.0),
                1,
                format!("expected {} grid rows, found {}", 2 * h + 1, grid.len()),
            ));
        }
        let at = |r: usize, c: usize| grid[r].1.get(c).copied().unwrap_or(' ');
        let mut letters: Vec<char> = Vec::new();
        let mut cells = vec![None; w * h];
        let mut start = None;
        for y in 0..h {
            for x in 0..w {
                let ch = at(2 * y + 1, 2 * x + 1);
                match ch {
                    '.' => {}
                    'S' => {
                        if start.replace((x, y)).is_some() {
                            return Err(Error::parse(
                                grid[2 * y + 1].0,
                                2 * x + 2,
                                "second start cell",
                            ));
                        }
                    }
                    c if c.is_ascii_alphabetic() => {
                        if !letters.contains(&c) {
                            letters.push(c);
                        }
                        cells[y * w + x] = Some(c);
                    }
                    c => {
                        return Err(Error::parse(
                            grid[2 * y + 1].0,
                            2 * x + 2,
                            format!("unexpected cell character `{c}`"),
                        ))
                    }
                }
            }
        }
        let props = match props_line {
            Some((line, names)) => {
                let p = PropSet::new(names.split_whitespace())
                    .map_err(|e| Error::parse(line, 1, e.to_string()))?;
                if let Some(c) = letters
                    .iter()
                    .find(|c| p.index_of(&c.to_string()).is_none())
                {
                    return Err(Error::parse(
                        line,
                        1,
                        format!("landmark `{c}` missing from props"),
                    ));
                }
                p
            }
            None => PropSet::new(letters.iter().map(|c| c.to_string()))?,
        };
        let landmarks = cells
            .iter()
            .map(|c| c.map(|c| props.index_of(&c.to_string()).expect("checked above")))
            .collect();
        let mut walls = HashSet::new();
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w && at(2 * y + 1, 2 * x + 2) == '#' {
                    walls.insert(wall_key((x, y), (x + 1, y)));
                }
                if y + 1 < h && at(2 * y + 2, 2 * x + 1) == '#' {
                    walls.insert(wall_key((x, y), (x, y + 1)));
                }
            }
        }
        Ok(GridMap {
            width: w,
            height: h,
            props,
            walls,
            landmarks,
            start: start.ok_or_else(|| Error::parse(1, 1, "map has no start cell `S`"))?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn props(&self) -> &PropSet {
        &self.props
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn cell_id(&self, (x, y): Cell) -> usize {
        y * self.width + x
    }

    pub fn cell(&self, id: usize) -> Cell {
        (id % self.width, id / self.width)
    }

    /// Proposition index of the landmark at a cell.
    pub fn landmark(&self, c: Cell) -> Option<usize> {
        self.landmarks[self.cell_id(c)]
    }

    /// Cells holding the given proposition.
    pub fn cells_with(&self, prop: &str) -> Vec<Cell> {
        let Some(p) = self.props.index_of(prop) else {
            return Vec::new();
        };
        (0..self.width * self.height)
            .filter(|&i| self.landmarks[i] == Some(p))
            .map(|i| self.cell(i))
            .collect()
    }

    pub fn blocked(&self, a: Cell, b: Cell) -> bool {
        self.walls.contains(&wall_key(a, b))
    }

    /// Result of moving one cell; walls and the border leave the agent put.
    pub fn neighbour(&self, c @ (x, y): Cell, d: Direction) -> Cell {
        let target = match d {
            Direction::North if y > 0 => (x, y - 1),
            Direction::South if y + 1 < self.height => (x, y + 1),
            Direction::West if x > 0 => (x - 1, y),
            Direction::East if x + 1 < self.width => (x + 1, y),
            _ => return c,
        };
        if self.blocked(c, target) {
            c
        } else {
            target
        }
    }

    /// Label emitted on arriving in `to` from a different cell.
    pub fn arrival_label(&self, from: Cell, to: Cell) -> Label {
        match self.landmark(to) {
            Some(p) if from != to => Label::EMPTY.with(p),
            _ => Label::EMPTY,
        }
    }

    /// Builds the grid world: actions N/E/S/W, the intended move succeeds
    /// with probability `1 - 2·slip` and each perpendicular move happens with
    /// probability `slip`. A move that would cross a wall stays in place.
    pub fn to_mdp(&self, slip: f64, discount: f64) -> Result<TabularMdp> {
        if !(0.0..=0.5).contains(&slip) {
            return Err(Error::input(format!(
                "slip probability {slip} outside [0, 0.5]"
            )));
        }
        let mut rows = Vec::with_capacity(self.width * self.height * 4);
        for id in 0..self.width * self.height {
            let c = self.cell(id);
            for d in Direction::ALL {
                let [l1, l2] = d.lateral();
                let mut row: Vec<Transition> = Vec::with_capacity(3);
                for (dir, p) in [(d, 1.0 - 2.0 * slip), (l1, slip), (l2, slip)] {
                    if p == 0.0 {
                        continue;
                    }
                    let to = self.neighbour(c, dir);
                    let next = self.cell_id(to);
                    match row.iter_mut().find(|t| t.next == next) {
                        Some(t) => t.prob += p,
                        None => row.push(Transition {
                            next,
                            prob: p,
                            label: self.arrival_label(c, to),
                        }),
                    }
                }
                rows.push(row);
            }
        }
        TabularMdp::new(
            self.props.clone(),
            4,
            self.cell_id(self.start),
            discount,
            rows,
        )
    }
}
