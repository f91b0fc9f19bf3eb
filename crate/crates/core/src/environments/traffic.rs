//! Road network for the autonomous-vehicle task.
//!
//! Two horizontal two-lane priority roads (eastbound rows 4 and 7, westbound
//! rows 5 and 8) are crossed by two vertical two-lane ordinary roads
//! (southbound columns 2 and 7, northbound columns 3 and 8). `y` grows
//! northward. Intersection blocks are not states: from a cell whose next cell
//! lies in an intersection, Straight/Left/Right jump to the matching exit lane
//! on the far side, and Stay waits. Elsewhere the first three actions all
//! drive forward and roads end in a U-turn into the opposite lane.

use std::collections::HashMap;

use crate::automata::{Label, PropSet};
use crate::error::Result;
use crate::mdp::{TabularMdp, Transition};

use super::grid::Direction;

pub const STRAIGHT: usize = 0;
pub const LEFT: usize = 1;
pub const RIGHT: usize = 2;
pub const STAY: usize = 3;
pub const ACTION_NAMES: [&str; 4] = ["straight", "left", "right", "stay"];

const COLUMNS: [i32; 7] = [0, 1, 4, 5, 6, 9, 10];
const BLOCK_X: [i32; 2] = [2, 7];
const BLOCK_Y: [i32; 2] = [4, 7];
const STUB_ROWS: [i32; 3] = [3, 6, 9];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoadCell {
    pub x: i32,
    pub y: i32,
    pub heading: Direction,
    pub priority: bool,
}

#[derive(Clone, Debug)]
pub struct RoadMap {
    cells: Vec<RoadCell>,
    index: HashMap<(i32, i32), usize>,
    start: usize,
    goal: usize,
}

fn offset(d: Direction) -> (i32, i32) {
    match d {
        Direction::North => (0, 1),
        Direction::South => (0, -1),
        Direction::East => (1, 0),
        Direction::West => (-1, 0),
    }
}

fn left_of(d: Direction) -> Direction {
    match d {
        Direction::North => Direction::West,
        Direction::West => Direction::South,
        Direction::South => Direction::East,
        Direction::East => Direction::North,
    }
}

fn right_of(d: Direction) -> Direction {
    left_of(left_of(left_of(d)))
}

fn in_intersection(x: i32, y: i32) -> bool {
    BLOCK_X.iter().any(|&b| x == b || x == b + 1) && BLOCK_Y.iter().any(|&b| y == b || y == b + 1)
}

impl RoadMap {
    /// The default residential map: start A = (0, 7), destination B = (10, 4).
    pub fn residential() -> Self {
        let mut cells = Vec::new();
        for &yb in &BLOCK_Y {
            for &x in &COLUMNS {
                cells.push(RoadCell {
                    x,
                    y: yb,
                    heading: Direction::East,
                    priority: true,
                });
                cells.push(RoadCell {
                    x,
                    y: yb + 1,
                    heading: Direction::West,
                    priority: true,
                });
            }
        }
        for &xa in &BLOCK_X {
            for &y in &STUB_ROWS {
                cells.push(RoadCell {
                    x: xa,
                    y,
                    heading: Direction::South,
                    priority: false,
                });
                cells.push(RoadCell {
                    x: xa + 1,
                    y,
                    heading: Direction::North,
                    priority: false,
                });
            }
        }
        let index: HashMap<_, _> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.x, c.y), i))
            .collect();
        let start = index[&(0, 7)];
        let goal = index[&(10, 4)];
        RoadMap {
            cells,
            index,
            start,
            goal,
        }
    }

    pub fn cells(&self) -> &[RoadCell] {
        &self.cells
    }

    pub fn id(&self, x: i32, y: i32) -> Option<usize> {
        self.index.get(&(x, y)).copied()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    /// Cells from which the next move enters an intersection.
    pub fn is_junction(&self, s: usize) -> bool {
        let c = self.cells[s];
        let (dx, dy) = offset(c.heading);
        in_intersection(c.x + dx, c.y + dy)
    }

    /// Successor cell under an action.
    pub fn successor(&self, s: usize, action: usize) -> usize {
        let c = self.cells[s];
        if action == STAY {
            return s;
        }
        let (dx, dy) = offset(c.heading);
        let (nx, ny) = (c.x + dx, c.y + dy);
        if in_intersection(nx, ny) {
            let xa = if BLOCK_X.contains(&nx) { nx } else { nx - 1 };
            let yb = if BLOCK_Y.contains(&ny) { ny } else { ny - 1 };
            let exit = match action {
                LEFT => left_of(c.heading),
                RIGHT => right_of(c.heading),
                _ => c.heading,
            };
            let (ex, ey) = match exit {
                Direction::East => (xa + 2, yb),
                Direction::West => (xa - 1, yb + 1),
                Direction::North => (xa + 1, yb + 2),
                Direction::South => (xa, yb - 1),
            };
            return self.index[&(ex, ey)];
        }
        if let Some(next) = self.id(nx, ny) {
            return next;
        }
        // U-turn into the adjacent opposite lane.
        let (ux, uy) = match c.heading {
            Direction::East => (c.x, c.y + 1),
            Direction::West => (c.x, c.y - 1),
            Direction::North => (c.x - 1, c.y),
            Direction::South => (c.x + 1, c.y),
        };
        self.index[&(ux, uy)]
    }

    pub fn props() -> PropSet {
        PropSet::new(["sp", "pr", "B"]).expect("static universe")
    }

    /// `sp` iff staying at a junction; `pr` iff the next cell is on a
    /// priority road; `B` iff the next cell is the destination.
    pub fn label(&self, s: usize, action: usize, next: usize) -> Label {
        let mut l = Label::EMPTY;
        if action == STAY && self.is_junction(s) {
            l = l.with(0);
        }
        if self.cells[next].priority {
            l = l.with(1);
        }
        if next == self.goal {
            l = l.with(2);
        }
        l
    }

    pub fn to_mdp(&self, discount: f64) -> Result<TabularMdp> {
        let rows = (0..self.cells.len())
            .flat_map(|s| {
                (0..4).map(move |a| {
                    let next = self.successor(s, a);
                    vec![Transition {
                        next,
                        prob: 1.0,
                        label: self.label(s, a, next),
                    }]
                })
            })
            .collect();
        TabularMdp::new(Self::props(), 4, self.start, discount, rows)
    }
}
