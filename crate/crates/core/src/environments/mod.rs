//! Benchmark worlds and their ground-truth reward machines.

pub mod grid;
pub mod traffic;

pub use grid::{Direction, GridMap};
pub use traffic::RoadMap;

use crate::automata::{parse_machine, RewardMachine};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const SLIP: f64 = 0.05;
pub const DISCOUNT: f64 = 0.9;

pub const OFFICE_MAP: &str = include_str!("../../data/maps/office.map");
pub const CRAFT_MAP: &str = include_str!("../../data/maps/craft.map");
pub const CRAFT_SMALL_MAP: &str = include_str!("../../data/maps/craft-small.map");

const OFFICE_MACHINES: [(&str, &str); 4] = [
    ("2.1", include_str!("../../data/machines/office-2.1.rm")),
    ("2.2", include_str!("../../data/machines/office-2.2.rm")),
    ("2.3", include_str!("../../data/machines/office-2.3.rm")),
    ("2.4", include_str!("../../data/machines/office-2.4.rm")),
];
const CRAFT_MACHINES: [(&str, &str); 4] = [
    ("3.1", include_str!("../../data/machines/craft-3.1.rm")),
    ("3.2", include_str!("../../data/machines/craft-3.2.rm")),
    ("3.3", include_str!("../../data/machines/craft-3.3.rm")),
    ("3.4", include_str!("../../data/machines/craft-3.4.rm")),
];
const TRAFFIC_MACHINE: &str = include_str!("../../data/machines/traffic.rm");
const TRAFFIC_INFERRED: &str = include_str!("../../data/machines/traffic-inferred.rm");

/// A task: ground-truth machine plus episode settings.
#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub id: String,
    pub machine: RewardMachine,
    pub eplength: usize,
    /// Counterexample batching period `N`.
    pub batch: usize,
    goal: Vec<bool>,
}

impl TaskSpec {
    pub fn new(
        id: impl Into<String>,
        machine: RewardMachine,
        eplength: usize,
        batch: usize,
    ) -> Result<Self> {
        if eplength == 0 || batch == 0 {
            return Err(Error::input("eplength and batch period must be positive"));
        }
        let goal = machine.goal_states();
        Ok(TaskSpec {
            id: id.into(),
            machine,
            eplength,
            batch,
            goal,
        })
    }

    /// Episodes end once the ground-truth machine enters a goal state.
    pub fn is_terminal(&self, v: usize) -> bool {
        self.goal[v]
    }
}

pub fn office_world() -> Result<(TabularMdp, Vec<TaskSpec>)> {
    office_world_with(&GridMap::parse(OFFICE_MAP)?)
}

pub fn office_world_with(map: &GridMap) -> Result<(TabularMdp, Vec<TaskSpec>)> {
    grid_family(map, "office", &OFFICE_MACHINES, 1000, 30)
}

pub fn craft_world() -> Result<(TabularMdp, Vec<TaskSpec>)> {
    craft_world_with(&GridMap::parse(CRAFT_MAP)?, "craft")
}

/// The reduced 10×10 craft map.
pub fn craft_world_small() -> Result<(TabularMdp, Vec<TaskSpec>)> {
    craft_world_with(&GridMap::parse(CRAFT_SMALL_MAP)?, "craft-small")
}

pub fn craft_world_with(map: &GridMap, family: &str) -> Result<(TabularMdp, Vec<TaskSpec>)> {
    grid_family(map, family, &CRAFT_MACHINES, 400, 30)
}

fn grid_family(
    map: &GridMap,
    family: &str,
    machines: &[(&str, &str)],
    eplength: usize,
    batch: usize,
) -> Result<(TabularMdp, Vec<TaskSpec>)> {
    let mdp = map.to_mdp(SLIP, DISCOUNT)?;
    let tasks = machines
        .iter()
        .map(|(name, text)| {
            let m = parse_machine(text)?;
            if m.props() != map.props() {
                return Err(Error::UniverseMismatch {
                    left: map.props().to_string(),
                    right: m.props().to_string(),
                });
            }
            TaskSpec::new(format!("{family}/{name}"), m, eplength, batch)
        })
        .collect::<Result<_>>()?;
    Ok((mdp, tasks))
}

pub fn traffic_world() -> Result<(TabularMdp, TaskSpec)> {
    let mdp = RoadMap::residential().to_mdp(DISCOUNT)?;
    Ok((
        mdp,
        TaskSpec::new("traffic", parse_machine(TRAFFIC_MACHINE)?, 100, 100)?,
    ))
}

/// A machine that differs from the traffic ground truth yet agrees with it on
/// every label sequence the road network can produce.
pub fn traffic_inferred_machine() -> RewardMachine {
    parse_machine(TRAFFIC_INFERRED).expect("bundled machine parses")
}

pub const TASK_IDS: [&str; 13] = [
    "office/2.1",
    "office/2.2",
    "office/2.3",
    "office/2.4",
    "craft/3.1",
    "craft/3.2",
    "craft/3.3",
    "craft/3.4",
    "craft-small/3.1",
    "craft-small/3.2",
    "craft-small/3.3",
    "craft-small/3.4",
    "traffic",
];

/// Looks up a task by id, optionally replacing the family's default map.
pub fn load_task(id: &str, map: Option<&GridMap>) -> Result<(TabularMdp, TaskSpec)> {
    if id == "traffic" {
        return traffic_world();
    }
    let (family, _) = id
        .split_once('/')
        .ok_or_else(|| Error::UnknownTask(id.to_string()))?;
    let (mdp, tasks) = match (family, map) {
        ("office", None) => office_world()?,
        ("office", Some(m)) => office_world_with(m)?,
        ("craft", None) => craft_world()?,
        ("craft-small", None) => craft_world_small()?,
        ("craft" | "craft-small", Some(m)) => craft_world_with(m, family)?,
        _ => return Err(Error::UnknownTask(id.to_string())),
    };
    let task = tasks
        .into_iter()
        .find(|t| t.id == id)
        .ok_or_else(|| Error::UnknownTask(id.to_string()))?;
    Ok((mdp, task))
}
