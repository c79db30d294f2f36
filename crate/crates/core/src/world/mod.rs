//! Grid kitchens: layout parsing, shortest-path travel times, mapping dish
//! orders onto assignment instances, and replaying schedules tick by tick.

mod execute;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{AgentSpec, CostParams, ProblemInstance, TaskPrecedence, TaskSpec, Weights};

pub use execute::{execute, Activity, AgentTick, ExecutionError, ExecutionTrace, Tick};

/// Requirement kind that resolves to a serve window.
pub const SERVE_KIND: &str = "serve";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub fn new(x: usize, y: usize) -> Self {
        Pos { x, y }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cell", content = "kind", rename_all = "snake_case")]
pub enum Cell {
    Floor,
    Wall,
    Station(String),
    Dispenser(String),
    ServeWindow,
}

impl Cell {
    pub fn walkable(&self) -> bool {
        matches!(self, Cell::Floor)
    }

    /// The requirement kind this cell satisfies, if any.
    pub fn kind(&self) -> Option<&str> {
        match self {
            Cell::Station(k) | Cell::Dispenser(k) => Some(k),
            Cell::ServeWindow => Some(SERVE_KIND),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
    /// Row-major, `cells[y][x]`.
    pub cells: Vec<Vec<Cell>>,
    /// Row-major order; agent `a{n}` spawns at `spawns[n-1]`.
    pub spawns: Vec<Pos>,
}

/// Up, down, left, right: the order in which a station's access cell is picked.
const STEPS: [(isize, isize); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];

impl GridLayout {
    pub fn cell(&self, p: Pos) -> &Cell {
        &self.cells[p.y][p.x]
    }

    pub fn neighbors(&self, p: Pos) -> impl Iterator<Item = Pos> + '_ {
        STEPS.iter().filter_map(move |&(dx, dy)| {
            let x = p.x.checked_add_signed(dx)?;
            let y = p.y.checked_add_signed(dy)?;
            (x < self.width && y < self.height).then_some(Pos::new(x, y))
        })
    }

    /// The floor cell a station is worked from.
    pub fn access(&self, station: Pos) -> Option<Pos> {
        self.neighbors(station).find(|&n| self.cell(n).walkable())
    }

    /// Step counts from `from` to every floor cell.
    pub fn bfs(&self, from: Pos) -> Vec<Vec<Option<u32>>> {
        let mut dist = vec![vec![None; self.width]; self.height];
        if !self.cell(from).walkable() {
            return dist;
        }
        dist[from.y][from.x] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            let d = dist[p.y][p.x].unwrap();
            for n in self.neighbors(p) {
                if self.cell(n).walkable() && dist[n.y][n.x].is_none() {
                    dist[n.y][n.x] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// A shortest floor path from `from` to `to`, both ends included.
    pub fn path(&self, from: Pos, to: Pos) -> Option<Vec<Pos>> {
        let dist = self.bfs(to);
        dist[from.y][from.x]?;
        let mut path = vec![from];
        let mut at = from;
        while at != to {
            let d = dist[at.y][at.x].unwrap();
            at = self.neighbors(at).find(|n| dist[n.y][n.x] == Some(d - 1)).unwrap();
            path.push(at);
        }
        Some(path)
    }

    /// Cells satisfying `kind`, row-major.
    pub fn sites(&self, kind: &str) -> Vec<Pos> {
        let mut out = Vec::new();
        for (y, row) in self.cells.iter().enumerate() {
            for (x, c) in row.iter().enumerate() {
                if c.kind() == Some(kind) {
                    out.push(Pos::new(x, y));
                }
            }
        }
        out
    }
}

/// Where a point in the travel table sits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "point", rename_all = "snake_case")]
pub enum Point {
    Spawn { index: usize, at: Pos },
    Station { kind: String, cell: Pos, access: Pos },
}

impl Point {
    pub fn stand(&self) -> Pos {
        match self {
            Point::Spawn { at, .. } => *at,
            Point::Station { access, .. } => *access,
        }
    }
}

/// Pairwise step counts between spawns and worked stations. `None` marks
/// unreachable pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TravelTable {
    pub points: Vec<Point>,
    pub steps: Vec<Vec<Option<u32>>>,
}

impl TravelTable {
    pub fn between(&self, a: Pos, b: Pos) -> Option<u32> {
        let i = self.points.iter().position(|p| p.stand() == a || matches!(p, Point::Station { cell, .. } if *cell == a))?;
        let j = self.points.iter().position(|p| p.stand() == b || matches!(p, Point::Station { cell, .. } if *cell == b))?;
        self.steps[i][j]
    }
}

pub fn travel_times(layout: &GridLayout) -> TravelTable {
    let mut points: Vec<Point> =
        layout.spawns.iter().enumerate().map(|(index, &at)| Point::Spawn { index, at }).collect();
    for (y, row) in layout.cells.iter().enumerate() {
        for (x, c) in row.iter().enumerate() {
            let cell = Pos::new(x, y);
            if let (Some(kind), Some(access)) = (c.kind(), layout.access(cell)) {
                points.push(Point::Station { kind: kind.to_string(), cell, access });
            }
        }
    }
    let steps = points
        .iter()
        .map(|p| {
            let d = layout.bfs(p.stand());
            points.iter().map(|q| d[q.stand().y][q.stand().x]).collect()
        })
        .collect();
    TravelTable { points, steps }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    /// Station, dispenser or `serve`.
    pub kind: String,
    pub duration: u32,
    pub window: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DishOrder {
    pub name: String,
    pub steps: Vec<StepSpec>,
    pub value: f64,
}

fn default_weights() -> Weights {
    Weights::default()
}

/// The scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub grid: Vec<String>,
    /// Single characters to `T:<kind>` stations or `D:<kind>` dispensers.
    #[serde(default)]
    pub legend: BTreeMap<String, String>,
    #[serde(default)]
    pub orders: Vec<DishOrder>,
    #[serde(default = "default_weights")]
    pub weights: Weights,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub layout: GridLayout,
    pub orders: Vec<DishOrder>,
    pub weights: Weights,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid row {row} has width {found}, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("unknown cell `{ch}` at ({x},{y})")]
    UnknownCell { ch: char, x: usize, y: usize },
    #[error("legend key `{key}` must be one character other than . # S W")]
    BadLegendKey { key: String },
    #[error("legend entry `{key}` = `{value}` must read T:<kind> or D:<kind>")]
    BadLegendValue { key: String, value: String },
    #[error("legend kind `{kind}` is reserved")]
    ReservedKind { kind: String },
    #[error("layout has no serve window")]
    NoServeWindow,
    #[error("layout has no spawn cell")]
    NoSpawn,
    #[error("order `{order}` has no steps")]
    EmptyChain { order: String },
    #[error("order `{order}` has an invalid value")]
    InvalidValue { order: String },
    #[error("order `{order}` step {step} needs `{kind}`, which no cell provides")]
    UnknownKind { order: String, step: usize, kind: String },
    #[error("order `{order}` step {step}: every `{kind}` cell is unreachable from the spawns")]
    Unreachable { order: String, step: usize, kind: String },
    #[error("order `{order}` step {step} has window [{start},{end}] outside horizon {horizon}")]
    WindowOutsideHorizon { order: String, step: usize, start: u32, end: u32, horizon: u32 },
    #[error("order `{order}` step {step} must take at least one tick")]
    ZeroDuration { order: String, step: usize },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("weights must be finite and nonnegative")]
    InvalidWeights,
}

impl ScenarioFile {
    /// Builds the layout and checks the whole scenario, reporting every
    /// problem found.
    pub fn into_spec(self) -> Result<ScenarioSpec, Vec<ScenarioError>> {
        let mut errors = Vec::new();
        let mut legend = BTreeMap::new();
        for (key, value) in &self.legend {
            let mut chars = key.chars();
            let ch = match (chars.next(), chars.next()) {
                (Some(c), None) if !".#SW".contains(c) => c,
                _ => {
                    errors.push(ScenarioError::BadLegendKey { key: key.clone() });
                    continue;
                }
            };
            let cell = match value.split_once(':') {
                Some(("T", kind)) if !kind.is_empty() => Cell::Station(kind.to_string()),
                Some(("D", kind)) if !kind.is_empty() => Cell::Dispenser(kind.to_string()),
                _ => {
                    errors.push(ScenarioError::BadLegendValue { key: key.clone(), value: value.clone() });
                    continue;
                }
            };
            if cell.kind() == Some(SERVE_KIND) {
                errors.push(ScenarioError::ReservedKind { kind: SERVE_KIND.into() });
                continue;
            }
            legend.insert(ch, cell);
        }

        let height = self.grid.len();
        let width = self.grid.first().map_or(0, |r| r.chars().count());
        if height == 0 || width == 0 {
            errors.push(ScenarioError::EmptyGrid);
        }
        let mut cells = Vec::with_capacity(height);
        let mut spawns = Vec::new();
        for (y, row) in self.grid.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                errors.push(ScenarioError::Ragged { row: y, found, expected: width });
            }
            let mut line = Vec::with_capacity(width);
            for (x, ch) in row.chars().enumerate().take(width) {
                let cell = match ch {
                    '.' => Cell::Floor,
                    '#' => Cell::Wall,
                    'W' => Cell::ServeWindow,
                    'S' => {
                        spawns.push(Pos::new(x, y));
                        Cell::Floor
                    }
                    c => match legend.get(&c) {
                        Some(cell) => cell.clone(),
                        None => {
                            errors.push(ScenarioError::UnknownCell { ch: c, x, y });
                            Cell::Wall
                        }
                    },
                };
                line.push(cell);
            }
            line.resize(width, Cell::Wall);
            cells.push(line);
        }
        let layout = GridLayout { width, height, cells, spawns };
        let spec = ScenarioSpec {
            name: self.name,
            layout,
            orders: self.orders,
            weights: self.weights,
            horizon: self.horizon,
        };
        errors.extend(spec.problems());
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(errors)
        }
    }
}

impl ScenarioSpec {
    /// Every validation failure, in a stable order.
    pub fn problems(&self) -> Vec<ScenarioError> {
        let mut errors = Vec::new();
        let layout = &self.layout;
        if layout.width == 0 || layout.height == 0 {
            return errors;
        }
        if layout.sites(SERVE_KIND).is_empty() {
            errors.push(ScenarioError::NoServeWindow);
        }
        if layout.spawns.is_empty() {
            errors.push(ScenarioError::NoSpawn);
        }
        if self.horizon == 0 {
            errors.push(ScenarioError::ZeroHorizon);
        }
        let w = self.weights;
        if !(w.alpha1.is_finite() && w.alpha2.is_finite() && w.alpha1 >= 0.0 && w.alpha2 >= 0.0) {
            errors.push(ScenarioError::InvalidWeights);
        }
        for order in &self.orders {
            let name = order.name.clone();
            if order.steps.is_empty() {
                errors.push(ScenarioError::EmptyChain { order: name.clone() });
            }
            if !order.value.is_finite() || order.value < 0.0 {
                errors.push(ScenarioError::InvalidValue { order: name.clone() });
            }
            for (n, step) in order.steps.iter().enumerate() {
                let step_no = n + 1;
                if layout.sites(&step.kind).is_empty() {
                    errors.push(ScenarioError::UnknownKind { order: name.clone(), step: step_no, kind: step.kind.clone() });
                } else if self.site(&step.kind).is_none() {
                    errors.push(ScenarioError::Unreachable { order: name.clone(), step: step_no, kind: step.kind.clone() });
                }
                let [start, end] = step.window;
                if start > end || end > self.horizon {
                    errors.push(ScenarioError::WindowOutsideHorizon {
                        order: name.clone(),
                        step: step_no,
                        start,
                        end,
                        horizon: self.horizon,
                    });
                }
                if step.duration == 0 {
                    errors.push(ScenarioError::ZeroDuration { order: name.clone(), step: step_no });
                }
            }
        }
        errors
    }

    pub fn validate(&self) -> Result<(), Vec<ScenarioError>> {
        let errors = self.problems();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// First cell of `kind`, row-major, whose access cell some spawn reaches.
    /// Returns (station cell, access cell).
    pub fn site(&self, kind: &str) -> Option<(Pos, Pos)> {
        let reach: Vec<_> = self.layout.spawns.iter().map(|&s| self.layout.bfs(s)).collect();
        self.layout.sites(kind).into_iter().find_map(|cell| {
            let access = self.layout.access(cell)?;
            reach.iter().any(|d| d[access.y][access.x].is_some()).then_some((cell, access))
        })
    }
}

/// Where a task is performed and what it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSite {
    pub task: String,
    pub order: usize,
    pub step: usize,
    pub cell: Pos,
    pub access: Pos,
    /// Last step of its order; completing it in time serves the dish.
    pub serves: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub instance: ProblemInstance,
    /// Dish-internal step order, also present in `instance.precedences`.
    pub chains: Vec<TaskPrecedence>,
    pub sites: Vec<TaskSite>,
}

pub fn agent_id(index: usize) -> String {
    format!("a{}", index + 1)
}

fn task_id(order: &DishOrder, order_no: usize, step: usize, kind: &str) -> String {
    let repeated = order.steps.iter().filter(|s| s.kind == kind).count() > 1;
    if repeated {
        format!("{kind}{order_no}_{step}")
    } else {
        format!("{kind}{order_no}")
    }
}

/// Maps the scenario onto an assignment instance: one task per dish step,
/// grid distances as travel costs, and step order as built-in precedences.
pub fn instantiate(scenario: &ScenarioSpec) -> Result<World, Vec<ScenarioError>> {
    scenario.validate()?;
    let layout = &scenario.layout;
    let horizon = scenario.horizon as f64;

    let mut tasks = Vec::new();
    let mut sites = Vec::new();
    let mut chains = Vec::new();
    for (o, order) in scenario.orders.iter().enumerate() {
        let last = order.steps.len() - 1;
        for (s, step) in order.steps.iter().enumerate() {
            let id = task_id(order, o + 1, s + 1, &step.kind);
            let (cell, access) = scenario.site(&step.kind).expect("validated");
            tasks.push(TaskSpec {
                id: id.clone(),
                name: format!("{} for {}", step.kind, order.name),
                reward: if s == last { order.value } else { 0.0 },
                duration: step.duration as f64,
                earliest: step.window[0] as f64,
                latest: step.window[1] as f64,
                location: cell.to_string(),
            });
            if s > 0 {
                chains.push(TaskPrecedence { before: sites.last().map(|p: &TaskSite| p.task.clone()).unwrap(), after: id.clone() });
            }
            sites.push(TaskSite { task: id, order: o, step: s, cell, access, serves: s == last });
        }
    }

    // Unreachable pairs cost more than the horizon, so no feasible plan uses them.
    let blocked = horizon + 1.0;
    let from_spawn: Vec<_> = layout.spawns.iter().map(|&p| layout.bfs(p)).collect();
    let from_site: Vec<_> = sites.iter().map(|s| layout.bfs(s.access)).collect();
    let costs = CostParams::from_fn(layout.spawns.len(), sites.len(), |i, from, to| {
        let at = sites[to].access;
        let d = match from {
            None => from_spawn[i][at.y][at.x],
            Some(f) => from_site[f][at.y][at.x],
        };
        d.map_or(blocked, |d| d as f64)
    });
    let agents = layout
        .spawns
        .iter()
        .enumerate()
        .map(|(i, p)| AgentSpec { id: agent_id(i), name: agent_id(i), start: Some(p.to_string()) })
        .collect();
    let instance = ProblemInstance {
        agents,
        tasks,
        costs,
        weights: scenario.weights,
        horizon,
        precedences: chains.clone(),
    };
    Ok(World { instance, chains, sites })
}
