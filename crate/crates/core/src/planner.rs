//! Search-map graph over the cell tiling, greedy walk planning, cooperative
//! joint planning, grid fusion, and the waypoint-chasing search controller.
//!
//! Walks are built greedily: always append the cheapest not-yet-claimed node,
//! with cost taken as the straight-line distance between region centers (the
//! complete metric closure of the lattice), which guarantees termination even
//! though distant nodes are not lattice-adjacent. Plans do not append a
//! return leg; exhausting a plan signals the caller to replan.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use nalgebra::Point2;

use crate::filter::{search_value, FilterError, SearchGrid};
use crate::geometry::{in_sensing_square, Rect};
use crate::models::SensorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("area sides must be positive integer multiples of cell_side")]
    IndivisibleArea,
    #[error("map and grid tilings differ")]
    TilingMismatch,
    #[error("walk plan is exhausted; replan needed")]
    PlanExhausted,
    #[error("joint planning needs at least one agent")]
    NoAgents,
    #[error("revisit threshold must lie strictly between 0 and 1")]
    InvalidBeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapNode {
    pub id: usize,
    pub center: Point2<f64>,
    pub cell: (usize, usize),
}

/// Graph over the cell tiling: one node per cell center, edges between
/// 8-neighbors weighted by center distance. Node ids equal the grid's cell
/// index (iy * nx + ix) so search values translate directly.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchMap {
    origin: Point2<f64>,
    nx: usize,
    ny: usize,
    cell_side: f64,
    nodes: Vec<MapNode>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl SearchMap {
    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn center(&self, id: usize) -> Point2<f64> {
        self.nodes[id].center
    }

    /// Lattice neighbors of `id` with their edge costs.
    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.neighbors[id]
    }

    pub fn same_tiling(&self, grid: &SearchGrid) -> bool {
        let (gx, gy) = grid.dims();
        self.nx == gx
            && self.ny == gy
            && self.cell_side == grid.cell_side()
            && self.origin == grid.area().min
    }

    /// Node whose center is nearest to `p`, over all nodes; ties to the
    /// lowest id.
    pub fn nearest_node(&self, p: &Point2<f64>) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for n in &self.nodes {
            let d = (n.center - p).norm_squared();
            if d < best_d {
                best_d = d;
                best = n.id;
            }
        }
        best
    }
}

/// Builds the search map for `area` tiled by `cell_side` squares.
pub fn build_search_map(area: &Rect, cell_side: f64) -> Result<SearchMap, PlannerError> {
    let grid = SearchGrid::new(area, cell_side).map_err(|e| match e {
        FilterError::IndivisibleArea => PlannerError::IndivisibleArea,
        FilterError::CellOutOfBounds(..) => unreachable!(),
    })?;
    let (nx, ny) = grid.dims();
    let mut nodes = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            nodes.push(MapNode {
                id: iy * nx + ix,
                center: grid.cell_center(ix, iy),
                cell: (ix, iy),
            });
        }
    }
    let mut neighbors = Vec::with_capacity(nodes.len());
    for n in &nodes {
        let (ix, iy) = n.cell;
        let mut adj = Vec::new();
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                let j = jy as usize * nx + jx as usize;
                adj.push((j, (nodes[j].center - n.center).norm()));
            }
        }
        neighbors.push(adj);
    }
    Ok(SearchMap {
        origin: area.min,
        nx,
        ny,
        cell_side,
        nodes,
        neighbors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Revisit threshold: a cell is worth searching again once its value
    /// decays to beta or below.
    pub beta: f64,
}

impl PlannerConfig {
    pub fn new(beta: f64) -> Result<Self, PlannerError> {
        if beta > 0.0 && beta < 1.0 {
            Ok(Self { beta })
        } else {
            Err(PlannerError::InvalidBeta)
        }
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { beta: 0.4 }
    }
}

/// Ordered node ids still to visit; `cursor` indexes the next one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkPlan {
    pub nodes: Vec<usize>,
    pub cursor: usize,
}

impl WalkPlan {
    pub fn new(nodes: Vec<usize>) -> Self {
        debug_assert!({
            let set: BTreeSet<_> = nodes.iter().collect();
            set.len() == nodes.len()
        });
        Self { nodes, cursor: 0 }
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor >= self.nodes.len()
    }

    pub fn next_node(&self) -> Option<usize> {
        self.nodes.get(self.cursor).copied()
    }

    pub fn remaining(&self) -> &[usize] {
        &self.nodes[self.cursor.min(self.nodes.len())..]
    }
}

/// Node ids whose search value has decayed to the revisit threshold or
/// below, i.e. the cells worth searching.
pub fn unvisited_nodes(
    map: &SearchMap,
    grid: &SearchGrid,
    cfg: &PlannerConfig,
) -> Result<BTreeSet<usize>, PlannerError> {
    if !map.same_tiling(grid) {
        return Err(PlannerError::TilingMismatch);
    }
    let mut out = BTreeSet::new();
    for n in &map.nodes {
        if search_value(grid, n.cell).expect("node cell in bounds") <= cfg.beta {
            out.insert(n.id);
        }
    }
    Ok(out)
}

fn nearest_in(map: &SearchMap, from: &Point2<f64>, candidates: &BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &id in candidates {
        let d = (map.center(id) - from).norm_squared();
        // BTreeSet iterates ids ascending, so strict < keeps the lowest id
        // among exact ties.
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, id));
        }
    }
    best.map(|(_, id)| id)
}

/// Greedy walk over `unvisited`: anchor at the map node nearest `start`,
/// then repeatedly append the unvisited node nearest the last appended one.
pub fn plan_walk(map: &SearchMap, start: &Point2<f64>, unvisited: &BTreeSet<usize>) -> WalkPlan {
    let mut remaining = unvisited.clone();
    let mut nodes = Vec::with_capacity(remaining.len());
    if remaining.is_empty() {
        return WalkPlan::new(nodes);
    }
    let mut current = map.center(map.nearest_node(start));
    while let Some(next) = nearest_in(map, &current, &remaining) {
        remaining.remove(&next);
        current = map.center(next);
        nodes.push(next);
    }
    WalkPlan::new(nodes)
}

/// Cooperative planning: agents take turns in ascending order, each
/// appending the unclaimed node nearest its own walk tail, until every
/// unvisited node is claimed. The returned plans partition `unvisited` and
/// their lengths differ by at most one.
pub fn plan_joint_walks(
    map: &SearchMap,
    starts: &[Point2<f64>],
    unvisited: &BTreeSet<usize>,
) -> Result<Vec<WalkPlan>, PlannerError> {
    if starts.is_empty() {
        return Err(PlannerError::NoAgents);
    }
    let mut remaining = unvisited.clone();
    let mut tails: Vec<Point2<f64>> = starts
        .iter()
        .map(|s| map.center(map.nearest_node(s)))
        .collect();
    let mut walks: Vec<Vec<usize>> = starts.iter().map(|_| Vec::new()).collect();
    'outer: loop {
        for a in 0..starts.len() {
            let Some(next) = nearest_in(map, &tails[a], &remaining) else {
                break 'outer;
            };
            remaining.remove(&next);
            tails[a] = map.center(next);
            walks[a].push(next);
        }
    }
    Ok(walks.into_iter().map(WalkPlan::new).collect())
}

/// Per-cell max of the local grid and every received grid.
pub fn fuse_search_grids(
    local: &SearchGrid,
    remotes: &[SearchGrid],
) -> Result<SearchGrid, PlannerError> {
    let mut out = local.clone();
    for r in remotes {
        if !out.same_tiling(r) {
            return Err(PlannerError::TilingMismatch);
        }
        for (v, &rv) in out.values_mut().iter_mut().zip(r.values()) {
            if rv > *v {
                *v = rv;
            }
        }
    }
    Ok(out)
}

/// Picks the admissible action nearest the plan's next node center; ties go
/// to the lowest action index (index 0 is "stay").
pub fn search_control(
    plan: &WalkPlan,
    map: &SearchMap,
    actions: &[Point2<f64>],
) -> Result<Point2<f64>, PlannerError> {
    let Some(node) = plan.next_node() else {
        return Err(PlannerError::PlanExhausted);
    };
    let target = map.center(node);
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, a) in actions.iter().enumerate() {
        let d = (target - a).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(actions[best])
}

/// Advances the cursor past every leading plan node whose center falls in
/// the sensing square at `s`.
pub fn mark_visited(
    plan: &WalkPlan,
    s: &Point2<f64>,
    map: &SearchMap,
    sensor: &SensorModel,
) -> WalkPlan {
    let mut out = plan.clone();
    while let Some(node) = out.next_node() {
        if in_sensing_square(&map.center(node), s, sensor.sensing_side) {
            out.cursor += 1;
        } else {
            break;
        }
    }
    out
}
