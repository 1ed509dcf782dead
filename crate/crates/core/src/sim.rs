//! Synchronous multi-agent rounds over a scripted world.
//!
//! Each round runs in phases on a shared barrier. Every agent first filters
//! its own measurements where it stands, then messages materialize between
//! every pair inside communication range, then map fusion, overlap
//! resolution, planning and control all read start-of-round snapshots, and
//! finally every move lands at once. Agents draw from private random
//! streams, so stepping order inside a phase cannot change the outcome;
//! the loop behaves like truly concurrent agents while running in one
//! thread.
//!
//! Replanning is driven by what agents can actually observe about each
//! other: the messages. A searcher recomputes jointly with the searchers in
//! its component when the component gains a member or when any member's
//! announced mode differs from its previous announcement, and recomputes
//! alone when its own walk runs out. Announcements carry post-update modes,
//! so a mode flip reaches the whole component within the same round.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Point2;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::control::{
    ospa, overlap_step, resolve_overlap, track_control, ControlError, OverlapConfig,
    OverlapDecision, OverlapLedger, RenyiConfig,
};
use crate::filter::{
    estimate_cardinality, extract_states, predict, regional_subset, resample, round_cardinality,
    update, FilterConfig, ParticleSet, SearchGrid,
};
use crate::geometry::{sensing_rect, Rect};
use crate::models::{
    admissible_actions, clutter_sample, detection_prob, measure, transition_sample,
    AgentKinematics, KinematicState, Measurement, MotionModel, SensorModel, TargetKind,
};
use crate::planner::{
    build_search_map, fuse_search_grids, mark_visited, plan_joint_walks, plan_walk, search_control,
    unvisited_nodes, PlannerConfig, SearchMap, WalkPlan,
};
use crate::rng::RngStreams;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    /// Every violated scenario invariant, each prefixed with the offending
    /// field's path.
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Search,
    Track,
}

/// Scripted target: born at `birth_step` in exactly `birth_state`, then a
/// random walk under the motion model until removed at `death_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScript {
    pub id: usize,
    pub birth_step: usize,
    pub death_step: usize,
    pub birth_state: KinematicState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentStart {
    pub id: usize,
    pub start: Point2<f64>,
}

/// Complete run description. Everything an execution needs except the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub area: Rect,
    /// Search cell side, meters. Must tile the area evenly.
    pub cell_side: f64,
    /// Round count K; rounds are numbered 1..=K.
    pub steps: usize,
    pub agents: Vec<AgentStart>,
    pub targets: Vec<TargetScript>,
    pub motion: MotionModel,
    pub sensor: SensorModel,
    /// Birth intensity mass spread over each agent's footprint per round.
    pub birth_mass: f64,
    /// Per-round factor applied to search cells outside the footprint.
    pub search_decay: f64,
    /// Standard deviation of birth particle velocities, m/s.
    pub birth_velocity_std: f64,
    pub particles_per_target: usize,
    pub birth_particles_per_step: usize,
    pub planner: PlannerConfig,
    pub renyi: RenyiConfig,
    pub overlap: OverlapConfig,
    pub kinematics: AgentKinematics,
}

impl Scenario {
    /// Checks every invariant and reports all violations at once, each
    /// tagged with the field that broke it.
    pub fn validate(&self) -> Result<(), SimError> {
        let mut v: Vec<String> = Vec::new();
        let finite_area = self.area.min.x.is_finite()
            && self.area.min.y.is_finite()
            && self.area.max.x.is_finite()
            && self.area.max.y.is_finite();
        if !finite_area || self.area.min.x >= self.area.max.x || self.area.min.y >= self.area.max.y
        {
            v.push(String::from("area: bounds must be finite with min < max"));
        } else if SearchGrid::new(&self.area, self.cell_side).is_err() {
            v.push(format!(
                "cell_side: {} does not evenly tile the {} x {} area",
                self.cell_side,
                self.area.max.x - self.area.min.x,
                self.area.max.y - self.area.min.y
            ));
        }
        let mut ids = BTreeSet::new();
        for (i, a) in self.agents.iter().enumerate() {
            if !ids.insert(a.id) {
                v.push(format!("agents[{i}].id: duplicate id {}", a.id));
            }
            if !(a.start.x.is_finite() && a.start.y.is_finite()) || !self.area.contains(&a.start) {
                v.push(format!(
                    "agents[{i}].start: ({}, {}) lies outside the area",
                    a.start.x, a.start.y
                ));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, t) in self.targets.iter().enumerate() {
            if !ids.insert(t.id) {
                v.push(format!("targets[{i}].id: duplicate id {}", t.id));
            }
            if t.birth_step == 0 {
                v.push(format!(
                    "targets[{i}].birth_step: rounds are numbered from 1"
                ));
            }
            if t.birth_step >= t.death_step {
                v.push(format!(
                    "targets[{i}].birth_step: {} is not before death_step {}",
                    t.birth_step, t.death_step
                ));
            }
            if !t.birth_state.is_finite() || !self.area.contains(&t.birth_state.position()) {
                v.push(format!("targets[{i}].birth_state: born outside the area"));
            }
        }
        if !(self.birth_mass.is_finite() && self.birth_mass >= 0.0) {
            v.push(String::from("birth_mass: must be finite and nonnegative"));
        }
        if self.birth_mass > 0.0 && self.birth_particles_per_step == 0 {
            v.push(String::from(
                "birth_particles_per_step: must be positive when birth_mass is",
            ));
        }
        if self.particles_per_target == 0 {
            v.push(String::from("particles_per_target: must be positive"));
        }
        if !(0.0..=1.0).contains(&self.search_decay) {
            v.push(String::from("search_decay: must lie in [0, 1]"));
        }
        if !(self.birth_velocity_std.is_finite() && self.birth_velocity_std >= 0.0) {
            v.push(String::from(
                "birth_velocity_std: must be finite and nonnegative",
            ));
        }
        if !(0.0..=1.0).contains(&self.motion.survival_prob) {
            v.push(String::from("motion.survival_prob: must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.sensor.detection_prob_max) {
            v.push(String::from(
                "sensor.detection_prob_max: must lie in [0, 1]",
            ));
        }
        if !(self.sensor.sensing_side > 0.0) {
            v.push(String::from("sensor.sensing_side: must be positive"));
        }
        if !(self.sensor.max_range > 0.0) {
            v.push(String::from("sensor.max_range: must be positive"));
        }
        if !(self.sensor.clutter_rate >= 0.0) {
            v.push(String::from("sensor.clutter_rate: must be nonnegative"));
        }
        if !(self.sensor.range_noise_floor > 0.0) {
            v.push(String::from("sensor.range_noise_floor: must be positive"));
        }
        if !(self.sensor.bearing_noise_floor > 0.0) {
            v.push(String::from("sensor.bearing_noise_floor: must be positive"));
        }
        if !(self.sensor.range_noise_slope >= 0.0) {
            v.push(String::from(
                "sensor.range_noise_slope: must be nonnegative",
            ));
        }
        if !(self.sensor.bearing_noise_slope >= 0.0) {
            v.push(String::from(
                "sensor.bearing_noise_slope: must be nonnegative",
            ));
        }
        if !(self.kinematics.radial_step > 0.0) {
            v.push(String::from("kinematics.radial_step: must be positive"));
        }
        if self.kinematics.radial_levels >= 1 && self.kinematics.angular_sectors == 0 {
            v.push(String::from(
                "kinematics.angular_sectors: must be positive when rings exist",
            ));
        }
        if !(self.kinematics.comm_range >= 0.0) {
            v.push(String::from("kinematics.comm_range: must be nonnegative"));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidScenario(v))
        }
    }
}

/// Scenario knobs regrouped the way the round loop consumes them.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub filter: FilterConfig,
    pub planner: PlannerConfig,
    pub renyi: RenyiConfig,
    pub overlap: OverlapConfig,
    pub kinematics: AgentKinematics,
    pub area: Rect,
    pub particles_per_target: usize,
    pub birth_particles_per_step: usize,
}

impl SimConfig {
    pub fn new(sc: &Scenario) -> Self {
        Self {
            filter: FilterConfig {
                birth_mass: sc.birth_mass,
                search_decay: sc.search_decay,
                birth_velocity_std: sc.birth_velocity_std,
                motion: sc.motion.clone(),
                sensor: sc.sensor.clone(),
            },
            planner: sc.planner,
            renyi: sc.renyi,
            overlap: sc.overlap,
            kinematics: sc.kinematics,
            area: sc.area,
            particles_per_target: sc.particles_per_target,
            birth_particles_per_step: sc.birth_particles_per_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTarget {
    pub id: usize,
    pub birth_step: usize,
    pub death_step: usize,
    pub birth_state: KinematicState,
    pub state: KinematicState,
    pub alive: bool,
}

impl GroundTruthTarget {
    pub fn from_script(s: &TargetScript) -> Self {
        Self {
            id: s.id,
            birth_step: s.birth_step,
            death_step: s.death_step,
            birth_state: s.birth_state,
            state: s.birth_state,
            alive: false,
        }
    }
}

/// Advances the scripted world to round `k`: deaths first, then exact
/// births, then one motion draw for everything already alive.
pub fn step_world<R: Rng + ?Sized>(
    targets: &mut [GroundTruthTarget],
    k: usize,
    model: &MotionModel,
    rng: &mut R,
) {
    for t in targets.iter_mut() {
        if k >= t.death_step {
            t.alive = false;
        } else if k == t.birth_step {
            t.alive = true;
            t.state = t.birth_state;
        } else if t.alive {
            t.state = transition_sample(&t.state, model, rng);
        }
    }
}

/// One round of sensing at `s`: a detection draw per alive target in id
/// order, then the clutter batch.
pub fn generate_measurements<R: Rng + ?Sized>(
    targets: &[GroundTruthTarget],
    s: &Point2<f64>,
    sensor: &SensorModel,
    rng: &mut R,
) -> Vec<Measurement> {
    let mut out = Vec::new();
    for t in targets.iter().filter(|t| t.alive) {
        let u: f64 = rng.random();
        if u < detection_prob(&t.state, s, sensor, TargetKind::Physical) {
            // a target sitting exactly on the agent has no bearing; skip it
            if let Ok(z) = measure(&t.state, s, sensor, rng) {
                out.push(z);
            }
        }
    }
    out.extend(clutter_sample(sensor, rng));
    out
}

/// Symmetric adjacency over slice positions; an edge means the pair sits
/// within communication range (closed bound), never a self-loop.
pub fn comm_graph(agents: &[Agent], comm_range: f64) -> Vec<Vec<bool>> {
    let n = agents.len();
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if (agents[i].position - agents[j].position).norm() <= comm_range {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    adj
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    pub position: Point2<f64>,
    pub mode: Mode,
    pub particles: ParticleSet,
    pub grid: SearchGrid,
    /// Walk still to execute; meaningful only in search mode.
    pub plan: WalkPlan,
    pub ledger: OverlapLedger,
    /// Map nodes assigned to co-searchers in the last joint plan.
    group_claims: BTreeSet<usize>,
    /// Agent ids of last round's communication component (self included).
    prev_component: BTreeSet<usize>,
    /// Mode announced in last round's messages.
    prev_announced: Mode,
}

impl Agent {
    pub fn new(
        id: usize,
        start: Point2<f64>,
        grid: SearchGrid,
        particles_per_target: usize,
        birth_particles_per_step: usize,
    ) -> Self {
        Self {
            id,
            position: start,
            mode: Mode::Search,
            particles: ParticleSet::empty(particles_per_target, birth_particles_per_step),
            grid,
            plan: WalkPlan::default(),
            ledger: OverlapLedger::default(),
            group_claims: BTreeSet::new(),
            prev_component: BTreeSet::new(),
            prev_announced: Mode::Search,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthLog {
    pub id: usize,
    /// [px, vx, py, vy].
    pub state: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub enum PayloadLog {
    Mode(Mode),
    SearchGrid(Vec<f64>),
    PredictedStates(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageLog {
    pub from: usize,
    pub to: usize,
    pub payload: PayloadLog,
}

/// One scored overlap round between a tracking pair (ids a < b).
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapLog {
    pub a: usize,
    pub b: usize,
    /// Distance between the two estimate sets this round.
    pub score: f64,
    pub score_sum: f64,
    pub run_len: usize,
    pub exited: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentStepLog {
    pub id: usize,
    /// Where the agent sensed, before this round's move.
    pub position: [f64; 2],
    /// Mode after the round settled (overlap exits included).
    pub mode: Mode,
    /// Rounded target count inside the sensing square.
    pub n_hat: usize,
    /// In-square estimated positions.
    pub estimates: Vec<[f64; 2]>,
    pub action_index: usize,
    /// Position after the move.
    pub action: [f64; 2],
    /// Searched fraction of this agent's (fused) map.
    pub coverage: f64,
    /// Expected information gain per admissible action; empty unless the
    /// tracking controller ran.
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub truth: Vec<TruthLog>,
    pub agents: Vec<AgentStepLog>,
    pub messages: Vec<MessageLog>,
    pub overlaps: Vec<OverlapLog>,
    /// Searched fraction of the map fused across all agents.
    pub union_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub steps: Vec<StepLog>,
}

fn components(adjacency: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if adjacency[u][v] && !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Per-agent transient bookkeeping for one round.
struct Round {
    announced: Mode,
    broadcast: Vec<Point2<f64>>,
    n_hat: usize,
    exited: bool,
    start: Point2<f64>,
    action: Point2<f64>,
    action_index: usize,
    gains: Vec<f64>,
    fresh_plan: bool,
}

/// One synchronous agent round. `agents` must be sorted by id and
/// `measurements`, `adjacency`, `rngs` indexed the same way.
pub fn step_agents(
    agents: &mut [Agent],
    measurements: &[Vec<Measurement>],
    adjacency: &[Vec<bool>],
    map: &SearchMap,
    cfg: &SimConfig,
    rngs: &mut [ChaCha12Rng],
) -> (Vec<AgentStepLog>, Vec<MessageLog>, Vec<OverlapLog>) {
    let n = agents.len();
    debug_assert!(agents.windows(2).all(|w| w[0].id < w[1].id));
    debug_assert!(measurements.len() == n && adjacency.len() == n && rngs.len() == n);
    let side = cfg.filter.sensor.sensing_side;

    // Phase A: filter own measurements in place, settle mode, extract the
    // in-square estimates everything downstream shares.
    let mut round: Vec<Round> = Vec::with_capacity(n);
    for i in 0..n {
        let a = &mut agents[i];
        let (pred, g) = predict(
            &a.particles,
            &a.grid,
            &a.position,
            &cfg.filter,
            &mut rngs[i],
        );
        let (post, g) = update(&pred, &g, &measurements[i], &a.position, &cfg.filter);
        a.particles = post;
        a.grid = g;
        let square = sensing_rect(&a.position, side);
        let n_hat = round_cardinality(estimate_cardinality(&a.particles, &square));
        a.mode = if n_hat >= 1 {
            Mode::Track
        } else {
            Mode::Search
        };
        if a.mode == Mode::Track {
            a.plan = WalkPlan::default();
        }
        let broadcast: Vec<Point2<f64>> = if a.mode == Mode::Track {
            // Cluster only what the square holds: mass elsewhere (the birth
            // trail of the walk so far) must not drag centroids around.
            let regional = regional_subset(&a.particles, &square);
            extract_states(&regional, n_hat, a.grid.cell_side())
                .iter()
                .map(|x| x.position())
                .collect()
        } else {
            Vec::new()
        };
        round.push(Round {
            announced: a.mode,
            broadcast,
            n_hat,
            exited: false,
            start: a.position,
            action: a.position,
            action_index: 0,
            gains: Vec::new(),
            fresh_plan: false,
        });
    }

    // Phase B: messages between every linked pair. Everyone announces mode
    // and shares its map; trackers also share their estimate set.
    let mut messages = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !adjacency[i][j] {
                continue;
            }
            let (from, to) = (agents[i].id, agents[j].id);
            messages.push(MessageLog {
                from,
                to,
                payload: PayloadLog::Mode(round[i].announced),
            });
            messages.push(MessageLog {
                from,
                to,
                payload: PayloadLog::SearchGrid(agents[i].grid.values().to_vec()),
            });
            if round[i].announced == Mode::Track {
                messages.push(MessageLog {
                    from,
                    to,
                    payload: PayloadLog::PredictedStates(
                        round[i].broadcast.iter().map(|p| [p.x, p.y]).collect(),
                    ),
                });
            }
        }
    }

    // Phase C1: component-wise map fusion; every member adopts the
    // pointwise maximum.
    let comps = components(adjacency);
    for comp in &comps {
        if comp.len() < 2 {
            continue;
        }
        let rest: Vec<SearchGrid> = comp[1..].iter().map(|&m| agents[m].grid.clone()).collect();
        let fused =
            fuse_search_grids(&agents[comp[0]].grid, &rest).expect("agents share one tiling");
        for &m in comp {
            agents[m].grid = fused.clone();
        }
    }

    // Phase C2: overlap accounting on the announced snapshots. A pair
    // qualifies when linked, both tracking and both with estimates to
    // compare; anything else breaks the consecutive run.
    let mut overlaps = Vec::new();
    let mut exits: Vec<usize> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let qualified = adjacency[i][j]
                && round[i].announced == Mode::Track
                && round[j].announced == Mode::Track
                && !round[i].broadcast.is_empty()
                && !round[j].broadcast.is_empty();
            if !qualified {
                let (pi, pj) = (agents[i].id, agents[j].id);
                agents[i].ledger.reset(pj);
                agents[j].ledger.reset(pi);
                continue;
            }
            let li = overlap_step(
                &agents[i].ledger,
                agents[j].id,
                &round[i].broadcast,
                &round[j].broadcast,
                &round[i].start,
                &round[j].start,
                &cfg.filter.sensor,
                &cfg.overlap,
            );
            let lj = overlap_step(
                &agents[j].ledger,
                agents[i].id,
                &round[j].broadcast,
                &round[i].broadcast,
                &round[j].start,
                &round[i].start,
                &cfg.filter.sensor,
                &cfg.overlap,
            );
            agents[i].ledger = li;
            agents[j].ledger = lj;
            let tally = agents[i].ledger.tally(agents[j].id);
            if tally.run_len == 0 {
                // footprints apart this round; the step reset both sides
                continue;
            }
            let mut exited = None;
            let di = resolve_overlap(&agents[i].ledger, agents[i].id, agents[j].id, &cfg.overlap);
            if di == OverlapDecision::ExitToSearch {
                exits.push(i);
                exited = Some(agents[i].id);
            }
            let dj = resolve_overlap(&agents[j].ledger, agents[j].id, agents[i].id, &cfg.overlap);
            if dj == OverlapDecision::ExitToSearch {
                exits.push(j);
                exited = Some(agents[j].id);
            }
            overlaps.push(OverlapLog {
                a: agents[i].id,
                b: agents[j].id,
                score: ospa(&round[i].broadcast, &round[j].broadcast, cfg.overlap.cutoff),
                score_sum: tally.score_sum,
                run_len: tally.run_len,
                exited,
            });
        }
    }
    exits.sort_unstable();
    exits.dedup();
    for &e in &exits {
        // the exiter drops its tracks on the spot and holds position; it
        // starts searching from the next round's joint replan
        agents[e].mode = Mode::Search;
        agents[e].particles =
            ParticleSet::empty(cfg.particles_per_target, cfg.birth_particles_per_step);
        agents[e].plan = WalkPlan::default();
        agents[e].ledger.clear();
        round[e].n_hat = 0;
        round[e].broadcast.clear();
        round[e].exited = true;
        let eid = agents[e].id;
        for o in 0..n {
            if o != e {
                agents[o].ledger.reset(eid);
            }
        }
    }

    // Phase C3a: joint replanning. Fires per component when membership grew
    // or any member's announcement changed; the component's searchers split
    // the unsearched cells and remember each other's claims.
    for comp in &comps {
        let ids: BTreeSet<usize> = comp.iter().map(|&m| agents[m].id).collect();
        let grew = comp
            .iter()
            .any(|&m| !ids.is_subset(&agents[m].prev_component));
        let flipped = comp
            .iter()
            .any(|&m| round[m].announced != agents[m].prev_announced);
        if !(grew || flipped) {
            continue;
        }
        let searchers: Vec<usize> = comp
            .iter()
            .copied()
            .filter(|&m| agents[m].mode == Mode::Search && !round[m].exited)
            .collect();
        if searchers.is_empty() {
            continue;
        }
        let unv = unvisited_nodes(map, &agents[searchers[0]].grid, &cfg.planner)
            .expect("agents share one tiling");
        let starts: Vec<Point2<f64>> = searchers.iter().map(|&m| round[m].start).collect();
        let plans = plan_joint_walks(map, &starts, &unv).expect("searcher list is nonempty");
        for (si, &m) in searchers.iter().enumerate() {
            let mut claims = BTreeSet::new();
            for (sj, p) in plans.iter().enumerate() {
                if sj != si {
                    claims.extend(p.remaining().iter().copied());
                }
            }
            agents[m].plan = plans[si].clone();
            agents[m].group_claims = claims;
            round[m].fresh_plan = true;
        }
    }

    // Phase C3b: control. Trackers chase information gain; searchers follow
    // their walk, replanning alone (around the group's claims) when it runs
    // out. Exiters already hold position.
    for i in 0..n {
        if round[i].exited {
            continue;
        }
        let actions = admissible_actions(&round[i].start, &cfg.kinematics, &cfg.area);
        if agents[i].mode == Mode::Track {
            match track_control(
                &agents[i].particles,
                &agents[i].grid,
                &round[i].start,
                &cfg.kinematics,
                &cfg.filter,
                &cfg.renyi,
                &mut rngs[i],
            ) {
                Ok(choice) => {
                    round[i].action = choice.action;
                    round[i].action_index = choice.action_index;
                    round[i].gains = choice.gains;
                }
                Err(ControlError::NoTargets) => {
                    // prediction starved the intensity below half a target;
                    // give up the track right here
                    agents[i].mode = Mode::Search;
                    agents[i].plan = WalkPlan::default();
                    round[i].n_hat = 0;
                    round[i].broadcast.clear();
                }
                Err(ControlError::InvalidAlpha) => unreachable!("alpha validated at build"),
            }
        }
        if agents[i].mode == Mode::Search {
            if !round[i].fresh_plan {
                agents[i].plan =
                    mark_visited(&agents[i].plan, &round[i].start, map, &cfg.filter.sensor);
                if agents[i].plan.is_exhausted() {
                    let mut unv = unvisited_nodes(map, &agents[i].grid, &cfg.planner)
                        .expect("agents share one tiling");
                    for c in &agents[i].group_claims {
                        unv.remove(c);
                    }
                    agents[i].plan = plan_walk(map, &round[i].start, &unv);
                }
            }
            if let Ok(next) = search_control(&agents[i].plan, map, &actions) {
                round[i].action = next;
                round[i].action_index = actions
                    .iter()
                    .position(|a| *a == next)
                    .expect("chosen action is admissible");
            }
            // a still-exhausted plan means nothing is left to search: stay
        }
    }

    // Phase C4: every move lands at once, then per-agent resampling.
    for i in 0..n {
        agents[i].position = round[i].action;
        agents[i].particles = resample(&agents[i].particles, &mut rngs[i]);
    }

    // Phase C5: remember what this round announced for the next round's
    // replan triggers.
    for comp in &comps {
        let ids: BTreeSet<usize> = comp.iter().map(|&m| agents[m].id).collect();
        for &m in comp {
            agents[m].prev_component = ids.clone();
            agents[m].prev_announced = round[m].announced;
        }
    }

    let logs = (0..n)
        .map(|i| AgentStepLog {
            id: agents[i].id,
            position: [round[i].start.x, round[i].start.y],
            mode: agents[i].mode,
            n_hat: round[i].n_hat,
            estimates: round[i].broadcast.iter().map(|p| [p.x, p.y]).collect(),
            action_index: round[i].action_index,
            action: [round[i].action.x, round[i].action.y],
            coverage: agents[i].grid.coverage(cfg.planner.beta),
            gains: round[i].gains.clone(),
        })
        .collect();
    (logs, messages, overlaps)
}

/// Runs the scenario for its full round count under one master seed and
/// returns the complete log. The same scenario and seed always reproduce
/// the same trace bit for bit.
pub fn run(scenario: &Scenario, seed: u64) -> Result<Trace, SimError> {
    scenario.validate()?;
    let cfg = SimConfig::new(scenario);
    let map = build_search_map(&scenario.area, scenario.cell_side).expect("tiling validated");
    let grid0 = SearchGrid::new(&scenario.area, scenario.cell_side).expect("tiling validated");

    let mut starts = scenario.agents.clone();
    starts.sort_by_key(|a| a.id);
    let mut agents: Vec<Agent> = starts
        .iter()
        .map(|a| {
            Agent::new(
                a.id,
                a.start,
                grid0.clone(),
                scenario.particles_per_target,
                scenario.birth_particles_per_step,
            )
        })
        .collect();
    let mut targets: Vec<GroundTruthTarget> = scenario
        .targets
        .iter()
        .map(GroundTruthTarget::from_script)
        .collect();
    targets.sort_by_key(|t| t.id);

    let streams = RngStreams::new(seed);
    let mut world_rng = streams.stream("world", 0);
    let mut sense_rngs: Vec<ChaCha12Rng> = agents
        .iter()
        .map(|a| streams.stream("sense", a.id as u64))
        .collect();
    let mut filter_rngs: Vec<ChaCha12Rng> = agents
        .iter()
        .map(|a| streams.stream("filter", a.id as u64))
        .collect();

    let mut trace = Trace::default();
    for k in 1..=scenario.steps {
        step_world(&mut targets, k, &scenario.motion, &mut world_rng);
        let truth: Vec<TruthLog> = targets
            .iter()
            .filter(|t| t.alive)
            .map(|t| TruthLog {
                id: t.id,
                state: [t.state.px, t.state.vx, t.state.py, t.state.vy],
            })
            .collect();
        let zs: Vec<Vec<Measurement>> = agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                generate_measurements(&targets, &a.position, &scenario.sensor, &mut sense_rngs[i])
            })
            .collect();
        let adjacency = comm_graph(&agents, scenario.kinematics.comm_range);
        let (agent_logs, messages, overlaps) =
            step_agents(&mut agents, &zs, &adjacency, &map, &cfg, &mut filter_rngs);
        let union_coverage = match agents.split_first() {
            None => 0.0,
            Some((first, rest)) => {
                let rest: Vec<SearchGrid> = rest.iter().map(|a| a.grid.clone()).collect();
                fuse_search_grids(&first.grid, &rest)
                    .expect("agents share one tiling")
                    .coverage(cfg.planner.beta)
            }
        };
        trace.steps.push(StepLog {
            step: k,
            truth,
            agents: agent_logs,
            messages,
            overlaps,
            union_coverage,
        });
    }
    Ok(trace)
}
