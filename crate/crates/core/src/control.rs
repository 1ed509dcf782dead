//! Tracking-mode control and tracking-overlap resolution.
//!
//! Control scores every admissible move by the information it is expected to
//! buy: build the ideal measurement set the move would produce from the
//! predicted targets, pseudo-update the predicted particles against it, and
//! measure the Renyi divergence between predicted and pseudo-updated
//! intensities. Overlap resolution scores how similar two agents' tracked
//! sets are (OSPA) over a window of consecutive steps with intersecting
//! sensing footprints, and kicks the higher-id agent back to searching when
//! the window confirms they track the same targets.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::Point2;
// float math comes from this trait in no_std builds; std shadows it
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::filter::{
    extract_states, predict, pseudo_update, regional_subset, round_cardinality, FilterConfig,
    ParticleSet, SearchGrid,
};
use crate::geometry::{sensing_rect, squares_intersect};
use crate::models::{
    admissible_actions, AgentKinematics, KinematicState, Measurement, SensorModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ControlError {
    #[error("alpha must lie strictly between 0 and 1")]
    InvalidAlpha,
    #[error("no predicted targets; switch to search")]
    NoTargets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiConfig {
    /// Divergence order; values below 1 weight the distribution tails.
    pub alpha: f64,
}

impl RenyiConfig {
    pub fn new(alpha: f64) -> Result<Self, ControlError> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self { alpha })
        } else {
            Err(ControlError::InvalidAlpha)
        }
    }
}

impl Default for RenyiConfig {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapConfig {
    /// OSPA cutoff c, meters.
    pub cutoff: f64,
    /// Consecutive intersecting steps needed before judging overlap.
    pub window: usize,
    /// Maximum windowed score sum that still counts as "same targets".
    pub threshold: f64,
}

impl OverlapConfig {
    pub fn new(cutoff: f64, window: usize, threshold: f64) -> Option<Self> {
        (cutoff > 0.0 && window >= 1 && threshold > 0.0).then_some(Self {
            cutoff,
            window,
            threshold,
        })
    }
}

impl Default for OverlapConfig {
    fn default() -> Self {
        Self {
            cutoff: 10.0,
            window: 5,
            threshold: 25.0,
        }
    }
}

/// Running overlap score against one peer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairTally {
    pub score_sum: f64,
    pub run_len: usize,
}

/// Per-peer overlap accumulations. Missing entries read as zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OverlapLedger {
    entries: BTreeMap<usize, PairTally>,
}

impl OverlapLedger {
    pub fn tally(&self, peer: usize) -> PairTally {
        self.entries.get(&peer).copied().unwrap_or_default()
    }

    pub fn reset(&mut self, peer: usize) {
        self.entries.remove(&peer);
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    fn add(&mut self, peer: usize, score: f64) {
        let e = self.entries.entry(peer).or_default();
        e.score_sum += score;
        e.run_len += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapDecision {
    Continue,
    ExitToSearch,
}

/// Predicted ideal measurement set: the noiseless sensor response to each
/// predicted state as seen from `action`. No detectability gate is applied;
/// out-of-footprint states simply contribute nothing downstream. A state
/// coincident with `action` has no defined bearing and is skipped.
pub fn pims(
    predicted: &[KinematicState],
    action: &Point2<f64>,
    sensor: &SensorModel,
) -> Vec<Measurement> {
    predicted
        .iter()
        .filter_map(|x| sensor.predicted_measurement(x, action).ok())
        .collect()
}

/// Renyi divergence between the predicted intensity and its pseudo-update
/// against `z_hyp` from `action`, in the particle form
/// sum(w) + a/(1-a) sum(w m) - 1/(1-a) sum(w m^a)
/// where m_i is the per-particle update multiplier (0/0 reads as 0).
pub fn renyi_gain(
    particles_pred: &ParticleSet,
    action: &Point2<f64>,
    z_hyp: &[Measurement],
    cfg: &FilterConfig,
    rcfg: &RenyiConfig,
) -> Result<f64, ControlError> {
    if !(rcfg.alpha > 0.0 && rcfg.alpha < 1.0) {
        return Err(ControlError::InvalidAlpha);
    }
    let alpha = rcfg.alpha;
    let updated = pseudo_update(particles_pred, z_hyp, action, cfg);
    let mut t_pred = 0.0;
    let mut t_upd = 0.0;
    let mut t_pow = 0.0;
    for (p, q) in particles_pred.particles.iter().zip(&updated.particles) {
        let m = if p.weight > 0.0 {
            q.weight / p.weight
        } else {
            0.0
        };
        t_pred += p.weight;
        t_upd += p.weight * m;
        t_pow += p.weight * m.powf(alpha);
    }
    Ok(t_pred + alpha / (1.0 - alpha) * t_upd - 1.0 / (1.0 - alpha) * t_pow)
}

/// Chosen tracking action with its per-candidate gains (index-aligned with
/// the admissible action list) for tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackChoice {
    pub action: Point2<f64>,
    pub action_index: usize,
    pub gains: Vec<f64>,
}

/// Tracking controller: predicts the filter state one step ahead without
/// moving, extracts the estimated targets, and picks the admissible action
/// with the highest Renyi gain against the ideal measurements those targets
/// would produce. Ties go to the lowest action index (0 = stay). An empty
/// prediction (rounded cardinality 0) means there is nothing to track.
pub fn track_control<R: Rng + ?Sized>(
    particles: &ParticleSet,
    grid: &SearchGrid,
    s: &Point2<f64>,
    kin: &AgentKinematics,
    cfg: &FilterConfig,
    rcfg: &RenyiConfig,
    rng: &mut R,
) -> Result<TrackChoice, ControlError> {
    let (pred, _) = predict(particles, grid, s, cfg, rng);
    // Hypothesize only about the targets in the sensing square; the birth
    // trail elsewhere is search business, not tracking business.
    let square = sensing_rect(s, cfg.sensor.sensing_side);
    let regional = regional_subset(&pred, &square);
    let n_hat = round_cardinality(regional.mass());
    if n_hat == 0 {
        return Err(ControlError::NoTargets);
    }
    let states = extract_states(&regional, n_hat, grid.cell_side());
    let actions = admissible_actions(s, kin, &grid.area());
    let mut gains = Vec::with_capacity(actions.len());
    for a in &actions {
        let z_hyp = pims(&states, a, &cfg.sensor);
        gains.push(renyi_gain(&pred, a, &z_hyp, cfg, rcfg)?);
    }
    // strictly-greater comparison keeps the lowest index on ties
    let mut best = 0usize;
    for i in 1..gains.len() {
        if gains[i] > gains[best] {
            best = i;
        }
    }
    Ok(TrackChoice {
        action: actions[best],
        action_index: best,
        gains,
    })
}

/// Minimum-cost assignment of every row to a distinct column (rows <=
/// columns), by the shortest augmenting path method with potentials.
fn min_assignment_cost(cost: &[Vec<f64>]) -> f64 {
    let m = cost.len();
    if m == 0 {
        return 0.0;
    }
    let n = cost[0].len();
    debug_assert!(m <= n);
    let mut u = vec![0.0f64; m + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1]; // row assigned to column, 0 = none
    let mut way = vec![0usize; n + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] != 0 {
            total += cost[p[j] - 1][j - 1];
        }
    }
    total
}

/// Order-2 OSPA distance between two position sets with cutoff `c`: optimal
/// sub-pattern assignment cost plus c per unmatched point, root-mean over
/// the larger cardinality. Always lies in [0, c]; two empty sets read 0.
/// Symmetric bit for bit: equal-size inputs are put in a canonical order
/// before the cost matrix is built, so the summation order cannot differ
/// between ospa(x, y) and ospa(y, x).
pub fn ospa(x: &[Point2<f64>], y: &[Point2<f64>], c: f64) -> f64 {
    debug_assert!(c > 0.0);
    let lex_le = |a: &[Point2<f64>], b: &[Point2<f64>]| {
        for (p, q) in a.iter().zip(b) {
            let o = p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y));
            if o != Ordering::Equal {
                return o == Ordering::Less;
            }
        }
        true
    };
    let (small, large) = if x.len() < y.len() {
        (x, y)
    } else if y.len() < x.len() {
        (y, x)
    } else if lex_le(x, y) {
        (x, y)
    } else {
        (y, x)
    };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| {
                    let d = (a - b).norm().min(c);
                    d * d
                })
                .collect()
        })
        .collect();
    let assigned = min_assignment_cost(&cost);
    ((assigned + (n - m) as f64 * c * c) / n as f64).sqrt()
}

/// Accumulates one step of overlap evidence against `peer`: a step with
/// disjoint sensing squares breaks the run and resets the tally; an
/// intersecting step adds the OSPA distance between the two tracked sets.
#[allow(clippy::too_many_arguments)]
pub fn overlap_step(
    ledger: &OverlapLedger,
    peer: usize,
    x_own: &[Point2<f64>],
    x_peer: &[Point2<f64>],
    s_own: &Point2<f64>,
    s_peer: &Point2<f64>,
    sensor: &SensorModel,
    ocfg: &OverlapConfig,
) -> OverlapLedger {
    let mut out = ledger.clone();
    if squares_intersect(s_own, s_peer, sensor.sensing_side) {
        out.add(peer, ospa(x_own, x_peer, ocfg.cutoff));
    } else {
        out.reset(peer);
    }
    out
}

/// Confirmed overlap (a full window of intersecting steps whose score sum
/// stays at or under the threshold) removes exactly one of the pair from
/// tracking: the higher id exits, the lower carries on.
pub fn resolve_overlap(
    ledger: &OverlapLedger,
    self_id: usize,
    peer_id: usize,
    ocfg: &OverlapConfig,
) -> OverlapDecision {
    let t = ledger.tally(peer_id);
    if t.run_len >= ocfg.window && t.score_sum <= ocfg.threshold && self_id > peer_id {
        OverlapDecision::ExitToSearch
    } else {
        OverlapDecision::Continue
    }
}
