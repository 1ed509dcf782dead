//! Particle PHD filter over true targets plus a gridded search density over
//! virtual (static, noiselessly observed) targets.
//!
//! The particle set carries the target-domain intensity: its weight sum is
//! the expected target count. The search grid carries one virtual target per
//! cell center; because virtual targets are static and observed without
//! noise, their intensity recursion collapses to "multiply by the decay
//! factor while unseen, reset to the uniform density when seen", so the grid
//! stores the dimensionless per-cell search value in [0, 1] and derives the
//! density as value / |A|. This keeps the contract that a just-seen cell has
//! search value exactly 1.0 (storing the density itself can miss 1.0 by an
//! ulp after the |A| round trip).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Point2;
// float math comes from this trait in no_std builds; std shadows it
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{in_sensing_square, Rect};
use crate::models::{
    detection_prob, likelihood, transition_sample, KinematicState, Measurement, MotionModel,
    SensorModel, TargetKind,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("area sides must be positive integer multiples of cell_side")]
    IndivisibleArea,
    #[error("cell index ({0}, {1}) out of bounds")]
    CellOutOfBounds(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: KinematicState,
    pub weight: f64,
}

/// Weighted particle approximation of the true-target PHD, plus the capacity
/// parameters the predict and resample steps use.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    /// Resample target: ceil(mass) * particles_per_target survivors.
    pub particles_per_target: usize,
    /// Fresh birth particles drawn per predict.
    pub birth_particles_per_step: usize,
}

impl ParticleSet {
    pub fn empty(particles_per_target: usize, birth_particles_per_step: usize) -> Self {
        Self {
            particles: Vec::new(),
            particles_per_target,
            birth_particles_per_step,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Total weight: the expected number of targets in the whole space.
    pub fn mass(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    fn like_empty(&self) -> Self {
        Self::empty(self.particles_per_target, self.birth_particles_per_step)
    }
}

/// Regular tiling of the surveillance area by square cells; `values[iy * nx
/// + ix]` is the search value of cell (ix, iy), the probability that an
/// undiscovered target sits there given how recently the cell was seen.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    origin: Point2<f64>,
    nx: usize,
    ny: usize,
    cell_side: f64,
    values: Vec<f64>,
}

impl SearchGrid {
    /// Zero-valued grid over `area`. Both sides must be (numerically) integer
    /// multiples of `cell_side`.
    pub fn new(area: &Rect, cell_side: f64) -> Result<Self, FilterError> {
        if !(cell_side > 0.0) || !cell_side.is_finite() {
            return Err(FilterError::IndivisibleArea);
        }
        let count = |len: f64| -> Result<usize, FilterError> {
            let ratio = len / cell_side;
            let n = ratio.round();
            if n >= 1.0 && (ratio - n).abs() <= 1e-9 * n {
                Ok(n as usize)
            } else {
                Err(FilterError::IndivisibleArea)
            }
        };
        let nx = count(area.width())?;
        let ny = count(area.height())?;
        Ok(Self {
            origin: area.min,
            nx,
            ny,
            cell_side,
            values: vec![0.0; nx * ny],
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_side(&self) -> f64 {
        self.cell_side
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    pub fn area(&self) -> Rect {
        Rect {
            min: self.origin,
            max: Point2::new(
                self.origin.x + self.nx as f64 * self.cell_side,
                self.origin.y + self.ny as f64 * self.cell_side,
            ),
        }
    }

    /// |A|, the surveillance area in m^2.
    pub fn total_area(&self) -> f64 {
        (self.nx as f64 * self.cell_side) * (self.ny as f64 * self.cell_side)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2<f64> {
        Point2::new(
            self.origin.x + (ix as f64 + 0.5) * self.cell_side,
            self.origin.y + (iy as f64 + 0.5) * self.cell_side,
        )
    }

    pub fn value(&self, ix: usize, iy: usize) -> Result<f64, FilterError> {
        if ix >= self.nx || iy >= self.ny {
            return Err(FilterError::CellOutOfBounds(ix, iy));
        }
        Ok(self.values[iy * self.nx + ix])
    }

    /// Search density of a cell, value / |A|, in [0, 1/|A|].
    pub fn density(&self, ix: usize, iy: usize) -> Result<f64, FilterError> {
        Ok(self.value(ix, iy)? / self.total_area())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Fraction of cells with value strictly above `beta`.
    pub fn coverage(&self, beta: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let n = self.values.iter().filter(|&&v| v > beta).count();
        n as f64 / self.values.len() as f64
    }

    pub fn same_tiling(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.origin == other.origin
            && self.cell_side == other.cell_side
    }
}

/// Search value of one cell: the stored value, which equals density * |A|.
pub fn search_value(grid: &SearchGrid, cell: (usize, usize)) -> Result<f64, FilterError> {
    grid.value(cell.0, cell.1)
}

/// Everything the filter recursion needs besides its state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Total birth intensity mass added per predict, uniform over the area.
    pub birth_mass: f64,
    /// Per-step survival factor J of unseen search cells.
    pub search_decay: f64,
    /// Std dev of each birth particle velocity component, m/s.
    pub birth_velocity_std: f64,
    pub motion: MotionModel,
    pub sensor: SensorModel,
}

/// PHD predict: survivors are transitioned and scaled by p_S, fresh birth
/// particles add `birth_mass` total weight, and search cells outside the
/// sensing square at `s_prev` decay by the configured factor (cells inside
/// it are left unchanged: a watched virtual target cannot reappear).
///
/// Birth positions are uniform over the sensing square at `s_prev` clipped
/// to the area: only there can the coming update confirm or cull a birth
/// hypothesis. Spreading births over the whole area instead leaves the
/// out-of-footprint share un-culled forever (p_D = 0), and the filter's
/// total mass diverges from the true target count.
pub fn predict<R: Rng + ?Sized>(
    particles: &ParticleSet,
    grid: &SearchGrid,
    s_prev: &Point2<f64>,
    cfg: &FilterConfig,
    rng: &mut R,
) -> (ParticleSet, SearchGrid) {
    assert!(
        cfg.birth_mass == 0.0 || particles.birth_particles_per_step > 0,
        "nonzero birth mass needs at least one birth particle"
    );
    let p_s = cfg.motion.survival_prob;
    let mut out = particles.like_empty();
    out.particles
        .reserve(particles.len() + particles.birth_particles_per_step);
    for p in &particles.particles {
        out.particles.push(Particle {
            state: transition_sample(&p.state, &cfg.motion, rng),
            weight: p_s * p.weight,
        });
    }
    if cfg.birth_mass > 0.0 {
        let area = grid.area();
        let half = cfg.sensor.sensing_side / 2.0;
        let lo_x = (s_prev.x - half).max(area.min.x);
        let hi_x = (s_prev.x + half).min(area.max.x);
        let lo_y = (s_prev.y - half).max(area.min.y);
        let hi_y = (s_prev.y + half).min(area.max.y);
        let b = particles.birth_particles_per_step;
        let w = cfg.birth_mass / b as f64;
        for _ in 0..b {
            let px = lo_x + rng.random::<f64>() * (hi_x - lo_x);
            let py = lo_y + rng.random::<f64>() * (hi_y - lo_y);
            let vx = cfg.birth_velocity_std * rng.sample::<f64, _>(StandardNormal);
            let vy = cfg.birth_velocity_std * rng.sample::<f64, _>(StandardNormal);
            out.particles.push(Particle {
                state: KinematicState::new(px, vx, py, vy),
                weight: w,
            });
        }
    }
    let mut g = grid.clone();
    let side = cfg.sensor.sensing_side;
    let (nx, ny) = g.dims();
    for iy in 0..ny {
        for ix in 0..nx {
            let c = g.cell_center(ix, iy);
            if !in_sensing_square(&c, s_prev, side) {
                g.values_mut()[iy * nx + ix] *= cfg.search_decay;
            }
        }
    }
    (out, g)
}

/// Particle weight multipliers for a measurement set received at `s`:
/// w_i <- [1 - p_D(x_i) + sum_z p_D(x_i) g(z|x_i) / (kappa(z) + tau(z))] w_i
/// with tau(z) = sum_j p_D(x_j) g(z|x_j) w_j over the predicted weights. A
/// measurement whose full denominator is zero contributes nothing. A particle
/// exactly coincident with the sensor has undefined bearing; it is treated as
/// unmatchable (g = 0).
fn reweight(
    particles: &ParticleSet,
    zs: &[Measurement],
    s: &Point2<f64>,
    cfg: &FilterConfig,
) -> ParticleSet {
    let n = particles.len();
    let mut out = particles.clone();
    let mut pd = vec![0.0f64; n];
    for (i, p) in particles.particles.iter().enumerate() {
        pd[i] = detection_prob(&p.state, s, &cfg.sensor, TargetKind::Physical);
    }
    let mut factor: Vec<f64> = pd.iter().map(|d| 1.0 - d).collect();
    let mut col = vec![0.0f64; n];
    for z in zs {
        let mut tau = 0.0;
        for (i, p) in particles.particles.iter().enumerate() {
            col[i] = if pd[i] > 0.0 {
                pd[i] * likelihood(z, &p.state, s, &cfg.sensor).unwrap_or(0.0)
            } else {
                0.0
            };
            tau += col[i] * p.weight;
        }
        let denom = cfg.sensor.clutter_intensity(z) + tau;
        if denom > 0.0 {
            for i in 0..n {
                factor[i] += col[i] / denom;
            }
        }
    }
    for (i, p) in out.particles.iter_mut().enumerate() {
        p.weight *= factor[i];
    }
    out
}

/// PHD update: reweights the particles against `zs` and resets every search
/// cell whose center lies in the sensing square at `s` to value 1 (density
/// 1/|A|); unseen cells are untouched.
pub fn update(
    particles: &ParticleSet,
    grid: &SearchGrid,
    zs: &[Measurement],
    s: &Point2<f64>,
    cfg: &FilterConfig,
) -> (ParticleSet, SearchGrid) {
    let out = reweight(particles, zs, s, cfg);
    let mut g = grid.clone();
    let side = cfg.sensor.sensing_side;
    let (nx, ny) = g.dims();
    for iy in 0..ny {
        for ix in 0..nx {
            let c = g.cell_center(ix, iy);
            if in_sensing_square(&c, s, side) {
                g.values_mut()[iy * nx + ix] = 1.0;
            }
        }
    }
    (out, g)
}

/// Hypothetical update for control scoring: the particle reweighting of
/// [`update`] against a hypothesized measurement set from a candidate sensor
/// position, leaving grid and real filter state untouched.
pub fn pseudo_update(
    particles: &ParticleSet,
    zs_hyp: &[Measurement],
    s_hyp: &Point2<f64>,
    cfg: &FilterConfig,
) -> ParticleSet {
    reweight(particles, zs_hyp, s_hyp, cfg)
}

/// Systematic resampling to ceil(mass) * particles_per_target equal-weight
/// particles. Total mass is preserved; zero mass yields an empty set.
pub fn resample<R: Rng + ?Sized>(particles: &ParticleSet, rng: &mut R) -> ParticleSet {
    let mass = particles.mass();
    let mut out = particles.like_empty();
    if mass <= 0.0 || particles.is_empty() {
        return out;
    }
    let count = mass.ceil() as usize * particles.particles_per_target;
    if count == 0 {
        return out;
    }
    let w = mass / count as f64;
    let u: f64 = rng.random();
    let step = mass / count as f64;
    out.particles.reserve(count);
    let mut i = 0usize;
    let mut acc = particles.particles[0].weight;
    for k in 0..count {
        let t = (k as f64 + u) * step;
        while acc < t && i + 1 < particles.len() {
            i += 1;
            acc += particles.particles[i].weight;
        }
        out.particles.push(Particle {
            state: particles.particles[i].state,
            weight: w,
        });
    }
    out
}

/// Expected number of targets inside `region` (closed rectangle): the weight
/// sum of the particles located there.
pub fn estimate_cardinality(particles: &ParticleSet, region: &Rect) -> f64 {
    particles
        .particles
        .iter()
        .filter(|p| region.contains(&p.state.position()))
        .map(|p| p.weight)
        .sum()
}

/// The particles located inside `region`, as a standalone set. State
/// extraction works on this subset so that mass elsewhere (the birth trail
/// left along a search walk, a target tracked earlier) cannot drag the
/// cluster centroids away from what the agent is actually looking at.
pub fn regional_subset(particles: &ParticleSet, region: &Rect) -> ParticleSet {
    let mut out = particles.like_empty();
    out.particles = particles
        .particles
        .iter()
        .filter(|p| region.contains(&p.state.position()))
        .cloned()
        .collect();
    out
}

/// Round-half-up integer target count from a PHD mass.
pub fn round_cardinality(mass: f64) -> usize {
    debug_assert!(mass >= 0.0);
    (mass + 0.5).floor() as usize
}

/// Weighted k-means state extraction with k = n_hat. Initial centroids are
/// the highest-weight particles at pairwise position distance >=
/// `min_separation` (ties by lowest particle index); if separation cannot
/// fill k seeds, the next highest-weight particles at distinct positions are
/// used. Runs a fixed 20 Lloyd iterations; assignment is by position, ties to
/// the lowest centroid index; an emptied cluster keeps its centroid. Output
/// order follows seed order, so equal inputs give identical outputs.
pub fn extract_states(
    particles: &ParticleSet,
    n_hat: usize,
    min_separation: f64,
) -> Vec<KinematicState> {
    if n_hat == 0 || particles.is_empty() {
        return Vec::new();
    }
    let ps = &particles.particles;
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| ps[b].weight.total_cmp(&ps[a].weight).then(a.cmp(&b)));

    let mut seeds: Vec<usize> = Vec::with_capacity(n_hat);
    for &i in &order {
        if seeds.len() == n_hat {
            break;
        }
        let pi = ps[i].state.position();
        if seeds
            .iter()
            .all(|&j| (ps[j].state.position() - pi).norm() >= min_separation)
        {
            seeds.push(i);
        }
    }
    if seeds.len() < n_hat {
        for &i in &order {
            if seeds.len() == n_hat {
                break;
            }
            let pi = ps[i].state.position();
            if seeds.iter().all(|&j| ps[j].state.position() != pi) {
                seeds.push(i);
            }
        }
    }

    let mut centroids: Vec<KinematicState> = seeds.iter().map(|&i| ps[i].state).collect();
    let k = centroids.len();
    let mut assign = vec![0usize; ps.len()];
    for _ in 0..20 {
        for (i, p) in ps.iter().enumerate() {
            let pos = p.state.position();
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, cen) in centroids.iter().enumerate() {
                let d = (cen.position() - pos).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
        }
        let mut wsum = vec![0.0f64; k];
        let mut acc = vec![[0.0f64; 4]; k];
        for (i, p) in ps.iter().enumerate() {
            let c = assign[i];
            wsum[c] += p.weight;
            acc[c][0] += p.weight * p.state.px;
            acc[c][1] += p.weight * p.state.vx;
            acc[c][2] += p.weight * p.state.py;
            acc[c][3] += p.weight * p.state.vy;
        }
        for c in 0..k {
            if wsum[c] > 0.0 {
                centroids[c] = KinematicState::new(
                    acc[c][0] / wsum[c],
                    acc[c][1] / wsum[c],
                    acc[c][2] / wsum[c],
                    acc[c][3] / wsum[c],
                );
            }
        }
    }
    centroids
}
