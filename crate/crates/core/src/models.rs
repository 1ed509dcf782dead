//! Target motion, range-bearing sensing, agent kinematics and clutter.

use alloc::vec::Vec;

use nalgebra::{Cholesky, Matrix4, Point2, Vector4};
// float math comes from this trait in no_std builds; std shadows it
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::geometry::{in_sensing_square, wrap_angle, Rect};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("noise covariance must be symmetric and positive semidefinite")]
    InvalidNoiseCovariance,
    #[error("sampling interval must be positive and finite")]
    InvalidSamplingInterval,
    #[error("process noise covariance is singular, transition density undefined")]
    SingularNoiseCovariance,
    #[error("sensor and target positions coincide, bearing undefined")]
    CoincidentPositions,
}

/// Planar position-velocity state, ordered [px, vx, py, vy].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub px: f64,
    pub vx: f64,
    pub py: f64,
    pub vy: f64,
}

impl KinematicState {
    pub fn new(px: f64, vx: f64, py: f64, vy: f64) -> Self {
        Self { px, vx, py, vy }
    }

    pub fn at_rest(px: f64, py: f64) -> Self {
        Self::new(px, 0.0, py, 0.0)
    }

    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.px, self.py)
    }

    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.px, self.vx, self.py, self.vy)
    }

    pub fn from_vector(v: Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.px.is_finite() && self.vx.is_finite() && self.py.is_finite() && self.vy.is_finite()
    }
}

/// Linear-Gaussian motion: x' = F x + w, w ~ N(0, sigma_w^2 * Q), plus the
/// per-step survival probability used by the PHD predict.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    /// State transition F.
    pub transition: Matrix4<f64>,
    /// Noise shape Q; the effective covariance is `process_noise * Q`.
    pub noise_cov: Matrix4<f64>,
    /// Sampling interval T in seconds.
    pub sampling_interval: f64,
    /// Noise scale sigma_w^2 (m^2/s^3).
    pub process_noise: f64,
    /// Survival probability p_S per step.
    pub survival_prob: f64,
    noise_chol: Option<Matrix4<f64>>,
    noise_inv: Option<(Matrix4<f64>, f64)>,
}

impl MotionModel {
    /// Nearly-constant-velocity model on [px, vx, py, vy]:
    ///
    /// F = [[1,T,0,0],[0,1,0,0],[0,0,1,T],[0,0,0,1]]
    /// Q = [[T/3,T/2,0,0],[T/2,T,0,0],[0,0,T/3,T/2],[0,0,T/2,T]]
    pub fn nearly_constant_velocity(
        t: f64,
        process_noise: f64,
        survival_prob: f64,
    ) -> Result<Self, ModelError> {
        #[rustfmt::skip]
        let f = Matrix4::new(
            1.0, t,   0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, t,
            0.0, 0.0, 0.0, 1.0,
        );
        #[rustfmt::skip]
        let q = Matrix4::new(
            t / 3.0, t / 2.0, 0.0,     0.0,
            t / 2.0, t,       0.0,     0.0,
            0.0,     0.0,     t / 3.0, t / 2.0,
            0.0,     0.0,     t / 2.0, t,
        );
        Self::new(f, q, t, process_noise, survival_prob)
    }

    /// `noise_cov` must be symmetric, and `process_noise * noise_cov` either
    /// zero (noiseless) or positive definite; rank-deficient nonzero
    /// covariances are rejected so sampling stays well defined.
    pub fn new(
        transition: Matrix4<f64>,
        noise_cov: Matrix4<f64>,
        sampling_interval: f64,
        process_noise: f64,
        survival_prob: f64,
    ) -> Result<Self, ModelError> {
        if !(sampling_interval > 0.0) || !sampling_interval.is_finite() {
            return Err(ModelError::InvalidSamplingInterval);
        }
        let scale = noise_cov.amax().max(1.0);
        for i in 0..4 {
            for j in 0..4 {
                if (noise_cov[(i, j)] - noise_cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(ModelError::InvalidNoiseCovariance);
                }
            }
        }
        if process_noise < 0.0 {
            return Err(ModelError::InvalidNoiseCovariance);
        }
        let cov = noise_cov * process_noise;
        let (noise_chol, noise_inv) = if cov == Matrix4::zeros() {
            (None, None)
        } else {
            match Cholesky::new(cov) {
                Some(ch) => {
                    let det = cov.determinant();
                    let inv = cov
                        .try_inverse()
                        .ok_or(ModelError::InvalidNoiseCovariance)?;
                    (Some(ch.l()), Some((inv, det)))
                }
                None => return Err(ModelError::InvalidNoiseCovariance),
            }
        };
        Ok(Self {
            transition,
            noise_cov,
            sampling_interval,
            process_noise,
            survival_prob,
            noise_chol,
            noise_inv,
        })
    }
}

/// One step of the motion model: F x plus sampled process noise.
pub fn transition_sample<R: Rng + ?Sized>(
    x: &KinematicState,
    model: &MotionModel,
    rng: &mut R,
) -> KinematicState {
    debug_assert!(x.is_finite());
    let mut v = model.transition * x.to_vector();
    if let Some(l) = &model.noise_chol {
        let xi = Vector4::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        v += l * xi;
    }
    KinematicState::from_vector(v)
}

/// Gaussian transition density N(x_next; F x_prev, sigma_w^2 Q). Errors when
/// the noise covariance is singular rather than silently pseudo-inverting.
pub fn transition_density(
    x_next: &KinematicState,
    x_prev: &KinematicState,
    model: &MotionModel,
) -> Result<f64, ModelError> {
    use core::f64::consts::TAU;
    let (inv, det) = model
        .noise_inv
        .as_ref()
        .ok_or(ModelError::SingularNoiseCovariance)?;
    let d = x_next.to_vector() - model.transition * x_prev.to_vector();
    let quad = (d.transpose() * inv * d)[(0, 0)];
    Ok((-0.5 * quad).exp() / (TAU * TAU * det.sqrt()))
}

/// Range-bearing measurement; bearing lies in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// Meters, >= 0.
    pub range: f64,
    /// Radians in (-pi, pi].
    pub bearing: f64,
}

/// Range-bearing sensor with a square detection footprint and range-dependent
/// noise: sigma_range = floor + slope * r^2, sigma_bearing = floor + slope * r.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// Detection probability inside the footprint (p_D,max).
    pub detection_prob_max: f64,
    /// Side a of the square footprint, meters.
    pub sensing_side: f64,
    /// zeta_0, meters.
    pub range_noise_floor: f64,
    /// beta_zeta, 1/meters.
    pub range_noise_slope: f64,
    /// phi_0, radians.
    pub bearing_noise_floor: f64,
    /// beta_phi, radians/meter.
    pub bearing_noise_slope: f64,
    /// Poisson clutter rate lambda per step over the measurement space.
    pub clutter_rate: f64,
    /// Upper range bound R_max of the measurement space [0, R_max] x (-pi, pi];
    /// conventionally the surveillance-area diagonal.
    pub max_range: f64,
}

impl SensorModel {
    /// Noise standard deviations at true range `r`.
    pub fn noise_stds(&self, r: f64) -> (f64, f64) {
        (
            self.range_noise_floor + self.range_noise_slope * r * r,
            self.bearing_noise_floor + self.bearing_noise_slope * r,
        )
    }

    /// Noiseless measurement h(x, s): range ||s - p||, bearing
    /// atan2(s_y - p_y, s_x - p_x). Errors when the positions coincide.
    pub fn predicted_measurement(
        &self,
        x: &KinematicState,
        s: &Point2<f64>,
    ) -> Result<Measurement, ModelError> {
        let dx = s.x - x.px;
        let dy = s.y - x.py;
        let range = dx.hypot(dy);
        if range == 0.0 {
            return Err(ModelError::CoincidentPositions);
        }
        Ok(Measurement {
            range,
            bearing: dy.atan2(dx),
        })
    }

    /// Uniform clutter intensity kappa(z) = lambda / (R_max * 2 pi) on the
    /// measurement space, zero outside it.
    pub fn clutter_intensity(&self, z: &Measurement) -> f64 {
        use core::f64::consts::{PI, TAU};
        let in_space =
            z.range >= 0.0 && z.range <= self.max_range && z.bearing > -PI && z.bearing <= PI;
        if in_space {
            self.clutter_rate / (self.max_range * TAU)
        } else {
            0.0
        }
    }
}

/// Whether the state's position lies in the agent's sensing square.
pub fn in_footprint(x: &KinematicState, s: &Point2<f64>, sensor: &SensorModel) -> bool {
    in_sensing_square(&x.position(), s, sensor.sensing_side)
}

/// Target label: physical targets are detected with p_D,max inside the
/// footprint; virtual (search) targets are observed there noiselessly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Physical,
    Virtual,
}

/// Step-function detection probability: p_D,max (physical) or 1 (virtual)
/// inside the closed sensing square, 0 outside.
pub fn detection_prob(
    x: &KinematicState,
    s: &Point2<f64>,
    sensor: &SensorModel,
    kind: TargetKind,
) -> f64 {
    if !in_footprint(x, s, sensor) {
        return 0.0;
    }
    match kind {
        TargetKind::Physical => sensor.detection_prob_max,
        TargetKind::Virtual => 1.0,
    }
}

/// Noisy range-bearing measurement of `x` from sensor position `s`. Sampled
/// ranges are clamped at 0 (the noise is additive Gaussian and the invariant
/// is range >= 0); bearings are wrapped to (-pi, pi].
pub fn measure<R: Rng + ?Sized>(
    x: &KinematicState,
    s: &Point2<f64>,
    sensor: &SensorModel,
    rng: &mut R,
) -> Result<Measurement, ModelError> {
    let ideal = sensor.predicted_measurement(x, s)?;
    let (sr, sb) = sensor.noise_stds(ideal.range);
    let nr: f64 = rng.sample(StandardNormal);
    let nb: f64 = rng.sample(StandardNormal);
    Ok(Measurement {
        range: (ideal.range + sr * nr).max(0.0),
        bearing: wrap_angle(ideal.bearing + sb * nb),
    })
}

/// Measurement likelihood g(z | x, s): product of independent range and
/// bearing Gaussians with standard deviations evaluated at the candidate
/// state's true range. The bearing residual is wrapped to (-pi, pi].
pub fn likelihood(
    z: &Measurement,
    x: &KinematicState,
    s: &Point2<f64>,
    sensor: &SensorModel,
) -> Result<f64, ModelError> {
    use core::f64::consts::TAU;
    let ideal = sensor.predicted_measurement(x, s)?;
    let (sr, sb) = sensor.noise_stds(ideal.range);
    let dr = z.range - ideal.range;
    let db = wrap_angle(z.bearing - ideal.bearing);
    let quad = (dr / sr) * (dr / sr) + (db / sb) * (db / sb);
    Ok((-0.5 * quad).exp() / (TAU * sr * sb))
}

/// Poisson clutter: N ~ Poisson(lambda) points uniform on
/// [0, R_max] x (-pi, pi]. A rate of zero yields no clutter.
pub fn clutter_sample<R: Rng + ?Sized>(sensor: &SensorModel, rng: &mut R) -> Vec<Measurement> {
    use core::f64::consts::{PI, TAU};
    let mut out = Vec::new();
    if sensor.clutter_rate <= 0.0 {
        return out;
    }
    let pois = Poisson::new(sensor.clutter_rate).expect("positive clutter rate");
    let n = pois.sample(rng) as usize;
    out.reserve(n);
    for _ in 0..n {
        let range = rng.random::<f64>() * sensor.max_range;
        // u in [0,1) maps to (-pi, pi], hitting +pi at u = 0
        let bearing = PI - rng.random::<f64>() * TAU;
        out.push(Measurement { range, bearing });
    }
    out
}

/// Agent motion constraints: per step the agent may stay or jump to one of
/// `radial_levels` rings of `angular_sectors` equally spaced positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentKinematics {
    /// Radial step Delta_R, meters.
    pub radial_step: f64,
    /// Ring count N_R.
    pub radial_levels: u32,
    /// Positions per ring N_theta.
    pub angular_sectors: u32,
    /// Communication range C_R, meters.
    pub comm_range: f64,
}

/// Admissible next positions from `s`: the current position first, then rings
/// in increasing radius, counter-clockwise from the +x axis. Candidates
/// outside the surveillance rectangle are removed, not projected.
pub fn admissible_actions(s: &Point2<f64>, kin: &AgentKinematics, area: &Rect) -> Vec<Point2<f64>> {
    use core::f64::consts::TAU;
    let mut out = Vec::with_capacity(1 + (kin.radial_levels * kin.angular_sectors) as usize);
    if area.contains(s) {
        out.push(*s);
    }
    let dtheta = TAU / kin.angular_sectors as f64;
    for l1 in 1..=kin.radial_levels {
        let r = l1 as f64 * kin.radial_step;
        for l2 in 0..kin.angular_sectors {
            let a = l2 as f64 * dtheta;
            let p = Point2::new(s.x + r * a.cos(), s.y + r * a.sin());
            if area.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}
