//! Planar helpers shared by the sensor model, the search grid and the planner.

use nalgebra::Point2;
// float math comes from this trait in no_std builds; std shadows it
#[allow(unused_imports)]
use num_traits::Float;

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2<f64>,
    pub max: Point2<f64>,
}

impl Rect {
    /// Both extents must be strictly positive.
    pub fn new(min: Point2<f64>, max: Point2<f64>) -> Option<Self> {
        if min.x < max.x && min.y < max.y {
            Some(Self { min, max })
        } else {
            None
        }
    }

    pub fn from_size(width: f64, height: f64) -> Option<Self> {
        Self::new(Point2::new(0.0, 0.0), Point2::new(width, height))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: &Point2<f64>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// The closed square sensing footprint centered on `center`.
pub fn sensing_rect(center: &Point2<f64>, side: f64) -> Rect {
    let h = side / 2.0;
    Rect {
        min: Point2::new(center.x - h, center.y - h),
        max: Point2::new(center.x + h, center.y + h),
    }
}

/// Wraps an angle to (-pi, pi]. The upper boundary is inclusive so that a
/// bearing of exactly pi (sensor due -x of the target) survives unchanged.
pub fn wrap_angle(theta: f64) -> f64 {
    use core::f64::consts::{PI, TAU};
    let mut t = (theta + PI) % TAU;
    if t <= 0.0 {
        t += TAU;
    }
    t - PI
}

/// Square sensing footprint: `p` is seen from `center` iff the L-inf distance
/// is at most `side / 2`. Closed boundary: a point exactly on the edge counts.
pub fn in_sensing_square(p: &Point2<f64>, center: &Point2<f64>, side: f64) -> bool {
    let h = side / 2.0;
    (p.x - center.x).abs() <= h && (p.y - center.y).abs() <= h
}

/// Whether two sensing squares of equal side share at least one point
/// (touching edges count).
pub fn squares_intersect(a: &Point2<f64>, b: &Point2<f64>, side: f64) -> bool {
    (a.x - b.x).abs() <= side && (a.y - b.y).abs() <= side
}
