//! Planar set algebra: closed Euclidean balls and H-representation
//! polytopes normalized to `{u : h_i · u <= 1}`.
//!
//! Every set the controller touches online is one of these two shapes, so
//! membership, intersection and distance stay closed-form.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for all membership and intersection predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Closed ball `{p : |p - center| <= radius}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball2 {
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl Ball2 {
    /// Panics if `radius` is negative or not finite.
    pub fn new(center: Vector2<f64>, radius: f64) -> Self {
        assert!(
            radius.is_finite() && radius >= 0.0,
            "ball radius must be finite and non-negative, got {radius}"
        );
        Self { center, radius }
    }

    pub fn centered(radius: f64) -> Self {
        Self::new(Vector2::zeros(), radius)
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        ball_contains(self, p)
    }

    pub fn intersects(&self, other: &Ball2) -> bool {
        balls_intersect(self, other)
    }

    /// Minkowski sum with a centered ball of radius `margin`.
    pub fn inflate(&self, margin: f64) -> Self {
        Self::new(self.center, self.radius + margin)
    }
}

/// Polytope `{u : h_i · u <= 1 for every row h_i}`; always contains the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytope2 {
    rows: Vec<Vector2<f64>>,
}

impl Polytope2 {
    pub fn new(rows: Vec<Vector2<f64>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vector2<f64>] {
        &self.rows
    }

    pub fn contains(&self, u: &Vector2<f64>) -> bool {
        polytope_contains(self, u)
    }

    /// Largest row value `max_i h_i · u`; the point is inside iff this is <= 1.
    pub fn max_row_value(&self, u: &Vector2<f64>) -> f64 {
        self.rows
            .iter()
            .map(|h| h.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bounded iff the row normals positively span the plane, i.e. no
    /// half-plane through the origin contains them all. For rows sorted by
    /// angle that means every angular gap between neighbours is below pi.
    pub fn is_bounded(&self) -> bool {
        if self.rows.len() < 3 {
            return false;
        }
        let mut angles: Vec<f64> = self.rows.iter().map(|h| h.y.atan2(h.x)).collect();
        angles.sort_by(f64::total_cmp);
        let n = angles.len();
        (0..n).all(|i| {
            let next = if i + 1 < n {
                angles[i + 1]
            } else {
                angles[0] + std::f64::consts::TAU
            };
            next - angles[i] < std::f64::consts::PI - 1e-12
        })
    }
}

pub fn ball_contains(b: &Ball2, p: &Vector2<f64>) -> bool {
    (p - b.center).norm() <= b.radius + MEMBERSHIP_TOL
}

pub fn balls_intersect(a: &Ball2, b: &Ball2) -> bool {
    (a.center - b.center).norm() <= a.radius + b.radius + MEMBERSHIP_TOL
}

pub fn polytope_contains(p: &Polytope2, u: &Vector2<f64>) -> bool {
    p.rows.iter().all(|h| h.dot(u) <= 1.0 + MEMBERSHIP_TOL)
}

pub fn point_to_ball_distance(p: &Vector2<f64>, b: &Ball2) -> f64 {
    ((p - b.center).norm() - b.radius).max(0.0)
}
