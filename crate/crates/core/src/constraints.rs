//! Input-constraint sets in wheel, unicycle and linearized coordinates,
//! plus the circular inner and outer bounds of the heading-dependent set.

use nalgebra::{Matrix2, Vector2};

use crate::geom_sets::{Ball2, Polytope2};
use crate::vehicle::RobotParams;

/// Box `|ω_R|, |ω_L| <= Ω̄` as four normalized rows.
pub fn build_wheel_polytope(p: &RobotParams) -> Polytope2 {
    let inv = 1.0 / p.max_wheel_speed;
    Polytope2::new(vec![
        Vector2::new(-inv, 0.0),
        Vector2::new(0.0, -inv),
        Vector2::new(inv, 0.0),
        Vector2::new(0.0, inv),
    ])
}

/// Rows of the wheel box right-multiplied by `T⁻¹`.
pub fn build_unicycle_polytope(p: &RobotParams) -> Polytope2 {
    right_multiply(&build_wheel_polytope(p), &p.unicycle_to_wheel_matrix())
}

/// Admissible linearized inputs at heading `theta`, written out entry by entry.
pub fn build_h_theta(theta: f64, p: &RobotParams) -> Polytope2 {
    let (s, c) = theta.sin_cos();
    let (d, b) = (p.axle_length, p.displacement);
    let den = 2.0 * p.max_wheel_speed * p.wheel_radius * b;
    Polytope2::new(vec![
        Vector2::new((d * s - 2.0 * c * b) / den, (-d * c - 2.0 * s * b) / den),
        Vector2::new((-d * s - 2.0 * c * b) / den, (d * c - 2.0 * s * b) / den),
        Vector2::new((-d * s + 2.0 * c * b) / den, (d * c + 2.0 * s * b) / den),
        Vector2::new((d * s + 2.0 * c * b) / den, (-d * c + 2.0 * s * b) / den),
    ])
}

/// Radius of the largest centered ball inside every `U(θ)`.
pub fn inner_radius(p: &RobotParams) -> f64 {
    let (r, d, b, om) = (p.wheel_radius, p.axle_length, p.displacement, p.max_wheel_speed);
    2.0 * om * r * b / (4.0 * b * b + d * d).sqrt()
}

/// Radius of the smallest centered ball containing every `U(θ)`.
pub fn outer_radius(p: &RobotParams) -> f64 {
    let (r, d, b, om) = (p.wheel_radius, p.axle_length, p.displacement, p.max_wheel_speed);
    (om * r).max(2.0 * om * r * b / d)
}

/// Vertices of a polygon whose rows are listed in cyclic order, obtained by
/// intersecting each pair of adjacent boundary lines.
pub fn polytope_vertices(poly: &Polytope2) -> Vec<Vector2<f64>> {
    let rows = poly.rows();
    let n = rows.len();
    (0..n)
        .filter_map(|i| {
            let (a, b) = (rows[i], rows[(i + 1) % n]);
            Matrix2::new(a.x, a.y, b.x, b.y)
                .try_inverse()
                .map(|m| m * Vector2::new(1.0, 1.0))
        })
        .collect()
}

fn right_multiply(poly: &Polytope2, m: &Matrix2<f64>) -> Polytope2 {
    Polytope2::new(poly.rows().iter().map(|h| m.transpose() * h).collect())
}

/// Every input set derived from one robot's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct InputConstraintSuite {
    pub params: RobotParams,
    pub wheel: Polytope2,
    pub unicycle: Polytope2,
    pub r_u_inner: f64,
    pub r_u_outer: f64,
}

impl InputConstraintSuite {
    pub fn new(params: RobotParams) -> Self {
        Self {
            params,
            wheel: build_wheel_polytope(&params),
            unicycle: build_unicycle_polytope(&params),
            r_u_inner: inner_radius(&params),
            r_u_outer: outer_radius(&params),
        }
    }

    pub fn at_heading(&self, theta: f64) -> Polytope2 {
        build_h_theta(theta, &self.params)
    }

    pub fn inner_ball(&self) -> Ball2 {
        Ball2::centered(self.r_u_inner)
    }

    pub fn outer_ball(&self) -> Ball2 {
        Ball2::centered(self.r_u_outer)
    }
}
