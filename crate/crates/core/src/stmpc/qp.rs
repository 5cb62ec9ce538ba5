//! Exact projection QP in the plane:
//!
//! ```text
//! minimize |u - c|²  s.t.  |u - center_b| <= radius_b  for every ball b,
//!                          h_i · u <= 1                for every row h_i.
//! ```
//!
//! The minimizer has at most two active constraints, so it is found by
//! enumerating the unconstrained point, the projection onto each single
//! constraint and every pairwise boundary intersection, then keeping the
//! cheapest primal-feasible candidate.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::geom_sets::Ball2;

/// Primal feasibility tolerance for candidates.
pub const QP_FEASIBILITY_TOL: f64 = 1e-11;

/// Relative slack for near-tangent boundary pairs.
const TANGENT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum QpError {
    #[error("constraint set is empty")]
    Infeasible,
}

enum Boundary {
    Circle(Ball2),
    Line(Vector2<f64>),
}

fn is_feasible(u: &Vector2<f64>, balls: &[Ball2], rows: &[Vector2<f64>]) -> bool {
    balls
        .iter()
        .all(|b| (u - b.center).norm() <= b.radius + QP_FEASIBILITY_TOL)
        && rows.iter().all(|h| h.dot(u) <= 1.0 + QP_FEASIBILITY_TOL)
}

fn project(c: &Vector2<f64>, boundary: &Boundary) -> Option<Vector2<f64>> {
    match boundary {
        Boundary::Circle(b) => {
            let offset = c - b.center;
            let n = offset.norm();
            (n > 0.0).then(|| b.center + offset * (b.radius / n))
        }
        Boundary::Line(h) => {
            let nsq = h.norm_squared();
            (nsq > 0.0).then(|| c - h * ((h.dot(c) - 1.0) / nsq))
        }
    }
}

fn line_line(a: &Vector2<f64>, b: &Vector2<f64>, out: &mut Vec<Vector2<f64>>) {
    if let Some(inv) = Matrix2::new(a.x, a.y, b.x, b.y).try_inverse() {
        out.push(inv * Vector2::new(1.0, 1.0));
    }
}

fn line_circle(h: &Vector2<f64>, ball: &Ball2, out: &mut Vec<Vector2<f64>>) {
    let nsq = h.norm_squared();
    if nsq == 0.0 {
        return;
    }
    let n = nsq.sqrt();
    let unit = h / n;
    // Signed distance from the circle center to the line along `unit`.
    let dist = (1.0 - h.dot(&ball.center)) / n;
    let foot = ball.center + unit * dist;
    let disc = ball.radius * ball.radius - dist * dist;
    if disc < -TANGENT_SLACK * ball.radius * ball.radius {
        return;
    }
    let half = disc.max(0.0).sqrt();
    let tangent = Vector2::new(-unit.y, unit.x);
    out.push(foot + tangent * half);
    out.push(foot - tangent * half);
}

fn circle_circle(a: &Ball2, b: &Ball2, out: &mut Vec<Vector2<f64>>) {
    let delta = b.center - a.center;
    let d = delta.norm();
    let slack = TANGENT_SLACK * (a.radius + b.radius);
    if d == 0.0 || d > a.radius + b.radius + slack {
        return;
    }
    if d < (a.radius - b.radius).abs() - slack {
        return;
    }
    let along = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    let half = (a.radius * a.radius - along * along).max(0.0).sqrt();
    let unit = delta / d;
    let foot = a.center + unit * along;
    let tangent = Vector2::new(-unit.y, unit.x);
    out.push(foot + tangent * half);
    out.push(foot - tangent * half);
}

/// Minimizer of `|u - cost_center|²` over the intersection of `balls` and
/// the half-planes `rows · u <= 1`.
pub fn solve_qp2(
    cost_center: &Vector2<f64>,
    balls: &[Ball2],
    rows: &[Vector2<f64>],
) -> Result<Vector2<f64>, QpError> {
    if is_feasible(cost_center, balls, rows) {
        return Ok(*cost_center);
    }
    let boundaries: Vec<Boundary> = balls
        .iter()
        .copied()
        .map(Boundary::Circle)
        .chain(rows.iter().copied().map(Boundary::Line))
        .collect();

    let mut candidates = Vec::with_capacity(boundaries.len() * boundaries.len() * 2);
    for (i, first) in boundaries.iter().enumerate() {
        candidates.extend(project(cost_center, first));
        for second in &boundaries[i + 1..] {
            match (first, second) {
                (Boundary::Line(a), Boundary::Line(b)) => line_line(a, b, &mut candidates),
                (Boundary::Line(h), Boundary::Circle(c)) | (Boundary::Circle(c), Boundary::Line(h)) => {
                    line_circle(h, c, &mut candidates)
                }
                (Boundary::Circle(a), Boundary::Circle(b)) => circle_circle(a, b, &mut candidates),
            }
        }
    }

    candidates
        .into_iter()
        .filter(|u| is_feasible(u, balls, rows))
        .map(|u| ((u - cost_center).norm_squared(), u))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, u)| u)
        .ok_or(QpError::Infeasible)
}
