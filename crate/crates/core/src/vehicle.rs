//! Differential-drive and unicycle kinematics, the input maps between them,
//! and the input-output feedback linearization about a point displaced by
//! `b` along the heading.
//!
//! All quantities are SI. Headings are never wrapped.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("robot parameter `{name}` must be finite and strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
}

/// Physical and discretization constants of one robot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Wheel radius `R` (m).
    pub wheel_radius: f64,
    /// Axle length `D` (m).
    pub axle_length: f64,
    /// Wheel speed limit `Ω̄` (rad/s).
    pub max_wheel_speed: f64,
    /// Displacement `b` of the controlled point ahead of the axle center (m).
    pub displacement: f64,
    /// Sampling time `Ts` (s).
    pub sample_time: f64,
}

impl RobotParams {
    pub fn new(
        wheel_radius: f64,
        axle_length: f64,
        max_wheel_speed: f64,
        displacement: f64,
        sample_time: f64,
    ) -> Result<Self, ParamError> {
        let p = Self {
            wheel_radius,
            axle_length,
            max_wheel_speed,
            displacement,
            sample_time,
        };
        p.validate()?;
        Ok(p)
    }

    /// Khepera IV with the wheel limit reduced to 700 steps/s.
    pub fn khepera_iv() -> Self {
        Self {
            wheel_radius: 0.021,
            axle_length: 0.1047,
            max_wheel_speed: 22.5833,
            displacement: 0.1,
            sample_time: 0.15,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (name, value) in [
            ("wheel_radius", self.wheel_radius),
            ("axle_length", self.axle_length),
            ("max_wheel_speed", self.max_wheel_speed),
            ("displacement", self.displacement),
            ("sample_time", self.sample_time),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::NotPositive { name, value });
            }
        }
        Ok(())
    }

    /// `T`, mapping wheel speeds `[ω_R, ω_L]` to unicycle inputs `[v, ω]`.
    pub fn wheel_to_unicycle_matrix(&self) -> Matrix2<f64> {
        let (r, d) = (self.wheel_radius, self.axle_length);
        Matrix2::new(r / 2.0, r / 2.0, r / d, -r / d)
    }

    /// `T⁻¹` in closed form.
    pub fn unicycle_to_wheel_matrix(&self) -> Matrix2<f64> {
        let (r, d) = (self.wheel_radius, self.axle_length);
        Matrix2::new(1.0 / r, d / (2.0 * r), 1.0 / r, -d / (2.0 * r))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub right: f64,
    pub left: f64,
}

impl WheelSpeeds {
    pub fn new(right: f64, left: f64) -> Self {
        Self { right, left }
    }

    pub fn is_admissible(&self, p: &RobotParams) -> bool {
        self.right.abs() <= p.max_wheel_speed && self.left.abs() <= p.max_wheel_speed
    }

    pub fn max_abs(&self) -> f64 {
        self.right.abs().max(self.left.abs())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnicycleInput {
    pub v: f64,
    pub omega: f64,
}

impl UnicycleInput {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.v, self.omega)
    }
}

/// Velocity command for the displaced point B (m/s).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinInput(pub Vector2<f64>);

impl LinInput {
    pub fn new(u1: f64, u2: f64) -> Self {
        Self(Vector2::new(u1, u2))
    }

    pub fn zero() -> Self {
        Self(Vector2::zeros())
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Position of the displaced point B (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinPoint(pub Vector2<f64>);

impl LinPoint {
    pub fn new(z1: f64, z2: f64) -> Self {
        Self(Vector2::new(z1, z2))
    }
}

pub fn diff_drive_step(q: &Pose, w: &WheelSpeeds, p: &RobotParams) -> Pose {
    let (ts, r, d) = (p.sample_time, p.wheel_radius, p.axle_length);
    let (s, c) = q.theta.sin_cos();
    let forward = ts * r / 2.0 * (w.right + w.left);
    Pose {
        x: q.x + forward * c,
        y: q.y + forward * s,
        theta: q.theta + ts * r / d * (w.right - w.left),
    }
}

pub fn wheels_to_unicycle(w: &WheelSpeeds, p: &RobotParams) -> UnicycleInput {
    let out = p.wheel_to_unicycle_matrix() * Vector2::new(w.right, w.left);
    UnicycleInput::new(out.x, out.y)
}

pub fn unicycle_to_wheels(u: &UnicycleInput, p: &RobotParams) -> WheelSpeeds {
    let out = p.unicycle_to_wheel_matrix() * u.as_vector();
    WheelSpeeds::new(out.x, out.y)
}

pub fn unicycle_step(q: &Pose, u: &UnicycleInput, p: &RobotParams) -> Pose {
    let ts = p.sample_time;
    let (s, c) = q.theta.sin_cos();
    Pose {
        x: q.x + ts * u.v * c,
        y: q.y + ts * u.v * s,
        theta: q.theta + ts * u.omega,
    }
}

pub fn output_map(q: &Pose, b: f64) -> LinPoint {
    let (s, c) = q.theta.sin_cos();
    LinPoint::new(q.x + b * c, q.y + b * s)
}

/// `T_FL(θ)`; its determinant is `1/b`.
pub fn fl_matrix(theta: f64, b: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s / b, c / b)
}

/// `T_FL(θ)⁻¹ = [[cos θ, -b sin θ], [sin θ, b cos θ]]`.
pub fn fl_matrix_inverse(theta: f64, b: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -b * s, s, b * c)
}

pub fn fl_input_transform(theta: f64, u: &LinInput, b: f64) -> UnicycleInput {
    let out = fl_matrix(theta, b) * u.0;
    UnicycleInput::new(out.x, out.y)
}

pub fn fl_input_inverse(theta: f64, u: &UnicycleInput, b: f64) -> LinInput {
    LinInput(fl_matrix_inverse(theta, b) * u.as_vector())
}

/// Wheel speeds realizing a linearized input at heading `theta`: `T⁻¹ T_FL(θ) u`.
pub fn lin_input_to_wheels(theta: f64, u: &LinInput, p: &RobotParams) -> WheelSpeeds {
    unicycle_to_wheels(&fl_input_transform(theta, u, p.displacement), p)
}

pub fn lin_model_step(z: &LinPoint, u: &LinInput, ts: f64) -> LinPoint {
    LinPoint(z.0 + u.0 * ts)
}

pub fn internal_dynamics_step(theta: f64, u: &LinInput, p: &RobotParams) -> f64 {
    let (s, c) = theta.sin_cos();
    theta + p.sample_time * (-s * u.0.x + c * u.0.y) / p.displacement
}

/// Bound on the one-tick gap between the exact plant and the linear model
/// for a step with angular speed `omega`: `b (Ts ω)² / 2`.
pub fn fl_mismatch_bound(omega: f64, p: &RobotParams) -> f64 {
    let turn = p.sample_time * omega;
    p.displacement * turn * turn / 2.0
}
