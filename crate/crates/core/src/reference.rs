//! Leader reference trajectories and the quantities derived from them: the
//! unicycle-consistent heading and velocities, the linearized reference point
//! and feed-forward input, offline safety checks, and the delayed leader
//! reference that followers track.

mod spline;

pub use spline::{PathState, WaypointSpline};

use nalgebra::Vector2;
use thiserror::Error;

use crate::vehicle::{fl_input_inverse, output_map, LinInput, LinPoint, Pose, UnicycleInput};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("a spline needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoint {0} duplicates its predecessor (zero-length segment)")]
    DuplicateWaypoint(usize),
    #[error("average speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("singular reference at tick {0}: zero longitudinal speed")]
    SingularReference(usize),
    #[error("tick {k} outside reference of length {len}")]
    TickOutOfRange { k: usize, len: usize },
    #[error("leader history is empty")]
    EmptyHistory,
    #[error("inter-agent delay must be at least one tick")]
    ZeroDelay,
}

/// Reference position and its first two derivatives sampled at every tick.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTrajectory {
    pub sample_time: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ddx: Vec<f64>,
    pub ddy: Vec<f64>,
}

impl ReferenceTrajectory {
    /// Samples `path` at `k * sample_time` for `len` ticks.
    pub fn from_fn(sample_time: f64, len: usize, path: impl Fn(f64) -> PathState) -> Self {
        let mut traj = Self {
            sample_time,
            x: Vec::with_capacity(len),
            y: Vec::with_capacity(len),
            dx: Vec::with_capacity(len),
            dy: Vec::with_capacity(len),
            ddx: Vec::with_capacity(len),
            ddy: Vec::with_capacity(len),
        };
        for k in 0..len {
            let s = path(k as f64 * sample_time);
            traj.x.push(s.position.x);
            traj.y.push(s.position.y);
            traj.dx.push(s.velocity.x);
            traj.dy.push(s.velocity.y);
            traj.ddx.push(s.acceleration.x);
            traj.ddy.push(s.acceleration.y);
        }
        traj
    }

    /// Every tick inside `[0, spline.duration()]`.
    pub fn from_spline(spline: &WaypointSpline, sample_time: f64) -> Self {
        let len = (spline.duration() / sample_time + 1e-9).floor() as usize + 1;
        Self::from_fn(sample_time, len, |t| spline.eval(t))
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn position(&self, k: usize) -> Vector2<f64> {
        Vector2::new(self.x[k], self.y[k])
    }

    pub fn speed(&self, k: usize) -> f64 {
        self.dx[k].hypot(self.dy[k])
    }
}

pub fn plan_spline(
    waypoints: &[Vector2<f64>],
    avg_speed: f64,
    sample_time: f64,
) -> Result<ReferenceTrajectory, ReferenceError> {
    let spline = WaypointSpline::fit(waypoints, avg_speed)?;
    Ok(ReferenceTrajectory::from_spline(&spline, sample_time))
}

/// Closed-form test trajectories with exact derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticPath {
    Line {
        start: Vector2<f64>,
        heading: f64,
        speed: f64,
    },
    Circle {
        center: Vector2<f64>,
        radius: f64,
        speed: f64,
        phase: f64,
    },
    /// `x = a sin(wt)`, `y = c sin(2wt) / 2` around `center`.
    FigureEight {
        center: Vector2<f64>,
        half_width: f64,
        half_height: f64,
        period: f64,
    },
}

impl AnalyticPath {
    pub fn eval(&self, t: f64) -> PathState {
        match *self {
            AnalyticPath::Line {
                start,
                heading,
                speed,
            } => {
                let dir = Vector2::new(heading.cos(), heading.sin());
                PathState {
                    position: start + dir * speed * t,
                    velocity: dir * speed,
                    acceleration: Vector2::zeros(),
                }
            }
            AnalyticPath::Circle {
                center,
                radius,
                speed,
                phase,
            } => {
                let w = speed / radius;
                let (s, c) = (w * t + phase).sin_cos();
                PathState {
                    position: center + Vector2::new(c, s) * radius,
                    velocity: Vector2::new(-s, c) * speed,
                    acceleration: Vector2::new(-c, -s) * speed * w,
                }
            }
            AnalyticPath::FigureEight {
                center,
                half_width,
                half_height,
                period,
            } => {
                let w = std::f64::consts::TAU / period;
                let (s1, c1) = (w * t).sin_cos();
                let (s2, c2) = (2.0 * w * t).sin_cos();
                PathState {
                    position: center + Vector2::new(half_width * s1, half_height * s2 / 2.0),
                    velocity: Vector2::new(half_width * w * c1, half_height * w * c2),
                    acceleration: Vector2::new(
                        -half_width * w * w * s1,
                        -2.0 * half_height * w * w * s2,
                    ),
                }
            }
        }
    }

    pub fn sample(&self, sample_time: f64, len: usize) -> ReferenceTrajectory {
        ReferenceTrajectory::from_fn(sample_time, len, |t| self.eval(t))
    }
}

/// Reference pose, unicycle velocities, and their linearized counterparts at one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSample {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
    pub u_r: LinInput,
    pub z_r: LinPoint,
}

pub fn sample_reference(
    traj: &ReferenceTrajectory,
    k: usize,
    b: f64,
) -> Result<ReferenceSample, ReferenceError> {
    if k >= traj.len() {
        return Err(ReferenceError::TickOutOfRange { k, len: traj.len() });
    }
    let (dx, dy) = (traj.dx[k], traj.dy[k]);
    let speed_sq = dx * dx + dy * dy;
    if speed_sq == 0.0 {
        return Err(ReferenceError::SingularReference(k));
    }
    let v = speed_sq.sqrt();
    let omega = (traj.ddy[k] * dx - traj.ddx[k] * dy) / speed_sq;
    let pose = Pose::new(traj.x[k], traj.y[k], dy.atan2(dx));
    Ok(ReferenceSample {
        pose,
        v,
        omega,
        u_r: fl_input_inverse(pose.theta, &UnicycleInput::new(v, omega), b),
        z_r: output_map(&pose, b),
    })
}

/// Largest feed-forward norm `max_k |u_r(k)|` over the trajectory.
pub fn max_feedforward_norm(traj: &ReferenceTrajectory, b: f64) -> Result<f64, ReferenceError> {
    (0..traj.len()).try_fold(0.0f64, |acc, k| Ok(acc.max(sample_reference(traj, k, b)?.u_r.norm())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafetyParams {
    pub safe_distance: f64,
    pub min_ref_speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProximityViolation {
    pub k: usize,
    /// Follower index (1-based, as in the formation).
    pub follower: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedViolation {
    pub k: usize,
    pub speed: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SafetyReport {
    pub proximity: Vec<ProximityViolation>,
    pub slow: Vec<SpeedViolation>,
}

impl SafetyReport {
    pub fn is_clean(&self) -> bool {
        self.proximity.is_empty() && self.slow.is_empty()
    }
}

/// Checks the planner assumptions against the followers' initial linearized
/// positions: the reference point stays farther than the safe distance from
/// each of them, and the reference speed stays above its lower bound.
pub fn validate_safety(
    traj: &ReferenceTrajectory,
    follower_positions: &[Vector2<f64>],
    safety: &SafetyParams,
    b: f64,
) -> SafetyReport {
    let mut report = SafetyReport::default();
    for k in 0..traj.len() {
        let speed = traj.speed(k);
        if speed <= safety.min_ref_speed {
            report.slow.push(SpeedViolation { k, speed });
        }
        let (dx, dy) = (traj.dx[k], traj.dy[k]);
        let heading = if speed > 0.0 { dy.atan2(dx) } else { 0.0 };
        let z_r = output_map(&Pose::new(traj.x[k], traj.y[k], heading), b).0;
        for (idx, p) in follower_positions.iter().enumerate() {
            let distance = (z_r - p).norm();
            if distance <= safety.safe_distance {
                report.proximity.push(ProximityViolation {
                    k,
                    follower: idx + 1,
                    distance,
                });
            }
        }
    }
    report
}

/// Leader pose and unicycle input recorded at one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeaderRecord {
    pub pose: Pose,
    pub input: UnicycleInput,
}

/// Tick-indexed leader history as received by a follower.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LeaderHistory {
    records: Vec<LeaderRecord>,
}

impl LeaderHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: LeaderRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<&LeaderRecord> {
        self.records.get(k)
    }
}

/// Leader record `eta` ticks before `k`. Before any such history exists the
/// initial leader pose is held with zero inputs.
pub fn delayed_ref(
    history: &LeaderHistory,
    k: usize,
    eta: usize,
) -> Result<LeaderRecord, ReferenceError> {
    if eta == 0 {
        return Err(ReferenceError::ZeroDelay);
    }
    let first = history.get(0).ok_or(ReferenceError::EmptyHistory)?;
    match k.checked_sub(eta) {
        Some(idx) => history.get(idx).copied().ok_or(ReferenceError::TickOutOfRange {
            k: idx,
            len: history.len(),
        }),
        None => Ok(LeaderRecord {
            pose: first.pose,
            input: UnicycleInput::default(),
        }),
    }
}
