//! JSON scenario files and their conversion into a ready-to-run formation.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use nalgebra::Vector2;
use platoon_core::platoon::{AgentRecord, FollowerInputSet, PlatoonConfig};
use platoon_core::reference::{plan_spline, AnalyticPath, ReferenceError, ReferenceTrajectory, SafetyParams};
use platoon_core::stmpc::{DisturbanceModel, StmpcController, StmpcError};
use platoon_core::vehicle::{ParamError, Pose, RobotParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Wheel speed of 1200 encoder steps per second, in rad/s.
pub const RAD_PER_S_AT_1200_STEPS: f64 = 38.71;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("robot: give exactly one of max_wheel_speed (rad/s) or max_wheel_steps (steps/s)")]
    WheelLimit,
    #[error("scenario needs at least one agent")]
    NoAgents,
    #[error("reference: {0}")]
    Reference(#[from] ReferenceError),
    #[error("robot: {0}")]
    Robot(#[from] ParamError),
    #[error("controller: {0}")]
    Controller(#[from] StmpcError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub wheel_radius: f64,
    pub axle_length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_wheel_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_wheel_steps: Option<f64>,
    pub displacement: f64,
    pub sample_time: f64,
}

impl RobotSpec {
    pub fn params(&self) -> Result<RobotParams, ScenarioError> {
        let omega = match (self.max_wheel_speed, self.max_wheel_steps) {
            (Some(w), None) => w,
            (None, Some(steps)) => steps * RAD_PER_S_AT_1200_STEPS / 1200.0,
            _ => return Err(ScenarioError::WheelLimit),
        };
        let p = RobotParams {
            wheel_radius: self.wheel_radius,
            axle_length: self.axle_length,
            max_wheel_speed: omega,
            displacement: self.displacement,
            sample_time: self.sample_time,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    /// `[x, y, theta]`.
    pub pose: [f64; 3],
    /// `η̄^i` in ticks; ignored for the leader.
    pub desired_delay: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Spline {
        waypoints: Vec<[f64; 2]>,
        avg_speed: f64,
        /// Repetitions of a closed waypoint loop.
        #[serde(default = "one")]
        laps: usize,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        speed: f64,
        #[serde(default)]
        phase: f64,
    },
    Line {
        start: [f64; 2],
        heading: f64,
        speed: f64,
    },
    FigureEight {
        center: [f64; 2],
        half_width: f64,
        half_height: f64,
        period: f64,
    },
}

fn one() -> usize {
    1
}

fn v2(p: [f64; 2]) -> Vector2<f64> {
    Vector2::new(p[0], p[1])
}

impl ReferenceSpec {
    /// Waypoints after unrolling `laps`.
    pub fn unrolled_waypoints(waypoints: &[[f64; 2]], laps: usize) -> Vec<Vector2<f64>> {
        let pts: Vec<Vector2<f64>> = waypoints.iter().copied().map(v2).collect();
        let closed = pts.len() > 1 && pts.first() == pts.last();
        if !closed || laps <= 1 {
            return pts;
        }
        let mut out = pts.clone();
        for _ in 1..laps {
            out.extend_from_slice(&pts[1..]);
        }
        out
    }

    /// Samples the reference; analytic kinds get exactly `min_len` samples.
    pub fn trajectory(&self, sample_time: f64, min_len: usize) -> Result<ReferenceTrajectory, ScenarioError> {
        Ok(match self {
            ReferenceSpec::Spline { waypoints, avg_speed, laps } => {
                plan_spline(&Self::unrolled_waypoints(waypoints, *laps), *avg_speed, sample_time)?
            }
            ReferenceSpec::Circle { center, radius, speed, phase } => AnalyticPath::Circle {
                center: v2(*center),
                radius: *radius,
                speed: *speed,
                phase: *phase,
            }
            .sample(sample_time, min_len),
            ReferenceSpec::Line { start, heading, speed } => AnalyticPath::Line {
                start: v2(*start),
                heading: *heading,
                speed: *speed,
            }
            .sample(sample_time, min_len),
            ReferenceSpec::FigureEight { center, half_width, half_height, period } => AnalyticPath::FigureEight {
                center: v2(*center),
                half_width: *half_width,
                half_height: *half_height,
                period: *period,
            }
            .sample(sample_time, min_len),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub robot: RobotSpec,
    /// Leader first, then followers in platoon order.
    pub agents: Vec<AgentSpec>,
    pub reference: ReferenceSpec,
    /// Radius of the leader's input ball (m/s).
    pub r_u_leader: f64,
    /// Leader disturbance radius in position units (m).
    pub r_d_leader: f64,
    /// Follower feed-forward bound (m/s); defaults to `r_u_leader`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_d_input_follower: Option<f64>,
    #[serde(default)]
    pub follower_input_set: FollowerInputSet,
    pub n_sets: usize,
    pub safe_distance: f64,
    pub min_ref_speed: f64,
    pub body_radius: f64,
    pub ticks: usize,
    /// Half-width of a uniform perturbation of every initial position (m),
    /// drawn from `--seed`.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub initial_pose_jitter: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Everything needed to start a run.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub params: RobotParams,
    pub config: PlatoonConfig,
    pub trajectory: ReferenceTrajectory,
    pub poses: Vec<Pose>,
    pub desired_delays: Vec<usize>,
    pub leader: DisturbanceModel,
    pub follower: DisturbanceModel,
    pub safety: SafetyParams,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = serde_json::from_str(text)?;
        if s.schema != SCHEMA_VERSION {
            return Err(ScenarioError::Schema(s.schema));
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    pub fn r_d_input_follower(&self) -> f64 {
        self.r_d_input_follower.unwrap_or(self.r_u_leader)
    }

    /// Three robots looping a 3.5 m × 4.25 m ellipse of waypoints at
    /// 0.32 m/s on average. The original experiment's waypoints are not
    /// available, so this is a reconstruction.
    pub fn default_reconstruction() -> Self {
        let waypoints = (0..10)
            .map(|k| {
                let a = TAU * (k % 9) as f64 / 9.0;
                [round6(1.75 * a.cos()), round6(2.125 * a.sin())]
            })
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            robot: RobotSpec {
                wheel_radius: 0.021,
                axle_length: 0.1047,
                max_wheel_speed: Some(22.5833),
                max_wheel_steps: None,
                displacement: 0.1,
                sample_time: 0.15,
            },
            agents: vec![
                AgentSpec { pose: [f64::NAN; 3], desired_delay: 0 },
                AgentSpec { pose: [2.1, -0.3, FRAC_PI_2], desired_delay: 4 },
                AgentSpec { pose: [2.35, -0.7, FRAC_PI_2], desired_delay: 8 },
            ],
            reference: ReferenceSpec::Spline {
                waypoints,
                avg_speed: 0.32,
                laps: 9,
            },
            r_u_leader: 0.40,
            r_d_leader: 0.0507,
            r_d_input_follower: None,
            follower_input_set: FollowerInputSet::InnerBall,
            n_sets: 1000,
            safe_distance: 0.15,
            min_ref_speed: 0.05,
            body_radius: 0.07,
            ticks: 2000,
            initial_pose_jitter: 0.0,
        }
        .with_leader_on_reference()
    }

    /// Places the leader on the first reference sample.
    fn with_leader_on_reference(mut self) -> Self {
        let ts = self.robot.sample_time;
        let traj = self.reference.trajectory(ts, 1).expect("default reference is valid");
        let s = platoon_core::reference::sample_reference(&traj, 0, self.robot.displacement)
            .expect("default reference starts moving");
        self.agents[0].pose = [round6(s.pose.x), round6(s.pose.y), round6(s.pose.theta)];
        self
    }

    /// Resolves parameters, samples the reference and applies the seeded jitter.
    pub fn prepare(&self, seed: u64) -> Result<Prepared, ScenarioError> {
        if self.agents.is_empty() {
            return Err(ScenarioError::NoAgents);
        }
        let params = self.robot.params()?;
        let trajectory = self.reference.trajectory(params.sample_time, self.ticks)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poses = self
            .agents
            .iter()
            .map(|a| {
                let mut q = Pose::new(a.pose[0], a.pose[1], a.pose[2]);
                if self.initial_pose_jitter > 0.0 {
                    let j = self.initial_pose_jitter;
                    q.x += rng.gen_range(-j..=j);
                    q.y += rng.gen_range(-j..=j);
                }
                q
            })
            .collect();
        Ok(Prepared {
            params,
            config: PlatoonConfig {
                follower_input_set: self.follower_input_set,
                ..PlatoonConfig::new(params, self.r_u_leader, self.body_radius)
            },
            trajectory,
            poses,
            desired_delays: self.agents.iter().map(|a| a.desired_delay).collect(),
            leader: DisturbanceModel::from_position_bound(self.r_d_leader, params.sample_time),
            follower: DisturbanceModel::from_input_bound(self.r_d_input_follower(), params.sample_time),
            safety: SafetyParams {
                safe_distance: self.safe_distance,
                min_ref_speed: self.min_ref_speed,
            },
        })
    }
}

impl Prepared {
    pub fn agents(&self, n_sets: usize) -> Result<Vec<AgentRecord>, ScenarioError> {
        let ts = self.params.sample_time;
        let leader = StmpcController::new(self.leader, self.config.leader_input_radius, ts, n_sets)?;
        let follower = if self.poses.len() > 1 {
            Some(StmpcController::new(self.follower, self.config.suite.r_u_inner, ts, n_sets)?)
        } else {
            None
        };
        Ok(self
            .poses
            .iter()
            .zip(&self.desired_delays)
            .enumerate()
            .map(|(i, (pose, &delay))| AgentRecord {
                index: i,
                pose: *pose,
                delay: if i == 0 { 0 } else { delay },
                desired_delay: if i == 0 { 0 } else { delay },
                controller: if i == 0 { leader.clone() } else { follower.clone().unwrap() },
            })
            .collect())
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
