//! Leader-follower platooning on top of the per-agent controller.
//!
//! Each tick the leader tracks the planned reference and broadcasts its pose
//! and unicycle input; follower `i` tracks the leader's pose delayed by
//! `η^i` ticks. Every agent also announces a one-step reachable ball to its
//! successor. A follower whose ball meets its predecessor's stops for the
//! tick and lengthens its delay by one.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::InputConstraintSuite;
use crate::geom_sets::{balls_intersect, Ball2};
use crate::reference::{
    delayed_ref, sample_reference, LeaderHistory, LeaderRecord, ReferenceError,
    ReferenceSample, ReferenceTrajectory,
};
use crate::stmpc::{membership_index, ControlDecision, ControlMode, InputSet, StmpcController, StmpcError};
use crate::vehicle::{
    diff_drive_step, fl_input_inverse, fl_input_transform, lin_input_to_wheels, output_map,
    LinInput, Pose, RobotParams, UnicycleInput, WheelSpeeds,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlatoonError {
    #[error("initial configuration not ordered by distance to the leader at agent {agent}")]
    InitialOrdering { agent: usize },
    #[error("desired delays must be >= 1 and strictly increasing (agent {agent})")]
    DelayOrdering { agent: usize },
    #[error("formation needs a leader")]
    NoAgents,
    #[error("reachable-set messages from different ticks ({mine} vs {predecessor})")]
    TickMismatch { mine: usize, predecessor: usize },
    #[error("missing reachable-set message from agent {sender} at tick {k}")]
    MissingMessage { sender: usize, k: usize },
    #[error("agent {agent} at tick {tick}: {source}")]
    Control {
        tick: usize,
        agent: usize,
        #[source]
        source: StmpcError,
    },
    #[error("agent {agent} at tick {tick}: {source}")]
    Reference {
        tick: usize,
        agent: usize,
        #[source]
        source: ReferenceError,
    },
}

/// Input set used by the followers' controllers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowerInputSet {
    /// Heading-independent inner ball `Ball(0, r_u_inner)`.
    #[default]
    InnerBall,
    /// Exact heading-dependent rhombus `U(θ)` intersected with the outer ball.
    /// For far-away targets its optimum sits on a pure-rotation vertex, which
    /// only swings point B around the wheel axle on the real plant.
    HeadingPolytope,
}

/// Parameters shared by every agent of a homogeneous platoon.
#[derive(Clone, Debug, PartialEq)]
pub struct PlatoonConfig {
    pub params: RobotParams,
    pub suite: InputConstraintSuite,
    /// Radius of the leader's input ball `Û⁰` (m/s).
    pub leader_input_radius: f64,
    /// Margin added to every reachable ball for the robot footprint (m).
    pub body_radius: f64,
    pub follower_input_set: FollowerInputSet,
}

impl PlatoonConfig {
    pub fn new(params: RobotParams, leader_input_radius: f64, body_radius: f64) -> Self {
        Self {
            params,
            suite: InputConstraintSuite::new(params),
            leader_input_radius,
            body_radius,
            follower_input_set: FollowerInputSet::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentRecord {
    pub index: usize,
    pub pose: Pose,
    /// Current delay `η^i` in ticks; zero for the leader.
    pub delay: usize,
    pub desired_delay: usize,
    pub controller: StmpcController,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeaderBroadcast {
    pub k: usize,
    pub pose: Pose,
    pub input: UnicycleInput,
    /// Linearized input that produced `input`.
    pub lin_input: LinInput,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachableSetMsg {
    pub k: usize,
    pub sender: usize,
    pub ball: Ball2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateDecision {
    Proceed,
    StopAndDelay,
}

/// One row of the per-tick log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub k: usize,
    pub i: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub z1: f64,
    pub z2: f64,
    pub zr1: f64,
    pub zr2: f64,
    pub err_norm: f64,
    pub j: Option<usize>,
    pub mode: ControlMode,
    pub u1: f64,
    pub u2: f64,
    pub v: f64,
    pub omega: f64,
    pub omega_r: f64,
    pub omega_l: f64,
    pub eta: usize,
    pub gate_fired: u8,
    pub min_dist_to_pred: Option<f64>,
    /// Reference position of the geometric center (delayed leader pose for followers).
    pub xr: f64,
    pub yr: f64,
}

impl LogRow {
    fn new(
        k: usize,
        rec: &AgentRecord,
        b: f64,
        reference: &Pose,
        decision: &ControlDecision,
        unicycle: &UnicycleInput,
        wheels: &WheelSpeeds,
        gate_fired: bool,
    ) -> Self {
        let z = output_map(&rec.pose, b).0;
        let z_r = output_map(reference, b).0;
        Self {
            k,
            i: rec.index,
            x: rec.pose.x,
            y: rec.pose.y,
            theta: rec.pose.theta,
            z1: z.x,
            z2: z.y,
            zr1: z_r.x,
            zr2: z_r.y,
            err_norm: (z - z_r).norm(),
            j: decision.j,
            mode: decision.mode,
            u1: decision.u.0.x,
            u2: decision.u.0.y,
            v: unicycle.v,
            omega: unicycle.omega,
            omega_r: wheels.right,
            omega_l: wheels.left,
            eta: rec.delay,
            gate_fired: gate_fired as u8,
            min_dist_to_pred: None,
            xr: reference.x,
            yr: reference.y,
        }
    }
}

/// One-tick reachable ball of the point B, inflated by the body radius.
pub fn reachable_ball(z: &Vector2<f64>, r_u_outer: f64, sample_time: f64, body_radius: f64) -> Ball2 {
    Ball2::new(*z, sample_time * r_u_outer + body_radius)
}

pub fn collision_gate(
    mine: &ReachableSetMsg,
    predecessor: &ReachableSetMsg,
) -> Result<GateDecision, PlatoonError> {
    if mine.k != predecessor.k {
        return Err(PlatoonError::TickMismatch {
            mine: mine.k,
            predecessor: predecessor.k,
        });
    }
    Ok(if balls_intersect(&mine.ball, &predecessor.ball) {
        GateDecision::StopAndDelay
    } else {
        GateDecision::Proceed
    })
}

fn own_message(rec: &AgentRecord, cfg: &PlatoonConfig, k: usize) -> ReachableSetMsg {
    let z = output_map(&rec.pose, cfg.params.displacement).0;
    ReachableSetMsg {
        k,
        sender: rec.index,
        ball: reachable_ball(&z, cfg.suite.r_u_outer, cfg.params.sample_time, cfg.body_radius),
    }
}

fn follower_input_set(cfg: &PlatoonConfig, theta: f64) -> InputSet {
    match cfg.follower_input_set {
        FollowerInputSet::InnerBall => InputSet::Ball(cfg.suite.inner_ball()),
        FollowerInputSet::HeadingPolytope => InputSet::PolytopeBall {
            polytope: cfg.suite.at_heading(theta),
            bound: cfg.suite.outer_ball(),
        },
    }
}

pub fn leader_step(
    rec: &AgentRecord,
    reference: &ReferenceSample,
    cfg: &PlatoonConfig,
    k: usize,
) -> Result<(WheelSpeeds, LeaderBroadcast, LogRow), PlatoonError> {
    let b = cfg.params.displacement;
    let error = output_map(&rec.pose, b).0 - reference.z_r.0;
    let input_set = InputSet::Ball(Ball2::centered(cfg.leader_input_radius));
    let decision = rec
        .controller
        .decide(&error, &reference.u_r, &input_set)
        .map_err(|source| PlatoonError::Control {
            tick: k,
            agent: rec.index,
            source,
        })?;
    let theta = rec.pose.theta;
    let unicycle = fl_input_transform(theta, &decision.u, b);
    let wheels = lin_input_to_wheels(theta, &decision.u, &cfg.params);
    let broadcast = LeaderBroadcast {
        k,
        pose: rec.pose,
        input: unicycle,
        lin_input: decision.u,
    };
    let row = LogRow::new(k, rec, b, &reference.pose, &decision, &unicycle, &wheels, false);
    Ok((wheels, broadcast, row))
}

/// Gate first, then delayed tracking. On a stop the delay is incremented
/// before the logged reference is evaluated, so the reference index does
/// not advance while the follower stands still.
pub fn follower_step(
    rec: &mut AgentRecord,
    history: &LeaderHistory,
    predecessor: &ReachableSetMsg,
    cfg: &PlatoonConfig,
    k: usize,
) -> Result<(WheelSpeeds, ReachableSetMsg, LogRow), PlatoonError> {
    let b = cfg.params.displacement;
    let own = own_message(rec, cfg, k);
    let gate = collision_gate(&own, predecessor)?;
    if gate == GateDecision::StopAndDelay {
        rec.delay += 1;
    }
    let leader = delayed_ref(history, k, rec.delay).map_err(|source| PlatoonError::Reference {
        tick: k,
        agent: rec.index,
        source,
    })?;
    let error = own.ball.center - output_map(&leader.pose, b).0;

    let decision = match gate {
        GateDecision::StopAndDelay => ControlDecision::stopped(membership_index(&rec.controller.family, &error)),
        GateDecision::Proceed => {
            let u_r = fl_input_inverse(leader.pose.theta, &leader.input, b);
            let input_set = follower_input_set(cfg, rec.pose.theta);
            rec.controller
                .decide(&error, &u_r, &input_set)
                .map_err(|source| PlatoonError::Control {
                    tick: k,
                    agent: rec.index,
                    source,
                })?
        }
    };
    let (unicycle, wheels) = match decision.mode {
        ControlMode::Stopped => (UnicycleInput::default(), WheelSpeeds::default()),
        _ => (
            fl_input_transform(rec.pose.theta, &decision.u, b),
            lin_input_to_wheels(rec.pose.theta, &decision.u, &cfg.params),
        ),
    };
    let row = LogRow::new(
        k,
        rec,
        b,
        &leader.pose,
        &decision,
        &unicycle,
        &wheels,
        gate == GateDecision::StopAndDelay,
    );
    Ok((wheels, own, row))
}

/// Index of the first agent breaking the ordering
/// `|z⁰ - z¹| < |z⁰ - z²| < … < |z⁰ - z^{N-1}|`, if any.
pub fn initial_ordering_violation(poses: &[Pose], b: f64) -> Option<usize> {
    let lead = output_map(poses.first()?, b).0;
    let dist: Vec<f64> = poses
        .iter()
        .map(|q| (output_map(q, b).0 - lead).norm_squared())
        .collect();
    (2..poses.len()).find(|&i| dist[i] <= dist[i - 1])
}

/// Messages exchanged within the formation, keyed by `(sender, tick)`.
#[derive(Clone, Debug, Default)]
pub struct Mailbox {
    reachable: BTreeMap<(usize, usize), ReachableSetMsg>,
    leader: LeaderHistory,
}

impl Mailbox {
    pub fn post_reachable(&mut self, msg: ReachableSetMsg) {
        self.reachable.insert((msg.sender, msg.k), msg);
    }

    pub fn reachable(&self, sender: usize, k: usize) -> Result<&ReachableSetMsg, PlatoonError> {
        self.reachable
            .get(&(sender, k))
            .ok_or(PlatoonError::MissingMessage { sender, k })
    }

    pub fn post_broadcast(&mut self, msg: &LeaderBroadcast) {
        self.leader.push(LeaderRecord {
            pose: msg.pose,
            input: msg.input,
        });
    }

    pub fn leader_history(&self) -> &LeaderHistory {
        &self.leader
    }

    fn discard_before(&mut self, k: usize) {
        self.reachable.retain(|&(_, tick), _| tick >= k);
    }
}

/// Deterministic tick scheduler for the whole platoon.
#[derive(Clone, Debug)]
pub struct Formation {
    pub cfg: PlatoonConfig,
    pub agents: Vec<AgentRecord>,
    pub reference: ReferenceTrajectory,
    mailbox: Mailbox,
    k: usize,
}

impl Formation {
    /// `agents[0]` is the leader. Followers start from their desired delay.
    pub fn new(
        cfg: PlatoonConfig,
        mut agents: Vec<AgentRecord>,
        reference: ReferenceTrajectory,
    ) -> Result<Self, PlatoonError> {
        if agents.is_empty() {
            return Err(PlatoonError::NoAgents);
        }
        let poses: Vec<Pose> = agents.iter().map(|a| a.pose).collect();
        if let Some(agent) = initial_ordering_violation(&poses, cfg.params.displacement) {
            return Err(PlatoonError::InitialOrdering { agent });
        }
        for i in 1..agents.len() {
            let prev = if i == 1 { 0 } else { agents[i - 1].desired_delay };
            if agents[i].desired_delay <= prev {
                return Err(PlatoonError::DelayOrdering { agent: i });
            }
        }
        for (i, a) in agents.iter_mut().enumerate() {
            a.index = i;
            a.delay = if i == 0 { 0 } else { a.desired_delay };
        }
        Ok(Self {
            cfg,
            agents,
            reference,
            mailbox: Mailbox::default(),
            k: 0,
        })
    }

    pub fn tick(&self) -> usize {
        self.k
    }

    pub fn mailbox(&self) -> &Mailbox {
        &self.mailbox
    }

    /// Runs one tick: reachable sets from the current poses, leader, then
    /// followers in index order (or concurrently with `parallel`, which yields
    /// identical rows), and finally the plant update.
    pub fn step(&mut self, parallel: bool) -> Result<Vec<LogRow>, PlatoonError> {
        let k = self.k;
        let b = self.cfg.params.displacement;
        self.mailbox.discard_before(k);
        for rec in &self.agents {
            self.mailbox.post_reachable(own_message(rec, &self.cfg, k));
        }

        let reference = sample_reference(&self.reference, k, b).map_err(|source| {
            PlatoonError::Reference {
                tick: k,
                agent: 0,
                source,
            }
        })?;
        let (leader_wheels, broadcast, leader_row) =
            leader_step(&self.agents[0], &reference, &self.cfg, k)?;
        self.mailbox.post_broadcast(&broadcast);

        let cfg = &self.cfg;
        let mailbox = &self.mailbox;
        let run = |rec: &mut AgentRecord| {
            let pred = mailbox.reachable(rec.index - 1, k)?;
            follower_step(rec, mailbox.leader_history(), pred, cfg, k)
        };
        let followers = &mut self.agents[1..];
        let outputs: Vec<_> = if parallel {
            followers.par_iter_mut().map(run).collect::<Result<_, _>>()?
        } else {
            followers.iter_mut().map(run).collect::<Result<_, _>>()?
        };

        let mut wheels = Vec::with_capacity(self.agents.len());
        let mut rows = Vec::with_capacity(self.agents.len());
        wheels.push(leader_wheels);
        rows.push(leader_row);
        for (w, _msg, row) in outputs {
            wheels.push(w);
            rows.push(row);
        }
        for i in 1..rows.len() {
            let gap = (self.agents[i].pose.position() - self.agents[i - 1].pose.position()).norm();
            rows[i].min_dist_to_pred = Some(gap);
        }
        for (rec, w) in self.agents.iter_mut().zip(&wheels) {
            rec.pose = diff_drive_step(&rec.pose, w, &self.cfg.params);
        }
        self.k += 1;
        Ok(rows)
    }
}
