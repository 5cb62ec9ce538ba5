//! Set-theoretic receding-horizon tracking controller.
//!
//! Offline, a nested family of circular robust one-step controllable sets
//! `T_0 ⊂ T_1 ⊂ … ⊂ T_Ns` is grown from the disturbance ball. Online, the
//! smallest set containing the tracking error selects the mode: outside
//! `T_0` a QP steers the error into the next smaller set for every
//! admissible disturbance; inside `T_0` the admissible input closest to the
//! dead-beat law `u_r - z̃/Ts` is applied.
//!
//! The recursion runs in position units. `r_d_pos = Ts · r_d_input` is the
//! radius of the disturbance ball `-Ts · u_r`.

mod qp;

pub use qp::{solve_qp2, QpError, QP_FEASIBILITY_TOL};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom_sets::{Ball2, Polytope2, MEMBERSHIP_TOL};
use crate::vehicle::LinInput;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StmpcError {
    #[error(
        "controllable sets do not grow: Ts*r_u = {step} must exceed the disturbance radius {r_d_pos}"
    )]
    NoGrowth { step: f64, r_d_pos: f64 },
    #[error("set index {0} has no smaller target set")]
    TerminalIndex(usize),
    #[error("tracking error {error_norm} lies outside the largest controllable set (radius {max_radius})")]
    OutsideFamily { error_norm: f64, max_radius: f64 },
    #[error("{mode:?} optimization infeasible: {source}")]
    Infeasible {
        mode: ControlMode,
        #[source]
        source: QpError,
    },
}

/// Bound on the reference-induced disturbance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceModel {
    /// Bound on the feed-forward input norm (m/s).
    pub r_d_input: f64,
    /// Radius of the disturbance ball in error coordinates (m).
    pub r_d_pos: f64,
}

impl DisturbanceModel {
    pub fn from_input_bound(r_d_input: f64, sample_time: f64) -> Self {
        Self {
            r_d_input,
            r_d_pos: sample_time * r_d_input,
        }
    }

    pub fn from_position_bound(r_d_pos: f64, sample_time: f64) -> Self {
        Self {
            r_d_input: r_d_pos / sample_time,
            r_d_pos,
        }
    }
}

/// Radii of the nested circular controllable sets, smallest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoscFamily {
    radii: Vec<f64>,
    pub sample_time: f64,
    pub r_u: f64,
    pub r_d_pos: f64,
}

impl RoscFamily {
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.radii[j]
    }

    pub fn terminal_radius(&self) -> f64 {
        self.radii[0]
    }

    pub fn max_radius(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Number of sets beyond the terminal one.
    pub fn len_outer(&self) -> usize {
        self.radii.len() - 1
    }
}

pub fn build_rosc_family(
    disturbance: &DisturbanceModel,
    r_u: f64,
    sample_time: f64,
    n_sets: usize,
) -> Result<RoscFamily, StmpcError> {
    let step = sample_time * r_u;
    let r_d_pos = disturbance.r_d_pos;
    if !(step > r_d_pos) {
        return Err(StmpcError::NoGrowth { step, r_d_pos });
    }
    let mut radii = Vec::with_capacity(n_sets + 1);
    radii.push(r_d_pos);
    for _ in 0..n_sets {
        let prev = *radii.last().unwrap();
        radii.push(prev - r_d_pos + step);
    }
    Ok(RoscFamily {
        radii,
        sample_time,
        r_u,
        r_d_pos,
    })
}

/// Smallest `j` with `|z̃| <= r_j`, or `None` outside the largest set.
pub fn membership_index(family: &RoscFamily, error: &Vector2<f64>) -> Option<usize> {
    let n = error.norm();
    let j = family.radii.partition_point(|&r| n > r + MEMBERSHIP_TOL);
    (j < family.radii.len()).then_some(j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlMode {
    #[serde(rename = "ROSC_QP")]
    RoscQp,
    #[serde(rename = "RCI_TERMINAL")]
    RciTerminal,
    #[serde(rename = "STOPPED")]
    Stopped,
}

impl ControlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControlMode::RoscQp => "ROSC_QP",
            ControlMode::RciTerminal => "RCI_TERMINAL",
            ControlMode::Stopped => "STOPPED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlDecision {
    pub u: LinInput,
    pub mode: ControlMode,
    pub j: Option<usize>,
    /// `|z̃ + Ts u|²` in QP mode; the predicted next error `|z̃ + Ts (u - u_r)|²`
    /// in terminal mode. Zero when stopped.
    pub qp_cost: f64,
}

impl ControlDecision {
    pub fn stopped(j: Option<usize>) -> Self {
        Self {
            u: LinInput::zero(),
            mode: ControlMode::Stopped,
            j,
            qp_cost: 0.0,
        }
    }
}

/// Admissible set for the linearized input.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSet {
    Ball(Ball2),
    /// Heading-dependent polytope intersected with a bounding ball.
    PolytopeBall { polytope: Polytope2, bound: Ball2 },
}

impl InputSet {
    fn parts(&self) -> (&[Ball2], &[Vector2<f64>]) {
        match self {
            InputSet::Ball(b) => (std::slice::from_ref(b), &[]),
            InputSet::PolytopeBall { polytope, bound } => {
                (std::slice::from_ref(bound), polytope.rows())
            }
        }
    }

    pub fn contains(&self, u: &Vector2<f64>, tol: f64) -> bool {
        let (balls, rows) = self.parts();
        balls.iter().all(|b| (u - b.center).norm() <= b.radius + tol)
            && rows.iter().all(|h| h.dot(u) <= 1.0 + tol)
    }
}

/// QP mode for `j >= 1`: minimize `|z̃ + Ts u|²` subject to
/// `z̃ + Ts (u - u_r) ∈ T_{j-1}` and `u ∈ K`.
pub fn rosc_step_control(
    error: &Vector2<f64>,
    u_r: &LinInput,
    family: &RoscFamily,
    j: usize,
    input_set: &InputSet,
) -> Result<ControlDecision, StmpcError> {
    if j == 0 || j >= family.radii.len() {
        return Err(StmpcError::TerminalIndex(j));
    }
    let ts = family.sample_time;
    let feedback = -error / ts;
    let target = Ball2::new(u_r.0 + feedback, family.radius(j - 1) / ts);
    let (k_balls, rows) = input_set.parts();
    let mut balls = Vec::with_capacity(1 + k_balls.len());
    balls.push(target);
    balls.extend_from_slice(k_balls);
    let u = solve_qp2(&feedback, &balls, rows).map_err(|source| StmpcError::Infeasible {
        mode: ControlMode::RoscQp,
        source,
    })?;
    Ok(ControlDecision {
        u: LinInput(u),
        mode: ControlMode::RoscQp,
        j: Some(j),
        qp_cost: (error + u * ts).norm_squared(),
    })
}

/// Terminal mode: projection of the dead-beat law `u_r - z̃/Ts` onto `K`.
/// The reported cost is the predicted next error `|z̃ + Ts (u - u_r)|²`.
pub fn rci_step_control(
    error: &Vector2<f64>,
    u_r: &LinInput,
    input_set: &InputSet,
    sample_time: f64,
) -> Result<ControlDecision, StmpcError> {
    let feedback = -error / sample_time;
    let (balls, rows) = input_set.parts();
    let u = solve_qp2(&(feedback + u_r.0), balls, rows).map_err(|source| {
        StmpcError::Infeasible {
            mode: ControlMode::RciTerminal,
            source,
        }
    })?;
    Ok(ControlDecision {
        u: LinInput(u),
        mode: ControlMode::RciTerminal,
        j: Some(0),
        qp_cost: (error + (u - u_r.0) * sample_time).norm_squared(),
    })
}

/// Per-agent controller holding its precomputed family.
#[derive(Clone, Debug, PartialEq)]
pub struct StmpcController {
    pub family: RoscFamily,
    pub disturbance: DisturbanceModel,
}

impl StmpcController {
    pub fn new(
        disturbance: DisturbanceModel,
        r_u: f64,
        sample_time: f64,
        n_sets: usize,
    ) -> Result<Self, StmpcError> {
        Ok(Self {
            family: build_rosc_family(&disturbance, r_u, sample_time, n_sets)?,
            disturbance,
        })
    }

    pub fn decide(
        &self,
        error: &Vector2<f64>,
        u_r: &LinInput,
        input_set: &InputSet,
    ) -> Result<ControlDecision, StmpcError> {
        match membership_index(&self.family, error) {
            None => Err(StmpcError::OutsideFamily {
                error_norm: error.norm(),
                max_radius: self.family.max_radius(),
            }),
            Some(0) => rci_step_control(error, u_r, input_set, self.family.sample_time),
            Some(j) => rosc_step_control(error, u_r, &self.family, j, input_set),
        }
    }
}
