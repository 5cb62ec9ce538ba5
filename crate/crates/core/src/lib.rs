//! Self-triggered tube MPC for differential-drive robots and a
//! delay-based leader-follower platoon built on it.

pub mod constraints;
pub mod geom_sets;
pub mod platoon;
pub mod reference;
pub mod stmpc;
pub mod vehicle;
