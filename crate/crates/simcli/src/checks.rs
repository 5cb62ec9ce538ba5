//! Startup validation shared by `check` and `simulate`.

use std::fmt;

use platoon_core::platoon::initial_ordering_violation;
use platoon_core::reference::{max_feedforward_norm, sample_reference, validate_safety};
use platoon_core::stmpc::{build_rosc_family, membership_index};
use platoon_core::vehicle::output_map;

use crate::scenario::{Prepared, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &'static str) -> Self {
        Self { name, passed: true, detail: String::new() }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, passed: false, detail: detail.into() }
    }

    fn from_bool(name: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Self {
        if ok {
            Self::pass(name)
        } else {
            Self::fail(name, detail())
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            write!(f, "{} PASS", self.name)
        } else if self.detail.is_empty() {
            write!(f, "{} FAIL", self.name)
        } else {
            write!(f, "{} FAIL {}", self.name, self.detail)
        }
    }
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|c| c.passed)
}

/// Runs every startup check on an already prepared scenario.
pub fn run_checks(s: &Scenario, p: &Prepared) -> Vec<CheckOutcome> {
    let b = p.params.displacement;
    let ts = p.params.sample_time;
    let suite = &p.config.suite;
    let mut out = Vec::new();

    out.push(match initial_ordering_violation(&p.poses, b) {
        None => CheckOutcome::pass("ASSUMPTION1"),
        Some(i) => CheckOutcome::fail("ASSUMPTION1", format!("i={i}")),
    });

    let bad_delay = (1..p.desired_delays.len()).find(|&i| {
        let prev = if i == 1 { 0 } else { p.desired_delays[i - 1] };
        p.desired_delays[i] <= prev
    });
    out.push(match bad_delay {
        None => CheckOutcome::pass("DELAY_ORDER"),
        Some(i) => CheckOutcome::fail("DELAY_ORDER", format!("i={i}")),
    });

    out.push(CheckOutcome::from_bool(
        "REFERENCE_LENGTH",
        p.trajectory.len() >= s.ticks,
        || format!("samples={} ticks={}", p.trajectory.len(), s.ticks),
    ));

    let followers: Vec<_> = p.poses.iter().skip(1).map(|q| output_map(q, b).0).collect();
    let report = validate_safety(&p.trajectory, &followers, &p.safety, b);
    out.push(match report.proximity.first() {
        None => CheckOutcome::pass("SAFE_DISTANCE"),
        Some(v) => CheckOutcome::fail(
            "SAFE_DISTANCE",
            format!("i={} k={} distance={}", v.follower, v.k, v.distance),
        ),
    });
    out.push(match report.slow.first() {
        None => CheckOutcome::pass("MIN_REF_SPEED"),
        Some(v) => CheckOutcome::fail("MIN_REF_SPEED", format!("k={} speed={}", v.k, v.speed)),
    });

    out.push(match max_feedforward_norm(&p.trajectory, b) {
        Ok(u_max) => CheckOutcome::from_bool("LEADER_DISTURBANCE", ts * u_max <= s.r_d_leader, || {
            format!("Ts*max|u_r|={} r_d={}", ts * u_max, s.r_d_leader)
        }),
        Err(e) => CheckOutcome::fail("LEADER_DISTURBANCE", e.to_string()),
    });
    out.push(CheckOutcome::from_bool(
        "FOLLOWER_DISTURBANCE",
        s.r_u_leader <= s.r_d_input_follower(),
        || format!("r_u_leader={} r_d_input={}", s.r_u_leader, s.r_d_input_follower()),
    ));
    out.push(CheckOutcome::from_bool(
        "LEADER_INPUT_SET",
        s.r_u_leader > 0.0 && s.r_u_leader <= suite.r_u_inner,
        || format!("r_u_leader={} r_u_inner={}", s.r_u_leader, suite.r_u_inner),
    ));
    out.push(CheckOutcome::from_bool("N_SETS", s.n_sets >= 1, || "n_sets=0".into()));

    let leader_family = build_rosc_family(&p.leader, s.r_u_leader, ts, s.n_sets);
    let follower_family = build_rosc_family(&p.follower, suite.r_u_inner, ts, s.n_sets);
    out.push(match &leader_family {
        Ok(_) => CheckOutcome::pass("LEADER_GROWTH"),
        Err(e) => CheckOutcome::fail("LEADER_GROWTH", e.to_string()),
    });
    let needs_followers = p.poses.len() > 1;
    out.push(match (&follower_family, needs_followers) {
        (Err(e), true) => CheckOutcome::fail("FOLLOWER_GROWTH", e.to_string()),
        _ => CheckOutcome::pass("FOLLOWER_GROWTH"),
    });

    let mut outside = None;
    if let (Ok(lf), Ok(start)) = (&leader_family, sample_reference(&p.trajectory, 0, b)) {
        let lead_z = output_map(&p.poses[0], b).0;
        if membership_index(lf, &(lead_z - start.z_r.0)).is_none() {
            outside = Some(0);
        }
        if let Ok(ff) = &follower_family {
            for (i, q) in p.poses.iter().enumerate().skip(1) {
                if outside.is_none() && membership_index(ff, &(output_map(q, b).0 - lead_z)).is_none() {
                    outside = Some(i);
                }
            }
        }
        out.push(match outside {
            None => CheckOutcome::pass("INITIAL_MEMBERSHIP"),
            Some(i) => CheckOutcome::fail("INITIAL_MEMBERSHIP", format!("i={i}")),
        });
    } else {
        out.push(CheckOutcome::fail("INITIAL_MEMBERSHIP", "no family or reference"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcomes(s: &Scenario) -> Vec<CheckOutcome> {
        run_checks(s, &s.prepare(0).unwrap())
    }

    #[test]
    fn default_scenario_passes() {
        let s = Scenario::default_reconstruction();
        let out = outcomes(&s);
        assert!(all_passed(&out), "{out:#?}");
    }

    #[test]
    fn swapped_followers_fail_assumption1() {
        let mut s = Scenario::default_reconstruction();
        s.agents.swap(1, 2);
        s.agents[1].desired_delay = 4;
        s.agents[2].desired_delay = 8;
        let out = outcomes(&s);
        let a1 = out.iter().find(|c| c.name == "ASSUMPTION1").unwrap();
        assert_eq!(a1.to_string(), "ASSUMPTION1 FAIL i=2");
    }

    #[test]
    fn fast_reference_fails_disturbance_audit() {
        let mut s = Scenario::default_reconstruction();
        if let crate::scenario::ReferenceSpec::Spline { avg_speed, .. } = &mut s.reference {
            *avg_speed = 0.5;
        }
        let out = outcomes(&s);
        assert!(!out.iter().find(|c| c.name == "LEADER_DISTURBANCE").unwrap().passed);
    }

    #[test]
    fn equal_delays_fail() {
        let mut s = Scenario::default_reconstruction();
        s.agents[2].desired_delay = 4;
        let out = outcomes(&s);
        assert_eq!(
            out.iter().find(|c| c.name == "DELAY_ORDER").unwrap().to_string(),
            "DELAY_ORDER FAIL i=2"
        );
    }
}
