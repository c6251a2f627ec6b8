//! Ready-made scenarios on the unit arena. Patch 2 is always the mirror
//! image of patch 1. The two-robot scenarios use a small patch near the
//! centre, `x ∈ [0.1, 0.3]`, `|y| ≤ 0.1`; the others use an open field,
//! `x ∈ [0.2, 1]`, `|y| ≤ 1`.

use crate::environment::EfficiencyConfig;
use crate::integrator::{Event, EventKind, IntegratorConfig};
use crate::model::{AgentParams, Patch, PatchId};
use crate::safety::SafetyConfig;
use crate::sim::{AgentSpec, Scenario, TrashSpec};

pub const PATCH_INNER: f64 = 0.2;
pub const ARENA_L: f64 = 1.0;
pub const STRIP_X: (f64, f64) = (0.1, 0.3);
pub const STRIP_Y: (f64, f64) = (-0.1, 0.1);
pub const OPEN_Y: (f64, f64) = (-1.0, 1.0);
/// Initial `|z|` for agents committed to their starting patch.
pub const Z0: f64 = 0.5;

pub fn strip_patches() -> [Patch; 2] {
    Patch::mirrored_pair(STRIP_X.0, STRIP_X.1, STRIP_Y).expect("static patch layout is valid")
}

pub fn open_patches() -> [Patch; 2] {
    Patch::mirrored_pair(PATCH_INNER, ARENA_L, OPEN_Y).expect("static patch layout is valid")
}

/// Shared parameter set of the figure scenarios.
pub fn base_params() -> AgentParams {
    AgentParams {
        d: 1.0,
        u: 1.3,
        b: 0.0,
        k_z: 2.0,
        k_x: 0.15,
        k_y: 0.15,
        k: 10.0,
        sigma: 0.1,
        l: ARENA_L,
    }
}

fn agent(params: AgentParams, x0: f64, y0: f64) -> AgentSpec {
    AgentSpec {
        params,
        z0: Z0.copysign(x0),
        x0,
        y0,
    }
}

/// One agent in an empty arena. It runs out of confidence in whatever patch
/// it is in and keeps moving between them.
pub fn lone_agent(seed: u64) -> Scenario {
    Scenario {
        name: "lone_agent".into(),
        patches: open_patches(),
        agents: vec![agent(base_params(), 0.6, 0.0)],
        trash: TrashSpec::default(),
        events: Vec::new(),
        integrator: IntegratorConfig {
            t_end: 200.0,
            ..IntegratorConfig::default()
        },
        safety: None,
        efficiency: EfficiencyConfig::default(),
        seed,
    }
}

/// Two agents that differ only in navigation gain: agent 0 (`K_x = 0.15`)
/// is faster than agent 1 (`K_x = 0.11`).
pub fn fast_vs_slow(seed: u64) -> Scenario {
    let fast = base_params();
    let slow = AgentParams { k_x: 0.11, ..fast };
    Scenario {
        name: "fast_vs_slow".into(),
        patches: strip_patches(),
        agents: vec![agent(fast, 0.2, 0.05), agent(slow, 0.2, -0.05)],
        trash: TrashSpec {
            random: [0, 20],
            items: Vec::new(),
        },
        events: Vec::new(),
        integrator: IntegratorConfig {
            t_end: 400.0,
            ..IntegratorConfig::default()
        },
        safety: None,
        efficiency: EfficiencyConfig::default(),
        seed,
    }
}

/// Two identical agents; at `t = 20` agent 0 lowers its attention to 1.05
/// and fresh trash appears in patch 2.
pub fn environment_adaptation(seed: u64) -> Scenario {
    let p = base_params();
    Scenario {
        name: "environment_adaptation".into(),
        patches: strip_patches(),
        agents: vec![agent(p, 0.2, 0.05), agent(p, 0.2, -0.05)],
        trash: TrashSpec {
            random: [0, 0],
            items: Vec::new(),
        },
        events: vec![
            Event {
                time: 20.0,
                kind: EventKind::SetU { agent: 0, value: 1.05 },
            },
            Event {
                time: 20.0,
                kind: EventKind::AddTrash {
                    patch: PatchId::Two,
                    count: 40,
                },
            },
        ],
        integrator: IntegratorConfig {
            t_end: 400.0,
            ..IntegratorConfig::default()
        },
        safety: None,
        efficiency: EfficiencyConfig::default(),
        seed,
    }
}

/// Eight agents in patch 1 with collision avoidance: five packed around the
/// patch centre, three spread near its corners.
pub fn declustering(seed: u64) -> Scenario {
    let p = base_params();
    let safety = SafetyConfig::default();
    let (cx, cy) = open_patches()[0].center();
    let gap = safety.safe_distance() * 1.1;
    let mut agents = vec![agent(p, cx, cy)];
    for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
        agents.push(agent(p, cx + gap * dx, cy + gap * dy));
    }
    for (x, y) in [(0.25, 0.95), (0.95, -0.95), (0.95, 0.95)] {
        agents.push(agent(p, x, y));
    }
    Scenario {
        name: "declustering".into(),
        patches: open_patches(),
        agents,
        trash: TrashSpec {
            random: [0, 20],
            items: Vec::new(),
        },
        events: Vec::new(),
        integrator: IntegratorConfig {
            t_end: 150.0,
            ..IntegratorConfig::default()
        },
        safety: Some(safety),
        efficiency: EfficiencyConfig::default(),
        seed,
    }
}
