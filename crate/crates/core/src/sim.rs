//! Multi-agent trash-collection runs.
//!
//! Every step, in order: due events, pickups (ascending agent id), bias
//! update, fields with the effective navigation gain, barrier-filtered
//! velocities from one position snapshot, RK4, patch bookkeeping, logging.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{sense_and_collect, EfficiencyAccount, EfficiencyConfig, TrashField, TrashItem};
use crate::error::{Error, Result};
use crate::integrator::{
    agent_derivative, arrived, detect_patch_entry, is_committed, resample_waypoint, step_filtered, Event, EventKind,
    EventQueue, IntegratorConfig,
};
use crate::model::{AgentParams, AgentState, Membership, Patch, PatchId};
use crate::safety::{filter_velocity, SafetyConfig, SpeedWindow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub params: AgentParams,
    pub z0: f64,
    pub x0: f64,
    pub y0: f64,
}

/// Initial trash: `random[i]` uniform items in patch `i + 1`, plus explicit
/// positions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrashSpec {
    pub random: [usize; 2],
    pub items: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub patches: [Patch; 2],
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub trash: TrashSpec,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// `None` disables collision avoidance.
    #[serde(default)]
    pub safety: Option<SafetyConfig>,
    #[serde(default)]
    pub efficiency: EfficiencyConfig,
    pub seed: u64,
}

impl Scenario {
    pub fn patch(&self, id: PatchId) -> &Patch {
        &self.patches[usize::from(id.number() - 1)]
    }

    pub fn validate(&self) -> Result<()> {
        let [p1, p2] = &self.patches;
        if p1.id != PatchId::One || p2.id != PatchId::Two {
            return Err(Error::Validation("patches must be listed as patch1, patch2".into()));
        }
        for p in &self.patches {
            if !(p.x_bounds.0 < p.x_bounds.1 && p.y_bounds.0 < p.y_bounds.1) {
                return Err(Error::Validation(format!("patch{} has empty bounds", p.id.number())));
            }
        }
        if !(p1.x_bounds.0 >= 0.0 && p2.x_bounds.1 <= 0.0) {
            return Err(Error::Validation(
                "patch1 must lie in x >= 0 and patch2 in x <= 0".into(),
            ));
        }
        if self.agents.is_empty() {
            return Err(Error::Validation("scenario has no agents".into()));
        }
        for (i, a) in self.agents.iter().enumerate() {
            a.params.validate()?;
            if !(a.z0.is_finite() && a.x0.is_finite() && a.y0.is_finite()) {
                return Err(Error::Validation(format!("agent {i}: initial state is not finite")));
            }
            if a.z0 == 0.0 || a.z0.signum() != a.x0.signum() {
                return Err(Error::Validation(format!(
                    "agent {i}: sign of z0 = {} must match sign of x0 = {}",
                    a.z0, a.x0
                )));
            }
            if a.params.l < p1.outer_bound().max(p2.outer_bound()) {
                return Err(Error::Validation(format!(
                    "agent {i}: l is smaller than the patch extent"
                )));
            }
        }
        for item in &self.trash.items {
            if !self.patches.iter().any(|p| p.contains(item[0], item[1])) {
                return Err(Error::Validation(format!(
                    "trash item ({}, {}) lies outside both patches",
                    item[0], item[1]
                )));
            }
        }
        for ev in &self.events {
            if !(ev.time.is_finite() && ev.time >= 0.0) {
                return Err(Error::Validation(format!("event time {} is invalid", ev.time)));
            }
            match ev.kind {
                EventKind::SetU { agent, value } | EventKind::SetKx { agent, value } => {
                    if agent >= self.agents.len() {
                        return Err(Error::Validation(format!("event refers to missing agent {agent}")));
                    }
                    if !(value.is_finite() && value > 0.0) {
                        return Err(Error::Validation(format!("event value {value} must be positive")));
                    }
                }
                EventKind::AddTrash { .. } => {}
            }
        }
        self.integrator.validate()?;
        if let Some(s) = &self.safety {
            s.validate()?;
        }
        self.efficiency.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub agent: usize,
    pub z: f64,
    pub x: f64,
    pub y: f64,
    pub b: f64,
    pub q: f64,
    pub u: f64,
    pub effective_kx: f64,
    pub patch: Membership,
    pub picked: usize,
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,agent_id,z,x,y,b,q,u,effective_Kx,patch,picked_this_step";

/// Rows ordered by time, then agent id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn n_agents(&self) -> usize {
        self.rows.iter().map(|r| r.agent + 1).max().unwrap_or(0)
    }

    pub fn agent_rows(&self, agent: usize) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.agent == agent)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:?},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{}",
                r.t, r.agent, r.z, r.x, r.y, r.b, r.q, r.u, r.effective_kx, r.patch, r.picked
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub log: TrajectoryLog,
    pub trash: TrashField,
    pub initial_trash: usize,
    pub injected_trash: usize,
}

struct AgentRuntime {
    params: AgentParams,
    state: AgentState,
    account: EfficiencyAccount,
    window: SpeedWindow,
    effective_kx: f64,
}

fn membership(patches: &[Patch; 2], x: f64, y: f64) -> Membership {
    patches
        .iter()
        .find(|p| p.contains(x, y))
        .map_or(Membership::Transit, |p| Membership::Patch(p.id))
}

/// Step time without accumulated rounding, so logs print `0.3` and not
/// `0.30000000000000004`.
fn step_time(i: usize, dt: f64) -> f64 {
    let t = i as f64 * dt;
    (t * 1e9).round() / 1e9
}

pub fn run(scenario: &Scenario) -> Result<SimOutput> {
    scenario.validate()?;
    let patches = scenario.patches;
    let cfg = &scenario.integrator;
    let window = scenario.safety.map_or(1, |s| s.window);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let mut trash = TrashField::default();
    for item in &scenario.trash.items {
        if let Membership::Patch(id) = membership(&patches, item[0], item[1]) {
            trash.items.push(TrashItem {
                x: item[0],
                y: item[1],
                patch: id,
                collected_at: None,
            });
        }
    }
    for p in &patches {
        trash.scatter(p, scenario.trash.random[usize::from(p.id.number() - 1)], &mut rng);
    }
    let initial_trash = trash.len();
    let mut injected_trash = 0;

    let mut agents: Vec<AgentRuntime> = scenario
        .agents
        .iter()
        .map(|a| {
            let side = PatchId::from_sign(a.z0);
            let mut state = AgentState::new(a.z0, a.x0, a.y0);
            state.membership = membership(&patches, a.x0, a.y0);
            state = resample_waypoint(&state, &patches[usize::from(side.number() - 1)], &mut rng);
            AgentRuntime {
                params: a.params,
                state,
                account: EfficiencyAccount::new(&scenario.efficiency, side),
                window: SpeedWindow::new(window),
                effective_kx: a.params.k_x,
            }
        })
        .collect();

    let steps = cfg.steps();
    let n = agents.len();
    let mut log = TrajectoryLog {
        rows: Vec::with_capacity((steps + 1) * n),
    };
    let log_agent = |log: &mut TrajectoryLog, t: f64, id: usize, a: &AgentRuntime, picked: usize| {
        log.rows.push(LogRow {
            t,
            agent: id,
            z: a.state.z,
            x: a.state.x,
            y: a.state.y,
            b: a.account.bias(),
            q: a.account.efficiency(),
            u: a.params.u,
            effective_kx: a.effective_kx,
            patch: a.state.membership,
            picked,
        });
    };
    for (id, a) in agents.iter().enumerate() {
        log_agent(&mut log, 0.0, id, a, 0);
    }

    let mut events = EventQueue::new(scenario.events.clone());
    let mut picked = vec![0usize; n];
    let mut snapshot = vec![[0.0; 2]; n];
    let mut neighbors: Vec<[f64; 2]> = Vec::with_capacity(n);
    for i in 0..steps {
        let t = step_time(i, cfg.dt);

        for ev in events.due(t) {
            match ev.kind {
                EventKind::SetU { agent, value } => agents[agent].params.u = value,
                EventKind::SetKx { agent, value } => agents[agent].params.k_x = value,
                EventKind::AddTrash { patch, count } => {
                    trash.scatter(scenario.patch(patch), count, &mut rng);
                    injected_trash += count;
                }
            }
        }

        for (a, picked) in agents.iter_mut().zip(picked.iter_mut()) {
            let inside = match a.state.membership {
                Membership::Patch(p) => Some(p),
                Membership::Transit => None,
            };
            *picked = sense_and_collect(
                (a.state.x, a.state.y),
                inside,
                &mut trash,
                scenario.efficiency.pickup_radius,
                t,
            );
            if inside == Some(a.account.patch()) {
                a.account.record_pickups(*picked);
            }
            a.params.b = a.account.bias();
        }

        for (s, a) in snapshot.iter_mut().zip(&agents) {
            *s = [a.state.x, a.state.y];
        }
        for (id, a) in agents.iter_mut().enumerate() {
            a.effective_kx = match scenario.safety {
                Some(_) => a.window.effective_kx(a.params.k_x),
                None => a.params.k_x,
            };
            let params = AgentParams {
                k_x: a.effective_kx,
                ..a.params
            };
            let prev = a.state;
            let next = match &scenario.safety {
                Some(safety) => {
                    neighbors.clear();
                    neighbors.extend(snapshot.iter().enumerate().filter(|(j, _)| *j != id).map(|(_, p)| *p));
                    let d = agent_derivative(&params, prev.rho(), prev.y_target(), &[prev.z, prev.x, prev.y]);
                    let ratio = filter_velocity(safety, snapshot[id], [d[1], d[2]], &neighbors).speed_ratio;
                    a.window.push(ratio);
                    step_filtered(&prev, &params, cfg.dt, |pos, v| {
                        filter_velocity(safety, pos, v, &neighbors).velocity
                    })
                }
                None => step_filtered(&prev, &params, cfg.dt, |_, v| v),
            };
            let mut next = match next {
                Ok(s) if s.is_finite() => s,
                _ => {
                    return Err(Error::NonFinite {
                        agent: id,
                        step: i,
                        time: t,
                    })
                }
            };

            next.membership = membership(&patches, next.x, next.y);
            if next.membership == Membership::Patch(a.account.patch()) {
                a.account.record_distance((next.x - prev.x).hypot(next.y - prev.y));
            }
            if let Some(entered) = detect_patch_entry(&prev, &next, &patches) {
                if entered != a.account.patch() {
                    a.account.on_patch_entry(entered);
                }
            }
            if is_committed(next.z, a.params.sigma) && arrived(&next, &params, cfg.arrival_tol) {
                let side = PatchId::from_sign(next.z);
                next = resample_waypoint(&next, scenario.patch(side), &mut rng);
            }
            a.state = next;
        }

        let t_next = step_time(i + 1, cfg.dt);
        for (id, a) in agents.iter().enumerate() {
            log_agent(&mut log, t_next, id, a, picked[id]);
        }
    }

    Ok(SimOutput {
        log,
        trash,
        initial_trash,
        injected_trash,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub t: f64,
    pub from: PatchId,
    pub to: PatchId,
}

/// Zero crossings of `z` per agent, with the time linearly interpolated
/// between log rows.
pub fn switch_times(log: &TrajectoryLog) -> Vec<Vec<SwitchRecord>> {
    let n = log.n_agents();
    let mut out = vec![Vec::new(); n];
    let mut last: Vec<Option<(f64, f64)>> = vec![None; n];
    for r in &log.rows {
        if r.z != 0.0 {
            if let Some((t0, z0)) = last[r.agent] {
                if z0.signum() != r.z.signum() {
                    let t = t0 + (r.t - t0) * z0 / (z0 - r.z);
                    out[r.agent].push(SwitchRecord {
                        t,
                        from: PatchId::from_sign(z0),
                        to: PatchId::from_sign(r.z),
                    });
                }
            }
            last[r.agent] = Some((r.t, r.z));
        }
    }
    out
}

pub fn first_switch_times(log: &TrajectoryLog) -> Vec<Option<f64>> {
    switch_times(log).iter().map(|s| s.first().map(|r| r.t)).collect()
}

/// Mean pairwise inverse distance among the agents inside `patch` at the
/// logged time closest to `t`; zero with fewer than two agents.
pub fn crowding_metric(log: &TrajectoryLog, patch: PatchId, t: f64) -> f64 {
    let Some(best) = log
        .rows
        .iter()
        .map(|r| r.t)
        .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))
    else {
        return 0.0;
    };
    let inside: Vec<(f64, f64)> = log
        .rows
        .iter()
        .filter(|r| r.t == best && r.patch == Membership::Patch(patch))
        .map(|r| (r.x, r.y))
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for (i, a) in inside.iter().enumerate() {
        for b in &inside[i + 1..] {
            sum += 1.0 / (a.0 - b.0).hypot(a.1 - b.1).max(f64::MIN_POSITIVE);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

/// Time average of each agent's effective gain over rows with `t <= until`.
pub fn mean_effective_kx(log: &TrajectoryLog, until: f64) -> Vec<f64> {
    let n = log.n_agents();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for r in log.rows.iter().filter(|r| r.t <= until) {
        sum[r.agent] += r.effective_kx;
        count[r.agent] += 1;
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrashTotals {
    pub initial: usize,
    pub injected: usize,
    pub collected: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub t_end: f64,
    pub agents: usize,
    pub first_switch: Vec<Option<f64>>,
    pub switches: Vec<Vec<SwitchRecord>>,
    pub mean_effective_kx: Vec<f64>,
    /// `(t, metric)` at every whole time unit, keyed by patch.
    pub crowding: BTreeMap<String, Vec<(f64, f64)>>,
    pub trash: TrashTotals,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, out: &SimOutput) -> Self {
        let t_end = out.log.rows.last().map_or(0.0, |r| r.t);
        let mut crowding = BTreeMap::new();
        for id in [PatchId::One, PatchId::Two] {
            let series = (0..=t_end.floor() as usize)
                .map(|k| (k as f64, crowding_metric(&out.log, id, k as f64)))
                .collect();
            crowding.insert(format!("patch{}", id.number()), series);
        }
        let collected = out.trash.collected();
        Self {
            scenario: scenario.name.clone(),
            seed: scenario.seed,
            t_end,
            agents: scenario.agents.len(),
            first_switch: first_switch_times(&out.log),
            switches: switch_times(&out.log),
            mean_effective_kx: mean_effective_kx(&out.log, t_end),
            crowding,
            trash: TrashTotals {
                initial: out.initial_trash,
                injected: out.injected_trash,
                collected,
                remaining: out.trash.len() - collected,
            },
        }
    }
}
