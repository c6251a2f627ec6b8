//! Deterministic fixed-step integration of one agent's `(z, x, y)` state,
//! plus the discrete bookkeeping around it: waypoint draws, patch entry, and
//! scheduled events.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupled_field, switch_fn, y_field, AgentParams, AgentState, Patch, PatchId, Waypoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub arrival_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 100.0,
            arrival_tol: 0.02,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be finite and strictly positive",
            });
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                reason: "must be finite and non-negative",
            });
        }
        if !(self.arrival_tol.is_finite() && self.arrival_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "arrival_tol",
                value: self.arrival_tol,
                reason: "must be finite and strictly positive",
            });
        }
        Ok(())
    }

    /// Number of steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// One classical Runge-Kutta step of `ẏ = f(y)`.
pub fn rk4<const N: usize>(y: &[f64; N], dt: f64, mut f: impl FnMut(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let shift = |base: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&shift(y, &k1, 0.5 * dt));
    let k3 = f(&shift(y, &k2, 0.5 * dt));
    let k4 = f(&shift(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// `(ż, ẋ, ẏ)` for an agent with the given (piecewise-constant) waypoint.
pub fn agent_derivative(params: &AgentParams, rho: f64, y_bar: f64, s: &[f64; 3]) -> [f64; 3] {
    let (dz, dx) = coupled_field(params, s[0], s[1], rho);
    [dz, dx, y_field(params, s[2], y_bar)]
}

/// Advances `state` by one RK4 step of the coupled dynamics.
pub fn step(state: &AgentState, params: &AgentParams, cfg: &IntegratorConfig) -> Result<AgentState> {
    step_filtered(state, params, cfg.dt, |_, v| v)
}

/// Like [`step`] but passes the commanded planar velocity at every stage
/// through `filter(position, velocity)` before integrating it.
pub fn step_filtered(
    state: &AgentState,
    params: &AgentParams,
    dt: f64,
    mut filter: impl FnMut([f64; 2], [f64; 2]) -> [f64; 2],
) -> Result<AgentState> {
    if !state.is_finite() {
        return Err(Error::Domain("state is not finite".into()));
    }
    let rho = state.rho();
    let y_bar = state.y_target();
    let mut finite = true;
    let next = rk4(&[state.z, state.x, state.y], dt, |s| {
        let d = agent_derivative(params, rho, y_bar, s);
        let v = filter([s[1], s[2]], [d[1], d[2]]);
        let out = [d[0], v[0], v[1]];
        finite &= out.iter().all(|c| c.is_finite());
        out
    });
    if !finite || next.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("non-finite derivative".into()));
    }
    Ok(AgentState {
        z: next[0],
        x: next[1],
        y: next[2],
        ..*state
    })
}

/// Committed agents (`η(z) < 0.5`) navigate; the others are switching and
/// hold their waypoint.
pub fn is_committed(z: f64, sigma: f64) -> bool {
    switch_fn(z, sigma) < 0.5
}

/// Whether the agent has reached its current waypoint: it is within `tol`
/// of it, or its commanded planar speed has fallen below `tol · min(K_x, K_y)`.
///
/// The second test never fires before the first under pure navigation, where
/// the speed is at least `min(K_x, K_y)` times the distance. It catches agents
/// whose weakened opinion holds them at a standstill short of the waypoint.
pub fn arrived(state: &AgentState, params: &AgentParams, tol: f64) -> bool {
    let Some((tx, ty)) = state.target(params) else {
        return false;
    };
    if (state.x - tx).hypot(state.y - ty) < tol {
        return true;
    }
    let d = agent_derivative(params, state.rho(), state.y_target(), &[state.z, state.x, state.y]);
    d[1].hypot(d[2]) < tol * params.k_x.min(params.k_y)
}

/// Draws a uniform point of `patch` and makes it the agent's waypoint.
pub fn resample_waypoint<R: Rng + ?Sized>(state: &AgentState, patch: &Patch, rng: &mut R) -> AgentState {
    let r_x = rng.gen_range(patch.x_bounds.0..=patch.x_bounds.1);
    let r_y = rng.gen_range(patch.y_bounds.0..=patch.y_bounds.1);
    AgentState {
        waypoint: Some(Waypoint { rho: r_x.abs(), y: r_y }),
        ..*state
    }
}

/// The patch entered during this step: contained at the end of the step and
/// not at its start.
pub fn detect_patch_entry(prev: &AgentState, next: &AgentState, patches: &[Patch]) -> Option<PatchId> {
    patches
        .iter()
        .find(|p| p.contains(next.x, next.y) && !p.contains(prev.x, prev.y))
        .map(|p| p.id)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    SetU { agent: usize, value: f64 },
    SetKx { agent: usize, value: f64 },
    AddTrash { patch: PatchId, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Time-ordered events, each handed out exactly once.
#[derive(Debug, Clone)]
pub struct EventQueue {
    events: Vec<Event>,
    next: usize,
}

impl EventQueue {
    pub fn new(mut events: Vec<Event>) -> Self {
        // stable: equal times keep their declaration order
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self { events, next: 0 }
    }

    /// Events with `time <= t` not yet returned.
    pub fn due(&mut self, t: f64) -> &[Event] {
        let start = self.next;
        while self.next < self.events.len() && self.events[self.next].time <= t {
            self.next += 1;
        }
        &self.events[start..self.next]
    }

    pub fn remaining(&self) -> usize {
        self.events.len() - self.next
    }
}
