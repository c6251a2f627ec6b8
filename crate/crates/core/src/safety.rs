//! Pairwise barrier filter on planar velocities.
//!
//! For a neighbour at `p_j`, the commanded velocity must satisfy
//! `⟨v, p - p_j⟩ ≥ -(α/2)(‖p - p_j‖² - D²)` with `D = 2r + margin`. Violated
//! half-spaces are projected onto in turn until the velocity is feasible.
//! Crowded agents end up slower, and the ratio of filtered to commanded
//! speed is fed back as an effective navigation gain.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyConfig {
    pub agent_radius: f64,
    pub margin: f64,
    pub gain_alpha: f64,
    /// Number of steps averaged into the effective gain.
    pub window: usize,
    pub max_sweeps: usize,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            agent_radius: 0.03,
            margin: 0.01,
            gain_alpha: 5.0,
            window: 50,
            max_sweeps: 20,
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.agent_radius.is_finite() && self.agent_radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "agent_radius",
                value: self.agent_radius,
                reason: "must be finite and strictly positive",
            });
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "margin",
                value: self.margin,
                reason: "must be finite and non-negative",
            });
        }
        if !(self.gain_alpha.is_finite() && self.gain_alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gain_alpha",
                value: self.gain_alpha,
                reason: "must be finite and strictly positive",
            });
        }
        if self.window == 0 || self.max_sweeps == 0 {
            return Err(Error::Validation(
                "safety window and max_sweeps must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn safe_distance(&self) -> f64 {
        2.0 * self.agent_radius + self.margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutcome {
    pub velocity: [f64; 2],
    /// `‖v_safe‖ / ‖v_cmd‖`; exactly 1 when no constraint was active.
    pub speed_ratio: f64,
    /// Number of half-space projections performed.
    pub projections: usize,
    /// No feasible velocity was found and the agent was stopped.
    pub deadlocked: bool,
}

const TINY: f64 = 1e-12;

pub fn filter_velocity(cfg: &SafetyConfig, pos: [f64; 2], cmd: [f64; 2], neighbors: &[[f64; 2]]) -> FilterOutcome {
    let d2 = cfg.safe_distance().powi(2);
    let constraint = |n: &[f64; 2]| {
        let a = [pos[0] - n[0], pos[1] - n[1]];
        let sep2 = a[0] * a[0] + a[1] * a[1];
        (a, -0.5 * cfg.gain_alpha * (sep2 - d2))
    };
    let mut v = cmd;
    let mut projections = 0;
    let mut feasible = false;
    for _ in 0..cfg.max_sweeps {
        let mut violated = false;
        for n in neighbors {
            let (a, rhs) = constraint(n);
            let av = a[0] * v[0] + a[1] * v[1];
            if av < rhs - TINY {
                let aa = a[0] * a[0] + a[1] * a[1];
                if aa <= TINY * TINY {
                    // coincident agents: no direction resolves the constraint
                    violated = true;
                    continue;
                }
                let lambda = (rhs - av) / aa;
                v[0] += lambda * a[0];
                v[1] += lambda * a[1];
                projections += 1;
                violated = true;
            }
        }
        if !violated {
            feasible = true;
            break;
        }
    }
    if !feasible {
        feasible = neighbors.iter().all(|n| {
            let (a, rhs) = constraint(n);
            a[0] * v[0] + a[1] * v[1] >= rhs - 1e-9
        });
    }
    if !feasible {
        return FilterOutcome {
            velocity: [0.0, 0.0],
            speed_ratio: 0.0,
            projections,
            deadlocked: true,
        };
    }
    let speed_ratio = if projections == 0 {
        1.0
    } else {
        v[0].hypot(v[1]) / cmd[0].hypot(cmd[1]).max(TINY)
    };
    FilterOutcome {
        velocity: v,
        speed_ratio,
        projections,
        deadlocked: false,
    }
}

/// Sliding window of speed ratios, clipped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SpeedWindow {
    ratios: VecDeque<f64>,
    capacity: usize,
}

impl SpeedWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            ratios: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
        }
    }

    pub fn push(&mut self, ratio: f64) {
        let r = ratio.clamp(0.0, 1.0);
        if self.ratios.len() == self.capacity {
            self.ratios.pop_front();
        }
        self.ratios.push_back(r);
    }

    pub fn mean(&self) -> Option<f64> {
        if self.ratios.is_empty() {
            None
        } else {
            Some(self.ratios.iter().sum::<f64>() / self.ratios.len() as f64)
        }
    }

    /// Nominal gain scaled by the mean ratio; the nominal gain when empty.
    pub fn effective_kx(&self, nominal: f64) -> f64 {
        match self.mean() {
            Some(m) => (nominal * m).max(nominal * 1e-9),
            None => nominal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_passes_through() {
        let cfg = SafetyConfig::default();
        let out = filter_velocity(&cfg, [0.0, 0.0], [0.3, -0.1], &[]);
        assert_eq!(out.velocity, [0.3, -0.1]);
        assert_eq!(out.speed_ratio, 1.0);
        let out = filter_velocity(&cfg, [0.0, 0.0], [0.3, -0.1], &[[1.0, 1.0]]);
        assert_eq!(out.velocity, [0.3, -0.1]);
        assert_eq!(out.speed_ratio, 1.0);
    }

    #[test]
    fn head_on_pair_at_contact_stops_closing() {
        let cfg = SafetyConfig {
            margin: 0.0,
            ..SafetyConfig::default()
        };
        let sep = cfg.safe_distance();
        let (pa, pb) = ([0.0, 0.0], [sep, 0.0]);
        let a = filter_velocity(&cfg, pa, [0.2, 0.05], &[pb]);
        let b = filter_velocity(&cfg, pb, [-0.2, 0.0], &[pa]);
        let rel = [a.velocity[0] - b.velocity[0], a.velocity[1] - b.velocity[1]];
        let p_rel = [pa[0] - pb[0], pa[1] - pb[1]];
        assert!(rel[0] * p_rel[0] + rel[1] * p_rel[1] >= -1e-12);
        assert!(a.speed_ratio < 1.0 && b.speed_ratio < 1.0);
    }

    #[test]
    fn coincident_agents_deadlock() {
        let out = filter_velocity(&SafetyConfig::default(), [0.1, 0.1], [0.1, 0.0], &[[0.1, 0.1]]);
        assert!(out.deadlocked);
        assert_eq!(out.velocity, [0.0, 0.0]);
        assert_eq!(out.speed_ratio, 0.0);
    }

    #[test]
    fn window_average() {
        let mut w = SpeedWindow::new(3);
        assert_eq!(w.effective_kx(0.15), 0.15);
        for r in [1.0, 1.0, 1.0] {
            w.push(r);
        }
        assert!((w.effective_kx(0.15) - 0.15).abs() < 1e-15);
        for _ in 0..3 {
            w.push(0.0);
        }
        let k = w.effective_kx(0.15);
        assert!(k > 0.0 && k < 1e-9);
        w.push(2.0);
        assert!((w.mean().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
