//! Trash field, pickup, and the efficiency estimate that becomes each
//! agent's bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Patch, PatchId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrashItem {
    pub x: f64,
    pub y: f64,
    pub patch: PatchId,
    /// Time of pickup, `None` while still lying in the patch.
    pub collected_at: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrashField {
    pub items: Vec<TrashItem>,
}

impl TrashField {
    /// Places `count` items uniformly at random in `patch`.
    pub fn scatter<R: Rng + ?Sized>(&mut self, patch: &Patch, count: usize, rng: &mut R) {
        for _ in 0..count {
            let x = rng.gen_range(patch.x_bounds.0..=patch.x_bounds.1);
            let y = rng.gen_range(patch.y_bounds.0..=patch.y_bounds.1);
            self.items.push(TrashItem {
                x,
                y,
                patch: patch.id,
                collected_at: None,
            });
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `(collected, uncollected)` in `patch`.
    pub fn counts(&self, patch: PatchId) -> (usize, usize) {
        self.items
            .iter()
            .filter(|i| i.patch == patch)
            .fold((0, 0), |(c, u), i| match i.collected_at {
                Some(_) => (c + 1, u),
                None => (c, u + 1),
            })
    }

    pub fn collected(&self) -> usize {
        self.items.iter().filter(|i| i.collected_at.is_some()).count()
    }

    /// Rows `x,y,collected_at` with `-1` for items still in place.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,collected_at")?;
        for i in &self.items {
            writeln!(w, "{:?},{:?},{:?}", i.x, i.y, i.collected_at.unwrap_or(-1.0))?;
        }
        Ok(())
    }
}

/// Collects every uncollected item of `patch` within `radius` of `pos`.
/// Agents outside any patch pass `None` and pick nothing up.
pub fn sense_and_collect(
    pos: (f64, f64),
    patch: Option<PatchId>,
    field: &mut TrashField,
    radius: f64,
    time: f64,
) -> usize {
    let Some(patch) = patch else {
        return 0;
    };
    let r2 = radius * radius;
    let mut picked = 0;
    for item in field.items.iter_mut() {
        if item.patch == patch && item.collected_at.is_none() {
            let (dx, dy) = (item.x - pos.0, item.y - pos.1);
            if dx * dx + dy * dy <= r2 {
                item.collected_at = Some(time);
                picked += 1;
            }
        }
    }
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EfficiencyConfig {
    /// Offset of the pickup count, keeps `q > 0`.
    pub q0: f64,
    /// Offset of the distance, keeps `q` finite.
    pub epsilon: f64,
    pub q_min: f64,
    pub pickup_radius: f64,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        Self {
            q0: 2.0,
            epsilon: 0.01,
            q_min: 1.5,
            pickup_radius: 0.05,
        }
    }
}

impl EfficiencyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("q0", self.q0),
            ("epsilon", self.epsilon),
            ("q_min", self.q_min),
            ("pickup_radius", self.pickup_radius),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if self.q0 <= self.epsilon {
            return Err(Error::Validation(format!(
                "q0 = {} should dominate epsilon = {}",
                self.q0, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Per-agent efficiency bookkeeping for the patch it is assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyAccount {
    pub collected_count: u64,
    pub distance_in_patch: f64,
    pub q0: f64,
    pub epsilon: f64,
    /// `+1` while assigned to patch 1, `-1` for patch 2.
    pub s: f64,
    pub q_min: f64,
}

impl EfficiencyAccount {
    pub fn new(cfg: &EfficiencyConfig, patch: PatchId) -> Self {
        Self {
            collected_count: 0,
            distance_in_patch: 0.0,
            q0: cfg.q0,
            epsilon: cfg.epsilon,
            s: patch.sign(),
            q_min: cfg.q_min,
        }
    }

    pub fn patch(&self) -> PatchId {
        PatchId::from_sign(self.s)
    }

    /// `q = (collected + q0) / (distance + ε)`.
    pub fn efficiency(&self) -> f64 {
        (self.collected_count as f64 + self.q0) / (self.distance_in_patch + self.epsilon)
    }

    /// `b = s (tanh q - tanh q_min)`.
    pub fn bias(&self) -> f64 {
        self.s * (self.efficiency().tanh() - self.q_min.tanh())
    }

    pub fn record_pickups(&mut self, picked: usize) {
        self.collected_count += picked as u64;
    }

    pub fn record_distance(&mut self, distance: f64) {
        self.distance_in_patch += distance;
    }

    /// Resets the counters and points `s` at the newly entered patch.
    pub fn on_patch_entry(&mut self, entered: PatchId) {
        self.collected_count = 0;
        self.distance_in_patch = 0.0;
        self.s = entered.sign();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn account() -> EfficiencyAccount {
        EfficiencyAccount::new(&EfficiencyConfig::default(), PatchId::One)
    }

    #[test]
    fn efficiency_examples() {
        let mut a = account();
        assert!((a.efficiency() - 200.0).abs() < 1e-12);
        a.collected_count = 3;
        a.distance_in_patch = 2.0;
        assert!((a.efficiency() - 5.0 / 2.01).abs() < 1e-12);
        assert!((a.efficiency() - 2.4876).abs() < 1e-4);
        let mut prev = a.efficiency();
        for _ in 0..10 {
            a.record_distance(0.3);
            assert!(a.efficiency() < prev);
            prev = a.efficiency();
        }
    }

    #[test]
    fn bias_examples() {
        let mut a = account();
        let q_min = a.q_min;
        // q = q_min exactly: distance such that q0 / (dist + eps) = q_min
        a.distance_in_patch = a.q0 / q_min - a.epsilon;
        assert!(a.bias().abs() < 1e-12);
        a.distance_in_patch = 0.0;
        a.q0 = 1e9;
        assert!((a.bias() - (1.0 - 1.5f64.tanh())).abs() < 1e-9);
        assert!((a.bias() - 0.094_852).abs() < 1e-6);
        let mut a = account();
        a.distance_in_patch = 1e12;
        assert!((a.bias() + 0.905_148).abs() < 1e-6);
    }

    #[test]
    fn entry_resets_and_flips_sign() {
        let mut a = account();
        a.collected_count = 4;
        a.distance_in_patch = 3.0;
        a.on_patch_entry(PatchId::Two);
        assert_eq!(a.s, -1.0);
        assert_eq!(a.collected_count, 0);
        assert_eq!(a.distance_in_patch, 0.0);
        assert!((a.bias() + (1.0 - 1.5f64.tanh())).abs() < 1e-4);
        a.on_patch_entry(PatchId::One);
        assert_eq!(a.s, 1.0);
    }

    #[test]
    fn pickup_cases() {
        let [p1, _] = Patch::mirrored_pair(0.5, 1.0, (-0.5, 0.5)).unwrap();
        let mut field = TrashField::default();
        field.items.push(TrashItem {
            x: 0.7,
            y: 0.1,
            patch: PatchId::One,
            collected_at: None,
        });
        let before = field.clone();
        assert_eq!(
            sense_and_collect((0.9, -0.3), Some(PatchId::One), &mut field, 0.05, 1.0),
            0
        );
        assert_eq!(field, before);
        assert_eq!(sense_and_collect((0.7, 0.1), None, &mut field, 0.05, 1.0), 0);
        assert_eq!(
            sense_and_collect((0.7, 0.1), Some(PatchId::One), &mut field, 0.05, 1.0),
            1
        );
        // second agent at the same spot in the same step finds nothing
        assert_eq!(
            sense_and_collect((0.7, 0.1), Some(PatchId::One), &mut field, 0.05, 1.0),
            0
        );
        assert_eq!(field.counts(PatchId::One), (1, 0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        field.scatter(&p1, 50, &mut rng);
        assert!(field.items.iter().all(|i| p1.contains(i.x, i.y)));
        assert_eq!(field.counts(PatchId::One), (1, 50));
    }

    #[test]
    fn config_validation() {
        assert!(EfficiencyConfig::default().validate().is_ok());
        let bad = EfficiencyConfig {
            epsilon: 3.0,
            ..EfficiencyConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
