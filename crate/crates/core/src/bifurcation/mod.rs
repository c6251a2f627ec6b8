//! Equilibria of the coupled opinion/position dynamics, their stability, and
//! how they fold as the attention `u` or the bias `b` varies.
//!
//! Branches are traced on the full two-dimensional system. The scalar
//! reduction in [`scalar`] divides by `η(z)` and is kept for diagnostics and
//! cross-checks.

mod continuation;
mod criticality;
pub mod scalar;
mod sensitivity;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupled_field, coupled_jacobian, switch_fn, waypoint_x, AgentParams, Param};

pub use continuation::{
    continue_both_ways, continue_branch, switching_thresholds, trace_b_branch, trace_diagram, ContinuationSettings,
};
pub use criticality::{
    classify_criticality, neutral_stability, normal_form_saddles, Criticality, CriticalityReport, NeutralStability,
};
pub use sensitivity::{threshold_sensitivity, Sensitivity};

/// Magnitude below which an eigenvalue's real part counts as zero.
pub const MARGINAL_EIGENVALUE: f64 = 1e-9;

/// Residual tolerance every reported equilibrium satisfies.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationProblem {
    pub params: AgentParams,
    /// Waypoint distance, fixed for the analysis.
    pub rho: f64,
    pub free: Param,
    pub range: (f64, f64),
}

impl BifurcationProblem {
    pub fn new(params: AgentParams, rho: f64, free: Param, range: (f64, f64)) -> Result<Self> {
        params.validate()?;
        if !(range.0.is_finite() && range.1.is_finite() && range.0 < range.1) {
            return Err(Error::Validation(format!(
                "continuation range {range:?} must be finite and increasing"
            )));
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self {
            params,
            rho,
            free,
            range,
        })
    }

    pub fn with_param(&self, value: f64) -> AgentParams {
        let mut p = self.params;
        self.free.set(&mut p, value);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        })
    }
}

/// Eigenvalues `(re, im)` of a real 2×2 matrix.
pub fn eigenvalues2(m: &[[f64; 2]; 2]) -> [(f64, f64); 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = if half >= 0.0 { half + r } else { half - r };
        let small = if big != 0.0 { det / big } else { 0.0 };
        if big >= small {
            [(big, 0.0), (small, 0.0)]
        } else {
            [(small, 0.0), (big, 0.0)]
        }
    } else {
        let r = (-disc).sqrt();
        [(half, r), (half, -r)]
    }
}

pub fn classify_eigenvalues(eig: &[(f64, f64); 2], marginal: f64) -> Stability {
    let max_re = eig[0].0.max(eig[1].0);
    if max_re > marginal {
        Stability::Unstable
    } else if max_re < -marginal {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

pub fn equilibrium_stability(params: &AgentParams, rho: f64, z: f64, x: f64) -> Stability {
    classify_eigenvalues(&eigenvalues2(&coupled_jacobian(params, z, x, rho)), MARGINAL_EIGENVALUE)
}

/// Position that zeroes the x-velocity for a given opinion.
pub fn x_nullcline(params: &AgentParams, rho: f64, z: f64) -> f64 {
    let eta = switch_fn(z, params.sigma);
    let w = (1.0 - eta) * params.k_x;
    (w * waypoint_x(params, z, rho) + eta * z) / (w + eta)
}

/// Newton's method on `(f, h) = 0` at fixed parameters, with step halving.
pub fn newton_equilibrium(params: &AgentParams, rho: f64, guess: (f64, f64)) -> Result<(f64, f64)> {
    let (mut z, mut x) = guess;
    let norm = |z: f64, x: f64| {
        let (f, h) = coupled_field(params, z, x, rho);
        f.abs().max(h.abs())
    };
    let mut r = norm(z, x);
    for _ in 0..60 {
        if r <= 1e-13 {
            break;
        }
        let j = coupled_jacobian(params, z, x, rho);
        let (f, h) = coupled_field(params, z, x, rho);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Continuation("singular Jacobian in Newton solve".into()));
        }
        let dz = -(j[1][1] * f - j[0][1] * h) / det;
        let dx = -(-j[1][0] * f + j[0][0] * h) / det;
        let mut lambda = 1.0;
        loop {
            let (zn, xn) = (z + lambda * dz, x + lambda * dx);
            let rn = norm(zn, xn);
            if rn < r || lambda < 1e-4 {
                z = zn;
                x = xn;
                r = rn;
                break;
            }
            lambda *= 0.5;
        }
        if (lambda * dz).abs().max((lambda * dx).abs()) < 1e-15 {
            break;
        }
    }
    if r <= EQUILIBRIUM_TOL && z.is_finite() && x.is_finite() {
        Ok((z, x))
    } else {
        Err(Error::Continuation(format!(
            "Newton did not converge from {guess:?} (residual {r:e})"
        )))
    }
}

/// Equilibria with `z` in `[lo, hi]`, found by multi-start Newton on the
/// two-dimensional system. Sorted by `z`.
pub fn find_equilibria(params: &AgentParams, rho: f64, lo: f64, hi: f64, starts: usize) -> Vec<(f64, f64)> {
    let mut found: Vec<(f64, f64)> = Vec::new();
    let starts = starts.max(2);
    for i in 0..starts {
        let z0 = lo + (hi - lo) * i as f64 / (starts - 1) as f64;
        let x0 = x_nullcline(params, rho, z0);
        if let Ok((z, x)) = newton_equilibrium(params, rho, (z0, x0)) {
            if z >= lo - 1e-12 && z <= hi + 1e-12 && !found.iter().any(|e| (e.0 - z).abs() < 1e-7) {
                found.push((z, x));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub param: f64,
    pub z: f64,
    pub x: f64,
    pub stability: Stability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    /// Saddle-node: two equilibria meet and annihilate.
    SaddleNode,
    /// Tip of a symmetric branch meeting the neutral branch (pitchfork).
    Pitchfork,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub param: f64,
    pub z: f64,
    pub x: f64,
    pub kind: FoldKind,
    /// Index of the sample preceding the fold on its branch.
    pub after_sample: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumBranch {
    pub samples: Vec<BranchSample>,
    pub folds: Vec<Fold>,
    /// Points where the neutral branch changes stability without folding.
    pub branch_points: Vec<f64>,
    /// Why tracing stopped short, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminated: Option<String>,
}

/// Switching thresholds read off a `b`-branch: the folds at which the last
/// stable equilibrium of each sign disappears.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFolds {
    /// `(z₁*, b₁*)` with `z₁* > 0`: most negative fold in `b`.
    pub lower: Fold,
    /// `(z₂*, b₂*)` with `z₂* < 0`: most positive fold in `b`.
    pub upper: Fold,
}

impl EquilibriumBranch {
    pub fn saddle_nodes(&self) -> impl Iterator<Item = &Fold> {
        self.folds.iter().filter(|f| f.kind == FoldKind::SaddleNode)
    }

    pub fn threshold_folds(&self) -> Option<ThresholdFolds> {
        let lower = self
            .saddle_nodes()
            .filter(|f| f.z > 0.0)
            .min_by(|a, b| a.param.total_cmp(&b.param))?;
        let upper = self
            .saddle_nodes()
            .filter(|f| f.z < 0.0)
            .max_by(|a, b| a.param.total_cmp(&b.param))?;
        Some(ThresholdFolds {
            lower: *lower,
            upper: *upper,
        })
    }

    /// Points where the branch crosses `param = value`, linearly interpolated
    /// between samples.
    pub fn crossings(&self, value: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if (a.param - value) * (b.param - value) < 0.0 || (b.param == value) {
                let t = if b.param == a.param {
                    1.0
                } else {
                    (value - a.param) / (b.param - a.param)
                };
                out.push((a.z + t * (b.z - a.z), a.x + t * (b.x - a.x)));
            }
        }
        out
    }

    /// CSV rows `param,z,x,stability,is_fold`, fold rows interleaved at their
    /// position along the branch.
    pub fn write_csv_rows<W: std::io::Write>(&self, mut w: W, branch_id: usize) -> std::io::Result<()> {
        let mut folds = self.folds.iter().peekable();
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(w, "{:?},{:?},{:?},{},0,{}", s.param, s.z, s.x, s.stability, branch_id)?;
            while let Some(f) = folds.next_if(|f| f.after_sample == i) {
                writeln!(w, "{:?},{:?},{:?},marginal,1,{}", f.param, f.z, f.x, branch_id)?;
            }
        }
        Ok(())
    }
}

pub const BRANCH_CSV_HEADER: &str = "param,z,x,stability,is_fold,branch";

pub fn write_branches_csv<W: std::io::Write>(mut w: W, branches: &[EquilibriumBranch]) -> std::io::Result<()> {
    writeln!(w, "{BRANCH_CSV_HEADER}")?;
    for (i, b) in branches.iter().enumerate() {
        b.write_csv_rows(&mut w, i)?;
    }
    Ok(())
}
