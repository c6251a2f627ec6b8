use serde::{Deserialize, Serialize};

use super::{classify_eigenvalues, eigenvalues2, Stability};
use crate::error::{Error, Result};
use crate::model::AgentParams;

/// Linearisation at the neutral equilibrium `(z, x) = (0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralStability {
    pub stability: Stability,
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [(f64, f64); 2],
    pub trace: f64,
    pub determinant: f64,
}

/// Stability of the neutral equilibrium for an unbiased agent.
///
/// The Jacobian there is `[[u - d - K_z, K_z], [1, -1]]` with
/// `det = d - u` and `trace = u - d - K_z - 1`, so the equilibrium loses
/// stability exactly at `u = d`.
pub fn neutral_stability(params: &AgentParams) -> Result<NeutralStability> {
    params.validate()?;
    if params.b != 0.0 {
        return Err(Error::Domain(format!(
            "neutral equilibrium requires b = 0, got {}",
            params.b
        )));
    }
    let jacobian = [[-params.d + params.u - params.k_z, params.k_z], [1.0, -1.0]];
    let eigenvalues = eigenvalues2(&jacobian);
    let trace = jacobian[0][0] + jacobian[1][1];
    let determinant = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
    Ok(NeutralStability {
        stability: classify_eigenvalues(&eigenvalues, 1e-12),
        jacobian,
        eigenvalues,
        trace,
        determinant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Supercritical,
    SubcriticalQuintic,
    DegenerateQuintic,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criticality::Supercritical => "supercritical",
            Criticality::SubcriticalQuintic => "subcritical_quintic",
            Criticality::DegenerateQuintic => "degenerate_quintic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub criticality: Criticality,
    /// `-2d/K_z - 3K_x(1 - kρ/l)/σ`, the published form of the cubic
    /// condition.
    pub stated_cubic_condition: f64,
    /// `g_zzz` at `(z, u, b) = (0, d, 0)`:
    /// `-2d/K_z - 3K_x(1 - kρ/l)/σ²`.
    pub cubic_coefficient: f64,
    /// `g_zzzzz` at the same point.
    pub quintic_coefficient: f64,
    /// `g_zu` at the same point, `1/K_z`.
    pub unfolding_slope: f64,
}

/// Threshold below which the cubic coefficient counts as zero.
pub const DEGENERATE_CUBIC: f64 = 1e-12;

/// Classifies the symmetric pitchfork at `u* = d` by the sign of the cubic
/// Taylor coefficient of the scalar bifurcation function.
///
/// When that coefficient vanishes or is positive, the quintic coefficient
/// must be negative for the pitchfork to be stabilised; otherwise the
/// parameter set is rejected.
pub fn classify_criticality(params: &AgentParams, rho: f64) -> Result<CriticalityReport> {
    params.validate()?;
    let AgentParams {
        d,
        k_z,
        k_x,
        k,
        sigma,
        l,
        ..
    } = *params;
    let gain = k * rho / l;
    let s2 = sigma * sigma;
    let s4 = s2 * s2;

    let stated_cubic_condition = -2.0 * d / k_z - 3.0 * k_x * (1.0 - gain) / sigma;
    let cubic_coefficient = -2.0 * d / k_z - 3.0 * k_x * (1.0 - gain) / s2;
    let quintic_coefficient = -20.0 * k_x * k * k * gain / s2 - 15.0 * k_x * gain / s4 + 15.0 * k_x / s4
        - 20.0 * k_x * d / (k_z * s2)
        + 16.0 * d / k_z;

    let criticality = if cubic_coefficient.abs() <= DEGENERATE_CUBIC {
        Criticality::DegenerateQuintic
    } else if cubic_coefficient < 0.0 {
        Criticality::Supercritical
    } else {
        Criticality::SubcriticalQuintic
    };
    if criticality != Criticality::Supercritical && quintic_coefficient >= 0.0 {
        return Err(Error::OutOfTheory(format!(
            "quintic coefficient {quintic_coefficient} is not negative"
        )));
    }
    Ok(CriticalityReport {
        criticality,
        stated_cubic_condition,
        cubic_coefficient,
        quintic_coefficient,
        unfolding_slope: 1.0 / k_z,
    })
}

/// Saddle-node pair of the supercritical normal form
/// `ż = -z³ + (u - d) z + b`: `(±√((u-d)/3), ∓2((u-d)/3)^{3/2})`.
pub fn normal_form_saddles(u: f64, d: f64) -> Result<[(f64, f64); 2]> {
    if !(u > d) {
        return Err(Error::Domain(format!("saddle nodes need u > d (u = {u}, d = {d})")));
    }
    let r = (u - d) / 3.0;
    let z = r.sqrt();
    let b = 2.0 * r.powf(1.5);
    Ok([(z, -b), (-z, b)])
}
