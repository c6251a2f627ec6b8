//! How the switching thresholds move with the attention `u` and the
//! navigation gain `K_x`.
//!
//! At a fold `g = g_z = 0`, so by the implicit function theorem
//! `∂b*/∂p = -g_p / g_b`. For `p = u` this is `-S(z*)`; for `p = K_x` it is
//! `-K_z η (1-η)(x̄(z) - x(z)) / (K_x (1-η) + η)`.

use serde::{Deserialize, Serialize};

use super::{continuation::trace_b_branch, BifurcationProblem, ContinuationSettings, Fold};
use crate::error::{Error, Result};
use crate::model::{saturation, switch_fn, waypoint_x, Param};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub analytic: f64,
    pub finite_difference: f64,
}

impl Sensitivity {
    pub fn relative_error(&self) -> f64 {
        (self.finite_difference - self.analytic).abs() / self.analytic.abs().max(f64::MIN_POSITIVE)
    }
}

fn closed_form(problem: &BifurcationProblem, fold: &Fold, which: Param) -> f64 {
    let mut p = problem.params;
    p.b = fold.param;
    let z = fold.z;
    match which {
        Param::U => -saturation(z),
        Param::Kx => {
            let eta = switch_fn(z, p.sigma);
            let x_of_z = z + (p.d * z - p.u * saturation(z) - p.b) / (p.k_z * eta);
            let gap = waypoint_x(&p, z, problem.rho) - x_of_z;
            -p.k_z * eta * (1.0 - eta) * gap / (p.k_x * (1.0 - eta) + eta)
        }
        Param::B => 1.0,
    }
}

/// Analytic slope of the fold's `b*` with respect to `which`, alongside a
/// central difference from two fresh continuations at `which ± delta`.
///
/// `problem` must have `b` free and `fold` must come from a converged
/// continuation of it.
pub fn threshold_sensitivity(
    problem: &BifurcationProblem,
    fold: &Fold,
    which: Param,
    delta: f64,
    settings: &ContinuationSettings,
) -> Result<Sensitivity> {
    if problem.free != Param::B {
        return Err(Error::Validation(
            "threshold sensitivity needs b as the free parameter".into(),
        ));
    }
    if which == Param::B {
        return Err(Error::Validation(
            "sensitivity is taken with respect to u or k_x".into(),
        ));
    }
    let p = problem.with_param(fold.param);
    let (f, h) = crate::model::coupled_field(&p, fold.z, fold.x, problem.rho);
    if !(f.abs() <= 1e-8 && h.abs() <= 1e-8) {
        return Err(Error::Continuation("fold is not converged".into()));
    }

    let shifted = |sign: f64| -> Result<f64> {
        let mut q = *problem;
        which.set(&mut q.params, which.get(&problem.params) + sign * delta);
        q.params.validate()?;
        let branch = trace_b_branch(&q, settings)?;
        branch
            .saddle_nodes()
            .min_by(|a, b| (a.z - fold.z).abs().total_cmp(&(b.z - fold.z).abs()))
            .map(|f| f.param)
            .ok_or_else(|| Error::Continuation(format!("fold lost at {} {:+}", which.name(), sign * delta)))
    };
    let plus = shifted(1.0)?;
    let minus = shifted(-1.0)?;
    Ok(Sensitivity {
        analytic: closed_form(problem, fold, which),
        finite_difference: (plus - minus) / (2.0 * delta),
    })
}
