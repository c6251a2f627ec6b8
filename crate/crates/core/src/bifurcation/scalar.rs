//! One-dimensional reduction of the equilibrium problem.
//!
//! Solving `ż = 0` for the position gives `x(z)`; substituting it into
//! `ẋ = 0` leaves a scalar bifurcation function `g(z)` whose zeros are the
//! equilibria. `x(z)` divides by `η(z)`, so this is only usable where the
//! gate has not underflowed.

use crate::error::{Error, Result};
use crate::model::{coupled_field, saturation, switch_fn, AgentParams};

/// Gate values below this make the reduction numerically meaningless.
pub const ETA_FLOOR: f64 = 1e-250;

/// Returns `(x(z), g(z))`.
pub fn reduce_to_scalar(params: &AgentParams, rho: f64, z: f64) -> Result<(f64, f64)> {
    let eta = switch_fn(z, params.sigma);
    if eta <= ETA_FLOOR {
        return Err(Error::Domain(format!(
            "scalar reduction invalid at z = {z}: gate underflow (eta = {eta:e})"
        )));
    }
    let x = z + (params.d * z - params.u * saturation(z) - params.b) / (params.k_z * eta);
    let (_, g) = coupled_field(params, z, x, rho);
    Ok((x, g))
}

/// Zeros of `f` on `[lo, hi]`: sign changes on a uniform grid of spacing
/// `h`, each refined by bisection to machine precision.
pub fn scan_roots(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).round().max(1.0) as usize;
    let at = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let mut roots = Vec::new();
    let mut a = at(0);
    let mut fa = f(a);
    if fa == 0.0 {
        roots.push(a);
    }
    for i in 1..=n {
        let b = at(i);
        let fb = f(b);
        if fb == 0.0 {
            roots.push(b);
        } else if fa != 0.0 && fa.signum() != fb.signum() {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    l = m;
                    r = m;
                    break;
                }
                if fm.signum() == fl.signum() {
                    l = m;
                    fl = fm;
                } else {
                    r = m;
                }
            }
            roots.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Equilibria `(z, x)` from the zeros of `g` on `[lo, hi]`.
pub fn scalar_equilibria(params: &AgentParams, rho: f64, lo: f64, hi: f64, h: f64) -> Result<Vec<(f64, f64)>> {
    for z in [lo, hi] {
        reduce_to_scalar(params, rho, z)?;
    }
    let g = |z: f64| reduce_to_scalar(params, rho, z).map(|r| r.1).unwrap_or(f64::NAN);
    scan_roots(g, lo, hi, h)
        .into_iter()
        .map(|z| reduce_to_scalar(params, rho, z).map(|(x, _)| (z, x)))
        .collect()
}
