//! Pseudo-arclength continuation of equilibria in one parameter.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{
    equilibrium_stability, find_equilibria, newton_equilibrium, BifurcationProblem, BranchSample, EquilibriumBranch,
    Fold, FoldKind, ThresholdFolds, EQUILIBRIUM_TOL,
};
use crate::error::{Error, Result};
use crate::model::{coupled_field, coupled_jacobian, coupled_param_derivative, AgentParams, Param};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSettings {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub max_points: usize,
    /// Stop once `|z|` exceeds this.
    pub z_bound: f64,
    /// Fold refinement stops once the bracketing parameters agree to this.
    pub fold_param_tol: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            max_step: 1e-2,
            min_step: 1e-9,
            tol: EQUILIBRIUM_TOL,
            max_newton: 12,
            max_halvings: 10,
            max_points: 50_000,
            z_bound: 3.0,
            fold_param_tol: 1e-8,
        }
    }
}

type Point = Vector3<f64>; // (param, z, x)

/// How far Newton may move a start point before it counts as a different
/// equilibrium.
const START_RADIUS: f64 = 0.05;

/// `|z|` treated as lying on the neutral branch.
const NEUTRAL_Z: f64 = 1e-9;

struct System<'a> {
    problem: &'a BifurcationProblem,
}

impl System<'_> {
    fn residual(&self, y: &Point) -> [f64; 2] {
        let p = self.problem.with_param(y[0]);
        let (f, h) = coupled_field(&p, y[1], y[2], self.problem.rho);
        [f, h]
    }

    /// Rows `[F_p, F_z, F_x]` of the 2×3 extended Jacobian.
    fn jacobian(&self, y: &Point) -> [Vector3<f64>; 2] {
        let p = self.problem.with_param(y[0]);
        let j = coupled_jacobian(&p, y[1], y[2], self.problem.rho);
        let (fp, hp) = coupled_param_derivative(&p, self.problem.free, y[1], y[2], self.problem.rho);
        [Vector3::new(fp, j[0][0], j[0][1]), Vector3::new(hp, j[1][0], j[1][1])]
    }

    /// Unit null vector of the extended Jacobian, oriented along `reference`.
    fn tangent(&self, y: &Point, reference: &Point) -> Option<Point> {
        let [r0, r1] = self.jacobian(y);
        let t = r0.cross(&r1);
        let n = t.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return None;
        }
        let t = t / n;
        Some(if t.dot(reference) < 0.0 { -t } else { t })
    }

    /// Newton on `F(y) = 0`, `direction·(y - base) = s`.
    fn correct(
        &self,
        base: &Point,
        direction: &Point,
        s: f64,
        settings: &ContinuationSettings,
    ) -> Option<(Point, usize)> {
        let mut y = base + direction * s;
        for it in 0..settings.max_newton {
            let r = self.residual(&y);
            let arc = direction.dot(&(y - base)) - s;
            let [r0, r1] = self.jacobian(&y);
            let m = Matrix3::from_rows(&[r0.transpose(), r1.transpose(), direction.transpose()]);
            let rhs = Vector3::new(-r[0], -r[1], -arc);
            let delta = m.lu().solve(&rhs)?;
            y += delta;
            if !y.iter().all(|c| c.is_finite()) {
                return None;
            }
            let r = self.residual(&y);
            if r[0].abs().max(r[1].abs()) <= settings.tol && delta.amax() <= 1e-9_f64.max(settings.tol) {
                return Some((y, it + 1));
            }
        }
        None
    }
}

fn sample(problem: &BifurcationProblem, y: &Point) -> BranchSample {
    let p = problem.with_param(y[0]);
    BranchSample {
        param: y[0],
        z: y[1],
        x: y[2],
        stability: equilibrium_stability(&p, problem.rho, y[1], y[2]),
    }
}

/// Parameter where the neutral equilibrium `(0, 0)` loses hyperbolicity,
/// by secant iteration on `det J(0, 0)` from `a` and `b`.
fn neutral_branch_point(system: &System, a: f64, b: f64) -> f64 {
    let det = |p: f64| det_x(system, &Point::new(p, 0.0, 0.0));
    let (mut p0, mut p1) = (a, b);
    let (mut d0, mut d1) = (det(p0), det(p1));
    for _ in 0..50 {
        if d1 == 0.0 || d1 == d0 || (p1 - p0).abs() < 1e-15 {
            break;
        }
        let p2 = p1 - d1 * (p1 - p0) / (d1 - d0);
        (p0, d0) = (p1, d1);
        p1 = p2;
        d1 = det(p1);
    }
    p1
}

fn det_x(system: &System, y: &Point) -> f64 {
    let [r0, r1] = system.jacobian(y);
    r0[1] * r1[2] - r0[2] * r1[1]
}

/// Bisects the arclength `s ∈ (0, h)` along `direction` from `base` for the
/// zero of the oriented tangent's parameter component.
fn refine_fold(
    system: &System,
    base: &Point,
    base_tangent: &Point,
    direction: &Point,
    h: f64,
    end: &Point,
    settings: &ContinuationSettings,
) -> Point {
    let sign0 = base_tangent[0].signum();
    let (mut lo, mut hi) = (0.0, h);
    let (mut y_lo, mut y_hi) = (*base, *end);
    let mut t_lo = base_tangent[0];
    let mut t_hi = system.tangent(end, direction).map_or(-t_lo, |t| t[0]);
    for _ in 0..200 {
        if (y_hi[0] - y_lo[0]).abs() <= settings.fold_param_tol && hi - lo <= 1e-6 {
            break;
        }
        if hi - lo <= 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let Some((y, _)) = system.correct(base, direction, mid, settings) else {
            break;
        };
        let Some(t) = system.tangent(&y, direction) else {
            break;
        };
        if t[0].signum() == sign0 {
            lo = mid;
            y_lo = y;
            t_lo = t[0];
        } else {
            hi = mid;
            y_hi = y;
            t_hi = t[0];
        }
    }
    // secant on the tangent component for the final estimate
    let w = if t_lo != t_hi { t_lo / (t_lo - t_hi) } else { 0.5 };
    let s = lo + w.clamp(0.0, 1.0) * (hi - lo);
    system
        .correct(base, direction, s, settings)
        .map(|(y, _)| y)
        .unwrap_or_else(|| if t_lo.abs() < t_hi.abs() { y_lo } else { y_hi })
}

/// Equilibrium at `param = bound` between `inside` and the step `outside`
/// that left the range.
fn boundary_point(problem: &BifurcationProblem, inside: &Point, outside: &Point, bound: f64) -> Option<Point> {
    let t = (bound - inside[0]) / (outside[0] - inside[0]);
    let guess = inside + (outside - inside) * t;
    let (z, x) = newton_equilibrium(&problem.with_param(bound), problem.rho, (guess[1], guess[2])).ok()?;
    let close = (z - guess[1]).abs().max((x - guess[2]).abs()) <= (outside - inside).amax();
    close.then(|| Point::new(bound, z, x))
}

/// Traces the equilibrium branch through `start` in the direction of
/// increasing (`direction > 0`) or decreasing free parameter, until the
/// parameter leaves `problem.range`, `|z|` exceeds the bound, or the point
/// budget runs out. A corrector failure after the first step ends the branch
/// early and is reported in [`EquilibriumBranch::terminated`].
pub fn continue_branch(
    problem: &BifurcationProblem,
    start: (f64, f64, f64),
    direction: f64,
    settings: &ContinuationSettings,
) -> Result<EquilibriumBranch> {
    let system = System { problem };
    let (p0, z0, x0) = start;
    let params0 = problem.with_param(p0);
    let (z0, x0) = newton_equilibrium(&params0, problem.rho, (z0, x0))
        .ok()
        .filter(|(z, x)| (z - start.1).abs().max((x - start.2).abs()) <= START_RADIUS)
        .ok_or_else(|| Error::Continuation(format!("start {start:?} is not near an equilibrium")))?;
    let mut y = Point::new(p0, z0, x0);

    let orient = Point::new(direction.signum(), 0.0, 0.0);
    let mut tangent = match system.tangent(&y, &orient) {
        Some(t) if t[0].abs() > 1e-12 => t,
        // starting on a fold or branch point: leave along z
        Some(t) => {
            if t[1] < 0.0 {
                -t
            } else {
                t
            }
        }
        None => return Err(Error::Continuation("degenerate start point".into())),
    };

    let mut branch = EquilibriumBranch::default();
    branch.samples.push(sample(problem, &y));
    let mut predictor = tangent;
    let mut h = settings.initial_step;
    let mut halvings = 0;
    let (lo, hi) = problem.range;

    while branch.samples.len() < settings.max_points {
        let accepted = system.correct(&y, &predictor, h, settings).and_then(|(y1, iters)| {
            let t1 = system.tangent(&y1, &tangent).unwrap_or(predictor);
            let secant = (y1 - y).normalize();
            // reject jumps onto a neighbouring branch
            if secant.dot(&predictor) < 0.9 {
                None
            } else {
                Some((y1, t1, iters))
            }
        });
        let Some((y1, t1, iters)) = accepted else {
            halvings += 1;
            if halvings > settings.max_halvings || h * 0.5 < settings.min_step {
                let reason = format!(
                    "corrector failed near param = {}, z = {} after {} halvings",
                    y[0],
                    y[1],
                    halvings - 1
                );
                // typically a branch point; keep what was traced
                if branch.samples.len() > 1 {
                    branch.terminated = Some(reason);
                    break;
                }
                return Err(Error::Continuation(reason));
            }
            h *= 0.5;
            continue;
        };
        halvings = 0;

        // a side branch of the symmetric problem can only reach z = 0 at
        // the pitchfork on the neutral branch
        let symmetric = problem.params.b == 0.0 && problem.free != Param::B;
        if symmetric && y[1].abs() > NEUTRAL_Z && (y1[1].abs() <= NEUTRAL_Z || y1[1].signum() != y[1].signum()) {
            let p_star = neutral_branch_point(&system, y[0], y1[0]);
            if (lo..=hi).contains(&p_star) {
                branch.folds.push(Fold {
                    param: p_star,
                    z: 0.0,
                    x: 0.0,
                    kind: FoldKind::Pitchfork,
                    after_sample: branch.samples.len() - 1,
                });
                branch.samples.push(sample(problem, &Point::new(p_star, 0.0, 0.0)));
            }
            break;
        }

        if t1[0] != 0.0 && tangent[0] != 0.0 && t1[0].signum() != tangent[0].signum() {
            let f = refine_fold(&system, &y, &tangent, &predictor, h, &y1, settings);
            let kind = if problem.free == Param::U && problem.params.b == 0.0 && f[1].abs() < 1e-6 {
                FoldKind::Pitchfork
            } else {
                FoldKind::SaddleNode
            };
            branch.folds.push(Fold {
                param: f[0],
                z: f[1],
                x: f[2],
                kind,
                after_sample: branch.samples.len() - 1,
            });
        } else {
            let (d0, d1) = (det_x(&system, &y), det_x(&system, &y1));
            if d0 * d1 < 0.0 {
                let w = d0 / (d0 - d1);
                branch.branch_points.push(y[0] + w * (y1[0] - y[0]));
            }
        }

        if y1[0] < lo || y1[0] > hi {
            let bound = if y1[0] < lo { lo } else { hi };
            if let Some(end) = boundary_point(problem, &y, &y1, bound).filter(|e| e[0] != y[0]) {
                branch.samples.push(sample(problem, &end));
            }
            break;
        }
        if y1[1].abs() > settings.z_bound {
            break;
        }
        branch.samples.push(sample(problem, &y1));
        predictor = (y1 - y).normalize();
        if predictor.dot(&t1) < 0.0 {
            predictor = t1;
        }
        y = y1;
        tangent = t1;
        if iters <= 3 {
            h = (h * 1.3).min(settings.max_step);
        }
    }
    Ok(branch)
}

/// Continues from `start` both ways and joins the halves into one branch
/// ordered by arclength.
pub fn continue_both_ways(
    problem: &BifurcationProblem,
    start: (f64, f64, f64),
    settings: &ContinuationSettings,
) -> Result<EquilibriumBranch> {
    let back = continue_branch(problem, start, -1.0, settings)?;
    let fwd = continue_branch(problem, start, 1.0, settings)?;
    let n_back = back.samples.len();
    let mut out = EquilibriumBranch::default();
    out.samples.extend(back.samples.iter().rev().copied());
    // fold after back-sample i sits between reversed indices n-2-i and n-1-i
    for f in back.folds.iter().rev() {
        out.folds.push(Fold {
            after_sample: n_back - 2 - f.after_sample,
            ..*f
        });
    }
    out.branch_points.extend(back.branch_points.iter().rev());
    let offset = n_back - 1;
    out.samples.extend(fwd.samples.iter().skip(1).copied());
    for f in &fwd.folds {
        out.folds.push(Fold {
            after_sample: f.after_sample + offset,
            ..*f
        });
    }
    out.branch_points.extend(fwd.branch_points);
    out.terminated = match (back.terminated, fwd.terminated) {
        (Some(a), Some(b)) => Some(format!("{a}; {b}")),
        (a, b) => a.or(b),
    };
    Ok(out)
}

/// The full equilibrium curve in `b` over `problem.range`, started from the
/// most negative equilibrium at the lower end of the range.
pub fn trace_b_branch(problem: &BifurcationProblem, settings: &ContinuationSettings) -> Result<EquilibriumBranch> {
    if problem.free != Param::B {
        return Err(Error::Validation("trace_b_branch needs b as the free parameter".into()));
    }
    let b0 = problem.range.0;
    let p = problem.with_param(b0);
    let seeds = find_equilibria(&p, problem.rho, -settings.z_bound, settings.z_bound, 601);
    let &(z, x) = seeds
        .first()
        .ok_or_else(|| Error::Continuation(format!("no equilibrium found at b = {b0}")))?;
    continue_branch(problem, (b0, z, x), 1.0, settings)
}

/// Every branch met at either end of `problem.range`, each followed both
/// ways. Seeds a traced branch already ends on are skipped.
pub fn trace_diagram(problem: &BifurcationProblem, settings: &ContinuationSettings) -> Result<Vec<EquilibriumBranch>> {
    let mut branches: Vec<EquilibriumBranch> = Vec::new();
    for end in [problem.range.0, problem.range.1] {
        let p = problem.with_param(end);
        for (z, x) in find_equilibria(&p, problem.rho, -settings.z_bound, settings.z_bound, 601) {
            let covered = branches
                .iter()
                .flat_map(|b| [b.samples.first(), b.samples.last()])
                .flatten()
                .any(|s| s.param == end && (s.z - z).abs() <= 1e-6);
            if !covered {
                branches.push(continue_both_ways(problem, (end, z, x), settings)?);
            }
        }
    }
    if branches.is_empty() {
        return Err(Error::Continuation(format!(
            "no equilibrium found at either end of {:?}",
            problem.range
        )));
    }
    Ok(branches)
}

/// Switching thresholds `b₁*`, `b₂*` for fixed parameters, from a
/// `b`-continuation over `b_range`.
pub fn switching_thresholds(
    params: &AgentParams,
    rho: f64,
    b_range: (f64, f64),
    settings: &ContinuationSettings,
) -> Result<ThresholdFolds> {
    let problem = BifurcationProblem::new(*params, rho, Param::B, b_range)?;
    trace_b_branch(&problem, settings)?
        .threshold_folds()
        .ok_or_else(|| Error::Continuation(format!("no pair of opposite threshold folds for b in {b_range:?}")))
}
