use nodswitch::bifurcation::{switching_thresholds, trace_diagram, BifurcationProblem, ContinuationSettings, FoldKind};
use nodswitch::model::coupled_field;
use nodswitch::{AgentParams, Param};

fn sharp(u: f64, k_x: f64) -> AgentParams {
    AgentParams {
        d: 1.0,
        u,
        b: 0.0,
        k_z: 2.0,
        k_x,
        k: 10.0,
        sigma: 0.1,
        ..AgentParams::default()
    }
}

/// Wide gate, cubic coefficient normalised to -1.
fn smooth(u: f64) -> AgentParams {
    AgentParams {
        d: 1.0,
        u,
        b: 0.0,
        k_z: 2.0,
        k_x: 1.0,
        k: 1.0,
        sigma: 1.0,
        ..AgentParams::default()
    }
}

#[test]
fn unbiased_branches_come_in_mirror_pairs() {
    for (p, rho) in [
        (sharp(1.0, 3.0), 0.05),
        (sharp(1.0, 3.0), 0.5),
        (smooth(1.0), 1.0 / 3.0),
    ] {
        let prob = BifurcationProblem::new(p, rho, Param::U, (0.5, 1.5)).unwrap();
        let branches = trace_diagram(&prob, &ContinuationSettings::default()).unwrap();
        for s in branches.iter().flat_map(|b| b.samples.iter().step_by(7)) {
            let (f, h) = coupled_field(&prob.with_param(s.param), -s.z, -s.x, rho);
            assert!(f.abs() < 1e-10 && h.abs() < 1e-10);
            // tracing stops near range ends and at the branch point, so
            // coverage is only compared away from both
            if s.param <= prob.range.0 + 0.05 || s.param >= prob.range.1 - 0.05 || s.z.abs() < 0.05 {
                continue;
            }
            let mirrored = branches
                .iter()
                .flat_map(|b| b.crossings(s.param))
                .any(|(z, x)| (z + s.z).abs() < 1e-3 && (x + s.x).abs() < 1e-3);
            assert!(mirrored, "no mirror of ({}, {}, {})", s.param, s.z, s.x);
        }
    }
}

#[test]
fn two_threshold_folds_above_critical_attention() {
    let settings = ContinuationSettings::default();
    for i in 1..=10 {
        let u = 1.0 + 0.05 * f64::from(i);
        let prob = BifurcationProblem::new(smooth(u), 1.0 / 3.0, Param::B, (-1.0, 1.0)).unwrap();
        let branch = nodswitch::bifurcation::trace_b_branch(&prob, &settings).unwrap();
        let folds: Vec<_> = branch.saddle_nodes().collect();
        assert_eq!(folds.len(), 2, "u = {u}");
        for &(rho, k_x) in &[(0.5, 3.0), (0.5, 0.15), (1.0, 0.15)] {
            let t = switching_thresholds(&sharp(u, k_x), rho, (-1.0, 1.0), &settings).unwrap();
            assert!(t.lower.z > 0.0 && t.lower.param < 0.0, "u = {u}: {:?}", t.lower);
            assert!(t.upper.z < 0.0 && t.upper.param > 0.0, "u = {u}: {:?}", t.upper);
            assert_eq!(t.lower.kind, FoldKind::SaddleNode);
        }
    }
}

#[test]
fn upper_threshold_grows_with_attention() {
    let settings = ContinuationSettings::default();
    let b2: Vec<f64> = (0..10)
        .map(|i| {
            let u = f64::from(105 + 5 * i) / 100.0;
            switching_thresholds(&sharp(u, 3.0), 0.5, (-1.0, 1.0), &settings)
                .unwrap()
                .upper
                .param
        })
        .collect();
    assert!(b2.windows(2).all(|w| w[1] > w[0]), "{b2:?}");
}

/// A faster agent holds on longer: `b₂*` rises with `K_x`.
#[test]
fn upper_threshold_grows_with_navigation_gain() {
    let settings = ContinuationSettings::default();
    let b2: Vec<f64> = [1.0, 2.0, 3.0, 4.0]
        .iter()
        .map(|&k_x| {
            switching_thresholds(&sharp(1.1, k_x), 0.5, (-1.0, 1.0), &settings)
                .unwrap()
                .upper
                .param
        })
        .collect();
    assert!(b2.windows(2).all(|w| w[1] > w[0]), "{b2:?}");
    let b1: Vec<f64> = [0.11, 0.13, 0.15]
        .iter()
        .map(|&k_x| {
            switching_thresholds(&sharp(1.3, k_x), 1.0, (-1.0, 1.0), &settings)
                .unwrap()
                .lower
                .param
        })
        .collect();
    assert!(b1.windows(2).all(|w| w[1] < w[0]), "{b1:?}");
}

#[test]
fn below_critical_attention_the_b_branch_is_monotone() {
    let prob = BifurcationProblem::new(smooth(0.9), 1.0 / 3.0, Param::B, (-0.6, 0.6)).unwrap();
    let branch = nodswitch::bifurcation::trace_b_branch(&prob, &ContinuationSettings::default()).unwrap();
    assert!(branch.folds.is_empty(), "{:?}", branch.folds);
    assert!(branch
        .samples
        .windows(2)
        .all(|w| w[1].param > w[0].param && w[1].z > w[0].z));
}

/// With a narrow gate the coupling alone bends the branch: folds appear in
/// `b` even though the neutral equilibrium is stable.
#[test]
fn narrow_gate_folds_below_critical_attention() {
    let prob = BifurcationProblem::new(sharp(0.9, 3.0), 0.05, Param::B, (-0.6, 0.6)).unwrap();
    let branch = nodswitch::bifurcation::trace_b_branch(&prob, &ContinuationSettings::default()).unwrap();
    assert_eq!(branch.saddle_nodes().count(), 4);
    for f in branch.saddle_nodes() {
        assert!(f.z.abs() > 0.1 && f.param.abs() < 0.1);
    }
}
