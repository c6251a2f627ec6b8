use nodswitch::integrator::{arrived, resample_waypoint, step, IntegratorConfig};
use nodswitch::scenarios;
use nodswitch::sim::{self, switch_times, Scenario};
use nodswitch::{AgentState, PatchId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn csv(s: &Scenario) -> Vec<u8> {
    let mut buf = Vec::new();
    sim::run(s).unwrap().log.write_csv(&mut buf).unwrap();
    buf
}

#[test]
fn same_seed_same_bytes() {
    let mut s = scenarios::declustering(11);
    s.integrator.t_end = 20.0;
    assert_eq!(csv(&s), csv(&s));
    let mut other = s.clone();
    other.seed = 12;
    assert_ne!(csv(&s), csv(&other));
}

#[test]
fn lone_agent_keeps_exploring() {
    for seed in 0..4 {
        let out = sim::run(&scenarios::lone_agent(seed)).unwrap();
        let sw = &switch_times(&out.log)[0];
        assert!(sw.len() >= 2, "seed {seed}: {} switches", sw.len());
        assert!(sw.iter().all(|r| r.t <= 200.0));
        // alternating directions
        for pair in sw.windows(2) {
            assert_eq!(pair[0].to, pair[1].from);
        }
    }
}

#[test]
fn log_shape() {
    let s = scenarios::fast_vs_slow(2);
    let out = sim::run(&s).unwrap();
    let n = s.agents.len();
    assert_eq!(out.log.rows.len(), (s.integrator.steps() + 1) * n);
    for id in 0..n {
        let ts: Vec<f64> = out.log.agent_rows(id).map(|r| r.t).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }
}

#[test]
fn trash_is_conserved_and_bias_bounded() {
    for s in [scenarios::environment_adaptation(4), scenarios::declustering(4)] {
        let out = sim::run(&s).unwrap();
        let picked: usize = out.log.rows.iter().map(|r| r.picked).sum();
        assert_eq!(picked, out.trash.collected());
        assert_eq!(out.trash.len(), out.initial_trash + out.injected_trash);
        assert!(out.log.rows.iter().all(|r| r.b.abs() < 1.0));
        assert!(out.log.rows.iter().all(|r| r.q >= 0.0));
    }
}

/// Every switch follows at least one logged step whose bias pointed away
/// from the patch being left.
#[test]
fn switches_need_an_opposing_bias() {
    for s in [
        scenarios::lone_agent(5),
        scenarios::fast_vs_slow(5),
        scenarios::environment_adaptation(5),
    ] {
        let out = sim::run(&s).unwrap();
        for (id, records) in switch_times(&out.log).iter().enumerate() {
            let mut since = 0.0;
            for r in records {
                let opposed = out
                    .log
                    .agent_rows(id)
                    .filter(|row| row.t >= since && row.t < r.t)
                    .any(|row| row.b * r.from.sign() < 0.0);
                assert!(
                    opposed,
                    "{}: agent {id} switched at {} without opposing bias",
                    s.name, r.t
                );
                since = r.t;
            }
        }
    }
}

#[test]
fn unbiased_agent_never_switches() {
    let p = scenarios::base_params();
    let patch = scenarios::strip_patches()[0];
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut s = resample_waypoint(&AgentState::new(0.5, 0.6, 0.0), &patch, &mut rng);
    let mut resamples = 0;
    for _ in 0..20_000 {
        s = step(&s, &p, &cfg).unwrap();
        assert!(s.z > 0.0);
        if arrived(&s, &p, cfg.arrival_tol) {
            s = resample_waypoint(&s, &patch, &mut rng);
            resamples += 1;
        }
    }
    assert!(resamples > 3);
}

/// An opinion held beyond `6σ` for a while puts the agent on the matching
/// side.
#[test]
fn opinion_and_position_agree() {
    let hold = 30.0;
    for s in [scenarios::lone_agent(7), scenarios::declustering(7)] {
        let sigma = s.agents[0].params.sigma;
        let out = sim::run(&s).unwrap();
        for id in 0..s.agents.len() {
            let mut start: Option<(f64, f64)> = None;
            for r in out.log.agent_rows(id) {
                if r.z.abs() > 6.0 * sigma {
                    match start {
                        Some((t0, sign)) if sign == r.z.signum() => {
                            if r.t - t0 >= hold {
                                assert_eq!(r.x.signum(), sign, "{}: agent {id} at t = {}", s.name, r.t);
                            }
                        }
                        _ => start = Some((r.t, r.z.signum())),
                    }
                } else {
                    start = None;
                }
            }
        }
    }
}

/// Global RK4 error over a fixed horizon scales as `dt⁴`.
#[test]
fn halving_dt_cuts_error_sixteenfold() {
    let p = nodswitch::AgentParams {
        b: -0.2,
        ..scenarios::base_params()
    };
    let mut start = AgentState::new(0.5, 0.6, 0.0);
    start.waypoint = Some(nodswitch::Waypoint { rho: 0.6, y: 0.05 });
    let horizon = 10.0;
    let solve = |dt: f64| {
        let cfg = IntegratorConfig {
            dt,
            ..IntegratorConfig::default()
        };
        let mut s = start;
        for _ in 0..(horizon / dt).round() as usize {
            s = step(&s, &p, &cfg).unwrap();
        }
        [s.z, s.x, s.y]
    };
    let reference = solve(0.1 / 64.0);
    let err = |dt: f64| {
        let s = solve(dt);
        (0..3).map(|i| (s[i] - reference[i]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    assert!((12.0..20.0).contains(&ratio), "error ratio {ratio} ({e1} / {e2})");
    let c = e1 / 0.1f64.powi(4);
    assert!(err(0.025) <= 1.5 * c * 0.025f64.powi(4));
}

#[test]
fn starting_patch_is_patch_one() {
    for s in [scenarios::fast_vs_slow(0), scenarios::declustering(0)] {
        let out = sim::run(&s).unwrap();
        for r in out.log.rows.iter().filter(|r| r.t == 0.0) {
            assert_eq!(r.patch, nodswitch::Membership::Patch(PatchId::One));
        }
    }
}
