use nodswitch::model::{coupled_field, switch_fn, uncoupled_opinion_field, waypoint_x};
use nodswitch::AgentParams;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = AgentParams> {
    (
        0.2..3.0f64,
        0.1..3.0f64,
        0.1..5.0f64,
        0.01..5.0f64,
        0.1..20.0f64,
        0.05..2.0f64,
        0.5..3.0f64,
    )
        .prop_map(|(d, u, k_z, k_x, k, sigma, l)| AgentParams {
            d,
            u,
            b: 0.0,
            k_z,
            k_x,
            k_y: k_x,
            k,
            sigma,
            l,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unbiased_field_is_odd(p in params(), rho in 0.0..1.0f64, z in -3.0..3.0f64, x in -3.0..3.0f64) {
        let (f, h) = coupled_field(&p, z, x, rho);
        let (fm, hm) = coupled_field(&p, -z, -x, rho);
        prop_assert_eq!(f, -fm);
        prop_assert_eq!(h, -hm);
    }

    #[test]
    fn gate_is_in_unit_interval(z in prop::num::f64::NORMAL | prop::num::f64::ZERO, sigma in 1e-3..10.0f64) {
        let eta = switch_fn(z, sigma);
        prop_assert!((0.0..=1.0).contains(&eta));
    }

    /// Strictly positive until `exp` underflows, near `38.6σ`.
    #[test]
    fn gate_is_positive_where_representable(t in -37.0..37.0f64, sigma in 1e-3..10.0f64) {
        prop_assert!(switch_fn(t * sigma, sigma) > 0.0);
    }

    #[test]
    fn far_from_neutral_the_opinion_decouples(p in params(), rho in 0.0..1.0f64, t in 6.0..40.0f64, neg in any::<bool>(), x in -3.0..3.0f64) {
        let z = if neg { -t * p.sigma } else { t * p.sigma };
        let (f, _) = coupled_field(&p, z, x, rho);
        let bound = p.k_z * (z - x).abs() * (-18.0f64).exp();
        prop_assert!((f - uncoupled_opinion_field(&p, z)).abs() <= bound + 1e-15 * f.abs().max(1.0));
    }

    #[test]
    fn waypoint_is_confined(p in params(), rho in 0.0..2.0f64, z in -1e3..1e3f64) {
        prop_assert!(waypoint_x(&p, z, rho).abs() <= rho / p.l);
    }
}
