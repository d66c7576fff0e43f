use proptest::prelude::*;

use transport_lab_core::cantor_map::{cantor_function, f_map, f_m_map, g_log, BumpProfile};
use transport_lab_core::field::{build_field, Cutoff};
use transport_lab_core::flows::FlowFamily;
use transport_lab_core::grid::{Axis, Grid, SampledFunction};
use transport_lab_core::monotone::MonotoneMap;
use transport_lab_core::solver::{mollify, output_times, time_weights, Interpolant, MollifierSpec};
use transport_lab_core::stability::{comparator_domination, Comparator};
use transport_lab_core::young::{luxemburg_norm, modular, YoungFunction};

fn line(values: Vec<f64>) -> SampledFunction {
    let n = values.len();
    SampledFunction::new(Grid::line(Axis::new(0.0, 1.0, n).unwrap()), values).unwrap()
}

fn young() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        Just(YoungFunction::EXP_L),
        Just(YoungFunction::EXP_L_OVER_LOG_L),
        Just(YoungFunction::L_LOG_L_LOGLOG_L),
    ]
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 9..40).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_homogeneous(v in values(), c in -20.0..20.0f64, p in young()) {
        prop_assume!(c.abs() > 1e-3);
        let f = line(v);
        let a = luxemburg_norm(&f, &p).unwrap();
        let b = luxemburg_norm(&f.scale(c).unwrap(), &p).unwrap();
        prop_assert!((b - c.abs() * a).abs() <= 1e-9 * b);
    }

    #[test]
    fn norm_depends_on_distribution_only(v in values(), p in young()) {
        // Uniform weights, so permuting values preserves the distribution.
        let f = SampledFunction::new(Grid::line(Axis::periodic(0.0, 1.0, v.len()).unwrap()), v.clone()).unwrap();
        let mut s: Vec<f64> = v.iter().map(|x| x.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let g = SampledFunction::new(f.grid().clone(), s).unwrap();
        let (a, b) = (luxemburg_norm(&f, &p).unwrap(), luxemburg_norm(&g, &p).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn modular_is_nonincreasing(v in values(), l in 0.1..10.0f64, p in young()) {
        let f = line(v);
        prop_assert!(modular(&f, &p, 1.5 * l) <= modular(&f, &p, l));
    }

    #[test]
    fn cantor_symmetry_and_self_similarity(x in 0.0..1.0f64) {
        let c = cantor_function(x).value;
        prop_assert!((c + cantor_function(1.0 - x).value - 1.0).abs() < 1e-9);
        prop_assert!((cantor_function(x / 3.0).value - 0.5 * c).abs() < 1e-9);
    }

    #[test]
    fn bump_stays_below_one(x in -3.0..4.0f64) {
        prop_assert!(g_log(x, BumpProfile::demo(0.25), true) < 0.0);
    }

    #[test]
    fn f_and_f_m_are_nondecreasing(a in -3.0..4.0f64, d in 0.0..1.0f64, theta in 0.0..1.0f64) {
        let f = f_map(BumpProfile::demo(0.25)).unwrap();
        prop_assert!(f.eval(a) <= f.eval(a + d));
        let fm = f_m_map(BumpProfile::demo(0.25), theta).unwrap();
        prop_assert!(fm.eval(a) <= fm.eval(a + d));
    }

    #[test]
    fn flow_is_a_semigroup_where_the_cutoff_is_one(x1 in 0.0..1.0f64, y in -0.5..1.5f64, s in 0.0..0.5f64, t in 0.0..0.5f64, theta in 0.0..1.0f64) {
        let fam = FlowFamily::new(build_field(BumpProfile::demo(0.25), Cutoff::default()).unwrap(), theta).unwrap();
        // Off the plateaus, where the inverse is single-valued.
        let off = |z: f64| (fam.fm.inverse(fam.fm.eval(z)).unwrap() - z).abs() < 1e-9;
        prop_assume!(off(y) && off(y + t));
        let x = [x1, fam.fm.eval(y)];
        let a = fam.flow_map(s, fam.flow_map(t, x).unwrap()).unwrap();
        let b = fam.flow_map(s + t, x).unwrap();
        prop_assert!((a[1] - b[1]).abs() < 1e-10);
    }

    #[test]
    fn mollification_keeps_mass_and_bounds(v in prop::collection::vec(-1.0..1.0f64, 24 * 24), r in 0.2..0.5f64) {
        let g = Grid::plane(Axis::periodic(-1.0, 1.0, 24).unwrap(), Axis::periodic(-1.0, 1.0, 24).unwrap());
        let f = SampledFunction::new(g, v).unwrap();
        let m = mollify(&f, &MollifierSpec::new(r).unwrap()).unwrap();
        prop_assert!((m.integral() - f.integral()).abs() < 1e-12);
        prop_assert!(m.sup_norm() <= f.sup_norm() + 1e-14);
    }

    #[test]
    fn interpolant_reproduces_nodes(v in prop::collection::vec(-1.0..1.0f64, 12 * 12), k in 0usize..144) {
        let g = Grid::plane(Axis::periodic(-1.0, 1.0, 12).unwrap(), Axis::periodic(-1.0, 1.0, 12).unwrap());
        let f = SampledFunction::new(g.clone(), v).unwrap();
        let (x, y) = g.point(k);
        prop_assert!((Interpolant::new(&f).unwrap().eval([x, y]).unwrap() - f.values()[k]).abs() < 1e-13);
    }

    #[test]
    fn time_weights_sum_to_horizon(steps in 1usize..50, t in 0.1..5.0f64) {
        let w = time_weights(&output_times(t, steps));
        prop_assert!((w.iter().sum::<f64>() - t).abs() < 1e-12 * t);
    }

    #[test]
    fn comparator_starts_at_epsilon_and_grows(le in -300.0..-7.0f64, i in 0.0..0.5f64) {
        let c = Comparator::new(10f64.powf(le)).unwrap();
        prop_assert_eq!(c.alpha_star(0.0), c.epsilon);
        prop_assert!(c.alpha_star(i + 1e-3) >= c.alpha_star(i));
    }

    #[test]
    fn comparator_dominates_admissible_series(
        le in -40.0..-10.0f64,
        jumps in prop::collection::vec(0.0..1.0f64, 20),
        beta in prop::collection::vec(0.0..2.0f64, 21),
    ) {
        // Grow α only as far as the integral inequality allows.
        let times = output_times(0.1, 20);
        let eps = 10f64.powf(le);
        let mut alpha = vec![eps];
        for n in 1..21 {
            let rate = |a: f64| { let l = -a.ln(); 16.0 * std::f64::consts::E * a * l * l.ln() };
            let dt = times[n] - times[n - 1];
            let room = 0.5 * dt * beta[n - 1] * rate(alpha[n - 1]);
            alpha.push(alpha[n - 1] + jumps[n - 1] * room);
        }
        let d = comparator_domination(&alpha, &beta, &times, 0.0).unwrap();
        prop_assert!(d.holds(), "{d:?}");
        prop_assert!(d.excursions == 0);
    }
}
