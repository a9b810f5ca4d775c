use hjmm_colloc::interpolation::{build_gamma, CollocationSet, GammaLayout, InterpolationOperator};
use hjmm_colloc::kernel::build_wendland;
use proptest::prelude::*;

fn sup_norm(k: &hjmm_colloc::WendlandKernel, order: usize) -> f64 {
    (0..=400)
        .map(|i| k.derivative(k.scale() * i as f64 / 400.0, order).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivatives_match_central_differences(tau in 2usize..7, scale in 0.5f64..4.0, t in -0.98f64..0.98) {
        let k = build_wendland(tau, scale).unwrap();
        let x = t * scale;
        let h = 1e-5 * scale;
        for order in 0..k.max_order() {
            let fd = (k.derivative(x + h, order) - k.derivative(x - h, order)) / (2.0 * h);
            let exact = k.derivative(x, order + 1);
            let size = sup_norm(&k, order + 1);
            prop_assert!((fd - exact).abs() <= 1e-6 * size, "order {} fd {} exact {}", order + 1, fd, exact);
        }
    }

    #[test]
    fn scaling_identity(tau in 2usize..7, scale in 0.1f64..10.0, t in -1.2f64..1.2) {
        let unit = build_wendland(tau, 1.0).unwrap();
        let k = unit.with_scale(scale).unwrap();
        for order in 0..=k.max_order() {
            let lhs = k.derivative(t * scale, order);
            let rhs = unit.derivative(t, order) / scale.powi(order as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * sup_norm(&k, order));
        }
    }

    #[test]
    fn kernel_is_even_with_compact_support(tau in 2usize..7, t in 0.0f64..2.0) {
        let k = build_wendland(tau, 1.3).unwrap();
        prop_assert_eq!(k.value(t), k.value(-t));
        prop_assert!(k.value(t) >= 0.0);
        if t >= 1.3 {
            prop_assert_eq!(k.value(t), 0.0);
        }
    }
}

fn ex1_operator(n: usize) -> InterpolationOperator {
    let set = build_gamma(n, GammaLayout::UniformInterior { tau: 4 }).unwrap();
    let kernel = build_wendland(4, 5.0 * set.fill_distance()).unwrap();
    InterpolationOperator::build(kernel, set).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interpolation_is_linear(
        u in prop::collection::vec(-1.0f64..1.0, 24),
        v in prop::collection::vec(-1.0f64..1.0, 24),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        t in 0.0f64..1.0,
    ) {
        let op = ex1_operator(24);
        let x = t * op.set().radius();
        let w: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        for order in 0..=2 {
            let lhs = op.interp_eval(&w, x, order).unwrap();
            let rhs = a * op.interp_eval(&u, x, order).unwrap() + b * op.interp_eval(&v, x, order).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn cardinals_are_invariant_under_joint_rescaling(c in 0.2f64..5.0, t in 0.0f64..1.0) {
        let base = ex1_operator(16);
        let gamma: Vec<f64> = base.set().gamma().iter().map(|x| c * x).collect();
        let set = CollocationSet::new(gamma, c * base.set().radius()).unwrap();
        let kernel = base.kernel().with_scale(c * base.kernel().scale()).unwrap();
        let scaled = InterpolationOperator::build(kernel, set).unwrap();
        let x = t * base.set().radius();
        let q = base.cardinals_at(x, 0);
        let qs = scaled.cardinals_at(c * x, 0);
        for (a, b) in q.iter().zip(&qs) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_kernel_multiple_leaves_cardinals_alone(f in 1e-3f64..1e3, t in 0.0f64..1.0) {
        let base = ex1_operator(16);
        let other = InterpolationOperator::build(base.kernel().times(f), base.set().clone()).unwrap();
        let x = t * base.set().radius();
        for order in 0..=2 {
            let q = base.cardinals_at(x, order);
            let qo = other.cardinals_at(x, order);
            for (a, b) in q.iter().zip(&qo) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }
}
