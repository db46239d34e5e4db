use proptest::prelude::*;
use symrom::numcore::{finite_diff_jacobian, max_abs_diff, RngStream};
use symrom::symplectic::*;

const FD_STEP: f64 = 1e-6;

fn point(rng: &mut RngStream, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn embedding(n: usize, k: usize, rng: &mut RngStream) -> CompositeEmbedding {
    let g = GReflectorStack::random(2 * n, 3, rng, 1.0).unwrap();
    let h = HenonNet::random(n, 2, &[6], rng).unwrap();
    CompositeEmbedding::new(Inclusion::new(n, k).unwrap(), Some(g), Some(h)).unwrap()
}

fn assert_symplectic<M: DiffMap>(map: &M, z: &[f64]) {
    let fd = symplecticity_defect(map, z, DefectMode::FiniteDiff(FD_STEP)).unwrap();
    let an = symplecticity_defect(map, z, DefectMode::Analytic).unwrap();
    assert!(fd < 1e-6, "finite-difference defect {fd:e}");
    assert!(an < 1e-10, "analytic defect {an:e}");
}

/// Central-difference check of `pullback` against `cot · map(z)`.
fn check_pullback<M: DiffMap + Parameterized + Clone>(map: &M, z: &[f64], rng: &mut RngStream) {
    let cot = point(rng, map.dim_out());
    let (_, trace) = map.apply_traced(z).unwrap();
    let mut grad = vec![0.0; map.grad_len()];
    let zbar = map.pullback(&trace, &cot, &mut grad).unwrap();

    let jac = finite_diff_jacobian(|x| map.apply(x).unwrap(), z, FD_STEP).unwrap();
    let expect_zbar = jac.transpose().matvec(&cot).unwrap();
    let scale = expect_zbar.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&zbar, &expect_zbar) / scale < 1e-5);

    let p0 = map.params();
    let objective = |p: &[f64]| {
        let mut m = map.clone();
        m.set_params(p).unwrap();
        let out = m.apply(z).unwrap();
        vec![out.iter().zip(&cot).map(|(a, b)| a * b).sum::<f64>()]
    };
    let pj = finite_diff_jacobian(objective, &p0, FD_STEP).unwrap();
    let expect: Vec<f64> = (0..p0.len()).map(|i| pj[(0, i)]).collect();
    let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&grad, &expect) / scale < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn henon_net_is_symplectic(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = RngStream::new(seed);
        let net = HenonNet::random(m, 2, &[5, 3], &mut rng).unwrap();
        assert_symplectic(&net, &point(&mut rng, 2 * m));
        assert_symplectic(&Inverse(&net), &point(&mut rng, 2 * m));
    }

    #[test]
    fn reflector_stack_is_symplectic(seed in any::<u64>(), m in 1usize..4) {
        let mut rng = RngStream::new(seed);
        let g = GReflectorStack::random(2 * m, 4, &mut rng, 1.0).unwrap();
        assert_symplectic(&g, &point(&mut rng, 2 * m));
        assert_symplectic(&Inverse(&g), &point(&mut rng, 2 * m));
    }

    #[test]
    fn embedding_is_symplectic(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let e = embedding(3, 2, &mut rng);
        assert_symplectic(&e, &point(&mut rng, 4));
    }

    #[test]
    fn single_henon_map_is_anti_symplectic(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let net = HenonNet::random(2, 1, &[4], &mut rng).unwrap();
        let map = net.layers()[0].map.clone();
        let z = point(&mut rng, 4);
        let d = anti_symplecticity_defect(&map, &z, DefectMode::FiniteDiff(FD_STEP)).unwrap();
        prop_assert!(d < 1e-6);
    }

    #[test]
    fn inverses_round_trip(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let net = HenonNet::random(3, 3, &[6], &mut rng).unwrap();
        let g = GReflectorStack::random(6, 5, &mut rng, 1.0).unwrap();
        let e = embedding(3, 2, &mut rng);
        let z = point(&mut rng, 6);
        prop_assert!(max_abs_diff(&net.inverse(&net.apply(&z).unwrap()).unwrap(), &z) < 1e-10);
        prop_assert!(max_abs_diff(&net.apply(&net.inverse(&z).unwrap()).unwrap(), &z) < 1e-10);
        prop_assert!(max_abs_diff(&g.inverse(&g.apply(&z).unwrap()).unwrap(), &z) < 1e-10);
        let y = point(&mut rng, 4);
        prop_assert!(max_abs_diff(&e.project(&e.embed(&y).unwrap()).unwrap(), &y) < 1e-10);
    }
}

#[test]
fn layer_pullbacks_match_finite_differences() {
    let mut rng = RngStream::new(11);
    for _ in 0..5 {
        let net = HenonNet::random(2, 2, &[5], &mut rng).unwrap();
        let z = point(&mut rng, 4);
        check_pullback(&net.layers()[0].map, &z, &mut rng);
        check_pullback(&net.layers()[1], &z, &mut rng);
        check_pullback(&net, &z, &mut rng);

        let g = GReflectorStack::random(4, 3, &mut rng, 1.0).unwrap();
        check_pullback(&g, &z, &mut rng);
        check_pullback(&g.reflectors()[0].clone(), &z, &mut rng);

        let e = embedding(2, 1, &mut rng);
        check_pullback(&e, &point(&mut rng, 2), &mut rng);
    }
}

/// Same check for the inverse direction.
fn check_inverse_pullback<M: InvertibleMap + Parameterized + Clone>(map: &M, z: &[f64], rng: &mut RngStream) {
    let cot = point(rng, map.dim_in());
    let (_, trace) = map.inverse_traced(z).unwrap();
    let mut grad = vec![0.0; map.grad_len()];
    let zbar = map.inverse_pullback(&trace, &cot, &mut grad).unwrap();

    let jac = finite_diff_jacobian(|x| map.inverse(x).unwrap(), z, FD_STEP).unwrap();
    let expect_zbar = jac.transpose().matvec(&cot).unwrap();
    let scale = expect_zbar.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&zbar, &expect_zbar) / scale < 1e-5);

    let p0 = map.params();
    let objective = |p: &[f64]| {
        let mut m = map.clone();
        m.set_params(p).unwrap();
        let out = m.inverse(z).unwrap();
        vec![out.iter().zip(&cot).map(|(a, b)| a * b).sum::<f64>()]
    };
    let pj = finite_diff_jacobian(objective, &p0, FD_STEP).unwrap();
    let expect: Vec<f64> = (0..p0.len()).map(|i| pj[(0, i)]).collect();
    let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    assert!(max_abs_diff(&grad, &expect) / scale < 1e-5);
}

#[test]
fn inverse_pullbacks_match_finite_differences() {
    let mut rng = RngStream::new(12);
    for _ in 0..5 {
        let net = HenonNet::random(2, 2, &[5], &mut rng).unwrap();
        let g = GReflectorStack::random(4, 3, &mut rng, 1.0).unwrap();
        let e = embedding(2, 1, &mut rng);
        let z = point(&mut rng, 4);
        check_inverse_pullback(&net, &z, &mut rng);
        check_inverse_pullback(&g, &z, &mut rng);
        check_inverse_pullback(&e, &z, &mut rng);
    }
}

#[test]
fn identity_initialized_pullback_passes_cotangent() {
    let mut rng = RngStream::new(2);
    let net = HenonNet::init(3, 2, &[4], &mut rng).unwrap();
    let z = point(&mut rng, 6);
    let cot = point(&mut rng, 6);
    let (_, t) = net.apply_traced(&z).unwrap();
    let mut grad = vec![0.0; net.grad_len()];
    assert!(max_abs_diff(&net.pullback(&t, &cot, &mut grad).unwrap(), &cot) < 1e-15);
    let mut zero_grad = vec![0.0; net.grad_len()];
    let zbar = net.pullback(&t, &[0.0; 6], &mut zero_grad).unwrap();
    assert!(zbar.iter().chain(&zero_grad).all(|v| *v == 0.0));
}
