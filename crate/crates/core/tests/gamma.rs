use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_core::discrete::{transition_operator, WeightedSpace};
use spectral_core::gamma::*;
use spectral_core::graph::{Family, Graph};
use spectral_core::linalg::CVec;
use spectral_core::weyl::{sigma_distance, weyl_derivative};

type C = Complex64;

// 5-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `sum_e int_0^1 conj(F) G` by composite Gauss-Legendre from point values.
fn quadrature_inner(f: &EdgeWave, g: &EdgeWave, panels: usize) -> C {
    let h = 1.0 / panels as f64;
    let mut sum = C::new(0.0, 0.0);
    for e in 0..f.graph().edge_count() {
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in GL_X.iter().zip(GL_W) {
                let t = mid + 0.5 * h * x;
                sum += f.eval(e, t).conj() * g.eval(e, t) * (0.5 * h * w);
            }
        }
    }
    sum
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_z(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.random_range(-40.0..90.0), rng.random_range(-4.0..4.0))
}

#[test]
fn closed_form_inner_products_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (family, n) in [(Family::Cycle, 3), (Family::Star, 5), (Family::Complete, 4)] {
        let g = Graph::builtin(family, n).unwrap();
        for _ in 0..10 {
            let (z1, z2) = (random_z(&mut rng), random_z(&mut rng));
            let f = gamma_apply(&g, z1, &random_vec(&mut rng, n)).unwrap();
            let h = gamma_apply(&g, z2, &random_vec(&mut rng, n)).unwrap();
            let exact = edgewave_inner(&f, &h).unwrap();
            let quad = quadrature_inner(&f, &h, 64);
            assert!(
                (exact - quad).norm() <= 1e-11 * quad.norm().max(1.0),
                "z1={z1} z2={z2}: {exact} vs {quad}"
            );
        }
    }
}

#[test]
fn inner_product_near_coinciding_frequencies() {
    let g = Graph::builtin(Family::Cycle, 4).unwrap();
    let xi = CVec::from_fn(4, |i, _| C::new(1.0 + i as f64, 0.5));
    for z in [
        C::new(4.0, 0.0),
        C::new(4.0 + 1e-9, 0.0),
        C::new(1e-10, 0.0),
        C::new(30.0, 1e-7),
    ] {
        let f = gamma_apply(&g, C::new(4.0, 0.0), &xi).unwrap();
        let h = gamma_apply(&g, z, &xi).unwrap();
        let exact = edgewave_inner(&f, &h).unwrap();
        let quad = quadrature_inner(&f, &h, 64);
        assert!(
            (exact - quad).norm() <= 1e-11 * quad.norm().max(1.0),
            "z={z}: {exact} vs {quad}"
        );
    }
}

#[test]
fn adjoint_is_the_weighted_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(3..=8);
        let g = Graph::random_connected(&mut rng, n, 0.3).unwrap();
        let space = WeightedSpace::new(&g);
        let (w, z) = (random_z(&mut rng), random_z(&mut rng));
        let xi = random_vec(&mut rng, n);
        let f = gamma_apply(&g, z, &random_vec(&mut rng, n)).unwrap();
        // <gamma(w) xi, F>_{L2} = <xi, gamma(w)^* F>_{deg}
        let lhs = edgewave_inner(&gamma_apply(&g, w, &xi).unwrap(), &f).unwrap();
        let rhs = space.inner(&xi, &gamma_adjoint_apply(&g, w.conj(), &f).unwrap());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn gram_on_the_diagonal_is_the_weyl_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let graphs = [
        Graph::builtin(Family::Cycle, 3).unwrap(),
        Graph::builtin(Family::Star, 4).unwrap(),
        Graph::random_connected(&mut rng, 7, 0.4).unwrap(),
    ];
    let mut points = 0;
    while points < 100 {
        let lambda = rng.random_range(-30.0..95.0);
        if sigma_distance(lambda).1 < 0.05 {
            continue;
        }
        let g = &graphs[points % graphs.len()];
        let p = transition_operator(g);
        let gram = gamma_gram(g, C::from(lambda), C::from(lambda)).unwrap();
        let md = weyl_derivative(&p, lambda).unwrap();
        let d = p.space().op_norm(&(gram - &md));
        assert!(d <= 1e-10 * p.space().op_norm(&md).max(1.0), "lambda={lambda}: {d:e}");
        points += 1;
    }
}

#[test]
fn wave_write_csv_has_header_and_rows() {
    let g = Graph::builtin(Family::Path, 3).unwrap();
    let f = gamma_apply(&g, C::from(2.0), &CVec::from_element(3, C::from(1.0))).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf, 5).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "edge_u,edge_v,t,re,im");
    assert_eq!(lines.len(), 1 + 2 * 5);
}

#[test]
fn mismatched_graphs_are_rejected() {
    let a = Graph::builtin(Family::Cycle, 3).unwrap();
    let b = Graph::builtin(Family::Cycle, 4).unwrap();
    let f = gamma_apply(&a, C::from(1.0), &CVec::from_element(3, C::from(1.0))).unwrap();
    let h = gamma_apply(&b, C::from(1.0), &CVec::from_element(4, C::from(1.0))).unwrap();
    assert!(edgewave_inner(&f, &h).is_err());
    assert!(gamma_apply(&a, C::from(1.0), &CVec::from_element(4, C::from(1.0))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weyl_identity_holds_off_the_axis(
        seed in any::<u64>(),
        n in 2usize..9,
        re1 in -40.0f64..90.0, im1 in 0.05f64..6.0,
        re2 in -40.0f64..90.0, im2 in -6.0f64..6.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::random_connected(&mut rng, n, 0.35).unwrap();
        let p = transition_operator(&g);
        let r = weyl_identity_residual(&g, &p, C::new(re1, im1), C::new(re2, im2)).unwrap();
        prop_assert!(r <= 1e-10, "residual {r:e}");
    }

    #[test]
    fn gamma_images_are_continuous_with_the_given_traces(
        seed in any::<u64>(),
        n in 2usize..9,
        re in -40.0f64..90.0, im in -3.0f64..3.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Graph::random_connected(&mut rng, n, 0.35).unwrap();
        prop_assume!(sigma_distance(re).1 > 0.1 || im.abs() > 0.1);
        let xi = random_vec(&mut rng, n);
        let f = gamma_apply(&g, C::new(re, im), &xi).unwrap();
        prop_assert!(vertex_residuals(&g, &f).continuity <= 1e-12 * xi.camax().max(1.0));
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            prop_assert!((f.eval(e, 0.0) - xi[u]).norm() <= 1e-12 * xi[u].norm().max(1.0));
            prop_assert!((f.eval(e, 1.0) - xi[v]).norm() <= 1e-12 * xi[v].norm().max(1.0));
        }
    }
}
