//! Cross-cutting operator properties: shared principal symbol, chart
//! independence of the Laplace-Beltrami ordering, and the curvature
//! potential of the conformally invariant ordering across dimensions.

use ordlab::catalog;
use ordlab::geometry::{metric_jet, ricci_scalar_christoffel};
use ordlab::operators::{build_operator, effective_potential, similarity_ordering, OperatorSpec};
use ordlab::{DiffConfig, Point, ScalarField};

/// (op - Naive) applied to exp(k v . q) grows at most linearly in k: the
/// quadratic coefficient of a fit through k = 1, 2, 4 vanishes, because all
/// orderings share the second-order part g^{ab}.
#[test]
fn principal_symbol_is_shared() {
    let cfg = DiffConfig::default();
    let metric = catalog::metric("conf-gauss:3:0.25").unwrap();
    let naive = build_operator(&OperatorSpec::Naive, &metric).unwrap();
    let p = Point(vec![0.3, -0.2, 0.4]);

    let directions = [[0.6, 0.64, 0.48], [-0.8, 0.6, 0.0], [0.267, -0.534, 0.802]];
    let specs = [
        OperatorSpec::LaplaceBeltrami,
        OperatorSpec::ConformalLB,
        OperatorSpec::PowerOrdering {
            alpha: -1.0 / 6.0,
            beta: 1.0 / 12.0,
        },
        OperatorSpec::PowerOrdering {
            alpha: 0.4,
            beta: 0.2,
        },
    ];
    for spec in &specs {
        let op = build_operator(spec, &metric).unwrap();
        for v in directions {
            let difference_at = |k: f64| {
                let psi = ScalarField::new(3, move |q: &Point| {
                    (k * (v[0] * q.0[0] + v[1] * q.0[1] + v[2] * q.0[2])).exp()
                });
                let value = psi.value(&p);
                (op.apply(&psi, &p, &cfg).unwrap() - naive.apply(&psi, &p, &cfg).unwrap()) / value
            };
            let (d1, d2, d4) = (difference_at(1.0), difference_at(2.0), difference_at(4.0));
            // quadratic coefficient of the Lagrange fit through k = 1, 2, 4
            let quad = d1 / 3.0 - d2 / 2.0 + d4 / 6.0;
            let scale = d1.abs().max(d2.abs()).max(d4.abs()).max(1.0);
            assert!(
                quad.abs() <= 1e-5 * scale,
                "{spec:?} along {v:?}: quadratic term {quad:.3e} (scale {scale:.3e})"
            );
        }
    }
}

/// The Laplace-Beltrami ordering applied to the same scalar function
/// expressed in Cartesian and spherical charts of flat 3-space agrees at
/// corresponding points.
#[test]
fn laplace_beltrami_is_chart_independent() {
    let cfg = DiffConfig::default();
    let cart = catalog::metric("euclidean:3").unwrap();
    let sph = catalog::metric("spherical3").unwrap();
    let lb_cart = build_operator(&OperatorSpec::LaplaceBeltrami, &cart).unwrap();
    let lb_sph = build_operator(&OperatorSpec::LaplaceBeltrami, &sph).unwrap();

    // |x|^2 and z |x|^2 in both charts
    let f_cart = ScalarField::new(3, |q: &Point| q.0.iter().map(|v| v * v).sum());
    let f_sph = ScalarField::new(3, |q: &Point| q.0[0] * q.0[0]);
    let g_cart = ScalarField::new(3, |q: &Point| {
        q.0[2] * q.0.iter().map(|v| v * v).sum::<f64>()
    });
    let g_sph = ScalarField::new(3, |q: &Point| q.0[0].powi(3) * q.0[1].cos());

    for (r, th, ph) in [(1.3, 1.1, 0.7), (0.9, 2.0, 4.2), (2.1, 0.8, 2.4)] {
        let p_sph = Point(vec![r, th, ph]);
        let p_cart = Point(vec![
            r * th.sin() * ph.cos(),
            r * th.sin() * ph.sin(),
            r * th.cos(),
        ]);
        let a = lb_cart.apply(&f_cart, &p_cart, &cfg).unwrap();
        let b = lb_sph.apply(&f_sph, &p_sph, &cfg).unwrap();
        assert!((a - b).abs() <= 1e-5, "|x|^2 at r={r}: {a} vs {b}");
        let a = lb_cart.apply(&g_cart, &p_cart, &cfg).unwrap();
        let b = lb_sph.apply(&g_sph, &p_sph, &cfg).unwrap();
        assert!(
            (a - b).abs() <= 1e-5 * a.abs().max(1.0),
            "z|x|^2 at r={r}: {a} vs {b}"
        );
    }
}

/// V_eff(ConformalLB) = ((n-2)/(4(n-1))) R pointwise on conformally flat
/// catalog metrics for n in 2..4 (identically zero at n = 2).
#[test]
fn conformal_lb_potential_tracks_curvature() {
    let cfg = DiffConfig::default();
    for n in 2..=4usize {
        let coeff = (n as f64 - 2.0) / (4.0 * (n as f64 - 1.0));
        for label in [
            format!("conf-gauss:{n}:0.25"),
            format!("stereo-sphere:{n}:1"),
        ] {
            let metric = catalog::metric(&label).unwrap();
            for p in catalog::sample_points(&metric, 4, 3).unwrap() {
                let rep =
                    effective_potential(&OperatorSpec::ConformalLB, &metric, &p, &cfg).unwrap();
                let jet = metric_jet(&metric, &p, &cfg).unwrap();
                let expected = coeff * ricci_scalar_christoffel(&jet);
                assert!(
                    (rep.v_eff - expected).abs() <= 1e-6 * expected.abs().max(1e-3),
                    "{label}: V_eff {} vs {expected}",
                    rep.v_eff
                );
                for d in &rep.drift {
                    assert!(d.abs() <= 1e-6, "{label}: drift {d:.3e}");
                }
            }
        }
    }
}

/// The oscillator similarity ordering maps its analytic eigenfunction to
/// omega times itself away from the demo interval too.
#[test]
fn similarity_ordering_eigenfunction_offset_point() {
    let cfg = DiffConfig::default();
    let h = ScalarField::exp_quadratic(1, -0.5);
    let f = ScalarField::exp_quadratic(1, 1.0);
    let op = build_operator(
        &similarity_ordering(&f, &h),
        &catalog::metric("euclidean:1").unwrap(),
    )
    .unwrap();
    let p = Point(vec![0.7]);
    let got = 0.5 * op.apply(&h, &p, &cfg).unwrap();
    assert!((got - h.value(&p)).abs() <= 1e-8);
}
