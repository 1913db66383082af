//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line (run with `--nocapture` to see the lines; the test
//! verdicts carry the same information).

use std::time::Instant;

use num_rational::Rational64;
use proptest::prelude::*;

use ordlab::basis::{curvature_term_vector, independence_rank, verify_matrix_identities};
use ordlab::catalog;
use ordlab::conformal::{
    conformal_ricci, solve_exponents, verify_two_solutions, ConformalJet, ExponentKind,
};
use ordlab::geometry::{
    self, checks, formula_audit, metric_jet, ricci_scalar_christoffel, ricci_scalar_direct,
};
use ordlab::hydrogen::{
    eigenfunction_residual, naive_energy, radial_convergence_order, spectrum_table,
    standard_energy, ChainConfig, QuantumNumbers,
};
use ordlab::operators::{build_operator, effective_potential, similarity_ordering, OperatorSpec};
use ordlab::{DiffConfig, Point, ScalarField};

fn rational_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn pass_line(criterion: &str, elapsed_s: f64) {
    println!("[PASS] {criterion} ({elapsed_s:.2} s)");
}

/// Criterion 1: for n in 2..=6 the exponent scan recovers exactly two roots,
/// |beta_root - (1/4 - 1/(2n))| <= 1e-8, fitted C within 1e-4 of
/// -(n-2)/(4(n-1)); < 30 s per n.
#[test]
fn criterion_1_exponent_solutions() {
    let cfg = DiffConfig::default();
    for n in 2..=6usize {
        let start = Instant::now();
        let label = if n <= 4 {
            format!("conf-gauss:{n}:0.25")
        } else {
            format!("conf-gauss:{n}:0.1")
        };
        let metric = catalog::metric(&label).unwrap();
        let samples = catalog::sample_points(&metric, 5, 42).unwrap();
        let verification = verify_two_solutions(n, &metric, &samples, &cfg).unwrap();
        let solutions = solve_exponents(n).unwrap();

        assert_eq!(
            verification.root_count(),
            2,
            "n={n}: root count {} (roots {:?})",
            verification.root_count(),
            verification.roots
        );
        for sol in &solutions {
            let beta = rational_f64(sol.beta_tilde);
            let nearest = verification
                .roots
                .iter()
                .min_by(|a, b| (a.beta - beta).abs().total_cmp(&(b.beta - beta).abs()))
                .unwrap();
            assert!(
                (nearest.beta - beta).abs() <= 1e-8,
                "n={n}: located beta {} vs closed form {beta}",
                nearest.beta
            );
            if sol.kind == ExponentKind::Conformal {
                let c_expected = rational_f64(sol.c);
                assert!(
                    (nearest.fitted_c - c_expected).abs() <= 1e-4,
                    "n={n}: fitted C {} vs {c_expected}",
                    nearest.fitted_c
                );
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed < 30.0, "n={n} took {elapsed:.1} s");
        pass_line(&format!("criterion 1 (exponent roots, n={n})"), elapsed);
    }
}

/// Criterion 2: on every conformally flat catalog metric (n in 2..4), the
/// potential of PowerOrdering(1/n - 1/2, 1/4 - 1/(2n)) equals C R with
/// C = -(n-2)/(4(n-1)) in the `Delta + C R` normalization — i.e.
/// (op - LB)(1) = -C R — within 1e-4 relative at >= 10 points under numeric
/// differentiation, with drift components <= 1e-5; < 10 s.
#[test]
fn criterion_2_conformal_lb_identity() {
    let start = Instant::now();
    let cfg = DiffConfig::default();
    for n in 2..=4usize {
        for label in [
            format!("conf-gauss:{n}:0.25"),
            format!("stereo-sphere:{n}:1"),
        ] {
            let metric = catalog::metric(&label).unwrap().forced_numeric();
            let nf = n as f64;
            let c_target = -(nf - 2.0) / (4.0 * (nf - 1.0));
            let spec = OperatorSpec::PowerOrdering {
                alpha: 1.0 / nf - 0.5,
                beta: 0.25 - 1.0 / (2.0 * nf),
            };
            for p in catalog::sample_points(&metric, 10, 7).unwrap() {
                let rep = effective_potential(&spec, &metric, &p, &cfg).unwrap();
                let expected = -c_target * rep.ricci;
                let tol = 1e-4 * expected.abs().max(1e-2);
                assert!(
                    (rep.v_eff - expected).abs() <= tol,
                    "{label} at {:?}: V_eff {} vs {expected}",
                    p.coords(),
                    rep.v_eff
                );
                for d in &rep.drift {
                    assert!(d.abs() <= 1e-5, "{label}: drift {d:.3e}");
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1} s");
    pass_line("criterion 2 (conformal LB identity)", elapsed);
}

/// Criterion 3: Christoffel route gives n(n-1) on unit stereographic
/// n-spheres within 1e-6 relative (n in 2..4); the conformal determinant
/// route agrees with the Christoffel oracle within 1e-5 relative on all
/// conformally flat catalog metrics; the two-route audit has produced a
/// committed report on generic metrics, complete and consistent.
#[test]
fn criterion_3_curvature_cross_validation() {
    let start = Instant::now();
    let cfg = DiffConfig::default();

    for n in 2..=4usize {
        let metric = catalog::metric(&format!("stereo-sphere:{n}:1")).unwrap();
        let expected = (n * (n - 1)) as f64;
        for p in catalog::sample_points(&metric, 5, 11).unwrap() {
            let jet = metric_jet(&metric, &p, &cfg).unwrap();
            let r = ricci_scalar_christoffel(&jet);
            assert!(
                (r - expected).abs() <= 1e-6 * expected,
                "n={n}: christoffel {r} vs {expected}"
            );
        }
    }

    for n in 2..=6usize {
        for label in [
            format!("conf-gauss:{n}:0.25"),
            format!("conf-gauss:{n}:0.1"),
            format!("stereo-sphere:{n}:1"),
            format!("stereo-sphere:{n}:2"),
        ] {
            let metric = catalog::metric(&label).unwrap();
            for p in catalog::sample_points(&metric, 4, 13).unwrap() {
                let jet = metric_jet(&metric, &p, &cfg).unwrap();
                let r_chr = ricci_scalar_christoffel(&jet);
                let r_cnf = conformal_ricci(&ConformalJet::from_metric_jet(&jet)).unwrap();
                assert!(
                    (r_cnf - r_chr).abs() <= 1e-5 * r_chr.abs().max(1e-3),
                    "{label}: conformal {r_cnf} vs christoffel {r_chr}"
                );
            }
        }
    }

    // committed audit report on generic metrics
    let report_path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../reports/curvature_poly_perturb.json"
    );
    let committed = std::fs::read_to_string(report_path).expect("committed audit report present");
    let doc: serde_json::Value = serde_json::from_str(&committed).expect("valid JSON report");
    let audit = &doc["results"]["audit"];
    for field in [
        "metric",
        "points",
        "direct",
        "christoffel",
        "abs_diff",
        "rel_diff",
        "pass",
    ] {
        assert!(
            !audit[field].is_null(),
            "committed report missing field `{field}`"
        );
    }
    let points = audit["points"].as_array().unwrap().len();
    assert!(points >= 10, "committed report has only {points} points");
    assert!(
        audit["pass"].as_bool().unwrap(),
        "committed audit disagrees"
    );
    // and the committed numbers are reproducible right now
    let metric = catalog::metric(audit["metric"].as_str().unwrap()).unwrap();
    let fresh = formula_audit(
        &metric,
        &catalog::sample_points(&metric, points, 42).unwrap(),
        &cfg,
        1e-6,
    )
    .unwrap();
    assert!(fresh.pass);

    let elapsed = start.elapsed().as_secs_f64();
    pass_line("criterion 3 (curvature cross-validation)", elapsed);
}

/// Criterion 4: closed forms match the angular+radial eigensolver chain
/// within 1e-5 absolute for all (n <= 3, l <= n-1, m in {0,1}); l = 0 rows
/// equal -1/(2 n^2) exactly in closed form; convergence order >= 1.8;
/// < 60 s total.
#[test]
fn criterion_4_hydrogen_spectrum() {
    let start = Instant::now();
    let table = spectrum_table(3, &[0, 1], &ChainConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 12);
    for row in &table.rows {
        assert!(
            row.abs_err <= 1e-5,
            "(n={}, l={}, m={}): |closed - numeric| = {:.3e}",
            row.n,
            row.l,
            row.m,
            row.abs_err
        );
        if row.l == 0 && row.m == 0 {
            assert_eq!(row.e_closed, standard_energy(row.n).unwrap());
        }
    }
    let order = radial_convergence_order(1.0, 0, 60.0, 2000).unwrap();
    assert!(order >= 1.8, "measured convergence order {order:.3}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1} s");
    pass_line("criterion 4 (hydrogen spectrum chain)", elapsed);
}

/// Criterion 5: eigenfunction residuals <= 1e-6 for (1,0,0) and (2,0,0),
/// <= 1e-4 for (2,1,0), on 20 regular sample radii.
#[test]
fn criterion_5_eigenfunction_residuals() {
    let start = Instant::now();
    let samples: Vec<f64> = (1..=20).map(|i| 0.35 * i as f64 + 0.04).collect();
    assert_eq!(samples.len(), 20);
    let r100 = eigenfunction_residual(QuantumNumbers::new(1, 0, 0).unwrap(), &samples).unwrap();
    assert!(r100 <= 1e-6, "(1,0,0) residual {r100:.3e}");
    let r200 = eigenfunction_residual(QuantumNumbers::new(2, 0, 0).unwrap(), &samples).unwrap();
    assert!(r200 <= 1e-6, "(2,0,0) residual {r200:.3e}");
    let r210 = eigenfunction_residual(QuantumNumbers::new(2, 1, 0).unwrap(), &samples).unwrap();
    assert!(r210 <= 1e-4, "(2,1,0) residual {r210:.3e}");
    pass_line(
        "criterion 5 (eigenfunction residuals)",
        start.elapsed().as_secs_f64(),
    );
}

/// Criterion 6: the similarity ordering with f = 1/h^2, h = exp(-x^2/2)
/// (omega = 1, physical 1/2 reinstated) reproduces x^2/2 + 1/2 on the
/// constant field within 1e-6 at 10 points of [-2, 2], and maps h to
/// omega h within 1e-6.
#[test]
fn criterion_6_oscillator_demo() {
    let start = Instant::now();
    let cfg = DiffConfig::default();
    let omega = 1.0f64;
    let h = ScalarField::exp_quadratic(1, -omega / 2.0);
    let f = ScalarField::exp_quadratic(1, omega);
    let op = build_operator(
        &similarity_ordering(&f, &h),
        &catalog::metric("euclidean:1").unwrap(),
    )
    .unwrap();
    let one = ScalarField::constant(1, 1.0);
    for i in 0..10 {
        let x = -2.0 + 4.0 * i as f64 / 9.0;
        let p = Point(vec![x]);
        let potential = 0.5 * op.apply(&one, &p, &cfg).unwrap();
        let expected = 0.5 * omega * omega * x * x + omega / 2.0;
        assert!(
            (potential - expected).abs() <= 1e-6,
            "x={x}: {potential} vs {expected}"
        );
        let ground = 0.5 * op.apply(&h, &p, &cfg).unwrap();
        assert!(
            (ground - omega * h.value(&p)).abs() <= 1e-6,
            "x={x}: ground map {ground} vs {}",
            omega * h.value(&p)
        );
    }
    pass_line(
        "criterion 6 (oscillator demo)",
        start.elapsed().as_secs_f64(),
    );
}

/// Criterion 7: the seven potential terms have numerical rank 7 on >= 20
/// samples of seeded generic metrics, for 5 independent seed groups, and
/// rank < 7 when restricted to conformally flat samples; < 10 s.
#[test]
fn criterion_7_seven_term_obstruction() {
    let start = Instant::now();
    let cfg = DiffConfig::default();
    // positive-definiteness on the sample box rejects some seeds; groups are
    // built from the first 20 constructible ones
    let good: Vec<u64> = (1..=100u64)
        .filter(|s| catalog::metric(&format!("poly-perturb:3:{s}:0.1")).is_ok())
        .take(20)
        .collect();
    for (group, seeds) in good.chunks(4).enumerate() {
        let family: Vec<_> = seeds
            .iter()
            .map(|s| catalog::metric(&format!("poly-perturb:3:{s}:0.1")).unwrap())
            .collect();
        let report = independence_rank(&family, 5, &cfg, 42 + group as u64).unwrap();
        assert_eq!(report.samples, 20);
        assert_eq!(
            report.rank, 7,
            "seed group {group} ({seeds:?}): rank {} (singular values {:?})",
            report.rank, report.singular_values
        );
    }
    let conf_family = vec![
        catalog::metric("conf-gauss:3:0.25").unwrap(),
        catalog::metric("conf-gauss:3:0.1").unwrap(),
        catalog::metric("stereo-sphere:3:1").unwrap(),
        catalog::metric("stereo-sphere:3:2").unwrap(),
    ];
    let report = independence_rank(&conf_family, 5, &cfg, 42).unwrap();
    assert!(report.rank < 7, "conformally flat rank {}", report.rank);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1} s");
    pass_line("criterion 7 (seven-term obstruction)", elapsed);
}

/// Criterion 8: the exact matrix identities deviate by <= 1e-12 on every
/// catalog metric.
#[test]
fn criterion_8_matrix_identities() {
    let start = Instant::now();
    let cfg = DiffConfig::default();
    for label in [
        "euclidean:2",
        "euclidean:3",
        "euclidean:4",
        "spherical3",
        "conf-gauss:2:0.25",
        "conf-gauss:3:0.25",
        "conf-gauss:4:0.1",
        "stereo-sphere:2:1",
        "stereo-sphere:3:1",
        "stereo-sphere:4:1",
        "poly-perturb:3:1:0.1",
        "poly-perturb:4:2:0.05",
    ] {
        let metric = catalog::metric(label).unwrap();
        for p in catalog::sample_points(&metric, 3, 5).unwrap() {
            let jet = metric_jet(&metric, &p, &cfg).unwrap();
            let report = verify_matrix_identities(&jet, &[1, 2, 3, 4]).unwrap();
            assert!(
                report.max_dev <= 1e-12,
                "{label}: identity deviation {:.3e}",
                report.max_dev
            );
        }
    }
    pass_line(
        "criterion 8 (matrix identities)",
        start.elapsed().as_secs_f64(),
    );
}

/// Criterion 9 (library half; CLI determinism lives in the CLI crate's
/// acceptance suite): every MetricJet invariant, operator linearity, and
/// PowerOrdering(0,0) == LaplaceBeltrami under a seeded property-test run
/// of >= 200 cases in < 2 min.
#[test]
fn criterion_9_invariant_suite() {
    let start = Instant::now();
    let labels = [
        "euclidean:3",
        "spherical3",
        "conf-gauss:3:0.25",
        "stereo-sphere:3:1",
        "stereo-sphere:2:1",
        "poly-perturb:3:3:0.1",
    ];

    let mut runner = proptest::test_runner::TestRunner::new(proptest::test_runner::Config {
        cases: 200,
        failure_persistence: None,
        ..Default::default()
    });

    let strategy = (
        0..labels.len(),
        proptest::collection::vec(-0.75f64..0.75, 3),
        -2.0f64..2.0,
        -2.0f64..2.0,
    );
    let cfg = DiffConfig::default();

    runner
        .run(&strategy, |(which, box_coords, a, b)| {
            let label = labels[which];
            let metric = catalog::metric(label).unwrap();
            let p = if label == "spherical3" {
                Point(vec![
                    1.5 + box_coords[0],
                    std::f64::consts::FRAC_PI_2 + box_coords[1],
                    std::f64::consts::PI + 2.0 * box_coords[2],
                ])
            } else {
                Point(box_coords[..metric.dimension()].to_vec())
            };

            // jet invariants
            let jet = metric_jet(&metric, &p, &cfg).unwrap();
            let tol = jet.lin_tolerance();
            prop_assert!(checks::inverse_defect(&jet) <= tol);
            prop_assert!(checks::jacobi_defect(&jet) <= tol);
            prop_assert!(checks::inverse_derivative_defect(&jet) <= tol);
            prop_assert!(checks::second_partial_asymmetry(&jet) <= tol);
            prop_assert!(jet.det > 0.0);

            // operator linearity on polynomial probes
            let dim = metric.dimension();
            let psi1 = ScalarField::new(dim, |q: &Point| q.0[0] * q.0[0] + 0.5 * q.0[1]);
            let psi2 = ScalarField::new(dim, |q: &Point| q.0[1] * q.0.last().unwrap() + q.0[0]);
            let combo = ScalarField::linear_combination(a, &psi1, b, &psi2);
            let lb = build_operator(&OperatorSpec::LaplaceBeltrami, &metric).unwrap();
            let lhs = lb.apply(&combo, &p, &cfg).unwrap();
            let rhs =
                a * lb.apply(&psi1, &p, &cfg).unwrap() + b * lb.apply(&psi2, &p, &cfg).unwrap();
            prop_assert!(
                (lhs - rhs).abs() <= 1e-6 * (1.0 + lhs.abs().max(rhs.abs())),
                "linearity: {} vs {}",
                lhs,
                rhs
            );

            // PowerOrdering(0,0) degenerates to LaplaceBeltrami
            let pw = build_operator(
                &OperatorSpec::PowerOrdering {
                    alpha: 0.0,
                    beta: 0.0,
                },
                &metric,
            )
            .unwrap();
            let v1 = pw.apply(&psi1, &p, &cfg).unwrap();
            let v2 = lb.apply(&psi1, &p, &cfg).unwrap();
            prop_assert!(
                (v1 - v2).abs() <= 1e-6 * (1.0 + v2.abs()),
                "power(0,0): {} vs {}",
                v1,
                v2
            );
            Ok(())
        })
        .unwrap();

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1} s");
    pass_line("criterion 9 (invariant suite, 200 cases)", elapsed);
}

/// Cross-module oracle runs named in the module contracts.
#[test]
fn cross_module_consistency() {
    let cfg = DiffConfig::default();

    // conf-gauss sigma = 1/4 at the origin: determinant route of the
    // conformal module equals the Christoffel oracle of the geometry module
    let m = catalog::metric("conf-gauss:3:0.25").unwrap();
    let jet = metric_jet(&m, &Point(vec![0.0, 0.0, 0.0]), &cfg).unwrap();
    let r_chr = ricci_scalar_christoffel(&jet);
    let r_cnf = conformal_ricci(&ConformalJet::from_metric_jet(&jet)).unwrap();
    assert!((r_chr - r_cnf).abs() <= 1e-9 * r_chr.abs().max(1.0));

    // term-vector sum reproduces the direct route on a generic metric
    let m = catalog::metric("poly-perturb:3:7:0.1").unwrap();
    let p = Point(vec![0.2, -0.1, 0.3]);
    let jet = metric_jet(&m, &p, &cfg).unwrap();
    let tv = curvature_term_vector(&jet);
    let direct = ricci_scalar_direct(&jet);
    assert!((tv.curvature_sum() - direct).abs() <= 1e-12 * direct.abs().max(1.0));

    // naive closed-form energies against the mode tolerances of geometry
    assert_eq!(naive_energy(QuantumNumbers::new(1, 0, 0).unwrap()), -0.5);
    let _ = geometry::tol::LIN_ANALYTIC;
}
