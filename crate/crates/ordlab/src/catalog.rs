//! Built-in metric catalog, addressable by string labels.
//!
//! Labels:
//! * `euclidean:N` — identity metric on R^N
//! * `spherical3` — flat 3-space in spherical coordinates diag(1, r^2, r^2 sin^2 theta)
//! * `conf-gauss:N:SIGMA` — conformally flat, phi = exp(-SIGMA |x|^2)
//! * `stereo-sphere:N:A` — round N-sphere of radius A in the stereographic
//!   chart, phi = 2 A^2 / (A^2 + |x|^2); scalar curvature N(N-1)/A^2
//! * `poly-perturb:N:SEED:EPS` — g = I + EPS * S(x) with S a seeded random
//!   symmetric perturbation carrying linear and quadratic terms, rejected if
//!   not positive definite on the sample box [-1, 1]^N
//!
//! Every catalog metric carries closed-form partials (analytic mode); use
//! [`MetricField::forced_numeric`] for the finite-difference path.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, Point, MAX_DIMENSION};

/// Resolve a catalog label into a metric.
pub fn metric(label: &str) -> Result<MetricField> {
    let parts: Vec<&str> = label.split(':').collect();
    match parts.as_slice() {
        ["euclidean", n] => euclidean(parse_dim(label, n)?),
        ["spherical3"] => spherical3(),
        ["conf-gauss", n, sigma] => conf_gauss(parse_dim(label, n)?, parse_f64(label, sigma)?),
        ["stereo-sphere", n, a] => stereo_sphere(parse_dim(label, n)?, parse_f64(label, a)?),
        ["poly-perturb", n, seed, eps] => poly_perturb(
            parse_dim(label, n)?,
            parse_u64(label, seed)?,
            parse_f64(label, eps)?,
        ),
        _ => Err(Error::UnknownMetric(label.to_string())),
    }
}

fn parse_dim(label: &str, s: &str) -> Result<usize> {
    let n: usize = s
        .parse()
        .map_err(|_| Error::UnknownMetric(label.to_string()))?;
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(n)
}

fn parse_f64(label: &str, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::UnknownMetric(label.to_string()))
}

fn parse_u64(label: &str, s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::UnknownMetric(label.to_string()))
}

pub fn euclidean(n: usize) -> Result<MetricField> {
    MetricField::analytic(
        n,
        format!("euclidean:{n}"),
        move |_p: &Point| DMatrix::identity(n, n),
        move |_p: &Point| vec![DMatrix::zeros(n, n); n],
        move |_p: &Point| vec![vec![DMatrix::zeros(n, n); n]; n],
    )
}

/// Flat 3-space in spherical coordinates (r, theta, phi).
pub fn spherical3() -> Result<MetricField> {
    let eval = |p: &Point| {
        let (r, th) = (p.0[0], p.0[1]);
        DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0,
            r * r,
            r * r * th.sin().powi(2),
        ]))
    };
    let first = |p: &Point| {
        let (r, th) = (p.0[0], p.0[1]);
        let (s, c) = (th.sin(), th.cos());
        let mut d = vec![DMatrix::zeros(3, 3); 3];
        d[0][(1, 1)] = 2.0 * r;
        d[0][(2, 2)] = 2.0 * r * s * s;
        d[1][(2, 2)] = 2.0 * r * r * s * c;
        d
    };
    let second = |p: &Point| {
        let (r, th) = (p.0[0], p.0[1]);
        let (s, c) = (th.sin(), th.cos());
        let mut d = vec![vec![DMatrix::zeros(3, 3); 3]; 3];
        d[0][0][(1, 1)] = 2.0;
        d[0][0][(2, 2)] = 2.0 * s * s;
        d[0][1][(2, 2)] = 4.0 * r * s * c;
        d[1][0][(2, 2)] = 4.0 * r * s * c;
        d[1][1][(2, 2)] = 2.0 * r * r * (c * c - s * s);
        d
    };
    MetricField::analytic(3, "spherical3", eval, first, second)
}

/// Conformally flat metric g = phi^2 I from a factor with closed-form
/// partials: phi, phi_{,a}, phi_{,ab}.
fn conformal_metric<P>(n: usize, label: String, factor: P) -> Result<MetricField>
where
    P: Fn(&[f64]) -> (f64, Vec<f64>, DMatrix<f64>) + Send + Sync + Clone + 'static,
{
    let f_eval = factor.clone();
    let f_first = factor.clone();
    let f_second = factor;
    MetricField::analytic(
        n,
        label,
        move |p: &Point| {
            let (phi, _, _) = f_eval(&p.0);
            DMatrix::identity(n, n) * (phi * phi)
        },
        move |p: &Point| {
            let (phi, dphi, _) = f_first(&p.0);
            (0..n)
                .map(|c| DMatrix::identity(n, n) * (2.0 * phi * dphi[c]))
                .collect()
        },
        move |p: &Point| {
            let (phi, dphi, d2phi) = f_second(&p.0);
            (0..n)
                .map(|c| {
                    (0..n)
                        .map(|d| {
                            DMatrix::identity(n, n)
                                * (2.0 * (dphi[c] * dphi[d] + phi * d2phi[(c, d)]))
                        })
                        .collect()
                })
                .collect()
        },
    )
}

/// phi = exp(-sigma |x|^2).
pub fn conf_gauss(n: usize, sigma: f64) -> Result<MetricField> {
    conformal_metric(n, format!("conf-gauss:{n}:{sigma}"), move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let phi = (-sigma * r2).exp();
        let dphi: Vec<f64> = x.iter().map(|v| -2.0 * sigma * v * phi).collect();
        let nn = x.len();
        let mut d2 = DMatrix::zeros(nn, nn);
        for c in 0..nn {
            for d in 0..nn {
                let kron = if c == d { 1.0 } else { 0.0 };
                d2[(c, d)] = (-2.0 * sigma * kron + 4.0 * sigma * sigma * x[c] * x[d]) * phi;
            }
        }
        (phi, dphi, d2)
    })
}

/// phi = 2 a^2 / (a^2 + |x|^2); round sphere of radius a, R = n(n-1)/a^2.
pub fn stereo_sphere(n: usize, a: f64) -> Result<MetricField> {
    conformal_metric(n, format!("stereo-sphere:{n}:{a}"), move |x: &[f64]| {
        let a2 = a * a;
        let u: f64 = a2 + x.iter().map(|v| v * v).sum::<f64>();
        let phi = 2.0 * a2 / u;
        let dphi: Vec<f64> = x.iter().map(|v| -4.0 * a2 * v / (u * u)).collect();
        let nn = x.len();
        let mut d2 = DMatrix::zeros(nn, nn);
        for c in 0..nn {
            for d in 0..nn {
                let kron = if c == d { 1.0 } else { 0.0 };
                d2[(c, d)] = -4.0 * a2 * kron / (u * u) + 16.0 * a2 * x[c] * x[d] / (u * u * u);
            }
        }
        (phi, dphi, d2)
    })
}

/// Seeded random symmetric perturbation of the identity:
/// g_ab = delta_ab + eps (A_ab + B_abk x^k + C_abkl x^k x^l),
/// with A, B, C symmetric in (a, b) and C symmetric in (k, l).
/// Construction fails if g is not positive definite on [-1, 1]^n.
pub fn poly_perturb(n: usize, seed: u64, eps: f64) -> Result<MetricField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| rng.gen_range(-scale..=scale);

    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * n * n];
    let mut c = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in i..n {
            let v = draw(1.0);
            a[i * n + j] = v;
            a[j * n + i] = v;
            for k in 0..n {
                let v = draw(1.0);
                b[(i * n + j) * n + k] = v;
                b[(j * n + i) * n + k] = v;
                for l in k..n {
                    let v = draw(1.0);
                    for (p, q) in [(i, j), (j, i)] {
                        c[((p * n + q) * n + k) * n + l] = v;
                        c[((p * n + q) * n + l) * n + k] = v;
                    }
                }
            }
        }
    }

    let label = format!("poly-perturb:{n}:{seed}:{eps}");
    let (b2, c2) = (b.clone(), c.clone());
    let c3 = c.clone();

    let eval = move |p: &Point| {
        let x = &p.0;
        let mut g = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = a[i * n + j];
                for k in 0..n {
                    s += b[(i * n + j) * n + k] * x[k];
                    for l in 0..n {
                        s += c[((i * n + j) * n + k) * n + l] * x[k] * x[l];
                    }
                }
                g[(i, j)] += eps * s;
            }
        }
        g
    };

    let first = move |p: &Point| {
        let x = &p.0;
        (0..n)
            .map(|k| {
                let mut d = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        let mut s = b2[(i * n + j) * n + k];
                        for l in 0..n {
                            s += 2.0 * c2[((i * n + j) * n + k) * n + l] * x[l];
                        }
                        d[(i, j)] = eps * s;
                    }
                }
                d
            })
            .collect::<Vec<_>>()
    };

    let second = move |_p: &Point| {
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let mut d = DMatrix::zeros(n, n);
                        for i in 0..n {
                            for j in 0..n {
                                d[(i, j)] = eps * 2.0 * c3[((i * n + j) * n + k) * n + l];
                            }
                        }
                        d
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };

    let field = MetricField::analytic(n, label.clone(), eval, first, second)?;

    // PD rejection sweep over the sample box: corners plus seeded interior points.
    let mut probe = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut points: Vec<Point> = Vec::new();
    for corner in 0..(1usize << n) {
        let coords: Vec<f64> = (0..n)
            .map(|k| if corner >> k & 1 == 1 { 1.0 } else { -1.0 })
            .collect();
        points.push(Point(coords));
    }
    for _ in 0..50 {
        points.push(Point((0..n).map(|_| probe.gen_range(-1.0..=1.0)).collect()));
    }
    for p in &points {
        let g = field.eval(p)?;
        if Cholesky::new(g).is_none() {
            return Err(Error::NotPositiveDefinite {
                label,
                point: p.coords().to_vec(),
            });
        }
    }
    Ok(field)
}

/// Regular-point sample box for a catalog metric. Spherical charts exclude
/// their coordinate singularities (r >= 0.1, theta in [0.1, pi - 0.1] per
/// the geometry contract; the box used here stays well inside).
fn sample_range(label: &str, axis: usize) -> (f64, f64) {
    if label == "spherical3" {
        match axis {
            0 => (0.5, 2.5),
            1 => (0.35, std::f64::consts::PI - 0.35),
            _ => (0.0, 2.0 * std::f64::consts::PI),
        }
    } else {
        (-0.8, 0.8)
    }
}

/// Deterministic seeded sample of regular points for `metric`.
pub fn sample_points(metric: &MetricField, count: usize, seed: u64) -> Result<Vec<Point>> {
    let n = metric.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let coords = (0..n)
            .map(|axis| {
                let (lo, hi) = sample_range(metric.label(), axis);
                rng.gen_range(lo..=hi)
            })
            .collect();
        out.push(Point(coords));
    }
    Ok(out)
}
