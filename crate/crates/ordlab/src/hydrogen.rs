//! The anomalous hydrogen spectrum of the unweighted (naive) kinetic
//! ordering, the textbook spectrum, and independent finite-difference
//! eigensolvers verifying both.
//!
//! Separating the naive ordering's Coulomb problem in spherical coordinates
//! gives, in atomic units (hbar = m_e = e = 1, energies in hartree):
//!
//! * angular: -T'' + (m^2/sin^2 th) T = mu T on (0, pi), with Neumann ends
//!   for m = 0 (eigenfunctions cos(l th), mu_l = l^2) and Dirichlet ends for
//!   m != 0 (mu_l = (l + (1 + sqrt(4 m^2 + 1))/2)^2, l = 0, 1, ...);
//! * radial: -R'' + (mu/r^2) R - (2/r) R = 2 E R on (0, r_max], with
//!   E_k = -1/(2 (k + lam + 1)^2), lam = -1/2 + sqrt(mu + 1/4), so the
//!   radial factor behaves like r^(lam+1) at the origin.
//!
//! The closed forms carry an overall minus sign (bound states); the l = 0
//! levels coincide with the textbook -1/(2 n^2) while every l >= 1 or
//! m != 0 level is anomalous.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::{derivative2, DiffConfig};
use crate::error::{Error, Result};

/// Principal / angular-label / magnetic quantum numbers. `m` is not
/// restricted by `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub n: u32,
    pub l: u32,
    pub m: i32,
}

impl QuantumNumbers {
    pub fn new(n: u32, l: u32, m: i32) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidQuantumNumbers {
                n: n as i64,
                l: l as i64,
                m: m as i64,
                reason: "n must be >= 1",
            });
        }
        if l + 1 > n {
            return Err(Error::InvalidQuantumNumbers {
                n: n as i64,
                l: l as i64,
                m: m as i64,
                reason: "l must satisfy l <= n - 1",
            });
        }
        Ok(QuantumNumbers { n, l, m })
    }
}

/// Angular eigenvalue in closed form: l^2 for m = 0, else
/// (l + (1 + sqrt(4 m^2 + 1))/2)^2 with levels labeled from l = 0 upward.
pub fn angular_mu_closed(m: i32, l: u32) -> f64 {
    if m == 0 {
        (l as f64).powi(2)
    } else {
        let shift = (1.0 + (4.0 * (m as f64).powi(2) + 1.0).sqrt()) / 2.0;
        (l as f64 + shift).powi(2)
    }
}

/// Indicial exponent of the radial problem: lam(lam+1) = mu, lam >= 0 branch.
pub fn lambda_from_mu(mu: f64) -> f64 {
    -0.5 + (mu + 0.25).sqrt()
}

/// Closed-form radial level: E_k = -1/(2 (k + lam + 1)^2).
pub fn radial_energy_closed(mu: f64, k: u32) -> f64 {
    let lam = lambda_from_mu(mu);
    -1.0 / (2.0 * (k as f64 + lam + 1.0).powi(2))
}

/// Closed-form energy of the naive ordering (hartree, negative).
pub fn naive_energy(qn: QuantumNumbers) -> f64 {
    let mu = angular_mu_closed(qn.m, qn.l);
    radial_energy_closed(mu, qn.n - qn.l - 1)
}

/// Textbook level -1/(2 n^2).
pub fn standard_energy(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidQuantumNumbers {
            n: n as i64,
            l: 0,
            m: 0,
            reason: "n must be >= 1",
        });
    }
    Ok(-1.0 / (2.0 * (n as f64).powi(2)))
}

// ---------------------------------------------------------------------------
// symmetric tridiagonal eigenvalues by Sturm-sequence bisection

mod tridiag {
    /// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly
    /// below x, by the Sturm sign-count of the LDL^T pivots.
    pub fn count_below(d: &[f64], e: &[f64], x: f64) -> usize {
        let pivmin = 1e-300;
        let mut count = 0;
        let mut q = 1.0f64;
        for i in 0..d.len() {
            let e2 = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
            q = d[i] - x - e2 / q;
            if q < 0.0 {
                count += 1;
            }
            if q.abs() < pivmin {
                q = -pivmin;
                count += 1;
            }
        }
        count
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(d: &[f64], e: &[f64], k: usize) -> f64 {
        // Gershgorin bounds
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..d.len() {
            let r = if i == 0 { 0.0 } else { e[i - 1].abs() }
                + if i + 1 < d.len() { e[i].abs() } else { 0.0 };
            lo = lo.min(d[i] - r);
            hi = hi.max(d[i] + r);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(d, e, mid) >= k + 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn lowest(d: &[f64], e: &[f64], count: usize) -> Vec<f64> {
        (0..count).map(|k| eigenvalue(d, e, k)).collect()
    }
}

/// Lowest `count` eigenvalues mu of -T'' + (m^2/sin^2 th) T = mu T on
/// (0, pi), second-order finite differences. Neumann ends for m = 0
/// (cell-centered grid with reflection), Dirichlet ends otherwise.
pub fn angular_eigenvalues(m: i32, count: usize, grid: usize) -> Result<Vec<f64>> {
    if count < 1 {
        return Err(Error::InvalidConfig("count must be >= 1".into()));
    }
    if grid < 200 {
        return Err(Error::GridTooCoarse(format!("angular grid {grid} < 200")));
    }
    if count >= grid / 4 {
        return Err(Error::GridTooCoarse(format!(
            "count {count} too large for grid {grid}"
        )));
    }
    let h = std::f64::consts::PI / grid as f64;
    let inv_h2 = 1.0 / (h * h);
    if m == 0 {
        let mut d = vec![2.0 * inv_h2; grid];
        d[0] = inv_h2;
        d[grid - 1] = inv_h2;
        let e = vec![-inv_h2; grid - 1];
        Ok(tridiag::lowest(&d, &e, count))
    } else {
        let msq = (m as f64).powi(2);
        let d: Vec<f64> = (1..grid)
            .map(|i| {
                let th = i as f64 * h;
                2.0 * inv_h2 + msq / th.sin().powi(2)
            })
            .collect();
        let e = vec![-inv_h2; d.len() - 1];
        Ok(tridiag::lowest(&d, &e, count))
    }
}

/// Lowest `count` eigenvalues E of -R'' + (mu/r^2) R - (2/r) R = 2 E R on
/// (0, r_max] with Dirichlet ends, second-order finite differences.
pub fn radial_eigenvalues(mu: f64, count: usize, r_max: f64, grid: usize) -> Result<Vec<f64>> {
    if !(mu >= 0.0) {
        return Err(Error::InvalidConfig(format!("mu must be >= 0, got {mu}")));
    }
    if count < 1 {
        return Err(Error::InvalidConfig("count must be >= 1".into()));
    }
    if grid < 200 {
        return Err(Error::GridTooCoarse(format!("radial grid {grid} < 200")));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidConfig("r_max must be positive".into()));
    }
    let h = r_max / grid as f64;
    let inv_h2 = 1.0 / (h * h);
    let d: Vec<f64> = (1..grid)
        .map(|i| {
            let r = i as f64 * h;
            2.0 * inv_h2 + mu / (r * r) - 2.0 / r
        })
        .collect();
    let e = vec![-inv_h2; d.len() - 1];
    Ok(tridiag::lowest(&d, &e, count)
        .into_iter()
        .map(|w| w / 2.0)
        .collect())
}

/// Default box: 40 bohr per requested state.
pub fn default_r_max(count: usize) -> f64 {
    40.0 * count as f64
}

/// Like [`radial_eigenvalues`], but solves at `grid` and `2 * grid` and
/// errors when any requested eigenvalue drifts by more than `drift_tol`
/// under the doubling (insufficient grid). Returns the fine-grid values.
pub fn radial_eigenvalues_checked(
    mu: f64,
    count: usize,
    r_max: f64,
    grid: usize,
    drift_tol: f64,
) -> Result<Vec<f64>> {
    let coarse = radial_eigenvalues(mu, count, r_max, grid)?;
    let fine = radial_eigenvalues(mu, count, r_max, 2 * grid)?;
    for (k, (c, f)) in coarse.iter().zip(&fine).enumerate() {
        let drift = (c - f).abs();
        if drift > drift_tol {
            return Err(Error::GridTooCoarse(format!(
                "eigenvalue {k} drifts by {drift:.3e} under grid doubling (tol {drift_tol:.1e})"
            )));
        }
    }
    Ok(fine)
}

/// Grid sizes for the numeric chain; each solve runs at `grid` and
/// `2 * grid` and Richardson-extrapolates the pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConfig {
    pub angular_grid: usize,
    pub radial_grid: usize,
    pub r_max_per_state: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            angular_grid: 4000,
            radial_grid: 6000,
            r_max_per_state: 40.0,
        }
    }
}

fn richardson2(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Numeric chain for one level: finite-difference angular eigenvalue feeds
/// the finite-difference radial solve.
///
/// The radial box scales with the state's effective principal number
/// nu = k + lam + 1 (from the indicial exponent of the numeric mu), since
/// large-mu states sit far outside the `r_max_per_state * count` box that
/// suffices at small mu.
pub fn chain_energy(qn: QuantumNumbers, chain: &ChainConfig) -> Result<f64> {
    let l = qn.l as usize;
    let mu_c = angular_eigenvalues(qn.m, l + 1, chain.angular_grid)?[l];
    let mu_f = angular_eigenvalues(qn.m, l + 1, 2 * chain.angular_grid)?[l];
    let mu = richardson2(mu_c, mu_f).max(0.0);
    let count = (qn.n - qn.l) as usize;
    let k = count - 1;
    let nu_hat = k as f64 + lambda_from_mu(mu) + 1.0;
    let r_max = (chain.r_max_per_state * count as f64).max(30.0 * nu_hat);
    let e_c = radial_eigenvalues(mu, count, r_max, chain.radial_grid)?[k];
    let e_f = radial_eigenvalues(mu, count, r_max, 2 * chain.radial_grid)?[k];
    Ok(richardson2(e_c, e_f))
}

/// One spectrum row: closed form vs the numeric chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: u32,
    pub l: u32,
    pub m: i32,
    #[serde(rename = "E_closed")]
    pub e_closed: f64,
    #[serde(rename = "E_numeric")]
    pub e_numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumTable {
    /// CSV with header `n,l,m,E_closed,E_numeric,abs_err,rel_err`.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["n", "l", "m", "E_closed", "E_numeric", "abs_err", "rel_err"])
            .expect("csv write");
        for r in &self.rows {
            wtr.write_record(&[
                r.n.to_string(),
                r.l.to_string(),
                r.m.to_string(),
                r.e_closed.to_string(),
                r.e_numeric.to_string(),
                r.abs_err.to_string(),
                r.rel_err.to_string(),
            ])
            .expect("csv write");
        }
        String::from_utf8(wtr.into_inner().expect("csv flush")).expect("utf8")
    }
}

/// Full table over n <= n_max, l <= n-1, m in `ms` (rows ordered by (n, l, m)).
pub fn spectrum_table(n_max: u32, ms: &[i32], chain: &ChainConfig) -> Result<SpectrumTable> {
    let mut jobs = Vec::new();
    for n in 1..=n_max {
        for l in 0..n {
            for &m in ms {
                jobs.push(QuantumNumbers::new(n, l, m)?);
            }
        }
    }
    let rows: Vec<SpectrumRow> = jobs
        .par_iter()
        .map(|&qn| {
            let e_closed = naive_energy(qn);
            let e_numeric = chain_energy(qn, chain)?;
            let abs_err = (e_closed - e_numeric).abs();
            Ok(SpectrumRow {
                n: qn.n,
                l: qn.l,
                m: qn.m,
                e_closed,
                e_numeric,
                abs_err,
                rel_err: abs_err / e_closed.abs(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectrumTable { rows })
}

/// Candidate separated eigenfunction's radial factor:
/// R(r) = exp(-kappa r) r^(lam+1) sum_{j<=k} c_j r^j, with the series
/// coefficients from the radial recurrence
/// c_{j+1} = c_j (2 kappa (lam+1+j) - 2) / ((j+1)(2 lam + j + 2)).
pub fn radial_eigenfunction(qn: QuantumNumbers) -> impl Fn(f64) -> f64 {
    let mu = angular_mu_closed(qn.m, qn.l);
    let lam = lambda_from_mu(mu);
    let k = (qn.n - qn.l - 1) as usize;
    let kappa = 1.0 / (k as f64 + lam + 1.0);
    let mut coeffs = vec![1.0f64; k + 1];
    for j in 0..k {
        coeffs[j + 1] = coeffs[j] * (2.0 * kappa * (lam + 1.0 + j as f64) - 2.0)
            / ((j as f64 + 1.0) * (2.0 * lam + j as f64 + 2.0));
    }
    move |r: f64| {
        let series: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c);
        (-kappa * r).exp() * r.powf(lam + 1.0) * series
    }
}

/// Max over sample radii of |(H R - E R)/R| for the separated real radial
/// problem of the naive ordering, H R = -(1/2) R'' + (mu/(2 r^2)) R - R/r,
/// E = naive_energy(qn). R'' is differentiated numerically.
pub fn eigenfunction_residual(qn: QuantumNumbers, samples: &[f64]) -> Result<f64> {
    if samples.iter().any(|&r| r <= 0.0) {
        return Err(Error::InvalidConfig(
            "sample radius at or below the coordinate singularity r = 0".into(),
        ));
    }
    let mu = angular_mu_closed(qn.m, qn.l);
    let e = naive_energy(qn);
    let radial = radial_eigenfunction(qn);
    let cfg = DiffConfig::default();
    let mut worst: f64 = 0.0;
    for &r in samples {
        let second = derivative2(&radial, r, &cfg);
        let value = radial(r);
        let ratio =
            ((-0.5 * second + (0.5 * mu / (r * r)) * value - value / r) - e * value) / value;
        if !ratio.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sample radius {r} sits on a node of the radial factor"
            )));
        }
        worst = worst.max(ratio.abs());
    }
    Ok(worst)
}

/// Measured convergence order of the radial eigensolver from one grid
/// doubling against the closed form.
pub fn radial_convergence_order(mu: f64, k: u32, r_max: f64, grid: usize) -> Result<f64> {
    let exact = radial_energy_closed(mu, k);
    let coarse = radial_eigenvalues(mu, k as usize + 1, r_max, grid)?[k as usize];
    let fine = radial_eigenvalues(mu, k as usize + 1, r_max, 2 * grid)?[k as usize];
    let e1 = (coarse - exact).abs();
    let e2 = (fine - exact).abs();
    Ok((e1 / e2).log2())
}
