//! Numeric evidence for the span structure of determinant-ordering
//! potential terms: the scalar curvature decomposes over six independent
//! second-order scalar monomials, and the general metric-power ordering
//! produces exactly one more independent scalar (the obstruction term
//! g^{ab}_{,b} g_{ac} g^{cl}_{,l}), which is why no constant C != 0 works
//! outside the conformally flat class. Also sanity-checks the exact matrix
//! identities used by such orderings.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diff::DiffConfig;
use crate::error::{Error, Result};
use crate::geometry::{curvature_addends, metric_jet, MetricField, MetricJet, Point};

/// The seven scalar terms at one point: t1..t6 are the curvature addends
/// (see [`curvature_addends`]), t7 is the obstruction monomial
/// g^{ab}_{,b} g_{ac} g^{cl}_{,l}. All vanish identically on flat metrics
/// in Cartesian coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermVector {
    pub point: Vec<f64>,
    pub t: [f64; 7],
}

impl TermVector {
    /// Sum of the six curvature addends; reproduces `ricci_scalar_direct`
    /// exactly (same arithmetic, regrouped).
    pub fn curvature_sum(&self) -> f64 {
        self.t[..6].iter().sum()
    }
}

/// Obstruction monomial g^{ab}_{,b} g_{ac} g^{cl}_{,l}.
fn obstruction_term(jet: &MetricJet) -> f64 {
    let n = jet.dim();
    // w^a = g^{ab}_{,b}
    let w: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|b| jet.d_ginv[b][(a, b)]).sum())
        .collect();
    let mut acc = 0.0;
    for a in 0..n {
        for c in 0..n {
            acc += w[a] * jet.g[(a, c)] * w[c];
        }
    }
    acc
}

/// Evaluate the seven scalar terms at the jet's point.
pub fn curvature_term_vector(jet: &MetricJet) -> TermVector {
    let addends = curvature_addends(jet);
    let mut t = [0.0; 7];
    t[..6].copy_from_slice(&addends);
    t[6] = obstruction_term(jet);
    TermVector {
        point: jet.point.coords().to_vec(),
        t,
    }
}

/// Numerical rank of the stacked term vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// relative cutoff applied to the largest singular value
    pub threshold: f64,
    pub samples: usize,
}

/// Relative singular-value cutoff for the rank decision.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Stack term vectors over seeded samples of each metric in the family and
/// return the numerical rank (singular values above `RANK_THRESHOLD` times
/// the largest). Requires at least 7 samples in total.
pub fn independence_rank(
    family: &[MetricField],
    points_per_metric: usize,
    cfg: &DiffConfig,
    seed: u64,
) -> Result<RankReport> {
    let total = family.len() * points_per_metric;
    if total < 7 {
        return Err(Error::TooFewSamples {
            needed: 7,
            got: total,
        });
    }
    let jobs: Vec<(usize, Point)> = family
        .iter()
        .enumerate()
        .flat_map(|(i, metric)| {
            crate::catalog::sample_points(metric, points_per_metric, seed.wrapping_add(i as u64))
                .unwrap_or_default()
                .into_iter()
                .map(move |p| (i, p))
        })
        .collect();
    let rows: Vec<[f64; 7]> = jobs
        .par_iter()
        .map(|(i, p)| {
            let jet = metric_jet(&family[*i], p, cfg)?;
            Ok(curvature_term_vector(&jet).t)
        })
        .collect::<Result<_>>()?;

    let mut m = DMatrix::zeros(rows.len(), 7);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let largest = sv.first().copied().unwrap_or(0.0);
    let rank = if largest == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_THRESHOLD * largest).count()
    };
    Ok(RankReport {
        rank,
        singular_values: sv,
        threshold: RANK_THRESHOLD,
        samples: rows.len(),
    })
}

/// Deviations of the exact matrix identities at one jet, each normalized to
/// a unit target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub metric: String,
    pub point: Vec<f64>,
    pub chain_lengths: Vec<usize>,
    /// max |(g g^-1)^L - I| over requested chain lengths
    pub kronecker_dev: f64,
    /// |sum_{s,t} sgn(s) sgn(t) prod_i g[s_i, t_i] / (n! det g) - 1|
    pub epsilon_dev: f64,
    /// max |tr(g g^-1)^(q1+q2) / n^(q1+q2) - 1| over chain lengths
    pub trace_dev: f64,
    pub max_dev: f64,
}

/// Raw value of the fully contracted mixed chain with q1 + q2 factors of
/// g_{..} paired against g^{..}; equals n^(q1+q2) exactly.
pub fn trace_chain_value(jet: &MetricJet, q1: usize, q2: usize) -> f64 {
    (&jet.g * &jet.g_inv).trace().powi((q1 + q2) as i32)
}

fn permutation_signs(n: usize) -> Vec<(Vec<usize>, f64)> {
    // Heap's algorithm, tracking parity
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    out.push((items.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            sign = -sign;
            out.push((items.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Numerically verify the three exact matrix identities at a jet:
/// alternating raise/lower chains contract to Kronecker deltas, the
/// double-Levi-Civita contraction of n metric factors equals n! det g, and
/// fully contracted mixed chains count n per factor.
pub fn verify_matrix_identities(
    jet: &MetricJet,
    chain_lengths: &[usize],
) -> Result<IdentityReport> {
    if chain_lengths.iter().any(|&l| l == 0 || l > 4) {
        return Err(Error::InvalidConfig(
            "chain lengths must lie in 1..=4".into(),
        ));
    }
    let n = jet.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let step = &jet.g * &jet.g_inv;

    let mut kronecker_dev: f64 = 0.0;
    for &len in chain_lengths {
        let mut prod = id.clone();
        for _ in 0..len {
            prod = &prod * &step;
        }
        kronecker_dev = kronecker_dev.max((&prod - &id).abs().max());
    }

    let perms = permutation_signs(n);
    let mut eps_sum = 0.0;
    for (sigma, s_sign) in &perms {
        for (tau, t_sign) in &perms {
            let mut prod = s_sign * t_sign;
            for i in 0..n {
                prod *= jet.g[(sigma[i], tau[i])];
            }
            eps_sum += prod;
        }
    }
    let factorial: f64 = (1..=n).product::<usize>() as f64;
    let epsilon_dev = (eps_sum / (factorial * jet.det) - 1.0).abs();

    let mut trace_dev: f64 = 0.0;
    for &len in chain_lengths {
        let value = trace_chain_value(jet, len, 0);
        trace_dev = trace_dev.max((value / (n as f64).powi(len as i32) - 1.0).abs());
    }

    Ok(IdentityReport {
        metric: String::new(),
        point: jet.point.coords().to_vec(),
        chain_lengths: chain_lengths.to_vec(),
        kronecker_dev,
        epsilon_dev,
        trace_dev,
        max_dev: kronecker_dev.max(epsilon_dev).max(trace_dev),
    })
}
