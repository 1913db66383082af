//! Library half of the ordlab CLI: a [`RunConfig`] fully determines a run,
//! and identical configs produce byte-identical report bodies (reports carry
//! no timestamps). Every subcommand writes a report and reports pass/fail
//! against its tolerances; `run` never exits the process.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use ordlab::basis::{independence_rank, verify_matrix_identities, IdentityReport};
use ordlab::catalog;
use ordlab::conformal::{solve_exponents, verify_two_solutions, ExponentKind};
use ordlab::geometry::{formula_audit, metric_jet};
use ordlab::hydrogen::{spectrum_table, standard_energy, ChainConfig, SpectrumTable};
use ordlab::operators::{
    build_operator, effective_potential_batch, reports_to_csv, similarity_ordering,
};
use ordlab::{DiffConfig, MetricField, OperatorSpec, Point, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    PrettyTable,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "pretty-table" => Ok(Format::PrettyTable),
            other => Err(format!("unknown format `{other}` (json|csv|pretty-table)")),
        }
    }
}

/// Subcommand payloads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Curvature {
        metric: String,
        points: usize,
    },
    Potential {
        metric: String,
        /// `naive`, `lb`, `conformal-lb`, `power:ALPHA:BETA`, or JSON spec
        spec: String,
        points: usize,
    },
    Exponents {
        n: usize,
        metric: Option<String>,
    },
    Hydrogen {
        n_max: u32,
        m: Vec<i32>,
    },
    Rank {
        /// comma-separated labels, or `poly-perturb:N:LO-HI:EPS` seed range
        family: String,
        points: usize,
        expect_rank: Option<usize>,
    },
    Identities {
        metric: Option<String>,
    },
    Oscillator {
        omega: f64,
        points: usize,
    },
}

/// A fully resolved run: `seed` determines all sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    /// main tolerance of the subcommand; None picks the documented default
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub pass: bool,
    pub failures: Vec<String>,
    pub report: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] ordlab::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

const DEFAULT_CURVATURE_TOL: f64 = 1e-6;
const DEFAULT_POTENTIAL_TOL: f64 = 1e-4;
const DRIFT_TOL: f64 = 1e-5;
const DEFAULT_ROOT_TOL: f64 = 1e-8;
const FITTED_C_TOL: f64 = 1e-4;
const DEFAULT_SPECTRUM_TOL: f64 = 1e-5;
const DEFAULT_IDENTITY_TOL: f64 = 1e-12;
const DEFAULT_OSCILLATOR_TOL: f64 = 1e-6;

/// Execute the run, write the report (file at `config.out`, else stdout is
/// the caller's job via the returned string), and return pass/fail.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    ordlab::init_threads_from_env();
    if config.format == Format::Csv
        && !matches!(
            config.command,
            Command::Potential { .. } | Command::Hydrogen { .. }
        )
    {
        return Err(CliError::Invalid(
            "csv format is only available for the potential and hydrogen tables".into(),
        ));
    }
    let cfg = DiffConfig::default();
    let mut failures: Vec<String> = Vec::new();

    let report = match &config.command {
        Command::Curvature { metric, points } => {
            let m = catalog::metric(metric)?;
            let samples = catalog::sample_points(&m, *points, config.seed)?;
            let tol = config.tol.unwrap_or(DEFAULT_CURVATURE_TOL);
            let audit = formula_audit(&m, &samples, &cfg, tol)?;
            if !audit.pass {
                failures.push(format!(
                    "curvature routes disagree beyond {tol:e} on `{metric}`"
                ));
            }
            render_json(config, &failures, json!({ "audit": audit }))?
        }

        Command::Potential {
            metric,
            spec,
            points,
        } => {
            let m = catalog::metric(metric)?;
            let spec = parse_spec(spec)?;
            let samples = catalog::sample_points(&m, *points, config.seed)?;
            let tol = config.tol.unwrap_or(DEFAULT_POTENTIAL_TOL);
            let batch = effective_potential_batch(&spec, &m, &samples, &cfg)?;
            if batch.residual_rms > tol {
                failures.push(format!(
                    "C R fit residual rms {:.3e} exceeds {tol:e}",
                    batch.residual_rms
                ));
            }
            let max_drift = batch
                .reports
                .iter()
                .flat_map(|r| r.drift.iter())
                .fold(0.0f64, |m, d| m.max(d.abs()));
            if max_drift > DRIFT_TOL {
                failures.push(format!(
                    "max drift component {max_drift:.3e} exceeds {DRIFT_TOL:e}"
                ));
            }
            match config.format {
                Format::Csv => reports_to_csv(&batch.reports)?,
                Format::PrettyTable => potential_table(&batch.reports),
                Format::Json => render_json(
                    config,
                    &failures,
                    json!({
                        "reports": batch.reports,
                        "fitted_C": batch.fitted_c,
                        "residual_rms": batch.residual_rms,
                    }),
                )?,
            }
        }

        Command::Exponents { n, metric } => {
            let n = *n;
            let label = metric
                .clone()
                .unwrap_or_else(|| default_conformal_metric(n));
            let m = catalog::metric(&label)?;
            let samples = catalog::sample_points(&m, 5, config.seed)?;
            let solutions = solve_exponents(n)?;
            let verification = verify_two_solutions(n, &m, &samples, &cfg)?;
            let root_tol = config.tol.unwrap_or(DEFAULT_ROOT_TOL);

            if verification.root_count() != 2 {
                failures.push(format!(
                    "expected 2 residual roots (with multiplicity), found {}",
                    verification.root_count()
                ));
            }
            if !verification.drift_condition_checked {
                failures.push("drift condition alpha + 2 beta = 0 not confirmed".into());
            }
            for sol in &solutions {
                let beta = rational_to_f64(sol.beta_tilde);
                let c = rational_to_f64(sol.c);
                match verification
                    .roots
                    .iter()
                    .min_by(|a, b| (a.beta - beta).abs().total_cmp(&(b.beta - beta).abs()))
                {
                    Some(root) if (root.beta - beta).abs() <= root_tol => {
                        if sol.kind == ExponentKind::Conformal
                            && (root.fitted_c - c).abs() > FITTED_C_TOL
                        {
                            failures.push(format!(
                                "fitted C {:.6} at beta {:.6} differs from {:.6}",
                                root.fitted_c, root.beta, c
                            ));
                        }
                    }
                    _ => failures.push(format!(
                        "no located root within {root_tol:e} of beta = {beta:.9}"
                    )),
                }
            }
            render_json(
                config,
                &failures,
                json!({
                    "solutions": solutions,
                    "verification": verification,
                }),
            )?
        }

        Command::Hydrogen { n_max, m } => {
            let ms = if m.is_empty() { vec![0] } else { m.clone() };
            let tol = config.tol.unwrap_or(DEFAULT_SPECTRUM_TOL);
            let table = spectrum_table(*n_max, &ms, &ChainConfig::default())?;
            for row in &table.rows {
                if row.abs_err > tol {
                    failures.push(format!(
                        "row (n={}, l={}, m={}): |closed - numeric| = {:.3e} exceeds {tol:e}",
                        row.n, row.l, row.m, row.abs_err
                    ));
                }
                if row.l == 0 && row.m == 0 && row.e_closed != standard_energy(row.n)? {
                    failures.push(format!("s-state row n={} deviates from -1/(2n^2)", row.n));
                }
            }
            match config.format {
                Format::Csv => table.to_csv(),
                Format::PrettyTable => spectrum_pretty(&table),
                Format::Json => render_json(config, &failures, json!({ "table": table }))?,
            }
        }

        Command::Rank {
            family,
            points,
            expect_rank,
        } => {
            let metrics = parse_family(family)?;
            let report = independence_rank(&metrics, *points, &cfg, config.seed)?;
            if let Some(expected) = expect_rank {
                if report.rank != *expected {
                    failures.push(format!(
                        "rank {} differs from expected {expected}",
                        report.rank
                    ));
                }
            }
            render_json(config, &failures, json!({ "rank": report }))?
        }

        Command::Identities { metric } => {
            let labels: Vec<String> = match metric {
                Some(l) => vec![l.clone()],
                None => [
                    "euclidean:3",
                    "spherical3",
                    "conf-gauss:3:0.25",
                    "stereo-sphere:3:1",
                    "poly-perturb:3:2:0.1",
                ]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            };
            let tol = config.tol.unwrap_or(DEFAULT_IDENTITY_TOL);
            let mut reports: Vec<IdentityReport> = Vec::new();
            for label in &labels {
                let m = catalog::metric(label)?;
                for p in catalog::sample_points(&m, 3, config.seed)? {
                    let jet = metric_jet(&m, &p, &cfg)?;
                    let mut rep = verify_matrix_identities(&jet, &[1, 2, 3, 4])?;
                    rep.metric = label.clone();
                    if rep.max_dev > tol {
                        failures.push(format!(
                            "identity deviation {:.3e} on `{label}` exceeds {tol:e}",
                            rep.max_dev
                        ));
                    }
                    reports.push(rep);
                }
            }
            render_json(config, &failures, json!({ "identities": reports }))?
        }

        Command::Oscillator { omega, points } => {
            let omega = *omega;
            let tol = config.tol.unwrap_or(DEFAULT_OSCILLATOR_TOL);
            let h = ScalarField::exp_quadratic(1, -omega / 2.0);
            let f = ScalarField::exp_quadratic(1, omega);
            let spec = similarity_ordering(&f, &h);
            let flat = catalog::metric("euclidean:1")?;
            let op = build_operator(&spec, &flat)?;
            let one = ScalarField::constant(1, 1.0);
            let mut rows = Vec::new();
            for i in 0..*points {
                let x = -2.0 + 4.0 * i as f64 / (*points as f64 - 1.0).max(1.0);
                let p = Point(vec![x]);
                let got_potential = 0.5 * op.apply(&one, &p, &cfg)?;
                let want_potential = 0.5 * omega * omega * x * x + omega / 2.0;
                let got_ground = 0.5 * op.apply(&h, &p, &cfg)?;
                let want_ground = omega * h.value(&p);
                if (got_potential - want_potential).abs() > tol {
                    failures.push(format!(
                        "potential check at x = {x:.3}: {got_potential:.9} vs {want_potential:.9}"
                    ));
                }
                if (got_ground - want_ground).abs() > tol {
                    failures.push(format!(
                        "ground-state check at x = {x:.3}: {got_ground:.9} vs {want_ground:.9}"
                    ));
                }
                rows.push(json!({
                    "x": x,
                    "applied_to_one": got_potential,
                    "expected_potential": want_potential,
                    "applied_to_ground": got_ground,
                    "expected_ground": want_ground,
                }));
            }
            render_json(config, &failures, json!({ "oscillator": rows }))?
        }
    };

    if let Some(path) = &config.out {
        std::fs::write(path, &report)?;
    }

    Ok(RunOutcome {
        pass: failures.is_empty(),
        failures,
        report,
    })
}

fn rational_to_f64(r: num_rational::Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn default_conformal_metric(n: usize) -> String {
    if n <= 4 {
        format!("conf-gauss:{n}:0.25")
    } else {
        format!("conf-gauss:{n}:0.1")
    }
}

/// `naive` | `lb` | `conformal-lb` | `power:ALPHA:BETA` | JSON object
pub fn parse_spec(s: &str) -> Result<OperatorSpec, CliError> {
    match s {
        "naive" => return Ok(OperatorSpec::Naive),
        "lb" | "laplace-beltrami" => return Ok(OperatorSpec::LaplaceBeltrami),
        "conformal-lb" => return Ok(OperatorSpec::ConformalLB),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("power:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() == 2 {
            let alpha: f64 = parts[0]
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad alpha in `{s}`")))?;
            let beta: f64 = parts[1]
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad beta in `{s}`")))?;
            return Ok(OperatorSpec::PowerOrdering { alpha, beta });
        }
    }
    serde_json::from_str(s).map_err(|e| CliError::Invalid(format!("bad operator spec `{s}`: {e}")))
}

/// Either comma-separated catalog labels or a seeded range
/// `poly-perturb:N:LO-HI:EPS`.
pub fn parse_family(s: &str) -> Result<Vec<MetricField>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if let ["poly-perturb", n, range, eps] = parts.as_slice() {
        if let Some((lo, hi)) = range.split_once('-') {
            let lo: u64 = lo
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad seed range in `{s}`")))?;
            let hi: u64 = hi
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad seed range in `{s}`")))?;
            if hi < lo {
                return Err(CliError::Invalid(format!("empty seed range in `{s}`")));
            }
            return (lo..=hi)
                .map(|seed| {
                    catalog::metric(&format!("poly-perturb:{n}:{seed}:{eps}")).map_err(Into::into)
                })
                .collect();
        }
    }
    s.split(',')
        .map(|label| catalog::metric(label.trim()).map_err(Into::into))
        .collect()
}

fn render_json(
    config: &RunConfig,
    failures: &[String],
    results: serde_json::Value,
) -> Result<String, CliError> {
    let doc = json!({
        "config": config,
        "pass": failures.is_empty(),
        "failures": failures,
        "results": results,
    });
    let body = if matches!(config.format, Format::PrettyTable) {
        serde_json::to_string_pretty(&doc).expect("serializable")
    } else {
        serde_json::to_string(&doc).expect("serializable")
    };
    Ok(body + "\n")
}

fn spectrum_pretty(table: &SpectrumTable) -> String {
    let mut out = String::from(
        "  n   l   m        E_closed       E_numeric         abs_err         rel_err\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "{:>3} {:>3} {:>3} {:>15.10} {:>15.10} {:>15.3e} {:>15.3e}\n",
            r.n, r.l, r.m, r.e_closed, r.e_numeric, r.abs_err, r.rel_err
        ));
    }
    out
}

fn potential_table(reports: &[ordlab::operators::EffectivePotentialReport]) -> String {
    let mut out = String::from("point | V_eff | max_drift | ricci | fitted_C\n");
    for r in reports {
        let max_drift = r.drift.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        out.push_str(&format!(
            "{:?} | {:.9} | {:.3e} | {:.9} | {}\n",
            r.point,
            r.v_eff,
            max_drift,
            r.ricci,
            r.fitted_c.map(|c| format!("{c:.9}")).unwrap_or_default(),
        ));
    }
    out
}
