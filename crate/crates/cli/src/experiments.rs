//! Experiment drivers. Each produces its output files in memory; `run`
//! writes them together with a provenance record.

use std::collections::BTreeMap;
use std::sync::Arc;

use emspec::ensembles::{sample_realization, CorrelationKind, EnsembleShape, PopulationCorrelation};
use emspec::parallel::map_realizations;
use emspec::portfolio::{run_sweep, PortfolioModel};
use emspec::powermap::{power_map, Deformation};
use emspec::quad::integrate;
use emspec::spectral::{
    block_overlap, bulk_range, eigh, eigvalsh, emerging_range, histogram, isolated_extreme, mean_and_stderr,
    split_spectrum, MomentSet, RealizationMoments, SpectralSplit,
};
use emspec::theory::{
    ansatz_asymptotic, ansatz_density, bulk_moment_extrapolation, delta_m1_exact, delta_m2_exact,
    delta_m_asymptotic, emerging_moments, largest_correction_estimate, mp_density, mp_edges, oneblock_ansatz,
    oneblock_delta_moments, oneblock_density, separated_position, AnsatzParams, CwoeResolvent,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::report::{
    histogram_csv, moments_csv, overlap_csv, portfolio_csv, theory_table_csv, MomentRow, OverlapRow, TheoryRow,
};
use crate::validate::{has_errors, validate, Severity};

/// Sub-points per bin when averaging the resolvent density over a bin.
const RESOLVENT_POINTS_PER_BIN: usize = 8;

#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
    pub summary: Value,
}

/// Validate and run `config`, returning file contents keyed by name.
pub fn execute(config: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let diags = validate(config);
    if has_errors(&diags) {
        return Err(CliError::Invalid(
            diags.into_iter().filter(|d| d.severity == Severity::Error).collect(),
        ));
    }
    match config.experiment {
        ExperimentKind::Portfolio => portfolio(config),
        ExperimentKind::TheoryTable => theory_table(config),
        _ => ensemble(config),
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo over sample correlation matrices

struct Sample {
    split: SpectralSplit,
    overlap: Vec<OverlapRow>,
}

/// Indices whose eigenvectors are decomposed over the blocks: the `k`
/// lowest and highest emerging eigenvalues and the top `k` overall.
fn overlap_indices(n: usize, t: usize, k: usize) -> Vec<usize> {
    let e = n.saturating_sub(t);
    let mut idx: Vec<usize> = (0..k.min(e)).chain(e.saturating_sub(k)..e).chain(n.saturating_sub(k)..n).collect();
    idx.sort_unstable();
    idx.dedup();
    idx
}

fn simulate(config: &ExperimentConfig, xi: &Arc<PopulationCorrelation>) -> Result<Vec<Sample>, CliError> {
    let (n, t) = (config.n_series(), config.horizon());
    let shape = EnsembleShape::with_variance(n, t, config.variance())?;
    let d = Deformation::new(config.q())?;
    let seed = config.master_seed();
    let block_sizes: Option<Vec<usize>> = match &xi.kind {
        CorrelationKind::BlockDiagonal { blocks } => Some(blocks.iter().map(|b| b.size).collect()),
        _ => None,
    };
    let with_vectors = if block_sizes.is_some() { config.overlap_realizations() } else { 0 };

    let samples = map_realizations(config.realizations(), |r| -> emspec::Result<Sample> {
        let c = sample_realization(xi, shape, seed, r as u64)?;
        if r >= with_vectors {
            return Ok(Sample {
                split: split_spectrum(&c, d)?,
                overlap: Vec::new(),
            });
        }
        let sizes = block_sizes.as_deref().expect("block sizes");
        let es = eigh(&power_map(&c.entries, d), true)?;
        let vectors = es.vectors.as_ref().expect("vectors requested");
        let indices = overlap_indices(n, t, sizes.len());
        let fractions = block_overlap(vectors, sizes, &indices)?;
        let overlap = indices
            .iter()
            .zip(fractions)
            .map(|(&index, fractions)| OverlapRow {
                realization: r,
                index,
                eigenvalue: es.values[index],
                fractions,
            })
            .collect();
        Ok(Sample {
            split: SpectralSplit::new(eigvalsh(&c.entries)?, es.values, t),
            overlap,
        })
    });
    Ok(samples.into_iter().collect::<emspec::Result<Vec<_>>>()?)
}

/// Per-realization bin averages of a density by adaptive quadrature.
fn bin_average(edges: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], 1e-12, 1e-9).value / (w[1] - w[0]))
        .collect()
}

/// Continuous part of the resolvent density averaged over evenly spaced sub-points of each bin.
fn resolvent_bin_average(edges: &[f64], solver: &CwoeResolvent, epsilon: f64) -> emspec::Result<Vec<f64>> {
    let k = RESOLVENT_POINTS_PER_BIN;
    let points: Vec<f64> = edges
        .windows(2)
        .flat_map(|w| (0..k).map(move |i| w[0] + (w[1] - w[0]) * (i as f64 + 0.5) / k as f64))
        .collect();
    let dens: Vec<f64> = solver
        .density_grid(&points, epsilon)?
        .into_iter()
        .zip(&points)
        .map(|(d, &l)| (d - solver.zero_atom_density(l, epsilon)).max(0.0))
        .collect();
    Ok(dens.chunks(k).map(|c| c.iter().sum::<f64>() / k as f64).collect())
}

fn add_histogram(
    files: &mut BTreeMap<String, String>,
    name: &str,
    values: &[f64],
    bins: usize,
    range: (f64, f64),
    normalization: f64,
    theory: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let h = histogram(values, bins, range, normalization)?;
    files.insert(format!("{name}.csv"), histogram_csv(&h, theory.as_deref()));
    Ok(())
}

fn edges(bins: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    (0..=bins).map(|i| if i == bins { hi } else { lo + w * i as f64 }).collect()
}

/// Predicted (total, emerging, bulk) first and second moments.
#[derive(Debug, Clone, Copy, Default, Serialize)]
struct TheoryMoments {
    total: [Option<f64>; 2],
    emerging: [Option<f64>; 2],
    bulk: [Option<f64>; 2],
}

fn both(x: (f64, f64)) -> [Option<f64>; 2] {
    [Some(x.0), Some(x.1)]
}

/// Linear response of the uncorrelated ensemble: (closed form, large T).
fn woe_theory(t: usize, n: usize, alpha: f64) -> (TheoryMoments, TheoryMoments) {
    let kappa = t as f64 / n as f64;
    let exact = (delta_m1_exact(t, alpha), delta_m2_exact(t, n, alpha));
    let asym = delta_m_asymptotic(t, kappa, alpha);
    if kappa >= 1.0 {
        let zero = both((0.0, 0.0));
        return (
            TheoryMoments {
                total: both(exact),
                emerging: zero,
                bulk: both(exact),
            },
            TheoryMoments {
                total: both(asym),
                emerging: zero,
                bulk: both(asym),
            },
        );
    }
    let s = ansatz_asymptotic(t, alpha).s;
    let emerging = both(emerging_moments(s, kappa));
    (
        TheoryMoments {
            total: both(exact),
            emerging,
            bulk: both(bulk_moment_extrapolation(exact.0, exact.1, s, kappa)),
        },
        TheoryMoments {
            total: both(asym),
            emerging,
            bulk: both(bulk_moment_extrapolation(asym.0, asym.1, s, kappa)),
        },
    )
}

fn moment_rows(m: &MomentSet, theory: &TheoryMoments, asym: &TheoryMoments, null: &TheoryMoments) -> Vec<MomentRow> {
    let se = &m.standard_errors;
    let parts: [(&[&'static str; 2], [f64; 2], [f64; 2], fn(&TheoryMoments) -> [Option<f64>; 2]); 3] = [
        (&["dm1", "dm2"], m.total, se.total, |t| t.total),
        (&["dm1_emerging", "dm2_emerging"], m.emerging, se.emerging, |t| t.emerging),
        (&["dm1_bulk", "dm2_bulk"], m.bulk, se.bulk, |t| t.bulk),
    ];
    parts
        .iter()
        .flat_map(|(names, emp, err, pick)| {
            (0..2).map(move |k| MomentRow {
                quantity: names[k],
                empirical: emp[k],
                stderr: err[k],
                theory: pick(theory)[k],
                theory_asymptotic: pick(asym)[k],
                woe_null: pick(null)[k],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
struct Stat {
    mean: f64,
    stderr: f64,
}

fn stat(xs: &[f64]) -> Stat {
    let (mean, stderr) = mean_and_stderr(xs);
    Stat { mean, stderr }
}

fn ensemble(config: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (n, t) = (config.n_series(), config.horizon());
    let kappa = config.kappa();
    let alpha = config.alpha();
    let variance = config.variance();
    let bins = config.bins();
    let kind = config.xi();
    let xi = Arc::new(PopulationCorrelation::from_kind(&kind, n)?);
    let samples = simulate(config, &xi)?;
    let splits: Vec<&SpectralSplit> = samples.iter().map(|s| &s.split).collect();
    let per: Vec<RealizationMoments> = splits.iter().map(|s| RealizationMoments::from_split(s)).collect();
    let moments = MomentSet::from_realizations(&per)?;

    // linear-response formulas are stated for unit variance
    let unit = variance == 1.0;
    let (woe_exact, woe_asym) = woe_theory(t, n, alpha);
    let none = TheoryMoments::default();
    let (theory, asym) = match (&kind, unit) {
        (_, false) => (none, none),
        (CorrelationKind::Identity, true) => (woe_exact, woe_asym),
        (CorrelationKind::OneBlock { c }, true) => {
            let total = oneblock_delta_moments(t, kappa, *c, alpha);
            let bulk = if kappa >= 1.0 {
                both(total)
            } else {
                oneblock_ansatz(total.0, total.1, *c, kappa).map(|a| both(a.bulk)).unwrap_or_default()
            };
            (
                none,
                TheoryMoments {
                    total: both(total),
                    emerging: if kappa >= 1.0 { both((0.0, 0.0)) } else { [None; 2] },
                    bulk,
                },
            )
        }
        _ => (none, none),
    };
    let null = if unit { woe_asym } else { none };

    let mut files = BTreeMap::new();
    files.insert("moments.csv".to_string(), moments_csv(&moment_rows(&moments, &theory, &asym, &null)));

    // pooled spectra; the top `skip` bulk eigenvalues are collective modes
    let skip = match &kind {
        CorrelationKind::OneBlock { c } if separated_position(n, kappa, *c).is_some() => 1,
        CorrelationKind::BlockDiagonal { blocks } => blocks.len(),
        _ => 0,
    }
    .min(t.min(n));
    let bulk_of = |s: &SpectralSplit| s.dim() - skip;
    let bulk_values: Vec<f64> = splits
        .iter()
        .flat_map(|s| s.deformed_values[s.emerging_count..bulk_of(s)].iter().copied())
        .collect();
    let bulk_corr: Vec<f64> = splits
        .iter()
        .flat_map(|s| s.corrections[s.emerging_count..bulk_of(s)].iter().copied())
        .collect();
    let emerging_vals: Vec<f64> = splits.iter().flat_map(|s| s.emerging_values().iter().copied()).collect();
    let bulk_mass = (t.min(n) - skip) as f64 / n as f64;

    let edge = match &kind {
        CorrelationKind::Identity => Some(mp_edges(kappa, variance).1),
        CorrelationKind::OneBlock { c } => Some(mp_edges(kappa, variance * (1.0 - c)).1),
        _ => None,
    };
    let b_range = config.bulk_range().unwrap_or_else(|| match edge {
        Some(e) => bulk_range(e),
        None => (
            0.5 * bulk_values.iter().cloned().fold(f64::INFINITY, f64::min),
            1.05 * bulk_values.iter().cloned().fold(0.0, f64::max),
        ),
    });
    let b_edges = edges(bins, b_range);
    let bulk_theory = match &kind {
        CorrelationKind::Identity => Some(bin_average(&b_edges, |l| mp_density(l, kappa, variance))),
        CorrelationKind::OneBlock { c } if unit => Some(bin_average(&b_edges, |l| oneblock_density(l, n, kappa, *c).0)),
        CorrelationKind::Banded { .. } => {
            let solver = CwoeResolvent::new(&xi.spectrum, kappa, variance)?;
            let eps = config.epsilon.unwrap_or_else(|| solver.default_epsilon());
            Some(resolvent_bin_average(&b_edges, &solver, eps)?)
        }
        _ => None,
    };
    add_histogram(&mut files, "density_bulk", &bulk_values, bins, b_range, bulk_mass, bulk_theory)?;

    let c_range = emerging_range(&bulk_corr);
    let c_edges = edges(bins, c_range);
    let ansatz: Option<AnsatzParams> = match (&kind, unit) {
        (CorrelationKind::Identity, true) => Some(ansatz_asymptotic(t, alpha)),
        (CorrelationKind::OneBlock { c }, true) => {
            let (m1, m2) = oneblock_delta_moments(t, kappa, *c, alpha);
            // the ansatz variable rescales an MP law of variance 1 − c
            oneblock_ansatz(m1, m2, *c, kappa)
                .ok()
                .map(|a| AnsatzParams::new(a.params.s * (1.0 - c), a.params.r))
        }
        _ => None,
    };
    let corr_theory = ansatz
        .filter(|p| p.s != 0.0)
        .map(|p| bin_average(&c_edges, |x| ansatz_density(x, p, kappa).unwrap_or(0.0)));
    add_histogram(&mut files, "density_bulk_corrections", &bulk_corr, bins, c_range, bulk_mass, corr_theory)?;

    if !emerging_vals.is_empty() {
        let range = config.emerging_range().unwrap_or_else(|| emerging_range(&emerging_vals));
        add_histogram(&mut files, "density_emerging", &emerging_vals, bins, range, 1.0 - kappa, None)?;
    }

    let mut summary = json!({
        "experiment": config.experiment.name(),
        "moments": moments,
        "theory": theory,
        "theory_asymptotic": asym,
    });

    if skip > 0 {
        let top_base: Vec<f64> = splits.iter().map(|s| *s.base_values.last().expect("nonempty")).collect();
        let top_def: Vec<f64> = splits.iter().map(|s| *s.deformed_values.last().expect("nonempty")).collect();
        let top_corr: Vec<f64> = splits.iter().map(|s| *s.corrections.last().expect("nonempty")).collect();
        let base_stat = stat(&top_base);
        summary["largest_eigenvalue"] = json!(base_stat);
        summary["largest_deformed_eigenvalue"] = json!(stat(&top_def));
        summary["largest_correction"] = json!(stat(&top_corr));
        summary["largest_correction_estimate"] = json!(largest_correction_estimate(base_stat.mean, alpha));
        if let CorrelationKind::OneBlock { c } = kind {
            summary["separated_position"] = json!(separated_position(n, kappa, c));
        }
        if config.experiment == ExperimentKind::CwoeOneBlock {
            add_histogram(&mut files, "density_largest_eigenvalue", &top_def, bins, emerging_range(&top_def), 1.0, None)?;
            add_histogram(&mut files, "density_largest_correction", &top_corr, bins, emerging_range(&top_corr), 1.0, None)?;
        }
    }
    if !emerging_vals.is_empty() {
        let iso: Vec<_> = splits.iter().filter_map(|s| isolated_extreme(s.emerging_values())).collect();
        let ratios: Vec<f64> = iso.iter().map(|i| i.ratio()).collect();
        summary["emerging_isolation_ratio"] = json!(stat(&ratios));
        summary["emerging_isolated_at_top"] = json!(iso.iter().filter(|i| i.at_top).count());
        if config.experiment == ExperimentKind::CwoeOneBlock {
            let top_em: Vec<f64> = splits.iter().map(|s| *s.emerging_values().last().expect("nonempty")).collect();
            add_histogram(&mut files, "density_largest_emerging", &top_em, bins, emerging_range(&top_em), 1.0, None)?;
        }
    }

    let overlap: Vec<OverlapRow> = samples.iter().flat_map(|s| s.overlap.iter().cloned()).collect();
    if let CorrelationKind::BlockDiagonal { blocks } = &kind {
        if !overlap.is_empty() {
            files.insert("overlap.csv".to_string(), overlap_csv(&overlap, blocks.len()));
            let concentrated = overlap
                .iter()
                .map(|r| r.fractions.iter().cloned().fold(0.0, f64::max))
                .collect::<Vec<_>>();
            summary["overlap_max_block_fraction"] = json!(stat(&concentrated));
        }
    }
    Ok(Artifacts { files, summary })
}

// ---------------------------------------------------------------------------

fn theory_table(config: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let n = config.n_series();
    let alpha = config.alpha();
    let c = match config.xi {
        Some(CorrelationKind::OneBlock { c }) => Some(c),
        _ => None,
    };
    let mut rows = Vec::new();
    for t in config.horizons() {
        let kappa = t as f64 / n as f64;
        let mut push = |quantity, c, value| {
            rows.push(TheoryRow {
                quantity,
                horizon: t,
                n_series: n,
                kappa,
                c,
                alpha,
                value,
            })
        };
        let m1 = delta_m1_exact(t, alpha);
        let m2 = delta_m2_exact(t, n, alpha);
        let (a1, a2) = delta_m_asymptotic(t, kappa, alpha);
        let p = ansatz_asymptotic(t, alpha);
        push("delta_m1_exact", None, m1);
        push("delta_m2_exact", None, m2);
        push("delta_m1_asymptotic", None, a1);
        push("delta_m2_asymptotic", None, a2);
        push("s_asymptotic", None, p.s);
        push("r_asymptotic", None, p.r);
        if kappa < 1.0 {
            let (e1, e2) = emerging_moments(p.s, kappa);
            let (b1, b2) = bulk_moment_extrapolation(m1, m2, p.s, kappa);
            push("emerging_m1", None, e1);
            push("emerging_m2", None, e2);
            push("bulk_m1", None, b1);
            push("bulk_m2", None, b2);
        }
        if let Some(c) = c {
            let (o1, o2) = oneblock_delta_moments(t, kappa, c, alpha);
            push("oneblock_delta_m1", Some(c), o1);
            push("oneblock_delta_m2", Some(c), o2);
            if kappa < 1.0 {
                if let Ok(a) = oneblock_ansatz(o1, o2, c, kappa) {
                    push("oneblock_bulk_m1", Some(c), a.bulk.0);
                    push("oneblock_bulk_m2", Some(c), a.bulk.1);
                }
            }
            if let Some(pos) = separated_position(n, kappa, c) {
                push("separated_position", Some(c), pos);
            }
        }
    }
    let mut files = BTreeMap::new();
    files.insert("theory_table.csv".to_string(), theory_table_csv(&rows));
    Ok(Artifacts {
        files,
        summary: json!({ "experiment": "theory-table", "rows": rows.len() }),
    })
}

fn portfolio(config: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let model =
        PortfolioModel::with_random_volatilities(&config.portfolio_blocks(), config.volatility_range(), config.master_seed())?;
    let sweep = run_sweep(
        &model,
        &config.horizons(),
        &config.q_grid(),
        config.realizations(),
        config.master_seed(),
    )?;
    let mut files = BTreeMap::new();
    files.insert("portfolio.csv".to_string(), portfolio_csv(&sweep));
    Ok(Artifacts {
        files,
        summary: json!({
            "experiment": "portfolio",
            "volatilities": model.volatilities,
            "blocks": model.blocks,
            "optimal_variance": sweep.optimal_variance,
            "homogeneous_ratio": sweep.homogeneous_ratio,
        }),
    })
}
