//! CSV and JSON emission. Reals are written with 17 significant digits in
//! lowercase scientific notation; missing values are empty fields.
//!
//! Column orders:
//! - histograms: `bin_lo,bin_hi,density[,theory]`
//! - moments: `quantity,empirical,stderr,theory,theory_asymptotic,woe_null`
//! - theory table: `quantity,T,N,kappa,c,alpha,value`
//! - portfolio: `method,T,q,mean_ratio,stderr,homogeneous_ratio`
//! - block overlap: `realization,index,eigenvalue,block_0,block_1,...`

use emspec::portfolio::PortfolioSweep;
use emspec::spectral::DensityHistogram;
use serde::Serialize;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn write_rows<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn histogram_csv(h: &DensityHistogram, theory: Option<&[f64]>) -> String {
    let mut header = vec!["bin_lo", "bin_hi", "density"];
    if theory.is_some() {
        header.push("theory");
    }
    write_rows(
        &header,
        (0..h.bins()).map(|i| {
            let mut row = vec![real(h.bin_edges[i]), real(h.bin_edges[i + 1]), real(h.density[i])];
            if let Some(t) = theory {
                row.push(real(t[i]));
            }
            row
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub quantity: &'static str,
    pub empirical: f64,
    pub stderr: f64,
    pub theory: Option<f64>,
    pub theory_asymptotic: Option<f64>,
    pub woe_null: Option<f64>,
}

pub fn moments_csv(rows: &[MomentRow]) -> String {
    write_rows(
        &["quantity", "empirical", "stderr", "theory", "theory_asymptotic", "woe_null"],
        rows.iter().map(|r| {
            vec![
                r.quantity.to_string(),
                real(r.empirical),
                real(r.stderr),
                opt_real(r.theory),
                opt_real(r.theory_asymptotic),
                opt_real(r.woe_null),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub quantity: &'static str,
    pub horizon: usize,
    pub n_series: usize,
    pub kappa: f64,
    pub c: Option<f64>,
    pub alpha: f64,
    pub value: f64,
}

pub fn theory_table_csv(rows: &[TheoryRow]) -> String {
    write_rows(
        &["quantity", "T", "N", "kappa", "c", "alpha", "value"],
        rows.iter().map(|r| {
            vec![
                r.quantity.to_string(),
                r.horizon.to_string(),
                r.n_series.to_string(),
                real(r.kappa),
                opt_real(r.c),
                real(r.alpha),
                real(r.value),
            ]
        }),
    )
}

pub fn portfolio_csv(sweep: &PortfolioSweep) -> String {
    write_rows(
        &["method", "T", "q", "mean_ratio", "stderr", "singular", "homogeneous_ratio"],
        sweep.entries.iter().map(|e| {
            vec![
                e.method.as_str().to_string(),
                e.horizon.to_string(),
                opt_real(e.q),
                opt_real(e.mean_ratio),
                opt_real(e.stderr),
                e.singular.to_string(),
                real(e.homogeneous_ratio),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapRow {
    pub realization: usize,
    pub index: usize,
    pub eigenvalue: f64,
    pub fractions: Vec<f64>,
}

pub fn overlap_csv(rows: &[OverlapRow], blocks: usize) -> String {
    let names: Vec<String> = (0..blocks).map(|b| format!("block_{b}")).collect();
    let mut header = vec!["realization", "index", "eigenvalue"];
    header.extend(names.iter().map(String::as_str));
    write_rows(
        &header,
        rows.iter().map(|r| {
            let mut row = vec![r.realization.to_string(), r.index.to_string(), real(r.eigenvalue)];
            row.extend(r.fractions.iter().map(|&f| real(f)));
            row
        }),
    )
}

/// Parse the reals of one CSV column, mapping empty fields to `None`.
pub fn read_column(csv_text: &str, column: &str) -> Vec<Option<f64>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r
        .headers()
        .expect("header row")
        .iter()
        .position(|h| h == column)
        .unwrap_or_else(|| panic!("no column {column}"));
    r.records()
        .map(|rec| {
            let field = rec.expect("well-formed row")[idx].to_string();
            (!field.is_empty()).then(|| field.parse().expect("real field"))
        })
        .collect()
}
