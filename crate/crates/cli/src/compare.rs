use ega_core::baselines::{
    bic_from_fits, ebic_from_fits, fit_efa_sequence, kaiser_from_eigenvalues, map_select, observed_eigenvalues,
    pa_from_eigenvalues, reference_eigenvalues, vss_from_fits, RetentionEstimate,
};
use ega_core::CorrelationKind;
use serde::Serialize;

use crate::args::CompareArgs;
use crate::error::{CliError, Result};
use crate::fit::{
    ega_report, eigen_correlation, factor_correlation, retention_report, run_ega, validate, EgaReport, RetentionReport,
};
use crate::io::{csv_text, exact, read_dataset, write_json, write_text};

pub const TABLE_COLUMNS: [&str; 7] = ["k", "vss", "map", "bic", "ebic", "observed", "reference"];

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub n_obs: usize,
    pub n_items: usize,
    pub kmax: usize,
    pub ega: EgaReport,
    pub estimates: Vec<RetentionReport>,
}

pub fn run(a: &CompareArgs) -> Result<()> {
    let o = &a.options;
    validate(o)?;
    let table = read_dataset(&a.data)?;
    let named = |e| CliError::with_names(e, &table.names);
    let n = table.data.n_obs();
    let p = table.data.n_items();

    let rf = factor_correlation(&table, o)?;
    let fits = fit_efa_sequence(&rf, o.kmax, n);
    let vss = vss_from_fits(&fits, &rf).map_err(named)?;
    let map = map_select(&rf, o.kmax).map_err(named)?;
    let bic = bic_from_fits(&fits, p, n).map_err(named)?;
    let ebic = ebic_from_fits(&fits, p, n, o.gamma).map_err(named)?;

    let re = eigen_correlation(&table)?;
    let observed = observed_eigenvalues(&re, o.eigen_basis.into()).map_err(named)?;
    let reference = reference_eigenvalues(&table.data, o.pa_iterations, o.seed, o.eigen_basis.into()).map_err(named)?;
    let kaiser = kaiser_from_eigenvalues(observed.clone());
    let pa = pa_from_eigenvalues(observed, reference);

    write_text(
        a.output.as_deref(),
        &table_csv(o.kmax, &vss, &map, &bic, &ebic, &kaiser, &pa),
    )?;

    if let Some(path) = &a.json {
        let ega = run_ega(&table, o)?;
        let with_kind = |kind: CorrelationKind, est: RetentionEstimate| retention_report(&table, kind, est);
        let report = CompareReport {
            n_obs: n,
            n_items: p,
            kmax: o.kmax,
            ega: ega_report(&table, &ega),
            estimates: vec![
                with_kind(rf.kind(), vss),
                with_kind(rf.kind(), map),
                with_kind(rf.kind(), bic),
                with_kind(rf.kind(), ebic),
                with_kind(re.kind(), pa),
                with_kind(re.kind(), kaiser),
            ],
        };
        write_json(Some(path), &report)?;
    }
    Ok(())
}

/// Rows k = 1..kmax of every per-k statistic, then a `k_hat` row. The
/// `observed` column's estimate is the Kaiser rule and `reference`'s is
/// parallel analysis. Values a method does not define are left empty.
pub fn table_csv(
    kmax: usize,
    vss: &RetentionEstimate,
    map: &RetentionEstimate,
    bic: &RetentionEstimate,
    ebic: &RetentionEstimate,
    kaiser: &RetentionEstimate,
    pa: &RetentionEstimate,
) -> String {
    let cell = |v: &[f64], k: usize| v.get(k).map_or(String::new(), |&x| exact(x));
    let reference = pa.reference.as_deref().unwrap_or(&[]);
    let mut rows: Vec<Vec<String>> = (0..kmax)
        .map(|k| {
            vec![
                (k + 1).to_string(),
                cell(&vss.statistics, k),
                cell(&map.statistics, k),
                cell(&bic.statistics, k),
                cell(&ebic.statistics, k),
                cell(&kaiser.statistics, k),
                cell(reference, k),
            ]
        })
        .collect();
    rows.push(
        ["k_hat".to_string()]
            .into_iter()
            .chain([vss, map, bic, ebic, kaiser, pa].map(|e| e.k_hat.to_string()))
            .collect(),
    );
    csv_text(&TABLE_COLUMNS, &rows)
}
