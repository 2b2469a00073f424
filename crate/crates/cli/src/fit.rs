use ega_core::baselines::{
    bic_select, ebic_select, kaiser_rule_with, map_select, parallel_analysis_with, vss_select, Method,
    RetentionEstimate,
};
use ega_core::correlation::correlate;
use ega_core::ega::{correlation_for, ega, EgaOptions, EgaResult};
use ega_core::{CorrelationKind, CorrelationMatrix};
use serde::Serialize;

use crate::args::{FitArgs, MethodOptions};
use crate::error::{CliError, Result};
use crate::io::{csv_text, exact, read_dataset, write_json, write_text, Table};

#[derive(Debug, Serialize)]
pub struct DimVariableReport {
    pub item: String,
    pub index: usize,
    pub dimension: usize,
}

#[derive(Debug, Serialize)]
pub struct EgaReport {
    pub method: Method,
    pub n_obs: usize,
    pub n_items: usize,
    pub correlation: CorrelationKind,
    pub ndim: usize,
    pub selected_lambda: f64,
    pub ebic: f64,
    pub n_edges: usize,
    pub dim_variables: Vec<DimVariableReport>,
}

#[derive(Debug, Serialize)]
pub struct RetentionReport {
    pub method: Method,
    pub n_obs: usize,
    pub n_items: usize,
    pub correlation: CorrelationKind,
    pub k_hat: usize,
    /// Per-k values (k = 1, 2, ...) or, for the eigenvalue rules, the
    /// descending observed eigenvalues.
    pub statistics: Vec<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
}

pub fn run(a: &FitArgs) -> Result<()> {
    validate(&a.options)?;
    if a.edges.is_some() && a.method != Method::Ega {
        return Err(CliError::Input("--edges is only meaningful with --method ega".into()));
    }
    let table = read_dataset(&a.data)?;
    match a.method {
        Method::Ega => {
            let result = run_ega(&table, &a.options)?;
            let report = ega_report(&table, &result);
            if let Some(path) = &a.edges {
                write_text(Some(path), &edge_list(&table.names, &result))?;
            }
            write_json(a.output.as_deref(), &report)
        }
        m => {
            let (kind, est) = retention(&table, m, &a.options)?;
            write_json(a.output.as_deref(), &retention_report(&table, kind, est))
        }
    }
}

pub fn validate(o: &MethodOptions) -> Result<()> {
    if !(o.gamma >= 0.0) || !o.gamma.is_finite() {
        return Err(CliError::Input(format!(
            "--gamma must be a non-negative number, got {}",
            o.gamma
        )));
    }
    if o.steps == 0 || o.kmax == 0 || o.pa_iterations == 0 {
        return Err(CliError::Input(
            "--steps, --kmax and --pa-iterations must be at least 1".into(),
        ));
    }
    if o.n_lambda < 2 {
        return Err(CliError::Input("--n-lambda must be at least 2".into()));
    }
    Ok(())
}

pub fn ega_options(o: &MethodOptions) -> EgaOptions {
    EgaOptions {
        gamma: o.gamma,
        steps: o.steps,
        n_lambda: o.n_lambda,
        correlation: o.correlation.into(),
    }
}

pub fn run_ega(table: &Table, o: &MethodOptions) -> Result<EgaResult> {
    ega(&table.data, &ega_options(o)).map_err(|e| CliError::with_names(e, &table.names))
}

pub fn ega_report(table: &Table, r: &EgaResult) -> EgaReport {
    EgaReport {
        method: Method::Ega,
        n_obs: table.data.n_obs(),
        n_items: table.data.n_items(),
        correlation: r.correlation.kind(),
        ndim: r.ndim,
        selected_lambda: r.network.selected_lambda,
        ebic: r.network.ebic,
        n_edges: r.network.edges.len(),
        dim_variables: r
            .dim_variables
            .iter()
            .map(|d| DimVariableReport {
                item: table.names[d.item].clone(),
                index: d.item,
                dimension: d.dimension,
            })
            .collect(),
    }
}

pub fn edge_list(names: &[String], r: &EgaResult) -> String {
    let rows: Vec<Vec<String>> = r
        .network
        .edges
        .iter()
        .map(|&(i, j)| vec![names[i].clone(), names[j].clone(), exact(r.network.weights[(i, j)])])
        .collect();
    csv_text(&["item_i", "item_j", "weight"], &rows)
}

/// Correlation matrix used by VSS, MAP, BIC and EBIC.
pub fn factor_correlation(table: &Table, o: &MethodOptions) -> Result<CorrelationMatrix> {
    correlation_for(&table.data, o.factor_correlation.into()).map_err(|e| CliError::with_names(e, &table.names))
}

pub fn eigen_correlation(table: &Table) -> Result<CorrelationMatrix> {
    correlate(&table.data).map_err(|e| CliError::with_names(e, &table.names))
}

/// One retention method; returns the correlation kind it used.
pub fn retention(table: &Table, m: Method, o: &MethodOptions) -> Result<(CorrelationKind, RetentionEstimate)> {
    let n = table.data.n_obs();
    let named = |e| CliError::with_names(e, &table.names);
    let out = match m {
        Method::Pa => {
            let kind = eigen_correlation(table)?.kind();
            let est =
                parallel_analysis_with(&table.data, o.pa_iterations, o.seed, o.eigen_basis.into()).map_err(named)?;
            (kind, est)
        }
        Method::Kaiser => {
            let r = eigen_correlation(table)?;
            (r.kind(), kaiser_rule_with(&r, o.eigen_basis.into()).map_err(named)?)
        }
        Method::Vss | Method::Map | Method::Bic | Method::Ebic => {
            let r = factor_correlation(table, o)?;
            let est = match m {
                Method::Vss => vss_select(&r, n, o.kmax),
                Method::Map => map_select(&r, o.kmax),
                Method::Bic => bic_select(&r, n, o.kmax),
                _ => ebic_select(&r, n, o.kmax, o.gamma),
            }
            .map_err(named)?;
            (r.kind(), est)
        }
        Method::Ega => unreachable!("EGA is not a retention rule"),
    };
    Ok(out)
}

pub fn retention_report(table: &Table, kind: CorrelationKind, est: RetentionEstimate) -> RetentionReport {
    let eigen = matches!(est.method, Method::Pa | Method::Kaiser);
    RetentionReport {
        method: est.method,
        n_obs: table.data.n_obs(),
        n_items: table.data.n_items(),
        correlation: kind,
        k_hat: est.k_hat,
        statistics: est.statistics.iter().map(|v| v.is_finite().then_some(*v)).collect(),
        observed: eigen.then(|| est.statistics.clone()),
        reference: est.reference,
    }
}
