//! Classical factor-retention rules: VSS, MAP, BIC and EBIC model selection,
//! parallel analysis and the eigenvalue-greater-than-one rule.

mod efa;
mod eigenvalue;
mod information;
mod map;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use efa::{
    default_start, degrees_of_freedom, fit_efa, fit_efa_from, fit_efa_sequence, n_parameters, varimax, EfaFit,
    HEYWOOD_FLOOR,
};
pub use eigenvalue::{
    kaiser_from_eigenvalues, kaiser_rule, kaiser_rule_with, observed_eigenvalues, pa_from_eigenvalues,
    parallel_analysis, parallel_analysis_with, permute_columns, reference_eigenvalues, EigenBasis,
    DEFAULT_PA_ITERATIONS,
};
pub use information::{
    bic_from_fits, bic_select, ebic_from_fits, ebic_select, vss_from_fits, vss_select, DEFAULT_KMAX,
};
pub use map::map_select;

/// The seven dimensionality estimators compared in the simulation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ega,
    Vss,
    Map,
    Bic,
    Ebic,
    Pa,
    Kaiser,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Ega,
        Method::Vss,
        Method::Map,
        Method::Bic,
        Method::Ebic,
        Method::Pa,
        Method::Kaiser,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ega => "ega",
            Method::Vss => "vss",
            Method::Map => "map",
            Method::Bic => "bic",
            Method::Ebic => "ebic",
            Method::Pa => "pa",
            Method::Kaiser => "kaiser",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| crate::Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

/// A retained-factor count with the per-k diagnostics that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionEstimate {
    pub method: Method,
    pub k_hat: usize,
    /// `statistics[i]` belongs to k = i + 1 (for the eigenvalue rules, the
    /// i-th largest observed eigenvalue).
    pub statistics: Vec<f64>,
    /// Mean null eigenvalues, parallel analysis only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
}

/// Index of the best value, ties to the earliest position. NaN never wins.
pub(crate) fn best_index(values: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if !better(v, values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("scree".parse::<Method>().is_err());
    }

    #[test]
    fn best_index_ties_to_first() {
        assert_eq!(best_index(&[3.0, 1.0, 1.0], |a, b| a < b), Some(1));
        assert_eq!(best_index(&[f64::NAN, 2.0, 5.0, 5.0], |a, b| a > b), Some(2));
        assert_eq!(best_index(&[f64::NAN], |a, b| a > b), None);
    }
}
