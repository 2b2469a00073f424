//! Sparse Gaussian graphical models: graphical lasso, a log-spaced
//! regularization path and EBIC model selection.
//!
//! The EBIC of a fitted precision matrix `K` is
//!
//! ```text
//! EBIC = -2 l(K) + |E| ln n + 4 gamma |E| ln p,   l(K) = n/2 (ln det K - tr(S K))
//! ```
//!
//! where `|E|` counts nonzero off-diagonal pairs of `K`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::linalg;

/// Off-diagonal precision entries smaller than this count as zero.
pub const EDGE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionMatrix {
    pub values: DMatrix<f64>,
    pub lambda: f64,
}

impl PrecisionMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Unordered pairs `(i, j)`, `i < j`, with a nonzero precision entry.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.dim();
        let mut out = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if self.values[(i, j)].abs() >= EDGE_EPS {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// `-k_ij / sqrt(k_ii k_jj)` off the diagonal, zero on it.
    pub fn partial_correlations(&self) -> DMatrix<f64> {
        partial_correlations(&self.values)
    }
}

pub fn partial_correlations(k: &DMatrix<f64>) -> DMatrix<f64> {
    let p = k.nrows();
    DMatrix::from_fn(p, p, |i, j| {
        if i == j || k[(i, j)].abs() < EDGE_EPS {
            0.0
        } else {
            -k[(i, j)] / (k[(i, i)] * k[(j, j)]).sqrt()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassoOptions {
    /// Stop when no entry of the covariance estimate moves more than this in a sweep.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GlassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 10_000,
        }
    }
}

/// Solver state carried between fits along a path.
#[derive(Debug, Clone)]
pub struct GlassoState {
    /// Current covariance estimate (inverse of the precision estimate).
    w: DMatrix<f64>,
    /// Column j holds the lasso coefficients regressing item j on the others.
    beta: DMatrix<f64>,
}

/// Graphical lasso with the diagonal left unpenalized.
pub fn glasso(s: &CorrelationMatrix, lambda: f64, opts: GlassoOptions) -> Result<PrecisionMatrix> {
    glasso_warm(s.values(), lambda, opts, None).map(|(k, _)| k)
}

/// Block coordinate descent (one lasso regression per column), optionally
/// warm-started from a previous solution.
pub fn glasso_warm(
    s: &DMatrix<f64>,
    lambda: f64,
    opts: GlassoOptions,
    warm: Option<GlassoState>,
) -> Result<(PrecisionMatrix, GlassoState)> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let p = s.nrows();
    let (mut w, mut beta) = match warm {
        Some(st) if st.w.nrows() == p => (st.w, st.beta),
        _ => (s.clone(), DMatrix::zeros(p, p)),
    };
    for i in 0..p {
        w[(i, i)] = s[(i, i)];
    }
    let inner_tol = opts.tol * 1e-3;

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            lasso_column(&w, s, j, lambda, inner_tol, &mut beta);
            // w12 = W11 beta
            for i in 0..p {
                if i == j {
                    continue;
                }
                let mut v = 0.0;
                for l in 0..p {
                    if l != j {
                        v += w[(i, l)] * beta[(l, j)];
                    }
                }
                max_change = max_change.max((v - w[(i, j)]).abs());
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }

    let k = precision_from_state(&w, &beta);
    if !converged {
        return Err(Error::GlassoNonConvergence {
            lambda,
            iterations: sweeps,
            last_iterate: Box::new(k),
        });
    }
    Ok((PrecisionMatrix { values: k, lambda }, GlassoState { w, beta }))
}

/// Coordinate descent for `min 1/2 b' W11 b - s12' b + lambda |b|_1`.
fn lasso_column(w: &DMatrix<f64>, s: &DMatrix<f64>, j: usize, lambda: f64, tol: f64, beta: &mut DMatrix<f64>) {
    let p = w.nrows();
    for _ in 0..100_000 {
        let mut max_delta = 0.0f64;
        for k in 0..p {
            if k == j {
                continue;
            }
            let mut r = s[(k, j)];
            for l in 0..p {
                if l != j && l != k {
                    r -= w[(k, l)] * beta[(l, j)];
                }
            }
            let new = soft_threshold(r, lambda) / w[(k, k)];
            let delta = new - beta[(k, j)];
            if delta != 0.0 {
                beta[(k, j)] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < tol {
            break;
        }
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn precision_from_state(w: &DMatrix<f64>, beta: &DMatrix<f64>) -> DMatrix<f64> {
    let p = w.nrows();
    let mut k = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut quad = 0.0;
        for i in 0..p {
            if i != j {
                quad += w[(i, j)] * beta[(i, j)];
            }
        }
        let kjj = 1.0 / (w[(j, j)] - quad);
        k[(j, j)] = kjj;
        for i in 0..p {
            if i != j {
                k[(i, j)] = -beta[(i, j)] * kjj;
            }
        }
    }
    linalg::symmetrize(&mut k);
    for i in 0..p {
        for j in 0..p {
            if i != j && k[(i, j)].abs() < EDGE_EPS {
                k[(i, j)] = 0.0;
            }
        }
    }
    k
}

/// Strictly decreasing regularization values.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPath(Vec<f64>);

impl LambdaPath {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub const DEFAULT_N_LAMBDA: usize = 100;
pub const LAMBDA_MIN_RATIO: f64 = 0.01;

/// 100 log-spaced values from `max |s_ij|` down to 1% of it.
pub fn lambda_path(s: &CorrelationMatrix) -> Result<LambdaPath> {
    lambda_path_with(s, DEFAULT_N_LAMBDA, LAMBDA_MIN_RATIO)
}

pub fn lambda_path_with(s: &CorrelationMatrix, n_lambda: usize, min_ratio: f64) -> Result<LambdaPath> {
    if n_lambda < 2 {
        return Err(Error::InvalidInput("lambda path needs at least 2 values".into()));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::InvalidInput("lambda min ratio must lie in (0, 1)".into()));
    }
    let max = s.max_abs_off_diagonal();
    if max <= 0.0 {
        return Err(Error::DegeneratePath);
    }
    let (hi, lo) = (max.ln(), (max * min_ratio).ln());
    let step = (hi - lo) / (n_lambda - 1) as f64;
    let mut values: Vec<f64> = (0..n_lambda).map(|i| (hi - step * i as f64).exp()).collect();
    values[0] = max;
    values[n_lambda - 1] = max * min_ratio;
    Ok(LambdaPath(values))
}

/// Extended BIC of a fitted precision matrix (see module docs).
///
/// Returns `+inf` if `k` is not positive definite.
pub fn ebic_score(k: &PrecisionMatrix, s: &CorrelationMatrix, n: usize, gamma: f64) -> f64 {
    let Ok(log_det) = linalg::log_det_pd(&k.values) else {
        return f64::INFINITY;
    };
    let n_f = n as f64;
    let loglik = n_f / 2.0 * (log_det - linalg::trace_of_product(s.values(), &k.values));
    let edges = k.edges().len() as f64;
    let p = k.dim() as f64;
    -2.0 * loglik + edges * n_f.ln() + 4.0 * gamma * edges * p.ln()
}

/// Partial-correlation network selected by EBIC.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialNetwork {
    /// p x p partial correlations, zero diagonal.
    #[serde(skip)]
    pub weights: DMatrix<f64>,
    pub edges: Vec<(usize, usize)>,
    pub selected_lambda: f64,
    pub ebic: f64,
}

impl PartialNetwork {
    pub fn from_precision(k: &PrecisionMatrix, ebic: f64) -> Self {
        let weights = k.partial_correlations();
        let p = weights.nrows();
        let mut edges = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if weights[(i, j)] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        Self {
            weights,
            edges,
            selected_lambda: k.lambda,
            ebic,
        }
    }

    /// Network with no edges at all.
    pub fn empty(p: usize, ebic: f64) -> Self {
        Self {
            weights: DMatrix::zeros(p, p),
            edges: Vec::new(),
            selected_lambda: 0.0,
            ebic,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbicGlassoOptions {
    pub gamma: f64,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub glasso: GlassoOptions,
}

impl Default for EbicGlassoOptions {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            n_lambda: DEFAULT_N_LAMBDA,
            lambda_min_ratio: LAMBDA_MIN_RATIO,
            glasso: GlassoOptions::default(),
        }
    }
}

/// One fit along the path.
#[derive(Debug, Clone)]
pub struct PathFit {
    pub precision: PrecisionMatrix,
    pub ebic: f64,
}

/// Fits every lambda on the path (largest first, warm-started).
pub fn glasso_path(s: &CorrelationMatrix, n: usize, opts: &EbicGlassoOptions) -> Result<Vec<PathFit>> {
    let path = lambda_path_with(s, opts.n_lambda, opts.lambda_min_ratio)?;
    let mut state = None;
    let mut fits = Vec::with_capacity(path.len());
    for &lambda in path.values() {
        let (k, st) = glasso_warm(s.values(), lambda, opts.glasso, state)?;
        state = Some(st);
        let ebic = ebic_score(&k, s, n, opts.gamma);
        fits.push(PathFit { precision: k, ebic });
    }
    Ok(fits)
}

/// Minimum-EBIC network over the path; ties go to the larger lambda.
///
/// A correlation matrix with no off-diagonal association yields the empty network.
pub fn ebic_glasso(s: &CorrelationMatrix, n: usize, opts: &EbicGlassoOptions) -> Result<PartialNetwork> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    let fits = match glasso_path(s, n, opts) {
        Ok(f) => f,
        Err(Error::DegeneratePath) => {
            let k = PrecisionMatrix {
                values: DMatrix::identity(s.dim(), s.dim()),
                lambda: 0.0,
            };
            return Ok(PartialNetwork::empty(s.dim(), ebic_score(&k, s, n, opts.gamma)));
        }
        Err(e) => return Err(e),
    };
    let mut best = 0;
    for (i, fit) in fits.iter().enumerate() {
        if fit.ebic < fits[best].ebic {
            best = i;
        }
    }
    Ok(PartialNetwork::from_precision(&fits[best].precision, fits[best].ebic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{pearson_matrix, CorrelationKind};
    use crate::datagen::sample_dataset;
    use rand::{Rng, SeedableRng};

    fn random_correlation(p: usize, seed: u64) -> CorrelationMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: DMatrix<f64> = DMatrix::from_fn(p, p + 5, |_, _| rng.random_range(-1.0..1.0));
        let cov = &a * a.transpose() + DMatrix::identity(p, p) * 0.5;
        let d: Vec<f64> = (0..p).map(|i| cov[(i, i)].sqrt()).collect();
        let mut r = DMatrix::from_fn(p, p, |i, j| cov[(i, j)] / (d[i] * d[j]));
        for i in 0..p {
            r[(i, i)] = 1.0;
        }
        linalg::symmetrize(&mut r);
        CorrelationMatrix::new(r, CorrelationKind::Pearson).unwrap()
    }

    #[test]
    fn full_shrinkage_gives_diagonal() {
        let s = random_correlation(6, 1);
        let k = glasso(&s, s.max_abs_off_diagonal(), GlassoOptions::default()).unwrap();
        assert!(k.edges().is_empty());
        for i in 0..6 {
            assert!((k.values[(i, i)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_lambda_matches_direct_inverse() {
        let s = random_correlation(10, 2);
        let k = glasso(&s, 0.0, GlassoOptions::default()).unwrap();
        let inv = linalg::inverse_pd(s.values()).unwrap();
        assert!((&k.values - &inv).amax() < 1e-3, "{}", (&k.values - &inv).amax());
    }

    #[test]
    fn output_is_symmetric_positive_definite() {
        for seed in 0..10 {
            let s = random_correlation(8, seed);
            let lambda = 0.1 * (seed as f64 % 4.0) * s.max_abs_off_diagonal();
            let k = glasso(&s, lambda, GlassoOptions::default()).unwrap();
            assert!(linalg::asymmetry(&k.values) < 1e-8);
            assert!(linalg::cholesky(&k.values).is_ok());
        }
    }

    #[test]
    fn negative_lambda_and_non_convergence() {
        let s = random_correlation(5, 3);
        assert!(glasso(&s, -0.1, GlassoOptions::default()).is_err());
        let tight = GlassoOptions {
            tol: 1e-300,
            max_iter: 2,
        };
        match glasso(&s, 0.05, tight) {
            Err(Error::GlassoNonConvergence { lambda, iterations, .. }) => {
                assert_eq!(lambda, 0.05);
                assert_eq!(iterations, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn path_construction() {
        let s = random_correlation(6, 4);
        let path = lambda_path(&s).unwrap();
        assert_eq!(path.len(), 100);
        assert_eq!(path.values()[0], s.max_abs_off_diagonal());
        assert!((path.values()[99] / path.values()[0] - 0.01).abs() < 1e-12);
        assert!(path.values().windows(2).all(|w| w[0] > w[1]));
        let ident = CorrelationMatrix::new(DMatrix::identity(4, 4), CorrelationKind::Pearson).unwrap();
        assert!(matches!(lambda_path(&ident), Err(Error::DegeneratePath)));
    }

    #[test]
    fn ebic_formula() {
        let s = CorrelationMatrix::new(DMatrix::identity(2, 2), CorrelationKind::Pearson).unwrap();
        let k = PrecisionMatrix {
            values: DMatrix::identity(2, 2),
            lambda: 0.0,
        };
        // by hand: l = 100/2 (0 - 2) = -100, so -2l = 200 and no edge penalty
        assert!((ebic_score(&k, &s, 100, 0.5) - 200.0).abs() < 1e-12);

        let r = random_correlation(5, 8);
        let base = PrecisionMatrix {
            values: DMatrix::identity(5, 5),
            lambda: 0.0,
        };
        let mut one_edge = base.clone();
        // an edge of size ~1e-9 leaves log det and trace unchanged to ~1e-17
        one_edge.values[(0, 1)] = 1e-9;
        one_edge.values[(1, 0)] = 1e-9;
        let (n, gamma) = (250, 0.5);
        let diff = ebic_score(&one_edge, &r, n, gamma) - ebic_score(&base, &r, n, gamma);
        let expected = (n as f64).ln() + 4.0 * gamma * 5f64.ln();
        assert!((diff - expected).abs() < 1e-5, "{diff} vs {expected}");
        let diff0 = ebic_score(&one_edge, &r, n, 0.0) - ebic_score(&base, &r, n, 0.0);
        assert!((diff0 - (n as f64).ln()).abs() < 1e-5);
    }

    #[test]
    fn standardization() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let pc = partial_correlations(&k);
        assert_eq!(pc[(0, 1)], 0.5);
        assert_eq!(pc[(0, 0)], 0.0);
    }

    #[test]
    fn independent_items_give_empty_network() {
        let sigma = DMatrix::identity(6, 6);
        let data = sample_dataset(&sigma, 5000, 17).unwrap();
        let s = pearson_matrix(&data).unwrap();
        let net = ebic_glasso(&s, 5000, &EbicGlassoOptions::default()).unwrap();
        assert!(net.edges.is_empty(), "{:?}", net.edges);
    }

    #[test]
    fn strong_pair_gets_positive_edge() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let data = sample_dataset(&sigma, 5000, 5).unwrap();
        let s = pearson_matrix(&data).unwrap();
        let net = ebic_glasso(&s, 5000, &EbicGlassoOptions::default()).unwrap();
        assert_eq!(net.edges, vec![(0, 1)]);
        assert!(net.weights[(0, 1)] > 0.0);
    }

    /// Stationarity of the penalized likelihood: `W - S = lambda * sign(K)`
    /// on the support, `|W - S| <= lambda` off it.
    fn assert_kkt(k: &DMatrix<f64>, s: &DMatrix<f64>, lambda: f64, tol: f64) {
        let w = linalg::inverse_pd(k).unwrap();
        let p = k.nrows();
        for i in 0..p {
            assert!((w[(i, i)] - s[(i, i)]).abs() < tol, "diagonal {i}");
            for j in 0..p {
                if i == j {
                    continue;
                }
                let g = w[(i, j)] - s[(i, j)];
                if k[(i, j)] != 0.0 {
                    assert!(
                        (g - lambda * k[(i, j)].signum()).abs() < tol,
                        "({i},{j}) active: {g} vs {lambda}"
                    );
                } else {
                    assert!(g.abs() <= lambda + tol, "({i},{j}) inactive: {g} vs {lambda}");
                }
            }
        }
    }

    #[test]
    fn path_solutions_satisfy_optimality_conditions() {
        for seed in 0..3 {
            let s = random_correlation(8, 100 + seed);
            let fits = glasso_path(&s, 300, &EbicGlassoOptions::default()).unwrap();
            for f in &fits {
                assert_kkt(&f.precision.values, s.values(), f.precision.lambda, 2e-3);
            }
        }
    }

    #[test]
    fn edges_can_leave_the_path_as_lambda_falls() {
        // An exact lasso path need not be monotone: here an edge enters and
        // then leaves again as lambda decreases. Both fits are optimal.
        let s = random_correlation(8, 100);
        let opts = EbicGlassoOptions {
            glasso: GlassoOptions {
                tol: 1e-8,
                ..Default::default()
            },
            ..Default::default()
        };
        let fits = glasso_path(&s, 300, &opts).unwrap();
        let counts: Vec<usize> = fits.iter().map(|f| f.precision.edges().len()).collect();
        let drop = counts
            .windows(2)
            .position(|w| w[1] < w[0])
            .expect("a non-monotone step");
        for f in &fits[drop..drop + 2] {
            assert_kkt(&f.precision.values, s.values(), f.precision.lambda, 1e-6);
        }
        // monotone at the coarse end of the path, where the support only grows
        assert!(counts[..60].windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }

    #[test]
    fn sign_pattern_survives_standardization() {
        let s = random_correlation(7, 21);
        let k = glasso(&s, 0.05, GlassoOptions::default()).unwrap();
        let pc = k.partial_correlations();
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    assert_eq!(pc[(i, j)] == 0.0, k.values[(i, j)] == 0.0);
                    if pc[(i, j)] != 0.0 {
                        assert_eq!(pc[(i, j)] > 0.0, k.values[(i, j)] < 0.0);
                    }
                }
            }
        }
    }
}
