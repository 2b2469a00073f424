//! Derivative-free 1-D minimization and a box-constrained quasi-Newton method.

use crate::error::{Error, Result};

/// Brent's method for minimizing a unimodal function on `[a, b]`.
///
/// Returns the abscissa of the minimum. `tol` is an absolute tolerance on x.
pub fn brent_minimize<F>(mut f: F, a: f64, b: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..500 {
        let m = 0.5 * (a + b);
        let tol1 = 1e-12 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            // parabolic fit through x, w, v
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    x
}

#[derive(Debug, Clone, Copy)]
pub struct BoxOptions {
    pub max_iter: usize,
    /// Projected-gradient infinity norm at which we stop.
    pub gtol: f64,
    /// Relative objective decrease at which we stop.
    pub ftol: f64,
}

impl Default for BoxOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            gtol: 1e-7,
            ftol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoxMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Projected BFGS on a box `lower <= x <= upper`.
///
/// `fg` returns the objective and writes the gradient into its second argument.
/// On non-convergence the error's payload is the iteration budget; callers
/// that want the last iterate use [`minimize_box_with_last`].
pub fn minimize_box<F>(fg: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: BoxOptions) -> Result<BoxMinimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    minimize_box_with_last(fg, x0, lower, upper, opts).map_err(|(e, _)| e)
}

pub fn minimize_box_with_last<F>(
    mut fg: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: BoxOptions,
) -> std::result::Result<BoxMinimum, (Error, BoxMinimum)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut x = x0.to_vec();
    project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = fg(&x, &mut g);
    let mut h = identity(n);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iter in 0..opts.max_iter {
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let pg = (0..n)
            .map(|i| ((x[i] - g[i]).clamp(lower[i], upper[i]) - x[i]).abs())
            .fold(0.0f64, f64::max);
        if pg < opts.gtol {
            return Ok(BoxMinimum {
                x,
                value: f,
                iterations: iter,
            });
        }

        let mut d = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>();
            }
        }
        let mut slope: f64 = (0..n).map(|i| d[i] * g[i]).sum();
        if !(slope < 0.0) {
            h = identity(n);
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = (0..n).map(|i| d[i] * g[i]).sum();
        }
        // keep the first trial step inside a sane radius
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if dmax > 0.5 { 0.5 / dmax } else { 1.0 };

        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + alpha * d[i];
            }
            project(&mut x_new);
            let decrease: f64 = (0..n).map(|i| g[i] * (x_new[i] - x[i])).sum();
            f_new = fg(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * decrease.min(0.0) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // no descent possible along the projected direction
            if slope.abs() < opts.gtol.sqrt() || pg < opts.gtol.sqrt() {
                return Ok(BoxMinimum {
                    x,
                    value: f,
                    iterations: iter,
                });
            }
            if h != identity(n) {
                h = identity(n);
                continue;
            }
            return Err((
                Error::NonConvergence {
                    what: "box-constrained line search".into(),
                    iterations: iter,
                },
                BoxMinimum {
                    x,
                    value: f,
                    iterations: iter,
                },
            ));
        }

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            bfgs_update(&mut h, &s, &y, sy);
        }
        let rel = (f - f_new).abs() / f.abs().max(f_new.abs()).max(1e-10);
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        f = f_new;
        if rel < opts.ftol {
            return Ok(BoxMinimum {
                x,
                value: f,
                iterations: iter + 1,
            });
        }
    }
    Err((
        Error::NonConvergence {
            what: "box-constrained quasi-Newton".into(),
            iterations: opts.max_iter,
        },
        BoxMinimum {
            x,
            value: f,
            iterations: opts.max_iter,
        },
    ))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = (0..n).map(|i| y[i] * hy[i]).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let x = brent_minimize(|x| (x - 0.3).powi(2), -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn brent_respects_bounds() {
        let x = brent_minimize(|x| -x, -0.999, 0.999, 1e-10);
        assert!(x <= 0.999 && x > 0.999 - 1e-8);
    }

    #[test]
    fn box_qn_hits_active_bound() {
        // minimum of (x-2)^2 + (y+1)^2 on [0,1]^2 is (1, 0)
        let res = minimize_box(
            |x, g| {
                g[0] = 2.0 * (x[0] - 2.0);
                g[1] = 2.0 * (x[1] + 1.0);
                (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2)
            },
            &[0.5, 0.5],
            &[0.0, 0.0],
            &[1.0, 1.0],
            BoxOptions::default(),
        )
        .unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-12 && res.x[1].abs() < 1e-12);
    }

    #[test]
    fn box_qn_rosenbrock_interior() {
        let res = minimize_box(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            BoxOptions {
                max_iter: 5000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            (res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            res
        );
    }
}
