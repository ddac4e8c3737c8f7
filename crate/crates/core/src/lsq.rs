//! Gauss–Newton least squares for small curve fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub max_iterations: usize,
    /// Stop when every parameter moves by less than this, relative to its size.
    pub step_tol: f64,
    /// Singular-value ratio below which the design matrix is degenerate.
    pub rank_tol: f64,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-12,
            rank_tol: 1e-12,
        }
    }
}

/// Result of a converged fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    /// One-sigma parameter errors from the covariance matrix.
    pub sigma: Vec<f64>,
    /// Unweighted residuals `y - model(x)`.
    pub residuals: Vec<f64>,
    /// Root mean square of the unweighted residuals with `n - p` dof.
    pub residual_sigma: f64,
    /// `χ²` (weighted) or residual sum of squares (unweighted).
    pub chi2: f64,
    pub iterations: usize,
}

/// Fit `y ≈ model(x, params)`.
///
/// With `sigma` the residuals are weighted by `1/σᵢ` and the covariance is
/// `(JᵀWJ)⁻¹`; without it the covariance is rescaled by the residual
/// variance. The Jacobian is taken by central differences.
pub fn gauss_newton<F>(
    model: F,
    xs: &[f64],
    ys: &[f64],
    sigma: Option<&[f64]>,
    start: &[f64],
    opts: &GaussNewtonOptions,
) -> Result<FitOutcome>
where
    F: Fn(f64, &[f64]) -> f64,
{
    let n = xs.len();
    let p = start.len();
    if ys.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::Fit("mismatched data lengths".into()));
    }
    if n <= p {
        return Err(Error::Fit(format!("{n} points for {p} parameters")));
    }
    let weights: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Fit("sigma must be positive".into()));
            }
            s.iter().map(|v| 1.0 / v).collect()
        }
        None => vec![1.0; n],
    };

    let weighted_residuals = |params: &[f64]| -> DVector<f64> {
        DVector::from_iterator(
            n,
            (0..n).map(|i| (ys[i] - model(xs[i], params)) * weights[i]),
        )
    };
    let jacobian = |params: &[f64]| -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(n, p);
        let mut work = params.to_vec();
        for j in 0..p {
            let h = 1e-6 * params[j].abs().max(1e-3);
            work[j] = params[j] + h;
            let up: Vec<f64> = xs.iter().map(|&x| model(x, &work)).collect();
            work[j] = params[j] - h;
            let down: Vec<f64> = xs.iter().map(|&x| model(x, &work)).collect();
            work[j] = params[j];
            for i in 0..n {
                jac[(i, j)] = (up[i] - down[i]) / (2.0 * h) * weights[i];
            }
        }
        jac
    };

    let mut params = start.to_vec();
    let mut r = weighted_residuals(&params);
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Fit("model is not finite at the starting point".into()));
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&params);
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin < opts.rank_tol * smax {
            return Err(Error::Fit("degenerate design matrix".into()));
        }
        let step = svd
            .solve(&r, 0.0)
            .map_err(|e| Error::Fit(e.to_string()))?;

        // Halve the step until the cost does not increase.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = params
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + scale * s)
                .collect();
            let tr = weighted_residuals(&trial);
            let tc = tr.norm_squared();
            if tc.is_finite() && tc <= cost * (1.0 + 1e-15) {
                accepted = Some((trial, tr, tc));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, tr, tc)) = accepted else {
            converged = true;
            break;
        };
        let small = params
            .iter()
            .zip(trial.iter())
            .all(|(a, b)| (a - b).abs() <= opts.step_tol * a.abs().max(1e-8));
        params = trial;
        r = tr;
        cost = tc;
        if small {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            last: params,
        });
    }

    let jac = jacobian(&params);
    let jtj = jac.transpose() * &jac;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix at solution".into()))?;
    let dof = (n - p) as f64;
    let scale = if sigma.is_some() { 1.0 } else { cost / dof };
    let param_sigma = (0..p).map(|j| (cov[(j, j)] * scale).sqrt()).collect();
    let residuals: Vec<f64> = (0..n).map(|i| ys[i] - model(xs[i], &params)).collect();
    let rss: f64 = residuals.iter().map(|v| v * v).sum();
    Ok(FitOutcome {
        params,
        sigma: param_sigma,
        residual_sigma: (rss / dof).sqrt(),
        residuals,
        chi2: cost,
        iterations,
    })
}
