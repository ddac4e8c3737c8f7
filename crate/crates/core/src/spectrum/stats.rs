//! Classical staircase and multiplicity statistics of a length spectrum.

use super::LengthSpectrum;
use crate::error::{Error, Result};
use crate::lsq::{gauss_newton, GaussNewtonOptions};
use crate::specfun::ei;

/// Topological entropy of closed hyperbolic 3-manifolds.
pub const TAU_3D: f64 = 2.0;

/// Default averaging window for ⟨m(l)⟩.
pub const DEFAULT_WINDOW: f64 = 0.2;

/// Default fit range for the multiplicity models.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (3.0, 7.0);

/// Number of primitive geodesics (with multiplicity) of length `≤ l`.
pub fn classical_staircase(spec: &LengthSpectrum, l: f64) -> Result<u64> {
    let cutoff = spec.cutoff();
    if l > cutoff {
        return Err(Error::Range {
            requested: l,
            cutoff,
        });
    }
    Ok(spec
        .classes()
        .iter()
        .filter(|c| c.is_primitive() && c.length.length <= l)
        .map(|c| c.multiplicity as u64)
        .sum())
}

/// `Ei(τ l)`, the asymptotic count of primitive geodesics.
pub fn asymptotic_staircase(l: f64, tau: f64) -> Result<f64> {
    ei(tau * l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMultiplicity {
    pub value: f64,
    /// Number of spectrum entries in the window.
    pub count: usize,
}

impl AveragedMultiplicity {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Mean multiplicity of the primitive entries with `|lᵢ - l| < window/2`.
pub fn averaged_multiplicity(spec: &LengthSpectrum, window: f64, l: f64) -> AveragedMultiplicity {
    let (lo, hi) = (l - window / 2.0, l + window / 2.0);
    let (sum, count) = spec
        .classes()
        .iter()
        .filter(|c| c.is_primitive() && c.length.length > lo && c.length.length < hi)
        .fold((0u64, 0usize), |(s, n), c| (s + c.multiplicity as u64, n + 1));
    AveragedMultiplicity {
        value: if count == 0 { 0.0 } else { sum as f64 / count as f64 },
        count,
    }
}

/// One point of the ⟨m(l)⟩ curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplicitySample {
    pub l: f64,
    pub mean: f64,
    pub sigma: Option<f64>,
}

/// ⟨m(l)⟩ on the grid `lo + window/2, lo + 3 window/2, ...` below `hi`,
/// skipping empty windows.
pub fn multiplicity_samples(spec: &LengthSpectrum, window: f64, lo: f64, hi: f64) -> Vec<MultiplicitySample> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let l = lo + (i as f64 + 0.5) * window;
        if l >= hi {
            break;
        }
        let avg = averaged_multiplicity(spec, window, l);
        if !avg.is_empty() {
            out.push(MultiplicitySample {
                l,
                mean: avg.value,
                sigma: None,
            });
        }
        i += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplicityModel {
    /// `a eˡ / l`
    Arithmetic,
    /// `e^{bl} / (c l)`
    NonArithmetic,
}

impl MultiplicityModel {
    pub fn eval(self, l: f64, params: &[f64]) -> f64 {
        match self {
            MultiplicityModel::Arithmetic => params[0] * l.exp() / l,
            MultiplicityModel::NonArithmetic => (params[0] * l).exp() / (params[1] * l),
        }
    }

    /// Parameter names in the order used by [`MultiplicityFit::params`].
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            MultiplicityModel::Arithmetic => &["a"],
            MultiplicityModel::NonArithmetic => &["b", "c"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityFit {
    pub model: MultiplicityModel,
    pub params: Vec<f64>,
    pub sigma: Vec<f64>,
    pub residual_norm: f64,
    pub residuals: Vec<f64>,
    pub n_samples: usize,
}

impl MultiplicityFit {
    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.params[i])
    }

    pub fn param_sigma(&self, name: &str) -> Option<f64> {
        let i = self.model.param_names().iter().position(|n| *n == name)?;
        Some(self.sigma[i])
    }
}

/// Least-squares fit of ⟨m(l)⟩ on `range.0 < l < range.1`.
///
/// Samples are weighted by their `sigma` when every sample in range has one.
pub fn fit_multiplicity(
    samples: &[MultiplicitySample],
    model: MultiplicityModel,
    range: (f64, f64),
) -> Result<MultiplicityFit> {
    let used: Vec<&MultiplicitySample> = samples
        .iter()
        .filter(|s| s.l > range.0 && s.l < range.1)
        .collect();
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "{} samples in ({}, {}), need at least 3",
            used.len(),
            range.0,
            range.1
        )));
    }
    if used.iter().all(|s| s.mean == 0.0) {
        return Err(Error::Fit("all samples are zero".into()));
    }
    let xs: Vec<f64> = used.iter().map(|s| s.l).collect();
    let ys: Vec<f64> = used.iter().map(|s| s.mean).collect();
    let sig: Option<Vec<f64>> = used.iter().map(|s| s.sigma).collect();

    let start = match model {
        MultiplicityModel::Arithmetic => {
            let (num, den) = xs.iter().zip(&ys).fold((0.0, 0.0), |(n, d), (&l, &y)| {
                let f = l.exp() / l;
                (n + f * y, d + f * f)
            });
            vec![num / den]
        }
        MultiplicityModel::NonArithmetic => {
            // ln(m l) = b l - ln c on the positive samples.
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .zip(&ys)
                .filter(|(_, &y)| y > 0.0)
                .map(|(&l, &y)| (l, (y * l).ln()))
                .collect();
            if pts.len() < 2 {
                return Err(Error::Fit("too few positive samples".into()));
            }
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            if sxx == 0.0 {
                return Err(Error::Fit("degenerate design matrix".into()));
            }
            let b = sxy / sxx;
            vec![b, (b * mx - my).exp()]
        }
    };
    let fit = gauss_newton(
        |l, p| model.eval(l, p),
        &xs,
        &ys,
        sig.as_deref(),
        &start,
        &GaussNewtonOptions::default(),
    )?;
    Ok(MultiplicityFit {
        model,
        residual_norm: fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt(),
        params: fit.params,
        sigma: fit.sigma,
        residuals: fit.residuals,
        n_samples: xs.len(),
    })
}
