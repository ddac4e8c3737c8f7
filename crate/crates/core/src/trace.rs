//! Smoothed spectral staircase from a length spectrum via the trace formula.
//!
//! Wavenumbers are passed as `p² = k² - 1`, which is negative for
//! supercurvature modes (`k < 1`), so every function is even in `p` by
//! construction.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::specfun::{erf, erf_inv, erfc, gamma, hyp1f1_scaled};
use crate::spectrum::LengthSpectrum;

/// The Gaussian factor of the smoothed integrand is dropped beyond
/// `|q² - p²| = TRUNCATION ε²`.
pub const TRUNCATION: f64 = 8.0;

/// Step of the default eigenvalue search grid.
pub const DEFAULT_K_STEP: f64 = 0.01;

/// Piecewise smoothing width `ε(k)`: quadratic below `k = 1`, `s√k + e` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingSchedule {
    pub low: [f64; 3],
    pub high: [f64; 2],
}

impl Default for SmoothingSchedule {
    /// Tuned for spectra cut at `l = 7`.
    fn default() -> Self {
        Self {
            low: [0.116, 0.184, 1.2],
            high: [0.832, 0.668],
        }
    }
}

impl SmoothingSchedule {
    pub fn new(low: [f64; 3], high: [f64; 2]) -> Result<Self> {
        let s = Self { low, high };
        // Both branches are monotone for non-negative coefficients, so checking
        // the endpoints covers k ≥ 0.
        if !(s.eps(0.0) > 0.0 && s.eps(1.0) > 0.0 && low[2] > 0.0 && high[0] >= 0.0) {
            return Err(Error::domain("smoothing width must stay positive on k >= 0"));
        }
        Ok(s)
    }

    pub fn eps(&self, k: f64) -> f64 {
        if k < 1.0 {
            let [c2, c1, c0] = self.low;
            (c2 * k + c1) * k + c0
        } else {
            let [s, e] = self.high;
            s * k.sqrt() + e
        }
    }
}

pub fn epsilon_schedule(k: f64, sched: &SmoothingSchedule) -> f64 {
    sched.eps(k)
}

/// `p² = k² - 1`.
pub fn p_sq_of_k(k: f64) -> f64 {
    k * k - 1.0
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain(format!("smoothing width {eps} must be positive")));
    }
    Ok(())
}

/// `½(1 - erf((p'² - p²)/ε²))`, a smoothed step `θ(p² - p'²)`.
pub fn smoothing_h(p_prime_sq: f64, p_sq: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(0.5 * erfc((p_prime_sq - p_sq) / (eps * eps)))
}

/// Contribution of the identity class, `-v/(2π) h̃''(0)`, in closed form
/// through Γ and ₁F₁.
pub fn zero_length_term(p_sq: f64, eps: f64, volume: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(volume > 0.0) {
        return Err(Error::domain("volume must be positive"));
    }
    let e2 = eps * eps;
    let x = (p_sq / e2).powi(2);
    let g34 = gamma(0.75)?;
    let first = (2f64.sqrt() * PI / 4.0) / g34 * hyp1f1_scaled(1.25, 0.5, x)?;
    let second = 1.5 * p_sq / e2 * g34 * hyp1f1_scaled(1.75, 1.5, x)?;
    Ok(volume * eps * e2 / (12.0 * PI.powf(2.5)) * (first + second))
}

/// Leading Weyl term `v/(6π²) |p²|^{3/2}`.
pub fn weyl_average(p_sq: f64, volume: f64) -> f64 {
    volume / (6.0 * PI * PI) * p_sq.abs().powf(1.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtildeMode {
    Quadrature,
    /// Long-orbit approximation `sin(pl)/(πl) · exp(-ε⁴l²/(16p²))`; real `p > 0` only.
    StationaryPhase,
}

fn q_range(p_sq: f64, eps: f64) -> (f64, f64) {
    let w = TRUNCATION * eps * eps;
    ((p_sq - w).max(0.0).sqrt(), (p_sq + w).max(0.0).sqrt())
}

/// Fourier transform of the smoothing function entering the orbit sum.
pub fn htilde(l: f64, p_sq: f64, eps: f64, mode: HtildeMode) -> Result<f64> {
    match mode {
        HtildeMode::Quadrature => htilde_quadrature(l, p_sq, eps, 1e-13).map(|(v, _)| v),
        HtildeMode::StationaryPhase => {
            check_eps(eps)?;
            if !(l > 0.0) {
                return Err(Error::domain("orbit length must be positive"));
            }
            if !(p_sq > 0.0) {
                return Err(Error::Mode("stationary-phase htilde"));
            }
            let p = p_sq.sqrt();
            let e4 = eps.powi(4);
            Ok((p * l).sin() / (PI * l) * (-e4 * l * l / (16.0 * p_sq)).exp())
        }
    }
}

/// `(2/(l ε² π^{3/2})) ∫ q exp(-(q²-p²)²/ε⁴) sin(ql) dq` by double-exponential
/// quadrature on sub-intervals; returns the value and an error estimate.
///
/// `tol` is an absolute target on the unnormalised integral.
pub fn htilde_quadrature(l: f64, p_sq: f64, eps: f64, tol: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if !(l > 0.0) {
        return Err(Error::domain("orbit length must be positive"));
    }
    let (lo, hi) = q_range(p_sq, eps);
    let e4 = eps.powi(4);
    let f = |q: f64| {
        let t = q * q - p_sq;
        q * (-t * t / e4).exp() * (q * l).sin()
    };
    let pieces = ((hi - lo) / 0.5).ceil().max(1.0) as usize;
    let width = (hi - lo) / pieces as f64;
    let (mut value, mut err) = (0.0, 0.0);
    for i in 0..pieces {
        let a = lo + i as f64 * width;
        // Aim below the target: the level-difference estimate is optimistic
        // once the rule has converged, so the target itself is reported.
        let out = quadrature::integrate(f, a, a + width, tol / (4.0 * pieces as f64));
        value += out.integral;
        err += out.error_estimate;
    }
    let pre = 2.0 / (l * eps * eps * PI.powf(1.5));
    Ok((pre * value, pre * err.max(tol)))
}

/// Orbit-sum tail beyond `l_cut` estimated from the long-orbit envelope,
/// with geodesics counted at the asymptotic density.
pub fn truncation_tail(p_sq: f64, eps: f64, l_cut: f64) -> f64 {
    if !(p_sq > 0.0) {
        return 0.0;
    }
    let c = eps.powi(4) / (16.0 * p_sq);
    // Each orientation of each geodesic of length l carries weight ~ l e^{-l}
    // against a density e^{2l}/l, times the envelope e^{-c l²}/(πl).
    let f = |l: f64| 2.0 * (l - c * l * l).exp() / (PI * l * l);
    let peak = (1.0 / (2.0 * c)).max(l_cut);
    if peak - c * peak * peak > 700.0 {
        return f64::INFINITY;
    }
    let end = peak + 40.0 / (2.0 * c).sqrt().max(1e-3) + 40.0;
    quadrature::integrate(f, l_cut, end, 1e-10).integral
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaircaseOptions {
    pub mode: HtildeMode,
    /// Grid points whose truncation tail exceeds this get a resolution warning.
    pub warn_tail: f64,
}

impl Default for StaircaseOptions {
    fn default() -> Self {
        Self {
            mode: HtildeMode::Quadrature,
            warn_tail: 0.25,
        }
    }
}

const PANEL_WIDTH: f64 = 0.25;
const PANEL_NODES: usize = 16;

/// Evaluates the smoothed staircase at arbitrary `k` for one spectrum.
///
/// The orbit sum is exchanged with the `q` integral: the sum
/// `S(q) = Σ w_j sin(q l_j)/l_j` is tabulated once on fixed Gauss–Legendre
/// panels and each `k` integrates it against the smoothing kernel.
#[derive(Debug, Clone)]
pub struct PosmModel {
    volume: f64,
    l_cut: f64,
    sched: SmoothingSchedule,
    opts: StaircaseOptions,
    orbits: Vec<(f64, f64)>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    s_of_q: Vec<f64>,
}

impl PosmModel {
    /// Prepare for evaluation at `k ≤ k_max`.
    pub fn new(
        spec: &LengthSpectrum,
        volume: f64,
        sched: &SmoothingSchedule,
        k_max: f64,
        opts: &StaircaseOptions,
    ) -> Result<Self> {
        if !(volume > 0.0) {
            return Err(Error::domain("volume must be positive"));
        }
        let orbits: Vec<(f64, f64)> = spec
            .classes()
            .iter()
            .map(|c| {
                let cl = c.length;
                let w = c.multiplicity as f64 * c.topology.orientations() * c.primitive_length
                    / (2.0 * (cl.length.cosh() - cl.phase.cos()));
                (w, cl.length)
            })
            .collect();

        let k_max = k_max.max(1.0);
        let (_, q_max) = q_range(p_sq_of_k(k_max), sched.eps(k_max).max(sched.eps(0.0)));
        let n_panels = (q_max / PANEL_WIDTH).ceil() as usize + 1;
        let rule = GaussLegendre::new(PANEL_NODES.try_into().expect("non-zero node count"));
        let mut nodes = Vec::with_capacity(n_panels * PANEL_NODES);
        let mut weights = Vec::with_capacity(n_panels * PANEL_NODES);
        for i in 0..n_panels {
            let a = i as f64 * PANEL_WIDTH;
            for (x, w) in rule.iter() {
                nodes.push(a + (x + 1.0) * PANEL_WIDTH / 2.0);
                weights.push(w * PANEL_WIDTH / 2.0);
            }
        }
        let s_of_q = nodes
            .par_iter()
            .map(|&q| orbits.iter().map(|&(w, l)| w * (q * l).sin() / l).sum())
            .collect();
        Ok(Self {
            volume,
            l_cut: spec.cutoff(),
            sched: *sched,
            opts: *opts,
            orbits,
            nodes,
            weights,
            s_of_q,
        })
    }

    pub fn eps(&self, k: f64) -> f64 {
        self.sched.eps(k)
    }

    pub fn average(&self, k: f64) -> Result<f64> {
        zero_length_term(p_sq_of_k(k), self.eps(k), self.volume)
    }

    pub fn oscillating(&self, k: f64) -> Result<f64> {
        let p_sq = p_sq_of_k(k);
        let eps = self.eps(k);
        if self.opts.mode == HtildeMode::StationaryPhase && p_sq > 0.0 {
            let mut sum = 0.0;
            for &(w, l) in &self.orbits {
                sum += w * htilde(l, p_sq, eps, HtildeMode::StationaryPhase)?;
            }
            return Ok(sum);
        }
        let (lo, hi) = q_range(p_sq, eps);
        let first = ((lo / PANEL_WIDTH).floor() as usize) * PANEL_NODES;
        let last = (((hi / PANEL_WIDTH).ceil() as usize) * PANEL_NODES).min(self.nodes.len());
        if hi > self.nodes.len() as f64 / PANEL_NODES as f64 * PANEL_WIDTH {
            return Err(Error::domain(format!("k = {k} beyond the prepared range")));
        }
        let e4 = eps.powi(4);
        let mut sum = 0.0;
        for i in first..last {
            let q = self.nodes[i];
            let t = q * q - p_sq;
            sum += self.weights[i] * q * (-t * t / e4).exp() * self.s_of_q[i];
        }
        Ok(2.0 / (eps * eps * PI.powf(1.5)) * sum)
    }

    pub fn total(&self, k: f64) -> Result<f64> {
        Ok(self.average(k)? + self.oscillating(k)?)
    }

    pub fn tail(&self, k: f64) -> f64 {
        truncation_tail(p_sq_of_k(k), self.eps(k), self.l_cut)
    }

    /// Sample the staircase on a grid.
    pub fn sample(&self, k_grid: &[f64]) -> Result<SpectralStaircase> {
        if k_grid.windows(2).any(|w| !(w[1] > w[0])) || k_grid.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::domain("k grid must be non-negative and ascending"));
        }
        let rows: Vec<Result<(f64, f64, f64, f64)>> = k_grid
            .par_iter()
            .map(|&k| Ok((self.eps(k), self.average(k)?, self.oscillating(k)?, self.tail(k))))
            .collect();
        let mut st = SpectralStaircase {
            k: k_grid.to_vec(),
            eps: Vec::with_capacity(k_grid.len()),
            average: Vec::with_capacity(k_grid.len()),
            oscillating: Vec::with_capacity(k_grid.len()),
            tail: Vec::with_capacity(k_grid.len()),
            warn_tail: self.opts.warn_tail,
            l_cut: self.l_cut,
            volume: self.volume,
            schedule: self.sched,
        };
        for row in rows {
            let (e, a, o, t) = row?;
            st.eps.push(e);
            st.average.push(a);
            st.oscillating.push(o);
            st.tail.push(t);
        }
        Ok(st)
    }
}

/// Sampled smoothed counting function `N(k²)`, zero mode included.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStaircase {
    pub k: Vec<f64>,
    pub eps: Vec<f64>,
    pub average: Vec<f64>,
    pub oscillating: Vec<f64>,
    /// Estimated orbit-sum truncation error at each grid point.
    pub tail: Vec<f64>,
    pub warn_tail: f64,
    pub l_cut: f64,
    pub volume: f64,
    pub schedule: SmoothingSchedule,
}

impl SpectralStaircase {
    /// A staircase from precomputed parts, e.g. a synthetic counting function.
    pub fn from_parts(k: Vec<f64>, eps: Vec<f64>, average: Vec<f64>, oscillating: Vec<f64>) -> Result<Self> {
        let n = k.len();
        if eps.len() != n || average.len() != n || oscillating.len() != n {
            return Err(Error::domain("staircase columns differ in length"));
        }
        Ok(Self {
            k,
            eps,
            average,
            oscillating,
            tail: vec![0.0; n],
            warn_tail: f64::INFINITY,
            l_cut: f64::INFINITY,
            volume: f64::NAN,
            schedule: SmoothingSchedule::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.average[i] + self.oscillating[i]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Grid points where orbits beyond the cutoff may matter.
    pub fn warnings(&self) -> Vec<f64> {
        self.k
            .iter()
            .zip(&self.tail)
            .filter(|(_, t)| **t > self.warn_tail)
            .map(|(k, _)| *k)
            .collect()
    }
}

/// Uniform grid `k_min, k_min + step, ...` up to and including `k_max`.
pub fn k_grid(k_min: f64, k_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(k_max >= k_min) || !(k_min >= 0.0) {
        return Err(Error::domain("k grid needs 0 <= k_min <= k_max and step > 0"));
    }
    let n = ((k_max - k_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| k_min + i as f64 * step).collect())
}

/// The smoothed staircase on `k_grid` with default options.
pub fn staircase_posm(
    spec: &LengthSpectrum,
    volume: f64,
    k_grid: &[f64],
    sched: &SmoothingSchedule,
) -> Result<SpectralStaircase> {
    staircase_posm_with(spec, volume, k_grid, sched, &StaircaseOptions::default())
}

pub fn staircase_posm_with(
    spec: &LengthSpectrum,
    volume: f64,
    k_grid: &[f64],
    sched: &SmoothingSchedule,
    opts: &StaircaseOptions,
) -> Result<SpectralStaircase> {
    let k_max = k_grid.last().copied().unwrap_or(1.0);
    PosmModel::new(spec, volume, sched, k_max, opts)?.sample(k_grid)
}

/// How the eigenvalue precision depends on the assumed multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecisionRule {
    /// Half-height rule (erf level ½) up to multiplicity 2, and erf argument
    /// 0.8 for multiplicities 3 to 6.
    Calibrated,
    /// The outermost sub-step of an `m`-fold step: erf level `1 - 1/m`.
    HalfStep,
    /// Fixed erf argument `A` in `(k+Δk)² - k² = A ε²`.
    ErfArgument(f64),
}

impl PrecisionRule {
    pub fn erf_argument(self, multiplicity: u32) -> f64 {
        match self {
            PrecisionRule::Calibrated if multiplicity <= 2 => erf_inv(0.5).unwrap_or(0.476_936_276_204_47),
            PrecisionRule::Calibrated => 0.8,
            PrecisionRule::HalfStep => {
                let level = if multiplicity <= 2 {
                    0.5
                } else {
                    1.0 - 1.0 / multiplicity as f64
                };
                erf_inv(level).unwrap_or(f64::INFINITY)
            }
            PrecisionRule::ErfArgument(a) => a,
        }
    }

    pub fn erf_level(self, multiplicity: u32) -> f64 {
        erf(self.erf_argument(multiplicity))
    }
}

/// Expected deviation `Δk` of an eigenvalue read off the smoothed staircase.
pub fn precision_estimate(k: f64, eps: f64, multiplicity: u32) -> f64 {
    precision_estimate_with(k, eps, multiplicity, PrecisionRule::Calibrated)
}

pub fn precision_estimate_with(k: f64, eps: f64, multiplicity: u32, rule: PrecisionRule) -> f64 {
    let a = rule.erf_argument(multiplicity.max(1));
    (k * k + a * eps * eps).sqrt() - k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub k: f64,
    pub delta_k: f64,
    /// Number of integer levels crossed inside one grid bracket.
    pub multiplicity: u32,
    /// The staircase crossed this level more than once.
    pub ambiguous: bool,
}

/// Non-zero eigenvalues in ascending order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EigenvalueList {
    pub entries: Vec<Eigenvalue>,
}

impl EigenvalueList {
    pub fn ks(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.k).collect()
    }

    /// Wavenumbers with each repeated entry expanded by its multiplicity.
    pub fn ks_with_multiplicity(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat(e.k).take(e.multiplicity as usize))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub assumed_multiplicity: u32,
    pub rule: PrecisionRule,
    pub k_tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            assumed_multiplicity: 2,
            rule: PrecisionRule::Calibrated,
            k_tol: 1e-6,
        }
    }
}

/// Eigenvalues where `N(k²) - ½` reaches each positive integer.
///
/// Crossings are bracketed on the staircase grid and refined by bisection on
/// `refine` when given (the exact staircase), otherwise on the linear
/// interpolant of the grid.
pub fn extract_eigenvalues(
    stair: &SpectralStaircase,
    sched: &SmoothingSchedule,
    refine: Option<&(dyn Fn(f64) -> f64 + Sync)>,
    opts: &ExtractOptions,
) -> EigenvalueList {
    let f: Vec<f64> = stair.values().iter().map(|v| v - 0.5).collect();
    // (level, bracket index, upward)
    let mut crossings: Vec<(i64, usize, bool)> = Vec::new();
    for j in 0..f.len().saturating_sub(1) {
        let (a, b) = (f[j], f[j + 1]);
        if b > a {
            let lo = (a.floor() as i64 + 1).max(1);
            for n in lo..=b.floor() as i64 {
                crossings.push((n, j, true));
            }
        } else if a > b {
            let lo = (b.floor() as i64 + 1).max(1);
            for n in lo..=a.floor() as i64 {
                crossings.push((n, j, false));
            }
        }
    }
    crossings.sort();

    // First upward crossing per level, plus an ambiguity flag.
    let mut levels: Vec<(i64, usize, bool)> = Vec::new();
    let mut i = 0;
    while i < crossings.len() {
        let n = crossings[i].0;
        let mut end = i;
        while end < crossings.len() && crossings[end].0 == n {
            end += 1;
        }
        if let Some(&(_, j, _)) = crossings[i..end].iter().find(|c| c.2) {
            levels.push((n, j, end - i > 1));
        }
        i = end;
    }

    let ks = &stair.k;
    let interp = |j: usize, k: f64| {
        let t = (k - ks[j]) / (ks[j + 1] - ks[j]);
        f[j] + t * (f[j + 1] - f[j]) + 0.5
    };
    let solved: Vec<(f64, usize, bool)> = levels
        .par_iter()
        .map(|&(n, j, amb)| {
            let target = n as f64 + 0.5;
            let eval = |k: f64| match refine {
                Some(g) => g(k),
                None => interp(j, k),
            };
            let (mut lo, mut hi) = (ks[j], ks[j + 1]);
            let (mut flo, fhi) = (eval(lo) - target, eval(hi) - target);
            // The exact function may disagree with the grid at the ends.
            if flo.signum() == fhi.signum() {
                lo = ks[j];
                hi = ks[j + 1];
                flo = f[j] + 0.5 - target;
                let t = -flo / (f[j + 1] - f[j]);
                return (lo + t * (hi - lo), j, amb);
            }
            while hi - lo > opts.k_tol {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid) - target;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            (0.5 * (lo + hi), j, amb)
        })
        .collect();

    // Levels crossed within one bracket form one repeated eigenvalue.
    let mut entries: Vec<Eigenvalue> = Vec::new();
    let mut last_bracket = usize::MAX;
    for (k, j, amb) in solved {
        match entries.last_mut() {
            Some(e) if j == last_bracket => {
                let m = e.multiplicity as f64;
                e.k = (e.k * m + k) / (m + 1.0);
                e.multiplicity += 1;
                e.ambiguous |= amb;
            }
            _ => entries.push(Eigenvalue {
                k,
                delta_k: 0.0,
                multiplicity: 1,
                ambiguous: amb,
            }),
        }
        last_bracket = j;
    }
    entries.sort_by(|a, b| a.k.total_cmp(&b.k));
    let mut merged: Vec<Eigenvalue> = Vec::new();
    for e in entries {
        match merged.last_mut() {
            Some(prev) if e.k <= prev.k + 1e-12 => {
                prev.multiplicity += e.multiplicity;
                prev.ambiguous = true;
            }
            _ => merged.push(e),
        }
    }
    for e in &mut merged {
        let m = e.multiplicity.max(opts.assumed_multiplicity);
        e.delta_k = precision_estimate_with(e.k, sched.eps(e.k), m, opts.rule);
    }
    EigenvalueList { entries: merged }
}

#[cfg(test)]
mod tests;
