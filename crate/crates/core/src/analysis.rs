//! Empirical relations between `k₁`, diameter and volume, and spectral
//! measures of anisotropy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lsq::{gauss_newton, GaussNewtonOptions};
use crate::specfun::gamma;
use crate::spectrum::ManifoldMeta;

/// Best-fit `β` of `k₁(d)` for the census sample and the surgery family.
pub const BETA_CENSUS: f64 = 1.70;
pub const BETA_SURGERY: f64 = 1.73;
/// Best-fit ball radius over diameter in `v(d)`.
pub const ALPHA: f64 = 0.69;
/// Best-fit thin-part parameters of `v(d)` near a cusped manifold.
pub const DELTA: f64 = 0.0;
pub const D0: f64 = 0.25;

fn positive(what: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("{what} = {x} must be positive")));
    }
    Ok(())
}

/// `√(k₁(cusp)² + 4π²/(β²d²))`.
pub fn k1_diameter(d: f64, beta: f64, k1_cusp: f64) -> Result<f64> {
    positive("d", d)?;
    positive("beta", beta)?;
    Ok((k1_cusp * k1_cusp + 4.0 * PI * PI / (beta * beta * d * d)).sqrt())
}

/// Volume of a hyperbolic ball of radius `αd`, `π(sinh 2αd - 2αd)`.
pub fn volume_diameter(d: f64, alpha: f64) -> Result<f64> {
    positive("d", d)?;
    positive("alpha", alpha)?;
    let x = 2.0 * alpha * d;
    // sinh x - x loses everything to cancellation for small x.
    let v = if x < 0.1 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0)))
    } else {
        x.sinh() - x
    };
    Ok(PI * v)
}

/// `v_c (1 - e^{-2(d - d₀)}/(δ + 1))` for a manifold with a thin part.
pub fn thin_volume(d: f64, v_c: f64, delta: f64, d0: f64) -> Result<f64> {
    positive("v_c", v_c)?;
    positive("d0", d0)?;
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("delta = {delta} must be non-negative")));
    }
    if !(d > d0) {
        return Err(Error::domain(format!("d = {d} must exceed d0 = {d0}")));
    }
    Ok(v_c * (1.0 - (-2.0 * (d - d0)).exp() / (delta + 1.0)))
}

/// Diameter with [`thin_volume`] equal to `v`.
pub fn thin_volume_inverse(v: f64, v_c: f64, delta: f64, d0: f64) -> Result<f64> {
    positive("v_c", v_c)?;
    positive("d0", d0)?;
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("delta = {delta} must be non-negative")));
    }
    let gap = (1.0 - v / v_c) * (delta + 1.0);
    if !(gap > 0.0 && gap < 1.0) || !(v > 0.0) {
        return Err(Error::domain(format!("v = {v} outside the range of the thin-part model")));
    }
    Ok(d0 - 0.5 * gap.ln())
}

/// Volume `(Δx)²/2 · (x₃₀⁻² - x₃₁⁻²)` of a vertical box in the upper half-space.
pub fn box_volume(dx: f64, x30: f64, x31: f64) -> Result<f64> {
    positive("dx", dx)?;
    positive("x30", x30)?;
    if !(x31 > x30) {
        return Err(Error::domain("box top must lie above its bottom"));
    }
    Ok(dx * dx / 2.0 * (1.0 / (x30 * x30) - 1.0 / (x31 * x31)))
}

/// Vertical hyperbolic length `ln(x₃₁/x₃₀)` of the same box.
pub fn box_length(x30: f64, x31: f64) -> Result<f64> {
    positive("x30", x30)?;
    positive("x31", x31)?;
    Ok((x31 / x30).ln())
}

/// Wavenumber at which the Weyl count `v/(6π²)(k² - 1)^{3/2}` reaches `i`.
pub fn weyl_k_of_index(i: u64, volume: f64) -> Result<f64> {
    positive("volume", volume)?;
    if i == 0 {
        return Err(Error::domain("index must be at least 1"));
    }
    Ok(((6.0 * PI * PI * i as f64 / volume).powf(2.0 / 3.0) + 1.0).sqrt())
}

/// First wavenumber of the Weyl law in the form `√((9π²/v)^{2/3} + 1)`.
///
/// This is the count `i + ½` at `i = 1`, which is where the smoothed
/// staircase crosses its first level.
pub fn k1_weyl(volume: f64) -> Result<f64> {
    positive("volume", volume)?;
    Ok(((9.0 * PI * PI / volume).powf(2.0 / 3.0) + 1.0).sqrt())
}

/// `k₁` of a manifold near a cusped one, from [`k1_diameter`] and the
/// inverse of [`thin_volume`] with `δ = 0`.
pub fn k1_volume_cusp(v: f64, v_c: f64, beta: f64, k1_cusp: f64, d0: f64) -> Result<f64> {
    positive("v", v)?;
    positive("v_c", v_c)?;
    if !(v < v_c) {
        return Err(Error::domain(format!("v = {v} must be below v_c = {v_c}")));
    }
    let d = d0 - 0.5 * (1.0 - v / v_c).ln();
    positive("beta", beta)?;
    Ok((k1_cusp * k1_cusp + 4.0 * PI * PI / (beta * beta * d * d)).sqrt())
}

/// `π(sinh g - g)` with `g = 4πα/(β√(k₁² - k₁(cusp)²))`.
pub fn volume_k1_iso(k1: f64, alpha: f64, beta: f64, k1_cusp: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    if !(k1 > k1_cusp) {
        return Err(Error::domain(format!("k1 = {k1} must exceed k1_cusp = {k1_cusp}")));
    }
    let g = 4.0 * PI * alpha / (beta * (k1 * k1 - k1_cusp * k1_cusp).sqrt());
    volume_diameter(g / 2.0, 1.0)
}

/// `3 · 4^{-5/6} π^{-2/3}`, the `α/β` that makes [`volume_k1_iso`] agree
/// with the Weyl law at large `k₁`.
pub fn alpha_beta_constraint() -> f64 {
    3.0 * 4f64.powf(-5.0 / 6.0) * PI.powf(-2.0 / 3.0)
}

/// Volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    let h = n as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / (n as f64 * gamma(h)?))
}

/// Weyl count `ωₙ v kⁿ / (2π)ⁿ` in `n` dimensions.
pub fn weyl_count(k: f64, volume: f64, n: u32) -> Result<f64> {
    Ok(unit_ball_volume(n)? * volume * k.powi(n as i32) / (2.0 * PI).powi(n as i32))
}

/// Lower bound on `E₁` from a Ricci bound `-L` (three-term maximum).
pub fn cheng_zhou_lower(d: f64, ricci: f64, n: u32) -> Result<f64> {
    positive("d", d)?;
    let cn = ((n as f64 - 1.0).sqrt()).max(2f64.sqrt());
    let pi2 = PI * PI / (d * d);
    let a = 0.5 * pi2 - 0.25 * ricci;
    let b = (PI.powi(4) / (d * d) + ricci * ricci / 16.0).sqrt() - 0.75 * ricci;
    let c = pi2 * (-cn * (ricci * d * d).sqrt() / 2.0).exp();
    Ok(a.max(b).max(c))
}

/// Lower bound on `E₁` from a Ricci bound `-K` (four-term maximum).
pub fn lu_lower(d: f64, ricci: f64, n: u32) -> Result<f64> {
    positive("d", d)?;
    let d2 = d * d;
    let s = (ricci * (n as f64 - 1.0)).sqrt();
    let terms = [
        PI * PI / d2 - ricci,
        8.0 / d2 - ricci / 3.0,
        8.0 / d2 * (-d2 * ricci / 8.0).exp(),
        8.0 / d2 * (1.0 + d / 3.0 * s) * (-d / 2.0 * s).exp(),
    ];
    Ok(terms.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Upper bound `E₁ ≤ 1 + 4π²/d²` in three dimensions, the first Dirichlet
/// eigenvalue of a hyperbolic ball of radius `d/2`.
pub fn cheng_upper(d: f64) -> Result<f64> {
    positive("d", d)?;
    Ok(1.0 + 4.0 * PI * PI / (d * d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaRatio {
    pub value: f64,
    /// Integral estimate of the Weyl ζ beyond the last term, relative to
    /// the truncated Weyl sum; infinite when `s ≤ 3/2`.
    pub tail: f64,
    pub n_terms: usize,
}

/// `Σ k_i^{-2s} / Σ k_{wi}^{-2s}` over the first `n_terms` non-zero modes,
/// with `k_{wi}` from [`weyl_k_of_index`].
pub fn zeta_ratio(ks: &[f64], volume: f64, s: f64, n_terms: usize) -> Result<ZetaRatio> {
    if !(s > 1.0) {
        return Err(Error::domain(format!("s = {s} must exceed 1")));
    }
    positive("volume", volume)?;
    if n_terms == 0 {
        return Err(Error::domain("n_terms must be at least 1"));
    }
    if ks.len() < n_terms {
        return Err(Error::Count {
            needed: n_terms,
            got: ks.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &k) in ks[..n_terms].iter().enumerate() {
        positive("k", k)?;
        num += k.powf(-2.0 * s);
        den += weyl_k_of_index(i as u64 + 1, volume)?.powf(-2.0 * s);
    }
    let tail = if s > 1.5 {
        let kn = weyl_k_of_index(n_terms as u64, volume)?;
        // ∫_{k_n}^∞ k^{-2s} dN_w with k = k_n/u.
        let f = |u: f64| {
            if u <= 0.0 {
                0.0
            } else {
                u.powf(2.0 * s - 4.0) * (kn * kn - u * u).max(0.0).sqrt()
            }
        };
        let int = quadrature::integrate(f, 0.0, 1.0, 1e-12).integral;
        volume / (2.0 * PI * PI) * kn.powf(2.0 - 2.0 * s) * int / den
    } else {
        f64::INFINITY
    };
    Ok(ZetaRatio {
        value: num / den,
        tail,
        n_terms,
    })
}

/// Partial sums `d_s(1), ..., d_s(n)` of `½ Σ ln ½(k_i/k̃_i + k̃_i/k_i)`.
pub fn spectral_distance_partial(ks: &[f64], ks_ref: &[f64], n: usize) -> Result<Vec<f64>> {
    if ks.len() < n || ks_ref.len() < n {
        return Err(Error::Count {
            needed: n,
            got: ks.len().min(ks_ref.len()),
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (&a, &b) in ks[..n].iter().zip(&ks_ref[..n]) {
        positive("k", a)?;
        positive("k", b)?;
        let r = a / b;
        // ½(r + 1/r) = 1 + (r - 1)²/(2r)
        let t = r - 1.0;
        sum += 0.5 * (t * t / (2.0 * r)).ln_1p();
        out.push(sum);
    }
    Ok(out)
}

/// Spectral distance truncated at `n` terms.
pub fn spectral_distance(ks: &[f64], ks_ref: &[f64], n: usize) -> Result<f64> {
    Ok(spectral_distance_partial(ks, ks_ref, n)?.last().copied().unwrap_or(0.0))
}

/// The Weyl sequence `k_{w1}, ..., k_{wn}`.
pub fn weyl_sequence(volume: f64, n: usize) -> Result<Vec<f64>> {
    (1..=n as u64).map(|i| weyl_k_of_index(i, volume)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitKind {
    /// `k₁(d)` with `k₁(cusp) = 1`.
    K1Diameter,
    /// `k₁(d)` with free `k₁(cusp)`.
    K1DiameterCusp,
    /// `v(d)` of a ball of radius `αd`.
    VolumeDiameter,
    /// `v(d)` near a cusped manifold.
    ThinVolume,
    /// `v(k₁)` from the ball model.
    VolumeK1,
    /// `k₁(v)` near a cusped manifold.
    K1VolumeCusp,
}

/// Which catalog columns a model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Volume,
    Diameter,
    K1,
}

impl Column {
    pub fn as_str(self) -> &'static str {
        match self {
            Column::Volume => "volume",
            Column::Diameter => "diameter",
            Column::K1 => "k1",
        }
    }
}

impl FitKind {
    pub const ALL: [FitKind; 6] = [
        FitKind::K1Diameter,
        FitKind::K1DiameterCusp,
        FitKind::VolumeDiameter,
        FitKind::ThinVolume,
        FitKind::VolumeK1,
        FitKind::K1VolumeCusp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitKind::K1Diameter => "k1-diameter",
            FitKind::K1DiameterCusp => "k1-diameter-cusp",
            FitKind::VolumeDiameter => "volume-diameter",
            FitKind::ThinVolume => "thin-volume",
            FitKind::VolumeK1 => "volume-k1",
            FitKind::K1VolumeCusp => "k1-volume-cusp",
        }
    }

    pub fn from_name(s: &str) -> Option<FitKind> {
        FitKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Parameter names with default values.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            FitKind::K1Diameter => &[("beta", BETA_CENSUS)],
            FitKind::K1DiameterCusp => &[("beta", BETA_CENSUS), ("k1_cusp", 1.0)],
            FitKind::VolumeDiameter => &[("alpha", ALPHA)],
            // m003 volume
            FitKind::ThinVolume => &[("v_c", 2.029_883_212_819_307), ("delta", DELTA), ("d0", D0)],
            FitKind::VolumeK1 => &[("alpha", ALPHA), ("beta", BETA_CENSUS), ("k1_cusp", 1.0)],
            FitKind::K1VolumeCusp => &[
                ("v_c", 2.029_883_212_819_307),
                ("beta", BETA_SURGERY),
                ("k1_cusp", 1.0),
                ("d0", D0),
            ],
        }
    }

    /// Parameters fitted when none are named.
    pub fn default_free(self) -> &'static [&'static str] {
        match self {
            FitKind::K1Diameter => &["beta"],
            FitKind::K1DiameterCusp => &["beta", "k1_cusp"],
            FitKind::VolumeDiameter => &["alpha"],
            FitKind::ThinVolume => &["d0"],
            FitKind::VolumeK1 => &["alpha"],
            FitKind::K1VolumeCusp => &["beta"],
        }
    }

    /// (x, y) columns.
    pub fn columns(self) -> (Column, Column) {
        match self {
            FitKind::K1Diameter | FitKind::K1DiameterCusp => (Column::Diameter, Column::K1),
            FitKind::VolumeDiameter | FitKind::ThinVolume => (Column::Diameter, Column::Volume),
            FitKind::VolumeK1 => (Column::K1, Column::Volume),
            FitKind::K1VolumeCusp => (Column::Volume, Column::K1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitModel {
    pub kind: FitKind,
    params: Vec<(&'static str, f64)>,
}

impl FitModel {
    pub fn new(kind: FitKind) -> Self {
        Self {
            kind,
            params: kind.defaults().to_vec(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        check_param(name, value)?;
        match self.params.iter_mut().find(|(n, _)| *n == name) {
            Some(p) => {
                p.1 = value;
                Ok(())
            }
            None => Err(Error::domain(format!("{} has no parameter {name}", self.kind.name()))),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(n, _)| *n == name).map(|p| p.1)
    }

    pub fn params(&self) -> &[(&'static str, f64)] {
        &self.params
    }

    fn p(&self, name: &str) -> f64 {
        self.get(name).unwrap_or(f64::NAN)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self.kind {
            FitKind::K1Diameter => k1_diameter(x, self.p("beta"), 1.0),
            FitKind::K1DiameterCusp => k1_diameter(x, self.p("beta"), self.p("k1_cusp")),
            FitKind::VolumeDiameter => volume_diameter(x, self.p("alpha")),
            FitKind::ThinVolume => thin_volume(x, self.p("v_c"), self.p("delta"), self.p("d0")),
            FitKind::VolumeK1 => volume_k1_iso(x, self.p("alpha"), self.p("beta"), self.p("k1_cusp")),
            FitKind::K1VolumeCusp => {
                k1_volume_cusp(x, self.p("v_c"), self.p("beta"), self.p("k1_cusp"), self.p("d0"))
            }
        }
    }
}

fn check_param(name: &str, value: f64) -> Result<()> {
    let ok = match name {
        "k1_cusp" => (0.0..=1.0).contains(&value),
        "delta" => value >= 0.0 && value.is_finite(),
        _ => value > 0.0 && value.is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!("parameter {name} = {value} out of range")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupTag {
    A,
    B,
    Other,
}

impl GroupTag {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupTag::A => "A",
            GroupTag::B => "B",
            GroupTag::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldRecord {
    pub meta: ManifoldMeta,
    pub k1: Option<f64>,
    pub l_min: Option<f64>,
    pub group: GroupTag,
}

impl ManifoldRecord {
    pub fn column(&self, c: Column) -> Option<f64> {
        match c {
            Column::Volume => Some(self.meta.volume),
            Column::Diameter => self.meta.diameter,
            Column::K1 => self.k1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: FitModel,
    pub free: Vec<&'static str>,
    pub sigma: Vec<f64>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub residuals: Vec<f64>,
    /// One-sigma scatter of the data about the fitted curve.
    pub residual_sigma: f64,
    pub iterations: usize,
}

impl FitReport {
    pub fn sigma_of(&self, name: &str) -> Option<f64> {
        let i = self.free.iter().position(|n| *n == name)?;
        Some(self.sigma[i])
    }
}

/// Least-squares fit of `free` parameters of `model` to the records that
/// carry both of its columns; other parameters stay at their values in
/// `model`.
pub fn fit(model: &FitModel, data: &[ManifoldRecord], free: &[&str]) -> Result<FitReport> {
    let free: Vec<&'static str> = free
        .iter()
        .map(|f| {
            model
                .params
                .iter()
                .find(|(n, _)| n == f)
                .map(|p| p.0)
                .ok_or_else(|| Error::domain(format!("{} has no parameter {f}", model.kind.name())))
        })
        .collect::<Result<_>>()?;
    if free.is_empty() {
        return Err(Error::domain("no free parameters"));
    }
    let (cx, cy) = model.kind.columns();
    let (xs, ys): (Vec<f64>, Vec<f64>) = data
        .iter()
        .filter_map(|r| Some((r.column(cx)?, r.column(cy)?)))
        .unzip();
    if xs.len() < free.len() + 1 {
        return Err(Error::Count {
            needed: free.len() + 1,
            got: xs.len(),
        });
    }
    let start: Vec<f64> = free.iter().map(|n| model.p(n)).collect();
    let eval = |x: f64, p: &[f64]| {
        let mut m = model.clone();
        for (name, v) in free.iter().zip(p) {
            match m.params.iter_mut().find(|(n, _)| n == name) {
                Some(slot) => slot.1 = *v,
                None => return f64::NAN,
            }
        }
        m.eval(x).unwrap_or(f64::NAN)
    };
    let out = gauss_newton(eval, &xs, &ys, None, &start, &GaussNewtonOptions::default())?;
    let mut fitted = model.clone();
    for (name, v) in free.iter().zip(&out.params) {
        fitted.set(name, *v)?;
    }
    Ok(FitReport {
        model: fitted,
        free,
        sigma: out.sigma,
        xs,
        ys,
        residuals: out.residuals,
        residual_sigma: out.residual_sigma,
        iterations: out.iterations,
    })
}
