//! PSL(2,ℂ) elements acting on the upper half-space model of ℍ³.
//!
//! Points are `z + x₃ j` with `x₃ > 0`; the curvature radius is 1. Matrices
//! are stored with unit determinant and a canonical overall sign, so `g` and
//! `-g` (the same isometry) share one representative.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unit-determinant tolerance enforced after every composition.
pub const DET_TOL: f64 = 1e-10;

/// Elements shorter than this are not treated as loxodromic.
pub const LENGTH_FLOOR: f64 = 1e-9;

/// Tolerances used by classification and complex-length extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTolerances {
    pub det_tol: f64,
    pub length_floor: f64,
    /// Bound on `|b| + |c| + |a - d|` for `±I`.
    pub identity_tol: f64,
    /// Bound on `|tr² - 4|` for parabolic elements.
    pub trace_tol: f64,
    /// `|φ|` at or below this is hyperbolic rather than loxodromic.
    pub phase_tol: f64,
}

impl Default for GeometryTolerances {
    fn default() -> Self {
        Self {
            det_tol: DET_TOL,
            length_floor: LENGTH_FLOOR,
            identity_tol: 1e-9,
            trace_tol: 1e-9,
            phase_tol: 1e-9,
        }
    }
}

/// Kind of an isometry of ℍ³, read off from its trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementClass {
    Identity,
    Elliptic,
    Parabolic,
    /// Pure translation along an axis (`φ = 0`).
    Hyperbolic,
    /// Translation combined with a twist (`φ ≠ 0`).
    Loxodromic,
}

impl ElementClass {
    pub fn has_axis(self) -> bool {
        matches!(self, ElementClass::Hyperbolic | ElementClass::Loxodromic)
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let y = phi.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Distance between two phases measured around the circle.
pub fn phase_gap(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Complex translation length `l + iφ` of a loxodromic element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexLength {
    pub length: f64,
    pub phase: f64,
}

impl ComplexLength {
    pub fn new(length: f64, phase: f64) -> Result<Self> {
        if !(length > LENGTH_FLOOR) || !length.is_finite() {
            return Err(Error::domain(format!(
                "geodesic length {length} must exceed {LENGTH_FLOOR}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::domain("phase must be finite"));
        }
        Ok(Self {
            length,
            phase: wrap_phase(phase),
        })
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.length, self.phase)
    }

    /// Componentwise comparison, with the phase compared around the circle.
    pub fn approx_eq(&self, other: &ComplexLength, tol: f64) -> bool {
        (self.length - other.length).abs() <= tol && phase_gap(self.phase, other.phase) <= tol
    }
}

/// A point `z + x₃ j` of upper half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H3Point {
    z: Complex64,
    height: f64,
}

impl H3Point {
    pub fn new(z: Complex64, height: f64) -> Result<Self> {
        if !(height > 0.0) || !height.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain(format!(
                "point ({z}, {height}) is not in upper half-space"
            )));
        }
        Ok(Self { z, height })
    }

    /// The point `j = (0, 0, 1)`.
    pub fn origin() -> Self {
        Self {
            z: Complex64::new(0.0, 0.0),
            height: 1.0,
        }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// `cosh d(self, other)`, computed without forming `d`.
    pub fn cosh_dist(&self, other: &H3Point) -> f64 {
        let dz = (self.z - other.z).norm_sqr();
        let dh = self.height - other.height;
        1.0 + (dz + dh * dh) / (2.0 * self.height * other.height)
    }

    pub fn dist(&self, other: &H3Point) -> f64 {
        dist(self, other)
    }
}

/// Hyperbolic distance, `cosh d = 1 + (|Δz|² + Δx₃²) / (2 x₃ x₃')`.
pub fn dist(p: &H3Point, q: &H3Point) -> f64 {
    let dz = (p.z - q.z).norm_sqr();
    let dh = p.height - q.height;
    // cosh d - 1 = 2 sinh²(d/2) keeps precision for nearby points.
    let s = ((dz + dh * dh) / (4.0 * p.height * q.height)).sqrt();
    2.0 * s.asinh()
}

/// A 2×2 complex matrix of determinant 1, identified with its negative.
#[derive(Clone, Copy, PartialEq)]
pub struct MoebiusElement {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl fmt::Debug for MoebiusElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl MoebiusElement {
    /// Build from entries that already have unit determinant.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        let deviation = (det - 1.0).norm();
        if !deviation.is_finite() || deviation >= DET_TOL {
            return Err(Error::Determinant { deviation });
        }
        Self::normalized(a, b, c, d)
    }

    /// Build from any invertible matrix by rescaling with `1/√det`.
    pub fn normalized(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.norm() > f64::MIN_POSITIVE) || !det.norm().is_finite() {
            return Err(Error::Determinant {
                deviation: (det - 1.0).norm(),
            });
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        }
        .canonical_sign())
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    /// `diag(e^{(l+iφ)/2}, e^{-(l+iφ)/2})`, the normal form of a loxodromic element.
    pub fn loxodromic(length: f64, phase: f64) -> Self {
        let half = Complex64::new(length / 2.0, phase / 2.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            a: half.exp(),
            b: zero,
            c: zero,
            d: (-half).exp(),
        }
        .canonical_sign()
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }
    pub fn b(&self) -> Complex64 {
        self.b
    }
    pub fn c(&self) -> Complex64 {
        self.c
    }
    pub fn d(&self) -> Complex64 {
        self.d
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    // The first entry that is not negligible gets argument in (-π/2, π/2].
    fn canonical_sign(self) -> Self {
        let scale = self.norm_sqr().sqrt();
        let lead = [self.a, self.b, self.c, self.d]
            .into_iter()
            .find(|z| z.norm() > 1e-12 * scale);
        match lead {
            Some(z) if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) => Self {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            },
            _ => self,
        }
    }

    fn renormalized(self) -> Self {
        let s = self.det().sqrt();
        Self {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
        .canonical_sign()
    }

    /// Matrix product `self · other`, renormalized to unit determinant.
    pub fn compose(&self, other: &MoebiusElement) -> MoebiusElement {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .renormalized()
    }

    pub fn inverse(&self) -> MoebiusElement {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonical_sign()
    }

    /// `h · self · h⁻¹`.
    pub fn conjugate_by(&self, h: &MoebiusElement) -> MoebiusElement {
        h.compose(self).compose(&h.inverse())
    }

    pub fn power(&self, n: i64) -> MoebiusElement {
        let mut base = if n < 0 { self.inverse() } else { *self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }

    /// Equality up to the sign quotient, relative to the larger Frobenius norm.
    pub fn approx_eq(&self, other: &MoebiusElement, tol: f64) -> bool {
        let scale = self.norm_sqr().max(other.norm_sqr()).sqrt();
        let minus = (self.a - other.a).norm_sqr()
            + (self.b - other.b).norm_sqr()
            + (self.c - other.c).norm_sqr()
            + (self.d - other.d).norm_sqr();
        let plus = (self.a + other.a).norm_sqr()
            + (self.b + other.b).norm_sqr()
            + (self.c + other.c).norm_sqr()
            + (self.d + other.d).norm_sqr();
        minus.min(plus).sqrt() <= tol * scale
    }

    /// Action on upper half-space.
    pub fn apply(&self, p: &H3Point) -> Result<H3Point> {
        let (z, x3) = (p.z, p.height);
        let czd = self.c * z + self.d;
        let den = czd.norm_sqr() + self.c.norm_sqr() * x3 * x3;
        if !(den > f64::MIN_POSITIVE) || !den.is_finite() {
            return Err(Error::PointAtInfinity);
        }
        let num = (self.a * z + self.b) * czd.conj() + self.a * self.c.conj() * (x3 * x3);
        let height = x3 / den;
        if !(height > 0.0) {
            return Err(Error::PointAtInfinity);
        }
        Ok(H3Point {
            z: num / den,
            height,
        })
    }

    /// `cosh d(p, g p)`; infinite if the image degenerates.
    pub fn cosh_displacement(&self, p: &H3Point) -> f64 {
        match self.apply(p) {
            Ok(q) => p.cosh_dist(&q),
            Err(_) => f64::INFINITY,
        }
    }

    /// `d(p, g p)`.
    pub fn displacement(&self, p: &H3Point) -> f64 {
        match self.apply(p) {
            Ok(q) => dist(p, &q),
            Err(_) => f64::INFINITY,
        }
    }

    fn is_identity_within(&self, tol: f64) -> bool {
        self.b.norm() + self.c.norm() + (self.a - self.d).norm() <= tol
    }

    // Eigenvalue of modulus ≥ 1.
    fn expanding_eigenvalue(&self) -> Complex64 {
        let tr = self.trace();
        let disc = (tr * tr - 4.0).sqrt();
        let r1 = (tr + disc) / 2.0;
        let r2 = (tr - disc) / 2.0;
        if r1.norm() >= r2.norm() {
            r1
        } else {
            r2
        }
    }

    // (l, φ) without any classification checks.
    fn raw_length(&self) -> (f64, f64) {
        let r = self.expanding_eigenvalue();
        (2.0 * r.norm().ln(), wrap_phase(2.0 * r.arg()))
    }

    pub fn classify(&self) -> ElementClass {
        self.classify_with(&GeometryTolerances::default())
    }

    pub fn classify_with(&self, tol: &GeometryTolerances) -> ElementClass {
        if self.is_identity_within(tol.identity_tol) {
            return ElementClass::Identity;
        }
        let (l, phi) = self.raw_length();
        if l <= tol.length_floor {
            let tr = self.trace();
            if (tr * tr - 4.0).norm() <= tol.trace_tol {
                ElementClass::Parabolic
            } else {
                ElementClass::Elliptic
            }
        } else if phi.abs() <= tol.phase_tol {
            ElementClass::Hyperbolic
        } else {
            ElementClass::Loxodromic
        }
    }

    /// Solve `±tr g = 2 cosh((l + iφ)/2)` with `l > 0`, `φ ∈ (-π, π]`.
    pub fn complex_length(&self) -> Result<ComplexLength> {
        self.complex_length_with(&GeometryTolerances::default())
    }

    pub fn complex_length_with(&self, tol: &GeometryTolerances) -> Result<ComplexLength> {
        let kind = self.classify_with(tol);
        if !kind.has_axis() {
            return Err(Error::NotLoxodromic(kind));
        }
        let (length, phase) = self.raw_length();
        let phase = if kind == ElementClass::Hyperbolic {
            0.0
        } else {
            phase
        };
        Ok(ComplexLength { length, phase })
    }

    /// Distance from `p` to the axis of a hyperbolic or loxodromic element.
    ///
    /// Uses `cosh d(p, gp) = cosh l + sinh²ρ (cosh l - cos φ)`.
    pub fn axis_distance(&self, p: &H3Point) -> Result<f64> {
        let cl = self.complex_length()?;
        let cosh_l = cl.length.cosh();
        let sinh2 = (self.cosh_displacement(p) - cosh_l) / (cosh_l - cl.phase.cos());
        Ok(sinh2.max(0.0).sqrt().asinh())
    }

    /// The `branch`-th `n`-th root of a loxodromic element, `branch < n`.
    ///
    /// The `n` branches are the distinct PSL(2,ℂ) elements `r` on the same
    /// axis with `rⁿ = ±g`.
    pub fn root(&self, n: u32, branch: u32) -> Result<MoebiusElement> {
        if n == 0 || branch >= n {
            return Err(Error::domain(format!("invalid root index {branch} of {n}")));
        }
        let kind = self.classify();
        if !kind.has_axis() {
            return Err(Error::NotLoxodromic(kind));
        }
        let lambda = self.expanding_eigenvalue();
        let sigma = ((lambda.ln() + Complex64::new(0.0, PI * branch as f64)) / n as f64).exp();
        let lambda_inv = lambda.inv();
        let sigma_inv = sigma.inv();
        // Lagrange interpolation on the two eigenvalues.
        let den = lambda - lambda_inv;
        let alpha = (sigma - sigma_inv) / den;
        let beta = (lambda * sigma_inv - lambda_inv * sigma) / den;
        Self::normalized(
            alpha * self.a + beta,
            alpha * self.b,
            alpha * self.c,
            alpha * self.d + beta,
        )
    }
}

impl Mul for MoebiusElement {
    type Output = MoebiusElement;

    fn mul(self, rhs: MoebiusElement) -> MoebiusElement {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a MoebiusElement> for &'a MoebiusElement {
    type Output = MoebiusElement;

    fn mul(self, rhs: &'a MoebiusElement) -> MoebiusElement {
        self.compose(rhs)
    }
}

// Generators interleaved with their inverses: (index, inverted, element).
pub(crate) fn with_inverses(generators: &[MoebiusElement]) -> Vec<(usize, bool, MoebiusElement)> {
    let mut out = Vec::with_capacity(2 * generators.len());
    for (i, g) in generators.iter().enumerate() {
        out.push((i, false, *g));
        out.push((i, true, g.inverse()));
    }
    out
}
