//! Special functions used by the trace formula: erf, Γ, ₁F₁ and Ei.
//!
//! Double precision throughout. ₁F₁ is restricted to the parameter pairs the
//! zero-length term needs (plus their Kummer partners); anything else is an
//! explicit error rather than a silently inaccurate value.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// `ln(f64::MAX)`, beyond which `eˣ` overflows.
const LN_MAX: f64 = 709.782_712_893_384;

/// Controls for series/asymptotic evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub max_terms: usize,
    /// ₁F₁ uses the power series below this argument and the asymptotic
    /// expansion above it.
    pub asymptotic_switch: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-17,
            max_terms: 1000,
            asymptotic_switch: 30.0,
        }
    }
}

impl SeriesControl {
    pub fn new(rel_tol: f64, max_terms: usize, asymptotic_switch: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
            return Err(Error::domain(format!("rel_tol {rel_tol} outside (0, 1e-6]")));
        }
        if max_terms < 50 {
            return Err(Error::domain(format!("max_terms {max_terms} below 50")));
        }
        if !(asymptotic_switch > 0.0) {
            return Err(Error::domain("asymptotic_switch must be positive"));
        }
        Ok(Self {
            rel_tol,
            max_terms,
            asymptotic_switch,
        })
    }
}

// e^{-x²} with x² split into an exact head and tail.
fn exp_neg_sq(x: f64) -> f64 {
    let hi = x * x;
    let lo = x.mul_add(x, -hi);
    (-hi).exp() * (-lo).exp()
}

/// Error function `2/√π ∫₀ˣ e^{-t²} dt`.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax < 2.5 {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    v.copysign(x)
}

/// Complementary error function `1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 2.5 {
        erfc_cf(x)
    } else if x > -2.5 {
        1.0 - erf(x)
    } else {
        2.0 - erfc_cf(-x)
    }
}

// All terms positive: 2/√π · x e^{-x²} Σ (2x²)ⁿ / (1·3···(2n+1)).
fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..200 {
        term *= two_x2 / (2 * n + 3) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 / SQRT_PI * x * exp_neg_sq(x) * sum
}

// Continued fraction x + (1/2)/(x + 1/(x + (3/2)/(x + ...))), modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    if x > 27.3 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    exp_neg_sq(x) / (SQRT_PI * f)
}

/// Inverse of [`erf`] on `(-1, 1)`.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::domain(format!("erf_inv needs |y| < 1, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    // Winitzki's closed-form guess, then Halley steps.
    let a = 0.147;
    let w = ((1.0 - y) * (1.0 + y)).ln();
    let t = 2.0 / (PI * a) + w / 2.0;
    let mut x = ((t * t - w / a).sqrt() - t).sqrt().copysign(y);
    for _ in 0..50 {
        let r = if y > 0.5 {
            (1.0 - y) - erfc(x)
        } else if y < -0.5 {
            erfc(-x) - (1.0 + y)
        } else {
            erf(x) - y
        };
        let dfdx = 2.0 / SQRT_PI * exp_neg_sq(x);
        let step = r / dfdx;
        let step = step / (1.0 + x * step);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    s
}

fn check_pole(x: f64) -> Result<()> {
    if x.is_nan() || (x <= 0.0 && x == x.round()) {
        return Err(Error::domain(format!("Gamma has a pole at {x}")));
    }
    Ok(())
}

/// Gamma function.
pub fn gamma(x: f64) -> Result<f64> {
    check_pole(x)?;
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma(1.0 - x)?));
    }
    if x > 171.7 {
        return Err(Error::Overflow(format!("Gamma({x})")));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // Split the power so t^{z+1/2} does not overflow before e^{-t} applies.
    let half = t.powf((z + 0.5) / 2.0);
    Ok((2.0 * PI).sqrt() * half * (-t).exp() * half * lanczos_sum(z))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

const SUPPORTED_1F1: [(f64, f64); 4] = [(1.25, 0.5), (1.75, 1.5), (-0.75, 0.5), (-0.25, 1.5)];

fn check_supported(a: f64, b: f64) -> Result<()> {
    let ok = SUPPORTED_1F1
        .iter()
        .any(|&(pa, pb)| (a - pa).abs() < 1e-12 && (b - pb).abs() < 1e-12);
    if ok {
        Ok(())
    } else {
        Err(Error::UnsupportedParameters { a, b })
    }
}

/// Kummer's function `₁F₁(a; b; x) = Σ (a)ₙ/(b)ₙ xⁿ/n!`.
///
/// Supported `(a, b)`: `(5/4, 1/2)`, `(7/4, 3/2)` and their Kummer partners
/// `(-3/4, 1/2)`, `(-1/4, 3/2)`. Large positive `x` overflows once
/// `eˣ` does; use [`hyp1f1_scaled`] there.
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    hyp1f1_with(a, b, x, &SeriesControl::default())
}

pub fn hyp1f1_with(a: f64, b: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    check_supported(a, b)?;
    if !x.is_finite() {
        return Err(Error::domain("hyp1f1 argument must be finite"));
    }
    if x < -2.0 {
        // Kummer: M(a,b,x) = eˣ M(b-a,b,-x) = e^{-(-x)} M(b-a,b,-x).
        return hyp1f1_scaled_with(b - a, b, -x, ctl);
    }
    if x < ctl.asymptotic_switch {
        return hyp1f1_series(a, b, x, ctl);
    }
    let scaled = hyp1f1_asymptotic_scaled(a, b, x, ctl)?;
    if x + scaled.abs().ln() > LN_MAX {
        return Err(Error::Overflow(format!("hyp1f1({a}, {b}, {x})")));
    }
    Ok(x.exp() * scaled)
}

/// `e^{-x} ₁F₁(a; b; x)`, finite for all `x ≥ 0` on the supported pairs.
pub fn hyp1f1_scaled(a: f64, b: f64, x: f64) -> Result<f64> {
    hyp1f1_scaled_with(a, b, x, &SeriesControl::default())
}

pub fn hyp1f1_scaled_with(a: f64, b: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    check_supported(a, b)?;
    if !x.is_finite() {
        return Err(Error::domain("hyp1f1 argument must be finite"));
    }
    if x < 0.0 {
        if -x > LN_MAX {
            return Err(Error::Overflow(format!("e^(-x) hyp1f1({a}, {b}, {x})")));
        }
        return Ok((-x).exp() * hyp1f1_with(a, b, x, ctl)?);
    }
    if x < ctl.asymptotic_switch {
        Ok((-x).exp() * hyp1f1_series(a, b, x, ctl)?)
    } else {
        hyp1f1_asymptotic_scaled(a, b, x, ctl)
    }
}

/// Power series for `₁F₁`, summed until the term falls below `rel_tol`.
pub fn hyp1f1_series(a: f64, b: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    check_supported(a, b)?;
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..ctl.max_terms {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * x / (nf + 1.0);
        sum += term;
        if term.abs() <= ctl.rel_tol * sum.abs() && nf > x.abs() {
            return Ok(sum);
        }
    }
    Err(Error::domain(format!(
        "hyp1f1 series did not converge in {} terms at x = {x}",
        ctl.max_terms
    )))
}

// Σ (p)ₙ (q)ₙ / n! · sⁿ, stopped at the smallest term.
fn divergent_sum(p: f64, q: f64, s: f64, rel_tol: f64, max_terms: usize) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 0..max_terms {
        let nf = n as f64;
        let next = term * (p + nf) * (q + nf) / (nf + 1.0) * s;
        if next.abs() >= term.abs() {
            break;
        }
        sum += next;
        term = next;
        if term.abs() <= rel_tol * sum.abs() {
            break;
        }
    }
    sum
}

/// Large-`x` expansion of `e^{-x} ₁F₁(a; b; x)`.
///
/// The recessive `x^{-a}` part carries the factor `cos(πa)`, the real part
/// of the `e^{iπa}` branch, so the result is real for real input.
pub fn hyp1f1_asymptotic_scaled(a: f64, b: f64, x: f64, ctl: &SeriesControl) -> Result<f64> {
    check_supported(a, b)?;
    if !(x > 0.0) {
        return Err(Error::domain("asymptotic hyp1f1 needs x > 0"));
    }
    let gb = gamma(b)?;
    let dominant = gb / gamma(a)?
        * x.powf(a - b)
        * divergent_sum(b - a, 1.0 - a, 1.0 / x, ctl.rel_tol, ctl.max_terms);
    let recessive = if x < LN_MAX {
        gb / gamma(b - a)?
            * (PI * a).cos()
            * x.powf(-a)
            * divergent_sum(a, 1.0 + a - b, -1.0 / x, ctl.rel_tol, ctl.max_terms)
            * (-x).exp()
    } else {
        0.0
    };
    Ok(dominant + recessive)
}

/// Exponential integral `Ei(x)` (principal value) for `x > 0`.
pub fn ei(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::domain(format!("Ei needs x > 0, got {x}")));
    }
    if x > LN_MAX + 10.0 {
        return Err(Error::Overflow(format!("Ei({x})")));
    }
    if x <= 40.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..500 {
            let nf = n as f64;
            term *= x / nf;
            let add = term / nf;
            sum += add;
            if add < 1e-17 * sum {
                break;
            }
        }
        Ok(EULER_GAMMA + x.ln() + sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..200 {
            let next = term * n as f64 / x;
            if next >= term {
                break;
            }
            sum += next;
            term = next;
            if term < 1e-17 * sum {
                break;
            }
        }
        // Split eˣ/x to keep the intermediate finite near the overflow edge.
        let h = (x / 2.0).exp();
        Ok(h * (h / x) * sum)
    }
}
