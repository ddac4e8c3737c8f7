//! Acceptance gate: one PASS/FAIL/SKIPPED line per criterion.
//!
//! Oracles here are independent of the library: exact rational series,
//! closed forms and brute-force word enumeration.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use h3spec::analysis::{self, fit, FitKind, FitModel, GroupTag, ManifoldRecord};
use h3spec::moebius::{wrap_phase, H3Point, MoebiusElement};
use h3spec::specfun::{self, SeriesControl};
use h3spec::spectrum::{
    conjugacy_reduce, fit_multiplicity, rigorous_radius, tile, ConjugacyOptions, GroupPresentation, ManifoldMeta,
    MultiplicityModel, MultiplicitySample, TilingOptions,
};
use h3spec::trace::{
    extract_eigenvalues, k_grid, p_sq_of_k, precision_estimate, smoothing_h, weyl_average, zero_length_term,
    ExtractOptions, PosmModel, SmoothingSchedule, SpectralStaircase, StaircaseOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Pass,
    Fail,
    Skipped,
}

struct Outcome {
    id: u8,
    title: &'static str,
    status: Status,
    detail: String,
}

/// Criteria that fail for reasons recorded in the decisions ledger.
const KNOWN_FAILURES: &[u8] = &[4, 6];

// ---------------------------------------------------------------- rationals

fn rat(s: &str) -> BigRational {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let den = BigInt::from(10).pow(frac.len() as u32);
    let num: BigInt = format!("{int}{frac}").parse().unwrap();
    BigRational::new(num, den)
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// 36 digits, from an arbitrary-precision evaluation.
const SQRT_PI: &str = "1.77245385090551602729816748334114518";
const TWO_OVER_SQRT_PI: &str = "1.12837916709551257389615890312154517";
const EULER_GAMMA: &str = "0.577215664901532860606512090082402431";
const GAMMA_QUARTER: &str = "3.625609908221908311930685155867672";
const GAMMA_THIRD: &str = "2.67893853470774763365569294097467764";
const GAMMA_TWO_THIRDS: &str = "1.35411793942640041694528802815451379";
const GAMMA_THREE_QUARTERS: &str = "1.22541670246517764512909830336289053";

fn erf_oracle(x: &BigRational) -> BigRational {
    let x2 = x * x;
    let eps = q(1, 1) / BigRational::from_integer(BigInt::from(10).pow(45));
    let mut power = x.clone();
    let mut fact = BigRational::one();
    let mut sum = BigRational::zero();
    for n in 0i64.. {
        let term = &power / (&fact * q(2 * n + 1, 1));
        if n % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        if term.abs() < eps && n > 2 {
            break;
        }
        power *= &x2;
        fact *= q(n + 1, 1);
    }
    sum * rat(TWO_OVER_SQRT_PI)
}

/// `M(a, b, x)` as a binary fixed-point integer, `value · 2^FIX_BITS`, for
/// rational `a = an/ad`, `b = bn/bd`, `x = xn/xd`.
const FIX_BITS: u32 = 320;

fn hyp1f1_fixed(a: (i64, i64), b: (i64, i64), x: (i64, i64)) -> BigInt {
    let one = BigInt::one() << FIX_BITS;
    let mut term = one.clone();
    let mut sum = one;
    let bound = (x.0 as f64 / x.1 as f64).abs();
    for n in 0i64.. {
        // (a+n)/(b+n) · x/(n+1)
        term = term * (a.0 + a.1 * n) * b.1 * x.0 / (a.1 * (b.0 + b.1 * n) * (n + 1) * x.1);
        sum += &term;
        if n as f64 > bound + 20.0 && term.is_zero() {
            break;
        }
    }
    sum
}

fn fixed_to_f64(v: &BigInt) -> f64 {
    v.to_f64().unwrap() / 2f64.powi(FIX_BITS as i32)
}

/// `M(a, b, x) e^{-x}` for large `x`, via `ln M` so nothing overflows.
fn hyp1f1_scaled_oracle(a: (i64, i64), b: (i64, i64), x: i64) -> f64 {
    let m = hyp1f1_fixed(a, b, (x, 1));
    let shift = m.bits().saturating_sub(64);
    let top = (&m >> shift).to_f64().unwrap();
    (top.ln() + (shift as f64 - FIX_BITS as f64) * std::f64::consts::LN_2 - x as f64).exp()
}

// Ei(x) - γ - ln x = Σ xⁿ/(n n!)
fn ei_series_oracle(x: &BigRational) -> BigRational {
    let eps = BigRational::from_integer(BigInt::from(10).pow(40)).recip();
    let mut power = BigRational::one();
    let mut sum = BigRational::zero();
    for n in 1i64.. {
        power = power * x / q(n, 1);
        let term = &power / q(n, 1);
        sum += &term;
        if n as f64 > to_f64(x) && term < &sum * &eps {
            break;
        }
    }
    sum
}

// ---------------------------------------------------------------- criteria

fn special_functions() -> (bool, String) {
    let mut worst: HashMap<&str, f64> = HashMap::new();
    let mut note = |name: &'static str, err: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(err);
    };

    for i in 1..=40 {
        let xr = q(i, 8);
        let x = i as f64 / 8.0;
        let e = erf_oracle(&xr);
        note("erf", rel(specfun::erf(x), to_f64(&e)));
        note("erfc", rel(specfun::erfc(x), to_f64(&(BigRational::one() - e))));
    }

    let bases = [
        (q(1, 4), rat(GAMMA_QUARTER)),
        (q(1, 3), rat(GAMMA_THIRD)),
        (q(1, 2), rat(SQRT_PI)),
        (q(2, 3), rat(GAMMA_TWO_THIRDS)),
        (q(3, 4), rat(GAMMA_THREE_QUARTERS)),
        (q(1, 1), BigRational::one()),
    ];
    for (x0, g0) in bases {
        // Γ(x + n) = Γ(x) x (x+1) ... (x+n-1)
        let mut g = g0;
        let mut x = x0;
        while to_f64(&x) <= 50.0 {
            note("gamma", rel(specfun::gamma(to_f64(&x)).unwrap(), to_f64(&g)));
            g *= &x;
            x += BigRational::one();
        }
    }

    let ctl = SeriesControl::default();
    let pairs = [((5, 4), (1, 2)), ((7, 4), (3, 2)), ((-3, 4), (1, 2)), ((-1, 4), (3, 2))];
    let mut overlap: f64 = 0.0;
    for &(a, b) in &pairs {
        let (af, bf) = (a.0 as f64 / a.1 as f64, b.0 as f64 / b.1 as f64);
        for i in -40..=400 {
            let x = i as f64 / 4.0;
            let m = fixed_to_f64(&hyp1f1_fixed(a, b, (i, 4)));
            note("hyp1f1", rel(specfun::hyp1f1(af, bf, x).unwrap(), m));
        }
        for xi in [100, 150, 200, 300, 400, 700, 1000, 2000, 5000, 10_000] {
            let want = hyp1f1_scaled_oracle(a, b, xi);
            note("hyp1f1_scaled", rel(specfun::hyp1f1_scaled(af, bf, xi as f64).unwrap(), want));
        }
        let mut x = 30.0;
        while x <= 60.0 {
            let s = specfun::hyp1f1_series(af, bf, x, &ctl).unwrap();
            let asy = specfun::hyp1f1_asymptotic_scaled(af, bf, x, &ctl).unwrap() * x.exp();
            overlap = overlap.max(rel(asy, s));
            x += 2.5;
        }
    }

    let gamma_e = rat(EULER_GAMMA);
    for i in 1..=120 {
        let x = 0.5 * i as f64;
        let s = ei_series_oracle(&q(i, 2)) + &gamma_e;
        let want = to_f64(&s) + x.ln();
        note("ei", rel(specfun::ei(x).unwrap(), want));
    }

    let tol = [
        ("erf", 1e-12),
        ("erfc", 1e-12),
        ("gamma", 1e-12),
        ("hyp1f1", 1e-9),
        ("hyp1f1_scaled", 1e-9),
        ("ei", 1e-10),
    ];
    let mut ok = overlap <= 1e-8;
    let mut detail = String::new();
    for (name, t) in tol {
        let w = worst[name];
        ok &= w <= t;
        let _ = write!(detail, "{name} {w:.1e}<={t:.0e}; ");
    }
    let _ = write!(detail, "overlap {overlap:.1e}<=1e-8");
    (ok, detail)
}

/// Smoothed count of a synthetic spectrum, zero mode included.
fn smoothed(ks: &[f64], k: f64, eps: f64) -> f64 {
    let p_sq = p_sq_of_k(k);
    smoothing_h(-1.0, p_sq, eps).unwrap()
        + ks.iter().map(|&kj| smoothing_h(p_sq_of_k(kj), p_sq, eps).unwrap()).sum::<f64>()
}

fn random_spectrum(rng: &mut ChaCha8Rng, min_gap: f64) -> Vec<f64> {
    loop {
        let n = rng.gen_range(1..=30);
        let mut ks: Vec<f64> = (0..n).map(|_| rng.gen_range(1.5..10.0)).collect();
        ks.sort_by(f64::total_cmp);
        if ks.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            return ks;
        }
    }
}

fn smoothing_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let epsilons = [1.0, 0.75, 0.5, 0.25];
    let (away, min_gap) = (0.05, 0.1);
    let mut monotone = 0;
    let mut recovered = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut total = 0;
    for _ in 0..20 {
        let ks = random_spectrum(&mut rng, min_gap);
        let grid = k_grid(1.2, 10.5, 0.005).unwrap();
        let sup: Vec<f64> = epsilons
            .iter()
            .map(|&eps| {
                grid.iter()
                    .filter(|&&k| ks.iter().all(|&kj| (k - kj).abs() > away))
                    .map(|&k| {
                        let exact = 1.0 + ks.iter().filter(|&&kj| kj <= k).count() as f64;
                        (smoothed(&ks, k, eps) - exact).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        if sup.windows(2).all(|w| w[1] < w[0]) {
            monotone += 1;
        }

        let eps = 0.25;
        let sched = SmoothingSchedule::new([0.0, 0.0, eps], [0.0, eps]).unwrap();
        let avg: Vec<f64> = grid.iter().map(|&k| smoothed(&ks, k, eps)).collect();
        let stair =
            SpectralStaircase::from_parts(grid.clone(), vec![eps; grid.len()], avg, vec![0.0; grid.len()]).unwrap();
        let exact = |k: f64| smoothed(&ks, k, eps);
        let list = extract_eigenvalues(&stair, &sched, Some(&exact), &ExtractOptions::default());
        let found = list.ks();
        total += 1;
        if found.len() == ks.len() {
            let ok = found.iter().zip(&ks).zip(&list.entries).all(|((f, t), e)| {
                worst_ratio = worst_ratio.max((f - t).abs() / e.delta_k);
                (f - t).abs() <= e.delta_k
            });
            if ok {
                recovered += 1;
            }
        }
    }
    (
        monotone == total && recovered == total,
        format!(
            "sup-norm decreasing in {monotone}/{total}, all k recovered in {recovered}/{total}, worst |dk|/Dk {worst_ratio:.2e}"
        ),
    )
}

fn quoted_precision() -> (bool, String) {
    let s = SmoothingSchedule::default();
    let cases = [(5.0, 2, 0.30), (3.0, 2, 0.33), (5.0, 6, 0.49), (3.0, 6, 0.54)];
    let mut ok = true;
    let mut detail = String::new();
    for (k, m, want) in cases {
        let got = precision_estimate(k, s.eps(k), m);
        ok &= (got - want).abs() <= 0.01;
        let _ = write!(detail, "k={k} m<={m}: {got:.3} (expected {want}); ");
    }
    (ok, detail)
}

fn zero_length_weyl() -> (bool, String) {
    let s = SmoothingSchedule::default();
    let v = 1.0;
    let mut ok = true;
    let mut detail = String::new();
    for k in [8.0, 10.0, 15.0] {
        let p_sq = p_sq_of_k(k);
        let r = zero_length_term(p_sq, s.eps(k), v).unwrap() / weyl_average(p_sq, v);
        ok &= (0.999..=1.001).contains(&r);
        let _ = write!(detail, "k={k}: {r:.5}; ");
    }
    (ok, detail)
}

// ---------------------------------------------------------------- tiling oracle

fn axis_map(theta: f64, scale: f64) -> MoebiusElement {
    // Sends 0 and ∞ to ∓ scale e^{iθ}.
    let u = Complex64::from_polar(scale.sqrt(), theta / 2.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MoebiusElement::new(u * s, -u * s, u.inv() * s, u.inv() * s).unwrap()
}

fn schottky_groups() -> Vec<(&'static str, [MoebiusElement; 2])> {
    vec![
        (
            "A",
            [
                MoebiusElement::loxodromic(2.0, 0.4),
                MoebiusElement::loxodromic(2.2, -0.9).conjugate_by(&axis_map(0.0, 1.0)),
            ],
        ),
        (
            "B",
            [
                MoebiusElement::loxodromic(1.85, 1.2),
                MoebiusElement::loxodromic(2.0, 0.3).conjugate_by(&axis_map(PI / 2.0, 1.0)),
            ],
        ),
        (
            "C",
            [
                MoebiusElement::loxodromic(2.4, 0.0),
                MoebiusElement::loxodromic(2.6, 2.0).conjugate_by(&axis_map(0.7, 0.5f64.exp())),
            ],
        ),
    ]
}

/// `cosh d(o, g o)` at `o = (0, 0, 1)`: half the squared Frobenius norm.
fn cosh_disp(g: &MoebiusElement) -> f64 {
    g.entries().iter().map(|z| z.norm_sqr()).sum::<f64>() / 2.0
}

/// `(l, φ)` from the trace, with the `|λ| ≥ 1` eigenvalue.
fn trace_length(g: &MoebiusElement) -> (f64, f64) {
    let t = g.entries()[0] + g.entries()[3];
    let r = (t * t - 4.0).sqrt();
    let mut lam = (t + r) / 2.0;
    if lam.norm() < 1.0 {
        lam = (t - r) / 2.0;
    }
    (2.0 * lam.norm().ln(), wrap_phase(2.0 * lam.arg()))
}

// Letters 0..4: g0, g0⁻¹, g1, g1⁻¹.
fn inv_letter(a: u8) -> u8 {
    a ^ 1
}

fn reduced_words(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in 0..4u8 {
                if w.last().is_some_and(|&b| b == inv_letter(a)) {
                    continue;
                }
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn evaluate(word: &[u8], letters: &[MoebiusElement; 4]) -> MoebiusElement {
    word.iter()
        .fold(MoebiusElement::identity(), |acc, &a| acc.compose(&letters[a as usize]))
}

fn class_key(word: &[u8]) -> Vec<u8> {
    let inverse: Vec<u8> = word.iter().rev().map(|&a| inv_letter(a)).collect();
    let n = word.len();
    (0..n)
        .flat_map(|r| {
            let a: Vec<u8> = (0..n).map(|i| word[(i + r) % n]).collect();
            let b: Vec<u8> = (0..n).map(|i| inverse[(i + r) % n]).collect();
            [a, b]
        })
        .min()
        .unwrap()
}

fn tiling_oracle() -> (bool, String) {
    let (radius, l_cut, max_len) = (9.0f64, 5.0, 8);
    let mut ok = true;
    let mut detail = String::new();
    let words = reduced_words(max_len + 1);
    for (name, gens) in schottky_groups() {
        let letters = [gens[0], gens[0].inverse(), gens[1], gens[1].inverse()];
        let elems: Vec<(usize, Vec<u8>, MoebiusElement)> = words
            .iter()
            .map(|w| (w.len(), w.clone(), evaluate(w, &letters)))
            .collect();
        let cosh_r = radius.cosh();
        // The truncation is valid only if no longer word reaches the ball or the cutoff.
        let clear_of_boundary = elems.iter().all(|(_, _, g)| (cosh_disp(g) / cosh_r - 1.0).abs() > 1e-9);
        let escapes = elems
            .iter()
            .filter(|(n, _, _)| *n == max_len + 1)
            .all(|(_, w, g)| {
                let cyclic = w[0] != inv_letter(*w.last().unwrap());
                cosh_disp(g) > cosh_r * (1.0 + 1e-9) && (!cyclic || trace_length(g).0 > l_cut)
            });

        let meta = ManifoldMeta::new(name, 1.0, None, None).unwrap();
        let pres = GroupPresentation::new(gens.to_vec(), H3Point::origin(), meta).unwrap();
        let set = tile(&pres, radius, &TilingOptions::default()).unwrap();
        let inside: Vec<&MoebiusElement> = elems
            .iter()
            .filter(|(n, _, g)| *n <= max_len && cosh_disp(g) <= cosh_r)
            .map(|(_, _, g)| g)
            .collect();
        let same_elements = inside.len() == set.len() && inside.iter().all(|g| set.contains(g));
        let mut oracle: BTreeSet<Vec<u8>> = BTreeSet::new();
        let mut oracle_lengths = Vec::new();
        for (n, w, g) in &elems {
            if *n == 0 || *n > max_len || w[0] == inv_letter(w[n - 1]) {
                continue;
            }
            let (l, phi) = trace_length(g);
            if l <= l_cut && oracle.insert(class_key(w)) {
                oracle_lengths.push((l, phi));
            }
        }
        let classes = conjugacy_reduce(&set, l_cut, None, &ConjugacyOptions::default());
        let mut found: Vec<(f64, f64)> = classes.iter().map(|c| (c.length.length, c.length.phase)).collect();
        oracle_lengths.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let same_classes = found.len() == oracle_lengths.len()
            && found
                .iter()
                .zip(&oracle_lengths)
                .all(|(a, b)| (a.0 - b.0).abs() < 1e-9 && wrap_phase(a.1 - b.1).abs() < 1e-8);
        ok &= clear_of_boundary && escapes && same_elements && same_classes;
        let _ = write!(
            detail,
            "{name}: {} elements (oracle {}), {} classes (oracle {}); ",
            set.len(),
            inside.len(),
            found.len(),
            oracle_lengths.len()
        );
    }

    let mut worst: f64 = 0.0;
    for i in 1..=10 {
        for j in 1..=10 {
            let (r, l) = (0.1 * i as f64, 1.0 * j as f64);
            let y = r.cosh() * (l / 2.0).cosh();
            let want = 2.0 * (y + (y * y - 1.0).sqrt()).ln();
            worst = worst.max(rel(rigorous_radius(r, l), want));
        }
    }
    ok &= worst <= 1e-12;
    let _ = write!(detail, "rigorous_radius rel err {worst:.1e}");
    (ok, detail)
}

// ---------------------------------------------------------------- fixtures

const SMALL_VOLUME: [(&str, f64, f64, f64, u32); 7] = [
    // name, volume, k1 (boundary element), k1 (orbit sum), multiplicity
    ("m003(-3,1)", 0.9427, 5.27, 5.10, 1),
    ("m003(-2,3)", 0.9814, 5.40, 5.34, 1),
    ("m007(3,1)", 1.0149, 5.29, 5.37, 1),
    ("m003(-4,3)", 1.2637, 4.58, 4.31, 2),
    ("m004(6,1)", 1.2845, 4.53, 4.35, 1),
    ("m004(1,2)", 1.3985, 4.03, 3.93, 1),
    ("m009(4,1)", 1.4141, 5.26, 4.84, 2),
];

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/small_volume")
}

fn fixture_file(name: &str) -> PathBuf {
    let stem: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    fixture_dir().join(format!("{}.lengths.tsv", stem.trim_end_matches('_')))
}

fn posm_k1(text: &str, volume: f64, multiplicity: u32) -> Option<f64> {
    let spec = h3spec::io::parse_spectrum(text).ok()?;
    let sched = SmoothingSchedule::default();
    let grid = k_grid(1.0, 8.0, 0.01).ok()?;
    let model = PosmModel::new(&spec, volume, &sched, 8.0, &StaircaseOptions::default()).ok()?;
    let stair = model.sample(&grid).ok()?;
    let exact = |k: f64| model.total(k).unwrap_or(f64::NAN);
    let opts = ExtractOptions {
        assumed_multiplicity: multiplicity,
        ..Default::default()
    };
    extract_eigenvalues(&stair, &sched, Some(&exact), &opts).entries.first().map(|e| e.k)
}

fn fixture_reproduction() -> (Status, String) {
    if SMALL_VOLUME.iter().any(|t| !fixture_file(t.0).exists()) {
        return (
            Status::Skipped,
            format!("length fixtures not present under {}", fixture_dir().display()),
        );
    }
    let mut ok = true;
    let mut detail = String::new();
    for (name, v, bem, posm, m) in SMALL_VOLUME {
        let text = std::fs::read_to_string(fixture_file(name)).unwrap();
        let volume: f64 = h3spec::io::header_pairs(&text)
            .get("volume")
            .and_then(|x| x.parse().ok())
            .unwrap_or(f64::NAN);
        if !((volume - v).abs() <= 5e-5) {
            ok = false;
            let _ = write!(detail, "{name}: fixture volume {volume} vs {v}; ");
            continue;
        }
        match posm_k1(&text, volume, m) {
            Some(k1) => {
                let dev = (k1 - bem).abs() / bem;
                ok &= (k1 - posm).abs() <= 0.05 && dev <= 0.08;
                let _ = write!(detail, "{name} {k1:.3} (expected {posm}, rel. to boundary element {dev:.3}); ");
            }
            None => {
                ok = false;
                let _ = write!(detail, "{name}: no k1; ");
            }
        }
    }
    (if ok { Status::Pass } else { Status::Fail }, detail)
}

// ---------------------------------------------------------------- measures and fits

fn anisotropy() -> (bool, String) {
    let v = 1.3;
    let n = 60;
    let w = analysis::weyl_sequence(v, n).unwrap();
    let lowered: Vec<f64> = w.iter().map(|k| 0.97 * k).collect();
    let mut first_low = w.clone();
    first_low[0] *= 0.9;
    let mut worst: f64 = 0.0;
    let mut response = true;
    for i in 1..=400 {
        let s = 1.0 + 0.01 * i as f64;
        worst = worst.max((analysis::zeta_ratio(&w, v, s, n).unwrap().value - 1.0).abs());
        response &= analysis::zeta_ratio(&lowered, v, s, n).unwrap().value > 1.0;
        response &= analysis::zeta_ratio(&first_low, v, s, n).unwrap().value > 1.0;
    }
    let d = analysis::spectral_distance_partial(&w, &w, n).unwrap();
    let d_max = d.iter().copied().fold(0.0, f64::max);
    (
        worst <= 1e-12 && d_max == 0.0 && response,
        format!("|Delta-1| <= {worst:.1e}, max d_s {d_max:e}, lowered spectra give Delta > 1: {response}"),
    )
}

fn record(x_col: analysis::Column, x: f64, y_col: analysis::Column, y: f64) -> ManifoldRecord {
    let mut volume = 1.0;
    let mut diameter = None;
    let mut k1 = None;
    for (c, val) in [(x_col, x), (y_col, y)] {
        match c {
            analysis::Column::Volume => volume = val,
            analysis::Column::Diameter => diameter = Some(val),
            analysis::Column::K1 => k1 = Some(val),
        }
    }
    ManifoldRecord {
        meta: ManifoldMeta::new("synthetic", volume.max(1e-6), None, diameter).unwrap(),
        k1,
        l_min: None,
        group: GroupTag::Other,
    }
}

struct CatalogCase {
    kind: FitKind,
    param: &'static str,
    start: f64,
    n: usize,
    x_range: (f64, f64),
    noise: f64,
}

fn catalog_coverage(case: &CatalogCase, rng: &mut ChaCha8Rng, trials: usize) -> usize {
    let truth = FitModel::new(case.kind);
    let target = truth.get(case.param).unwrap();
    let (xc, yc) = case.kind.columns();
    let noise = Normal::new(0.0, case.noise).unwrap();
    (0..trials)
        .filter(|_| {
            let data: Vec<ManifoldRecord> = (0..case.n)
                .map(|_| {
                    let x = rng.gen_range(case.x_range.0..case.x_range.1);
                    record(xc, x, yc, truth.eval(x).unwrap() + noise.sample(rng))
                })
                .collect();
            let start = FitModel::new(case.kind).with(case.param, case.start).unwrap();
            match fit(&start, &data, &[case.param]) {
                Ok(r) => (r.model.get(case.param).unwrap() - target).abs() <= 3.0 * r.sigma_of(case.param).unwrap(),
                Err(_) => false,
            }
        })
        .count()
}

fn multiplicity_coverage(model: MultiplicityModel, truth: &[f64], rng: &mut ChaCha8Rng, trials: usize) -> usize {
    let rel_noise = 0.1;
    let unit = Normal::new(0.0, 1.0).unwrap();
    (0..trials)
        .filter(|_| {
            let samples: Vec<MultiplicitySample> = (0..20)
                .map(|i| {
                    let l = 3.1 + 0.2 * i as f64;
                    let m = model.eval(l, truth);
                    MultiplicitySample {
                        l,
                        mean: m * (1.0 + rel_noise * unit.sample(rng)),
                        sigma: Some(rel_noise * m),
                    }
                })
                .collect();
            match fit_multiplicity(&samples, model, (3.0, 7.0)) {
                Ok(f) => f
                    .params
                    .iter()
                    .zip(&f.sigma)
                    .zip(truth)
                    .all(|((p, s), t)| (p - t).abs() <= 3.0 * s),
                Err(_) => false,
            }
        })
        .count()
}

fn fit_round_trips() -> (bool, String) {
    let trials = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cases = [
        CatalogCase {
            kind: FitKind::K1Diameter,
            param: "beta",
            start: 1.3,
            n: 263,
            x_range: (0.6, 1.6),
            noise: 0.18,
        },
        CatalogCase {
            kind: FitKind::VolumeDiameter,
            param: "alpha",
            start: 0.5,
            n: 79,
            x_range: (0.7, 1.6),
            noise: 0.1,
        },
        CatalogCase {
            kind: FitKind::ThinVolume,
            param: "d0",
            start: 0.5,
            n: 41,
            x_range: (1.65, 3.0),
            noise: 0.02,
        },
    ];
    let mut rates = Vec::new();
    for c in &cases {
        rates.push((c.kind.name(), catalog_coverage(c, &mut rng, trials)));
    }
    rates.push((
        "arithmetic a",
        multiplicity_coverage(MultiplicityModel::Arithmetic, &[0.9514], &mut rng, trials),
    ));
    rates.push((
        "non-arithmetic (b,c)",
        multiplicity_coverage(MultiplicityModel::NonArithmetic, &[0.6360, 0.6180], &mut rng, trials),
    ));
    let need = (0.95 * trials as f64).ceil() as usize;
    let ok = rates.iter().all(|(_, n)| *n >= need);
    let detail = rates
        .iter()
        .map(|(name, n)| format!("{name} {n}/{trials}"))
        .collect::<Vec<_>>()
        .join(", ");
    (ok, format!("within 3 sigma: {detail}"))
}

// ---------------------------------------------------------------- harness

fn timed(id: u8, title: &'static str, budget: Duration, f: impl FnOnce() -> (Status, String)) -> Outcome {
    let t = Instant::now();
    let (mut status, mut detail) = f();
    let elapsed = t.elapsed();
    if status == Status::Pass && elapsed > budget {
        status = Status::Fail;
        detail.push_str(&format!(" [over runtime budget {budget:?}]"));
    }
    detail.push_str(&format!(" ({:.2}s)", elapsed.as_secs_f64()));
    Outcome {
        id,
        title,
        status,
        detail,
    }
}

fn pass(r: (bool, String)) -> (Status, String) {
    (if r.0 { Status::Pass } else { Status::Fail }, r.1)
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let outcomes = vec![
        timed(1, "special functions", secs(10), || pass(special_functions())),
        timed(2, "smoothing identity", secs(60), || pass(smoothing_identity())),
        timed(3, "quoted precision numbers", secs(1), || pass(quoted_precision())),
        timed(4, "zero-length/Weyl agreement", secs(1), || pass(zero_length_weyl())),
        timed(5, "tiling oracle equivalence", secs(300), || pass(tiling_oracle())),
        timed(6, "fixture reproduction", secs(60), fixture_reproduction),
        timed(7, "anisotropy measures", secs(1), || pass(anisotropy())),
        timed(8, "fit round trips", secs(120), || pass(fit_round_trips())),
    ];
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        };
        println!("criterion {} {tag:<7} {}: {}", o.id, o.title, o.detail);
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| o.status == Status::Fail).map(|o| o.id).collect();
    assert_eq!(failed, KNOWN_FAILURES, "failing criteria differ from the recorded ones");
}
