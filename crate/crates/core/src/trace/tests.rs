use super::*;
use crate::moebius::ComplexLength;
use crate::spectrum::{GeodesicClass, SpectrumProvenance, Topology};
use proptest::prelude::*;

// Composite Simpson on [a, b] with n (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn n0_by_integral(p_sq: f64, eps: f64, v: f64) -> f64 {
    let top = (p_sq.max(0.0) + 12.0 * eps * eps).sqrt();
    let f = |q: f64| q * q * 0.5 * erfc((q * q - p_sq) / (eps * eps));
    v / (2.0 * PI * PI) * simpson(f, 0.0, top, 20_000)
}

fn htilde_by_simpson(l: f64, p_sq: f64, eps: f64) -> f64 {
    let e4 = eps.powi(4);
    let top = (p_sq.max(0.0) + 10.0 * eps * eps).sqrt();
    let f = |q: f64| {
        let t = q * q - p_sq;
        q * (-t * t / e4).exp() * (q * l).sin()
    };
    2.0 / (l * eps * eps * PI.powf(1.5)) * simpson(f, 0.0, top, 40_000)
}

fn spectrum(entries: &[(f64, f64, u32)], cutoff: f64) -> LengthSpectrum {
    let classes = entries
        .iter()
        .map(|&(l, phi, m)| {
            GeodesicClass::new(ComplexLength::new(l, phi).unwrap(), m, Topology::Circle, l, None).unwrap()
        })
        .collect();
    LengthSpectrum::new(classes, SpectrumProvenance::new(cutoff, cutoff, false)).unwrap()
}

#[test]
fn schedule_is_continuous() {
    let s = SmoothingSchedule::default();
    assert!((s.eps(1.0) - 1.5).abs() < 1e-12);
    assert!((s.eps(1.0 - 1e-12) - 1.5).abs() < 1e-9);
    assert!((s.eps(0.0) - 1.2).abs() < 1e-15);
    assert!((s.eps(4.0) - (0.832 * 2.0 + 0.668)).abs() < 1e-15);
    assert!(SmoothingSchedule::new([0.0, 0.0, -1.0], [1.0, 0.0]).is_err());
}

#[test]
fn smoothing_h_limits() {
    assert!((smoothing_h(4.0, 4.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
    assert!(smoothing_h(100.0, 4.0, 1.0).unwrap() < 1e-30);
    assert!((smoothing_h(-100.0, 4.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!(smoothing_h(1.0, 1.0, 0.0).is_err());
}

#[test]
fn zero_length_term_matches_integral() {
    for &(p_sq, eps) in &[(-0.5, 1.2), (0.0, 1.3), (3.0, 1.5), (24.0, 2.5), (99.0, 3.3), (399.0, 4.4)] {
        let closed = zero_length_term(p_sq, eps, 1.0).unwrap();
        let oracle = n0_by_integral(p_sq, eps, 1.0);
        assert!((closed / oracle - 1.0).abs() < 1e-9, "p²={p_sq}: {closed} vs {oracle}");
    }
}

#[test]
fn zero_length_term_approaches_weyl() {
    let mut last = f64::INFINITY;
    for k in [5.0, 10.0, 20.0, 40.0] {
        let eps = SmoothingSchedule::default().eps(k);
        let p_sq = p_sq_of_k(k);
        let rel = (zero_length_term(p_sq, eps, 1.0).unwrap() / weyl_average(p_sq, 1.0) - 1.0).abs();
        assert!(rel < last);
        last = rel;
    }
    assert!(last < 1e-3);
}

#[test]
fn htilde_matches_simpson() {
    for &(l, p_sq, eps) in &[(0.9, 24.0, 2.5), (3.0, 3.0, 1.5), (6.5, 99.0, 3.3), (1.2, -0.4, 1.2)] {
        let (v, err) = htilde_quadrature(l, p_sq, eps, 1e-13).unwrap();
        let oracle = htilde_by_simpson(l, p_sq, eps);
        assert!((v - oracle).abs() < 1e-10, "l={l} p²={p_sq}: {v} vs {oracle}");
        assert!(err <= 1e-13);
    }
}

#[test]
fn stationary_phase_is_the_long_orbit_limit() {
    let eps = 3.3;
    for &(p, l) in &[(10.0f64, 2.0f64), (10.0, 5.0), (20.0, 6.0)] {
        let q = htilde(l, p * p, eps, HtildeMode::Quadrature).unwrap();
        let s = htilde(l, p * p, eps, HtildeMode::StationaryPhase).unwrap();
        let scale = 1.0 / (PI * l);
        assert!((q - s).abs() < 0.05 * scale, "p={p} l={l}: {q} vs {s}");
    }
    assert!(matches!(
        htilde(1.0, -0.3, 1.2, HtildeMode::StationaryPhase),
        Err(Error::Mode(_))
    ));
}

#[test]
fn panel_sum_matches_per_orbit_quadrature() {
    let spec = spectrum(&[(0.8, 0.3, 2), (1.7, -2.0, 1), (3.3, 1.0, 6), (6.9, 0.0, 40)], 7.0);
    let sched = SmoothingSchedule::default();
    let model = PosmModel::new(&spec, 0.98, &sched, 12.0, &StaircaseOptions::default()).unwrap();
    for k in [0.2, 0.99, 1.0, 3.7, 8.0, 12.0] {
        let p_sq = p_sq_of_k(k);
        let eps = sched.eps(k);
        let direct: f64 = spec
            .classes()
            .iter()
            .map(|c| {
                let (l, phi) = (c.length.length, c.length.phase);
                let w = c.multiplicity as f64 * 2.0 * c.primitive_length / (2.0 * (l.cosh() - phi.cos()));
                w * htilde_quadrature(l, p_sq, eps, 1e-14).unwrap().0
            })
            .sum();
        let panel = model.oscillating(k).unwrap();
        assert!((panel - direct).abs() < 1e-10, "k={k}: {panel} vs {direct}");
    }
    assert!(model.oscillating(20.0).is_err());
}

#[test]
fn empty_spectrum_gives_zero_length_term() {
    let spec = spectrum(&[], 7.0);
    let sched = SmoothingSchedule::default();
    let grid = k_grid(0.0, 6.0, 0.5).unwrap();
    let st = staircase_posm(&spec, 1.3, &grid, &sched).unwrap();
    for (i, &k) in grid.iter().enumerate() {
        assert_eq!(st.oscillating[i], 0.0);
        let n0 = zero_length_term(p_sq_of_k(k), sched.eps(k), 1.3).unwrap();
        assert_eq!(st.value(i), n0);
    }
}

#[test]
fn grid_validation() {
    assert_eq!(k_grid(0.0, 1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert!(k_grid(1.0, 0.0, 0.1).is_err());
    assert!(k_grid(0.0, 1.0, 0.0).is_err());
    let spec = spectrum(&[], 7.0);
    let sched = SmoothingSchedule::default();
    assert!(staircase_posm(&spec, 1.0, &[1.0, 0.5], &sched).is_err());
}

#[test]
fn resolution_warning_grows_with_k() {
    let sched = SmoothingSchedule::default();
    let t5 = truncation_tail(p_sq_of_k(5.0), sched.eps(5.0), 7.0);
    let t15 = truncation_tail(p_sq_of_k(15.0), sched.eps(15.0), 7.0);
    let t30 = truncation_tail(p_sq_of_k(30.0), sched.eps(30.0), 7.0);
    assert!(t5 < StaircaseOptions::default().warn_tail, "{t5}");
    assert!(t15 > t5 && t30 > t15);
    assert_eq!(truncation_tail(-0.5, 1.2, 7.0), 0.0);
}

fn weyl_staircase(v: f64, kmax: f64) -> (SpectralStaircase, SmoothingSchedule) {
    let k = k_grid(1.0, kmax, 0.01).unwrap();
    let avg: Vec<f64> = k.iter().map(|&k| weyl_average(p_sq_of_k(k), v)).collect();
    let n = k.len();
    let st = SpectralStaircase::from_parts(k, vec![1.0; n], avg, vec![0.0; n]).unwrap();
    (st, SmoothingSchedule::default())
}

#[test]
fn weyl_staircase_eigenvalues() {
    let v = 0.9427;
    let (st, sched) = weyl_staircase(v, 8.0);
    let exact = |k: f64| weyl_average(p_sq_of_k(k), v);
    let list = extract_eigenvalues(&st, &sched, Some(&exact), &ExtractOptions::default());
    assert!(!list.is_empty());
    for (i, e) in list.entries.iter().enumerate() {
        let n = i as f64 + 1.0;
        let want = (1.0 + (6.0 * PI * PI * (n + 0.5) / v).powf(2.0 / 3.0)).sqrt();
        assert!((e.k - want).abs() < 2e-6, "i={n}: {} vs {want}", e.k);
        assert_eq!(e.multiplicity, 1);
        assert!(!e.ambiguous);
    }
    let k1 = list.entries[0].k;
    assert!((k1 - (1.0 + (9.0 * PI * PI / v).powf(2.0 / 3.0)).sqrt()).abs() < 2e-6);
}

#[test]
fn jumps_give_multiplicities() {
    // A step of height 3 at k = 2 and height 1 at k = 3.
    let k = k_grid(1.0, 4.0, 0.01).unwrap();
    let n = k.len();
    let avg: Vec<f64> = k
        .iter()
        .map(|&k| if k < 2.0 { 1.0 } else if k < 3.0 { 4.0 } else { 5.0 })
        .collect();
    let st = SpectralStaircase::from_parts(k, vec![1.0; n], avg, vec![0.0; n]).unwrap();
    let list = extract_eigenvalues(&st, &SmoothingSchedule::default(), None, &ExtractOptions::default());
    assert_eq!(list.len(), 2);
    assert_eq!(list.entries[0].multiplicity, 3);
    assert_eq!(list.entries[1].multiplicity, 1);
    assert!((list.entries[0].k - 2.0).abs() < 0.011);
    assert_eq!(list.ks_with_multiplicity().len(), 4);
}

#[test]
fn wiggle_is_flagged() {
    let k = k_grid(1.0, 3.0, 0.01).unwrap();
    let n = k.len();
    let avg: Vec<f64> = k.iter().map(|&k| 1.5 + 0.3 * (20.0 * k).sin() + 0.1 * k).collect();
    let st = SpectralStaircase::from_parts(k, vec![1.0; n], avg, vec![0.0; n]).unwrap();
    let list = extract_eigenvalues(&st, &SmoothingSchedule::default(), None, &ExtractOptions::default());
    assert!(list.entries.iter().any(|e| e.ambiguous));
}

#[test]
fn precision_values() {
    let a = erf_inv(0.5).unwrap();
    let d = precision_estimate(5.0, 2.0, 1);
    assert!((d - ((25.0 + a * 4.0f64).sqrt() - 5.0)).abs() < 1e-14);
    assert_eq!(precision_estimate(5.0, 2.0, 2), d);
    let d3 = precision_estimate(5.0, 2.0, 3);
    assert!((d3 - ((25.0 + 0.8 * 4.0f64).sqrt() - 5.0)).abs() < 1e-14);
    assert!((PrecisionRule::HalfStep.erf_level(4) - 0.75).abs() < 1e-12);
}

proptest! {
    #[test]
    fn precision_monotone(k in 1.0..20.0f64, eps in 0.5..5.0f64, m in 1u32..6, dm in 0u32..3) {
        for rule in [PrecisionRule::Calibrated, PrecisionRule::HalfStep] {
            let d = precision_estimate_with(k, eps, m, rule);
            prop_assert!(d > 0.0);
            prop_assert!(precision_estimate_with(k, eps * 1.1, m, rule) > d);
            prop_assert!(precision_estimate_with(k, eps, m + dm, rule) >= d);
        }
    }

    #[test]
    fn quadrature_error_estimate_is_honest(l in 0.3..7.0f64, k in 0.2..12.0f64) {
        let sched = SmoothingSchedule::default();
        let (p_sq, eps) = (p_sq_of_k(k), sched.eps(k));
        let (coarse, err) = htilde_quadrature(l, p_sq, eps, 1e-8).unwrap();
        let (fine, _) = htilde_quadrature(l, p_sq, eps, 5e-9).unwrap();
        prop_assert!((coarse - fine).abs() <= err.max(1e-15));
    }

    #[test]
    fn zero_length_term_is_even_and_increasing(p in 0.0..15.0f64, dp in 0.01..1.0f64) {
        let eps = 2.0;
        let a = zero_length_term(p * p, eps, 1.0).unwrap();
        let b = zero_length_term((p + dp).powi(2), eps, 1.0).unwrap();
        prop_assert!(b > a);
        let c = zero_length_term(-p * p, eps, 1.0).unwrap();
        prop_assert!(c <= a);
    }
}
