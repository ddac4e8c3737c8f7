use std::fmt::Write as _;
use std::path::Path;

use h3spec::analysis::{fit as fit_catalog, spectral_distance_partial, weyl_sequence, zeta_ratio, FitKind, FitModel};
use h3spec::io::{self, fmt_real};
use h3spec::spectrum::{
    asymptotic_staircase, classical_staircase, compute_length_spectrum, fit_multiplicity, multiplicity_samples,
    MultiplicityFit, MultiplicityModel, SpectrumConfig, TilingMode, DEFAULT_FIT_RANGE, DEFAULT_WINDOW, TAU_3D,
};
use h3spec::trace::{
    extract_eigenvalues, k_grid, ExtractOptions, HtildeMode, PosmModel, SmoothingSchedule, StaircaseOptions,
};

use crate::settings::{in_file, input, output_path, read, reals, write, CliError, Settings};

type Pairs = Vec<(&'static str, String)>;

fn provenance(command: &str, input: &Path) -> Pairs {
    vec![
        ("h3spec", env!("CARGO_PKG_VERSION").to_string()),
        ("command", command.to_string()),
        ("input", input.display().to_string()),
    ]
}

fn header(out: &mut String, pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
}

pub fn lengths(s: &Settings, path: &Path) -> Result<(), CliError> {
    let pres = in_file(path, io::parse_generators(&read(path)?))?;
    let mode = match s.get("mode", s.mode.clone(), "rigorous".to_string())?.as_str() {
        "rigorous" => TilingMode::Rigorous,
        "quick" => TilingMode::Quick,
        other => return Err(input(format!("unknown mode `{other}` (rigorous or quick)"))),
    };
    let mut cfg = SpectrumConfig::new(s.require("cutoff", s.cutoff)?, mode);
    cfg.radius = s.opt("radius", s.radius)?;
    cfg.tiling.budget = s.get("budget", s.budget, cfg.tiling.budget)?;
    cfg.tiling.dedup_tol = s.get("dedup_tol", s.dedup_tol, cfg.tiling.dedup_tol)?;
    cfg.merge_tol = s.get("merge_tol", s.merge_tol, cfg.merge_tol)?;
    // A budget error leaves no output behind.
    let spec = io::quantize_spectrum(&compute_length_spectrum(&pres, &cfg)?);
    let dir = s.out_dir()?;

    let mut text = String::new();
    let mut pairs = provenance("lengths", path);
    let meta = pres.meta();
    pairs.push(("name", meta.name.clone()));
    pairs.push(("volume", fmt_real(meta.volume)));
    pairs.push(("mode", if mode == TilingMode::Rigorous { "rigorous" } else { "quick" }.into()));
    header(&mut text, &pairs);
    text.push_str(&io::write_spectrum(&spec));
    let out = output_path(&dir, path, "lengths.tsv");
    write(&out, &text)?;

    let p = spec.provenance();
    println!("classes\t{}", spec.len());
    println!(
        "l_min\t{}",
        spec.l_min().map(fmt_real).unwrap_or_else(|| "-".into())
    );
    println!("tiling_radius\t{}", fmt_real(p.tiling_radius));
    println!("elements\t{}", p.element_count);
    println!("output\t{}", out.display());
    Ok(())
}

pub struct EigenArgs {
    pub volume: Option<f64>,
    pub multiplicity: Option<u32>,
    pub htilde: Option<String>,
    pub eps_low: Option<String>,
    pub eps_high: Option<String>,
    pub drop_shortest: bool,
}

pub fn eigen(s: &Settings, path: &Path, a: EigenArgs) -> Result<(), CliError> {
    let text = read(path)?;
    let mut spec = in_file(path, io::parse_spectrum(&text))?;
    if a.drop_shortest {
        spec = spec.without_shortest();
    }
    // The volume may come from the spectrum's own provenance.
    let from_file = io::header_pairs(&text).get("volume").and_then(|v| v.parse().ok());
    let volume: f64 = s
        .opt("volume", a.volume)?
        .or(from_file)
        .ok_or_else(|| input("`--volume` is required"))?;
    let mut sched = SmoothingSchedule::default();
    if let Some(lo) = s.opt("eps_low", a.eps_low)? {
        sched.low = reals("eps_low", &lo)?;
    }
    if let Some(hi) = s.opt("eps_high", a.eps_high)? {
        sched.high = reals("eps_high", &hi)?;
    }
    let sched = SmoothingSchedule::new(sched.low, sched.high)?;
    let mode = match s.get("htilde", a.htilde, "quadrature".to_string())?.as_str() {
        "quadrature" => HtildeMode::Quadrature,
        "stationary" => HtildeMode::StationaryPhase,
        other => return Err(input(format!("unknown htilde mode `{other}` (quadrature or stationary)"))),
    };
    let opts = StaircaseOptions {
        mode,
        ..Default::default()
    };
    let extract = ExtractOptions {
        assumed_multiplicity: s.get("multiplicity", a.multiplicity, 2)?,
        ..Default::default()
    };
    if extract.assumed_multiplicity == 0 {
        return Err(input("multiplicity must be positive"));
    }
    let grid = k_grid(
        s.get("kmin", s.kmin, 1.0)?,
        s.get("kmax", s.kmax, 10.0)?,
        s.get("kstep", s.kstep, 0.01)?,
    )?;
    let k_max = *grid.last().expect("k grid is never empty");
    let model = PosmModel::new(&spec, volume, &sched, k_max, &opts)?;
    let stair = model.sample(&grid)?;
    let refine = |k: f64| model.total(k).unwrap_or(f64::NAN);
    let list = extract_eigenvalues(&stair, &sched, Some(&refine), &extract);

    let warned = stair.warnings();
    let mut pairs = provenance("eigen", path);
    pairs.push(("cutoff", fmt_real(spec.cutoff())));
    pairs.push(("classes", spec.len().to_string()));
    pairs.push(("drop_shortest", a.drop_shortest.to_string()));
    pairs.push(("htilde", if mode == HtildeMode::Quadrature { "quadrature" } else { "stationary" }.into()));
    if let Some(&k) = warned.first() {
        pairs.push(("unresolved_from_k", fmt_real(k)));
        eprintln!(
            "warning: k >= {k:.3} is beyond the resolvable range for l_cut = {}; orbit-sum tail estimate exceeds {}",
            spec.cutoff(),
            stair.warn_tail
        );
    }
    let dir = s.out_dir()?;
    let stair_path = output_path(&dir, path, "staircase.tsv");
    write(&stair_path, &io::write_staircase(&stair, &pairs))?;

    pairs.push(("volume", fmt_real(volume)));
    pairs.push(("eps_low", sched.low.map(fmt_real).join(",")));
    pairs.push(("eps_high", sched.high.map(fmt_real).join(",")));
    pairs.push(("assumed_multiplicity", extract.assumed_multiplicity.to_string()));
    pairs.push(("kmin", fmt_real(grid[0])));
    pairs.push(("kmax", fmt_real(k_max)));
    let eig_path = output_path(&dir, path, "eigen.tsv");
    write(&eig_path, &io::write_eigenvalues(&list, &pairs))?;

    println!("eigenvalues\t{}", list.len());
    if let Some(e) = list.entries.first() {
        println!("k1\t{}\t{}", fmt_real(e.k), fmt_real(e.delta_k));
    }
    println!("staircase\t{}", stair_path.display());
    println!("output\t{}", eig_path.display());
    Ok(())
}

pub fn stats(
    s: &Settings,
    path: &Path,
    window: Option<f64>,
    range: (Option<f64>, Option<f64>),
    lstep: Option<f64>,
) -> Result<(), CliError> {
    let spec = in_file(path, io::parse_spectrum(&read(path)?))?;
    let window = s.get("window", window, DEFAULT_WINDOW)?;
    let range = (
        s.get("fit_min", range.0, DEFAULT_FIT_RANGE.0)?,
        s.get("fit_max", range.1, DEFAULT_FIT_RANGE.1)?,
    );
    let lstep = s.get("lstep", lstep, 0.05)?;
    if !(window > 0.0) || !(lstep > 0.0) || !(range.1 > range.0) {
        return Err(input("window and lstep must be positive and fit_min < fit_max"));
    }
    let cutoff = spec.cutoff();
    let mut pairs = provenance("stats", path);
    pairs.push(("cutoff", fmt_real(cutoff)));
    pairs.push(("window", fmt_real(window)));
    pairs.push(("fit_min", fmt_real(range.0)));
    pairs.push(("fit_max", fmt_real(range.1)));
    pairs.push(("tau", fmt_real(TAU_3D)));
    let dir = s.out_dir()?;

    let mut count = String::new();
    header(&mut count, &pairs);
    count.push_str("# l\tN\tEi_tau_l\n");
    let n_steps = (cutoff / lstep + 1e-9).floor() as usize;
    for i in 1..=n_steps {
        let l = i as f64 * lstep;
        let n = classical_staircase(&spec, l)?;
        let _ = writeln!(count, "{}\t{n}\t{}", fmt_real(l), fmt_real(asymptotic_staircase(l, TAU_3D)?));
    }
    write(&output_path(&dir, path, "count.tsv"), &count)?;

    let samples = multiplicity_samples(&spec, window, 0.0, cutoff);
    let fits: Vec<(MultiplicityModel, Option<MultiplicityFit>)> =
        [MultiplicityModel::Arithmetic, MultiplicityModel::NonArithmetic]
            .into_iter()
            .map(|m| match fit_multiplicity(&samples, m, range) {
                Ok(f) => (m, Some(f)),
                Err(e) => {
                    eprintln!("notice: {m:?} fit skipped: {e}");
                    (m, None)
                }
            })
            .collect();

    let mut mult = String::new();
    header(&mut mult, &pairs);
    mult.push_str("# l\tmean\tarithmetic\tnon_arithmetic\n");
    for smp in &samples {
        let cols: Vec<String> = fits
            .iter()
            .map(|(m, f)| match f {
                Some(f) => fmt_real(m.eval(smp.l, &f.params)),
                None => "-".into(),
            })
            .collect();
        let _ = writeln!(mult, "{}\t{}\t{}", fmt_real(smp.l), fmt_real(smp.mean), cols.join("\t"));
    }
    write(&output_path(&dir, path, "multiplicity.tsv"), &mult)?;

    let mut report = String::new();
    header(&mut report, &pairs);
    report.push_str("# model\tparam\tvalue\tsigma\tresidual_norm\tsamples\n");
    for (m, f) in &fits {
        let Some(f) = f else { continue };
        for (i, name) in m.param_names().iter().enumerate() {
            let line = format!(
                "{}\t{name}\t{}\t{}\t{}\t{}",
                model_name(*m),
                fmt_real(f.params[i]),
                fmt_real(f.sigma[i]),
                fmt_real(f.residual_norm),
                f.n_samples
            );
            println!("{line}");
            let _ = writeln!(report, "{line}");
        }
    }
    write(&output_path(&dir, path, "fits.tsv"), &report)?;
    Ok(())
}

fn model_name(m: MultiplicityModel) -> &'static str {
    match m {
        MultiplicityModel::Arithmetic => "arithmetic",
        MultiplicityModel::NonArithmetic => "non-arithmetic",
    }
}

pub fn measures(
    s: &Settings,
    path: &Path,
    ref_volume: Option<f64>,
    grid: (Option<f64>, Option<f64>, Option<f64>),
    terms: Option<usize>,
) -> Result<(), CliError> {
    let list = in_file(path, io::parse_eigenvalues(&read(path)?))?;
    let ks = list.ks_with_multiplicity();
    let v_ref: f64 = s.require("ref_volume", ref_volume)?;
    let n = s.get("terms", terms, ks.len())?;
    let (smin, smax, sstep) = (
        s.get("smin", grid.0, 1.1)?,
        s.get("smax", grid.1, 5.0)?,
        s.get("sstep", grid.2, 0.1)?,
    );
    if !(sstep > 0.0) || !(smax >= smin) {
        return Err(input("s grid needs smin <= smax and sstep > 0"));
    }
    let mut pairs = provenance("measures", path);
    pairs.push(("ref_volume", fmt_real(v_ref)));
    pairs.push(("terms", n.to_string()));
    let dir = s.out_dir()?;

    let mut zeta = String::new();
    header(&mut zeta, &pairs);
    zeta.push_str("# s\tDelta\ttail\n");
    let steps = ((smax - smin) / sstep + 1e-9).floor() as usize;
    for i in 0..=steps {
        let sv = smin + i as f64 * sstep;
        let z = zeta_ratio(&ks, v_ref, sv, n)?;
        let _ = writeln!(zeta, "{}\t{}\t{}", fmt_real(sv), fmt_real(z.value), fmt_real(z.tail));
    }
    write(&output_path(&dir, path, "zeta.tsv"), &zeta)?;

    let weyl = weyl_sequence(v_ref, n)?;
    let d = spectral_distance_partial(&ks, &weyl, n)?;
    let mut dist = String::new();
    header(&mut dist, &pairs);
    dist.push_str("# n\tk\tk_weyl\td\n");
    for i in 0..n {
        let _ = writeln!(dist, "{}\t{}\t{}\t{}", i + 1, fmt_real(ks[i]), fmt_real(weyl[i]), fmt_real(d[i]));
    }
    write(&output_path(&dir, path, "distance.tsv"), &dist)?;
    println!("terms\t{n}");
    if let Some(last) = d.last() {
        println!("distance\t{}", fmt_real(*last));
    }
    Ok(())
}

pub fn fit(
    s: &Settings,
    path: &Path,
    model: Option<String>,
    free: Option<String>,
    set: &[String],
    curve_points: Option<usize>,
) -> Result<(), CliError> {
    let name: String = s.require("model", model)?;
    let kind = FitKind::from_name(&name).ok_or_else(|| {
        let names: Vec<_> = FitKind::ALL.iter().map(|k| k.name()).collect();
        input(format!("unknown model `{name}`; expected one of {}", names.join(", ")))
    })?;
    let (cols, records) = in_file(path, io::parse_catalog(&read(path)?))?;
    let (xc, yc) = kind.columns();
    for c in [xc, yc] {
        if !cols.contains(&c.as_str()) {
            return Err(h3spec::Error::MissingColumn(c.as_str().into()).into());
        }
    }
    let mut m = FitModel::new(kind);
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| input(format!("--set expects name=value, got `{kv}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| input(format!("--set {k}: `{v}` is not a number")))?;
        m.set(k.trim(), v)?;
    }
    let free: Vec<String> = match s.opt("free", free)? {
        Some(f) => f.split(',').map(|x| x.trim().to_string()).collect(),
        None => kind.default_free().iter().map(|x| x.to_string()).collect(),
    };
    let free_refs: Vec<&str> = free.iter().map(String::as_str).collect();
    let r = fit_catalog(&m, &records, &free_refs)?;

    let mut pairs = provenance("fit", path);
    pairs.push(("model", kind.name().into()));
    pairs.push(("x", xc.as_str().into()));
    pairs.push(("y", yc.as_str().into()));
    for (p, v) in r.model.params() {
        pairs.push((p, fmt_real(*v)));
    }
    for (p, sg) in r.free.iter().zip(&r.sigma) {
        println!("{p}\t{}\t{}", fmt_real(r.model.get(p).unwrap_or(f64::NAN)), fmt_real(*sg));
    }
    let sigma_pairs: Vec<(String, String)> = r
        .free
        .iter()
        .zip(&r.sigma)
        .map(|(p, sg)| (format!("sigma_{p}"), fmt_real(*sg)))
        .collect();
    pairs.push(("residual_sigma", fmt_real(r.residual_sigma)));
    pairs.push(("points", r.xs.len().to_string()));
    pairs.push(("iterations", r.iterations.to_string()));
    println!("residual_sigma\t{}", fmt_real(r.residual_sigma));
    println!("points\t{}", r.xs.len());

    let mut table = String::new();
    header(&mut table, &pairs);
    for (k, v) in &sigma_pairs {
        let _ = writeln!(table, "# {k}={v}");
    }
    let _ = writeln!(table, "# {}\t{}\tfit\tresidual", xc.as_str(), yc.as_str());
    for i in 0..r.xs.len() {
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}",
            fmt_real(r.xs[i]),
            fmt_real(r.ys[i]),
            fmt_real(r.ys[i] - r.residuals[i]),
            fmt_real(r.residuals[i])
        );
    }
    let dir = s.out_dir()?;
    write(&output_path(&dir, path, &format!("{}.fit.tsv", kind.name())), &table)?;

    let points = s.get("curve_points", curve_points, 100)?.max(2);
    let lo = r.xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut curve = String::new();
    header(&mut curve, &pairs);
    let _ = writeln!(curve, "# {}\t{}", xc.as_str(), yc.as_str());
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        // Points outside a model's domain are left out of the curve.
        if let Ok(y) = r.model.eval(x) {
            let _ = writeln!(curve, "{}\t{}", fmt_real(x), fmt_real(y));
        }
    }
    write(&output_path(&dir, path, &format!("{}.curve.tsv", kind.name())), &curve)?;
    Ok(())
}
