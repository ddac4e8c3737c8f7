//! Text formats: generator files, spectrum/staircase/eigenvalue TSV,
//! manifold catalogs and `key=value` configs.
//!
//! Every writer puts its provenance in `# key=value` lines ahead of a
//! `#`-prefixed column header. Reals are written with 12 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::analysis::{GroupTag, ManifoldRecord};
use crate::error::{Error, Result};
use crate::moebius::{ComplexLength, H3Point, MoebiusElement};
use crate::spectrum::{
    GeodesicClass, GroupPresentation, LengthSpectrum, Letter, ManifoldMeta, SpectrumProvenance, Topology,
};
use crate::trace::{Eigenvalue, EigenvalueList, SmoothingSchedule, SpectralStaircase};

/// Determinant tolerance for generator files, whose entries are rounded.
pub const FILE_DET_TOL: f64 = 1e-6;

/// `x` with 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        // Keep the sign of -0.0 out of files.
        return "0".into();
    }
    format!("{x:.11e}")
}

/// `x` rounded to what [`fmt_real`] writes.
pub fn round_real(x: f64) -> f64 {
    fmt_real(x).parse().unwrap_or(x)
}

fn parse_real(line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(line, format!("{what}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("{what}: `{field}` is not finite")));
    }
    Ok(v)
}

// Non-empty, non-comment lines with 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// The `# key=value` provenance lines of a file.
pub fn header_pairs(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn write_header(out: &mut String, pairs: &[(&str, String)], columns: &[&str]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "# {}", columns.join("\t"));
}

/// Parse a generator file: `key=value` metadata, then one generator per
/// line as eight reals `Re a, Im a, ..., Re d, Im d`.
pub fn parse_generators(text: &str) -> Result<GroupPresentation> {
    let mut name = None;
    let mut volume = None;
    let mut spine = None;
    let mut diameter = None;
    let mut gens = Vec::new();
    let mut last_line = 0;
    for (ln, line) in data_lines(text) {
        last_line = ln;
        if let Some((k, v)) = line.split_once('=') {
            if !gens.is_empty() {
                return Err(Error::parse(ln, "metadata after the first generator"));
            }
            let v = v.trim();
            match k.trim() {
                "name" => name = Some(v.to_string()),
                "volume" => volume = Some(parse_real(ln, v, "volume")?),
                "spine_radius" => spine = Some(parse_real(ln, v, "spine_radius")?),
                "diameter" => diameter = Some(parse_real(ln, v, "diameter")?),
                other => return Err(Error::parse(ln, format!("unknown key `{other}`"))),
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::parse(ln, format!("expected 8 numbers, found {}", fields.len())));
        }
        let mut x = [0.0; 8];
        for (slot, f) in x.iter_mut().zip(&fields) {
            *slot = parse_real(ln, f, "matrix entry")?;
        }
        let [a, b, c, d] = [0, 2, 4, 6].map(|i| Complex64::new(x[i], x[i + 1]));
        let dev = (a * d - b * c - 1.0).norm();
        if !(dev <= FILE_DET_TOL) {
            return Err(Error::parse(ln, format!("determinant deviates from 1 by {dev:e}")));
        }
        let g = MoebiusElement::normalized(a, b, c, d).map_err(|e| Error::parse(ln, e.to_string()))?;
        gens.push(g);
    }
    let volume = volume.ok_or_else(|| Error::parse(last_line, "missing `volume=`"))?;
    let meta = ManifoldMeta::new(name.unwrap_or_default(), volume, spine, diameter)
        .map_err(|e| Error::parse(last_line, e.to_string()))?;
    GroupPresentation::new(gens, H3Point::origin(), meta).map_err(|e| Error::parse(last_line, e.to_string()))
}

pub fn write_generators(pres: &GroupPresentation) -> String {
    let mut out = String::new();
    let m = pres.meta();
    let _ = writeln!(out, "name={}", m.name);
    let _ = writeln!(out, "volume={}", fmt_real(m.volume));
    if let Some(r) = m.spine_radius {
        let _ = writeln!(out, "spine_radius={}", fmt_real(r));
    }
    if let Some(d) = m.diameter {
        let _ = writeln!(out, "diameter={}", fmt_real(d));
    }
    for g in pres.generators() {
        let row: Vec<String> = g
            .entries()
            .iter()
            .flat_map(|z| [fmt_real(z.re), fmt_real(z.im)])
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

const SPECTRUM_COLUMNS: [&str; 6] = ["l", "phi", "mult", "topology", "primitive_l", "word"];

fn fmt_word(w: &Option<Vec<Letter>>) -> String {
    match w {
        None => "-".into(),
        Some(w) => w
            .iter()
            .map(|l| {
                let g = l.generator as i64 + 1;
                (if l.inverse { -g } else { g }).to_string()
            })
            .collect::<Vec<_>>()
            .join(","),
    }
}

fn parse_word(ln: usize, s: &str) -> Result<Option<Vec<Letter>>> {
    if s == "-" {
        return Ok(None);
    }
    s.split(',')
        .map(|t| {
            let g: i64 = t
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad word letter `{t}`")))?;
            if g == 0 || g.unsigned_abs() > u32::MAX as u64 {
                return Err(Error::parse(ln, format!("bad word letter `{t}`")));
            }
            Ok(Letter {
                generator: (g.unsigned_abs() - 1) as usize,
                inverse: g < 0,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// The spectrum with every real rounded as [`write_spectrum`] writes it, so
/// that writing and re-reading reproduces it exactly.
pub fn quantize_spectrum(spec: &LengthSpectrum) -> LengthSpectrum {
    let classes = spec
        .classes()
        .iter()
        .map(|c| GeodesicClass {
            length: ComplexLength {
                length: round_real(c.length.length),
                phase: round_real(c.length.phase),
            },
            primitive_length: round_real(c.primitive_length),
            ..c.clone()
        })
        .collect();
    let p = spec.provenance();
    let prov = SpectrumProvenance {
        cutoff: round_real(p.cutoff),
        tiling_radius: round_real(p.tiling_radius),
        dedup_tol: round_real(p.dedup_tol),
        merge_tol: round_real(p.merge_tol),
        ..p.clone()
    };
    LengthSpectrum::new(classes, prov).expect("rounding to 12 digits keeps the cutoff order")
}

pub fn write_spectrum(spec: &LengthSpectrum) -> String {
    let p = spec.provenance();
    let mut out = String::new();
    write_header(
        &mut out,
        &[
            ("cutoff", fmt_real(p.cutoff)),
            ("tiling_radius", fmt_real(p.tiling_radius)),
            ("rigorous", p.rigorous.to_string()),
            ("dedup_tol", fmt_real(p.dedup_tol)),
            ("merge_tol", fmt_real(p.merge_tol)),
            ("element_count", p.element_count.to_string()),
        ],
        &SPECTRUM_COLUMNS,
    );
    for c in spec.classes() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            fmt_real(c.length.length),
            fmt_real(c.length.phase),
            c.multiplicity,
            c.topology.as_str(),
            fmt_real(c.primitive_length),
            fmt_word(&c.representative_word)
        );
    }
    out
}

/// Parse a spectrum TSV. Without a `cutoff` header the longest entry is
/// taken as the cutoff. The `word` column is optional.
pub fn parse_spectrum(text: &str) -> Result<LengthSpectrum> {
    let head = header_pairs(text);
    let get = |k: &str| -> Result<Option<f64>> {
        head.get(k)
            .map(|v| parse_real(0, v, k))
            .transpose()
    };
    let mut classes = Vec::new();
    for (ln, line) in data_lines(text) {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 5 && f.len() != 6 {
            return Err(Error::parse(ln, format!("expected 5 or 6 columns, found {}", f.len())));
        }
        let l = parse_real(ln, f[0], "l")?;
        let phi = parse_real(ln, f[1], "phi")?;
        let m: u32 = f[2]
            .parse()
            .map_err(|_| Error::parse(ln, format!("mult: `{}` is not a count", f[2])))?;
        let topology = match f[3] {
            "circle" => Topology::Circle,
            "mirrored" => Topology::MirroredInterval,
            other => return Err(Error::parse(ln, format!("unknown topology `{other}`"))),
        };
        let prim = parse_real(ln, f[4], "primitive_l")?;
        let word = match f.get(5) {
            Some(w) => parse_word(ln, w)?,
            None => None,
        };
        let cl = ComplexLength::new(l, phi).map_err(|e| Error::parse(ln, e.to_string()))?;
        let class = GeodesicClass::new(cl, m, topology, prim, word).map_err(|e| Error::parse(ln, e.to_string()))?;
        classes.push(class);
    }
    let longest = classes.iter().map(|c| c.length.length).fold(0.0, f64::max);
    let cutoff = get("cutoff")?.unwrap_or(longest);
    if !(cutoff > 0.0) {
        return Err(Error::parse(0, "spectrum has no positive cutoff"));
    }
    let rigorous = match head.get("rigorous").map(String::as_str) {
        None | Some("false") => false,
        Some("true") => true,
        Some(v) => return Err(Error::parse(0, format!("rigorous: `{v}` is not a boolean"))),
    };
    let mut prov = SpectrumProvenance::new(cutoff, get("tiling_radius")?.unwrap_or(cutoff), rigorous);
    if let Some(t) = get("dedup_tol")? {
        prov.dedup_tol = t;
    }
    if let Some(t) = get("merge_tol")? {
        prov.merge_tol = t;
    }
    if let Some(n) = head.get("element_count") {
        prov.element_count = n
            .parse()
            .map_err(|_| Error::parse(0, format!("element_count: `{n}` is not a count")))?;
    }
    LengthSpectrum::new(classes, prov).map_err(|e| Error::parse(0, e.to_string()))
}

const STAIRCASE_COLUMNS: [&str; 6] = ["k", "N", "N_avg", "N_osc", "eps", "tail"];

fn schedule_pairs(s: &SmoothingSchedule) -> Vec<(&'static str, String)> {
    vec![
        ("eps_low", s.low.map(fmt_real).join(",")),
        ("eps_high", s.high.map(fmt_real).join(",")),
    ]
}

pub fn write_staircase(st: &SpectralStaircase, extra: &[(&str, String)]) -> String {
    let mut pairs: Vec<(&str, String)> = vec![
        ("volume", fmt_real(st.volume)),
        ("l_cut", fmt_real(st.l_cut)),
        ("warn_tail", fmt_real(st.warn_tail)),
    ];
    pairs.extend(schedule_pairs(&st.schedule));
    pairs.extend(extra.iter().cloned());
    let mut out = String::new();
    write_header(&mut out, &pairs, &STAIRCASE_COLUMNS);
    for i in 0..st.len() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            fmt_real(st.k[i]),
            fmt_real(st.value(i)),
            fmt_real(st.average[i]),
            fmt_real(st.oscillating[i]),
            fmt_real(st.eps[i]),
            fmt_real(st.tail[i])
        );
    }
    out
}

/// Parse a staircase TSV (the `N` column is recomputed from its parts).
pub fn parse_staircase(text: &str) -> Result<SpectralStaircase> {
    let (mut k, mut eps, mut avg, mut osc, mut tail) = (vec![], vec![], vec![], vec![], vec![]);
    for (ln, line) in data_lines(text) {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 6 {
            return Err(Error::parse(ln, format!("expected 6 columns, found {}", f.len())));
        }
        let x: Vec<f64> = f
            .iter()
            .zip(STAIRCASE_COLUMNS)
            .map(|(s, c)| parse_real(ln, s, c))
            .collect::<Result<_>>()?;
        if k.last().is_some_and(|&last| !(x[0] > last)) || x[0] < 0.0 {
            return Err(Error::parse(ln, "k must be non-negative and ascending"));
        }
        k.push(x[0]);
        avg.push(x[2]);
        osc.push(x[3]);
        eps.push(x[4]);
        tail.push(x[5]);
    }
    let mut st = SpectralStaircase::from_parts(k, eps, avg, osc)?;
    st.tail = tail;
    let head = header_pairs(text);
    for (key, slot) in [("volume", &mut st.volume), ("l_cut", &mut st.l_cut), ("warn_tail", &mut st.warn_tail)] {
        if let Some(v) = head.get(key) {
            *slot = v
                .parse()
                .map_err(|_| Error::parse(0, format!("{key}: `{v}` is not a number")))?;
        }
    }
    if let (Some(lo), Some(hi)) = (head.get("eps_low"), head.get("eps_high")) {
        let nums = |s: &str| -> Result<Vec<f64>> { s.split(',').map(|x| parse_real(0, x.trim(), "schedule")).collect() };
        let (lo, hi) = (nums(lo)?, nums(hi)?);
        let (Ok(lo), Ok(hi)) = (<[f64; 3]>::try_from(lo), <[f64; 2]>::try_from(hi)) else {
            return Err(Error::parse(0, "schedule needs 3 low and 2 high coefficients"));
        };
        st.schedule = SmoothingSchedule::new(lo, hi).map_err(|e| Error::parse(0, e.to_string()))?;
    }
    Ok(st)
}

const EIGEN_COLUMNS: [&str; 3] = ["k", "delta_k", "flags"];

fn fmt_flags(e: &Eigenvalue) -> String {
    let mut s = format!("m={}", e.multiplicity);
    if e.ambiguous {
        s.push_str(",ambiguous");
    }
    s
}

pub fn write_eigenvalues(list: &EigenvalueList, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    write_header(&mut out, extra, &EIGEN_COLUMNS);
    for e in &list.entries {
        let _ = writeln!(out, "{}\t{}\t{}", fmt_real(e.k), fmt_real(e.delta_k), fmt_flags(e));
    }
    out
}

/// Parse an eigenvalue TSV; the flags column is optional.
pub fn parse_eigenvalues(text: &str) -> Result<EigenvalueList> {
    let mut entries: Vec<Eigenvalue> = Vec::new();
    for (ln, line) in data_lines(text) {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(2..=3).contains(&f.len()) {
            return Err(Error::parse(ln, format!("expected 2 or 3 columns, found {}", f.len())));
        }
        let k = parse_real(ln, f[0], "k")?;
        let delta_k = parse_real(ln, f[1], "delta_k")?;
        if !(k > 0.0) {
            return Err(Error::parse(ln, "k must be positive"));
        }
        if entries.last().is_some_and(|e| !(k > e.k)) {
            return Err(Error::parse(ln, "k must be ascending"));
        }
        let mut e = Eigenvalue {
            k,
            delta_k,
            multiplicity: 1,
            ambiguous: false,
        };
        for flag in f.get(2).map(|s| s.split(',')).into_iter().flatten() {
            match flag.trim() {
                "" | "-" => {}
                "ambiguous" => e.ambiguous = true,
                other => {
                    let m = other
                        .strip_prefix("m=")
                        .and_then(|m| m.parse::<u32>().ok())
                        .filter(|&m| m > 0)
                        .ok_or_else(|| Error::parse(ln, format!("unknown flag `{other}`")))?;
                    e.multiplicity = m;
                }
            }
        }
        entries.push(e);
    }
    Ok(EigenvalueList { entries })
}

const CATALOG_COLUMNS: [&str; 6] = ["name", "volume", "diameter", "l_min", "k1", "group"];

/// Parse a manifold catalog. The first non-comment line names the columns
/// (any order, optionally `#`-prefixed when it is the last comment line);
/// `-` marks a missing value. `name` and `volume` are required.
pub fn parse_catalog(text: &str) -> Result<(Vec<&'static str>, Vec<ManifoldRecord>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    // The header may be commented; take the last comment line before data
    // when it names columns.
    let mut header: Option<(usize, String)> = None;
    let mut first_data = None;
    for (ln, l) in lines.by_ref() {
        if let Some(c) = l.strip_prefix('#') {
            if c.contains("name") && !c.contains('=') {
                header = Some((ln, c.trim().to_string()));
            }
            continue;
        }
        if header.is_none() {
            header = Some((ln, l.to_string()));
        } else {
            first_data = Some((ln, l));
        }
        break;
    }
    let (hln, header) = header.ok_or(Error::MissingColumn("name".into()))?;
    let mut cols: Vec<&'static str> = Vec::new();
    for h in header.split('\t').map(str::trim) {
        let c = CATALOG_COLUMNS
            .into_iter()
            .find(|c| *c == h)
            .ok_or_else(|| Error::parse(hln, format!("unknown column `{h}`")))?;
        if cols.contains(&c) {
            return Err(Error::parse(hln, format!("duplicate column `{h}`")));
        }
        cols.push(c);
    }
    for req in ["name", "volume"] {
        if !cols.contains(&req) {
            return Err(Error::MissingColumn(req.into()));
        }
    }
    let mut records = Vec::new();
    for (ln, line) in first_data.into_iter().chain(lines.filter(|(_, l)| !l.starts_with('#'))) {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != cols.len() {
            return Err(Error::parse(ln, format!("expected {} columns, found {}", cols.len(), f.len())));
        }
        let mut name = String::new();
        let mut nums: BTreeMap<&str, Option<f64>> = BTreeMap::new();
        let mut group = GroupTag::Other;
        for (c, v) in cols.iter().zip(&f) {
            match *c {
                "name" => name = v.to_string(),
                "group" => {
                    group = match *v {
                        "A" => GroupTag::A,
                        "B" => GroupTag::B,
                        "-" | "other" => GroupTag::Other,
                        other => return Err(Error::parse(ln, format!("unknown group `{other}`"))),
                    }
                }
                _ if *v == "-" => {
                    nums.insert(c, None);
                }
                _ => {
                    let x = parse_real(ln, v, c)?;
                    if !(x > 0.0) {
                        return Err(Error::parse(ln, format!("{c} must be positive")));
                    }
                    nums.insert(c, Some(x));
                }
            }
        }
        let get = |c: &str| nums.get(c).copied().flatten();
        let volume = get("volume").ok_or_else(|| Error::parse(ln, "volume is required"))?;
        let meta = ManifoldMeta::new(name, volume, None, get("diameter")).map_err(|e| Error::parse(ln, e.to_string()))?;
        records.push(ManifoldRecord {
            meta,
            k1: get("k1"),
            l_min: get("l_min"),
            group,
        });
    }
    Ok((cols, records))
}

pub fn write_catalog(records: &[ManifoldRecord]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_else(|| "-".into());
    let mut out = String::new();
    let _ = writeln!(out, "{}", CATALOG_COLUMNS.join("\t"));
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.meta.name,
            fmt_real(r.meta.volume),
            opt(r.meta.diameter),
            opt(r.l_min),
            opt(r.k1),
            r.group.as_str()
        );
    }
    out
}

/// Parse `key=value` lines; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (ln, line) in data_lines(text) {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(ln, "expected key=value"))?;
        let k = k.trim();
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::parse(ln, format!("bad key `{k}`")));
        }
        out.insert(k.to_string(), (ln, v.trim().to_string()));
    }
    Ok(out)
}
