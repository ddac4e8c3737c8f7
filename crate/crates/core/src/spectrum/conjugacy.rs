//! Reduction of an element set to closed geodesics (conjugacy classes).

use rayon::prelude::*;

use super::tiling::ElementSet;
use super::{GeodesicClass, Topology};
use crate::moebius::{ComplexLength, ElementClass, GeometryTolerances, MoebiusElement};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugacyOptions {
    /// Elements whose lengths differ by more than this are never compared.
    pub bin_tol: f64,
    /// Added to every distance bound to absorb rounding.
    pub slack: f64,
    pub geometry: GeometryTolerances,
}

impl Default for ConjugacyOptions {
    fn default() -> Self {
        Self {
            bin_tol: 1e-6,
            slack: 1e-6,
            geometry: GeometryTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    idx: u32,
    cl: ComplexLength,
    rho: f64,
}

/// One [`GeodesicClass`] (multiplicity 1) per conjugacy class of
/// hyperbolic or loxodromic elements with `l ≤ l_cut`.
///
/// `g` and `g⁻¹` describe the same unoriented geodesic and are merged. A
/// class containing both `g` and a conjugate of `g⁻¹` is a mirrored
/// interval. With `radius_bound`, only elements whose axis passes within
/// that distance of the basepoint are considered.
///
/// Conjugators are drawn from the set itself. For a complete tiling they
/// are limited to those that can map one axis foot point to another,
/// `d(x, hx) ≤ ρ_g + ρ_max + l/2`.
pub fn conjugacy_reduce(
    set: &ElementSet,
    l_cut: f64,
    radius_bound: Option<f64>,
    opts: &ConjugacyOptions,
) -> Vec<GeodesicClass> {
    let elements = set.elements();
    let basepoint = *set.basepoint();
    let geom = opts.geometry;

    let has_torsion = elements
        .par_iter()
        .any(|g| g.classify_with(&geom) == ElementClass::Elliptic);

    let mut candidates: Vec<Candidate> = (0..elements.len())
        .into_par_iter()
        .filter_map(|i| {
            let g = &elements[i];
            let cl = g.complex_length_with(&geom).ok()?;
            if cl.length > l_cut * (1.0 + 1e-12) {
                return None;
            }
            let rho = g.axis_distance(&basepoint).ok()?;
            if let Some(bound) = radius_bound {
                if rho > bound + opts.slack {
                    return None;
                }
            }
            Some(Candidate {
                idx: i as u32,
                cl,
                rho,
            })
        })
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    candidates.sort_by(|a, b| a.cl.length.total_cmp(&b.cl.length).then(a.idx.cmp(&b.idx)));
    let min_len = candidates[0].cl.length;

    let mut bins: Vec<&[Candidate]> = Vec::new();
    let mut start = 0;
    for i in 1..=candidates.len() {
        if i == candidates.len()
            || candidates[i].cl.length - candidates[i - 1].cl.length > opts.bin_tol
        {
            bins.push(&candidates[start..i]);
            start = i;
        }
    }

    let per_bin: Vec<Vec<GeodesicClass>> = bins
        .par_iter()
        .map(|bin| reduce_bin(set, bin, min_len, has_torsion, opts))
        .collect();
    per_bin.into_iter().flatten().collect()
}

fn reduce_bin(
    set: &ElementSet,
    bin: &[Candidate],
    min_len: f64,
    has_torsion: bool,
    opts: &ConjugacyOptions,
) -> Vec<GeodesicClass> {
    let elements = set.elements();
    let mut members: Vec<Candidate> = bin.to_vec();
    members.sort_by(|a, b| a.rho.total_cmp(&b.rho).then(a.idx.cmp(&b.idx)));
    // Members keyed on |g|², which approx_eq keeps within 2·tol relative.
    let tol = set.dedup_tol();
    let mut keyed: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .map(|(p, c)| (elements[c.idx as usize].norm_sqr(), p))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lookup = |c: &MoebiusElement, inverse: bool| -> Option<usize> {
        let n = c.norm_sqr();
        let lo = keyed.partition_point(|k| k.0 < n * (1.0 - 3.0 * tol));
        let hi = keyed.partition_point(|k| k.0 <= n * (1.0 + 3.0 * tol));
        if lo >= hi {
            return None;
        }
        let probe = if inverse { c.inverse() } else { *c };
        keyed[lo..hi]
            .iter()
            .find(|k| elements[members[k.1].idx as usize].approx_eq(&probe, tol))
            .map(|k| k.1)
    };
    let rho_max = members.iter().map(|c| c.rho).fold(0.0, f64::max);

    let mut visited = vec![false; members.len()];
    let mut n_visited = 0;
    let mut out = Vec::new();
    for root in 0..members.len() {
        if visited[root] {
            continue;
        }
        let cand = members[root];
        let g = elements[cand.idx as usize];
        let bound = cand.rho + rho_max + cand.cl.length / 2.0 + opts.slack;
        let conjugators = match set.complete_radius() {
            Some(r) if r >= bound => set.within(bound),
            _ => set.within(f64::INFINITY),
        };

        let mut oriented = vec![false; members.len()];
        let mut reversed = vec![false; members.len()];
        oriented[root] = true;
        let mut reached = n_visited + 1;
        let mark = |flags: &mut Vec<bool>, other: &Vec<bool>, p: usize, reached: &mut usize| {
            if !flags[p] {
                flags[p] = true;
                if !other[p] && !visited[p] {
                    *reached += 1;
                }
            }
        };
        for &h in conjugators {
            let c = g.conjugate_by(&elements[h as usize]);
            if let Some(p) = lookup(&c, false) {
                mark(&mut oriented, &reversed, p, &mut reached);
            }
            if let Some(p) = lookup(&c, true) {
                mark(&mut reversed, &oriented, p, &mut reached);
            }
            if !has_torsion && reached == members.len() {
                break;
            }
        }

        let mirrored = (0..members.len()).any(|p| oriented[p] && reversed[p]);
        for p in 0..members.len() {
            if (oriented[p] || reversed[p]) && !visited[p] {
                visited[p] = true;
                n_visited += 1;
            }
        }

        out.push(GeodesicClass {
            length: cand.cl,
            multiplicity: 1,
            topology: if mirrored {
                Topology::MirroredInterval
            } else {
                Topology::Circle
            },
            primitive_length: primitive_length(set, &cand, min_len, opts),
            representative_word: set.word(cand.idx as usize),
        });
    }
    out
}

// Length of the primitive root, found by looking up n-th roots in the set.
fn primitive_length(set: &ElementSet, cand: &Candidate, min_len: f64, opts: &ConjugacyOptions) -> f64 {
    let g = set.elements()[cand.idx as usize];
    let n_max = (cand.cl.length / min_len + 1e-9).floor() as u32;
    for n in (2..=n_max).rev() {
        for branch in 0..n {
            let Ok(r) = g.root(n, branch) else { continue };
            if set.contains(&r) {
                return r
                    .complex_length_with(&opts.geometry)
                    .map(|c| c.length)
                    .unwrap_or(cand.cl.length / n as f64);
            }
        }
    }
    cand.cl.length
}
