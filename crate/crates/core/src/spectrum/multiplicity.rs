use std::cmp::Ordering;
use std::f64::consts::PI;

use super::GeodesicClass;

fn canonical_cmp(a: &GeodesicClass, b: &GeodesicClass) -> Ordering {
    a.length
        .length
        .total_cmp(&b.length.length)
        .then(a.length.phase.total_cmp(&b.length.phase))
        .then(a.primitive_length.total_cmp(&b.primitive_length))
        .then(a.topology.cmp(&b.topology))
        .then(a.multiplicity.cmp(&b.multiplicity))
        .then(a.representative_word.cmp(&b.representative_word))
}

// Split a sorted sequence wherever consecutive keys differ by more than tol.
fn chain_split<T>(items: Vec<T>, key: impl Fn(&T) -> f64, tol: f64) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for it in items {
        let k = key(&it);
        match out.last_mut() {
            Some(group) if k - last <= tol => group.push(it),
            _ => out.push(vec![it]),
        }
        last = k;
    }
    out
}

// Cluster phases around the circle; the groups touching ±π join if close.
fn phase_split(mut items: Vec<GeodesicClass>, tol: f64) -> Vec<Vec<GeodesicClass>> {
    items.sort_by(|a, b| a.length.phase.total_cmp(&b.length.phase).then(canonical_cmp(a, b)));
    let mut groups = chain_split(items, |c| c.length.phase, tol);
    if groups.len() > 1 {
        let first = groups[0][0].length.phase;
        let last = groups.last().and_then(|g| g.last()).map(|c| c.length.phase);
        if let Some(last) = last {
            if first + 2.0 * PI - last <= tol {
                let tail = groups.pop().unwrap_or_default();
                groups[0].extend(tail);
            }
        }
    }
    groups
}

/// Merge classes whose complex lengths agree within `merge_tol`, summing
/// multiplicities.
///
/// Classes with different topology or different primitive length are kept
/// apart. With `by_length_only` the phase is ignored when grouping. The
/// surviving entry is the first member in canonical order, so the result
/// does not depend on the input order.
pub fn count_multiplicities(
    classes: &[GeodesicClass],
    merge_tol: f64,
    by_length_only: bool,
) -> Vec<GeodesicClass> {
    let mut sorted = classes.to_vec();
    sorted.sort_by(canonical_cmp);

    let mut out = Vec::new();
    for by_l in chain_split(sorted, |c| c.length.length, merge_tol) {
        let by_phase = if by_length_only {
            vec![by_l]
        } else {
            phase_split(by_l, merge_tol)
        };
        for mut group in by_phase {
            group.sort_by(|a, b| {
                a.topology
                    .cmp(&b.topology)
                    .then(a.primitive_length.total_cmp(&b.primitive_length))
                    .then(canonical_cmp(a, b))
            });
            let mut by_topology: Vec<Vec<GeodesicClass>> = Vec::new();
            for c in group {
                match by_topology.last_mut() {
                    Some(g) if g[0].topology == c.topology => g.push(c),
                    _ => by_topology.push(vec![c]),
                }
            }
            for t in by_topology {
                for mut members in chain_split(t, |c| c.primitive_length, merge_tol) {
                    members.sort_by(canonical_cmp);
                    let total: u32 = members.iter().map(|c| c.multiplicity).sum();
                    let mut rep = members.swap_remove(0);
                    rep.multiplicity = total;
                    out.push(rep);
                }
            }
        }
    }
    out.sort_by(canonical_cmp);
    out
}
