//! Breadth-first tiling of the universal cover from a set of generators.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{GroupPresentation, Letter};
use crate::error::{Error, Result};
use crate::moebius::{with_inverses, H3Point, MoebiusElement};

/// Default cap on the number of stored elements.
pub const DEFAULT_BUDGET: usize = 50_000_000;

/// Relative matrix tolerance for treating two elements as equal.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-8;

const NO_PARENT: u32 = u32::MAX;
const PARENT_CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TilingOptions {
    pub budget: usize,
    pub dedup_tol: f64,
    /// Elements up to `radius + margin` are expanded but not returned.
    /// Zero is exact for Dirichlet-domain face pairings.
    pub margin: f64,
}

impl Default for TilingOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            dedup_tol: DEFAULT_DEDUP_TOL,
            margin: 0.0,
        }
    }
}

// Buckets keyed on a sign-invariant scalar of the matrix; chains in `next`.
#[derive(Debug, Clone, Default)]
struct ElementIndex {
    width: f64,
    heads: HashMap<i64, u32>,
    next: Vec<u32>,
}

fn feature(g: &MoebiusElement) -> f64 {
    let [a, b, c, d] = g.entries();
    let w = a * c.conj() + b * d.conj();
    let h = c.norm_sqr() + d.norm_sqr();
    (w.re + 0.754_877_666_2 * w.im + 0.569_840_291 * h) / g.norm_sqr()
}

impl ElementIndex {
    fn new(tol: f64) -> Self {
        Self {
            width: 100.0 * tol,
            heads: HashMap::new(),
            next: Vec::new(),
        }
    }

    fn key(&self, g: &MoebiusElement) -> i64 {
        (feature(g) / self.width).floor() as i64
    }

    fn find(&self, g: &MoebiusElement, elements: &[MoebiusElement], tol: f64) -> Option<u32> {
        let k = self.key(g);
        for kk in [k, k - 1, k + 1] {
            let mut cur = self.heads.get(&kk).copied().unwrap_or(NO_PARENT);
            while cur != NO_PARENT {
                if elements[cur as usize].approx_eq(g, tol) {
                    return Some(cur);
                }
                cur = self.next[cur as usize];
            }
        }
        None
    }

    fn insert(&mut self, g: &MoebiusElement, id: u32) {
        let k = self.key(g);
        let prev = self.heads.insert(k, id).unwrap_or(NO_PARENT);
        debug_assert_eq!(self.next.len(), id as usize);
        self.next.push(prev);
    }
}

/// A deduplicated set of group elements with their displacement from a
/// basepoint, and (for tilings) the word that produced each one.
#[derive(Debug, Clone)]
pub struct ElementSet {
    basepoint: H3Point,
    elements: Vec<MoebiusElement>,
    displacement: Vec<f64>,
    parent: Vec<u32>,
    letter: Vec<Letter>,
    complete_radius: Option<f64>,
    dedup_tol: f64,
    index: ElementIndex,
    by_displacement: Vec<u32>,
    // Explicit words when parent links were cut by a restriction.
    words: Option<Vec<Vec<Letter>>>,
}

impl ElementSet {
    fn empty(basepoint: H3Point, dedup_tol: f64) -> Self {
        Self {
            basepoint,
            elements: Vec::new(),
            displacement: Vec::new(),
            parent: Vec::new(),
            letter: Vec::new(),
            complete_radius: None,
            dedup_tol,
            index: ElementIndex::new(dedup_tol),
            by_displacement: Vec::new(),
            words: None,
        }
    }

    /// Deduplicate an arbitrary collection. No completeness is assumed.
    pub fn from_elements(
        elements: impl IntoIterator<Item = MoebiusElement>,
        basepoint: H3Point,
        dedup_tol: f64,
    ) -> Self {
        let mut set = Self::empty(basepoint, dedup_tol);
        for g in elements {
            set.insert(g, NO_PARENT, Letter::default());
        }
        set.finish();
        set
    }

    fn insert(&mut self, g: MoebiusElement, parent: u32, letter: Letter) -> bool {
        if self.index.find(&g, &self.elements, self.dedup_tol).is_some() {
            return false;
        }
        let id = self.elements.len() as u32;
        self.index.insert(&g, id);
        self.displacement.push(g.displacement(&self.basepoint));
        self.elements.push(g);
        self.parent.push(parent);
        self.letter.push(letter);
        true
    }

    fn finish(&mut self) {
        let mut order: Vec<u32> = (0..self.elements.len() as u32).collect();
        order.sort_by(|&i, &j| {
            self.displacement[i as usize]
                .total_cmp(&self.displacement[j as usize])
                .then(i.cmp(&j))
        });
        self.by_displacement = order;
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn basepoint(&self) -> &H3Point {
        &self.basepoint
    }

    pub fn elements(&self) -> &[MoebiusElement] {
        &self.elements
    }

    pub fn displacement(&self, i: usize) -> f64 {
        self.displacement[i]
    }

    pub fn dedup_tol(&self) -> f64 {
        self.dedup_tol
    }

    /// Radius within which the set is known to contain every group element.
    pub fn complete_radius(&self) -> Option<f64> {
        self.complete_radius
    }

    pub fn find(&self, g: &MoebiusElement) -> Option<usize> {
        self.index
            .find(g, &self.elements, self.dedup_tol)
            .map(|i| i as usize)
    }

    pub fn contains(&self, g: &MoebiusElement) -> bool {
        self.find(g).is_some()
    }

    /// Indices of elements with displacement at most `r`, nearest first.
    pub fn within(&self, r: f64) -> &[u32] {
        let end = self
            .by_displacement
            .partition_point(|&i| self.displacement[i as usize] <= r);
        &self.by_displacement[..end]
    }

    /// The generator word for element `i`, if it came from a tiling.
    pub fn word(&self, i: usize) -> Option<Vec<Letter>> {
        if let Some(words) = &self.words {
            return Some(words[i].clone());
        }
        self.complete_radius?;
        let mut out = Vec::new();
        let mut cur = i as u32;
        while self.parent[cur as usize] != NO_PARENT {
            out.push(self.letter[cur as usize]);
            cur = self.parent[cur as usize];
        }
        out.reverse();
        Some(out)
    }
}

/// Every group element `g` with `d(x, gx) ≤ radius`, found by expanding
/// tiles breadth-first from the identity.
pub fn tile(pres: &GroupPresentation, radius: f64, opts: &TilingOptions) -> Result<ElementSet> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::domain(format!("tiling radius {radius} must be finite and >= 0")));
    }
    let basepoint = *pres.basepoint();
    let letters: Vec<(Letter, MoebiusElement)> = with_inverses(pres.generators())
        .into_iter()
        .map(|(i, inv, g)| {
            (
                Letter {
                    generator: i,
                    inverse: inv,
                },
                g,
            )
        })
        .collect();
    let reach = radius + opts.margin.max(0.0);

    let mut set = ElementSet::empty(basepoint, opts.dedup_tol);
    set.insert(MoebiusElement::identity(), NO_PARENT, Letter::default());
    let mut frontier: Vec<u32> = vec![0];

    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (ci, chunk) in frontier.chunks(PARENT_CHUNK).enumerate() {
            let candidates: Vec<(u32, Letter, MoebiusElement)> = chunk
                .par_iter()
                .flat_map_iter(|&p| {
                    let parent = set.elements[p as usize];
                    letters.iter().filter_map(move |(letter, s)| {
                        let g = parent.compose(s);
                        (g.cosh_displacement(&basepoint) <= reach.cosh() * (1.0 + 1e-14))
                            .then_some((p, *letter, g))
                    })
                })
                .collect();
            for (p, letter, g) in candidates {
                if set.insert(g, p, letter) {
                    next.push((set.elements.len() - 1) as u32);
                    if set.elements.len() > opts.budget {
                        let pending = frontier[ci * PARENT_CHUNK..]
                            .iter()
                            .chain(next.iter())
                            .map(|&i| set.displacement[i as usize])
                            .fold(f64::INFINITY, f64::min);
                        return Err(Error::Budget {
                            budget: opts.budget,
                            count: set.elements.len(),
                            radius_reached: pending.min(radius),
                            radius_target: radius,
                        });
                    }
                }
            }
        }
        frontier = next;
    }

    // Drop the margin shell but keep parents reachable for word reconstruction.
    set.complete_radius = Some(radius);
    set.finish();
    if opts.margin > 0.0 {
        set = restrict(set, radius);
    }
    Ok(set)
}

// Keep elements within `radius`, storing words explicitly since their
// ancestors may lie outside it.
fn restrict(full: ElementSet, radius: f64) -> ElementSet {
    let mut out = ElementSet::empty(full.basepoint, full.dedup_tol);
    let mut words = Vec::new();
    for i in 0..full.len() {
        if full.displacement[i] <= radius * (1.0 + 1e-14) {
            let id = out.elements.len() as u32;
            out.index.insert(&full.elements[i], id);
            out.elements.push(full.elements[i]);
            out.displacement.push(full.displacement[i]);
            out.parent.push(NO_PARENT);
            out.letter.push(Letter::default());
            words.push(full.word(i).unwrap_or_default());
        }
    }
    out.words = Some(words);
    out.complete_radius = full.complete_radius;
    out.finish();
    out
}
