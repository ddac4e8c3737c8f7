//! Length spectra: tiling, conjugacy reduction, multiplicities, statistics.

mod conjugacy;
mod multiplicity;
mod stats;
mod tiling;

pub use conjugacy::{conjugacy_reduce, ConjugacyOptions};
pub use multiplicity::count_multiplicities;
pub use stats::{
    asymptotic_staircase, averaged_multiplicity, classical_staircase, fit_multiplicity,
    multiplicity_samples, AveragedMultiplicity, MultiplicityFit, MultiplicityModel,
    MultiplicitySample, DEFAULT_FIT_RANGE, DEFAULT_WINDOW, TAU_3D,
};
pub use tiling::{tile, ElementSet, TilingOptions, DEFAULT_BUDGET, DEFAULT_DEDUP_TOL};

use crate::error::{Error, Result};
use crate::moebius::{ComplexLength, ElementClass, H3Point, MoebiusElement};

/// Tolerance on `(l, φ)` for grouping geodesics.
pub const DEFAULT_MERGE_TOL: f64 = 1e-6;

/// Extra radius of the quick tiling mode beyond the cutoff.
pub const QUICK_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldMeta {
    pub name: String,
    pub volume: f64,
    pub spine_radius: Option<f64>,
    pub diameter: Option<f64>,
}

impl ManifoldMeta {
    pub fn new(
        name: impl Into<String>,
        volume: f64,
        spine_radius: Option<f64>,
        diameter: Option<f64>,
    ) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::domain(format!("volume {volume} must be positive")));
        }
        for (what, v) in [("spine_radius", spine_radius), ("diameter", diameter)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::domain(format!("{what} {v} must be positive")));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            volume,
            spine_radius,
            diameter,
        })
    }
}

/// Generators of a discrete group with a basepoint for the tiling.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    generators: Vec<MoebiusElement>,
    basepoint: H3Point,
    meta: ManifoldMeta,
}

impl GroupPresentation {
    pub fn new(generators: Vec<MoebiusElement>, basepoint: H3Point, meta: ManifoldMeta) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::domain("no generators"));
        }
        if let Some(i) = generators
            .iter()
            .position(|g| g.classify() == ElementClass::Identity)
        {
            return Err(Error::domain(format!("generator {i} is the identity")));
        }
        Ok(Self {
            generators,
            basepoint,
            meta,
        })
    }

    pub fn generators(&self) -> &[MoebiusElement] {
        &self.generators
    }

    pub fn basepoint(&self) -> &H3Point {
        &self.basepoint
    }

    pub fn meta(&self) -> &ManifoldMeta {
        &self.meta
    }
}

/// A generator or its inverse in a word.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topology {
    Circle,
    /// The class is conjugate to its own inverse (possible only with torsion).
    MirroredInterval,
}

impl Topology {
    /// Oriented conjugacy classes per unoriented geodesic.
    pub fn orientations(self) -> f64 {
        match self {
            Topology::Circle => 2.0,
            Topology::MirroredInterval => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Topology::Circle => "circle",
            Topology::MirroredInterval => "mirrored",
        }
    }
}

/// Closed geodesics sharing one complex length.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicClass {
    pub length: ComplexLength,
    pub multiplicity: u32,
    pub topology: Topology,
    /// Length of the primitive geodesic this one winds around.
    pub primitive_length: f64,
    pub representative_word: Option<Vec<Letter>>,
}

impl GeodesicClass {
    pub fn new(
        length: ComplexLength,
        multiplicity: u32,
        topology: Topology,
        primitive_length: f64,
        representative_word: Option<Vec<Letter>>,
    ) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::domain("multiplicity must be at least 1"));
        }
        if !(primitive_length > 0.0) || primitive_length > length.length * (1.0 + 1e-9) {
            return Err(Error::domain(format!(
                "primitive length {primitive_length} must lie in (0, {}]",
                length.length
            )));
        }
        Ok(Self {
            length,
            multiplicity,
            topology,
            primitive_length,
            representative_word,
        })
    }

    pub fn is_primitive(&self) -> bool {
        self.winding() == 1
    }

    /// How many times the geodesic winds around its primitive root.
    pub fn winding(&self) -> u32 {
        (self.length.length / self.primitive_length).round().max(1.0) as u32
    }
}

/// How a spectrum was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProvenance {
    pub cutoff: f64,
    pub tiling_radius: f64,
    pub rigorous: bool,
    pub dedup_tol: f64,
    pub merge_tol: f64,
    pub element_count: usize,
}

impl SpectrumProvenance {
    pub fn new(cutoff: f64, tiling_radius: f64, rigorous: bool) -> Self {
        Self {
            cutoff,
            tiling_radius,
            rigorous,
            dedup_tol: DEFAULT_DEDUP_TOL,
            merge_tol: DEFAULT_MERGE_TOL,
            element_count: 0,
        }
    }
}

/// Geodesic classes below a cutoff, sorted by `(l, φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSpectrum {
    classes: Vec<GeodesicClass>,
    provenance: SpectrumProvenance,
}

impl LengthSpectrum {
    pub fn new(mut classes: Vec<GeodesicClass>, provenance: SpectrumProvenance) -> Result<Self> {
        if !(provenance.cutoff > 0.0) {
            return Err(Error::domain("cutoff must be positive"));
        }
        if let Some(c) = classes
            .iter()
            .find(|c| c.length.length > provenance.cutoff * (1.0 + 1e-12))
        {
            return Err(Error::Range {
                requested: c.length.length,
                cutoff: provenance.cutoff,
            });
        }
        classes.sort_by(|a, b| {
            a.length
                .length
                .total_cmp(&b.length.length)
                .then(a.length.phase.total_cmp(&b.length.phase))
        });
        Ok(Self {
            classes,
            provenance,
        })
    }

    pub fn classes(&self) -> &[GeodesicClass] {
        &self.classes
    }

    pub fn provenance(&self) -> &SpectrumProvenance {
        &self.provenance
    }

    pub fn cutoff(&self) -> f64 {
        self.provenance.cutoff
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Shortest geodesic length.
    pub fn l_min(&self) -> Option<f64> {
        self.classes.first().map(|c| c.length.length)
    }

    /// Total number of geodesics counted with multiplicity.
    pub fn total_multiplicity(&self) -> u64 {
        self.classes.iter().map(|c| c.multiplicity as u64).sum()
    }

    /// The same spectrum with the shortest primitive geodesic and all of its
    /// powers removed.
    pub fn without_shortest(&self) -> LengthSpectrum {
        let Some(l0) = self
            .classes
            .iter()
            .find(|c| c.is_primitive())
            .map(|c| c.length.length)
        else {
            return self.clone();
        };
        let classes = self
            .classes
            .iter()
            .filter(|c| (c.primitive_length - l0).abs() > self.provenance.merge_tol)
            .cloned()
            .collect();
        LengthSpectrum {
            classes,
            provenance: self.provenance.clone(),
        }
    }

    /// The union of two spectra with the larger cutoff.
    pub fn concat(&self, other: &LengthSpectrum) -> LengthSpectrum {
        let mut classes = self.classes.clone();
        classes.extend(other.classes.iter().cloned());
        let mut provenance = self.provenance.clone();
        provenance.cutoff = provenance.cutoff.max(other.provenance.cutoff);
        LengthSpectrum::new(classes, provenance).expect("both inputs respect their cutoffs")
    }
}

/// Tiling radius sufficient for a complete spectrum below `l_cut`:
/// `2 acosh(cosh R · cosh(l_cut/2))`.
pub fn rigorous_radius(spine_radius: f64, l_cut: f64) -> f64 {
    2.0 * (spine_radius.cosh() * (l_cut / 2.0).cosh()).acosh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TilingMode {
    /// Radius from the spine radius; axes filtered to within it.
    Rigorous,
    /// Radius `l_cut + 0.5` with no axis filter.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    pub cutoff: f64,
    pub mode: TilingMode,
    pub radius: Option<f64>,
    pub tiling: TilingOptions,
    pub merge_tol: f64,
    pub by_length_only: bool,
    pub conjugacy: ConjugacyOptions,
}

impl SpectrumConfig {
    pub fn new(cutoff: f64, mode: TilingMode) -> Self {
        Self {
            cutoff,
            mode,
            radius: None,
            tiling: TilingOptions::default(),
            merge_tol: DEFAULT_MERGE_TOL,
            by_length_only: false,
            conjugacy: ConjugacyOptions::default(),
        }
    }
}

/// Tile, reduce and count: the full length-spectrum pipeline.
pub fn compute_length_spectrum(pres: &GroupPresentation, cfg: &SpectrumConfig) -> Result<LengthSpectrum> {
    if !(cfg.cutoff > 0.0) {
        return Err(Error::domain("cutoff must be positive"));
    }
    let spine = pres.meta().spine_radius;
    let (radius, bound) = match cfg.mode {
        TilingMode::Rigorous => {
            let r = spine.ok_or_else(|| Error::domain("rigorous mode needs a spine radius"))?;
            (cfg.radius.unwrap_or_else(|| rigorous_radius(r, cfg.cutoff)), Some(r))
        }
        TilingMode::Quick => (cfg.radius.unwrap_or(cfg.cutoff + QUICK_MARGIN), None),
    };
    let set = tile(pres, radius, &cfg.tiling)?;
    let classes = conjugacy_reduce(&set, cfg.cutoff, bound, &cfg.conjugacy);
    let merged = count_multiplicities(&classes, cfg.merge_tol, cfg.by_length_only);
    LengthSpectrum::new(
        merged,
        SpectrumProvenance {
            cutoff: cfg.cutoff,
            tiling_radius: radius,
            rigorous: cfg.mode == TilingMode::Rigorous,
            dedup_tol: cfg.tiling.dedup_tol,
            merge_tol: cfg.merge_tol,
            element_count: set.len(),
        },
    )
}
