//! Space-time domains, uniform collocation grids and trapezoid weights.
//!
//! A grid on `[0, T] x [0, L_1] x ... x [0, L_d]` is split into disjoint
//! regions: the interior, one lower and one upper face per spatial axis, and
//! the initial slice `t = 0`. Faces carry times `t_1..t_N` only; the initial
//! slice owns `t = 0`. On overlapping edges the lower face of the first axis
//! wins, then the lower face of the second, then the upper faces in axis
//! order, exactly as in the index ranges below (2D case, `i` time, `j`/`k`
//! space):
//!
//! | region    | i       | j         | k         |
//! |-----------|---------|-----------|-----------|
//! | interior  | 1..=N_T | 1..N_1    | 1..N_2    |
//! | lower 1   | 1..=N_T | 0         | 0..=N_2   |
//! | lower 2   | 1..=N_T | 1..=N_1   | 0         |
//! | upper 1   | 1..=N_T | N_1       | 1..N_2    |
//! | upper 2   | 1..=N_T | 1..=N_1   | N_2       |
//! | initial   | 0       | 0..=N_1   | 0..=N_2   |
//!
//! Each region's weights are the tensor-product trapezoid rule over its own
//! index ranges, and its normalizing volume is the measure of the geometric
//! region it discretizes (e.g. `T * L_1 * L_2` for the interior).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// One spatial coordinate range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl Axis {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Axis { name: name.into(), min, max }
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }
}

/// `[0, T] x axes`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DomainBox {
    pub maturity: f64,
    pub axes: Vec<Axis>,
}

impl DomainBox {
    pub fn new(maturity: f64, axes: Vec<Axis>) -> Result<Self> {
        let domain = DomainBox { maturity, axes };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(Error::InvalidGrid(format!("maturity must be positive, got {}", self.maturity)));
        }
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidGrid(format!("expected 1 or 2 spatial axes, got {}", self.axes.len())));
        }
        for axis in &self.axes {
            if !(axis.min < axis.max) || !axis.min.is_finite() || !axis.max.is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis `{}` needs min < max, got [{}, {}]",
                    axis.name, axis.min, axis.max
                )));
            }
        }
        Ok(())
    }

    pub fn spatial_dim(&self) -> usize {
        self.axes.len()
    }

    /// `(min, max)` per network input, time first.
    pub fn input_bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, self.maturity)];
        b.extend(self.axes.iter().map(|a| (a.min, a.max)));
        b
    }
}

/// Which part of the space-time boundary a region discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionId {
    Interior,
    /// The face `x_axis = min`.
    Lower(usize),
    /// The face `x_axis = max`.
    Upper(usize),
    /// The slice `t = 0`.
    Initial,
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionId::Interior => write!(f, "interior"),
            RegionId::Lower(a) => write!(f, "lower{}", a + 1),
            RegionId::Upper(a) => write!(f, "upper{}", a + 1),
            RegionId::Initial => write!(f, "initial"),
        }
    }
}

impl RegionId {
    /// Parses the [`Display`](fmt::Display) form.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "interior" => Some(RegionId::Interior),
            "initial" => Some(RegionId::Initial),
            _ => {
                let (kind, axis) = if let Some(rest) = s.strip_prefix("lower") {
                    (0, rest)
                } else if let Some(rest) = s.strip_prefix("upper") {
                    (1, rest)
                } else {
                    return None;
                };
                let axis: usize = axis.parse().ok()?;
                if axis == 0 {
                    return None;
                }
                Some(if kind == 0 { RegionId::Lower(axis - 1) } else { RegionId::Upper(axis - 1) })
            }
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for RegionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for RegionId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct Name;
        impl serde::de::Visitor<'_> for Name {
            type Value = RegionId;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a region name such as `interior`, `lower1` or `initial`")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<RegionId, E> {
                RegionId::parse(v).ok_or_else(|| E::custom(alloc::format!("unknown region `{v}`")))
            }
        }
        deserializer.deserialize_str(Name)
    }
}

/// Collocation points of one region with their quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: RegionId,
    /// Row-major points `(t, x_1, ..., x_d)`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Measure of the geometric region; the loss normalizer.
    pub volume: f64,
    /// Measure covered by the trapezoid rule over the region's own samples.
    pub quadrature_measure: f64,
    input_dim: usize,
}

impl Region {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.chunks_exact(self.input_dim).zip(self.weights.iter().copied())
    }
}

/// A complete partitioned grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub domain: DomainBox,
    /// `[N_T, N_1, ..., N_d]`.
    pub steps: Vec<usize>,
    pub regions: Vec<Region>,
}

impl CollocationSet {
    pub fn total_points(&self) -> usize {
        self.regions.iter().map(Region::len).sum()
    }

    pub fn region(&self, id: RegionId) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn region_ids(&self) -> Vec<RegionId> {
        self.regions.iter().map(|r| r.id).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.domain.spatial_dim() + 1
    }
}

/// Trapezoid weights `(h/2, h, ..., h, h/2)` for uniform samples.
pub fn trapezoid_weights(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::InvalidGrid(format!("trapezoid rule needs at least 2 samples, got {}", samples.len())));
    }
    let h = (samples[samples.len() - 1] - samples[0]) / (samples.len() - 1) as f64;
    Ok(uniform_weights(samples.len(), h))
}

/// Trapezoid weights for `n` samples of spacing `h`; a lone sample gets `h`.
fn uniform_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![h],
        _ => {
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            w
        }
    }
}

/// Normalizing measure of a region: product of the extents of its free axes.
pub fn region_volume(region: &Region) -> f64 {
    region.volume
}

/// Index range `lo..=hi` along one grid direction.
#[derive(Clone, Copy)]
struct Range {
    lo: usize,
    hi: usize,
}

impl Range {
    fn new(lo: usize, hi: usize) -> Self {
        Range { lo, hi }
    }

    fn len(&self) -> usize {
        if self.hi >= self.lo {
            self.hi - self.lo + 1
        } else {
            0
        }
    }
}

struct Direction {
    origin: f64,
    step: f64,
    extent: f64,
}

fn build_region(id: RegionId, dirs: &[Direction], ranges: &[Range], free: &[bool]) -> Region {
    let input_dim = dirs.len();
    let axis_w: Vec<Vec<f64>> = dirs
        .iter()
        .zip(ranges)
        .zip(free)
        .map(|((dir, r), &is_free)| if is_free { uniform_weights(r.len(), dir.step) } else { vec![1.0; r.len()] })
        .collect();
    let count: usize = ranges.iter().map(Range::len).product();
    let mut points = Vec::with_capacity(count * input_dim);
    let mut weights = Vec::with_capacity(count);
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.lo).collect();
    if count > 0 {
        'outer: loop {
            let mut w = 1.0;
            for a in 0..input_dim {
                points.push(dirs[a].origin + idx[a] as f64 * dirs[a].step);
                w *= axis_w[a][idx[a] - ranges[a].lo];
            }
            weights.push(w);
            // odometer, last coordinate fastest
            let mut a = input_dim;
            loop {
                if a == 0 {
                    break 'outer;
                }
                a -= 1;
                if idx[a] < ranges[a].hi {
                    idx[a] += 1;
                    continue 'outer;
                }
                idx[a] = ranges[a].lo;
            }
        }
    }
    let mut volume = 1.0;
    let mut quadrature_measure = 1.0;
    for ((dir, r), &is_free) in dirs.iter().zip(ranges).zip(free) {
        if is_free {
            volume *= dir.extent;
            quadrature_measure *= uniform_weights(r.len(), dir.step).iter().sum::<f64>();
        }
    }
    Region { id, points, weights, volume, quadrature_measure, input_dim }
}

/// Grid with `steps = [N_T, N_1, ..., N_d]` intervals per direction.
pub fn build_grid(domain: &DomainBox, steps: &[usize]) -> Result<CollocationSet> {
    domain.validate()?;
    let d = domain.spatial_dim();
    if steps.len() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, found: steps.len() });
    }
    if let Some(&n) = steps.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidGrid(format!("every step count must be >= 2, got {n}")));
    }
    let mut dirs = vec![Direction { origin: 0.0, step: domain.maturity / steps[0] as f64, extent: domain.maturity }];
    for (axis, &n) in domain.axes.iter().zip(&steps[1..]) {
        dirs.push(Direction { origin: axis.min, step: axis.length() / n as f64, extent: axis.length() });
    }
    let n_t = steps[0];
    let n = &steps[1..];
    let time = Range::new(1, n_t);
    let mut regions = Vec::with_capacity(2 + 2 * d);

    // interior
    let mut ranges = vec![time];
    ranges.extend(n.iter().map(|&m| Range::new(1, m - 1)));
    regions.push(build_region(RegionId::Interior, &dirs, &ranges, &vec![true; d + 1]));

    // lower faces: axis a pinned at 0; earlier axes start at 1, later at 0
    for a in 0..d {
        let mut ranges = vec![time];
        let mut free = vec![true];
        for (b, &m) in n.iter().enumerate() {
            ranges.push(match b.cmp(&a) {
                core::cmp::Ordering::Equal => Range::new(0, 0),
                core::cmp::Ordering::Less => Range::new(1, m),
                core::cmp::Ordering::Greater => Range::new(0, m),
            });
            free.push(b != a);
        }
        regions.push(build_region(RegionId::Lower(a), &dirs, &ranges, &free));
    }

    // upper faces: axis a pinned at N_a; lower faces already own index 0 on
    // every axis, and later upper faces own index N_b on later axes
    for a in 0..d {
        let mut ranges = vec![time];
        let mut free = vec![true];
        for (b, &m) in n.iter().enumerate() {
            ranges.push(match b.cmp(&a) {
                core::cmp::Ordering::Equal => Range::new(m, m),
                core::cmp::Ordering::Less => Range::new(1, m - 1),
                core::cmp::Ordering::Greater => Range::new(1, m - 1),
            });
            free.push(b != a);
        }
        // the last axis' upper face also takes the corner rows of earlier axes
        if a == d - 1 {
            for b in 0..a {
                ranges[1 + b] = Range::new(1, n[b]);
            }
        }
        regions.push(build_region(RegionId::Upper(a), &dirs, &ranges, &free));
    }

    // initial slice
    let mut ranges = vec![Range::new(0, 0)];
    ranges.extend(n.iter().map(|&m| Range::new(0, m)));
    let mut free = vec![false];
    free.extend(core::iter::repeat(true).take(d));
    regions.push(build_region(RegionId::Initial, &dirs, &ranges, &free));

    Ok(CollocationSet { domain: domain.clone(), steps: steps.to_vec(), regions })
}

/// One-dimensional grid: interior, `S = 0`, `S = S_max`, initial slice.
pub fn build_grid_1d(domain: &DomainBox, n_t: usize, n_s: usize) -> Result<CollocationSet> {
    if domain.spatial_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: domain.spatial_dim() });
    }
    build_grid(domain, &[n_t, n_s])
}

/// Two-dimensional grid with the six regions of the module table.
pub fn build_grid_2d(domain: &DomainBox, n_t: usize, n_1: usize, n_2: usize) -> Result<CollocationSet> {
    if domain.spatial_dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: domain.spatial_dim() });
    }
    build_grid(domain, &[n_t, n_1, n_2])
}

/// Full tensor grid over `[0, T] x domain` (all boundaries included) with
/// trapezoid weights; used for error norms.
pub fn tensor_grid(domain: &DomainBox, steps: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    domain.validate()?;
    let d = domain.spatial_dim();
    if steps.len() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, found: steps.len() });
    }
    if steps.iter().any(|&n| n < 1) {
        return Err(Error::InvalidGrid("tensor grid needs at least one step per axis".into()));
    }
    let mut dirs = vec![Direction { origin: 0.0, step: domain.maturity / steps[0] as f64, extent: domain.maturity }];
    for (axis, &n) in domain.axes.iter().zip(&steps[1..]) {
        dirs.push(Direction { origin: axis.min, step: axis.length() / n as f64, extent: axis.length() });
    }
    let ranges: Vec<Range> = steps.iter().map(|&n| Range::new(0, n)).collect();
    let region = build_region(RegionId::Interior, &dirs, &ranges, &vec![true; d + 1]);
    Ok((region.points, region.weights))
}
