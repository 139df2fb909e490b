//! Classical brain extraction: Otsu threshold plus a user offset, ball
//! opening/closing, largest 6-connected component, enclosed-hole fill.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::distance::squared_edt;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::segment::LabelMap;
use crate::volume::Volume3D;

pub const OTSU_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractParams {
    /// Added to the automatic threshold, in intensity units.
    pub threshold_offset: f64,
    pub morph_radius_mm: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        ExtractParams {
            threshold_offset: 0.0,
            morph_radius_mm: 2.0,
        }
    }
}

/// Anything that turns a volume into a brain mask (label 1).
pub trait BrainExtractor {
    fn extract(&self, vol: &Volume3D) -> Result<LabelMap>;
}

/// Threshold + morphology pipeline.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassicalExtractor {
    pub params: ExtractParams,
}

impl BrainExtractor for ClassicalExtractor {
    fn extract(&self, vol: &Volume3D) -> Result<LabelMap> {
        extract_brain(vol, self.params)
    }
}

/// Split point maximizing between-class variance, returned as the lower
/// edge of the first upper-class bin. Earliest split wins ties.
pub fn otsu_threshold(h: &Histogram) -> Result<f64> {
    let nonempty = h.counts.iter().filter(|&&c| c > 0).count();
    if nonempty < 2 {
        return Err(Error::UnimodalInput);
    }
    let n = h.counts.len();
    let total: f64 = h.total() as f64;
    let sum: f64 = (0..n).map(|k| h.counts[k] as f64 * h.center(k)).sum();
    let (mut w0, mut s0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 1);
    for k in 1..n {
        w0 += h.counts[k - 1] as f64;
        s0 += h.counts[k - 1] as f64 * h.center(k - 1);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let d = s0 / w0 - (sum - s0) / w1;
        let var = w0 * w1 * d * d;
        if var > best.0 {
            best = (var, k);
        }
    }
    Ok(h.edge(best.1))
}

/// `v ≥ threshold`.
pub fn binarize(vol: &Volume3D, threshold: f64) -> Vec<bool> {
    vol.frame_data(0).iter().map(|&v| v as f64 >= threshold).collect()
}

fn within(r2: f64) -> impl Fn(f64) -> bool {
    let limit = r2 * (1.0 + 1e-12);
    move |d2| d2 <= limit
}

/// Keeps voxels whose whole ball lies in the mask; out-of-grid counts as mask.
pub fn erode(mask: &[bool], dims: [usize; 3], spacing: [f64; 3], radius_mm: f64) -> Vec<bool> {
    let background: Vec<bool> = mask.iter().map(|m| !m).collect();
    let d2 = squared_edt(&background, dims, spacing);
    let inside = within(radius_mm * radius_mm);
    mask.iter().zip(&d2).map(|(&m, &d)| m && !inside(d)).collect()
}

/// Adds voxels within the ball radius of the mask.
pub fn dilate(mask: &[bool], dims: [usize; 3], spacing: [f64; 3], radius_mm: f64) -> Vec<bool> {
    let d2 = squared_edt(mask, dims, spacing);
    let inside = within(radius_mm * radius_mm);
    d2.into_iter().map(inside).collect()
}

fn neighbors6(p: usize, dims: [usize; 3]) -> impl Iterator<Item = usize> {
    let (x, y, z) = (p % dims[0], p / dims[0] % dims[1], p / (dims[0] * dims[1]));
    let sx = 1;
    let sy = dims[0];
    let sz = dims[0] * dims[1];
    [
        (x > 0).then(|| p - sx),
        (x + 1 < dims[0]).then(|| p + sx),
        (y > 0).then(|| p - sy),
        (y + 1 < dims[1]).then(|| p + sy),
        (z > 0).then(|| p - sz),
        (z + 1 < dims[2]).then(|| p + sz),
    ]
    .into_iter()
    .flatten()
}

fn flood(mask: &[bool], dims: [usize; 3], seeds: impl IntoIterator<Item = usize>, seen: &mut [bool]) -> usize {
    let mut queue = VecDeque::new();
    for s in seeds {
        if mask[s] && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    let mut size = 0;
    while let Some(p) = queue.pop_front() {
        size += 1;
        for q in neighbors6(p, dims) {
            if mask[q] && !seen[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        }
    }
    size
}

/// Largest 6-connected component; the one found first in x-fastest scan
/// order wins ties.
pub fn largest_component(mask: &[bool], dims: [usize; 3]) -> Vec<bool> {
    let mut seen = vec![false; mask.len()];
    let mut best: Option<(usize, usize)> = None;
    for p in 0..mask.len() {
        if mask[p] && !seen[p] {
            let size = flood(mask, dims, [p], &mut seen);
            if best.map_or(true, |(s, _)| size > s) {
                best = Some((size, p));
            }
        }
    }
    let mut keep = vec![false; mask.len()];
    if let Some((_, start)) = best {
        flood(mask, dims, [start], &mut keep);
    }
    keep
}

/// Fills background not 6-connected to the grid border.
pub fn fill_holes(mask: &[bool], dims: [usize; 3]) -> Vec<bool> {
    let background: Vec<bool> = mask.iter().map(|m| !m).collect();
    let border = (0..mask.len()).filter(|&p| {
        let (x, y, z) = (p % dims[0], p / dims[0] % dims[1], p / (dims[0] * dims[1]));
        x == 0 || y == 0 || z == 0 || x + 1 == dims[0] || y + 1 == dims[1] || z + 1 == dims[2]
    });
    let mut outside = vec![false; mask.len()];
    flood(&background, dims, border, &mut outside);
    outside.into_iter().map(|o| !o).collect()
}

pub fn extract_brain(vol: &Volume3D, params: ExtractParams) -> Result<LabelMap> {
    if !(params.morph_radius_mm >= 0.0 && params.morph_radius_mm.is_finite()) {
        return Err(Error::invalid(alloc::format!(
            "morphology radius must be a finite value ≥ 0, got {}",
            params.morph_radius_mm
        )));
    }
    if !params.threshold_offset.is_finite() {
        return Err(Error::invalid("threshold offset must be finite"));
    }
    let hist = Histogram::compute(vol.frame_data(0), OTSU_BINS, None)?;
    let threshold = otsu_threshold(&hist)? + params.threshold_offset;
    let (dims, spacing, r) = (vol.dims(), vol.spacing(), params.morph_radius_mm);

    let mask = binarize(vol, threshold);
    let opened = dilate(&erode(&mask, dims, spacing, r), dims, spacing, r);
    if !opened.iter().any(|&m| m) {
        return Err(Error::EmptyExtraction);
    }
    let closed = erode(&dilate(&opened, dims, spacing, r), dims, spacing, r);
    let brain = fill_holes(&largest_component(&closed, dims), dims);
    if !brain.iter().any(|&m| m) {
        return Err(Error::EmptyExtraction);
    }
    let labels = brain.into_iter().map(u16::from).collect();
    Ok(LabelMap::from_data(dims, labels)?.with_spacing(spacing))
}
