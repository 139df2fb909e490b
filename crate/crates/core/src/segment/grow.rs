use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Label, LabelMap};
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::plane::PlaneId;
use crate::volume::Volume3D;

/// Circular intensity-band selection seeded at one pixel.
///
/// Inside the disk of radius `radius` (in-plane pixels) around `seed`, a pixel
/// with intensity `S` is selected when `|S − M_c| ≤ σ`, where `M_c` is the
/// seed intensity and `σ` the population standard deviation over the disk.
/// The seed is always selected.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionGrowParams {
    pub plane: PlaneId,
    pub index: usize,
    pub seed: [i64; 2],
    pub radius: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub connectivity_only: bool,
}

/// Selected in-plane pixels `(u, v)`, in row-major order.
pub fn select_region(vol: &Volume3D, p: &RegionGrowParams) -> Result<Vec<[usize; 2]>> {
    let dims = vol.dims();
    p.plane.check_index(dims, p.index)?;
    let (w, h, _) = p.plane.extent(dims);
    let [su, sv] = p.seed;
    if su < 0 || su as usize >= w {
        return Err(Error::range("seed u", su, w));
    }
    if sv < 0 || sv as usize >= h {
        return Err(Error::range("seed v", sv, h));
    }
    if !(p.radius > 0.0) || !p.radius.is_finite() {
        return Err(Error::invalid(format!("radius must be > 0, got {}", p.radius)));
    }
    let frame = vol.frame_data(0);
    let value = |u: usize, v: usize| {
        let [x, y, z] = p.plane.voxel(p.index, u, v);
        frame[vol.index(x, y, z)] as f64
    };
    let (su, sv) = (su as usize, sv as usize);
    let center = value(su, sv);

    let r2 = p.radius * p.radius;
    let reach = libm::floor(p.radius) as i64;
    let mut candidates: Vec<([usize; 2], f64)> = Vec::new();
    for v in (sv as i64 - reach).max(0)..=(sv as i64 + reach).min(h as i64 - 1) {
        for u in (su as i64 - reach).max(0)..=(su as i64 + reach).min(w as i64 - 1) {
            let (du, dv) = ((u - su as i64) as f64, (v - sv as i64) as f64);
            if du * du + dv * dv <= r2 {
                let (u, v) = (u as usize, v as usize);
                candidates.push(([u, v], value(u, v) - center));
            }
        }
    }

    // Deviations are taken relative to the seed, so adding a constant to the
    // image leaves every quantity below bit-identical.
    let n = candidates.len() as f64;
    let (sum, sum_sq) = candidates
        .iter()
        .fold((0.0, 0.0), |(s, q), (_, d)| (s + d, q + d * d));
    let mean = sum / n;
    let std = sqrt((sum_sq / n - mean * mean).max(0.0));

    let selected: Vec<[usize; 2]> = candidates
        .iter()
        .filter(|(px, d)| d.abs() <= std || *px == [su, sv])
        .map(|(px, _)| *px)
        .collect();
    if !p.connectivity_only {
        return Ok(selected);
    }
    Ok(connected_from(&selected, [su, sv], w, h))
}

fn connected_from(selected: &[[usize; 2]], seed: [usize; 2], w: usize, h: usize) -> Vec<[usize; 2]> {
    let mut inside = vec![false; w * h];
    for &[u, v] in selected {
        inside[u + w * v] = true;
    }
    let mut keep = vec![false; w * h];
    let mut queue = VecDeque::from([seed]);
    keep[seed[0] + w * seed[1]] = true;
    while let Some([u, v]) = queue.pop_front() {
        let neighbors = [
            (u.wrapping_sub(1), v),
            (u + 1, v),
            (u, v.wrapping_sub(1)),
            (u, v + 1),
        ];
        for (nu, nv) in neighbors {
            if nu < w && nv < h {
                let i = nu + w * nv;
                if inside[i] && !keep[i] {
                    keep[i] = true;
                    queue.push_back([nu, nv]);
                }
            }
        }
    }
    selected.iter().copied().filter(|&[u, v]| keep[u + w * v]).collect()
}

/// Labels the selected pixels; returns the number of voxels changed.
pub fn region_grow(vol: &Volume3D, map: &mut LabelMap, p: &RegionGrowParams, label: Label) -> Result<usize> {
    map.check_congruent(vol.dims())?;
    let selected = select_region(vol, p)?;
    Ok(selected
        .into_iter()
        .filter(|&[u, v]| map.set_at(p.plane.voxel(p.index, u, v), label))
        .count())
}
