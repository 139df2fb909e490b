//! Exact Euclidean distance transforms on anisotropic grids.
//!
//! Separable lower-envelope-of-parabolas algorithm, one pass per axis, so
//! the result is the exact minimum over all feature voxels of the physical
//! distance `sqrt(Σ((p_i − q_i)·s_i)²)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Squared physical distance from each voxel to the nearest `feature` voxel
/// of an x-fastest grid. `f64::INFINITY` when there are no features.
pub fn squared_edt(feature: &[bool], dims: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    assert_eq!(feature.len(), dims.iter().product::<usize>());
    let mut d: Vec<f64> = feature.iter().map(|&f| if f { 0.0 } else { f64::INFINITY }).collect();
    let strides = [1, dims[0], dims[0] * dims[1]];
    let longest = dims.iter().copied().max().unwrap_or(0);
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut scratch = Scratch::new(longest);
    for axis in 0..3 {
        let n = dims[axis];
        if n == 1 && axis > 0 {
            continue;
        }
        let stride = strides[axis];
        let s2 = spacing[axis] * spacing[axis];
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..dims[b] {
            for i in 0..dims[a] {
                let base = i * strides[a] + j * strides[b];
                for k in 0..n {
                    line[k] = d[base + k * stride];
                }
                lower_envelope(&line[..n], s2, &mut out[..n], &mut scratch);
                for k in 0..n {
                    d[base + k * stride] = out[k];
                }
            }
        }
    }
    d
}

struct Scratch {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            sites: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }
}

/// `out[p] = min_q f[q] + s2·(p − q)²`.
fn lower_envelope(f: &[f64], s2: f64, out: &mut [f64], sc: &mut Scratch) {
    let n = f.len();
    let mut k: isize = -1;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            if k < 0 {
                k = 0;
                sc.sites[0] = q;
                sc.bounds[0] = f64::NEG_INFINITY;
                sc.bounds[1] = f64::INFINITY;
                break;
            }
            let v = sc.sites[k as usize];
            let s = ((f[q] + s2 * (q * q) as f64) - (f[v] + s2 * (v * v) as f64)) / (2.0 * s2 * (q - v) as f64);
            if s <= sc.bounds[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            sc.sites[k as usize] = q;
            sc.bounds[k as usize] = s;
            sc.bounds[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (p, o) in out.iter_mut().enumerate() {
        while sc.bounds[j + 1] < p as f64 {
            j += 1;
        }
        let q = sc.sites[j];
        let dq = p as f64 - q as f64;
        *o = f[q] + s2 * dq * dq;
    }
}

/// Signed distance of a 2D mask: distance to the nearest outside pixel for
/// inside pixels (positive), minus the distance to the nearest inside pixel
/// for outside pixels (negative).
pub fn signed_distance_2d(mask: &[bool], width: usize, height: usize, spacing: [f64; 2]) -> Vec<f64> {
    let dims = [width, height, 1];
    let sp = [spacing[0], spacing[1], 1.0];
    let outside: Vec<bool> = mask.iter().map(|m| !m).collect();
    let to_outside = squared_edt(&outside, dims, sp);
    let to_inside = squared_edt(mask, dims, sp);
    mask.iter()
        .zip(to_outside.iter().zip(&to_inside))
        .map(|(&m, (&o, &i))| if m { sqrt(o) } else { -sqrt(i) })
        .collect()
}
