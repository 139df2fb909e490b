//! Display and preprocessing filters applied to slices.
//!
//! None of these mutate a stored volume; they produce derived copies.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::{fft2, Complex};
use crate::math::{cos, round_half_up, sqrt};
use crate::plane::{extract_plane, write_plane, PlaneId, Slice2D};
use crate::volume::Volume3D;

/// Linear intensity→gray mapping centred on `level` with width `window`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowLevel {
    pub window: f64,
    pub level: f64,
}

impl WindowLevel {
    pub fn new(window: f64, level: f64) -> Result<Self> {
        if !(window >= 0.0) || !window.is_finite() || !level.is_finite() {
            return Err(Error::invalid(format!("window must be finite and >= 0, got {window}")));
        }
        Ok(WindowLevel { window, level })
    }

    /// Window spanning `[lo, hi]` exactly.
    pub fn from_range(lo: f64, hi: f64) -> Self {
        WindowLevel {
            window: (hi - lo).max(0.0),
            level: (hi + lo) / 2.0,
        }
    }

    /// Min/max stretch of a volume's intensities.
    pub fn auto(vol: &Volume3D) -> Self {
        match vol.min_max() {
            Some((lo, hi)) => Self::from_range(lo as f64, hi as f64),
            None => WindowLevel { window: 1.0, level: 0.5 },
        }
    }

    #[inline]
    pub fn map(&self, v: f64) -> u8 {
        let v = v as f64;
        if v.is_nan() {
            return 0;
        }
        if self.window == 0.0 {
            return if v >= self.level { 255 } else { 0 };
        }
        let low = self.level - self.window / 2.0;
        let g = round_half_up(255.0 * (v - low) / self.window);
        g.clamp(0.0, 255.0) as u8
    }
}

/// Maps a slice to 8-bit display values.
pub fn window_level(slice: &Slice2D, wl: WindowLevel) -> Vec<u8> {
    slice.data.iter().map(|&v| wl.map(v)).collect()
}

/// Radial frequency of DFT bin `(ku, kv)`, scaled so the Nyquist frequency of
/// either axis is 1. Frequencies beyond the Nyquist circle (the spectrum's
/// corners) are clamped to 1.
pub fn radial_frequency(ku: usize, kv: usize, width: usize, height: usize) -> f64 {
    fn axis(k: usize, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        signed / (n as f64 / 2.0)
    }
    let fu = axis(ku, width);
    let fv = axis(kv, height);
    sqrt(fu * fu + fv * fv).min(1.0)
}

fn spectral_filter(slice: &Slice2D, gain: impl Fn(f64) -> f64) -> Slice2D {
    let (w, h) = (slice.width, slice.height);
    let mut buf: Vec<Complex> = slice.data.iter().map(|&v| Complex::new(v as f64, 0.0)).collect();
    fft2(&mut buf, w, h, false);
    for kv in 0..h {
        for ku in 0..w {
            let g = gain(radial_frequency(ku, kv, w, h));
            if g != 1.0 {
                let c = &mut buf[ku + w * kv];
                *c = c.scale(g);
            }
        }
    }
    fft2(&mut buf, w, h, true);
    Slice2D {
        width: w,
        height: h,
        spacing: slice.spacing,
        data: buf.iter().map(|c| c.re as f64).collect(),
    }
}

/// Ideal annulus band-pass keeping radial frequencies in `[lo, hi]`.
pub fn bandpass(slice: &Slice2D, lo: f64, hi: f64) -> Result<Slice2D> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
        return Err(Error::invalid(format!("band [{lo}, {hi}] must lie in [0, 1]")));
    }
    if lo > hi {
        return Err(Error::invalid(format!("band lower edge {lo} exceeds upper edge {hi}")));
    }
    Ok(spectral_filter(slice, |r| if r >= lo && r <= hi { 1.0 } else { 0.0 }))
}

/// Hamming-window gain at radial frequency `r`. Exactly 1 at DC.
pub fn hamming_gain(r: f64, cutoff: f64) -> f64 {
    if r > cutoff {
        0.0
    } else {
        0.54 + 0.46 * cos(core::f64::consts::PI * r / cutoff)
    }
}

/// Low-pass with a Hamming-shaped radial transfer function.
pub fn hamming_lowpass(slice: &Slice2D, cutoff: f64) -> Result<Slice2D> {
    if !(cutoff > 0.0 && cutoff <= 1.0) {
        return Err(Error::invalid(format!("cutoff must be in (0, 1], got {cutoff}")));
    }
    Ok(spectral_filter(slice, |r| hamming_gain(r, cutoff)))
}

/// Sobel gradient magnitude with replicated borders.
pub fn sobel(slice: &Slice2D) -> Result<Slice2D> {
    let (w, h) = (slice.width, slice.height);
    if w < 3 || h < 3 {
        return Err(Error::SliceTooSmall { width: w, height: h });
    }
    let at = |u: isize, v: isize| -> f64 {
        let u = u.clamp(0, w as isize - 1) as usize;
        let v = v.clamp(0, h as isize - 1) as usize;
        slice.data[u + w * v] as f64
    };
    let mut data = Vec::with_capacity(w * h);
    for v in 0..h as isize {
        for u in 0..w as isize {
            let gx = (at(u + 1, v - 1) + 2.0 * at(u + 1, v) + at(u + 1, v + 1))
                - (at(u - 1, v - 1) + 2.0 * at(u - 1, v) + at(u - 1, v + 1));
            let gy = (at(u - 1, v + 1) + 2.0 * at(u, v + 1) + at(u + 1, v + 1))
                - (at(u - 1, v - 1) + 2.0 * at(u, v - 1) + at(u + 1, v - 1));
            data.push(sqrt(gx * gx + gy * gy) as f64);
        }
    }
    Ok(Slice2D {
        width: w,
        height: h,
        spacing: slice.spacing,
        data,
    })
}

/// Applies a slice filter to every slice (of every frame) along `plane`,
/// returning a new float volume.
pub fn map_slices(vol: &Volume3D, plane: PlaneId, f: impl Fn(&Slice2D) -> Result<Slice2D>) -> Result<Volume3D> {
    let dims = vol.dims();
    let (w, h, depth) = plane.extent(dims);
    let spacing = plane.in_plane_spacing(vol.spacing());
    let per = vol.voxels_per_frame();
    let mut out = vol.data().to_vec();
    for t in 0..vol.frames() {
        let frame = &mut out[t * per..(t + 1) * per];
        for index in 0..depth {
            let values = extract_plane(dims, frame, plane, index)?;
            let slice = Slice2D { width: w, height: h, spacing, data: values };
            let filtered = f(&slice)?;
            write_plane(dims, frame, plane, index, &filtered.data)?;
        }
    }
    Ok(vol.with_data(out)?.with_dtype(crate::volume::DataType::Float32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn window_endpoints_and_midpoint() {
        let wl = WindowLevel::from_range(-100.0, 300.0);
        assert_eq!(wl.map(-100.0), 0);
        assert_eq!(wl.map(300.0), 255);
        assert_eq!(wl.map(100.0), 128);
        assert_eq!(wl.map(-1000.0), 0);
        assert_eq!(wl.map(1000.0), 255);
    }

    #[test]
    fn zero_window_thresholds() {
        let wl = WindowLevel::new(0.0, 10.0).unwrap();
        assert_eq!(wl.map(5.0), 0);
        assert_eq!(wl.map(15.0), 255);
        assert!(WindowLevel::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn window_is_monotone() {
        let wl = WindowLevel::new(37.0, 12.5).unwrap();
        let mut prev = 0;
        for i in -200..200 {
            let g = wl.map(i as f64 * 0.37);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn sobel_step_edge() {
        let delta = 7.0;
        let s = Slice2D::from_fn(8, 6, |u, _| if u >= 4 { delta } else { 0.0 });
        let g = sobel(&s).unwrap();
        for v in 0..6 {
            for u in 0..8 {
                let expected = if u == 3 || u == 4 { 4.0 * delta } else { 0.0 };
                assert_eq!(g.get(u, v), expected, "u={u} v={v}");
            }
        }
        assert!(sobel(&Slice2D::from_fn(5, 5, |_, _| 3.0)).unwrap().data.iter().all(|&v| v == 0.0));
        assert!(matches!(sobel(&Slice2D::from_fn(2, 2, |_, _| 0.0)), Err(Error::SliceTooSmall { .. })));
    }

    #[test]
    fn bandpass_full_band_is_identity() {
        let s = Slice2D::from_fn(20, 13, |u, v| ((u * 7 + v * 3) % 11) as f64 - 4.0);
        let out = bandpass(&s, 0.0, 1.0).unwrap();
        for (a, b) in out.data.iter().zip(&s.data) {
            assert!((a - b).abs() < 1e-6 * 10.0);
        }
        assert!(bandpass(&s, 0.6, 0.4).is_err());
    }

    #[test]
    fn bandpass_removes_dc() {
        let s = Slice2D::from_fn(16, 16, |_, _| 5.0);
        let out = bandpass(&s, 0.1, 1.0).unwrap();
        assert!(out.data.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn hamming_dc_and_zero() {
        assert_eq!(hamming_gain(0.0, 0.3), 1.0);
        let s = Slice2D::from_fn(32, 32, |_, _| 9.25);
        assert_eq!(hamming_lowpass(&s, 0.2).unwrap().data, s.data);
        let z = Slice2D::from_fn(9, 7, |_, _| 0.0);
        assert!(hamming_lowpass(&z, 0.5).unwrap().data.iter().all(|&v| v == 0.0));
        assert!(hamming_lowpass(&z, 0.0).is_err());
    }

    #[test]
    fn hamming_kills_checkerboard() {
        let s = Slice2D::from_fn(32, 32, |u, v| if (u + v) % 2 == 0 { 1.0 } else { -1.0 });
        let out = hamming_lowpass(&s, 0.2).unwrap();
        assert!(out.data.iter().all(|v| v.abs() < 0.01));
    }

    #[test]
    fn map_slices_leaves_input_untouched() {
        let vol = Volume3D::from_data([4, 4, 3], (0..48).map(|i| i as f64).collect()).unwrap();
        let before = vol.clone();
        let out = map_slices(&vol, PlaneId::Axial, |s| sobel(s)).unwrap();
        assert_eq!(vol, before);
        assert_eq!(out.dims(), vol.dims());
        assert_ne!(out.data(), vol.data());
        let _ = vec![0];
    }
}
