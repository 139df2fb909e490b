//! Slice rendering to PNG, optionally with the label overlay.

use neuroseg_core::enhance::{window_level, WindowLevel};
use neuroseg_core::plane::{extract_plane, slice_extract_frame};
use neuroseg_core::{ColorScheme, LabelMap, PlaneId, Volume3D};

use crate::error::Result;

/// Gray levels of one slice after window/level, row-major with `u` fastest.
pub fn gray_slice(vol: &Volume3D, t: usize, plane: PlaneId, index: usize, wl: WindowLevel) -> Result<(usize, usize, Vec<u8>)> {
    let slice = slice_extract_frame(vol, t, plane, index)?;
    Ok((slice.width, slice.height, window_level(&slice, wl)))
}

/// Alpha-composites label colors over gray, producing RGBA.
pub fn composite(gray: &[u8], labels: &[u16], scheme: &ColorScheme) -> Vec<u8> {
    let mut out = Vec::with_capacity(gray.len() * 4);
    for (&g, &l) in gray.iter().zip(labels) {
        let [r, gr, b, a] = if l == 0 { [0, 0, 0, 0] } else { scheme.rgba(l) };
        let mix = |c: u8| ((c as u32 * a as u32 + g as u32 * (255 - a as u32) + 127) / 255) as u8;
        out.extend_from_slice(&[mix(r), mix(gr), mix(b), 255]);
    }
    out
}

pub fn encode_png(width: usize, height: usize, color: png::ColorType, pixels: &[u8]) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut buf, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        let mut w = enc.write_header().expect("writing PNG to memory");
        w.write_image_data(pixels).expect("pixel buffer matches header");
    }
    buf
}

/// One rendered slice: 8-bit grayscale, or RGBA when `overlay` is set.
pub fn render_slice(
    vol: &Volume3D,
    labels: &LabelMap,
    scheme: &ColorScheme,
    (plane, index, t): (PlaneId, usize, usize),
    wl: WindowLevel,
    overlay: bool,
) -> Result<Vec<u8>> {
    let (w, h, gray) = gray_slice(vol, t, plane, index, wl)?;
    if !overlay {
        return Ok(encode_png(w, h, png::ColorType::Grayscale, &gray));
    }
    let lab = extract_plane(labels.dims(), labels.data(), plane, index)?;
    Ok(encode_png(w, h, png::ColorType::Rgba, &composite(&gray, &lab, scheme)))
}
