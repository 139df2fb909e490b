//! Float helpers that work without `std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// Cosine and sine of an angle in degrees, exact at multiples of 90°.
pub fn cos_sin_deg(degrees: f64) -> (f64, f64) {
    let turns = degrees / 90.0;
    if turns == libm::trunc(turns) {
        let q = libm::fmod(turns, 4.0);
        let q = if q < 0.0 { q + 4.0 } else { q };
        return match q as u8 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
    }
    let rad = degrees.to_radians();
    (cos(rad), sin(rad))
}

/// Round half up (toward +∞ at exact halves).
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    floor(x + 0.5)
}
