//! Vendored reference data for the benchmark cases.

/// Gresho vortex initial profile (Liska & Wendroff 2003 setup): triangular
/// azimuthal velocity, zero beyond r = 0.4.
pub fn gresho_velocity(r: f64) -> f64 {
    if r < 0.2 {
        5.0 * r
    } else if r < 0.4 {
        2.0 - 5.0 * r
    } else {
        0.0
    }
}

/// Pressure in exact radial balance with the triangular profile
/// (`dp/dr = v_φ²/r`); continuous across both breakpoints.
pub fn gresho_pressure(r: f64) -> f64 {
    if r < 0.2 {
        5.0 + 12.5 * r * r
    } else if r < 0.4 {
        9.0 - 4.0 * (0.2f64).ln() + 12.5 * r * r - 20.0 * r + 4.0 * r.ln()
    } else {
        3.0 + 4.0 * (2.0f64).ln()
    }
}

/// Ghia, Ghia & Shin (1982), Re = 100: u along the vertical centerline of
/// the unit cavity, `(y, u)` at the 17 published ordinates.
pub const GHIA_RE100_U: [(f64, f64); 17] = [
    (0.0000, 0.00000),
    (0.0547, -0.03717),
    (0.0625, -0.04192),
    (0.0703, -0.04775),
    (0.1016, -0.06434),
    (0.1719, -0.10150),
    (0.2813, -0.15662),
    (0.4531, -0.21090),
    (0.5000, -0.20581),
    (0.6172, -0.13641),
    (0.7344, 0.00332),
    (0.8516, 0.23151),
    (0.9531, 0.68717),
    (0.9609, 0.73722),
    (0.9688, 0.78871),
    (0.9766, 0.84123),
    (1.0000, 1.00000),
];

/// Ghia, Ghia & Shin (1982), Re = 100: v along the horizontal centerline,
/// `(x, v)` at the 17 published ordinates.
pub const GHIA_RE100_V: [(f64, f64); 17] = [
    (0.0000, 0.00000),
    (0.0625, 0.09233),
    (0.0703, 0.10091),
    (0.0781, 0.10890),
    (0.0938, 0.12317),
    (0.1563, 0.16077),
    (0.2266, 0.17507),
    (0.2344, 0.17527),
    (0.5000, 0.05454),
    (0.8047, -0.24533),
    (0.8594, -0.22445),
    (0.9063, -0.16914),
    (0.9453, -0.10313),
    (0.9531, -0.08864),
    (0.9609, -0.07391),
    (0.9688, -0.05906),
    (1.0000, 0.00000),
];
