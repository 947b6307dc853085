//! Shared numerical kernels: FFT-based spectral operators, quadrature on the
//! real line, Chebyshev collocation and interpolation helpers.

pub mod cheb;
pub mod fourier;
pub mod interp;
pub mod quad;

/// 2D point / vector, kept as a plain array so geometry stays dependency-free.
pub type Vec2 = [f64; 2];

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

/// Counterclockwise rotation by 90 degrees, the fixed matrix ((0,-1),(1,0)).
#[inline]
pub fn rot90(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}
