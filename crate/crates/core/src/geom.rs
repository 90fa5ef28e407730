//! Minimal 3-vector helpers. Positions are plain `[T; 3]` arrays.

use crate::Real;

pub type Vec3<T> = [T; 3];

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm2<T: Real>(a: &Vec3<T>) -> T {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

#[inline]
pub fn dist2<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    norm2(&sub(a, b))
}

#[inline]
pub fn dist<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    dist2(a, b).sqrt()
}

pub fn is_finite<T: Real>(a: &Vec3<T>) -> bool {
    a.iter().all(|c| c.is_finite())
}

/// Applies a 3x3 matrix (row-major) to a vector.
pub fn mat_vec<T: Real>(m: &[[T; 3]; 3], v: &Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Rotation about a unit axis by `angle` radians (Rodrigues).
pub fn rotation<T: Real>(axis: &Vec3<T>, angle: T) -> [[T; 3]; 3] {
    let n = norm2(axis).sqrt();
    let [x, y, z] = scale(axis, T::one() / n);
    let (s, c) = angle.sin_cos();
    let t = T::one() - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}
