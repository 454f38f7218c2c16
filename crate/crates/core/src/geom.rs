//! Small fixed-size geometry helpers shared by every module.

pub type Point = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

#[inline]
pub fn mat_vec(m: &Mat2, v: Point) -> Point {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// `mᵀ v`
#[inline]
pub fn mat_t_vec(m: &Mat2, v: Point) -> Point {
    [
        m[0][0] * v[0] + m[1][0] * v[1],
        m[0][1] * v[0] + m[1][1] * v[1],
    ]
}

#[inline]
pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[inline]
pub fn inverse(m: &Mat2) -> Mat2 {
    let d = det(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

/// Frobenius product `a : b`.
#[inline]
pub fn frob(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let off = 0.5 * (m[0][1] + m[1][0]);
    let diff = 0.5 * (m[0][0] - m[1][1]);
    let r = sqrt(diff * diff + off * off);
    (0.5 * tr - r, 0.5 * tr + r)
}
