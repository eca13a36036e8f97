//! Dynamics of the automorphisms of `P^2`: every lift is a rotation of the
//! Riemann sphere, described here by fixed points, an axis/angle pair, a unit
//! quaternion and the Steiner net of circles it permutes.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use num_complex::Complex64;
use thiserror::Error;

use crate::maps::{DianalyticMap, MoebiusRotation};
use crate::sphere::{chordal_distance, h_involution, stereographic, ExtComplex};

/// `sin(angle/2)` below which a rotation counts as the identity.
pub const IDENTITY_TOL: f64 = 1e-14;

pub const DEFAULT_Q_MAX: u64 = 64;
pub const DEFAULT_RATIONAL_TOL: f64 = 1e-9;

/// Latitude radii in the conjugated chart run geometrically over this range.
pub const LATITUDE_RANGE: (f64, f64) = (0.2, 5.0);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("the map is the identity; every point is fixed")]
    Identity,
    #[error("no period found within {0} iterations")]
    NoPeriod(usize),
    #[error("Steiner net needs two distinct fixed points")]
    DegenerateFixedPoints,
}

/// A quaternion `w + x i + y j + z k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let s = (angle / 2.0).sin() / n;
        Quaternion::new((angle / 2.0).cos(), axis[0] * s, axis[1] * s, axis[2] * s)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Picks the representative of `{q, -q}` with `w > 0`, or with the first
    /// nonzero vector component positive when `w = 0`.
    pub fn sign_normalized(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else {
            [self.x, self.y, self.z]
                .into_iter()
                .find(|c| *c != 0.0)
                .is_some_and(|c| c < 0.0)
        };
        if flip {
            Quaternion::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            self
        }
    }

    /// Distance between the rotations `self` and `other`, ignoring the sign.
    pub fn rotation_distance(&self, other: &Quaternion) -> f64 {
        let d = |s: f64| {
            ((self.w - s * other.w).powi(2)
                + (self.x - s * other.x).powi(2)
                + (self.y - s * other.y).powi(2)
                + (self.z - s * other.z).powi(2))
            .sqrt()
        };
        d(1.0).min(d(-1.0))
    }

    /// Rotates a vector of R^3.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let u = [self.x, self.y, self.z];
        let c1 = cross(u, v);
        let c2 = cross(u, c1);
        [
            v[0] + 2.0 * (self.w * c1[0] + c2[0]),
            v[1] + 2.0 * (self.w * c1[1] + c2[1]),
            v[2] + 2.0 * (self.w * c1[2] + c2[2]),
        ]
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        )
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Quaternion of the sphere rotation induced (through stereographic
/// projection, infinity at the north pole) by the SU(2) pair `(alpha, beta)`.
pub fn su2_to_quaternion(alpha: Complex64, beta: Complex64) -> Quaternion {
    Quaternion::new(alpha.re, beta.im, -beta.re, alpha.im)
}

/// Inverse of [`su2_to_quaternion`].
pub fn quaternion_to_rotation(q: Quaternion) -> MoebiusRotation {
    let n = q.norm();
    let alpha = Complex64::new(q.w, q.z) / n;
    let beta = Complex64::new(-q.y, q.x) / n;
    MoebiusRotation::new(0.0, alpha, beta).expect("unit quaternion gives a nonzero pair")
}

/// Axis, angle and quaternion of a non-identity rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationDescriptor {
    /// Unit axis; the rotation is counterclockwise by `angle` about it.
    pub axis: [f64; 3],
    /// In `[0, pi]`.
    pub angle: f64,
    pub quaternion: Quaternion,
}

/// Sorts the fixed pair: 0 first, infinity last, otherwise by decreasing principal argument.
fn order_pair(a: ExtComplex, b: ExtComplex) -> (ExtComplex, ExtComplex) {
    let key = |p: &ExtComplex| match p {
        ExtComplex::Finite(z) if *z == ZERO => (0, 0.0),
        // adding 0.0 turns -0.0 into +0.0 so the argument stays in (-pi, pi]
        ExtComplex::Finite(z) => (1, -(z.im + 0.0).atan2(z.re)),
        ExtComplex::Infinity => (2, 0.0),
    };
    let (ka, kb) = (key(&a), key(&b));
    if (ka.0, ka.1) <= (kb.0, kb.1) {
        (a, b)
    } else {
        (b, a)
    }
}

/// The two solutions of `G(z) = z`.
///
/// For `G = (alpha z + beta)/(-conj(beta) z + conj(alpha))` they solve
/// `conj(beta) z^2 + 2i Im(alpha) z + beta = 0`; the product of the roots is
/// `beta / conj(beta)`, so the second is recovered from the first without
/// cancellation. The pair is antipodal.
pub fn fixed_points(g: &MoebiusRotation) -> Result<(ExtComplex, ExtComplex), RotationError> {
    let (alpha, beta) = g.su2();
    let s = alpha.im.hypot(beta.norm());
    if s < IDENTITY_TOL {
        return Err(RotationError::Identity);
    }
    if beta == ZERO {
        return Ok((ExtComplex::ZERO, ExtComplex::Infinity));
    }
    let sign = if alpha.im >= 0.0 { 1.0 } else { -1.0 };
    let big = Complex64::new(0.0, -alpha.im - sign * s) / beta.conj();
    let first = ExtComplex::from(big);
    let second = match first {
        ExtComplex::Infinity => ExtComplex::ZERO,
        ExtComplex::Finite(z) => ExtComplex::from(beta / (beta.conj() * z)),
    };
    Ok(order_pair(first, second))
}

/// Axis/angle/quaternion of `g`. The angle is `2 arccos |Re tr / 2|` of the
/// SU(2) matrix; the axis is the stereographic image of the fixed point around
/// which the rotation is counterclockwise.
pub fn rotation_descriptor(g: &MoebiusRotation) -> Result<RotationDescriptor, RotationError> {
    let (alpha, beta) = g.su2();
    let (p1, p2) = fixed_points(g)?;
    let q = su2_to_quaternion(alpha, beta).sign_normalized();
    let angle = 2.0 * alpha.re.abs().min(1.0).acos();
    let v = [q.x, q.y, q.z];
    let a1 = stereographic(p1);
    let axis = if dot(a1, v) >= 0.0 {
        a1
    } else {
        stereographic(p2)
    };
    Ok(RotationDescriptor {
        axis,
        angle,
        quaternion: q,
    })
}

/// `g1 ∘ g2`, returned in unit-determinant form (`theta = 0`).
pub fn compose(g1: &MoebiusRotation, g2: &MoebiusRotation) -> MoebiusRotation {
    let (a1, b1) = g1.su2();
    let (a2, b2) = g2.su2();
    let alpha = a1 * a2 - b1 * b2.conj();
    let beta = a1 * b2 + b1 * a2.conj();
    MoebiusRotation::new(0.0, alpha, beta).expect("product of unit matrices is nonzero")
}

pub fn inverse(g: &MoebiusRotation) -> MoebiusRotation {
    let (alpha, beta) = g.su2();
    MoebiusRotation::new(0.0, alpha.conj(), -beta).expect("unit pair")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rationality {
    /// The angle is `2 pi p / q` in lowest terms, `0 <= p < q`.
    Rational {
        p: u64,
        q: u64,
    },
    Irrational,
}

/// Finds the smallest `q <= q_max` with `|angle/(2 pi) - p/q| < tol`.
///
/// Walks the convergents and intermediate fractions of the continued
/// fraction of `angle / 2pi` in order of increasing denominator; the first
/// fraction within `tol` is the answer, since a smallest-denominator
/// approximation is always a best approximation.
pub fn classify_rotation(angle: f64, q_max: u64, tol: f64) -> Rationality {
    let x = angle.rem_euclid(TAU) / TAU;
    let hit = |h: u64, k: u64| (x - h as f64 / k as f64).abs() < tol;
    let finish = |h: u64, k: u64| Rationality::Rational { p: h % k, q: k };

    let a0 = x.floor();
    let (mut h1, mut k1) = (a0 as u64, 1u64);
    let (mut h2, mut k2) = (1u64, 0u64);
    if hit(h1, k1) {
        return finish(h1, k1);
    }
    let mut frac = x - a0;
    for _ in 0..64 {
        if frac <= 0.0 {
            break;
        }
        let r = 1.0 / frac;
        let a = r.floor();
        frac = r - a;
        let a = a as u64;
        for t in 1..=a {
            let (h, k) = (t * h1 + h2, t * k1 + k2);
            if k > q_max {
                return Rationality::Irrational;
            }
            if hit(h, k) {
                return finish(h, k);
            }
        }
        let (h, k) = (a * h1 + h2, a * k1 + k2);
        (h2, k2, h1, k1) = (h1, k1, h, k);
    }
    Rationality::Irrational
}

/// Smallest `n <= n_max` with `chordal(G^n(z0), z0) < tol`.
pub fn period_on_sphere(
    g: &MoebiusRotation,
    z0: ExtComplex,
    n_max: usize,
    tol: f64,
) -> Result<usize, RotationError> {
    let mut z = z0;
    for n in 1..=n_max {
        z = g.apply(z);
        if chordal_distance(z, z0) < tol {
            return Ok(n);
        }
    }
    Err(RotationError::NoPeriod(n_max))
}

/// Period of the projected orbit in `P^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct P2Period {
    pub period: usize,
    /// The orbit closed on `h(z0)` rather than `z0`.
    pub halved: bool,
}

/// Smallest `m <= n_max` with `G^m(z0)` within `tol` of `z0` or `h(z0)`.
pub fn period_on_p2(
    g: &MoebiusRotation,
    z0: ExtComplex,
    n_max: usize,
    tol: f64,
) -> Result<P2Period, RotationError> {
    let antipode = h_involution(z0);
    let mut z = z0;
    for m in 1..=n_max {
        z = g.apply(z);
        if chordal_distance(z, z0) < tol {
            return Ok(P2Period {
                period: m,
                halved: false,
            });
        }
        if chordal_distance(z, antipode) < tol {
            return Ok(P2Period {
                period: m,
                halved: true,
            });
        }
    }
    Err(RotationError::NoPeriod(n_max))
}

/// `[z0, F(z0), ..., F^n(z0)]`.
pub fn orbit(map: &DianalyticMap, z0: ExtComplex, n: usize) -> Vec<ExtComplex> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(z0);
    let mut z = z0;
    for _ in 0..n {
        z = map.evaluate(z);
        out.push(z);
    }
    out
}

/// A circle or a straight line of the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GenCircle {
    Circle {
        center: Complex64,
        radius: f64,
    },
    /// Through `point` with unit direction `dir`.
    Line {
        point: Complex64,
        dir: Complex64,
    },
}

impl GenCircle {
    /// The generalized circle through three distinct sphere points.
    pub fn through(a: ExtComplex, b: ExtComplex, c: ExtComplex) -> GenCircle {
        let finite: Vec<Complex64> = [a, b, c].iter().filter_map(|p| p.finite()).collect();
        if finite.len() < 3 {
            return line_through(finite[0], finite[1]);
        }
        let (p, q, r) = (finite[0], finite[1], finite[2]);
        let (u, v) = (q - p, r - p);
        let cross = u.re * v.im - u.im * v.re;
        if cross.abs() <= 1e-12 * u.norm() * v.norm() {
            return line_through(p, if u.norm() >= v.norm() { q } else { r });
        }
        // circumcenter relative to p
        let d = 2.0 * cross;
        let (uu, vv) = (u.norm_sqr(), v.norm_sqr());
        let off = Complex64::new(v.im * uu - u.im * vv, u.re * vv - v.re * uu) / d;
        GenCircle::Circle {
            center: p + off,
            radius: off.norm(),
        }
    }

    /// Euclidean distance from a finite point.
    pub fn distance(&self, z: Complex64) -> f64 {
        match *self {
            GenCircle::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            GenCircle::Line { point, dir } => ((z - point) * dir.conj()).im.abs(),
        }
    }

    /// Closest point of the curve to `z`.
    pub fn closest_point(&self, z: Complex64) -> Complex64 {
        match *self {
            GenCircle::Circle { center, radius } => {
                let d = z - center;
                if d.norm() == 0.0 {
                    center + radius
                } else {
                    center + d * (radius / d.norm())
                }
            }
            GenCircle::Line { point, dir } => point + dir * ((z - point) * dir.conj()).re,
        }
    }

    /// Chordal distance from a sphere point to the curve (lines contain infinity).
    pub fn chordal_distance_to(&self, z: ExtComplex) -> f64 {
        match (z, self) {
            (ExtComplex::Infinity, GenCircle::Line { .. }) => 0.0,
            (ExtComplex::Infinity, GenCircle::Circle { center, radius }) => {
                chordal_distance(z, ExtComplex::Finite(center + radius)).min(chordal_distance(
                    z,
                    ExtComplex::Finite(
                        center + center.unscale(center.norm().max(1e-300)) * *radius,
                    ),
                ))
            }
            (ExtComplex::Finite(w), c) => {
                chordal_distance(z, ExtComplex::Finite(c.closest_point(w)))
            }
        }
    }

    /// Whether the curve passes through the sphere point `z` within `tol`.
    pub fn contains(&self, z: ExtComplex, tol: f64) -> bool {
        match (z, self) {
            (ExtComplex::Infinity, GenCircle::Line { .. }) => true,
            (ExtComplex::Infinity, GenCircle::Circle { .. }) => false,
            (ExtComplex::Finite(w), c) => c.distance(w) <= tol * (1.0 + w.norm()),
        }
    }

    /// Angle in `[0, pi/2]` between two curves at an intersection point.
    /// `None` if they do not meet in the finite plane.
    pub fn crossing_angle(&self, other: &GenCircle) -> Option<f64> {
        use GenCircle::*;
        match (*self, *other) {
            (
                Circle {
                    center: c1,
                    radius: r1,
                },
                Circle {
                    center: c2,
                    radius: r2,
                },
            ) => {
                let d = (c1 - c2).norm();
                if d > r1 + r2 || d < (r1 - r2).abs() {
                    return None;
                }
                let cos = ((r1 * r1 + r2 * r2 - d * d) / (2.0 * r1 * r2)).clamp(-1.0, 1.0);
                Some(acute(cos.acos()))
            }
            (Circle { center, radius }, line @ Line { .. })
            | (line @ Line { .. }, Circle { center, radius }) => {
                let dist = line.distance(center);
                if dist > radius {
                    return None;
                }
                Some(acute((dist / radius).acos()))
            }
            (Line { dir: d1, .. }, Line { dir: d2, .. }) => {
                let cos = (d1 * d2.conj()).re.clamp(-1.0, 1.0);
                Some(acute(cos.acos()))
            }
        }
    }
}

fn acute(angle: f64) -> f64 {
    if angle > PI / 2.0 {
        PI - angle
    } else {
        angle
    }
}

fn line_through(p: Complex64, q: Complex64) -> GenCircle {
    let d = q - p;
    GenCircle::Line {
        point: p,
        dir: d / d.norm(),
    }
}

/// `M(z) = (z - p1)/(z - p2)` as a 2x2 matrix, sending `p1 -> 0`, `p2 -> infinity`.
#[derive(Clone, Copy, Debug)]
struct Matrix2 {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl Matrix2 {
    fn steiner_chart(p1: ExtComplex, p2: ExtComplex) -> Matrix2 {
        match (p1, p2) {
            (ExtComplex::Finite(u), ExtComplex::Finite(v)) => Matrix2 {
                a: ONE,
                b: -u,
                c: ONE,
                d: -v,
            },
            (ExtComplex::Finite(u), ExtComplex::Infinity) => Matrix2 {
                a: ONE,
                b: -u,
                c: ZERO,
                d: ONE,
            },
            (ExtComplex::Infinity, ExtComplex::Finite(v)) => Matrix2 {
                a: ZERO,
                b: ONE,
                c: ONE,
                d: -v,
            },
            (ExtComplex::Infinity, ExtComplex::Infinity) => unreachable!("distinct points"),
        }
    }

    fn inverse(&self) -> Matrix2 {
        Matrix2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (x, w) = z.homogeneous();
        ExtComplex::from_homogeneous(self.a * x + self.b * w, self.c * x + self.d * w)
    }
}

/// The two orthogonal circle families determined by a pair of fixed points.
#[derive(Clone, Debug, PartialEq)]
pub struct SteinerNet {
    pub fixed_points: (ExtComplex, ExtComplex),
    /// Circles (or lines) through both fixed points.
    pub meridians: Vec<GenCircle>,
    /// Circles separating the fixed points, orthogonal to every meridian.
    pub latitudes: Vec<GenCircle>,
}

/// Latitude radii `rho_j` in the chart where the fixed points sit at 0 and infinity.
pub fn latitude_radii(n: usize) -> Vec<f64> {
    let (lo, hi) = LATITUDE_RANGE;
    match n {
        0 => vec![],
        1 => vec![1.0],
        _ => (0..n)
            .map(|j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Builds the Steiner net of `p1, p2` by pulling back `n_meridians` lines
/// through the origin (angles `j pi / n`) and `n_latitudes` circles `|w| = rho_j`
/// along `M(z) = (z - p1)/(z - p2)`.
pub fn steiner_net(
    p1: ExtComplex,
    p2: ExtComplex,
    n_meridians: usize,
    n_latitudes: usize,
) -> Result<SteinerNet, RotationError> {
    if chordal_distance(p1, p2) < 1e-12 {
        return Err(RotationError::DegenerateFixedPoints);
    }
    let back = Matrix2::steiner_chart(p1, p2).inverse();
    let meridians = (0..n_meridians)
        .map(|j| {
            let dir = Complex64::from_polar(1.0, PI * j as f64 / n_meridians as f64);
            GenCircle::through(p1, p2, back.apply(ExtComplex::Finite(dir)))
        })
        .collect();
    let latitudes = latitude_radii(n_latitudes)
        .into_iter()
        .map(|rho| latitude_circle(&back, rho))
        .collect();
    Ok(SteinerNet {
        fixed_points: (p1, p2),
        meridians,
        latitudes,
    })
}

fn latitude_circle(back: &Matrix2, rho: f64) -> GenCircle {
    let pts: Vec<ExtComplex> = (0..3)
        .map(|k| {
            back.apply(ExtComplex::Finite(Complex64::from_polar(
                rho,
                TAU * k as f64 / 3.0 + 0.25,
            )))
        })
        .collect();
    GenCircle::through(pts[0], pts[1], pts[2])
}

/// The member of the latitude family passing through `z0`.
pub fn latitude_through(
    p1: ExtComplex,
    p2: ExtComplex,
    z0: ExtComplex,
) -> Result<GenCircle, RotationError> {
    if chordal_distance(p1, p2) < 1e-12 {
        return Err(RotationError::DegenerateFixedPoints);
    }
    let chart = Matrix2::steiner_chart(p1, p2);
    let rho = chart.apply(z0).norm();
    Ok(latitude_circle(&chart.inverse(), rho))
}

impl SteinerNet {
    /// Largest distance from a fixed point to a meridian.
    pub fn incidence_defect(&self) -> f64 {
        let (p1, p2) = self.fixed_points;
        self.meridians
            .iter()
            .flat_map(|m| {
                [p1, p2].map(|p| match (p, m) {
                    (ExtComplex::Infinity, GenCircle::Line { .. }) => 0.0,
                    (ExtComplex::Infinity, GenCircle::Circle { .. }) => f64::INFINITY,
                    (ExtComplex::Finite(z), m) => m.distance(z) / (1.0 + z.norm()),
                })
            })
            .fold(0.0, f64::max)
    }

    /// Largest deviation from a right angle over all meridian/latitude pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in &self.meridians {
            for l in &self.latitudes {
                let defect = match m.crossing_angle(l) {
                    Some(a) => (PI / 2.0 - a).abs(),
                    None => f64::INFINITY,
                };
                worst = worst.max(defect);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::HInvariantBlaschke;
    use crate::sphere::random_sphere_point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn e(re: f64, im: f64) -> ExtComplex {
        ExtComplex::new(re, im)
    }

    fn close(a: ExtComplex, b: ExtComplex, tol: f64) -> bool {
        chordal_distance(a, b) < tol
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> MoebiusRotation {
        MoebiusRotation::new(
            rng.gen_range(0.0..TAU),
            c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        )
        .unwrap()
    }

    #[test]
    fn su2_quaternion_convention_matches_the_sphere_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = random_rotation(&mut rng);
            let (alpha, beta) = g.su2();
            let q = su2_to_quaternion(alpha, beta);
            let z = random_sphere_point(&mut rng);
            let lhs = stereographic(g.apply(z));
            let rhs = q.rotate(stereographic(z));
            for k in 0..3 {
                assert!((lhs[k] - rhs[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fixed_point_examples() {
        let g = MoebiusRotation::from_zero(0.0, ONE);
        let (p1, p2) = fixed_points(&g).unwrap();
        assert!(close(p1, e(0.0, 1.0), 1e-15) && close(p2, e(0.0, -1.0), 1e-15));

        let spin = MoebiusRotation::spin(0.7);
        assert_eq!(
            fixed_points(&spin).unwrap(),
            (ExtComplex::ZERO, ExtComplex::Infinity)
        );

        let g = MoebiusRotation::from_zero(0.0, c(0.0, 1.0));
        let (p1, p2) = fixed_points(&g).unwrap();
        assert!(close(p1, e(-1.0, 0.0), 1e-15) && close(p2, e(1.0, 0.0), 1e-15));

        assert_eq!(
            fixed_points(&MoebiusRotation::identity()),
            Err(RotationError::Identity)
        );
    }

    #[test]
    fn fixed_points_are_fixed_and_antipodal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let g = random_rotation(&mut rng);
            let (p1, p2) = fixed_points(&g).unwrap();
            assert!(close(g.apply(p1), p1, 1e-10) && close(g.apply(p2), p2, 1e-10));
            assert!(close(h_involution(p1), p2, 1e-9));
        }
    }

    #[test]
    fn descriptor_examples() {
        let d = rotation_descriptor(&MoebiusRotation::from_zero(0.0, ONE)).unwrap();
        assert!((d.angle - PI / 2.0).abs() < 1e-15);

        let half = MoebiusRotation::spin(PI);
        let d = rotation_descriptor(&half).unwrap();
        assert!((d.angle - PI).abs() < 1e-15);
        assert_eq!(d.axis, [0.0, 0.0, 1.0]);

        // z0 = 2: SU(2) matrix [[1, -2], [2, 1]]/sqrt(5), trace 2/sqrt(5)
        let d = rotation_descriptor(&MoebiusRotation::from_zero(0.0, c(2.0, 0.0))).unwrap();
        let oracle = 2.0 * (1.0 / 5f64.sqrt()).acos();
        assert!((d.angle - oracle).abs() < 1e-14);
        assert!((d.angle - (-0.6f64).acos()).abs() < 1e-14);
        // it is the supplement of arccos((r^2 - 1)/(r^2 + 1))
        assert!((d.angle - (PI - 0.6f64.acos())).abs() < 1e-14);
    }

    #[test]
    fn descriptor_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = random_rotation(&mut rng);
            let d = rotation_descriptor(&g).unwrap();
            let n = dot(d.axis, d.axis).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!((d.quaternion.norm() - 1.0).abs() < 1e-12);
            assert!(d.quaternion.w >= 0.0);
            assert!((0.0..=PI).contains(&d.angle));
            // the axis/angle pair regenerates the quaternion
            let q = Quaternion::from_axis_angle(d.axis, d.angle);
            assert!(q.rotation_distance(&d.quaternion) < 1e-9);
        }
    }

    #[test]
    fn sign_normalization_at_half_turn() {
        let q = Quaternion::new(0.0, 0.0, -1.0, 0.0).sign_normalized();
        assert_eq!(q, Quaternion::new(-0.0, -0.0, 1.0, -0.0));
    }

    #[test]
    fn compose_examples() {
        let g = MoebiusRotation::from_zero(0.3, c(0.5, -1.0));
        let gi = compose(&g, &MoebiusRotation::identity());
        let (d1, d2) = (
            rotation_descriptor(&g).unwrap(),
            rotation_descriptor(&gi).unwrap(),
        );
        assert!(d1.quaternion.rotation_distance(&d2.quaternion) < 1e-15);

        let neg = MoebiusRotation::spin(PI);
        assert_eq!(
            rotation_descriptor(&compose(&neg, &neg)),
            Err(RotationError::Identity)
        );

        let quarter = MoebiusRotation::spin(PI / 2.0);
        let g = MoebiusRotation::from_zero(0.0, ONE);
        let composed = rotation_descriptor(&compose(&quarter, &g))
            .unwrap()
            .quaternion;
        let product = rotation_descriptor(&quarter).unwrap().quaternion
            * rotation_descriptor(&g).unwrap().quaternion;
        assert!(composed.rotation_distance(&product) < 1e-15);
    }

    #[test]
    fn compose_matches_sequential_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (g1, g2) = (random_rotation(&mut rng), random_rotation(&mut rng));
            let g = compose(&g1, &g2);
            let z = random_sphere_point(&mut rng);
            assert!(close(g.apply(z), g1.apply(g2.apply(z)), 1e-10));
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_rotation(PI / 2.0, 64, 1e-9),
            Rationality::Rational { p: 1, q: 4 }
        );
        assert_eq!(
            classify_rotation(TAU / 3.0, 64, 1e-9),
            Rationality::Rational { p: 1, q: 3 }
        );
        assert_eq!(
            classify_rotation(TAU * 2f64.sqrt() / 2.0, 64, 1e-9),
            Rationality::Irrational
        );
        assert_eq!(
            classify_rotation(0.0, 64, 1e-9),
            Rationality::Rational { p: 0, q: 1 }
        );
        assert_eq!(
            classify_rotation(TAU * 5.0 / 7.0, 64, 1e-9),
            Rationality::Rational { p: 5, q: 7 }
        );
        assert_eq!(
            classify_rotation(TAU - 1e-12, 64, 1e-9),
            Rationality::Rational { p: 0, q: 1 }
        );
    }

    /// Brute force over every denominator.
    fn classify_oracle(angle: f64, q_max: u64, tol: f64) -> Rationality {
        let x = angle / TAU;
        for q in 1..=q_max {
            let p = (x * q as f64).round();
            if (x - p / q as f64).abs() < tol {
                return Rationality::Rational {
                    p: (p as u64) % q,
                    q,
                };
            }
        }
        Rationality::Irrational
    }

    #[test]
    fn classify_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..2000 {
            let angle = if k % 2 == 0 {
                let q = rng.gen_range(1..80u64);
                TAU * rng.gen_range(0..q) as f64 / q as f64 + rng.gen_range(-1e-10..1e-10)
            } else {
                rng.gen_range(0.0..TAU)
            };
            let angle = angle.rem_euclid(TAU);
            for tol in [1e-9, 1e-3, 0.02] {
                assert_eq!(
                    classify_rotation(angle, 64, tol),
                    classify_oracle(angle, 64, tol),
                    "{angle} {tol}"
                );
            }
        }
    }

    #[test]
    fn sphere_period_examples() {
        let quarter = MoebiusRotation::spin(PI / 2.0);
        let z0 = ExtComplex::Finite(Complex64::from_polar(1.0, PI / 7.0));
        assert_eq!(period_on_sphere(&quarter, z0, 64, 1e-9), Ok(4));
        assert_eq!(
            period_on_sphere(&MoebiusRotation::identity(), e(0.3, 0.1), 64, 1e-9),
            Ok(1)
        );
        assert_eq!(
            period_on_sphere(&MoebiusRotation::spin(PI), e(0.5, 0.0), 64, 1e-9),
            Ok(2)
        );
        let irrational = MoebiusRotation::spin(1.0);
        assert_eq!(
            period_on_sphere(&irrational, e(0.5, 0.0), 64, 1e-9),
            Err(RotationError::NoPeriod(64))
        );
    }

    #[test]
    fn p2_period_examples() {
        let quarter = MoebiusRotation::spin(PI / 2.0);
        let on_circle = ExtComplex::Finite(Complex64::from_polar(1.0, PI / 7.0));
        assert_eq!(
            period_on_p2(&quarter, on_circle, 64, 1e-9),
            Ok(P2Period {
                period: 2,
                halved: true
            })
        );
        assert_eq!(
            period_on_p2(&quarter, e(0.5, 0.0), 64, 1e-9),
            Ok(P2Period {
                period: 4,
                halved: false
            })
        );
        assert_eq!(
            period_on_p2(&MoebiusRotation::identity(), e(0.5, 0.0), 64, 1e-9),
            Ok(P2Period {
                period: 1,
                halved: false
            })
        );
    }

    #[test]
    fn orbit_examples() {
        let id: DianalyticMap = MoebiusRotation::identity().into();
        let z0 = e(0.2, 0.4);
        assert_eq!(orbit(&id, z0, 3), vec![z0; 4]);

        let cube: DianalyticMap = HInvariantBlaschke::new(0.0, 1, vec![]).unwrap().into();
        let o = orbit(&cube, e(0.5, 0.0), 2);
        assert_eq!(o, vec![e(0.5, 0.0), e(0.125, 0.0), e(0.001953125, 0.0)]);

        let quarter: DianalyticMap = MoebiusRotation::spin(PI / 2.0).into();
        let o = orbit(&quarter, ExtComplex::ONE, 4);
        let expect = [
            e(1.0, 0.0),
            e(0.0, 1.0),
            e(-1.0, 0.0),
            e(0.0, -1.0),
            e(1.0, 0.0),
        ];
        for (a, b) in o.iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn circle_through_three_points() {
        let g = GenCircle::through(e(1.0, 0.0), e(0.0, 1.0), e(-1.0, 0.0));
        match g {
            GenCircle::Circle { center, radius } => {
                assert!(center.norm() < 1e-15 && (radius - 1.0).abs() < 1e-15);
            }
            _ => panic!("expected a circle"),
        }
        assert!(matches!(
            GenCircle::through(e(0.0, 0.0), e(1.0, 1.0), e(2.0, 2.0)),
            GenCircle::Line { .. }
        ));
        assert!(matches!(
            GenCircle::through(e(0.0, 0.0), ExtComplex::Infinity, e(2.0, 2.0)),
            GenCircle::Line { .. }
        ));
    }

    #[test]
    fn steiner_net_for_vertical_axis() {
        let net = steiner_net(ExtComplex::ZERO, ExtComplex::Infinity, 4, 3).unwrap();
        for m in &net.meridians {
            match m {
                GenCircle::Line { point, .. } => assert!(point.norm() < 1e-15),
                _ => panic!("meridians through 0 and infinity are lines"),
            }
        }
        let radii: Vec<f64> = net
            .latitudes
            .iter()
            .map(|l| match l {
                GenCircle::Circle { center, radius } => {
                    assert!(center.norm() < 1e-12);
                    *radius
                }
                _ => panic!("latitudes are circles"),
            })
            .collect();
        for (r, want) in radii.iter().zip([0.2, 1.0, 5.0]) {
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn steiner_net_for_plus_minus_i() {
        let (p1, p2) = (e(0.0, 1.0), e(0.0, -1.0));
        let net = steiner_net(p1, p2, 6, 5).unwrap();
        // the middle latitude (rho = 1) is the real axis
        match net.latitudes[2] {
            GenCircle::Line { point, dir } => {
                assert!(point.im.abs() < 1e-12);
                assert!(dir.im.abs() < 1e-12);
            }
            other => panic!("expected the real axis, got {other:?}"),
        }
        let through_zero = latitude_through(p1, p2, ExtComplex::ZERO).unwrap();
        assert!(through_zero.contains(ExtComplex::ZERO, 1e-12));
        assert!(through_zero.contains(e(5.0, 0.0), 1e-12));
        assert!(net.incidence_defect() < 1e-9);
        assert!(net.orthogonality_defect() < 1e-6);
    }

    #[test]
    fn steiner_nets_are_orthogonal_and_incident() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let g = random_rotation(&mut rng);
            let (p1, p2) = fixed_points(&g).unwrap();
            let net = steiner_net(p1, p2, 8, 7).unwrap();
            assert_eq!((net.meridians.len(), net.latitudes.len()), (8, 7));
            assert!(net.incidence_defect() < 1e-9);
            assert!(
                net.orthogonality_defect() < 1e-6,
                "{}",
                net.orthogonality_defect()
            );
        }
        assert_eq!(
            steiner_net(ExtComplex::ONE, ExtComplex::ONE, 2, 2),
            Err(RotationError::DegenerateFixedPoints)
        );
    }

    #[test]
    fn orbits_stay_on_their_latitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let g = random_rotation(&mut rng);
            let (p1, p2) = fixed_points(&g).unwrap();
            let z0 = random_sphere_point(&mut rng);
            let lat = latitude_through(p1, p2, z0).unwrap();
            for z in orbit(&g.into(), z0, 30) {
                assert!(lat.chordal_distance_to(z) < 1e-8);
            }
        }
    }
}
