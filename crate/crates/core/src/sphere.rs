//! Points of the Riemann sphere, the antipodal involution `h(z) = -1/conj(z)`,
//! chordal geometry and the quotient by `h` (the real projective plane).

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

/// Moduli above this are promoted to the point at infinity.
pub const OVERFLOW_MODULUS: f64 = 1e154;

/// Tolerance used to decide whether a point lies on the unit circle.
pub const CIRCLE_TOL: f64 = 1e-12;

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtComplex {
    pub const ZERO: ExtComplex = ExtComplex::Finite(Complex64::new(0.0, 0.0));
    pub const ONE: ExtComplex = ExtComplex::Finite(Complex64::new(1.0, 0.0));

    /// Builds a point, promoting huge or non-finite values to `Infinity`.
    pub fn new(re: f64, im: f64) -> Self {
        Self::from(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtComplex::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            ExtComplex::Finite(z) => Some(z),
            ExtComplex::Infinity => None,
        }
    }

    /// Modulus, `f64::INFINITY` for the point at infinity.
    pub fn norm(&self) -> f64 {
        match self {
            ExtComplex::Finite(z) => z.norm(),
            ExtComplex::Infinity => f64::INFINITY,
        }
    }

    pub fn conj(&self) -> Self {
        match *self {
            ExtComplex::Finite(z) => ExtComplex::Finite(z.conj()),
            ExtComplex::Infinity => ExtComplex::Infinity,
        }
    }

    /// Ratio `num / den` of homogeneous coordinates, total on the sphere.
    ///
    /// Callers keep `(num, den)` away from `(0, 0)`.
    pub fn from_homogeneous(num: Complex64, den: Complex64) -> Self {
        if den == Complex64::new(0.0, 0.0) {
            return ExtComplex::Infinity;
        }
        if num.norm() > OVERFLOW_MODULUS * den.norm() {
            return ExtComplex::Infinity;
        }
        Self::from(num / den)
    }

    /// Homogeneous coordinates `(z, w)` with `max(|z|, |w|) = 1`-ish scaling:
    /// `(z, 1)` inside the closed disk, `(1, 1/z)` outside, `(1, 0)` at infinity.
    pub fn homogeneous(&self) -> (Complex64, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            ExtComplex::Infinity => (one, Complex64::new(0.0, 0.0)),
            ExtComplex::Finite(z) if z.norm() <= 1.0 => (z, one),
            ExtComplex::Finite(z) => (one, z.inv()),
        }
    }
}

impl From<Complex64> for ExtComplex {
    fn from(z: Complex64) -> Self {
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() > OVERFLOW_MODULUS {
            ExtComplex::Infinity
        } else {
            ExtComplex::Finite(z)
        }
    }
}

impl From<f64> for ExtComplex {
    fn from(x: f64) -> Self {
        ExtComplex::new(x, 0.0)
    }
}

impl fmt::Display for ExtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtComplex::Infinity => write!(f, "inf"),
            ExtComplex::Finite(z) if z.im >= 0.0 => write!(f, "{}+{}i", z.re, z.im),
            ExtComplex::Finite(z) => write!(f, "{}-{}i", z.re, -z.im),
        }
    }
}

/// The antianalytic involution `h(z) = -1/conj(z)`, swapping 0 and infinity.
pub fn h_involution(z: ExtComplex) -> ExtComplex {
    match z {
        ExtComplex::Infinity => ExtComplex::ZERO,
        ExtComplex::Finite(w) if w.re == 0.0 && w.im == 0.0 => ExtComplex::Infinity,
        ExtComplex::Finite(w) => ExtComplex::from(-w / w.norm_sqr()),
    }
}

/// Chordal distance `2|z-w| / sqrt((1+|z|^2)(1+|w|^2))`, in `[0, 2]`.
pub fn chordal_distance(z: ExtComplex, w: ExtComplex) -> f64 {
    match (z, w) {
        (ExtComplex::Infinity, ExtComplex::Infinity) => 0.0,
        (ExtComplex::Infinity, ExtComplex::Finite(a))
        | (ExtComplex::Finite(a), ExtComplex::Infinity) => 2.0 / (1.0 + a.norm_sqr()).sqrt(),
        (ExtComplex::Finite(a), ExtComplex::Finite(b)) => {
            let d =
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt());
            d.min(2.0)
        }
    }
}

/// Stereographic embedding into the unit sphere with infinity at the north pole.
pub fn stereographic(z: ExtComplex) -> [f64; 3] {
    match z {
        ExtComplex::Infinity => [0.0, 0.0, 1.0],
        ExtComplex::Finite(w) => {
            let n = w.norm_sqr();
            if n > 1.0 {
                // divide through by |w|^2 to keep large points accurate
                let inv = 1.0 / n;
                let d = 1.0 + inv;
                [2.0 * w.re * inv / d, 2.0 * w.im * inv / d, (1.0 - inv) / d]
            } else {
                let d = 1.0 + n;
                [2.0 * w.re / d, 2.0 * w.im / d, (n - 1.0) / d]
            }
        }
    }
}

/// Inverse of [`stereographic`]; the input is normalized first.
pub fn inverse_stereographic(v: [f64; 3]) -> ExtComplex {
    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (x, y, s) = (v[0] / len, v[1] / len, v[2] / len);
    let xy = Complex64::new(x, y);
    if s < 0.0 {
        ExtComplex::from(xy / (1.0 - s))
    } else {
        // 1 - s cancels near the north pole; x^2 + y^2 = (1 - s)(1 + s)
        let rho2 = x * x + y * y;
        if rho2 == 0.0 {
            return ExtComplex::Infinity;
        }
        ExtComplex::from(xy * ((1.0 + s) / rho2))
    }
}

/// A uniformly distributed point of the sphere.
pub fn random_sphere_point<R: Rng + ?Sized>(rng: &mut R) -> ExtComplex {
    let s: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - s * s).sqrt();
    inverse_stereographic([rho * phi.cos(), rho * phi.sin(), s])
}

/// A point of `P^2`, stored through its canonical representative.
///
/// The representative lies in the open unit disk, or on the unit circle with
/// argument in `[0, pi)`. It is never infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P2Point {
    rep: Complex64,
}

impl P2Point {
    pub fn rep(&self) -> Complex64 {
        self.rep
    }
}

/// Canonical projection onto `P^2 = sphere / <h>`.
pub fn project_p2(z: ExtComplex) -> P2Point {
    let w = match z {
        ExtComplex::Infinity => {
            return P2Point {
                rep: Complex64::new(0.0, 0.0),
            }
        }
        ExtComplex::Finite(w) => w,
    };
    let r = w.norm();
    if r < 1.0 - CIRCLE_TOL {
        return P2Point { rep: w };
    }
    if r > 1.0 + CIRCLE_TOL {
        let hw = -w / w.norm_sqr();
        return P2Point { rep: hw };
    }
    // on the circle h(z) = -z; keep the half with arg in [0, pi)
    let u = w / r;
    let arg = u.im.atan2(u.re);
    let rep = if (0.0..std::f64::consts::PI).contains(&arg) {
        u
    } else {
        -u
    };
    // atan2 can return exactly pi for -1; -(-1) = 1 has arg 0
    P2Point {
        rep: if rep.im == 0.0 && rep.re < 0.0 {
            -rep
        } else {
            rep
        },
    }
}

/// Distance in `P^2`: the chordal distance between the two closest lifts.
pub fn p2_distance(p: P2Point, q: P2Point) -> f64 {
    let a = ExtComplex::Finite(p.rep);
    let b = ExtComplex::Finite(q.rep);
    chordal_distance(a, b).min(chordal_distance(a, h_involution(b)))
}
