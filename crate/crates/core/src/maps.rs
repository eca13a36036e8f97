//! Representations of dianalytic self-maps of `P^2` and their lifts to the sphere.
//!
//! Every finite map is a rational function `F` with `F(h(z)) = h(F(z))`; the
//! induced map on `P^2` is either `[z] -> [F(z)]` or, when the map carries the
//! `conj` flag, `[z] -> [F(conj z)]`.
//!
//! The forms kept here are
//!
//! * [`MoebiusRotation`]: `e^{i theta} (a z + b) / (-conj(b) z + conj(a))`, a sphere rotation;
//! * [`RationalForm1`]: `e^{i theta} P(z) / Q(z)` where `Q` is the conjugate reversal of the
//!   odd-degree numerator `P`;
//! * [`CanonicalMap`]: `e^{i alpha} prod (z - z_k) / (1 + conj(z_k) z)` with an odd number of zeros;
//! * [`HInvariantBlaschke`]: `e^{i theta} z^{2p+1} prod (z^2 - z_k^2) / (1 - conj(z_k)^2 z^2)`;
//! * [`BlaschkeProduct`]: a plain finite product of `(z - z_k) / (1 - conj(z_k) z)`, which
//!   is generally *not* h-invariant;
//! * [`InfiniteBlaschke`]: a stored prefix of a normalized infinite Blaschke product.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::roots::{self, RootError};
use crate::sphere::{chordal_distance, h_involution, random_sphere_point, ExtComplex};

/// Seed of the sampler used by [`is_h_invariant`].
pub const H_SAMPLE_SEED: u64 = 0x6b_6c65_696e;

/// Relative size below which a leading coefficient counts as vanishing.
pub const LEADING_TOL: f64 = 1e-12;

/// Angle increment used to spread law-generated zeros around the disk.
pub const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("a and b are both zero")]
    ZeroPair,
    #[error("coefficient list must have even, nonzero length (got {0})")]
    CoefficientCount(usize),
    #[error("first and last coefficients are both zero")]
    DegenerateEnds,
    #[error("canonical form needs an odd number of zeros (got {0})")]
    EvenZeroCount(usize),
    #[error("zero {index} has modulus {modulus}, outside the open unit disk")]
    ZeroOutsideDisk { index: usize, modulus: f64 },
    #[error("pair generator {0} is zero; put origin zeros in the power p")]
    GeneratorAtOrigin(usize),
    #[error("Blaschke product needs at least one zero")]
    EmptyProduct,
    #[error("an infinite Blaschke product has no finite degree")]
    NoFiniteDegree,
    #[error("numerator and denominator lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error("radius {0} must lie in [0, 1)")]
    BadRadius(f64),
    #[error("|z| = {modulus} exceeds the declared radius {radius}")]
    OutsideRadius { modulus: f64, radius: f64 },
    #[error("tail bound {requested:e} unreachable; best achievable is {best:e}")]
    TailUnreachable { requested: f64, best: f64 },
}

/// Reduces a phase to `[0, 2pi)`.
pub fn reduce_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn arg(z: Complex64) -> f64 {
    z.im.atan2(z.re)
}

/// Sorts zeros by `(|z|, arg z)`.
pub fn sort_zeros(zeros: &mut [Complex64]) {
    zeros.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(arg(*a).total_cmp(&arg(*b)))
    });
}

/// Running product of homogeneous pairs, rescaled to stay in range.
struct Homogeneous {
    num: Complex64,
    den: Complex64,
}

impl Homogeneous {
    fn new() -> Self {
        Homogeneous { num: ONE, den: ONE }
    }

    fn mul(&mut self, num: Complex64, den: Complex64) {
        self.num *= num;
        self.den *= den;
        let s = self.num.norm().max(self.den.norm());
        if s > 0.0 && s.is_finite() {
            self.num /= s;
            self.den /= s;
        }
    }

    fn value(&self) -> ExtComplex {
        ExtComplex::from_homogeneous(self.num, self.den)
    }
}

/// `e^{i theta} (a z + b) / (-conj(b) z + conj(a))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusRotation {
    theta: f64,
    a: Complex64,
    b: Complex64,
}

impl MoebiusRotation {
    pub fn new(theta: f64, a: Complex64, b: Complex64) -> Result<Self, MapError> {
        if a.norm() + b.norm() == 0.0 {
            return Err(MapError::ZeroPair);
        }
        Ok(MoebiusRotation {
            theta: reduce_phase(theta),
            a,
            b,
        })
    }

    pub fn identity() -> Self {
        MoebiusRotation {
            theta: 0.0,
            a: ONE,
            b: ZERO,
        }
    }

    /// `z -> e^{i phi} z`.
    pub fn spin(phi: f64) -> Self {
        MoebiusRotation {
            theta: reduce_phase(phi),
            a: ONE,
            b: ZERO,
        }
    }

    /// `z -> e^{i alpha} (z - z0) / (1 + conj(z0) z)`.
    pub fn from_zero(alpha: f64, z0: Complex64) -> Self {
        MoebiusRotation {
            theta: reduce_phase(alpha),
            a: ONE,
            b: -z0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// The unit-determinant pair `(alpha, beta)` with
    /// `G(z) = (alpha z + beta) / (-conj(beta) z + conj(alpha))`.
    pub fn su2(&self) -> (Complex64, Complex64) {
        let half = Complex64::from_polar(1.0, self.theta / 2.0);
        let norm = (self.a.norm_sqr() + self.b.norm_sqr()).sqrt();
        (half * self.a / norm, half * self.b / norm)
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (alpha, beta) = self.su2();
        let (x, w) = z.homogeneous();
        ExtComplex::from_homogeneous(alpha * x + beta * w, -beta.conj() * x + alpha.conj() * w)
    }
}

/// `e^{i theta} P(z) / Q(z)` with numerator coefficients `a_0 .. a_{2n+1}`
/// (descending powers). The denominator is implied: the coefficient of `z^k`
/// in `Q` is `(-1)^k conj(a_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalForm1 {
    theta: f64,
    coeffs: Vec<Complex64>,
}

impl RationalForm1 {
    pub fn new(theta: f64, coeffs: Vec<Complex64>) -> Result<Self, MapError> {
        if coeffs.is_empty() || coeffs.len() % 2 != 0 {
            return Err(MapError::CoefficientCount(coeffs.len()));
        }
        if coeffs[0].norm() + coeffs[coeffs.len() - 1].norm() == 0.0 {
            return Err(MapError::DegenerateEnds);
        }
        Ok(RationalForm1 {
            theta: reduce_phase(theta),
            coeffs,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Denominator coefficients in descending powers.
    pub fn denominator(&self) -> Vec<Complex64> {
        form1_denominator(&self.coeffs)
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let den = self.denominator();
        let phase = Complex64::from_polar(1.0, self.theta);
        let (p, q) = match z {
            ExtComplex::Finite(x) if x.norm() <= 1.0 => (horner(&self.coeffs, x), horner(&den, x)),
            ExtComplex::Finite(x) => {
                // divide both by z^N and evaluate the reversed polynomials at 1/z
                let u = x.inv();
                (horner_rev(&self.coeffs, u), horner_rev(&den, u))
            }
            ExtComplex::Infinity => (self.coeffs[0], den[0]),
        };
        ExtComplex::from_homogeneous(phase * p, q)
    }
}

/// The conjugate-reversal denominator of a coefficient-mirrored numerator.
pub fn form1_denominator(num: &[Complex64]) -> Vec<Complex64> {
    let top = num.len() - 1;
    (0..=top)
        .map(|j| {
            let power = top - j;
            let c = num[power].conj();
            if power % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().fold(ZERO, |acc, &c| acc * z + c)
}

fn horner_rev(coeffs: &[Complex64], u: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * u + c)
}

/// `e^{i alpha} prod_k (z - z_k) / (1 + conj(z_k) z)` with an odd number of zeros,
/// kept sorted by `(|z|, arg z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalMap {
    alpha: f64,
    zeros: Vec<Complex64>,
}

impl CanonicalMap {
    pub fn new(alpha: f64, mut zeros: Vec<Complex64>) -> Result<Self, MapError> {
        if zeros.len() % 2 == 0 {
            return Err(MapError::EvenZeroCount(zeros.len()));
        }
        sort_zeros(&mut zeros);
        Ok(CanonicalMap {
            alpha: reduce_phase(alpha),
            zeros,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (x, w) = z.homogeneous();
        let mut acc = Homogeneous::new();
        acc.mul(Complex64::from_polar(1.0, self.alpha), ONE);
        for &zk in &self.zeros {
            acc.mul(x - zk * w, w + zk.conj() * x);
        }
        acc.value()
    }
}

/// `e^{i theta} z^{2p+1} prod_k (z^2 - z_k^2) / (1 - conj(z_k)^2 z^2)`, `0 < |z_k| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HInvariantBlaschke {
    theta: f64,
    p: u32,
    zeros: Vec<Complex64>,
}

impl HInvariantBlaschke {
    pub fn new(theta: f64, p: u32, zeros: Vec<Complex64>) -> Result<Self, MapError> {
        for (index, z) in zeros.iter().enumerate() {
            let modulus = z.norm();
            if modulus >= 1.0 || !modulus.is_finite() {
                return Err(MapError::ZeroOutsideDisk { index, modulus });
            }
            if modulus == 0.0 {
                return Err(MapError::GeneratorAtOrigin(index));
            }
        }
        Ok(HInvariantBlaschke {
            theta: reduce_phase(theta),
            p,
            zeros,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        2 * self.p as usize + 1 + 2 * self.zeros.len()
    }

    /// All `2p + 1 + 2m` zeros of the product, origin included.
    pub fn all_zeros(&self) -> Vec<Complex64> {
        let mut out = vec![ZERO; 2 * self.p as usize + 1];
        for &z in &self.zeros {
            out.push(z);
            out.push(-z);
        }
        out
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (x, w) = z.homogeneous();
        let mut acc = Homogeneous::new();
        acc.mul(Complex64::from_polar(1.0, self.theta), ONE);
        for _ in 0..(2 * self.p + 1) {
            acc.mul(x, w);
        }
        let (x2, w2) = (x * x, w * w);
        for &zk in &self.zeros {
            let zk2 = zk * zk;
            acc.mul(x2 - zk2 * w2, w2 - zk2.conj() * x2);
        }
        acc.value()
    }

    /// Plain complex evaluation for finite points, used by the iteration kernels.
    /// Poles yield non-finite components.
    #[inline]
    pub fn apply_finite(&self, z: Complex64) -> Complex64 {
        let z2 = z * z;
        let mut v = Complex64::from_polar(1.0, self.theta) * z;
        for _ in 0..self.p {
            v *= z2;
        }
        for &zk in &self.zeros {
            let zk2 = zk * zk;
            v *= (z2 - zk2) / (ONE - zk2.conj() * z2);
        }
        v
    }
}

/// A finite product `e^{i theta} prod (z - z_k) / (1 - conj(z_k) z)` with `|z_k| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeProduct {
    theta: f64,
    zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    pub fn new(theta: f64, zeros: Vec<Complex64>) -> Result<Self, MapError> {
        if zeros.is_empty() {
            return Err(MapError::EmptyProduct);
        }
        check_disk(&zeros)?;
        Ok(BlaschkeProduct {
            theta: reduce_phase(theta),
            zeros,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (x, w) = z.homogeneous();
        let mut acc = Homogeneous::new();
        acc.mul(Complex64::from_polar(1.0, self.theta), ONE);
        for &zk in &self.zeros {
            acc.mul(x - zk * w, w - zk.conj() * x);
        }
        acc.value()
    }
}

fn check_disk(zeros: &[Complex64]) -> Result<(), MapError> {
    for (index, z) in zeros.iter().enumerate() {
        let modulus = z.norm();
        if modulus >= 1.0 || !modulus.is_finite() {
            return Err(MapError::ZeroOutsideDisk { index, modulus });
        }
    }
    Ok(())
}

/// Rule giving the modulus `|z_k|` of the `k`-th zero (`k >= 1`).
#[derive(Clone)]
pub struct ModulusLaw {
    name: String,
    law: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
}

impl ModulusLaw {
    pub fn new(name: impl Into<String>, law: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        ModulusLaw {
            name: name.into(),
            law: Arc::new(law),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn modulus(&self, k: u64) -> f64 {
        (self.law)(k)
    }

    /// `1 - |z_k|`.
    pub fn defect(&self, k: u64) -> f64 {
        1.0 - self.modulus(k)
    }
}

impl fmt::Debug for ModulusLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModulusLaw")
            .field("name", &self.name)
            .finish()
    }
}

/// A prefix of a normalized infinite Blaschke product
/// `prod (conj(z_k)/|z_k|) (z_k - z) / (1 - conj(z_k) z)` (factor `z` when `z_k = 0`).
///
/// The accumulation set of the zeros is never materialized. When a
/// [`ModulusLaw`] is attached, the zeros beyond the prefix are those the law
/// generates from index `law_terms + 1` on.
#[derive(Clone, Debug)]
pub struct InfiniteBlaschke {
    zeros: Vec<Complex64>,
    pair_symmetric: bool,
    law: Option<ModulusLaw>,
    law_terms: u64,
}

impl InfiniteBlaschke {
    /// An explicit prefix with no rule for the remaining zeros.
    pub fn from_prefix(zeros: Vec<Complex64>, pair_symmetric: bool) -> Result<Self, MapError> {
        check_disk(&zeros)?;
        if pair_symmetric {
            pair_zeros(&zeros, 1e-12)?;
        }
        Ok(InfiniteBlaschke {
            zeros,
            pair_symmetric,
            law: None,
            law_terms: 0,
        })
    }

    /// Zeros generated by `law` for indices `1..=terms`, spread by the golden angle.
    ///
    /// A pair-symmetric sequence is `0, w_1, -w_1, w_2, -w_2, ...` where
    /// `|w_k|` follows the law.
    pub fn from_law(law: ModulusLaw, terms: u64, pair_symmetric: bool) -> Result<Self, MapError> {
        let mut zeros = Vec::new();
        if pair_symmetric {
            zeros.push(ZERO);
        }
        for k in 1..=terms {
            let w = Complex64::from_polar(law.modulus(k), GOLDEN_ANGLE * k as f64);
            zeros.push(w);
            if pair_symmetric {
                zeros.push(-w);
            }
        }
        check_disk(&zeros)?;
        Ok(InfiniteBlaschke {
            zeros,
            pair_symmetric,
            law: Some(law),
            law_terms: terms,
        })
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn pair_symmetric(&self) -> bool {
        self.pair_symmetric
    }

    pub fn law(&self) -> Option<&ModulusLaw> {
        self.law.as_ref()
    }

    /// Normalized factor as a homogeneous pair.
    fn factor(zk: Complex64, x: Complex64, w: Complex64) -> (Complex64, Complex64) {
        if zk == ZERO {
            (x, w)
        } else {
            let unit = zk.conj() / zk.norm();
            (unit * (zk * w - x), w - zk.conj() * x)
        }
    }

    /// Product of all stored factors.
    pub fn apply(&self, z: ExtComplex) -> ExtComplex {
        let (x, w) = z.homogeneous();
        let mut acc = Homogeneous::new();
        for &zk in &self.zeros {
            let (n, d) = Self::factor(zk, x, w);
            acc.mul(n, d);
        }
        acc.value()
    }

    /// Estimated `sum (1 - |z_k|)` over the zeros not stored in the prefix.
    /// `None` when the law looks divergent.
    pub fn unstored_tail(&self) -> Option<f64> {
        match &self.law {
            None => Some(0.0),
            Some(law) => {
                let mult = if self.pair_symmetric { 2.0 } else { 1.0 };
                law_tail(law, self.law_terms).map(|t| mult * t)
            }
        }
    }
}

/// Tagged union of every supported map plus the pre-conjugation flag.
#[derive(Clone, Debug)]
pub enum MapForm {
    Moebius(MoebiusRotation),
    Form1(RationalForm1),
    Canonical(CanonicalMap),
    Blaschke(HInvariantBlaschke),
    Product(BlaschkeProduct),
    Infinite(InfiniteBlaschke),
}

/// A self-map of `P^2` given through its lift `F`; with `conj` set the map is
/// `[z] -> [F(conj z)]`.
#[derive(Clone, Debug)]
pub struct DianalyticMap {
    pub form: MapForm,
    pub conj: bool,
}

impl From<MapForm> for DianalyticMap {
    fn from(form: MapForm) -> Self {
        DianalyticMap { form, conj: false }
    }
}

macro_rules! impl_from_form {
    ($($ty:ident => $variant:ident),*) => {
        $(impl From<$ty> for DianalyticMap {
            fn from(m: $ty) -> Self {
                DianalyticMap { form: MapForm::$variant(m), conj: false }
            }
        })*
    };
}

impl_from_form!(
    MoebiusRotation => Moebius,
    RationalForm1 => Form1,
    CanonicalMap => Canonical,
    HInvariantBlaschke => Blaschke,
    BlaschkeProduct => Product,
    InfiniteBlaschke => Infinite
);

impl DianalyticMap {
    pub fn with_conj(mut self, conj: bool) -> Self {
        self.conj = conj;
        self
    }

    /// Value of the lift at `z` (at `conj z` for conjugated maps).
    pub fn evaluate(&self, z: ExtComplex) -> ExtComplex {
        let z = if self.conj { z.conj() } else { z };
        match &self.form {
            MapForm::Moebius(g) => g.apply(z),
            MapForm::Form1(f) => f.apply(z),
            MapForm::Canonical(c) => c.apply(z),
            MapForm::Blaschke(b) => b.apply(z),
            MapForm::Product(b) => b.apply(z),
            MapForm::Infinite(b) => b.apply(z),
        }
    }

    pub fn degree(&self) -> Result<usize, MapError> {
        Ok(match &self.form {
            MapForm::Moebius(_) => 1,
            MapForm::Form1(f) => f.degree(),
            MapForm::Canonical(c) => c.zeros.len(),
            MapForm::Blaschke(b) => b.degree(),
            MapForm::Product(b) => b.zeros.len(),
            MapForm::Infinite(_) => return Err(MapError::NoFiniteDegree),
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.form {
            MapForm::Moebius(_) => "moebius",
            MapForm::Form1(_) => "form1",
            MapForm::Canonical(_) => "canonical",
            MapForm::Blaschke(_) => "blaschke",
            MapForm::Product(_) => "product",
            MapForm::Infinite(_) => "infinite",
        }
    }
}

/// Outcome of [`is_h_invariant`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub pass: bool,
    pub max_defect: f64,
    pub worst_point: ExtComplex,
}

/// Samples `sample_count` uniform sphere points and measures
/// `chordal(F(h(z)), h(F(z)))`. Passes iff the largest defect is below `tol`.
pub fn is_h_invariant(map: &DianalyticMap, sample_count: usize, tol: f64) -> InvarianceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(H_SAMPLE_SEED);
    let mut report = InvarianceReport {
        pass: true,
        max_defect: 0.0,
        worst_point: ExtComplex::ZERO,
    };
    for _ in 0..sample_count.max(1) {
        let z = random_sphere_point(&mut rng);
        let d = h_defect(map, z);
        if d > report.max_defect || d.is_nan() {
            report.max_defect = if d.is_nan() { f64::INFINITY } else { d };
            report.worst_point = z;
        }
    }
    report.pass = report.max_defect < tol;
    report
}

/// `chordal(F(h(z)), h(F(z)))` at one point.
pub fn h_defect(map: &DianalyticMap, z: ExtComplex) -> f64 {
    chordal_distance(map.evaluate(h_involution(z)), h_involution(map.evaluate(z)))
}

/// Checks that `den` is the conjugate reversal of `num`:
/// `d_j = (-1)^{j+1} conj(a_{N-j})` within `tol`.
pub fn validate_form1(num: &[Complex64], den: &[Complex64], tol: f64) -> Result<bool, MapError> {
    if num.len() != den.len() {
        return Err(MapError::LengthMismatch(num.len(), den.len()));
    }
    if num.is_empty() {
        return Ok(false);
    }
    let expected = form1_denominator(num);
    Ok(expected.iter().zip(den).all(|(e, d)| (e - d).norm() <= tol))
}

/// Which polynomial of a coefficient-mirrored map supplied the zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalBranch {
    /// `F = C`.
    Numerator,
    /// The leading numerator coefficient vanishes; `F = -1 / C`.
    Reciprocal,
}

/// Result of [`canonicalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Canonicalized {
    pub map: CanonicalMap,
    pub branch: CanonicalBranch,
}

impl Canonicalized {
    pub fn evaluate(&self, z: ExtComplex) -> ExtComplex {
        let v = self.map.apply(z);
        match self.branch {
            CanonicalBranch::Numerator => v,
            CanonicalBranch::Reciprocal => match v {
                ExtComplex::Infinity => ExtComplex::ZERO,
                ExtComplex::Finite(w) if w == ZERO => ExtComplex::Infinity,
                ExtComplex::Finite(w) => ExtComplex::from(-w.inv()),
            },
        }
    }
}

/// Rewrites `e^{i theta} P/Q` as `e^{i alpha} prod (z - z_k)/(1 + conj(z_k) z)` with
/// `z_k` the roots of `P` and `alpha = theta + 2 arg(a_0)`.
///
/// When `a_0` vanishes the zeros come from the denominator instead: the map
/// `-1/F` has the same mirrored shape with numerator `Q`, and is canonicalized in its place.
pub fn canonicalize(f: &RationalForm1, root_tol: f64) -> Result<Canonicalized, MapError> {
    let scale = f.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if f.coeffs[0].norm() > LEADING_TOL * scale {
        let map = canonicalize_numerator(f.theta, &f.coeffs, root_tol)?;
        return Ok(Canonicalized {
            map,
            branch: CanonicalBranch::Numerator,
        });
    }
    // -1/F = e^{-i theta} Q / (conjugate reversal of Q)
    let q = f.denominator();
    let map = canonicalize_numerator(-f.theta, &q, root_tol)?;
    Ok(Canonicalized {
        map,
        branch: CanonicalBranch::Reciprocal,
    })
}

fn canonicalize_numerator(
    theta: f64,
    coeffs: &[Complex64],
    root_tol: f64,
) -> Result<CanonicalMap, MapError> {
    let zeros = roots::aberth(coeffs, root_tol, roots::DEFAULT_MAX_SWEEPS)?;
    CanonicalMap::new(theta + 2.0 * arg(coeffs[0]), zeros)
}

/// Inverse of [`canonicalize`]: the monic numerator `prod (z - z_k)` with `theta = alpha`.
pub fn expand(c: &CanonicalMap) -> RationalForm1 {
    RationalForm1 {
        theta: c.alpha,
        coeffs: roots::poly_from_roots(&c.zeros),
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairingError {
    #[error("zero {index} has no partner -z within tolerance")]
    Unpaired { index: usize },
    #[error("{count} zeros at the origin; an odd count is required")]
    EvenOriginCount { count: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
    pub zeros_at_origin: usize,
}

/// Greedily matches every nonzero `z_k` with a partner `-z_k`; the number of
/// zeros at the origin must come out odd.
pub fn pair_zeros(zeros: &[Complex64], tol: f64) -> Result<Pairing, PairingError> {
    let mut used = vec![false; zeros.len()];
    let mut pairs = Vec::new();
    let mut origin = 0;
    for i in 0..zeros.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if zeros[i].norm() <= tol {
            origin += 1;
            continue;
        }
        let partner = (i + 1..zeros.len())
            .filter(|&j| !used[j] && zeros[j].norm() > tol)
            .map(|j| (j, (zeros[j] + zeros[i]).norm()))
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match partner {
            Some((j, _)) => {
                used[j] = true;
                pairs.push((i, j));
            }
            None => return Err(PairingError::Unpaired { index: i }),
        }
    }
    if origin % 2 == 0 {
        return Err(PairingError::EvenOriginCount { count: origin });
    }
    Ok(Pairing {
        pairs,
        zeros_at_origin: origin,
    })
}

/// Outcome of [`check_convergence`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub converges: bool,
    /// `sum (1 - |z_k|)` over the prefix or the first `horizon` law terms.
    pub partial_sum: f64,
    /// Fitted power-law exponent `s` of the terms `1 - |z_k| ~ k^{-s}`.
    pub exponent: Option<f64>,
    /// Estimated remainder after the horizon (convergent laws only).
    pub tail_estimate: Option<f64>,
}

/// Minimum excess of the fitted exponent over 1 for a law to count as summable.
pub const EXPONENT_MARGIN: f64 = 0.05;

/// Convergence test for `sum (1 - |z_k|)`.
///
/// A stored prefix is finite and always converges. A law is judged over
/// `horizon` terms: the two last dyadic blocks `(N/4, N/2]` and `(N/2, N]`
/// give a power-law exponent `s = 1 + log2(B1 / B2)`; the series is declared
/// convergent when `s > 1 + EXPONENT_MARGIN`.
pub fn check_convergence(b: &InfiniteBlaschke, horizon: u64) -> ConvergenceReport {
    match &b.law {
        Some(law) => check_law_convergence(law, horizon),
        None => ConvergenceReport {
            converges: true,
            partial_sum: b.zeros.iter().map(|z| 1.0 - z.norm()).sum(),
            exponent: None,
            tail_estimate: Some(0.0),
        },
    }
}

pub fn check_law_convergence(law: &ModulusLaw, horizon: u64) -> ConvergenceReport {
    let n = horizon.max(1);
    let partial_sum: f64 = (1..=n).map(|k| law.defect(k)).sum();
    match dyadic_fit(law, n) {
        Some((s, tail)) => ConvergenceReport {
            converges: s > 1.0 + EXPONENT_MARGIN,
            partial_sum,
            exponent: Some(s),
            tail_estimate: if s > 1.0 + EXPONENT_MARGIN {
                Some(tail)
            } else {
                None
            },
        },
        None => ConvergenceReport {
            converges: true,
            partial_sum,
            exponent: None,
            tail_estimate: Some(0.0),
        },
    }
}

/// Fits `k^{-s}` on the blocks `(hi/4, hi/2]` and `(hi/2, hi]` and returns
/// `(s, estimated sum after hi)`. `None` when the last block is identically zero.
fn dyadic_fit(law: &ModulusLaw, hi: u64) -> Option<(f64, f64)> {
    let (lo, mid) = (hi / 4, hi / 2);
    let b1: f64 = (lo + 1..=mid).map(|k| law.defect(k)).sum();
    let b2: f64 = (mid + 1..=hi).map(|k| law.defect(k)).sum();
    if b2 <= 0.0 {
        return None;
    }
    if b1 <= 0.0 || mid <= lo {
        return Some((0.0, f64::INFINITY));
    }
    let growth = (b1 / b2).log2();
    let s = 1.0 + growth;
    let tail = if growth > 0.0 {
        b2 / (2f64.powf(growth) - 1.0)
    } else {
        f64::INFINITY
    };
    Some((s, tail))
}

/// `sum_{k > from} (1 - law(k))`: summed directly up to `64 from`, then
/// extrapolated from the last two dyadic blocks.
pub fn law_tail(law: &ModulusLaw, from: u64) -> Option<f64> {
    let start = from.max(1);
    let horizon = 64 * start;
    let direct: f64 = (from + 1..=horizon).map(|k| law.defect(k)).sum();
    match dyadic_fit(law, horizon) {
        None => Some(direct),
        Some((s, tail)) if s > 1.0 + EXPONENT_MARGIN => Some(direct + tail),
        Some(_) => None,
    }
}

/// Result of [`eval_truncated`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedValue {
    pub value: Complex64,
    /// Upper bound on `|value - B(z)|`.
    pub bound: f64,
    pub factors_used: usize,
}

/// Evaluates the infinite product at `|z| <= r < 1`, multiplying factors in
/// order until `2 sum_{k > N} (1 - |z_k|) / (1 - r)` drops below `tail_bound`.
///
/// Normalized factors satisfy `|1 - b_k(z)| <= 2 (1 - |z_k|) / (1 - r)` and all
/// have modulus at most one, so the reported bound covers every omitted factor.
pub fn eval_truncated(
    b: &InfiniteBlaschke,
    z: Complex64,
    r: f64,
    tail_bound: f64,
) -> Result<TruncatedValue, MapError> {
    if !(0.0..1.0).contains(&r) {
        return Err(MapError::BadRadius(r));
    }
    if z.norm() > r {
        return Err(MapError::OutsideRadius {
            modulus: z.norm(),
            radius: r,
        });
    }
    let scale = 2.0 / (1.0 - r);
    let unstored = match b.unstored_tail() {
        Some(t) => t,
        None => {
            return Err(MapError::TailUnreachable {
                requested: tail_bound,
                best: f64::INFINITY,
            })
        }
    };
    // suffix[n] = defect sum of zeros n.. plus the unstored part
    let mut suffix = vec![unstored; b.zeros.len() + 1];
    for k in (0..b.zeros.len()).rev() {
        suffix[k] = suffix[k + 1] + (1.0 - b.zeros[k].norm());
    }
    let used = match suffix.iter().position(|s| scale * s < tail_bound) {
        Some(n) => n,
        None => {
            return Err(MapError::TailUnreachable {
                requested: tail_bound,
                best: scale * suffix[b.zeros.len()],
            })
        }
    };
    let mut acc = Homogeneous::new();
    for &zk in &b.zeros[..used] {
        let (n, d) = InfiniteBlaschke::factor(zk, z, ONE);
        acc.mul(n, d);
    }
    let value = match acc.value() {
        ExtComplex::Finite(v) => v,
        // unreachable inside the disk
        ExtComplex::Infinity => Complex64::new(f64::INFINITY, 0.0),
    };
    Ok(TruncatedValue {
        value,
        bound: scale * suffix[used],
        factors_used: used,
    })
}
