//! Iteration of h-invariant Blaschke products: attraction to 0 and infinity,
//! basin grids, and the Julia boundary that separates the two basins.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::maps::{eval_truncated, HInvariantBlaschke, InfiniteBlaschke, MapError};
use crate::sphere::{h_involution, random_sphere_point, ExtComplex, CIRCLE_TOL};

pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: u32 = 200;
pub const DYNAMICS_SEED: u64 = 0x6a_756c_6961;

/// Samples closer than this to the origin are skipped by [`schwarz_check`].
pub const SCHWARZ_HOLE: f64 = 1e-6;

/// Sampling radius of [`invariant_disk_check`].
pub const DISK_CHECK_RADIUS: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("field contains no {0:?} cells; the window misses the Julia set")]
    MissingClass(BasinClass),
    #[error("no cell touches the opposite basin")]
    NoBoundary,
    #[error("window does not cover the closed unit disk")]
    WindowMissesDisk,
    #[error(transparent)]
    Map(#[from] MapError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasinClass {
    ZeroBasin,
    InfinityBasin,
    Undecided,
}

impl BasinClass {
    /// Exchanges the two attracting basins.
    pub fn swapped(self) -> Self {
        match self {
            BasinClass::ZeroBasin => BasinClass::InfinityBasin,
            BasinClass::InfinityBasin => BasinClass::ZeroBasin,
            BasinClass::Undecided => BasinClass::Undecided,
        }
    }

    pub fn is_decided(self) -> bool {
        self != BasinClass::Undecided
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub class: BasinClass,
    /// Step at which the threshold was first crossed; `max_iter` when undecided.
    pub time: u32,
}

/// A rectangle of the z-chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
}

impl Window {
    pub fn new(center: Complex64, width: f64, height: f64) -> Self {
        Window {
            center,
            width,
            height,
        }
    }

    /// A square window.
    pub fn square(center: Complex64, width: f64) -> Self {
        Window::new(center, width, width)
    }

    /// Pixel dimensions `(dx, dy)` at the given resolution.
    pub fn pixel_size(&self, res: (usize, usize)) -> (f64, f64) {
        (self.width / res.0 as f64, self.height / res.1 as f64)
    }

    pub fn pixel_diagonal(&self, res: (usize, usize)) -> f64 {
        let (dx, dy) = self.pixel_size(res);
        dx.hypot(dy)
    }

    /// Center of pixel `(i, j)`; row 0 is at the top (largest imaginary part).
    pub fn pixel_center(&self, i: usize, j: usize, res: (usize, usize)) -> Complex64 {
        let (dx, dy) = self.pixel_size(res);
        Complex64::new(
            self.center.re - self.width / 2.0 + (i as f64 + 0.5) * dx,
            self.center.im + self.height / 2.0 - (j as f64 + 0.5) * dy,
        )
    }

    /// Continuous pixel coordinates of `z`: pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
    pub fn to_pixel(&self, z: Complex64, res: (usize, usize)) -> (f64, f64) {
        let (dx, dy) = self.pixel_size(res);
        (
            (z.re - (self.center.re - self.width / 2.0)) / dx,
            ((self.center.im + self.height / 2.0) - z.im) / dy,
        )
    }

    /// The pixel containing `z`, if inside the window.
    pub fn pixel_of(&self, z: Complex64, res: (usize, usize)) -> Option<(usize, usize)> {
        let (x, y) = self.to_pixel(z, res);
        let inside = x >= 0.0 && y >= 0.0 && x < res.0 as f64 && y < res.1 as f64;
        inside.then_some((x as usize, y as usize))
    }

    pub fn covers_unit_disk(&self) -> bool {
        let (c, hw, hh) = (self.center, self.width / 2.0, self.height / 2.0);
        c.re - hw <= -1.0 && c.re + hw >= 1.0 && c.im - hh <= -1.0 && c.im + hh >= 1.0
    }
}

/// Classification of every pixel center of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasinField {
    window: WindowKey,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    /// Row-major, top row first.
    pub cells: Vec<Cell>,
}

/// `Window` stored bitwise so that fields compare with `Eq`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct WindowKey([u64; 4]);

impl From<Window> for WindowKey {
    fn from(w: Window) -> Self {
        WindowKey([
            w.center.re.to_bits(),
            w.center.im.to_bits(),
            w.width.to_bits(),
            w.height.to_bits(),
        ])
    }
}

impl BasinField {
    pub fn window(&self) -> Window {
        let [re, im, w, h] = self.window.0.map(f64::from_bits);
        Window::new(Complex64::new(re, im), w, h)
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.width + i]
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        self.window().pixel_center(i, j, self.resolution())
    }

    pub fn count(&self, class: BasinClass) -> usize {
        self.cells.iter().filter(|c| c.class == class).count()
    }
}

/// Iterates `F` from `z` until `|z_n| < eps`, `|z_n| > 1/eps`, or `max_iter`
/// steps. Thresholds are tested before each step, so `time` may be 0.
/// Iterates within `CIRCLE_TOL` of the unit circle are renormalized onto it.
pub fn classify_point(map: &HInvariantBlaschke, z: ExtComplex, max_iter: u32, eps: f64) -> Cell {
    let mut z = match z {
        ExtComplex::Infinity => {
            return Cell {
                class: BasinClass::InfinityBasin,
                time: 0,
            }
        }
        ExtComplex::Finite(z) => z,
    };
    let (lo, hi) = (eps * eps, 1.0 / (eps * eps));
    for t in 0..=max_iter {
        let r2 = z.norm_sqr();
        if r2 < lo {
            return Cell {
                class: BasinClass::ZeroBasin,
                time: t,
            };
        }
        // a NaN here comes from a pole: the orbit reached infinity
        if !(r2 <= hi) {
            return Cell {
                class: BasinClass::InfinityBasin,
                time: t,
            };
        }
        if t == max_iter {
            break;
        }
        z = map.apply_finite(z);
        // the unit circle is invariant, but rounding off it grows by deg per step
        if (z.norm_sqr() - 1.0).abs() < CIRCLE_TOL {
            z /= z.norm();
        }
    }
    Cell {
        class: BasinClass::Undecided,
        time: max_iter,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzReport {
    pub pass: bool,
    /// Smallest `|z| - |F(z)|` seen.
    pub min_gap: f64,
    pub worst_point: Complex64,
    pub samples: usize,
}

/// Checks `|F(z)| < |z|` at uniform random points of the punctured disk.
pub fn schwarz_check(map: &HInvariantBlaschke, samples: usize) -> SchwarzReport {
    schwarz_check_with_rng(map, samples, &mut ChaCha8Rng::seed_from_u64(DYNAMICS_SEED))
}

pub fn schwarz_check_with_rng<R: Rng + ?Sized>(
    map: &HInvariantBlaschke,
    samples: usize,
    rng: &mut R,
) -> SchwarzReport {
    let mut report = SchwarzReport {
        pass: true,
        min_gap: f64::INFINITY,
        worst_point: Complex64::new(0.0, 0.0),
        samples,
    };
    for _ in 0..samples {
        let z = loop {
            let z = Complex64::from_polar(
                rng.gen::<f64>().sqrt(),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            if z.norm() >= SCHWARZ_HOLE {
                break z;
            }
        };
        let gap = z.norm() - map.apply_finite(z).norm();
        if gap < report.min_gap {
            report.min_gap = gap;
            report.worst_point = z;
        }
        if !(gap > 0.0) {
            report.pass = false;
        }
    }
    report
}

/// Classifies every pixel center. Rows are computed in parallel; each cell
/// depends only on its own coordinates, so the grid is independent of scheduling.
pub fn basin_field(
    map: &HInvariantBlaschke,
    window: Window,
    res: (usize, usize),
    max_iter: u32,
    eps: f64,
) -> BasinField {
    let (w, h) = res;
    let mut cells = vec![
        Cell {
            class: BasinClass::Undecided,
            time: 0
        };
        w * h
    ];
    cells
        .par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(j, row)| {
            for (i, cell) in row.iter_mut().enumerate() {
                let z = window.pixel_center(i, j, res);
                *cell = classify_point(map, ExtComplex::Finite(z), max_iter, eps);
            }
        });
    BasinField {
        window: window.into(),
        width: w,
        height: h,
        max_iter,
        cells,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JuliaStats {
    pub mean_radius: f64,
    /// Largest `||z| - 1|` over boundary pixel centers.
    pub max_abs_dev: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JuliaEstimate {
    pub boundary_pixels: Vec<(usize, usize)>,
    pub stats: JuliaStats,
}

/// Decided cells with a 4-neighbour in the opposite decided class.
pub fn julia_boundary(field: &BasinField) -> Result<JuliaEstimate, DynamicsError> {
    for class in [BasinClass::ZeroBasin, BasinClass::InfinityBasin] {
        if field.count(class) == 0 {
            return Err(DynamicsError::MissingClass(class));
        }
    }
    let (w, h) = field.resolution();
    let mut boundary = Vec::new();
    for j in 0..h {
        for i in 0..w {
            let class = field.cell(i, j).class;
            if !class.is_decided() {
                continue;
            }
            let opposite = class.swapped();
            let touches = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)]
                .iter()
                .any(|&(di, dj)| {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    ni >= 0
                        && nj >= 0
                        && (ni as usize) < w
                        && (nj as usize) < h
                        && field.cell(ni as usize, nj as usize).class == opposite
                });
            if touches {
                boundary.push((i, j));
            }
        }
    }
    if boundary.is_empty() {
        return Err(DynamicsError::NoBoundary);
    }
    let radii: Vec<f64> = boundary
        .iter()
        .map(|&(i, j)| field.pixel_center(i, j).norm())
        .collect();
    let mean_radius = radii.iter().sum::<f64>() / radii.len() as f64;
    let max_abs_dev = radii.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    Ok(JuliaEstimate {
        boundary_pixels: boundary,
        stats: JuliaStats {
            mean_radius,
            max_abs_dev,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    pub pass: bool,
    pub samples: usize,
    /// Samples where both `z` and `h(z)` were decided.
    pub decided_pairs: usize,
    pub mismatches: usize,
}

/// Compares `class(h(z))` with the swapped `class(z)` at random sphere points.
pub fn basin_antipodal_symmetry(
    map: &HInvariantBlaschke,
    samples: usize,
    max_iter: u32,
    eps: f64,
) -> SymmetryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(DYNAMICS_SEED);
    let mut report = SymmetryReport {
        pass: true,
        samples,
        decided_pairs: 0,
        mismatches: 0,
    };
    for _ in 0..samples {
        let z = random_sphere_point(&mut rng);
        let a = classify_point(map, z, max_iter, eps).class;
        let b = classify_point(map, h_involution(z), max_iter, eps).class;
        if a.is_decided() && b.is_decided() {
            report.decided_pairs += 1;
            if b != a.swapped() {
                report.mismatches += 1;
                report.pass = false;
            }
        }
    }
    report
}

/// The part of a basin field inside the closed unit disk, a fundamental
/// domain of `P^2`, with the antipodal gluing of its rim.
#[derive(Clone, Debug, PartialEq)]
pub struct P2Field {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    /// `None` outside the disk.
    pub cells: Vec<Option<Cell>>,
    /// Rim pixel pairs `(p, q)` with `q` containing `-z` for the center `z` of `p`.
    pub identified: Vec<((usize, usize), (usize, usize))>,
}

impl P2Field {
    pub fn cell(&self, i: usize, j: usize) -> Option<Cell> {
        self.cells[j * self.width + i]
    }

    pub fn kept(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Keeps pixels whose centers satisfy `|z| <= 1`; pixels within half a
/// diagonal of the circle are paired with the pixel holding their antipode.
pub fn project_field_p2(field: &BasinField) -> Result<P2Field, DynamicsError> {
    let window = field.window();
    if !window.covers_unit_disk() {
        return Err(DynamicsError::WindowMissesDisk);
    }
    let res = field.resolution();
    let rim = window.pixel_diagonal(res) / 2.0;
    let mut cells = vec![None; field.cells.len()];
    let mut identified = Vec::new();
    for j in 0..field.height {
        for i in 0..field.width {
            let z = field.pixel_center(i, j);
            if z.norm() > 1.0 {
                continue;
            }
            cells[j * field.width + i] = Some(field.cell(i, j));
            if 1.0 - z.norm() <= rim {
                if let Some(q) = window.pixel_of(-z, res) {
                    identified.push(((i, j), q));
                }
            }
        }
    }
    Ok(P2Field {
        window,
        width: field.width,
        height: field.height,
        cells,
        identified,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskReport {
    pub pass: bool,
    pub samples: usize,
    /// Largest `|value| + bound` seen; below 1 certifies `|B(z)| < 1`.
    pub max_upper: f64,
}

/// Checks `|B(z)| < 1` at random `|z| <= 0.9`, using the truncation bound.
pub fn invariant_disk_check(
    b: &InfiniteBlaschke,
    samples: usize,
    tail_bound: f64,
) -> Result<DiskReport, DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(DYNAMICS_SEED);
    let mut report = DiskReport {
        pass: true,
        samples,
        max_upper: 0.0,
    };
    for _ in 0..samples {
        let z = Complex64::from_polar(
            DISK_CHECK_RADIUS * rng.gen::<f64>().sqrt(),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let t = eval_truncated(b, z, DISK_CHECK_RADIUS, tail_bound)?;
        let upper = t.value.norm() + t.bound;
        report.max_upper = report.max_upper.max(upper);
        if !(upper < 1.0) {
            report.pass = false;
        }
    }
    Ok(report)
}
