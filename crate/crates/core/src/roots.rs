//! Simultaneous polynomial root finding (Aberth-Ehrlich iteration).

use num_complex::Complex64;
use thiserror::Error;

pub const DEFAULT_ROOT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error(
        "root finder did not converge after {sweeps} sweeps (max relative residual {residual:e})"
    )]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// Horner evaluation of `p` and `p'`; coefficients in descending powers.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = coeffs[0];
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in &coeffs[1..] {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// `sum |a_k| |z|^k`, the scale of the rounding error in a Horner evaluation.
fn abs_scale(coeffs: &[Complex64], r: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * r + c.norm())
}

/// All roots of the polynomial with descending coefficients `coeffs`,
/// repeated according to multiplicity.
///
/// Initial guesses sit on a rotated, slightly perturbed circle of the Fujiwara
/// radius `2 max |a_k / a_0|^{1/k}`. A root is frozen once its correction drops below
/// `tol * (1 + |z|)` or its residual reaches rounding level.
pub fn aberth(
    coeffs: &[Complex64],
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<Complex64>, RootError> {
    let lead = *coeffs.first().ok_or(RootError::ZeroLeading)?;
    if lead.norm() == 0.0 {
        return Err(RootError::ZeroLeading);
    }
    let degree = coeffs.len() - 1;
    match degree {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![-coeffs[1] / lead]),
        _ => {}
    }

    let radius = 2.0
        * coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| (c / lead).norm().powf(1.0 / (k + 1) as f64))
            .fold(0.0, f64::max);
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / degree as f64 + 0.4;
            // slight radial jitter keeps symmetric polynomials off symmetric orbits
            Complex64::from_polar(radius * (1.0 + 0.01 * k as f64 / degree as f64), t)
        })
        .collect();
    let mut done = vec![false; degree];
    let rounding = 8.0 * degree as f64 * f64::EPSILON;

    for _ in 0..max_sweeps {
        for i in 0..degree {
            if done[i] {
                continue;
            }
            let z = roots[i];
            let (p, dp) = eval_with_derivative(coeffs, z);
            if p.norm() <= rounding * abs_scale(coeffs, z.norm()) {
                done[i] = true;
                continue;
            }
            let repulsion: Complex64 = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &w)| (z - w).inv())
                .sum();
            let denom = dp - p * repulsion;
            let step = if denom.norm() == 0.0 || !denom.is_finite() {
                Complex64::from_polar(tol.max(1e-8) * (1.0 + z.norm()), i as f64)
            } else {
                p / denom
            };
            roots[i] = z - step;
            if step.norm() <= tol * (1.0 + roots[i].norm()) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return Ok(roots);
        }
    }

    let residual = roots
        .iter()
        .map(|&z| eval_with_derivative(coeffs, z).0.norm() / abs_scale(coeffs, z.norm()))
        .fold(0.0, f64::max);
    Err(RootError::NoConvergence {
        sweeps: max_sweeps,
        residual,
    })
}

/// Descending coefficients of the monic polynomial `prod (z - r_k)`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        coeffs.push(Complex64::new(0.0, 0.0));
        for k in (1..coeffs.len()).rev() {
            let prev = coeffs[k - 1];
            coeffs[k] -= r * prev;
        }
    }
    coeffs
}
