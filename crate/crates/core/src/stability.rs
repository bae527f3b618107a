//! Characteristic polynomial, eigenvalues and Routh–Hurwitz classification.
//!
//! For a 3x3 Jacobian `J` the characteristic polynomial is
//! `λ³ + D1 λ² + D2 λ + D3` with `D1 = -tr J`, `D2` the sum of principal
//! 2x2 minors and `D3 = -det J`.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibria::Equilibrium;
use crate::model::{jacobian, EffectiveParameters, Matrix3};

/// Eigenvalues with `|Re λ|` below this count as lying on the imaginary axis.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Largest equilibrium residual accepted by [`classify_equilibrium`].
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("state is not an equilibrium (residual {0:e})")]
    NotAnEquilibrium(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl CharPoly {
    pub fn eval(&self, l: Complex64) -> Complex64 {
        ((l + self.d1) * l + self.d2) * l + self.d3
    }

    fn deriv(&self, l: Complex64) -> Complex64 {
        (l * 3.0 + 2.0 * self.d1) * l + self.d2
    }

    /// `D1 D2 - D3`; its sign change marks a Hopf crossing.
    pub fn margin(&self) -> f64 {
        self.d1 * self.d2 - self.d3
    }

    /// Scale used for relative polynomial residuals.
    pub fn scale(&self) -> f64 {
        1.0_f64.max(self.d1.abs()).max(self.d2.abs()).max(self.d3.abs())
    }
}

pub fn characteristic_coefficients(j: &Matrix3) -> CharPoly {
    let m = &j.0;
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    CharPoly { d1: -j.trace(), d2: minors, d3: -j.det() }
}

pub fn routh_hurwitz(d1: f64, d2: f64, d3: f64) -> bool {
    d1 > 0.0 && d3 > 0.0 && d1 * d2 > d3
}

/// Roots of the monic cubic, ordered by real part then imaginary part,
/// both descending. Complex roots come out as exact conjugate pairs.
pub fn cubic_roots(c: &CharPoly) -> [Complex64; 3] {
    let (b, cc, d) = (c.d1, c.d2, c.d3);
    // Depressed cubic t³ + p t + q with λ = t - b/3.
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut roots = if disc > 0.0 {
        // One real root, one conjugate pair.
        let s = disc.sqrt();
        let u = -(q.signum()) * (q.abs() / 2.0 + s).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let re = -(u + v) / 2.0 - shift;
        let im = 3.0_f64.sqrt() / 2.0 * (u - v).abs();
        let real = polish_real(c, u + v - shift);
        let pair = polish_pair(c, Complex64::new(re, im), real);
        [Complex64::new(real, 0.0), pair, pair.conj()]
    } else if p == 0.0 {
        let r = -shift;
        [Complex64::new(r, 0.0); 3]
    } else {
        // Three real roots (trigonometric form).
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let t = r * (phi - tau * k as f64).cos();
            *slot = Complex64::new(polish_real(c, t - shift), 0.0);
        }
        out
    };
    roots.sort_by(order_desc);
    roots
}

fn order_desc(a: &Complex64, b: &Complex64) -> Ordering {
    b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal).then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

fn polish_real(c: &CharPoly, mut x: f64) -> f64 {
    let f = |x: f64| ((x + c.d1) * x + c.d2) * x + c.d3;
    let df = |x: f64| (3.0 * x + 2.0 * c.d1) * x + c.d2;
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        let next = x - f(x) / d;
        if !next.is_finite() || f(next).abs() >= f(x).abs() {
            break;
        }
        x = next;
    }
    x
}

fn polish_pair(c: &CharPoly, guess: Complex64, real_root: f64) -> Complex64 {
    // Deflating by the real root gives the quadratic directly:
    // λ² + (D1 + r) λ + (D2 + r (D1 + r)).
    let b = c.d1 + real_root;
    let k = c.d2 + real_root * b;
    let disc = b * b / 4.0 - k;
    let mut z = if disc < 0.0 { Complex64::new(-b / 2.0, (-disc).sqrt()) } else { guess };
    if c.eval(guess).norm() < c.eval(z).norm() {
        z = guess;
    }
    for _ in 0..4 {
        let d = c.deriv(z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - c.eval(z) / d;
        if !(next.re.is_finite() && next.im.is_finite()) || c.eval(next).norm() >= c.eval(z).norm() {
            break;
        }
        z = next;
    }
    Complex64::new(z.re, z.im.abs())
}

pub fn eigenvalues_3x3(j: &Matrix3) -> [Complex64; 3] {
    cubic_roots(&characteristic_coefficients(j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub eigenvalues: [Complex64; 3],
    pub routh_hurwitz: bool,
    pub classification: Classification,
    /// `D1 D2 - D3`.
    pub margin: f64,
    /// Whether the Routh–Hurwitz verdict matches the eigenvalue signs.
    /// Only meaningful away from the imaginary axis.
    pub spectrum_agrees: bool,
}

pub fn stability_of_matrix(j: &Matrix3) -> StabilityReport {
    let poly = characteristic_coefficients(j);
    let eigenvalues = cubic_roots(&poly);
    let rh = routh_hurwitz(poly.d1, poly.d2, poly.d3);
    let max_re = eigenvalues[0].re;
    let near_axis = eigenvalues.iter().any(|l| l.re.abs() < MARGINAL_TOL);
    let classification = if rh {
        Classification::Stable
    } else if near_axis && eigenvalues.iter().all(|l| l.re < MARGINAL_TOL) {
        Classification::Marginal
    } else {
        Classification::Unstable
    };
    StabilityReport {
        d1: poly.d1,
        d2: poly.d2,
        d3: poly.d3,
        eigenvalues,
        routh_hurwitz: rh,
        classification,
        margin: poly.margin(),
        spectrum_agrees: near_axis || rh == (max_re < 0.0),
    }
}

pub fn classify_equilibrium(p: &EffectiveParameters, e: &Equilibrium) -> Result<StabilityReport, StabilityError> {
    if !(e.residual < EQUILIBRIUM_TOL) {
        return Err(StabilityError::NotAnEquilibrium(e.residual));
    }
    Ok(stability_of_matrix(&jacobian(p, &e.state)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{axial_equilibrium, interior_equilibrium, null_equilibrium};
    use crate::model::State;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn diagonal_coefficients_and_spectrum() {
        let j = Matrix3::diag([-1.0, -2.0, -3.0]);
        let c = characteristic_coefficients(&j);
        assert_eq!((c.d1, c.d2, c.d3), (6.0, 11.0, 6.0));
        let ev = eigenvalues_3x3(&j);
        assert!(close(ev[0], -1.0, 0.0) && close(ev[1], -2.0, 0.0) && close(ev[2], -3.0, 0.0), "{ev:?}");
        let z = characteristic_coefficients(&Matrix3::ZERO);
        assert_eq!((z.d1, z.d2, z.d3), (0.0, 0.0, 0.0));
        assert!(eigenvalues_3x3(&Matrix3::ZERO).iter().all(|l| l.norm() == 0.0));
    }

    #[test]
    fn rotation_generator() {
        let j = Matrix3([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]);
        let ev = eigenvalues_3x3(&j);
        assert!(close(ev[0], 0.0, 1.0) && close(ev[1], 0.0, -1.0) && close(ev[2], -1.0, 0.0), "{ev:?}");
        assert_eq!(stability_of_matrix(&j).classification, Classification::Marginal);
    }

    #[test]
    fn routh_hurwitz_examples() {
        assert!(routh_hurwitz(6.0, 11.0, 6.0));
        assert!(!routh_hurwitz(1.0, 1.0, 2.0));
        assert!(!routh_hurwitz(-1.0, 1.0, 1.0));
    }

    #[test]
    fn repeated_roots() {
        // (λ + 2)³
        let c = CharPoly { d1: 6.0, d2: 12.0, d3: 8.0 };
        for r in cubic_roots(&c) {
            assert!(c.eval(r).norm() < 1e-8 * c.scale(), "{r}");
        }
        // λ (λ + 1)²
        let c = CharPoly { d1: 2.0, d2: 1.0, d3: 0.0 };
        for r in cubic_roots(&c) {
            assert!(c.eval(r).norm() < 1e-8 * c.scale(), "{r}");
        }
    }

    #[test]
    fn baseline_interior_is_stable() {
        let p = EffectiveParameters::baseline();
        let e = interior_equilibrium(&p).unwrap();
        let r = classify_equilibrium(&p, &e).unwrap();
        assert_eq!(r.classification, Classification::Stable);
        assert!(r.spectrum_agrees);
        // Frozen from an independent expansion of the Jacobian's polynomial.
        assert!((r.d1 - 0.06118742).abs() < 1e-7);
        assert!((r.d2 - 0.04163282).abs() < 1e-7);
        assert!((r.d3 - 0.00014001).abs() < 1e-8);
        assert!((r.eigenvalues[0].re - (-0.00337883)).abs() < 1e-7);
    }

    #[test]
    fn trivial_equilibria_are_unstable() {
        let p = EffectiveParameters::baseline();
        let r = classify_equilibrium(&p, &null_equilibrium(&p)).unwrap();
        assert_eq!(r.classification, Classification::Unstable);
        let axial = axial_equilibrium(&p);
        assert!(p.a * p.g_s * p.k_p / (p.k_p + p.k_z) > p.m2);
        let r = classify_equilibrium(&p, &axial).unwrap();
        assert_eq!(r.classification, Classification::Unstable);
    }

    #[test]
    fn rejects_non_equilibria() {
        let p = EffectiveParameters::baseline();
        let mut e = null_equilibrium(&p);
        e.state = State::new(1.0, 1.0, 1.0);
        e.residual = crate::model::residual(&p, &e.state);
        assert!(matches!(classify_equilibrium(&p, &e), Err(StabilityError::NotAnEquilibrium(_))));
    }
}
