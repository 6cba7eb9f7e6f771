//! Independent reference values for the polygon pipelines.
//!
//! Complete integrals come from the arithmetic-geometric mean, incomplete
//! ones from Carlson's symmetric form R_F, and general weighted integrals
//! from tanh-sinh quadrature with an a-posteriori error estimate. None of
//! this code touches vertices or curves, so agreement with the pipelines is
//! a genuine cross-check.

use rug::float::Constant;
use rug::Float;

use crate::error::{Error, Result};
use crate::precision::{pow10, Precision};

fn guarded(digits: u32) -> Precision {
    Precision::from_digits(digits + 20)
}

/// Arithmetic-geometric mean of two positive reals.
pub fn agm(a: &Float, b: &Float) -> Float {
    let bits = a.prec().max(b.prec());
    let mut a = Float::with_val(bits, a);
    let mut b = Float::with_val(bits, b);
    let tol = pow10(bits, -((f64::from(bits) * std::f64::consts::LOG10_2) as i32) + 2);
    for _ in 0..200 {
        let next_a = Float::with_val(bits, &a + &b) / 2u32;
        let next_b = Float::with_val(bits, &a * &b).sqrt();
        a = next_a;
        b = next_b;
        if Float::with_val(bits, &a - &b).abs() <= Float::with_val(bits, &a * &tol) {
            break;
        }
    }
    a
}

/// K(k) = F(π/2, k) = π / (2·AGM(1, √(1 − k²))) for 0 ≤ k² < 1.
pub fn complete_f(k2: &Float, digits: u32) -> Result<Float> {
    if *k2 < 0 || *k2 >= 1 {
        return Err(Error::domain("k2 must lie in [0, 1)"));
    }
    let b = guarded(digits).bits();
    let kp = Float::with_val(b, 1u32 - Float::with_val(b, k2)).sqrt();
    let m = agm(&Float::with_val(b, 1u32), &kp);
    Ok(Float::with_val(b, Constant::Pi) / (m * 2u32))
}

/// Carlson's symmetric integral R_F(x, y, z) by duplication.
pub fn carlson_rf(x: &Float, y: &Float, z: &Float) -> Float {
    let bits = x.prec().max(y.prec()).max(z.prec());
    let (mut x, mut y, mut z) = (
        Float::with_val(bits, x),
        Float::with_val(bits, y),
        Float::with_val(bits, z),
    );
    // The fifth-order series leaves an error of order (deviation)^6.
    let tol = pow10(bits, -((f64::from(bits) * std::f64::consts::LOG10_2 / 6.0) as i32) - 1);
    loop {
        let mean = Float::with_val(bits, &x + &y) + &z;
        let mean = mean / 3u32;
        let dev = [&x, &y, &z]
            .iter()
            .map(|v| Float::with_val(bits, *v - &mean).abs())
            .fold(Float::new(bits), |m, d| m.max(&d));
        if dev <= Float::with_val(bits, &mean * &tol) {
            let dx = Float::with_val(bits, &mean - &x) / &mean;
            let dy = Float::with_val(bits, &mean - &y) / &mean;
            let dz = Float::with_val(bits, -Float::with_val(bits, &dx + &dy));
            let e2 = Float::with_val(bits, &dx * &dy) - Float::with_val(bits, dz.square_ref());
            let e3 = Float::with_val(bits, &dx * &dy) * &dz;
            let mut series = Float::with_val(bits, 1u32);
            series -= Float::with_val(bits, &e2 / 10u32);
            series += Float::with_val(bits, &e3 / 14u32);
            series += Float::with_val(bits, e2.square_ref()) / 24u32;
            series -= Float::with_val(bits, &e2 * &e3) * 3u32 / 44u32;
            return series / mean.sqrt();
        }
        let (sx, sy, sz) = (
            Float::with_val(bits, x.sqrt_ref()),
            Float::with_val(bits, y.sqrt_ref()),
            Float::with_val(bits, z.sqrt_ref()),
        );
        let lambda =
            Float::with_val(bits, &sx * &sy) + Float::with_val(bits, &sy * &sz) + Float::with_val(bits, &sz * &sx);
        x = (x + &lambda) / 4u32;
        y = (y + &lambda) / 4u32;
        z = (z + &lambda) / 4u32;
    }
}

/// Incomplete integral F(ψ, k) = sin ψ · R_F(cos²ψ, 1 − k²sin²ψ, 1) for
/// 0 ≤ ψ ≤ π/2.
pub fn incomplete_f(psi: &Float, k2: &Float, digits: u32) -> Result<Float> {
    let b = guarded(digits).bits();
    let half_pi = Float::with_val(b, Constant::Pi) / 2u32;
    if *psi < 0 || *psi > half_pi {
        return Err(Error::domain("psi must lie in [0, pi/2]"));
    }
    if *k2 < 0 || *k2 >= 1 {
        return Err(Error::domain("k2 must lie in [0, 1)"));
    }
    let (sin, cos) = Float::with_val(b, psi).sin_cos(Float::new(b));
    let s2 = Float::with_val(b, sin.square_ref());
    let y = Float::with_val(b, 1u32 - Float::with_val(b, k2 * &s2));
    Ok(carlson_rf(&cos.square(), &y, &Float::with_val(b, 1u32)) * sin)
}

/// Result of a quadrature with its a-posteriori error estimate.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: Float,
    pub error_estimate: Float,
    pub evaluations: usize,
}

/// Tanh-sinh quadrature of `f` over [a, b], halving the step until two
/// successive levels agree to `tol` (relative).
pub fn tanh_sinh<F>(f: F, a: &Float, b: &Float, tol: &Float, bits: u32) -> Result<Quadrature>
where
    F: Fn(&Float) -> Float,
{
    let half = Float::with_val(bits, b - a) / 2u32;
    let mid = Float::with_val(bits, a + b) / 2u32;
    let half_pi = Float::with_val(bits, Constant::Pi) / 2u32;
    let tiny = pow10(bits, -((f64::from(bits) * std::f64::consts::LOG10_2) as i32) - 5);
    let mut evaluations = 0usize;
    let mut previous: Option<Float> = None;

    for level in 1..=14u32 {
        let h = Float::with_val(bits, 1u32) >> level;
        let mut sum = Float::with_val(bits, f(&mid)) * &half_pi;
        evaluations += 1;
        let mut k = 1u32;
        loop {
            let t = Float::with_val(bits, &h * k);
            let (sinh, cosh) = t.sinh_cosh(Float::new(bits));
            let u = Float::with_val(bits, &half_pi * &sinh);
            let (su, cu) = u.sinh_cosh(Float::new(bits));
            let x = Float::with_val(bits, &su / &cu);
            let weight = Float::with_val(bits, &half_pi * &cosh) / cu.square();
            if weight < tiny || x >= 1u32 {
                break;
            }
            let dx = Float::with_val(bits, &half * &x);
            let left = Float::with_val(bits, &mid - &dx);
            let right = Float::with_val(bits, &mid + &dx);
            sum += Float::with_val(bits, f(&left) + f(&right)) * &weight;
            evaluations += 2;
            k += 1;
        }
        let value = sum * &h * &half;
        if let Some(prev) = previous {
            let err = Float::with_val(bits, &value - &prev).abs();
            let scale = Float::with_val(bits, value.abs_ref()).max(&Float::with_val(bits, 1e-300));
            if err <= Float::with_val(bits, &scale * tol) && level >= 4 {
                return Ok(Quadrature {
                    value,
                    error_estimate: err,
                    evaluations,
                });
            }
        }
        previous = Some(value);
    }
    Err(Error::precision(
        "tanh-sinh quadrature did not converge within 14 levels",
    ))
}

/// Φ(φ, I) = ∫₀^φ dt / √(I − cos t) by tanh-sinh quadrature. The interval
/// is split into pieces no wider than the distance to the complex poles.
pub fn phi_integral_quadrature(phi: &Float, invariant: &Float, digits: u32) -> Result<Quadrature> {
    let p = guarded(digits);
    let b = p.bits();
    if *invariant <= 1 {
        return Err(Error::domain("pencil invariant must exceed 1"));
    }
    let two_pi = p.pi() * 2u32;
    if *phi < 0 || *phi > two_pi {
        return Err(Error::domain("phi must lie in [0, 2 pi]"));
    }
    if phi.is_zero() {
        return Ok(Quadrature {
            value: p.zero(),
            error_estimate: p.zero(),
            evaluations: 0,
        });
    }
    let i = Float::with_val(b, invariant);
    let pole = Float::with_val(b, i.acosh_ref()).to_f64().max(0.05);
    let pieces = (phi.to_f64() / pole).ceil().max(1.0) as u32;
    let tol = pow10(b, -(digits as i32) - 5);
    let f = |t: &Float| {
        let d = Float::with_val(b, &i - Float::with_val(b, t.cos_ref()));
        d.sqrt().recip()
    };
    let mut total = p.zero();
    let mut err = p.zero();
    let mut evals = 0;
    for n in 0..pieces {
        let lo = Float::with_val(b, phi * n) / pieces;
        let hi = Float::with_val(b, phi * (n + 1)) / pieces;
        let q = tanh_sinh(f, &lo, &hi, &tol, b)?;
        total += q.value;
        err += q.error_estimate;
        evals += q.evaluations;
    }
    Ok(Quadrature {
        value: total,
        error_estimate: err,
        evaluations: evals,
    })
}

/// Φ(φ, I) in closed form: with k² = 2/(I + 1),
/// Φ(φ, I) = k√2 (K(k) − F((π − φ)/2, k)) for 0 ≤ φ ≤ π, extended by
/// Φ(φ) = 2Φ(π) − Φ(2π − φ) on (π, 2π].
pub fn phi_integral(phi: &Float, invariant: &Float, digits: u32) -> Result<Float> {
    let p = guarded(digits);
    let b = p.bits();
    if *invariant <= 1 {
        return Err(Error::domain("pencil invariant must exceed 1"));
    }
    let pi = p.pi();
    let two_pi = Float::with_val(b, &pi * 2u32);
    if *phi < 0 || *phi > two_pi {
        return Err(Error::domain("phi must lie in [0, 2 pi]"));
    }
    if phi.is_zero() {
        return Ok(p.zero());
    }
    if *phi > pi {
        let full = phi_integral(&pi, invariant, digits)?;
        let rest = phi_integral(&Float::with_val(b, &two_pi - phi), invariant, digits)?;
        return Ok(full * 2u32 - rest);
    }
    let k2 = Float::with_val(b, 2u32) / Float::with_val(b, invariant + 1u32);
    let scale = Float::with_val(b, &k2 * 2u32).sqrt();
    let big_k = complete_f(&k2, digits)?;
    let psi = Float::with_val(b, &pi - phi) / 2u32;
    let small = incomplete_f(&psi, &k2, digits)?;
    Ok(scale * (big_k - small))
}

/// θ(φ, I) = Φ(φ, I) / (2Φ(π, I)).
pub fn theta_of(phi: &Float, invariant: &Float, digits: u32) -> Result<Float> {
    let p = guarded(digits);
    let num = phi_integral(phi, invariant, digits)?;
    let den = phi_integral(&p.pi(), invariant, digits)?;
    Ok(num / (den * 2u32))
}

/// Rotation number θ of the circle pair (c, r): Φ(φ₁, I)/(2Φ(π, I)) with
/// cos φ₁ = 2r²/(1 − c)² − 1.
pub fn theta_circle(c: &Float, r: &Float, digits: u32) -> Result<Float> {
    let p = guarded(digits);
    let b = p.bits();
    let c = Float::with_val(b, c);
    let r = Float::with_val(b, r);
    if c <= 0 || r <= 0 || Float::with_val(b, &c + &r) >= 1 {
        return Err(Error::domain("circles are not strictly nested"));
    }
    let r2 = Float::with_val(b, r.square_ref());
    let invariant = (Float::with_val(b, c.square_ref()) + 1u32 - &r2) / Float::with_val(b, &c * 2u32);
    let one_minus_c = Float::with_val(b, 1u32 - &c);
    let cos = Float::with_val(b, &r2 * 2u32) / one_minus_c.square() - 1u32;
    let phi1 = cos.acos();
    theta_of(&phi1, &invariant, digits)
}

/// Uniformising measure of the pencil with invariant I.
#[derive(Debug, Clone)]
pub struct ThetaMeasure {
    pub invariant: Float,
    /// Φ(π, I).
    pub normalization: Float,
    pub phi: Float,
}

impl ThetaMeasure {
    pub fn new(invariant: &Float, phi: &Float, digits: u32) -> Result<Self> {
        let p = guarded(digits);
        Ok(ThetaMeasure {
            invariant: Float::with_val(p.bits(), invariant),
            normalization: phi_integral(&p.pi(), invariant, digits)?,
            phi: Float::with_val(p.bits(), phi),
        })
    }

    /// h(x) = π / (Φ(π, I) √(I − cos 2πx)).
    pub fn density(&self, x: &Float) -> Float {
        let b = self.invariant.prec();
        let pi = Float::with_val(b, Constant::Pi);
        let angle = Float::with_val(b, x * &pi) * 2u32;
        let root = Float::with_val(b, &self.invariant - angle.cos()).sqrt();
        pi / (root * &self.normalization)
    }

    /// θ = Φ(φ, I) / (2Φ(π, I)).
    pub fn theta(&self, digits: u32) -> Result<Float> {
        let num = phi_integral(&self.phi, &self.invariant, digits)?;
        Ok(num / Float::with_val(self.normalization.prec(), &self.normalization * 2u32))
    }

    /// ∫₀¹ h(x) dx by quadrature; equals 1.
    pub fn total_mass(&self, digits: u32) -> Result<Quadrature> {
        let b = self.invariant.prec();
        let zero = Float::new(b);
        let half = Float::with_val(b, 0.5);
        let one = Float::with_val(b, 1u32);
        let tol = pow10(b, -(digits as i32) - 3);
        let lo = tanh_sinh(|x| self.density(x), &zero, &half, &tol, b)?;
        let hi = tanh_sinh(|x| self.density(x), &half, &one, &tol, b)?;
        Ok(Quadrature {
            value: lo.value + hi.value,
            error_estimate: lo.error_estimate + hi.error_estimate,
            evaluations: lo.evaluations + hi.evaluations,
        })
    }
}

/// Arc measure ∫_a^b dt / √(I − cos t) for angles a, b in [0, 2π], taken
/// counter-clockwise from a to b.
pub fn arc_measure(a: &Float, b: &Float, invariant: &Float, digits: u32) -> Result<Float> {
    let bits = guarded(digits).bits();
    let fa = phi_integral(a, invariant, digits)?;
    let fb = phi_integral(b, invariant, digits)?;
    let mut d = Float::with_val(bits, fb - fa);
    if d.is_sign_negative() {
        let full = phi_integral(&(guarded(digits).pi() * 2u32), invariant, digits)?;
        d += full;
    }
    Ok(d)
}

/// Ratio (1/2)∫₀^{ψ₁} w / ∫₀^π w with w(φ) = 1/√(α₀ − 2α₁cos φ + α₂cos²φ).
pub fn weighted_ratio(alpha: [&Float; 3], psi1: &Float, digits: u32) -> Result<Float> {
    let p = guarded(digits);
    let b = p.bits();
    let [a0, a1, a2] = alpha.map(|a| Float::with_val(b, a));
    let f = |t: &Float| {
        let c = Float::with_val(b, t.cos_ref());
        let mut d = Float::with_val(b, &a2 * &c) - Float::with_val(b, &a1 * 2u32);
        d *= &c;
        d += &a0;
        d.sqrt().recip()
    };
    let tol = pow10(b, -(digits as i32) - 3);
    let integrate = |hi: &Float| -> Result<Float> {
        let pieces = 4u32;
        let mut total = p.zero();
        for n in 0..pieces {
            let lo = Float::with_val(b, hi * n) / pieces;
            let up = Float::with_val(b, hi * (n + 1)) / pieces;
            total += tanh_sinh(f, &lo, &up, &tol, b)?.value;
        }
        Ok(total)
    };
    let num = integrate(&Float::with_val(b, psi1))?;
    let den = integrate(&p.pi())?;
    Ok(num / (den * 2u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::agreement_digits;

    #[test]
    fn complete_integral_values() {
        let p = Precision::from_digits(40);
        let k = complete_f(&p.zero(), 30).unwrap();
        assert!(agreement_digits(&k, &(p.pi() / 2u32), 40) >= 35);
        let k = complete_f(&p.parse("0.5").unwrap(), 30).unwrap();
        let expected = p.parse("1.854074677301371918433850347195260046217").unwrap();
        assert!(agreement_digits(&k, &expected, 40) >= 35);
    }

    #[test]
    fn complete_integral_matches_quadrature() {
        let p = Precision::from_digits(50);
        let k2 = p.parse("0.5").unwrap();
        let b = p.bits() + 80;
        let f = |t: &Float| {
            let s = Float::with_val(b, t.sin_ref());
            Float::with_val(b, 1u32 - Float::with_val(b, s.square_ref()) * &k2)
                .sqrt()
                .recip()
        };
        let zero = Float::new(b);
        let top = Float::with_val(b, Constant::Pi) / 2u32;
        let q = tanh_sinh(f, &zero, &top, &pow10(b, -45), b).unwrap();
        let agm_value = complete_f(&k2, 45).unwrap();
        assert!(agreement_digits(&q.value, &agm_value, 60) >= 44);
    }

    #[test]
    fn carlson_at_full_quarter() {
        let p = Precision::from_digits(40);
        let k2 = p.parse("0.3").unwrap();
        let f = incomplete_f(&(p.pi() / 2u32), &k2, 30).unwrap();
        let k = complete_f(&k2, 30).unwrap();
        assert!(agreement_digits(&f, &k, 40) >= 30);
    }

    #[test]
    fn phi_closed_form_matches_quadrature() {
        let p = Precision::from_digits(40);
        let i = p.parse("1.21").unwrap();
        for phi in [0.3, 2.3, 3.1, 4.5] {
            let phi = p.real(phi);
            let a = phi_integral(&phi, &i, 30).unwrap();
            let q = phi_integral_quadrature(&phi, &i, 30).unwrap();
            assert!(agreement_digits(&a, &q.value, 40) >= 29, "phi = {phi}");
        }
        assert!(phi_integral(&p.zero(), &i, 30).unwrap().is_zero());
    }

    #[test]
    fn standard_pair_theta() {
        let p = Precision::from_digits(60);
        let t = theta_circle(&p.parse("0.5").unwrap(), &p.parse("0.2").unwrap(), 50).unwrap();
        let expected = p.parse("0.41883398539430419377007905494512623397913053693380").unwrap();
        assert!(agreement_digits(&t, &expected, 60) >= 48);
    }

    #[test]
    fn density_symmetry_and_mass() {
        let p = Precision::from_digits(30);
        let m = ThetaMeasure::new(&p.parse("1.7").unwrap(), &p.real(1.0), 20).unwrap();
        let x = p.real(0.137);
        let y = Float::with_val(p.bits(), 1u32 - &x);
        assert!(agreement_digits(&m.density(&x), &m.density(&y), 30) >= 20);
        let mass = m.total_mass(20).unwrap();
        assert!(Float::with_val(p.bits(), &mass.value - 1u32).abs() < 1e-20);
    }
}
