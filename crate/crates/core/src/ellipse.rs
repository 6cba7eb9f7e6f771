//! Polygons interscribed between the unit circle and an ellipse with
//! semi-axes a (along x) and b (along y) centred at (c, 0).
//!
//! The rotation number is the ratio of integrals with weight
//! `1/√(α₀ − 2α₁cos φ + α₂cos²φ)`. There is no curve arithmetic here, so the
//! scan advances one vertex at a time within an iteration budget.

use rug::{Float, Integer};

use crate::cf::{recover_numerators, ConvergentTable};
use crate::complex::BigComplex;
use crate::error::{Error, Result};
use crate::precision::{pow10, Precision};
use crate::roots::bisect;

/// Default working precision of ellipse scans, in decimal digits.
pub const DEFAULT_DIGITS: u32 = 50;
/// Default iteration budget of ellipse scans.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipseConfig {
    a: Float,
    b: Float,
    c: Float,
    precision: Precision,
}

impl EllipseConfig {
    /// Requires a ≥ b > 0 and the ellipse strictly inside the unit circle.
    pub fn new(a: Float, b: Float, c: Float, precision: Precision) -> Result<Self> {
        let bits = precision.bits();
        let (a, b, c) = (
            Float::with_val(bits, a),
            Float::with_val(bits, b),
            Float::with_val(bits, c),
        );
        if b <= 0 || a < b {
            return Err(Error::domain("ellipse semi-axes must satisfy a >= b > 0"));
        }
        // |(c + a cos t, b sin t)|² is convex in cos t when a ≥ b, so the
        // extremes are the two vertices on the real axis.
        let right = Float::with_val(bits, &c + &a);
        let left = Float::with_val(bits, &c - &a);
        if right >= 1 || left <= -1 {
            return Err(Error::domain("ellipse must lie strictly inside the unit circle"));
        }
        Ok(EllipseConfig { a, b, c, precision })
    }

    pub fn from_decimal(a: &str, b: &str, c: &str, precision: Precision) -> Result<Self> {
        Self::new(precision.parse(a)?, precision.parse(b)?, precision.parse(c)?, precision)
    }

    pub fn a(&self) -> &Float {
        &self.a
    }

    pub fn b(&self) -> &Float {
        &self.b
    }

    pub fn c(&self) -> &Float {
        &self.c
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    fn bits(&self) -> u32 {
        self.precision.bits()
    }

    /// b² − a².
    fn d(&self) -> Float {
        let bits = self.bits();
        Float::with_val(bits, self.b.square_ref()) - Float::with_val(bits, self.a.square_ref())
    }
}

/// Integrand weights and the start-chord cosine of an ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub alpha0: Float,
    pub alpha1: Float,
    pub alpha2: Float,
    pub cos_psi1: Float,
}

/// α₀ = a²(1 − b²) + b²c², α₁ = b²c, α₂ = b² − a²,
/// cos ψ₁ = (a² + b² − (1 − c)²)/((1 − c)² + b² − a²).
pub fn weights_from_ellipse(cfg: &EllipseConfig) -> WeightSpec {
    let bits = cfg.bits();
    let a2 = Float::with_val(bits, cfg.a.square_ref());
    let b2 = Float::with_val(bits, cfg.b.square_ref());
    let c2 = Float::with_val(bits, cfg.c.square_ref());
    let alpha0 = Float::with_val(bits, &a2 * Float::with_val(bits, 1u32 - &b2)) + Float::with_val(bits, &b2 * &c2);
    let alpha1 = Float::with_val(bits, &b2 * &cfg.c);
    let alpha2 = Float::with_val(bits, &b2 - &a2);
    let omc2 = Float::with_val(bits, 1u32 - &cfg.c).square();
    let num = Float::with_val(bits, &a2 + &b2) - &omc2;
    let den = omc2 + &alpha2;
    WeightSpec {
        alpha0,
        alpha1,
        alpha2,
        cos_psi1: num / den,
    }
}

/// Inverts [`weights_from_ellipse`]. With B = b² the weights give the cubic
/// B³ − (1 + α₂)B² + (α₂ + α₀)B − α₁² = 0, then a² = B − α₂ and c = α₁/B;
/// the start-chord cosine selects among admissible roots.
pub fn ellipse_from_weights(spec: &WeightSpec, precision: Precision) -> Result<EllipseConfig> {
    let bits = precision.bits();
    let a0 = Float::with_val(bits, &spec.alpha0);
    let a1 = Float::with_val(bits, &spec.alpha1);
    let a2 = Float::with_val(bits, &spec.alpha2);
    if a2 > 0 {
        return Err(Error::domain("inadmissible weights: alpha2 = b^2 - a^2 must be <= 0"));
    }
    let a1_sq = Float::with_val(bits, a1.square_ref());
    let cubic = |x: &Float| {
        let x = Float::with_val(bits, x);
        let mut v = Float::with_val(bits, &x - Float::with_val(bits, &a2 + 1u32));
        v *= &x;
        v += Float::with_val(bits, &a2 + &a0);
        v *= &x;
        v - &a1_sq
    };
    let tol = precision.tolerance(8);
    let mut best: Option<(Float, EllipseConfig)> = None;
    // The cubic is monotone between its critical points, so each piece of
    // (0, 1) cut at them holds at most one root, however close the roots are.
    let s = Float::with_val(bits, &a2 + 1u32);
    let p = Float::with_val(bits, &a2 + &a0);
    let disc = Float::with_val(bits, s.square_ref()) - Float::with_val(bits, &p * 3u32);
    let mut cuts = vec![0.0, 1.0];
    if disc > 0 {
        let root = disc.sqrt();
        for x in [
            Float::with_val(bits, &s - &root) / 3u32,
            Float::with_val(bits, &s + &root) / 3u32,
        ] {
            let x = x.to_f64();
            if x > 0.0 && x < 1.0 {
                cuts.push(x);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (Float::with_val(bits, w[0]), Float::with_val(bits, w[1]));
        let (f_lo, f_hi) = (cubic(&lo), cubic(&hi));
        if f_hi.is_zero() {
            roots.push(hi);
        } else if f_lo.is_sign_negative() != f_hi.is_sign_negative() {
            roots.push(bisect(&cubic, w[0], w[1], bits));
        }
    }
    for root in roots {
        let a_sq = Float::with_val(bits, &root - &a2);
        if a_sq <= 0 {
            continue;
        }
        let b = Float::with_val(bits, root.sqrt_ref());
        let a = a_sq.sqrt();
        let c = Float::with_val(bits, &a1 / &root);
        let Ok(cfg) = EllipseConfig::new(a, b, c, precision) else {
            continue;
        };
        let back = weights_from_ellipse(&cfg);
        let miss = Float::with_val(bits, &back.cos_psi1 - &spec.cos_psi1).abs();
        let better = best.as_ref().is_none_or(|(m, _)| miss < *m);
        if better {
            best = Some((miss, cfg));
        }
    }
    match best {
        Some((miss, cfg)) if miss <= tol => Ok(cfg),
        Some((miss, _)) => Err(Error::domain(format!(
            "inadmissible weights: no ellipse reproduces cos psi1 (closest miss {:e})",
            miss.to_f64()
        ))),
        None => Err(Error::domain(
            "inadmissible weights: no ellipse with a >= b > 0 inside the unit circle",
        )),
    }
}

/// Tangent-chord relation
/// `w²[(cz−1)² + (b²−a²)z²] − 2w[(cz−1)(z−c) + (a²+b²)z] + (z−c)² + b² − a²`.
pub fn chord_residual(z: &BigComplex, w: &BigComplex, cfg: &EllipseConfig) -> BigComplex {
    let bits = cfg.bits();
    let d = cfg.d();
    let neg_one = Float::with_val(bits, -1);
    let neg_c = Float::with_val(bits, -&cfg.c);
    let cz_minus_1 = z.scale(&cfg.c).add_real(&neg_one);
    let z_minus_c = z.add_real(&neg_c);
    let sum_sq = Float::with_val(bits, cfg.a.square_ref()) + Float::with_val(bits, cfg.b.square_ref());
    let quad = &cz_minus_1.square() + &z.square().scale(&d);
    let lin = &(&cz_minus_1 * &z_minus_c) + &z.scale(&sum_sq);
    let constant = z_minus_c.square().add_real(&d);
    let two = Float::with_val(bits, 2u32);
    &(&(&w.square() * &quad) - &(w * &lin).scale(&two)) + &constant
}

/// z₊ = ((c − z)² + b² − a²) / (z₋ ((b² − a²)z² + (cz − 1)²)).
pub fn ellipse_next_vertex(prev: &BigComplex, cur: &BigComplex, cfg: &EllipseConfig) -> Result<BigComplex> {
    let bits = cfg.bits();
    let d = cfg.d();
    let c = BigComplex::from_real(Float::with_val(bits, &cfg.c));
    let num = (&c - cur).square().add_real(&d);
    let cz_minus_1 = cur.scale(&cfg.c).add_real(&Float::with_val(bits, -1));
    let den = &(&cur.square().scale(&d) + &cz_minus_1.square()) * prev;
    let next = &num / &den;
    let drift = Float::with_val(bits, next.abs() - 1u32).abs();
    if drift > cfg.precision.tolerance(5) {
        return Err(Error::precision(format!(
            "vertex left the unit circle: ||z| - 1| = {:e}",
            drift.to_f64()
        )));
    }
    Ok(next)
}

/// The first vertex after z₀ = 1: cos ψ₁ + i sin ψ₁ with sin ψ₁ > 0.
pub fn initial_chord(cfg: &EllipseConfig) -> BigComplex {
    let bits = cfg.bits();
    let cos = weights_from_ellipse(cfg).cos_psi1;
    let sin = Float::with_val(bits, 1u32 - Float::with_val(bits, cos.square_ref())).sqrt();
    BigComplex::new(cos, sin)
}

/// Result of an ellipse scan.
#[derive(Debug, Clone)]
pub struct EllipseScan {
    /// Record indices including the q₀ = 1 seed, with their 1 − cos ψ_q.
    pub records: Vec<(u64, Float)>,
    pub table: ConvergentTable,
    pub steps: u64,
    /// Closure order when 1 − cos ψ_k vanished to working precision.
    pub closure: Option<u64>,
    /// Largest |tangent-chord residual| seen.
    pub max_residual: Float,
}

impl EllipseScan {
    /// Record denominators after the seed.
    pub fn denominators(&self) -> Vec<u64> {
        self.records.iter().skip(1).map(|(q, _)| *q).collect()
    }

    /// The last convergent p/q as a float.
    pub fn estimate(&self, bits: u32) -> Option<Float> {
        self.table
            .last()
            .map(|r| Float::with_val(bits, &r.p) / Float::with_val(bits, &r.q))
    }
}

/// Iterates vertices from (1, z₁), emitting records where 1 − cos ψ_k is a
/// new strict minimum (seeded with q₀ = 1, ε₀ = 1 − cos ψ₁). Stops at the
/// budget, at closure, or once the record falls below `eps_stop`.
pub fn ellipse_ratio_scan(
    cfg: &EllipseConfig,
    z1: &BigComplex,
    budget: u64,
    eps_stop: Option<&Float>,
) -> Result<EllipseScan> {
    let bits = cfg.bits();
    let tol = cfg.precision.tolerance(5);
    let mut prev = BigComplex::one(bits);
    let start_res = chord_residual(&prev, z1, cfg).abs();
    if start_res > tol {
        return Err(Error::domain(format!(
            "start chord is not tangent to the ellipse (residual {:e})",
            start_res.to_f64()
        )));
    }
    let mut cur = z1.clone();
    let closure = pow10(bits, -(cfg.precision.digits() as i32) / 2);
    let mut eps = Float::with_val(bits, 1u32 - &cur.re);
    let mut records = vec![(1u64, eps.clone())];
    let mut max_residual = start_res;
    let mut k = 1u64;
    let mut closed = None;
    while k < budget {
        let next = ellipse_next_vertex(&prev, &cur, cfg)?.normalized();
        let res = chord_residual(&cur, &next, cfg).abs();
        if res > tol {
            return Err(Error::precision(format!(
                "tangent-chord residual {:e} at step {}",
                res.to_f64(),
                k + 1
            )));
        }
        if res > max_residual {
            max_residual = res;
        }
        prev = std::mem::replace(&mut cur, next);
        k += 1;
        let delta = Float::with_val(bits, 1u32 - &cur.re);
        if delta < closure {
            records.push((k, delta));
            closed = Some(k);
            break;
        }
        if delta < eps {
            eps = delta.clone();
            records.push((k, delta));
            if eps_stop.is_some_and(|stop| eps < *stop) {
                break;
            }
        }
    }
    if let Some(stop) = eps_stop {
        if closed.is_none() && eps >= *stop {
            return Err(Error::budget(
                budget,
                "ellipse scan did not reach the stopping threshold",
            ));
        }
    }
    let qs: Vec<Integer> = records.iter().skip(1).map(|(q, _)| Integer::from(*q)).collect();
    let table = recover_numerators(&qs)?;
    Ok(EllipseScan {
        records,
        table,
        steps: k,
        closure: closed,
        max_residual,
    })
}
