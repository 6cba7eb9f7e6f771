//! The elliptic curve `y² = 4cr²(z³ − 2Iz² + z)` attached to a circle pair,
//! its chord-and-tangent group law, and the giant-step machinery that leaps
//! whole blocks of q_j vertices at once.
//!
//! Baby-step records sit on the curve as `(w_k, y_k) = T + [k]G`, where
//! `T = (0, 0)` is 2-torsion and `G = (1/c, −2r²/c)` is the generator.

use rug::{Float, Integer};

use crate::circle::{CirclePair, RecordTriple};
use crate::complex::BigComplex;
use crate::error::{Error, Result};

/// Ordinate `y = w(1 − cz)² − zr² − c(1 − 2Iz + z²)` of the chord pair (z, w).
pub fn ordinate(z: &Float, w: &Float, pair: &CirclePair) -> Float {
    let b = pair.bits();
    let c = pair.c();
    let one_minus_cz = Float::with_val(b, 1u32 - Float::with_val(b, c * z));
    let mut y = Float::with_val(b, w * one_minus_cz.square());
    y -= Float::with_val(b, z * Float::with_val(b, pair.r().square_ref()));
    let two_iz = Float::with_val(b, pair.invariant() * z) * 2u32;
    let quad = Float::with_val(b, 1u32 - two_iz) + Float::with_val(b, z.square_ref());
    y -= Float::with_val(b, c * quad);
    y
}

/// `y² − 4cr²(z³ − 2Iz² + z)`.
pub fn curve_residual(z: &Float, y: &Float, pair: &CirclePair) -> Float {
    let b = pair.bits();
    let z2 = Float::with_val(b, z.square_ref());
    let inner = Float::with_val(b, &z2 - Float::with_val(b, pair.invariant() * z) * 2u32) + 1u32;
    let rhs = Float::with_val(b, z * inner) * four_c_r2(pair);
    Float::with_val(b, y.square_ref()) - rhs
}

/// Complex version of [`curve_residual`].
pub fn curve_residual_complex(z: &BigComplex, y: &BigComplex, pair: &CirclePair) -> BigComplex {
    let b = pair.bits();
    let two_i = Float::with_val(b, pair.invariant() * 2u32);
    let inner = (&z.square() - &z.scale(&two_i)).add_real(&Float::with_val(b, 1u32));
    &y.square() - &(z * &inner).scale(&four_c_r2(pair))
}

fn four_c_r2(pair: &CirclePair) -> Float {
    let b = pair.bits();
    Float::with_val(b, pair.r().square_ref()) * pair.c() * 4u32
}

fn check_bounded(value: &Float, scale: &Float, pair: &CirclePair, what: &str) -> Result<()> {
    let b = pair.bits();
    let limit = pair.precision().tolerance(5) * Float::with_val(b, scale.abs_ref()).max(&Float::with_val(b, 1u32));
    if Float::with_val(b, value.abs_ref()) > limit {
        return Err(Error::Consistency(format!(
            "{what}: curve residual {:e} exceeds tolerance",
            value.to_f64()
        )));
    }
    Ok(())
}

/// A real point of the curve or the identity `O`.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvePoint {
    Identity,
    Affine { z: Float, y: Float },
}

impl CurvePoint {
    pub fn affine(z: Float, y: Float) -> Self {
        CurvePoint::Affine { z, y }
    }

    /// The 2-torsion point T = (0, 0).
    pub fn two_torsion(pair: &CirclePair) -> Self {
        CurvePoint::Affine {
            z: Float::new(pair.bits()),
            y: Float::new(pair.bits()),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CurvePoint::Identity)
    }

    pub fn z(&self) -> Option<&Float> {
        match self {
            CurvePoint::Affine { z, .. } => Some(z),
            CurvePoint::Identity => None,
        }
    }

    pub fn y(&self) -> Option<&Float> {
        match self {
            CurvePoint::Affine { y, .. } => Some(y),
            CurvePoint::Identity => None,
        }
    }

    /// Curve residual; zero for the identity.
    pub fn residual(&self, pair: &CirclePair) -> Float {
        match self {
            CurvePoint::Identity => Float::new(pair.bits()),
            CurvePoint::Affine { z, y } => curve_residual(z, y, pair),
        }
    }

    /// Approximate equality at the pair's tolerance.
    pub fn approx_eq(&self, other: &CurvePoint, pair: &CirclePair) -> bool {
        match (self, other) {
            (CurvePoint::Identity, CurvePoint::Identity) => true,
            (CurvePoint::Affine { z: z1, y: y1 }, CurvePoint::Affine { z: z2, y: y2 }) => {
                close(z1, z2, pair) && close(y1, y2, pair)
            }
            _ => false,
        }
    }
}

/// A complex point (z, y) produced from a chord pair on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCurvePoint {
    pub z: BigComplex,
    pub y: BigComplex,
}

fn close(a: &Float, b: &Float, pair: &CirclePair) -> bool {
    let bits = pair.bits();
    let scale = Float::with_val(bits, a.abs_ref()).max(&Float::with_val(bits, 1u32));
    Float::with_val(bits, a - b).abs() <= pair.precision().tolerance(5) * scale
}

/// Weierstrass transform of a tangent chord pair (z, w) with p(z, w) = 0.
pub fn to_weierstrass(z: &BigComplex, w: &BigComplex, pair: &CirclePair) -> Result<ComplexCurvePoint> {
    if pair.is_concentric() {
        return Err(Error::domain("the curve needs a finite pencil invariant"));
    }
    let b = pair.bits();
    let one = BigComplex::one(b);
    let one_minus_cz = &one - &z.scale(pair.c());
    let r2 = Float::with_val(b, pair.r().square_ref());
    let two_i = Float::with_val(b, pair.invariant() * 2u32);
    let quad = (&z.square() - &z.scale(&two_i)).add_real(&Float::with_val(b, 1u32));
    let y = &(&(w * &one_minus_cz.square()) - &z.scale(&r2)) - &quad.scale(pair.c());
    let res = curve_residual_complex(z, &y, pair);
    check_bounded(&res.abs(), &y.norm_sqr(), pair, "to_weierstrass")?;
    Ok(ComplexCurvePoint { z: z.clone(), y })
}

/// Real-axis version of [`to_weierstrass`], used for the pencil abscissae w_k.
pub fn to_weierstrass_real(z: &Float, w: &Float, pair: &CirclePair) -> Result<CurvePoint> {
    if pair.is_concentric() {
        return Err(Error::domain("the curve needs a finite pencil invariant"));
    }
    let y = ordinate(z, w, pair);
    let res = curve_residual(z, &y, pair);
    check_bounded(
        &res,
        &Float::with_val(pair.bits(), y.square_ref()),
        pair,
        "to_weierstrass",
    )?;
    Ok(CurvePoint::affine(z.clone(), y))
}

pub fn ec_neg(p: &CurvePoint) -> CurvePoint {
    match p {
        CurvePoint::Identity => CurvePoint::Identity,
        CurvePoint::Affine { z, y } => CurvePoint::affine(z.clone(), Float::with_val(y.prec(), -y)),
    }
}

/// Chord-and-tangent addition on `y² = 4cr²(z³ − 2Iz² + z)`.
pub fn ec_add(p: &CurvePoint, q: &CurvePoint, pair: &CirclePair) -> CurvePoint {
    let (z1, y1, z2, y2) = match (p, q) {
        (CurvePoint::Identity, _) => return q.clone(),
        (_, CurvePoint::Identity) => return p.clone(),
        (CurvePoint::Affine { z: z1, y: y1 }, CurvePoint::Affine { z: z2, y: y2 }) => (z1, y1, z2, y2),
    };
    let b = pair.bits();
    let k = four_c_r2(pair);
    let slope = if close(z1, z2, pair) {
        let y_sum = Float::with_val(b, y1 + y2);
        if close(&y_sum, &Float::new(b), pair) {
            // Inverse pair, including doubling a 2-torsion point.
            return CurvePoint::Identity;
        }
        let z_sq = Float::with_val(b, z1.square_ref());
        let deriv = Float::with_val(b, &z_sq * 3u32) - Float::with_val(b, pair.invariant() * z1) * 4u32 + 1u32;
        Float::with_val(b, &k * deriv) / Float::with_val(b, y1 * 2u32)
    } else {
        Float::with_val(b, y2 - y1) / Float::with_val(b, z2 - z1)
    };
    let mut z3 = Float::with_val(b, slope.square_ref()) / &k;
    z3 += Float::with_val(b, pair.invariant() * 2u32);
    z3 -= z1;
    z3 -= z2;
    let y3 = Float::with_val(b, &slope * Float::with_val(b, z2 - &z3)) - y2;
    CurvePoint::affine(z3, y3)
}

/// [n]P by double-and-add.
pub fn ec_mul(n: u64, p: &CurvePoint, pair: &CirclePair) -> CurvePoint {
    let mut acc = CurvePoint::Identity;
    let mut base = p.clone();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            acc = ec_add(&acc, &base, pair);
        }
        base = ec_add(&base, &base, pair);
        n >>= 1;
    }
    acc
}

/// The generator: abscissa Z = 1/c, partner W = (1 − c²)²/(4cr²), ordinate Y = −2r²/c.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPoint {
    pub z: Float,
    pub w: Float,
    pub y: Float,
}

impl GeneratorPoint {
    pub fn point(&self) -> CurvePoint {
        CurvePoint::affine(self.z.clone(), self.y.clone())
    }
}

pub fn generator_point(pair: &CirclePair) -> Result<GeneratorPoint> {
    if pair.is_concentric() {
        return Err(Error::domain("the generator needs c > 0"));
    }
    let b = pair.bits();
    let c = pair.c();
    let z = Float::with_val(b, c.recip_ref());
    let one_minus_c2 = Float::with_val(b, 1u32 - Float::with_val(b, c.square_ref()));
    let w = one_minus_c2.square() / four_c_r2(pair);
    let y = -(Float::with_val(b, pair.r().square_ref()) * 2u32 / c);
    Ok(GeneratorPoint { z, w, y })
}

/// Translation by the 2-torsion point: (z, y) ↦ (1/z, −y/z²).
pub fn translate_by_torsion(p: &CurvePoint, pair: &CirclePair) -> CurvePoint {
    ec_add(p, &CurvePoint::two_torsion(pair), pair)
}

/// State of one set of giant steps: the anchor record q_j stays fixed while
/// the moving triple starts at q_{j−1} and advances by q_j per step.
#[derive(Debug, Clone)]
pub struct GiantStepState {
    pair: CirclePair,
    anchor: RecordTriple,
    anchor_w: Float,
    anchor_eps: Float,
    cur: RecordTriple,
    steps: u64,
}

/// ρ = √(1 − 2Icγ² + c²γ⁴) and ε = 1 − ρ = cγ²(2I − cγ²)/(1 + ρ).
fn rho_eps(gamma: &Float, pair: &CirclePair) -> (Float, Float) {
    let b = pair.bits();
    let w = Float::with_val(b, gamma.square_ref()) * pair.c();
    let two_i_w = Float::with_val(b, pair.invariant() * &w) * 2u32;
    let rho = (Float::with_val(b, 1u32 - two_i_w) + Float::with_val(b, w.square_ref())).sqrt();
    let two_i = Float::with_val(b, pair.invariant() * 2u32);
    let eps = Float::with_val(b, &w * Float::with_val(b, two_i - &w)) / Float::with_val(b, &rho + 1u32);
    (rho, eps)
}

impl GiantStepState {
    /// `previous` is the record q_{j−1}, `anchor` the record q_j.
    pub fn new(pair: &CirclePair, previous: RecordTriple, anchor: RecordTriple) -> Result<Self> {
        if pair.is_concentric() {
            return Err(Error::domain("giant steps need c > 0"));
        }
        if anchor.gamma > previous.gamma || anchor.q <= previous.q {
            return Err(Error::Consistency(
                "giant-step anchor must follow the previous record with smaller gamma".into(),
            ));
        }
        let anchor_w = anchor.w(pair);
        let (_, anchor_eps) = rho_eps(&anchor.gamma, pair);
        Ok(GiantStepState {
            pair: pair.clone(),
            anchor,
            anchor_w,
            anchor_eps,
            cur: previous,
            steps: 0,
        })
    }

    pub fn anchor(&self) -> &RecordTriple {
        &self.anchor
    }

    pub fn current(&self) -> &RecordTriple {
        &self.cur
    }

    /// Giant steps taken in this set so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The anchor's image [q_j]G = (W, Y) = (1/w_j, −y_j/w_j²).
    pub fn anchor_point(&self) -> CurvePoint {
        let b = self.pair.bits();
        let big_w = Float::with_val(b, self.anchor_w.recip_ref());
        let big_y = -Float::with_val(b, &self.anchor.y * Float::with_val(b, big_w.square_ref()));
        CurvePoint::affine(big_w, big_y)
    }

    /// One giant step: q_cur → q_cur + q_j. A fixed number of arithmetic
    /// operations, independent of the indices involved.
    pub fn step(&mut self) -> Result<()> {
        let pair = &self.pair;
        let b = pair.bits();
        let c = pair.c();
        let i = pair.invariant();
        let gc = &self.cur.gamma;
        let gj = &self.anchor.gamma;

        let (_, eps_cur) = rho_eps(gc, pair);
        let eps_j = &self.anchor_eps;
        let prod = Float::with_val(b, gc * gj);
        let gc2 = Float::with_val(b, gc.square_ref());
        let gj2 = Float::with_val(b, gj.square_ref());
        let c2 = Float::with_val(b, c.square_ref());

        let mut v = Float::with_val(b, i * c) * &prod * 4u32;
        let eps_mix = Float::with_val(b, &eps_cur + eps_j) - Float::with_val(b, &eps_cur * eps_j);
        v -= eps_mix * 2u32;
        v -= Float::with_val(b, &c2 * &prod) * Float::with_val(b, &gc2 + &gj2);

        let diff = Float::with_val(b, gc - gj);
        let alpha = Float::with_val(b, &prod * &v) / Float::with_val(b, diff.square_ref());
        let root_arg = Float::with_val(b, 1u32 - &alpha);
        if root_arg.is_sign_negative() {
            return Err(Error::precision("giant step left the real branch (1 - alpha < 0)"));
        }
        let denom = Float::with_val(b, 1u32 - Float::with_val(b, &c2 * &gc2) * &gj2);
        let gamma_new = diff / &denom * root_arg.sqrt();
        if gamma_new >= *gc || gamma_new.is_sign_negative() {
            return Err(Error::precision(format!(
                "giant step did not decrease gamma at q = {}",
                self.cur.q
            )));
        }

        // Exact chord addition of (W, Y) to (w_cur, y_cur), arranged so that
        // only w_new − w_cur = c(γ_new − γ_cur)(γ_new + γ_cur) is formed.
        let wj = &self.anchor_w;
        let w_cur = Float::with_val(b, c * &gc2);
        let w_new = Float::with_val(b, c * Float::with_val(b, gamma_new.square_ref()));
        let dw = Float::with_val(b, &gamma_new - gc) * Float::with_val(b, &gamma_new + gc) * c;
        let num = Float::with_val(b, &self.anchor.y * &dw)
            - Float::with_val(b, &self.cur.y * wj) * Float::with_val(b, 1u32 - Float::with_val(b, &w_new * wj));
        let den = Float::with_val(b, wj * Float::with_val(b, 1u32 - Float::with_val(b, &w_cur * wj)));
        let y_new = num / den;

        self.cur = RecordTriple {
            q: Integer::from(&self.cur.q + &self.anchor.q),
            gamma: gamma_new,
            y: y_new,
        };
        self.steps += 1;
        Ok(())
    }

    /// Runs giant steps until γ_cur < γ_{q_j}. Returns the next record and
    /// the number of steps, which is the partial quotient a_{j+1}.
    pub fn run_set(&mut self, max_quotient: u64) -> Result<(RecordTriple, u64)> {
        while self.cur.gamma >= self.anchor.gamma {
            if self.steps >= max_quotient {
                return Err(Error::budget(
                    max_quotient,
                    format!(
                        "partial quotient after q = {} exceeds the configured maximum",
                        self.anchor.q
                    ),
                ));
            }
            self.step()?;
        }
        Ok((self.cur.clone(), self.steps))
    }
}

/// One full giant-step set from records (q_{j−1}, q_j) to q_{j+1}.
pub fn giant_step_set(
    pair: &CirclePair,
    previous: &RecordTriple,
    anchor: &RecordTriple,
    max_quotient: u64,
) -> Result<(RecordTriple, u64)> {
    GiantStepState::new(pair, previous.clone(), anchor.clone())?.run_set(max_quotient)
}

/// Largest Δ = γ_{q_{j−1}} at which the refined formula is trusted for a
/// result of `digits` significant digits: 10^(−digits/4).
pub fn delta_threshold(digits: u32, bits: u32) -> Float {
    let b = bits.max(64);
    let ten = Float::with_val(b, 10u32);
    let exponent = -Float::with_val(b, digits) / 4u32;
    Float::with_val(b, rug::ops::Pow::pow(ten, exponent))
}

/// A convergent numerator and denominator (p_j, q_j).
pub type Convergent<'a> = (&'a Integer, &'a Integer);

/// θ ≈ (γ_{q_{j−1}} p_j + γ_{q_j} p_{j−1}) / (γ_{q_{j−1}} q_j + γ_{q_j} q_{j−1}).
pub fn refine_theta(records: [&RecordTriple; 2], convergents: [Convergent<'_>; 2], digits: u32) -> Result<Float> {
    let [prev, last] = records;
    let [(p_prev, q_prev), (p_last, q_last)] = convergents;
    if prev.q != *q_prev || last.q != *q_last {
        return Err(Error::Consistency(format!(
            "records ({}, {}) do not match convergent denominators ({}, {})",
            prev.q, last.q, q_prev, q_last
        )));
    }
    let b = prev.gamma.prec().max(last.gamma.prec());
    let threshold = delta_threshold(digits, b);
    if prev.gamma > threshold {
        return Err(Error::precision(format!(
            "delta = {:e} exceeds 10^(-{}/4); more giant-step sets are needed for {} digits",
            prev.gamma.to_f64(),
            digits,
            digits
        )));
    }
    let num = Float::with_val(b, &prev.gamma * p_last) + Float::with_val(b, &last.gamma * p_prev);
    let den = Float::with_val(b, &prev.gamma * q_last) + Float::with_val(b, &last.gamma * q_prev);
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{baby_step_scan, initial_vertices, GammaWalk};
    use crate::precision::Precision;

    fn standard_pair() -> CirclePair {
        CirclePair::from_decimal("0.5", "0.2", Precision::from_digits(50)).unwrap()
    }

    fn tol(pair: &CirclePair) -> Float {
        pair.precision().tolerance(5)
    }

    #[test]
    fn generator_values() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap();
        assert_eq!(g.z.to_f64(), 2.0);
        assert!((g.w.to_f64() - 7.03125).abs() < 1e-15);
        assert!((g.y.to_f64() + 0.16).abs() < 1e-15);
        assert!(Float::with_val(pair.bits(), g.point().residual(&pair).abs_ref()) < tol(&pair));
    }

    #[test]
    fn start_chord_ordinate_is_imaginary() {
        let pair = standard_pair();
        let (zm1, z0) = initial_vertices(&pair);
        let z1 = zm1.conj();
        let pt = to_weierstrass(&z0, &z1, &pair).unwrap();
        assert!(pt.y.re.to_f64().abs() < 1e-45);
        let sin = z1.im.to_f64();
        assert!((pt.y.im.to_f64() - 0.25 * sin).abs() < 1e-15);
    }

    #[test]
    fn torsion_ordinate_vanishes() {
        let pair = standard_pair();
        let p = pair.precision();
        let pt = to_weierstrass_real(&p.zero(), &p.real(0.5), &pair).unwrap();
        assert!(pt.y().unwrap().is_zero());
    }

    #[test]
    fn identity_and_inverse_laws() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap().point();
        assert!(ec_add(&g, &CurvePoint::Identity, &pair).approx_eq(&g, &pair));
        assert!(ec_add(&g, &ec_neg(&g), &pair).is_identity());
        let t = CurvePoint::two_torsion(&pair);
        assert!(ec_add(&t, &t, &pair).is_identity());
    }

    #[test]
    fn torsion_translation_inverts_abscissa() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap().point();
        let tg = translate_by_torsion(&g, &pair);
        assert!((tg.z().unwrap().to_f64() - 0.5).abs() < 1e-40);
        assert!((tg.y().unwrap().to_f64() - 0.04).abs() < 1e-40);
    }

    #[test]
    fn repeated_addition_reproduces_baby_steps() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap().point();
        let mut pt = CurvePoint::two_torsion(&pair);
        let mut walk = GammaWalk::new(&pair);
        let mut gammas = vec![Float::with_val(pair.bits(), 1u32)];
        for _ in 0..52 {
            gammas.push(walk.current().clone());
            walk.advance();
        }
        for k in 1..=50usize {
            pt = ec_add(&pt, &g, &pair);
            let w = Float::with_val(pair.bits(), gammas[k - 1].square_ref()) * pair.c();
            let w_next = Float::with_val(pair.bits(), gammas[k].square_ref()) * pair.c();
            let y = ordinate(&w, &w_next, &pair);
            let err_z = Float::with_val(pair.bits(), pt.z().unwrap() - &w).abs();
            let err_y = Float::with_val(pair.bits(), pt.y().unwrap() - &y).abs();
            assert!(err_z < 1e-38 && err_y < 1e-38, "k = {k}: {err_z} {err_y}");
            let mult = ec_mul(k as u64, &g, &pair);
            let zk = mult.z().unwrap();
            assert!(
                Float::with_val(pair.bits(), zk * &w) - 1u32 < 1e-35,
                "Z_k = 1/w_k at k = {k}"
            );
        }
    }

    #[test]
    fn group_law_on_small_multiples() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap().point();
        let m: Vec<CurvePoint> = (0..8).map(|k| ec_mul(k, &g, &pair)).collect();
        for a in 1..4usize {
            for b in 1..4usize {
                let ab = ec_add(&m[a], &m[b], &pair);
                assert!(ab.approx_eq(&ec_add(&m[b], &m[a], &pair), &pair));
                assert!(ab.approx_eq(&m[a + b], &pair));
                let lhs = ec_add(&ab, &m[1], &pair);
                let rhs = ec_add(&m[a], &ec_add(&m[b], &m[1], &pair), &pair);
                assert!(lhs.approx_eq(&rhs, &pair));
            }
        }
    }

    #[test]
    fn cos_phi_via_generator_multiples() {
        let pair = standard_pair();
        let g = generator_point(&pair).unwrap().point();
        let b = pair.bits();
        let i_minus_1 = Float::with_val(b, pair.invariant() - 1u32);
        for k in 1..=20u64 {
            let zk = ec_mul(k, &g, &pair).z().unwrap().clone();
            let lhs = Float::with_val(b, 1u32)
                - Float::with_val(b, &zk * &i_minus_1) * 4u32 / Float::with_val(b, &zk - 1u32).square();
            let w = Float::with_val(b, zk.recip_ref());
            let rhs = crate::circle::cos_phi_from_w(&w, &pair).unwrap();
            assert!(Float::with_val(b, lhs - rhs).abs() < 1e-38);
        }
    }

    #[test]
    fn giant_set_reaches_9228_from_1115() {
        let pair = standard_pair();
        let out = baby_step_scan(&pair, &pair.precision().parse("1e-4").unwrap(), 20_000).unwrap();
        let rec = |q: u64| out.records().iter().find(|r| r.q == q).unwrap().clone();
        let (next, a) = giant_step_set(&pair, &rec(308), &rec(1115), 1000).unwrap();
        assert_eq!(next.q, 9228);
        assert_eq!(a, 8);
        let baby = rec(9228);
        assert!(Float::with_val(pair.bits(), &next.gamma - &baby.gamma).abs() < 1e-40);
        assert!(Float::with_val(pair.bits(), &next.y - &baby.y).abs() < 1e-40);
    }

    #[test]
    fn giant_steps_form_arithmetic_progression() {
        let pair = standard_pair();
        let out = baby_step_scan(&pair, &pair.precision().parse("1e-4").unwrap(), 20_000).unwrap();
        let rec = |q: u64| out.records().iter().find(|r| r.q == q).unwrap().clone();
        let anchor = rec(1115);
        let mut state = GiantStepState::new(&pair, rec(308), anchor.clone()).unwrap();
        let delta = rec(308).gamma.to_f64();
        let mut last = state.current().gamma.clone();
        while state.current().gamma >= anchor.gamma {
            state.step().unwrap();
            let d = Float::with_val(pair.bits(), &last - &state.current().gamma) - &anchor.gamma;
            assert!(d.to_f64().abs() < 10.0 * delta.powi(3));
            last = state.current().gamma.clone();
        }
    }

    #[test]
    fn refine_rejects_large_delta() {
        let pair = standard_pair();
        let p = pair.precision();
        let r1 = RecordTriple {
            q: Integer::from(7),
            gamma: p.real(0.2),
            y: p.zero(),
        };
        let r2 = RecordTriple {
            q: Integer::from(12),
            gamma: p.real(0.05),
            y: p.zero(),
        };
        let (p1, q1, p2, q2) = (Integer::from(3), Integer::from(7), Integer::from(5), Integer::from(12));
        let err = refine_theta([&r1, &r2], [(&p1, &q1), (&p2, &q2)], 24).unwrap_err();
        assert!(matches!(err, Error::Precision(_)));
        let ok = refine_theta([&r1, &r2], [(&p1, &q1), (&p2, &q2)], 2).unwrap();
        assert!((ok.to_f64() - (0.2 * 5.0 + 0.05 * 3.0) / (0.2 * 12.0 + 0.05 * 7.0)).abs() < 1e-15);
    }
}
