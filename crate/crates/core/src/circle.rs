//! Two nested circles: the unit circle and an inner circle centred at (c, 0)
//! with radius r.
//!
//! Chords of the unit circle tangent to the inner circle satisfy
//! `p(z, w) = (cwz − w − z + c)² − 4r²wz = 0`, which drives both the vertex
//! recurrence and the real-valued γ recurrence used by the baby-step scan.

use rug::{Float, Integer};

use crate::complex::BigComplex;
use crate::curve;
use crate::error::{Error, Result};
use crate::precision::{pow10, Precision};

/// Inner circle (centre `c` on the real axis, radius `r`) nested in the unit
/// circle, with the pencil invariant `I = (1 + c² − r²)/(2c)` cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePair {
    c: Float,
    r: Float,
    invariant: Float,
    precision: Precision,
}

/// Pencil invariant `I = (1 + c² − r²)/(2c)` of two strictly nested circles.
pub fn pencil_invariant(c: &Float, r: &Float) -> Result<Float> {
    let bits = c.prec().max(r.prec());
    let outer = Float::with_val(bits, c + r);
    if *c <= 0 || *r <= 0 || outer >= 1 {
        return Err(Error::domain(format!(
            "circles are not strictly nested: need 0 < c < c + r < 1, got c = {}, r = {}",
            c.to_f64(),
            r.to_f64()
        )));
    }
    let mut num = Float::with_val(bits, c.square_ref()) + 1u32;
    num -= Float::with_val(bits, r.square_ref());
    Ok(num / Float::with_val(bits, c * 2u32))
}

impl CirclePair {
    pub fn new(c: Float, r: Float, precision: Precision) -> Result<Self> {
        let c = Float::with_val(precision.bits(), c);
        let r = Float::with_val(precision.bits(), r);
        let invariant = pencil_invariant(&c, &r)?;
        Ok(CirclePair {
            c,
            r,
            invariant,
            precision,
        })
    }

    /// Parses decimal strings so that inputs like `0.2` are exact to the
    /// working precision rather than to f64.
    pub fn from_decimal(c: &str, r: &str, precision: Precision) -> Result<Self> {
        Self::new(precision.parse(c)?, precision.parse(r)?, precision)
    }

    /// Concentric circles (c = 0). The pencil invariant is infinite; the vertex
    /// map is a rigid rotation and only the recurrences are meaningful.
    pub fn concentric(r: Float, precision: Precision) -> Result<Self> {
        let r = Float::with_val(precision.bits(), r);
        if r <= 0 || r >= 1 {
            return Err(Error::domain("concentric radius must lie in (0, 1)"));
        }
        Ok(CirclePair {
            c: precision.zero(),
            r,
            invariant: Float::with_val(precision.bits(), rug::float::Special::Infinity),
            precision,
        })
    }

    pub fn c(&self) -> &Float {
        &self.c
    }

    pub fn r(&self) -> &Float {
        &self.r
    }

    /// Pencil invariant I (infinite for concentric circles).
    pub fn invariant(&self) -> &Float {
        &self.invariant
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn bits(&self) -> u32 {
        self.precision.bits()
    }

    pub fn is_concentric(&self) -> bool {
        self.c.is_zero()
    }

    /// Same geometry carried at a different working precision.
    pub fn with_precision(&self, precision: Precision) -> Self {
        CirclePair {
            c: Float::with_val(precision.bits(), &self.c),
            r: Float::with_val(precision.bits(), &self.r),
            invariant: if self.is_concentric() {
                self.invariant.clone()
            } else {
                let c = Float::with_val(precision.bits(), &self.c);
                let r = Float::with_val(precision.bits(), &self.r);
                pencil_invariant(&c, &r).expect("validated at construction")
            },
            precision,
        }
    }

    /// Upper bound `I − √(I² − 1)` on the centres w_k of the pencil circles.
    pub fn w_bound(&self) -> Float {
        let i = &self.invariant;
        let disc = Float::with_val(self.bits(), i.square_ref()) - 1u32;
        Float::with_val(self.bits(), i - disc.sqrt())
    }

    /// cos φ₁ = 2r²/(1 − c)² − 1 of the first vertex after z₀ = 1.
    pub fn first_cos(&self) -> Float {
        let b = self.bits();
        let one_minus_c = Float::with_val(b, 1u32 - &self.c);
        let r2 = Float::with_val(b, self.r.square_ref());
        Float::with_val(b, r2 * 2u32 / one_minus_c.square()) - 1u32
    }
}

/// Upper limit ψ and modulus k² of the incomplete integral F(ψ, k).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSpec {
    pub psi: Float,
    pub k2: Float,
    pub digits: u32,
}

impl IntegralSpec {
    pub fn new(psi: Float, k2: Float, digits: u32) -> Result<Self> {
        let half_pi = Float::with_val(psi.prec(), rug::float::Constant::Pi) / 2u32;
        if psi <= 0 || psi >= half_pi {
            return Err(Error::domain("psi must lie in (0, pi/2)"));
        }
        if k2 <= 0 || k2 >= 1 {
            return Err(Error::domain("k2 must lie in (0, 1)"));
        }
        Ok(IntegralSpec { psi, k2, digits })
    }
}

/// Circle pair whose pencil invariant equals `2/k² − 1`:
/// `c = (√(1 − k²cos²ψ) − √(1 − k²))² / (k² sin²ψ)`, `r = (1 − c) cos ψ`.
pub fn params_from_integral(spec: &IntegralSpec) -> Result<CirclePair> {
    let precision = Precision::working(spec.digits);
    let b = precision.bits();
    let psi = Float::with_val(b, &spec.psi);
    let k2 = Float::with_val(b, &spec.k2);
    let (sin, cos) = psi.sin_cos(Float::new(b));
    let a = (Float::with_val(b, 1u32 - Float::with_val(b, &k2 * Float::with_val(b, cos.square_ref())))).sqrt();
    let s = Float::with_val(b, 1u32 - &k2).sqrt();
    let num = Float::with_val(b, a - s).square();
    let c = num / Float::with_val(b, &k2 * Float::with_val(b, sin.square_ref()));
    let r = Float::with_val(b, 1u32 - &c) * &cos;
    let floor = pow10(b, -(precision.digits() as i32) / 4);
    if c < floor || r < floor {
        return Err(Error::domain(format!(
            "degenerate integral parameters: c = {:e}, r = {:e} underflow the working precision",
            c.to_f64(),
            r.to_f64()
        )));
    }
    CirclePair::new(c, r, precision)
}

/// Tangential-chord polynomial `p(z, w) = (cwz − w − z + c)² − 4r²wz`.
pub fn chord_residual(z: &BigComplex, w: &BigComplex, pair: &CirclePair) -> BigComplex {
    let wz = w * z;
    let lin = (&(&wz.scale(pair.c()) - w) - z).add_real(pair.c());
    let four_r2 = Float::with_val(pair.bits(), pair.r().square_ref()) * 4u32;
    &lin.square() - &wz.scale(&four_r2)
}

/// Next vertex `z₊ = (c − z)² / (z₋ (1 − cz)²)` of the interscribed polygon.
pub fn next_vertex(prev: &BigComplex, cur: &BigComplex, pair: &CirclePair) -> Result<BigComplex> {
    let b = pair.bits();
    let c = BigComplex::from_real(Float::with_val(b, pair.c()));
    let num = (&c - cur).square();
    let one = BigComplex::one(b);
    let den = &(&one - &cur.scale(pair.c())).square() * prev;
    let next = &num / &den;
    let drift = Float::with_val(b, next.abs() - 1u32).abs();
    if drift > pair.precision().tolerance(5) {
        return Err(Error::precision(format!(
            "vertex left the unit circle: ||z| - 1| = {:e}",
            drift.to_f64()
        )));
    }
    Ok(next)
}

/// z₋₁ = e^{−iφ₁} and z₀ = 1, where cos φ₁ = 2r²/(1 − c)² − 1 and sin φ₁ > 0.
pub fn initial_vertices(pair: &CirclePair) -> (BigComplex, BigComplex) {
    let b = pair.bits();
    let cos = pair.first_cos();
    let sin = Float::with_val(b, 1u32 - Float::with_val(b, cos.square_ref())).sqrt();
    let start = BigComplex::new(cos, -sin);
    (start, BigComplex::one(b))
}

/// Both endpoints w of the tangent chords through a vertex z: the roots of
/// `p(z, w) = 0` viewed as a quadratic in w.
pub fn tangent_partners(z: &BigComplex, pair: &CirclePair) -> (BigComplex, BigComplex) {
    let b = pair.bits();
    let one = BigComplex::one(b);
    let a = &z.scale(pair.c()) - &one;
    let c = BigComplex::from_real(Float::with_val(b, pair.c()));
    let bb = &c - z;
    let four_r2 = Float::with_val(b, pair.r().square_ref()) * 4u32;
    let a2 = a.square();
    let lin = &(&a * &bb).scale(&Float::with_val(b, 2u32)) - &z.scale(&four_r2);
    let disc = &lin.square() - &(&a2 * &bb.square()).scale(&Float::with_val(b, 4u32));
    let root = disc.sqrt();
    let two_a2 = a2.scale(&Float::with_val(b, 2u32));
    let w1 = &(&(-&lin) + &root) / &two_a2;
    let w2 = &(&(-&lin) - &root) / &two_a2;
    (w1, w2)
}

/// Iterates the vertex recurrence from `(z₋₁, z₀)`.
#[derive(Debug, Clone)]
pub struct VertexWalk<'a> {
    pair: &'a CirclePair,
    prev: BigComplex,
    cur: BigComplex,
    index: u64,
}

impl<'a> VertexWalk<'a> {
    pub fn new(pair: &'a CirclePair) -> Self {
        let (prev, cur) = initial_vertices(pair);
        VertexWalk {
            pair,
            prev,
            cur,
            index: 0,
        }
    }

    pub fn starting_at(pair: &'a CirclePair, prev: BigComplex, cur: BigComplex) -> Self {
        VertexWalk {
            pair,
            prev,
            cur,
            index: 0,
        }
    }

    /// Index k of the current vertex z_k.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn current(&self) -> &BigComplex {
        &self.cur
    }

    pub fn previous(&self) -> &BigComplex {
        &self.prev
    }

    /// Steps to the next vertex. The result is projected back onto the unit
    /// circle so that rounding does not accumulate in the modulus over long
    /// runs; the per-step modulus check still applies before projection.
    pub fn advance(&mut self) -> Result<&BigComplex> {
        let next = next_vertex(&self.prev, &self.cur, self.pair)?.normalized();
        self.prev = std::mem::replace(&mut self.cur, next);
        self.index += 1;
        Ok(&self.cur)
    }
}

/// cos φ_k = 1 − 4w_k(I − 1)/(w_k − 1)², valid for 0 < w_k < I − √(I² − 1).
pub fn cos_phi_from_w(w: &Float, pair: &CirclePair) -> Result<Float> {
    if pair.is_concentric() {
        return Err(Error::domain("cos_phi_from_w needs a finite pencil invariant"));
    }
    if *w <= 0 || *w >= pair.w_bound() {
        return Err(Error::domain(format!(
            "w = {:e} violates 0 < w < I - sqrt(I^2 - 1)",
            w.to_f64()
        )));
    }
    let b = pair.bits();
    let i_minus_1 = Float::with_val(b, pair.invariant() - 1u32);
    let num = Float::with_val(b, w * 4u32) * i_minus_1;
    let den = Float::with_val(b, w - 1u32).square();
    Ok(1u32 - num / den)
}

/// |z_k − 1| recovered from w_k: √(8 w_k (I − 1)) / (1 − w_k).
pub fn distance_from_start(w: &Float, pair: &CirclePair) -> Float {
    let b = pair.bits();
    let i_minus_1 = Float::with_val(b, pair.invariant() - 1u32);
    let num = (Float::with_val(b, w * 8u32) * i_minus_1).sqrt();
    num / Float::with_val(b, 1u32 - w)
}

/// An almost-closed polygon record: index q, γ_q = √(w_q / c) and the curve
/// ordinate y_q of the point (w_q, w_{q+1}).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTriple {
    pub q: Integer,
    pub gamma: Float,
    pub y: Float,
}

impl RecordTriple {
    /// w_q = c γ_q².
    pub fn w(&self, pair: &CirclePair) -> Float {
        Float::with_val(pair.bits(), self.gamma.square_ref()) * pair.c()
    }
}

/// Result of a baby-step scan.
#[derive(Debug, Clone)]
pub enum ScanOutcome {
    /// The record γ fell below the stopping threshold.
    Converged { records: Vec<RecordTriple>, steps: u64 },
    /// γ_order vanished to working precision: the polygon closes after
    /// `order` sides for every starting vertex.
    Closed { order: u64, records: Vec<RecordTriple> },
}

impl ScanOutcome {
    /// Records in increasing q. The first entry is always the q₀ = 1 seed
    /// (γ₁ = 1).
    pub fn records(&self) -> &[RecordTriple] {
        match self {
            ScanOutcome::Converged { records, .. } | ScanOutcome::Closed { records, .. } => records,
        }
    }

    pub fn into_records(self) -> Vec<RecordTriple> {
        match self {
            ScanOutcome::Converged { records, .. } | ScanOutcome::Closed { records, .. } => records,
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            ScanOutcome::Converged { steps, .. } => *steps,
            ScanOutcome::Closed { order, .. } => *order,
        }
    }
}

/// γ recurrence: γ₁ = 1, γ₂ = 2r/(1 − c²),
/// γ_{k+1} = |1 − γ_k²| / ((1 − c²γ_k²) γ_{k−1}).
#[derive(Debug, Clone)]
pub struct GammaWalk<'a> {
    pair: &'a CirclePair,
    c2: Float,
    prev: Float,
    cur: Float,
    index: u64,
}

impl<'a> GammaWalk<'a> {
    pub fn new(pair: &'a CirclePair) -> Self {
        let b = pair.bits();
        let c2 = Float::with_val(b, pair.c().square_ref());
        let gamma2 = Float::with_val(b, pair.r() * 2u32) / Float::with_val(b, 1u32 - &c2);
        GammaWalk {
            pair,
            c2,
            prev: Float::with_val(b, 1u32),
            cur: gamma2,
            index: 2,
        }
    }

    /// Index k of the current γ_k.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn current(&self) -> &Float {
        &self.cur
    }

    pub fn previous(&self) -> &Float {
        &self.prev
    }

    /// γ_{k+1} from (γ_{k−1}, γ_k) without advancing.
    pub fn peek_next(&self) -> Float {
        let b = self.pair.bits();
        let g2 = Float::with_val(b, self.cur.square_ref());
        let num = Float::with_val(b, 1u32 - &g2).abs();
        let den = Float::with_val(b, 1u32 - Float::with_val(b, &self.c2 * &g2)) * &self.prev;
        num / den
    }

    pub fn advance(&mut self) -> &Float {
        let next = self.peek_next();
        self.prev = std::mem::replace(&mut self.cur, next);
        self.index += 1;
        &self.cur
    }
}

/// Ordinate y_k of the point (w_k, w_{k+1}) with w = cγ².
pub(crate) fn record_ordinate(gamma: &Float, gamma_next: &Float, pair: &CirclePair) -> Float {
    let b = pair.bits();
    let z = Float::with_val(b, gamma.square_ref()) * pair.c();
    let w = Float::with_val(b, gamma_next.square_ref()) * pair.c();
    curve::ordinate(&z, &w, pair)
}

fn gamma_at(pair: &CirclePair, k: u64) -> Float {
    if k == 1 {
        return Float::with_val(pair.bits(), 1u32);
    }
    let mut walk = GammaWalk::new(pair);
    while walk.index() < k {
        walk.advance();
    }
    walk.current().clone()
}

/// γ below 10^(−working_digits/2) counts as an exact zero: the polygon closes.
pub fn closure_threshold(pair: &CirclePair) -> Float {
    pow10(pair.bits(), -(pair.precision().digits() as i32) / 2)
}

/// Scans γ_k for strict record minima, the best-approximation denominators
/// of θ, until the record falls below `eps_stop`.
pub fn baby_step_scan(pair: &CirclePair, eps_stop: &Float, max_iter: u64) -> Result<ScanOutcome> {
    let precision = pair.precision();
    let b = precision.bits();
    let closure = closure_threshold(pair);
    let tie = precision.tolerance(5);
    let bound = (!pair.is_concentric()).then(|| pair.w_bound());

    let mut walk = GammaWalk::new(pair);
    let one = Float::with_val(b, 1u32);
    let mut records = vec![RecordTriple {
        q: Integer::from(1),
        y: record_ordinate(&one, walk.current(), pair),
        gamma: one,
    }];
    let mut best_index = 1u64;

    loop {
        let k = walk.index();
        if k > max_iter {
            return Err(Error::budget(
                max_iter,
                "baby-step scan did not reach the stopping threshold",
            ));
        }
        let gamma = walk.current().clone();
        if gamma < closure {
            return Ok(ScanOutcome::Closed { order: k, records });
        }
        if let Some(bound) = &bound {
            let w = Float::with_val(b, gamma.square_ref()) * pair.c();
            if w <= 0 || w >= *bound {
                return Err(Error::Consistency(format!(
                    "w_{k} = {:e} outside (0, I - sqrt(I^2 - 1))",
                    w.to_f64()
                )));
            }
        }
        let eps = &records.last().expect("seed record").gamma;
        let gap = Float::with_val(b, &gamma - eps);
        let is_record = if Float::with_val(b, gap.abs_ref()) <= Float::with_val(b, &tie * eps) {
            // Too close to call: re-run both indices at doubled precision.
            let fine = pair.with_precision(precision.doubled());
            gamma_at(&fine, k) < gamma_at(&fine, best_index)
        } else {
            gap.is_sign_negative()
        };
        let next = walk.peek_next();
        if is_record {
            let y = record_ordinate(&gamma, &next, pair);
            let done = gamma < *eps_stop;
            records.push(RecordTriple {
                q: Integer::from(k),
                gamma,
                y,
            });
            best_index = k;
            if done {
                return Ok(ScanOutcome::Converged { records, steps: k });
            }
        }
        walk.advance();
    }
}

/// Record indices found directly from the vertices: k is a record when
/// 1 − Re z_k (equivalently |z_k − 1|) is a strict new minimum. Includes k = 1.
pub fn vertex_records(pair: &CirclePair, max_index: u64) -> Result<Vec<u64>> {
    let b = pair.bits();
    let mut walk = VertexWalk::new(pair);
    let mut best: Option<Float> = None;
    let mut out = Vec::new();
    while walk.index() < max_index {
        let z = walk.advance()?;
        let gap = Float::with_val(b, 1u32 - &z.re);
        if best.as_ref().is_none_or(|m| gap < *m) {
            out.push(walk.index());
            best = Some(gap);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p40() -> Precision {
        Precision::from_digits(40)
    }

    fn standard_pair() -> CirclePair {
        CirclePair::from_decimal("0.5", "0.2", p40()).unwrap()
    }

    #[test]
    fn pencil_invariant_values() {
        let p = p40();
        let i = pencil_invariant(&p.parse("0.5").unwrap(), &p.parse("0.2").unwrap()).unwrap();
        assert!(Float::with_val(p.bits(), &i - p.parse("1.21").unwrap()).abs() < 1e-38);
        let i = pencil_invariant(&p.parse("0.2").unwrap(), &p.parse("0.48").unwrap()).unwrap();
        assert!(Float::with_val(p.bits(), &i - p.parse("2.024").unwrap()).abs() < 1e-38);
    }

    #[test]
    fn tangent_circles_rejected() {
        let p = p40();
        let err = pencil_invariant(&p.parse("0.5").unwrap(), &p.parse("0.5").unwrap());
        assert!(matches!(err, Err(Error::Domain(_))));
        assert!(CirclePair::from_decimal("0", "0.3", p).is_err());
        assert!(CirclePair::from_decimal("0.3", "-0.1", p).is_err());
    }

    #[test]
    fn integral_parameters_reproduce_invariant() {
        let p = Precision::working(24);
        let psi = p.pi() / 3u32;
        let spec = IntegralSpec::new(psi, p.parse("0.5").unwrap(), 24).unwrap();
        let pair = params_from_integral(&spec).unwrap();
        assert!((pair.c().to_f64() - 0.138998).abs() < 1e-6);
        assert!((pair.r().to_f64() - 0.430501).abs() < 1e-6);
        let err = Float::with_val(pair.bits(), pair.invariant() - 3u32).abs();
        assert!(err < pair.precision().tolerance(5));
    }

    #[test]
    fn integral_parameters_reject_degenerate_psi() {
        let p = Precision::working(24);
        let psi = p.pi() / 2u32 - p.parse("1e-40").unwrap();
        let spec = IntegralSpec::new(psi, p.parse("0.5").unwrap(), 24).unwrap();
        assert!(matches!(params_from_integral(&spec), Err(Error::Domain(_))));
    }

    #[test]
    fn chord_residual_at_start_and_symmetric() {
        let pair = standard_pair();
        let (zm1, z0) = initial_vertices(&pair);
        let z1 = zm1.conj();
        assert!((pair.first_cos().to_f64() + 0.68).abs() < 1e-15);
        assert!(chord_residual(&z0, &z1, &pair).abs() < 1e-36);
        let a = BigComplex::with_val(pair.bits(), 0.3, 0.7);
        let b = BigComplex::with_val(pair.bits(), -0.2, 0.1);
        let d = &chord_residual(&a, &b, &pair) - &chord_residual(&b, &a, &pair);
        assert!(d.abs() < 1e-36);
    }

    #[test]
    fn first_vertex_matches_initialisation() {
        let pair = standard_pair();
        let (zm1, z0) = initial_vertices(&pair);
        let z1 = next_vertex(&zm1, &z0, &pair).unwrap();
        assert!((z1.re.to_f64() + 0.68).abs() < 1e-15);
        assert!(z1.im > 0);
    }

    #[test]
    fn concentric_vertex_map_is_rotation() {
        let p = p40();
        let pair = CirclePair::concentric(p.real(0.6), p).unwrap();
        let prev = BigComplex::new(p.parse("0.6").unwrap(), p.parse("-0.8").unwrap());
        let cur = BigComplex::one(p.bits());
        let next = next_vertex(&prev, &cur, &pair).unwrap();
        let expected = &cur.square() / &prev;
        assert!((&next - &expected).abs() < 1e-38);
    }

    #[test]
    fn chapple_triangle_closes_from_any_start() {
        let p = p40();
        let r = p.parse("0.48").unwrap();
        let c = Float::with_val(p.bits(), 1u32 - Float::with_val(p.bits(), &r * 2u32)).sqrt();
        let pair = CirclePair::new(c, r, p).unwrap();
        for start in [0.3f64, 1.7, -2.2] {
            let (s, co) = p.real(start).sin_cos(p.zero());
            let z0 = BigComplex::new(co, s);
            let (zm1, _) = tangent_partners(&z0, &pair);
            assert!(chord_residual(&z0, &zm1, &pair).abs() < 1e-35);
            let mut walk = VertexWalk::starting_at(&pair, zm1, z0.clone());
            for _ in 0..3 {
                walk.advance().unwrap();
            }
            assert!((walk.current() - &z0).abs() < 1e-35, "start {start}");
        }
    }

    #[test]
    fn cos_phi_from_w_values() {
        let pair = standard_pair();
        let p = pair.precision();
        let cos1 = cos_phi_from_w(&p.parse("0.5").unwrap(), &pair).unwrap();
        assert!((cos1.to_f64() + 0.68).abs() < 1e-15);
        let w2 = p.parse("0.16").unwrap() / p.parse("1.125").unwrap();
        let cos2 = cos_phi_from_w(&w2, &pair).unwrap();
        assert!((cos2.to_f64() - 0.837_638).abs() < 1e-5);
        let dist = distance_from_start(&w2, &pair);
        assert!((dist.to_f64() - 0.570).abs() < 5e-4);
        let tiny = cos_phi_from_w(&p.parse("1e-30").unwrap(), &pair).unwrap();
        assert!(Float::with_val(p.bits(), 1u32 - tiny) < 1e-28);
        assert!(cos_phi_from_w(&p.parse("0.9").unwrap(), &pair).is_err());
        assert!(cos_phi_from_w(&p.zero(), &pair).is_err());
    }

    #[test]
    fn standard_pair_scan_prefix() {
        let pair = standard_pair();
        let eps = pair.precision().parse("0.001").unwrap();
        let out = baby_step_scan(&pair, &eps, 10_000).unwrap();
        let qs: Vec<u64> = out.records().iter().map(|r| r.q.to_u64().unwrap()).take(11).collect();
        assert_eq!(qs, vec![1, 2, 5, 7, 12, 31, 43, 74, 117, 191, 308]);
        for w in out.records().windows(2) {
            assert!(w[1].gamma < w[0].gamma);
        }
        // γ₂ = 2·0.2/(1 − 0.25) < 1: q₁ = 2.
        assert!((out.records()[1].gamma.to_f64() - 0.4 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn chapple_scan_signals_closure_at_three() {
        let p = p40();
        let r = p.parse("0.3").unwrap();
        let c = Float::with_val(p.bits(), 1u32 - Float::with_val(p.bits(), &r * 2u32)).sqrt();
        let pair = CirclePair::new(c, r, p).unwrap();
        let out = baby_step_scan(&pair, &p.parse("1e-6").unwrap(), 100).unwrap();
        assert!(matches!(out, ScanOutcome::Closed { order: 3, .. }));
    }

    #[test]
    fn scan_budget_exhaustion() {
        let pair = standard_pair();
        let eps = pair.precision().parse("1e-9").unwrap();
        let err = baby_step_scan(&pair, &eps, 50).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn vertex_detector_agrees_on_prefix() {
        let pair = standard_pair();
        let qs = vertex_records(&pair, 400).unwrap();
        assert_eq!(qs, vec![1, 2, 5, 7, 12, 31, 43, 74, 117, 191, 308]);
    }
}
