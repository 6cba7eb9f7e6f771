//! Polygons interscribed between the unit circle and the boundary generated by
//! the 3×3 upper-triangular matrix
//!
//! ```text
//!     | c1  b1  a  |
//! T = | 0   c2  b2 |
//!     | 0   0   c3 |
//! ```
//!
//! The boundary is traced by an eigenvalue λ(φ) of Re(e^{−iφ}T), whose
//! characteristic polynomial is
//! `F(λ, C) = λ³ − α₁Cλ² + α₂C²λ − α₄C³ − α₃λ + α₅C` with C = cos φ.
//! Vertices are produced by the derivative-free vertex procedure: each step
//! rotates the current vertex by twice the half-angle arccos λ_k and solves a
//! quadratic in λ² for the next tangent chord. Along the way the density
//! h(z_k) = Π (z_k − ζ_k)/(ζ_k − z_{k−1}) is accumulated, which separates
//! regular (dense, bounded h) from attractive or repelling behaviour.

use std::collections::VecDeque;

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::cf::{recover_numerators_lenient, ConvergentTable};
use crate::complex::BigComplex;
use crate::error::{Error, Result};
use crate::precision::{pow10, to_decimal, Precision};
use crate::report::VerdictReport;
use crate::roots::bracketed_roots;

/// Default working precision of trajectories, in decimal digits.
pub const DEFAULT_DIGITS: u32 = 40;
/// Smallest working precision accepted for trajectories.
pub const MIN_DIGITS: u32 = 34;
/// Default number of steps for classification.
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Smallest budget accepted by [`classify_dynamics`].
pub const MIN_CLASSIFY_BUDGET: u64 = 10_000;
/// Number of φ samples in the containment check.
const INSIDE_GRID: usize = 720;
/// Eigenvalue gap below which a direction is reported as degenerate.
const DEGENERACY_GAP: f64 = 1e-8;
/// Steps at the start of a run whose determinant residual is always checked.
const DENSE_RESIDUAL_STEPS: u64 = 1000;
/// Later steps are residual-checked at this stride.
const RESIDUAL_STRIDE: u64 = 256;

/// Starting vertex of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum StartCase {
    /// z₀ = 1, case #3.
    PositiveReal,
    /// z₀ = −1, case #4.
    NegativeReal,
    /// z₀ = √(1 − α₃) + i√α₃, case #5.
    Tilted,
    /// Any unit vertex; the first chord is found by a root search.
    Custom(BigComplex),
}

impl StartCase {
    /// Maps the procedure's case labels 3, 4 and 5.
    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            3 => Ok(StartCase::PositiveReal),
            4 => Ok(StartCase::NegativeReal),
            5 => Ok(StartCase::Tilted),
            _ => Err(Error::domain(format!("start case must be 3, 4 or 5, got {label}"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            StartCase::PositiveReal => "3".into(),
            StartCase::NegativeReal => "4".into(),
            StartCase::Tilted => "5".into(),
            StartCase::Custom(z) => format!("z0={}", format_complex(z, 20)),
        }
    }
}

/// Matrix entries, derived coefficients α₁..α₅ and the start case.
#[derive(Debug, Clone, PartialEq)]
pub struct NRConfig {
    a: Float,
    b1: Float,
    b2: Float,
    c1: Float,
    c2: Float,
    c3: Float,
    alphas: [Float; 5],
    start: StartCase,
    precision: Precision,
}

/// Entries (a, b1, b2, c1, c2, c3) as decimal strings.
#[derive(Debug, Clone, Copy)]
pub struct MatrixEntries<'s> {
    pub a: &'s str,
    pub b1: &'s str,
    pub b2: &'s str,
    pub c1: &'s str,
    pub c2: &'s str,
    pub c3: &'s str,
}

/// α₁..α₅ from the matrix entries.
pub fn derive_alphas(entries: [&Float; 6], bits: u32) -> [Float; 5] {
    let [a, b1, b2, c1, c2, c3] = entries;
    let f = |x: Float| Float::with_val(bits, x);
    let alpha1 = f(Float::with_val(bits, c1 + c2) + c3);
    let alpha2 = f(Float::with_val(bits, c1 * c2) + Float::with_val(bits, c2 * c3) + Float::with_val(bits, c3 * c1));
    let alpha3 = f((Float::with_val(bits, a.square_ref())
        + Float::with_val(bits, b1.square_ref())
        + Float::with_val(bits, b2.square_ref()))
        / 4u32);
    let alpha4 = f(Float::with_val(bits, c1 * c2) * c3);
    let alpha5 = f((Float::with_val(bits, c1 * Float::with_val(bits, b2.square_ref()))
        + Float::with_val(bits, c2 * Float::with_val(bits, a.square_ref()))
        + Float::with_val(bits, c3 * Float::with_val(bits, b1.square_ref()))
        - Float::with_val(bits, a * b1) * b2)
        / 4u32);
    [alpha1, alpha2, alpha3, alpha4, alpha5]
}

impl NRConfig {
    /// Builds the configuration and checks that the generated boundary lies
    /// strictly inside the unit circle on a φ grid.
    pub fn new(entries: [Float; 6], start: StartCase, precision: Precision) -> Result<Self> {
        if precision.digits() < MIN_DIGITS {
            return Err(Error::domain(format!(
                "trajectories need at least {MIN_DIGITS} digits, got {}",
                precision.digits()
            )));
        }
        let bits = precision.bits();
        let [a, b1, b2, c1, c2, c3] = entries.map(|x| Float::with_val(bits, x));
        let alphas = derive_alphas([&a, &b1, &b2, &c1, &c2, &c3], bits);
        let start = match start {
            StartCase::Custom(z) => {
                let z = BigComplex::new(Float::with_val(bits, &z.re), Float::with_val(bits, &z.im));
                let drift = Float::with_val(bits, z.abs() - 1u32).abs();
                if drift > 1e-6 {
                    return Err(Error::domain(format!(
                        "custom start must lie on the unit circle (||z0| - 1| = {:e})",
                        drift.to_f64()
                    )));
                }
                StartCase::Custom(z.normalized())
            }
            other => other,
        };
        let cfg = NRConfig {
            a,
            b1,
            b2,
            c1,
            c2,
            c3,
            alphas,
            start,
            precision,
        };
        let radius = cfg.max_support(INSIDE_GRID);
        if radius >= 1 {
            return Err(Error::domain(format!(
                "the generated boundary reaches the unit circle (max support {})",
                to_decimal(&radius, 12)
            )));
        }
        if cfg.start == StartCase::Tilted && cfg.alphas[2] >= 1 {
            return Err(Error::domain("start case 5 needs alpha3 < 1"));
        }
        Ok(cfg)
    }

    pub fn from_decimal(entries: MatrixEntries<'_>, start: StartCase, precision: Precision) -> Result<Self> {
        let p = |s: &str| precision.parse(s);
        Self::new(
            [
                p(entries.a)?,
                p(entries.b1)?,
                p(entries.b2)?,
                p(entries.c1)?,
                p(entries.c2)?,
                p(entries.c3)?,
            ],
            start,
            precision,
        )
    }

    /// Entries in the order a, b1, b2, c1, c2, c3.
    pub fn entries(&self) -> [&Float; 6] {
        [&self.a, &self.b1, &self.b2, &self.c1, &self.c2, &self.c3]
    }

    pub fn alphas(&self) -> &[Float; 5] {
        &self.alphas
    }

    pub fn start(&self) -> &StartCase {
        &self.start
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn bits(&self) -> u32 {
        self.precision.bits()
    }

    pub fn with_start(&self, start: StartCase) -> Result<Self> {
        let entries = [
            self.a.clone(),
            self.b1.clone(),
            self.b2.clone(),
            self.c1.clone(),
            self.c2.clone(),
            self.c3.clone(),
        ];
        Self::new(entries, start, self.precision)
    }

    /// F(λ, C).
    pub fn characteristic(&self, lambda: &Float, cos: &Float) -> Float {
        let b = self.bits();
        let [a1, a2, a3, a4, a5] = &self.alphas;
        // Horner in λ: ((λ − α₁C)λ + α₂C² − α₃)λ − α₄C³ + α₅C
        let c2 = Float::with_val(b, cos.square_ref());
        let mut acc = Float::with_val(b, lambda - Float::with_val(b, a1 * cos));
        acc *= lambda;
        acc += Float::with_val(b, a2 * &c2);
        acc -= a3;
        acc *= lambda;
        acc -= Float::with_val(b, a4 * &c2) * cos;
        acc += Float::with_val(b, a5 * cos);
        acc
    }

    /// (∂F/∂λ, ∂F/∂C).
    fn characteristic_gradient(&self, lambda: &Float, cos: &Float) -> (Float, Float) {
        let b = self.bits();
        let [a1, a2, a3, a4, a5] = &self.alphas;
        let l2 = Float::with_val(b, lambda.square_ref());
        let c2 = Float::with_val(b, cos.square_ref());
        let lc = Float::with_val(b, lambda * cos);
        let mut f_l = Float::with_val(b, &l2 * 3u32);
        f_l -= Float::with_val(b, a1 * &lc) * 2u32;
        f_l += Float::with_val(b, a2 * &c2);
        f_l -= a3;
        let mut f_c = Float::with_val(b, -Float::with_val(b, a1 * &l2));
        f_c += Float::with_val(b, a2 * &lc) * 2u32;
        f_c -= Float::with_val(b, a4 * &c2) * 3u32;
        f_c += a5;
        (f_l, f_c)
    }

    /// The three eigenvalues of Re(e^{−iφ}T) for C = cos φ, largest first.
    pub fn eigenvalues(&self, cos: &Float) -> [Float; 3] {
        let b = self.bits();
        let [a1, a2, a3, a4, a5] = &self.alphas;
        // λ³ + Bλ² + Cλ + D
        let bb = Float::with_val(b, -Float::with_val(b, a1 * cos));
        let c2 = Float::with_val(b, cos.square_ref());
        let cc = Float::with_val(b, a2 * &c2) - a3;
        let dd = Float::with_val(b, a5 * cos) - Float::with_val(b, a4 * &c2) * cos;
        let shift = Float::with_val(b, &bb / 3u32);
        // Depressed cubic x³ + px + q with λ = x − B/3.
        let p = Float::with_val(b, &cc - Float::with_val(b, bb.square_ref()) / 3u32);
        let mut q = Float::with_val(b, bb.clone().pow(3u32) * 2u32) / 27u32;
        q -= Float::with_val(b, &bb * &cc) / 3u32;
        q += &dd;
        if p >= 0 {
            // Hermitian matrices have real eigenvalues, so p ≥ 0 only for a
            // triple root (up to rounding).
            let x = Float::with_val(b, -&shift);
            return [x.clone(), x.clone(), x];
        }
        let m = Float::with_val(b, -Float::with_val(b, &p / 3u32)).sqrt() * 2u32;
        // cos(3θ) = 3q/(p·m)
        let mut arg = Float::with_val(b, &q * 3u32) / Float::with_val(b, &p * &m);
        arg.clamp_mut(&-1i32, &1i32);
        let theta = arg.acos() / 3u32;
        let third = Float::with_val(b, rug::float::Constant::Pi) * 2u32 / 3u32;
        let mut roots: [Float; 3] = std::array::from_fn(|k| {
            let angle = Float::with_val(b, &theta - Float::with_val(b, &third * k as u32));
            Float::with_val(b, &m * angle.cos()) - &shift
        });
        roots.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
        roots
    }

    /// Largest eigenvalue of Re(e^{−iφ}T).
    pub fn support(&self, phi: &Float) -> Float {
        let cos = Float::with_val(self.bits(), phi.cos_ref());
        let [top, _, _] = self.eigenvalues(&cos);
        top
    }

    /// max over a uniform grid of φ of the support function.
    fn max_support(&self, samples: usize) -> Float {
        let b = self.bits();
        let two_pi = self.precision.pi() * 2u32;
        let mut best = Float::with_val(b, rug::float::Special::NegInfinity);
        for i in 0..samples {
            let phi = Float::with_val(b, &two_pi * i as u32) / samples as u32;
            let s = self.support(&phi);
            if s > best {
                best = s;
            }
        }
        best
    }

    /// |det(T + wzTᵀ − (w + z)I)|, zero when the chord [z, w] is tangent to
    /// the boundary.
    pub fn determinant_residual(&self, z: &BigComplex, w: &BigComplex) -> Float {
        let b = self.bits();
        let wz = w * z;
        let sum = w + z;
        let one_wz = wz.add_real(&Float::with_val(b, 1u32));
        let diag = |c: &Float| &one_wz.scale(c) - &sum;
        let real = |x: &Float| BigComplex::from_real(Float::with_val(b, x));
        let m = [
            [diag(&self.c1), real(&self.b1), real(&self.a)],
            [wz.scale(&self.b1), diag(&self.c2), real(&self.b2)],
            [wz.scale(&self.a), wz.scale(&self.b2), diag(&self.c3)],
        ];
        let minor =
            |r1: usize, r2: usize, c1: usize, c2: usize| &(&m[r1][c1] * &m[r2][c2]) - &(&m[r1][c2] * &m[r2][c1]);
        let t0 = &m[0][0] * &minor(1, 2, 1, 2);
        let t1 = &m[0][1] * &minor(1, 2, 0, 2);
        let t2 = &m[0][2] * &minor(1, 2, 0, 1);
        (&(&t0 - &t1) + &t2).abs()
    }
}

/// A tangent point of the boundary in direction φ.
#[derive(Debug, Clone)]
pub struct SupportPoint {
    /// ζ = (λ + iλ')e^{iφ}.
    pub zeta: BigComplex,
    pub lambda: Float,
    /// λ'(φ) by centred finite differences.
    pub derivative: Float,
    /// Set when the largest eigenvalue is (nearly) multiple on the
    /// difference stencil, so the branch choice is ambiguous. A scalar
    /// matrix is degenerate everywhere, although ζ is still exact there.
    pub degenerate: bool,
}

/// Tangent point of the boundary whose outward normal has angle φ, using the
/// largest eigenvalue branch.
pub fn nr_support_point(cfg: &NRConfig, phi: &Float) -> SupportPoint {
    let b = cfg.bits();
    let step = pow10(b, -(cfg.precision.digits() as i32) / 3);
    let gap_of = |phi: &Float| {
        let cos = Float::with_val(b, phi.cos_ref());
        let [l0, l1, _] = cfg.eigenvalues(&cos);
        let gap = Float::with_val(b, &l0 - &l1);
        (l0, gap)
    };
    let (lambda, gap) = gap_of(phi);
    let (plus, gap_plus) = gap_of(&Float::with_val(b, phi + &step));
    let (minus, gap_minus) = gap_of(&Float::with_val(b, phi - &step));
    let derivative = Float::with_val(b, &plus - &minus) / Float::with_val(b, &step * 2u32);
    let degenerate = [gap, gap_plus, gap_minus].iter().any(|g| *g < DEGENERACY_GAP);
    let (sin, cos) = Float::with_val(b, phi).sin_cos(Float::new(b));
    let zeta = &BigComplex::new(cos, sin) * &BigComplex::new(lambda.clone(), derivative.clone());
    SupportPoint {
        zeta,
        lambda,
        derivative,
        degenerate,
    }
}

/// The chord [z_{k−1}, z_k] produced by one step.
#[derive(Debug, Clone)]
pub struct Chord {
    pub from: BigComplex,
    pub to: BigComplex,
    /// Tangent point on the chord.
    pub zeta: BigComplex,
}

/// State of a trajectory after k steps.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    k: u64,
    cos_psi: Float,
    sin_psi: Float,
    /// λ² for the chord leaving the current vertex.
    lambda_sq: Float,
    h: Float,
    log_h: f64,
    log_h_min: f64,
    log_h_max: f64,
    start: (Float, Float),
    records: Vec<u64>,
    epsilon: Float,
}

impl TrajectoryState {
    /// State at k = 0 for the configured start case, with h(z₀) = 1.
    pub fn initial(cfg: &NRConfig) -> Result<Self> {
        let b = cfg.bits();
        let [a1, a2, a3, a4, a5] = cfg.alphas();
        let one = Float::with_val(b, 1u32);
        let (cos, sin, lambda_sq) = match cfg.start() {
            StartCase::PositiveReal => {
                let den = Float::with_val(b, &one - a1) + a2 - a4;
                (one.clone(), Float::new(b), Float::with_val(b, a3 - a5) / den)
            }
            StartCase::NegativeReal => {
                let den = Float::with_val(b, &one + a1) + a2 + a4;
                (-one.clone(), Float::new(b), Float::with_val(b, a3 + a5) / den)
            }
            StartCase::Tilted => (
                Float::with_val(b, &one - a3).sqrt(),
                Float::with_val(b, a3).sqrt(),
                a3.clone(),
            ),
            StartCase::Custom(z) => {
                let l = first_chord_lambda(cfg, &z.re, &z.im)?;
                (z.re.clone(), z.im.clone(), Float::with_val(b, l.square_ref()))
            }
        };
        Self::from_vertex(cfg, cos, sin, lambda_sq)
    }

    /// State at k = 0 from an arbitrary vertex and the λ² of its outgoing
    /// chord.
    pub fn from_vertex(cfg: &NRConfig, cos_psi: Float, sin_psi: Float, lambda_sq: Float) -> Result<Self> {
        let b = cfg.bits();
        check_lambda_sq(&lambda_sq, 0)?;
        Ok(TrajectoryState {
            k: 0,
            start: (cos_psi.clone(), sin_psi.clone()),
            cos_psi,
            sin_psi,
            lambda_sq,
            h: Float::with_val(b, 1u32),
            log_h: 0.0,
            log_h_min: 0.0,
            log_h_max: 0.0,
            records: Vec::new(),
            epsilon: Float::with_val(b, 10u32),
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn cos_psi(&self) -> &Float {
        &self.cos_psi
    }

    pub fn sin_psi(&self) -> &Float {
        &self.sin_psi
    }

    pub fn lambda_sq(&self) -> &Float {
        &self.lambda_sq
    }

    /// h(z_k), relative to h(z₀) = 1.
    pub fn h(&self) -> &Float {
        &self.h
    }

    pub fn log_h(&self) -> f64 {
        self.log_h
    }

    pub fn log_h_min(&self) -> f64 {
        self.log_h_min
    }

    pub fn log_h_max(&self) -> f64 {
        self.log_h_max
    }

    /// Record indices, starting with k = 1.
    pub fn records(&self) -> &[u64] {
        &self.records
    }

    /// Current record value δ.
    pub fn epsilon(&self) -> &Float {
        &self.epsilon
    }

    pub fn vertex(&self) -> BigComplex {
        BigComplex::new(self.cos_psi.clone(), self.sin_psi.clone())
    }

    /// δ = 1 − cos(ψ_k − ψ₀); |z_k − z₀|² = 2δ.
    pub fn delta(&self) -> Float {
        let b = self.cos_psi.prec();
        let dot = Float::with_val(b, &self.cos_psi * &self.start.0) + Float::with_val(b, &self.sin_psi * &self.start.1);
        Float::with_val(b, 1u32 - dot)
    }

    /// One step of the vertex procedure. Returns the new chord with its
    /// tangent point; h is not touched (see [`TrajectoryState::h_update`]).
    pub fn step(&mut self, cfg: &NRConfig) -> Result<Chord> {
        let b = cfg.bits();
        let [a1, a2, a3, a4, a5] = cfg.alphas();
        let l2 = &self.lambda_sq;
        let l = Float::with_val(b, l2.sqrt_ref());
        let s = Float::with_val(b, 1u32 - l2).sqrt();
        let m = Float::with_val(b, l2 * 2u32) - 1u32;
        let two_ls = Float::with_val(b, &l * &s) * 2u32;
        let (cp, sp) = (&self.cos_psi, &self.sin_psi);
        let cos = Float::with_val(b, &m * cp) - Float::with_val(b, &two_ls * sp);
        let sin = Float::with_val(b, &m * sp) + Float::with_val(b, &two_ls * cp);

        // Tangent point of the chord: the outward normal is at ψ_{k−1} + t
        // with cos t = λ_k, and λ' follows from F(λ(φ), cos φ) = 0.
        let cf = Float::with_val(b, cp * &l) - Float::with_val(b, sp * &s);
        let sf = Float::with_val(b, sp * &l) + Float::with_val(b, cp * &s);
        let (f_l, f_c) = cfg.characteristic_gradient(&l, &cf);
        if f_l.is_zero() {
            return Err(Error::Consistency(format!(
                "multiple eigenvalue at the tangent direction of step {}",
                self.k + 1
            )));
        }
        let dl = Float::with_val(b, &f_c * &sf) / &f_l;
        let from = BigComplex::new(cp.clone(), sp.clone());
        let zeta = &BigComplex::new(cf, sf) * &BigComplex::new(l, dl);

        let c2 = Float::with_val(b, cos.square_ref());
        let s2 = Float::with_val(b, sin.square_ref());
        // β₁ = 1 − α₁C + α₂(2C² − 1) − α₄(4C³ − 3C)
        let mut beta1 = Float::with_val(b, 1u32) - Float::with_val(b, a1 * &cos);
        beta1 += Float::with_val(b, a2 * Float::with_val(b, Float::with_val(b, &c2 * 2u32) - 1u32));
        let cheb3 = Float::with_val(b, Float::with_val(b, &c2 * 4u32) - 3u32) * &cos;
        beta1 -= Float::with_val(b, a4 * &cheb3);
        // β₂ = α₅C − α₃ + α₂S² − 3α₄CS²
        let mut beta2 = Float::with_val(b, a5 * &cos) - a3;
        beta2 += Float::with_val(b, a2 * &s2);
        beta2 -= Float::with_val(b, a4 * Float::with_val(b, &cos * &s2)) * 3u32;
        // β₃ = (α₄ − α₁ + 2α₂C − 4α₄C²)S
        let mut beta3 = Float::with_val(b, a4 - a1);
        beta3 += Float::with_val(b, a2 * &cos) * 2u32;
        beta3 -= Float::with_val(b, a4 * &c2) * 4u32;
        beta3 *= &sin;
        // β₄ = (α₅ − α₄S²)S
        let beta4 = Float::with_val(b, a5 - Float::with_val(b, a4 * &s2)) * &sin;

        let b3sq = Float::with_val(b, beta3.square_ref());
        let den = Float::with_val(b, beta1.square_ref()) + &b3sq;
        let mut num = Float::with_val(b, &b3sq / 2u32);
        num -= Float::with_val(b, &beta1 * &beta2);
        num -= Float::with_val(b, &beta3 * &beta4);
        let p = Float::with_val(b, &num / &den) - Float::with_val(b, l2 / 2u32);
        let q = Float::with_val(b, beta4.square_ref()) / Float::with_val(b, &den * l2);
        let disc = Float::with_val(b, p.square_ref()) - &q;
        if disc.is_sign_negative() && !disc.is_zero() {
            return Err(Error::precision(format!(
                "step {}: p^2 - q = {:e} < 0, the trajectory left the valid branch",
                self.k + 1,
                disc.to_f64()
            )));
        }
        let next_l2 = p + disc.sqrt();
        check_lambda_sq(&next_l2, self.k + 1)?;

        self.cos_psi = cos;
        self.sin_psi = sin;
        self.lambda_sq = next_l2;
        self.k += 1;
        Ok(Chord {
            from,
            to: self.vertex(),
            zeta,
        })
    }

    /// Multiplies h by (z_k − ζ)/(ζ − z_{k−1}), which must be a positive
    /// real for a correctly located tangent point.
    pub fn h_update(&mut self, chord: &Chord) -> Result<()> {
        let ratio = tangency_ratio(chord)?;
        self.log_h += ratio.to_f64().ln();
        self.h *= &ratio;
        self.log_h_min = self.log_h_min.min(self.log_h);
        self.log_h_max = self.log_h_max.max(self.log_h);
        Ok(())
    }

    /// Records k when δ_k is a new strict minimum (ε starts at 10).
    fn update_records(&mut self) {
        let delta = self.delta();
        if delta < self.epsilon {
            self.epsilon = delta;
            self.records.push(self.k);
        }
    }

    /// Step, h update and record bookkeeping.
    pub fn advance(&mut self, cfg: &NRConfig) -> Result<Chord> {
        let chord = self.step(cfg)?;
        self.h_update(&chord)?;
        self.update_records();
        Ok(chord)
    }
}

fn check_lambda_sq(l2: &Float, k: u64) -> Result<()> {
    if *l2 <= 0 || *l2 >= 1 || l2.is_nan() {
        return Err(Error::precision(format!(
            "lambda^2 = {} left (0, 1) at step {k}",
            to_decimal(l2, 12)
        )));
    }
    Ok(())
}

/// (z_k − ζ)/(ζ − z_{k−1}) as a positive real.
pub fn tangency_ratio(chord: &Chord) -> Result<Float> {
    let b = chord.zeta.prec();
    let ratio = &(&chord.to - &chord.zeta) / &(&chord.zeta - &chord.from);
    let tol = pow10(b, -(f64::from(b) / std::f64::consts::LOG2_10 / 2.0) as i32);
    let scale = ratio.abs();
    if ratio.re <= 0 || Float::with_val(b, ratio.im.abs_ref()) > Float::with_val(b, &scale * &tol) {
        return Err(Error::Consistency(format!(
            "tangent point is not between the chord ends (ratio {:e}{:+e}i)",
            ratio.re.to_f64(),
            ratio.im.to_f64()
        )));
    }
    Ok(ratio.re)
}

/// λ for the first chord from z₀ = (cos ψ₀, sin ψ₀): the largest l ∈ (0, 1)
/// with F(l, cos(ψ₀ + arccos l)) = 0.
fn first_chord_lambda(cfg: &NRConfig, cos0: &Float, sin0: &Float) -> Result<Float> {
    let b = cfg.bits();
    let g = |l: &Float| {
        let s = Float::with_val(b, 1u32 - Float::with_val(b, l.square_ref())).sqrt();
        let cos = Float::with_val(b, l * cos0) - Float::with_val(b, &s * sin0);
        cfg.characteristic(l, &cos)
    };
    bracketed_roots(g, 1e-9, 1.0 - 1e-12, 4000, b)
        .into_iter()
        .next()
        .ok_or_else(|| Error::domain("no tangent chord leaves the custom start vertex"))
}

fn format_complex(z: &BigComplex, sig: usize) -> String {
    format!("{},{}", to_decimal(&z.re, sig), to_decimal(&z.im, sig))
}

/// Result of a plain run: records, convergents and h statistics.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: u64,
    /// Record indices including the k = 1 seed.
    pub records: Vec<u64>,
    /// Convergents from the records after the seed, with provisional head
    /// rows where the early records are not best-approximation denominators.
    pub table: Option<ConvergentTable>,
    pub log_h_min: f64,
    pub log_h_max: f64,
    /// Largest determinant residual over the checked steps.
    pub max_residual: Float,
    pub final_state: TrajectoryState,
}

impl RunSummary {
    pub fn denominators(&self) -> Vec<Integer> {
        self.records.iter().skip(1).map(|&q| Integer::from(q)).collect()
    }
}

fn residual_due(k: u64) -> bool {
    k <= DENSE_RESIDUAL_STEPS || k.is_multiple_of(RESIDUAL_STRIDE)
}

/// Runs `budget` steps from the configured start, calling `observer` after
/// every step (and once for k = 0).
pub fn run_records(cfg: &NRConfig, budget: u64, observer: &mut dyn FnMut(&TrajectoryState)) -> Result<RunSummary> {
    drive(cfg, budget, observer, |_, _| ())
}

fn drive(
    cfg: &NRConfig,
    budget: u64,
    observer: &mut dyn FnMut(&TrajectoryState),
    mut inspect: impl FnMut(&TrajectoryState, &Chord),
) -> Result<RunSummary> {
    let b = cfg.bits();
    let tol = cfg.precision.tolerance(12);
    let mut state = TrajectoryState::initial(cfg)?;
    observer(&state);
    let mut max_residual = Float::new(b);
    for _ in 0..budget {
        let chord = state.advance(cfg)?;
        if residual_due(state.k) {
            let res = cfg.determinant_residual(&chord.from, &chord.to);
            if res > tol {
                return Err(Error::precision(format!(
                    "tangency determinant {:e} at step {}",
                    res.to_f64(),
                    state.k
                )));
            }
            if res > max_residual {
                max_residual = res;
            }
        }
        inspect(&state, &chord);
        observer(&state);
    }
    let records = state.records.clone();
    let qs: Vec<Integer> = records.iter().skip(1).map(|&q| Integer::from(q)).collect();
    let table = if qs.is_empty() {
        None
    } else {
        recover_numerators_lenient(&qs).ok()
    };
    Ok(RunSummary {
        steps: state.k,
        records,
        table,
        log_h_min: state.log_h_min,
        log_h_max: state.log_h_max,
        max_residual,
        final_state: state,
    })
}

/// Behaviour of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    Regular,
    Attractive,
    Repelling,
    Undecided,
}

impl DynamicsKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DynamicsKind::Regular => "regular",
            DynamicsKind::Attractive => "attractive",
            DynamicsKind::Repelling => "repelling",
            DynamicsKind::Undecided => "undecided",
        }
    }
}

/// Where a detected cycle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleSource {
    /// The trajectory returned to z₀.
    ReturnToStart,
    /// The tail of the trajectory repeats with a short period.
    Tail,
}

/// Statistics behind a verdict.
#[derive(Debug, Clone)]
pub struct DynamicsEvidence {
    pub steps: u64,
    pub log_h_min: f64,
    pub log_h_max: f64,
    /// Least-squares slope of log h per step over the second half of the run.
    pub slope: f64,
    /// slope × length of the fitted window.
    pub trend: f64,
    pub cycle_source: Option<CycleSource>,
    /// |z_N − z₀| after one traversal of the confirmed cycle.
    pub closure_distance: Option<f64>,
    /// Newton corrections applied to the cycle start before it closed.
    pub refinements: u32,
    /// For P_N = 1 within resolution: distance to the cycle start after many
    /// traversals divided by the initial offset, for a start displaced
    /// forward and backward along the circle.
    pub side_ratios: Option<(f64, f64)>,
    /// Tail gaps |z_k − z_{k−N}| at the middle, at three quarters and at
    /// the end of the run, for cycles found in the tail.
    pub tail_gaps: Option<[f64; 3]>,
}

impl DynamicsEvidence {
    /// Some side of the cycle attracts nearby starts.
    pub fn one_sided_attraction(&self) -> bool {
        let sides = self
            .side_ratios
            .is_some_and(|(fwd, back)| fwd < thresholds::SIDE_CONTRACTION || back < thresholds::SIDE_CONTRACTION);
        sides || self.tail_converges()
    }

    /// The trajectory stayed near the cycle over the second half of the run
    /// and the tail gap kept shrinking. A single slow passage near a cycle
    /// that does not exist shows a small gap at one point only.
    pub fn tail_converges(&self) -> bool {
        use thresholds::*;
        self.tail_gaps.is_some_and(|[mid, late, end]| {
            mid < TAIL_RADIUS && mid > MEASURABLE_GAP && late < mid && end < late && end < SIDE_CONTRACTION * mid
        })
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsVerdict {
    pub kind: DynamicsKind,
    pub period: Option<u64>,
    /// Product of the tangency ratios over one traversal of the cycle.
    pub product: Option<Float>,
    /// Vertices of the detected cycle in traversal order.
    pub cycle: Vec<BigComplex>,
    pub evidence: DynamicsEvidence,
}

impl DynamicsVerdict {
    pub fn to_report(&self) -> VerdictReport {
        let e = &self.evidence;
        let mut evidence = std::collections::BTreeMap::new();
        evidence.insert("steps".into(), e.steps.to_string());
        evidence.insert("log_h_min".into(), fmt_f64(e.log_h_min));
        evidence.insert("log_h_max".into(), fmt_f64(e.log_h_max));
        evidence.insert("log_h_slope".into(), fmt_f64(e.slope));
        evidence.insert("log_h_trend".into(), fmt_f64(e.trend));
        if let Some(src) = e.cycle_source {
            let s = match src {
                CycleSource::ReturnToStart => "return_to_start",
                CycleSource::Tail => "tail",
            };
            evidence.insert("cycle_source".into(), s.into());
            evidence.insert("cycle_refinements".into(), e.refinements.to_string());
        }
        if let Some(d) = e.closure_distance {
            evidence.insert("closure_distance".into(), fmt_f64(d));
        }
        if let Some([mid, late, end]) = e.tail_gaps {
            evidence.insert("tail_gap_mid".into(), fmt_f64(mid));
            evidence.insert("tail_gap_late".into(), fmt_f64(late));
            evidence.insert("tail_gap_end".into(), fmt_f64(end));
        }
        if let Some((fwd, back)) = e.side_ratios {
            evidence.insert("side_ratio_forward".into(), fmt_f64(fwd));
            evidence.insert("side_ratio_backward".into(), fmt_f64(back));
        }
        if self.cycle.len() > REPORTED_CYCLE_VERTICES {
            evidence.insert("cycle_vertices_listed".into(), REPORTED_CYCLE_VERTICES.to_string());
        }
        VerdictReport {
            kind: self.kind.as_str().into(),
            period: self.period.map(|n| n.to_string()),
            product: self.product.as_ref().map(|p| to_decimal(p, 12)),
            evidence,
            cycle: self
                .cycle
                .iter()
                .take(REPORTED_CYCLE_VERTICES)
                .map(|z| [to_decimal(&z.re, 8), to_decimal(&z.im, 8)])
                .collect(),
        }
    }
}

/// Longer cycles are listed in reports by their first vertices only.
const REPORTED_CYCLE_VERTICES: usize = 64;

fn fmt_f64(x: f64) -> String {
    format!("{x:.6e}")
}

/// Full analysis: the plain run plus its classification.
#[derive(Debug, Clone)]
pub struct NrAnalysis {
    pub summary: RunSummary,
    pub verdict: DynamicsVerdict,
}

/// Thresholds of [`classify_dynamics`].
mod thresholds {
    /// |z_k − z₀| below which k is a return candidate.
    pub const RETURN_RADIUS: f64 = 1e-6;
    /// Tail gap below which a short period is a candidate.
    pub const TAIL_RADIUS: f64 = 1e-6;
    /// Longest period searched for in the tail.
    pub const MAX_TAIL_PERIOD: usize = 64;
    /// Newton corrections tried on a candidate cycle start.
    pub const MAX_REFINEMENTS: u32 = 8;
    /// |ln P_N| above which the product decides the verdict.
    pub const PRODUCT_RESOLUTION: f64 = 1e-3;
    /// ln(h_max/h_min) below which h counts as bounded.
    pub const BOUNDED_LOG_RANGE: f64 = 13.815510557964274;
    /// |trend| of log h above which it counts as sustained.
    pub const SUSTAINED_TREND: f64 = 13.815510557964274;
    /// |trend| of log h below which the run shows no drift.
    pub const FLAT_TREND: f64 = 1.0;
    /// Angular offset of the side probes.
    pub const SIDE_OFFSET: f64 = 1e-3;
    /// Steps spent on each side probe (rounded to whole cycles).
    pub const SIDE_STEPS: u64 = 20_000;
    /// Ratio below which a side probe counts as attracted.
    pub const SIDE_CONTRACTION: f64 = 0.5;
    /// Smallest tail gap whose decrease is measurable at the minimum
    /// working precision.
    pub const MEASURABLE_GAP: f64 = 1e-25;
}

/// A vertex with its outgoing λ², enough to restart a trajectory.
#[derive(Debug, Clone)]
struct Snapshot {
    cos: Float,
    sin: Float,
    lambda_sq: Float,
}

impl Snapshot {
    fn of(state: &TrajectoryState) -> Self {
        Snapshot {
            cos: state.cos_psi.clone(),
            sin: state.sin_psi.clone(),
            lambda_sq: state.lambda_sq.clone(),
        }
    }

    /// Start of a fresh trajectory at the unit vertex `z`.
    fn at(cfg: &NRConfig, z: BigComplex) -> Result<Self> {
        let moved = cfg.with_start(StartCase::Custom(z))?;
        Ok(Snapshot::of(&TrajectoryState::initial(&moved)?))
    }

    fn vertex(&self) -> BigComplex {
        BigComplex::new(self.cos.clone(), self.sin.clone())
    }
}

/// One traversal of n steps from a snapshot.
struct Traversal {
    product: Float,
    vertices: Vec<BigComplex>,
    /// |z_n − z₀|.
    distance: Float,
    /// sin(ψ_n − ψ₀).
    offset: Float,
}

/// Vertices kept from a traversal; longer cycles are truncated.
const MAX_KEPT_VERTICES: usize = 1 << 16;

fn traverse(cfg: &NRConfig, start: &Snapshot, n: u64) -> Result<Traversal> {
    let mut state = TrajectoryState::from_vertex(cfg, start.cos.clone(), start.sin.clone(), start.lambda_sq.clone())?;
    let mut vertices = Vec::with_capacity((n as usize).min(MAX_KEPT_VERTICES));
    for _ in 0..n {
        if vertices.len() < MAX_KEPT_VERTICES {
            vertices.push(state.vertex());
        }
        state.advance(cfg)?;
    }
    let z0 = start.vertex();
    let zn = state.vertex();
    let offset = (&zn * &z0.conj()).im;
    Ok(Traversal {
        product: state.h,
        vertices,
        distance: (&zn - &z0).abs(),
        offset,
    })
}

/// A cycle that closes to working precision.
struct ConfirmedCycle {
    period: u64,
    start: Snapshot,
    traversal: Traversal,
    refinements: u32,
}

/// Re-traverses a candidate cycle and, when it does not close to
/// 10^(−digits/2), corrects the start by Newton's method on
/// ψ_N(ψ₀) − ψ₀, whose derivative is P_N − 1. Near-returns without a nearby
/// cycle (such as the slow passage past a vanished cycle) are rejected.
fn confirm_cycle(cfg: &NRConfig, start: Snapshot, n: u64) -> Option<ConfirmedCycle> {
    use thresholds::*;
    let b = cfg.bits();
    let close = pow10(b, -(cfg.precision.digits() as i32) / 2);
    let mut start = start;
    let mut refinements = 0;
    loop {
        // A candidate whose traversal or restart fails is not a cycle.
        let Ok(t) = traverse(cfg, &start, n) else {
            return None;
        };
        if t.distance < close {
            return Some(ConfirmedCycle {
                period: n,
                start,
                traversal: t,
                refinements,
            });
        }
        let slope = Float::with_val(b, &t.product - 1u32);
        if refinements == MAX_REFINEMENTS || slope.to_f64().abs() < 1e-6 || t.distance > RETURN_RADIUS {
            return None;
        }
        let shift = Float::with_val(b, -Float::with_val(b, t.offset.asin_ref()) / &slope);
        let (s, c) = shift.sin_cos(Float::new(b));
        let moved = &start.vertex() * &BigComplex::new(c, s);
        start = match Snapshot::at(cfg, moved.normalized()) {
            Ok(next) => next,
            Err(_) => return None,
        };
        refinements += 1;
    }
}

/// Displaces the cycle start by ±SIDE_OFFSET radians, runs whole cycles and
/// returns the final distance to the start over the initial one, for the
/// forward and the backward displacement.
fn side_probes(cfg: &NRConfig, cycle: &ConfirmedCycle) -> Result<(f64, f64)> {
    use thresholds::*;
    let b = cfg.bits();
    let z0 = cycle.start.vertex();
    let cycles = (SIDE_STEPS / cycle.period).max(1);
    let ratio = |sign: f64| -> Result<f64> {
        let angle = Float::with_val(b, sign * SIDE_OFFSET);
        let (s, c) = angle.sin_cos(Float::new(b));
        let z = (&z0 * &BigComplex::new(c, s)).normalized();
        let initial = (&z - &z0).abs();
        let probe = Snapshot::at(cfg, z)?;
        let mut state = TrajectoryState::from_vertex(cfg, probe.cos, probe.sin, probe.lambda_sq)?;
        for _ in 0..cycles * cycle.period {
            state.step(cfg)?;
        }
        Ok(((&state.vertex() - &z0).abs() / initial).to_f64())
    };
    Ok((ratio(1.0)?, ratio(-1.0)?))
}

fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let mean_x = (n - 1) as f64 / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Runs the trajectory and classifies it.
///
/// Cycle candidates are the first return to within 10⁻⁶ of z₀ and, failing
/// that, the shortest period of at most 64 repeating in the tail; a
/// candidate counts only once a re-traversal closes (after Newton
/// correction of its start if needed). For a confirmed cycle, P_N < 1 is
/// attractive and P_N > 1 repelling; when P_N = 1 within resolution the
/// cycle is attractive if starts displaced to one side converge onto it,
/// and regular if h stays bounded. Without a cycle the run is regular when
/// log h is bounded or shows no drift, attractive or repelling when log h
/// has a sustained trend of that sign, and undecided otherwise.
pub fn analyze(cfg: &NRConfig, budget: u64, observer: &mut dyn FnMut(&TrajectoryState)) -> Result<NrAnalysis> {
    use thresholds::*;
    if budget < MIN_CLASSIFY_BUDGET {
        return Err(Error::domain(format!(
            "classification needs a budget of at least {MIN_CLASSIFY_BUDGET} steps"
        )));
    }
    let b = cfg.bits();
    let return_delta = Float::with_val(b, RETURN_RADIUS * RETURN_RADIUS / 2.0);
    let mut log_h = Vec::with_capacity(budget as usize + 1);
    let mid = budget / 2;
    let late = budget - budget / 4;
    let mut mid_ring: VecDeque<BigComplex> = VecDeque::with_capacity(MAX_TAIL_PERIOD + 1);
    let mut late_ring: VecDeque<BigComplex> = VecDeque::with_capacity(MAX_TAIL_PERIOD + 1);
    let mut tail: VecDeque<Snapshot> = VecDeque::with_capacity(MAX_TAIL_PERIOD + 1);
    let mut first_return: Option<u64> = None;
    let start = TrajectoryState::initial(cfg)?;
    let start_snapshot = Snapshot::of(&start);
    log_h.push(0.0);
    let summary = drive(cfg, budget, observer, |state, _| {
        log_h.push(state.log_h);
        if state.k <= mid && mid - state.k <= MAX_TAIL_PERIOD as u64 {
            mid_ring.push_back(state.vertex());
        }
        if state.k <= late && late - state.k <= MAX_TAIL_PERIOD as u64 {
            late_ring.push_back(state.vertex());
        }
        if budget - state.k <= MAX_TAIL_PERIOD as u64 {
            tail.push_back(Snapshot::of(state));
        }
        if first_return.is_none() && state.delta() < return_delta {
            first_return = Some(state.k);
        }
    })?;

    let steps = summary.steps as usize;
    let half = &log_h[steps / 2..];
    let slope = least_squares_slope(half);
    let trend = slope * (half.len().saturating_sub(1)) as f64;
    let mut evidence = DynamicsEvidence {
        steps: summary.steps,
        log_h_min: summary.log_h_min,
        log_h_max: summary.log_h_max,
        slope,
        trend,
        cycle_source: None,
        closure_distance: None,
        refinements: 0,
        side_ratios: None,
        tail_gaps: None,
    };
    let bounded = summary.log_h_max - summary.log_h_min < BOUNDED_LOG_RANGE;

    let mut cycle = None;
    if let Some(n) = first_return {
        cycle = confirm_cycle(cfg, start_snapshot, n);
        if cycle.is_some() {
            evidence.cycle_source = Some(CycleSource::ReturnToStart);
        }
    }
    if cycle.is_none() {
        let last = tail.len() - 1;
        let end_gap = |n: usize| (&tail[last].vertex() - &tail[last - n].vertex()).abs().to_f64();
        let period = (1..=MAX_TAIL_PERIOD).find(|&n| end_gap(n) < TAIL_RADIUS);
        if let Some(n) = period {
            let from = tail[last - n].clone();
            let ring_gap = |ring: &VecDeque<BigComplex>| {
                let last = ring.len() - 1;
                (&ring[last] - &ring[last - n]).abs().to_f64()
            };
            evidence.tail_gaps = Some([ring_gap(&mid_ring), ring_gap(&late_ring), end_gap(n)]);
            cycle = confirm_cycle(cfg, from.clone(), n as u64);
            if cycle.is_none() && evidence.tail_converges() {
                // Algebraic convergence onto a cycle with P_N = 1 leaves no
                // Newton slope; the shrinking tail is the confirmation.
                cycle = traverse(cfg, &from, n as u64).ok().map(|traversal| ConfirmedCycle {
                    period: n as u64,
                    start: from,
                    traversal,
                    refinements: 0,
                });
            }
            if cycle.is_some() {
                evidence.cycle_source = Some(CycleSource::Tail);
            } else {
                evidence.tail_gaps = None;
            }
        }
    }

    let verdict = match cycle {
        Some(found) => {
            evidence.closure_distance = Some(found.traversal.distance.to_f64());
            evidence.refinements = found.refinements;
            let log_p = found.traversal.product.to_f64().ln();
            let kind = if log_p < -PRODUCT_RESOLUTION {
                DynamicsKind::Attractive
            } else if log_p > PRODUCT_RESOLUTION {
                DynamicsKind::Repelling
            } else {
                if !evidence.tail_converges() {
                    evidence.side_ratios = Some(side_probes(cfg, &found)?);
                }
                if evidence.one_sided_attraction() {
                    DynamicsKind::Attractive
                } else if bounded {
                    DynamicsKind::Regular
                } else {
                    DynamicsKind::Undecided
                }
            };
            DynamicsVerdict {
                kind,
                period: Some(found.period),
                product: Some(found.traversal.product),
                cycle: found.traversal.vertices,
                evidence,
            }
        }
        None => {
            let kind = if trend < -SUSTAINED_TREND {
                DynamicsKind::Attractive
            } else if trend > SUSTAINED_TREND {
                DynamicsKind::Repelling
            } else if bounded || trend.abs() < FLAT_TREND {
                DynamicsKind::Regular
            } else {
                DynamicsKind::Undecided
            };
            DynamicsVerdict {
                kind,
                period: None,
                product: None,
                cycle: Vec::new(),
                evidence,
            }
        }
    };
    let mut summary = summary;
    if let (Some(CycleSource::ReturnToStart), Some(period)) = (verdict.evidence.cycle_source, verdict.period) {
        // Records past a cycle that closes at the start only repeat it.
        let qs: Vec<Integer> = summary
            .records
            .iter()
            .skip(1)
            .filter(|&&q| q <= period)
            .map(|&q| Integer::from(q))
            .collect();
        summary.table = if qs.is_empty() {
            None
        } else {
            recover_numerators_lenient(&qs).ok()
        };
    }
    Ok(NrAnalysis { summary, verdict })
}

/// Classifies the trajectory of `cfg` over `budget` steps.
pub fn classify_dynamics(cfg: &NRConfig, budget: u64) -> Result<DynamicsVerdict> {
    Ok(analyze(cfg, budget, &mut |_| {})?.verdict)
}

/// Walks N steps from the reflection of `cycle[0]` across the real axis,
/// where N is the cycle length. Returns the product of tangency ratios and
/// |z_N − z₀|.
pub fn conjugate_cycle_product(cfg: &NRConfig, cycle: &[BigComplex]) -> Result<(Float, Float)> {
    let z0 = cycle.first().ok_or_else(|| Error::domain("empty cycle"))?.conj();
    let t = traverse(cfg, &Snapshot::at(cfg, z0)?, cycle.len() as u64)?;
    Ok((t.product, t.distance))
}
