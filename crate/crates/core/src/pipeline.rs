//! End-to-end θ for a circle pair: baby steps until the record γ drops
//! below the handoff threshold, giant-step sets until Δ is small enough for
//! the requested digits, then the refined interpolation between the last two
//! convergents.

use rug::{Float, Integer};

use crate::cf::{recover_numerators, ConvergentTable};
use crate::circle::{
    baby_step_scan, closure_threshold, params_from_integral, CirclePair, IntegralSpec, RecordTriple, ScanOutcome,
};
use crate::curve::{delta_threshold, GiantStepState};
use crate::error::{Error, Result};
use crate::oracle;
use crate::precision::Precision;

/// Knobs of [`compute_theta`].
#[derive(Debug, Clone)]
pub struct ThetaConfig {
    /// Requested significant digits of θ.
    pub digits: u32,
    /// Record γ at which baby steps hand over to giant steps.
    pub handoff: f64,
    /// Maximum number of baby steps.
    pub baby_budget: u64,
    /// Maximum partial quotient accepted in one giant-step set.
    pub max_quotient: u64,
    /// Keep running giant-step sets until at least this many convergents
    /// exist, even after the precision target is met.
    pub min_records: usize,
}

impl ThetaConfig {
    pub fn new(digits: u32) -> Self {
        ThetaConfig {
            digits,
            handoff: 0.1,
            baby_budget: 10_000_000,
            max_quotient: 1_000_000_000,
            min_records: 0,
        }
    }
}

/// One completed set of giant steps.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantSet {
    /// Anchor record q_j of the set.
    pub anchor: Integer,
    /// Steps taken, equal to the partial quotient a_{j+1}.
    pub partial_quotient: u64,
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct ThetaOutcome {
    pub theta: Float,
    /// Records in increasing q, starting with the q = 1 seed.
    pub records: Vec<RecordTriple>,
    pub table: ConvergentTable,
    pub baby_steps: u64,
    pub giant_sets: Vec<GiantSet>,
    /// Present when the polygon closes exactly: θ = p/q.
    pub closure: Option<(Integer, Integer)>,
    pub working: Precision,
}

/// Denominators of θ from scan records: the q = 1 seed is the implicit q₀.
pub fn record_denominators(records: &[RecordTriple]) -> Vec<Integer> {
    records.iter().map(|r| r.q.clone()).filter(|q| *q > 1).collect()
}

fn rational_outcome(
    records: Vec<RecordTriple>,
    order: Integer,
    baby_steps: u64,
    giant_sets: Vec<GiantSet>,
    working: Precision,
) -> Result<ThetaOutcome> {
    let mut qs = record_denominators(&records);
    if qs.last() != Some(&order) {
        qs.push(order);
    }
    let table = recover_numerators(&qs)?;
    let last = table.last().expect("closure order is a row");
    let (p, q) = (last.p.clone(), last.q.clone());
    let theta = Float::with_val(working.bits(), &p) / Float::with_val(working.bits(), &q);
    Ok(ThetaOutcome {
        theta,
        records,
        table,
        baby_steps,
        giant_sets,
        closure: Some((p, q)),
        working,
    })
}

/// Computes θ for `pair` to `cfg.digits` significant digits.
pub fn compute_theta(pair: &CirclePair, cfg: &ThetaConfig) -> Result<ThetaOutcome> {
    if pair.is_concentric() {
        return Err(Error::domain("theta pipeline needs c > 0"));
    }
    let working = pair.precision();
    let handoff = working.real(cfg.handoff);
    let outcome = baby_step_scan(pair, &handoff, cfg.baby_budget)?;
    let baby_steps = outcome.steps();
    let mut records = match outcome {
        ScanOutcome::Closed { order, records } => {
            return rational_outcome(records, Integer::from(order), baby_steps, Vec::new(), working);
        }
        ScanOutcome::Converged { records, .. } => records,
    };

    let threshold = delta_threshold(cfg.digits, pair.bits());
    let closure = closure_threshold(pair);
    let mut giant_sets = Vec::new();
    loop {
        let n = records.len();
        let need_precision = records[n - 2].gamma > threshold;
        let need_rows = record_denominators(&records).len() < cfg.min_records;
        if !need_precision && !need_rows {
            break;
        }
        let mut state = GiantStepState::new(pair, records[n - 2].clone(), records[n - 1].clone())?;
        let (next, steps) = state.run_set(cfg.max_quotient)?;
        giant_sets.push(GiantSet {
            anchor: records[n - 1].q.clone(),
            partial_quotient: steps,
        });
        let closed = next.gamma < closure;
        let order = next.q.clone();
        records.push(next);
        if closed {
            return rational_outcome(records, order, baby_steps, giant_sets, working);
        }
    }

    let table = recover_numerators(&record_denominators(&records))?;
    let rows = table.len() as isize;
    let (p_last, q_last) = table.convergent(rows).expect("last row");
    let (p_prev, q_prev) = table.convergent(rows - 1).expect("previous row");
    let n = records.len();
    let theta = crate::curve::refine_theta(
        [&records[n - 2], &records[n - 1]],
        [(&p_prev, &q_prev), (&p_last, &q_last)],
        cfg.digits,
    )?;
    Ok(ThetaOutcome {
        theta,
        records,
        table,
        baby_steps,
        giant_sets,
        closure: None,
        working,
    })
}

/// F(ψ, k) assembled from a polygon rotation number.
#[derive(Debug, Clone)]
pub struct IntegralOutcome {
    /// β = F(ψ, k)/K(k) = 1 − 2θ(π − 2ψ, I).
    pub beta: Float,
    /// K(k) from the AGM.
    pub complete: Float,
    /// F(ψ, k) = β·K(k).
    pub incomplete: Float,
    /// Circle pair whose polygon rotation number gives β.
    pub pair: CirclePair,
    pub theta: ThetaOutcome,
}

/// F(ψ, k) through the polygon pipeline. The circle pair is built at the
/// complementary angle π/2 − ψ, whose rotation number is θ(π − 2ψ, I).
pub fn integral_from_polygons(spec: &IntegralSpec, cfg: &ThetaConfig) -> Result<IntegralOutcome> {
    let working = Precision::working(spec.digits);
    let b = working.bits();
    let complement = working.pi() / 2u32 - Float::with_val(b, &spec.psi);
    let mirrored = IntegralSpec::new(complement, spec.k2.clone(), spec.digits)?;
    let pair = params_from_integral(&mirrored)?;
    let theta = compute_theta(&pair, cfg)?;
    let beta = Float::with_val(b, 1u32) - Float::with_val(b, &theta.theta * 2u32);
    let complete = oracle::complete_f(&spec.k2, working.digits())?;
    let incomplete = Float::with_val(b, &beta * &complete);
    Ok(IntegralOutcome {
        beta,
        complete,
        incomplete,
        pair,
        theta,
    })
}
