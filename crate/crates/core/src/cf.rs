//! Continued-fraction bookkeeping for record denominators.
//!
//! Record indices q_j of almost-closed polygons are the convergent
//! denominators of θ. Partial quotients follow from
//! `a_j = (q_j − q_{j−2}) / q_{j−1}` and numerators from
//! `p_j = a_j p_{j−1} + p_{j−2}`, seeded by (q₋₁, p₋₁) = (0, 1) and
//! (q₀, p₀) = (1, 0). Everything here is exact integer arithmetic.

use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::circle::ScanOutcome;
use crate::error::{Error, Result};

/// One convergent p_j/q_j with its partial quotient a_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentRow {
    pub j: usize,
    pub q: Integer,
    pub a: Integer,
    pub p: Integer,
    /// Rebuilt from a later pair of denominators rather than observed directly.
    pub provisional: bool,
}

/// Rows j = 1, 2, … of convergents. The seed rows j = −1 and j = 0 are implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvergentTable {
    rows: Vec<ConvergentRow>,
}

/// The same row with integers rendered as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowStrings {
    pub j: String,
    pub q: String,
    pub a: String,
    pub p: String,
}

impl ConvergentTable {
    pub fn rows(&self) -> &[ConvergentRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&ConvergentRow> {
        self.rows.last()
    }

    /// Denominators q₁, q₂, … in order.
    pub fn denominators(&self) -> Vec<Integer> {
        self.rows.iter().map(|r| r.q.clone()).collect()
    }

    /// (p, q) of row j, including the seeds j = −1 and j = 0.
    pub fn convergent(&self, j: isize) -> Option<(Integer, Integer)> {
        match j {
            -1 => Some((Integer::from(1), Integer::from(0))),
            0 => Some((Integer::from(0), Integer::from(1))),
            j if j > 0 => self.rows.get(j as usize - 1).map(|r| (r.p.clone(), r.q.clone())),
            _ => None,
        }
    }

    pub fn to_strings(&self) -> Vec<RowStrings> {
        self.rows
            .iter()
            .map(|r| RowStrings {
                j: r.j.to_string(),
                q: r.q.to_string(),
                a: r.a.to_string(),
                p: r.p.to_string(),
            })
            .collect()
    }

    fn push_quotient(&mut self, a: Integer, provisional: bool) {
        let (p1, q1) = self.convergent(self.rows.len() as isize).expect("previous row");
        let (p2, q2) = self.convergent(self.rows.len() as isize - 1).expect("row before");
        let q = Integer::from(&a * &q1) + q2;
        let p = Integer::from(&a * &p1) + p2;
        self.rows.push(ConvergentRow {
            j: self.rows.len() + 1,
            q,
            a,
            p,
            provisional,
        });
    }

    /// Table of the rational p/q (q > 0) by the Euclidean algorithm.
    pub fn from_rational(p: &Integer, q: &Integer) -> Result<Self> {
        if *q <= 0 {
            return Err(Error::domain("denominator must be positive"));
        }
        let mut table = ConvergentTable::default();
        for a in euclid(p, q).into_iter().skip(1) {
            table.push_quotient(a, false);
        }
        // Integer part is dropped: rows describe the fractional part as in
        // the scans, so shift numerators by ⌊p/q⌋·q.
        let whole = p.clone().div_rem_floor(q.clone()).0;
        for row in &mut table.rows {
            row.p += Integer::from(&whole * &row.q);
        }
        Ok(table)
    }
}

/// Partial quotients [b₀; b₁, …, b_m] of n/d (d > 0), canonical form.
fn euclid(n: &Integer, d: &Integer) -> Vec<Integer> {
    let mut out = Vec::new();
    let (mut n, mut d) = (n.clone(), d.clone());
    while d != 0 {
        let (quot, rem) = n.div_rem_floor(d.clone());
        out.push(quot);
        n = d;
        d = rem;
    }
    out
}

fn quotient(q: &Integer, q1: &Integer, q2: &Integer) -> Option<Integer> {
    if *q1 <= 0 {
        return None;
    }
    let diff = Integer::from(q - q2);
    let (a, rem) = diff.div_rem(q1.clone());
    (rem == 0 && a >= 1).then_some(a)
}

/// Builds the convergent table from record denominators q₁ < q₂ < … (the
/// q₀ = 1 seed excluded). Every a_j must be a positive integer.
pub fn recover_numerators(q_seq: &[Integer]) -> Result<ConvergentTable> {
    let mut table = ConvergentTable::default();
    for (idx, q) in q_seq.iter().enumerate() {
        let (_, q1) = table.convergent(idx as isize).expect("previous row");
        let (_, q2) = table.convergent(idx as isize - 1).expect("row before");
        let a = quotient(q, &q1, &q2).ok_or_else(|| {
            Error::Consistency(format!(
                "q_{} = {} is not a best-approximation denominator: ({} - {}) / {} is not a positive integer",
                idx + 1,
                q,
                q,
                q2,
                q1
            ))
        })?;
        table.push_quotient(a, false);
    }
    Ok(table)
}

/// Like [`recover_numerators`] but tolerant of a bad head, as produced by
/// numerical-range scans whose density is not symmetric. The earliest pair
/// (q_s, q_{s+1}) after which every later quotient is integral is kept; the
/// head is rebuilt from the continued fraction of q_{s+1}/q_s and marked
/// provisional.
pub fn recover_numerators_lenient(q_seq: &[Integer]) -> Result<ConvergentTable> {
    if let Ok(table) = recover_numerators(q_seq) {
        return Ok(table);
    }
    let n = q_seq.len();
    let tail_valid = |s: usize| {
        (s + 2..n).all(|i| quotient(&q_seq[i], &q_seq[i - 1], &q_seq[i - 2]).is_some())
            && q_seq[s] < q_seq[s + 1]
            && Integer::from(q_seq[s].gcd_ref(&q_seq[s + 1])) == 1
    };
    let s = (0..n.saturating_sub(1))
        .find(|&s| tail_valid(s))
        .ok_or_else(|| Error::Consistency("no valid pair of consecutive denominators".into()))?;

    let mut head = euclid(&q_seq[s + 1], &q_seq[s]);
    head.reverse();
    // head = [a_1, …, a_{s'+1}]; the last entry is the quotient leading to q_{s+1}.
    let rebuilt = head.len();
    let mut table = ConvergentTable::default();
    for (i, a) in head.into_iter().enumerate() {
        table.push_quotient(a, i + 2 < rebuilt);
    }
    debug_assert_eq!(table.rows[rebuilt - 1].q, q_seq[s + 1]);
    for q in &q_seq[s + 2..n] {
        let last = table.rows.len() as isize;
        let (_, q1) = table.convergent(last).expect("previous row");
        let (_, q2) = table.convergent(last - 1).expect("row before");
        let a = quotient(q, &q1, &q2).expect("validated tail");
        table.push_quotient(a, false);
    }
    Ok(table)
}

/// Outcome of the interleaving and identity checks on a table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsVerdict {
    pub passed: bool,
    /// Index n of the first pair (n, n+1) that violates either check.
    pub first_violation: Option<usize>,
    /// Largest |q_n‖q_{n+1}θ‖ + q_{n+1}‖q_nθ‖ − 1| over the table.
    pub max_identity_residual: Float,
}

/// Checks `(q_nθ − p_n)(q_{n+1}θ − p_{n+1}) ≤ 0` and
/// `q_n|q_{n+1}θ − p_{n+1}| + q_{n+1}|q_nθ − p_n| = 1` for every consecutive
/// pair of rows, starting from the j = 0 seed.
pub fn convergent_bounds(table: &ConvergentTable, theta: &Float, tolerance: &Float) -> BoundsVerdict {
    let b = theta.prec();
    let mut worst = Float::new(b);
    let mut first = None;
    for n in 0..table.len() {
        let (pn, qn) = table.convergent(n as isize).expect("row n");
        let (pm, qm) = table.convergent(n as isize + 1).expect("row n+1");
        let dn = Float::with_val(b, theta * &qn) - &pn;
        let dm = Float::with_val(b, theta * &qm) - &pm;
        let interleaved = Float::with_val(b, &dn * &dm) <= 0;
        let (dn, dm) = (dn.clone(), dm.clone());
        let ident = Float::with_val(b, dm.abs() * &qn) + Float::with_val(b, dn.abs() * &qm) - 1u32;
        let ident = ident.abs();
        let ok = interleaved && ident <= *tolerance;
        if ident > worst {
            worst = ident;
        }
        if !ok && first.is_none() {
            first = Some(n);
        }
    }
    BoundsVerdict {
        passed: first.is_none(),
        first_violation: first,
        max_identity_residual: worst,
    }
}

/// Closure order N of a scan that found an exactly closing polygon.
pub fn detect_rational_closure(outcome: &ScanOutcome) -> Option<u64> {
    match outcome {
        ScanOutcome::Closed { order, .. } => Some(*order),
        ScanOutcome::Converged { .. } => None,
    }
}

/// θ = p/q for a closed scan, from its records followed by the closure order.
pub fn closure_fraction(outcome: &ScanOutcome) -> Result<Option<(Integer, Integer)>> {
    let Some(order) = detect_rational_closure(outcome) else {
        return Ok(None);
    };
    let mut qs: Vec<Integer> = outcome
        .records()
        .iter()
        .map(|r| r.q.clone())
        .filter(|q| *q > 1)
        .collect();
    qs.push(Integer::from(order));
    let table = recover_numerators(&qs)?;
    let last = table.last().expect("nonempty");
    Ok(Some((last.p.clone(), last.q.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[u64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn standard_pair_numerators() {
        let t = recover_numerators(&ints(&[2, 5, 7, 12, 31, 43, 74])).unwrap();
        let p: Vec<u64> = t.rows().iter().map(|r| r.p.to_u64().unwrap()).collect();
        assert_eq!(p, vec![1, 2, 3, 5, 13, 18, 31]);
    }

    #[test]
    fn reference_ellipse_quotients() {
        let t = recover_numerators(&ints(&[3, 13, 16, 45, 151, 196])).unwrap();
        let a: Vec<u64> = t.rows().iter().map(|r| r.a.to_u64().unwrap()).collect();
        let p: Vec<u64> = t.rows().iter().map(|r| r.p.to_u64().unwrap()).collect();
        assert_eq!(a, vec![3, 4, 1, 2, 3, 1]);
        assert_eq!(p, vec![1, 4, 5, 14, 47, 61]);
    }

    #[test]
    fn single_unit_denominator() {
        let t = recover_numerators(&ints(&[1])).unwrap();
        assert_eq!(t.rows()[0].a, 1);
        assert_eq!(t.rows()[0].p, 1);
    }

    #[test]
    fn invalid_sequence_rejected() {
        let err = recover_numerators(&ints(&[2, 5, 58])).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    #[test]
    fn lenient_rebuilds_missing_head() {
        let t = recover_numerators_lenient(&ints(&[2, 5, 58, 179, 237])).unwrap();
        let q: Vec<u64> = t.rows().iter().map(|r| r.q.to_u64().unwrap()).collect();
        assert_eq!(q, vec![2, 3, 5, 58, 179, 237]);
        let prov: Vec<bool> = t.rows().iter().map(|r| r.provisional).collect();
        assert_eq!(prov, vec![true, true, false, false, false, false]);
    }

    #[test]
    fn rational_endpoint() {
        let p = crate::Precision::from_digits(40);
        let t = recover_numerators(&ints(&[2, 5, 7])).unwrap();
        let theta = Float::with_val(p.bits(), 3) / 7u32;
        let v = convergent_bounds(&t, &theta, &p.tolerance(5));
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn euclid_table_round_trip() {
        let t = ConvergentTable::from_rational(&Integer::from(78451), &Integer::from(252069)).unwrap();
        assert_eq!(t.last().unwrap().q, 252069);
        assert_eq!(t.last().unwrap().p, 78451);
        assert_eq!(t.rows()[0].q, 3);
    }
}
