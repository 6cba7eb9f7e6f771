//! Bracketing root search for smooth scalar functions.

use rug::Float;

/// Roots of `f` on (lo, hi), largest first.
///
/// Sign changes are located on a uniform grid of `samples` cells in f64, then
/// each bracket is refined by bisection at the precision of the values
/// returned by `f`, to `bits` bits.
pub(crate) fn bracketed_roots<F>(f: F, lo: f64, hi: f64, samples: usize, bits: u32) -> Vec<Float>
where
    F: Fn(&Float) -> Float,
{
    let mut roots = Vec::new();
    let step = (hi - lo) / samples as f64;
    let at = |x: f64| f(&Float::with_val(bits, x));
    let mut x_hi = hi;
    let mut f_hi = at(x_hi);
    for i in (0..samples).rev() {
        let x_lo = lo + step * i as f64;
        let f_lo = at(x_lo);
        if f_lo.is_zero() {
            roots.push(Float::with_val(bits, x_lo));
        } else if !f_hi.is_zero() && f_lo.is_sign_negative() != f_hi.is_sign_negative() {
            roots.push(bisect(&f, x_lo, x_hi, bits));
        }
        x_hi = x_lo;
        f_hi = f_lo;
    }
    roots
}

pub(crate) fn bisect<F>(f: &F, lo: f64, hi: f64, bits: u32) -> Float
where
    F: Fn(&Float) -> Float,
{
    let mut a = Float::with_val(bits, lo);
    let mut b = Float::with_val(bits, hi);
    let fa_neg = f(&a).is_sign_negative();
    for _ in 0..(bits + 4) {
        let mid = Float::with_val(bits, &a + &b) / 2u32;
        let fm = f(&mid);
        if fm.is_zero() {
            return mid;
        }
        if fm.is_sign_negative() == fa_neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    Float::with_val(bits, &a + &b) / 2u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_cubic_roots() {
        // (x - 0.2)(x - 0.5)(x - 0.9)
        let f = |x: &Float| {
            let a = Float::with_val(x.prec(), x - 0.2);
            let b = Float::with_val(x.prec(), x - 0.5);
            let c = Float::with_val(x.prec(), x - 0.9);
            a * b * c
        };
        let r = bracketed_roots(f, 0.0, 1.0, 97, 200);
        let got: Vec<f64> = r.iter().map(|x| x.to_f64()).collect();
        assert_eq!(got.len(), 3);
        assert!((got[0] - 0.9).abs() < 1e-15);
        assert!((got[2] - 0.2).abs() < 1e-15);
        let exact = Float::with_val(200, 0.2f64);
        assert!(Float::with_val(200, &r[2] - &exact).abs() < 1e-55);
    }
}
