//! Randomised invariants across the library.

use proptest::prelude::*;
use rug::{Float, Integer};

use interscribe::cf::{convergent_bounds, recover_numerators, ConvergentTable};
use interscribe::circle::{
    baby_step_scan, chord_residual, tangent_partners, CirclePair, GammaWalk, ScanOutcome, VertexWalk,
};
use interscribe::curve::{ec_add, ec_mul, generator_point, to_weierstrass_real};
use interscribe::ellipse::{ellipse_from_weights, weights_from_ellipse, EllipseConfig};
use interscribe::nr::{run_records, MatrixEntries, NRConfig, StartCase};
use interscribe::oracle::{arc_measure, ThetaMeasure};
use interscribe::report::{RunReport, Stage};
use interscribe::{BigComplex, Precision};

const DIGITS: u32 = 40;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

/// A nested circle pair from (c, fraction of the room 1 − c left for r).
fn pair(c: f64, room: f64) -> CirclePair {
    let r = (1.0 - c) * room;
    CirclePair::from_decimal(&format!("{c:.6}"), &format!("{r:.6}"), Precision::working(DIGITS)).unwrap()
}

fn unit(bits: u32, angle: f64) -> BigComplex {
    let t = Float::with_val(bits, angle);
    let (s, c) = t.sin_cos(Float::new(bits));
    BigComplex::new(c, s)
}

fn angle(z: &BigComplex) -> Float {
    let mut a = Float::with_val(z.prec(), z.im.atan2_ref(&z.re));
    if a.is_sign_negative() {
        a += Float::with_val(z.prec(), rug::float::Constant::Pi) * 2u32;
    }
    a
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn vertices_stay_tangent_and_on_the_circle(c in 0.05f64..0.8, room in 0.1f64..0.9) {
        let pair = pair(c, room);
        let tol = pair.precision().tolerance(5);
        let mut walk = VertexWalk::new(&pair);
        for _ in 0..300 {
            let prev = walk.current().clone();
            let next = walk.advance().unwrap().clone();
            prop_assert!(chord_residual(&prev, &next, &pair).abs() < tol);
            prop_assert!(Float::with_val(pair.bits(), next.abs() - 1u32).abs() < tol);
        }
    }

    #[test]
    fn gamma_walk_respects_the_upper_bound(c in 0.05f64..0.8, room in 0.1f64..0.9) {
        let pair = pair(c, room);
        let b = pair.bits();
        let inv = pair.invariant();
        let bound = Float::with_val(b, inv - Float::with_val(b, Float::with_val(b, inv.square_ref()) - 1u32).sqrt());
        let mut walk = GammaWalk::new(&pair);
        for _ in 0..300 {
            let g = walk.advance().clone();
            let w = Float::with_val(b, g.square_ref()) * pair.c();
            prop_assert!(w > 0 && w < bound);
        }
    }

    #[test]
    fn records_are_strictly_monotone(c in 0.05f64..0.8, room in 0.1f64..0.9) {
        let pair = pair(c, room);
        let stop = Precision::working(DIGITS).real(1e-4);
        let outcome = match baby_step_scan(&pair, &stop, 200_000) {
            Ok(o) => o,
            Err(e) => return Err(TestCaseError::reject(e.to_string())),
        };
        let records = outcome.records();
        for w in records.windows(2) {
            prop_assert!(w[0].q < w[1].q);
            prop_assert!(w[0].gamma > w[1].gamma);
        }
        if let ScanOutcome::Converged { .. } = outcome {
            let qs: Vec<Integer> = records.iter().map(|r| r.q.clone()).filter(|q| *q > 1).collect();
            let table = recover_numerators(&qs).unwrap();
            prop_assert!(table.rows().iter().all(|r| r.a >= 1));
        }
    }

    #[test]
    fn chapple_triangles_close_from_any_start(r in 0.02f64..0.49, start in 0.0f64..std::f64::consts::TAU) {
        let precision = Precision::working(DIGITS);
        let b = precision.bits();
        let r = precision.parse(&format!("{r:.6}")).unwrap();
        let c = Float::with_val(b, 1u32 - Float::with_val(b, &r * 2u32)).sqrt();
        let pair = CirclePair::new(c, r, precision).unwrap();
        let z0 = unit(b, start);
        let (z1, _) = tangent_partners(&z0, &pair);
        let mut walk = VertexWalk::starting_at(&pair, z0.clone(), z1.normalized());
        walk.advance().unwrap();
        let z3 = walk.advance().unwrap().clone();
        prop_assert!((&z3 - &z0).abs() < 1e-30);
    }

    #[test]
    fn chords_of_one_pair_span_equal_measure(c in 0.05f64..0.8, room in 0.1f64..0.9, skip in 0u64..40) {
        let pair = pair(c, room);
        let mut walk = VertexWalk::new(&pair);
        for _ in 0..skip {
            walk.advance().unwrap();
        }
        let mut measures = Vec::new();
        for _ in 0..5 {
            let from = angle(walk.current());
            let to = angle(walk.advance().unwrap());
            measures.push(arc_measure(&from, &to, pair.invariant(), 30).unwrap());
        }
        for m in &measures[1..] {
            let rel = Float::with_val(m.prec(), m - &measures[0]).abs() / &measures[0];
            prop_assert!(rel < 1e-28, "relative spread {}", rel.to_f64());
        }
    }

    #[test]
    fn curve_group_laws_on_small_multiples(c in 0.05f64..0.8, room in 0.1f64..0.9, m in 1u64..6, n in 1u64..6, k in 1u64..6) {
        let pair = pair(c, room);
        let g = generator_point(&pair).unwrap().point();
        let (p, q, s) = (ec_mul(m, &g, &pair), ec_mul(n, &g, &pair), ec_mul(k, &g, &pair));
        let tol = pair.precision().tolerance(5);
        for point in [&p, &q, &s] {
            // Multiples can sit far out on the curve; compare against the
            // size of the terms of the equation.
            let z = point.z().map_or(0.0, |z| z.to_f64().abs());
            let scale = 1.0 + z.powi(3) + point.y().map_or(0.0, |y| y.to_f64().powi(2));
            prop_assert!(point.residual(&pair).abs() / scale < tol);
        }
        // Next to the identity, chord addition cancels several digits; the
        // laws are checked on multiples that stay away from it.
        let far = |n: u64| ec_mul(n, &g, &pair).z().is_some_and(|z| z.to_f64().abs() < 1e3);
        prop_assume!([m, n, k, m + n, n + k, m + n + k].into_iter().all(far));
        prop_assert!(ec_add(&p, &q, &pair).approx_eq(&ec_add(&q, &p, &pair), &pair));
        let left = ec_add(&ec_add(&p, &q, &pair), &s, &pair);
        let right = ec_add(&p, &ec_add(&q, &s, &pair), &pair);
        prop_assert!(left.approx_eq(&right, &pair));
        prop_assert!(left.approx_eq(&ec_mul(m + n + k, &g, &pair), &pair));
    }

    #[test]
    fn gamma_points_lie_on_the_curve(c in 0.05f64..0.8, room in 0.1f64..0.9) {
        let pair = pair(c, room);
        let b = pair.bits();
        let tol = pair.precision().tolerance(5);
        let mut walk = GammaWalk::new(&pair);
        for _ in 0..50 {
            let z = Float::with_val(b, walk.previous().square_ref()) * pair.c();
            let w = Float::with_val(b, walk.current().square_ref()) * pair.c();
            let point = to_weierstrass_real(&z, &w, &pair).unwrap();
            prop_assert!(point.residual(&pair).abs() < tol);
            walk.advance();
        }
    }

    #[test]
    fn density_is_symmetric_and_normalised(inv in 1.01f64..20.0, x in 0.0f64..1.0) {
        let b = Precision::working(30).bits();
        let invariant = Float::with_val(b, inv);
        let measure = ThetaMeasure::new(&invariant, &Float::with_val(b, 1), 30).unwrap();
        let x = Float::with_val(b, x);
        let h = measure.density(&x);
        let mirrored = measure.density(&Float::with_val(b, 1u32 - &x));
        prop_assert!(Float::with_val(b, &h - &mirrored).abs() / &h < 1e-30);
        prop_assert!(h > 0);
        let mass = measure.total_mass(30).unwrap().value;
        prop_assert!(Float::with_val(b, mass - 1u32).abs() < 1e-28);
    }

    #[test]
    fn ellipse_weights_round_trip(a in 0.05f64..0.6, shape in 0.1f64..1.0, offset in -0.9f64..0.9) {
        let b = a * shape;
        let c = offset * (1.0 - a) * 0.95;
        let precision = Precision::from_digits(DIGITS);
        let cfg = EllipseConfig::from_decimal(&format!("{a:.6}"), &format!("{b:.6}"), &format!("{c:.6}"), precision).unwrap();
        let back = ellipse_from_weights(&weights_from_ellipse(&cfg), precision).unwrap();
        let tol = precision.tolerance(8);
        for (x, y) in [(cfg.a(), back.a()), (cfg.b(), back.b()), (cfg.c(), back.c())] {
            prop_assert!(Float::with_val(precision.bits(), x - y).abs() < tol);
        }
    }

    #[test]
    fn numerical_range_steps_keep_the_determinant_small(
        a in 0.05f64..0.3, b1 in 0.05f64..0.3, b2 in 0.05f64..0.3,
        c in prop::array::uniform3(-0.05f64..0.05),
    ) {
        let text: Vec<String> = [a, b1, b2, c[0], c[1], c[2]].iter().map(|x| format!("{x:.6}")).collect();
        let entries = MatrixEntries { a: &text[0], b1: &text[1], b2: &text[2], c1: &text[3], c2: &text[4], c3: &text[5] };
        let cfg = NRConfig::from_decimal(entries, StartCase::PositiveReal, Precision::from_digits(DIGITS)).unwrap();
        let run = run_records(&cfg, 400, &mut |_| {}).unwrap();
        prop_assert!(run.max_residual < cfg.precision().tolerance(12));
        prop_assert!(run.final_state.h() > &0);
        for w in run.records.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn denominators_rebuild_the_euclid_table(p in 1u64..1_000_000_000_000, q in 2u64..1_000_000_000_000) {
        prop_assume!(p < q && Integer::from(p).gcd(&Integer::from(q)) == 1);
        let (p, q) = (Integer::from(p), Integer::from(q));
        let euclid = ConvergentTable::from_rational(&p, &q).unwrap();
        let last = euclid.last().unwrap();
        prop_assert_eq!((&last.p, &last.q), (&p, &q));
        let rebuilt = recover_numerators(&euclid.denominators()).unwrap();
        prop_assert_eq!(rebuilt.to_strings(), euclid.to_strings());
        // The last row equals θ exactly, so its error has no sign to test.
        let qs = euclid.denominators();
        prop_assume!(qs.len() > 1);
        let head = recover_numerators(&qs[..qs.len() - 1]).unwrap();
        let bits = 256;
        let theta = Float::with_val(bits, &p) / Float::with_val(bits, &q);
        let verdict = convergent_bounds(&head, &theta, &Float::with_val(bits, 1e-40));
        prop_assert!(verdict.passed);
    }

    #[test]
    fn reports_round_trip(values in prop::collection::vec("[0-9]{1,30}(\\.[0-9]{1,30})?", 1..8), digits in proptest::option::of(0u32..200)) {
        let mut inputs = std::collections::BTreeMap::new();
        for (i, v) in values.iter().enumerate() {
            inputs.insert(format!("x{i}"), v.clone());
        }
        let mut report = RunReport::new(inputs);
        report.stages.push(Stage::new("scan", values.len()));
        report.theta = values.first().cloned();
        report.agreement_digits = digits;
        let text = report.to_json();
        let back = RunReport::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back, report);
    }
}
