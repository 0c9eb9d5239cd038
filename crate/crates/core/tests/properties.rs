use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

use twistor_core::discriminant::{cubic_discriminant, fiber_cubic, x_vars};
use twistor_core::poly::{ArithOp, MultiPoly};
use twistor_core::presets;
use twistor_core::quaternion::Quaternion;
use twistor_core::ring::{Coeff, GaussRat, QSqrt3, Ring, Sqrt3Field};
use twistor_core::symmetry::{apply_conformal, enumerate_group, identify, ConformalMap, Generator};
use twistor_core::twistor::{fiber_map, tau, twistor_project, CP3Point, Cx, S4Point};

fn cp3(v: [f64; 8]) -> Option<CP3Point<f64>> {
    CP3Point::new([0, 1, 2, 3].map(|k| Cx::new(v[2 * k], v[2 * k + 1]))).ok()
}

fn close4(a: &S4Point<f64>, b: &S4Point<f64>, tol: f64) -> bool {
    a.chordal_distance(b) < tol
}

/// Roots by Durand-Kerner iteration, then `a^4 prod (r_i - r_j)^2`.
fn brute_discriminant(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let f = |z: Complex64| ((z * a + b) * z + c) * z + d;
    let seed = Complex64::new(0.4, 0.9);
    let scale = 1.0 + [b, c, d].iter().map(|v| (v / a).abs()).fold(0.0, f64::max);
    let mut r = [seed * scale, seed.powu(2) * scale, seed.powu(3) * scale];
    for _ in 0..500 {
        let prev = r;
        for i in 0..3 {
            let mut den = Complex64::new(a, 0.0);
            for j in 0..3 {
                if j != i {
                    den *= r[i] - r[j];
                }
            }
            if den.norm() > 0.0 {
                r[i] -= f(r[i]) / den;
            }
        }
        if (0..3).all(|i| (r[i] - prev[i]).norm() <= 1e-17 * scale) {
            break;
        }
    }
    let mut p = Complex64::new(a.powi(4), 0.0);
    for i in 0..3 {
        for j in i + 1..3 {
            p *= (r[i] - r[j]) * (r[i] - r[j]);
        }
    }
    p.re
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn gauss(re: (i64, i64), im: (i64, i64)) -> GaussRat {
    GaussRat::new(rat(re.0, re.1), rat(im.0, im.1))
}

fn small_rat() -> impl Strategy<Value = (i64, i64)> {
    (-9i64..=9, 1i64..=5)
}

fn sqrt3_elem() -> impl Strategy<Value = Sqrt3Field> {
    prop::array::uniform4(small_rat()).prop_map(|v| {
        Sqrt3Field::new(
            QSqrt3::from_ratios(v[0].0, v[0].1, v[1].0, v[1].1),
            QSqrt3::from_ratios(v[2].0, v[2].1, v[3].0, v[3].1),
        )
    })
}

fn int_poly() -> impl Strategy<Value = MultiPoly<BigInt>> {
    prop::collection::vec((prop::array::uniform4(0u32..3), -5i64..=5), 0..6).prop_map(|terms| {
        let v = x_vars();
        let mut p = MultiPoly::zero(&v);
        for (e, c) in terms {
            p.add_term(e.to_vec(), BigInt::from(c));
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tau_preserves_fibers(v in prop::array::uniform8(-3.0f64..3.0)) {
        if let Some(p) = cp3(v) {
            let a = twistor_project(&p);
            let b = twistor_project(&tau(&p));
            prop_assert!(close4(&a, &b, 1e-9), "{:?} vs {:?}", a, b);
        }
    }

    #[test]
    fn tau_has_no_fixed_points(v in prop::array::uniform8(-5i64..=5)) {
        let z = [0, 1, 2, 3].map(|k| Cx::new(QSqrt3::int(v[2 * k]), QSqrt3::int(v[2 * k + 1])));
        if let Ok(p) = CP3Point::new(z) {
            prop_assert!(!p.proj_eq(&tau(&p)));
            prop_assert!(tau(&tau(&p)).proj_eq(&p));
        }
    }

    #[test]
    fn fibers_project_to_their_base(x in prop::array::uniform4(-2.0f64..2.0), l in prop::array::uniform2(-4.0f64..4.0)) {
        let base = S4Point::Finite(x);
        let fm = fiber_map(&base).unwrap();
        let img = twistor_project(&fm.eval(&Cx::new(l[0], l[1])));
        prop_assert!(close4(&img, &base, 1e-9));
    }

    #[test]
    fn quaternion_norm_is_multiplicative(a in prop::array::uniform4(-3.0f64..3.0), b in prop::array::uniform4(-3.0f64..3.0)) {
        let p = Quaternion::new(a[0], a[1], a[2], a[3]);
        let q = Quaternion::new(b[0], b[1], b[2], b[3]);
        let lhs = p.mul(&q).norm_sqr();
        prop_assert!((lhs - p.norm_sqr() * q.norm_sqr()).abs() <= 1e-9 * (1.0 + lhs));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn discriminant_matches_root_products(a in (-20i64..=20).prop_filter("leading", |a| *a != 0), b in -20i64..=20, c in -20i64..=20, d in -20i64..=20) {
        let exact = cubic_discriminant(&BigInt::from(a), &BigInt::from(b), &BigInt::from(c), &BigInt::from(d));
        let exact: f64 = exact.to_string().parse().unwrap();
        let brute = brute_discriminant(a as f64, b as f64, c as f64, d as f64);
        // a nonzero integer discriminant is at least 1 in size
        prop_assert!((exact - brute).abs() <= 1e-8 * exact.abs().max(1.0), "{exact} vs {brute}");
    }

    #[test]
    fn degenerate_cubics_have_zero_discriminant(c in -1000i64..=1000, d in -1000i64..=1000) {
        let z = BigInt::from(0);
        prop_assert_eq!(cubic_discriminant(&z, &z, &BigInt::from(c), &BigInt::from(d)), z);
    }

    #[test]
    fn sqrt3_field_ring_axioms(a in sqrt3_elem(), b in sqrt3_elem(), c in sqrt3_elem()) {
        prop_assert_eq!(a.mul_ref(&b).mul_ref(&c), a.mul_ref(&b.mul_ref(&c)));
        prop_assert_eq!(a.mul_ref(&b), b.mul_ref(&a));
        prop_assert_eq!(a.mul_ref(&b.add_ref(&c)), a.mul_ref(&b).add_ref(&a.mul_ref(&c)));
        prop_assert_eq!(a.add_ref(&<Sqrt3Field as Coeff>::zero()), a.clone());
        prop_assert_eq!(a.mul_ref(&<Sqrt3Field as Coeff>::one()), a.clone());
        if !a.is_zero() {
            prop_assert_eq!(a.mul_ref(&a.inv().unwrap()), <Sqrt3Field as Coeff>::one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn evaluation_is_a_ring_homomorphism(p in int_poly(), q in int_poly(), x in prop::array::uniform4(-4i64..=4)) {
        let pt: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
        let ev = |m: &MultiPoly<BigInt>| m.eval_exact(&pt).unwrap();
        prop_assert_eq!(ev(&p.arith(&q, ArithOp::Mul).unwrap()), ev(&p) * ev(&q));
        prop_assert_eq!(ev(&p.arith(&q, ArithOp::Add).unwrap()), ev(&p) + ev(&q));
        prop_assert_eq!(ev(&p.arith(&q, ArithOp::Sub).unwrap()), ev(&p) - ev(&q));
    }

    #[test]
    fn fiber_cubic_matches_direct_substitution(x in prop::array::uniform4(small_rat())) {
        let f = presets::transformed_fermat();
        let xs: Vec<GaussRat> = x.iter().map(|&r| gauss(r, (0, 1))).collect();
        let c = fiber_cubic(&f).unwrap().eval_exact(&xs).unwrap();
        // theta_x(lambda) = lambda p1 + p2 with p1 = (x1 + i x2, x3 + i x4, 1, 0)
        // and p2 = (-x3 + i x4, x1 - i x2, 0, 1)
        let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
        let p1 = [gauss(x1, x2), gauss(x3, x4), gauss((1, 1), (0, 1)), gauss((0, 1), (0, 1))];
        let p2 = [gauss((-x3.0, x3.1), x4), gauss(x1, (-x2.0, x2.1)), gauss((0, 1), (0, 1)), gauss((1, 1), (0, 1))];
        for l in [-2i64, 0, 1, 3] {
            let lam = gauss((l, 1), (0, 1));
            let z: Vec<GaussRat> = (0..4).map(|k| lam.mul_ref(&p1[k]).add_ref(&p2[k])).collect();
            let direct = f.poly().eval_exact(&z).unwrap();
            let mut horner = c[3].clone();
            for k in (0..3).rev() {
                horner = horner.mul_ref(&lam).add_ref(&c[k]);
            }
            prop_assert_eq!(direct, horner);
        }
    }

    #[test]
    fn generators_respect_finiteness(x in prop::array::uniform4((-3i64..=3, 1i64..=3))) {
        let p = S4Point::Finite(x.map(|(n, d)| QSqrt3::from_ratios(n, d, 0, 1)));
        for g in [Generator::Theta, Generator::Sigma] {
            prop_assert!(!apply_conformal(&ConformalMap::new(vec![g]), &p).is_infinity());
        }
        let ii = ConformalMap::new(vec![Generator::Iota, Generator::Iota]);
        prop_assert_eq!(apply_conformal(&ii, &p), p);
    }
}

#[test]
fn iota_swaps_zero_and_infinity() {
    let zero = S4Point::Finite([QSqrt3::zero(), QSqrt3::zero(), QSqrt3::zero(), QSqrt3::zero()]);
    let iota = ConformalMap::new(vec![Generator::Iota]);
    assert_eq!(apply_conformal(&iota, &zero), S4Point::Infinity);
    assert_eq!(apply_conformal(&iota, &S4Point::Infinity), zero);
    for g in [Generator::Theta, Generator::Sigma] {
        assert!(apply_conformal(&ConformalMap::new(vec![g]), &S4Point::<QSqrt3>::Infinity).is_infinity());
    }
}

#[test]
fn group_table_is_closed() {
    let g = enumerate_group().unwrap();
    assert_eq!(g.len(), 12);
    for a in &g {
        for b in &g {
            assert!(identify(&g, &a.then(b)).is_some(), "{} then {}", a.name(), b.name());
        }
    }
}

#[test]
fn quaternion_units() {
    let (i, j, k) = (Quaternion::<f64>::i(), Quaternion::<f64>::j(), Quaternion::<f64>::k());
    assert_eq!(i.mul(&j), k);
    assert_eq!(j.mul(&i), k.scale(&-1.0));
}
