use twistor_core::discriminant::discriminant_locus_polys;
use twistor_core::lines::{find_twistor_fibers, FiberSearchConfig, TwistorFiberSet};
use twistor_core::presets;
use twistor_core::ring::{Coeff, QSqrt3, Sqrt3Field};
use twistor_core::symmetry::{iota, theta};
use twistor_core::twistor::{fiber_map, infinity_fiber, tau, twistor_project, Cx, S4Point};

fn flagship() -> TwistorFiberSet {
    find_twistor_fibers(&presets::transformed_fermat(), &FiberSearchConfig::default()).unwrap()
}

fn exact_points(set: &TwistorFiberSet) -> Vec<S4Point<QSqrt3>> {
    set.certified().map(|f| f.exact.clone().unwrap()).collect()
}

#[test]
fn locus_polynomials_vanish_at_every_fiber_image() {
    let lp = discriminant_locus_polys(&presets::transformed_fermat()).unwrap();
    let (p, q) = (lp.p.to_gauss(), lp.q.to_gauss());
    let set = flagship();
    for x in exact_points(&set) {
        let S4Point::Finite(x) = x else { continue };
        assert!(p.eval_sqrt3(&x).unwrap().is_zero());
        assert!(q.eval_sqrt3(&x).unwrap().is_zero());
    }
    // infinity is the origin of the inverted chart
    let sys = twistor_core::numeric::LocusSystem::new(lp);
    assert_eq!(sys.eval(twistor_core::numeric::Chart::Inverted, &[0.0; 4]), [0.0, 0.0]);
}

#[test]
fn fiber_set_is_invariant_under_theta_and_iota() {
    let pts = exact_points(&flagship());
    assert_eq!(pts.len(), 5);
    for p in &pts {
        assert!(pts.contains(&theta(p)), "theta image of {p:?}");
        assert!(pts.contains(&iota(p)), "iota image of {p:?}");
    }
}

#[test]
fn certified_lines_contain_tau_of_their_points() {
    let f = presets::transformed_fermat().poly().to_sqrt3();
    let on_surface = |z: &[Cx<QSqrt3>; 4]| {
        let v: Vec<Sqrt3Field> = z.iter().map(|c| Sqrt3Field::new(c.re.clone(), c.im.clone())).collect();
        f.eval_exact(&v).unwrap().is_zero()
    };
    for x in exact_points(&flagship()) {
        let fm = match &x {
            S4Point::Infinity => infinity_fiber(),
            _ => fiber_map(&x).unwrap(),
        };
        for (a, b) in [(0, 0), (2, -1), (-3, 5)] {
            let p = fm.eval(&Cx::new(QSqrt3::int(a), QSqrt3::int(b)));
            let tp = tau(&p);
            assert!(on_surface(p.coords()) && on_surface(tp.coords()));
            assert_eq!(twistor_project(&tp), twistor_project(&p));
            assert_eq!(twistor_project(&p), x);
        }
    }
}

#[test]
fn fermat_cubic_has_three_and_a_generic_cubic_none() {
    let cfg = FiberSearchConfig::default();
    assert_eq!(find_twistor_fibers(&presets::fermat(), &cfg).unwrap().certified_count(), 3);
    assert_eq!(find_twistor_fibers(&presets::generic(), &cfg).unwrap().certified_count(), 0);
}

#[test]
fn singular_input_is_rejected() {
    let s = twistor_core::discriminant::Surface::parse("z3^3 + z4^3").unwrap();
    assert!(find_twistor_fibers(&s, &FiberSearchConfig::default()).is_err());
}

#[test]
fn records_serialise_points_and_certificates() {
    let recs = flagship().records();
    assert_eq!(recs.len(), 5);
    assert!(recs.iter().all(|r| r.certified));
    assert!(recs.iter().any(|r| r.point == serde_json::json!("inf")));
}
