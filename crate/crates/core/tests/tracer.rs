use twistor_core::discriminant::{discriminant_locus_polys, x_vars, LocusPolys};
use twistor_core::numeric::{norm4, Chart, LocusSystem};
use twistor_core::poly::parse_gauss_poly;
use twistor_core::presets;
use twistor_core::symmetry::theta;
use twistor_core::topology::CurveSet;
use twistor_core::tracer::{find_seeds, point_residual, slice, CurvePoint, EndKind, SeedCharts, SliceCurve, TraceConfig};
use twistor_core::twistor::S4Point;

fn flagship() -> LocusSystem {
    LocusSystem::new(discriminant_locus_polys(&presets::transformed_fermat()).unwrap())
}

fn system(p: &str, q: &str) -> LocusSystem {
    let v = x_vars();
    let p = parse_gauss_poly(p, &v).unwrap().to_int().unwrap();
    let q = parse_gauss_poly(q, &v).unwrap().to_int().unwrap();
    LocusSystem::new(LocusPolys { p, q })
}

fn charted(chart: SeedCharts) -> TraceConfig {
    TraceConfig { chart, ..TraceConfig::default() }
}

fn max_distance(sys: &LocusSystem, pts: impl Iterator<Item = CurvePoint>, to: &[SliceCurve], cfg: &TraceConfig) -> f64 {
    let set = CurveSet::new(to);
    pts.map(|p| set.distance(sys, &p, cfg.closure, cfg.tol).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
}

#[test]
fn flagship_points_satisfy_the_residual_contract() {
    let sys = flagship();
    let cfg = TraceConfig::default();
    let curves = slice(&sys, 0.05, &cfg).unwrap();
    assert_eq!(curves.len(), 18);
    for c in &curves {
        assert!(c.residual_max < 2.0 * cfg.tol);
        for p in &c.points {
            assert!(point_residual(&sys, p) < 1e-9);
        }
        // loops, or curves whose two ends run into infinity
        assert!(c.closed || c.is_open_through_infinity(), "{:?}", c.ends);
    }
}

#[test]
fn seeds_near_a_pinch_point_at_time_zero() {
    let seeds = find_seeds(&flagship(), 0.0, &TraceConfig::default());
    let best = seeds
        .iter()
        .filter_map(|s| s.std())
        .map(|x| ((x[0] + 1.0).powi(2) + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt())
        .fold(f64::INFINITY, f64::min);
    assert!(best < 0.1, "{best}");
}

#[test]
fn standard_chart_is_empty_at_large_time() {
    let sys = flagship();
    assert!(find_seeds(&sys, 10.0, &charted(SeedCharts::Standard)).is_empty());
    assert!(slice(&sys, 10.0, &charted(SeedCharts::Standard)).unwrap().is_empty());
}

#[test]
fn slices_are_invariant_under_rotation() {
    let sys = flagship();
    let cfg = TraceConfig::default();
    let curves = slice(&sys, 0.02, &cfg).unwrap();
    let rotated = curves.iter().flat_map(|c| c.points.iter()).filter_map(|p| p.std()).filter(|x| norm4(x) < 50.0).map(|x| {
        let S4Point::Finite(y) = theta(&S4Point::Finite(x)) else { unreachable!() };
        CurvePoint::new(Chart::Standard, y)
    });
    let d = max_distance(&sys, rotated, &curves, &cfg);
    assert!(d < 1e-6, "{d}");
}

// standard traces stop at the seed box and inverted ones at its image, so
// compare where both reach
#[test]
fn charts_agree_where_both_are_well_conditioned() {
    let sys = flagship();
    let std = slice(&sys, 0.05, &charted(SeedCharts::Standard)).unwrap();
    let inv = slice(&sys, 0.05, &charted(SeedCharts::Inverted)).unwrap();
    assert!(!std.is_empty() && !inv.is_empty());
    let window = |c: &SliceCurve| -> Vec<CurvePoint> {
        c.points
            .iter()
            .filter(|p| p.std().is_some_and(|x| (0.5..2.0).contains(&norm4(&x))))
            .copied()
            .collect()
    };
    let cfg = TraceConfig::default();
    let a = max_distance(&sys, inv.iter().flat_map(window), &std, &cfg);
    let b = max_distance(&sys, std.iter().flat_map(window), &inv, &cfg);
    assert!(a < 1e-6 && b < 1e-6, "{a} {b}");
}

#[test]
fn slicing_is_deterministic() {
    let sys = flagship();
    let cfg = TraceConfig::default();
    let a = slice(&sys, 0.03, &cfg).unwrap();
    let b = slice(&sys, 0.03, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn small_loops_close() {
    let sys = system("10000*x1^2 + 10000*x2^2 - 1", "x3");
    let curves = slice(&sys, 0.0, &charted(SeedCharts::Standard)).unwrap();
    assert_eq!(curves.len(), 1);
    assert!(curves[0].closed);
    let len = curves[0].chart_length();
    assert!((len - 0.02 * std::f64::consts::PI).abs() < 1e-3, "{len}");
}

#[test]
fn inverted_chart_alone_finds_a_slice() {
    let sys = system("x1^2 + x2^2 - 1", "x3");
    for t in [0.3, -0.7] {
        let curves = slice(&sys, t, &charted(SeedCharts::Inverted)).unwrap();
        assert_eq!(curves.len(), 1, "t = {t}");
        assert!(curves[0].closed);
        for p in &curves[0].points {
            let x = p.std().unwrap();
            assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() < 1e-8 && x[2].abs() < 1e-8 && (x[3] - t).abs() < 1e-8);
        }
    }
}

#[test]
fn open_curves_end_at_the_box() {
    let sys = system("x1", "x2");
    let curves = slice(&sys, 0.0, &charted(SeedCharts::Standard)).unwrap();
    assert_eq!(curves[0].ends, [EndKind::BoxExit, EndKind::BoxExit]);
}
