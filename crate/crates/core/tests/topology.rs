use twistor_core::complex::pinch_analysis;
use twistor_core::discriminant::{discriminant_locus_polys, x_vars, LocusPolys};
use twistor_core::lines::{find_twistor_fibers, FiberSearchConfig, TwistorFiberSet};
use twistor_core::numeric::LocusSystem;
use twistor_core::poly::parse_gauss_poly;
use twistor_core::presets;
use twistor_core::topology::{reconstruct, EventKind, Sweep, TopologyConfig, TopologyReport};

fn run(sys: &LocusSystem, fibers: &TwistorFiberSet, frames: usize) -> (Sweep, TopologyReport) {
    let cfg = TopologyConfig { frames, ..TopologyConfig::default() };
    let (sw, _, rep) = reconstruct(sys, fibers, &cfg).unwrap();
    (sw, rep)
}

#[test]
fn shrinking_circle_is_a_sphere() {
    // x1^2 + x2^2 = 0.1 - t, x3 = 0
    let v = x_vars();
    let p = parse_gauss_poly("10*x1^2 + 10*x2^2 + 10*x4 - 1", &v).unwrap().to_int().unwrap();
    let q = parse_gauss_poly("x3", &v).unwrap().to_int().unwrap();
    let sys = LocusSystem::new(LocusPolys { p, q });
    let cfg = TopologyConfig::default();
    let (sw, rec, rep) = reconstruct(&sys, &TwistorFiberSet::default(), &cfg).unwrap();
    assert_eq!(sw.events.len(), 1);
    let death = &sw.events[0];
    assert_eq!(death.kind, EventKind::Death);
    assert!(death.t_hi - death.t_lo < cfg.event_tol);
    assert!((0.5 * (death.t_lo + death.t_hi) - 0.1).abs() < 1e-5, "{death:?}");
    assert_eq!(rep.chi, 2);
    assert!(rep.connected && rep.pinch_points.is_empty());
    let a = pinch_analysis(&rec.complex).unwrap();
    assert_eq!(a.components.len(), 1);
    assert_eq!((a.components[0].chi, a.components[0].boundaries, a.components[0].genus), (2, 0, Some(0)));
}

fn assert_two_tori(rep: &TopologyReport) {
    assert_eq!(rep.chi, -5);
    assert!(rep.connected && rep.orientable);
    assert_eq!(rep.pinch_points.len(), 5);
    assert_eq!(rep.sheets_per_pinch, vec![2; 5]);
    assert_eq!(rep.unmatched_fiber_images, 0);
    assert_eq!(rep.components_after_pinch_removal.len(), 2);
    for c in &rep.components_after_pinch_removal {
        assert_eq!((c.chi, c.boundaries, c.genus), (-5, 5, Some(1)));
    }
}

#[test]
fn flagship_invariants_do_not_depend_on_resolution() {
    let f = presets::transformed_fermat();
    let sys = LocusSystem::new(discriminant_locus_polys(&f).unwrap());
    let fibers = find_twistor_fibers(&f, &FiberSearchConfig::default()).unwrap();
    let (coarse, rc) = run(&sys, &fibers, 61);
    let (fine, rf) = run(&sys, &fibers, 121);
    assert_two_tori(&rc);
    assert_two_tori(&rf);
    assert_eq!(rc.critical_levels, vec![0.0]);
    assert_eq!(rf.critical_levels, vec![0.0]);
    assert!(rc.dropped_frames.is_empty());
    // only slices hugging the critical level may be unusable
    assert!(rf.dropped_frames.iter().all(|t| t.abs() < 0.01), "{:?}", rf.dropped_frames);
    assert!(rf.frames >= 2 * rc.frames - 5);

    for sw in [&coarse, &fine] {
        // births at t pair off with deaths at -t
        let births: Vec<f64> = sw.events.iter().filter(|e| e.kind == EventKind::Birth).map(|e| e.t_lo).collect();
        let mut deaths: Vec<f64> = sw.events.iter().filter(|e| e.kind == EventKind::Death).map(|e| -e.t_hi).collect();
        assert_eq!(births.len(), deaths.len());
        for b in births {
            let k = deaths
                .iter()
                .position(|d| (d - b).abs() < 2.0 * sw.config.event_tol)
                .unwrap_or_else(|| panic!("birth at {b} has no mirrored death"));
            deaths.swap_remove(k);
        }
        // away from the critical level every curve is a loop, either finite
        // or closing up through infinity
        for fr in sw.frames.iter().filter(|f| !f.critical) {
            assert!(fr.curves.iter().all(|c| c.closed || c.is_open_through_infinity()), "t = {}", fr.t);
        }
    }
}
