//! Slice sweeps over time, event tracking, and reconstruction of the locus as
//! a cell complex.
//!
//! Frames are slices at uniform times. Curves in adjacent frames are matched
//! by flowing sample points along the surface from one time to the next.
//! Frames whose curves stop at singular points are critical levels; their
//! curves become the edges of the complex, and the worldsheet of every track
//! of curves between events becomes a face.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix4, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{pinch_analysis, CellComplex, PinchReport, Side, UnionFind, Vertex, VertexKind};
use crate::error::{Error, Result};
use crate::lines::TwistorFiberSet;
use crate::numeric::{Chart, LocusSystem};
use crate::tracer::{
    chordal_locate, constraint, correct, local_frame, slice, slices, time_of, trace_curve, transport, CurvePoint, EndKind,
    SeedCharts, SliceCurve, TraceConfig,
};
use crate::twistor::{chordal, sphere_from_inv};

const NORTH: [f64; 5] = [0.0, 0.0, 0.0, 0.0, 1.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub t0: f64,
    pub t1: f64,
    pub frames: usize,
    pub trace: TraceConfig,
    /// Points per curve carried between frames.
    pub samples: usize,
    /// Chordal distance from a carried point to the curve it lands on.
    pub land_tol: f64,
    /// Width of the time bracket around births and deaths.
    pub event_tol: f64,
    /// Added to three times the inter-frame motion when confirming matches.
    pub match_slack: f64,
    pub tail_doublings: usize,
    /// Tails stop once every curve is this close to infinity.
    pub tail_radius: f64,
    /// Critical points closer than this are one vertex; degenerate ones only
    /// converge to a few digits.
    pub vertex_merge: f64,
    /// Largest distance from a stopped curve end to its vertex.
    pub vertex_reach: f64,
    pub pinch_tol: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            t0: -0.15,
            t1: 0.15,
            frames: 61,
            trace: TraceConfig::default(),
            samples: 16,
            land_tol: 1e-6,
            event_tol: 1e-5,
            match_slack: 0.02,
            tail_doublings: 12,
            tail_radius: 0.05,
            vertex_merge: 1e-4,
            vertex_reach: 0.05,
            pinch_tol: 1e-6,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        self.trace.validate()?;
        if self.frames < 2 {
            return Err(Error::Precondition("a sweep needs at least two frames".into()));
        }
        if !(self.t0 < self.t1) {
            return Err(Error::Precondition("empty time range".into()));
        }
        if self.trace.chart != SeedCharts::Atlas {
            return Err(Error::Precondition("sweeps need both charts".into()));
        }
        if self.samples < 4 {
            return Err(Error::Precondition("at least four samples per curve".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.frames - 1;
        (0..=n).map(|k| (self.t0 * (n - k) as f64 + self.t1 * k as f64) / n as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub curves: Vec<SliceCurve>,
    /// Some curve stops at a singular point that is not infinity.
    pub critical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth,
    Death,
    Merge,
    Split,
    Pinch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t_lo: f64,
    pub t_hi: f64,
    pub tracks: Vec<usize>,
    /// Standard coordinates; `None` at infinity.
    pub location: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackEnd {
    Critical { frame: usize },
    Event { event: usize },
    Boundary,
}

/// One curve followed through consecutive frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Track {
    /// `(frame, curve)` in time order.
    pub members: Vec<(usize, usize)>,
    /// Whether each member runs against the direction of the first.
    pub flips: Vec<bool>,
    pub start: TrackEnd,
    pub end: TrackEnd,
    /// The curves pass through infinity.
    pub open: bool,
}

/// Slices beyond the sweep range confirming that the curves alive at its
/// edge only shrink into infinity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tail {
    pub side: i8,
    pub times: Vec<f64>,
    pub open: Vec<usize>,
    pub closed: Vec<usize>,
    /// Largest chordal distance from infinity in the final tail slice.
    pub reach: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub config: TopologyConfig,
    pub frames: Vec<Frame>,
    /// Times whose slices stopped near, but not at, a critical point.
    #[serde(default)]
    pub dropped: Vec<f64>,
    pub tracks: Vec<Track>,
    pub events: Vec<Event>,
    pub tails: Vec<Tail>,
}

impl Sweep {
    pub fn critical_frames(&self) -> Vec<usize> {
        (0..self.frames.len()).filter(|&k| self.frames[k].critical).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

// --- curve geometry --------------------------------------------------------

struct Geom {
    t: f64,
    points: Vec<CurvePoint>,
    spheres: Vec<[f64; 5]>,
    closed: bool,
    lo: [f64; 5],
    hi: [f64; 5],
}

impl Geom {
    fn new(c: &SliceCurve) -> Self {
        let spheres = c.spheres();
        let mut lo = [f64::INFINITY; 5];
        let mut hi = [f64::NEG_INFINITY; 5];
        for p in &spheres {
            for k in 0..5 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Self { t: c.t, points: c.points.clone(), spheres, closed: c.closed, lo, hi }
    }

    fn box_distance(&self, p: &[f64; 5]) -> f64 {
        (0..5).map(|k| (self.lo[k] - p[k]).max(p[k] - self.hi[k]).max(0.0).powi(2)).sum::<f64>().sqrt()
    }

    /// Signed parameter difference `b - a`, taken the short way round on loops.
    fn param_delta(&self, a: f64, b: f64) -> f64 {
        let d = b - a;
        if !self.closed {
            return d;
        }
        let n = self.spheres.len() as f64;
        let d = d.rem_euclid(n);
        if d > 0.5 * n {
            d - n
        } else {
            d
        }
    }
}

/// Distance from `q` to the true curve near segment `s` of the polyline,
/// found by sliding a point of the curve along its tangent until it is the
/// foot of the perpendicular from `q`.
fn exact_distance(sys: &LocusSystem, g: &Geom, s: usize, frac: f64, q: &CurvePoint, tol: f64) -> Option<f64> {
    let n = g.points.len();
    let a = g.points[s];
    let chart = a.chart;
    let b = g.points[(s + 1) % n].in_chart(chart).unwrap_or(a.y);
    let qy = q.in_chart(chart)?;
    let mut x = [0, 1, 2, 3].map(|k| a.y[k] + frac * (b[k] - a.y[k]));
    for _ in 0..30 {
        let (y, _) = correct(sys, chart, g.t, &x, tol, 12, 0.1)?;
        let (tan, _) = local_frame(sys, chart, g.t, &y)?;
        let d: f64 = (0..4).map(|k| (qy[k] - y[k]) * tan[k]).sum();
        x = [0, 1, 2, 3].map(|k| y[k] + d * tan[k]);
        if d.abs() < 1e-13 {
            return Some(CurvePoint::new(chart, y).chordal(q));
        }
    }
    let (y, _) = correct(sys, chart, g.t, &x, tol, 12, 0.1)?;
    Some(CurvePoint::new(chart, y).chordal(q))
}

/// The curve a point lies on, with its polyline parameter there.
fn land(sys: &LocusSystem, geoms: &[Geom], q: &CurvePoint, cfg: &TopologyConfig) -> Result<Option<(usize, f64)>> {
    let p = q.sphere();
    let coarse = cfg.trace.closure;
    let mut hits: Vec<(f64, usize, f64)> = Vec::new();
    for (i, g) in geoms.iter().enumerate() {
        if g.box_distance(&p) > coarse {
            continue;
        }
        let (d, par) = chordal_locate(&p, &g.spheres, g.closed);
        if d > coarse {
            continue;
        }
        let n = g.spheres.len();
        let s = (par.floor() as usize).min(n.saturating_sub(1));
        let frac = if n > 1 { par - s as f64 } else { 0.0 };
        let s = if !g.closed && s + 1 >= n { n.saturating_sub(2) } else { s };
        if n < 2 {
            continue;
        }
        if let Some(e) = exact_distance(sys, g, s, frac.clamp(0.0, 1.0), q, cfg.trace.tol) {
            if e < cfg.land_tol {
                hits.push((e, i, par));
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    match hits.len() {
        0 => Ok(None),
        1 => Ok(Some((hits[0].1, hits[0].2))),
        _ => Err(Error::Topology(format!(
            "ambiguous matching: two curves within {:.1e} of a carried point; refine the frame spacing",
            hits[1].0
        ))),
    }
}

/// Traced curves of one slice, for measuring distances to the true curves.
pub struct CurveSet {
    geoms: Vec<Geom>,
}

impl CurveSet {
    pub fn new(curves: &[SliceCurve]) -> Self {
        Self { geoms: curves.iter().filter(|c| c.points.len() > 1).map(Geom::new).collect() }
    }

    /// Chordal distance from `q` to the nearest curve, measured from the foot
    /// of the perpendicular on the curve itself rather than on its polyline.
    /// `None` when no polyline comes within `reach`.
    pub fn distance(&self, sys: &LocusSystem, q: &CurvePoint, reach: f64, tol: f64) -> Option<f64> {
        let p = q.sphere();
        let mut best: Option<f64> = None;
        for g in &self.geoms {
            if g.box_distance(&p) > reach {
                continue;
            }
            let (d, par) = chordal_locate(&p, &g.spheres, g.closed);
            if d > reach {
                continue;
            }
            let n = g.spheres.len();
            let s = (par.floor() as usize).min(n - 1);
            let frac = (par - s as f64).clamp(0.0, 1.0);
            let s = if !g.closed && s + 1 >= n { n - 2 } else { s };
            let e = exact_distance(sys, g, s, frac, q, tol).unwrap_or(d);
            best = Some(best.map_or(e, |b: f64| b.min(e)));
        }
        best
    }
}

fn sample_indices(c: &SliceCurve, m: usize) -> Vec<usize> {
    let n = c.points.len();
    if n == 0 {
        return Vec::new();
    }
    // ends of open curves sit at singular points
    let (lo, hi) = if c.closed { (0, n) } else { (n / 10, n - n / 10) };
    let span = hi.saturating_sub(lo).max(1);
    let mut v: Vec<usize> = (0..m).map(|i| (lo + (2 * i + 1) * span / (2 * m)).min(n - 1)).collect();
    v.dedup();
    v
}

fn decimate(s: &[[f64; 5]], m: usize) -> Vec<[f64; 5]> {
    let step = s.len().div_ceil(m).max(1);
    s.iter().step_by(step).copied().collect()
}

fn directed(a: &[[f64; 5]], b: &Geom) -> f64 {
    a.iter().map(|p| chordal_locate(p, &b.spheres, b.closed).0).fold(0.0, f64::max)
}

// --- the sweep --------------------------------------------------------------

type Carried = Vec<(usize, Option<CurvePoint>)>;

struct Work<'a> {
    sys: &'a LocusSystem,
    cfg: &'a TopologyConfig,
    frames: Vec<Frame>,
    geoms: Vec<Vec<Geom>>,
    carried: HashMap<(usize, usize, usize), Carried>,
}

impl Work<'_> {
    fn carry(&mut self, a: usize, b: usize, i: usize) -> &Carried {
        if !self.carried.contains_key(&(a, b, i)) {
            let c = &self.frames[a].curves[i];
            let tb = self.frames[b].t;
            let out: Carried = sample_indices(c, self.cfg.samples)
                .into_par_iter()
                .map(|j| (j, transport(self.sys, &c.points[j], tb, &self.cfg.trace)))
                .collect();
            self.carried.insert((a, b, i), out);
        }
        &self.carried[&(a, b, i)]
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.frames.len() - 1)
            .filter(|&k| !self.frames[k].critical && !self.frames[k + 1].critical)
            .map(|k| (k, k + 1))
            .collect()
    }

    /// Trace curves that carried points land near but the seeding missed.
    fn complete(&mut self) -> Result<()> {
        for _pass in 0..8 {
            let mut added = 0;
            for (k, k1) in self.pairs() {
                for (a, b) in [(k, k1), (k1, k)] {
                    let mut i = 0;
                    while i < self.frames[a].curves.len() {
                        let pts: Vec<CurvePoint> = self.carry(a, b, i).iter().filter_map(|x| x.1).collect();
                        for q in pts {
                            if land(self.sys, &self.geoms[b], &q, self.cfg)?.is_some() {
                                continue;
                            }
                            let c = trace_curve(self.sys, &q, self.frames[b].t, &self.cfg.trace)?;
                            if !(c.closed || c.is_open_through_infinity()) {
                                return Err(Error::Topology(format!(
                                    "curve found by carrying points to t={} ends at {:?}",
                                    self.frames[b].t, c.ends
                                )));
                            }
                            let g = Geom::new(&c);
                            let dup = self.geoms[b].iter().any(|h| {
                                directed(&decimate(&g.spheres, 64), h) < self.cfg.trace.closure
                            });
                            if dup {
                                let near = self.geoms[b]
                                    .iter()
                                    .map(|h| chordal_locate(&q.sphere(), &h.spheres, h.closed).0)
                                    .fold(f64::INFINITY, f64::min);
                                return Err(Error::Topology(format!(
                                    "carried point misses a traced curve at t={} by {near:.2e}; raise the landing tolerance",
                                    self.frames[b].t
                                )));
                            }
                            self.frames[b].curves.push(c);
                            self.geoms[b].push(g);
                            added += 1;
                        }
                        i += 1;
                    }
                }
            }
            if added == 0 {
                return Ok(());
            }
        }
        Err(Error::Topology("curve completion did not settle".into()))
    }

    /// Landing curve and parameter for each carried sample that arrived.
    fn landings(&mut self, a: usize, b: usize, i: usize) -> Result<Vec<(usize, usize, f64, f64)>> {
        let pts: Vec<(usize, CurvePoint)> =
            self.carry(a, b, i).iter().filter_map(|(j, q)| q.map(|q| (*j, q))).collect();
        let src = &self.frames[a].curves[i];
        let mut out = Vec::new();
        for (j, q) in pts {
            let motion = src.points[j].chordal(&q);
            match land(self.sys, &self.geoms[b], &q, self.cfg)? {
                Some((c, par)) => out.push((j, c, par, motion)),
                None => return Err(Error::Topology("carried point left unmatched after completion".into())),
            }
        }
        Ok(out)
    }

    /// Last time before `t_b` the curve is still alive, bracketed to `event_tol`.
    fn bisect(&self, a: usize, i: usize, t_b: f64) -> (f64, f64, Option<[f64; 4]>) {
        let c = &self.frames[a].curves[i];
        let srcs: Vec<CurvePoint> = sample_indices(c, self.cfg.samples).into_iter().map(|j| c.points[j]).collect();
        let (mut alive, mut dead) = (self.frames[a].t, t_b);
        while (dead - alive).abs() > self.cfg.event_tol {
            let mid = 0.5 * (alive + dead);
            if srcs.iter().any(|p| transport(self.sys, p, mid, &self.cfg.trace).is_some()) {
                alive = mid;
            } else {
                dead = mid;
            }
        }
        let pts: Vec<[f64; 4]> =
            srcs.iter().filter_map(|p| transport(self.sys, p, alive, &self.cfg.trace)).filter_map(|p| p.std()).collect();
        let loc = (!pts.is_empty()).then(|| {
            let n = pts.len() as f64;
            [0, 1, 2, 3].map(|k| pts.iter().map(|p| p[k]).sum::<f64>() / n)
        });
        (alive.min(dead), alive.max(dead), loc)
    }
}

/// Sweep slices over `[t0, t1]`, match curves between frames, and locate
/// births and deaths.
pub fn sweep(sys: &LocusSystem, cfg: &TopologyConfig) -> Result<Sweep> {
    cfg.validate()?;
    let times = cfg.times();
    let all = slices(sys, &times, &cfg.trace)?;
    let mut frames = Vec::with_capacity(times.len());
    let mut dropped = Vec::new();
    for (t, curves) in times.iter().zip(all) {
        if let Some(c) = curves.iter().find(|c| c.ends.contains(&EndKind::Truncated) || c.ends.contains(&EndKind::BoxExit)) {
            return Err(Error::Trace(format!("curve at t={t} ends with {:?}", c.ends)));
        }
        let ends: Vec<&CurvePoint> = curves
            .iter()
            .flat_map(|c| [(c.ends[0], &c.points[0]), (c.ends[1], c.points.last().unwrap())])
            .filter(|(e, _)| *e == EndKind::Singular)
            .map(|(_, p)| p)
            .collect();
        let genuine = ends.par_iter().filter(|p| critical_point(sys, p.chart, *t, &p.y, cfg.vertex_reach).is_some()).count();
        if genuine == 0 && !ends.is_empty() {
            // curves passing very close to a critical point of a nearby level,
            // where the tracer stops although nothing is singular
            dropped.push(*t);
            continue;
        }
        if genuine < ends.len() {
            return Err(Error::Topology(format!(
                "{} of {} curve ends at t={t} stop short of a critical point",
                ends.len() - genuine,
                ends.len()
            )));
        }
        frames.push(Frame { t: *t, curves, critical: genuine > 0 });
    }
    if frames.len() < 2 {
        return Err(Error::Topology("fewer than two usable frames".into()));
    }
    for k in 1..frames.len() {
        if frames[k].critical && frames[k - 1].critical {
            return Err(Error::Topology(format!(
                "adjacent critical frames at t={} and t={}; use more frames",
                frames[k - 1].t, frames[k].t
            )));
        }
    }
    let geoms = frames.iter().map(|f| f.curves.iter().map(Geom::new).collect()).collect();
    let mut w = Work { sys, cfg, frames, geoms, carried: HashMap::new() };
    w.complete()?;

    // bipartite matching between adjacent frames
    let mut next: HashMap<(usize, usize), (usize, bool)> = HashMap::new();
    let mut has_prev: HashMap<(usize, usize), ()> = HashMap::new();
    let mut events: Vec<Event> = Vec::new();
    let mut death_of: HashMap<(usize, usize), usize> = HashMap::new();
    let mut birth_of: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, k1) in w.pairs() {
        let na = w.frames[k].curves.len();
        let nb = w.frames[k1].curves.len();
        let mut uf = UnionFind::new(na + nb);
        let mut fwd = Vec::with_capacity(na);
        for i in 0..na {
            let l = w.landings(k, k1, i)?;
            for x in &l {
                uf.union(i, na + x.1);
            }
            fwd.push(l);
        }
        for j in 0..nb {
            for x in w.landings(k1, k, j)? {
                uf.union(na + j, x.1);
            }
        }
        let mut groups: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for i in 0..na {
            groups.entry(uf.find(i)).or_default().0.push(i);
        }
        for j in 0..nb {
            groups.entry(uf.find(na + j)).or_default().1.push(j);
        }
        for (a, b) in groups.values() {
            match (a.len(), b.len()) {
                (1, 1) => {
                    let (i, j) = (a[0], b[0]);
                    let l = &fwd[i];
                    let gb = &w.geoms[k1][j];
                    let motion = l.iter().map(|x| x.3).fold(0.0, f64::max);
                    let ga = &w.geoms[k][i];
                    let h = directed(&decimate(&ga.spheres, 64), gb).max(directed(&decimate(&gb.spheres, 64), ga));
                    if h > 3.0 * motion + cfg.match_slack {
                        return Err(Error::Topology(format!(
                            "curves matched between t={} and t={} are {h:.3} apart",
                            w.frames[k].t, w.frames[k1].t
                        )));
                    }
                    let (mut pos, mut neg) = (0, 0);
                    for win in l.windows(2) {
                        let d = gb.param_delta(win[0].2, win[1].2);
                        if d > 0.0 {
                            pos += 1;
                        } else if d < 0.0 {
                            neg += 1;
                        }
                    }
                    next.insert((k, i), (j, neg > pos));
                    has_prev.insert((k1, j), ());
                }
                (1, 0) => {
                    let i = a[0];
                    let (lo, hi, loc) = w.bisect(k, i, w.frames[k1].t);
                    death_of.insert((k, i), events.len());
                    events.push(Event { kind: EventKind::Death, t_lo: lo, t_hi: hi, tracks: vec![], location: loc });
                }
                (0, 1) => {
                    let j = b[0];
                    let (lo, hi, loc) = w.bisect(k1, j, w.frames[k].t);
                    birth_of.insert((k1, j), events.len());
                    events.push(Event { kind: EventKind::Birth, t_lo: lo, t_hi: hi, tracks: vec![], location: loc });
                }
                (p, q) => {
                    return Err(Error::Topology(format!(
                        "{p} curves become {q} between t={} and t={} away from a critical level",
                        w.frames[k].t, w.frames[k1].t
                    )));
                }
            }
        }
    }

    // chain matches into tracks
    let nf = w.frames.len();
    let mut tracks = Vec::new();
    for k in 0..nf {
        if w.frames[k].critical {
            continue;
        }
        for i in 0..w.frames[k].curves.len() {
            if has_prev.contains_key(&(k, i)) {
                continue;
            }
            let start = if let Some(&e) = birth_of.get(&(k, i)) {
                TrackEnd::Event { event: e }
            } else if k == 0 {
                TrackEnd::Boundary
            } else if w.frames[k - 1].critical {
                TrackEnd::Critical { frame: k - 1 }
            } else {
                return Err(Error::Topology(format!("curve at t={} has no predecessor", w.frames[k].t)));
            };
            let mut members = vec![(k, i)];
            let mut flips = vec![false];
            let (mut kk, mut ii, mut flip) = (k, i, false);
            while let Some(&(j, f)) = next.get(&(kk, ii)) {
                flip ^= f;
                kk += 1;
                ii = j;
                members.push((kk, ii));
                flips.push(flip);
            }
            let end = if let Some(&e) = death_of.get(&(kk, ii)) {
                TrackEnd::Event { event: e }
            } else if kk == nf - 1 {
                TrackEnd::Boundary
            } else if w.frames[kk + 1].critical {
                TrackEnd::Critical { frame: kk + 1 }
            } else {
                return Err(Error::Topology(format!("curve at t={} has no successor", w.frames[kk].t)));
            };
            let open = w.frames[k].curves[i].is_open_through_infinity();
            if members.iter().any(|&(f, c)| w.frames[f].curves[c].is_open_through_infinity() != open) {
                return Err(Error::Topology("a track changes between open and closed".into()));
            }
            let id = tracks.len();
            for end in [start, end] {
                if let TrackEnd::Event { event } = end {
                    events[event].tracks.push(id);
                }
            }
            tracks.push(Track { members, flips, start, end, open });
        }
    }

    let mut tails = Vec::new();
    for side in [-1i8, 1] {
        let edge = if side < 0 { 0 } else { nf - 1 };
        let alive: Vec<&Track> = tracks.iter().filter(|t| if side < 0 { t.start } else { t.end } == TrackEnd::Boundary).collect();
        let open = alive.iter().filter(|t| t.open).count();
        let closed = alive.len() - open;
        tails.push(tail(sys, w.frames[edge].t, side, (open, closed), cfg)?);
    }
    Ok(Sweep { config: cfg.clone(), frames: w.frames, dropped, tracks, events, tails })
}

/// Follow the curves past the sweep edge in doubling time steps until they
/// are within `tail_radius` of infinity.
fn tail(sys: &LocusSystem, edge: f64, side: i8, expected: (usize, usize), cfg: &TopologyConfig) -> Result<Tail> {
    if edge * side as f64 <= 0.0 {
        return Err(Error::Precondition("the sweep range must contain t = 0 in its interior".into()));
    }
    let trace = TraceConfig { chart: SeedCharts::Inverted, ..cfg.trace.clone() };
    let mut out = Tail { side, times: vec![], open: vec![], closed: vec![], reach: f64::INFINITY };
    let mut tau = edge;
    for _ in 0..cfg.tail_doublings {
        tau *= 2.0;
        let s = 1.0 / tau.abs();
        let zoomed = sys.zoomed_at_infinity(s);
        let curves = slice(&zoomed, side as f64, &trace)?;
        let open = curves.iter().filter(|c| c.is_open_through_infinity()).count();
        let closed = curves.iter().filter(|c| c.closed).count();
        if open + closed != curves.len() {
            return Err(Error::Topology(format!("tail slice at t={tau} has a curve that neither closes nor reaches infinity")));
        }
        let reach = curves
            .iter()
            .flat_map(|c| c.points.iter())
            .map(|p| chordal(&sphere_from_inv(&p.y.map(|v| v * s)), &NORTH))
            .fold(0.0, f64::max);
        out.times.push(tau);
        out.open.push(open);
        out.closed.push(closed);
        out.reach = reach;
        if (open, closed) != expected {
            return Err(Error::Topology(format!(
                "tail slice at t={tau} has {open} open and {closed} closed curves, the sweep edge has {} and {}; widen the time range",
                expected.0, expected.1
            )));
        }
        if reach < cfg.tail_radius {
            return Ok(out);
        }
    }
    Err(Error::Topology(format!(
        "curve tracks still alive at the sweep edge do not reach infinity by t={tau}; widen the time range"
    )))
}

// --- vertices on critical levels ------------------------------------------

fn det3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn minors(rows: &[[f64; 4]; 3]) -> [f64; 4] {
    let pick = |k: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != k).collect();
        let r = |i: usize| [rows[i][cols[0]], rows[i][cols[1]], rows[i][cols[2]]];
        det3(r(0), r(1), r(2))
    };
    [pick(0), pick(1), pick(2), pick(3)]
}

/// Solve for a point of the slice where the Jacobian of `(P, Q, time)` has
/// rank below three, starting near `y0`.
pub fn critical_point(sys: &LocusSystem, chart: Chart, t: f64, y0: &[f64; 4], reach: f64) -> Option<[f64; 4]> {
    let (_, g0) = sys.eval_grad(chart, y0);
    let (_, gc0) = constraint(chart, t, y0);
    let n = |v: &[f64; 4]| v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let (sp, sq, sc) = (1.0 / n(&g0[0]), 1.0 / n(&g0[1]), 1.0 / n(&gc0));
    let sm = sp * sq * sc;
    let resid = |y: &[f64; 4]| -> [f64; 7] {
        let (v, g) = sys.eval_grad(chart, y);
        let (c, gc) = constraint(chart, t, y);
        let m = minors(&[g[0], g[1], gc]);
        [v[0] * sp, v[1] * sq, c * sc, m[0] * sm, m[1] * sm, m[2] * sm, m[3] * sm]
    };
    let norm = |r: &[f64; 7]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut y = *y0;
    let mut r = resid(&y);
    let mut mu = 1e-6;
    for _ in 0..80 {
        let h = 1e-6 * (1.0 + n(&y));
        let mut jac = [[0.0; 4]; 7];
        for k in 0..4 {
            let (mut a, mut b) = (y, y);
            a[k] += h;
            b[k] -= h;
            let (ra, rb) = (resid(&a), resid(&b));
            for i in 0..7 {
                jac[i][k] = (ra[i] - rb[i]) / (2.0 * h);
            }
        }
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for i in 0..7 {
            for a in 0..4 {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..4 {
                    jtj[(a, b)] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut m = jtj;
            for a in 0..4 {
                m[(a, a)] += mu * (1.0 + jtj[(a, a)]);
            }
            let Some(d) = m.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let yn = [y[0] + d[0], y[1] + d[1], y[2] + d[2], y[3] + d[3]];
            let rn = resid(&yn);
            if norm(&rn) < norm(&r) {
                let step = d.norm();
                y = yn;
                r = rn;
                mu = (mu / 4.0).max(1e-12);
                improved = true;
                if step < 1e-14 * (1.0 + n(&y)) {
                    break;
                }
                break;
            }
            mu *= 8.0;
        }
        if !improved || norm(&r) < 1e-14 {
            break;
        }
    }
    let dist = (0..4).map(|k| (y[k] - y0[k]).powi(2)).sum::<f64>().sqrt();
    let ok = r[0].abs() < 1e-9 && r[1].abs() < 1e-9 && r[2].abs() < 1e-9 && r[3..].iter().all(|m| m.abs() < 1e-6);
    (ok && dist < reach).then_some(y)
}

// --- complex assembly --------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelGraph {
    pub frame: usize,
    pub t: f64,
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

/// The complex together with the data it was built from.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub complex: CellComplex,
    pub events: Vec<Event>,
    pub levels: Vec<LevelGraph>,
    /// Face built from each track, in track order.
    pub track_faces: Vec<usize>,
    /// Certified fiber images that no vertex landed on.
    pub unmatched_images: usize,
}

struct Builder<'a> {
    sys: &'a LocusSystem,
    sweep: &'a Sweep,
    fibers: &'a TwistorFiberSet,
    images: Vec<[f64; 5]>,
    cx: CellComplex,
    spheres: Vec<[f64; 5]>,
    infinity: Option<usize>,
}

impl Builder<'_> {
    fn cfg(&self) -> &TopologyConfig {
        &self.sweep.config
    }

    fn vertex_at(&mut self, s: [f64; 5], point: Option<[f64; 4]>, kind: VertexKind, label: String) -> Result<usize> {
        let tol = if kind == VertexKind::Marker { 0.0 } else { self.cfg().vertex_merge };
        if let Some(v) = (0..self.spheres.len()).find(|&v| chordal(&self.spheres[v], &s) < tol) {
            return Ok(v);
        }
        if kind != VertexKind::Marker {
            if let Some(v) = (0..self.spheres.len()).find(|&v| chordal(&self.spheres[v], &s) < self.cfg().vertex_reach) {
                return Err(Error::Topology(format!(
                    "vertices {:.1e} apart: too close to tell apart, too far to merge",
                    chordal(&self.spheres[v], &s)
                )));
            }
        }
        let pinch = self.images.iter().any(|im| chordal(im, &s) < self.cfg().pinch_tol);
        let kind = if pinch && kind != VertexKind::Infinity { VertexKind::Pinch } else { kind };
        self.spheres.push(s);
        Ok(self.cx.add_vertex(Vertex { point, kind, pinch, label }))
    }

    fn infinity(&mut self) -> Result<usize> {
        if let Some(v) = self.infinity {
            return Ok(v);
        }
        let v = self.vertex_at(NORTH, None, VertexKind::Infinity, "inf".into())?;
        self.infinity = Some(v);
        Ok(v)
    }

    fn resolve_end(&mut self, p: &CurvePoint, kind: EndKind, t: f64) -> Result<usize> {
        match kind {
            EndKind::Infinity => self.infinity(),
            EndKind::Singular => {
                let reach = self.cfg().vertex_reach;
                let from_fiber = self.fibers.locator.as_ref().and_then(|l| l.locate(p.chart, &p.y)).and_then(|y| {
                    let q = CurvePoint::new(p.chart, y);
                    let s = q.sphere();
                    let on_image = self.images.iter().any(|im| chordal(im, &s) < self.cfg().pinch_tol);
                    (on_image && chordal(&s, &p.sphere()) < reach).then_some(q)
                });
                let q = match from_fiber {
                    Some(q) => q,
                    None => {
                        let y = critical_point(self.sys, p.chart, t, &p.y, 1.0).ok_or_else(|| {
                            Error::Topology(format!("no critical point found near a curve end at t={t}"))
                        })?;
                        CurvePoint::new(p.chart, y)
                    }
                };
                if q.chordal(p) > reach {
                    return Err(Error::Topology(format!("vertex at t={t} is {:.3} from the curve end", q.chordal(p))));
                }
                if q.chart == Chart::Inverted && q.y.iter().all(|v| v.abs() < 1e-12) {
                    return self.infinity();
                }
                let n = self.cx.vertices.len();
                self.vertex_at(q.sphere(), q.std(), VertexKind::Critical, format!("v{n}"))
            }
            other => Err(Error::Topology(format!("curve end {other:?} on a critical level"))),
        }
    }

    fn tail(&self, s: Side) -> usize {
        let e = &self.cx.edges[s.0];
        if s.1 {
            e.a
        } else {
            e.b
        }
    }

    fn head(&self, s: Side) -> usize {
        let e = &self.cx.edges[s.0];
        if s.1 {
            e.b
        } else {
            e.a
        }
    }
}

fn reversed(c: &[Side]) -> Vec<Side> {
    c.iter().rev().map(|&(e, f)| (e, !f)).collect()
}

/// Assemble the cell complex: critical level curves give vertices and edges,
/// tracks give faces.
pub fn build_complex(sys: &LocusSystem, sweep: &Sweep, fibers: &TwistorFiberSet) -> Result<Reconstruction> {
    let cfg = &sweep.config;
    let images: Vec<[f64; 5]> = fibers.images().iter().map(|p| p.to_sphere()).collect();
    let mut b = Builder { sys, sweep, fibers, images, cx: CellComplex::new(), spheres: vec![], infinity: None };
    if fibers.certified().any(|f| f.point.is_infinity()) {
        b.infinity()?;
    }
    let nf = sweep.frames.len();
    let member_of: HashMap<(usize, usize), usize> = sweep
        .tracks
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| t.members.iter().map(move |m| (*m, ti)))
        .collect();
    let mut levels = Vec::new();
    // cycle sides per (track, which end): (param, side)
    let mut landed: HashMap<(usize, bool), Vec<(f64, Side)>> = HashMap::new();
    for c in sweep.critical_frames() {
        if c == 0 || c == nf - 1 {
            return Err(Error::Topology("critical level at the sweep edge; widen the time range".into()));
        }
        let frame = &sweep.frames[c];
        let first_edge = b.cx.edges.len();
        let first_vertex = b.cx.vertices.len();
        let mut edge_curve = Vec::new();
        for (ci, curve) in frame.curves.iter().enumerate() {
            let (va, vb) = if curve.closed {
                let n = b.cx.vertices.len();
                let p = curve.points[0];
                let v = b.vertex_at(p.sphere(), p.std(), VertexKind::Marker, format!("m{n}"))?;
                (v, v)
            } else {
                let (p0, p1) = (curve.points[0], *curve.points.last().unwrap());
                (b.resolve_end(&p0, curve.ends[0], frame.t)?, b.resolve_end(&p1, curve.ends[1], frame.t)?)
            };
            let e = b.cx.add_edge(va, vb, curve.spheres(), false)?;
            edge_curve.push((e, ci));
        }
        levels.push(LevelGraph {
            frame: c,
            t: frame.t,
            vertices: (first_vertex..b.cx.vertices.len()).collect(),
            edges: (first_edge..b.cx.edges.len()).collect(),
        });
        // carry every edge to both neighbouring frames
        for (side_frame, at_start) in [(c + 1, true), (c - 1, false)] {
            let geoms: Vec<Geom> = sweep.frames[side_frame].curves.iter().map(Geom::new).collect();
            let tb = sweep.frames[side_frame].t;
            let found: Vec<Result<(usize, f64, bool)>> = edge_curve
                .par_iter()
                .map(|&(_, ci)| carry_edge(sys, &frame.curves[ci], tb, &geoms, cfg))
                .collect();
            for (&(e, _), f) in edge_curve.iter().zip(found) {
                let (curve, par, fwd) = f?;
                let ti = *member_of.get(&(side_frame, curve)).ok_or_else(|| {
                    Error::Topology(format!("edge carried to t={tb} lands on a curve outside every track"))
                })?;
                let tr = &sweep.tracks[ti];
                let this_end = if at_start { tr.start } else { tr.end };
                if this_end != (TrackEnd::Critical { frame: c }) {
                    return Err(Error::Topology("edge carried onto a track that does not touch its level".into()));
                }
                // orient relative to the track's first member
                let flip = if at_start { false } else { *tr.flips.last().unwrap() };
                landed.entry((ti, at_start)).or_default().push((par, (e, fwd ^ flip)));
            }
        }
    }

    let mut events = sweep.events.clone();
    let mut event_vertex: HashMap<usize, usize> = HashMap::new();
    let mut track_faces = Vec::new();
    for (ti, tr) in sweep.tracks.iter().enumerate() {
        let mut cycles: Vec<Vec<Side>> = Vec::new();
        let mut points: Vec<usize> = Vec::new();
        for (end, at_start) in [(tr.start, true), (tr.end, false)] {
            match end {
                TrackEnd::Critical { .. } => {
                    let mut l = landed.remove(&(ti, at_start)).unwrap_or_default();
                    if l.is_empty() {
                        return Err(Error::Topology(format!("track {ti} has no edges on its critical level")));
                    }
                    l.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut cyc: Vec<Side> = l.into_iter().map(|x| x.1).collect();
                    // the order follows the member curve; edges run against it when reversed
                    let flip = if at_start { false } else { *tr.flips.last().unwrap() };
                    if flip {
                        cyc.reverse();
                    }
                    let n = cyc.len();
                    if (0..n).any(|i| b.head(cyc[i]) != b.tail(cyc[(i + 1) % n])) {
                        return Err(Error::Topology(format!(
                            "edges below track {ti} at t={} do not form a cycle",
                            sweep.frames[if at_start { tr.members[0].0 - 1 } else { tr.members.last().unwrap().0 + 1 }].t
                        )));
                    }
                    cycles.push(cyc);
                }
                TrackEnd::Event { event } => {
                    let v = match event_vertex.get(&event) {
                        Some(&v) => v,
                        None => {
                            let ev = &events[event];
                            let p = ev.location.ok_or_else(|| Error::Topology("event at infinity".into()))?;
                            let kind = if ev.kind == EventKind::Birth { VertexKind::Birth } else { VertexKind::Death };
                            let s = crate::twistor::sphere_from_std(&p);
                            b.spheres.push(s);
                            let v = b.cx.add_vertex(Vertex { point: Some(p), kind, pinch: false, label: format!("e{event}") });
                            event_vertex.insert(event, v);
                            v
                        }
                    };
                    points.push(v);
                }
                TrackEnd::Boundary => {
                    if !tr.open {
                        points.push(b.infinity()?);
                    }
                }
            }
        }
        if tr.open {
            let inf = b.infinity()?;
            if cycles.is_empty() {
                points.push(inf);
            } else if cycles.iter().any(|c| !c.iter().any(|s| b.tail(*s) == inf)) {
                return Err(Error::Topology(format!("open track {ti} borders a cycle that misses infinity")));
            }
        }
        points.dedup();
        let label = format!("track{ti}");
        let face = match (cycles.len(), points.len()) {
            (0, 1) => b.cx.add_face(vec![], Some(points[0]), label)?,
            (0, 2) if points[0] == points[1] => b.cx.add_face(vec![], Some(points[0]), label)?,
            (0, 2) => {
                let s = b.cx.add_edge(points[0], points[1], vec![], true)?;
                b.cx.add_face(vec![(s, true), (s, false)], None, label)?
            }
            (1, 0) => b.cx.add_face(cycles.pop().unwrap(), None, label)?,
            (1, 1) => {
                let cyc = cycles.pop().unwrap();
                let base = b.tail(cyc[0]);
                let mut bd = cyc;
                if base != points[0] {
                    let s = b.cx.add_edge(base, points[0], vec![], true)?;
                    bd.push((s, true));
                    bd.push((s, false));
                }
                b.cx.add_face(bd, None, label)?
            }
            (2, 0) => {
                let c2 = cycles.pop().unwrap();
                let c1 = cycles.pop().unwrap();
                let (b1, b2) = (b.tail(c1[0]), b.tail(c2[0]));
                let s = b.cx.add_edge(b1, b2, vec![], true)?;
                let mut bd = c1;
                bd.push((s, true));
                bd.extend(reversed(&c2));
                bd.push((s, false));
                b.cx.add_face(bd, None, label)?
            }
            (c, p) => return Err(Error::Topology(format!("track {ti} has {c} boundary cycles and {p} end points"))),
        };
        track_faces.push(face);
    }
    if let Some((k, _)) = landed.iter().next() {
        return Err(Error::Topology(format!("edges landed on track {} which does not end on their level", k.0)));
    }

    // pinch events at critical levels
    for lg in &levels {
        for &v in &lg.vertices {
            if b.cx.vertices[v].pinch {
                events.push(Event {
                    kind: EventKind::Pinch,
                    t_lo: lg.t,
                    t_hi: lg.t,
                    tracks: vec![],
                    location: b.cx.vertices[v].point,
                });
            }
        }
    }
    if let Some(inf) = b.infinity {
        if b.cx.vertices[inf].pinch && !levels.iter().any(|l| l.vertices.contains(&inf)) {
            events.push(Event { kind: EventKind::Pinch, t_lo: 0.0, t_hi: 0.0, tracks: vec![], location: None });
        }
    }
    let unmatched_images =
        b.images.iter().filter(|im| !b.spheres.iter().zip(&b.cx.vertices).any(|(s, v)| v.pinch && chordal(s, im) < cfg.pinch_tol)).count();
    Ok(Reconstruction { complex: b.cx, events, levels, track_faces, unmatched_images })
}

/// Carry an edge of a critical level to a neighbouring frame: the curve it
/// lands on, the landing parameter, and whether the edge runs along the curve.
fn carry_edge(sys: &LocusSystem, curve: &SliceCurve, tb: f64, geoms: &[Geom], cfg: &TopologyConfig) -> Result<(usize, f64, bool)> {
    let n = curve.points.len();
    if n < 8 {
        return Err(Error::Topology("edge too short to carry".into()));
    }
    let t = time_of(&curve.points[0]);
    let lo = n / 10;
    let hi = n - n / 10;
    let mut order: Vec<(f64, usize)> = (lo.max(3)..hi.min(n - 3))
        .map(|i| (local_frame(sys, curve.points[i].chart, t, &curve.points[i].y).map_or(0.0, |f| f.1), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let d = 2;
    for &(_, i) in order.iter().take(6) {
        let pts = [i - d, i, i + d].map(|j| transport(sys, &curve.points[j], tb, &cfg.trace));
        let [Some(a), Some(m), Some(c)] = pts else { continue };
        let la = land(sys, geoms, &a, cfg)?;
        let lm = land(sys, geoms, &m, cfg)?;
        let lc = land(sys, geoms, &c, cfg)?;
        let (Some(la), Some(lm), Some(lc)) = (la, lm, lc) else { continue };
        if la.0 != lm.0 || lc.0 != lm.0 {
            continue;
        }
        let dp = geoms[lm.0].param_delta(la.1, lc.1);
        if dp == 0.0 {
            continue;
        }
        return Ok((lm.0, lm.1, dp > 0.0));
    }
    Err(Error::Topology(format!("could not carry a level edge from t={t} to t={tb}")))
}

// --- report -----------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub chi: i64,
    pub boundaries: usize,
    pub genus: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyReport {
    pub chi: i64,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// Standard coordinates of pinch vertices, or `"inf"`.
    pub pinch_points: Vec<serde_json::Value>,
    pub components_after_pinch_removal: Vec<ComponentSummary>,
    pub connected: bool,
    pub orientable: bool,
    pub sheets_per_pinch: Vec<usize>,
    pub unmatched_fiber_images: usize,
    pub frames: usize,
    pub dropped_frames: Vec<f64>,
    pub critical_levels: Vec<f64>,
    pub births: usize,
    pub deaths: usize,
    pub tracks: usize,
    pub analysis: PinchReport,
}

pub fn report(sweep: &Sweep, rec: &Reconstruction) -> Result<TopologyReport> {
    let c = &rec.complex;
    let analysis = pinch_analysis(c)?;
    let (v, e, f) = c.counts();
    let pinch_points = c
        .pinch_vertices()
        .into_iter()
        .map(|i| match c.vertices[i].point {
            Some(p) => serde_json::json!(p),
            None => serde_json::json!("inf"),
        })
        .collect();
    Ok(TopologyReport {
        chi: crate::complex::euler_characteristic(c),
        vertices: v,
        edges: e,
        faces: f,
        pinch_points,
        components_after_pinch_removal: analysis
            .components
            .iter()
            .map(|k| ComponentSummary { chi: k.chi, boundaries: k.boundaries, genus: k.genus })
            .collect(),
        connected: c.is_connected(),
        orientable: analysis.components.iter().all(|k| k.orientable),
        sheets_per_pinch: analysis.sheets_per_pinch.clone(),
        unmatched_fiber_images: rec.unmatched_images,
        frames: sweep.frames.len(),
        dropped_frames: sweep.dropped.clone(),
        critical_levels: sweep.critical_frames().iter().map(|&k| sweep.frames[k].t).collect(),
        births: sweep.count(EventKind::Birth),
        deaths: sweep.count(EventKind::Death),
        tracks: sweep.tracks.len(),
        analysis,
    })
}

/// Sweep, build and analyse in one go.
pub fn reconstruct(sys: &LocusSystem, fibers: &TwistorFiberSet, cfg: &TopologyConfig) -> Result<(Sweep, Reconstruction, TopologyReport)> {
    let sw = sweep(sys, cfg)?;
    let rec = build_complex(sys, &sw, fibers)?;
    let rep = report(&sw, &rec)?;
    Ok((sw, rec, rep))
}
