//! Slice curves of the discriminant locus by predictor-corrector continuation.
//!
//! A slice at time `t` is `{P = Q = 0, x4 = t}`. Curves are followed in `R^4`
//! with three equations: `P`, `Q` and the slice constraint, which is
//! `x4 - t` in the standard chart and `y4 + t |y|^2` in the inverted chart
//! (the same slice seen through `iota`). Curves may pass between charts.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{invert_point, norm4, Chart, LocusSystem};
use crate::twistor::{sphere_from_inv, sphere_from_std};

/// Which charts are seeded, and whether curves may cross between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedCharts {
    Standard,
    Inverted,
    /// Both charts with switching: the whole of `S^4`.
    Atlas,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceConfig {
    /// Seed grid points per axis.
    pub grid: usize,
    pub bbox_lo: [f64; 3],
    pub bbox_hi: [f64; 3],
    /// Corrector tolerance on `|P| + |Q|`.
    pub tol: f64,
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub closure: f64,
    /// Trip value for the second singular value of the slice Jacobian.
    pub sing_threshold: f64,
    pub chart: SeedCharts,
    /// Leave the standard chart when `|x|` exceeds this.
    pub switch_out: f64,
    /// Leave the inverted chart when `|y|` exceeds `1 / switch_in`.
    pub switch_in: f64,
    pub max_points: usize,
    /// A seed this close to an already traced curve is skipped.
    pub dedup: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            grid: 61,
            bbox_lo: [-2.2; 3],
            bbox_hi: [2.2; 3],
            tol: 1e-10,
            step: 0.01,
            min_step: 1e-6,
            max_step: 0.02,
            closure: 0.02,
            sing_threshold: 1e-5,
            chart: SeedCharts::Atlas,
            switch_out: 2.0,
            switch_in: 1.5,
            max_points: 200_000,
            dedup: 2e-3,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.tol, self.step, self.min_step, self.max_step, self.closure, self.sing_threshold, self.dedup];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Precondition("tolerances and steps must be positive".into()));
        }
        if self.min_step >= self.max_step || self.step > self.max_step || self.step < self.min_step {
            return Err(Error::Precondition("need min_step <= step <= max_step, min_step < max_step".into()));
        }
        if self.closure <= 10.0 * self.min_step {
            return Err(Error::Precondition("closure distance below the step noise floor".into()));
        }
        if self.grid < 2 || (0..3).any(|k| self.bbox_lo[k] >= self.bbox_hi[k]) {
            return Err(Error::Precondition("empty seed grid".into()));
        }
        if self.switch_out <= self.switch_in {
            return Err(Error::Precondition("chart switch radii must overlap".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    Closed,
    BoxExit,
    Singular,
    /// Ran into the point at infinity (the origin of the inverted chart).
    Infinity,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub chart: Chart,
    pub y: [f64; 4],
}

impl CurvePoint {
    pub fn new(chart: Chart, y: [f64; 4]) -> Self {
        Self { chart, y }
    }

    /// Position on the unit sphere of `R^5`.
    pub fn sphere(&self) -> [f64; 5] {
        match self.chart {
            Chart::Standard => sphere_from_std(&self.y),
            Chart::Inverted => sphere_from_inv(&self.y),
        }
    }

    /// Coordinates in the requested chart; `None` at the chart's pole.
    pub fn in_chart(&self, chart: Chart) -> Option<[f64; 4]> {
        if chart == self.chart {
            Some(self.y)
        } else if norm4(&self.y) == 0.0 {
            None
        } else {
            Some(invert_point(&self.y))
        }
    }

    pub fn std(&self) -> Option<[f64; 4]> {
        self.in_chart(Chart::Standard)
    }

    pub fn chordal(&self, other: &Self) -> f64 {
        crate::twistor::chordal(&self.sphere(), &other.sphere())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceCurve {
    pub t: f64,
    pub points: Vec<CurvePoint>,
    pub closed: bool,
    /// How the curve ends at its first and last point.
    pub ends: [EndKind; 2],
    pub residual_max: f64,
    /// Indices of points where the Jacobian rank dropped.
    pub singular: Vec<usize>,
}

impl SliceCurve {
    /// The chart holding most of the points.
    pub fn chart(&self) -> Chart {
        let inv = self.points.iter().filter(|p| p.chart == Chart::Inverted).count();
        if 2 * inv > self.points.len() {
            Chart::Inverted
        } else {
            Chart::Standard
        }
    }

    pub fn is_open_through_infinity(&self) -> bool {
        !self.closed && self.ends.iter().all(|e| *e == EndKind::Infinity)
    }

    pub fn spheres(&self) -> Vec<[f64; 5]> {
        self.points.iter().map(CurvePoint::sphere).collect()
    }

    /// Points in standard coordinates `(x1, x2, x3)`; points at infinity are dropped.
    pub fn std_xyz(&self) -> Vec<[f64; 3]> {
        self.points.iter().filter_map(|p| p.std()).map(|x| [x[0], x[1], x[2]]).collect()
    }

    /// Arc length measured in each point's own chart.
    pub fn chart_length(&self) -> f64 {
        let mut len = 0.0;
        for w in self.points.windows(2) {
            if let Some(b) = w[1].in_chart(w[0].chart) {
                len += dist4(&w[0].y, &b);
            }
        }
        if self.closed && self.points.len() > 1 {
            let (a, b) = (self.points.last().unwrap(), &self.points[0]);
            if let Some(bb) = b.in_chart(a.chart) {
                len += dist4(&a.y, &bb);
            }
        }
        len
    }
}

pub fn dist4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt()
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|k| a[k] * b[k]).sum()
}

// --- the slice system -----------------------------------------------------

/// Slice constraint value and gradient.
pub(crate) fn constraint(chart: Chart, t: f64, y: &[f64; 4]) -> (f64, [f64; 4]) {
    match chart {
        Chart::Standard => (y[3] - t, [0.0, 0.0, 0.0, 1.0]),
        Chart::Inverted => {
            let n2: f64 = y.iter().map(|v| v * v).sum();
            (
                y[3] + t * n2,
                [2.0 * t * y[0], 2.0 * t * y[1], 2.0 * t * y[2], 1.0 + 2.0 * t * y[3]],
            )
        }
    }
}

/// Value of the time coordinate `x4` at a chart point.
pub fn time_of(p: &CurvePoint) -> f64 {
    match p.chart {
        Chart::Standard => p.y[3],
        Chart::Inverted => {
            let n2: f64 = p.y.iter().map(|v| v * v).sum();
            -p.y[3] / n2
        }
    }
}

/// `x4` for a point in the inverted chart with given first three coordinates.
pub fn inverted_y4(t: f64, y: [f64; 3]) -> Option<f64> {
    let rho2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    let disc = 1.0 - 4.0 * t * t * rho2;
    if disc < 0.0 {
        return None;
    }
    Some(-2.0 * t * rho2 / (1.0 + disc.sqrt()))
}

struct Eval {
    f: [f64; 3],
    j: [[f64; 4]; 3],
}

fn eval_slice(sys: &LocusSystem, chart: Chart, t: f64, y: &[f64; 4]) -> Eval {
    let (v, g) = sys.eval_grad(chart, y);
    let (c, gc) = constraint(chart, t, y);
    Eval { f: [v[0], v[1], c], j: [g[0], g[1], gc] }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let scale: f64 = a.iter().flat_map(|r| r.iter()).map(|v| v.abs()).fold(0.0, f64::max);
    if !det.is_finite() || det.abs() <= 1e-300 || det.abs() < 1e-30 * scale.powi(3) {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][k] = b[r];
        }
        out[k] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
            / det;
    }
    Some(out)
}

/// Minimum-norm solution of `J d = r` for a full-rank 3x4 `J`.
fn min_norm_step(j: &[[f64; 4]; 3], r: &[f64; 3]) -> Option<[f64; 4]> {
    let mut g = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            g[a][b] = dot4(&j[a], &j[b]);
        }
    }
    let w = solve3(g, *r)?;
    Some([0, 1, 2, 3].map(|k| (0..3).map(|a| j[a][k] * w[a]).sum()))
}

fn residual(e: &Eval) -> f64 {
    e.f[0].abs() + e.f[1].abs()
}

/// Gauss-Newton with minimum-norm steps onto the slice curve.
///
/// Returns the converged point and the iteration count.
pub fn correct(
    sys: &LocusSystem,
    chart: Chart,
    t: f64,
    y0: &[f64; 4],
    tol: f64,
    max_iter: usize,
    max_move: f64,
) -> Option<([f64; 4], usize)> {
    let mut y = *y0;
    for it in 0..max_iter {
        let e = eval_slice(sys, chart, t, &y);
        if residual(&e) < tol && e.f[2].abs() < tol.max(1e-13) {
            return Some((y, it));
        }
        let d = min_norm_step(&e.j, &e.f)?;
        for k in 0..4 {
            y[k] -= d[k];
        }
        if !y.iter().all(|v| v.is_finite()) || dist4(&y, y0) > max_move {
            return None;
        }
    }
    let e = eval_slice(sys, chart, t, &y);
    (residual(&e) < tol && e.f[2].abs() < tol.max(1e-13)).then_some((y, max_iter))
}

/// Second singular value of the `P, Q` Jacobian restricted to the slice.
fn sigma2(j: &[[f64; 4]; 3]) -> f64 {
    let nn = dot4(&j[2], &j[2]).sqrt();
    let n = j[2].map(|v| v / nn);
    let proj = |r: &[f64; 4]| {
        let s = dot4(r, &n);
        [0, 1, 2, 3].map(|k| r[k] - s * n[k])
    };
    let a = proj(&j[0]);
    let b = proj(&j[1]);
    let (g11, g12, g22) = (dot4(&a, &a), dot4(&a, &b), dot4(&b, &b));
    let tr = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let lmin = (0.5 * (tr - disc)).max(0.0);
    // recompute the small eigenvalue stably
    let lmax = 0.5 * (tr + disc);
    let lmin = if lmax > 0.0 { (det / lmax).max(0.0).min(lmin.max(det / lmax)) } else { lmin };
    lmin.sqrt()
}

/// Unit kernel vector of a 3x4 matrix (generalised cross product).
fn kernel(j: &[[f64; 4]; 3]) -> Option<[f64; 4]> {
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let m = |r: usize, c: usize| j[r][cols[c]];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    };
    let k = [minor(0), -minor(1), minor(2), -minor(3)];
    let n = norm4(&k);
    (n > 0.0 && n.is_finite()).then(|| k.map(|v| v / n))
}

/// Slice tangent and second singular value at a point.
pub fn local_frame(sys: &LocusSystem, chart: Chart, t: f64, y: &[f64; 4]) -> Option<([f64; 4], f64)> {
    let e = eval_slice(sys, chart, t, y);
    Some((kernel(&e.j)?, sigma2(&e.j)))
}

/// `|P| + |Q|` at a point in its chart.
pub fn point_residual(sys: &LocusSystem, p: &CurvePoint) -> f64 {
    let v = sys.eval(p.chart, &p.y);
    v[0].abs() + v[1].abs()
}

fn orient_first(k: [f64; 4]) -> [f64; 4] {
    for axis in 0..3 {
        if k[axis].abs() > 1e-12 {
            return if k[axis] > 0.0 { k } else { k.map(|v| -v) };
        }
    }
    k
}

fn outside_box(cfg: &TraceConfig, y: &[f64; 4]) -> bool {
    (0..3).any(|k| y[k] < cfg.bbox_lo[k] || y[k] > cfg.bbox_hi[k])
}

struct HalfTrace {
    points: Vec<CurvePoint>,
    end: EndKind,
    residual_max: f64,
}

fn chart_switch(cfg: &TraceConfig, p: &CurvePoint) -> Option<Chart> {
    if cfg.chart != SeedCharts::Atlas {
        return None;
    }
    let r = norm4(&p.y);
    match p.chart {
        Chart::Standard if r > cfg.switch_out => Some(Chart::Inverted),
        Chart::Inverted if r * cfg.switch_in > 1.0 => Some(Chart::Standard),
        _ => None,
    }
}

const INFINITY_RADIUS: f64 = 0.2;
const POLE_RADIUS: f64 = 1e-3;
const POINT_EXTENT: f64 = 1e-4;

fn trace_half(sys: &LocusSystem, seed: &CurvePoint, t: f64, cfg: &TraceConfig, dir: f64) -> Result<HalfTrace> {
    let mut chart = seed.chart;
    let mut y = seed.y;
    let (k0, mut sig) = local_frame(sys, chart, t, &y).ok_or_else(|| Error::Trace("degenerate seed".into()))?;
    let mut tan = orient_first(k0).map(|v| v * dir);
    let mut points = vec![*seed];
    let mut residual_max = point_residual(sys, seed);
    let mut h = cfg.step;
    let mut sigma_cap = f64::INFINITY;
    let mut far: f64 = 0.0;
    let start = *seed;
    loop {
        if points.len() >= cfg.max_points {
            return Ok(HalfTrace { points, end: EndKind::Truncated, residual_max });
        }
        let hh = h.min(sigma_cap).min(cfg.max_step);
        if hh < cfg.min_step {
            let end = if sig < 100.0 * cfg.sing_threshold {
                if chart == Chart::Inverted && norm4(&y) < INFINITY_RADIUS {
                    EndKind::Infinity
                } else {
                    EndKind::Singular
                }
            } else {
                EndKind::Truncated
            };
            return Ok(HalfTrace { points, end, residual_max });
        }
        let pred = [0, 1, 2, 3].map(|k| y[k] + hh * tan[k]);
        let accepted = correct(sys, chart, t, &pred, cfg.tol, 8, 0.5 * hh).and_then(|(yn, iters)| {
            let (kn, sn) = local_frame(sys, chart, t, &yn)?;
            let kn = if dot4(&kn, &tan) < 0.0 { kn.map(|v| -v) } else { kn };
            (dot4(&kn, &tan) > 0.94).then_some((yn, kn, sn, iters))
        });
        let Some((yn, kn, sn, iters)) = accepted else {
            h = hh * 0.5;
            sigma_cap = f64::INFINITY.min(sigma_cap.max(h));
            continue;
        };
        let ds = dist4(&yn, &y);
        // approach rank drops gradually
        if sn < sig {
            let rate = (sig - sn) / ds.max(1e-300);
            sigma_cap = 0.5 * sn / rate;
        } else {
            sigma_cap = f64::INFINITY;
        }
        y = yn;
        tan = kn;
        sig = sn;
        let p = CurvePoint::new(chart, y);
        residual_max = residual_max.max(point_residual(sys, &p));
        if iters <= 2 {
            h = (hh * 1.5).min(cfg.max_step);
        } else {
            h = hh;
        }
        // loop closure against the seed
        if let Some(s) = start.in_chart(chart) {
            let d = dist4(&s, &y);
            far = far.max(d);
            if d < cfg.closure.min(0.25 * far) {
                let (ks, _) = local_frame(sys, chart, t, &s).unwrap_or((tan, sig));
                let toward = [0, 1, 2, 3].map(|k| s[k] - y[k]);
                if dot4(&toward, &tan) >= -1e-12 || dot4(&ks, &tan).abs() > 0.5 {
                    return Ok(HalfTrace { points, end: EndKind::Closed, residual_max });
                }
            }
        }
        points.push(p);
        if sig < cfg.sing_threshold {
            let end = if chart == Chart::Inverted && norm4(&y) < INFINITY_RADIUS {
                EndKind::Infinity
            } else {
                EndKind::Singular
            };
            return Ok(HalfTrace { points, end, residual_max });
        }
        if cfg.chart != SeedCharts::Atlas && outside_box(cfg, &y) {
            return Ok(HalfTrace { points, end: EndKind::BoxExit, residual_max });
        }
        if let Some(nc) = chart_switch(cfg, &p) {
            let prev = points[points.len().saturating_sub(2)];
            let ny = invert_point(&y);
            let (mut nk, ns) = local_frame(sys, nc, t, &ny).ok_or_else(|| Error::Trace("chart switch".into()))?;
            if let Some(pp) = prev.in_chart(nc) {
                let away = [0, 1, 2, 3].map(|k| ny[k] - pp[k]);
                if dot4(&nk, &away) < 0.0 {
                    nk = nk.map(|v| -v);
                }
            }
            // re-polish in the new chart
            let (py, _) = correct(sys, nc, t, &ny, cfg.tol, 8, 1e-3).unwrap_or((ny, 0));
            chart = nc;
            y = py;
            tan = nk;
            sig = ns;
            sigma_cap = f64::INFINITY;
            let last = points.len() - 1;
            points[last] = CurvePoint::new(chart, y);
        }
    }
}

/// Follow the curve through `seed` in both directions.
pub fn trace_curve(sys: &LocusSystem, seed: &CurvePoint, t: f64, cfg: &TraceConfig) -> Result<SliceCurve> {
    let fwd = trace_half(sys, seed, t, cfg, 1.0)?;
    if fwd.end == EndKind::Closed {
        let singular = Vec::new();
        return Ok(SliceCurve {
            t,
            points: fwd.points,
            closed: true,
            ends: [EndKind::Closed, EndKind::Closed],
            residual_max: fwd.residual_max,
            singular,
        });
    }
    let bwd = trace_half(sys, seed, t, cfg, -1.0)?;
    let mut points: Vec<CurvePoint> = bwd.points[1..].iter().rev().copied().collect();
    let nb = points.len();
    points.extend(fwd.points);
    let mut singular = Vec::new();
    if matches!(bwd.end, EndKind::Singular | EndKind::Infinity) {
        singular.push(0);
    }
    if matches!(fwd.end, EndKind::Singular | EndKind::Infinity) {
        singular.push(points.len() - 1);
    }
    let _ = nb;
    Ok(SliceCurve {
        t,
        points,
        closed: false,
        ends: [bwd.end, fwd.end],
        residual_max: fwd.residual_max.max(bwd.residual_max),
        singular,
    })
}

// --- seeding --------------------------------------------------------------

fn grid_coord(cfg: &TraceConfig, axis: usize, i: usize) -> f64 {
    let n = cfg.grid - 1;
    (cfg.bbox_lo[axis] * (n - i) as f64 + cfg.bbox_hi[axis] * i as f64) / n as f64
}

fn seed_point(chart: Chart, t: f64, c: [f64; 3]) -> Option<[f64; 4]> {
    match chart {
        Chart::Standard => Some([c[0], c[1], c[2], t]),
        Chart::Inverted => inverted_y4(t, c).map(|y4| [c[0], c[1], c[2], y4]),
    }
}

/// Seeds on the inverted-chart slice at `t != 0`, which is the 3-sphere
/// `|y - c| = r` with `c = (0, 0, 0, -1/2t)`. It is covered by eight graph
/// charts, one per axis and sign, each used only where it is steep enough.
fn sphere_seeds(sys: &LocusSystem, t: f64, cfg: &TraceConfig) -> Vec<CurvePoint> {
    let r = 0.5 / t.abs();
    let c = [0.0, 0.0, 0.0, -0.5 / t];
    let mut out = Vec::new();
    for axis in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&k| k != axis).collect();
        let lo = [0, 1, 2].map(|i| c[others[i]] - r);
        let hi = [0, 1, 2].map(|i| c[others[i]] + r);
        let sub = TraceConfig { bbox_lo: lo, bbox_hi: hi, ..cfg.clone() };
        for sign in [-1.0, 1.0] {
            let lift = |u: [f64; 3]| {
                let d2 = r * r - (0..3).map(|i| (u[i] - c[others[i]]).powi(2)).sum::<f64>();
                if d2 < 0.16 * r * r {
                    return None;
                }
                let mut y = [0.0; 4];
                for i in 0..3 {
                    y[others[i]] = u[i];
                }
                y[axis] = c[axis] + sign * d2.sqrt();
                Some(y)
            };
            out.extend(find_seeds_in(sys, Chart::Inverted, t, &sub, &lift));
        }
    }
    out
}

fn charts_for(cfg: &TraceConfig) -> Vec<Chart> {
    match cfg.chart {
        SeedCharts::Standard => vec![Chart::Standard],
        SeedCharts::Inverted => vec![Chart::Inverted],
        SeedCharts::Atlas => vec![Chart::Standard, Chart::Inverted],
    }
}

fn in_domain(cfg: &TraceConfig, chart: Chart, y: &[f64; 4]) -> bool {
    if cfg.chart != SeedCharts::Atlas {
        return true;
    }
    match chart {
        Chart::Standard => norm4(y) <= cfg.switch_out,
        Chart::Inverted => norm4(y) * cfg.switch_in <= 1.0,
    }
}

/// Regular points on the slice found from grid cells where both `P` and `Q` change sign.
pub fn find_seeds(sys: &LocusSystem, t: f64, cfg: &TraceConfig) -> Vec<CurvePoint> {
    let mut seeds = Vec::new();
    for chart in charts_for(cfg) {
        // without the standard chart the inverted one must cover the whole slice
        if chart == Chart::Inverted && cfg.chart == SeedCharts::Inverted && t != 0.0 {
            seeds.extend(sphere_seeds(sys, t, cfg));
        } else {
            seeds.extend(find_seeds_in(sys, chart, t, &seed_grid(cfg, chart), &|c| seed_point(chart, t, c)));
        }
    }
    seeds.sort_by(|a, b| {
        (a.chart as u8)
            .cmp(&(b.chart as u8))
            .then_with(|| a.y.iter().zip(&b.y).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out: Vec<CurvePoint> = Vec::new();
    let mut index = SegmentIndex::new(cfg.step.max(0.01) * 2.0);
    for s in seeds {
        if index.distance(&s, cfg.step) < cfg.step {
            continue;
        }
        index.insert_point(&s);
        out.push(s);
    }
    out
}

/// In atlas mode the inverted chart only covers a small ball, so its grid is
/// cut down to that ball at the same spacing.
fn seed_grid(cfg: &TraceConfig, chart: Chart) -> TraceConfig {
    if cfg.chart != SeedCharts::Atlas || chart != Chart::Inverted {
        return cfg.clone();
    }
    let spacing = (0..3).map(|a| (cfg.bbox_hi[a] - cfg.bbox_lo[a]) / (cfg.grid - 1) as f64).fold(0.0, f64::max);
    let half = 1.0 / cfg.switch_in + 2.0 * spacing;
    let grid = ((2.0 * half / spacing).ceil() as usize + 1).max(2);
    TraceConfig { grid, bbox_lo: [-half; 3], bbox_hi: [half; 3], ..cfg.clone() }
}

fn find_seeds_in(
    sys: &LocusSystem,
    chart: Chart,
    t: f64,
    cfg: &TraceConfig,
    lift: &(dyn Fn([f64; 3]) -> Option<[f64; 4]> + Sync),
) -> Vec<CurvePoint> {
    let n = cfg.grid;
    let vals: Vec<Option<[f64; 2]>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).flat_map(move |j| {
                (0..n).map(move |k| {
                    let c = [grid_coord(cfg, 0, i), grid_coord(cfg, 1, j), grid_coord(cfg, 2, k)];
                    lift(c).map(|y| sys.eval(chart, &y))
                })
            })
        })
        .collect();
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let cell = [0, 1, 2].map(|a| (cfg.bbox_hi[a] - cfg.bbox_lo[a]) / (n - 1) as f64);
    let cell_diam = (cell[0] * cell[0] + cell[1] * cell[1] + cell[2] * cell[2]).sqrt();
    let cells: Vec<(usize, usize, usize)> = (0..n - 1)
        .flat_map(|i| (0..n - 1).flat_map(move |j| (0..n - 1).map(move |k| (i, j, k))))
        .collect();
    let found: Vec<Option<CurvePoint>> = cells
        .par_iter()
        .map(|&(i, j, k)| {
            let mut sp = (false, false);
            let mut sn = (false, false);
            for (di, dj, dk) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)] {
                let v = vals[idx(i + di, j + dj, k + dk)]?;
                sp.0 |= v[0] >= 0.0;
                sn.0 |= v[0] <= 0.0;
                sp.1 |= v[1] >= 0.0;
                sn.1 |= v[1] <= 0.0;
            }
            if !(sp.0 && sn.0 && sp.1 && sn.1) {
                return None;
            }
            let c = [0, 1, 2].map(|a| cfg.bbox_lo[a] + ([i, j, k][a] as f64 + 0.5) * cell[a]);
            let y0 = lift(c)?;
            let (y, _) = correct(sys, chart, t, &y0, cfg.tol, 30, 2.0 * cell_diam)?;
            if !in_domain(cfg, chart, &y) {
                return None;
            }
            let (_, s) = local_frame(sys, chart, t, &y)?;
            (s > cfg.sing_threshold).then_some(CurvePoint::new(chart, y))
        })
        .collect();
    found.into_iter().flatten().collect()
}

// --- spatial index of traced segments --------------------------------------

struct SegmentIndex {
    cell: f64,
    map: HashMap<(Chart, i64, i64, i64), Vec<([f64; 3], [f64; 3])>>,
}

fn seg_dist(p: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let s = if l2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let d = [ap[0] - s * ab[0], ap[1] - s * ab[1], ap[2] - s * ab[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

impl SegmentIndex {
    fn new(cell: f64) -> Self {
        Self { cell, map: HashMap::new() }
    }

    fn key(&self, chart: Chart, p: &[f64; 3]) -> (Chart, i64, i64, i64) {
        (
            chart,
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        )
    }

    fn insert_segment(&mut self, chart: Chart, a: [f64; 3], b: [f64; 3]) {
        let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        if len > self.cell {
            // long segments (near a chart pole) are split
            let n = (len / self.cell).ceil() as usize;
            for s in 0..n {
                let f0 = s as f64 / n as f64;
                let f1 = (s + 1) as f64 / n as f64;
                let p = |f: f64| [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2] + f * (b[2] - a[2])];
                self.insert_segment(chart, p(f0), p(f1));
            }
            return;
        }
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
        let key = self.key(chart, &mid);
        self.map.entry(key).or_default().push((a, b));
    }

    fn insert_point(&mut self, p: &CurvePoint) {
        for chart in [Chart::Standard, Chart::Inverted] {
            if let Some(y) = p.in_chart(chart) {
                if norm4(&y) < 4.0 {
                    let a = [y[0], y[1], y[2]];
                    self.insert_segment(chart, a, a);
                }
            }
        }
    }

    fn insert_curve(&mut self, c: &SliceCurve) {
        let n = c.points.len();
        let segs = if c.closed { n } else { n.saturating_sub(1) };
        if n == 1 {
            self.insert_point(&c.points[0]);
        }
        for s in 0..segs {
            let (p, q) = (&c.points[s], &c.points[(s + 1) % n]);
            for chart in [Chart::Standard, Chart::Inverted] {
                if let (Some(a), Some(b)) = (p.in_chart(chart), q.in_chart(chart)) {
                    if norm4(&a) < 4.0 && norm4(&b) < 4.0 {
                        self.insert_segment(chart, [a[0], a[1], a[2]], [b[0], b[1], b[2]]);
                    }
                }
            }
        }
    }

    /// Distance from `p` to the nearest indexed segment, capped at `cap`.
    fn distance(&self, p: &CurvePoint, cap: f64) -> f64 {
        let q = [p.y[0], p.y[1], p.y[2]];
        let (c, i, j, k) = self.key(p.chart, &q);
        let reach = (cap / self.cell).ceil() as i64 + 1;
        let mut best = cap;
        for di in -reach..=reach {
            for dj in -reach..=reach {
                for dk in -reach..=reach {
                    if let Some(v) = self.map.get(&(c, i + di, j + dj, k + dk)) {
                        for (a, b) in v {
                            best = best.min(seg_dist(&q, a, b));
                        }
                    }
                }
            }
        }
        best
    }
}

fn point_segment5(p: &[f64; 5], a: &[f64; 5], b: &[f64; 5]) -> f64 {
    let mut ab = [0.0; 5];
    let mut ap = [0.0; 5];
    for k in 0..5 {
        ab[k] = b[k] - a[k];
        ap[k] = p[k] - a[k];
    }
    let l2: f64 = ab.iter().map(|v| v * v).sum();
    let f = if l2 > 0.0 { (ap.iter().zip(&ab).map(|(u, v)| u * v).sum::<f64>() / l2).clamp(0.0, 1.0) } else { 0.0 };
    (0..5).map(|k| (ap[k] - f * ab[k]).powi(2)).sum::<f64>().sqrt()
}

/// Point-to-polyline distance in the chordal metric of `S^4`, with the
/// index of the nearest segment and the fractional position on it.
pub fn chordal_locate(p: &[f64; 5], curve: &[[f64; 5]], closed: bool) -> (f64, f64) {
    let n = curve.len();
    if n == 0 {
        return (f64::INFINITY, 0.0);
    }
    if n == 1 {
        return (crate::twistor::chordal(p, &curve[0]), 0.0);
    }
    let segs = if closed { n } else { n - 1 };
    let mut best = (f64::INFINITY, 0.0);
    for s in 0..segs {
        let (a, b) = (&curve[s], &curve[(s + 1) % n]);
        let d = point_segment5(p, a, b);
        if d < best.0 {
            let ab: f64 = (0..5).map(|k| (b[k] - a[k]).powi(2)).sum();
            let f = if ab > 0.0 { ((0..5).map(|k| (p[k] - a[k]) * (b[k] - a[k])).sum::<f64>() / ab).clamp(0.0, 1.0) } else { 0.0 };
            best = (d, s as f64 + f);
        }
    }
    best
}

pub fn chordal_point_curve(p: &[f64; 5], curve: &[[f64; 5]], closed: bool) -> f64 {
    chordal_locate(p, curve, closed).0
}

/// Directed Hausdorff distance from curve `a` to curve `b` in the chordal metric.
pub fn directed_hausdorff(a: &SliceCurve, b: &SliceCurve) -> f64 {
    let sb = b.spheres();
    a.spheres().iter().map(|p| chordal_point_curve(p, &sb, b.closed)).fold(0.0, f64::max)
}

pub fn hausdorff(a: &SliceCurve, b: &SliceCurve) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Whether every point of `a` is within `thr` of `b`; stops at the first miss.
fn within(a: &[[f64; 5]], b: &[[f64; 5]], b_closed: bool, thr: f64) -> bool {
    a.iter().all(|p| chordal_point_curve(p, b, b_closed) < thr)
}

/// All curves of the slice at time `t`.
pub fn slice(sys: &LocusSystem, t: f64, cfg: &TraceConfig) -> Result<Vec<SliceCurve>> {
    cfg.validate()?;
    let seeds = find_seeds(sys, t, cfg);
    slice_from_seeds(sys, t, cfg, &seeds)
}

/// Trace from the given seeds in order, skipping seeds on already traced curves.
pub fn slice_from_seeds(sys: &LocusSystem, t: f64, cfg: &TraceConfig, seeds: &[CurvePoint]) -> Result<Vec<SliceCurve>> {
    let mut index = SegmentIndex::new(0.05);
    let mut curves: Vec<SliceCurve> = Vec::new();
    for s in seeds {
        if index.distance(s, cfg.dedup) < cfg.dedup {
            continue;
        }
        // isolated points of the slice, e.g. a loop at the instant it dies
        if local_frame(sys, s.chart, t, &s.y).is_none_or(|(_, sg)| sg < cfg.sing_threshold) {
            continue;
        }
        let c = trace_curve(sys, s, t, cfg)?;
        index.insert_curve(&c);
        // the inverted polynomials vanish at the pole whether or not the locus does
        if c.points.iter().all(|p| p.chart == Chart::Inverted && norm4(&p.y) < POLE_RADIUS) {
            continue;
        }
        // an isolated point of the slice, such as a loop at the instant it dies
        if !c.closed && c.points.iter().all(|p| p.chordal(&c.points[0]) < POINT_EXTENT) {
            continue;
        }
        curves.push(c);
    }
    // drop curves that duplicate an earlier one
    let mut keep: Vec<(SliceCurve, Vec<[f64; 5]>)> = Vec::new();
    for c in curves {
        let sc = c.spheres();
        let dup = keep.iter().any(|(k, sk)| within(&sc, sk, k.closed, cfg.closure) && within(sk, &sc, c.closed, cfg.closure));
        if !dup {
            keep.push((c, sc));
        }
    }
    Ok(keep.into_iter().map(|(c, _)| c).collect())
}

/// Many slices, computed concurrently; results are in input order.
pub fn slices(sys: &LocusSystem, times: &[f64], cfg: &TraceConfig) -> Result<Vec<Vec<SliceCurve>>> {
    times.par_iter().map(|&t| slice(sys, t, cfg)).collect()
}

// --- transport along the surface ------------------------------------------

/// Move a point of the locus from its time to `t1`, flowing orthogonally to
/// the slice curves. Fails near critical points of the time function.
pub fn transport(sys: &LocusSystem, p: &CurvePoint, t1: f64, cfg: &TraceConfig) -> Option<CurvePoint> {
    let mut chart = p.chart;
    let mut y = p.y;
    let mut t = time_of(p);
    let mut dt = (t1 - t).abs().clamp(1e-12, 0.002) * (t1 - t).signum();
    let mut guard = 0;
    while (t1 - t).abs() > 1e-15 {
        guard += 1;
        if guard > 200_000 {
            return None;
        }
        if (t1 - t).abs() < dt.abs() {
            dt = t1 - t;
        }
        let (v, g) = sys.eval_grad(chart, &y);
        let _ = v;
        let tg = match chart {
            Chart::Standard => [0.0, 0.0, 0.0, 1.0],
            Chart::Inverted => {
                let n2: f64 = y.iter().map(|a| a * a).sum();
                let c = -1.0 / n2;
                let d = 2.0 * y[3] / (n2 * n2);
                [d * y[0], d * y[1], d * y[2], c + d * y[3]]
            }
        };
        let vel = min_norm_step(&[g[0], g[1], tg], &[0.0, 0.0, 1.0])?;
        let speed = norm4(&vel);
        if !speed.is_finite() || speed * dt.abs() > 0.05 {
            dt *= 0.5;
            if dt.abs() < 1e-12 {
                return None;
            }
            continue;
        }
        let pred = [0, 1, 2, 3].map(|k| y[k] + dt * vel[k]);
        let tn = t + dt;
        match correct(sys, chart, tn, &pred, cfg.tol, 8, 0.3 * speed * dt.abs() + 1e-9) {
            Some((yn, it)) => {
                y = yn;
                t = tn;
                if it <= 2 {
                    dt *= 1.5;
                }
                let cp = CurvePoint::new(chart, y);
                if let Some(nc) = chart_switch(&TraceConfig { chart: SeedCharts::Atlas, ..cfg.clone() }, &cp) {
                    y = invert_point(&y);
                    chart = nc;
                }
            }
            None => {
                dt *= 0.5;
                if dt.abs() < 1e-12 {
                    return None;
                }
            }
        }
    }
    Some(CurvePoint::new(chart, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::{x_vars, LocusPolys};
    use crate::poly::parse_gauss_poly;

    fn system(p: &str, q: &str) -> LocusSystem {
        let v = x_vars();
        let p = parse_gauss_poly(p, &v).unwrap().to_int().unwrap();
        let q = parse_gauss_poly(q, &v).unwrap().to_int().unwrap();
        LocusSystem::new(LocusPolys { p, q })
    }

    fn std_cfg() -> TraceConfig {
        TraceConfig { chart: SeedCharts::Standard, grid: 23, ..TraceConfig::default() }
    }

    #[test]
    fn unit_circle_is_closed_with_correct_length() {
        let sys = system("x1^2 + x2^2 - 1", "x3");
        let c = trace_curve(&sys, &CurvePoint::new(Chart::Standard, [1.0, 0.0, 0.0, 0.0]), 0.0, &std_cfg()).unwrap();
        assert!(c.closed);
        assert!((c.chart_length() - 2.0 * std::f64::consts::PI).abs() < 1e-3, "{}", c.chart_length());
        assert!(c.residual_max < 1e-10);
    }

    #[test]
    fn straight_line_exits_the_box() {
        let sys = system("x1", "x2");
        let curves = slice(&sys, 0.0, &std_cfg()).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].ends, [EndKind::BoxExit, EndKind::BoxExit]);
        assert!(curves[0].points.iter().all(|p| p.y[0].abs() < 1e-9 && p.y[1].abs() < 1e-9));
    }

    #[test]
    fn seeds_on_the_axis() {
        let sys = system("x1", "x2");
        let seeds = find_seeds(&sys, 0.0, &std_cfg());
        assert!(!seeds.is_empty());
        assert!(seeds.iter().all(|s| s.y[0].abs() < 1e-9 && s.y[1].abs() < 1e-9));
    }

    #[test]
    fn config_validation() {
        assert!(TraceConfig::default().validate().is_ok());
        let bad = TraceConfig { min_step: 1.0, ..TraceConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn transport_moves_along_time() {
        // circles of radius sqrt(1 - x4)
        let sys = system("x1^2 + x2^2 + x4 - 1", "x3");
        let p = CurvePoint::new(Chart::Standard, [1.0, 0.0, 0.0, 0.0]);
        let q = transport(&sys, &p, 0.19, &std_cfg()).unwrap();
        assert!((time_of(&q) - 0.19).abs() < 1e-12);
        assert!((q.y[0] - 0.9).abs() < 1e-8 && q.y[1].abs() < 1e-8);
    }
}
