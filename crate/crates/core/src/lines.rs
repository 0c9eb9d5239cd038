//! Twistor fibers lying inside a cubic surface, the conformal tests on their
//! images, and the projective equivalence of the flagship with the Fermat cubic.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discriminant::{fiber_cubic, inverted_fiber_cubic, z_vars, FiberCubic, Surface};
use crate::error::{Error, Result};
use crate::numeric::{invert_point, norm4, Chart, CompiledPoly};
use crate::poly::MultiPoly;
use crate::ring::{Coeff, GaussRat, QSqrt3, Ring, Sqrt3Field};
use crate::twistor::{sphere_from_inv, sphere_from_std, S4Point};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberSearchConfig {
    /// Grid points per axis in each chart.
    pub grid: usize,
    pub half_width: f64,
    pub gn_tol: f64,
    pub gn_max_iter: usize,
    /// Chordal radius for merging solutions.
    pub cluster_radius: f64,
    /// Largest numerator or denominator tried when snapping to `Q(sqrt 3)`.
    pub max_height: i64,
    pub smoothness_starts: usize,
    pub seed: u64,
}

impl Default for FiberSearchConfig {
    fn default() -> Self {
        Self {
            grid: 21,
            half_width: 2.0,
            gn_tol: 1e-12,
            gn_max_iter: 50,
            cluster_radius: 1e-6,
            max_height: 8,
            smoothness_starts: 48,
            seed: 7,
        }
    }
}

/// One fiber found inside the surface.
#[derive(Debug, Clone)]
pub struct TwistorFiber {
    /// Numerical base point.
    pub point: S4Point<f64>,
    /// Exact base point when every restricted coefficient vanishes there.
    pub exact: Option<S4Point<QSqrt3>>,
    /// Largest `|c_k|` at the numerical point.
    pub residual: f64,
}

impl TwistorFiber {
    pub fn certified(&self) -> bool {
        self.exact.is_some()
    }
}

#[derive(Debug, Clone, Default)]
pub struct TwistorFiberSet {
    pub fibers: Vec<TwistorFiber>,
    /// Refines points near a fiber base; present when built from a surface.
    pub locator: Option<Arc<FiberLocator>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FiberRecord {
    /// Four coordinates, or the string `"inf"`.
    pub point: serde_json::Value,
    pub certified: bool,
    pub exact_coords: Vec<String>,
}

impl TwistorFiberSet {
    pub fn certified(&self) -> impl Iterator<Item = &TwistorFiber> {
        self.fibers.iter().filter(|f| f.certified())
    }

    pub fn certified_count(&self) -> usize {
        self.certified().count()
    }

    pub fn images(&self) -> Vec<S4Point<f64>> {
        self.certified().map(|f| f.point.clone()).collect()
    }

    pub fn records(&self) -> Vec<FiberRecord> {
        self.fibers
            .iter()
            .map(|f| {
                let point = match &f.point {
                    S4Point::Infinity => serde_json::json!("inf"),
                    S4Point::Finite(x) => serde_json::json!(x),
                };
                let exact_coords = match &f.exact {
                    Some(S4Point::Finite(x)) => x.iter().map(|c| c.to_string()).collect(),
                    Some(S4Point::Infinity) => vec!["inf".into()],
                    None => Vec::new(),
                };
                FiberRecord { point, certified: f.certified(), exact_coords }
            })
            .collect()
    }
}

// --- numerical search ----------------------------------------------------

#[derive(Debug)]
struct CompiledCubic {
    c: Vec<CompiledPoly<Complex64>>,
}

impl CompiledCubic {
    fn new(fc: &FiberCubic) -> Self {
        Self { c: fc.c.iter().map(CompiledPoly::from_coeff).collect() }
    }

    fn sq_residual(&self, x: &[f64; 4]) -> f64 {
        self.c.iter().map(|p| p.eval(x).norm_sqr()).sum()
    }

    /// Eight real residuals and their 8x4 Jacobian.
    fn system(&self, x: &[f64; 4]) -> ([f64; 8], [[f64; 4]; 8]) {
        let mut r = [0.0; 8];
        let mut j = [[0.0; 4]; 8];
        for (k, p) in self.c.iter().enumerate() {
            let (v, g) = p.eval_grad(x);
            r[2 * k] = v.re;
            r[2 * k + 1] = v.im;
            for a in 0..4 {
                j[2 * k][a] = g[a].re;
                j[2 * k + 1][a] = g[a].im;
            }
        }
        (r, j)
    }

    fn max_abs(&self, x: &[f64; 4]) -> f64 {
        self.c.iter().map(|p| p.eval(x).norm()).fold(0.0, f64::max)
    }
}

/// Levenberg-damped Gauss-Newton on the eight real equations.
fn gauss_newton(sys: &CompiledCubic, x0: [f64; 4], tol: f64, max_iter: usize) -> Option<[f64; 4]> {
    let mut x = x0;
    let mut mu = 1e-8;
    for _ in 0..max_iter {
        let (r, j) = sys.system(&x);
        let f2: f64 = r.iter().map(|v| v * v).sum();
        if f2.sqrt() < tol {
            return Some(x);
        }
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for row in 0..8 {
            for a in 0..4 {
                jtr[a] += j[row][a] * r[row];
                for b in 0..4 {
                    jtj[(a, b)] += j[row][a] * j[row][b];
                }
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let m = jtj + Matrix4::identity() * (mu * jtj.diagonal().max().max(1e-300));
            let Some(d) = m.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let cand = [x[0] - d[0], x[1] - d[1], x[2] - d[2], x[3] - d[3]];
            if sys.sq_residual(&cand) < f2 {
                x = cand;
                mu = (mu * 0.1).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved || norm4(&x) > 1e6 {
            break;
        }
    }
    let (r, _) = sys.system(&x);
    (r.iter().map(|v| v * v).sum::<f64>().sqrt() < tol.max(1e-10)).then_some(x)
}

fn grid_minima(sys: &CompiledCubic, cfg: &FiberSearchConfig) -> Vec<[f64; 4]> {
    let n = cfg.grid;
    let coord = |i: usize| -cfg.half_width + 2.0 * cfg.half_width * i as f64 / (n - 1) as f64;
    let total = n * n * n * n;
    let unflatten = |mut k: usize| {
        let mut ix = [0usize; 4];
        for a in (0..4).rev() {
            ix[a] = k % n;
            k /= n;
        }
        ix
    };
    let vals: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|k| {
            let ix = unflatten(k);
            sys.sq_residual(&ix.map(coord))
        })
        .collect();
    (0..total)
        .into_par_iter()
        .filter_map(|k| {
            let ix = unflatten(k);
            let v = vals[k];
            let better = (0..81usize).filter(|&d| d != 40).any(|d| {
                let mut idx = 0usize;
                let mut dd = d;
                let mut offs = [0i64; 4];
                for o in offs.iter_mut() {
                    *o = (dd % 3) as i64 - 1;
                    dd /= 3;
                }
                for a in 0..4 {
                    let c = ix[a] as i64 + offs[a];
                    if c < 0 || c >= n as i64 {
                        return false;
                    }
                    idx = idx * n + c as usize;
                }
                vals[idx] < v
            });
            (!better).then(|| ix.map(coord))
        })
        .collect()
}

/// Newton refinement onto base points of fibers contained in a surface.
#[derive(Debug)]
pub struct FiberLocator {
    std: CompiledCubic,
    inv: CompiledCubic,
}

impl FiberLocator {
    pub fn new(f: &Surface) -> Result<Self> {
        Ok(Self { std: CompiledCubic::new(&fiber_cubic(f)?), inv: CompiledCubic::new(&inverted_fiber_cubic(f)?) })
    }

    /// Converge from `y` to a fiber base in the same chart, if one is nearby.
    pub fn locate(&self, chart: Chart, y: &[f64; 4]) -> Option<[f64; 4]> {
        let sys = match chart {
            Chart::Standard => &self.std,
            Chart::Inverted => &self.inv,
        };
        gauss_newton(sys, *y, 1e-12, 60)
    }
}

struct Candidate {
    sphere: [f64; 5],
    point: S4Point<f64>,
    residual: f64,
}

fn search_chart(fc: &FiberCubic, inverted: bool, cfg: &FiberSearchConfig) -> Vec<Candidate> {
    let sys = CompiledCubic::new(fc);
    let starts = grid_minima(&sys, cfg);
    starts
        .par_iter()
        .filter_map(|x0| {
            let x = gauss_newton(&sys, *x0, cfg.gn_tol, cfg.gn_max_iter)?;
            let residual = sys.max_abs(&x);
            let (sphere, point) = if inverted {
                if norm4(&x) < 1e-9 {
                    ([0.0, 0.0, 0.0, 0.0, 1.0], S4Point::Infinity)
                } else {
                    (sphere_from_inv(&x), S4Point::Finite(invert_point(&x)))
                }
            } else {
                (sphere_from_std(&x), S4Point::Finite(x))
            };
            Some(Candidate { sphere, point, residual })
        })
        .collect()
}

/// Nearest element of `Q(sqrt 3)` with small numerators and denominators.
pub fn snap_qsqrt3(x: f64, max_height: i64, tol: f64) -> Option<QSqrt3> {
    let s3 = 3f64.sqrt();
    let mut best: Option<(i64, QSqrt3)> = None;
    for bd in 1..=max_height {
        for bn in -max_height..=max_height {
            let a = x - bn as f64 / bd as f64 * s3;
            for ad in 1..=max_height {
                let an = (a * ad as f64).round();
                if an.abs() > max_height as f64 || (a - an / ad as f64).abs() > tol {
                    continue;
                }
                let h = [an.abs() as i64, ad, bn.abs(), if bn == 0 { 1 } else { bd }].into_iter().max().unwrap();
                if best.as_ref().is_none_or(|(bh, _)| h < *bh) {
                    best = Some((h, QSqrt3::from_ratios(an as i64, ad, bn, bd)));
                }
            }
        }
    }
    best.map(|(_, q)| q)
}

fn certify(std: &FiberCubic, inv: &FiberCubic, p: &S4Point<f64>, cfg: &FiberSearchConfig) -> Option<S4Point<QSqrt3>> {
    let vanishes = |fc: &FiberCubic, x: &[QSqrt3]| {
        fc.c.iter().all(|c| c.eval_sqrt3(x).map(|v| v.is_zero()).unwrap_or(false))
    };
    match p {
        S4Point::Infinity => {
            let zero = vec![QSqrt3::zero(); 4];
            vanishes(inv, &zero).then_some(S4Point::Infinity)
        }
        S4Point::Finite(x) => {
            let exact: Vec<QSqrt3> = x.iter().map(|v| snap_qsqrt3(*v, cfg.max_height, 1e-8)).collect::<Option<_>>()?;
            vanishes(std, &exact).then(|| S4Point::Finite([0, 1, 2, 3].map(|k| exact[k].clone())))
        }
    }
}

/// Numerical check that the gradient of `f` has no projective zero.
///
/// Runs damped Gauss-Newton for `grad f = 0, a.z = 1` from random starts with a
/// random affine normalisation. Finding a zero proves singularity; finding none
/// is evidence of smoothness, not a proof.
pub fn looks_smooth(f: &Surface, starts: usize, seed: u64) -> bool {
    let poly = f.poly();
    let grad: Vec<MultiPoly<GaussRat>> = (0..4).map(|k| poly.derivative(k)).collect();
    let hess: Vec<Vec<MultiPoly<GaussRat>>> = grad.iter().map(|g| (0..4).map(|k| g.derivative(k)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rc = |rng: &mut ChaCha8Rng| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let a: Vec<Complex64> = (0..4).map(|_| rc(&mut rng)).collect();
    let starts: Vec<Vec<Complex64>> = (0..starts).map(|_| (0..4).map(|_| rc(&mut rng)).collect()).collect();
    let singular = starts.par_iter().any(|z0| {
        let mut z = z0.clone();
        let eval = |z: &[Complex64]| -> Vec<Complex64> {
            let mut r: Vec<Complex64> = grad.iter().map(|g| g.eval_complex(z).unwrap()).collect();
            r.push(a.iter().zip(z).map(|(x, y)| x * y).sum::<Complex64>() - 1.0);
            r
        };
        let norm = |r: &[Complex64]| r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut mu = 1e-6;
        for _ in 0..300 {
            let r = eval(&z);
            let rn = norm(&r);
            if rn < 1e-11 {
                return true;
            }
            let mut j = DMatrix::<Complex64>::zeros(5, 4);
            for i in 0..4 {
                for k in 0..4 {
                    j[(i, k)] = hess[i][k].eval_complex(&z).unwrap();
                }
            }
            for k in 0..4 {
                j[(4, k)] = a[k];
            }
            let jh = j.adjoint();
            let jtj = &jh * &j;
            let rhs = &jh * DMatrix::from_column_slice(5, 1, &r);
            let mut stepped = false;
            for _ in 0..10 {
                let m = &jtj + DMatrix::<Complex64>::identity(4, 4) * Complex64::new(mu, 0.0);
                if let Some(d) = m.lu().solve(&rhs) {
                    let cand: Vec<Complex64> = (0..4).map(|k| z[k] - d[k]).collect();
                    if norm(&eval(&cand)) < rn {
                        z = cand;
                        mu = (mu * 0.3).max(1e-14);
                        stepped = true;
                        break;
                    }
                }
                mu *= 10.0;
            }
            if !stepped {
                return false;
            }
        }
        norm(&eval(&z)) < 1e-8
    });
    !singular
}

/// Fibers of the twistor fibration contained in the surface.
pub fn find_twistor_fibers(f: &Surface, cfg: &FiberSearchConfig) -> Result<TwistorFiberSet> {
    if cfg.grid < 2 || cfg.half_width <= 0.0 {
        return Err(Error::Precondition("empty search grid".into()));
    }
    if !looks_smooth(f, cfg.smoothness_starts, cfg.seed) {
        return Err(Error::Precondition("surface is singular".into()));
    }
    let std = fiber_cubic(f)?;
    let inv = inverted_fiber_cubic(f)?;
    let mut cands = search_chart(&std, false, cfg);
    cands.extend(search_chart(&inv, true, cfg));
    cands.sort_by(|a, b| a.residual.total_cmp(&b.residual));
    let mut reps: Vec<Candidate> = Vec::new();
    for c in cands {
        if !reps.iter().any(|r| crate::twistor::chordal(&r.sphere, &c.sphere) < cfg.cluster_radius) {
            reps.push(c);
        }
    }
    let mut fibers: Vec<TwistorFiber> = reps
        .into_iter()
        .map(|c| {
            let exact = certify(&std, &inv, &c.point, cfg);
            TwistorFiber { point: c.point, exact, residual: c.residual }
        })
        .collect();
    fibers.sort_by(|a, b| {
        let key = |f: &TwistorFiber| f.point.to_sphere();
        let (ka, kb) = (key(a), key(b));
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let set = TwistorFiberSet { fibers, locator: Some(Arc::new(FiberLocator::new(f)?)) };
    if set.certified_count() > 5 {
        return Err(Error::Precondition(format!(
            "{} certified twistor fibers; a smooth cubic has at most 5",
            set.certified_count()
        )));
    }
    Ok(set)
}

// --- conformal tests ------------------------------------------------------

/// Whether the points lie on a common round 2-sphere or 2-plane of `S^4`.
///
/// Each point lifts to `(1, x, |x|^2)` in `R^6` (infinity to the last basis
/// vector); the points lie on a common 2-sphere exactly when the lifts span at
/// most four dimensions.
pub fn fiber_images_coplanar_or_cospherical(points: &[S4Point<f64>]) -> bool {
    if points.len() <= 4 {
        return true;
    }
    let rows: Vec<[f64; 6]> = points
        .iter()
        .map(|p| {
            let v = match p {
                S4Point::Infinity => [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
                S4Point::Finite(x) => {
                    let n2: f64 = x.iter().map(|v| v * v).sum();
                    [1.0, x[0], x[1], x[2], x[3], n2]
                }
            };
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.map(|a| a / n)
        })
        .collect();
    let m = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|s| **s > 1e-9 * smax).count();
    rank <= 4
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtComplex {
    Finite(Complex64),
    Infinity,
}

fn ext_eq(a: &ExtComplex, b: &ExtComplex) -> bool {
    match (a, b) {
        (ExtComplex::Infinity, ExtComplex::Infinity) => true,
        (ExtComplex::Finite(x), ExtComplex::Finite(y)) => (x - y).norm() <= 1e-14 * (1.0 + x.norm().max(y.norm())),
        _ => false,
    }
}

/// Four distinct points lie on a common circle or line iff their cross-ratio is real.
pub fn concircular(p: ExtComplex, q: ExtComplex, r: ExtComplex, s: ExtComplex) -> Result<bool> {
    let pts = [p, q, r, s];
    for i in 0..4 {
        for j in i + 1..4 {
            if ext_eq(&pts[i], &pts[j]) {
                return Err(Error::Coincident);
            }
        }
    }
    // factors containing infinity cancel between numerator and denominator
    let diff = |a: &ExtComplex, b: &ExtComplex| match (a, b) {
        (ExtComplex::Finite(x), ExtComplex::Finite(y)) => Some(x - y),
        _ => None,
    };
    let num = [diff(&p, &r), diff(&q, &s)];
    let den = [diff(&p, &s), diff(&q, &r)];
    let prod = |f: &[Option<Complex64>; 2]| f.iter().flatten().fold(Complex64::new(1.0, 0.0), |a, b| a * b);
    let cr = prod(&num) / prod(&den);
    Ok(cr.im.abs() < 1e-12 * cr.norm().max(1.0))
}

// --- projective equivalence with the Fermat cubic ------------------------

pub type Matrix4Q = [[Sqrt3Field; 4]; 4];

fn sq(re: QSqrt3, im: QSqrt3) -> Sqrt3Field {
    Sqrt3Field::new(re, im)
}

/// The constants `a = 1/2 + (sqrt 3 / 6) i`, `b = conj a`, `c = i / sqrt 3`.
pub fn fermat_constants() -> [Sqrt3Field; 3] {
    let a = sq(QSqrt3::from_ratios(1, 2, 0, 1), QSqrt3::from_ratios(0, 1, 1, 6));
    let b = a.conj();
    let c = sq(QSqrt3::zero(), QSqrt3::from_ratios(0, 1, 1, 3));
    [a, b, c]
}

fn zero() -> Sqrt3Field {
    <Sqrt3Field as Coeff>::zero()
}

/// Row with `alpha` at column `i` and `beta` at column `j`.
fn row(i: usize, alpha: &Sqrt3Field, j: usize, beta: &Sqrt3Field) -> [Sqrt3Field; 4] {
    let mut r = [zero(), zero(), zero(), zero()];
    r[i] = alpha.clone();
    r[j] = beta.clone();
    r
}

/// The change of coordinates exactly as printed, with rows two and four equal.
pub fn printed_fermat_matrix() -> Matrix4Q {
    let [a, b, c] = fermat_constants();
    [
        row(1, &a, 2, &b),
        row(1, &c, 2, &b.neg_ref()),
        row(0, &a, 3, &b),
        row(1, &c, 2, &b.neg_ref()),
    ]
}

/// The printed matrix with its last row read as `c x1 - b x4`.
pub fn corrected_fermat_matrix() -> Matrix4Q {
    let mut m = printed_fermat_matrix();
    let [_, b, c] = fermat_constants();
    m[3] = row(0, &c, 3, &b.neg_ref());
    m
}

pub fn determinant(m: &Matrix4Q) -> Sqrt3Field {
    let mut a: Vec<Vec<Sqrt3Field>> = m.iter().map(|r| r.to_vec()).collect();
    let mut det = <Sqrt3Field as Coeff>::one();
    for col in 0..4 {
        let Some(piv) = (col..4).find(|&r| !a[r][col].is_zero()) else {
            return zero();
        };
        if piv != col {
            a.swap(piv, col);
            det = det.neg_ref();
        }
        let inv = a[col][col].inv().expect("nonzero pivot");
        det = det.mul_ref(&a[col][col]);
        for r in col + 1..4 {
            let f = a[r][col].mul_ref(&inv);
            for k in col..4 {
                let v = a[col][k].mul_ref(&f);
                a[r][k] = a[r][k].sub_ref(&v);
            }
        }
    }
    det
}

/// `sum_i (sum_j m_ij z_j)^3`.
fn fermat_pullback(m: &Matrix4Q) -> MultiPoly<Sqrt3Field> {
    let vars = z_vars();
    let mut acc = MultiPoly::zero(&vars);
    for r in m {
        let mut lin = MultiPoly::zero(&vars);
        for (j, c) in r.iter().enumerate() {
            lin = lin.add_ref(&MultiPoly::var(&vars, j).scale(c));
        }
        acc = acc.add_ref(&lin.pow(3));
    }
    acc
}

/// Whether the linear change `z' = M x` turns the Fermat cubic into a nonzero
/// multiple of the flagship surface, as an exact identity.
pub fn verify_fermat_equivalence(m: &Matrix4Q, target: &Surface) -> Result<bool> {
    if determinant(m).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let pulled = fermat_pullback(m);
    let goal = target.poly().to_sqrt3();
    let Some((exps, gc)) = goal.terms().next() else {
        return Ok(false);
    };
    let Some(pc) = pulled.coeff(exps) else {
        return Ok(false);
    };
    let ratio = pc.div(gc).expect("nonzero coefficient");
    Ok(!ratio.is_zero() && goal.scale(&ratio) == pulled)
}

/// Replacements `alpha x_i +- beta x_j` for the last row that make the printed
/// matrix a valid equivalence.
pub fn fermat_typo_search(target: &Surface) -> Vec<Matrix4Q> {
    let consts = fermat_constants();
    let mut out = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            for alpha in &consts {
                for beta in &consts {
                    for sign in [1i64, -1] {
                        let mut m = printed_fermat_matrix();
                        let b = if sign > 0 { beta.clone() } else { beta.neg_ref() };
                        m[3] = row(i, alpha, j, &b);
                        if let Ok(true) = verify_fermat_equivalence(&m, target) {
                            out.push(m);
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn c(re: f64, im: f64) -> ExtComplex {
        ExtComplex::Finite(Complex64::new(re, im))
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_qsqrt3(0.75f64.sqrt(), 8, 1e-9), Some(QSqrt3::from_ratios(0, 1, 1, 2)));
        assert_eq!(snap_qsqrt3(-1.0, 8, 1e-9), Some(QSqrt3::int(-1)));
        assert_eq!(snap_qsqrt3(0.0, 8, 1e-9), Some(QSqrt3::zero()));
        assert_eq!(snap_qsqrt3(std::f64::consts::PI, 8, 1e-9), None);
    }

    #[test]
    fn cross_ratio_examples() {
        assert!(concircular(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), ExtComplex::Infinity).unwrap());
        let w = c(-0.5, 0.75f64.sqrt());
        let w2 = c(-0.5, -(0.75f64.sqrt()));
        assert!(!concircular(c(0.0, 0.0), c(1.0, 0.0), w, ExtComplex::Infinity).unwrap());
        assert!(!concircular(c(0.0, 0.0), c(1.0, 0.0), w, w2).unwrap());
        // four points on the unit circle
        assert!(concircular(c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)).unwrap());
        assert_eq!(concircular(c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)), Err(Error::Coincident));
    }

    #[test]
    fn cospherical_examples() {
        let f = |v: [f64; 4]| S4Point::Finite(v);
        let basis = [f([0.0; 4]), f([1.0, 0.0, 0.0, 0.0]), f([0.0, 1.0, 0.0, 0.0]), f([0.0, 0.0, 1.0, 0.0]), f([0.0, 0.0, 0.0, 1.0])];
        assert!(!fiber_images_coplanar_or_cospherical(&basis));
        assert!(fiber_images_coplanar_or_cospherical(&basis[..3]));
        let planar = [f([0.0; 4]), f([1.0, 0.0, 0.0, 0.0]), f([0.3, 2.0, 0.0, 0.0]), S4Point::Infinity, f([-4.0, 1.0, 0.0, 0.0])];
        assert!(fiber_images_coplanar_or_cospherical(&planar));
        // a unit 2-sphere in the first three coordinates, shifted in x4
        let sph = [
            f([1.0, 0.0, 0.0, 0.5]),
            f([0.0, 1.0, 0.0, 0.5]),
            f([0.0, 0.0, 1.0, 0.5]),
            f([-1.0, 0.0, 0.0, 0.5]),
            f([0.6, 0.0, -0.8, 0.5]),
        ];
        assert!(fiber_images_coplanar_or_cospherical(&sph));
    }

    #[test]
    fn printed_matrix_is_singular() {
        assert!(determinant(&printed_fermat_matrix()).is_zero());
        let target = presets::transformed_fermat();
        assert_eq!(verify_fermat_equivalence(&printed_fermat_matrix(), &target), Err(Error::SingularMatrix));
    }

    #[test]
    fn corrected_matrix_is_an_equivalence() {
        let target = presets::transformed_fermat();
        assert!(verify_fermat_equivalence(&corrected_fermat_matrix(), &target).unwrap());
        let one = <Sqrt3Field as Coeff>::one();
        let id = [0, 1, 2, 3].map(|i| row(i, &one, (i + 1) % 4, &zero()));
        assert!(!verify_fermat_equivalence(&id, &target).unwrap());
    }

    #[test]
    fn typo_search_finds_the_correction() {
        let found = fermat_typo_search(&presets::transformed_fermat());
        assert!(found.contains(&corrected_fermat_matrix()), "{} candidates", found.len());
    }

    #[test]
    fn smoothness() {
        assert!(looks_smooth(&presets::fermat(), 16, 1));
        assert!(looks_smooth(&presets::transformed_fermat(), 16, 1));
        assert!(!looks_smooth(&Surface::parse("z3^3 + z4^3").unwrap(), 16, 1));
    }
}
