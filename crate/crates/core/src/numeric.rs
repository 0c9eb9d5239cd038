//! Floating-point evaluation of the locus polynomials in both charts.

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminant::{invert_chart, LocusPolys};
use crate::poly::MultiPoly;
use crate::ring::Coeff;

/// A polynomial in four real variables flattened for fast evaluation.
#[derive(Debug, Clone)]
pub struct CompiledPoly<T> {
    terms: Vec<([u8; 4], T)>,
    max_exp: usize,
}

fn compile_terms<C: Coeff, T>(p: &MultiPoly<C>, conv: impl Fn(&C) -> T) -> CompiledPoly<T> {
    assert_eq!(p.nvars(), 4, "compiled polynomials have four variables");
    let terms: Vec<([u8; 4], T)> = p
        .terms()
        .map(|(e, c)| ([e[0] as u8, e[1] as u8, e[2] as u8, e[3] as u8], conv(c)))
        .collect();
    let max_exp = terms.iter().flat_map(|(e, _)| e.iter()).copied().max().unwrap_or(0) as usize;
    assert!(max_exp <= MAX_EXP, "exponent {max_exp} too large to compile");
    CompiledPoly { terms, max_exp }
}

/// Highest exponent of a single variable that compiled polynomials support.
pub const MAX_EXP: usize = 40;

fn power_table(x: &[f64; 4], n: usize) -> [[f64; MAX_EXP + 1]; 4] {
    let mut pw = [[0.0; MAX_EXP + 1]; 4];
    for k in 0..4 {
        pw[k][0] = 1.0;
        for e in 1..=n {
            pw[k][e] = pw[k][e - 1] * x[k];
        }
    }
    pw
}

impl CompiledPoly<f64> {
    pub fn from_int(p: &MultiPoly<BigInt>) -> Self {
        compile_terms(p, |c| c.to_complex().re)
    }

    /// `q(w) = p(s w) / s^e` for zooming in on the origin.
    ///
    /// With `e = 1` the Jacobian in `w` equals the Jacobian of `p` at `s w`;
    /// with `e` the lowest total degree in `p`, `q` tends to the
    /// lowest-degree part of `p` as `s` shrinks. The larger of the two
    /// scalings is used so gradient thresholds stay at least as permissive.
    pub fn rescaled(&self, s: f64) -> Self {
        let deg = |e: &[u8; 4]| e.iter().map(|&v| v as i32).sum::<i32>();
        let low = self.terms.iter().map(|(e, _)| deg(e)).min().unwrap_or(0);
        let e = if s >= 1.0 { 1 } else { low.max(1) };
        let terms: Vec<([u8; 4], f64)> = self.terms.iter().map(|(x, c)| (*x, c * s.powi(deg(x) - e))).collect();
        Self { terms, max_exp: self.max_exp }
    }

    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        let pw = power_table(x, self.max_exp);
        self.terms
            .iter()
            .map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize] * pw[3][e[3] as usize])
            .sum()
    }

    /// Value and gradient.
    pub fn eval_grad(&self, x: &[f64; 4]) -> (f64, [f64; 4]) {
        let pw = power_table(x, self.max_exp);
        let mut v = 0.0;
        let mut g = [0.0; 4];
        for (e, c) in &self.terms {
            let f = [0, 1, 2, 3].map(|k| pw[k][e[k] as usize]);
            v += c * f[0] * f[1] * f[2] * f[3];
            for k in 0..4 {
                if e[k] == 0 {
                    continue;
                }
                let mut d = c * e[k] as f64 * pw[k][e[k] as usize - 1];
                for j in 0..4 {
                    if j != k {
                        d *= f[j];
                    }
                }
                g[k] += d;
            }
        }
        (v, g)
    }
}

impl CompiledPoly<Complex64> {
    pub fn from_coeff<C: Coeff>(p: &MultiPoly<C>) -> Self {
        compile_terms(p, |c| c.to_complex())
    }

    pub fn eval(&self, x: &[f64; 4]) -> Complex64 {
        let pw = power_table(x, self.max_exp);
        self.terms
            .iter()
            .map(|(e, c)| c * (pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize] * pw[3][e[3] as usize]))
            .sum()
    }

    /// Value and real gradient (each partial derivative is complex).
    pub fn eval_grad(&self, x: &[f64; 4]) -> (Complex64, [Complex64; 4]) {
        let pw = power_table(x, self.max_exp);
        let mut v = Complex64::new(0.0, 0.0);
        let mut g = [Complex64::new(0.0, 0.0); 4];
        for (e, c) in &self.terms {
            let f = [0, 1, 2, 3].map(|k| pw[k][e[k] as usize]);
            v += c * (f[0] * f[1] * f[2] * f[3]);
            for k in 0..4 {
                if e[k] == 0 {
                    continue;
                }
                let mut d = e[k] as f64 * pw[k][e[k] as usize - 1];
                for j in 0..4 {
                    if j != k {
                        d *= f[j];
                    }
                }
                g[k] += c * d;
            }
        }
        (v, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Standard,
    Inverted,
}

impl Chart {
    pub fn other(self) -> Self {
        match self {
            Chart::Standard => Chart::Inverted,
            Chart::Inverted => Chart::Standard,
        }
    }
}

/// The inversion `y -> conj(y) / |y|^2` on `R^4 \ 0`, used to change charts.
pub fn invert_point(y: &[f64; 4]) -> [f64; 4] {
    let n2: f64 = y.iter().map(|v| v * v).sum();
    [y[0] / n2, -y[1] / n2, -y[2] / n2, -y[3] / n2]
}

pub fn norm4(y: &[f64; 4]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(P, Q)` together with their inverted-chart counterparts, compiled.
#[derive(Debug, Clone)]
pub struct LocusSystem {
    pub polys: LocusPolys,
    std: [CompiledPoly<f64>; 2],
    inv: [CompiledPoly<f64>; 2],
}

impl LocusSystem {
    pub fn new(polys: LocusPolys) -> Self {
        let pi = invert_chart(&polys.p);
        let qi = invert_chart(&polys.q);
        Self::with_inverted(polys, &pi, &qi)
    }

    /// Use explicitly supplied inverted-chart polynomials.
    pub fn with_inverted(polys: LocusPolys, pi: &MultiPoly<BigInt>, qi: &MultiPoly<BigInt>) -> Self {
        let std = [CompiledPoly::from_int(&polys.p), CompiledPoly::from_int(&polys.q)];
        let inv = [CompiledPoly::from_int(pi), CompiledPoly::from_int(qi)];
        Self { polys, std, inv }
    }

    /// The inverted chart blown up by `1 / s` around infinity.
    ///
    /// The slice at time `t` seen in the inverted chart at scale `s` is the
    /// inverted-chart slice of the returned system at time `t * s`.
    pub fn zoomed_at_infinity(&self, s: f64) -> Self {
        let inv = [self.inv[0].rescaled(s), self.inv[1].rescaled(s)];
        Self { polys: self.polys.clone(), std: self.std.clone(), inv }
    }

    fn pair(&self, chart: Chart) -> &[CompiledPoly<f64>; 2] {
        match chart {
            Chart::Standard => &self.std,
            Chart::Inverted => &self.inv,
        }
    }

    pub fn eval(&self, chart: Chart, y: &[f64; 4]) -> [f64; 2] {
        let pr = self.pair(chart);
        [pr[0].eval(y), pr[1].eval(y)]
    }

    pub fn eval_grad(&self, chart: Chart, y: &[f64; 4]) -> ([f64; 2], [[f64; 4]; 2]) {
        let pr = self.pair(chart);
        let (p, gp) = pr[0].eval_grad(y);
        let (q, gq) = pr[1].eval_grad(y);
        ([p, q], [gp, gq])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminant::discriminant_locus_polys;
    use crate::presets;

    #[test]
    fn compiled_matches_exact() {
        let lp = discriminant_locus_polys(&presets::transformed_fermat()).unwrap();
        let sys = LocusSystem::new(lp.clone());
        assert_eq!(sys.eval(Chart::Standard, &[1.0, 0.0, 0.0, 0.0]), [16.0, 0.0]);
        let x = [0.3, -0.7, 0.2, 0.11];
        let exact = lp.p.eval_f64(&x).unwrap().re;
        let (v, g) = sys.eval_grad(Chart::Standard, &x);
        assert!((v[0] - exact).abs() < 1e-12 * exact.abs().max(1.0));
        let h = 1e-6;
        let mut xh = x;
        xh[2] += h;
        let fd = (sys.eval(Chart::Standard, &xh)[0] - sys.eval(Chart::Standard, &[x[0], x[1], x[2] - h, x[3]])[0]) / (2.0 * h);
        assert!((fd - g[0][2]).abs() < 1e-5 * fd.abs().max(1.0));
    }

    #[test]
    fn zoom_rescales_coordinates() {
        let lp = discriminant_locus_polys(&presets::transformed_fermat()).unwrap();
        let sys = LocusSystem::new(lp);
        let z = sys.zoomed_at_infinity(0.01);
        let w = [0.3, -0.2, 0.5, 0.1];
        let a = z.eval(Chart::Inverted, &w)[0];
        let b = sys.eval(Chart::Inverted, &w.map(|v| v * 0.01))[0];
        assert!(a != 0.0 && b != 0.0);
        let w2 = [0.1, 0.4, -0.3, 0.2];
        let ratio_z = z.eval(Chart::Inverted, &w2)[0] / a;
        let ratio_s = sys.eval(Chart::Inverted, &w2.map(|v| v * 0.01))[0] / b;
        assert!((ratio_z - ratio_s).abs() < 1e-9 * ratio_s.abs().max(1.0));
    }

    #[test]
    fn inversion_is_an_involution() {
        let y = [0.3, -1.2, 2.0, 0.5];
        let back = invert_point(&invert_point(&y));
        for k in 0..4 {
            assert!((back[k] - y[k]).abs() < 1e-14);
        }
    }
}
