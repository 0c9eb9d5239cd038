//! Restriction of a cubic surface to twistor fibers and its discriminant.

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::poly::{var_names, MultiPoly};
use crate::ring::{Coeff, GaussRat, Ring};

/// Variables `x1..x4` of the base `R^4`.
pub fn x_vars() -> Vec<String> {
    var_names("x", 4)
}

/// Homogeneous coordinates `z1..z4` of `CP^3`.
pub fn z_vars() -> Vec<String> {
    var_names("z", 4)
}

/// A surface in `CP^3` given by a homogeneous polynomial in `z1..z4`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    poly: MultiPoly<GaussRat>,
}

impl Surface {
    pub fn new(poly: MultiPoly<GaussRat>) -> Result<Self> {
        if poly.nvars() != 4 {
            return Err(Error::Precondition(format!(
                "surface needs 4 homogeneous variables, got {}",
                poly.nvars()
            )));
        }
        if poly.is_zero() {
            return Err(Error::Precondition("zero polynomial defines no surface".into()));
        }
        if !poly.is_homogeneous() {
            return Err(Error::Precondition("defining polynomial is not homogeneous".into()));
        }
        Ok(Self { poly })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(crate::poly::parse_gauss_poly(src, &z_vars())?)
    }

    pub fn poly(&self) -> &MultiPoly<GaussRat> {
        &self.poly
    }

    pub fn degree(&self) -> u32 {
        self.poly.total_degree().unwrap_or(0)
    }

    /// The same surface with coordinates `(z3, z4, z1, z2)`.
    ///
    /// Restricting this one to the fiber over `y` gives the original
    /// surface restricted to the fiber over `iota(y)`.
    pub fn swapped_halves(&self) -> Self {
        Self { poly: self.poly.permute_vars(&[2, 3, 0, 1]) }
    }
}

/// A polynomial in `lambda` whose coefficients are polynomials in `x`; index = power.
pub type LambdaPoly = Vec<MultiPoly<GaussRat>>;

/// `f_x(lambda) = c3 lambda^3 + c2 lambda^2 + c1 lambda + c0`, stored as `c[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCubic {
    pub c: [MultiPoly<GaussRat>; 4],
}

impl FiberCubic {
    pub fn max_degree(&self) -> u32 {
        self.c.iter().filter_map(|p| p.total_degree()).max().unwrap_or(0)
    }

    pub fn eval_exact(&self, x: &[GaussRat]) -> Result<[GaussRat; 4]> {
        Ok([
            self.c[0].eval_exact(x)?,
            self.c[1].eval_exact(x)?,
            self.c[2].eval_exact(x)?,
            self.c[3].eval_exact(x)?,
        ])
    }
}

fn lambda_mul(a: &LambdaPoly, b: &LambdaPoly) -> LambdaPoly {
    let vars = x_vars();
    let mut out = vec![MultiPoly::zero(&vars); a.len() + b.len() - 1];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            out[i + j] = out[i + j].add_ref(&p.mul_ref(q));
        }
    }
    out
}

/// The four components of `theta_x(lambda)` with `x` symbolic.
///
/// With `u = x1 + i x2`, `v = x3 + i x4` this is
/// `(lambda u - conj v, lambda v + conj u, lambda, 1)`.
pub fn symbolic_fiber() -> [LambdaPoly; 4] {
    let vars = x_vars();
    let x = |k| MultiPoly::<GaussRat>::var(&vars, k);
    let i = GaussRat::i();
    let u = x(0).add_ref(&x(1).scale(&i));
    let ubar = x(0).sub_ref(&x(1).scale(&i));
    let v = x(2).add_ref(&x(3).scale(&i));
    let vbar = x(2).sub_ref(&x(3).scale(&i));
    let zero = MultiPoly::zero(&vars);
    let one = MultiPoly::one(&vars);
    [
        vec![vbar.neg_ref(), u],
        vec![ubar, v],
        vec![zero.clone(), one.clone()],
        vec![one, zero],
    ]
}

/// Substitute affine maps in `lambda` into a cubic surface and collect powers of `lambda`.
pub fn substitute_affine(f: &Surface, maps: &[LambdaPoly; 4]) -> Result<FiberCubic> {
    if f.degree() != 3 {
        return Err(Error::Degree(format!("expected a cubic surface, got degree {}", f.degree())));
    }
    let vars = x_vars();
    let mut acc: LambdaPoly = vec![MultiPoly::zero(&vars); 4];
    for (exps, coeff) in f.poly().terms() {
        let mut prod: LambdaPoly = vec![MultiPoly::constant(&vars, coeff.clone())];
        for (k, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                prod = lambda_mul(&prod, &maps[k]);
            }
        }
        for (k, p) in prod.into_iter().enumerate() {
            if k > 3 {
                if !p.is_zero() {
                    return Err(Error::Degree("maps are not affine in lambda".into()));
                }
                continue;
            }
            acc[k] = acc[k].add_ref(&p);
        }
    }
    let [c0, c1, c2, c3]: [MultiPoly<GaussRat>; 4] =
        acc.try_into().map_err(|_| Error::Degree("unexpected lambda degree".into()))?;
    Ok(FiberCubic { c: [c0, c1, c2, c3] })
}

/// Restriction of the surface to the fibers over the standard chart.
pub fn fiber_cubic(f: &Surface) -> Result<FiberCubic> {
    substitute_affine(f, &symbolic_fiber())
}

/// Restriction of the surface to the fiber over `iota(y)`, as polynomials in `y`.
pub fn inverted_fiber_cubic(f: &Surface) -> Result<FiberCubic> {
    substitute_affine(&f.swapped_halves(), &symbolic_fiber())
}

/// Discriminant of `a t^3 + b t^2 + c t + d`.
pub fn cubic_discriminant<R: Ring>(a: &R, b: &R, c: &R, d: &R) -> R {
    let abcd = a.mul_ref(b).mul_ref(c).mul_ref(d).scale_int(18);
    let b3d = b.mul_ref(b).mul_ref(b).mul_ref(d).scale_int(4);
    let b2c2 = b.mul_ref(b).mul_ref(c).mul_ref(c);
    let ac3 = a.mul_ref(c).mul_ref(c).mul_ref(c).scale_int(4);
    let a2d2 = a.mul_ref(a).mul_ref(d).mul_ref(d).scale_int(27);
    abcd.sub_ref(&b3d).add_ref(&b2c2).sub_ref(&ac3).sub_ref(&a2d2)
}

/// The real polynomials whose common zero set is the discriminant locus.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusPolys {
    pub p: MultiPoly<BigInt>,
    pub q: MultiPoly<BigInt>,
}

/// Discriminant of a fiber cubic as a Gaussian-rational polynomial in `x`.
pub fn fiber_discriminant(fc: &FiberCubic) -> MultiPoly<GaussRat> {
    cubic_discriminant(&fc.c[3], &fc.c[2], &fc.c[1], &fc.c[0])
}

pub fn discriminant_locus_polys(f: &Surface) -> Result<LocusPolys> {
    let fc = fiber_cubic(f)?;
    let disc = fiber_discriminant(&fc);
    let (re, im) = disc.split_re_im();
    Ok(LocusPolys { p: re.to_int()?, q: im.to_int()? })
}

/// `|x|^(2 deg P) P(iota(x))`, the polynomial describing `P = 0` near infinity.
pub fn invert_chart<C: Coeff>(p: &MultiPoly<C>) -> MultiPoly<C> {
    let e = 2 * p.total_degree().unwrap_or(0);
    invert_chart_with_exponent(p, e).expect("exponent 2 deg P is admissible")
}

/// `|x|^e P(iota(x))` for an even exponent `e >= 2 deg P`.
pub fn invert_chart_with_exponent<C: Coeff>(p: &MultiPoly<C>, e: u32) -> Result<MultiPoly<C>> {
    let deg = p.total_degree().unwrap_or(0);
    if e % 2 != 0 || e < 2 * deg {
        return Err(Error::Precondition(format!(
            "exponent {e} must be even and at least {}",
            2 * deg
        )));
    }
    let vars = p.vars().to_vec();
    let norm = (0..vars.len()).fold(MultiPoly::zero(&vars), |acc, k| {
        let x = MultiPoly::<C>::var(&vars, k);
        acc.add_ref(&x.mul_ref(&x))
    });
    let half = (e / 2) as usize;
    let mut norm_pows = vec![MultiPoly::one(&vars)];
    for k in 1..=half {
        let next = norm_pows[k - 1].mul_ref(&norm);
        norm_pows.push(next);
    }
    let mut out = MultiPoly::zero(&vars);
    for (exps, c) in p.terms() {
        let d: u32 = exps.iter().sum();
        // conj(x) = (x1, -x2, -x3, -x4)
        let flips: u32 = exps.iter().skip(1).sum();
        let coeff = if flips % 2 == 1 { c.neg_ref() } else { c.clone() };
        let mono = MultiPoly::monomial(&vars, exps.to_vec(), coeff);
        out = out.add_ref(&mono.mul_ref(&norm_pows[half - d as usize]));
    }
    Ok(out)
}
