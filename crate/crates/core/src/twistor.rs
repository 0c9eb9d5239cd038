//! Points of `CP^3` and `S^4`, the twistor projection and its fibers.
//!
//! A point `[z1, z2, z3, z4]` is read as the quaternion pair
//! `(z1 + z2 j, z3 + z4 j)` with complex scalars acting on the left. The
//! projection sends it to `q2^{-1} q1`, identified with `R^4` through
//! `x1 + x2 i + x3 j + x4 k`, or to infinity when `q2 = 0`.

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;
use crate::ring::RealField;

#[derive(Debug, Clone, PartialEq)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: RealField> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }

    pub fn real(re: T) -> Self {
        Self::new(re, T::zero())
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn one() -> Self {
        Self::real(T::one())
    }

    pub fn i() -> Self {
        Self::new(T::zero(), T::one())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.re.add_ref(&o.re), self.im.add_ref(&o.im))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.re.sub_ref(&o.re), self.im.sub_ref(&o.im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(
            self.re.mul_ref(&o.re).sub_ref(&self.im.mul_ref(&o.im)),
            self.re.mul_ref(&o.im).add_ref(&self.im.mul_ref(&o.re)),
        )
    }

    pub fn neg(&self) -> Self {
        Self::new(self.re.neg_ref(), self.im.neg_ref())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), self.im.neg_ref())
    }

    pub fn to_f64(&self) -> Cx<f64> {
        Cx::new(self.re.to_f64(), self.im.to_f64())
    }
}

impl Cx<f64> {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// A point of `CP^3` given by homogeneous coordinates.
#[derive(Debug, Clone)]
pub struct CP3Point<T> {
    z: [Cx<T>; 4],
}

impl<T: RealField> CP3Point<T> {
    pub fn new(z: [Cx<T>; 4]) -> Result<Self> {
        if z.iter().all(Cx::is_zero) {
            return Err(Error::Precondition("all homogeneous coordinates vanish".into()));
        }
        Ok(Self { z })
    }

    pub fn coords(&self) -> &[Cx<T>; 4] {
        &self.z
    }

    /// Projective equality: all 2x2 cross products vanish.
    pub fn proj_eq(&self, other: &Self) -> bool {
        (0..4).all(|i| {
            (i + 1..4).all(|j| self.z[i].mul(&other.z[j]).sub(&self.z[j].mul(&other.z[i])).is_zero())
        })
    }

    pub fn to_f64(&self) -> CP3Point<f64> {
        CP3Point { z: [0, 1, 2, 3].map(|k| self.z[k].to_f64()) }
    }
}

impl CP3Point<f64> {
    /// Largest normalised cross product; zero exactly for equal points.
    pub fn proj_distance(&self, other: &Self) -> f64 {
        let na: f64 = self.z.iter().map(|c| c.abs().powi(2)).sum::<f64>().sqrt();
        let nb: f64 = other.z.iter().map(|c| c.abs().powi(2)).sum::<f64>().sqrt();
        let mut m: f64 = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let c = self.z[i].mul(&other.z[j]).sub(&self.z[j].mul(&other.z[i]));
                m = m.max(c.abs());
            }
        }
        m / (na * nb)
    }
}

/// A point of `S^4 = R^4 + {inf}`.
#[derive(Debug, Clone, PartialEq)]
pub enum S4Point<T> {
    Finite([T; 4]),
    Infinity,
}

impl<T: RealField> S4Point<T> {
    pub fn is_infinity(&self) -> bool {
        matches!(self, S4Point::Infinity)
    }

    pub fn to_f64(&self) -> S4Point<f64> {
        match self {
            S4Point::Finite(x) => S4Point::Finite([0, 1, 2, 3].map(|k| x[k].to_f64())),
            S4Point::Infinity => S4Point::Infinity,
        }
    }
}

impl S4Point<f64> {
    /// Stereographic image on the unit sphere in `R^5`; infinity is the north pole.
    pub fn to_sphere(&self) -> [f64; 5] {
        match self {
            S4Point::Infinity => [0.0, 0.0, 0.0, 0.0, 1.0],
            S4Point::Finite(x) => sphere_from_std(x),
        }
    }

    pub fn chordal_distance(&self, other: &Self) -> f64 {
        let a = self.to_sphere();
        let b = other.to_sphere();
        a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
    }
}

/// Stereographic image of a standard-chart point.
pub fn sphere_from_std(x: &[f64; 4]) -> [f64; 5] {
    let n2: f64 = x.iter().map(|v| v * v).sum();
    let d = n2 + 1.0;
    [2.0 * x[0] / d, 2.0 * x[1] / d, 2.0 * x[2] / d, 2.0 * x[3] / d, (n2 - 1.0) / d]
}

/// Stereographic image of the point `iota(y)` given in the inverted chart.
pub fn sphere_from_inv(y: &[f64; 4]) -> [f64; 5] {
    let n2: f64 = y.iter().map(|v| v * v).sum();
    let d = n2 + 1.0;
    [2.0 * y[0] / d, -2.0 * y[1] / d, -2.0 * y[2] / d, -2.0 * y[3] / d, (1.0 - n2) / d]
}

pub fn chordal(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn quat_pair<T: RealField>(a: &Cx<T>, b: &Cx<T>) -> Quaternion<T> {
    Quaternion::from_complex_pair(a.re.clone(), a.im.clone(), b.re.clone(), b.im.clone())
}

/// The twistor projection `CP^3 -> S^4`.
pub fn twistor_project<T: RealField>(p: &CP3Point<T>) -> S4Point<T> {
    let z = p.coords();
    let q1 = quat_pair(&z[0], &z[1]);
    let q2 = quat_pair(&z[2], &z[3]);
    match q2.inv() {
        None => S4Point::Infinity,
        Some(inv) => S4Point::Finite(inv.mul(&q1).to_array()),
    }
}

/// The real structure `[z1,z2,z3,z4] -> [-conj z2, conj z1, -conj z4, conj z3]`.
pub fn tau<T: RealField>(p: &CP3Point<T>) -> CP3Point<T> {
    let z = p.coords();
    CP3Point { z: [z[1].conj().neg(), z[0].conj(), z[3].conj().neg(), z[2].conj()] }
}

/// The affine family `lambda -> lambda p1 + p2` parameterising one fiber.
#[derive(Debug, Clone)]
pub struct FiberMap<T> {
    pub base: S4Point<T>,
    pub p1: [Cx<T>; 4],
    pub p2: [Cx<T>; 4],
}

impl<T: RealField> FiberMap<T> {
    pub fn eval(&self, lambda: &Cx<T>) -> CP3Point<T> {
        let z = [0, 1, 2, 3].map(|k| lambda.mul(&self.p1[k]).add(&self.p2[k]));
        CP3Point { z }
    }
}

/// The fiber over a finite point `x`.
pub fn fiber_map<T: RealField>(x: &S4Point<T>) -> Result<FiberMap<T>> {
    let S4Point::Finite(x) = x else {
        return Err(Error::InfinityFiber);
    };
    let u = Cx::new(x[0].clone(), x[1].clone());
    let v = Cx::new(x[2].clone(), x[3].clone());
    let p1 = [u.clone(), v.clone(), Cx::one(), Cx::zero()];
    let p2 = [v.conj().neg(), u.conj(), Cx::zero(), Cx::one()];
    Ok(FiberMap { base: S4Point::Finite(x.clone()), p1, p2 })
}

/// The fiber over infinity, `lambda -> (lambda, 1, 0, 0)`.
pub fn infinity_fiber<T: RealField>() -> FiberMap<T> {
    FiberMap {
        base: S4Point::Infinity,
        p1: [Cx::one(), Cx::zero(), Cx::zero(), Cx::zero()],
        p2: [Cx::zero(), Cx::one(), Cx::zero(), Cx::zero()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::QSqrt3;

    fn cp(v: [(i64, i64); 4]) -> CP3Point<QSqrt3> {
        CP3Point::new(v.map(|(a, b)| Cx::new(QSqrt3::int(a), QSqrt3::int(b)))).unwrap()
    }

    fn fin(v: [i64; 4]) -> S4Point<QSqrt3> {
        S4Point::Finite(v.map(QSqrt3::int))
    }

    #[test]
    fn projection_examples() {
        assert_eq!(twistor_project(&cp([(1, 0), (0, 0), (0, 0), (0, 0)])), S4Point::Infinity);
        assert_eq!(twistor_project(&cp([(0, 0), (0, 0), (1, 0), (0, 0)])), fin([0, 0, 0, 0]));
        assert_eq!(twistor_project(&cp([(1, 0), (0, 0), (1, 0), (0, 0)])), fin([1, 0, 0, 0]));
    }

    #[test]
    fn tau_examples() {
        let t = tau(&cp([(1, 0), (0, 0), (0, 0), (0, 0)]));
        assert!(t.proj_eq(&cp([(0, 0), (1, 0), (0, 0), (0, 0)])));
        let t = tau(&cp([(0, 0), (0, 0), (1, 0), (0, 0)]));
        assert!(t.proj_eq(&cp([(0, 0), (0, 0), (0, 0), (1, 0)])));
        let p = cp([(1, 0), (0, 2), (3, 0), (4, 0)]);
        assert!(tau(&tau(&p)).proj_eq(&p));
        assert!(!tau(&p).proj_eq(&p));
    }

    #[test]
    fn fiber_examples() {
        let f = fiber_map(&fin([0, 0, 0, 0])).unwrap();
        let l = Cx::new(QSqrt3::int(5), QSqrt3::int(2));
        let z = f.eval(&l);
        assert_eq!(z.coords()[2], l);
        assert_eq!(z.coords()[3], Cx::one());
        assert!(z.coords()[0].is_zero() && z.coords()[1].is_zero());

        let f = fiber_map(&fin([1, 0, 0, 0])).unwrap();
        let z = f.eval(&l);
        assert_eq!(z.coords()[0], l);
        assert_eq!(z.coords()[1], Cx::one());
        assert_eq!(twistor_project(&z), fin([1, 0, 0, 0]));

        assert_eq!(fiber_map::<QSqrt3>(&S4Point::Infinity).unwrap_err(), Error::InfinityFiber);
        let inf = infinity_fiber::<QSqrt3>();
        assert_eq!(twistor_project(&inf.eval(&l)), S4Point::Infinity);
    }

    #[test]
    fn rejects_zero_vector() {
        assert!(CP3Point::<f64>::new([Cx::zero(), Cx::zero(), Cx::zero(), Cx::zero()]).is_err());
    }
}
