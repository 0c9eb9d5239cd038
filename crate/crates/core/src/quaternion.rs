//! Quaternions over an arbitrary real field.
//!
//! The computational path of the crate uses the complex formulas in
//! [`crate::twistor`]; quaternions are kept for cross-checks of the
//! projection `[q1, q2] -> q2^{-1} q1`.

use crate::ring::RealField;

#[derive(Debug, Clone, PartialEq)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: RealField> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn one() -> Self {
        Self::new(T::one(), T::zero(), T::zero(), T::zero())
    }

    pub fn i() -> Self {
        Self::new(T::zero(), T::one(), T::zero(), T::zero())
    }

    pub fn j() -> Self {
        Self::new(T::zero(), T::zero(), T::one(), T::zero())
    }

    pub fn k() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::one())
    }

    /// `a + b j` for complex `a = (a_re, a_im)`, `b = (b_re, b_im)`.
    pub fn from_complex_pair(a_re: T, a_im: T, b_re: T, b_im: T) -> Self {
        // b j = (b_re + b_im i) j = b_re j + b_im k
        Self::new(a_re, a_im, b_re, b_im)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(
            self.w.add_ref(&o.w),
            self.x.add_ref(&o.x),
            self.y.add_ref(&o.y),
            self.z.add_ref(&o.z),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a1, b1, c1, d1) = (&self.w, &self.x, &self.y, &self.z);
        let (a2, b2, c2, d2) = (&o.w, &o.x, &o.y, &o.z);
        let w = a1.mul_ref(a2).sub_ref(&b1.mul_ref(b2)).sub_ref(&c1.mul_ref(c2)).sub_ref(&d1.mul_ref(d2));
        let x = a1.mul_ref(b2).add_ref(&b1.mul_ref(a2)).add_ref(&c1.mul_ref(d2)).sub_ref(&d1.mul_ref(c2));
        let y = a1.mul_ref(c2).sub_ref(&b1.mul_ref(d2)).add_ref(&c1.mul_ref(a2)).add_ref(&d1.mul_ref(b2));
        let z = a1.mul_ref(d2).add_ref(&b1.mul_ref(c2)).sub_ref(&c1.mul_ref(b2)).add_ref(&d1.mul_ref(a2));
        Self::new(w, x, y, z)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.w.clone(), self.x.neg_ref(), self.y.neg_ref(), self.z.neg_ref())
    }

    pub fn norm_sqr(&self) -> T {
        self.w
            .mul_ref(&self.w)
            .add_ref(&self.x.mul_ref(&self.x))
            .add_ref(&self.y.mul_ref(&self.y))
            .add_ref(&self.z.mul_ref(&self.z))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.w.mul_ref(s), self.x.mul_ref(s), self.y.mul_ref(s), self.z.mul_ref(s))
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr().inv()?;
        Some(self.conj().scale(&n))
    }

    pub fn is_zero(&self) -> bool {
        self.w.is_zero() && self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.w.clone(), self.x.clone(), self.y.clone(), self.z.clone()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = Quaternion<f64>;

    #[test]
    fn unit_relations() {
        assert_eq!(Q::i().mul(&Q::j()), Q::k());
        assert_eq!(Q::j().mul(&Q::i()), Q::k().scale(&-1.0));
        assert_eq!(Q::j().mul(&Q::k()), Q::i());
        assert_eq!(Q::k().mul(&Q::k()), Q::one().scale(&-1.0));
    }

    #[test]
    fn inverse() {
        let q = Q::new(1.0, 2.0, -3.0, 0.5);
        let p = q.mul(&q.inv().unwrap());
        for (a, b) in p.to_array().iter().zip(Q::one().to_array()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(Q::zero().inv().is_none());
    }
}
