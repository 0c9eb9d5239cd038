//! The conformal symmetry group of the flagship surface acting on `S^4`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::{QSqrt3, RealField};
use crate::twistor::S4Point;

/// Real fields containing `sqrt 3`, needed for the order-three rotation.
pub trait WithSqrt3: RealField {
    fn sqrt3() -> Self;
    fn half() -> Self {
        Self::from_int(2).inv().expect("2 is invertible")
    }
}

impl WithSqrt3 for f64 {
    fn sqrt3() -> Self {
        3f64.sqrt()
    }
}

impl WithSqrt3 for QSqrt3 {
    fn sqrt3() -> Self {
        QSqrt3::sqrt3()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    /// Rotation by `2 pi / 3` in the `(x1, x2)` plane.
    Theta,
    /// `(x1, x2, x3, x4) -> (x1, x2, -x3, -x4)`.
    Sigma,
    /// `x -> conj(x) / |x|^2`, swapping 0 and infinity.
    Iota,
}

impl Generator {
    pub fn apply<T: WithSqrt3>(self, p: &S4Point<T>) -> S4Point<T> {
        match self {
            Generator::Theta => theta(p),
            Generator::Sigma => sigma(p),
            Generator::Iota => iota(p),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Generator::Theta => 't',
            Generator::Sigma => 's',
            Generator::Iota => 'i',
        }
    }
}

pub fn theta<T: WithSqrt3>(p: &S4Point<T>) -> S4Point<T> {
    match p {
        S4Point::Infinity => S4Point::Infinity,
        S4Point::Finite(x) => {
            let c = T::half().neg_ref();
            let s = T::sqrt3().mul_ref(&T::half());
            S4Point::Finite([
                c.mul_ref(&x[0]).add_ref(&s.mul_ref(&x[1])),
                s.neg_ref().mul_ref(&x[0]).add_ref(&c.mul_ref(&x[1])),
                x[2].clone(),
                x[3].clone(),
            ])
        }
    }
}

pub fn sigma<T: RealField>(p: &S4Point<T>) -> S4Point<T> {
    match p {
        S4Point::Infinity => S4Point::Infinity,
        S4Point::Finite(x) => {
            S4Point::Finite([x[0].clone(), x[1].clone(), x[2].neg_ref(), x[3].neg_ref()])
        }
    }
}

pub fn iota<T: RealField>(p: &S4Point<T>) -> S4Point<T> {
    match p {
        S4Point::Infinity => S4Point::Finite([T::zero(), T::zero(), T::zero(), T::zero()]),
        S4Point::Finite(x) => {
            let n = x.iter().fold(T::zero(), |a, v| a.add_ref(&v.mul_ref(v)));
            match n.inv() {
                None => S4Point::Infinity,
                Some(r) => S4Point::Finite([
                    x[0].mul_ref(&r),
                    x[1].neg_ref().mul_ref(&r),
                    x[2].neg_ref().mul_ref(&r),
                    x[3].neg_ref().mul_ref(&r),
                ]),
            }
        }
    }
}

/// A word in the generators; the first letter acts first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConformalMap {
    pub word: Vec<Generator>,
}

impl ConformalMap {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(word: Vec<Generator>) -> Self {
        Self { word }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Self) -> Self {
        let mut w = self.word.clone();
        w.extend_from_slice(&other.word);
        Self::new(w)
    }

    pub fn apply<T: WithSqrt3>(&self, p: &S4Point<T>) -> S4Point<T> {
        self.word.iter().fold(p.clone(), |acc, g| g.apply(&acc))
    }

    pub fn name(&self) -> String {
        if self.word.is_empty() {
            "e".into()
        } else {
            self.word.iter().map(|g| g.symbol()).collect()
        }
    }
}

pub fn apply_conformal<T: WithSqrt3>(g: &ConformalMap, x: &S4Point<T>) -> S4Point<T> {
    g.apply(x)
}

/// The fixed sample on which group elements are compared.
pub fn sample_points() -> Vec<S4Point<QSqrt3>> {
    let vals = [
        QSqrt3::int(1),
        QSqrt3::int(-1),
        QSqrt3::int(2),
        QSqrt3::int(-2),
        QSqrt3::int(3),
        QSqrt3::int(-3),
        QSqrt3::from_ratios(1, 2, 0, 1),
        QSqrt3::from_ratios(-1, 2, 0, 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    (0..8)
        .map(|_| S4Point::Finite([0, 1, 2, 3].map(|_| vals.choose(&mut rng).unwrap().clone())))
        .collect()
}

fn signature(g: &ConformalMap, sample: &[S4Point<QSqrt3>]) -> Vec<S4Point<QSqrt3>> {
    sample.iter().map(|p| g.apply(p)).collect()
}

const MAX_WORD: usize = 8;

/// All distinct maps generated by the three generators, shortest words first.
pub fn enumerate_group() -> Result<Vec<ConformalMap>> {
    let sample = sample_points();
    let gens = [Generator::Theta, Generator::Sigma, Generator::Iota];
    let mut found = vec![ConformalMap::identity()];
    let mut sigs = vec![signature(&found[0], &sample)];
    let mut frontier = vec![ConformalMap::identity()];
    for _ in 0..MAX_WORD {
        let mut next = Vec::new();
        for w in &frontier {
            for g in gens {
                let cand = w.then(&ConformalMap::new(vec![g]));
                let sig = signature(&cand, &sample);
                if !sigs.contains(&sig) {
                    sigs.push(sig);
                    found.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        if next.is_empty() {
            return Ok(found);
        }
        frontier = next;
    }
    Err(Error::NoClosure(MAX_WORD))
}

/// Index of the enumerated element acting like `g` on the sample, if any.
pub fn identify(group: &[ConformalMap], g: &ConformalMap) -> Option<usize> {
    let sample = sample_points();
    let sig = signature(g, &sample);
    group.iter().position(|h| signature(h, &sample) == sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Ring;
    use Generator::*;

    fn fin(v: [i64; 4]) -> S4Point<QSqrt3> {
        S4Point::Finite(v.map(QSqrt3::int))
    }

    #[test]
    fn generator_examples() {
        assert_eq!(iota(&fin([1, 0, 0, 0])), fin([1, 0, 0, 0]));
        assert_eq!(sigma(&fin([1, 2, 3, 4])), fin([1, 2, -3, -4]));
        let p = fin([1, 2, 3, 4]);
        assert_eq!(iota(&iota(&p)), p);
        assert_eq!(iota(&fin([0, 0, 0, 0])), S4Point::Infinity);
        assert_eq!(iota::<QSqrt3>(&S4Point::Infinity), fin([0, 0, 0, 0]));
        assert_eq!(ConformalMap::identity().apply(&p), p);
    }

    #[test]
    fn relations_hold_on_sample() {
        let g = enumerate_group().unwrap();
        assert_eq!(g.len(), 12);
        let e = identify(&g, &ConformalMap::identity());
        assert_eq!(identify(&g, &ConformalMap::new(vec![Theta, Theta, Theta])), e);
        assert_eq!(
            identify(&g, &ConformalMap::new(vec![Sigma, Iota])),
            identify(&g, &ConformalMap::new(vec![Iota, Sigma]))
        );
        assert_eq!(
            identify(&g, &ConformalMap::new(vec![Iota, Theta])),
            identify(&g, &ConformalMap::new(vec![Theta, Theta, Iota]))
        );
    }

    #[test]
    fn sigma_iota_is_conjugation_over_norm() {
        let p = fin([1, 2, 3, 4]);
        let si = ConformalMap::new(vec![Sigma, Iota]).apply(&p);
        let r = QSqrt3::from_ratios(1, 30, 0, 1);
        let expect = S4Point::Finite([1, -2, 3, 4].map(|k| QSqrt3::int(k).mul_ref(&r)));
        assert_eq!(si, expect);
    }
}
