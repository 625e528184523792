//! Ground truth on small instances.
//!
//! Nothing here calls into `kernel`, `transfer`, `spectral` or `sampler`:
//! path laws come from brute-force enumeration and walk laws from a separate
//! convolution routine. Lazy-walk computations run in exact rational
//! arithmetic through the [`Exact`] scalar trait.

mod enumerate;
mod fixture;
mod identities;

pub use enumerate::*;
pub use fixture::*;
pub use identities::*;

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::model::StepDistribution;

/// Scalar field used by the oracle: `f64` or `BigRational`.
pub trait Exact: Clone + Debug + PartialOrd + Num + ToPrimitive + Send + Sync {
    fn from_int(i: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Exact for f64 {
    fn from_int(i: i64) -> Self {
        i as f64
    }
}

impl Exact for BigRational {
    fn from_int(i: i64) -> Self {
        BigRational::from_integer(BigInt::from(i))
    }
}

/// Step law on `min_jump..` with probabilities in `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStep<T> {
    pub min_jump: i64,
    pub probs: Vec<T>,
}

/// Lazy walk `1/4, 1/2, 1/4` in rationals.
pub fn lazy_rational() -> ExactStep<BigRational> {
    ExactStep {
        min_jump: -1,
        probs: vec![
            BigRational::ratio(1, 4),
            BigRational::ratio(1, 2),
            BigRational::ratio(1, 4),
        ],
    }
}

impl ExactStep<f64> {
    pub fn from_step(step: &StepDistribution) -> Self {
        let min_jump = step.min_jump();
        let probs = (min_jump..=step.max_jump()).map(|j| step.prob(j)).collect();
        Self { min_jump, probs }
    }
}

impl<T: Exact> ExactStep<T> {
    pub fn max_jump(&self) -> i64 {
        self.min_jump + self.probs.len() as i64 - 1
    }

    pub fn prob(&self, j: i64) -> T {
        let i = j - self.min_jump;
        if i < 0 || i as usize >= self.probs.len() {
            T::zero()
        } else {
            self.probs[i as usize].clone()
        }
    }

    pub fn variance(&self) -> T {
        let mut mean = T::zero();
        let mut second = T::zero();
        for (i, p) in self.probs.iter().enumerate() {
            let j = T::from_int(self.min_jump + i as i64);
            mean = mean + j.clone() * p.clone();
            second = second + j.clone() * j * p.clone();
        }
        second - mean.clone() * mean
    }

    /// Law of `S_n` as `(offset, pmf)`, `pmf[i] = P(S_n = offset + i)`.
    pub fn power(&self, n: usize) -> WalkLaw<T> {
        let mut law = WalkLaw {
            offset: 0,
            pmf: vec![T::one()],
        };
        for _ in 0..n {
            law = law.step(self);
        }
        law
    }

    /// `P(S_n = s)` for all `n <= m` at once.
    pub fn powers(&self, m: usize) -> Vec<WalkLaw<T>> {
        let mut out = Vec::with_capacity(m + 1);
        let mut law = WalkLaw {
            offset: 0,
            pmf: vec![T::one()],
        };
        for _ in 0..m {
            let next = law.step(self);
            out.push(law);
            law = next;
        }
        out.push(law);
        out
    }
}

/// Law of an integer random variable on `offset..offset + pmf.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkLaw<T> {
    pub offset: i64,
    pub pmf: Vec<T>,
}

impl<T: Exact> WalkLaw<T> {
    pub fn at(&self, s: i64) -> T {
        let i = s - self.offset;
        if i < 0 || i as usize >= self.pmf.len() {
            T::zero()
        } else {
            self.pmf[i as usize].clone()
        }
    }

    /// `P(S > threshold)` for a real threshold.
    pub fn above(&self, threshold: f64) -> T {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(i, _)| (self.offset + *i as i64) as f64 > threshold)
            .fold(T::zero(), |acc, (_, p)| acc + p.clone())
    }

    fn step(&self, step: &ExactStep<T>) -> Self {
        let mut pmf = vec![T::zero(); self.pmf.len() + step.probs.len() - 1];
        for (i, p) in self.pmf.iter().enumerate() {
            for (j, q) in step.probs.iter().enumerate() {
                pmf[i + j] = pmf[i + j].clone() + p.clone() * q.clone();
            }
        }
        Self {
            offset: self.offset + step.min_jump,
            pmf,
        }
    }
}

fn nonzero<T: Exact>(p: T) -> Result<T> {
    if p.is_zero() {
        Err(Error::NullEvent)
    } else {
        Ok(p)
    }
}
