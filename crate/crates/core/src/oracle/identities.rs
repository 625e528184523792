//! Exact checks of the random-walk estimates used for the bridge bounds:
//! exchangeability moments, maximal inequalities and a local limit floor.

use serde::Serialize;

use super::{lazy_rational, nonzero, Exact, ExactStep, WalkLaw};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Conditional moments of `S_k` given `S_m = d`, for `k = 0..=m`.
#[derive(Debug, Clone)]
pub struct BridgeMoments<T> {
    pub m: usize,
    pub d: i64,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
    /// `Var(ξ_1 | S_m = d)`.
    pub xi_variance: T,
    /// `E(ξ_1² | S_m = d)`.
    pub xi_second_moment: T,
}

pub fn bridge_conditional_moments<T: Exact>(step: &ExactStep<T>, m: usize, d: i64) -> Result<BridgeMoments<T>> {
    let powers = step.powers(m);
    let pd = nonzero(powers[m].at(d))?;
    let mut mean = Vec::with_capacity(m + 1);
    let mut variance = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let (mut m1, mut m2) = (T::zero(), T::zero());
        for (i, p) in powers[k].pmf.iter().enumerate() {
            let s = powers[k].offset + i as i64;
            let joint = p.clone() * powers[m - k].at(d - s);
            let sv = T::from_int(s);
            m1 = m1 + sv.clone() * joint.clone();
            m2 = m2 + sv.clone() * sv * joint;
        }
        let e = m1 / pd.clone();
        let v = m2 / pd.clone() - e.clone() * e.clone();
        mean.push(e);
        variance.push(v);
    }
    let (xi_variance, xi_second_moment) = if m >= 1 {
        let e = mean[1].clone();
        (variance[1].clone(), variance[1].clone() + e.clone() * e)
    } else {
        (T::zero(), T::zero())
    };
    Ok(BridgeMoments {
        m,
        d,
        mean,
        variance,
        xi_variance,
        xi_second_moment,
    })
}

impl<T: Exact> BridgeMoments<T> {
    /// Per `k`: `E(S_k|S_m=d) - k d/m` and `Var(S_k|S_m=d) - k(m-k)/(m-1) Var(ξ_1|S_m=d)`.
    /// The variance identity is vacuous for `m = 1`.
    pub fn defects(&self) -> Vec<(T, T)> {
        let m = self.m as i64;
        (0..=self.m)
            .map(|k| {
                let k = k as i64;
                let mean = self.mean[k as usize].clone() - T::ratio(k * self.d, m.max(1));
                let var = if m >= 2 {
                    self.variance[k as usize].clone() - T::ratio(k * (m - k), m - 1) * self.xi_variance.clone()
                } else {
                    T::zero()
                };
                (mean, var)
            })
            .collect()
    }

    pub fn identities_exact(&self) -> bool {
        self.defects().iter().all(|(a, b)| a.is_zero() && b.is_zero())
    }

    pub fn max_defect(&self) -> f64 {
        self.defects()
            .iter()
            .map(|(a, b)| a.as_f64().abs().max(b.as_f64().abs()))
            .fold(0.0, f64::max)
    }
}

/// Law of `S_{m-1}` restricted to `max_{0<k<m} S_k <= level` (sub-probability).
fn below_level<T: Exact>(step: &ExactStep<T>, m: usize, level: i64) -> WalkLaw<T> {
    let mut law = WalkLaw {
        offset: 0,
        pmf: vec![T::one()],
    };
    for _ in 1..m {
        law = law.step(step);
        for (i, p) in law.pmf.iter_mut().enumerate() {
            if law.offset + i as i64 > level {
                *p = T::zero();
            }
        }
    }
    law
}

/// `P(max_{0<k<m} S_k > level | S_m = d)`.
pub fn conditional_max_tail<T: Exact>(step: &ExactStep<T>, m: usize, d: i64, level: i64) -> Result<T> {
    if m == 0 {
        return Err(Error::param("m", "must be >= 1"));
    }
    let pd = nonzero(step.power(m).at(d))?;
    let law = below_level(step, m, level);
    let stay = law.pmf.iter().enumerate().fold(T::zero(), |acc, (i, p)| {
        acc + p.clone() * step.prob(d - law.offset - i as i64)
    });
    Ok(T::one() - stay / pd)
}

/// Smallest `c` with `P(max > M | S_m = d) <= c m^{3/2} / M²` on the grid.
#[derive(Debug, Clone, Serialize)]
pub struct MaxTailFit {
    pub c: f64,
    /// `(m, d, M, probability)`.
    pub points: Vec<(usize, i64, i64, f64)>,
}

pub fn fit_max_tail_constant<T: Exact>(
    step: &ExactStep<T>,
    ms: &[usize],
    levels: &[i64],
    ds: &[i64],
) -> Result<MaxTailFit> {
    let mut points = Vec::new();
    let mut c: f64 = 0.0;
    for &m in ms {
        for &d in ds {
            for &level in levels {
                let p = match conditional_max_tail(step, m, d, level) {
                    Ok(p) => p.as_f64(),
                    Err(Error::NullEvent) => continue,
                    Err(e) => return Err(e),
                };
                c = c.max(p * (level * level) as f64 / (m as f64).powf(1.5));
                points.push((m, d, level, p));
            }
        }
    }
    Ok(MaxTailFit { c, points })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnePointBound<T> {
    /// `P(S_k > M + D, S_m = d)`.
    pub joint: T,
    /// `k (m-k) σ⁴ / M⁴`.
    pub product: T,
    /// `m² σ⁴ / (4 M⁴)`.
    pub bound: T,
}

impl<T: Exact> OnePointBound<T> {
    pub fn holds(&self) -> bool {
        self.joint <= self.product && self.product <= self.bound
    }
}

pub fn one_point_chebyshev_check<T: Exact>(
    step: &ExactStep<T>,
    m: usize,
    d: i64,
    k: usize,
    level: i64,
    spread: i64,
) -> Result<OnePointBound<T>> {
    if d.abs() > spread {
        return Err(Error::Precondition(format!("|d| = {} exceeds D = {spread}", d.abs())));
    }
    if k > m || level <= 0 {
        return Err(Error::Precondition("need k <= m and M > 0".into()));
    }
    let powers = step.powers(m);
    nonzero(powers[m].at(d))?;
    let joint = powers[k]
        .pmf
        .iter()
        .enumerate()
        .filter(|(i, _)| powers[k].offset + *i as i64 > level + spread)
        .fold(T::zero(), |acc, (i, p)| {
            acc + p.clone() * powers[m - k].at(d - powers[k].offset - i as i64)
        });
    let s2 = step.variance();
    let s4 = s2.clone() * s2;
    let m4 = T::from_int(level.pow(4));
    let (k, m) = (k as i64, m as i64);
    Ok(OnePointBound {
        joint,
        product: T::from_int(k * (m - k)) * s4.clone() / m4.clone(),
        bound: T::from_int(m * m) * s4 / (T::from_int(4) * m4),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtemadiBound<T> {
    /// `P(max_{0<k<m} S_k > M)`.
    pub exact: T,
    /// `3 max_{0<k<m} P(S_k > M/3)`.
    pub bound: T,
}

impl<T: Exact> EtemadiBound<T> {
    pub fn holds(&self) -> bool {
        self.exact <= self.bound
    }
}

pub fn etemadi_check<T: Exact>(step: &ExactStep<T>, m: usize, level: i64) -> EtemadiBound<T> {
    let stay = below_level(step, m, level)
        .pmf
        .into_iter()
        .fold(T::zero(), |acc, p| acc + p);
    let exact = if m <= 1 { T::zero() } else { T::one() - stay };
    let powers = step.powers(m);
    let mut worst = T::zero();
    for law in powers.iter().take(m).skip(1) {
        let tail = law
            .pmf
            .iter()
            .enumerate()
            .filter(|(i, _)| 3 * (law.offset + *i as i64) > level)
            .fold(T::zero(), |acc, (_, p)| acc + p.clone());
        if tail > worst {
            worst = tail;
        }
    }
    EtemadiBound {
        exact,
        bound: T::from_int(3) * worst,
    }
}

/// Local limit floor `P(S_m = d) >= 1 / (2e sqrt(2π σ² m))`.
#[derive(Debug, Clone, Serialize)]
pub struct LltFloor {
    pub d: i64,
    /// Smallest `m_0` from which the floor holds up to `m_max`; `None` if it
    /// fails at `m_max`.
    pub m0: Option<usize>,
    /// `(m, P(S_m = d), floor)`.
    pub values: Vec<(usize, f64, f64)>,
}

pub const LLT_M_MAX: usize = 200;

pub fn llt_floor_check<T: Exact>(step: &ExactStep<T>, d: i64, m_max: usize) -> LltFloor {
    let sigma2 = step.variance().as_f64();
    let powers = step.powers(m_max);
    let values: Vec<(usize, f64, f64)> = (1..=m_max)
        .map(|m| {
            let floor = 1.0 / (2.0 * std::f64::consts::E * (2.0 * std::f64::consts::PI * sigma2 * m as f64).sqrt());
            (m, powers[m].at(d).as_f64(), floor)
        })
        .collect();
    let mut m0 = None;
    for &(m, exact, floor) in values.iter().rev() {
        if exact >= floor {
            m0 = Some(m);
        } else {
            break;
        }
    }
    LltFloor { d, m0, values }
}

/// Largest `ζ` on the grid such that `P(max > M | S_m = d) <= 1/3` for every
/// grid point with `m / M² <= ζ`.
#[derive(Debug, Clone, Serialize)]
pub struct SmallDroplet {
    pub zeta: f64,
    /// `(m, M, d, probability)`.
    pub points: Vec<(usize, i64, i64, f64)>,
}

pub fn small_droplet_check<T: Exact>(
    step: &ExactStep<T>,
    ms: &[usize],
    levels: &[i64],
    ds: &[i64],
) -> Result<SmallDroplet> {
    let third = T::ratio(1, 3);
    let mut points = Vec::new();
    let mut first_violation = f64::INFINITY;
    for &m in ms {
        for &level in levels {
            for &d in ds {
                let p = match conditional_max_tail(step, m, d, level) {
                    Ok(p) => p,
                    Err(Error::NullEvent) => continue,
                    Err(e) => return Err(e),
                };
                let ratio = m as f64 / (level * level) as f64;
                if p > third {
                    first_violation = first_violation.min(ratio);
                }
                points.push((m, level, d, p.as_f64()));
            }
        }
    }
    let zeta = points
        .iter()
        .map(|&(m, level, _, _)| m as f64 / (level * level) as f64)
        .filter(|&r| r < first_violation)
        .fold(0.0, f64::max);
    Ok(SmallDroplet { zeta, points })
}

/// Outcome of the full lazy-walk identity and inequality grid.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub exchangeability_cases: usize,
    pub exchangeability_exact: bool,
    /// `E(ξ_1² | S_m = d) <= 4 σ²` on the exchangeability grid.
    pub xi_second_moment_bounded: bool,
    pub chebyshev_cases: usize,
    pub chebyshev_holds: bool,
    pub etemadi_cases: usize,
    pub etemadi_holds: bool,
    pub max_tail: MaxTailFit,
    pub small_droplet: SmallDroplet,
    pub llt: Vec<LltFloor>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.exchangeability_exact
            && self.xi_second_moment_bounded
            && self.chebyshev_holds
            && self.etemadi_holds
            && self.small_droplet.zeta > 0.0
            && self.llt.iter().all(|l| l.m0.is_some())
    }
}

/// Runs every check on the shipped lazy-walk grid in rational arithmetic.
pub fn identity_suite(exec: Execution) -> Result<IdentityReport> {
    let step = lazy_rational();
    let sigma2 = step.variance();
    let four_sigma2 = num_rational::BigRational::from_int(4) * sigma2;

    let exch: Vec<Result<(usize, bool, bool)>> = exec::map_range(exec, 12, |i| {
        let m = i + 1;
        let (mut cases, mut exact, mut bounded) = (0, true, true);
        for d in -3i64..=3 {
            if d.unsigned_abs() as usize > m {
                continue;
            }
            let mom = bridge_conditional_moments(&step, m, d)?;
            cases += m + 1;
            exact &= mom.identities_exact();
            bounded &= mom.xi_second_moment <= four_sigma2;
        }
        Ok((cases, exact, bounded))
    });
    let (mut exchangeability_cases, mut exchangeability_exact, mut xi_second_moment_bounded) = (0, true, true);
    for r in exch {
        let (c, e, b) = r?;
        exchangeability_cases += c;
        exchangeability_exact &= e;
        xi_second_moment_bounded &= b;
    }

    let cheb: Vec<Result<(usize, bool)>> = exec::map_range(exec, 13, |i| {
        let m = i + 2;
        let (mut cases, mut ok) = (0, true);
        for spread in 0..=3i64 {
            for d in -spread..=spread {
                for k in 1..m {
                    for level in 1..=6 {
                        let b = match one_point_chebyshev_check(&step, m, d, k, level, spread) {
                            Ok(b) => b,
                            Err(Error::NullEvent) => continue,
                            Err(e) => return Err(e),
                        };
                        cases += 1;
                        ok &= b.holds();
                    }
                }
            }
        }
        Ok((cases, ok))
    });
    let (mut chebyshev_cases, mut chebyshev_holds) = (0, true);
    for r in cheb {
        let (c, ok) = r?;
        chebyshev_cases += c;
        chebyshev_holds &= ok;
    }

    let etemadi: Vec<(usize, bool)> = exec::map_range(exec, 13, |i| {
        let m = i + 2;
        let ok = (0..=6).all(|level| etemadi_check(&step, m, level).holds());
        (7, ok)
    });
    let etemadi_cases = etemadi.iter().map(|e| e.0).sum();
    let etemadi_holds = etemadi.iter().all(|e| e.1);

    let ms: Vec<usize> = (4..=14).collect();
    let max_tail = fit_max_tail_constant(&step, &ms, &[1, 2, 3, 4, 5], &[-2, -1, 0, 1, 2])?;
    let droplet_ms: Vec<usize> = (2..=14).collect();
    let small_droplet = small_droplet_check(&step, &droplet_ms, &[2, 3, 4, 5, 6], &[-2, -1, 0, 1, 2])?;
    let llt = exec::map(exec, &[0i64, 1, 2], |&d| llt_floor_check(&step, d, LLT_M_MAX));

    Ok(IdentityReport {
        exchangeability_cases,
        exchangeability_exact,
        xi_second_moment_bounded,
        chebyshev_cases,
        chebyshev_holds,
        etemadi_cases,
        etemadi_holds,
        max_tail,
        small_droplet,
        llt,
    })
}
