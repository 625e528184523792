//! Banded transfer kernel `K(x, y) = p(y - x) w(y)` on heights `0..=k`.

use crate::model::{BridgeSpec, StepDistribution};

#[derive(Debug, Clone)]
pub struct Kernel {
    min_jump: i64,
    probs: Vec<f64>,
    weights: Vec<f64>,
}

impl Kernel {
    pub fn new(step: &StepDistribution, weights: Vec<f64>) -> Self {
        Self {
            min_jump: step.min_jump(),
            probs: step.dense().to_vec(),
            weights,
        }
    }

    pub fn from_spec(spec: &BridgeSpec) -> Self {
        Self::new(&spec.step, spec.site_weights())
    }

    /// Number of heights, `k + 1`.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, y: usize) -> f64 {
        self.weights[y]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step_prob(&self, jump: i64) -> f64 {
        let idx = jump - self.min_jump;
        if idx < 0 {
            0.0
        } else {
            self.probs.get(idx as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.step_prob(y as i64 - x as i64) * self.weights[y]
    }

    /// Range of `y` reachable from `x` in one step, clipped to the lattice.
    pub fn targets(&self, x: usize) -> std::ops::RangeInclusive<usize> {
        let top = self.len() as i64 - 1;
        let lo = (x as i64 + self.min_jump).clamp(0, top) as usize;
        let hi = (x as i64 + self.min_jump + self.probs.len() as i64 - 1).clamp(0, top) as usize;
        lo..=hi
    }

    /// Range of `x` that can reach `y` in one step, clipped to the lattice.
    pub fn sources(&self, y: usize) -> std::ops::RangeInclusive<usize> {
        let top = self.len() as i64 - 1;
        let max_jump = self.min_jump + self.probs.len() as i64 - 1;
        let lo = (y as i64 - max_jump).clamp(0, top) as usize;
        let hi = (y as i64 - self.min_jump).clamp(0, top) as usize;
        lo..=hi
    }

    /// `out[y] = w(y)^[weighted] * sum_x v[x] p(y - x)`.
    pub fn apply_left(&self, v: &[f64], weighted: bool, out: &mut [f64]) {
        let n = self.len() as i64;
        let width = self.probs.len() as i64;
        for (y, o) in out.iter_mut().enumerate() {
            // x = y - j with j = min_jump + t
            let mut acc = 0.0;
            let t_lo = (y as i64 - self.min_jump - (n - 1)).max(0);
            let t_hi = (y as i64 - self.min_jump).min(width - 1);
            for t in t_lo..=t_hi {
                let x = y as i64 - self.min_jump - t;
                acc += v[x as usize] * self.probs[t as usize];
            }
            *o = if weighted { acc * self.weights[y] } else { acc };
        }
    }

    /// `out[x] = sum_y p(y - x) w(y)^[weighted] v[y]`.
    pub fn apply_right(&self, v: &[f64], weighted: bool, out: &mut [f64]) {
        let n = self.len() as i64;
        let width = self.probs.len() as i64;
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            let t_lo = (-(x as i64) - self.min_jump).max(0);
            let t_hi = (n - 1 - x as i64 - self.min_jump).min(width - 1);
            for t in t_lo..=t_hi {
                let y = (x as i64 + self.min_jump + t) as usize;
                let wy = if weighted { self.weights[y] } else { 1.0 };
                acc += self.probs[t as usize] * wy * v[y];
            }
            *o = acc;
        }
    }
}

/// Scales `v` so that its largest entry is 1 and returns `ln` of the factor
/// removed, or `None` if `v` vanishes.
pub(crate) fn normalize_max(v: &mut [f64]) -> Option<f64> {
    let m = v.iter().copied().fold(0.0, f64::max);
    if !(m > 0.0) || !m.is_finite() {
        return None;
    }
    let inv = 1.0 / m;
    v.iter_mut().for_each(|x| *x *= inv);
    Some(m.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{geometric, lazy_srw};

    fn dense(k: &Kernel) -> Vec<Vec<f64>> {
        (0..k.len())
            .map(|x| (0..k.len()).map(|y| k.entry(x, y)).collect())
            .collect()
    }

    #[test]
    fn products_match_dense_matrix() {
        for step in [lazy_srw(), geometric(0.4, 5).unwrap()] {
            let w: Vec<f64> = (0..9).map(|x| (-0.3 * x as f64).exp()).collect();
            let k = Kernel::new(&step, w);
            let m = dense(&k);
            let v: Vec<f64> = (0..9).map(|i| 1.0 + (i as f64).sin()).collect();
            let mut left = vec![0.0; 9];
            let mut right = vec![0.0; 9];
            k.apply_left(&v, true, &mut left);
            k.apply_right(&v, true, &mut right);
            for y in 0..9 {
                let l: f64 = (0..9).map(|x| v[x] * m[x][y]).sum();
                let r: f64 = (0..9).map(|x| m[y][x] * v[x]).sum();
                assert!((l - left[y]).abs() < 1e-14);
                assert!((r - right[y]).abs() < 1e-14);
            }
            for (x, row) in m.iter().enumerate() {
                for (y, &w) in row.iter().enumerate() {
                    if w > 0.0 {
                        assert!(k.targets(x).contains(&y));
                    }
                }
            }
        }
    }
}
