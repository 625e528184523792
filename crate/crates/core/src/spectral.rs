//! Perron data of the truncated transfer kernel: stationary law, bulk law,
//! spectral gap and total-variation relaxation of the free-endpoint chain.

use crate::error::{Error, Result};
use crate::kernel::{normalize_max, Kernel};
use crate::model::{default_truncation, solve_h, BridgeSpec, Potential, StepDistribution};

pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct TransferOperator {
    spec: BridgeSpec,
    kernel: Kernel,
    perron: f64,
    right: Vec<f64>,
    left: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// Power iteration for the Perron root and both Perron vectors, normalized
/// so that `sum(left) = 1` and `left . right = 1`.
pub fn build_operator(spec: &BridgeSpec) -> Result<TransferOperator> {
    spec.validate()?;
    let kernel = Kernel::from_spec(spec);
    let (perron_r, right, res_r, it_r) = perron_vector(&kernel, Side::Right)?;
    let (_, mut left, res_l, it_l) = perron_vector(&kernel, Side::Left)?;

    let total: f64 = left.iter().sum();
    left.iter_mut().for_each(|v| *v /= total);
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    let right = right.into_iter().map(|v| v / dot).collect();

    Ok(TransferOperator {
        spec: spec.clone(),
        kernel,
        perron: perron_r,
        right,
        left,
        residual: res_r.max(res_l),
        iterations: it_r.max(it_l),
    })
}

/// Operator for `(step, potential, lambda)` on the default truncation
/// `K = ceil(8 H_1) + max positive jump`.
pub fn operator_for(step: &StepDistribution, potential: &Potential, lambda: f64) -> Result<TransferOperator> {
    let h = solve_h(potential, 1.0, lambda)?;
    let k = default_truncation(h, 0, step);
    let spec = BridgeSpec::new(step.clone(), potential.clone(), lambda, 1, 0, 0, k)?;
    build_operator(&spec)
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn apply(kernel: &Kernel, side: Side, v: &[f64], out: &mut [f64]) {
    match side {
        Side::Left => kernel.apply_left(v, true, out),
        Side::Right => kernel.apply_right(v, true, out),
    }
}

fn perron_vector(kernel: &Kernel, side: Side) -> Result<(f64, Vec<f64>, f64, usize)> {
    let n = kernel.len();
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        apply(kernel, side, &v, &mut w);
        let growth = w.iter().copied().fold(0.0, f64::max);
        if !(growth > 0.0) {
            return Err(Error::Precondition("kernel annihilates the start vector".into()));
        }
        let estimate = weighted_quotient(&w, &v);
        residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - estimate * b).abs())
            .fold(0.0, f64::max)
            / estimate;
        std::mem::swap(&mut v, &mut w);
        normalize_max(&mut v);
        if residual < RESIDUAL_TOL {
            return Ok((estimate, v, residual, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
        gap_estimate: f64::NAN,
    })
}

// (w . v) / (v . v)
fn weighted_quotient(w: &[f64], v: &[f64]) -> f64 {
    let num: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|b| b * b).sum();
    num / den
}

impl TransferOperator {
    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Leading eigenvalue `Λ`.
    pub fn perron_root(&self) -> f64 {
        self.perron
    }

    /// Right eigenvector `φ` (`K φ = Λ φ`).
    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// Left eigenvector `ψ` (`ψ K = Λ ψ`).
    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `λ = 0` leaves the truncated chain substochastic with no localized
    /// stationary regime; results are reported but flagged.
    pub fn is_null_recurrent_regime(&self) -> bool {
        self.spec.lambda == 0.0
    }

    /// Relative residuals `(‖Kφ − Λφ‖∞, ‖ψK − Λψ‖∞)` scaled by `Λ` and the vector norms.
    pub fn residuals(&self) -> (f64, f64) {
        let n = self.kernel.len();
        let mut out = vec![0.0; n];
        let res = |v: &[f64], out: &[f64]| {
            let norm = v.iter().copied().fold(0.0, f64::max);
            out.iter()
                .zip(v)
                .map(|(a, b)| (a - self.perron * b).abs())
                .fold(0.0, f64::max)
                / (self.perron * norm)
        };
        self.kernel.apply_right(&self.right, true, &mut out);
        let r = res(&self.right, &out);
        self.kernel.apply_left(&self.left, true, &mut out);
        let l = res(&self.left, &out);
        (r, l)
    }

    /// Limit law of the free right endpoint, `π = ψ / sum ψ`.
    pub fn stationary(&self) -> Vec<f64> {
        self.left.clone()
    }

    /// Limit law of a mid-bridge height, `∝ φ ⊙ ψ`.
    pub fn bulk_law(&self) -> Vec<f64> {
        let mut pi: Vec<f64> = self.left.iter().zip(&self.right).map(|(a, b)| a * b).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        pi
    }

    /// Markov kernel of the infinite-volume walk, `P(x, y) = K(x, y) φ(y) / (Λ φ(x))`,
    /// as `(first target, probabilities)` per starting height. Rows are
    /// renormalized, which removes the eigenvector residual where `φ` is tiny.
    pub fn doob_transitions(&self) -> Vec<(usize, Vec<f64>)> {
        (0..self.kernel.len())
            .map(|x| {
                let targets = self.kernel.targets(x);
                let first = *targets.start();
                let mut probs: Vec<f64> = targets.map(|y| self.kernel.entry(x, y) * self.right[y]).collect();
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|q| *q /= total);
                (first, probs)
            })
            .collect()
    }

    /// Law of the free endpoint after `n` steps from `δ_a`: `δ_a K^n`, normalized.
    pub fn free_endpoint_law(&self, a: usize, n: usize) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.relax(a, n, |_, mu| out = mu.to_vec())?;
        Ok(out)
    }

    fn relax(&self, a: usize, n_max: usize, mut visit: impl FnMut(usize, &[f64])) -> Result<()> {
        let len = self.kernel.len();
        if a >= len {
            return Err(Error::IndexOutOfRange { index: a, n: len - 1 });
        }
        let mut mu = vec![0.0; len];
        mu[a] = 1.0;
        let mut next = vec![0.0; len];
        visit(0, &mu);
        for n in 1..=n_max {
            self.kernel.apply_left(&mu, true, &mut next);
            let total: f64 = next.iter().sum();
            if !(total > 0.0) {
                return Err(Error::EmptyPathSpace);
            }
            next.iter_mut().for_each(|v| *v /= total);
            std::mem::swap(&mut mu, &mut next);
            visit(n, &mu);
        }
        Ok(())
    }

    /// `(N, ‖μ_N − π‖_TV)` for `N = 0..=n_max`, starting from `δ_a`.
    pub fn tv_relaxation(&self, a: usize, n_max: usize) -> Result<Vec<(usize, f64)>> {
        let pi = self.stationary();
        let mut out = Vec::with_capacity(n_max + 1);
        self.relax(a, n_max, |n, mu| out.push((n, total_variation(mu, &pi))))?;
        Ok(out)
    }

    /// `1 − |λ₂| / Λ` by power iteration with the Perron component projected out.
    pub fn spectral_gap(&self) -> Result<f64> {
        Ok(self.second_eigenvalue()?.map_or(1.0, |l2| 1.0 - l2.abs() / self.perron))
    }

    /// Subleading eigenvalue (signed), `None` for a one-state lattice.
    pub fn second_eigenvalue(&self) -> Result<Option<f64>> {
        let n = self.kernel.len();
        if n == 1 {
            return Ok(None);
        }
        let project = |v: &mut [f64]| {
            let c: f64 = self.left.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(&self.right).for_each(|(x, r)| *x -= c * r);
        };
        let mut v: Vec<f64> = (0..n).map(|x| x as f64 - 0.5 * (n - 1) as f64 + 0.25).collect();
        project(&mut v);
        normalize_abs_max(&mut v);
        let mut w = vec![0.0; n];
        let mut estimate = 0.0;
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            self.kernel.apply_right(&v, true, &mut w);
            project(&mut w);
            estimate = weighted_quotient(&w, &v);
            residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - estimate * b).abs())
                .fold(0.0, f64::max)
                / estimate.abs();
            std::mem::swap(&mut v, &mut w);
            if !normalize_abs_max(&mut v) {
                // the projected space is annihilated: all other eigenvalues vanish
                return Ok(Some(0.0));
            }
            if residual < RESIDUAL_TOL {
                return Ok(Some(estimate));
            }
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
            gap_estimate: 1.0 - estimate.abs() / self.perron,
        })
    }
}

fn normalize_abs_max(v: &mut [f64]) -> bool {
    let m = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !(m > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= m);
    true
}

/// Half the ℓ¹ distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lazy_srw;
    use approx::assert_relative_eq;

    fn lazy_op(lambda: f64, k: usize) -> TransferOperator {
        let spec = BridgeSpec::new(lazy_srw(), Potential::Linear, lambda, 1, 0, 0, k).unwrap();
        build_operator(&spec).unwrap()
    }

    #[test]
    fn one_state_lattice() {
        let op = lazy_op(0.5, 0);
        assert_relative_eq!(op.perron_root(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(op.right()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(op.left()[0], 1.0, max_relative = 1e-15);
        assert_eq!(op.stationary(), vec![1.0]);
        assert_eq!(op.spectral_gap().unwrap(), 1.0);
        let tv = op.tv_relaxation(0, 3).unwrap();
        assert!(tv.iter().all(|&(_, d)| d == 0.0));
    }

    #[test]
    fn perron_vectors_positive_and_normalized() {
        let op = lazy_op(0.5, 6);
        assert!(op.right().iter().all(|&v| v > 0.0));
        assert!(op.left().iter().all(|&v| v > 0.0));
        assert_relative_eq!(op.left().iter().sum::<f64>(), 1.0, max_relative = 1e-14);
        let dot: f64 = op.left().iter().zip(op.right()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(dot, 1.0, max_relative = 1e-14);
        let (r, l) = op.residuals();
        assert!(r < RESIDUAL_TOL && l < RESIDUAL_TOL, "{r:e} {l:e}");
    }

    #[test]
    fn perron_root_decreasing_in_lambda() {
        let roots: Vec<f64> = [0.01, 0.05, 0.1, 0.5, 1.0]
            .iter()
            .map(|&l| lazy_op(l, 40).perron_root())
            .collect();
        assert!(roots.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn stationary_is_long_free_endpoint_law() {
        let op = lazy_op(0.5, 6);
        let mu = op.free_endpoint_law(0, 400).unwrap();
        assert!(total_variation(&mu, &op.stationary()) < 1e-8);
    }

    #[test]
    fn tv_is_non_increasing() {
        let op = operator_for(&lazy_srw(), &Potential::Linear, 1e-2).unwrap();
        let tv = op.tv_relaxation(0, 600).unwrap();
        for w in tv.windows(2) {
            assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12), "{:?}", w);
        }
        let tv = op.tv_relaxation(5, 600).unwrap();
        assert!(tv.last().unwrap().1 < 1e-2);
    }

    #[test]
    fn doob_kernel_is_stochastic_with_bulk_law_invariant() {
        let op = lazy_op(0.3, 12);
        let p = op.doob_transitions();
        for (_, row) in &p {
            assert_relative_eq!(row.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
        }
        let bulk = op.bulk_law();
        let mut next = vec![0.0; bulk.len()];
        for (x, (first, row)) in p.iter().enumerate() {
            for (t, q) in row.iter().enumerate() {
                next[first + t] += bulk[x] * q;
            }
        }
        assert!(total_variation(&next, &bulk) < 1e-12);
    }

    #[test]
    fn gap_of_two_state_chain() {
        // K = 1: kernel [[1/2 w0, 1/4 w1], [1/4 w0, 1/2 w1]] with w0 = 1
        let lambda: f64 = 0.4;
        let op = lazy_op(lambda, 1);
        let w1 = (-lambda).exp();
        let (a, b, c, d) = (0.5, 0.25 * w1, 0.25, 0.5 * w1);
        let tr = a + d;
        let det = a * d - b * c;
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        assert_relative_eq!(op.perron_root(), l1, max_relative = 1e-12);
        assert_relative_eq!(op.spectral_gap().unwrap(), 1.0 - l2 / l1, max_relative = 1e-10);
    }
}
