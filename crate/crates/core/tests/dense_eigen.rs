//! Perron data and spectral gap against a dense symmetric eigensolve.
//!
//! For a symmetric step law `K = P W` with `P(x, y) = p(y - x)` and
//! `W = diag(w)`, the matrix `S = W^{1/2} P W^{1/2}` is symmetric and shares
//! the spectrum of `K`; an eigenvector `u` of `S` gives `φ = W^{-1/2} u` and
//! `ψ = u W^{1/2}`.

use nalgebra::{DMatrix, SymmetricEigen};
use prewet::model::{builtin_steps, lazy_srw, BridgeSpec, Potential};
use prewet::spectral::build_operator;

fn dense(spec: &BridgeSpec) -> (Vec<f64>, Vec<Vec<f64>>) {
    let w = spec.site_weights();
    let n = spec.k + 1;
    let s = DMatrix::from_fn(n, n, |x, y| {
        w[x].sqrt() * spec.step.prob(y as i64 - x as i64) * w[y].sqrt()
    });
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

#[test]
fn perron_data_matches_dense_eigensolve() {
    let spec = BridgeSpec::new(lazy_srw(), Potential::Linear, 0.5, 1, 0, 0, 6).unwrap();
    let op = build_operator(&spec).unwrap();
    let (values, vectors) = dense(&spec);
    assert!((op.perron_root() - values[0]).abs() < 1e-10 * values[0]);

    let w = spec.site_weights();
    let u = &vectors[0];
    let sign = u[0].signum();
    let mut psi: Vec<f64> = u.iter().zip(&w).map(|(u, w)| sign * u * w.sqrt()).collect();
    let mut phi: Vec<f64> = u.iter().zip(&w).map(|(u, w)| sign * u / w.sqrt()).collect();
    let total: f64 = psi.iter().sum();
    psi.iter_mut().for_each(|v| *v /= total);
    let dot: f64 = psi.iter().zip(&phi).map(|(a, b)| a * b).sum();
    phi.iter_mut().for_each(|v| *v /= dot);
    for x in 0..=spec.k {
        assert!((op.left()[x] - psi[x]).abs() < 1e-10, "psi[{x}]");
        assert!((op.right()[x] - phi[x]).abs() < 1e-10 * phi[x].max(1.0), "phi[{x}]");
    }
}

#[test]
fn spectral_gap_matches_dense_eigensolve() {
    for (name, step) in builtin_steps() {
        for (lambda, k) in [(0.05, 20), (0.01, 40), (0.002, 60)] {
            let spec = BridgeSpec::new(step.clone(), Potential::Linear, lambda, 1, 0, 0, k).unwrap();
            let op = build_operator(&spec).unwrap();
            let (values, _) = dense(&spec);
            let gap = 1.0 - values[1].abs() / values[0];
            let got = op.spectral_gap().unwrap();
            assert!((got - gap).abs() < 1e-8, "{name} λ={lambda}: {got} vs {gap}");
            assert!((op.perron_root() - values[0]).abs() < 1e-10 * values[0]);
        }
    }
}
