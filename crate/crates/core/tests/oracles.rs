//! Library results compared against independent computations.

use ecl_sim::mixing::{
    alpha_induced, example1_alpha, frobenius_consts, metropolis, spectral_gap, MixingMatrix,
    WeightMatrix,
};
use ecl_sim::objectives::{
    consensus_distance, error_metric, generate_quadratic, stochastic_grad, NoiseStream, Objective,
};
use ecl_sim::topology::{build_complete, build_ring, build_torus, Graph};
use ecl_sim::vectors::NodeVectors;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

fn oracle_gap(w: &WeightMatrix) -> f64 {
    let n = w.size();
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| w.get(i, j) - 1.0 / n as f64).collect())
        .collect();
    let rho = jacobi_eigenvalues(centered)
        .into_iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    1.0 - rho * rho
}

#[test]
fn ring_gap_matches_circulant_eigenvalues() {
    for n in [3, 4, 7, 25] {
        let m = metropolis(&build_ring(n).unwrap());
        // eigenvalues 1/3 + 2/3 cos(2 pi k / n)
        let rho = (1..n)
            .map(|k| {
                (1.0 / 3.0 + 2.0 / 3.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
                    .abs()
            })
            .fold(0.0f64, f64::max);
        assert!(
            (spectral_gap(&m) - (1.0 - rho * rho)).abs() < 1e-12,
            "n = {n}"
        );
    }
}

#[test]
fn gaps_match_jacobi_oracle() {
    let graphs: Vec<Graph> = vec![
        build_ring(25).unwrap(),
        build_torus(5, 5).unwrap(),
        build_complete(25).unwrap(),
        build_torus(3, 4).unwrap(),
    ];
    for g in &graphs {
        let m = metropolis(g);
        assert!((spectral_gap(&m) - oracle_gap(m.weights())).abs() < 1e-10);
        let a = example1_alpha(g, 1000.0).unwrap();
        let w = alpha_induced(g, &a, 0.5).unwrap().weights;
        let mm = MixingMatrix::new(w.clone()).unwrap();
        assert!((spectral_gap(&mm) - oracle_gap(&w)).abs() < 1e-10);
    }
    assert!((spectral_gap(&metropolis(&build_complete(25).unwrap())) - 1.0).abs() < 1e-12);
}

#[test]
fn spectral_gap_bounds_contraction_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in [
        build_ring(25).unwrap(),
        build_torus(5, 5).unwrap(),
        build_complete(25).unwrap(),
    ] {
        let m = metropolis(&g);
        let p = spectral_gap(&m);
        for _ in 0..100 {
            let rows: Vec<Vec<f64>> = (0..25)
                .map(|_| (0..8).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            let x = NodeVectors::from_rows(&rows).unwrap();
            let lhs = consensus_distance(&m.apply(&x));
            let rhs = (1.0 - p) * consensus_distance(&x);
            assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15, "{lhs} > {rhs}");
        }
    }
}

#[test]
fn frobenius_constants_by_dense_algebra() {
    let g = build_ring(6).unwrap();
    let a = example1_alpha(&g, 4.0).unwrap();
    let w = alpha_induced(&g, &a, 0.25).unwrap().weights;
    let (bp, b) = frobenius_consts(&w, &g, &a);
    let mut expect_bp = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            let d = w.get(i, j) - if i == j { 1.0 } else { 0.0 };
            expect_bp += d * d;
        }
    }
    // D - E has off-diagonal 2 on ring edges and -4 on the diagonal
    let expect_b = (6.0 * 16.0 + 12.0 * 4.0) / 4.0;
    assert!((bp - expect_bp).abs() < 1e-14);
    assert!((b - expect_b).abs() < 1e-12);
}

#[test]
fn gradient_matches_finite_differences() {
    let prob = generate_quadratic(7, 4, 3.0, 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    for node in 0..4 {
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut g = vec![0.0; 7];
        prob.grad_into(node, &x, &mut g);
        for k in 0..7 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += h;
            xm[k] -= h;
            let fd = (prob.value(node, &xp) - prob.value(node, &xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}

#[test]
fn consensus_distance_frobenius_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rows: Vec<Vec<f64>> = (0..9)
        .map(|_| (0..4).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let x = NodeVectors::from_rows(&rows).unwrap();
    let m = DMatrix::from_fn(9, 4, |i, k| rows[i][k]);
    let mean = m.row_mean();
    let centered = DMatrix::from_fn(9, 4, |i, k| m[(i, k)] - mean[k]);
    assert!((consensus_distance(&x) - centered.norm_squared() / 9.0).abs() < 1e-12);
    // error at the mean equals consensus distance
    let xbar: Vec<f64> = (0..4).map(|k| mean[k]).collect();
    assert!((error_metric(&xbar, &x) - consensus_distance(&x)).abs() < 1e-12);
}

#[test]
fn heterogeneity_has_expected_spread() {
    let (n, d, zeta_sq) = (25, 50, 10.0);
    let trials = 1000;
    let mean: f64 = (0..trials)
        .map(|s| {
            generate_quadratic(d, n, zeta_sq, s)
                .unwrap()
                .heterogeneity()
        })
        .sum::<f64>()
        / trials as f64;
    let expect = zeta_sq * (n as f64 - 1.0) / n as f64;
    assert!((mean - expect).abs() < 0.01 * expect, "{mean} vs {expect}");
}

#[test]
fn noise_is_unbiased_with_requested_power() {
    let noise = NoiseStream::new(99, 10.0, 50).unwrap();
    let draws = 100_000;
    let mut power = 0.0;
    let mut sum = vec![0.0; 50];
    for r in 0..draws {
        let e = noise.sample((r % 25) as usize, r / 25);
        power += e.iter().map(|v| v * v).sum::<f64>();
        for (s, v) in sum.iter_mut().zip(&e) {
            *s += v;
        }
    }
    let power = power / draws as f64;
    assert!((power - 10.0).abs() < 0.02 * 10.0, "{power}");
    for s in sum {
        assert!((s / draws as f64).abs() < 0.01);
    }
}

#[test]
fn stochastic_gradient_centers_on_true_gradient() {
    let prob = generate_quadratic(5, 3, 2.0, 4).unwrap();
    let noise = NoiseStream::new(8, 4.0, 5).unwrap();
    let x = vec![0.3; 5];
    let mut truth = vec![0.0; 5];
    prob.grad_into(1, &x, &mut truth);
    let draws = 20_000;
    let mut acc = vec![0.0; 5];
    for r in 0..draws {
        let g = stochastic_grad(&prob, &noise, 1, r, &x).unwrap();
        for (a, v) in acc.iter_mut().zip(g) {
            *a += v / draws as f64;
        }
    }
    for (a, t) in acc.iter().zip(&truth) {
        assert!((a - t).abs() < 0.03);
    }
    assert!(stochastic_grad(&prob, &noise, 1, 0, &[0.0; 4]).is_err());
    assert!(stochastic_grad(&prob, &noise, 3, 0, &x).is_err());
}
