use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rbmle::environment::LinkFunction;
use rbmle::glm::{
    glm_mle, glm_rbmle_arm_solve, glm_rbmle_arm_solve_from, GlmHistory, GlmPolicyState,
};
use rbmle::linear::{closed_form_biased_estimate, LinearPolicyState};

type History = Vec<(Vec<f64>, f64)>;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Clamped logistic mean with radius 1: linear continuation outside [-1, 1].
fn mu(z: f64) -> f64 {
    if z > 1.0 {
        sigmoid(1.0) + sigmoid(1.0) * (1.0 - sigmoid(1.0)) * (z - 1.0)
    } else if z < -1.0 {
        sigmoid(-1.0) + sigmoid(1.0) * (1.0 - sigmoid(1.0)) * (z + 1.0)
    } else {
        sigmoid(z)
    }
}

fn mu_prime(z: f64) -> f64 {
    let c = z.clamp(-1.0, 1.0);
    sigmoid(c) * (1.0 - sigmoid(c))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn residual(h: &History, theta: &[f64], x: &[f64], alpha: f64, lambda: f64) -> f64 {
    let mut g: Vec<f64> = x
        .iter()
        .zip(theta)
        .map(|(xi, ti)| alpha * xi - lambda * ti)
        .collect();
    for (xs, r) in h {
        let w = r - mu(dot(xs, theta));
        for (gi, xi) in g.iter_mut().zip(xs) {
            *gi += w * xi;
        }
    }
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn hessian(h: &History, theta: &[f64], lambda: f64) -> DMatrix<f64> {
    let d = theta.len();
    let mut m = DMatrix::from_diagonal_element(d, d, -lambda);
    for (xs, _) in h {
        let xv = DVector::from_column_slice(xs);
        m -= (&xv * xv.transpose()) * mu_prime(dot(xs, theta));
    }
    m
}

fn objective(h: &History, theta: &[f64], x: &[f64], alpha: f64, lambda: f64) -> f64 {
    // antiderivative of the clamped link, up to a constant
    let b = |z: f64| {
        let k = sigmoid(1.0) * (1.0 - sigmoid(1.0));
        let sp = |u: f64| (1.0 + u.exp()).ln();
        if z > 1.0 {
            sp(1.0) + sigmoid(1.0) * (z - 1.0) + 0.5 * k * (z - 1.0).powi(2)
        } else if z < -1.0 {
            sp(-1.0) + sigmoid(-1.0) * (z + 1.0) + 0.5 * k * (z + 1.0).powi(2)
        } else {
            sp(z)
        }
    };
    h.iter()
        .map(|(xs, r)| r * dot(xs, theta) - b(dot(xs, theta)))
        .sum::<f64>()
        + alpha * dot(theta, x)
        - 0.5 * lambda * dot(theta, theta)
}

fn instance() -> impl Strategy<Value = (usize, History, Vec<f64>, f64, f64)> {
    (1usize..=5).prop_flat_map(|d| {
        (
            Just(d),
            prop::collection::vec(
                (
                    prop::collection::vec(-1.0f64..1.0, d),
                    prop_oneof![Just(0.0), Just(1.0), -1.0f64..2.0],
                ),
                1..=100,
            ),
            prop::collection::vec(-1.0f64..1.0, d),
            0.0f64..10.0,
            0.5f64..2.0,
        )
    })
}

fn state(d: usize, h: &History, lambda: f64, link: LinkFunction) -> GlmPolicyState {
    GlmPolicyState::from_history(GlmHistory::from_pairs(d, h), lambda, link)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn logistic_solution_is_a_strict_maximum((d, h, x, alpha, lambda) in instance()) {
        let s = state(d, &h, lambda, LinkFunction::logistic());
        let theta = glm_rbmle_arm_solve(&s, &x, alpha).unwrap();
        prop_assert!(residual(&h, theta.as_slice(), &x, alpha, lambda) < 1e-8);
        let eig = hessian(&h, theta.as_slice(), lambda).symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e <= -lambda + 1e-9));
        let best = objective(&h, theta.as_slice(), &x, alpha, lambda);
        for i in 0..d {
            for step in [-1e-3, 1e-3] {
                let mut p = theta.clone();
                p[i] += step;
                prop_assert!(objective(&h, p.as_slice(), &x, alpha, lambda) < best);
            }
        }
    }

    #[test]
    fn identity_link_matches_closed_form((d, h, x, alpha, lambda) in instance()) {
        let s = state(d, &h, lambda, LinkFunction::identity());
        let theta = glm_rbmle_arm_solve(&s, &x, alpha).unwrap();
        let mut lin = LinearPolicyState::new(d, lambda);
        for (xs, r) in &h {
            lin.update(xs, *r);
        }
        let closed = closed_form_biased_estimate(&lin, &x, alpha);
        prop_assert!((theta - closed).amax() < 1e-8);
    }

    #[test]
    fn warm_start_reaches_the_same_root((d, h, x, alpha, lambda) in instance(), start in prop::collection::vec(-2.0f64..2.0, 5)) {
        let s = state(d, &h, lambda, LinkFunction::logistic());
        let cold = glm_rbmle_arm_solve(&s, &x, alpha).unwrap();
        let warm = glm_rbmle_arm_solve_from(&s, &x, alpha, &start[..d]).unwrap();
        prop_assert!((cold - warm).amax() < 1e-7);
    }

    #[test]
    fn mle_is_the_unbiased_root((d, h, x, _alpha, lambda) in instance()) {
        let s = state(d, &h, lambda, LinkFunction::logistic());
        let theta = glm_mle(&s).unwrap();
        prop_assert!(residual(&h, theta.as_slice(), &x, 0.0, lambda) < 1e-8);
    }
}

#[test]
fn empty_history_needs_no_iteration() {
    for (d, lambda, alpha) in [(1, 1.0, 0.0), (3, 0.5, 2.0), (5, 2.0, 7.3)] {
        let s = GlmPolicyState::new(d, lambda, LinkFunction::logistic());
        let x: Vec<f64> = (0..d).map(|i| 0.1 * i as f64 - 0.2).collect();
        let theta = glm_rbmle_arm_solve(&s, &x, alpha).unwrap();
        for (t, xi) in theta.iter().zip(&x) {
            assert_eq!(*t, alpha / lambda * xi);
        }
    }
}

#[test]
fn grid_search_agrees_in_two_dimensions() {
    let h: History = vec![
        (vec![0.8, 0.6], 1.0),
        (vec![-0.6, 0.8], 0.0),
        (vec![0.0, 1.0], 1.0),
        (vec![1.0, 0.0], 0.0),
        (vec![0.6, -0.8], 1.0),
    ];
    let (x, alpha, lambda) = ([0.6, 0.8], 1.5, 1.0);
    let s = state(2, &h, lambda, LinkFunction::logistic());
    let theta = glm_rbmle_arm_solve(&s, &x, alpha).unwrap();
    // coarse grid, then a fine grid around the coarse winner
    let search = |c0: f64, c1: f64, half: f64, n: i32| {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in -n..=n {
            for j in -n..=n {
                let p = [
                    c0 + half * i as f64 / n as f64,
                    c1 + half * j as f64 / n as f64,
                ];
                let v = objective(&h, &p, &x, alpha, lambda);
                if v > best.0 {
                    best = (v, p[0], p[1]);
                }
            }
        }
        best
    };
    let (_, c0, c1) = search(0.0, 0.0, 4.0, 200);
    let best = search(c0, c1, 0.04, 200);
    assert!((theta[0] - best.1).abs() < 1e-3, "{theta} vs {best:?}");
    assert!((theta[1] - best.2).abs() < 1e-3, "{theta} vs {best:?}");
}
