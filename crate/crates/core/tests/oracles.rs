//! Monte-Carlo oracles for the analytic Gaussian computations.

use bcfb_core::linear::Block;
use bcfb_core::{
    cond_cov, evaluate, simulate_paths, validate_scalar, validate_vector, Channel, CovMatrix, IndexSet, LinearScheme,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Conditional covariance against the empirical covariance of least-squares
/// residuals from sampled vectors.
#[test]
fn cond_cov_matches_sampled_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in [3usize, 5, 8] {
        let l = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let joint = CovMatrix::new(&l * l.transpose()).unwrap();
        let k = dim / 2;
        let target = IndexSet::new((0..k).collect(), dim).unwrap();
        let given = IndexSet::new((k..dim).collect(), dim).unwrap();
        let analytic = cond_cov(&joint, &target, &given).unwrap().into_matrix();

        let samples = 1_000_000;
        let mut xs = DMatrix::<f64>::zeros(dim, samples);
        for j in 0..samples {
            let g = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            xs.set_column(j, &(&l * g));
        }
        let ta = xs.rows(0, k).into_owned();
        let gv = xs.rows(k, dim - k).into_owned();
        // Regression coefficients from the sample moments.
        let s_tg = &ta * gv.transpose() / samples as f64;
        let s_gg = &gv * gv.transpose() / samples as f64;
        let coef = s_tg * s_gg.try_inverse().unwrap();
        let resid = ta - coef * gv;
        let empirical = &resid * resid.transpose() / samples as f64;
        let err = rel_frobenius(&empirical, &analytic);
        assert!(err < 0.01, "dim {dim}: relative error {err}");
    }
}

#[test]
fn zero_scheme_noise_covariance() {
    let ch: Channel = validate_scalar(1.0, 2.0, 0.3, 10.0, 1.0).unwrap().into();
    let s = LinearScheme::zero(3).unwrap();
    let analytic = evaluate(&s, ch).unwrap().joint_cov.into_matrix();
    let sim = simulate_paths(&s, &ch, 1_000_000, 3);
    assert!(rel_frobenius(&sim.empirical, &analytic) < 0.01);
    assert_eq!(sim.avg_power, 0.0);
}

#[test]
fn superposition_power_is_reproduced() {
    let ch: Channel = validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap().into();
    let s = LinearScheme::superposition(4, 0.3, 10.0).unwrap();
    let sim = simulate_paths(&s, &ch, 1_000_000, 5);
    assert!((sim.avg_power - 10.0).abs() < 0.1, "{}", sim.avg_power);
}

#[test]
fn vector_combined_noise_cross_covariance() {
    let vch = validate_vector(2.0, 1.0, 3.0, 9.0).unwrap();
    let ch: Channel = vch.into();
    let s = LinearScheme::zero(1).unwrap();
    let sim = simulate_paths(&s, &ch, 1_000_000, 8);
    let l = sim.layout;
    let cross = sim.empirical[(l.at(Block::Ye, 0), l.at(Block::Y12, 0))];
    assert!((cross - 0.75).abs() < 0.0075, "{cross}");
}
