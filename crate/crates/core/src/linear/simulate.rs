//! Monte-Carlo sample paths of a linear scheme, used as an independent
//! oracle for the analytic covariance.
//!
//! Samples are drawn in fixed-size chunks; chunk `k` uses the ChaCha stream
//! `k` of the seed, so results do not depend on how chunks are scheduled.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::Channel;
use crate::region::mrc_params;

use super::model::{Block, Layout, THETA1, THETA2};
use super::LinearScheme;

const CHUNK: usize = 8192;

#[derive(Debug, Clone)]
pub struct Simulation {
    pub layout: Layout,
    /// Empirical second-moment matrix `(1/N) Σ v vᵀ` over the layout (every
    /// variable has zero mean).
    pub empirical: DMatrix<f64>,
    pub avg_power: f64,
    pub num_samples: usize,
}

/// Draws `num_samples` independent paths and accumulates their second moments.
pub fn simulate_paths(s: &LinearScheme, ch: &Channel, num_samples: usize, seed: u64) -> Simulation {
    let n = s.horizon();
    let layout = Layout::for_channel(ch, n);
    let dim = layout.dim();
    let chunks = num_samples.div_ceil(CHUNK);

    let partials: Vec<DMatrix<f64>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let count = CHUNK.min(num_samples - k * CHUNK);
            let mut acc = DMatrix::<f64>::zeros(dim, dim);
            let mut v = vec![0.0; dim];
            for _ in 0..count {
                sample_path(s, ch, &layout, &mut rng, &mut v);
                // Lower triangle only; mirrored at the end.
                for i in 0..dim {
                    let vi = v[i];
                    if vi == 0.0 {
                        continue;
                    }
                    for j in 0..=i {
                        acc[(i, j)] += vi * v[j];
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = DMatrix::<f64>::zeros(dim, dim);
    for p in &partials {
        total += p;
    }
    let scale = 1.0 / num_samples.max(1) as f64;
    for i in 0..dim {
        for j in 0..i {
            total[(j, i)] = total[(i, j)];
        }
    }
    total *= scale;
    let avg_power = (0..n).map(|i| total[(layout.at(Block::X, i), layout.at(Block::X, i))]).sum::<f64>() / n as f64;
    Simulation { layout, empirical: total, avg_power, num_samples }
}

fn sample_path(s: &LinearScheme, ch: &Channel, layout: &Layout, rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let n = s.horizon();
    let mut g = || rng.sample::<f64, _>(StandardNormal);
    let (t1, t2) = (g(), g());
    out[THETA1] = t1;
    out[THETA2] = t2;
    let mut fb_obs = vec![0.0; n];
    match ch {
        Channel::Scalar(c) => {
            let (s1, s2) = (c.sigma1_sq().sqrt(), c.sigma2_sq().sqrt());
            let rho = c.rho();
            let sfb = c.sigma_fb_sq().sqrt();
            for i in 0..n {
                let x = transmit(s, i, t1, t2, &fb_obs);
                let (g1, g2, gf) = (g(), g(), g());
                let z1 = s1 * g1;
                let z2 = s2 * (rho * g1 + (1.0 - rho * rho).max(0.0).sqrt() * g2);
                let zfb = sfb * gf;
                let y1 = x + z1;
                fb_obs[i] = y1 + zfb;
                out[layout.at(Block::X, i)] = x;
                out[layout.at(Block::Y1, i)] = y1;
                out[layout.at(Block::Y2, i)] = x + z2;
                out[layout.at(Block::Zfb, i)] = zfb;
            }
        }
        Channel::Vector(v) => {
            let (sa, sb, s2) = (v.sigma_a_sq().sqrt(), v.sigma_b_sq().sqrt(), v.sigma2_sq().sqrt());
            let se = mrc_params(v).sigma_e_sq;
            for i in 0..n {
                let x = transmit(s, i, t1, t2, &fb_obs);
                let (y11, y12, y2) = (x + sa * g(), x + sb * g(), x + s2 * g());
                fb_obs[i] = y12;
                out[layout.at(Block::X, i)] = x;
                out[layout.at(Block::Y11, i)] = y11;
                out[layout.at(Block::Y12, i)] = y12;
                out[layout.at(Block::Y2, i)] = y2;
                out[layout.at(Block::Ye, i)] = se * (y11 / v.sigma_a_sq() + y12 / v.sigma_b_sq());
            }
        }
    }
}

fn transmit(s: &LinearScheme, i: usize, t1: f64, t2: f64, fb_obs: &[f64]) -> f64 {
    let taps: f64 = s.fb_row(i).iter().zip(fb_obs).map(|(c, f)| c * f).sum();
    s.msg1_coeffs()[i] * t1 + s.msg2_coeffs()[i] * t2 + taps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::validate_scalar;

    #[test]
    fn single_sample_has_rank_one() {
        let ch: Channel = validate_scalar(1.0, 2.0, 0.3, 10.0, 1.0).unwrap().into();
        let s = LinearScheme::superposition(2, 0.5, 10.0).unwrap();
        let sim = simulate_paths(&s, &ch, 1, 5);
        let sv = sim.empirical.clone().svd(false, false).singular_values;
        let big = sv.iter().filter(|&&x| x > 1e-9 * sv.max()).count();
        assert_eq!(big, 1);
    }

    #[test]
    fn deterministic_given_seed() {
        let ch: Channel = validate_scalar(1.0, 2.0, 0.3, 10.0, 1.0).unwrap().into();
        let s = LinearScheme::new(vec![1.0, 0.5], vec![0.2, 1.0], vec![vec![], vec![0.3]]).unwrap();
        let a = simulate_paths(&s, &ch, 20_000, 17);
        let b = simulate_paths(&s, &ch, 20_000, 17);
        assert_eq!(a.empirical, b.empirical);
        let c = simulate_paths(&s, &ch, 20_000, 18);
        assert_ne!(a.empirical, c.empirical);
    }
}
