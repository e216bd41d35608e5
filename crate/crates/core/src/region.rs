//! No-feedback capacity regions of the scalar and two-antenna broadcast
//! channels, achieved by superposition coding with power split `theta`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ScalarChannel, VectorChannel};
use crate::error::{Error, Result};

/// Rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1_bits: f64,
    pub r2_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub theta: f64,
    pub rates: RatePair,
}

/// Second-order statistics of the maximal-ratio-combined output of the
/// two-antenna receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrcDecomposition {
    pub sigma_e_sq: f64,
    /// `E[Z_e Z_12]`.
    pub cross_cov: f64,
}

/// The region's defining parameters: the effective noise at receiver 1 and
/// receiver 2's noise, plus the power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Superposition {
    pub noise1: f64,
    pub noise2: f64,
    pub power: f64,
}

impl Superposition {
    pub(crate) fn of(ch: &Channel) -> Self {
        match ch {
            Channel::Scalar(c) => Superposition {
                noise1: c.sigma1_sq(),
                noise2: c.sigma2_sq(),
                power: c.power(),
            },
            Channel::Vector(v) => Superposition {
                noise1: mrc_params(v).sigma_e_sq,
                noise2: v.sigma2_sq(),
                power: v.power(),
            },
        }
    }

    pub(crate) fn r1(&self, theta: f64) -> f64 {
        bits_ln_1p(theta * self.power / self.noise1)
    }

    pub(crate) fn r2(&self, theta: f64) -> f64 {
        bits_ln_1p((1.0 - theta) * self.power / (theta * self.power + self.noise2))
    }

    pub(crate) fn point(&self, theta: f64) -> RegionPoint {
        RegionPoint {
            theta,
            rates: RatePair { r1_bits: self.r1(theta), r2_bits: self.r2(theta) },
        }
    }

    /// theta with `r1(theta) = r1_bits`, or `None` above the `theta = 1` endpoint.
    pub(crate) fn theta_for_r1(&self, r1_bits: f64) -> Option<f64> {
        if r1_bits <= 0.0 {
            return Some(0.0);
        }
        if self.power == 0.0 {
            return None;
        }
        let theta = (2.0 * r1_bits * LN_2).exp_m1() * self.noise1 / self.power;
        (theta <= 1.0 + 1e-15).then_some(theta.min(1.0))
    }

    /// Maximum of `mu r1 + (1 − mu) r2` over the boundary.
    pub(crate) fn support(&self, mu: f64, grid: usize) -> f64 {
        let f = |t: f64| mu * self.r1(t) + (1.0 - mu) * self.r2(t);
        let grid = grid.max(2);
        let (mut best_k, mut best) = (0usize, f(0.0));
        for k in 1..grid {
            let v = f(k as f64 / (grid - 1) as f64);
            if v > best {
                best = v;
                best_k = k;
            }
        }
        // Golden-section refinement on the bracketing cell pair.
        let h = 1.0 / (grid - 1) as f64;
        let (mut lo, mut hi) = (((best_k as f64) - 1.0) * h, ((best_k as f64) + 1.0) * h);
        lo = lo.max(0.0);
        hi = hi.min(1.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if f(a) >= f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        best.max(f(0.5 * (lo + hi)))
    }

    /// theta maximizing the weighted sum rate, from the stationarity condition.
    pub(crate) fn best_theta(&self, mu: f64) -> f64 {
        if self.power == 0.0 {
            return 0.0;
        }
        let candidates = {
            let denom = self.power * (2.0 * mu - 1.0);
            let stationary = if denom.abs() > 0.0 {
                ((1.0 - mu) * self.noise1 - mu * self.noise2) / denom
            } else {
                f64::NAN
            };
            [0.0, 1.0, stationary]
        };
        let f = |t: f64| mu * self.r1(t) + (1.0 - mu) * self.r2(t);
        candidates
            .into_iter()
            .filter(|t| t.is_finite() && (0.0..=1.0).contains(t))
            .fold((0.0, f64::NEG_INFINITY), |(bt, bv), t| {
                let v = f(t);
                if v > bv { (t, v) } else { (bt, bv) }
            })
            .0
    }
}

fn bits_ln_1p(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / LN_2
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

/// Superposition boundary point of the scalar channel.
pub fn scalar_rate_pair(ch: &ScalarChannel, theta: f64) -> Result<RegionPoint> {
    check_theta(theta)?;
    Ok(Superposition::of(&Channel::Scalar(*ch)).point(theta))
}

pub fn mrc_params(vch: &VectorChannel) -> MrcDecomposition {
    let (a, b) = (vch.sigma_a_sq(), vch.sigma_b_sq());
    let sigma_e_sq = 1.0 / (1.0 / a + 1.0 / b);
    // Z_e = σe²(Z11/σa² + Z12/σb²), so E[Z_e Z12] = σe².
    MrcDecomposition { sigma_e_sq, cross_cov: a * b / (a + b) }
}

/// Superposition boundary point of the two-antenna channel, with receiver 1
/// combining its antennas.
pub fn vector_rate_pair(vch: &VectorChannel, theta: f64) -> Result<RegionPoint> {
    check_theta(theta)?;
    Ok(Superposition::of(&Channel::Vector(*vch)).point(theta))
}

/// `num_points` equally spaced boundary points, `theta` from 0 to 1.
pub fn boundary(ch: &Channel, num_points: usize) -> Result<Vec<RegionPoint>> {
    if num_points < 2 {
        return Err(Error::BadGridSpec(format!("need at least 2 boundary points, got {num_points}")));
    }
    let sp = Superposition::of(ch);
    Ok((0..num_points)
        .map(|k| {
            let theta = if k + 1 == num_points { 1.0 } else { k as f64 / (num_points - 1) as f64 };
            sp.point(theta)
        })
        .collect())
}

/// Whether `rp` lies in the no-feedback region up to `tol` bits per coordinate.
pub fn contains(ch: &Channel, rp: &RatePair, tol: f64) -> bool {
    region_excess(ch, rp, tol) <= 0.0
}

/// Coordinate-wise excess over the boundary in bits (≤ 0 inside). `r1` is
/// shrunk by `tol` before inverting, so a point is inside iff it is
/// dominated by a boundary point within `tol` in each coordinate.
pub(crate) fn region_excess(ch: &Channel, rp: &RatePair, tol: f64) -> f64 {
    let sp = Superposition::of(ch);
    let r1 = (rp.r1_bits - tol).max(0.0);
    match sp.theta_for_r1(r1) {
        Some(theta) => rp.r2_bits - tol - sp.r2(theta),
        None => r1 - sp.r1(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{validate_scalar, validate_vector};

    fn ch_a() -> ScalarChannel {
        validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let p = scalar_rate_pair(&ch_a(), 0.5).unwrap();
        assert!((p.rates.r1_bits - 1.292481).abs() < 1e-6);
        assert!((p.rates.r2_bits - 0.388810).abs() < 1e-5);
        assert!((p.rates.r1_bits - 0.5 * 6f64.log2()).abs() < 1e-14);
        assert!((p.rates.r2_bits - 0.5 * (12.0f64 / 7.0).log2()).abs() < 1e-14);
        let one = scalar_rate_pair(&ch_a(), 1.0).unwrap();
        assert!((one.rates.r1_bits - 0.5 * 11f64.log2()).abs() < 1e-14);
        assert_eq!(one.rates.r2_bits, 0.0);
        let zero = scalar_rate_pair(&ch_a(), 0.0).unwrap();
        assert_eq!(zero.rates.r1_bits, 0.0);
        assert!((zero.rates.r2_bits - 0.5 * 6f64.log2()).abs() < 1e-14);
        assert!(matches!(scalar_rate_pair(&ch_a(), 1.5), Err(Error::ThetaOutOfRange(_))));
    }

    #[test]
    fn mrc_examples() {
        let m = mrc_params(&validate_vector(2.0, 1.0, 3.0, 9.0).unwrap());
        assert!((m.sigma_e_sq - 0.75).abs() < 1e-15);
        assert!((m.cross_cov - 0.75).abs() < 1e-15);
        let s = mrc_params(&validate_vector(2.0, 5.0, 5.0, 9.0).unwrap());
        assert!((s.sigma_e_sq - 2.5).abs() < 1e-15 && (s.cross_cov - 2.5).abs() < 1e-15);
        let far = mrc_params(&validate_vector(2.0, 1.0, 1e12, 9.0).unwrap());
        assert!((far.sigma_e_sq - 1.0).abs() < 1e-11 && (far.cross_cov - 1.0).abs() < 1e-11);
    }

    #[test]
    fn vector_examples() {
        let v = validate_vector(2.0, 1.0, 3.0, 9.0).unwrap();
        let one = vector_rate_pair(&v, 1.0).unwrap();
        assert!((one.rates.r1_bits - 1.850220).abs() < 1e-6);
        assert_eq!(one.rates.r2_bits, 0.0);
        let zero = vector_rate_pair(&v, 0.0).unwrap();
        assert!((zero.rates.r2_bits - 1.229716).abs() < 1e-6);
        let silent = validate_vector(2.0, 1.0, 3.0, 0.0).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let p = vector_rate_pair(&silent, t).unwrap();
            assert_eq!((p.rates.r1_bits, p.rates.r2_bits), (0.0, 0.0));
        }
    }

    #[test]
    fn vector_converges_to_scalar_with_useless_antenna() {
        let v = validate_vector(2.0, 1.0, 1e12, 9.0).unwrap();
        let s = validate_scalar(1.0, 2.0, 0.0, 9.0, 1.0).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            let a = vector_rate_pair(&v, t).unwrap().rates;
            let b = scalar_rate_pair(&s, t).unwrap().rates;
            assert!((a.r1_bits - b.r1_bits).abs() <= 1e-6 * b.r1_bits.max(1e-300));
            assert!((a.r2_bits - b.r2_bits).abs() <= 1e-6 * b.r2_bits.max(1e-300));
        }
    }

    #[test]
    fn boundary_shape() {
        let ch = Channel::Scalar(ch_a());
        let two = boundary(&ch, 2).unwrap();
        assert_eq!(two[0], scalar_rate_pair(&ch_a(), 0.0).unwrap());
        assert_eq!(two[1], scalar_rate_pair(&ch_a(), 1.0).unwrap());
        let three = boundary(&ch, 3).unwrap();
        assert_eq!(three[1], scalar_rate_pair(&ch_a(), 0.5).unwrap());
        let many = boundary(&ch, 101).unwrap();
        for w in many.windows(2) {
            assert!(w[1].rates.r1_bits > w[0].rates.r1_bits);
            assert!(w[1].rates.r2_bits < w[0].rates.r2_bits);
        }
        assert!(boundary(&ch, 1).is_err());
    }

    #[test]
    fn membership() {
        let ch = Channel::Scalar(ch_a());
        for p in boundary(&ch, 101).unwrap() {
            assert!(contains(&ch, &p.rates, 1e-9), "theta {}", p.theta);
        }
        assert!(!contains(&ch, &RatePair { r1_bits: 1.392481, r2_bits: 0.388810 }, 1e-9));
        assert!(contains(&ch, &RatePair { r1_bits: 0.0, r2_bits: 0.0 }, 0.0));
        assert!(!contains(&ch, &RatePair { r1_bits: 2.0, r2_bits: 0.0 }, 1e-9));
        let v = Channel::Vector(validate_vector(2.0, 1.0, 3.0, 9.0).unwrap());
        assert!(contains(&v, &vector_rate_pair(&validate_vector(2.0, 1.0, 3.0, 9.0).unwrap(), 0.7).unwrap().rates, 1e-9));
    }

    #[test]
    fn support_matches_best_theta() {
        let sp = Superposition::of(&Channel::Scalar(ch_a()));
        for mu in [0.0, 0.2, 0.5, 0.7, 1.0] {
            let t = sp.best_theta(mu);
            let v = mu * sp.r1(t) + (1.0 - mu) * sp.r2(t);
            assert!((sp.support(mu, 1001) - v).abs() < 1e-12, "mu {mu}");
        }
    }
}
