//! Channel parameter sets and the common/private split of correlated
//! forward noises.
//!
//! A [`ScalarChannel`] is the two-user scalar broadcast channel with a noisy
//! feedback link from receiver 1. A [`VectorChannel`] gives receiver 1 two
//! antennas, the second of which is fed back without noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used on correlation-class comparisons.
pub const CLASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarChannel {
    sigma1_sq: f64,
    sigma2_sq: f64,
    rho: f64,
    power: f64,
    sigma_fb_sq: f64,
}

/// Variances of `Z`, `Z~1`, `Z~2` in `Z1 = Z + Z~1`, `Z2 = Z + Z~2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDecomposition {
    pub var_common: f64,
    pub var_private1: f64,
    pub var_private2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorChannel {
    sigma2_sq: f64,
    sigma_a_sq: f64,
    sigma_b_sq: f64,
    power: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "membership", content = "reason")]
pub enum ClassMembership {
    InClass,
    OutsideClass(String),
}

impl ClassMembership {
    pub fn is_in_class(&self) -> bool {
        matches!(self, ClassMembership::InClass)
    }
}

fn check_variance(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveVariance { name, value })
    }
}

fn check_power(power: f64) -> Result<()> {
    if power.is_finite() && power >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativePower(power))
    }
}

/// Validates the five raw scalars of a scalar broadcast channel.
pub fn validate_scalar(
    sigma1_sq: f64,
    sigma2_sq: f64,
    rho: f64,
    power: f64,
    sigma_fb_sq: f64,
) -> Result<ScalarChannel> {
    check_variance("sigma1_sq", sigma1_sq)?;
    check_variance("sigma2_sq", sigma2_sq)?;
    if sigma1_sq > sigma2_sq {
        return Err(Error::StrongerUserViolation { sigma1_sq, sigma2_sq });
    }
    if !rho.is_finite() || rho.abs() > 1.0 {
        return Err(Error::CorrelationOutOfRange(rho));
    }
    check_power(power)?;
    if !sigma_fb_sq.is_finite() || sigma_fb_sq < 0.0 {
        return Err(Error::NegativeFeedbackVariance(sigma_fb_sq));
    }
    Ok(ScalarChannel {
        sigma1_sq,
        sigma2_sq,
        rho,
        power,
        sigma_fb_sq,
    })
}

/// Validates the four raw scalars of the two-antenna vector channel.
pub fn validate_vector(
    sigma2_sq: f64,
    sigma_a_sq: f64,
    sigma_b_sq: f64,
    power: f64,
) -> Result<VectorChannel> {
    check_variance("sigma2_sq", sigma2_sq)?;
    check_variance("sigma_a_sq", sigma_a_sq)?;
    check_variance("sigma_b_sq", sigma_b_sq)?;
    check_power(power)?;
    Ok(VectorChannel {
        sigma2_sq,
        sigma_a_sq,
        sigma_b_sq,
        power,
    })
}

impl ScalarChannel {
    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }
    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn power(&self) -> f64 {
        self.power
    }
    pub fn sigma_fb_sq(&self) -> f64 {
        self.sigma_fb_sq
    }

    /// Cross-covariance `E[Z1 Z2] = rho * sigma1 * sigma2`.
    pub fn noise_cross_cov(&self) -> f64 {
        self.rho * (self.sigma1_sq * self.sigma2_sq).sqrt()
    }

    /// The same channel with every variance and the power multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<ScalarChannel> {
        validate_scalar(
            self.sigma1_sq * factor,
            self.sigma2_sq * factor,
            self.rho,
            self.power * factor,
            self.sigma_fb_sq * factor,
        )
    }

    pub fn with_feedback_variance(&self, sigma_fb_sq: f64) -> Result<ScalarChannel> {
        validate_scalar(self.sigma1_sq, self.sigma2_sq, self.rho, self.power, sigma_fb_sq)
    }

    fn degraded_rho(&self) -> f64 {
        (self.sigma1_sq / self.sigma2_sq).sqrt()
    }
}

impl VectorChannel {
    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }
    pub fn sigma_a_sq(&self) -> f64 {
        self.sigma_a_sq
    }
    pub fn sigma_b_sq(&self) -> f64 {
        self.sigma_b_sq
    }
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Whether receiver 2 is noisier than the antenna of receiver 1 that is
    /// not fed back (`sigma_a_sq <= sigma2_sq`), the condition under which the
    /// perfect feedback of antenna 2 is provably useless.
    pub fn hypothesis_holds(&self) -> bool {
        self.sigma_a_sq <= self.sigma2_sq
    }

    pub fn scaled(&self, factor: f64) -> Result<VectorChannel> {
        validate_vector(
            self.sigma2_sq * factor,
            self.sigma_a_sq * factor,
            self.sigma_b_sq * factor,
            self.power * factor,
        )
    }
}

/// `InClass` iff `0 <= rho <= sqrt(sigma1_sq / sigma2_sq)` (tolerance
/// [`CLASS_TOL`], boundary inclusive).
pub fn classify(ch: &ScalarChannel) -> ClassMembership {
    let limit = ch.degraded_rho();
    if ch.rho < -CLASS_TOL {
        ClassMembership::OutsideClass(format!("negative correlation rho = {}", ch.rho))
    } else if ch.rho > limit + CLASS_TOL {
        ClassMembership::OutsideClass(format!(
            "rho = {} exceeds sqrt(sigma1_sq/sigma2_sq) = {}",
            ch.rho, limit
        ))
    } else {
        ClassMembership::InClass
    }
}

pub fn is_physically_degraded(ch: &ScalarChannel) -> bool {
    (ch.rho - ch.degraded_rho()).abs() <= CLASS_TOL
}

/// Splits the forward noises into a common part and two independent private
/// parts. Components within rounding of zero are clamped to exactly zero.
pub fn decompose_noise(ch: &ScalarChannel) -> Result<NoiseDecomposition> {
    if let ClassMembership::OutsideClass(reason) = classify(ch) {
        return Err(Error::OutsideClass(reason));
    }
    if is_physically_degraded(ch) {
        // Z2 = Z1 + independent noise: the whole of Z1 is common.
        return Ok(NoiseDecomposition {
            var_common: ch.sigma1_sq,
            var_private1: 0.0,
            var_private2: ch.sigma2_sq - ch.sigma1_sq,
        });
    }
    let common = ch.noise_cross_cov().max(0.0);
    let clamp = |v: f64| if v < 0.0 { 0.0 } else { v };
    Ok(NoiseDecomposition {
        var_common: common,
        var_private1: clamp(ch.sigma1_sq - common),
        var_private2: clamp(ch.sigma2_sq - common),
    })
}

impl NoiseDecomposition {
    /// Recovers `(sigma1_sq, sigma2_sq, rho)`.
    pub fn reconstruct(&self) -> (f64, f64, f64) {
        let s1 = self.var_common + self.var_private1;
        let s2 = self.var_common + self.var_private2;
        (s1, s2, self.var_common / (s1 * s2).sqrt())
    }
}

/// Channel description as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSpec {
    Scalar {
        sigma1_sq: f64,
        sigma2_sq: f64,
        rho: f64,
        power: f64,
        sigma_fb_sq: f64,
    },
    Vector {
        sigma2_sq: f64,
        sigma_a_sq: f64,
        sigma_b_sq: f64,
        power: f64,
    },
}

/// A validated channel of either kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    Scalar(ScalarChannel),
    Vector(VectorChannel),
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<Channel> {
        match *self {
            ChannelSpec::Scalar {
                sigma1_sq,
                sigma2_sq,
                rho,
                power,
                sigma_fb_sq,
            } => validate_scalar(sigma1_sq, sigma2_sq, rho, power, sigma_fb_sq).map(Channel::Scalar),
            ChannelSpec::Vector {
                sigma2_sq,
                sigma_a_sq,
                sigma_b_sq,
                power,
            } => validate_vector(sigma2_sq, sigma_a_sq, sigma_b_sq, power).map(Channel::Vector),
        }
    }
}

impl From<Channel> for ChannelSpec {
    fn from(ch: Channel) -> Self {
        match ch {
            Channel::Scalar(c) => ChannelSpec::Scalar {
                sigma1_sq: c.sigma1_sq,
                sigma2_sq: c.sigma2_sq,
                rho: c.rho,
                power: c.power,
                sigma_fb_sq: c.sigma_fb_sq,
            },
            Channel::Vector(c) => ChannelSpec::Vector {
                sigma2_sq: c.sigma2_sq,
                sigma_a_sq: c.sigma_a_sq,
                sigma_b_sq: c.sigma_b_sq,
                power: c.power,
            },
        }
    }
}

impl Channel {
    pub fn power(&self) -> f64 {
        match self {
            Channel::Scalar(c) => c.power,
            Channel::Vector(c) => c.power,
        }
    }
}

impl From<ScalarChannel> for Channel {
    fn from(c: ScalarChannel) -> Self {
        Channel::Scalar(c)
    }
}

impl From<VectorChannel> for Channel {
    fn from(c: VectorChannel) -> Self {
        Channel::Vector(c)
    }
}
