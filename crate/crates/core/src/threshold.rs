//! Feedback-noise threshold above which noisy feedback from the stronger
//! receiver cannot enlarge the capacity region, and its phase map for
//! independent forward noises.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{classify, decompose_noise, is_physically_degraded, validate_scalar, ClassMembership, ScalarChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// The threshold condition holds: feedback cannot enlarge the region.
    CoveredUseless,
    /// In class but below the threshold (or a degenerate threshold): the
    /// result is silent. This never means feedback helps.
    NotCovered,
    OutsideClass,
}

/// Combining coefficient `alpha` such that `Z~1 − alpha Z_fb` is independent
/// of `Z~1 + Z_fb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    Value(f64),
    /// `sigma_fb_sq = 0` with a non-zero private noise at receiver 1.
    PerfectFeedback,
    Undefined,
}

impl Alpha {
    /// The value used when forming `Y1 − alpha Z_fb`; markers map to 0.
    pub fn coefficient(&self) -> f64 {
        match *self {
            Alpha::Value(a) => a,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub applies: ClassMembership,
    /// `+inf` when the threshold formula degenerates (`sigma1_sq = sigma2_sq`,
    /// not identical channels); `NaN` outside the class.
    pub threshold_sigma_fb_sq: f64,
    pub alpha: Alpha,
    /// `Var(Z~1 − alpha Z_fb)`; `NaN` when undefined.
    pub residual_var: f64,
    /// `Var(Z~2)`; `NaN` outside the class.
    pub var_private2: f64,
    pub verdict: Verdict,
}

/// Evaluates the threshold, the combining coefficient and the verdict.
pub fn threshold(ch: &ScalarChannel) -> ThresholdReport {
    let applies = classify(ch);
    let Ok(dec) = decompose_noise(ch) else {
        return ThresholdReport {
            applies,
            threshold_sigma_fb_sq: f64::NAN,
            alpha: Alpha::Undefined,
            residual_var: f64::NAN,
            var_private2: f64::NAN,
            verdict: Verdict::OutsideClass,
        };
    };
    let (s1, s2, fb) = (ch.sigma1_sq(), ch.sigma2_sq(), ch.sigma_fb_sq());

    let thr = if is_physically_degraded(ch) {
        0.0
    } else if s1 == s2 {
        f64::INFINITY
    } else {
        let r = s2 / s1;
        s1 * (1.0 - ch.rho() * r.sqrt()).powi(2) / (r - 1.0)
    };

    let (alpha, residual_var) = if dec.var_private1 == 0.0 {
        // Nothing to cancel; the residual is identically zero.
        (Alpha::Value(0.0), 0.0)
    } else if fb == 0.0 {
        (Alpha::PerfectFeedback, dec.var_private1)
    } else {
        let a = dec.var_private1 / fb;
        (Alpha::Value(a), dec.var_private1 + a * a * fb)
    };

    let verdict = if fb >= thr { Verdict::CoveredUseless } else { Verdict::NotCovered };
    ThresholdReport {
        applies,
        threshold_sigma_fb_sq: thr,
        alpha,
        residual_var,
        var_private2: dec.var_private2,
        verdict,
    }
}

pub fn feedback_useless(ch: &ScalarChannel) -> Verdict {
    threshold(ch).verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMapRow {
    /// `sigma1_sq / sigma_fb_sq`.
    pub x: f64,
    /// `sigma2_sq / sigma_fb_sq`.
    pub y: f64,
    pub useless: bool,
}

/// Independent-noise phase map with `sigma_fb_sq = 1`, rows in x-major
/// order. The `x = 0` column is not a channel and is skipped, as are grid
/// points with `y < x`.
pub fn phase_map(x_max: f64, y_max: f64, step: f64) -> Result<Vec<PhaseMapRow>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::BadGridSpec(format!("step must be positive, got {step}")));
    }
    if !(x_max.is_finite() && y_max.is_finite()) || step > x_max || step > y_max {
        return Err(Error::BadGridSpec(format!(
            "need 0 < step <= x_max, y_max; got step {step}, x_max {x_max}, y_max {y_max}"
        )));
    }
    let count = |max: f64| (max / step + 1e-9).floor() as usize;
    let (nx, ny) = (count(x_max), count(y_max));
    let rows: Vec<Vec<PhaseMapRow>> = (1..=nx)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * step;
            (0..=ny)
                .filter_map(|j| {
                    let y = j as f64 * step;
                    if y < x {
                        return None;
                    }
                    let ch = validate_scalar(x, y, 0.0, 1.0, 1.0).ok()?;
                    Some(PhaseMapRow { x, y, useless: feedback_useless(&ch) == Verdict::CoveredUseless })
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}
