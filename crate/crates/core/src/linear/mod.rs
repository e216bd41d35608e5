//! Linear-Gaussian feedback schemes over a finite horizon.
//!
//! The transmitted symbol at use `i` is
//! `X_i = a_i Θ1 + b_i Θ2 + Σ_{j<i} C[i][j] F_j`, where `Θ1, Θ2` are
//! independent standard Gaussian stand-ins for the two messages and `F_j` is
//! the feedback observation: `Y1_j + Zfb_j` on the scalar channel, `Y12_j`
//! on the two-antenna channel.

pub mod converse;
pub mod model;
pub mod simulate;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ScalarChannel, VectorChannel};
use crate::error::{Error, Result};
use crate::gaussian::{CovMatrix, GaussianEngine};
use crate::region::RatePair;

pub use converse::{verify_lemma1, verify_scalar_converse, verify_vector_converse, ConverseReport, ConverseStep};
pub use model::{Block, GaussModel, Layout};
pub use simulate::{simulate_paths, Simulation};

pub const MAX_HORIZON: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeJson", into = "SchemeJson")]
pub struct LinearScheme {
    a: Vec<f64>,
    b: Vec<f64>,
    /// Row `i` holds `C[i][0..i]`.
    c: Vec<Vec<f64>>,
}

/// Wire form: `{"n", "a", "b", "c"}` with `c` either ragged rows of the
/// strictly-lower triangle (row `i` has `i` entries) or full `n×n` rows whose
/// diagonal and upper part are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeJson {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    c: Vec<Vec<f64>>,
}

impl TryFrom<SchemeJson> for LinearScheme {
    type Error = Error;

    fn try_from(j: SchemeJson) -> Result<Self> {
        if j.a.len() != j.n || j.b.len() != j.n {
            return Err(Error::MalformedScheme(format!(
                "n = {} but a has {} and b has {} entries",
                j.n,
                j.a.len(),
                j.b.len()
            )));
        }
        let c = if j.c.is_empty() {
            (0..j.n).map(|i| vec![0.0; i]).collect()
        } else if j.c.len() != j.n {
            return Err(Error::MalformedScheme(format!("c has {} rows, expected {}", j.c.len(), j.n)));
        } else if j.c.iter().enumerate().all(|(i, r)| r.len() == i) {
            j.c
        } else if j.c.iter().all(|r| r.len() == j.n) {
            let mut rows = Vec::with_capacity(j.n);
            for (i, r) in j.c.into_iter().enumerate() {
                if r[i..].iter().any(|&v| v != 0.0) {
                    return Err(Error::MalformedScheme(format!(
                        "feedback row {i} is not strictly causal"
                    )));
                }
                rows.push(r[..i].to_vec());
            }
            rows
        } else {
            return Err(Error::MalformedScheme("c rows have inconsistent lengths".into()));
        };
        LinearScheme::new(j.a, j.b, c)
    }
}

impl From<LinearScheme> for SchemeJson {
    fn from(s: LinearScheme) -> Self {
        SchemeJson { n: s.horizon(), a: s.a, b: s.b, c: s.c }
    }
}

impl LinearScheme {
    /// `c[i]` must hold exactly the `i` strictly-causal taps of use `i`.
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::MalformedScheme("horizon must be positive".into()));
        }
        if n > MAX_HORIZON {
            return Err(Error::HorizonTooLarge(n));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::MalformedScheme("a, b and c must share the horizon".into()));
        }
        if let Some(i) = c.iter().enumerate().position(|(i, r)| r.len() != i) {
            return Err(Error::MalformedScheme(format!("feedback row {i} must have {i} taps")));
        }
        let finite = a.iter().chain(&b).chain(c.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::MalformedScheme("non-finite coefficient".into()));
        }
        Ok(LinearScheme { a, b, c })
    }

    /// Scheme with no feedback.
    pub fn open_loop(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let c = (0..a.len()).map(|i| vec![0.0; i]).collect();
        Self::new(a, b, c)
    }

    /// Superposition coding with power split `theta` repeated over `n` uses.
    pub fn superposition(n: usize, theta: f64, power: f64) -> Result<Self> {
        let (sa, sb) = ((theta * power).sqrt(), ((1.0 - theta) * power).sqrt());
        Self::open_loop(vec![sa; n], vec![sb; n])
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::open_loop(vec![0.0; n], vec![0.0; n])
    }

    pub fn horizon(&self) -> usize {
        self.a.len()
    }

    pub fn msg1_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn msg2_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// `C[i][0..i]`.
    pub fn fb_row(&self, i: usize) -> &[f64] {
        &self.c[i]
    }

    /// `C[i][j]`, zero for `j >= i`.
    pub fn fb(&self, i: usize, j: usize) -> f64 {
        if j < i { self.c[i][j] } else { 0.0 }
    }

    pub fn has_feedback(&self) -> bool {
        self.c.iter().flatten().any(|&v| v != 0.0)
    }

    /// Scales the message gains `a`, `b` by `factor`; taps are unchanged.
    pub fn scale_messages(&self, factor: f64) -> LinearScheme {
        LinearScheme {
            a: self.a.iter().map(|v| v * factor).collect(),
            b: self.b.iter().map(|v| v * factor).collect(),
            c: self.c.clone(),
        }
    }

    /// Every coefficient, in the order `a`, `b`, then the taps row by row.
    pub fn params(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).chain(self.c.iter().flatten()).copied().collect()
    }

    pub fn from_params(n: usize, p: &[f64]) -> Result<Self> {
        let taps = n * (n.saturating_sub(1)) / 2;
        if p.len() != 2 * n + taps {
            return Err(Error::MalformedScheme(format!("expected {} parameters, got {}", 2 * n + taps, p.len())));
        }
        let mut rest = &p[2 * n..];
        let c = (0..n)
            .map(|i| {
                let (row, tail) = rest.split_at(i);
                rest = tail;
                row.to_vec()
            })
            .collect();
        Self::new(p[..n].to_vec(), p[n..2 * n].to_vec(), c)
    }
}

#[derive(Debug, Clone)]
pub struct SchemeEvaluation {
    pub rates: RatePair,
    pub avg_power: f64,
    pub joint_cov: CovMatrix,
    pub layout: Layout,
    /// Engine jitter or a pseudo-inverse was used in a rate computation.
    pub jittered: bool,
}

/// Joint covariance over `(Θ1, Θ2, X^n, Y1^n, Y2^n, Zfb^n)`.
pub fn build_joint_cov(s: &LinearScheme, ch: &ScalarChannel) -> Result<CovMatrix> {
    Ok(GaussModel::scalar(s, ch, None).joint())
}

/// Joint covariance over `(Θ1, Θ2, X^n, Y11^n, Y12^n, Y2^n, Ye^n)`.
pub fn build_vector_joint_cov(s: &LinearScheme, vch: &VectorChannel) -> Result<CovMatrix> {
    Ok(GaussModel::vector(s, vch).joint())
}

/// Information-rate proxies `(1/n) I(Θ1; Y1^n | Θ2)` and `(1/n) I(Θ2; Y2^n)`
/// in bits (receiver 1 observes both antennas on the vector channel).
pub fn evaluate(s: &LinearScheme, ch: impl Into<Channel>) -> Result<SchemeEvaluation> {
    evaluate_with(&GaussianEngine::default(), s, &ch.into())
}

pub fn evaluate_with(engine: &GaussianEngine, s: &LinearScheme, ch: &Channel) -> Result<SchemeEvaluation> {
    use model::{indices, THETA1, THETA2};

    let model = GaussModel::for_channel(s, ch);
    let layout = model.layout;
    let n = layout.n();
    let joint = model.joint();
    let rx1: Vec<usize> = match layout {
        Layout::Scalar { .. } => layout.range(Block::Y1, 0..n),
        Layout::Vector { .. } => {
            let mut v = layout.range(Block::Y11, 0..n);
            v.extend(layout.range(Block::Y12, 0..n));
            v
        }
    };
    let i1 = engine.mutual_info(&joint, &indices(&[&[THETA1]]), &indices(&[&rx1]), &indices(&[&[THETA2]]))?;
    let y2 = layout.range(Block::Y2, 0..n);
    let i2 = engine.mutual_info(&joint, &indices(&[&[THETA2]]), &indices(&[&y2]), &crate::gaussian::IndexSet::empty())?;
    let avg_power = (0..n).map(|i| joint.get(layout.at(Block::X, i), layout.at(Block::X, i))).sum::<f64>() / n as f64;
    let to_bits = |nats: f64| nats / (n as f64 * LN_2);
    Ok(SchemeEvaluation {
        rates: RatePair { r1_bits: to_bits(i1.nats), r2_bits: to_bits(i2.nats) },
        avg_power,
        joint_cov: joint,
        layout,
        jittered: i1.jittered || i2.jittered,
    })
}

/// Average transmit power `(1/n) Σ E[X_i²]`.
pub fn average_power(s: &LinearScheme, ch: &Channel) -> f64 {
    let (msg, noise) = GaussModel::for_channel(s, ch).power_split();
    msg + noise
}

/// Rescales the message gains so the average power equals `target_p`.
///
/// Power is `k² P_msg + P_fb` in the message scale `k`, where `P_fb` is the
/// noise power re-injected by the feedback taps, so the factor is solved in
/// closed form. Fails when the taps alone already exceed the target.
pub fn normalize_power(s: &LinearScheme, ch: impl Into<Channel>, target_p: f64) -> Result<LinearScheme> {
    let ch = ch.into();
    let (msg, noise) = GaussModel::for_channel(s, &ch).power_split();
    if msg <= 0.0 {
        return Err(Error::ZeroScheme);
    }
    if noise > target_p {
        return Err(Error::InfeasiblePower { noise_power: noise, target: target_p });
    }
    Ok(s.scale_messages(((target_p - noise) / msg).sqrt()))
}
