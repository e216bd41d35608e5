//! Step-by-step numerical check of the converse chains.
//!
//! Each step is an inequality `lhs <= rhs` between exactly computed Gaussian
//! entropies or mutual informations, in nats over the whole block of `n`
//! uses. `slack = rhs − lhs`, so a step holds when `slack >= −tol`.

use serde::Serialize;

use crate::channel::{ScalarChannel, VectorChannel};
use crate::error::Result;
use crate::gaussian::{iid_entropy, ln_two_pi_e, EntropyNats, GaussianEngine, IndexSet};
use crate::region::mrc_params;
use crate::threshold::{threshold, Verdict};

use super::model::{indices, Block, GaussModel, Layout, THETA1, THETA2};
use super::LinearScheme;

pub const DEFAULT_TOL: f64 = 1e-9;
/// Pass tolerance for steps whose computation needed jitter or a
/// pseudo-inverse.
pub const JITTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseStep {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    /// The step's hypothesis holds for this channel, so it is expected to
    /// pass. Inapplicable steps are still evaluated and reported.
    pub applicable: bool,
    pub jittered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub steps: Vec<ConverseStep>,
    /// Power split implied by `h(Y2^n | Θ2)`.
    pub theta_implied: f64,
    /// Both final rate bounds hold at `theta_implied`, when computed.
    pub final_region_check: Option<bool>,
    pub hypothesis_met: bool,
    /// `h(Ye^n + Zd^n | Θ2)` on the vector channel, reported for comparison
    /// with the per-use form of the entropy-power step.
    pub block_epi_entropy: Option<f64>,
}

impl ConverseReport {
    /// Every applicable step passes.
    pub fn all_pass(&self) -> bool {
        self.steps.iter().filter(|s| s.applicable).all(|s| s.pass)
    }

    pub fn step(&self, name: &str) -> Option<&ConverseStep> {
        self.steps.iter().find(|s| s.name == name)
    }
}

struct Chain {
    tol: f64,
    steps: Vec<ConverseStep>,
}

impl Chain {
    fn new(tol: f64) -> Self {
        Chain { tol, steps: Vec::new() }
    }

    fn push(&mut self, name: &'static str, lhs: Term, rhs: Term, applicable: bool) -> bool {
        let jittered = lhs.jittered || rhs.jittered;
        let slack = rhs.value - lhs.value;
        let tol = if jittered { self.tol.max(JITTER_TOL) } else { self.tol };
        // An infinite lhs only passes against an infinite rhs of the same sign.
        let pass = if slack.is_nan() { lhs.value == rhs.value } else { slack >= -tol };
        self.steps.push(ConverseStep { name, lhs: lhs.value, rhs: rhs.value, slack, pass, applicable, jittered });
        pass
    }
}

/// A number with the jitter flag of its computation.
#[derive(Debug, Clone, Copy)]
struct Term {
    value: f64,
    jittered: bool,
}

impl Term {
    fn exact(value: f64) -> Self {
        Term { value, jittered: false }
    }

    fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        Term { value: f(self.value), jittered: self.jittered }
    }
}

impl From<EntropyNats> for Term {
    fn from(h: EntropyNats) -> Self {
        Term { value: h.value, jittered: h.jittered }
    }
}

impl std::ops::Add for Term {
    type Output = Term;
    fn add(self, o: Term) -> Term {
        Term { value: self.value + o.value, jittered: self.jittered || o.jittered }
    }
}

struct Ctx<'a> {
    engine: GaussianEngine,
    joint: crate::gaussian::CovMatrix,
    layout: &'a Layout,
}

impl Ctx<'_> {
    fn h(&self, target: &[usize], given: &[&[usize]]) -> Result<Term> {
        Ok(self.engine.cond_entropy(&self.joint, &indices(&[target]), &indices(given))?.into())
    }

    fn info(&self, a: &[usize], b: &[usize], given: &[usize]) -> Result<Term> {
        let given = if given.is_empty() { IndexSet::empty() } else { indices(&[given]) };
        let m = self.engine.mutual_info(&self.joint, &indices(&[a]), &indices(&[b]), &given)?;
        Ok(Term { value: m.nats, jittered: m.jittered })
    }

    /// `Σ_i h(target_i | Θ2, past_1^{i−1}, past_2^{i−1}, …)`.
    fn causal_sum(&self, target: Block, past: &[Block]) -> Result<Term> {
        let n = self.layout.n();
        let mut acc = Term::exact(0.0);
        for i in 0..n {
            let mut given = vec![THETA2];
            for &b in past {
                given.extend(self.layout.range(b, 0..i));
            }
            acc = acc + self.h(&[self.layout.at(target, i)], &[&given])?;
        }
        Ok(acc)
    }
}

/// `(n/2) ln(exp((2/n) h) + 2πe v)`: the entropy whose per-use entropy power
/// is that of `h` plus `2πe v`.
fn entropy_power_sum(h: Term, v: f64, n: usize) -> Term {
    let nf = n as f64;
    h.map(|h| {
        let per_use = 2.0 * h / nf - ln_two_pi_e();
        // ln(e^{per_use} + v), stable for either term dominating.
        let ln_sum = if v <= 0.0 {
            let s = per_use.exp() + v;
            if s > 0.0 { s.ln() } else { f64::NEG_INFINITY }
        } else {
            let lv = v.ln();
            let (hi, lo) = if per_use > lv { (per_use, lv) } else { (lv, per_use) };
            hi + (lo - hi).exp().ln_1p()
        };
        0.5 * nf * (ln_two_pi_e() + ln_sum)
    })
}

/// `theta P` such that `h = (n/2) ln 2πe(theta P + sigma2_sq)`.
fn implied_theta_power(h_y2: f64, sigma2_sq: f64, n: usize) -> f64 {
    (2.0 * h_y2 / n as f64 - ln_two_pi_e()).exp() - sigma2_sq
}

/// Appends the theta and final region steps shared by both channels.
#[allow(clippy::too_many_arguments)]
fn region_steps(
    chain: &mut Chain,
    h_y2: Term,
    r1_total: Term,
    r2_total: Term,
    noise1: f64,
    sigma2_sq: f64,
    power: f64,
    n: usize,
    hypothesis: bool,
) -> (f64, bool) {
    let nf = n as f64;
    let theta_p = implied_theta_power(h_y2.value, sigma2_sq, n);
    let theta = if power > 0.0 { theta_p / power } else { 0.0 };

    let lo = chain.push("theta_lower", Term::exact(iid_entropy(sigma2_sq, n)), h_y2, true);
    let hi = chain.push("theta_upper", h_y2, Term::exact(iid_entropy(power + sigma2_sq, n)), true);

    let r1_bound = h_y2.map(|_| {
        let arg = (noise1 + theta_p) / noise1;
        if arg > 0.0 { 0.5 * nf * arg.ln() } else { f64::NEG_INFINITY }
    });
    let r2_bound = h_y2.map(|_| 0.5 * nf * ((power + sigma2_sq) / (theta_p + sigma2_sq)).ln());
    let f1 = chain.push("final_r1", r1_total, r1_bound, hypothesis);
    let f2 = chain.push("final_r2", r2_total, r2_bound, true);
    (theta, lo && hi && f1 && f2)
}

/// `exp((2/n) h(Y2^n|Θ2)) >= exp((2/n) Σ h(Y1_i|Θ2, Y2^{i−1})) + 2πe(σ2² − σ1²)`.
pub fn verify_lemma1(s: &LinearScheme, ch: &ScalarChannel, tol: f64) -> Result<ConverseReport> {
    let model = GaussModel::scalar(s, ch, None);
    let layout = model.layout;
    let n = layout.n();
    let ctx = Ctx { engine: GaussianEngine::default(), joint: model.joint(), layout: &layout };
    let mut chain = Chain::new(tol);
    let sum_h1 = ctx.causal_sum(Block::Y1, &[Block::Y2])?;
    let h_y2 = ctx.h(&layout.range(Block::Y2, 0..n), &[&[THETA2]])?;
    chain.push(
        "lemma1_epi",
        entropy_power_sum(sum_h1, ch.sigma2_sq() - ch.sigma1_sq(), n),
        h_y2,
        true,
    );
    let theta_p = implied_theta_power(h_y2.value, ch.sigma2_sq(), n);
    Ok(ConverseReport {
        steps: chain.steps,
        theta_implied: if ch.power() > 0.0 { theta_p / ch.power() } else { 0.0 },
        final_region_check: None,
        hypothesis_met: true,
        block_epi_entropy: None,
    })
}

/// Full converse chain for the scalar channel with noisy feedback.
///
/// With `alpha = Var(Z~1)/σ_fb²` and `V_i = Y1_i − alpha Zfb_i`:
/// `a` gives receiver 1 the feedback noise, `b` conditions on `V` instead,
/// `crux` swaps `V` for `Y2` (valid above the threshold), then the
/// entropy-power lemma, the implied power split and the final rate bounds.
pub fn verify_scalar_converse(s: &LinearScheme, ch: &ScalarChannel, tol: f64) -> Result<ConverseReport> {
    let report = threshold(ch);
    let hypothesis = report.verdict == Verdict::CoveredUseless;
    let model = GaussModel::scalar(s, ch, Some(report.alpha.coefficient()));
    let layout = model.layout;
    let n = layout.n();
    let ctx = Ctx { engine: GaussianEngine::default(), joint: model.joint(), layout: &layout };
    let mut chain = Chain::new(tol);

    let y1 = layout.range(Block::Y1, 0..n);
    let y2 = layout.range(Block::Y2, 0..n);
    let zfb = layout.range(Block::Zfb, 0..n);
    let mut y1_zfb = y1.clone();
    y1_zfb.extend(&zfb);

    let r1_total = ctx.info(&[THETA1], &y1, &[THETA2])?;
    let r2_total = ctx.info(&[THETA2], &y2, &[])?;
    let with_fb_noise = ctx.info(&[THETA1], &y1_zfb, &[THETA2])?;
    chain.push("a", r1_total, with_fb_noise, true);

    let given_y1_zfb = ctx.causal_sum(Block::Y1, &[Block::Y1, Block::Zfb])?;
    let given_v = ctx.causal_sum(Block::Y1, &[Block::V])?;
    chain.push("b", given_y1_zfb, given_v, true);

    let given_y2 = ctx.causal_sum(Block::Y1, &[Block::Y2])?;
    chain.push("crux", given_v, given_y2, hypothesis);

    let h_y2 = ctx.h(&y2, &[&[THETA2]])?;
    chain.push(
        "lemma1_epi",
        entropy_power_sum(given_y2, ch.sigma2_sq() - ch.sigma1_sq(), n),
        h_y2,
        true,
    );

    let (theta, region_ok) = region_steps(
        &mut chain,
        h_y2,
        r1_total,
        r2_total,
        ch.sigma1_sq(),
        ch.sigma2_sq(),
        ch.power(),
        n,
        hypothesis,
    );
    Ok(ConverseReport {
        steps: chain.steps,
        theta_implied: theta,
        final_region_check: Some(region_ok),
        hypothesis_met: hypothesis,
        block_epi_entropy: None,
    })
}

/// Converse chain for the two-antenna channel with antenna 2 fed back.
///
/// `mrc_split` is the identity `n R1 = Σ h(Ye_i | Θ2, Y1^{i−1}) − n h(Z_e)`,
/// `a` drops the fed-back antenna from the conditioning, `swap` replaces
/// antenna 1 by receiver 2 (valid when `σa² <= σ2²`), `epi` adds `Zd` of
/// variance `σ2² − σe²`, then the implied power split and final bounds.
pub fn verify_vector_converse(s: &LinearScheme, vch: &VectorChannel, tol: f64) -> Result<ConverseReport> {
    let hypothesis = vch.hypothesis_holds();
    let se = mrc_params(vch).sigma_e_sq;
    let model = GaussModel::vector(s, vch);
    let layout = model.layout;
    let n = layout.n();
    let engine = GaussianEngine::default();
    let ctx = Ctx { engine, joint: model.joint(), layout: &layout };
    let mut chain = Chain::new(tol);

    let mut rx1 = layout.range(Block::Y11, 0..n);
    rx1.extend(layout.range(Block::Y12, 0..n));
    let y2 = layout.range(Block::Y2, 0..n);
    let r1_total = ctx.info(&[THETA1], &rx1, &[THETA2])?;
    let r2_total = ctx.info(&[THETA2], &y2, &[])?;

    let given_both = ctx.causal_sum(Block::Ye, &[Block::Y11, Block::Y12])?;
    chain.push("mrc_split", r1_total, given_both.map(|v| v - iid_entropy(se, n)), true);

    let given_y11 = ctx.causal_sum(Block::Ye, &[Block::Y11])?;
    chain.push("a", given_both, given_y11, true);

    let given_y2 = ctx.causal_sum(Block::Ye, &[Block::Y2])?;
    chain.push("swap", given_y11, given_y2, hypothesis);

    let h_y2 = ctx.h(&y2, &[&[THETA2]])?;
    let gap = vch.sigma2_sq() - se;
    chain.push("epi", entropy_power_sum(given_y2, gap, n), h_y2, gap >= 0.0);

    let block_epi_entropy = if gap >= 0.0 {
        let ye = indices(&[&layout.range(Block::Ye, 0..n)]);
        let c = engine.cond_cov(&ctx.joint, &ye, &indices(&[&[THETA2]]))?;
        let mut m = c.cov.into_matrix();
        for i in 0..n {
            m[(i, i)] += gap;
        }
        Some(engine.diff_entropy(&crate::gaussian::CovMatrix::from_gram(m))?.value)
    } else {
        None
    };

    let (theta, region_ok) =
        region_steps(&mut chain, h_y2, r1_total, r2_total, se, vch.sigma2_sq(), vch.power(), n, hypothesis);
    Ok(ConverseReport {
        steps: chain.steps,
        theta_implied: theta,
        final_region_check: Some(region_ok),
        hypothesis_met: hypothesis,
        block_epi_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{validate_scalar, validate_vector};
    use crate::linear::normalize_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_scheme(n: usize, rng: &mut ChaCha8Rng, tap_scale: f64) -> LinearScheme {
        let mut g = || rng.sample::<f64, _>(StandardNormal);
        let a: Vec<f64> = (0..n).map(|_| g()).collect();
        let b: Vec<f64> = (0..n).map(|_| g()).collect();
        let c: Vec<Vec<f64>> = (0..n).map(|i| (0..i).map(|_| tap_scale * g()).collect()).collect();
        LinearScheme::new(a, b, c).unwrap()
    }

    #[test]
    fn lemma1_deterministic_input_is_tight() {
        let ch = validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap();
        let r = verify_lemma1(&LinearScheme::zero(1).unwrap(), &ch, DEFAULT_TOL).unwrap();
        assert!(r.steps[0].slack.abs() < 1e-9, "{:?}", r.steps[0]);
    }

    #[test]
    fn lemma1_equal_variances() {
        let ch = validate_scalar(2.0, 2.0, 0.3, 10.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = normalize_power(&random_scheme(3, &mut rng, 0.3), ch, 10.0).unwrap();
        let r = verify_lemma1(&s, &ch, DEFAULT_TOL).unwrap();
        assert!(r.steps[0].slack >= -1e-9);
    }

    #[test]
    fn lemma1_random_scheme() {
        let ch = validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = normalize_power(&random_scheme(4, &mut rng, 0.3), ch, 10.0).unwrap();
        let r = verify_lemma1(&s, &ch, DEFAULT_TOL).unwrap();
        assert!(r.steps[0].slack >= -1e-9);
        assert!(r.all_pass());
    }

    #[test]
    fn scalar_superposition_sits_on_the_boundary() {
        let ch = validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap();
        for theta in [0.0, 0.25, 0.5, 1.0] {
            let r = verify_scalar_converse(&LinearScheme::superposition(1, theta, 10.0).unwrap(), &ch, DEFAULT_TOL).unwrap();
            assert!(r.all_pass(), "{r:#?}");
            assert!((r.theta_implied - theta).abs() < 1e-9);
            assert!(r.step("final_r1").unwrap().slack.abs() < 1e-9);
            assert!(r.step("final_r2").unwrap().slack.abs() < 1e-9);
            assert_eq!(r.final_region_check, Some(true));
        }
    }

    #[test]
    fn scalar_zero_scheme() {
        let ch = validate_scalar(1.0, 2.0, 0.0, 10.0, 1.0).unwrap();
        let r = verify_scalar_converse(&LinearScheme::zero(3).unwrap(), &ch, DEFAULT_TOL).unwrap();
        assert!(r.all_pass());
        assert!(r.theta_implied.abs() < 1e-9);
    }

    #[test]
    fn scalar_random_scheme_above_threshold() {
        let ch = validate_scalar(1.0, 4.0, 0.25, 5.0, 2.0).unwrap();
        assert_eq!(threshold(&ch).verdict, Verdict::CoveredUseless);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = normalize_power(&random_scheme(6, &mut rng, 0.2), ch, 5.0).unwrap();
        let r = verify_scalar_converse(&s, &ch, DEFAULT_TOL).unwrap();
        for st in &r.steps {
            assert!(st.slack >= -1e-9, "{st:?}");
        }
    }

    #[test]
    fn scalar_below_threshold_still_reports() {
        let ch = validate_scalar(1.0, 2.0, 0.0, 10.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = normalize_power(&random_scheme(4, &mut rng, 0.5), ch, 10.0).unwrap();
        let r = verify_scalar_converse(&s, &ch, DEFAULT_TOL).unwrap();
        assert!(!r.hypothesis_met);
        assert!(!r.step("crux").unwrap().applicable);
        for name in ["a", "b", "lemma1_epi", "theta_lower", "theta_upper"] {
            assert!(r.step(name).unwrap().pass, "{name}");
        }
    }

    #[test]
    fn vector_superposition_and_zero() {
        let v = validate_vector(2.0, 1.0, 3.0, 9.0).unwrap();
        for theta in [0.0, 0.4, 1.0] {
            let r = verify_vector_converse(&LinearScheme::superposition(1, theta, 9.0).unwrap(), &v, DEFAULT_TOL).unwrap();
            assert!(r.all_pass(), "{r:#?}");
            assert!(r.step("final_r1").unwrap().slack.abs() < 1e-9);
            assert!(r.step("final_r2").unwrap().slack.abs() < 1e-9);
        }
        let z = verify_vector_converse(&LinearScheme::zero(2).unwrap(), &v, DEFAULT_TOL).unwrap();
        assert!(z.all_pass());
        assert!(z.theta_implied.abs() < 1e-9);
    }

    #[test]
    fn vector_random_scheme() {
        let v = validate_vector(2.0, 1.0, 3.0, 9.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = normalize_power(&random_scheme(5, &mut rng, 0.3), v, 9.0).unwrap();
        let r = verify_vector_converse(&s, &v, DEFAULT_TOL).unwrap();
        for st in &r.steps {
            assert!(st.slack >= -1e-9, "{st:?}");
        }
        assert!(r.block_epi_entropy.is_some());
    }

    #[test]
    fn verdicts_are_scale_invariant() {
        let ch = validate_scalar(1.0, 3.0, 0.2, 6.0, 0.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = normalize_power(&random_scheme(4, &mut rng, 0.4), ch, 6.0).unwrap();
        let base = verify_scalar_converse(&s, &ch, DEFAULT_TOL).unwrap();
        for k in [0.01f64, 3.0, 250.0] {
            let scaled = verify_scalar_converse(&s.scale_messages(k.sqrt()), &ch.scaled(k).unwrap(), DEFAULT_TOL).unwrap();
            let passes = |r: &ConverseReport| r.steps.iter().map(|s| (s.name, s.pass, s.applicable)).collect::<Vec<_>>();
            assert_eq!(passes(&base), passes(&scaled), "factor {k}");
        }
    }
}
