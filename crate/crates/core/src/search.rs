//! Random-restart hill climbing over power-normalized linear schemes, looking
//! for rate pairs outside the no-feedback region.
//!
//! The objective is the weighted sum `mu R1 + (1 − mu) R2`. Budget counts
//! calls to [`evaluate`](crate::linear::evaluate); certification is free.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::gaussian::GaussianEngine;
use crate::linear::{evaluate_with, normalize_power, LinearScheme, MAX_HORIZON};
use crate::region::{region_excess, RatePair, Superposition};

/// Non-improving proposals before the step is halved.
const PATIENCE: usize = 50;
/// Step size below which a climb restarts from a fresh point.
const MIN_STEP: f64 = 1e-6;
/// Boundary grid used while searching / when certifying.
const SEARCH_GRID: usize = 1_001;
const CERTIFY_GRID: usize = 100_001;
/// Superposition splits always tried first.
const SWEEP_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub horizon_n: usize,
    pub mu: f64,
    pub budget: usize,
    pub restarts: usize,
    pub step_scale: f64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            horizon_n: 4,
            mu: 0.5,
            budget: 10_000,
            restarts: 8,
            step_scale: 0.3,
            seed: 42,
            tol: 1e-9,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::BadConfig("budget must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::BadConfig(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        if self.horizon_n == 0 || self.horizon_n > MAX_HORIZON {
            return Err(Error::BadConfig(format!("horizon must be in 1..={MAX_HORIZON}")));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::BadConfig("step_scale must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_scheme: LinearScheme,
    pub best_rates: RatePair,
    /// Excess over the no-feedback boundary in bits; `<= 0` means inside.
    pub violation_bits: f64,
    pub evaluations_used: usize,
    pub certified: bool,
    pub mu: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
struct Candidate {
    scheme: LinearScheme,
    rates: RatePair,
    objective: f64,
}

impl Candidate {
    /// Larger objective wins; ties go to the lexicographically smaller
    /// serialized scheme.
    fn beats(&self, other: &Candidate) -> bool {
        if self.objective != other.objective {
            return self.objective > other.objective;
        }
        scheme_key(&self.scheme) < scheme_key(&other.scheme)
    }
}

fn scheme_key(s: &LinearScheme) -> String {
    s.params().iter().map(|v| format!("{v:+.17e}")).collect::<Vec<_>>().join(",")
}

struct Problem<'a> {
    ch: &'a Channel,
    n: usize,
    mu: f64,
    power: f64,
    engine: GaussianEngine,
}

impl Problem<'_> {
    fn score(&self, scheme: LinearScheme) -> Option<Candidate> {
        let e = evaluate_with(&self.engine, &scheme, self.ch).ok()?;
        let objective = self.mu * e.rates.r1_bits + (1.0 - self.mu) * e.rates.r2_bits;
        objective.is_finite().then_some(Candidate { scheme, rates: e.rates, objective })
    }

    fn normalized(&self, params: &[f64]) -> Option<LinearScheme> {
        let s = LinearScheme::from_params(self.n, params).ok()?;
        normalize_power(&s, *self.ch, self.power).ok()
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.n;
        let taps = n * (n - 1) / 2;
        let amp = self.power.sqrt().max(1.0);
        (0..2 * n + taps)
            .map(|k| {
                let scale = if k < 2 * n { amp } else { 0.1 };
                scale * rng.sample::<f64, _>(StandardNormal)
            })
            .collect()
    }

    /// Hill climbing with `budget` evaluations from `start`.
    fn climb(&self, start: Vec<f64>, budget: usize, step_scale: f64, rng: &mut ChaCha8Rng) -> (Option<Candidate>, usize) {
        let amp = self.power.sqrt().max(1.0);
        let msg_len = 2 * self.n;
        let mut used = 0usize;
        let mut best: Option<Candidate> = None;
        let mut current: Option<(Vec<f64>, f64)> = None;
        let mut step = step_scale;
        let mut stale = 0usize;
        let mut next_start = Some(start);
        // Infeasible proposals cost no evaluation; bound them separately.
        let mut attempts = 0usize;

        while used < budget && attempts < 20 * budget {
            attempts += 1;
            let proposal = match (&current, next_start.take()) {
                (_, Some(p)) => p,
                (Some((p, _)), None) => p
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let scale = if k < msg_len { amp } else { 1.0 };
                        v + step * scale * rng.sample::<f64, _>(StandardNormal)
                    })
                    .collect(),
                (None, None) => self.random_start(rng),
            };
            let Some(scheme) = self.normalized(&proposal) else {
                stale += 1;
                if current.is_none() {
                    next_start = Some(self.random_start(rng));
                }
                continue;
            };
            used += 1;
            let Some(cand) = self.score(scheme) else {
                stale += 1;
                continue;
            };
            let improved = current.as_ref().is_none_or(|(_, f)| cand.objective > *f);
            if improved {
                current = Some((cand.scheme.params(), cand.objective));
                stale = 0;
            } else {
                stale += 1;
            }
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
            if stale >= PATIENCE {
                step *= 0.5;
                stale = 0;
                if step < MIN_STEP {
                    step = step_scale;
                    current = None;
                    next_start = Some(self.random_start(rng));
                }
            }
        }
        (best, used)
    }
}

/// Splits `seed` into the independent stream of restart `index`.
fn restart_seed(seed: u64, index: usize) -> u64 {
    // SplitMix64 finalizer of the xor-combined pair.
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Violation of `rates` against the region of `ch` for weight `mu`: the
/// larger of the weighted-sum excess over the support value and the
/// coordinate-wise excess.
pub fn violation(ch: &Channel, rates: &RatePair, mu: f64) -> f64 {
    violation_on_grid(ch, rates, mu, SEARCH_GRID)
}

fn violation_on_grid(ch: &Channel, rates: &RatePair, mu: f64, grid: usize) -> f64 {
    let sp = Superposition::of(ch);
    let weighted = mu * rates.r1_bits + (1.0 - mu) * rates.r2_bits - sp.support(mu, grid);
    weighted.max(region_excess(ch, rates, 0.0))
}

pub fn search(ch: &Channel, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let n = cfg.horizon_n;
    let power = ch.power();
    let problem = Problem { ch, n, mu: cfg.mu, power, engine: GaussianEngine::default() };
    let sp = Superposition::of(ch);

    let mut used = 0usize;
    let mut best: Option<Candidate> = None;
    let offer = |c: Option<Candidate>, best: &mut Option<Candidate>| {
        if let Some(c) = c {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                *best = Some(c);
            }
        }
    };

    // The weighted-optimal split first, then the sweep.
    let thetas = std::iter::once(sp.best_theta(cfg.mu)).chain((0..SWEEP_POINTS).map(|k| k as f64 / (SWEEP_POINTS - 1) as f64));
    for theta in thetas {
        if used == cfg.budget {
            break;
        }
        used += 1;
        offer(problem.score(LinearScheme::superposition(n, theta, power)?), &mut best);
    }

    let remaining = cfg.budget - used;
    if remaining > 0 && power > 0.0 {
        let restarts = cfg.restarts.max(1).min(remaining);
        let start_theta = sp.best_theta(cfg.mu);
        let runs: Vec<(Option<Candidate>, usize)> = (0..restarts)
            .into_par_iter()
            .map(|r| {
                let share = remaining / restarts + usize::from(r < remaining % restarts);
                let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, r));
                // Even restarts climb away from the best superposition point.
                let start = if r % 2 == 0 {
                    LinearScheme::superposition(n, start_theta, power).map(|s| s.params()).unwrap_or_default()
                } else {
                    problem.random_start(&mut rng)
                };
                problem.climb(start, share, cfg.step_scale, &mut rng)
            })
            .collect();
        for (c, u) in runs {
            used += u;
            offer(c, &mut best);
        }
    }

    let best = best.ok_or_else(|| Error::BadConfig("no scheme could be evaluated".into()))?;
    Ok(SearchResult {
        violation_bits: violation(ch, &best.rates, cfg.mu),
        best_scheme: best.scheme,
        best_rates: best.rates,
        evaluations_used: used,
        certified: false,
        mu: cfg.mu,
        seed: cfg.seed,
    })
}

/// Re-evaluates the best scheme with tightened engine thresholds and
/// recomputes the violation against a dense boundary sweep.
pub fn certify(res: &SearchResult, ch: &Channel) -> Result<SearchResult> {
    let e = evaluate_with(&GaussianEngine::precise(), &res.best_scheme, ch)?;
    let violation = violation_on_grid(ch, &e.rates, res.mu, CERTIFY_GRID);
    Ok(SearchResult {
        best_rates: e.rates,
        violation_bits: violation,
        certified: true,
        ..res.clone()
    })
}
