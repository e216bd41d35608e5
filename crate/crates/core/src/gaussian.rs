//! Covariance algebra for jointly Gaussian vectors.
//!
//! Every entropy and mutual information in the crate is computed here from a
//! joint covariance: conditioning is a Schur complement, entropy a log-det.
//! All entropies are in nats.

use std::f64::consts::{E, PI};

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// `ln(2*pi*e)`.
pub fn ln_two_pi_e() -> f64 {
    (2.0 * PI * E).ln()
}

/// Determinants below this are reported as singular.
const SINGULAR_DET: f64 = 1e-300;

/// Symmetric positive-semidefinite covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    /// Validates symmetry (1e-12 relative) and positive semidefiniteness
    /// (smallest eigenvalue >= -1e-10 * largest diagonal entry).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotPsd(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPsd("non-finite entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::NotPsd(format!("asymmetry {asym:e}")));
        }
        let sym = (&m + m.transpose()) * 0.5;
        if sym.nrows() > 0 {
            let max_diag = sym.diagonal().max();
            let min_eig = SymmetricEigen::new(sym.clone()).eigenvalues.min();
            if min_eig < -1e-10 * max_diag.max(0.0) {
                return Err(Error::NotPsd(format!("eigenvalue {min_eig:e}")));
            }
        }
        Ok(CovMatrix(sym))
    }

    /// Wraps a matrix produced by the crate's own algebra (`L B Lᵀ`), which is
    /// PSD by construction. Only symmetrizes.
    pub(crate) fn from_gram(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        CovMatrix((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotPsd("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn scalar(variance: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, variance))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Principal sub-matrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &IndexSet) -> CovMatrix {
        let k = idx.len();
        CovMatrix(DMatrix::from_fn(k, k, |i, j| self.0[(idx.0[i], idx.0[j])]))
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<CovMatrix> {
        let idx = IndexSet::new(perm.to_vec(), self.dim())?;
        if idx.len() != self.dim() {
            return Err(Error::IndexOutOfRange { index: perm.len(), dim: self.dim() });
        }
        Ok(self.submatrix(&idx))
    }

    pub fn max_diagonal(&self) -> f64 {
        if self.dim() == 0 {
            0.0
        } else {
            self.0.diagonal().max()
        }
    }
}

/// Ordered list of distinct coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in &indices {
            if i >= dim {
                return Err(Error::IndexOutOfRange { index: i, dim });
            }
            if seen[i] {
                return Err(Error::DuplicateIndex(i));
            }
            seen[i] = true;
        }
        Ok(IndexSet(indices))
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// Concatenation; fails on overlap.
    pub fn union(&self, other: &IndexSet) -> Result<IndexSet> {
        if let Some(&i) = self.0.iter().find(|i| other.0.contains(i)) {
            return Err(Error::OverlappingSets(i));
        }
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Ok(IndexSet(v))
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self.0.iter().find(|&&i| i >= dim) {
            Some(&index) => Err(Error::IndexOutOfRange { index, dim }),
            None => Ok(()),
        }
    }
}

fn disjoint(a: &IndexSet, b: &IndexSet) -> Result<()> {
    match a.0.iter().find(|i| b.0.contains(i)) {
        Some(&i) => Err(Error::OverlappingSets(i)),
        None => Ok(()),
    }
}

/// Differential entropy in nats, with the numerical diagnostics of its
/// computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyNats {
    pub value: f64,
    /// Determinant underflowed; `value` is `-inf`.
    pub singular: bool,
    /// Diagonal jitter or a pseudo-inverse was needed somewhere upstream.
    pub jittered: bool,
}

impl EntropyNats {
    fn finite(value: f64, jittered: bool) -> Self {
        EntropyNats { value, singular: false, jittered }
    }

    fn singular() -> Self {
        EntropyNats { value: f64::NEG_INFINITY, singular: true, jittered: true }
    }
}

/// Conditional covariance with a note on whether the conditioning block had
/// to be pseudo-inverted.
#[derive(Debug, Clone)]
pub struct Conditioned {
    pub cov: CovMatrix,
    pub pseudo_inverse: bool,
}

/// Numerical thresholds of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianEngine {
    /// Relative pivot level (w.r.t. the largest diagonal entry) below which
    /// jitter of the same relative size is added before factorizing.
    pub jitter_rel: f64,
    /// Relative singular-value cutoff for pseudo-inverses.
    pub pinv_rel: f64,
}

impl Default for GaussianEngine {
    fn default() -> Self {
        GaussianEngine { jitter_rel: 1e-12, pinv_rel: 1e-12 }
    }
}

impl GaussianEngine {
    /// Tightened thresholds used when re-checking a candidate result.
    pub fn precise() -> Self {
        GaussianEngine { jitter_rel: 1e-15, pinv_rel: 1e-15 }
    }

    /// `Σ_TT − Σ_TG Σ_GG⁺ Σ_GT`.
    pub fn cond_cov(&self, joint: &CovMatrix, target: &IndexSet, given: &IndexSet) -> Result<Conditioned> {
        target.check(joint.dim())?;
        given.check(joint.dim())?;
        disjoint(target, given)?;
        let stt = joint.submatrix(target).0;
        if given.is_empty() {
            return Ok(Conditioned { cov: CovMatrix(stt), pseudo_inverse: false });
        }
        let sgg = joint.submatrix(given).0;
        let stg = DMatrix::from_fn(target.len(), given.len(), |i, j| joint.0[(target.0[i], given.0[j])]);

        let max_diag = sgg.diagonal().max();
        if max_diag <= 0.0 {
            // Conditioning on constants.
            return Ok(Conditioned { cov: CovMatrix(stt), pseudo_inverse: true });
        }
        let (correction, pseudo_inverse) = match healthy_cholesky(&sgg, self.jitter_rel * max_diag) {
            Some(chol) => {
                let x = chol.solve(&stg.transpose());
                (&stg * x, false)
            }
            None => {
                let eig = SymmetricEigen::new(sgg);
                let cut = self.pinv_rel * eig.eigenvalues.amax();
                let inv_vals = eig.eigenvalues.map(|v| if v > cut { 1.0 / v } else { 0.0 });
                let w = &stg * &eig.eigenvectors;
                let scaled = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] * inv_vals[j]);
                (scaled * w.transpose(), true)
            }
        };
        let schur = stt - correction;
        Ok(Conditioned { cov: CovMatrix::from_gram(schur), pseudo_inverse })
    }

    /// `(1/2) ln((2πe)^d det Σ)`; `0` for the empty matrix.
    pub fn diff_entropy(&self, cov: &CovMatrix) -> Result<EntropyNats> {
        let d = cov.dim();
        if d == 0 {
            return Ok(EntropyNats::finite(0.0, false));
        }
        let max_diag = cov.max_diagonal();
        if max_diag <= 0.0 {
            if max_diag < 0.0 || cov.0.amax() > 0.0 {
                return Err(Error::NotPsd("non-positive diagonal".into()));
            }
            return Ok(EntropyNats::singular());
        }
        let floor = self.jitter_rel * max_diag;
        let mut jittered = false;
        let chol = match healthy_cholesky(&cov.0, floor) {
            Some(c) => c,
            None => {
                let min_eig = SymmetricEigen::new(cov.0.clone()).eigenvalues.min();
                if min_eig < -1e-10 * max_diag {
                    return Err(Error::NotPsd(format!("eigenvalue {min_eig:e}")));
                }
                jittered = true;
                let mut m = cov.0.clone();
                for i in 0..d {
                    m[(i, i)] += floor;
                }
                match Cholesky::new(m) {
                    Some(c) => c,
                    None => return Ok(EntropyNats::singular()),
                }
            }
        };
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
        if log_det < SINGULAR_DET.ln() {
            return Ok(EntropyNats::singular());
        }
        Ok(EntropyNats::finite(0.5 * (d as f64 * ln_two_pi_e() + log_det), jittered))
    }

    /// `h(target | given)`.
    pub fn cond_entropy(&self, joint: &CovMatrix, target: &IndexSet, given: &IndexSet) -> Result<EntropyNats> {
        let c = self.cond_cov(joint, target, given)?;
        let mut h = self.diff_entropy(&c.cov)?;
        h.jittered |= c.pseudo_inverse;
        Ok(h)
    }

    /// `I(A; B | C) = h(A|C) + h(B|C) − h(AB|C)`, clamped at zero and
    /// returned as `0` when a marginal is singular.
    pub fn mutual_info(&self, joint: &CovMatrix, a: &IndexSet, b: &IndexSet, given: &IndexSet) -> Result<MutualInfo> {
        disjoint(a, b)?;
        disjoint(a, given)?;
        disjoint(b, given)?;
        let ha = self.cond_entropy(joint, a, given)?;
        let hb = self.cond_entropy(joint, b, given)?;
        if ha.singular || hb.singular {
            return Ok(MutualInfo { nats: 0.0, jittered: true });
        }
        let hab = self.cond_entropy(joint, &a.union(b)?, given)?;
        let jittered = ha.jittered || hb.jittered || hab.jittered;
        if hab.singular {
            // A deterministic relation between non-degenerate marginals.
            return Ok(MutualInfo { nats: f64::INFINITY, jittered });
        }
        let nats = ha.value + hb.value - hab.value;
        Ok(MutualInfo { nats: nats.max(0.0), jittered })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInfo {
    pub nats: f64,
    pub jittered: bool,
}

fn healthy_cholesky(m: &DMatrix<f64>, floor: f64) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(m.clone())?;
    let ok = chol.l_dirty().diagonal().iter().all(|l| l * l >= floor);
    ok.then_some(chol)
}

/// [`GaussianEngine::cond_cov`] with default thresholds.
pub fn cond_cov(joint: &CovMatrix, target: &IndexSet, given: &IndexSet) -> Result<CovMatrix> {
    GaussianEngine::default().cond_cov(joint, target, given).map(|c| c.cov)
}

/// [`GaussianEngine::diff_entropy`] with default thresholds.
pub fn diff_entropy(cov: &CovMatrix) -> Result<EntropyNats> {
    GaussianEngine::default().diff_entropy(cov)
}

/// [`GaussianEngine::mutual_info`] with default thresholds, in nats.
pub fn mutual_info(joint: &CovMatrix, a: &IndexSet, b: &IndexSet, given: &IndexSet) -> Result<f64> {
    GaussianEngine::default().mutual_info(joint, a, b, given).map(|m| m.nats)
}

/// `exp(2 h / n)`: the per-symbol entropy power (without the `1/(2πe)`).
pub fn entropy_power_term(h_total: EntropyNats, n: usize) -> Result<f64> {
    if h_total.singular || !h_total.value.is_finite() || n == 0 {
        return Err(Error::SingularEntropy);
    }
    Ok((2.0 * h_total.value / n as f64).exp())
}

/// Entropy of `n` i.i.d. `N(0, variance)` samples.
pub fn iid_entropy(variance: f64, n: usize) -> f64 {
    0.5 * n as f64 * (ln_two_pi_e() + variance.ln())
}
