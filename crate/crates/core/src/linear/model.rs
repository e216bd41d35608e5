//! Exact second moments of a linear feedback scheme.
//!
//! Every variable of the model is a linear combination of independent-block
//! "source" variables (messages and per-use noises), so the whole joint law is
//! `L B Lᵀ` with `L` the coefficient rows and `B` the source covariance.

use nalgebra::{DMatrix, DVector};

use crate::channel::{Channel, ScalarChannel, VectorChannel};
use crate::gaussian::{CovMatrix, IndexSet};
use crate::region::mrc_params;

use super::LinearScheme;

/// Index layout of a joint covariance built from a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `(Θ1, Θ2, X^n, Y1^n, Y2^n, Zfb^n)`, optionally followed by `V^n`.
    Scalar { n: usize },
    /// `(Θ1, Θ2, X^n, Y11^n, Y12^n, Y2^n, Ye^n)`.
    Vector { n: usize },
}

/// Named block of a [`Layout`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    X,
    /// Receiver 1 output (scalar model).
    Y1,
    Y2,
    Zfb,
    /// `Y1 − alpha Zfb` (extended scalar model only).
    V,
    Y11,
    Y12,
    /// Maximal-ratio-combined output `X + Z_e`.
    Ye,
}

pub const THETA1: usize = 0;
pub const THETA2: usize = 1;

impl Layout {
    pub fn for_channel(ch: &Channel, n: usize) -> Layout {
        match ch {
            Channel::Scalar(_) => Layout::Scalar { n },
            Channel::Vector(_) => Layout::Vector { n },
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Layout::Scalar { n } | Layout::Vector { n } => n,
        }
    }

    /// Dimension of the published joint covariance.
    pub fn dim(&self) -> usize {
        match *self {
            Layout::Scalar { n } => 2 + 4 * n,
            Layout::Vector { n } => 2 + 5 * n,
        }
    }

    fn block_offset(&self, block: Block) -> usize {
        let n = self.n();
        let slot = match (self, block) {
            (_, Block::X) => 0,
            (Layout::Scalar { .. }, Block::Y1) => 1,
            (Layout::Scalar { .. }, Block::Y2) => 2,
            (Layout::Scalar { .. }, Block::Zfb) => 3,
            (Layout::Scalar { .. }, Block::V) => 4,
            (Layout::Vector { .. }, Block::Y11) => 1,
            (Layout::Vector { .. }, Block::Y12) => 2,
            (Layout::Vector { .. }, Block::Y2) => 3,
            (Layout::Vector { .. }, Block::Ye) => 4,
            (l, b) => panic!("block {b:?} not present in layout {l:?}"),
        };
        2 + slot * n
    }

    /// Index of use `i` (0-based) of `block`.
    pub fn at(&self, block: Block, i: usize) -> usize {
        debug_assert!(i < self.n());
        self.block_offset(block) + i
    }

    /// Indices of uses `range` of `block`.
    pub fn range(&self, block: Block, range: std::ops::Range<usize>) -> Vec<usize> {
        range.map(|i| self.at(block, i)).collect()
    }
}

/// Concatenates index lists into an [`IndexSet`] (layout indices are
/// distinct by construction).
pub fn indices(parts: &[&[usize]]) -> IndexSet {
    let v: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    let dim = v.iter().max().map_or(0, |m| m + 1);
    IndexSet::new(v, dim).expect("layout indices are distinct")
}

/// Coefficient rows and source covariance of a scheme on a channel.
#[derive(Debug, Clone)]
pub struct GaussModel {
    pub layout: Layout,
    coeffs: DMatrix<f64>,
    sources: DMatrix<f64>,
    /// Number of message sources at the front of the source list.
    msg_sources: usize,
}

impl GaussModel {
    /// Scalar model. When `alpha` is given, the rows `V_i = Y1_i − alpha Zfb_i`
    /// are appended after the published layout.
    pub fn scalar(s: &LinearScheme, ch: &ScalarChannel, alpha: Option<f64>) -> Self {
        let n = s.horizon();
        let z1 = |j: usize| 2 + j;
        let z2 = |j: usize| 2 + n + j;
        let zfb = |j: usize| 2 + 2 * n + j;
        let m = 2 + 3 * n;

        let mut sources = DMatrix::zeros(m, m);
        sources[(0, 0)] = 1.0;
        sources[(1, 1)] = 1.0;
        let cross = ch.noise_cross_cov();
        for j in 0..n {
            sources[(z1(j), z1(j))] = ch.sigma1_sq();
            sources[(z2(j), z2(j))] = ch.sigma2_sq();
            sources[(z1(j), z2(j))] = cross;
            sources[(z2(j), z1(j))] = cross;
            sources[(zfb(j), zfb(j))] = ch.sigma_fb_sq();
        }

        // Feedback observation F_j = Y1_j + Zfb_j.
        let xs = transmit_rows(s, m, |row, j| {
            row[z1(j)] += 1.0;
            row[zfb(j)] += 1.0;
        });

        let layout = Layout::Scalar { n };
        let rows = layout.dim() + if alpha.is_some() { n } else { 0 };
        let mut coeffs = DMatrix::zeros(rows, m);
        coeffs[(THETA1, 0)] = 1.0;
        coeffs[(THETA2, 1)] = 1.0;
        for (i, x) in xs.iter().enumerate() {
            coeffs.set_row(layout.at(Block::X, i), &x.transpose());
            let mut y1 = x.clone();
            y1[z1(i)] += 1.0;
            let mut y2 = x.clone();
            y2[z2(i)] += 1.0;
            coeffs[(layout.at(Block::Zfb, i), zfb(i))] = 1.0;
            if let Some(a) = alpha {
                let mut v = y1.clone();
                v[zfb(i)] -= a;
                coeffs.set_row(layout.at(Block::V, i), &v.transpose());
            }
            coeffs.set_row(layout.at(Block::Y1, i), &y1.transpose());
            coeffs.set_row(layout.at(Block::Y2, i), &y2.transpose());
        }
        GaussModel { layout, coeffs, sources, msg_sources: 2 }
    }

    /// Two-antenna model with noiseless feedback of antenna 2.
    pub fn vector(s: &LinearScheme, vch: &VectorChannel) -> Self {
        let n = s.horizon();
        let z2 = |j: usize| 2 + j;
        let z11 = |j: usize| 2 + n + j;
        let z12 = |j: usize| 2 + 2 * n + j;
        let m = 2 + 3 * n;

        let mut diag = vec![1.0, 1.0];
        diag.extend(std::iter::repeat_n(vch.sigma2_sq(), n));
        diag.extend(std::iter::repeat_n(vch.sigma_a_sq(), n));
        diag.extend(std::iter::repeat_n(vch.sigma_b_sq(), n));
        let sources = DMatrix::from_diagonal(&DVector::from_vec(diag));

        // Feedback observation F_j = Y12_j.
        let xs = transmit_rows(s, m, |row, j| row[z12(j)] += 1.0);

        let se = mrc_params(vch).sigma_e_sq;
        let (wa, wb) = (se / vch.sigma_a_sq(), se / vch.sigma_b_sq());

        let layout = Layout::Vector { n };
        let mut coeffs = DMatrix::zeros(layout.dim(), m);
        coeffs[(THETA1, 0)] = 1.0;
        coeffs[(THETA2, 1)] = 1.0;
        for (i, x) in xs.iter().enumerate() {
            coeffs.set_row(layout.at(Block::X, i), &x.transpose());
            let mut y11 = x.clone();
            y11[z11(i)] += 1.0;
            let mut y12 = x.clone();
            y12[z12(i)] += 1.0;
            let mut y2 = x.clone();
            y2[z2(i)] += 1.0;
            let mut ye = x.clone();
            ye[z11(i)] += wa;
            ye[z12(i)] += wb;
            coeffs.set_row(layout.at(Block::Y11, i), &y11.transpose());
            coeffs.set_row(layout.at(Block::Y12, i), &y12.transpose());
            coeffs.set_row(layout.at(Block::Y2, i), &y2.transpose());
            coeffs.set_row(layout.at(Block::Ye, i), &ye.transpose());
        }
        GaussModel { layout, coeffs, sources, msg_sources: 2 }
    }

    pub fn for_channel(s: &LinearScheme, ch: &Channel) -> Self {
        match ch {
            Channel::Scalar(c) => GaussModel::scalar(s, c, None),
            Channel::Vector(v) => GaussModel::vector(s, v),
        }
    }

    /// Joint covariance over every row of the model.
    pub fn joint(&self) -> CovMatrix {
        CovMatrix::from_gram(&self.coeffs * &self.sources * self.coeffs.transpose())
    }

    /// Average transmit power split into the part carried by the messages
    /// (quadratic in the message gains) and the part injected by feedback
    /// of noise (independent of the message gains).
    pub fn power_split(&self) -> (f64, f64) {
        let n = self.layout.n();
        if n == 0 {
            return (0.0, 0.0);
        }
        let k = self.msg_sources;
        let (mut msg, mut noise) = (0.0, 0.0);
        for i in 0..n {
            let r = self.coeffs.row(self.layout.at(Block::X, i));
            let q = |lo: usize, hi: usize| {
                let v = r.columns(lo, hi - lo);
                let b = self.sources.view((lo, lo), (hi - lo, hi - lo));
                (v * b * v.transpose())[(0, 0)]
            };
            msg += q(0, k);
            noise += q(k, r.len());
        }
        (msg / n as f64, noise / n as f64)
    }
}

/// Coefficient rows of `X_1..X_n` over `m` sources.
fn transmit_rows(s: &LinearScheme, m: usize, add_feedback_noise: impl Fn(&mut DVector<f64>, usize)) -> Vec<DVector<f64>> {
    let n = s.horizon();
    let mut xs: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = DVector::zeros(m);
        row[0] = s.msg1_coeffs()[i];
        row[1] = s.msg2_coeffs()[i];
        for (j, &c) in s.fb_row(i).iter().enumerate() {
            if c != 0.0 {
                let mut obs = xs[j].clone();
                add_feedback_noise(&mut obs, j);
                row.axpy(c, &obs, 1.0);
            }
        }
        xs.push(row);
    }
    xs
}
