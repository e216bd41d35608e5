//! Numerical laboratory for two-user Gaussian broadcast channels with
//! one-sided feedback.
//!
//! - [`channel`]: channel parameters, validation, and the common/private
//!   split of correlated forward noises.
//! - [`gaussian`]: Schur-complement conditioning, log-det entropies and
//!   mutual informations of jointly Gaussian vectors (all in nats).
//! - [`region`]: superposition-coding capacity regions without feedback.
//! - [`threshold`]: the feedback-noise threshold beyond which noisy feedback
//!   from the stronger receiver cannot enlarge the region, and its phase map.
//! - [`linear`]: linear feedback schemes, their exact information rates, a
//!   Monte-Carlo path simulator, and step-by-step converse verification.
//! - [`search`]: randomized search for schemes beating the no-feedback region.
//!
//! Rates are reported in bits per channel use; entropies stay in nats.

pub mod channel;
pub mod error;
pub mod gaussian;
pub mod linear;
pub mod region;
pub mod search;
pub mod threshold;

pub use channel::{
    classify, decompose_noise, is_physically_degraded, validate_scalar, validate_vector, Channel, ChannelSpec,
    ClassMembership, NoiseDecomposition, ScalarChannel, VectorChannel,
};
pub use error::{Error, Result};
pub use gaussian::{cond_cov, diff_entropy, entropy_power_term, mutual_info, CovMatrix, EntropyNats, GaussianEngine, IndexSet};
pub use linear::converse::DEFAULT_TOL;
pub use linear::{
    average_power, build_joint_cov, build_vector_joint_cov, evaluate, evaluate_with, normalize_power, simulate_paths,
    verify_lemma1, verify_scalar_converse, verify_vector_converse, ConverseReport, ConverseStep, LinearScheme,
    SchemeEvaluation, Simulation,
};
pub use region::{boundary, contains, mrc_params, scalar_rate_pair, vector_rate_pair, MrcDecomposition, RatePair, RegionPoint};
pub use search::{certify, search, violation, SearchConfig, SearchResult};
pub use threshold::{feedback_useless, phase_map, threshold, Alpha, PhaseMapRow, ThresholdReport, Verdict};
