//! Key-rate model for entanglement-based QKD with spectral multiplexing of
//! an SPDC source over a WDM channel grid.

// `!(x > 0.0)` is used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod channel;
pub mod counting;
pub mod error;
pub mod keyrate;
pub mod mc;
pub mod normal;
pub mod optimizer;
pub mod quadrature;
pub mod source;

pub use channel::{
    bucket_probs, bucket_probs_gauss, bucket_probs_rect, build_grid, grid_buckets, rescale, BucketProbs, ChannelPair,
    ChannelPlan, ChannelProfile, CorrelationSign,
};
pub use counting::{click_table, click_table_nowdm, joint_entry_prob, ClickTable, LinkParams, Pattern};
pub use error::{Error, Result};
pub use keyrate::{
    acceptance_and_qber, binary_entropy, gain, nowdm_rate, repetition_rate, secret_key_rate, time_rate, total_wdm_rate,
    KeyRateResult, PairRate, PreparedGrid,
};
pub use mc::{sample_pair_spectrum, simulate, McEstimate};
pub use optimizer::{
    optimize_mu, optimize_nowdm, optimize_wdm, run_sweep, thermal_baseline, BracketStatus, Evaluation, MuBounds,
    MuOptimum, Scenario, SweepAxis, SweepRow, SweepSpec,
};
pub use source::{
    pair_distribution, pair_distribution_auto, PairDistribution, PairStatistics, SourceParams, SpectralGaussian,
    DEFAULT_TAIL_TOLERANCE,
};
