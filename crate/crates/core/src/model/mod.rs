//! Analytic predictions for the measured contact process.

pub mod contact;
pub mod intercontact;
pub mod mixture;
pub mod negligible;
pub mod phase;
pub mod report;

pub use contact::{
    c_tilde_weights, dist_c_tilde, dist_c_tilde_stay_awake, pmf_h, CTildeWeights, HModel,
    ResidualContact, TruncatedContact,
};
pub use intercontact::{
    dist_s_tilde_negligible, dist_s_tilde_nonneg, g_p_nonneg, g_p_nonneg_with, sample_n,
    GHatAnchor, SamplerConfig,
};
pub use mixture::{
    Component, ComponentKind, DistComponent, MixtureDist, PointMass, SamplerOnly, Uniform,
};
pub use negligible::{
    classify_behaviour, g_p_auto, g_p_exponential, g_p_numeric, g_p_pareto, g_p_pareto_printed,
    moments_n, moments_s_tilde, omega, pareto_tail_check, pmf_n, pmf_n_table, xi, Behaviour,
    ClassInputs, Classification, GPpair, MomentsReport, TailSpec,
};
pub use phase::{phase_type_fit, PhaseTypeSpec, MAX_ERLANG_STAGES};
pub use report::{
    predict, prediction_dists, ContactReport, DutyCycleReport, PredictConfig, PredictedDists,
    PredictionReport,
};
