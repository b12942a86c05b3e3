use thiserror::Error;

/// Toolkit-wide error type. Variant names match the failure classes used in
/// diagnostics and CLI output, so messages stay greppable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("NonMarkov: branch {branch}: {detail}")]
    NonMarkov { branch: usize, detail: String },

    #[error("NotExpanding: branch {branch} has slope {slope} (need > 1)")]
    NotExpanding { branch: usize, slope: f64 },

    #[error("Reducible: transition graph is not strongly connected")]
    Reducible,

    #[error("Inadmissible: {0}")]
    Inadmissible(String),

    #[error("ResourceLimit: {0}")]
    ResourceLimit(String),

    #[error("ContractionViolated: fiber {index}: derivative range [{inf}, {sup}] not inside (0, 1)")]
    ContractionViolated { index: usize, inf: f64, sup: f64 },

    #[error("ImageEscapes: fiber {index}: image [{lo}, {hi}] leaves [0, 1]")]
    ImageEscapes { index: usize, lo: f64, hi: f64 },

    #[error("CountMismatch: {fibers} fiber maps for an alphabet of {alphabet} symbols")]
    CountMismatch { fibers: usize, alphabet: usize },

    #[error("EpsilonTooLarge: eps = {eps} not below the shadowing scale eps0 = {eps0}")]
    EpsilonTooLarge { eps: f64, eps0: f64 },

    #[error("RhoOutOfRange: rho = {rho} must lie in (0, {max})")]
    RhoOutOfRange { rho: f64, max: f64 },

    #[error("NoSignChange: F({lo}) = {f_lo}, F({hi}) = {f_hi}; need F(lo) > 0 > F(hi)")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("NotMonotone: F({t_lo}) = {f_lo} rises to F({t_hi}) = {f_hi} beyond tolerance")]
    NotMonotone { t_lo: f64, f_lo: f64, t_hi: f64, f_hi: f64 },

    #[error("NotShadowed: orbits separate at step {step}: distance {dist} >= eps = {eps}")]
    NotShadowed { step: usize, dist: f64, eps: f64 },

    #[error("DepthExhausted: {0}")]
    DepthExhausted(String),

    #[error("Uncoverable: gap ({gap_lo}, {gap_hi}) misses every candidate")]
    Uncoverable { gap_lo: f64, gap_hi: f64 },

    #[error("NotRecoded: potential has depth {depth}; recode to depth 1 first")]
    NotRecoded { depth: usize },

    #[error("ScaleTooFine: sample resolution {resolution} is coarser than the smallest scale {scale}")]
    ScaleTooFine { resolution: f64, scale: f64 },

    #[error("UnsupportedSmooth: {0}")]
    UnsupportedSmooth(String),

    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
