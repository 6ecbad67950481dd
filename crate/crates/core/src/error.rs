use thiserror::Error;

/// Failure modes shared by all numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("point is off the target manifold (distance {distance:e})")]
    PointOffManifold { distance: f64 },

    #[error("point outside the tubular neighborhood of K (distance {distance:e} >= delta0 {delta0:e})")]
    OutsideTubularNeighborhood { distance: f64, delta0: f64 },

    #[error("degenerate metric: b = {b:e} outside [{b_min:e}, {b_max:e}]")]
    DegenerateMetric { b: f64, b_min: f64, b_max: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFiniteValue { context: String },

    #[error("metric not degenerate: rho = {rho} is above the threshold {threshold}")]
    NotDegenerate { rho: f64, threshold: f64 },

    #[error("curve speed below floor on {slow_fraction:.3} of the window; curve is point-like (length {length:e})")]
    DegenerateVelocity { length: f64, slow_fraction: f64 },

    #[error("energy concentration present in t-slabs {slabs:?}; exclude bubble regions before the ledger")]
    ConcentrationPresent { slabs: Vec<(f64, f64)> },

    #[error("synthetic family not in manifold: {reason}")]
    SpecNotInManifold { reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
