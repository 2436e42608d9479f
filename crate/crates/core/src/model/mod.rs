//! Empirical models of a technological parameter against input factors.

pub mod fit;
pub mod lsq;
pub mod select;

pub use fit::{
    check_mono_domain, fit_mono, fit_response_surface, goodness, FittedModel, Goodness, Interval,
    ModelFamily, Prediction,
};
pub use lsq::{solve_least_squares, DesignMatrix, RANK_TOLERANCE};
pub use select::{
    rank_models, simulate_and_select, simulate_and_select_multi, Criterion, ModelRanking,
    RankedModel, SkippedFamily,
};
