//! The constructive machinery: Lax-Milgram solves on a mollified exhaustion,
//! the logarithmic substitution and Riccati residuals, the critical sweep,
//! and the gauge problem on the unit interval.

mod exhaustion;
mod gauge;
mod riccati;

pub use exhaustion::{
    ball_mean_square, solve_exhaustion, solve_level, write_level_csv, Convergence, ExhaustionOptions,
    ExhaustionSolveReport, LevelReport, LevelSolution, DRIFT_TOLERANCE, NEGATIVITY_TOLERANCE,
};
pub use gauge::{
    check_gauge_condition, cross_check_gauge, green, solve_gauge, GaugeComparison, GaugeCondition, GaugeMethod,
    GaugeReport, GAUGE_TOLERANCE,
};
pub use riccati::{
    critical_sweep, default_sweep_parameters, form_bounds_from_riccati, log_transform, reconstruct_potential,
    riccati_residual, LogTransform, RiccatiBounds, RiccatiResidual, SubdomainEnergy, SweepLevel, SweepOptions,
    SweepReport,
};
