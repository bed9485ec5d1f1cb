//! Verification layer: weak-solution residuals, the energy inequality between
//! two solutions, the explicit stationary oracle and the long-time experiment.

mod energy;
mod longtime;
mod oracle;
mod residuals;

pub use energy::{energy_inequality_check, EnergyReport};
pub use longtime::{
    log_log_slope, long_time_experiment, resample_time, rescale_to_unit_time, HorizonRow, LongTimeReport, PSI_CUTOFF,
};
pub use oracle::{explicit_ergodic_oracle, oracle_mass, ErgodicReference};
pub use residuals::{weak_solution_residuals, ResidualReport, SUPPORT_THRESHOLD};
