//! Empirical verification: exact moment oracle for the linear example,
//! decay-rate estimation, time averages, holding-error checks and
//! propagation-of-chaos experiments.

mod chaos;
mod oracle;
mod rates;

pub use chaos::{
    chaos_scaling, stability_transfer_check, ChaosReport, TransferReport, TransferVerdict,
    TRANSFER_TOLERANCE,
};
pub use oracle::{moment_ode_oracle, MomentPath};
pub use rates::{
    compare_with_oracle, default_window, estimate_decay_rate, hinf_time_average,
    holding_ratio_check, HoldingCheck, MeanSquareSeries, OracleAgreement, RateEstimate,
    HOLDING_FLOOR,
};
