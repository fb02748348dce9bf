//! First-cycle quantization-step estimation from a decompressed image.

mod calibrate;
mod curve;
mod estimate;

pub use calibrate::{accuracy, calibrate_thresholds, EstimatorCalibration, ThresholdGrid};
pub use curve::{
    coefficients, local_minima, svar_at, svar_curve, svar_curve_from_coefficients, CurveOptions,
    Frequency, VarCurve,
};
pub use estimate::{
    estimate_from_curve, estimate_step, estimate_table, naive_global_min, Branch, EstimateMode,
    EstimatorConfig, StepEstimate, TableEstimate, DEFAULT_T_C, DEFAULT_T_XI, MIN_CONFIDENT_BLOCKS,
};
