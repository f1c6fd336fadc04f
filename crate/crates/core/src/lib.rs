//! Material-property estimation from robot-gripper compression traces.
//!
//! The crate turns raw position/effort recordings of a single
//! compression/decompression cycle into stress/strain curves, estimates
//! Young's moduli from them, identifies Kelvin-Voigt and Hunt-Crossley
//! viscoelastic parameters, and sorts samples into material classes.
//!
//! Data flows through the modules in this order:
//!
//! ```text
//! ingest  ->  pipeline  ->  visco  ->  classify
//!   (RawCycle, ForceCycle)  (StressStrainCurve, ModulusEstimate)
//!                                      (ViscoelasticFit)  (SortDecision)
//! ```
//!
//! [`synth`] generates noiseless or noisy cycles from a known constitutive
//! model and is what the fitters are validated against.

pub mod classify;
pub mod curve_io;
pub mod device;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod regression;
pub mod synth;
pub mod visco;

pub use classify::{classify, derive_thresholds, ClassConfig, MaterialClass, SortDecision};
pub use device::{Calibration, DeviceProfile, EffortUnit, SampleSpec, SamplingMode};
pub use ingest::{
    calibrate_force, load_raw_cycle, speed_to_mm_s, CycleManifest, ForceCycle, Phase, RawCycle,
};
pub use model::{
    eval_model, Constitutive, CurvePhase, EnergyLossSeries, ModelKind, ModulusEstimate,
    ModulusMethod, Provenance, StressStrainCurve, ViscoelasticFit,
};
pub use pipeline::{
    aggregate_estimates, cv40, detect_contact, linear_modulus, local_modulus, savgol_smooth,
    to_stress_strain, welch_t_test, window_sweep, ContactEvent, ContactParams,
};
pub use synth::{synthesize_cycle, SyntheticCycle, TriangularProfile};
pub use visco::{eta_from_speeds, fit_hunt_crossley, fit_kelvin_voigt, hysteresis_area, VisError};
