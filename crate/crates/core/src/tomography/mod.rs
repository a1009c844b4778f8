//! Measurement simulation, state and process tomography, and Haar-averaged
//! gate fidelities.

mod fidelity;
mod measurement;
mod process;
mod state;

pub use fidelity::{
    dfs_gate_summary, dfs_report, haar_state, haar_unitary, mean_gate_fidelity, ChiChannel, Depolarizing,
    DfsGateSummary, DfsReport, Estimate, LogicalChannel, PauliTwirlTrajectories, UnitaryChannel, MIN_HAAR_SAMPLES,
};
pub use measurement::{
    all_settings, outcome_probabilities, simulate_measurement, FrequencyData, Histogram, MeasurementSetting,
    Statistics, TomographyDataset, NEGATIVE_PROBABILITY_TOL,
};
pub use process::{
    canonical_inputs, dfs_process_tomography, pauli_basis, process_tomography, solve_chi, ChiMatrix, ChiRecord,
    DfsProcessResult, CONDITIONING_FLOOR,
};
pub use state::{linear_inversion, project_to_density, reconstruct_frequencies, reconstruct_state, Estimator};
