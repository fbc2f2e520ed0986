//! Numerical model of spatial-mode quantum key distribution through
//! atmospheric turbulence, comparing a prepare-and-measure link with a scheme
//! in which stimulated parametric down-conversion returns a phase-conjugated
//! copy of the sender's mode.
//!
//! The pieces, bottom up:
//!
//! * [`field`]: sampled complex fields, Laguerre–Gaussian modes, overlaps.
//! * [`mub`]: mutually unbiased bases from Weyl operators and their OAM states.
//! * [`turbulence`]: Kolmogorov phase screens from Zernike expansions.
//! * [`propagation`]: angular-spectrum diffraction and the split-step channel.
//! * [`stimpdc`]: idler synthesis, transfer fidelity, probe-waist matching.
//! * [`metrics`]: crosstalk, error rates, key rate, aggregation.
//! * [`harness`]: configuration, scheme pipelines, seeded sweeps.

pub mod error;
pub mod fft;
pub mod field;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod mub;
pub mod propagation;
pub mod seed;
pub mod stimpdc;
pub mod turbulence;
pub mod zernike;

pub use error::{Error, Result};
pub use field::{
    analytic_diameter, apply_phase, conjugate, inner_product, lg_mode, second_moment_diameter, superpose, ComplexField,
    Grid, ModeSpec,
};
pub use metrics::{fidelity_matrix, normalize_crosstalk, on_axis_overlap, q_max, qer, secure_key_rate, total_qer};
pub use mub::{build_mub_pair, eigenbasis, synthesize_states, verify_mub, weyl_operators, CoefficientBasis, MubSet};
pub use num_complex::Complex64;
pub use propagation::{angular_spectrum_propagate, make_channel, transmit, ChannelRealization, Direction, SegmentCount};
pub use stimpdc::{idler_diameter_curve, optimize_probe_waist, stimulate_idler, transfer_fidelity, StimConfig};
pub use turbulence::{
    fried_parameter, rytov_variance, sample_screen, segment_path, structure_function_estimate, theoretical_structure,
    PhaseScreen, ScreenGenerator, TurbulenceSpec,
};
