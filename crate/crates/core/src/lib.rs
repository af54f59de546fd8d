//! Ring-profiled vortex soliton pairs of the quadratic l-vortex system on a
//! disk of radius `R`.
//!
//! Two routes produce solutions: [`minimize`] works at prescribed fluxes and
//! recovers `(kappa, beta)` as Lagrange multipliers, [`mp_solve`] works at
//! prescribed `(kappa, beta)` and finds a mountain-pass critical point.
//! Both are polished by [`refine`] and checked by [`verify_all`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod minimizer;
pub mod mountain_pass;
pub mod newton;
pub mod precond;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{
    action_i, action_j, energy_e, flux_q, grad_i, grad_j, h_norm_sq, pair_h_norm_sq, residual,
    residual_max, total_flux, FluxTargets, FunctionalReport, PhysicsParams, VortexPair,
};
pub use grid::{make_grid, Profile, RadialGrid};
pub use io::{read_pair_csv, write_pair_csv};
pub use minimizer::{
    check_flux_window, coercive_lower_bound, extract_multipliers, minimize, minimize_observed,
    project_flux, FluxWindow, MinimizeIterate, MinimizeOptions,
};
pub use mountain_pass::{
    choose_endpoint, mp_constants, mp_solve, tent_profile, MpConstants, MpOptions, TentIntegrals,
    TentParams,
};
pub use newton::{assemble_jacobian, refine, refine_forced, Jacobian, NewtonOptions};
pub use report::{PathDiagnostics, PathRound, SolveMethod, SolveReport};
pub use verify::{
    check_positivity_a2, check_sandwich, classify_triviality, fit_decay, verify_all, DecayFit,
    DecayWindow, SandwichCheck, Triviality, VerifyReport,
};
