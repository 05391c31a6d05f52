//! Modal-expansion solvers for a viscoelastic string under a known
//! time-varying external traction: forward simulation, boundary
//! controllability via a moment problem, and identification of a
//! distributed source from boundary observations.
//!
//! The string occupies `(0, pi)` and obeys
//!
//! ```text
//! w_tt = P(t) (c(xi) w_xi)_xi + int_0^t M(t-s) P(s) (c(xi) w_xi)_xi(s) ds + b(xi) sigma(t)
//! ```
//!
//! with homogeneous Dirichlet data. Everything downstream works on the
//! Dirichlet eigensystem of `(c phi')'`: per-mode Volterra kernels
//! `z_n(t; T)`, a Liouville-type transformation chain that brings the
//! kernels to Schroedinger form, the moment system built from
//! `phi_n'(0) int_0^t N(t-r) z_n(r) dr`, and the per-mode input design
//! that reads one Fourier coefficient of the unknown source per run.

pub mod cli;
pub mod error;
pub mod identify;
pub mod material;
pub mod moment;
pub mod simulate;
pub mod spectral;
pub mod volterra;

pub use error::{Error, Result};
pub use identify::{
    build_sigma_from_f, identify_source, read_eta_trace, write_eta_trace, Measurement,
    SimulatorOracle, SourceEstimate, TraceOracle,
};
pub use material::{
    load_config, parse_config, save_config, DensityProfile, Grid1D, MaterialConfig, MemoryKernel,
    SampledFunction, TractionProfile,
};
pub use moment::{
    build_moment_system, compute_t0, riesz_diagnostics, solve_moment_problem, ControlSignal,
    DeficiencyRow, DiagnosticsReport, GramDiagRow, MomentSystem,
};
pub use simulate::{
    eta_to_observation, evaluate_solution_series, observation_to_eta, simulate_modal,
    wn_final_via_kernels, Forcing, SeriesSample, TrajectorySolution,
};
pub use spectral::{check_asymptotics, solve_eigensystem, AsymptoticsReport, ModalBasis};
pub use volterra::{
    apply_b_kernel, build_c_and_b, build_transform_chain, compute_zn_seq, solve_yn, solve_yn_batch,
    solve_zn, CBKernels, KernelSolution, TransformChain, TransformedMode, TriangularKernel,
};
