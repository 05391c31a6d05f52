//! Source identification from boundary observations: design one input
//! per mode whose moment targets are a Kronecker delta, drive the system
//! with it, and read the corresponding Fourier coefficient of the
//! unknown source off the observation at time `T`.

use crate::error::{Error, Result};
use crate::material::{Grid1D, MaterialConfig, MemoryKernel, SampledFunction};
use crate::moment::{build_moment_system, compute_t0, solve_moment_problem};
use crate::simulate::{simulate_modal, Forcing};
use crate::spectral::{solve_eigensystem, ModalBasis};
use crate::volterra::compute_zn_seq;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// `sigma(t) = f(t) + int_0^t N'(t-s) f(s) ds`, the physical input whose
/// induced amplitude `g = int_0^t sigma` equals `int_0^t N(t-s) f(s) ds`.
pub fn build_sigma_from_f(f: &SampledFunction, kernel: &MemoryKernel) -> Result<SampledFunction> {
    let grid = f.grid().clone();
    let h = grid.spacing();
    let mval = kernel.m.resample(grid.clone()).values().to_vec();
    let fv = f.values();
    let mut sigma = vec![0.0; fv.len()];
    for k in 0..fv.len() {
        let mut conv = 0.0;
        if k > 0 {
            conv = 0.5 * mval[k] * fv[0] + 0.5 * mval[0] * fv[k];
            for j in 1..k {
                conv += mval[k - j] * fv[j];
            }
            conv *= h;
        }
        sigma[k] = fv[k] + conv;
    }
    SampledFunction::from_values(grid, sigma)
}

/// Source of observation traces: given the k-th designed input
/// `sigma_k`, produce the boundary trace `eta(t)` on some time grid
/// covering `[0, T]`.
pub trait Measurement {
    fn measure(&self, k: usize, sigma: &SampledFunction) -> Result<SampledFunction>;
}

/// In-process measurement: runs the forward simulator against a hidden
/// source `b`, at double the caller's time resolution so the inversion
/// is not validated against its own discretization.
pub struct SimulatorOracle {
    config: MaterialConfig,
    basis: ModalBasis,
    b_coeffs: Vec<f64>,
}

impl SimulatorOracle {
    /// `b_values` are nodal samples of the hidden source on the config's
    /// space grid.
    pub fn new(
        config: &MaterialConfig,
        t_horizon: f64,
        n_modes: usize,
        b_values: &[f64],
    ) -> Result<SimulatorOracle> {
        let nt = 2 * (config.time_grid.n_points() - 1) + 1;
        let cfg = config.with_horizon(t_horizon, nt)?;
        let basis = solve_eigensystem(&cfg.density, n_modes, &cfg.space_grid)?;
        if b_values.len() != cfg.space_grid.n_points() {
            return Err(Error::GridMismatch(
                "hidden source not sampled on the config space grid".into(),
            ));
        }
        let b_coeffs = basis.project(b_values);
        Ok(SimulatorOracle {
            config: cfg,
            basis,
            b_coeffs,
        })
    }

    /// Modal coefficients of the hidden source in the oracle's basis.
    pub fn b_coeffs(&self) -> &[f64] {
        &self.b_coeffs
    }
}

impl Measurement for SimulatorOracle {
    fn measure(&self, _k: usize, sigma: &SampledFunction) -> Result<SampledFunction> {
        let sigma_fine = sigma.resample(self.config.time_grid.clone());
        let g = sigma_fine.cumulative();
        let traj = simulate_modal(
            &self.config,
            &self.basis,
            &Forcing::source(self.b_coeffs.clone(), g),
        )?;
        Ok(traj.eta)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceManifestEntry {
    k: usize,
    file: String,
    t: f64,
}

/// File-based measurement: per-mode traces `eta_k####.csv` (header
/// `t,eta`) listed in a `manifest.json` of `{k, file, t}` entries.
pub struct TraceOracle {
    dir: PathBuf,
    entries: Vec<TraceManifestEntry>,
}

impl TraceOracle {
    pub fn open<P: AsRef<Path>>(dir: P) -> Result<TraceOracle> {
        let dir = dir.as_ref().to_path_buf();
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let entries: Vec<TraceManifestEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("malformed trace manifest: {}", e)))?;
        Ok(TraceOracle { dir, entries })
    }
}

impl Measurement for TraceOracle {
    fn measure(&self, k: usize, _sigma: &SampledFunction) -> Result<SampledFunction> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.k == k)
            .ok_or_else(|| Error::Measurement {
                mode: k,
                message: "no trace listed in manifest".into(),
            })?;
        read_eta_trace(self.dir.join(&entry.file))
    }
}

/// Write a trace in the exchange format (header `t,eta`, 17 significant digits).
pub fn write_eta_trace<P: AsRef<Path>>(path: P, eta: &SampledFunction) -> Result<()> {
    let mut out = String::from("t,eta\n");
    for (&t, &v) in eta.grid().samples().iter().zip(eta.values()) {
        out.push_str(&format!("{:.16e},{:.16e}\n", t, v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_eta_trace<P: AsRef<Path>>(path: P) -> Result<SampledFunction> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse(format!("bad trace line {}: `{}`", i + 1, line)))?;
        let v = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Parse(format!("bad trace line {}: `{}`", i + 1, line)))?;
        ts.push(t);
        vs.push(v);
    }
    if ts.len() < 2 {
        return Err(Error::Parse("trace needs at least two samples".into()));
    }
    let grid = Grid1D::new(ts[0], *ts.last().unwrap(), ts.len())?;
    for (&t, &g) in ts.iter().zip(grid.samples()) {
        if (t - g).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Parse("trace time stamps are not uniform".into()));
        }
    }
    SampledFunction::from_values(grid, vs)
}

/// The reconstructed source.
#[derive(Debug, Clone)]
pub struct SourceEstimate {
    /// `b_hat_k = eta_(k)(T)`; missing modes hold 0 and are listed below.
    pub coefficients: Vec<f64>,
    /// Modes whose measurement failed (1-based).
    pub missing: Vec<usize>,
    /// `sum_k b_hat_k phi_k` on the space grid.
    pub b_hat: Vec<f64>,
    pub n_modes: usize,
    /// Moment-solve residuals per mode.
    pub per_mode_residuals: Vec<f64>,
}

/// Run the per-mode identification sweep: for each `k <= n_modes` design
/// the control with moment targets `W_n = delta_{kn}`, convert it to the
/// physical input `sigma_k`, query the measurement, and take the trace
/// value at `T` as the k-th coefficient of `b`.
pub fn identify_source<M: Measurement>(
    measure: &M,
    config: &MaterialConfig,
    t_horizon: f64,
    n_modes: usize,
    ridge: f64,
) -> Result<SourceEstimate> {
    match compute_t0(&config.traction) {
        Ok(t0) => {
            if t_horizon < t0 {
                log::warn!(
                    "identification horizon {} below the critical time {:.6}; no theoretical guarantee",
                    t_horizon,
                    t0
                );
            }
        }
        Err(_) => log::warn!(
            "traction window too short to locate the critical time; proceeding anyway"
        ),
    }
    let basis = solve_eigensystem(&config.density, n_modes, &config.space_grid)?;
    let grid = Grid1D::new(0.0, t_horizon, config.time_grid.n_points())?;
    let zs = compute_zn_seq(&basis.lambdas, config, t_horizon, &grid)?;
    let system = build_moment_system(&basis, &config.kernel, &zs)?;

    let mut coefficients = vec![0.0; n_modes];
    let mut residuals = vec![0.0; n_modes];
    let mut missing = Vec::new();
    for k in 0..n_modes {
        let mut targets = vec![0.0; n_modes];
        targets[k] = 1.0;
        let ctl = solve_moment_problem(&system, &targets, ridge)?;
        residuals[k] = ctl.residual;
        let sigma = build_sigma_from_f(&ctl.f, &config.kernel)?;
        match measure.measure(k + 1, &sigma) {
            Ok(trace) => {
                if trace.grid().end() < t_horizon - 1e-9 {
                    missing.push(k + 1);
                    log::warn!("trace for mode {} stops before T; coefficient marked missing", k + 1);
                    continue;
                }
                coefficients[k] = trace.eval(t_horizon);
            }
            Err(e) => {
                missing.push(k + 1);
                log::warn!("measurement failed for mode {}: {}", k + 1, e);
            }
        }
    }
    let b_hat = basis.synthesize(&coefficients);
    Ok(SourceEstimate {
        coefficients,
        missing,
        b_hat,
        n_modes,
        per_mode_residuals: residuals,
    })
}
