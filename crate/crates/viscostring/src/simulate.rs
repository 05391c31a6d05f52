//! Forward simulation of the modal system
//! `w_n'(t) = -lambda_n^2 int_0^t N(t-s) P(s) w_n(s) ds + phi_n'(0) int_0^t N(t-s) f(s) ds + b_n g(t)`
//! with zero initial data, plus the series evaluation of `w(., t)`, the
//! output trace `eta(t) = sum phi_n'(0) w_n(t)`, and recovery of `eta`
//! from the physical traction observation.

use crate::error::{Error, Result};
use crate::material::{
    primitive_n, trapezoid, DensityProfile, Grid1D, MaterialConfig, MemoryKernel,
    SampledFunction, TractionProfile,
};
use crate::moment::build_moment_system;
use crate::spectral::ModalBasis;
use crate::volterra::compute_zn_seq;
use rayon::prelude::*;

/// Inputs of a forward run: a boundary control and/or a distributed
/// source `b(xi) g(t)` given by modal coefficients of `b`.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub boundary_f: Option<SampledFunction>,
    pub source_b: Option<Vec<f64>>,
    pub source_g: Option<SampledFunction>,
}

impl Forcing {
    pub fn boundary(f: SampledFunction) -> Forcing {
        Forcing {
            boundary_f: Some(f),
            ..Default::default()
        }
    }

    pub fn source(b_coeffs: Vec<f64>, g: SampledFunction) -> Forcing {
        Forcing {
            source_b: Some(b_coeffs),
            source_g: Some(g),
            ..Default::default()
        }
    }

    pub fn both(f: SampledFunction, b_coeffs: Vec<f64>, g: SampledFunction) -> Forcing {
        Forcing {
            boundary_f: Some(f),
            source_b: Some(b_coeffs),
            source_g: Some(g),
        }
    }

    fn validate(&self, time_grid: &Grid1D) -> Result<()> {
        if self.boundary_f.is_none() && (self.source_b.is_none() || self.source_g.is_none()) {
            return Err(Error::Validation(
                "forcing needs a boundary control or a source (b coefficients plus g)".into(),
            ));
        }
        if let Some(f) = &self.boundary_f {
            if !f.grid().same_as(time_grid) {
                return Err(Error::GridMismatch(
                    "boundary control not sampled on the simulation time grid".into(),
                ));
            }
        }
        if let Some(g) = &self.source_g {
            if !g.grid().same_as(time_grid) {
                return Err(Error::GridMismatch(
                    "source amplitude g not sampled on the simulation time grid".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A completed forward run.
#[derive(Debug, Clone)]
pub struct TrajectorySolution {
    pub time_grid: Grid1D,
    /// `w_modal[n][k]` = `w_{n+1}(t_k)`.
    pub w_modal: Vec<Vec<f64>>,
    /// `w(xi_j, T)` reconstructed on the space grid.
    pub w_final: Vec<f64>,
    /// `eta(t) = sum_n phi_n'(0) w_n(t)`.
    pub eta: SampledFunction,
    pub truncation: usize,
    /// Physical boundary value `w(0, t) = f(t) / (c(0) P(t))`, when a
    /// boundary control is present (reported, not re-imposed).
    pub boundary_trace: Option<SampledFunction>,
}

/// `int_0^{t_k} N(t_k - s) u(s) ds` for all k, product trapezoid.
fn convolve_n(nval: &[f64], u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    let mut out = vec![0.0; m];
    for k in 1..m {
        let mut acc = 0.5 * nval[k] * u[0] + 0.5 * nval[0] * u[k];
        for j in 1..k {
            acc += nval[k - j] * u[j];
        }
        out[k] = h * acc;
    }
    out
}

/// One implicit-trapezoid pass of the modal equation with an already
/// assembled external drive `d_k = phi_n'(0) (N*f)(t_k) + b_n g(t_k)`.
fn wn_pass(lam2: f64, p: &[f64], nval: &[f64], drive: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = p.len();
    let pmax = p.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let nmax = nval.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut w = vec![0.0; m];
    let mut f_prev = drive[0];
    let mut drive_l1 = 0.0;
    for k in 0..m - 1 {
        let mut istar = 0.5 * nval[k + 1] * p[0] * w[0];
        for j in 1..=k {
            istar += nval[k + 1 - j] * p[j] * w[j];
        }
        istar *= h;
        let denom = 1.0 + lam2 * p[k + 1] * h * h / 4.0;
        let wn = (w[k] + 0.5 * h * f_prev + 0.5 * h * (-lam2 * istar + drive[k + 1])) / denom;
        w[k + 1] = wn;
        f_prev = -lam2 * (istar + 0.5 * h * p[k + 1] * wn) + drive[k + 1];
        drive_l1 += h * 0.5 * (drive[k].abs() + drive[k + 1].abs());
        let t = (k + 1) as f64 * h;
        let expo = 0.5 * lam2 * pmax * nmax * t * t;
        let cap = (drive_l1 + 1e-12) * if expo < 700.0 { expo.exp() } else { f64::INFINITY };
        if !wn.is_finite() || wn.abs() > cap * (1.0 + 1e-9) + 1e-9 {
            return Err(Error::Instability(format!(
                "modal amplitude exceeds its a-priori bound at t = {:.6}; refine the time grid",
                t
            )));
        }
    }
    Ok(w)
}

fn refine(grid: &Grid1D) -> Grid1D {
    Grid1D::new(grid.start(), grid.end(), 2 * (grid.n_points() - 1) + 1)
        .expect("refining a valid grid cannot fail")
}

/// Integrate the modal system for all basis modes; Richardson-combined
/// implicit trapezoid, parallel over modes.
pub fn simulate_modal(
    config: &MaterialConfig,
    basis: &ModalBasis,
    forcing: &Forcing,
) -> Result<TrajectorySolution> {
    let grid = config.time_grid.clone();
    forcing.validate(&grid)?;
    let fine = refine(&grid);

    let prep = |g: &Grid1D| -> (Vec<f64>, Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
        let p = config.traction.p.resample(g.clone()).values().to_vec();
        let nval = primitive_n(&config.kernel.m.resample(g.clone()))
            .values()
            .to_vec();
        let fconv = match &forcing.boundary_f {
            Some(f) => convolve_n(&nval, f.resample(g.clone()).values(), g.spacing()),
            None => vec![0.0; g.n_points()],
        };
        let gvals = forcing
            .source_g
            .as_ref()
            .map(|gg| gg.resample(g.clone()).values().to_vec());
        (p, nval, fconv, gvals)
    };
    let (pc, nc, fconv_c, gc) = prep(&grid);
    let (pf, nf, fconv_f, gf) = prep(&fine);

    let zero_b = vec![];
    let b = forcing.source_b.as_ref().unwrap_or(&zero_b);
    let n_modes = basis.n_modes();
    let w_modal: Vec<Vec<f64>> = (0..n_modes)
        .into_par_iter()
        .map(|n| {
            let lam2 = basis.lambdas[n] * basis.lambdas[n];
            let slope = basis.slopes0[n];
            let bn = b.get(n).copied().unwrap_or(0.0);
            let drive = |fconv: &[f64], gv: &Option<Vec<f64>>| -> Vec<f64> {
                (0..fconv.len())
                    .map(|k| slope * fconv[k] + bn * gv.as_ref().map_or(0.0, |g| g[k]))
                    .collect()
            };
            let wc = wn_pass(lam2, &pc, &nc, &drive(&fconv_c, &gc), grid.spacing())?;
            let wf = wn_pass(lam2, &pf, &nf, &drive(&fconv_f, &gf), fine.spacing())?;
            Ok((0..grid.n_points())
                .map(|i| (4.0 * wf[2 * i] - wc[i]) / 3.0)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let eta_vals: Vec<f64> = (0..grid.n_points())
        .map(|k| (0..n_modes).map(|n| basis.slopes0[n] * w_modal[n][k]).sum())
        .collect();
    let final_coeffs: Vec<f64> = w_modal.iter().map(|w| *w.last().unwrap()).collect();
    let w_final = basis.synthesize(&final_coeffs);
    let boundary_trace = match &forcing.boundary_f {
        Some(f) => {
            let c0 = config.density.c.values()[0];
            let vals: Vec<f64> = grid
                .samples()
                .iter()
                .zip(f.values())
                .map(|(&t, &fv)| fv / (c0 * config.traction.p.eval(t)))
                .collect();
            Some(SampledFunction::from_values(grid.clone(), vals)?)
        }
        None => None,
    };
    Ok(TrajectorySolution {
        time_grid: grid.clone(),
        w_modal,
        w_final,
        eta: SampledFunction::from_values(grid, eta_vals)?,
        truncation: n_modes,
        boundary_trace,
    })
}

/// Partial sum `w(., t_query)` and a heuristic convergence indicator
/// (l2 norm of the last quartile of modal coefficients).
#[derive(Debug, Clone)]
pub struct SeriesSample {
    pub values: Vec<f64>,
    pub tail_indicator: f64,
}

pub fn evaluate_solution_series(
    traj: &TrajectorySolution,
    basis: &ModalBasis,
    t_query: f64,
) -> Result<SeriesSample> {
    let h = traj.time_grid.spacing();
    let k = ((t_query - traj.time_grid.start()) / h).round() as i64;
    if k < 0
        || k as usize >= traj.time_grid.n_points()
        || (traj.time_grid.samples()[k as usize] - t_query).abs() > 1e-9 * (1.0 + t_query.abs())
    {
        return Err(Error::Validation(format!(
            "query time {} is not a node of the simulation grid",
            t_query
        )));
    }
    let k = k as usize;
    let coeffs: Vec<f64> = traj.w_modal.iter().map(|w| w[k]).collect();
    let q0 = coeffs.len() - coeffs.len() / 4;
    let tail_indicator = coeffs[q0..].iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(SeriesSample {
        values: basis.synthesize(&coeffs),
        tail_indicator,
    })
}

/// Final modal amplitudes by the kernel representation
/// `w_n(T) = int_0^T f(T-s) e_n(s) ds + b_n int_0^T z_n(T-s; T) g(s) ds`
/// instead of forward stepping; used as an independent cross-check.
pub fn wn_final_via_kernels(
    config: &MaterialConfig,
    basis: &ModalBasis,
    forcing: &Forcing,
) -> Result<Vec<f64>> {
    let grid = config.time_grid.clone();
    forcing.validate(&grid)?;
    let t_hor = grid.end();
    let zs = compute_zn_seq(&basis.lambdas, config, t_hor, &grid)?;
    let system = build_moment_system(basis, &config.kernel, &zs)?;
    let h = grid.spacing();
    let npts = grid.n_points();
    let zero_b = vec![];
    let b = forcing.source_b.as_ref().unwrap_or(&zero_b);
    let mut out = vec![0.0; basis.n_modes()];
    for n in 0..basis.n_modes() {
        let mut w = 0.0;
        if let Some(f) = &forcing.boundary_f {
            let prod: Vec<f64> = (0..npts)
                .map(|k| f.values()[npts - 1 - k] * system.basis_funcs[n][k])
                .collect();
            w += trapezoid(&prod, h);
        }
        if let (Some(g), Some(&bn)) = (&forcing.source_g, b.get(n)) {
            let prod: Vec<f64> = (0..npts)
                .map(|k| zs[n].z.values()[npts - 1 - k] * g.values()[k])
                .collect();
            w += bn * trapezoid(&prod, h);
        }
        out[n] = w;
    }
    Ok(out)
}

/// Forward observation map: `y(t) = -P(t) c(0) [eta(t) + int_0^t M(t-s) eta(s) ds]`.
pub fn eta_to_observation(
    eta: &SampledFunction,
    traction: &TractionProfile,
    density: &DensityProfile,
    kernel: &MemoryKernel,
) -> Result<SampledFunction> {
    let grid = eta.grid().clone();
    let h = grid.spacing();
    let c0 = density.c.values()[0];
    let mval = kernel.m.resample(grid.clone()).values().to_vec();
    let ev = eta.values();
    let mut y = vec![0.0; ev.len()];
    for k in 0..ev.len() {
        let mut conv = 0.0;
        if k > 0 {
            conv = 0.5 * mval[k] * ev[0] + 0.5 * mval[0] * ev[k];
            for j in 1..k {
                conv += mval[k - j] * ev[j];
            }
            conv *= h;
        }
        let p = traction.p.eval(grid.samples()[k]);
        y[k] = -p * c0 * (ev[k] + conv);
    }
    SampledFunction::from_values(grid, y)
}

/// Recover `eta` from the traction observation by solving the Volterra
/// equation of the second kind
/// `eta(t) + int_0^t M(t-s) eta(s) ds = -y(t) / (P(t) c(0))`
/// (product-trapezoid forward substitution; exact inverse of
/// `eta_to_observation` on the grid).
pub fn observation_to_eta(
    y_obs: &SampledFunction,
    traction: &TractionProfile,
    density: &DensityProfile,
    kernel: &MemoryKernel,
) -> Result<SampledFunction> {
    let grid = y_obs.grid().clone();
    let h = grid.spacing();
    let c0 = density.c.values()[0];
    if !(c0 > 0.0) {
        return Err(Error::Validation("c(0) must be strictly positive".into()));
    }
    let mval = kernel.m.resample(grid.clone()).values().to_vec();
    let yv = y_obs.values();
    let mut eta = vec![0.0; yv.len()];
    for k in 0..yv.len() {
        let p = traction.p.eval(grid.samples()[k]);
        if !(p > 0.0) {
            return Err(Error::Validation(
                "traction not strictly positive on the observation window".into(),
            ));
        }
        let rhs = -yv[k] / (p * c0);
        if k == 0 {
            eta[0] = rhs;
            continue;
        }
        let mut known = 0.5 * mval[k] * eta[0];
        for j in 1..k {
            known += mval[k - j] * eta[j];
        }
        known *= h;
        eta[k] = (rhs - known) / (1.0 + 0.5 * h * mval[0]);
    }
    SampledFunction::from_values(grid, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaterialConfig;
    use crate::spectral::solve_eigensystem;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    fn constant_cfg(nt: usize, t_max: f64, n_modes: usize) -> (MaterialConfig, ModalBasis) {
        let cfg = MaterialConfig::from_exprs("1", "1", "0", 401, nt, t_max, n_modes).unwrap();
        let basis = solve_eigensystem(&cfg.density, n_modes, &cfg.space_grid).unwrap();
        (cfg, basis)
    }

    #[test]
    fn zero_forcing_zero_solution() {
        let (cfg, basis) = constant_cfg(401, 2.0, 4);
        let f = SampledFunction::constant(cfg.time_grid.clone(), 0.0);
        let traj = simulate_modal(&cfg, &basis, &Forcing::boundary(f)).unwrap();
        for w in &traj.w_modal {
            for &v in w {
                assert_eq!(v, 0.0);
            }
        }
        for &v in traj.eta.values() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn first_mode_source_oracle() {
        // b = phi_1, g(t) = t: w_1'' = -w_1 + 1 gives w_1 = 1 - cos t
        let (cfg, basis) = constant_cfg(1201, std::f64::consts::PI, 4);
        let g = SampledFunction::from_expr("t", "t", cfg.time_grid.clone()).unwrap();
        let traj =
            simulate_modal(&cfg, &basis, &Forcing::source(vec![1.0, 0.0, 0.0, 0.0], g)).unwrap();
        for (&t, &w) in cfg.time_grid.samples().iter().zip(&traj.w_modal[0]) {
            assert!(
                (w - (1.0 - t.cos())).abs() < 1e-5,
                "t={} err={:e}",
                t,
                (w - (1.0 - t.cos())).abs()
            );
        }
        for w in &traj.w_modal[1..] {
            for &v in w {
                assert!(v.abs() < 1e-10);
            }
        }
        // eta = phi_1'(0) w_1 = sqrt(2/pi) (1 - cos t)
        for (&t, &e) in cfg.time_grid.samples().iter().zip(traj.eta.values()) {
            assert!((e - SQRT_2_OVER_PI * (1.0 - t.cos())).abs() < 1e-4);
        }
        // w(xi, pi/2) = (1 - cos(pi/2)) phi_1 = sqrt(2/pi) sin(xi)
        let sample = evaluate_solution_series(&traj, &basis, std::f64::consts::PI / 2.0).unwrap();
        for (&xi, &v) in cfg.space_grid.samples().iter().zip(&sample.values) {
            assert!((v - SQRT_2_OVER_PI * xi.sin()).abs() < 1e-3, "xi={}", xi);
        }
        let zero = evaluate_solution_series(&traj, &basis, 0.0).unwrap();
        for &v in &zero.values {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn scheme_is_linear() {
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1+0.2*sin(xi)",
            "-0.5*exp(-0.5*t)",
            401,
            401,
            2.0,
            4,
        )
        .unwrap();
        let basis = solve_eigensystem(&cfg.density, 4, &cfg.space_grid).unwrap();
        let f1 = SampledFunction::from_expr("sin(3*t)", "t", cfg.time_grid.clone()).unwrap();
        let f2 = SampledFunction::from_expr("t*exp(-t)", "t", cfg.time_grid.clone()).unwrap();
        let (a, b) = (2.5, -0.75);
        let combo = SampledFunction::from_values(
            cfg.time_grid.clone(),
            f1.values()
                .iter()
                .zip(f2.values())
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let t1 = simulate_modal(&cfg, &basis, &Forcing::boundary(f1)).unwrap();
        let t2 = simulate_modal(&cfg, &basis, &Forcing::boundary(f2)).unwrap();
        let tc = simulate_modal(&cfg, &basis, &Forcing::boundary(combo)).unwrap();
        for n in 0..4 {
            let scale = tc.w_modal[n]
                .iter()
                .fold(1.0f64, |acc, &v| acc.max(v.abs()));
            for k in 0..cfg.time_grid.n_points() {
                let lin = a * t1.w_modal[n][k] + b * t2.w_modal[n][k];
                assert!(
                    (tc.w_modal[n][k] - lin).abs() <= 1e-9 * scale,
                    "n={} k={} diff={:e}",
                    n,
                    k,
                    (tc.w_modal[n][k] - lin).abs()
                );
            }
        }
    }

    #[test]
    fn forward_matches_kernel_representation() {
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1+0.2*sin(xi)",
            "-0.5*exp(-0.5*t)",
            401,
            801,
            2.5,
            6,
        )
        .unwrap();
        let basis = solve_eigensystem(&cfg.density, 6, &cfg.space_grid).unwrap();
        let f = SampledFunction::from_expr("sin(2*t)+0.5*t", "t", cfg.time_grid.clone()).unwrap();
        let g = SampledFunction::from_expr("t*t", "t", cfg.time_grid.clone()).unwrap();
        let forcing = Forcing::both(f, vec![0.5, -0.3, 0.2, 0.0, 0.1, 0.0], g);
        let traj = simulate_modal(&cfg, &basis, &forcing).unwrap();
        let rep = wn_final_via_kernels(&cfg, &basis, &forcing).unwrap();
        let scale = rep.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        for n in 0..6 {
            let direct = *traj.w_modal[n].last().unwrap();
            assert!(
                (direct - rep[n]).abs() <= 1e-4 * scale,
                "n={} direct={} rep={}",
                n + 1,
                direct,
                rep[n]
            );
        }
    }

    #[test]
    fn observation_round_trip_three_kernels() {
        for m_expr in ["0", "0.3", "-0.5*exp(-0.5*t)"] {
            let cfg =
                MaterialConfig::from_exprs("1+0.3*sin(t)", "1+0.2*sin(xi)", m_expr, 101, 801, 2.0, 4)
                    .unwrap();
            let eta =
                SampledFunction::from_expr("sin(2*t)*exp(-0.3*t)", "t", cfg.time_grid.clone())
                    .unwrap();
            let y = eta_to_observation(&eta, &cfg.traction, &cfg.density, &cfg.kernel).unwrap();
            let back = observation_to_eta(&y, &cfg.traction, &cfg.density, &cfg.kernel).unwrap();
            for (a, b) in eta.values().iter().zip(back.values()) {
                assert!((a - b).abs() <= 1e-6, "kernel {}: {:e}", m_expr, (a - b).abs());
            }
        }
    }

    #[test]
    fn constant_kernel_observation_closed_form() {
        // M = mu, P = 1, c(0) = 1, eta = 1: y(t) = -(1 + mu t)
        let mu = 0.3;
        let cfg = MaterialConfig::from_exprs("1", "1", "0.3", 101, 401, 2.0, 4).unwrap();
        let eta = SampledFunction::constant(cfg.time_grid.clone(), 1.0);
        let y = eta_to_observation(&eta, &cfg.traction, &cfg.density, &cfg.kernel).unwrap();
        for (&t, &yv) in cfg.time_grid.samples().iter().zip(y.values()) {
            assert!((yv + 1.0 + mu * t).abs() < 1e-12);
        }
        let back = observation_to_eta(&y, &cfg.traction, &cfg.density, &cfg.kernel).unwrap();
        for &v in back.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
