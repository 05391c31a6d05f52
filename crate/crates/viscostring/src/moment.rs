//! The moment problem of boundary control: basis functions
//! `e_n(t) = phi_n'(0) int_0^t N(t-r) z_n(r) dr` on the control window,
//! their Gram matrix, the minimal-norm solve, the critical time `T0`,
//! and Riesz-sequence diagnostics (Gram spectral bounds and
//! Paley-Wiener deficiency sums).

use crate::error::{Error, Result};
use crate::material::{
    primitive_n, trapezoid, Grid1D, MaterialConfig, MemoryKernel, SampledFunction,
    TractionProfile,
};
use crate::spectral::{solve_eigensystem, ModalBasis};
use crate::volterra::{apply_b_kernel, build_c_and_b, build_transform_chain, compute_zn_seq,
    solve_yn_batch, KernelSolution};
use nalgebra::DMatrix;
use rayon::prelude::*;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Critical control time: the unique `T0` with `int_0^{T0} sqrt(P(u)) du = pi`.
///
/// (The defining relation is usually written with `Q(s) = P(T0 - s)`;
/// the substitution `u = T0 - s` removes `T0` from the integrand.)
pub fn compute_t0(traction: &TractionProfile) -> Result<f64> {
    let p = &traction.p;
    let grid = p.grid();
    let sqrtp: Vec<f64> = p.values().iter().map(|&v| v.sqrt()).collect();
    let h = grid.spacing();
    let mut cum = vec![0.0; sqrtp.len()];
    for i in 1..sqrtp.len() {
        cum[i] = cum[i - 1] + 0.5 * h * (sqrtp[i - 1] + sqrtp[i]);
    }
    let target = std::f64::consts::PI;
    let total = *cum.last().unwrap();
    if total < target {
        return Err(Error::HorizonTooShort(format!(
            "int_0^{{{}}} sqrt(P) = {:.6} never reaches pi; sample P on a longer window",
            grid.end(),
            total
        )));
    }
    let k = cum.partition_point(|&v| v < target) - 1;
    // refine inside cell k with 5-point Gauss-Legendre on [t_k, t], which
    // is exact for the closed-form test tractions (sqrt(P) polynomial)
    let gauss = |a: f64, b: f64| -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let c = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        c * X
            .iter()
            .zip(&W)
            .map(|(&x, &w)| w * p.eval(m + c * x).sqrt())
            .sum::<f64>()
    };
    let t_k = grid.samples()[k];
    let (mut lo, mut hi) = (t_k, grid.samples()[(k + 1).min(grid.n_points() - 1)]);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cum[k] + gauss(t_k, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The truncated moment system on `[0, T]`: basis functions on the time
/// grid, their Gram matrix, and its spectral diagnostics.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub t_horizon: f64,
    pub time_grid: Grid1D,
    /// `basis_funcs[n][k]` = `e_{n+1}(t_k)`.
    pub basis_funcs: Vec<Vec<f64>>,
    pub gram: DMatrix<f64>,
    pub eig_min: f64,
    pub eig_max: f64,
    pub cond: f64,
}

fn gram_spectrum(g: &DMatrix<f64>) -> (f64, f64, f64) {
    let eig = g.clone().symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &e in eig.eigenvalues.iter() {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    let cond = if lo.abs() > 0.0 { hi / lo } else { f64::INFINITY };
    (lo, hi, cond)
}

/// Assemble `e_n(t) = phi_n'(0) int_0^t N(t-r) z_n(r) dr` (product
/// trapezoid) and the Gram matrix `G_{nm} = int_0^T e_n e_m`.
pub fn build_moment_system(
    basis: &ModalBasis,
    kernel: &MemoryKernel,
    zs: &[KernelSolution],
) -> Result<MomentSystem> {
    if zs.is_empty() {
        return Err(Error::Validation("moment system needs at least one mode".into()));
    }
    if zs.len() > basis.n_modes() {
        return Err(Error::GridMismatch(
            "more kernel solutions than modal slopes".into(),
        ));
    }
    let grid = zs[0].z.grid().clone();
    for k in zs {
        if !k.z.grid().same_as(&grid) {
            return Err(Error::GridMismatch(
                "kernel solutions sampled on different time grids".into(),
            ));
        }
    }
    let h = grid.spacing();
    let nval = primitive_n(&kernel.m.resample(grid.clone()))
        .values()
        .to_vec();
    let basis_funcs: Vec<Vec<f64>> = zs
        .par_iter()
        .enumerate()
        .map(|(n, ks)| {
            let z = ks.z.values();
            let slope = basis.slopes0[n];
            let mut e = vec![0.0; z.len()];
            for k in 1..z.len() {
                let mut acc = 0.5 * nval[k] * z[0] + 0.5 * nval[0] * z[k];
                for j in 1..k {
                    acc += nval[k - j] * z[j];
                }
                e[k] = slope * h * acc;
            }
            e
        })
        .collect();
    let m = basis_funcs.len();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let prod: Vec<f64> = basis_funcs[i]
                .iter()
                .zip(&basis_funcs[j])
                .map(|(a, b)| a * b)
                .collect();
            let v = trapezoid(&prod, h);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let (eig_min, eig_max, cond) = gram_spectrum(&gram);
    Ok(MomentSystem {
        t_horizon: grid.end(),
        time_grid: grid,
        basis_funcs,
        gram,
        eig_min,
        eig_max,
        cond,
    })
}

/// A solved boundary control `f(t) = sum_m c_m e_m(T - t)`.
#[derive(Debug, Clone)]
pub struct ControlSignal {
    pub f: SampledFunction,
    pub coefficients: Vec<f64>,
    /// `||G c - W||_2` after the solve.
    pub residual: f64,
    /// `L^2(0, T)` norm of `f`.
    pub norm: f64,
}

/// Minimal-norm solve of the truncated moment constraints
/// `int_0^T f(T-s) e_n(s) ds = W_n`: coefficients from
/// `(G + ridge I) c = W`, control in `span{e_m(T - .)}`.
pub fn solve_moment_problem(
    system: &MomentSystem,
    targets: &[f64],
    ridge: f64,
) -> Result<ControlSignal> {
    let m = system.basis_funcs.len();
    if targets.len() != m {
        return Err(Error::Validation(format!(
            "got {} targets for {} moment constraints",
            targets.len(),
            m
        )));
    }
    // Cholesky can slip through on a Gram whose smallest eigenvalue is
    // pure rounding noise; reject that outright unless the caller opted
    // into regularization.
    if ridge == 0.0 && system.eig_min <= 1e-13 * system.eig_max {
        return Err(Error::SingularGram(format!(
            "Gram matrix numerically singular (eig_min = {:.3e}, eig_max = {:.3e}): \
             the moment family is degenerate, typically T < T0; raise T or use a ridge",
            system.eig_min, system.eig_max
        )));
    }
    let mut shifted = system.gram.clone();
    for i in 0..m {
        shifted[(i, i)] += ridge;
    }
    let chol = shifted.cholesky().ok_or_else(|| {
        Error::SingularGram(
            "Gram matrix not positive definite: the moment family is degenerate \
             (typically T < T0, or duplicated modes); raise T or use a ridge"
                .into(),
        )
    })?;
    let w = nalgebra::DVector::from_column_slice(targets);
    let c = chol.solve(&w);
    let residual = (&system.gram * &c - &w).norm();
    let npts = system.time_grid.n_points();
    let fvals: Vec<f64> = (0..npts)
        .map(|k| {
            let mirrored = npts - 1 - k; // T - t_k is a grid node
            (0..m).map(|i| c[i] * system.basis_funcs[i][mirrored]).sum()
        })
        .collect();
    let sq: Vec<f64> = fvals.iter().map(|v| v * v).collect();
    let norm = trapezoid(&sq, system.time_grid.spacing()).sqrt();
    Ok(ControlSignal {
        f: SampledFunction::from_values(system.time_grid.clone(), fvals)?,
        coefficients: c.iter().cloned().collect(),
        residual,
        norm,
    })
}

/// One Gram-spectrum row of the diagnostics sweep.
#[derive(Debug, Clone)]
pub struct GramDiagRow {
    pub t_horizon: f64,
    pub n_modes: usize,
    pub eig_min: f64,
    pub eig_max: f64,
    pub cond: f64,
}

/// Paley-Wiener deficiency partial sum
/// `D_N = sum_{n<=N} ||Z_n - y0 sqrt(2/pi) sin(n .)||^2_{L^2(0,S)}`.
#[derive(Debug, Clone)]
pub struct DeficiencyRow {
    pub t_horizon: f64,
    pub s_end: f64,
    pub n: usize,
    pub d_n: f64,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub gram_rows: Vec<GramDiagRow>,
    pub deficiency_rows: Vec<DeficiencyRow>,
}

/// Sweep horizons and truncation sizes: Gram spectra of the moment
/// family per (T, n), plus deficiency sums along the transformed chain
/// per T at the largest n.
pub fn riesz_diagnostics(
    config: &MaterialConfig,
    t_list: &[f64],
    n_list: &[usize],
) -> Result<DiagnosticsReport> {
    let n_max = *n_list.iter().max().ok_or_else(|| {
        Error::Validation("diagnostics needs at least one truncation size".into())
    })?;
    let basis = solve_eigensystem(&config.density, n_max, &config.space_grid)?;
    let nt = config.time_grid.n_points();
    let mut gram_rows = Vec::new();
    let mut deficiency_rows = Vec::new();
    for &t_hor in t_list {
        let grid = Grid1D::new(0.0, t_hor, nt)?;
        let zs = compute_zn_seq(&basis.lambdas, config, t_hor, &grid)?;
        let system = build_moment_system(&basis, &config.kernel, &zs)?;
        for &n in n_list {
            if n > n_max {
                continue;
            }
            let sub = system.gram.view((0, 0), (n, n)).into_owned();
            let (eig_min, eig_max, cond) = gram_spectrum(&sub);
            gram_rows.push(GramDiagRow {
                t_horizon: t_hor,
                n_modes: n,
                eig_min,
                eig_max,
                cond,
            });
        }

        let chain = build_transform_chain(config, t_hor)?;
        let modes = solve_yn_batch(&basis.lambdas, &chain, &chain.x_grid)?;
        let cb = build_c_and_b(&chain, &config.kernel)?;
        let hx = chain.x_grid.spacing();
        let mut running = 0.0;
        for (i, mode) in modes.iter().enumerate() {
            let n = i + 1;
            let z = apply_b_kernel(basis.slopes0[i], mode, &cb.b, &chain.x_grid)?;
            let diff_sq: Vec<f64> = chain
                .x_grid
                .samples()
                .iter()
                .zip(z.values())
                .map(|(&x, &zv)| {
                    let target = chain.y0 * SQRT_2_OVER_PI * (n as f64 * x).sin();
                    (zv - target) * (zv - target)
                })
                .collect();
            running += trapezoid(&diff_sq, hx);
            if n_list.contains(&n) {
                deficiency_rows.push(DeficiencyRow {
                    t_horizon: t_hor,
                    s_end: chain.s_end,
                    n,
                    d_n: running,
                });
            }
        }
    }
    Ok(DiagnosticsReport {
        gram_rows,
        deficiency_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{MaterialConfig, SampledFunction, TractionProfile};
    use rand::{Rng, SeedableRng};

    fn traction(expr: &str, t_max: f64, n: usize) -> TractionProfile {
        let g = Grid1D::new(0.0, t_max, n).unwrap();
        TractionProfile::new(SampledFunction::from_expr(expr, "t", g).unwrap(), None).unwrap()
    }

    #[test]
    fn critical_time_closed_forms() {
        let pi = std::f64::consts::PI;
        let t0 = compute_t0(&traction("1", 4.0, 2001)).unwrap();
        assert!((t0 - pi).abs() < 1e-10, "T0 = {}", t0);

        let t0 = compute_t0(&traction("4", 4.0, 2001)).unwrap();
        assert!((t0 - pi / 2.0).abs() < 1e-10, "T0 = {}", t0);

        // sqrt(P) = 1 + u: T0 + T0^2/2 = pi
        let t0 = compute_t0(&traction("(1+t)^2", 4.0, 2001)).unwrap();
        let exact = -1.0 + (1.0 + 2.0 * pi).sqrt();
        assert!((t0 - exact).abs() < 1e-10, "T0 = {} vs {}", t0, exact);
    }

    #[test]
    fn critical_time_scaling_law() {
        // substituting u = beta s in int_0^{T} sqrt(P) gives
        // T0(beta^2 P(beta .)) = T0(P) / beta
        let base = compute_t0(&traction("1+0.3*sin(t)", 6.0, 4001)).unwrap();
        for &beta in &[0.5f64, 2.0] {
            let expr = format!("{}*(1+0.3*sin({}*t))", beta * beta, beta);
            let scaled = compute_t0(&traction(&expr, 10.0, 8001)).unwrap();
            assert!(
                (scaled - base / beta).abs() < 1e-5,
                "beta={} scaled={} base={}",
                beta,
                scaled,
                base
            );
        }
    }

    #[test]
    fn short_horizon_reported() {
        match compute_t0(&traction("1", 2.0, 201)) {
            Err(Error::HorizonTooShort(_)) => {}
            other => panic!("expected horizon-too-short, got {:?}", other),
        }
    }

    fn constant_setup(t_hor: f64, nt: usize, n_modes: usize) -> (ModalBasis, MaterialConfig, MomentSystem) {
        let cfg = MaterialConfig::from_exprs("1", "1", "0", 401, nt, t_hor, n_modes).unwrap();
        let basis = solve_eigensystem(&cfg.density, n_modes, &cfg.space_grid).unwrap();
        let zs = compute_zn_seq(&basis.lambdas, &cfg, t_hor, &cfg.time_grid).unwrap();
        let sys = build_moment_system(&basis, &cfg.kernel, &zs).unwrap();
        (basis, cfg, sys)
    }

    #[test]
    fn constant_case_gram_is_identity() {
        // e_n(t) = sqrt(2/pi) sin(n t); orthonormal on (0, pi)
        let (_, _, sys) = constant_setup(std::f64::consts::PI, 801, 4);
        for (n, e) in sys.basis_funcs.iter().enumerate() {
            assert_eq!(e[0], 0.0);
            for (k, &t) in sys.time_grid.samples().iter().enumerate() {
                let exact = SQRT_2_OVER_PI * ((n + 1) as f64 * t).sin();
                assert!((e[k] - exact).abs() < 1e-3, "n={} t={}", n + 1, t);
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (sys.gram[(i, j)] - expect).abs() < 1e-3,
                    "G[{},{}] = {}",
                    i,
                    j,
                    sys.gram[(i, j)]
                );
            }
        }
        assert!((sys.eig_min - 1.0).abs() < 1e-3 && (sys.eig_max - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gram_symmetric_psd() {
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1+0.2*sin(xi)",
            "-0.5*exp(-0.5*t)",
            401,
            601,
            4.0,
            6,
        )
        .unwrap();
        let basis = solve_eigensystem(&cfg.density, 6, &cfg.space_grid).unwrap();
        let zs = compute_zn_seq(&basis.lambdas, &cfg, 4.0, &cfg.time_grid).unwrap();
        let sys = build_moment_system(&basis, &cfg.kernel, &zs).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((sys.gram[(i, j)] - sys.gram[(j, i)]).abs() <= 1e-12);
            }
        }
        assert!(sys.eig_min >= -1e-8 * sys.eig_max);
    }

    #[test]
    fn zero_target_zero_control() {
        let (_, _, sys) = constant_setup(std::f64::consts::PI, 401, 4);
        let ctl = solve_moment_problem(&sys, &[0.0; 4], 0.0).unwrap();
        assert_eq!(ctl.residual, 0.0);
        assert_eq!(ctl.norm, 0.0);
        for &v in ctl.f.values() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn unit_target_recovers_first_sine() {
        // G ~ I, W = e_1: f(t) = e_1(pi - t) = sqrt(2/pi) sin(pi - t) = sqrt(2/pi) sin t
        let (_, _, sys) = constant_setup(std::f64::consts::PI, 801, 4);
        let ctl = solve_moment_problem(&sys, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        for (&t, &fv) in sys.time_grid.samples().iter().zip(ctl.f.values()) {
            assert!(
                (fv - SQRT_2_OVER_PI * t.sin()).abs() < 5e-3,
                "t={} f={}",
                t,
                fv
            );
        }
        assert!(ctl.residual <= 1e-8);
    }

    #[test]
    fn moment_constraints_reproduced() {
        // forward check int_0^T f(T-s) e_n(s) ds = W_n by direct quadrature
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1",
            "-0.5*exp(-0.5*t)",
            401,
            801,
            4.0,
            6,
        )
        .unwrap();
        let basis = solve_eigensystem(&cfg.density, 6, &cfg.space_grid).unwrap();
        let zs = compute_zn_seq(&basis.lambdas, &cfg, 4.0, &cfg.time_grid).unwrap();
        let sys = build_moment_system(&basis, &cfg.kernel, &zs).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let w: Vec<f64> = (1..=6)
            .map(|n| rng.gen_range(-1.0..1.0) / (n * n) as f64)
            .collect();
        let ctl = solve_moment_problem(&sys, &w, 0.0).unwrap();
        let npts = sys.time_grid.n_points();
        for n in 0..6 {
            let prod: Vec<f64> = (0..npts)
                .map(|k| ctl.f.values()[npts - 1 - k] * sys.basis_funcs[n][k])
                .collect();
            let got = trapezoid(&prod, sys.time_grid.spacing());
            assert!((got - w[n]).abs() < 1e-4, "n={} got={} want={}", n + 1, got, w[n]);
        }
    }

    #[test]
    fn minimal_norm_among_feasible_controls() {
        let (_, _, sys) = constant_setup(std::f64::consts::PI, 401, 4);
        let w = [0.3, -0.1, 0.05, 0.2];
        let ctl = solve_moment_problem(&sys, &w, 0.0).unwrap();
        // random perturbation projected onto the orthogonal complement of
        // span{e_m(T - .)} keeps the constraints and can only add norm
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let npts = sys.time_grid.n_points();
        let h = sys.time_grid.spacing();
        let mirrored: Vec<Vec<f64>> = (0..4)
            .map(|m| (0..npts).map(|k| sys.basis_funcs[m][npts - 1 - k]).collect())
            .collect();
        let mut pert: Vec<f64> = (0..npts).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for em in &mirrored {
                let prod: Vec<f64> = pert.iter().zip(em).map(|(a, b)| a * b).collect();
                let ip = trapezoid(&prod, h);
                let sq: Vec<f64> = em.iter().map(|v| v * v).collect();
                let nn = trapezoid(&sq, h);
                for (p, &e) in pert.iter_mut().zip(em) {
                    *p -= ip / nn * e;
                }
            }
        }
        let g: Vec<f64> = ctl.f.values().iter().zip(&pert).map(|(a, b)| a + b).collect();
        let gsq: Vec<f64> = g.iter().map(|v| v * v).collect();
        let gnorm = trapezoid(&gsq, h).sqrt();
        assert!(ctl.norm <= gnorm + 1e-8, "{} vs {}", ctl.norm, gnorm);
    }

    #[test]
    fn degenerate_system_reports_singular_gram() {
        let (basis, cfg, _) = constant_setup(std::f64::consts::PI, 401, 2);
        // duplicate the first kernel: rank-deficient Gram
        let z1 = crate::volterra::solve_zn(basis.lambdas[0], &cfg, std::f64::consts::PI, &cfg.time_grid)
            .unwrap();
        let sys = build_moment_system(&basis, &cfg.kernel, &[z1.clone(), z1]).unwrap();
        match solve_moment_problem(&sys, &[1.0, 0.0], 0.0) {
            Err(Error::SingularGram(_)) => {}
            other => panic!("expected singular Gram, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn short_window_collapses_gram() {
        // below the critical time the sine family on (0, 0.8 pi) degenerates
        let pi = std::f64::consts::PI;
        let (_, _, long) = constant_setup(1.2 * pi, 601, 8);
        let (_, _, short) = constant_setup(0.8 * pi, 601, 8);
        assert!(short.eig_min < long.eig_min / 10.0,
            "short {} long {}", short.eig_min, long.eig_min);
    }
}
