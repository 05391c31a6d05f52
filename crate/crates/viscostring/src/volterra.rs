//! Per-mode Volterra kernels `z_n(t; T)`, the Liouville-type
//! transformation chain that brings them to Schroedinger form, the
//! transformed solutions `Y_n(x)` on `[0, S]`, and the bivariate kernels
//! `A`, `C`, `B` that drive the closeness estimates.
//!
//! All steppers are implicit-trapezoid product-integration schemes
//! (error expansion in even powers of the step), solved at the requested
//! grid and at half step, then Richardson-combined for fourth order.

use crate::error::{Error, Result};
use crate::material::{
    primitive_n, Grid1D, MaterialConfig, MemoryKernel, SampledFunction, TractionProfile,
};
use rayon::prelude::*;

/// One solved kernel `z(t) = z_n(t; T)` with
/// `z'(t) = -lambda^2 Q(t) int_0^t N(t-s) z(s) ds`, `z(0) = 1`,
/// where `Q(t) = P(T - t)`.
#[derive(Debug, Clone)]
pub struct KernelSolution {
    /// Mode index (1-based) when solved as part of a sweep, 0 for ad-hoc solves.
    pub mode: usize,
    pub lambda: f64,
    pub t_horizon: f64,
    pub z: SampledFunction,
    /// Max defect of the discrete stepping identity on the fine pass
    /// (certifies the solve, not the discretization error).
    pub residual: f64,
}

/// Grid with the same range and doubled resolution.
fn refine(grid: &Grid1D) -> Grid1D {
    Grid1D::new(grid.start(), grid.end(), 2 * (grid.n_points() - 1) + 1)
        .expect("refining a valid grid cannot fail")
}

/// `Q(t) = P(T - t)` sampled on `grid` (which must cover `[0, T]`).
/// Analytic tractions re-evaluate exactly; sampled ones interpolate and
/// clamp beyond their own range.
fn q_values(traction: &TractionProfile, grid: &Grid1D) -> Vec<f64> {
    let p = traction.p.resample(grid.clone());
    let mut q: Vec<f64> = p.values().to_vec();
    q.reverse();
    q
}

/// `N` on the lattice of `grid`, recomputed from `M` so that `N(0) = 1`
/// exactly and the quadrature error is a smooth O(h^2) term (which the
/// Richardson combination then removes along with the stepper's own).
fn n_lattice(kernel: &MemoryKernel, grid: &Grid1D) -> Vec<f64> {
    let m = kernel.m.resample(grid.clone());
    primitive_n(&m).values().to_vec()
}

/// Implicit-trapezoid pass for the z equation on a uniform lattice.
/// `q[k] = Q(t_k)`, `nval[d] = N(d h)`. Returns (z, max step defect).
fn zn_pass(lambda: f64, q: &[f64], nval: &[f64], h: f64) -> Result<(Vec<f64>, f64)> {
    let m = q.len();
    let lam2 = lambda * lambda;
    let qmax = q.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let nmax = nval.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut z = vec![0.0; m];
    z[0] = 1.0;
    // F_k = -lam2 q_k I_k with I_k the product-trapezoid memory integral
    let mut f_prev = 0.0;
    let mut defect = 0.0f64;
    for k in 0..m - 1 {
        // trapezoid of N(t_{k+1}-s) z(s) over the known nodes 0..=k; the
        // missing node s = t_{k+1} enters implicitly with weight h/2 * N(0)
        let mut istar = 0.5 * nval[k + 1] * z[0];
        for j in 1..=k {
            istar += nval[k + 1 - j] * z[j];
        }
        istar *= h;
        let denom = 1.0 + lam2 * q[k + 1] * h * h / 4.0;
        let znew =
            (z[k] + 0.5 * h * f_prev - 0.5 * h * lam2 * q[k + 1] * istar) / denom;
        let f_new = -lam2 * q[k + 1] * (istar + 0.5 * h * znew);
        defect = defect.max((znew - z[k] - 0.5 * h * (f_prev + f_new)).abs());
        z[k + 1] = znew;
        f_prev = f_new;
        // loose a-priori Gronwall bound |z| <= exp(lam2 Qmax Nmax t^2 / 2)
        let t = (k + 1) as f64 * h;
        let expo = 0.5 * lam2 * qmax * nmax * t * t;
        if !znew.is_finite() || (expo < 700.0 && znew.abs() > expo.exp() * (1.0 + 1e-9)) {
            return Err(Error::Instability(format!(
                "kernel solution exceeds its a-priori bound at t = {:.6} (lambda = {}); refine the time grid",
                t, lambda
            )));
        }
    }
    Ok((z, defect))
}

/// Solve the mode kernel on `grid` (which must span `[0, t_horizon]`).
pub fn solve_zn(
    lambda: f64,
    config: &MaterialConfig,
    t_horizon: f64,
    grid: &Grid1D,
) -> Result<KernelSolution> {
    if lambda < 0.0 {
        return Err(Error::Validation("lambda must be nonnegative".into()));
    }
    if grid.start().abs() > 1e-12 || (grid.end() - t_horizon).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "kernel grid [{}, {}] does not span [0, {}]",
            grid.start(),
            grid.end(),
            t_horizon
        )));
    }
    let fine = refine(grid);
    let (zc, _) = zn_pass(
        lambda,
        &q_values(&config.traction, grid),
        &n_lattice(&config.kernel, grid),
        grid.spacing(),
    )?;
    let (zf, defect) = zn_pass(
        lambda,
        &q_values(&config.traction, &fine),
        &n_lattice(&config.kernel, &fine),
        fine.spacing(),
    )?;
    if defect > config.tolerances.volterra {
        return Err(Error::Instability(format!(
            "stepping defect {:.3e} above tolerance {:.3e}",
            defect, config.tolerances.volterra
        )));
    }
    let z: Vec<f64> = (0..grid.n_points())
        .map(|i| (4.0 * zf[2 * i] - zc[i]) / 3.0)
        .collect();
    Ok(KernelSolution {
        mode: 0,
        lambda,
        t_horizon,
        z: SampledFunction::from_values(grid.clone(), z)?,
        residual: defect,
    })
}

/// Solve the kernels for a whole eigenvalue sequence; parallel over
/// modes, bit-identical to the sequential loop.
pub fn compute_zn_seq(
    lambdas: &[f64],
    config: &MaterialConfig,
    t_horizon: f64,
    grid: &Grid1D,
) -> Result<Vec<KernelSolution>> {
    let mut out: Vec<KernelSolution> = lambdas
        .par_iter()
        .map(|&lam| solve_zn(lam, config, t_horizon, grid))
        .collect::<Result<Vec<_>>>()?;
    for (i, k) in out.iter_mut().enumerate() {
        k.mode = i + 1;
    }
    Ok(out)
}

/// Lower-triangular sampled bivariate kernel K(x_i, x_j), j <= i,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct TriangularKernel {
    n: usize,
    data: Vec<f64>,
}

impl TriangularKernel {
    pub fn build<F: Fn(usize, usize) -> f64 + Sync>(n: usize, f: F) -> TriangularKernel {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..=i).map(|j| f(i, j)).collect())
            .collect();
        TriangularKernel {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row i as a slice of length i + 1.
    pub fn row(&self, i: usize) -> &[f64] {
        let off = i * (i + 1) / 2;
        &self.data[off..off + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)[j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// The full transformation chain at a fixed horizon `T`:
/// `H(t) = -N'(0) t - log Q(t)`, `a = e^{H/2} Q^{-1/4}`,
/// `x = L(t) = int_0^t sqrt(Q)`, `S = L(T)`, potential `V(x)`, memory
/// kernel `A(x, r)`, and the transformed initial data `y0`, `y1`.
#[derive(Debug, Clone)]
pub struct TransformChain {
    pub t_horizon: f64,
    pub time_grid: Grid1D,
    pub h: SampledFunction,
    pub a: SampledFunction,
    pub l: SampledFunction,
    pub s_end: f64,
    pub x_grid: Grid1D,
    /// Inverse of L, sampled on `x_grid`.
    pub minv: SampledFunction,
    pub v: SampledFunction,
    pub a_kernel: TriangularKernel,
    pub y0: f64,
    pub y1: f64,
    pub nprime0: f64,
    q: SampledFunction,
    vtilde: SampledFunction,
    nfun: SampledFunction,
    npfun: SampledFunction,
}

impl TransformChain {
    /// Invert L on an arbitrary grid over `[0, S]` by bisection against
    /// the interpolated L.
    pub fn minv_on(&self, grid: &Grid1D) -> Vec<f64> {
        let lv = self.l.values();
        let tg = self.time_grid.samples();
        grid.samples()
            .iter()
            .map(|&x| {
                if x <= 0.0 {
                    return 0.0;
                }
                if x >= self.s_end {
                    return self.t_horizon;
                }
                // bracketing cell in the monotone L samples
                let k = match lv.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                    Ok(k) => return tg[k],
                    Err(k) => k - 1,
                };
                let (mut lo, mut hi) = (tg[k], tg[k + 1]);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.l.eval(mid) < x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Sample the potential on an arbitrary grid over `[0, S]`.
    pub fn v_on(&self, grid: &Grid1D) -> Vec<f64> {
        self.minv_on(grid)
            .iter()
            .map(|&t| self.vtilde.eval(t))
            .collect()
    }

    /// The memory kernel `A(x, r)` of the transformed equation, sampled
    /// on the lower triangle of `grid`. The brace of its defining
    /// formula collapses to `N'(d) - N'(0) N(d)` with `d = M(x) - M(r)`
    /// because `H' + Q'/Q = -N'(0)` identically, so the diagonal is zero
    /// exactly: `N'(0) - N'(0) N(0) = 0`.
    pub fn a_kernel_on(&self, grid: &Grid1D) -> TriangularKernel {
        let minv = self.minv_on(grid);
        let ea: Vec<f64> = minv
            .iter()
            .map(|&t| (0.5 * self.h.eval(t)).exp() * self.q.eval(t).powf(0.25))
            .collect();
        let ec: Vec<f64> = minv
            .iter()
            .map(|&t| (-0.5 * self.h.eval(t)).exp() * self.q.eval(t).powf(-0.75))
            .collect();
        let np0 = self.nprime0;
        TriangularKernel::build(grid.n_points(), |i, j| {
            let d = minv[i] - minv[j];
            ea[i] * (self.npfun.eval(d) - np0 * self.nfun.eval(d)) * ec[j]
        })
    }
}

/// Build the chain for `config` at horizon `t_horizon`, on a time grid
/// with the config's resolution.
pub fn build_transform_chain(config: &MaterialConfig, t_horizon: f64) -> Result<TransformChain> {
    if !(t_horizon > 0.0) {
        return Err(Error::Validation("chain horizon must be positive".into()));
    }
    let nt = config.time_grid.n_points();
    let time_grid = Grid1D::new(0.0, t_horizon, nt)?;
    let qv = q_values(&config.traction, &time_grid);
    let q = SampledFunction::from_values(time_grid.clone(), qv.clone())?;
    let np0 = config.kernel.nprime0;

    // H(t) = -N'(0) t - log Q(t), pointwise exact given the Q samples
    let hv: Vec<f64> = time_grid
        .samples()
        .iter()
        .zip(&qv)
        .map(|(&t, &qk)| -np0 * t - qk.ln())
        .collect();
    let h = SampledFunction::from_values(time_grid.clone(), hv.clone())?;
    let av: Vec<f64> = hv
        .iter()
        .zip(&qv)
        .map(|(&hk, &qk)| (0.5 * hk).exp() * qk.powf(-0.25))
        .collect();
    let a = SampledFunction::from_values(time_grid.clone(), av.clone())?;

    // potential: Vtilde = e^{-H/2} Q^{-3/4} [a'' - H'' a - H' a']
    let hp = h.derivative();
    let hpp = hp.derivative();
    let ap = a.derivative();
    let app = ap.derivative();
    let vtv: Vec<f64> = (0..nt)
        .map(|k| {
            (-0.5 * hv[k]).exp()
                * qv[k].powf(-0.75)
                * (app.values()[k] - hpp.values()[k] * av[k] - hp.values()[k] * ap.values()[k])
        })
        .collect();
    let vtilde = SampledFunction::from_values(time_grid.clone(), vtv)?;

    // L(t) = int_0^t sqrt(Q); strictly increasing since Q >= p0 > 0
    let sqrtq = SampledFunction::from_values(
        time_grid.clone(),
        qv.iter().map(|&v| v.sqrt()).collect(),
    )?;
    let l = sqrtq.cumulative();
    let s_end = *l.values().last().unwrap();
    for w in l.values().windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Validation(
                "L(t) not strictly increasing; traction data degenerate".into(),
            ));
        }
    }

    let x_grid = Grid1D::new(0.0, s_end, nt)?;

    // N and N' resampled on the chain's own time lattice
    let npfun = config.kernel.m.resample(time_grid.clone());
    let nfun = primitive_n(&npfun);

    let pt = config.traction.p.eval(t_horizon);
    let ppt = config.traction.p.derivative().eval(t_horizon);
    let y0 = pt.powf(-0.25);
    let y1 = 0.25 * pt.powf(-1.75) * (ppt - 2.0 * np0 * pt);

    let mut chain = TransformChain {
        t_horizon,
        time_grid,
        h,
        a,
        l,
        s_end,
        x_grid: x_grid.clone(),
        minv: SampledFunction::constant(x_grid.clone(), 0.0),
        v: SampledFunction::constant(x_grid.clone(), 0.0),
        a_kernel: TriangularKernel { n: 0, data: vec![] },
        y0,
        y1,
        nprime0: np0,
        q,
        vtilde,
        nfun,
        npfun,
    };
    let minv = chain.minv_on(&x_grid);
    chain.minv = SampledFunction::from_values(x_grid.clone(), minv)?;
    chain.v = SampledFunction::from_values(x_grid.clone(), chain.v_on(&x_grid))?;
    chain.a_kernel = chain.a_kernel_on(&x_grid);
    Ok(chain)
}

/// A transformed mode `Y_n` on `[0, S]` with its comparison wave
/// `g_n(x) = y0 cos(lambda x) + (y1/lambda) sin(lambda x)`.
#[derive(Debug, Clone)]
pub struct TransformedMode {
    pub mode: usize,
    pub lambda: f64,
    pub y: SampledFunction,
    pub yprime: SampledFunction,
    pub g_n: SampledFunction,
}

/// One implicit-trapezoid pass for `Y'' + (lam^2 + V) Y = -lam^2 int_0^x A(x,r) Y(r) dr`.
/// The zero diagonal of A makes the memory integral explicit; only the
/// local stiffness term is implicit (2x2 solve folded in closed form).
fn yn_pass(
    lambda: f64,
    v: &[f64],
    atri: &TriangularKernel,
    hx: f64,
    y0: f64,
    y1: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = v.len();
    let lam2 = lambda * lambda;
    let mut y = vec![0.0; m];
    let mut yp = vec![0.0; m];
    y[0] = y0;
    yp[0] = y1;
    let mut g_prev = -(lam2 + v[0]) * y0;
    let amax = atri.max_abs();
    let vmax = v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let lam_eff = lambda.max(1.0);
    for k in 0..m - 1 {
        // full trapezoid of A(x_{k+1}, .) Y over [0, x_{k+1}]: the j = k+1
        // term carries A(x,x) = 0, so nothing implicit hides here
        let row = atri.row(k + 1);
        let mut integ = 0.5 * row[0] * y[0];
        for j in 1..=k {
            integ += row[j] * y[j];
        }
        integ *= hx;
        let w = lam2 + v[k + 1];
        let denom = 1.0 + hx * hx * w / 4.0;
        let ypn = (yp[k] * (1.0 - hx * hx * w / 4.0) + 0.5 * hx * (g_prev - lam2 * integ)
            - 0.5 * hx * w * y[k])
            / denom;
        let yn = y[k] + 0.5 * hx * (yp[k] + ypn);
        y[k + 1] = yn;
        yp[k + 1] = ypn;
        g_prev = -w * yn - lam2 * integ;
        // a-priori bound from the Volterra integral form of the equation
        let x = (k + 1) as f64 * hx;
        let expo = x * (vmax / lam_eff + lam_eff * amax * x);
        let cap = (y0.abs() + y1.abs() / lam_eff) * if expo < 700.0 { expo.exp() } else { f64::INFINITY };
        if !yn.is_finite() || yn.abs() > cap * (1.0 + 1e-9) + 1e-9 {
            return Err(Error::Instability(format!(
                "transformed mode exceeds its a-priori bound at x = {:.6} (lambda = {}); refine the grid",
                x, lambda
            )));
        }
    }
    Ok((y, yp))
}

fn g_wave(lambda: f64, y0: f64, y1: f64, grid: &Grid1D) -> Vec<f64> {
    grid.samples()
        .iter()
        .map(|&x| {
            if lambda == 0.0 {
                y0 + y1 * x
            } else {
                y0 * (lambda * x).cos() + y1 / lambda * (lambda * x).sin()
            }
        })
        .collect()
}

/// Solve a single transformed mode on `grid_x` (must span `[0, S]`).
pub fn solve_yn(lambda: f64, chain: &TransformChain, grid_x: &Grid1D) -> Result<TransformedMode> {
    let fine = refine(grid_x);
    let (ac, af) = (chain.a_kernel_on(grid_x), chain.a_kernel_on(&fine));
    solve_yn_with(lambda, chain, grid_x, &chain.v_on(grid_x), &ac, &fine, &chain.v_on(&fine), &af)
}

#[allow(clippy::too_many_arguments)]
fn solve_yn_with(
    lambda: f64,
    chain: &TransformChain,
    grid_x: &Grid1D,
    vc: &[f64],
    ac: &TriangularKernel,
    fine: &Grid1D,
    vf: &[f64],
    af: &TriangularKernel,
) -> Result<TransformedMode> {
    if grid_x.start().abs() > 1e-12 || (grid_x.end() - chain.s_end).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "transformed grid [{}, {}] does not span [0, {}]",
            grid_x.start(),
            grid_x.end(),
            chain.s_end
        )));
    }
    let (yc, ypc) = yn_pass(lambda, vc, ac, grid_x.spacing(), chain.y0, chain.y1)?;
    let (yf, ypf) = yn_pass(lambda, vf, af, fine.spacing(), chain.y0, chain.y1)?;
    let n = grid_x.n_points();
    let y: Vec<f64> = (0..n).map(|i| (4.0 * yf[2 * i] - yc[i]) / 3.0).collect();
    let yp: Vec<f64> = (0..n).map(|i| (4.0 * ypf[2 * i] - ypc[i]) / 3.0).collect();
    Ok(TransformedMode {
        mode: 0,
        lambda,
        y: SampledFunction::from_values(grid_x.clone(), y)?,
        yprime: SampledFunction::from_values(grid_x.clone(), yp)?,
        g_n: SampledFunction::from_values(grid_x.clone(), g_wave(lambda, chain.y0, chain.y1, grid_x))?,
    })
}

/// Solve many transformed modes sharing one A-kernel precomputation.
pub fn solve_yn_batch(
    lambdas: &[f64],
    chain: &TransformChain,
    grid_x: &Grid1D,
) -> Result<Vec<TransformedMode>> {
    let fine = refine(grid_x);
    let vc = chain.v_on(grid_x);
    let vf = chain.v_on(&fine);
    let ac = chain.a_kernel_on(grid_x);
    let af = chain.a_kernel_on(&fine);
    let mut out: Vec<TransformedMode> = lambdas
        .par_iter()
        .map(|&lam| solve_yn_with(lam, chain, grid_x, &vc, &ac, &fine, &vf, &af))
        .collect::<Result<Vec<_>>>()?;
    for (i, m) in out.iter_mut().enumerate() {
        m.mode = i + 1;
    }
    Ok(out)
}

/// The bivariate kernels `C(x, s) = N(M(x)-M(s)) e^{N'(0) M(s)/2} Q^{-1/4}(M(s))`
/// and `B = C / C(x, x)` on the chain's x-grid.
#[derive(Debug, Clone)]
pub struct CBKernels {
    pub x_grid: Grid1D,
    pub c: TriangularKernel,
    pub b: TriangularKernel,
}

pub fn build_c_and_b(chain: &TransformChain, kernel: &MemoryKernel) -> Result<CBKernels> {
    let grid = chain.x_grid.clone();
    let minv = chain.minv.values().to_vec();
    let np0 = kernel.nprime0;
    let col: Vec<f64> = minv
        .iter()
        .map(|&t| (0.5 * np0 * t).exp() * chain.q.eval(t).powf(-0.25))
        .collect();
    let c = TriangularKernel::build(grid.n_points(), |i, j| {
        chain.nfun.eval(minv[i] - minv[j]) * col[j]
    });
    for i in 0..grid.n_points() {
        if !(c.get(i, i) > 0.0) {
            return Err(Error::Validation(format!(
                "C(x, x) not strictly positive at node {}",
                i
            )));
        }
    }
    let b = TriangularKernel::build(grid.n_points(), |i, j| c.get(i, j) / c.get(i, i));
    Ok(CBKernels {
        x_grid: grid,
        c,
        b,
    })
}

/// `Z_n(x) = phi_n'(0) int_0^x B(x, s) Y_n(s) ds` by product trapezoid.
pub fn apply_b_kernel(
    slope0: f64,
    mode: &TransformedMode,
    b: &TriangularKernel,
    grid_x: &Grid1D,
) -> Result<SampledFunction> {
    let y = mode.y.values();
    if y.len() != b.n() || grid_x.n_points() != b.n() {
        return Err(Error::GridMismatch(
            "B kernel and transformed mode sampled on different grids".into(),
        ));
    }
    let h = grid_x.spacing();
    let mut z = vec![0.0; y.len()];
    for i in 1..y.len() {
        let row = b.row(i);
        let mut acc = 0.5 * row[0] * y[0] + 0.5 * row[i] * y[i];
        for j in 1..i {
            acc += row[j] * y[j];
        }
        z[i] = slope0 * h * acc;
    }
    SampledFunction::from_values(grid_x.clone(), z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::MaterialConfig;

    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

    fn constant_cfg(p: f64, t_max: f64, nt: usize) -> MaterialConfig {
        MaterialConfig::from_exprs(&format!("{}", p), "1", "0", 51, nt, t_max, 4).unwrap()
    }

    #[test]
    fn zero_lambda_gives_constant_kernel() {
        let cfg = constant_cfg(1.0, 2.0, 401);
        let sol = solve_zn(0.0, &cfg, 2.0, &cfg.time_grid).unwrap();
        for &v in sol.z.values() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn memoryless_kernel_is_cosine() {
        // M = 0, P = p constant: z'' = -lam^2 p z, z(0)=1, z'(0)=0
        for &(p, lam) in &[(1.0, 2.0), (4.0, 8.0)] {
            let cfg = constant_cfg(p, 2.0, 1201);
            let sol = solve_zn(lam, &cfg, 2.0, &cfg.time_grid).unwrap();
            let om = lam * p.sqrt();
            for (&t, &z) in cfg.time_grid.samples().iter().zip(sol.z.values()) {
                assert!(
                    (z - (om * t).cos()).abs() < 5e-7,
                    "p={} lam={} t={} err={}",
                    p,
                    lam,
                    t,
                    (z - (om * t).cos()).abs()
                );
            }
        }
    }

    #[test]
    fn exponential_kernel_matches_damped_oscillator() {
        // M = -g e^{-g t} (N = e^{-g t}), P = 1:
        // z'' + g z' + lam^2 z = 0, z(0)=1, z'(0)=0
        let g = 0.5;
        let lam = 3.0;
        let cfg =
            MaterialConfig::from_exprs("1", "1", "-0.5*exp(-0.5*t)", 51, 1501, 2.5, 4).unwrap();
        let sol = solve_zn(lam, &cfg, 2.5, &cfg.time_grid).unwrap();
        let om = (lam * lam - 0.25 * g * g).sqrt();
        for (&t, &z) in cfg.time_grid.samples().iter().zip(sol.z.values()) {
            let exact = (-0.5 * g * t).exp() * ((om * t).cos() + 0.5 * g / om * (om * t).sin());
            assert!((z - exact).abs() < 1e-6, "t={} err={:e}", t, (z - exact).abs());
        }
    }

    #[test]
    fn trivial_chain_is_identity() {
        // P = 1, M = 0: H = 0, a = 1, L = t, V = 0, A = 0, y0 = 1, y1 = 0
        let cfg = constant_cfg(1.0, 2.0, 601);
        let chain = build_transform_chain(&cfg, 2.0).unwrap();
        assert!((chain.s_end - 2.0).abs() < 1e-12);
        assert_eq!(chain.y0, 1.0);
        assert!(chain.y1.abs() < 1e-12);
        for (&hv, &av) in chain.h.values().iter().zip(chain.a.values()) {
            assert!(hv.abs() < 1e-14);
            assert!((av - 1.0).abs() < 1e-14);
        }
        for (&t, &lv) in chain.time_grid.samples().iter().zip(chain.l.values()) {
            assert!((lv - t).abs() < 1e-12);
        }
        for &vv in chain.v.values() {
            assert!(vv.abs() < 1e-10, "V = {}", vv);
        }
        assert!(chain.a_kernel.max_abs() < 1e-14);
    }

    #[test]
    fn scaled_chain_closed_form() {
        // P = 4, M = 0: H = -log 4, L = 2t, S = 2T, y0 = 4^{-1/4}, y1 = 0
        let cfg = constant_cfg(4.0, 1.5, 601);
        let chain = build_transform_chain(&cfg, 1.5).unwrap();
        assert!((chain.s_end - 3.0).abs() < 1e-10);
        assert!((chain.y0 - 0.25f64.powf(0.25)).abs() < 1e-12);
        assert!(chain.y1.abs() < 1e-10);
        for &hv in chain.h.values() {
            assert!((hv + 4.0f64.ln()).abs() < 1e-12);
        }
        // memoryless scaled case: Y(x) = y0 cos(lam x), z(t) = cos(2 lam t)
        let lam = 3.0;
        let ym = solve_yn(lam, &chain, &chain.x_grid).unwrap();
        for (&x, &y) in chain.x_grid.samples().iter().zip(ym.y.values()) {
            assert!((y - chain.y0 * (lam * x).cos()).abs() < 1e-7, "x={}", x);
        }
    }

    #[test]
    fn keystone_identity_links_z_and_y() {
        // z_n(t) = e^{-H(t)} a(t) Y_n(L(t)) certifies the whole chain
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1",
            "-0.5*exp(-0.5*t)",
            51,
            1201,
            2.2,
            4,
        )
        .unwrap();
        let t_hor = 2.2;
        let chain = build_transform_chain(&cfg, t_hor).unwrap();
        for &lam in &[1.0, 5.0, 16.0] {
            let zs = solve_zn(lam, &cfg, t_hor, &cfg.time_grid).unwrap();
            let ym = solve_yn(lam, &chain, &chain.x_grid).unwrap();
            let zmax = zs.z.max_abs();
            for (i, (&t, &zv)) in cfg
                .time_grid
                .samples()
                .iter()
                .zip(zs.z.values())
                .enumerate()
            {
                let pred =
                    (-chain.h.values()[i]).exp() * chain.a.values()[i] * ym.y.eval(chain.l.values()[i]);
                assert!(
                    (zv - pred).abs() <= 1e-4 * zmax,
                    "lam={} t={} err={:e}",
                    lam,
                    t,
                    (zv - pred).abs()
                );
            }
        }
    }

    #[test]
    fn diagonal_identities_exact() {
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1",
            "-0.5*exp(-0.5*t)",
            51,
            601,
            2.0,
            4,
        )
        .unwrap();
        let chain = build_transform_chain(&cfg, 2.0).unwrap();
        for i in 0..chain.x_grid.n_points() {
            assert_eq!(chain.a_kernel.get(i, i), 0.0);
        }
        let cb = build_c_and_b(&chain, &cfg.kernel).unwrap();
        for i in 0..chain.x_grid.n_points() {
            assert_eq!(cb.b.get(i, i), 1.0);
            assert!(cb.c.get(i, i) > 0.0);
        }
    }

    #[test]
    fn c_kernel_closed_form_exponential() {
        // P = 1 so L = t and M(x) = x; C(x,s) = e^{-g(x-s)} e^{-g s/2}
        let g = 0.5;
        let cfg =
            MaterialConfig::from_exprs("1", "1", "-0.5*exp(-0.5*t)", 51, 1501, 2.0, 4).unwrap();
        let chain = build_transform_chain(&cfg, 2.0).unwrap();
        let cb = build_c_and_b(&chain, &cfg.kernel).unwrap();
        let n = chain.x_grid.n_points();
        for &(i, j) in &[
            (n - 1, 0),
            (n - 1, n / 2),
            (n / 2, n / 4),
            (n / 3, n / 7),
            (n - 1, n - 1),
        ] {
            let x = chain.x_grid.samples()[i];
            let s = chain.x_grid.samples()[j];
            let exact = (-g * (x - s)).exp() * (-0.5 * g * s).exp();
            assert!(
                (cb.c.get(i, j) - exact).abs() < 1e-5,
                "C({}, {}) = {} vs {}",
                x,
                s,
                cb.c.get(i, j),
                exact
            );
        }
    }

    #[test]
    fn b_transform_reproduces_sines_in_constant_case() {
        // P = 1, M = 0, slope sqrt(2/pi) n: Z_n(x) = sqrt(2/pi) sin(n x)
        let cfg = constant_cfg(1.0, 2.0, 801);
        let chain = build_transform_chain(&cfg, 2.0).unwrap();
        let cb = build_c_and_b(&chain, &cfg.kernel).unwrap();
        for n in [1usize, 3] {
            let lam = n as f64;
            let ym = solve_yn(lam, &chain, &chain.x_grid).unwrap();
            let z = apply_b_kernel(SQRT_2_OVER_PI * lam, &ym, &cb.b, &chain.x_grid).unwrap();
            for (&x, &zv) in chain.x_grid.samples().iter().zip(z.values()) {
                let exact = SQRT_2_OVER_PI * (lam * x).sin();
                assert!((zv - exact).abs() < 2e-4, "n={} x={} err={:e}", n, x, (zv - exact).abs());
            }
        }
    }

    #[test]
    fn mode_sweep_matches_single_solves() {
        let cfg = MaterialConfig::from_exprs(
            "1+0.3*sin(t)",
            "1",
            "-0.5*exp(-0.5*t)",
            51,
            401,
            2.0,
            4,
        )
        .unwrap();
        let lambdas = [1.0, 2.1, 3.3];
        let seq = compute_zn_seq(&lambdas, &cfg, 2.0, &cfg.time_grid).unwrap();
        for (i, &lam) in lambdas.iter().enumerate() {
            assert_eq!(seq[i].mode, i + 1);
            let single = solve_zn(lam, &cfg, 2.0, &cfg.time_grid).unwrap();
            assert_eq!(seq[i].z.values(), single.z.values());
        }
    }
}
