//! The per-mode Volterra kernel z_n(t; T) and its Liouville-type
//! reduction: z_n(t) = e^{-H(t)} a(t) Y_n(L(t)), where Y_n solves a
//! Schroedinger-form equation with a memory term whose kernel A(x, r)
//! vanishes on the diagonal.

use viscostring::material::MaterialConfig;
use viscostring::spectral::solve_eigensystem;
use viscostring::volterra::{build_transform_chain, compute_zn_seq, solve_yn_batch};

fn main() -> viscostring::Result<()> {
    let t_hor = 2.2;
    let cfg = MaterialConfig::from_exprs(
        "1+0.3*sin(t)",
        "1+0.2*sin(xi)",
        "-0.5*exp(-0.5*t)",
        401,
        1201,
        t_hor,
        6,
    )?;
    let basis = solve_eigensystem(&cfg.density, cfg.n_modes, &cfg.space_grid)?;

    // Direct kernel solves:
    let zs = compute_zn_seq(&basis.lambdas, &cfg, t_hor, &cfg.time_grid)?;

    // The same kernels through the transformation chain:
    let chain = build_transform_chain(&cfg, t_hor)?;
    println!(
        "chain: S = L(T) = {:.6}, y0 = {:.6}, y1 = {:.6}, max |A| = {:.3e}",
        chain.s_end,
        chain.y0,
        chain.y1,
        chain.a_kernel.max_abs()
    );
    let modes = solve_yn_batch(&basis.lambdas, &chain, &chain.x_grid)?;

    println!("\n n   lambda_n    max|z_n|    keystone defect");
    for (z, y) in zs.iter().zip(&modes) {
        let mut defect = 0.0f64;
        for (k, _) in cfg.time_grid.samples().iter().enumerate() {
            let lhs = z.z.values()[k];
            let rhs = (-chain.h.values()[k]).exp()
                * chain.a.values()[k]
                * y.y.eval(chain.l.values()[k]);
            defect = defect.max((lhs - rhs).abs());
        }
        println!(
            "{:2}   {:.6}   {:.4}     {:.3e}",
            z.mode,
            z.lambda,
            z.z.max_abs(),
            defect
        );
    }
    Ok(())
}
