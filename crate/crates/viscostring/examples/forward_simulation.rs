//! Forward simulation under combined boundary and distributed forcing,
//! cross-checked against the closed kernel representation of w_n(T).

use viscostring::material::{MaterialConfig, SampledFunction};
use viscostring::simulate::{simulate_modal, wn_final_via_kernels, Forcing};
use viscostring::spectral::solve_eigensystem;

fn main() -> viscostring::Result<()> {
    let cfg = MaterialConfig::from_exprs(
        "1+0.3*sin(t)",
        "1+0.2*sin(xi)",
        "-0.5*exp(-0.5*t)",
        401,
        1201,
        2.5,
        8,
    )?;
    let basis = solve_eigensystem(&cfg.density, cfg.n_modes, &cfg.space_grid)?;

    let f = SampledFunction::from_expr("sin(3*t)*exp(-0.2*t)", "t", cfg.time_grid.clone())?;
    let g = SampledFunction::from_expr("t*exp(-t)", "t", cfg.time_grid.clone())?;
    // source shape: indicator of [1, 2], projected onto the modes
    let b_nodal: Vec<f64> = cfg
        .space_grid
        .samples()
        .iter()
        .map(|&x| if (1.0..=2.0).contains(&x) { 1.0 } else { 0.0 })
        .collect();
    let forcing = Forcing::both(f, basis.project(&b_nodal), g);

    let traj = simulate_modal(&cfg, &basis, &forcing)?;
    let rep = wn_final_via_kernels(&cfg, &basis, &forcing)?;

    println!(" n   w_n(T) direct     w_n(T) representation   |diff|");
    for n in 0..basis.n_modes() {
        let direct = *traj.w_modal[n].last().unwrap();
        println!(
            "{:2}   {:+.10e}   {:+.10e}   {:.2e}",
            n + 1,
            direct,
            rep[n],
            (direct - rep[n]).abs()
        );
    }
    println!("\nmodes in the truncation: {}", traj.truncation);
    println!(
        "boundary observation eta(T) = {:+.6e}",
        traj.eta.values().last().unwrap()
    );
    Ok(())
}
