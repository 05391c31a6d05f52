//! Numerical Riesz-sequence diagnostics for the moment family: Gram
//! spectra over a horizon sweep (frame bounds degrade below T0) and
//! quadratic-closeness deficiency sums against the unperturbed sines.

use viscostring::material::MaterialConfig;
use viscostring::moment::{compute_t0, riesz_diagnostics};

fn main() -> viscostring::Result<()> {
    let probe = MaterialConfig::from_exprs("1+0.3*sin(t)", "1", "0", 51, 4001, 6.0, 1)?;
    let t0 = compute_t0(&probe.traction)?;
    println!("T0 = {:.6}", t0);

    let cfg = MaterialConfig::from_exprs(
        "1+0.3*sin(t)",
        "1+0.2*sin(xi)",
        "-0.5*exp(-0.5*t)",
        401,
        1201,
        4.5,
        8,
    )?;
    let t_list = [0.8 * t0, 1.0 * t0, 1.2 * t0];
    let n_list = [4, 8];
    let report = riesz_diagnostics(&cfg, &t_list, &n_list)?;

    println!("\nGram spectra (frame-bound estimates):");
    println!("   T        n   eig_min      eig_max      cond");
    for r in &report.gram_rows {
        println!(
            "{:.4}   {:2}   {:.4e}   {:.4e}   {:.3e}",
            r.t_horizon, r.n_modes, r.eig_min, r.eig_max, r.cond
        );
    }

    println!("\ndeficiency sums D_N = sum_n ||Z_n - y0 sqrt(2/pi) sin n.||^2:");
    println!("   T        S        N   D_N");
    for d in &report.deficiency_rows {
        println!(
            "{:.4}   {:.4}   {:2}   {:.4e}",
            d.t_horizon, d.s_end, d.n, d.d_n
        );
    }
    Ok(())
}
