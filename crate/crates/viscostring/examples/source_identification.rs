//! Recover a distributed source shape b(xi) from boundary observations:
//! one specially designed input per mode reads off one Fourier
//! coefficient. The measurement oracle simulates at twice the inversion
//! resolution so the round trip is not an inverse crime.

use viscostring::identify::{identify_source, SimulatorOracle};
use viscostring::material::MaterialConfig;
use viscostring::moment::compute_t0;
use viscostring::spectral::solve_eigensystem;

fn main() -> viscostring::Result<()> {
    let probe = MaterialConfig::from_exprs("1+0.3*sin(t)", "1", "0", 51, 4001, 6.0, 1)?;
    let t_hor = 1.2 * compute_t0(&probe.traction)?;
    let n_modes = 8;
    let cfg = MaterialConfig::from_exprs(
        "1+0.3*sin(t)",
        "1+0.2*sin(xi)",
        "-0.5*exp(-0.5*t)",
        401,
        801,
        t_hor,
        n_modes,
    )?;

    // hidden truth: indicator of [1, 2]
    let truth: Vec<f64> = cfg
        .space_grid
        .samples()
        .iter()
        .map(|&x| if (1.0..=2.0).contains(&x) { 1.0 } else { 0.0 })
        .collect();
    let oracle = SimulatorOracle::new(&cfg, t_hor, n_modes, &truth)?;

    let est = identify_source(&oracle, &cfg, t_hor, n_modes, 0.0)?;

    let basis = solve_eigensystem(&cfg.density, n_modes, &cfg.space_grid)?;
    let true_coeffs = basis.project(&truth);
    println!(" k   true b_k        recovered b_k   |diff|");
    for k in 0..n_modes {
        println!(
            "{:2}   {:+.8}   {:+.8}   {:.2e}",
            k + 1,
            true_coeffs[k],
            est.coefficients[k],
            (true_coeffs[k] - est.coefficients[k]).abs()
        );
    }

    let projected = basis.synthesize(&true_coeffs);
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in est.b_hat.iter().zip(&projected) {
        num += (a - b) * (a - b);
        den += b * b;
    }
    println!(
        "\nprojected relative L2 error = {:.3e} over {} modes",
        (num / den).sqrt(),
        n_modes
    );
    Ok(())
}
