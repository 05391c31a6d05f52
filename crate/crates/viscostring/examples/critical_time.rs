//! The critical control horizon T0 solves int_0^{T0} sqrt(P(u)) du = pi.
//! Below it the moment family degenerates and boundary control fails.

use viscostring::material::MaterialConfig;
use viscostring::moment::compute_t0;

fn t0_of(p_expr: &str, window: f64) -> viscostring::Result<f64> {
    let cfg = MaterialConfig::from_exprs(p_expr, "1", "0", 51, 8001, window, 1)?;
    compute_t0(&cfg.traction)
}

fn main() -> viscostring::Result<()> {
    let pi = std::f64::consts::PI;

    // Two closed forms to calibrate trust:
    let t_const = t0_of("1", 4.0)?;
    println!("P = 1:        T0 = {:.12}  (exact pi,                error {:.1e})",
        t_const, (t_const - pi).abs());

    let t_quad = t0_of("(1+t)^2", 2.0)?;
    let exact = -1.0 + (1.0 + 2.0 * pi).sqrt();
    println!("P = (1+t)^2:  T0 = {:.12}  (exact -1+sqrt(1+2pi),    error {:.1e})",
        t_quad, (t_quad - exact).abs());

    // And a traction with no closed form:
    let t_osc = t0_of("1+0.3*sin(t)", 6.0)?;
    println!("P = 1+0.3sin: T0 = {:.12}", t_osc);

    // A window that ends before the integral reaches pi is an error,
    // not a guess:
    match t0_of("1", 2.0) {
        Err(e) => println!("\nwindow [0, 2] too short, as it should be: {}", e),
        Ok(v) => println!("\nunexpected: {}", v),
    }
    Ok(())
}
