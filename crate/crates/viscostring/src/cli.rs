//! Command-line driver: config ingestion, the six subcommands, and
//! reproducible CSV/JSON emission.

use crate::error::{Error, Result};
use crate::identify::{identify_source, SimulatorOracle, TraceOracle};
use crate::material::{self, Grid1D, MaterialConfig, SampledFunction};
use crate::moment::{
    build_moment_system, compute_t0, riesz_diagnostics, solve_moment_problem,
};
use crate::simulate::{simulate_modal, wn_final_via_kernels, Forcing};
use crate::spectral::{check_asymptotics, solve_eigensystem};
use crate::volterra::compute_zn_seq;
use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "viscostring",
    version,
    about = "Modal controllability and source identification for a viscoelastic string"
)]
pub struct Cli {
    /// Problem definition (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Override the solver tolerance from the config.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Override the config seed (recorded in the manifest).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Dirichlet eigensystem and asymptotics diagnostics.
    Eig,
    /// Critical control time T0 with int_0^{T0} sqrt(P) = pi.
    T0,
    /// Minimal-norm boundary control steering w(., T) to a target shape.
    Control {
        /// Target shape: mode:k | indicator:a,b | expr:<e(xi)> | file:<path>
        #[arg(long)]
        target: String,
        /// Control horizon (default: the config horizon).
        #[arg(long)]
        t_horizon: Option<f64>,
        /// Ridge shift for exploratory short-horizon runs.
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
        /// Forward-simulate the control and report the round-trip error.
        #[arg(long)]
        verify: bool,
    },
    /// Forward simulation under boundary and/or source forcing.
    Simulate {
        /// Boundary control f(t): expr:<e(t)> | file:<path>
        #[arg(long)]
        boundary: Option<String>,
        /// Source shape b(xi): mode:k | indicator:a,b | expr:<e(xi)> | file:<path>
        #[arg(long)]
        source: Option<String>,
        /// Source amplitude g(t): expr:<e(t)> | file:<path>
        #[arg(long)]
        amplitude: Option<String>,
        /// Recompute w_n(T) via the kernel representation and report the gap.
        #[arg(long)]
        cross_check: bool,
        /// Also dump the full modal matrix.
        #[arg(long)]
        dump_modal: bool,
    },
    /// Reconstruct the source shape from per-mode observations.
    Identify {
        /// Hidden truth for the in-process oracle:
        /// mode:k | indicator:a,b | expr:<e(xi)> | file:<path>
        #[arg(long)]
        truth: Option<String>,
        /// Directory of measured traces (eta_k####.csv + manifest.json).
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long)]
        t_horizon: Option<f64>,
        #[arg(long)]
        n_modes: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        ridge: f64,
    },
    /// Riesz diagnostics: Gram spectra and deficiency sums over sweeps.
    Diagnostics {
        /// Comma-separated horizons, e.g. 2.5,3.2,4.0
        #[arg(long)]
        t_sweep: String,
        /// Comma-separated truncation sizes, e.g. 8,16,32
        #[arg(long)]
        n_sweep: String,
    },
}

#[derive(Serialize)]
struct RunManifest {
    config_hash: String,
    command: String,
    tool_version: String,
    seed: u64,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
}

struct Emitter {
    out_dir: PathBuf,
    outputs: Vec<String>,
    timings: Vec<(String, f64)>,
    stage_start: Instant,
}

impl Emitter {
    fn new(out_dir: &PathBuf) -> Result<Emitter> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Emitter {
            out_dir: out_dir.clone(),
            outputs: Vec::new(),
            timings: Vec::new(),
            stage_start: Instant::now(),
        })
    }

    fn stage(&mut self, name: &str) {
        self.timings
            .push((name.to_string(), self.stage_start.elapsed().as_secs_f64()));
        self.stage_start = Instant::now();
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, content)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, config_hash: &str, seed: u64) -> Result<()> {
        self.stage("emit");
        let manifest = RunManifest {
            config_hash: config_hash.to_string(),
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            outputs: self.outputs.clone(),
            timings: self.timings.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .expect("manifest serialization cannot fail");
        self.write("manifest.json", &text)
    }
}

fn fmt(v: f64) -> String {
    format!("{:.16e}", v)
}

fn parse_list_f64(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{}` in sweep list", p)))
        })
        .collect()
}

fn parse_list_usize(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer `{}` in sweep list", p)))
        })
        .collect()
}

/// Nodal samples from a file: either one value per line or `x,value`
/// lines (with or without a header); the count must match the grid.
fn read_nodal_file(path: &str, grid: &Grid1D) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut vals = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let last = line.split(',').next_back().unwrap().trim();
        match last.parse::<f64>() {
            Ok(v) => vals.push(v),
            Err(_) => {
                if vals.is_empty() {
                    continue; // header line
                }
                return Err(Error::Parse(format!("bad sample line `{}` in {}", line, path)));
            }
        }
    }
    if vals.len() != grid.n_points() {
        return Err(Error::GridMismatch(format!(
            "{} holds {} samples but the grid has {} nodes",
            path,
            vals.len(),
            grid.n_points()
        )));
    }
    Ok(vals)
}

/// Spatial shape spec: mode:k | indicator:a,b | expr:<e(xi)> | file:<path>.
/// `mode:k` needs the modal basis and is resolved by the caller.
pub fn parse_space_spec(
    spec: &str,
    grid: &Grid1D,
    phi_lookup: Option<&dyn Fn(usize) -> Result<Vec<f64>>>,
) -> Result<Vec<f64>> {
    if let Some(k) = spec.strip_prefix("mode:") {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad mode index in `{}`", spec)))?;
        let lookup = phi_lookup.ok_or_else(|| {
            Error::Validation("mode: specs are not accepted here".into())
        })?;
        return lookup(k);
    }
    if let Some(ab) = spec.strip_prefix("indicator:") {
        let parts: Vec<f64> = parse_list_f64(ab)?;
        if parts.len() != 2 || parts[0] >= parts[1] {
            return Err(Error::Parse(format!(
                "indicator spec needs `a,b` with a < b, got `{}`",
                spec
            )));
        }
        return Ok(grid
            .samples()
            .iter()
            .map(|&x| if x >= parts[0] && x <= parts[1] { 1.0 } else { 0.0 })
            .collect());
    }
    if let Some(e) = spec.strip_prefix("expr:") {
        return Ok(SampledFunction::from_expr(e, "xi", grid.clone())?
            .values()
            .to_vec());
    }
    if let Some(p) = spec.strip_prefix("file:") {
        return read_nodal_file(p, grid);
    }
    Err(Error::Parse(format!(
        "unknown shape spec `{}` (expected mode:k, indicator:a,b, expr:<e>, file:<path>)",
        spec
    )))
}

/// Time-function spec: expr:<e(t)> | file:<path>.
pub fn parse_time_spec(spec: &str, grid: &Grid1D) -> Result<SampledFunction> {
    if let Some(e) = spec.strip_prefix("expr:") {
        return SampledFunction::from_expr(e, "t", grid.clone());
    }
    if let Some(p) = spec.strip_prefix("file:") {
        let vals = read_nodal_file(p, grid)?;
        return SampledFunction::from_values(grid.clone(), vals);
    }
    Err(Error::Parse(format!(
        "unknown time spec `{}` (expected expr:<e> or file:<path>)",
        spec
    )))
}

fn load(cli: &Cli) -> Result<(MaterialConfig, String)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Validation("missing --config <path>".into()))?;
    let text = std::fs::read_to_string(path)?;
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    let mut cfg = material::parse_config(&text)?;
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) {
            return Err(Error::Validation("--tol must be positive".into()));
        }
        cfg.tolerances.quad = tol;
        cfg.tolerances.volterra = tol;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((cfg, hash))
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        // ignore the error when a global pool already exists (e.g. tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let (cfg, hash) = load(cli)?;
    let mut em = Emitter::new(&cli.out)?;
    match &cli.command {
        Command::Eig => cmd_eig(&cfg, &mut em)?,
        Command::T0 => cmd_t0(&cfg, &mut em)?,
        Command::Control {
            target,
            t_horizon,
            ridge,
            verify,
        } => cmd_control(&cfg, target, *t_horizon, *ridge, *verify, &mut em)?,
        Command::Simulate {
            boundary,
            source,
            amplitude,
            cross_check,
            dump_modal,
        } => cmd_simulate(
            &cfg,
            boundary.as_deref(),
            source.as_deref(),
            amplitude.as_deref(),
            *cross_check,
            *dump_modal,
            &mut em,
        )?,
        Command::Identify {
            truth,
            traces,
            t_horizon,
            n_modes,
            ridge,
        } => cmd_identify(
            &cfg,
            truth.as_deref(),
            traces.as_deref(),
            *t_horizon,
            *n_modes,
            *ridge,
            &mut em,
        )?,
        Command::Diagnostics { t_sweep, n_sweep } => {
            cmd_diagnostics(&cfg, t_sweep, n_sweep, &mut em)?
        }
    }
    let name = match &cli.command {
        Command::Eig => "eig",
        Command::T0 => "t0",
        Command::Control { .. } => "control",
        Command::Simulate { .. } => "simulate",
        Command::Identify { .. } => "identify",
        Command::Diagnostics { .. } => "diagnostics",
    };
    em.finish(name, &hash, cfg.seed)
}

fn cmd_eig(cfg: &MaterialConfig, em: &mut Emitter) -> Result<()> {
    let basis = solve_eigensystem(&cfg.density, cfg.n_modes, &cfg.space_grid)?;
    em.stage("eigensystem");
    let mut eig = String::from("n,lambda,slope0,rayleigh\n");
    for n in 0..basis.n_modes() {
        eig.push_str(&format!(
            "{},{},{},{}\n",
            n + 1,
            fmt(basis.lambdas[n]),
            fmt(basis.slopes0[n]),
            fmt(basis.rayleigh[n])
        ));
    }
    em.write("eig.csv", &eig)?;

    let mut phis = String::from("n");
    for &x in cfg.space_grid.samples() {
        phis.push_str(&format!(",{}", fmt(x)));
    }
    phis.push('\n');
    for (n, phi) in basis.phis.iter().enumerate() {
        phis.push_str(&format!("{}", n + 1));
        for &v in phi {
            phis.push_str(&format!(",{}", fmt(v)));
        }
        phis.push('\n');
    }
    em.write("phis.csv", &phis)?;

    let rep = check_asymptotics(&basis);
    let mut asy = format!(
        "# applicable={} travel_time={} sup_h={} pass={}\nn,h_n,slope_deficit\n",
        rep.applicable,
        fmt(rep.travel_time),
        fmt(rep.sup_h),
        rep.pass
    );
    for n in 0..rep.h_n.len() {
        asy.push_str(&format!(
            "{},{},{}\n",
            n + 1,
            fmt(rep.h_n[n]),
            fmt(rep.slope_deficits[n])
        ));
    }
    em.write("asymptotics.csv", &asy)?;
    Ok(())
}

fn cmd_t0(cfg: &MaterialConfig, em: &mut Emitter) -> Result<()> {
    let t0 = compute_t0(&cfg.traction)?;
    em.stage("t0");
    println!("T0 = {:.12}", t0);
    em.write("t0.json", &format!("{{\n  \"t0\": {}\n}}\n", fmt(t0)))
}

fn cmd_control(
    cfg: &MaterialConfig,
    target: &str,
    t_horizon: Option<f64>,
    ridge: f64,
    verify: bool,
    em: &mut Emitter,
) -> Result<()> {
    let t_hor = t_horizon.unwrap_or_else(|| cfg.horizon());
    let basis = solve_eigensystem(&cfg.density, cfg.n_modes, &cfg.space_grid)?;
    em.stage("eigensystem");
    let lookup = |k: usize| -> Result<Vec<f64>> {
        basis
            .phis
            .get(k.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::Validation(format!("mode {} beyond n_modes = {}", k, cfg.n_modes)))
    };
    let w_nodal = parse_space_spec(target, &cfg.space_grid, Some(&lookup))?;
    let targets = basis.project(&w_nodal);

    let grid = Grid1D::new(0.0, t_hor, cfg.time_grid.n_points())?;
    let zs = compute_zn_seq(&basis.lambdas, cfg, t_hor, &grid)?;
    let system = build_moment_system(&basis, &cfg.kernel, &zs)?;
    let ctl = solve_moment_problem(&system, &targets, ridge)?;
    em.stage("moment-solve");

    let mut trace = String::from("t,f\n");
    for (&t, &v) in grid.samples().iter().zip(ctl.f.values()) {
        trace.push_str(&format!("{},{}\n", fmt(t), fmt(v)));
    }
    em.write("control.csv", &trace)?;

    let mut res = String::from("n,w_target,coefficient\n");
    for n in 0..targets.len() {
        res.push_str(&format!(
            "{},{},{}\n",
            n + 1,
            fmt(targets[n]),
            fmt(ctl.coefficients[n])
        ));
    }
    res.push_str(&format!("# residual_l2={} norm_l2={}\n", fmt(ctl.residual), fmt(ctl.norm)));
    em.write("residuals.csv", &res)?;

    if verify {
        let sim_cfg = cfg.with_horizon(t_hor, cfg.time_grid.n_points())?;
        let traj = simulate_modal(&sim_cfg, &basis, &Forcing::boundary(ctl.f.clone()))?;
        let proj = basis.synthesize(&targets);
        let num: f64 = traj
            .w_final
            .iter()
            .zip(&proj)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = proj.iter().map(|v| v * v).sum::<f64>().max(1e-300);
        let rel = (num / den).sqrt();
        em.stage("verify");
        println!("round-trip relative error = {:.6e}", rel);
        em.write(
            "verify.json",
            &format!("{{\n  \"round_trip_relative_error\": {}\n}}\n", fmt(rel)),
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &MaterialConfig,
    boundary: Option<&str>,
    source: Option<&str>,
    amplitude: Option<&str>,
    cross_check: bool,
    dump_modal: bool,
    em: &mut Emitter,
) -> Result<()> {
    let basis = solve_eigensystem(&cfg.density, cfg.n_modes, &cfg.space_grid)?;
    em.stage("eigensystem");
    let lookup = |k: usize| -> Result<Vec<f64>> {
        basis
            .phis
            .get(k.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::Validation(format!("mode {} beyond n_modes = {}", k, cfg.n_modes)))
    };
    let mut forcing = Forcing::default();
    if let Some(spec) = boundary {
        forcing.boundary_f = Some(parse_time_spec(spec, &cfg.time_grid)?);
    }
    match (source, amplitude) {
        (Some(b), Some(g)) => {
            let b_nodal = parse_space_spec(b, &cfg.space_grid, Some(&lookup))?;
            forcing.source_b = Some(basis.project(&b_nodal));
            forcing.source_g = Some(parse_time_spec(g, &cfg.time_grid)?);
        }
        (None, None) => {}
        _ => {
            return Err(Error::Validation(
                "--source and --amplitude must be given together".into(),
            ))
        }
    }
    let traj = simulate_modal(cfg, &basis, &forcing)?;
    em.stage("simulate");

    let mut eta = String::from("t,eta\n");
    for (&t, &v) in cfg.time_grid.samples().iter().zip(traj.eta.values()) {
        eta.push_str(&format!("{},{}\n", fmt(t), fmt(v)));
    }
    em.write("eta.csv", &eta)?;

    let mut wf = String::from("xi,w\n");
    for (&x, &v) in cfg.space_grid.samples().iter().zip(&traj.w_final) {
        wf.push_str(&format!("{},{}\n", fmt(x), fmt(v)));
    }
    em.write("wfinal.csv", &wf)?;

    if dump_modal {
        let mut modal = String::from("t");
        for n in 0..basis.n_modes() {
            modal.push_str(&format!(",w{}", n + 1));
        }
        modal.push('\n');
        for (k, &t) in cfg.time_grid.samples().iter().enumerate() {
            modal.push_str(&fmt(t));
            for n in 0..basis.n_modes() {
                modal.push_str(&format!(",{}", fmt(traj.w_modal[n][k])));
            }
            modal.push('\n');
        }
        em.write("wmodal.csv", &modal)?;
    }

    if cross_check {
        let rep = wn_final_via_kernels(cfg, &basis, &forcing)?;
        let scale = rep
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()))
            .max(1e-300);
        let gap = traj
            .w_modal
            .iter()
            .zip(&rep)
            .map(|(w, r)| (w.last().unwrap() - r).abs())
            .fold(0.0f64, f64::max)
            / scale;
        em.stage("cross-check");
        println!("representation cross-check relative gap = {:.6e}", gap);
        em.write(
            "crosscheck.json",
            &format!("{{\n  \"representation_gap\": {}\n}}\n", fmt(gap)),
        )?;
    }
    Ok(())
}

fn cmd_identify(
    cfg: &MaterialConfig,
    truth: Option<&str>,
    traces: Option<&std::path::Path>,
    t_horizon: Option<f64>,
    n_modes: Option<usize>,
    ridge: f64,
    em: &mut Emitter,
) -> Result<()> {
    let t_hor = t_horizon.unwrap_or_else(|| cfg.horizon());
    let n_modes = n_modes.unwrap_or(cfg.n_modes);
    let est = match (truth, traces) {
        (Some(spec), None) => {
            let basis = solve_eigensystem(&cfg.density, n_modes, &cfg.space_grid)?;
            let lookup = |k: usize| -> Result<Vec<f64>> {
                basis.phis.get(k.wrapping_sub(1)).cloned().ok_or_else(|| {
                    Error::Validation(format!("mode {} beyond n_modes = {}", k, n_modes))
                })
            };
            let b_nodal = parse_space_spec(spec, &cfg.space_grid, Some(&lookup))?;
            let oracle = SimulatorOracle::new(cfg, t_hor, n_modes, &b_nodal)?;
            identify_source(&oracle, cfg, t_hor, n_modes, ridge)?
        }
        (None, Some(dir)) => {
            let oracle = TraceOracle::open(dir)?;
            identify_source(&oracle, cfg, t_hor, n_modes, ridge)?
        }
        _ => {
            return Err(Error::Validation(
                "identify needs exactly one of --truth or --traces".into(),
            ))
        }
    };
    em.stage("identify");

    let mut coef = String::from("k,b_hat,moment_residual,missing\n");
    for k in 0..est.n_modes {
        coef.push_str(&format!(
            "{},{},{},{}\n",
            k + 1,
            fmt(est.coefficients[k]),
            fmt(est.per_mode_residuals[k]),
            est.missing.contains(&(k + 1))
        ));
    }
    em.write("coefficients.csv", &coef)?;

    let mut bh = String::from("xi,b_hat\n");
    for (&x, &v) in cfg.space_grid.samples().iter().zip(&est.b_hat) {
        bh.push_str(&format!("{},{}\n", fmt(x), fmt(v)));
    }
    em.write("bhat.csv", &bh)?;
    Ok(())
}

fn cmd_diagnostics(
    cfg: &MaterialConfig,
    t_sweep: &str,
    n_sweep: &str,
    em: &mut Emitter,
) -> Result<()> {
    let t_list = parse_list_f64(t_sweep)?;
    let n_list = parse_list_usize(n_sweep)?;
    if t_list.is_empty() || n_list.is_empty() {
        return Err(Error::Validation("empty diagnostics sweep".into()));
    }
    let report = riesz_diagnostics(cfg, &t_list, &n_list)?;
    em.stage("diagnostics");
    let mut out = String::from("t,n_modes,eig_min,eig_max,cond,d_n\n");
    for row in &report.gram_rows {
        let d_n = report
            .deficiency_rows
            .iter()
            .find(|d| d.n == row.n_modes && (d.t_horizon - row.t_horizon).abs() < 1e-12)
            .map(|d| fmt(d.d_n))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(row.t_horizon),
            row.n_modes,
            fmt(row.eig_min),
            fmt(row.eig_max),
            fmt(row.cond),
            d_n
        ));
    }
    em.write("riesz.csv", &out)
}
