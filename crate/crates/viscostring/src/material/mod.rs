//! Physical data of the string: traction `P(t)`, density coefficient
//! `c(xi)`, memory kernel `M(t)` with unit-offset primitive `N(t)`, and
//! the grids everything is sampled on. Owns config ingestion and all
//! eager validation.

pub mod expr;

use crate::error::{Error, Result};
use expr::Expr;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SPACE_END: f64 = std::f64::consts::PI;

/// Uniform 1-D grid with at least two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    start: f64,
    end: f64,
    samples: Vec<f64>,
}

impl Grid1D {
    pub fn new(start: f64, end: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 points, got {}",
                n_points
            )));
        }
        if !(start < end) {
            return Err(Error::Validation(format!(
                "grid start {} must be below end {}",
                start, end
            )));
        }
        let h = (end - start) / (n_points - 1) as f64;
        let mut samples: Vec<f64> = (0..n_points).map(|i| start + i as f64 * h).collect();
        *samples.last_mut().unwrap() = end;
        Ok(Grid1D {
            start,
            end,
            samples,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn n_points(&self) -> usize {
        self.samples.len()
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / (self.samples.len() - 1) as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.samples.len() == other.samples.len()
            && (self.start - other.start).abs() < 1e-12
            && (self.end - other.end).abs() < 1e-12
    }
}

/// Where a sampled function came from; analytic inputs keep their source
/// so a config can be re-gridded without interpolation loss.
#[derive(Debug, Clone)]
pub enum Provenance {
    Analytic { source: String, expr: Expr },
    Samples,
}

/// Function stored as values on a uniform grid. Evaluation between nodes
/// uses 4-point Lagrange interpolation (cubic on the interior, one-sided
/// stencils at the ends); queries outside the grid clamp to the nearest
/// end value and are flagged in the log.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Grid1D,
    values: Vec<f64>,
    provenance: Provenance,
}

impl SampledFunction {
    pub fn from_values(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Validation(format!(
                "values length {} does not match grid with {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(SampledFunction {
            grid,
            values,
            provenance: Provenance::Samples,
        })
    }

    pub fn from_expr(source: &str, var: &str, grid: Grid1D) -> Result<Self> {
        let e = expr::parse(source, var)?;
        let values = grid.samples().iter().map(|&x| e.eval(x)).collect();
        Ok(SampledFunction {
            grid,
            values,
            provenance: Provenance::Analytic {
                source: source.to_string(),
                expr: e,
            },
        })
    }

    pub fn constant(grid: Grid1D, v: f64) -> Self {
        let n = grid.n_points();
        SampledFunction {
            grid,
            values: vec![v; n],
            provenance: Provenance::Samples,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// Cubic interpolation at `x`; constant extension outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.n_points();
        if x <= g.start {
            if x < g.start - 1e-12 * (1.0 + g.start.abs()) {
                log::debug!("query {} below grid start {}, clamping", x, g.start);
            }
            return self.values[0];
        }
        if x >= g.end {
            if x > g.end + 1e-12 * (1.0 + g.end.abs()) {
                log::debug!("query {} beyond grid end {}, clamping", x, g.end);
            }
            return self.values[n - 1];
        }
        let h = g.spacing();
        let cell = (((x - g.start) / h).floor() as usize).min(n - 2);
        if n < 4 {
            // linear fallback on tiny grids
            let t = (x - g.samples[cell]) / h;
            return self.values[cell] * (1.0 - t) + self.values[cell + 1] * t;
        }
        let j0 = cell.saturating_sub(1).min(n - 4);
        // 4-point Lagrange on nodes j0..j0+3
        let mut acc = 0.0;
        for a in 0..4 {
            let xa = g.samples[j0 + a];
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    let xb = g.samples[j0 + b];
                    w *= (x - xb) / (xa - xb);
                }
            }
            acc += w * self.values[j0 + a];
        }
        acc
    }

    /// Centered differences on the interior, second-order one-sided at the ends.
    pub fn derivative(&self) -> SampledFunction {
        let n = self.values.len();
        let h = self.grid.spacing();
        let v = &self.values;
        let mut d = vec![0.0; n];
        if n == 2 {
            let s = (v[1] - v[0]) / h;
            d[0] = s;
            d[1] = s;
        } else {
            d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
            d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
            for i in 1..n - 1 {
                d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
            }
        }
        SampledFunction {
            grid: self.grid.clone(),
            values: d,
            provenance: Provenance::Samples,
        }
    }

    /// Composite-trapezoid cumulative integral from the grid start.
    pub fn cumulative(&self) -> SampledFunction {
        let h = self.grid.spacing();
        let mut acc = vec![0.0; self.values.len()];
        for i in 1..self.values.len() {
            acc[i] = acc[i - 1] + 0.5 * h * (self.values[i - 1] + self.values[i]);
        }
        SampledFunction {
            grid: self.grid.clone(),
            values: acc,
            provenance: Provenance::Samples,
        }
    }

    /// Resample on a new grid: analytic provenance re-evaluates the
    /// expression, sample provenance interpolates.
    pub fn resample(&self, grid: Grid1D) -> SampledFunction {
        match &self.provenance {
            Provenance::Analytic { expr, source } => {
                let values = grid.samples().iter().map(|&x| expr.eval(x)).collect();
                SampledFunction {
                    grid,
                    values,
                    provenance: Provenance::Analytic {
                        source: source.clone(),
                        expr: expr.clone(),
                    },
                }
            }
            Provenance::Samples => {
                let values = grid.samples().iter().map(|&x| self.eval(x)).collect();
                SampledFunction {
                    grid,
                    values,
                    provenance: Provenance::Samples,
                }
            }
        }
    }
}

/// Trapezoid integral of nodal `values` with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Horizontal traction `P(t) >= p0 > 0`.
#[derive(Debug, Clone)]
pub struct TractionProfile {
    pub p: SampledFunction,
    pub p0: f64,
}

impl TractionProfile {
    pub fn new(p: SampledFunction, p0: Option<f64>) -> Result<Self> {
        let min = p.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let p0 = p0.unwrap_or(min);
        if !(p0 > 0.0) || min < p0 - 1e-14 * (1.0 + p0.abs()) {
            return Err(Error::Validation(
                "traction not strictly positive (P must stay >= p0 > 0)".into(),
            ));
        }
        check_second_differences(&p, "traction")?;
        Ok(TractionProfile { p, p0 })
    }
}

/// Inverse-density coefficient `c(xi) >= c0 > 0`.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub c: SampledFunction,
    pub c0: f64,
}

impl DensityProfile {
    pub fn new(c: SampledFunction, c0: Option<f64>) -> Result<Self> {
        let min = c.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let c0 = c0.unwrap_or(min);
        if !(c0 > 0.0) || min < c0 - 1e-14 * (1.0 + c0.abs()) {
            return Err(Error::Validation(
                "density not strictly positive (c must stay >= c0 > 0)".into(),
            ));
        }
        Ok(DensityProfile { c, c0 })
    }
}

/// Relaxation kernel `M(t)` and its unit-offset primitive
/// `N(t) = 1 + int_0^t M`. `N` is always recomputed from `M`, never read
/// from a file, so `N(0) = 1` holds exactly.
#[derive(Debug, Clone)]
pub struct MemoryKernel {
    pub m: SampledFunction,
    pub n: SampledFunction,
    /// N'(0) = M(0).
    pub nprime0: f64,
}

impl MemoryKernel {
    pub fn new(m: SampledFunction) -> Result<Self> {
        if (m.grid().start()).abs() > 1e-14 {
            return Err(Error::Validation(
                "memory kernel must be sampled on a grid starting at 0".into(),
            ));
        }
        for &v in m.values() {
            if !v.is_finite() {
                return Err(Error::Validation("memory kernel has non-finite values".into()));
            }
        }
        check_second_differences(&m, "memory kernel")?;
        let n = primitive_n(&m);
        let nprime0 = m.values()[0];
        Ok(MemoryKernel { m, n, nprime0 })
    }

    /// N' coincides with M.
    pub fn nprime(&self) -> &SampledFunction {
        &self.m
    }
}

/// `N(t) = 1 + int_0^t M` by composite trapezoid; `N(0) = 1` exactly.
pub fn primitive_n(m: &SampledFunction) -> SampledFunction {
    let cum = m.cumulative();
    let values = cum.values().iter().map(|&v| 1.0 + v).collect();
    SampledFunction::from_values(m.grid().clone(), values).expect("grid matches by construction")
}

fn check_second_differences(f: &SampledFunction, what: &str) -> Result<()> {
    let v = f.values();
    let h = f.grid().spacing();
    let scale = 1.0 + f.max_abs();
    for i in 1..v.len() - 1 {
        let dd = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        if !dd.is_finite() || dd.abs() > 1e8 * scale {
            return Err(Error::Validation(format!(
                "{} second differences unbounded near node {} (need C^2 data)",
                what, i
            )));
        }
    }
    Ok(())
}

/// Numeric tolerances used by the solvers; all configurable.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub quad: f64,
    pub volterra: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quad: 1e-6,
            volterra: 1e-6,
        }
    }
}

/// The full physical problem statement.
#[derive(Debug, Clone)]
pub struct MaterialConfig {
    pub traction: TractionProfile,
    pub density: DensityProfile,
    pub kernel: MemoryKernel,
    pub space_grid: Grid1D,
    pub time_grid: Grid1D,
    pub n_modes: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl MaterialConfig {
    /// Convenience constructor from analytic expressions. `p_expr` and
    /// `m_expr` are in `t`, `c_expr` in `xi`.
    pub fn from_exprs(
        p_expr: &str,
        c_expr: &str,
        m_expr: &str,
        n_space: usize,
        n_time: usize,
        t_max: f64,
        n_modes: usize,
    ) -> Result<Self> {
        let space_grid = Grid1D::new(0.0, SPACE_END, n_space)?;
        let time_grid = Grid1D::new(0.0, t_max, n_time)?;
        let traction = TractionProfile::new(
            SampledFunction::from_expr(p_expr, "t", time_grid.clone())?,
            None,
        )?;
        let density = DensityProfile::new(
            SampledFunction::from_expr(c_expr, "xi", space_grid.clone())?,
            None,
        )?;
        let kernel = MemoryKernel::new(SampledFunction::from_expr(m_expr, "t", time_grid.clone())?)?;
        let cfg = MaterialConfig {
            traction,
            density,
            kernel,
            space_grid,
            time_grid,
            n_modes,
            seed: 0,
            tolerances: Tolerances::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::Validation("n_modes must be positive".into()));
        }
        if !(self.time_grid.end() > 0.0) {
            return Err(Error::Validation("time horizon T must be positive".into()));
        }
        // N is recomputed from M; confirm the defining quadrature identity
        // at every node anyway.
        let cum = self.kernel.m.cumulative();
        for (i, (&nv, &cv)) in self
            .kernel
            .n
            .values()
            .iter()
            .zip(cum.values())
            .enumerate()
        {
            if (nv - 1.0 - cv).abs() > self.tolerances.quad {
                return Err(Error::Validation(format!(
                    "kernel primitive N violates N = 1 + int M at node {}",
                    i
                )));
            }
        }
        if (self.kernel.n.values()[0] - 1.0).abs() != 0.0 {
            return Err(Error::Validation("N(0) must equal 1 exactly".into()));
        }
        Ok(())
    }

    /// Horizon of the time grid.
    pub fn horizon(&self) -> f64 {
        self.time_grid.end()
    }

    /// Re-grid the time axis to `[0, t_max]` with `n_time` nodes,
    /// resampling traction and kernel (exactly, for analytic inputs).
    pub fn with_horizon(&self, t_max: f64, n_time: usize) -> Result<MaterialConfig> {
        let time_grid = Grid1D::new(0.0, t_max, n_time)?;
        if t_max > self.time_grid.end() + 1e-12 {
            if let Provenance::Samples = self.traction.p.provenance() {
                log::warn!(
                    "extending sampled traction constantly from {} to {}",
                    self.time_grid.end(),
                    t_max
                );
            }
        }
        let traction = TractionProfile::new(
            self.traction.p.resample(time_grid.clone()),
            Some(self.traction.p0.min(
                self.traction
                    .p
                    .resample(time_grid.clone())
                    .values()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min),
            )),
        )?;
        let kernel = MemoryKernel::new(self.kernel.m.resample(time_grid.clone()))?;
        let cfg = MaterialConfig {
            traction,
            density: self.density.clone(),
            kernel,
            space_grid: self.space_grid.clone(),
            time_grid,
            n_modes: self.n_modes,
            seed: self.seed,
            tolerances: self.tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    traction: RawProfile,
    density: RawProfile,
    memory: RawProfile,
    space_grid: RawSpaceGrid,
    time_grid: RawTimeGrid,
    n_modes: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c0: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpaceGrid {
    n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTimeGrid {
    n: usize,
    t_max: f64,
}

fn build_profile(raw: &RawProfile, var: &str, grid: Grid1D, what: &str) -> Result<SampledFunction> {
    match raw.kind.as_str() {
        "expr" => {
            let src = raw.expr.as_ref().ok_or_else(|| {
                Error::Parse(format!("{}: kind \"expr\" requires an \"expr\" field", what))
            })?;
            SampledFunction::from_expr(src, var, grid)
        }
        "samples" => {
            let values = raw.values.clone().ok_or_else(|| {
                Error::Parse(format!(
                    "{}: kind \"samples\" requires a \"values\" field",
                    what
                ))
            })?;
            SampledFunction::from_values(grid, values)
        }
        other => Err(Error::Parse(format!(
            "{}: unknown kind \"{}\" (expected \"expr\" or \"samples\")",
            what, other
        ))),
    }
}

/// Load and eagerly validate a config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<MaterialConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_config(&text)
}

/// Parse a config from JSON text.
pub fn parse_config(text: &str) -> Result<MaterialConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed config: {}", e)))?;
    let space_grid = Grid1D::new(0.0, SPACE_END, raw.space_grid.n)?;
    let time_grid = Grid1D::new(0.0, raw.time_grid.t_max, raw.time_grid.n)?;
    let traction = TractionProfile::new(
        build_profile(&raw.traction, "t", time_grid.clone(), "traction")?,
        raw.traction.p0,
    )?;
    let density = DensityProfile::new(
        build_profile(&raw.density, "xi", space_grid.clone(), "density")?,
        raw.density.c0,
    )?;
    let kernel = MemoryKernel::new(build_profile(&raw.memory, "t", time_grid.clone(), "memory")?)?;
    let cfg = MaterialConfig {
        traction,
        density,
        kernel,
        space_grid,
        time_grid,
        n_modes: raw.n_modes,
        seed: raw.seed,
        tolerances: Tolerances::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn profile_to_raw(f: &SampledFunction, lower_p0: Option<f64>, lower_c0: Option<f64>) -> RawProfile {
    match f.provenance() {
        Provenance::Analytic { source, .. } => RawProfile {
            kind: "expr".into(),
            expr: Some(source.clone()),
            values: None,
            p0: lower_p0,
            c0: lower_c0,
        },
        Provenance::Samples => RawProfile {
            kind: "samples".into(),
            expr: None,
            values: Some(f.values().to_vec()),
            p0: lower_p0,
            c0: lower_c0,
        },
    }
}

/// Serialize a config back to the JSON schema. Node data round-trips
/// bit-exactly through `load_config`.
pub fn config_to_json(cfg: &MaterialConfig) -> String {
    let raw = RawConfig {
        traction: profile_to_raw(&cfg.traction.p, Some(cfg.traction.p0), None),
        density: profile_to_raw(&cfg.density.c, None, Some(cfg.density.c0)),
        memory: profile_to_raw(&cfg.kernel.m, None, None),
        space_grid: RawSpaceGrid {
            n: cfg.space_grid.n_points(),
        },
        time_grid: RawTimeGrid {
            n: cfg.time_grid.n_points(),
            t_max: cfg.time_grid.end(),
        },
        n_modes: cfg.n_modes,
        seed: cfg.seed,
    };
    serde_json::to_string_pretty(&raw).expect("config serialization cannot fail")
}

pub fn save_config<P: AsRef<Path>>(cfg: &MaterialConfig, path: P) -> Result<()> {
    std::fs::write(path, config_to_json(cfg))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tgrid(n: usize, t_max: f64) -> Grid1D {
        Grid1D::new(0.0, t_max, n).unwrap()
    }

    #[test]
    fn zero_kernel_gives_unit_primitive() {
        let m = SampledFunction::constant(tgrid(101, 2.0), 0.0);
        let n = primitive_n(&m);
        for &v in n.values() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn linear_kernel_primitive_exact_at_nodes() {
        // M(t) = t has antiderivative t^2/2; trapezoid is exact on linears.
        let g = tgrid(201, 3.0);
        let m = SampledFunction::from_expr("t", "t", g.clone()).unwrap();
        let n = primitive_n(&m);
        for (&t, &v) in g.samples().iter().zip(n.values()) {
            assert!((v - (1.0 + 0.5 * t * t)).abs() < 1e-12, "t={} v={}", t, v);
        }
    }

    #[test]
    fn exponential_kernel_primitive_matches_closed_form() {
        // M(t) = -e^{-t}  =>  N(t) = e^{-t}; trapezoid error <= h^2/12 * int |M''|
        let g = tgrid(2001, 4.0);
        let h = g.spacing();
        let m = SampledFunction::from_expr("-exp(-t)", "t", g.clone()).unwrap();
        let n = primitive_n(&m);
        let bound = h * h / 12.0 * (1.0 - (-4.0f64).exp()) + 1e-12;
        for (&t, &v) in g.samples().iter().zip(n.values()) {
            assert!(
                (v - (-t).exp()).abs() <= bound,
                "t={} err={}",
                t,
                (v - (-t).exp()).abs()
            );
        }
    }

    #[test]
    fn config_with_gamma_kernel_matches_exponential() {
        let cfg =
            MaterialConfig::from_exprs("1", "1", "-exp(-t)", 101, 2001, 4.0, 4).unwrap();
        for (&t, &v) in cfg
            .time_grid
            .samples()
            .iter()
            .zip(cfg.kernel.n.values())
        {
            assert!((v - (-t).exp()).abs() < 1e-6);
        }
        assert_eq!(cfg.kernel.n.values()[0], 1.0);
        assert_eq!(cfg.kernel.nprime0, -1.0);
    }

    #[test]
    fn nonpositive_traction_rejected() {
        let err = MaterialConfig::from_exprs("sin(t)", "1", "0", 51, 101, 4.0, 4).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("traction not strictly positive")),
            other => panic!("unexpected error {:?}", other),
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact_on_node_data() {
        let text = r#"{
            "traction": {"kind": "expr", "expr": "1+0.3*sin(t)"},
            "density": {"kind": "samples", "values": null, "c0": 0.5},
            "memory": {"kind": "expr", "expr": "-0.5*exp(-0.5*t)"},
            "space_grid": {"n": 5},
            "time_grid": {"n": 101, "t_max": 2.0},
            "n_modes": 2,
            "seed": 7
        }"#;
        // fill density samples
        let vals: Vec<f64> = (0..5).map(|i| 1.0 + 0.1 * (i as f64).sin()).collect();
        let text = text.replace(
            "null",
            &serde_json::to_string(&vals).unwrap(),
        );
        let cfg = parse_config(&text).unwrap();
        let json = config_to_json(&cfg);
        let cfg2 = parse_config(&json).unwrap();
        assert_eq!(cfg.traction.p.values(), cfg2.traction.p.values());
        assert_eq!(cfg.density.c.values(), cfg2.density.c.values());
        assert_eq!(cfg.kernel.m.values(), cfg2.kernel.m.values());
        assert_eq!(cfg.seed, cfg2.seed);
    }

    #[test]
    fn malformed_config_yields_parse_error() {
        assert!(matches!(parse_config("{"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_config(r#"{"unknown": 1}"#),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn cubic_interpolation_exact_on_cubics() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        let f = SampledFunction::from_expr("1 + t + t^2 + t^3", "t", g).unwrap();
        for &x in &[0.03, 0.217, 0.5, 0.777, 0.95] {
            let exact = 1.0 + x + x * x + x * x * x;
            assert!((f.eval(x) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_second_order() {
        let g = Grid1D::new(0.0, 1.0, 1001).unwrap();
        let f = SampledFunction::from_expr("sin(3*t)", "t", g.clone()).unwrap();
        let d = f.derivative();
        for (i, &t) in g.samples().iter().enumerate() {
            assert!((d.values()[i] - 3.0 * (3.0 * t).cos()).abs() < 1e-4);
        }
    }
}
