//! Experiment harness: the one-step angle map, the h/h' table, the
//! expectation-formula check and the recovery sweep, with CSV and
//! manifest outputs.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::horacle::{predicted_theta_next, verify_growth_condition, GrowthReport, HTable};
use crate::measurement::{
    observe, random_unit, sample_cn, sample_sensing, sample_sensing_cov, CovarianceSpec, Signal, C64,
};
use crate::metrics;
use crate::ops::altmin_step;
use crate::rng::RngStream;
use crate::solver::{run_batched, SolverConfig};

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Signal dimension for the step-map experiment.
    pub n: usize,
    /// Measurement count for the step-map experiment.
    pub m: usize,
    /// Block count for solver-based experiments.
    pub b: usize,
    /// Trials per grid point.
    pub trials: usize,
    /// Input angles for the step-map experiment.
    pub theta_grid: Vec<f64>,
    /// h-table resolution and per-point sample count.
    pub table_points: usize,
    pub table_samples: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Median-vs-predicted tolerance for the step map pass flag.
    pub step_map_tol: f64,
    /// Recovery sweep grid and thresholds.
    pub recovery_ns: Vec<usize>,
    pub recovery_ratios: Vec<usize>,
    pub recovery_bs: Vec<usize>,
    pub recovery_trials: usize,
    pub recovery_min_rate: f64,
    pub success_tol: f64,
    pub residual_tol: f64,
    pub max_iters: usize,
    /// Leading diagonal entries of Sigma for covariance-mode recovery;
    /// padded with ones up to n. Empty means identity sensing.
    pub cov_diag: Vec<f64>,
    /// Expectation-check settings.
    pub exp_n: usize,
    pub exp_thetas: Vec<f64>,
    pub exp_etas: Vec<f64>,
    pub exp_samples: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let theta_grid = (0..16).map(|i| 0.3 + (1.4 - 0.3) * i as f64 / 15.0).collect();
        Self {
            n: 64,
            m: 4096,
            b: 4,
            trials: 1000,
            theta_grid,
            table_points: 64,
            table_samples: 1_000_000,
            seed: 0,
            out_dir: PathBuf::from("out"),
            step_map_tol: 0.05,
            recovery_ns: vec![32],
            recovery_ratios: vec![128],
            recovery_bs: vec![4],
            recovery_trials: 50,
            recovery_min_rate: 0.95,
            success_tol: 1e-6,
            residual_tol: 1e-8,
            max_iters: 500,
            cov_diag: Vec::new(),
            exp_n: 4,
            exp_thetas: vec![0.3, 0.8, 1.2],
            exp_etas: vec![0.0, std::f64::consts::PI / 3.0],
            exp_samples: 1_000_000,
        }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for field {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("invalid value {s:?} in list field {key}"))))
        .collect()
}

impl ExperimentConfig {
    /// Apply flat `key = value` lines over the current settings. Lines
    /// starting with `#` and blank lines are skipped.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key = value, got {line:?}")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_field(key, value)?,
            "m" => self.m = parse_field(key, value)?,
            "b" => self.b = parse_field(key, value)?,
            "trials" => self.trials = parse_field(key, value)?,
            "theta_grid" => self.theta_grid = parse_list(key, value)?,
            "table_points" => self.table_points = parse_field(key, value)?,
            "table_samples" => self.table_samples = parse_field(key, value)?,
            "seed" => self.seed = parse_field(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "step_map_tol" => self.step_map_tol = parse_field(key, value)?,
            "recovery_ns" => self.recovery_ns = parse_list(key, value)?,
            "recovery_ratios" => self.recovery_ratios = parse_list(key, value)?,
            "recovery_bs" => self.recovery_bs = parse_list(key, value)?,
            "recovery_trials" => self.recovery_trials = parse_field(key, value)?,
            "recovery_min_rate" => self.recovery_min_rate = parse_field(key, value)?,
            "success_tol" => self.success_tol = parse_field(key, value)?,
            "residual_tol" => self.residual_tol = parse_field(key, value)?,
            "max_iters" => self.max_iters = parse_field(key, value)?,
            "cov_diag" => self.cov_diag = parse_list(key, value)?,
            "exp_n" => self.exp_n = parse_field(key, value)?,
            "exp_thetas" => self.exp_thetas = parse_list(key, value)?,
            "exp_etas" => self.exp_etas = parse_list(key, value)?,
            "exp_samples" => self.exp_samples = parse_field(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration field {other:?}"))),
        }
        Ok(())
    }

    fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
        items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Canonical `key = value` echo; also the content that gets hashed
    /// into the manifest.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write;
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "b = {}", self.b);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "theta_grid = {}", Self::fmt_list(&self.theta_grid));
        let _ = writeln!(s, "table_points = {}", self.table_points);
        let _ = writeln!(s, "table_samples = {}", self.table_samples);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "step_map_tol = {}", self.step_map_tol);
        let _ = writeln!(s, "recovery_ns = {}", Self::fmt_list(&self.recovery_ns));
        let _ = writeln!(s, "recovery_ratios = {}", Self::fmt_list(&self.recovery_ratios));
        let _ = writeln!(s, "recovery_bs = {}", Self::fmt_list(&self.recovery_bs));
        let _ = writeln!(s, "recovery_trials = {}", self.recovery_trials);
        let _ = writeln!(s, "recovery_min_rate = {}", self.recovery_min_rate);
        let _ = writeln!(s, "success_tol = {}", self.success_tol);
        let _ = writeln!(s, "residual_tol = {}", self.residual_tol);
        let _ = writeln!(s, "max_iters = {}", self.max_iters);
        let _ = writeln!(s, "cov_diag = {}", Self::fmt_list(&self.cov_diag));
        let _ = writeln!(s, "exp_n = {}", self.exp_n);
        let _ = writeln!(s, "exp_thetas = {}", Self::fmt_list(&self.exp_thetas));
        let _ = writeln!(s, "exp_etas = {}", Self::fmt_list(&self.exp_etas));
        let _ = writeln!(s, "exp_samples = {}", self.exp_samples);
        s
    }

    fn master_stream(&self) -> RngStream {
        RngStream::new(self.seed)
    }

    fn validate_counts(&self) -> Result<()> {
        for (name, v) in [
            ("n", self.n),
            ("m", self.m),
            ("b", self.b),
            ("trials", self.trials),
            ("table_points", self.table_points),
            ("max_iters", self.max_iters),
            ("exp_n", self.exp_n),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("field {name} must be positive")));
            }
        }
        for &t in self.theta_grid.iter().chain(&self.exp_thetas) {
            if !(t > 0.0 && t <= FRAC_PI_2 + 1e-12) {
                return Err(Error::Config(format!(
                    "field theta_grid/exp_thetas: angle {t} outside (0, pi/2]"
                )));
            }
        }
        Ok(())
    }
}

/// Unit vector orthogonal to z, drawn from the given stream.
pub fn orthogonal_unit(z: &Signal, stream: RngStream) -> Result<Signal> {
    let raw = crate::measurement::sample_signal(z.dim(), false, stream)?;
    let zn = z.normalized()?;
    let proj = zn.inner(&raw);
    let v = raw.as_vector() - zn.as_vector() * proj;
    Signal::new(v)?.normalized()
}

/// Unit signal at exactly angle theta from z:
/// x = sin(theta) e^{i eta} z + cos(theta) w with unit w orthogonal to z.
pub fn angled_state(z: &Signal, theta: f64, eta: f64, stream: RngStream) -> Result<(Signal, Signal)> {
    let zn = z.normalized()?;
    let w = orthogonal_unit(&zn, stream)?;
    let phase = C64::new(0.0, eta).exp();
    let x = Signal::new(
        zn.as_vector() * (phase * theta.sin()) + w.as_vector() * C64::new(theta.cos(), 0.0),
    )?;
    Ok((x, w))
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[derive(Debug, Clone)]
pub struct QuantileRow {
    pub theta_in: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub predicted: f64,
    pub trials: usize,
}

pub struct StepMapResult {
    pub rows: Vec<QuantileRow>,
    pub table: HTable,
    pub pass: bool,
}

/// One-step angle map: for each input angle, place x at that angle from
/// a unit z, draw a fresh ensemble per trial, apply one step, and
/// aggregate the observed output angles against the predicted map.
pub fn exp_step_map(cfg: &ExperimentConfig) -> Result<StepMapResult> {
    cfg.validate_counts()?;
    if cfg.m < 2 * cfg.n {
        return Err(Error::Config(format!("field m: need m >= 2n, got m = {}, n = {}", cfg.m, cfg.n)));
    }
    let master = cfg.master_stream();
    let table = HTable::build(cfg.table_points, cfg.table_samples, master.child(1))?;
    let mut rows = Vec::with_capacity(cfg.theta_grid.len());
    let mut pass = true;
    for (ti, &theta_in) in cfg.theta_grid.iter().enumerate() {
        let point = master.child(2).child(ti as u64);
        let z = random_unit(cfg.n, point.child(0))?;
        let (x, _w) = angled_state(&z, theta_in, 0.0, point.child(1))?;
        let mut observed: Vec<f64> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let ts = point.child(2).child(t as u64);
                let a = sample_sensing(cfg.m, cfg.n, ts)?;
                let y = observe(&a, &z)?;
                let next = altmin_step(&a, &y, &x)?;
                metrics::theta(&next, &z)
            })
            .collect::<Result<_>>()?;
        observed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let predicted = predicted_theta_next(theta_in, &table)?;
        let row = QuantileRow {
            theta_in,
            q10: quantile(&observed, 0.10),
            q50: quantile(&observed, 0.50),
            q90: quantile(&observed, 0.90),
            predicted,
            trials: cfg.trials,
        };
        if (row.q50 - row.predicted).abs() > cfg.step_map_tol {
            pass = false;
        }
        rows.push(row);
    }
    Ok(StepMapResult { rows, table, pass })
}

pub struct HCurveResult {
    pub table: HTable,
    pub report: GrowthReport,
}

/// Build the h/h' table and run the growth-condition verification.
pub fn exp_hcurve(cfg: &ExperimentConfig) -> Result<HCurveResult> {
    if cfg.table_samples < 10_000 {
        return Err(Error::Config(format!(
            "field table_samples: need at least 10000, got {}",
            cfg.table_samples
        )));
    }
    let table = HTable::build(cfg.table_points, cfg.table_samples, cfg.master_stream().child(1))?;
    let report = verify_growth_condition(&table)?;
    Ok(HCurveResult { table, report })
}

#[derive(Debug, Clone)]
pub struct ExpectationRow {
    pub theta: f64,
    pub eta: f64,
    pub coef_x: f64,
    pub coef_d: f64,
    pub expected_coef_x: f64,
    pub expected_coef_d: f64,
    pub coef_x_se: f64,
    pub coef_d_se: f64,
    pub orth_residual: f64,
    pub orth_se: f64,
    pub samples: u64,
}

pub struct ExpectationResult {
    pub rows: Vec<ExpectationRow>,
    pub pass: bool,
}

/// Check E g_i(x) = h(theta) x + h'(theta) d by averaging single
/// measurements: coefficient on x, coefficient on the steepest-ascent
/// direction d, and the component outside span(x, d).
pub fn exp_expectation_check(cfg: &ExperimentConfig) -> Result<ExpectationResult> {
    cfg.validate_counts()?;
    if cfg.exp_n < 2 {
        return Err(Error::Config("field exp_n: need n >= 2".into()));
    }
    if cfg.exp_samples < 2 {
        return Err(Error::Config("field exp_samples: need at least 2 samples".into()));
    }
    let master = cfg.master_stream();
    let table = HTable::build(cfg.table_points, cfg.table_samples, master.child(1))?;
    let n = cfg.exp_n;
    let z = random_unit(n, master.child(10))?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (ti, &theta) in cfg.exp_thetas.iter().enumerate() {
        for (ei, &eta) in cfg.exp_etas.iter().enumerate() {
            let point = master.child(20).child((ti * cfg.exp_etas.len() + ei) as u64);
            let (x, w) = angled_state(&z, theta, eta, master.child(11))?;
            let phase = C64::new(0.0, eta).exp();
            let d = Signal::new(
                z.as_vector() * (phase * theta.cos()) - w.as_vector() * C64::new(theta.sin(), 0.0),
            )?;

            let samples = cfg.exp_samples;
            const CHUNK: u64 = 1 << 12;
            let chunks = samples.div_ceil(CHUNK);
            struct Acc {
                g_sum: DVector<C64>,
                cx_sum: f64,
                cx_sq: f64,
                cd_sum: f64,
                cd_sq: f64,
                norm_sq_sum: f64,
            }
            let partials: Vec<Acc> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let count = CHUNK.min(samples - c * CHUNK);
                    let mut rng = point.child(c).rng();
                    let mut acc = Acc {
                        g_sum: DVector::from_element(n, C64::new(0.0, 0.0)),
                        cx_sum: 0.0,
                        cx_sq: 0.0,
                        cd_sum: 0.0,
                        cd_sq: 0.0,
                        norm_sq_sum: 0.0,
                    };
                    let mut a = DVector::from_element(n, C64::new(0.0, 0.0));
                    for _ in 0..count {
                        for j in 0..n {
                            a[j] = sample_cn(&mut rng);
                        }
                        let ax = a.dotc(x.as_vector());
                        let az = a.dotc(z.as_vector());
                        let y = az.norm();
                        let p = if ax.norm() == 0.0 { C64::new(1.0, 0.0) } else { ax / ax.norm() };
                        // g = y * phase(a^* x) * a
                        let scale = p * y;
                        let cx = (x.as_vector().dotc(&a) * scale).re;
                        let cd = (d.as_vector().dotc(&a) * scale).re;
                        acc.cx_sum += cx;
                        acc.cx_sq += cx * cx;
                        acc.cd_sum += cd;
                        acc.cd_sq += cd * cd;
                        acc.norm_sq_sum += a.norm_squared() * y * y;
                        acc.g_sum.axpy(scale, &a, C64::new(1.0, 0.0));
                    }
                    acc
                })
                .collect();
            let mut g_mean = DVector::from_element(n, C64::new(0.0, 0.0));
            let (mut cx_sum, mut cx_sq, mut cd_sum, mut cd_sq, mut nrm_sum) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for p in &partials {
                g_mean += &p.g_sum;
                cx_sum += p.cx_sum;
                cx_sq += p.cx_sq;
                cd_sum += p.cd_sum;
                cd_sq += p.cd_sq;
                nrm_sum += p.norm_sq_sum;
            }
            let nf = samples as f64;
            g_mean /= C64::new(nf, 0.0);
            let coef_x_c = x.as_vector().dotc(&g_mean);
            let coef_d_c = d.as_vector().dotc(&g_mean);
            let orth = &g_mean - x.as_vector() * coef_x_c - d.as_vector() * coef_d_c;
            let coef_x = cx_sum / nf;
            let coef_d = cd_sum / nf;
            let coef_x_se = (((cx_sq - nf * coef_x * coef_x) / (nf - 1.0)).max(0.0) / nf).sqrt();
            let coef_d_se = (((cd_sq - nf * coef_d * coef_d) / (nf - 1.0)).max(0.0) / nf).sqrt();
            let total_var = (nrm_sum / nf - g_mean.norm_squared()).max(0.0);
            let orth_se = (total_var / nf).sqrt();
            let (eh, ehp) = table.interpolate(theta)?;
            let row = ExpectationRow {
                theta,
                eta,
                coef_x,
                coef_d,
                expected_coef_x: eh,
                expected_coef_d: ehp,
                coef_x_se,
                coef_d_se,
                orth_residual: orth.norm(),
                orth_se,
                samples,
            };
            let (hse, hpse) = table.interpolate_se(theta)?;
            let tol_x = 5.0 * (coef_x_se.powi(2) + hse.powi(2)).sqrt();
            let tol_d = 5.0 * (coef_d_se.powi(2) + hpse.powi(2)).sqrt();
            if (row.coef_x - row.expected_coef_x).abs() > tol_x
                || (row.coef_d - row.expected_coef_d).abs() > tol_d
                || row.orth_residual > 5.0 * row.orth_se
            {
                pass = false;
            }
            rows.push(row);
        }
    }
    Ok(ExpectationResult { rows, pass })
}

#[derive(Debug, Clone)]
pub struct RecoveryRow {
    pub n: usize,
    pub m: usize,
    pub b: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub median_iters: f64,
    pub median_seconds: f64,
}

pub struct RecoveryResult {
    pub rows: Vec<RecoveryRow>,
    pub pass: bool,
}

/// Success-rate sweep of the batched solver over an (n, m/n, B) grid.
pub fn exp_recovery(cfg: &ExperimentConfig) -> Result<RecoveryResult> {
    cfg.validate_counts()?;
    if cfg.recovery_trials == 0 {
        return Err(Error::Config("field recovery_trials must be positive".into()));
    }
    let master = cfg.master_stream();
    let mut rows = Vec::new();
    let mut pass = true;
    let mut cell = 0u64;
    for &n in &cfg.recovery_ns {
        let cov = if cfg.cov_diag.is_empty() {
            None
        } else {
            if cfg.cov_diag.len() > n {
                return Err(Error::Config(format!(
                    "field cov_diag: {} entries exceed n = {n}",
                    cfg.cov_diag.len()
                )));
            }
            let mut diag = cfg.cov_diag.clone();
            diag.resize(n, 1.0);
            Some(CovarianceSpec::diagonal(&diag)?)
        };
        for &ratio in &cfg.recovery_ratios {
            let m = n * ratio;
            for &b in &cfg.recovery_bs {
                let stream = master.child(30).child(cell);
                cell += 1;
                let solver_cfg = SolverConfig::new(b, cfg.max_iters, cfg.residual_tol);
                let outcomes: Vec<(bool, usize, f64)> = (0..cfg.recovery_trials)
                    .into_par_iter()
                    .map(|t| {
                        let ts = stream.child(t as u64);
                        let started = std::time::Instant::now();
                        let z = random_unit(n, ts.child(0))?;
                        let a = match &cov {
                            Some(c) => sample_sensing_cov(m, c, ts.child(1))?,
                            None => sample_sensing(m, n, ts.child(1))?,
                        };
                        let y = observe(&a, &z)?;
                        let r = run_batched(&a, &y, &solver_cfg, ts.child(2), Some(&z))?;
                        let ok = r.converged && metrics::success(&r.estimate, &z, cfg.success_tol)?;
                        Ok((ok, r.iterations, started.elapsed().as_secs_f64()))
                    })
                    .collect::<Result<_>>()?;
                let successes = outcomes.iter().filter(|(ok, _, _)| *ok).count();
                let mut iters: Vec<f64> = outcomes.iter().map(|&(_, i, _)| i as f64).collect();
                let mut secs: Vec<f64> = outcomes.iter().map(|&(_, _, s)| s).collect();
                iters.sort_by(|a, b| a.partial_cmp(b).unwrap());
                secs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let row = RecoveryRow {
                    n,
                    m,
                    b,
                    trials: cfg.recovery_trials,
                    success_rate: successes as f64 / cfg.recovery_trials as f64,
                    median_iters: quantile(&iters, 0.5),
                    median_seconds: quantile(&secs, 0.5),
                };
                if row.success_rate < cfg.recovery_min_rate {
                    pass = false;
                }
                rows.push(row);
            }
        }
    }
    Ok(RecoveryResult { rows, pass })
}

// ---------------------------------------------------------------------------
// Artifact output
// ---------------------------------------------------------------------------

pub fn write_step_map_csv<W: std::io::Write>(rows: &[QuantileRow], mut w: W) -> Result<()> {
    writeln!(w, "theta_in,q10,q50,q90,predicted,trials")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.theta_in, r.q10, r.q50, r.q90, r.predicted, r.trials)?;
    }
    Ok(())
}

pub fn write_expectation_csv<W: std::io::Write>(rows: &[ExpectationRow], mut w: W) -> Result<()> {
    writeln!(w, "theta,eta,coef_x,coef_d,expected_coef_x,expected_coef_d,orth_residual,samples")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.theta, r.eta, r.coef_x, r.coef_d, r.expected_coef_x, r.expected_coef_d, r.orth_residual, r.samples
        )?;
    }
    Ok(())
}

pub fn write_recovery_csv<W: std::io::Write>(rows: &[RecoveryRow], mut w: W) -> Result<()> {
    writeln!(w, "n,m,B,trials,success_rate,median_iters,median_seconds")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n, r.m, r.b, r.trials, r.success_rate, r.median_iters, r.median_seconds
        )?;
    }
    Ok(())
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Companion manifest: config echo, seed, content hash of the config,
/// wall time and the pass flag.
pub fn write_manifest(
    dir: &Path,
    experiment: &str,
    cfg: &ExperimentConfig,
    pass: bool,
    started_at: u64,
    elapsed_seconds: f64,
) -> Result<()> {
    let kv = cfg.to_kv_text();
    let mut hasher = Sha256::new();
    hasher.update(kv.as_bytes());
    let hash = hex_string(&hasher.finalize());
    let config_map: serde_json::Map<String, serde_json::Value> = kv
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
        .collect();
    let manifest = serde_json::json!({
        "experiment": experiment,
        "config": config_map,
        "master_seed": cfg.seed,
        "config_sha256": hash,
        "started_at": started_at,
        "elapsed_seconds": elapsed_seconds,
        "pass": pass,
    });
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&manifest).expect("manifest serialization"))?;
    Ok(())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_plot_script(dir: &Path, experiment: Experiment) -> Result<()> {
    let (name, body): (&str, &str) = match experiment {
        Experiment::StepMap => (
            "plot_step_map.py",
            r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("step_map.csv")))
t = [float(r["theta_in"]) for r in rows]
for col, style in [("q10", ":"), ("q50", "-"), ("q90", ":"), ("predicted", "--")]:
    plt.plot(t, [float(r[col]) for r in rows], style, label=col)
plt.xlabel("theta(x)")
plt.ylabel("theta(T(x))")
plt.legend()
plt.savefig("step_map.png", dpi=150)
"#,
        ),
        Experiment::HCurve => (
            "plot_h_table.py",
            r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("h_table.csv")))
t = [float(r["theta"]) for r in rows]
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
ax1.plot(t, [float(r["h"]) for r in rows])
ax1.set_xlabel("theta")
ax1.set_ylabel("h")
ax2.plot(t, [float(r["h_prime"]) for r in rows])
ax2.set_xlabel("theta")
ax2.set_ylabel("h'")
fig.savefig("h_table.png", dpi=150)
"#,
        ),
        Experiment::Expectation => (
            "plot_expectation.py",
            r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("expectation.csv")))
x = range(len(rows))
plt.plot(x, [float(r["coef_x"]) for r in rows], "o", label="coef_x")
plt.plot(x, [float(r["expected_coef_x"]) for r in rows], "x", label="h(theta)")
plt.plot(x, [float(r["coef_d"]) for r in rows], "s", label="coef_d")
plt.plot(x, [float(r["expected_coef_d"]) for r in rows], "+", label="h'(theta)")
plt.xticks(list(x), [f'{r["theta"]},{r["eta"]}' for r in rows], rotation=45)
plt.legend()
plt.tight_layout()
plt.savefig("expectation.png", dpi=150)
"#,
        ),
        Experiment::Recovery => (
            "plot_recovery.py",
            r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("recovery.csv")))
ratio = [float(r["m"]) / float(r["n"]) for r in rows]
plt.plot(ratio, [float(r["success_rate"]) for r in rows], "o-")
plt.xlabel("m / n")
plt.ylabel("success rate")
plt.ylim(-0.05, 1.05)
plt.savefig("recovery.png", dpi=150)
"#,
        ),
    };
    std::fs::write(dir.join(name), body)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    StepMap,
    HCurve,
    Expectation,
    Recovery,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::StepMap => "step-map",
            Experiment::HCurve => "h-curve",
            Experiment::Expectation => "expectation",
            Experiment::Recovery => "recovery",
        }
    }
}

/// Run one experiment end to end, writing CSV, manifest and a plot
/// script into `cfg.out_dir`. Returns the pass flag.
pub fn run_experiment(experiment: Experiment, cfg: &ExperimentConfig) -> Result<bool> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let started = unix_now();
    let clock = std::time::Instant::now();
    let pass = match experiment {
        Experiment::StepMap => {
            let r = exp_step_map(cfg)?;
            let f = std::fs::File::create(cfg.out_dir.join("step_map.csv"))?;
            write_step_map_csv(&r.rows, std::io::BufWriter::new(f))?;
            r.pass
        }
        Experiment::HCurve => {
            let r = exp_hcurve(cfg)?;
            let f = std::fs::File::create(cfg.out_dir.join("h_table.csv"))?;
            r.table.write_csv(std::io::BufWriter::new(f))?;
            let summary = serde_json::json!({
                "pass": r.report.pass,
                "min_slope_ratio": r.report.min_slope_ratio,
                "min_slope_ratio_lcb": r.report.min_slope_ratio_lcb,
                "min_h": r.report.min_h,
                "h_prime_lcb_min": r.report.h_prime_lcb_min,
                "lipschitz_interval": [r.report.lipschitz_interval.0, r.report.lipschitz_interval.1],
                "grid_spacing": r.report.grid_spacing,
            });
            std::fs::write(
                cfg.out_dir.join("growth_condition.json"),
                serde_json::to_string_pretty(&summary).expect("summary serialization"),
            )?;
            r.report.pass
        }
        Experiment::Expectation => {
            let r = exp_expectation_check(cfg)?;
            let f = std::fs::File::create(cfg.out_dir.join("expectation.csv"))?;
            write_expectation_csv(&r.rows, std::io::BufWriter::new(f))?;
            r.pass
        }
        Experiment::Recovery => {
            let r = exp_recovery(cfg)?;
            let f = std::fs::File::create(cfg.out_dir.join("recovery.csv"))?;
            write_recovery_csv(&r.rows, std::io::BufWriter::new(f))?;
            r.pass
        }
    };
    write_plot_script(&cfg.out_dir, experiment)?;
    write_manifest(&cfg.out_dir, experiment.name(), cfg, pass, started, clock.elapsed().as_secs_f64())?;
    Ok(pass)
}
