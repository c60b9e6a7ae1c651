//! Monte-Carlo and analytic machinery for the angle-improvement
//! function h(theta) = E |a1| |a1 sin(theta) + a2 cos(theta)| over
//! independent CN(0,1) pairs, its derivatives, and the growth-condition
//! verification.
//!
//! Estimates are computed in fixed-size chunks, each chunk on its own
//! derived stream. Two evaluations sharing an [`RngStream`] therefore
//! see identical sample pairs (common random numbers), which is what
//! makes the finite-difference cross-checks and second-derivative
//! stencils statistically tight.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measurement::{sample_cn, C64};
use crate::rng::RngStream;

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// Samples per chunk; fixed so that chunk boundaries (and hence common
/// random numbers) do not depend on the total sample count.
const CHUNK: u64 = 1 << 15;

/// Lipschitz factor of h'' from the growth-condition analysis:
/// (3/2) Gamma(1/2) Gamma(5/2) + Gamma(2) = 9 pi / 8 + 1.
pub const H_SECOND_LIPSCHITZ: f64 = 9.0 * std::f64::consts::PI / 8.0 + 1.0;

/// Interval on which checking h' > c at spacing 1/10 suffices for the
/// growth condition: (pi/(16 L), pi/2 - 1/(2 L)).
pub fn growth_check_interval() -> (f64, f64) {
    let l = H_SECOND_LIPSCHITZ;
    (std::f64::consts::PI / (16.0 * l), FRAC_PI_2 - 1.0 / (2.0 * l))
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi/2]")));
    }
    Ok(())
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    Ok(())
}

/// Run a chunked pairwise Monte-Carlo estimate of `width` statistics of
/// an i.i.d. CN(0,1) pair. Returns (mean, standard error) per statistic.
/// Chunk results are combined in index order, so the output is
/// independent of thread scheduling.
fn pair_mc<F>(samples: u64, stream: RngStream, width: usize, eval: F) -> Vec<(f64, f64)>
where
    F: Fn(C64, C64, &mut [f64]) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            let mut rng = stream.child(c).rng();
            let mut sums = vec![0.0f64; width];
            let mut sumsqs = vec![0.0f64; width];
            let mut vals = vec![0.0f64; width];
            for _ in 0..count {
                let a1 = sample_cn(&mut rng);
                let a2 = sample_cn(&mut rng);
                eval(a1, a2, &mut vals);
                for (j, &v) in vals.iter().enumerate() {
                    sums[j] += v;
                    sumsqs[j] += v * v;
                }
            }
            (sums, sumsqs)
        })
        .collect();
    let mut sums = vec![0.0f64; width];
    let mut sumsqs = vec![0.0f64; width];
    for (s, sq) in &partials {
        for j in 0..width {
            sums[j] += s[j];
            sumsqs[j] += sq[j];
        }
    }
    let nf = samples as f64;
    (0..width)
        .map(|j| {
            let mean = sums[j] / nf;
            let var = ((sumsqs[j] - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (mean, (var / nf).sqrt())
        })
        .collect()
}

/// Per-sample h integrand at several angles (shared pair).
fn h_values_at(a1: C64, a2: C64, sin_cos: &[(f64, f64)], out: &mut [f64]) {
    let r1 = a1.norm();
    for (j, &(s, c)) in sin_cos.iter().enumerate() {
        out[j] = r1 * (a1 * s + a2 * c).norm();
    }
}

/// Monte-Carlo estimate of h(theta) with standard error.
pub fn h_mc(theta: f64, samples: u64, stream: RngStream) -> Result<(f64, f64)> {
    check_theta(theta)?;
    check_samples(samples)?;
    let sc = [(theta.sin(), theta.cos())];
    let r = pair_mc(samples, stream, 1, |a1, a2, out| h_values_at(a1, a2, &sc, out));
    Ok(r[0])
}

/// Evaluate h at several angles on common random numbers, one pass.
pub fn h_mc_stencil(thetas: &[f64], samples: u64, stream: RngStream) -> Result<Vec<(f64, f64)>> {
    for &t in thetas {
        check_theta(t)?;
    }
    check_samples(samples)?;
    let sc: Vec<(f64, f64)> = thetas.iter().map(|t| (t.sin(), t.cos())).collect();
    Ok(pair_mc(samples, stream, thetas.len(), |a1, a2, out| h_values_at(a1, a2, &sc, out)))
}

/// Pathwise-derivative estimate of h'(theta): the integrand is
/// |a1| * Re(conj(u) (a1 cos - a2 sin)) / |u| with u = a1 sin + a2 cos,
/// taken as 0 on the measure-zero event u = 0.
pub fn h_prime_mc(theta: f64, samples: u64, stream: RngStream) -> Result<(f64, f64)> {
    check_theta(theta)?;
    check_samples(samples)?;
    let (s, c) = (theta.sin(), theta.cos());
    let r = pair_mc(samples, stream, 1, |a1, a2, out| {
        let u = a1 * s + a2 * c;
        let un = u.norm();
        out[0] = if un == 0.0 {
            0.0
        } else {
            let du = a1 * c - a2 * s;
            a1.norm() * (u.conj() * du).re / un
        };
    });
    Ok(r[0])
}

/// Joint (h, h') estimate at one angle on shared samples.
pub fn h_and_prime_mc(theta: f64, samples: u64, stream: RngStream) -> Result<((f64, f64), (f64, f64))> {
    check_theta(theta)?;
    check_samples(samples)?;
    let (s, c) = (theta.sin(), theta.cos());
    let r = pair_mc(samples, stream, 2, |a1, a2, out| {
        let r1 = a1.norm();
        let u = a1 * s + a2 * c;
        let un = u.norm();
        out[0] = r1 * un;
        out[1] = if un == 0.0 {
            0.0
        } else {
            let du = a1 * c - a2 * s;
            r1 * (u.conj() * du).re / un
        };
    });
    Ok((r[0], r[1]))
}

/// Second derivative of h by finite differences of h_mc on common
/// random numbers; one-sided stencil at the interval endpoints.
pub fn h_second_fd(theta: f64, samples: u64, step: f64, stream: RngStream) -> Result<f64> {
    check_theta(theta)?;
    check_samples(samples)?;
    if !(step > 0.0) || 2.0 * step > FRAC_PI_2 {
        return Err(Error::Domain(format!("invalid finite-difference step {step}")));
    }
    let (thetas, weights): (Vec<f64>, [f64; 3]) = if theta - step < 0.0 {
        (vec![theta, theta + step, theta + 2.0 * step], [1.0, -2.0, 1.0])
    } else if theta + step > FRAC_PI_2 {
        (vec![theta, theta - step, theta - 2.0 * step], [1.0, -2.0, 1.0])
    } else {
        (vec![theta - step, theta, theta + step], [1.0, -2.0, 1.0])
    };
    let vals = h_mc_stencil(&thetas, samples, stream)?;
    Ok(weights.iter().zip(vals.iter()).map(|(w, (v, _))| w * v).sum::<f64>() / (step * step))
}

/// Closed form of the real-Gaussian variant:
/// (1/pi) (2 theta sin theta + 2 cos theta).
pub fn h_real_closed_form(theta: f64) -> f64 {
    (2.0 * theta * theta.sin() + 2.0 * theta.cos()) / std::f64::consts::PI
}

/// Monte-Carlo analogue of h with real N(0,1) pairs; validates the
/// sampling pipeline against the closed form.
pub fn h_real_mc(theta: f64, samples: u64, stream: RngStream) -> Result<(f64, f64)> {
    check_theta(theta)?;
    check_samples(samples)?;
    let (s, c) = (theta.sin(), theta.cos());
    // Reuse the complex sampler: scaled real/imag parts give two
    // independent N(0,1) reals per draw.
    let r = pair_mc(samples, stream, 1, |a1, a2, out| {
        let g1 = a1.re * std::f64::consts::SQRT_2;
        let g2 = a2.re * std::f64::consts::SQRT_2;
        out[0] = g1.abs() * (g1 * s + g2 * c).abs();
    });
    Ok(r[0])
}

/// Tabulated Monte-Carlo estimates of h and h' on a uniform grid.
#[derive(Debug, Clone)]
pub struct HTable {
    pub thetas: Vec<f64>,
    pub h_values: Vec<f64>,
    pub h_se: Vec<f64>,
    pub h_prime_values: Vec<f64>,
    pub h_prime_se: Vec<f64>,
    pub samples: u64,
    pub seed: RngStream,
}

impl HTable {
    /// Uniform grid of `points` angles on [0, pi/2], `samples` pairs per
    /// point. Grid points use independent derived streams.
    pub fn build(points: usize, samples: u64, stream: RngStream) -> Result<HTable> {
        if points < 2 {
            return Err(Error::Config("HTable needs at least 2 grid points".into()));
        }
        check_samples(samples)?;
        let thetas: Vec<f64> = (0..points)
            .map(|i| FRAC_PI_2 * i as f64 / (points - 1) as f64)
            .collect();
        let results: Vec<((f64, f64), (f64, f64))> = thetas
            .par_iter()
            .enumerate()
            .map(|(i, &t)| h_and_prime_mc(t, samples, stream.child(i as u64)))
            .collect::<Result<_>>()?;
        let mut table = HTable {
            thetas,
            h_values: Vec::with_capacity(points),
            h_se: Vec::with_capacity(points),
            h_prime_values: Vec::with_capacity(points),
            h_prime_se: Vec::with_capacity(points),
            samples,
            seed: stream,
        };
        for ((h, hse), (hp, hpse)) in results {
            table.h_values.push(h);
            table.h_se.push(hse);
            table.h_prime_values.push(hp);
            table.h_prime_se.push(hpse);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn grid_spacing(&self) -> f64 {
        FRAC_PI_2 / (self.len() - 1) as f64
    }

    /// Linear interpolation of (h, h') at `theta`.
    pub fn interpolate(&self, theta: f64) -> Result<(f64, f64)> {
        check_theta(theta)?;
        let last = self.len() - 1;
        if theta <= self.thetas[0] {
            return Ok((self.h_values[0], self.h_prime_values[0]));
        }
        if theta >= self.thetas[last] {
            return Ok((self.h_values[last], self.h_prime_values[last]));
        }
        let idx = match self.thetas.binary_search_by(|t| t.partial_cmp(&theta).unwrap()) {
            Ok(i) => return Ok((self.h_values[i], self.h_prime_values[i])),
            Err(i) => i - 1,
        };
        let t0 = self.thetas[idx];
        let t1 = self.thetas[idx + 1];
        let w = (theta - t0) / (t1 - t0);
        Ok((
            self.h_values[idx] * (1.0 - w) + self.h_values[idx + 1] * w,
            self.h_prime_values[idx] * (1.0 - w) + self.h_prime_values[idx + 1] * w,
        ))
    }

    /// Linearly interpolated standard errors of (h, h') at `theta`.
    pub fn interpolate_se(&self, theta: f64) -> Result<(f64, f64)> {
        check_theta(theta)?;
        let last = self.len() - 1;
        if theta <= self.thetas[0] {
            return Ok((self.h_se[0], self.h_prime_se[0]));
        }
        if theta >= self.thetas[last] {
            return Ok((self.h_se[last], self.h_prime_se[last]));
        }
        let idx = match self.thetas.binary_search_by(|t| t.partial_cmp(&theta).unwrap()) {
            Ok(i) => return Ok((self.h_se[i], self.h_prime_se[i])),
            Err(i) => i - 1,
        };
        let w = (theta - self.thetas[idx]) / (self.thetas[idx + 1] - self.thetas[idx]);
        Ok((
            self.h_se[idx] * (1.0 - w) + self.h_se[idx + 1] * w,
            self.h_prime_se[idx] * (1.0 - w) + self.h_prime_se[idx + 1] * w,
        ))
    }

    /// Serialize with the columns consumed by plotting and experiments.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,h,h_se,h_prime,h_prime_se,samples")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.thetas[i],
                self.h_values[i],
                self.h_se[i],
                self.h_prime_values[i],
                self.h_prime_se[i],
                self.samples
            )?;
        }
        Ok(())
    }
}

/// Predicted one-step angle map theta + arctan(h'/h), clamped to pi/2.
/// theta = 0 is a stationary direction in expectation and maps to 0.
pub fn predicted_theta_next(theta: f64, table: &HTable) -> Result<f64> {
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let (h, hp) = table.interpolate(theta)?;
    Ok((theta + (hp / h).atan()).min(FRAC_PI_2))
}

/// Numerical verification that h' stays positive on the open interval.
#[derive(Debug, Clone)]
pub struct GrowthReport {
    /// min over interior grid points of h'(theta) / min(theta, pi/2 - theta).
    pub min_slope_ratio: f64,
    /// Same ratio using the lower confidence bound h' - 4 se.
    pub min_slope_ratio_lcb: f64,
    /// min over the grid of h(theta).
    pub min_h: f64,
    /// min over interior grid points of h' - 4 se.
    pub h_prime_lcb_min: f64,
    /// Interval on which the Lipschitz argument needs the check; the
    /// grid check covers all of (0, pi/2), which is strictly stronger.
    pub lipschitz_interval: (f64, f64),
    pub grid_spacing: f64,
    pub pass: bool,
}

pub fn verify_growth_condition(table: &HTable) -> Result<GrowthReport> {
    let spacing = table.grid_spacing();
    if spacing > 0.1 + 1e-12 {
        return Err(Error::Config(format!(
            "grid spacing {spacing:.4} exceeds the required 0.1"
        )));
    }
    let mut min_slope_ratio = f64::INFINITY;
    let mut min_slope_ratio_lcb = f64::INFINITY;
    let mut h_prime_lcb_min = f64::INFINITY;
    for i in 0..table.len() {
        let t = table.thetas[i];
        if t <= 0.0 || t >= FRAC_PI_2 {
            continue;
        }
        let denom = t.min(FRAC_PI_2 - t);
        let hp = table.h_prime_values[i];
        let lcb = hp - 4.0 * table.h_prime_se[i];
        min_slope_ratio = min_slope_ratio.min(hp / denom);
        min_slope_ratio_lcb = min_slope_ratio_lcb.min(lcb / denom);
        h_prime_lcb_min = h_prime_lcb_min.min(lcb);
    }
    let min_h = table.h_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(GrowthReport {
        min_slope_ratio,
        min_slope_ratio_lcb,
        min_h,
        h_prime_lcb_min,
        lipschitz_interval: growth_check_interval(),
        grid_spacing: spacing,
        pass: h_prime_lcb_min > 0.0,
    })
}
