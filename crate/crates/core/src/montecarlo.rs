//! Simulated repeated experiments.
//!
//! A trial couples every window meter, postselects on `|f⟩` with the exact
//! acceptance probability, and on acceptance reads every pointer. Readings
//! are drawn from the exact joint conditional density one meter at a time:
//! meter `m` is sampled from its marginal given the readings of meters
//! `0..m`, with later meters traced out. That density is a signed mixture of
//! normals of variance σ² (see [`PointerState::normal_mixture`]), so it is
//! inverted through its closed-form CDF.
//!
//! Trial `i` of a run with master seed `s` draws from
//! [`RandomSource::for_trial`]`(s, i)`. Trials are grouped into fixed blocks
//! whose partial sums are merged in block order, so results are bitwise
//! identical for any worker count.
//!
//! [`PointerState::normal_mixture`]: crate::meter::PointerState::normal_mixture

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::meter::{exact_readouts, gaussian_overlap, idle_wavefunction, window_joint_state, MIN_POSTSELECTION_PROB};
use crate::rng::{derive_seed, RandomSource};
use crate::scenario::Scenario;

pub const MIN_TRIALS: u64 = 100;
const BLOCK_TRIALS: u64 = 4096;

/// One simulated run. `readings` is present only when postselection passed.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub readings: Option<Vec<f64>>,
}

impl TrialRecord {
    pub fn accepted(&self) -> bool {
        self.readings.is_some()
    }
}

/// A scenario compiled for repeated sampling: postselected branch
/// coefficients, pointer shifts, and the coherence factors of the meters
/// still to be read.
#[derive(Clone, Debug)]
pub struct Experiment {
    labels: Vec<String>,
    gs: Vec<f64>,
    sigmas: Vec<f64>,
    coeffs: Vec<Complex64>,
    /// `shifts[branch][meter]`.
    shifts: Vec<Vec<f64>>,
    /// `tail[m][i*n + j]`: product of overlaps over meters after `m`.
    tail: Vec<Vec<f64>>,
    acceptance: f64,
}

impl Experiment {
    pub fn prepare(s: &Scenario) -> Result<Self> {
        if s.meters().is_empty() {
            return Err(Error::InvalidArgument("scenario has no meters to simulate".into()));
        }
        let joint = window_joint_state(s)?.evolve(s.u_post())?;
        let coeffs = joint.postselected_coefficients(s.postselected())?;
        let shifts: Vec<Vec<f64>> = joint.branches().iter().map(|b| b.shifts.clone()).collect();
        let sigmas: Vec<f64> = s.meters().iter().map(|m| m.sigma()).collect();
        let n = coeffs.len();
        let n_meters = sigmas.len();

        let mut tail = vec![vec![1.0; n * n]; n_meters];
        for m in (0..n_meters.saturating_sub(1)).rev() {
            let next = m + 1;
            for i in 0..n {
                for j in 0..n {
                    tail[m][i * n + j] =
                        tail[next][i * n + j] * gaussian_overlap(shifts[i][next], shifts[j][next], sigmas[next]);
                }
            }
        }

        let mut acceptance = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acceptance += coeffs[i].conj()
                    * coeffs[j]
                    * tail[0][i * n + j]
                    * gaussian_overlap(shifts[i][0], shifts[j][0], sigmas[0]);
            }
        }
        let acceptance = acceptance.re;
        if !(acceptance >= MIN_POSTSELECTION_PROB) {
            return Err(Error::ZeroPostselection { prob: acceptance });
        }
        Ok(Self {
            labels: s.meters().iter().map(|m| m.label().to_owned()).collect(),
            gs: s.meters().iter().map(|m| m.g()).collect(),
            sigmas,
            coeffs,
            shifts,
            tail,
            acceptance: acceptance.min(1.0),
        })
    }

    pub fn acceptance_probability(&self) -> f64 {
        self.acceptance
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn meter_count(&self) -> usize {
        self.sigmas.len()
    }

    /// Density of meter `m` given the current (conditioned) coefficients,
    /// as normalized `(weight, center)` pairs.
    fn conditional_mixture(&self, m: usize, coeffs: &[Complex64]) -> Vec<(f64, f64)> {
        let n = coeffs.len();
        let sigma = self.sigmas[m];
        let mut mix: Vec<(f64, f64)> = Vec::with_capacity(n * n);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (si, sj) = (self.shifts[i][m], self.shifts[j][m]);
                let w = (coeffs[i].conj() * coeffs[j]).re * self.tail[m][i * n + j] * gaussian_overlap(si, sj, sigma);
                let center = 0.5 * (si + sj);
                total += w;
                match mix.iter_mut().find(|(_, c)| *c == center) {
                    Some(entry) => entry.0 += w,
                    None => mix.push((w, center)),
                }
            }
        }
        for entry in &mut mix {
            entry.0 /= total;
        }
        mix
    }

    /// Runs one trial, writing readings into `out` on acceptance.
    pub fn trial_into(&self, rng: &mut RandomSource, out: &mut Vec<f64>) -> bool {
        out.clear();
        if rng.uniform() >= self.acceptance {
            return false;
        }
        let mut coeffs = self.coeffs.clone();
        for m in 0..self.meter_count() {
            let mix = self.conditional_mixture(m, &coeffs);
            let q = sample_normal_mixture(&mix, self.sigmas[m], rng.uniform());
            out.push(q);
            let mut scale = 0.0f64;
            for (c, shifts) in coeffs.iter_mut().zip(&self.shifts) {
                *c *= idle_wavefunction(q - shifts[m], self.sigmas[m]);
                scale = scale.max(c.norm());
            }
            if scale > 0.0 {
                for c in &mut coeffs {
                    *c /= scale;
                }
            }
        }
        true
    }

    pub fn trial(&self, rng: &mut RandomSource) -> TrialRecord {
        let mut out = Vec::with_capacity(self.meter_count());
        let accepted = self.trial_into(rng, &mut out);
        TrialRecord {
            readings: accepted.then_some(out),
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse CDF of `Σ w_k N(μ_k, σ²)` at `u`, by safeguarded Newton.
fn sample_normal_mixture(mix: &[(f64, f64)], sigma: f64, u: f64) -> f64 {
    let cdf = |q: f64| mix.iter().map(|&(w, mu)| w * normal_cdf((q - mu) / sigma)).sum::<f64>();
    let pdf = |q: f64| mix.iter().map(|&(w, mu)| w * normal_pdf((q - mu) / sigma)).sum::<f64>() / sigma;
    let (min_mu, max_mu) = mix
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, mu)| (lo.min(mu), hi.max(mu)));
    let mut lo = min_mu - 40.0 * sigma;
    let mut hi = max_mu + 40.0 * sigma;
    let mut q = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = cdf(q) - u;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        let d = pdf(q);
        let newton = q - f / d;
        q = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-13 * sigma {
            break;
        }
    }
    q
}

/// Prepares the scenario and runs a single trial.
pub fn run_once(s: &Scenario, rng: &mut RandomSource) -> Result<TrialRecord> {
    Ok(Experiment::prepare(s)?.trial(rng))
}

/// Per-meter Monte Carlo summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub label: String,
    pub g: f64,
    pub mean_q: f64,
    /// Sample standard deviation over `sqrt(n_accepted)`.
    pub std_error: f64,
    pub n_accepted: u64,
    pub n_trials: u64,
    pub acceptance_rate: f64,
    /// `mean_q / g`.
    pub weak_value_estimate: f64,
}

impl Estimate {
    /// Standard error of `weak_value_estimate`.
    pub fn weak_value_std_error(&self) -> f64 {
        self.std_error / self.g
    }
}

#[derive(Clone, Debug)]
pub struct EstimateConfig {
    pub n_trials: u64,
    pub seed: u64,
    /// Rayon worker count; `None` uses the global pool.
    pub workers: Option<usize>,
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }
}

fn run_block(exp: &Experiment, seed: u64, start: u64, end: u64) -> Vec<Moments> {
    let mut moments = vec![Moments::default(); exp.meter_count()];
    let mut buf = Vec::with_capacity(exp.meter_count());
    for i in start..end {
        let mut rng = RandomSource::for_trial(seed, i);
        if exp.trial_into(&mut rng, &mut buf) {
            for (m, &q) in moments.iter_mut().zip(&buf) {
                m.push(q);
            }
        }
    }
    moments
}

/// Estimates every window meter from `n_trials` simulated runs.
pub fn estimate(s: &Scenario, n_trials: u64, seed: u64) -> Result<Vec<Estimate>> {
    estimate_with(
        s,
        &EstimateConfig {
            n_trials,
            seed,
            workers: None,
        },
    )
}

pub fn estimate_with(s: &Scenario, cfg: &EstimateConfig) -> Result<Vec<Estimate>> {
    if cfg.n_trials < MIN_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_TRIALS} trials are required, got {}",
            cfg.n_trials
        )));
    }
    if let Some(m) = s.meters().iter().find(|m| m.g() <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "meter {} has g = 0; weak-value estimates need g > 0",
            m.label()
        )));
    }
    let exp = Experiment::prepare(s)?;
    let n_blocks = cfg.n_trials.div_ceil(BLOCK_TRIALS);
    let work = || -> Vec<Vec<Moments>> {
        (0..n_blocks)
            .into_par_iter()
            .map(|b| {
                let start = b * BLOCK_TRIALS;
                let end = (start + BLOCK_TRIALS).min(cfg.n_trials);
                run_block(&exp, cfg.seed, start, end)
            })
            .collect()
    };
    let blocks = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut totals = vec![Moments::default(); exp.meter_count()];
    for block in &blocks {
        for (t, m) in totals.iter_mut().zip(block) {
            t.merge(m);
        }
    }
    let n_accepted = totals[0].n;
    if n_accepted < 2 {
        return Err(Error::TooFewAccepted {
            accepted: n_accepted,
            trials: cfg.n_trials,
            rate: n_accepted as f64 / cfg.n_trials as f64,
        });
    }
    let acceptance_rate = n_accepted as f64 / cfg.n_trials as f64;
    Ok(totals
        .iter()
        .enumerate()
        .map(|(m, t)| {
            let sd = (t.m2 / (t.n - 1) as f64).sqrt();
            Estimate {
                label: exp.labels[m].clone(),
                g: exp.gs[m],
                mean_q: t.mean,
                std_error: sd / (t.n as f64).sqrt(),
                n_accepted,
                n_trials: cfg.n_trials,
                acceptance_rate,
                weak_value_estimate: t.mean / exp.gs[m],
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Exact,
    Sampled { trials: u64 },
}

impl SweepMode {
    pub fn kind(&self) -> SweepKind {
        match self {
            SweepMode::Exact => SweepKind::Exact,
            SweepMode::Sampled { .. } => SweepKind::Sampled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub g: f64,
    /// `⟨Q⟩_f / g`.
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub meter_label: String,
    pub mode: SweepKind,
    pub rows: Vec<SweepRow>,
    /// Intercept `w` of the fit `w + c·g²`.
    pub extrapolated: f64,
    pub extrapolated_std_error: Option<f64>,
    /// Coefficient `c` of the fit.
    pub fit_curvature: f64,
    /// Root-mean-square fit residual.
    pub fit_residual: f64,
}

impl SweepResult {
    pub fn g_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.g).collect()
    }
}

/// Validates a coupling list for a sweep: at least three finite positive
/// values, strictly decreasing.
pub fn check_g_list(g_list: &[f64]) -> Result<()> {
    if g_list.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "g list needs at least 3 values, got {}",
            g_list.len()
        )));
    }
    if let Some(g) = g_list.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidArgument(format!("g values must be positive, got {g}")));
    }
    if let Some(w) = g_list.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "g list must be strictly decreasing, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Evaluates `⟨Q⟩_f / g` for the named meter at each coupling and fits
/// `w + c·g²`. The meter is evaluated alone in the window; other window
/// meters are detached so the fit isolates its own weak limit.
pub fn convergence_sweep(
    s: &Scenario,
    meter_label: &str,
    g_list: &[f64],
    mode: SweepMode,
    seed: u64,
) -> Result<SweepResult> {
    check_g_list(g_list)?;
    let meter = s
        .meter(meter_label)
        .ok_or_else(|| Error::InvalidArgument(format!("no meter labeled {meter_label:?}")))?;

    let mut rows = Vec::with_capacity(g_list.len());
    for (i, &g) in g_list.iter().enumerate() {
        let isolated = s.with_meters(vec![meter.with_coupling(g)?])?;
        let row = match mode {
            SweepMode::Exact => SweepRow {
                g,
                value: exact_readouts(&isolated)?[0].real_estimate(),
                std_error: None,
            },
            SweepMode::Sampled { trials } => {
                let est = &estimate(&isolated, trials, derive_seed(seed, i as u64))?[0];
                SweepRow {
                    g,
                    value: est.weak_value_estimate,
                    std_error: Some(est.weak_value_std_error()),
                }
            }
        };
        rows.push(row);
    }

    let fit = fit_even_quadratic(&rows);
    Ok(SweepResult {
        meter_label: meter_label.to_owned(),
        mode: mode.kind(),
        rows,
        extrapolated: fit.intercept,
        extrapolated_std_error: fit.intercept_std_error,
        fit_curvature: fit.curvature,
        fit_residual: fit.residual,
    })
}

struct QuadraticFit {
    intercept: f64,
    intercept_std_error: Option<f64>,
    curvature: f64,
    residual: f64,
}

/// Ordinary least squares of `value` on `(1, g²)`.
fn fit_even_quadratic(rows: &[SweepRow]) -> QuadraticFit {
    let n = rows.len() as f64;
    let x: Vec<f64> = rows.iter().map(|r| r.g * r.g).collect();
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let det = n * sxx - sx * sx;
    // intercept = Σ a_i y_i, curvature = Σ b_i y_i
    let a: Vec<f64> = x.iter().map(|xi| (sxx - sx * xi) / det).collect();
    let b: Vec<f64> = x.iter().map(|xi| (n * xi - sx) / det).collect();
    let intercept: f64 = a.iter().zip(rows).map(|(ai, r)| ai * r.value).sum();
    let curvature: f64 = b.iter().zip(rows).map(|(bi, r)| bi * r.value).sum();
    let residual = (x
        .iter()
        .zip(rows)
        .map(|(xi, r)| (r.value - intercept - curvature * xi).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let intercept_std_error = rows
        .iter()
        .map(|r| r.std_error)
        .collect::<Option<Vec<f64>>>()
        .map(|se| a.iter().zip(se).map(|(ai, s)| (ai * s).powi(2)).sum::<f64>().sqrt());
    QuadraticFit {
        intercept,
        intercept_std_error,
        curvature,
        residual,
    }
}
