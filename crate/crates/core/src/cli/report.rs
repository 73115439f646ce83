//! Report documents and their text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::montecarlo::SweepResult;
use crate::weakvalues::Presence;

pub const SCHEMA: &str = "weakvalue-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub scenario: ScenarioSummary,
    pub weak_values: Vec<WeakValueEntry>,
    pub channels: Option<Vec<ChannelEntry>>,
    pub paradox: Option<ParadoxEntry>,
    pub monte_carlo: Option<MonteCarloEntry>,
    pub sweep: Option<SweepResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSummary {
    pub name: String,
    pub dim: usize,
    pub transition_amplitude_re: f64,
    pub transition_amplitude_im: f64,
    pub prob_transition: f64,
    pub meters: Vec<MeterSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterSummary {
    pub label: String,
    pub g: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakValueEntry {
    pub label: String,
    pub re: f64,
    pub im: f64,
    pub verdict: Presence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub label: String,
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub prob_intermediate: f64,
    pub prob_via_channel: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParadoxEntry {
    pub zero_tol: f64,
    pub first: WeakValueEntry,
    pub second: WeakValueEntry,
    pub sum: WeakValueEntry,
    pub contradiction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloEntry {
    pub trials: u64,
    pub seed: u64,
    pub n_accepted: u64,
    pub acceptance_rate: f64,
    pub analytic_acceptance: f64,
    /// Number of standard errors used by the zero test.
    pub verdict_sigma_k: f64,
    pub estimates: Vec<MeterEstimateEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterEstimateEntry {
    pub label: String,
    pub g: f64,
    pub mean_q: f64,
    pub std_error: f64,
    pub weak_value_estimate: f64,
    pub weak_value_std_error: f64,
    /// Exact `⟨Q⟩_f / g` at this coupling, for comparison.
    pub exact_mean_q_over_g: f64,
    pub verdict: Presence,
}

impl Report {
    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_machine(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Human-readable rendering; numbers at 12 significant digits.
    /// `generated_at` (unix seconds) only ever appears here.
    pub fn to_text(&self, generated_at: u64) -> String {
        let mut out = String::new();
        let sc = &self.scenario;
        let _ = writeln!(out, "# weakvalue {} | scenario {} (dim {})", self.command, sc.name, sc.dim);
        let _ = writeln!(out, "# generated at unix time {generated_at}");
        let _ = writeln!(
            out,
            "transition amplitude <f|U|in> = {} {}",
            sig12(sc.transition_amplitude_re),
            signed_imag(sc.transition_amplitude_im)
        );
        let _ = writeln!(out, "prob(in -> f) = {}", sig12(sc.prob_transition));
        if !sc.meters.is_empty() {
            let _ = writeln!(out, "\nmeters");
            let _ = writeln!(out, "  {:<10} {:>20} {:>20}", "label", "g", "sigma");
            for m in &sc.meters {
                let _ = writeln!(out, "  {:<10} {:>20} {:>20}", m.label, sig12(m.g), sig12(m.sigma));
            }
        }

        if let Some(channels) = &self.channels {
            let _ = writeln!(out, "\nchannels");
            let _ = writeln!(
                out,
                "  {:<10} {:>20} {:>20} {:>20} {:>20}",
                "label", "amp re", "amp im", "prob(in->a)", "prob(f|a,in)"
            );
            for c in channels {
                let _ = writeln!(
                    out,
                    "  {:<10} {:>20} {:>20} {:>20} {:>20}",
                    c.label,
                    sig12(c.amplitude_re),
                    sig12(c.amplitude_im),
                    sig12(c.prob_intermediate),
                    sig12(c.prob_via_channel)
                );
            }
        }

        if !self.weak_values.is_empty() {
            let _ = writeln!(out, "\nweak values");
            let _ = writeln!(out, "  {:<10} {:>20} {:>20}  verdict", "operator", "re", "im");
            for w in &self.weak_values {
                write_wv(&mut out, w);
            }
        }

        if let Some(p) = &self.paradox {
            let _ = writeln!(out, "\npair test (zero tol {})", sig12(p.zero_tol));
            let _ = writeln!(out, "  {:<10} {:>20} {:>20}  verdict", "operator", "re", "im");
            for w in [&p.first, &p.second, &p.sum] {
                write_wv(&mut out, w);
            }
            let _ = writeln!(out, "contradiction: {}", p.contradiction);
        }

        if let Some(mc) = &self.monte_carlo {
            let _ = writeln!(out, "\nmonte carlo: {} trials, seed {}", mc.trials, mc.seed);
            let _ = writeln!(
                out,
                "accepted {} (rate {}, analytic {})",
                mc.n_accepted,
                sig12(mc.acceptance_rate),
                sig12(mc.analytic_acceptance)
            );
            let _ = writeln!(
                out,
                "  {:<10} {:>20} {:>20} {:>20} {:>20} {:>20}  verdict (k = {})",
                "meter",
                "mean Q",
                "std error",
                "<Q>/g",
                "std error /g",
                "exact <Q>/g",
                sig12(mc.verdict_sigma_k)
            );
            for e in &mc.estimates {
                let _ = writeln!(
                    out,
                    "  {:<10} {:>20} {:>20} {:>20} {:>20} {:>20}  {}",
                    e.label,
                    sig12(e.mean_q),
                    sig12(e.std_error),
                    sig12(e.weak_value_estimate),
                    sig12(e.weak_value_std_error),
                    sig12(e.exact_mean_q_over_g),
                    e.verdict
                );
            }
        }

        if let Some(sw) = &self.sweep {
            let mode = match sw.mode {
                crate::montecarlo::SweepKind::Exact => "exact",
                crate::montecarlo::SweepKind::Sampled => "sampled",
            };
            let _ = writeln!(out, "\nsweep of meter {} ({mode})", sw.meter_label);
            let _ = writeln!(out, "  {:>20} {:>20} {:>20}", "g", "<Q>/g", "std error");
            for r in &sw.rows {
                let se = r.std_error.map_or_else(|| "-".to_owned(), sig12);
                let _ = writeln!(out, "  {:>20} {:>20} {:>20}", sig12(r.g), sig12(r.value), se);
            }
            let se = sw.extrapolated_std_error.map_or_else(|| "-".to_owned(), sig12);
            let _ = writeln!(out, "fit <Q>/g = w + c g^2");
            let _ = writeln!(out, "  extrapolated w = {} (std error {se})", sig12(sw.extrapolated));
            let _ = writeln!(out, "  curvature c    = {}", sig12(sw.fit_curvature));
            let _ = writeln!(out, "  rms residual   = {}", sig12(sw.fit_residual));
        }
        out
    }
}

fn write_wv(out: &mut String, w: &WeakValueEntry) {
    let _ = writeln!(
        out,
        "  {:<10} {:>20} {:>20}  {}",
        w.label,
        sig12(w.re),
        sig12(w.im),
        w.verdict
    );
}

fn signed_imag(im: f64) -> String {
    if im.is_sign_negative() {
        format!("- {}i", sig12(-im))
    } else {
        format!("+ {}i", sig12(im))
    }
}

/// Formats with 12 significant digits, trimming trailing zeros.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}
