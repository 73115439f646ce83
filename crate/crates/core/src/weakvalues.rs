//! Analytic weak values, the channel decomposition of the transition
//! amplitude, presence verdicts, and the additivity contradiction detector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_operator, inner_product, LinearOperator, Projector, SpectralDecomposition, ROLE_TOL};
use crate::scenario::{channel_amplitude, transition_amplitude, Scenario};

/// Default magnitude below which an analytic weak value counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Default number of standard errors for the sampled zero test.
pub const DEFAULT_SIGMA_K: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct WeakValue {
    pub value: Complex64,
    /// `⟨f|U(t_f,t_m)·op·U(t_m,t_i)|in⟩`.
    pub numerator: Complex64,
    pub operator_label: String,
}

impl WeakValue {
    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.operator_label = label.into();
        self
    }
}

/// `⟨f|U(t_f,t_m)·op·U(t_m,t_i)|in⟩ / ⟨f|U(t_f,t_i)|in⟩`.
pub fn weak_value(op: &LinearOperator, s: &Scenario) -> Result<WeakValue> {
    if op.dim() != s.dim() {
        return Err(Error::Dimension {
            expected: s.dim(),
            found: op.dim(),
        });
    }
    let at_window = apply_operator(s.u_pre(), s.preselected())?;
    let image = apply_operator(s.u_post(), &apply_operator(op, &at_window)?)?;
    let numerator = inner_product(s.postselected(), &image)?;
    Ok(WeakValue {
        value: numerator / transition_amplitude(s),
        numerator,
        operator_label: String::new(),
    })
}

/// Amplitude of each channel of a complete basis inserted at `t_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDecomposition {
    pub labels: Vec<String>,
    pub channel_amplitudes: Vec<Complex64>,
    pub total: Complex64,
}

impl ChannelDecomposition {
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.channel_amplitudes.len() {
            return Err(Error::Dimension {
                expected: self.channel_amplitudes.len(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// `|Σ_k amp_k - total|`; zero up to rounding for a complete basis.
    pub fn closure_error(&self) -> f64 {
        (self.channel_amplitudes.iter().sum::<Complex64>() - self.total).norm()
    }
}

pub fn channel_decomposition(s: &Scenario, basis: &SpectralDecomposition) -> Result<ChannelDecomposition> {
    if basis.dim() != s.dim() {
        return Err(Error::Dimension {
            expected: s.dim(),
            found: basis.dim(),
        });
    }
    let channel_amplitudes = (0..basis.len())
        .map(|k| channel_amplitude(s, k, basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelDecomposition {
        labels: (0..basis.len()).map(|k| k.to_string()).collect(),
        channel_amplitudes,
        total: transition_amplitude(s),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Presence {
    Present,
    Absent,
}

impl std::fmt::Display for Presence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Presence::Present => "PRESENT",
            Presence::Absent => "ABSENT",
        })
    }
}

/// Absent iff `|value| < zero_tol`. Sign and phase play no role.
pub fn presence_verdict(wv: &WeakValue, zero_tol: f64) -> Presence {
    debug_assert!(zero_tol > 0.0);
    if wv.value.norm() < zero_tol {
        Presence::Absent
    } else {
        Presence::Present
    }
}

/// Sampled counterpart: absent iff the estimate lies within `k` standard
/// errors of zero.
pub fn statistical_verdict(estimate: f64, std_error: f64, k: f64) -> Presence {
    if estimate.abs() <= k * std_error {
        Presence::Absent
    } else {
        Presence::Present
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParadoxReport {
    pub wv_o: WeakValue,
    pub wv_1: WeakValue,
    pub wv_sum: WeakValue,
    pub verdict_o: Presence,
    pub verdict_1: Presence,
    pub verdict_sum: Presence,
    /// Both components present while their sum is absent.
    pub contradiction: bool,
}

impl ParadoxReport {
    /// Names the two projectors; the sum becomes `"{o}+{1}"`.
    pub fn with_labels(mut self, label_o: &str, label_1: &str) -> Self {
        self.wv_o.operator_label = label_o.to_owned();
        self.wv_1.operator_label = label_1.to_owned();
        self.wv_sum.operator_label = format!("{label_o}+{label_1}");
        self
    }
}

/// Weak values of two orthogonal projectors and of their sum, all on the
/// same window state, with verdicts and the contradiction flag.
pub fn paradox_report(s: &Scenario, p_o: &Projector, p_1: &Projector, zero_tol: f64) -> Result<ParadoxReport> {
    let deviation = p_o.overlap_deviation(p_1)?;
    if deviation > ROLE_TOL {
        return Err(Error::NotOrthogonal { deviation });
    }
    let sum = p_o.sum(p_1)?;
    let wv_o = weak_value(p_o.as_operator(), s)?.labeled("P0");
    let wv_1 = weak_value(p_1.as_operator(), s)?.labeled("P1");
    let wv_sum = weak_value(sum.as_operator(), s)?.labeled("P0+P1");
    let verdict_o = presence_verdict(&wv_o, zero_tol);
    let verdict_1 = presence_verdict(&wv_1, zero_tol);
    let verdict_sum = presence_verdict(&wv_sum, zero_tol);
    let contradiction =
        verdict_o == Presence::Present && verdict_1 == Presence::Present && verdict_sum == Presence::Absent;
    Ok(ParadoxReport {
        wv_o,
        wv_1,
        wv_sum,
        verdict_o,
        verdict_1,
        verdict_sum,
        contradiction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn three_box() -> Scenario {
        Scenario::without_evolution(
            StateVector::normalized(vec![c(1.0), c(1.0), c(1.0)]).unwrap(),
            StateVector::normalized(vec![c(1.0), c(1.0), c(-1.0)]).unwrap(),
            vec![],
        )
        .unwrap()
    }

    fn boxp(k: usize) -> Projector {
        Projector::basis(3, k).unwrap()
    }

    #[test]
    fn identity_weak_value_is_one() {
        let wv = weak_value(&LinearOperator::identity(3), &three_box()).unwrap();
        assert!((wv.value - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn three_box_weak_values() {
        let s = three_box();
        for (k, want) in [(0, 1.0), (1, 1.0), (2, -1.0)] {
            let wv = weak_value(boxp(k).as_operator(), &s).unwrap();
            assert!((wv.value - c(want)).norm() < 1e-12, "box {k}: {}", wv.value);
        }
        let ac = boxp(0).sum(&boxp(2)).unwrap();
        assert!(weak_value(ac.as_operator(), &s).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn weak_value_dimension_mismatch() {
        assert!(weak_value(&LinearOperator::identity(2), &three_box()).is_err());
    }

    #[test]
    fn three_box_channels() {
        let d = channel_decomposition(&three_box(), &SpectralDecomposition::computational(3)).unwrap();
        for (amp, want) in d.channel_amplitudes.iter().zip([1.0, 1.0, -1.0]) {
            assert!((amp - c(want / 3.0)).norm() < 1e-15);
        }
        assert!((d.total - c(1.0 / 3.0)).norm() < 1e-15);
        assert!(d.closure_error() < 1e-15);
    }

    #[test]
    fn single_channel_basis() {
        let basis = SpectralDecomposition::of_projector(&Projector::identity(3));
        let d = channel_decomposition(&three_box(), &basis).unwrap();
        assert_eq!(d.channel_amplitudes.len(), 1);
        assert!((d.channel_amplitudes[0] - d.total).norm() < 1e-15);
        assert!(d.clone().with_labels(vec!["a".into(), "b".into()]).is_err());
    }

    #[test]
    fn verdicts_depend_on_magnitude_only() {
        let mk = |z: Complex64| WeakValue {
            value: z,
            numerator: z,
            operator_label: String::new(),
        };
        assert_eq!(presence_verdict(&mk(c(0.0)), DEFAULT_ZERO_TOL), Presence::Absent);
        assert_eq!(presence_verdict(&mk(c(-1.0)), DEFAULT_ZERO_TOL), Presence::Present);
        assert_eq!(presence_verdict(&mk(Complex64::new(0.0, 0.5)), DEFAULT_ZERO_TOL), Presence::Present);
        assert_eq!(statistical_verdict(0.01, 0.01, 3.0), Presence::Absent);
        assert_eq!(statistical_verdict(-0.5, 0.01, 3.0), Presence::Present);
    }

    #[test]
    fn three_box_contradiction() {
        let r = paradox_report(&three_box(), &boxp(0), &boxp(2), DEFAULT_ZERO_TOL)
            .unwrap()
            .with_labels("A", "C");
        assert!(r.contradiction);
        assert_eq!(r.verdict_o, Presence::Present);
        assert_eq!(r.verdict_1, Presence::Present);
        assert_eq!(r.verdict_sum, Presence::Absent);
        assert_eq!(r.wv_sum.operator_label, "A+C");
    }

    #[test]
    fn three_box_no_contradiction_for_a_b() {
        let r = paradox_report(&three_box(), &boxp(0), &boxp(1), DEFAULT_ZERO_TOL).unwrap();
        assert!(!r.contradiction);
        assert!((r.wv_sum.value - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn orthogonal_channels_all_absent() {
        let a = StateVector::basis(3, 0).unwrap();
        let s = Scenario::without_evolution(a.clone(), a, vec![]).unwrap();
        let r = paradox_report(&s, &boxp(1), &boxp(2), DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(
            [r.verdict_o, r.verdict_1, r.verdict_sum],
            [Presence::Absent, Presence::Absent, Presence::Absent]
        );
        assert!(!r.contradiction);
    }

    #[test]
    fn rejects_overlapping_projectors() {
        let ab = boxp(0).sum(&boxp(1)).unwrap();
        assert!(matches!(
            paradox_report(&three_box(), &ab, &boxp(0), DEFAULT_ZERO_TOL),
            Err(Error::NotOrthogonal { .. })
        ));
    }
}
