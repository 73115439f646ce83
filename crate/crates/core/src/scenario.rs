//! Preselection, unitary evolution, a quiescent measurement window, and
//! postselection. Also strong (projective) measurement with collapse.
//!
//! Times are symbolic: `t_i < t_m < t_f`. `u_pre` evolves from `t_i` to the
//! window at `t_m`, `u_post` from the window to `t_f`. No evolution happens
//! inside the window, so every meter attached to it sees the same state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_operator, inner_product, validate, Ket, LinearOperator, Role, SpectralDecomposition,
    StateVector, ROLE_TOL,
};
use crate::meter::GaussianMeter;
use crate::rng::RandomSource;

/// Scenarios with `|⟨f|U|in⟩|` below this are rejected.
pub const MIN_TRANSITION_AMPLITUDE: f64 = 1e-12;

/// Meters attached at `t_m`, in coupling order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuiescentWindow {
    meters: Vec<GaussianMeter>,
}

impl QuiescentWindow {
    pub fn new(meters: Vec<GaussianMeter>) -> Self {
        Self { meters }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn meters(&self) -> &[GaussianMeter] {
        &self.meters
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    preselected: StateVector,
    u_pre: LinearOperator,
    u_post: LinearOperator,
    postselected: StateVector,
    window: QuiescentWindow,
}

impl Scenario {
    pub fn new(
        preselected: StateVector,
        u_pre: LinearOperator,
        u_post: LinearOperator,
        postselected: StateVector,
        window: QuiescentWindow,
    ) -> Result<Self> {
        let dim = preselected.dim();
        for found in [postselected.dim(), u_pre.dim(), u_post.dim()] {
            if found != dim {
                return Err(Error::Dimension { expected: dim, found });
            }
        }
        for m in window.meters() {
            if m.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        if !validate(&u_pre, Role::Unitary, ROLE_TOL) || !validate(&u_post, Role::Unitary, ROLE_TOL) {
            return Err(Error::NotUnitary);
        }
        let s = Self {
            preselected,
            u_pre,
            u_post,
            postselected,
            window,
        };
        let magnitude = transition_amplitude(&s).norm();
        if magnitude < MIN_TRANSITION_AMPLITUDE {
            return Err(Error::VanishingAmplitude { magnitude });
        }
        Ok(s)
    }

    /// Scenario with trivial evolution on both sides of the window.
    pub fn without_evolution(
        preselected: StateVector,
        postselected: StateVector,
        meters: Vec<GaussianMeter>,
    ) -> Result<Self> {
        let dim = preselected.dim();
        Self::new(
            preselected,
            LinearOperator::identity(dim),
            LinearOperator::identity(dim),
            postselected,
            QuiescentWindow::new(meters),
        )
    }

    /// Same timeline, different meters.
    pub fn with_meters(&self, meters: Vec<GaussianMeter>) -> Result<Self> {
        Self::new(
            self.preselected.clone(),
            self.u_pre.clone(),
            self.u_post.clone(),
            self.postselected.clone(),
            QuiescentWindow::new(meters),
        )
    }

    pub fn dim(&self) -> usize {
        self.preselected.dim()
    }

    pub fn preselected(&self) -> &StateVector {
        &self.preselected
    }

    pub fn postselected(&self) -> &StateVector {
        &self.postselected
    }

    pub fn u_pre(&self) -> &LinearOperator {
        &self.u_pre
    }

    pub fn u_post(&self) -> &LinearOperator {
        &self.u_post
    }

    pub fn window(&self) -> &QuiescentWindow {
        &self.window
    }

    pub fn meters(&self) -> &[GaussianMeter] {
        self.window.meters()
    }

    pub fn meter(&self, label: &str) -> Option<&GaussianMeter> {
        self.meters().iter().find(|m| m.label() == label)
    }

    /// `U(t_f, t_i) = u_post · u_pre`.
    pub fn total_evolution(&self) -> LinearOperator {
        self.u_post.compose(&self.u_pre).expect("dims checked")
    }

    /// `U(t_m, t_i)|in⟩`, the state every window meter sees.
    pub fn state_at_window(&self) -> StateVector {
        apply_operator(&self.u_pre, &self.preselected)
            .and_then(|v| v.normalize())
            .expect("unitary image of a unit vector")
    }

    /// `⟨f|U(t_f, t_m)`, as a ket: `U(t_f, t_m)†|f⟩`.
    pub fn retrodicted_at_window(&self) -> StateVector {
        apply_operator(&self.u_post.adjoint(), &self.postselected)
            .and_then(|v| v.normalize())
            .expect("unitary image of a unit vector")
    }
}

/// `⟨f|u_post · u_pre|in⟩`.
pub fn transition_amplitude(s: &Scenario) -> Complex64 {
    s.total_evolution()
        .sandwich(&s.postselected, &s.preselected)
        .expect("dims checked")
}

/// `prob(in → f) = |⟨f|U(t_f, t_i)|in⟩|²`.
pub fn prob_transition(s: &Scenario) -> f64 {
    transition_amplitude(s).norm_sqr()
}

/// `‖Π_k U(t_m, t_i)|in⟩‖²`, the Born probability of channel `k` at `t_m`.
pub fn prob_intermediate(s: &Scenario, k: usize, basis: &SpectralDecomposition) -> Result<f64> {
    let p = basis.projector(k)?;
    Ok(apply_operator(p.as_operator(), &s.state_at_window())?.norm_sqr())
}

/// `|⟨f|U(t_f, t_m) Π_k U(t_m, t_i)|in⟩|²`.
///
/// This is the product of squared amplitudes exactly as written for
/// "in → f via a_k"; it is not normalized over channels, so its sum over
/// `k` generally differs from [`prob_transition`].
pub fn prob_via_channel(s: &Scenario, k: usize, basis: &SpectralDecomposition) -> Result<f64> {
    Ok(channel_amplitude(s, k, basis)?.norm_sqr())
}

/// `⟨f|U(t_f, t_m) Π_k U(t_m, t_i)|in⟩`.
pub fn channel_amplitude(s: &Scenario, k: usize, basis: &SpectralDecomposition) -> Result<Complex64> {
    let p = basis.projector(k)?;
    if p.dim() != s.dim() {
        return Err(Error::Dimension {
            expected: s.dim(),
            found: p.dim(),
        });
    }
    let projected = apply_operator(p.as_operator(), &apply_operator(&s.u_pre, &s.preselected)?)?;
    let evolved = apply_operator(&s.u_post, &projected)?;
    inner_product(&s.postselected, &evolved)
}

/// Outcome of a projective measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongOutcome {
    pub eigenvalue_index: usize,
    /// Born probability of the observed outcome.
    pub probability: f64,
    /// Normalized post-measurement state.
    pub collapsed: StateVector,
}

/// Born probabilities `‖Π_k|ψ⟩‖²` for every outcome.
pub fn born_probabilities(state: &StateVector, basis: &SpectralDecomposition) -> Result<Vec<f64>> {
    basis
        .projectors()
        .iter()
        .map(|p| Ok(apply_operator(p.as_operator(), state)?.norm_sqr()))
        .collect()
}

/// Samples an outcome with Born probabilities and collapses the state onto
/// the observed eigenspace.
pub fn strong_measure(
    state: &StateVector,
    basis: &SpectralDecomposition,
    rng: &mut RandomSource,
) -> Result<StrongOutcome> {
    if basis.dim() != state.dim() {
        return Err(Error::Dimension {
            expected: state.dim(),
            found: basis.dim(),
        });
    }
    let probs = born_probabilities(state, basis)?;
    let total: f64 = probs.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    // Rounding can leave `u` past the last partial sum; fall back to the
    // last outcome that carries weight.
    let mut chosen = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            chosen = k;
            break;
        }
    }
    let projected = apply_operator(basis.projectors()[chosen].as_operator(), state)?;
    Ok(StrongOutcome {
        eigenvalue_index: chosen,
        probability: probs[chosen],
        collapsed: projected.normalize()?,
    })
}
