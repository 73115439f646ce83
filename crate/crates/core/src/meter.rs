//! Exact von Neumann meters with Gaussian pointers.
//!
//! The impulsive coupling `exp(-i g A ⊗ P)` translates the pointer by
//! `g·a_k` on the eigenspace of `a_k`. Starting from an idle Gaussian, the
//! joint system-meter state is therefore always a finite sum of system
//! components tensored with translated copies of the same Gaussian. That sum
//! is stored as a list of branches; nothing is discretized.
//!
//! Conventions: `ħ = 1`, idle pointer
//! `φ(q) = (2πσ²)^(-1/4) exp(-q²/(4σ²))` centered at zero, so `Var(Q) = σ²`
//! and `Var(P) = 1/(4σ²)`. Two pointers translated by `a` and `b` overlap by
//! `exp(-(a-b)²/(8σ²))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_operator, inner_product, spectral_decompose, Ket, LinearOperator, Projector,
    SpectralDecomposition, StateVector, UnnormalizedVector,
};
use crate::scenario::Scenario;

pub const DEFAULT_SIGMA: f64 = 1.0;
/// Branch components with a smaller norm are dropped after coupling.
pub const PRUNE_NORM: f64 = 1e-14;
/// Below this postselection probability pointer statistics are undefined.
pub const MIN_POSTSELECTION_PROB: f64 = 1e-15;

/// One von Neumann pointer measuring a Hermitian observable.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMeter {
    label: String,
    observable: SpectralDecomposition,
    g: f64,
    sigma: f64,
}

impl GaussianMeter {
    pub fn new(
        label: impl Into<String>,
        observable: SpectralDecomposition,
        g: f64,
        sigma: f64,
    ) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidArgument(format!("coupling g must be >= 0, got {g}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("pointer width sigma must be > 0, got {sigma}")));
        }
        Ok(Self {
            label: label.into(),
            observable,
            g,
            sigma,
        })
    }

    /// Meter on a projector, reading 1 inside its range and 0 outside.
    pub fn for_projector(label: impl Into<String>, p: &Projector, g: f64, sigma: f64) -> Result<Self> {
        Self::new(label, SpectralDecomposition::of_projector(p), g, sigma)
    }

    /// Meter on an arbitrary Hermitian operator.
    pub fn for_operator(label: impl Into<String>, op: &LinearOperator, g: f64, sigma: f64) -> Result<Self> {
        Self::new(label, spectral_decompose(op)?, g, sigma)
    }

    /// Same observable and width at another coupling strength.
    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        Self::new(self.label.clone(), self.observable.clone(), g, self.sigma)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn observable(&self) -> &SpectralDecomposition {
        &self.observable
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }
}

/// `∫ φ(q-a) φ(q-b) dq` for the idle pointer of width `sigma`.
pub fn gaussian_overlap(a: f64, b: f64, sigma: f64) -> f64 {
    let d = a - b;
    (-d * d / (8.0 * sigma * sigma)).exp()
}

/// Idle pointer wavefunction `φ(q)`.
pub fn idle_wavefunction(q: f64, sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) * (-q * q / (4.0 * sigma * sigma)).exp()
}

/// A system component whose meters sit at the given pointer shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub component: UnnormalizedVector,
    /// One entry per coupled meter.
    pub shifts: Vec<f64>,
}

/// System ⊗ meters, exact at every coupling strength.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchedJointState {
    meters: Vec<GaussianMeter>,
    branches: Vec<Branch>,
}

impl BranchedJointState {
    /// System state with no meters attached.
    pub fn new(system: &StateVector) -> Self {
        Self {
            meters: Vec::new(),
            branches: vec![Branch {
                component: system.to_unnormalized(),
                shifts: Vec::new(),
            }],
        }
    }

    pub fn meters(&self) -> &[GaussianMeter] {
        &self.meters
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches
            .first()
            .map(|b| b.component.dim())
            .unwrap_or_else(|| self.meters.first().map_or(0, GaussianMeter::dim))
    }

    /// Attaches `meter` and applies its impulsive coupling. Branches that end
    /// up with identical shift vectors are merged.
    pub fn couple(&self, meter: &GaussianMeter) -> Result<Self> {
        if meter.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: meter.dim(),
            });
        }
        let obs = meter.observable();
        let mut branches: Vec<Branch> = Vec::new();
        for branch in &self.branches {
            for (a, p) in obs.eigenvalues().iter().zip(obs.projectors()) {
                let component = apply_operator(p.as_operator(), &branch.component)?;
                let mut shifts = branch.shifts.clone();
                shifts.push(meter.g() * a);
                match branches.iter_mut().find(|b| b.shifts == shifts) {
                    Some(existing) => existing.component = existing.component.add(&component)?,
                    None => branches.push(Branch { component, shifts }),
                }
            }
        }
        branches.retain(|b| b.component.norm() >= PRUNE_NORM);
        let mut meters = self.meters.clone();
        meters.push(meter.clone());
        Ok(Self { meters, branches })
    }

    /// Applies a system operator to every branch; pointers are untouched.
    pub fn evolve(&self, op: &LinearOperator) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|b| {
                Ok(Branch {
                    component: apply_operator(op, &b.component)?,
                    shifts: b.shifts.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            meters: self.meters.clone(),
            branches,
        })
    }

    /// Product over meters of pointer overlaps between branches `i`, `j`.
    pub fn coherence(&self, i: usize, j: usize) -> f64 {
        self.coherence_excluding(i, j, usize::MAX)
    }

    fn coherence_excluding(&self, i: usize, j: usize, skip: usize) -> f64 {
        let (bi, bj) = (&self.branches[i], &self.branches[j]);
        self.meters
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != skip)
            .map(|(m, meter)| gaussian_overlap(bi.shifts[m], bj.shifts[m], meter.sigma()))
            .product()
    }

    /// Squared norm of the joint state, pointer overlaps included.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.branches.len();
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let ip = inner_product(&self.branches[i].component, &self.branches[j].component)
                    .expect("branches share a dim");
                total += ip * self.coherence(i, j);
            }
        }
        total.re
    }

    /// System state with all meters traced out: `Σ_ij coh_ij |v_i⟩⟨v_j|`.
    pub fn reduced_density(&self) -> LinearOperator {
        let dim = self.dim();
        let mut m = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (i, bi) in self.branches.iter().enumerate() {
            for (j, bj) in self.branches.iter().enumerate() {
                let w = Complex64::new(self.coherence(i, j), 0.0);
                m += bi.component.column() * bj.component.column().adjoint() * w;
            }
        }
        LinearOperator::from_matrix(m).expect("square")
    }

    /// `⟨f|v_i⟩` for every branch.
    pub fn postselected_coefficients(&self, f: &StateVector) -> Result<Vec<Complex64>> {
        self.branches
            .iter()
            .map(|b| inner_product(f, &b.component))
            .collect()
    }
}

/// Free-function form of [`BranchedJointState::couple`].
pub fn couple(joint: &BranchedJointState, meter: &GaussianMeter) -> Result<BranchedJointState> {
    joint.couple(meter)
}

/// Postselected (unnormalized) state of one meter, the others traced out.
///
/// The pointer wavefunction is `Σ c_k φ(q - shift_k)`; when other meters were
/// traced, each pair `(k, l)` additionally carries a real coherence factor,
/// the product of the other meters' pointer overlaps. With a single meter
/// every factor is 1 and the state is pure.
#[derive(Clone, Debug, PartialEq)]
pub struct PointerState {
    label: String,
    g: f64,
    sigma: f64,
    terms: Vec<(Complex64, f64)>,
    coherence: Vec<f64>,
}

impl PointerState {
    /// A pure pointer superposition.
    pub fn pure(label: impl Into<String>, g: f64, sigma: f64, terms: Vec<(Complex64, f64)>) -> Self {
        let n = terms.len();
        Self {
            label: label.into(),
            g,
            sigma,
            terms,
            coherence: vec![1.0; n * n],
        }
    }

    /// General form; `coherence` is row-major `n × n`, real and symmetric.
    pub fn with_coherence(
        label: impl Into<String>,
        g: f64,
        sigma: f64,
        terms: Vec<(Complex64, f64)>,
        coherence: Vec<f64>,
    ) -> Result<Self> {
        let n = terms.len();
        if coherence.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: coherence.len(),
            });
        }
        Ok(Self {
            label: label.into(),
            g,
            sigma,
            terms,
            coherence,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn terms(&self) -> &[(Complex64, f64)] {
        &self.terms
    }

    pub fn coherence(&self, k: usize, l: usize) -> f64 {
        self.coherence[k * self.terms.len() + l]
    }

    /// `Σ_kl conj(c_k) c_l W_kl · f(s_k, s_l) · overlap_kl`.
    fn pair_sum(&self, f: impl Fn(f64, f64) -> Complex64) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        for (k, &(ck, sk)) in self.terms.iter().enumerate() {
            for (l, &(cl, sl)) in self.terms.iter().enumerate() {
                let w = self.coherence(k, l) * gaussian_overlap(sk, sl, self.sigma);
                total += ck.conj() * cl * w * f(sk, sl);
            }
        }
        total
    }

    pub fn norm_sqr(&self) -> f64 {
        self.pair_sum(|_, _| Complex64::new(1.0, 0.0)).re
    }

    /// Unnormalized position density at `q`.
    pub fn density(&self, q: f64) -> f64 {
        let mut total = 0.0;
        for (k, &(ck, sk)) in self.terms.iter().enumerate() {
            let fk = idle_wavefunction(q - sk, self.sigma);
            for (l, &(cl, sl)) in self.terms.iter().enumerate() {
                let fl = idle_wavefunction(q - sl, self.sigma);
                total += (ck.conj() * cl).re * self.coherence(k, l) * fk * fl;
            }
        }
        total
    }

    /// The position density as a signed mixture of normals of variance σ²:
    /// `φ(q-a)φ(q-b) = overlap(a,b) · N(q; (a+b)/2, σ²)`. Weights are
    /// normalized to sum to 1; equal centers are combined.
    pub fn normal_mixture(&self) -> Result<Vec<(f64, f64)>> {
        let norm = self.norm_sqr();
        if !(norm > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let mut mix: Vec<(f64, f64)> = Vec::new();
        for (k, &(ck, sk)) in self.terms.iter().enumerate() {
            for (l, &(cl, sl)) in self.terms.iter().enumerate() {
                let w = (ck.conj() * cl).re * self.coherence(k, l) * gaussian_overlap(sk, sl, self.sigma);
                let center = 0.5 * (sk + sl);
                match mix.iter_mut().find(|(_, c)| *c == center) {
                    Some(entry) => entry.0 += w,
                    None => mix.push((w, center)),
                }
            }
        }
        for entry in &mut mix {
            entry.0 /= norm;
        }
        Ok(mix)
    }
}

/// Outcome of postselecting a joint state on `|f⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Postselection {
    /// Acceptance probability, pointer overlaps included.
    pub probability: f64,
    /// One pointer state per meter, in coupling order.
    pub pointers: Vec<PointerState>,
}

/// Projects every branch onto `⟨f|` and reads out each meter.
pub fn postselect(joint: &BranchedJointState, f: &StateVector) -> Result<Postselection> {
    if f.dim() != joint.dim() {
        return Err(Error::Dimension {
            expected: joint.dim(),
            found: f.dim(),
        });
    }
    let coeffs = joint.postselected_coefficients(f)?;
    let n = coeffs.len();
    let mut probability = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            probability += coeffs[i].conj() * coeffs[j] * joint.coherence(i, j);
        }
    }
    let probability = probability.re;
    if !(probability >= MIN_POSTSELECTION_PROB) {
        return Err(Error::ZeroPostselection { prob: probability });
    }
    let pointers = joint
        .meters()
        .iter()
        .enumerate()
        .map(|(m, meter)| {
            let terms = coeffs
                .iter()
                .zip(joint.branches())
                .map(|(&c, b)| (c, b.shifts[m]))
                .collect();
            let mut coherence = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    coherence.push(joint.coherence_excluding(i, j, m));
                }
            }
            PointerState::with_coherence(meter.label(), meter.g(), meter.sigma(), terms, coherence)
        })
        .collect::<Result<_>>()?;
    Ok(Postselection {
        probability,
        pointers,
    })
}

/// Normalized pointer position and momentum means.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointerExpectations {
    pub mean_q: f64,
    pub mean_p: f64,
}

/// Closed-form `⟨Q⟩` and `⟨P⟩` of a postselected pointer:
///
/// `⟨Q⟩ = N⁻¹ Σ conj(c_k) c_l W_kl · (s_k + s_l)/2 · overlap_kl`
/// `⟨P⟩ = N⁻¹ Σ conj(c_k) c_l W_kl · i(s_k - s_l)/(4σ²) · overlap_kl`
pub fn pointer_expectations(p: &PointerState) -> Result<PointerExpectations> {
    let norm = p.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let four_var_q = 4.0 * p.sigma * p.sigma;
    let q = p.pair_sum(|a, b| Complex64::new(0.5 * (a + b), 0.0));
    let mom = p.pair_sum(|a, b| Complex64::new(0.0, (a - b) / four_var_q));
    Ok(PointerExpectations {
        mean_q: q.re / norm,
        mean_p: mom.re / norm,
    })
}

/// `⟨reference|ρ|reference⟩` for the system state with all meters traced.
pub fn reduced_state_fidelity(joint: &BranchedJointState, reference: &StateVector) -> Result<f64> {
    if reference.dim() != joint.dim() {
        return Err(Error::Dimension {
            expected: joint.dim(),
            found: reference.dim(),
        });
    }
    let d = joint.postselected_coefficients(reference)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (i, di) in d.iter().enumerate() {
        for (j, dj) in d.iter().enumerate() {
            total += di * dj.conj() * joint.coherence(i, j);
        }
    }
    Ok(total.re.clamp(0.0, 1.0))
}

/// Joint state right after every window meter has coupled at `t_m`.
pub fn window_joint_state(s: &Scenario) -> Result<BranchedJointState> {
    let mut joint = BranchedJointState::new(&s.state_at_window());
    for meter in s.meters() {
        joint = joint.couple(meter)?;
    }
    Ok(joint)
}

/// Couples the window meters, evolves to `t_f` and postselects on `|f⟩`.
pub fn window_readout(s: &Scenario) -> Result<Postselection> {
    let joint = window_joint_state(s)?.evolve(s.u_post())?;
    postselect(&joint, s.postselected())
}

/// Exact finite-coupling readout of one meter.
#[derive(Clone, Debug, PartialEq)]
pub struct MeterReadout {
    pub label: String,
    pub g: f64,
    pub sigma: f64,
    pub mean_q: f64,
    pub mean_p: f64,
}

impl MeterReadout {
    /// `⟨Q⟩_f / g`, which tends to the real part of the weak value.
    pub fn real_estimate(&self) -> f64 {
        self.mean_q / self.g
    }

    /// `2σ² ⟨P⟩_f / g`, which tends to the imaginary part of the weak value.
    pub fn imag_estimate(&self) -> f64 {
        2.0 * self.sigma * self.sigma * self.mean_p / self.g
    }
}

/// Exact pointer means for every window meter.
pub fn exact_readouts(s: &Scenario) -> Result<Vec<MeterReadout>> {
    let post = window_readout(s)?;
    post.pointers
        .iter()
        .map(|p| {
            let e = pointer_expectations(p)?;
            Ok(MeterReadout {
                label: p.label().to_owned(),
                g: p.g(),
                sigma: p.sigma(),
                mean_q: e.mean_q,
                mean_p: e.mean_p,
            })
        })
        .collect()
}
