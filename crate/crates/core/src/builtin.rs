//! Built-in scenarios.
//!
//! `three-box`: one particle in boxes `A`, `B`, `C`, no evolution,
//! `|in⟩ = (|A⟩ + |B⟩ + |C⟩)/√3`, `|f⟩ = (|A⟩ + |B⟩ - |C⟩)/√3`. The window
//! holds three simultaneous meters on `Π_A`, `Π_C` and `Π_A + Π_C`.

use num_complex::Complex64;

use crate::document::{LoadedScenario, MeterDocument, ObservableDocument, ScenarioDocument};
use crate::hilbert::{Projector, StateVector};
use crate::meter::{GaussianMeter, DEFAULT_SIGMA};
use crate::scenario::Scenario;

pub const THREE_BOX: &str = "three-box";
/// Coupling of the built-in three-box meters.
pub const THREE_BOX_G: f64 = 0.05;
pub const NAMES: &[&str] = &[THREE_BOX];

/// `(|in⟩, |f⟩)` of the three-box arrangement.
pub fn three_box_states() -> (StateVector, StateVector) {
    let c = |x: f64| Complex64::new(x, 0.0);
    (
        StateVector::normalized(vec![c(1.0), c(1.0), c(1.0)]).expect("nonzero"),
        StateVector::normalized(vec![c(1.0), c(1.0), c(-1.0)]).expect("nonzero"),
    )
}

/// `Π_A`, `Π_B` or `Π_C`.
pub fn box_projector(label: &str) -> Option<Projector> {
    let k = ["A", "B", "C"].iter().position(|&l| l == label)?;
    Projector::basis(3, k).ok()
}

/// Three-box timeline with the given window meters.
pub fn three_box_scenario(meters: Vec<GaussianMeter>) -> Scenario {
    let (pre, post) = three_box_states();
    Scenario::without_evolution(pre, post, meters).expect("|<f|in>| = 1/3")
}

/// Meter on a single box projector, `σ = 1`.
pub fn box_meter(label: &str, g: f64) -> GaussianMeter {
    let p = box_projector(label).expect("box label is A, B or C");
    GaussianMeter::for_projector(label, &p, g, DEFAULT_SIGMA).expect("valid coupling")
}

/// The built-in document, identical to `scenarios/three-box.json`.
pub fn three_box_document() -> ScenarioDocument {
    let s = (1.0f64 / 3.0).sqrt();
    let ket = |k: usize| {
        let mut v = vec![[0.0, 0.0]; 3];
        v[k] = [1.0, 0.0];
        v
    };
    let meter = |label: &str, kets: Vec<Vec<[f64; 2]>>| MeterDocument {
        label: label.to_owned(),
        observable: ObservableDocument::Projector { projector_kets: kets },
        g: THREE_BOX_G,
        sigma: DEFAULT_SIGMA,
    };
    ScenarioDocument {
        name: Some(THREE_BOX.to_owned()),
        dim: 3,
        preselected: vec![[s, 0.0], [s, 0.0], [s, 0.0]],
        postselected: vec![[s, 0.0], [s, 0.0], [-s, 0.0]],
        u_pre: None,
        u_post: None,
        meters: vec![
            meter("A", vec![ket(0)]),
            meter("C", vec![ket(2)]),
            meter("A+C", vec![ket(0), ket(2)]),
        ],
        basis_labels: Some(vec!["A".into(), "B".into(), "C".into()]),
        projectors: Vec::new(),
    }
}

pub fn three_box() -> LoadedScenario {
    three_box_document().build().expect("built-in document is valid")
}

pub fn lookup(name: &str) -> Option<LoadedScenario> {
    match name {
        THREE_BOX => Some(three_box()),
        _ => None,
    }
}
