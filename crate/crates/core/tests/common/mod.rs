//! Shared generators and numerical oracles for the integration tests.
//!
//! The oracles here deliberately avoid the library's closed forms: Gaussian
//! integrals are done by quadrature on a grid and momenta by finite
//! differences.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use weakvalue::hilbert::{LinearOperator, Projector, StateVector, UnnormalizedVector};
use weakvalue::meter::GaussianMeter;
use weakvalue::montecarlo::Experiment;
use weakvalue::rng::RandomSource;
use weakvalue::scenario::{QuiescentWindow, Scenario};
use weakvalue::Complex64;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_complex(rng: &mut RandomSource) -> Complex64 {
    Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0)
}

pub fn random_state(rng: &mut RandomSource, dim: usize) -> StateVector {
    StateVector::normalized((0..dim).map(|_| random_complex(rng)).collect()).unwrap()
}

/// Unitary from Gram-Schmidt on random complex columns.
pub fn random_unitary(rng: &mut RandomSource, dim: usize) -> LinearOperator {
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = DVector::from_iterator(dim, (0..dim).map(|_| random_complex(rng)));
        for b in &cols {
            let p = b.dotc(&v);
            v -= b * p;
        }
        let n = v.norm();
        if n > 1e-3 {
            cols.push(v / c(n));
        }
    }
    LinearOperator::from_matrix(DMatrix::from_columns(&cols)).unwrap()
}

/// Random Hermitian matrix with entries in the unit square.
pub fn random_hermitian(rng: &mut RandomSource, dim: usize) -> LinearOperator {
    let m = DMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
    LinearOperator::from_matrix((&m + m.adjoint()) * c(0.5)).unwrap()
}

/// Columns of a random unitary, as kets.
pub fn random_basis(rng: &mut RandomSource, dim: usize) -> Vec<UnnormalizedVector> {
    let u = random_unitary(rng, dim);
    (0..dim)
        .map(|k| UnnormalizedVector::from_column(u.matrix().column(k).into_owned()))
        .collect()
}

/// Random complete orthogonal projector family with `parts` members.
pub fn random_family(rng: &mut RandomSource, dim: usize, parts: usize) -> Vec<Projector> {
    let basis = random_basis(rng, dim);
    // Every part gets at least one ket; the rest are scattered.
    let mut owner: Vec<usize> = (0..dim).map(|k| if k < parts { k } else { (rng.next_u64() % parts as u64) as usize }).collect();
    owner.rotate_left((rng.next_u64() % dim as u64) as usize);
    (0..parts)
        .map(|p| {
            let kets: Vec<_> = basis
                .iter()
                .zip(&owner)
                .filter(|(_, &o)| o == p)
                .map(|(k, _)| k.clone())
                .collect();
            Projector::onto_span(&kets).unwrap()
        })
        .collect()
}

/// Random scenario with nonvanishing transition amplitude.
pub fn random_scenario(rng: &mut RandomSource, dim: usize) -> Scenario {
    loop {
        let s = Scenario::new(
            random_state(rng, dim),
            random_unitary(rng, dim),
            random_unitary(rng, dim),
            random_state(rng, dim),
            QuiescentWindow::empty(),
        );
        if let Ok(s) = s {
            if weakvalue::scenario::transition_amplitude(&s).norm() > 1e-3 {
                return s;
            }
        }
    }
}

pub fn three_box_states() -> (StateVector, StateVector) {
    weakvalue::builtin::three_box_states()
}

pub fn three_box(meters: Vec<GaussianMeter>) -> Scenario {
    weakvalue::builtin::three_box_scenario(meters)
}

pub fn box_meter(label: &str, g: f64) -> GaussianMeter {
    weakvalue::builtin::box_meter(label, g)
}

pub fn sum_meter(a: &str, b: &str, g: f64) -> GaussianMeter {
    let p = weakvalue::builtin::box_projector(a)
        .unwrap()
        .sum(&weakvalue::builtin::box_projector(b).unwrap())
        .unwrap();
    GaussianMeter::for_projector(format!("{a}+{b}"), &p, g, 1.0).unwrap()
}

/// Idle pointer, written out independently of the library.
pub fn phi(q: f64, sigma: f64) -> f64 {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt().sqrt();
    norm * (-(q * q) / (4.0 * sigma * sigma)).exp()
}

/// Uniform grid on `[lo, hi]` with `n` points.
pub fn grid(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = (hi - lo) / (n - 1) as f64;
    ((0..n).map(|i| lo + h * i as f64).collect(), h)
}

/// Trapezoid rule over a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Squared-norm, ⟨Q⟩ and ⟨P⟩ of `Σ_kl conj(c_k) c_l W_kl φ_k φ_l` by
/// quadrature, with `-i d/dq` by central differences.
pub fn pointer_moments_by_quadrature(
    terms: &[(Complex64, f64)],
    coherence: &dyn Fn(usize, usize) -> f64,
    sigma: f64,
) -> (f64, f64, f64) {
    let lo = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min) - 10.0 * sigma;
    let hi = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max) + 10.0 * sigma;
    let (qs, h) = grid(lo, hi, 8193);
    let eps = 1e-5 * sigma;
    let mut norm = vec![0.0; qs.len()];
    let mut first = vec![0.0; qs.len()];
    let mut mom = vec![0.0; qs.len()];
    for (idx, &q) in qs.iter().enumerate() {
        for (k, &(ck, sk)) in terms.iter().enumerate() {
            for (l, &(cl, sl)) in terms.iter().enumerate() {
                let w = ck.conj() * cl * coherence(k, l);
                let fk = phi(q - sk, sigma);
                let fl = phi(q - sl, sigma);
                let dfl = (phi(q + eps - sl, sigma) - phi(q - eps - sl, sigma)) / (2.0 * eps);
                norm[idx] += (w * fk * fl).re;
                first[idx] += (w * q * fk * fl).re;
                mom[idx] += (w * Complex64::new(0.0, -1.0) * fk * dfl).re;
            }
        }
    }
    let n = trapezoid(&norm, h);
    (n, trapezoid(&first, h) / n, trapezoid(&mom, h) / n)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_p_value(stat: f64, dof: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

/// z for a two-sided 99% interval.
pub const Z99: f64 = 2.5758293035489;

/// Half-width of the 99% normal-approximation binomial interval.
pub fn binomial_ci99(p: f64, n: u64) -> f64 {
    Z99 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Postselected branches `(⟨f|component⟩, shifts)` written out by hand for
/// the three-box arrangement with meters on the listed boxes.
pub fn three_box_branches(meters: &[(&str, f64)]) -> Vec<(f64, Vec<f64>)> {
    let third = 1.0 / 3.0;
    let sign = [1.0, 1.0, -1.0];
    (0..3)
        .map(|b| {
            let shifts = meters
                .iter()
                .map(|&(label, g)| if label == ["A", "B", "C"][b] { g } else { 0.0 })
                .collect();
            (sign[b] * third, shifts)
        })
        .collect()
}

/// Marginal density of meter `m`, other meters integrated on a grid.
pub fn marginal_density(branches: &[(f64, Vec<f64>)], m: usize, q: f64) -> f64 {
    let k = branches[0].1.len();
    let amp = |qs: &[f64]| -> f64 {
        branches
            .iter()
            .map(|(c, s)| c * s.iter().zip(qs).map(|(s, q)| phi(q - s, 1.0)).product::<f64>())
            .sum()
    };
    match k {
        1 => amp(&[q]).powi(2),
        2 => {
            let (grid_q, h) = grid(-10.0, 10.0, 801);
            let vals: Vec<f64> = grid_q
                .iter()
                .map(|&r| {
                    let qs = if m == 0 { [q, r] } else { [r, q] };
                    amp(&qs).powi(2)
                })
                .collect();
            trapezoid(&vals, h)
        }
        _ => unimplemented!(),
    }
}

pub fn chi_square_marginal(s: &Scenario, branches: &[(f64, Vec<f64>)], m: usize, n: u64, seed: u64) -> f64 {
    let exp = Experiment::prepare(s).unwrap();
    let mut samples = Vec::new();
    let mut out = Vec::new();
    let mut i = 0u64;
    while (samples.len() as u64) < n {
        let mut rng = RandomSource::for_trial(seed, i);
        if exp.trial_into(&mut rng, &mut out) {
            samples.push(out[m]);
        }
        i += 1;
    }
    let lo = branches.iter().flat_map(|b| b.1.iter().copied()).fold(0.0, f64::min) - 4.0;
    let hi = branches.iter().flat_map(|b| b.1.iter().copied()).fold(0.0, f64::max) + 4.0;
    let bins = 50usize;
    let width = (hi - lo) / bins as f64;
    let mut probs: Vec<f64> = (0..bins)
        .map(|b| {
            let (qs, h) = grid(lo + width * b as f64, lo + width * (b + 1) as f64, 21);
            let vals: Vec<f64> = qs.iter().map(|&q| marginal_density(branches, m, q)).collect();
            trapezoid(&vals, h)
        })
        .collect();
    // Tails go to the outer bins.
    let (left, right) = tail_pair(branches, m, lo, hi);
    probs[0] += left;
    probs[bins - 1] += right;
    let norm: f64 = probs.iter().sum();
    let mut counts = vec![0u64; bins];
    for q in &samples {
        let b = (((q - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p / norm * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    chi_square_p_value(stat, bins - 1)
}

fn tail_pair(branches: &[(f64, Vec<f64>)], m: usize, lo: f64, hi: f64) -> (f64, f64) {
    let integrate = |a: f64, b: f64| {
        let (qs, h) = grid(a, b, 401);
        trapezoid(&qs.iter().map(|&q| marginal_density(branches, m, q)).collect::<Vec<_>>(), h)
    };
    (integrate(lo - 12.0, lo), integrate(hi, hi + 12.0))
}
