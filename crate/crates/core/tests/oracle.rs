//! Perturbative coefficients and spectra against the exact solver.

use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use spopo::exact::{solve_exact, truncation_residual};
use spopo::homodyne::{
    default_frequency_grid, frequency_grid, max_relative_difference, spectrum, PhaseChoice,
    Provenance,
};
use spopo::modes::CouplingModel;
use spopo::pert::{fourth_order_amplitude_spectrum, zeroth_order, OscillatorParams};
use spopo::{loglog_slope, CMatrix, C64};

/// Even Hermite-Gaussian chain 0, 2, 4, ... with zero diagonal, scaled so the
/// largest coupling is `eps`.
fn even_chain(n: usize, eps: f64) -> CMatrix {
    let mut c = CMatrix::zeros(n, n);
    let w: Vec<f64> = (0..n.saturating_sub(1))
        .map(|k| {
            let m = 2.0 * k as f64;
            ((m + 1.0) * (m + 2.0)).sqrt() / 2.0
        })
        .collect();
    let top = w.iter().cloned().fold(0.0, f64::max);
    for (k, x) in w.iter().enumerate() {
        c[(k, k + 1)] = C64::new(eps * x / top, 0.0);
        c[(k + 1, k)] = C64::new(eps * x / top, 0.0);
    }
    c
}

fn chain_params(n: usize, lambda0: f64, eps: f64) -> OscillatorParams {
    let mut gains = vec![0.0; n];
    gains[0] = lambda0;
    OscillatorParams::new(
        gains,
        vec![1.0; n],
        CouplingModel::from_coupling(even_chain(n, eps), 0.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn second_order_amplitudes_converge_cubically() {
    let eps = [0.02, 0.04, 0.08, 0.16];
    for n in [2, 3, 5] {
        for lambda0 in [0.17, 0.48] {
            for omega in [0.0, 0.5, -1.7] {
                let r: Vec<f64> = eps
                    .iter()
                    .map(|&e| truncation_residual(&chain_params(n, lambda0, e), omega, 2).unwrap())
                    .collect();
                let slope = loglog_slope(&eps, &r);
                assert!((2.7..=3.3).contains(&slope), "N={n} λ={lambda0} Ω={omega}: {slope}");
            }
        }
    }
}

#[test]
fn fourth_order_amplitudes_converge_at_fifth_order() {
    let eps = [0.02, 0.04, 0.08];
    let r: Vec<f64> = eps
        .iter()
        .map(|&e| truncation_residual(&chain_params(3, 0.3, e), 0.2, 4).unwrap())
        .collect();
    let slope = loglog_slope(&eps, &r);
    assert!((slope - 5.0).abs() < 0.3, "{slope}");
}

#[test]
fn two_mode_amplitudes_at_small_coupling() {
    let p = chain_params(2, 0.48, 0.05);
    for omega in [0.0, 1.0, -3.0] {
        let r = truncation_residual(&p, omega, 2).unwrap();
        // |U| C ~ 0.13 at this pump, so the cubic remainder is ~1e-3
        assert!(r < 3e-3, "Ω={omega}: {r}");
        let r1 = truncation_residual(&p, omega, 1).unwrap();
        assert!(r < r1);
    }
}

#[test]
fn bogoliubov_identity_on_a_grid() {
    let grid = frequency_grid(10.0, 200).unwrap();
    for (lambda, d, delta) in [(0.48, 0.25, 0.0), (0.9, 0.1, 0.3), (0.17, 0.5, -0.2)] {
        let p = OscillatorParams::hermite_gaussian(&[lambda, 0.0, lambda / 2.0], 8, d, delta)
            .unwrap();
        for &w in &grid {
            for (n, r) in zeroth_order(&p, w).unwrap().iter().enumerate() {
                let g = p.losses[n];
                assert!(r.bogoliubov_residual(g).abs() * g * g < 1e-12);
            }
        }
    }
}

#[test]
fn exact_commutators_on_a_grid() {
    let p = OscillatorParams::hermite_gaussian(&[0.48; 5], 12, 0.25, 0.0).unwrap();
    for &w in &default_frequency_grid() {
        let s = solve_exact(&p, w).unwrap();
        assert!(s.commutator_residual() < 1e-10, "Ω={w}");
    }
}

#[test]
fn vacuum_is_preserved_at_second_order() {
    let mut p = OscillatorParams::hermite_gaussian(&[], 8, 0.3, 0.0).unwrap();
    let c = p.coupling.off_diagonal();
    p.coupling = CouplingModel::from_coupling(c, 0.0).unwrap();
    let grid = default_frequency_grid();
    for n in 0..8 {
        for phi in [0.0, 0.9, FRAC_PI_2] {
            let s = spectrum(&p, &grid, n, PhaseChoice::Fixed(phi), Provenance::Pert2).unwrap();
            for v in &s.values {
                assert!((v - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn spectra_roll_off_and_are_even() {
    let p = OscillatorParams::hermite_gaussian(&[0.48, 0.0, 0.48], 10, 0.25, 0.0).unwrap();
    let grid = frequency_grid(20.0, 81).unwrap();
    for prov in [Provenance::Pert2, Provenance::Exact] {
        for n in 0..4 {
            for phi in [0.0, FRAC_PI_2] {
                let s = spectrum(&p, &grid, n, PhaseChoice::Fixed(phi), prov).unwrap();
                assert!((s.values[0] - 1.0).abs() < 0.01);
                assert!((s.values[80] - 1.0).abs() < 0.01);
                for i in 0..81 {
                    assert!((s.values[i] - s.values[80 - i]).abs() < 1e-10);
                }
                if prov == Provenance::Exact {
                    assert!(!s.negative);
                }
            }
        }
    }
}

#[test]
fn unexcited_neighbour_squeezes_at_the_flipped_phase() {
    let mut c = CMatrix::zeros(3, 3);
    c[(0, 2)] = C64::new(0.1, 0.0);
    c[(2, 0)] = c[(0, 2)];
    let p = OscillatorParams::new(
        vec![0.48, 0.0, 0.0],
        vec![1.0; 3],
        CouplingModel::from_coupling(c, 0.0).unwrap(),
    )
    .unwrap();
    for prov in [Provenance::Pert2, Provenance::Exact] {
        let q = spopo::homodyne::quadratics_at(&p, 0.0, prov).unwrap();
        let pumped = q[0].optimum();
        let neighbour = q[2].optimum();
        assert!(neighbour.value < 1.0);
        let shift = (neighbour.phi - pumped.phi).rem_euclid(std::f64::consts::PI);
        assert!((shift - FRAC_PI_2).abs() < 1e-6, "{prov}: {shift}");
        // the uncoupled mode is untouched
        assert!((q[1].mean - 1.0).abs() < 1e-12 && q[1].modulation.norm() < 1e-14);
    }
}

#[test]
fn fourth_order_diagnostic() {
    let base = OscillatorParams::hermite_gaussian(&[0.48], 12, 1.0, 0.0).unwrap();
    let grid = default_frequency_grid();
    let at = |scale: f64| {
        let p = base.with_coupling(base.coupling.scaled(scale)).unwrap();
        let mut worst: f64 = 0.0;
        let mut negative = false;
        for &w in &grid {
            let c = fourth_order_amplitude_spectrum(&p, w).unwrap();
            worst = worst.max((c.fourth[0] - c.second[0]).abs() / c.fourth[0].abs());
            negative |= c.negative;
        }
        (worst, negative)
    };
    let (low, neg_low) = at(0.05);
    assert!(low < 0.01, "{low}");
    assert!(!neg_low);
    let (high, neg_high) = at(1.0);
    assert!(high > 0.1);
    assert!(neg_high);
}

#[test]
fn exact_and_pert_spectra_agree_at_weak_pump() {
    let grid = default_frequency_grid();
    let p = chain_params(3, 0.17, 0.05);
    for n in 0..3 {
        let a = spectrum(&p, &grid, n, PhaseChoice::Fixed(FRAC_PI_2), Provenance::Pert2).unwrap();
        let b = spectrum(&p, &grid, n, PhaseChoice::Fixed(FRAC_PI_2), Provenance::Exact).unwrap();
        assert!(max_relative_difference(&a, &b) < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixed_state_with_coupling(
        omega in -5.0..5.0f64,
        lambda in 0.1..0.9f64,
        d in 0.02..0.3f64,
    ) {
        let p = OscillatorParams::hermite_gaussian(&[lambda], 8, d, 0.0).unwrap();
        let q = spopo::homodyne::quadratics_at(&p, omega, Provenance::Exact).unwrap();
        prop_assert!(q[0].min() * q[0].max() > 1.0);
    }

    #[test]
    fn pert_error_shrinks_with_coupling(
        lambda in 0.0..0.6f64,
        omega in -3.0..3.0f64,
    ) {
        let r1 = truncation_residual(&chain_params(4, lambda, 0.04), omega, 2).unwrap();
        let r2 = truncation_residual(&chain_params(4, lambda, 0.02), omega, 2).unwrap();
        prop_assert!(r2 < r1 / 5.0);
    }
}
