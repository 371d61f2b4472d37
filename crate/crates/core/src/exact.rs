//! Direct solution of the coupled-mode equations at one frequency.
//!
//! The unknowns are stacked as `x = (a_n(Ω), a_n†(-Ω))` and the noise as
//! `f = (f_n(Ω), f_n†(-Ω))`. With `C` the off-diagonal coupling,
//!
//! ```text
//! M(Ω) = [ A        -Λ/2 ]    A = diag(γ_n/2 - iΔ_n - iΩ) + iC
//!        [ -Λ/2     B    ]    B = diag(γ_n/2 + iΔ_n - iΩ) - iC̄
//! ```
//!
//! and `x = M⁻¹ f`. The top half of `M⁻¹` is `[𝒰 | 𝒱]`; output blocks follow
//! from `b = γ a - f` in the normalization where vacuum gives `𝒲 = Γ⁻¹`.

use crate::homodyne::PhaseQuadratic;
use crate::pert::OscillatorParams;
use crate::{max_abs, CMatrix, Error, Result, C64};

/// Largest accepted condition number of the system matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Exact noise-to-field map at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub omega: f64,
    /// Intracavity `𝒰`: multiplies `f(Ω)`.
    pub u: CMatrix,
    /// Intracavity `𝒱`: multiplies `f†(-Ω)`.
    pub v: CMatrix,
    /// Output `𝒲 = 𝒰 - Γ⁻¹`.
    pub w: CMatrix,
    pub losses: Vec<f64>,
    /// 2-norm condition number of the system matrix.
    pub condition: f64,
}

/// The `2N × 2N` matrix `M(Ω)`.
pub fn system_matrix(params: &OscillatorParams, omega: f64) -> CMatrix {
    let n = params.n_modes();
    let c = params.coupling.off_diagonal();
    let i = C64::new(0.0, 1.0);
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        let (gamma, delta) = (params.losses[r], params.coupling.detunings[r]);
        for s in 0..n {
            m[(r, s)] = i * c[(r, s)];
            m[(n + r, n + s)] = -i * c[(r, s)].conj();
        }
        m[(r, r)] = C64::new(gamma / 2.0, -delta - omega);
        m[(n + r, n + r)] = C64::new(gamma / 2.0, delta - omega);
        m[(r, n + r)] = C64::new(-params.gains[r] / 2.0, 0.0);
        m[(n + r, r)] = C64::new(-params.gains[r] / 2.0, 0.0);
    }
    m
}

pub fn solve_exact(params: &OscillatorParams, omega: f64) -> Result<ScatteringMatrix> {
    let n = params.n_modes();
    let m = system_matrix(params, omega);
    let sv = m.clone().singular_values();
    let smin = sv.min();
    let condition = if smin > 0.0 { sv.max() / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { omega, condition });
    }
    let inv = m
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { omega, condition })?;
    let u = inv.view((0, 0), (n, n)).into_owned();
    let v = inv.view((0, n), (n, n)).into_owned();
    let mut w = u.clone();
    for (k, gamma) in params.losses.iter().enumerate() {
        w[(k, k)] -= 1.0 / gamma;
    }
    Ok(ScatteringMatrix {
        omega,
        u,
        v,
        w,
        losses: params.losses.clone(),
        condition,
    })
}

impl ScatteringMatrix {
    fn gamma(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.losses.len(),
            self.losses.iter().map(|&g| C64::new(g, 0.0)),
        ))
    }

    /// Largest entry of `𝒲Γ𝒲† - 𝒱Γ𝒱† - Γ⁻¹`, relative to `max Γ⁻¹`.
    pub fn commutator_residual(&self) -> f64 {
        let g = self.gamma();
        let mut r = &self.w * &g * self.w.adjoint() - &self.v * &g * self.v.adjoint();
        let mut scale: f64 = 0.0;
        for (k, gamma) in self.losses.iter().enumerate() {
            r[(k, k)] -= 1.0 / gamma;
            scale = scale.max(1.0 / gamma);
        }
        max_abs(&r) / scale
    }

    /// Phase dependence of the shot-noise-normalized spectrum of mode `n`.
    /// `opposite` is the solution at `-Ω`.
    pub fn quadratic(&self, opposite: &ScatteringMatrix, n: usize) -> PhaseQuadratic {
        let gn = self.losses[n];
        let mut mean = 0.0;
        let mut modulation = C64::new(0.0, 0.0);
        for (p, gp) in self.losses.iter().enumerate() {
            let alpha = self.w[(n, p)];
            let beta = opposite.v[(n, p)].conj();
            mean += gn * gp * (alpha.norm_sqr() + beta.norm_sqr());
            modulation += 2.0 * gn * gp * beta.conj() * alpha;
        }
        PhaseQuadratic { mean, modulation }
    }
}

/// Largest entry of `𝒲(Ω)Γ𝒱ᵀ(-Ω) - 𝒱(Ω)Γ𝒲ᵀ(-Ω)`: the `[b(Ω), b(-Ω')]`
/// commutator, which must vanish.
pub fn cross_commutator_residual(at: &ScatteringMatrix, opposite: &ScatteringMatrix) -> f64 {
    let g = at.gamma();
    let r = &at.w * &g * opposite.v.transpose() - &at.v * &g * opposite.w.transpose();
    max_abs(&r)
}

/// Exact spectrum of mode `n` at LO phase `phi`; vacuum gives 1.
pub fn exact_homodyne_spectrum(
    at: &ScatteringMatrix,
    opposite: &ScatteringMatrix,
    n: usize,
    phi: f64,
) -> f64 {
    at.quadratic(opposite, n).eval(phi)
}

/// Exact output photon-number spectrum `⟨b_n†(Ω) b_n(Ω)⟩`.
pub fn exact_photon_number(at: &ScatteringMatrix, n: usize) -> f64 {
    let gn = at.losses[n];
    at.losses
        .iter()
        .enumerate()
        .map(|(p, gp)| gn * gp * at.v[(n, p)].norm_sqr())
        .sum()
}

/// Distance of the order-`order` perturbative map from the exact one at
/// `omega`: largest entry of `(𝒰, 𝒱)_pert - (𝒰, 𝒱)_exact` relative to the
/// largest exact entry.
pub fn truncation_residual(params: &OscillatorParams, omega: f64, order: usize) -> Result<f64> {
    let exact = solve_exact(params, omega)?;
    let approx = crate::pert::transfer_coefficients(params, omega, order)?.total();
    let diff = max_abs(&(&approx.u - &exact.u)).max(max_abs(&(&approx.v - &exact.v)));
    Ok(diff / max_abs(&exact.u).max(max_abs(&exact.v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::CouplingModel;
    use crate::pert::zeroth_order;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn random_hermitian(n: usize, seed: &[f64], scale: f64) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        let mut k = 0;
        for a in 0..n {
            for b in a + 1..n {
                let z = C64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()]) * scale;
                m[(a, b)] = z;
                m[(b, a)] = z.conj();
                k += 2;
            }
        }
        m
    }

    #[test]
    fn single_mode_matches_closed_form() {
        for (lambda, delta, omega) in [(0.48, 0.0, 0.0), (0.3, 0.2, -1.3), (0.9, -0.4, 2.2)] {
            let p = OscillatorParams::new(
                vec![lambda],
                vec![1.0],
                CouplingModel::uncoupled(1, delta),
            )
            .unwrap();
            let s = solve_exact(&p, omega).unwrap();
            let r = zeroth_order(&p, omega).unwrap()[0];
            assert!((s.u[(0, 0)] - r.u).norm() < 1e-14);
            assert!((s.v[(0, 0)] - r.v).norm() < 1e-14);
            assert!((s.w[(0, 0)] - r.w).norm() < 1e-14);
        }
    }

    #[test]
    fn single_mode_squeezing_level() {
        let p = OscillatorParams::new(vec![0.48], vec![1.0], CouplingModel::uncoupled(1, 0.0))
            .unwrap();
        let s = solve_exact(&p, 0.0).unwrap();
        let value = exact_homodyne_spectrum(&s, &s, 0, FRAC_PI_2);
        let expected = ((1.0 - 0.48) / (1.0 + 0.48_f64)).powi(2);
        assert!((value - expected).abs() < 1e-14);
        assert!((10.0 * value.log10() + 9.08).abs() < 0.02);
    }

    #[test]
    fn passive_coupling_preserves_vacuum() {
        let c = random_hermitian(4, &[0.3, -0.7, 0.5, 0.1, -0.2, 0.9], 0.4);
        let p = OscillatorParams::new(
            vec![0.0; 4],
            vec![1.0, 0.7, 1.3, 1.0],
            CouplingModel::from_coupling(c, 0.2).unwrap(),
        )
        .unwrap();
        for omega in [-3.0, -0.4, 0.0, 1.1] {
            let at = solve_exact(&p, omega).unwrap();
            let opp = solve_exact(&p, -omega).unwrap();
            assert!(max_abs(&at.v) < 1e-15);
            for n in 0..4 {
                for phi in [0.0, 0.6, FRAC_PI_2] {
                    let s = exact_homodyne_spectrum(&at, &opp, n, phi);
                    assert!((s - 1.0).abs() < 1e-12, "S = {s}");
                }
            }
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let mut p = OscillatorParams::new(vec![0.5], vec![1.0], CouplingModel::uncoupled(1, 0.0))
            .unwrap();
        p.gains[0] = 1.0;
        match solve_exact(&p, 0.0) {
            Err(Error::IllConditioned { omega, .. }) => assert_eq!(omega, 0.0),
            other => panic!("expected ill-conditioned, got {other:?}"),
        }
    }

    #[test]
    fn mirrored_system_matrix() {
        let c = random_hermitian(3, &[0.2, 0.4, -0.3, 0.8], 0.1);
        let p = OscillatorParams::new(
            vec![0.4, 0.2, 0.1],
            vec![1.0; 3],
            CouplingModel::from_coupling(c, 0.3).unwrap(),
        )
        .unwrap();
        let n = 3;
        let omega = 0.9;
        let m = system_matrix(&p, omega);
        let mirrored = system_matrix(&p, -omega);
        // swap the blocks and conjugate
        let mut swapped = CMatrix::zeros(2 * n, 2 * n);
        for r in 0..2 * n {
            for s in 0..2 * n {
                swapped[((r + n) % (2 * n), (s + n) % (2 * n))] = m[(r, s)].conj();
            }
        }
        assert!(max_abs(&(swapped - mirrored)) < 1e-15);
    }

    proptest! {
        #[test]
        fn bogoliubov_identities(
            seed in proptest::collection::vec(-1.0..1.0f64, 12),
            gains in proptest::collection::vec(0.0..0.9f64, 4),
            losses in proptest::collection::vec(0.5..1.5f64, 4),
            scale in 0.0..0.15f64,
            detuning in -0.5..0.5f64,
            omega in -5.0..5.0f64,
        ) {
            let c = random_hermitian(4, &seed, scale);
            let gains = gains.iter().zip(&losses).map(|(g, l)| g * l).collect();
            let p = OscillatorParams::new(
                gains,
                losses,
                CouplingModel::from_coupling(c, detuning).unwrap(),
            ).unwrap();
            let at = solve_exact(&p, omega).unwrap();
            let opp = solve_exact(&p, -omega).unwrap();
            prop_assert!(at.commutator_residual() < 1e-10);
            prop_assert!(cross_commutator_residual(&at, &opp) < 1e-10);
            for n in 0..4 {
                let q = at.quadratic(&opp, n);
                prop_assert!(q.min() >= 0.0);
            }
        }
    }
}
