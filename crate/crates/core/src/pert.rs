//! Perturbative Bogoliubov coefficients of the coupled supermode oscillators.
//!
//! Every mode `n` is a degenerate parametric oscillator with gain `λ_n`,
//! loss `γ_n` and detuning `Δ_n`; the off-diagonal dispersion coupling `C_nm`
//! is treated as a perturbation. The solution is a linear map from the input
//! noise `(f_p(Ω), f_p†(-Ω))` to `a_n(Ω)`:
//!
//! ```text
//! a_n(Ω) = Σ_p [ 𝒰_np(Ω) f_p(Ω) + 𝒱_np(Ω) f_p†(-Ω) ]
//! ```
//!
//! Order 0 is diagonal (`U_n`, `V_n`). Each further order is one step of the
//! fixed-point map `f_n ← f_n - i Σ_{m≠n} C_nm a_m` pushed through the
//! single-mode response:
//!
//! ```text
//! 𝒰⁽ʲ⁺¹⁾ = i[-diag(U) C 𝒰⁽ʲ⁾(Ω) + diag(V) C̄ conj(𝒱⁽ʲ⁾(-Ω))]
//! 𝒱⁽ʲ⁺¹⁾ = i[-diag(U) C 𝒱⁽ʲ⁾(Ω) + diag(V) C̄ conj(𝒰⁽ʲ⁾(-Ω))]
//! ```
//!
//! with `C` the coupling with its diagonal removed. Order 1 gives `U_nm, V_nm`;
//! order 2 gives `Σ_m U_nmp`. Orders 3 and 4 are two more applications of the
//! same step.

use crate::modes::CouplingModel;
use crate::{CMatrix, Error, Result, C64};

/// Threshold below which `|H_n|` is treated as the oscillation singularity.
pub const THRESHOLD_EPS: f64 = 1e-14;

const I: C64 = C64::new(0.0, 1.0);

/// Gains, losses and coupling of the supermode oscillators.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorParams {
    /// Parametric gains `λ_n`.
    pub gains: Vec<f64>,
    /// Loss rates `γ_n`.
    pub losses: Vec<f64>,
    pub coupling: CouplingModel,
    /// Cavity round-trip time, kept for converting to photon fluxes.
    pub round_trip_time: Option<f64>,
}

impl OscillatorParams {
    pub fn new(gains: Vec<f64>, losses: Vec<f64>, coupling: CouplingModel) -> Result<Self> {
        let n = coupling.n_modes();
        if gains.len() != n || losses.len() != n {
            return Err(Error::Dimension(format!(
                "{} gains and {} losses for {n} coupled modes",
                gains.len(),
                losses.len()
            )));
        }
        for (mode, (&lambda, &gamma)) in gains.iter().zip(&losses).enumerate() {
            if !(gamma > 0.0) {
                return Err(Error::Config(format!(
                    "loss rate of mode {mode} must be positive (got {gamma})"
                )));
            }
            if !(lambda >= 0.0) {
                return Err(Error::Config(format!(
                    "gain of mode {mode} must be non-negative (got {lambda})"
                )));
            }
            if lambda >= gamma {
                return Err(Error::AboveThreshold {
                    mode,
                    ratio: lambda / gamma,
                });
            }
        }
        Ok(Self {
            gains,
            losses,
            coupling,
            round_trip_time: None,
        })
    }

    /// Dimensionless Hermite-Gaussian model: `γ_n = 1`, `τ_s = 1`.
    ///
    /// `gains` are `λ_n/γ` for the first modes; the rest of the `n_max` modes
    /// are unpumped. `dispersion` is `D/(γ τ_s²)`.
    pub fn hermite_gaussian(
        gains: &[f64],
        n_max: usize,
        dispersion: f64,
        detuning: f64,
    ) -> Result<Self> {
        if gains.len() > n_max {
            return Err(Error::Config(format!(
                "{} pumped modes exceed the basis size n_max = {n_max}",
                gains.len()
            )));
        }
        let mut full = gains.to_vec();
        full.resize(n_max, 0.0);
        Self::new(
            full,
            vec![1.0; n_max],
            CouplingModel::hermite_gaussian(n_max, dispersion, detuning),
        )
    }

    pub fn n_modes(&self) -> usize {
        self.gains.len()
    }

    /// Same gains and losses with a different coupling model.
    pub fn with_coupling(&self, coupling: CouplingModel) -> Result<Self> {
        let mut p = Self::new(self.gains.clone(), self.losses.clone(), coupling)?;
        p.round_trip_time = self.round_trip_time;
        Ok(p)
    }
}

/// Single-mode squeezing response at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeResponse {
    pub h: C64,
    pub u: C64,
    pub v: C64,
    /// Output coefficient `W = U - 1/γ`.
    pub w: C64,
}

impl ModeResponse {
    /// `|W|² - |V|² - γ⁻²`, zero for a valid Bogoliubov transformation.
    pub fn bogoliubov_residual(&self, gamma: f64) -> f64 {
        self.w.norm_sqr() - self.v.norm_sqr() - 1.0 / (gamma * gamma)
    }
}

/// Uncoupled response of every mode at `omega`, with `Δ_n` containing the
/// dispersion-induced diagonal shift exactly.
pub fn zeroth_order(params: &OscillatorParams, omega: f64) -> Result<Vec<ModeResponse>> {
    let detunings = &params.coupling.detunings;
    (0..params.n_modes())
        .map(|n| {
            let (lambda, gamma, delta) = (params.gains[n], params.losses[n], detunings[n]);
            let conj_side = C64::new(gamma / 2.0, delta - omega);
            let half_gain = lambda / 2.0;
            let h = C64::new(gamma / 2.0, -delta - omega) - half_gain * half_gain / conj_side;
            if h.norm() < THRESHOLD_EPS {
                return Err(Error::NearThreshold {
                    mode: n,
                    omega,
                    magnitude: h.norm(),
                });
            }
            let u = h.inv();
            let v = half_gain / (h * conj_side);
            Ok(ModeResponse {
                h,
                u,
                v,
                w: u - 1.0 / gamma,
            })
        })
        .collect()
}

/// One order of the noise-to-amplitude map: `u[(n, p)]` multiplies
/// `f_p(Ω)`, `v[(n, p)]` multiplies `f_p†(-Ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub u: CMatrix,
    pub v: CMatrix,
}

impl Family {
    fn diagonal(resp: &[ModeResponse]) -> Self {
        let n = resp.len();
        let mut u = CMatrix::zeros(n, n);
        let mut v = CMatrix::zeros(n, n);
        for (k, r) in resp.iter().enumerate() {
            u[(k, k)] = r.u;
            v[(k, k)] = r.v;
        }
        Self { u, v }
    }

    fn zeros(n: usize) -> Self {
        Self {
            u: CMatrix::zeros(n, n),
            v: CMatrix::zeros(n, n),
        }
    }
}

fn diag_mul(d: impl Fn(usize) -> C64, m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for (r, mut row) in out.row_iter_mut().enumerate() {
        row *= d(r);
    }
    out
}

/// One step of the coupling recursion. `prev_at` is the previous order at the
/// same frequency, `prev_opposite` at the mirrored one.
fn next_family(
    at: &[ModeResponse],
    prev_at: &Family,
    prev_opposite: &Family,
    coupling: &CMatrix,
) -> Family {
    let c_conj = coupling.map(|c| c.conj());
    let cu = coupling * &prev_at.u;
    let cv = coupling * &prev_at.v;
    let cv_opp = &c_conj * prev_opposite.v.map(|x| x.conj());
    let cu_opp = &c_conj * prev_opposite.u.map(|x| x.conj());
    let u = (diag_mul(|k| -at[k].u, &cu) + diag_mul(|k| at[k].v, &cv_opp)) * I;
    let v = (diag_mul(|k| -at[k].u, &cv) + diag_mul(|k| at[k].v, &cu_opp)) * I;
    Family { u, v }
}

/// First-order coefficients `U_nm`, `V_nm` at the frequency of `at`.
/// `opposite` is the zeroth order at the mirrored frequency. `coupling` must
/// have a zero diagonal (see [`CouplingModel::off_diagonal`]); the `n = m`
/// entries then vanish structurally.
pub fn first_order(at: &[ModeResponse], opposite: &[ModeResponse], coupling: &CMatrix) -> Family {
    next_family(
        at,
        &Family::diagonal(at),
        &Family::diagonal(opposite),
        coupling,
    )
}

/// Second-order coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrder {
    /// `Ũ_np = Σ_m U_nmp`, `Ṽ_np = Σ_m V_nmp`.
    pub family: Family,
    /// `u_return[(n, m)] = U_nmn`.
    pub u_return: CMatrix,
    /// `v_return[(n, m)] = V_nmn`.
    pub v_return: CMatrix,
}

pub fn second_order(
    at: &[ModeResponse],
    first_at: &Family,
    first_opposite: &Family,
    coupling: &CMatrix,
) -> SecondOrder {
    let family = next_family(at, first_at, first_opposite, coupling);
    let n = at.len();
    let mut u_return = CMatrix::zeros(n, n);
    let mut v_return = CMatrix::zeros(n, n);
    for a in 0..n {
        for m in 0..n {
            let c = coupling[(a, m)];
            u_return[(a, m)] = I
                * (-at[a].u * c * first_at.u[(m, a)]
                    + at[a].v * c.conj() * first_opposite.v[(m, a)].conj());
            v_return[(a, m)] = I
                * (-at[a].u * c * first_at.v[(m, a)]
                    + at[a].v * c.conj() * first_opposite.u[(m, a)].conj());
        }
    }
    SecondOrder {
        family,
        u_return,
        v_return,
    }
}

/// Coefficients at one frequency, up to a given perturbation order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferCoefficients {
    pub omega: f64,
    pub order: usize,
    pub zeroth: Vec<ModeResponse>,
    /// Order 1, present when `order >= 1`.
    pub first: Option<Family>,
    /// Order 2, present when `order >= 2`.
    pub second: Option<SecondOrder>,
    /// Orders 3, 4, ... in sequence.
    pub higher: Vec<Family>,
}

impl TransferCoefficients {
    pub fn n_modes(&self) -> usize {
        self.zeroth.len()
    }

    /// The order-`j` family; order 0 is the diagonal `U_n`, `V_n`.
    pub fn family(&self, j: usize) -> Family {
        match j {
            0 => Family::diagonal(&self.zeroth),
            1 => self.first.clone().expect("order 1 not computed"),
            2 => self.second.as_ref().expect("order 2 not computed").family.clone(),
            _ => self.higher[j - 3].clone(),
        }
    }

    /// Sum of all computed orders: the truncated amplitude map.
    pub fn total(&self) -> Family {
        let mut acc = Family::zeros(self.n_modes());
        for j in 0..=self.order {
            let f = self.family(j);
            acc.u += f.u;
            acc.v += f.v;
        }
        acc
    }
}

/// All coefficients up to `order` at `omega`.
pub fn transfer_coefficients(
    params: &OscillatorParams,
    omega: f64,
    order: usize,
) -> Result<TransferCoefficients> {
    let at = zeroth_order(params, omega)?;
    let opposite = zeroth_order(params, -omega)?;
    let c = params.coupling.off_diagonal();

    let mut fam_at = Family::diagonal(&at);
    let mut fam_opp = Family::diagonal(&opposite);
    let mut first = None;
    let mut second = None;
    let mut higher = Vec::new();
    for j in 1..=order {
        let next_at = next_family(&at, &fam_at, &fam_opp, &c);
        let next_opp = next_family(&opposite, &fam_opp, &fam_at, &c);
        match j {
            1 => first = Some(next_at.clone()),
            2 => {
                let mut s = second_order(&at, &fam_at, &fam_opp, &c);
                s.family = next_at.clone();
                second = Some(s);
            }
            _ => higher.push(next_at.clone()),
        }
        fam_at = next_at;
        fam_opp = next_opp;
    }
    Ok(TransferCoefficients {
        omega,
        order,
        zeroth: at,
        first,
        second,
        higher,
    })
}

/// Coefficients on every point of a frequency grid.
pub fn coefficient_grid(
    params: &OscillatorParams,
    omegas: &[f64],
    order: usize,
) -> Result<Vec<TransferCoefficients>> {
    omegas
        .iter()
        .map(|&w| transfer_coefficients(params, w, order))
        .collect()
}

/// Output photon-number spectrum `⟨b_n†(Ω) b_n(Ω)⟩` normalized by
/// `T_R δ(Ω-Ω')`, truncated consistently at `order` in the coupling:
/// `γ_n Σ_p γ_p Σ_{j+l ≤ order} Re[conj(𝒱⁽ʲ⁾_np) 𝒱⁽ˡ⁾_np]`.
///
/// Truncation can make the result negative at strong coupling.
pub fn photon_number(tc: &TransferCoefficients, losses: &[f64], n: usize, order: usize) -> f64 {
    assert!(order <= tc.order, "order {order} not computed (have {})", tc.order);
    let families: Vec<Family> = (0..=order).map(|j| tc.family(j)).collect();
    let mut acc = 0.0;
    for (p, gamma_p) in losses.iter().enumerate() {
        for j in 0..=order {
            for l in 0..=order - j {
                acc += gamma_p * (families[j].v[(n, p)].conj() * families[l].v[(n, p)]).re;
            }
        }
    }
    losses[n] * acc
}

/// Second- and fourth-order photon-number spectra of every mode at one
/// frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderComparison {
    pub omega: f64,
    pub second: Vec<f64>,
    pub fourth: Vec<f64>,
    /// Any fourth-order value below zero: the truncation has broken down.
    pub negative: bool,
}

pub fn fourth_order_amplitude_spectrum(
    params: &OscillatorParams,
    omega: f64,
) -> Result<OrderComparison> {
    let tc = transfer_coefficients(params, omega, 4)?;
    let n = params.n_modes();
    let second: Vec<f64> = (0..n).map(|k| photon_number(&tc, &params.losses, k, 2)).collect();
    let fourth: Vec<f64> = (0..n).map(|k| photon_number(&tc, &params.losses, k, 4)).collect();
    let negative = fourth.iter().chain(&second).any(|x| *x < 0.0);
    Ok(OrderComparison {
        omega,
        second,
        fourth,
        negative,
    })
}
