//! Balanced-homodyne photocurrent spectra.
//!
//! The output amplitude seen by an LO matched to `s_n(t)` with phase `φ` is
//! `Σ_p A_np f_p` with `A_np = 𝒲_np(Ω) e^{iφ} + conj(𝒱_np(-Ω)) e^{-iφ}`, so the
//! shot-noise-normalized spectrum is `S = γ_n Σ_p γ_p |A_np|²`. As a function
//! of `φ` this is always `mean + Re(modulation e^{2iφ})`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::exact::{solve_exact, ScatteringMatrix};
use crate::pert::{transfer_coefficients, OscillatorParams, TransferCoefficients};
use crate::{Error, Result, C64};

/// Modulation depth below which the spectrum is treated as phase-insensitive.
pub const PHASE_DEGENERACY: f64 = 1e-14;

/// Relative tolerance when matching `-Ω` partners on a grid.
const PARTNER_TOL: f64 = 1e-9;

/// `S(φ) = mean + Re(modulation e^{2iφ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseQuadratic {
    pub mean: f64,
    pub modulation: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalPhase {
    /// Minimizing phase in `[0, π)`.
    pub phi: f64,
    pub value: f64,
    /// The spectrum does not depend on the phase; `phi` is then 0.
    pub degenerate: bool,
}

impl PhaseQuadratic {
    pub fn eval(&self, phi: f64) -> f64 {
        self.mean + (self.modulation * C64::from_polar(1.0, 2.0 * phi)).re
    }

    pub fn min(&self) -> f64 {
        self.mean - self.modulation.norm()
    }

    pub fn max(&self) -> f64 {
        self.mean + self.modulation.norm()
    }

    pub fn optimum(&self) -> OptimalPhase {
        if self.modulation.norm() < PHASE_DEGENERACY {
            return OptimalPhase {
                phi: 0.0,
                value: self.mean,
                degenerate: true,
            };
        }
        let phi = ((PI - self.modulation.arg()) / 2.0).rem_euclid(PI);
        OptimalPhase {
            phi,
            value: self.min(),
            degenerate: false,
        }
    }
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Pert2,
    Pert4,
    Exact,
    AnalyticLimit,
}

impl Provenance {
    /// Perturbation order, if any.
    pub fn order(self) -> Option<usize> {
        match self {
            Provenance::Pert2 => Some(2),
            Provenance::Pert4 => Some(4),
            _ => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Pert2 => "pert2",
            Provenance::Pert4 => "pert4",
            Provenance::Exact => "exact",
            Provenance::AnalyticLimit => "analytic-limit",
        })
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pert2" => Ok(Provenance::Pert2),
            "pert4" => Ok(Provenance::Pert4),
            "exact" => Ok(Provenance::Exact),
            "analytic-limit" => Ok(Provenance::AnalyticLimit),
            _ => Err(Error::Config(format!("unknown provenance '{s}'"))),
        }
    }
}

/// LO phase selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseChoice {
    Fixed(f64),
    /// Minimize at every frequency separately.
    Optimal,
}

/// One spectrum of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub mode: usize,
    pub phase: PhaseChoice,
    /// `γ_n`, used to report `Ω/γ`.
    pub gamma: f64,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    /// Phase actually used at each frequency.
    pub phis: Vec<f64>,
    pub provenance: Provenance,
    /// Some value is negative: truncation outside its validity range.
    pub negative: bool,
}

impl SpectrumResult {
    pub fn from_quadratics(
        mode: usize,
        gamma: f64,
        omegas: &[f64],
        quads: &[PhaseQuadratic],
        phase: PhaseChoice,
        provenance: Provenance,
    ) -> Self {
        let (values, phis): (Vec<f64>, Vec<f64>) = quads
            .iter()
            .map(|q| match phase {
                PhaseChoice::Fixed(phi) => (q.eval(phi), phi),
                PhaseChoice::Optimal => {
                    let o = q.optimum();
                    (o.value, o.phi)
                }
            })
            .unzip();
        let negative = values.iter().any(|v| *v < 0.0);
        Self {
            mode,
            phase,
            gamma,
            omegas: omegas.to_vec(),
            values,
            phis,
            provenance,
            negative,
        }
    }

    /// `10 log₁₀ S`; NaN where `S <= 0`.
    pub fn db(&self) -> Vec<f64> {
        self.values.iter().map(|&s| to_db(s)).collect()
    }

    /// Value at the grid point closest to `omega`.
    pub fn value_at(&self, omega: f64) -> Option<f64> {
        self.omegas
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - omega).abs().total_cmp(&(b.1 - omega).abs()))
            .map(|(i, _)| self.values[i])
    }
}

/// Largest pointwise `|a - b| / |b|` between two spectra on the same grid.
pub fn max_relative_difference(a: &SpectrumResult, b: &SpectrumResult) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

pub fn to_db(s: f64) -> f64 {
    if s > 0.0 {
        10.0 * s.log10()
    } else {
        f64::NAN
    }
}

/// Symmetric grid of `points` frequencies over `[-half_span, half_span]`.
pub fn frequency_grid(half_span: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(half_span > 0.0) {
        return Err(Error::FrequencyGrid(format!(
            "need at least 2 points and a positive span (got {points}, {half_span})"
        )));
    }
    let step = 2.0 * half_span / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            // mirror exactly so every point has its -Ω partner bit for bit
            let j = points - 1 - i;
            if i <= j {
                -half_span + i as f64 * step
            } else {
                half_span - j as f64 * step
            }
        })
        .collect())
}

/// The default 401-point grid over `Ω/γ ∈ [-5, 5]`.
pub fn default_frequency_grid() -> Vec<f64> {
    frequency_grid(5.0, 401).expect("valid default grid")
}

fn partner_indices(omegas: &[f64]) -> Result<Vec<usize>> {
    omegas
        .iter()
        .map(|&w| {
            omegas
                .iter()
                .position(|&x| (x + w).abs() <= PARTNER_TOL * w.abs().max(1.0))
                .ok_or_else(|| {
                    Error::FrequencyGrid(format!("no -Ω partner for Ω = {w} on the grid"))
                })
        })
        .collect()
}

/// Perturbative spectrum in its literal second-order form: diagonal response,
/// first-order leakage from every other mode, and the interference with the
/// `n → m → n` return paths. `coeffs` must hold order ≥ 2 on a grid that
/// contains `-Ω` for every `Ω`.
pub fn photocurrent_spectrum(
    coeffs: &[TransferCoefficients],
    losses: &[f64],
    n: usize,
    phi: f64,
) -> Result<SpectrumResult> {
    let omegas: Vec<f64> = coeffs.iter().map(|c| c.omega).collect();
    let partners = partner_indices(&omegas)?;
    let e = C64::from_polar(1.0, phi);
    let gn = losses[n];
    let mut values = Vec::with_capacity(coeffs.len());
    for (tc, &k) in coeffs.iter().zip(&partners) {
        let opp = &coeffs[k];
        let (first, first_opp) = (need(tc.first.as_ref())?, need(opp.first.as_ref())?);
        let (second, second_opp) = (need(tc.second.as_ref())?, need(opp.second.as_ref())?);
        let diag = tc.zeroth[n].w * e + opp.zeroth[n].v.conj() * e.conj();
        let mut s = gn * gn * diag.norm_sqr();
        let mut ret = C64::new(0.0, 0.0);
        for (m, gm) in losses.iter().enumerate() {
            if m == n {
                continue;
            }
            let leak = first.u[(n, m)] * e + first_opp.v[(n, m)].conj() * e.conj();
            s += gn * gm * leak.norm_sqr();
            ret += second.u_return[(n, m)].conj() * e.conj() + second_opp.v_return[(n, m)] * e;
        }
        s += 2.0 * gn * gn * (diag * ret).re;
        values.push(s);
    }
    let negative = values.iter().any(|v| *v < 0.0);
    Ok(SpectrumResult {
        mode: n,
        phase: PhaseChoice::Fixed(phi),
        gamma: gn,
        phis: vec![phi; values.len()],
        omegas,
        values,
        provenance: Provenance::Pert2,
        negative,
    })
}

fn need<T>(x: Option<&T>) -> Result<&T> {
    x.ok_or_else(|| Error::Config("coefficients computed to too low an order".into()))
}

/// Phase dependence of the order-`order` spectrum, truncated consistently:
/// only products `A⁽ʲ⁾* A⁽ˡ⁾` with `j + l ≤ order` are kept.
pub fn perturbative_quadratic(
    at: &TransferCoefficients,
    opposite: &TransferCoefficients,
    losses: &[f64],
    n: usize,
    order: usize,
) -> PhaseQuadratic {
    let gn = losses[n];
    let fam_at: Vec<_> = (0..=order).map(|j| at.family(j)).collect();
    let fam_opp: Vec<_> = (0..=order).map(|j| opposite.family(j)).collect();
    let mut mean = 0.0;
    let mut modulation = C64::new(0.0, 0.0);
    for (p, gp) in losses.iter().enumerate() {
        let alpha = |j: usize| {
            let mut a = fam_at[j].u[(n, p)];
            if j == 0 && p == n {
                a -= 1.0 / gn;
            }
            a
        };
        let beta = |j: usize| fam_opp[j].v[(n, p)].conj();
        for j in 0..=order {
            for l in 0..=order - j {
                let w = gn * gp;
                mean += w * (alpha(j).conj() * alpha(l) + beta(j).conj() * beta(l)).re;
                modulation += 2.0 * w * beta(j).conj() * alpha(l);
            }
        }
    }
    PhaseQuadratic { mean, modulation }
}

/// Phase quadratics of mode `n` over a frequency grid, by the requested
/// method. Partners at `-Ω` are computed directly, so the grid is arbitrary.
pub fn spectrum_quadratics(
    params: &OscillatorParams,
    omegas: &[f64],
    n: usize,
    provenance: Provenance,
) -> Result<Vec<PhaseQuadratic>> {
    check_mode(params, n)?;
    omegas
        .iter()
        .map(|&w| match provenance {
            Provenance::Exact => {
                let at = solve_exact(params, w)?;
                let opp = solve_exact(params, -w)?;
                Ok(at.quadratic(&opp, n))
            }
            Provenance::Pert2 | Provenance::Pert4 => {
                let k = provenance.order().expect("perturbative");
                let at = transfer_coefficients(params, w, k)?;
                let opp = transfer_coefficients(params, -w, k)?;
                Ok(perturbative_quadratic(&at, &opp, &params.losses, n, k))
            }
            Provenance::AnalyticLimit => Err(Error::Config(
                "the analytic limit has no phase quadratic; use analytic_zero_frequency_limit"
                    .into(),
            )),
        })
        .collect()
}

/// All quadratics of every mode at one frequency, sharing one solve.
pub fn quadratics_at(
    params: &OscillatorParams,
    omega: f64,
    provenance: Provenance,
) -> Result<Vec<PhaseQuadratic>> {
    let n = params.n_modes();
    match provenance {
        Provenance::Exact => {
            let at = solve_exact(params, omega)?;
            let opp = solve_exact(params, -omega)?;
            Ok((0..n).map(|k| at.quadratic(&opp, k)).collect())
        }
        Provenance::Pert2 | Provenance::Pert4 => {
            let order = provenance.order().expect("perturbative");
            let at = transfer_coefficients(params, omega, order)?;
            let opp = transfer_coefficients(params, -omega, order)?;
            Ok((0..n)
                .map(|k| perturbative_quadratic(&at, &opp, &params.losses, k, order))
                .collect())
        }
        Provenance::AnalyticLimit => Err(Error::Config(
            "the analytic limit has no phase quadratic".into(),
        )),
    }
}

fn check_mode(params: &OscillatorParams, n: usize) -> Result<()> {
    if n >= params.n_modes() {
        return Err(Error::Dimension(format!(
            "mode {n} outside the {}-mode basis",
            params.n_modes()
        )));
    }
    Ok(())
}

/// Spectrum of mode `n` over `omegas`.
pub fn spectrum(
    params: &OscillatorParams,
    omegas: &[f64],
    n: usize,
    phase: PhaseChoice,
    provenance: Provenance,
) -> Result<SpectrumResult> {
    let quads = spectrum_quadratics(params, omegas, n, provenance)?;
    Ok(SpectrumResult::from_quadratics(
        n,
        params.losses[n],
        omegas,
        &quads,
        phase,
        provenance,
    ))
}

/// Exact spectrum from precomputed scattering matrices on a grid that
/// contains every `-Ω`.
pub fn exact_spectrum_from_grid(
    scatter: &[ScatteringMatrix],
    n: usize,
    phase: PhaseChoice,
) -> Result<SpectrumResult> {
    let omegas: Vec<f64> = scatter.iter().map(|s| s.omega).collect();
    let partners = partner_indices(&omegas)?;
    let quads: Vec<_> = scatter
        .iter()
        .zip(&partners)
        .map(|(s, &k)| s.quadratic(&scatter[k], n))
        .collect();
    Ok(SpectrumResult::from_quadratics(
        n,
        scatter[0].losses[n],
        &omegas,
        &quads,
        phase,
        Provenance::Exact,
    ))
}

/// Quadrature for the small-parameter limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// `φ = 0`: anti-squeezed.
    Amplitude,
    /// `φ = π/2`: squeezed.
    Phase,
}

impl Quadrature {
    pub fn phi(self) -> f64 {
        match self {
            Quadrature::Amplitude => 0.0,
            Quadrature::Phase => PI / 2.0,
        }
    }
}

/// Zero-frequency spectrum to leading order in `λ/γ`, `Δ/γ` and `C/γ`:
///
/// ```text
/// S ≈ 1 ± 4(λ_n/γ_n)(1 - 12 Δ_n²/γ_n²) ∓ 16 Σ_{m≠n} |C_nm|²/(γ_m γ_n) (2λ_n/γ_n + λ_m/γ_m)
/// ```
///
/// upper signs for [`Quadrature::Amplitude`]. For Hermite-Gaussian coupling
/// only `m = n ± 2` contribute.
pub fn analytic_zero_frequency_limit(
    params: &OscillatorParams,
    n: usize,
    quadrature: Quadrature,
) -> f64 {
    let sign = match quadrature {
        Quadrature::Amplitude => 1.0,
        Quadrature::Phase => -1.0,
    };
    let gn = params.losses[n];
    let ln = params.gains[n] / gn;
    let dn = params.coupling.detunings[n] / gn;
    let c = params.coupling.off_diagonal();
    let coupled: f64 = (0..params.n_modes())
        .filter(|&m| m != n)
        .map(|m| {
            let gm = params.losses[m];
            c[(n, m)].norm_sqr() / (gm * gn) * (2.0 * ln + params.gains[m] / gm)
        })
        .sum();
    1.0 + sign * 4.0 * ln * (1.0 - 12.0 * dn * dn) - sign * 16.0 * coupled
}

/// One row of the suppression table.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezingRow {
    pub mode: usize,
    /// Best suppression at `Ω = 0` without dispersion [dB].
    pub without_db: f64,
    pub phi_without: f64,
    /// Best suppression at `Ω = 0` with dispersion [dB].
    pub with_db: f64,
    pub phi_with: f64,
    /// Loss of suppression `with - without` [dB].
    pub loss_db: f64,
}

/// Optimal-phase suppression at `Ω = 0` for each of `modes`, comparing the
/// given oscillator with its dispersion-free counterpart (same gains and
/// losses, `C = 0`, global detuning kept).
pub fn squeezing_report(
    params: &OscillatorParams,
    modes: &[usize],
    provenance: Provenance,
) -> Result<Vec<SqueezingRow>> {
    for &n in modes {
        check_mode(params, n)?;
    }
    let bare = params.with_coupling(crate::modes::CouplingModel::uncoupled(
        params.n_modes(),
        params.coupling.global_detuning,
    ))?;
    let q_with = quadratics_at(params, 0.0, provenance)?;
    let q_without = quadratics_at(&bare, 0.0, provenance)?;
    Ok(modes
        .iter()
        .map(|&n| {
            let a = q_without[n].optimum();
            let b = q_with[n].optimum();
            let without_db = to_db(a.value);
            let with_db = to_db(b.value);
            SqueezingRow {
                mode: n,
                without_db,
                phi_without: a.phi,
                with_db,
                phi_with: b.phi,
                loss_db: with_db - without_db,
            }
        })
        .collect())
}

pub const CSV_HEADER: &str = "omega_over_gamma,S,S_dB,phi,mode,provenance";

/// Writes spectra in long format, one row per frequency. Numbers use the
/// shortest exact decimal form, so output is reproducible bit for bit.
pub fn write_spectrum_csv<W: Write>(out: &mut W, results: &[SpectrumResult]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in results {
        let db = r.db();
        for (((w, s), d), phi) in r.omegas.iter().zip(&r.values).zip(&db).zip(&r.phis) {
            writeln!(out, "{},{s},{d},{phi},{},{}", w / r.gamma, r.mode, r.provenance)?;
        }
    }
    Ok(())
}
