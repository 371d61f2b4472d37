//! Supermode bases and the dispersion-induced coupling between them.
//!
//! Second-order dispersion acts on the intracavity pulse as `D d²/dt²`. In a
//! basis of supermodes `s_n(t)` this becomes the overlap matrix
//! `O_nm = ∫ s_n*(t) s_m''(t) dt`, the coupling `C_nm = D O_nm` and the
//! per-mode detunings `Δ_n = Δ - C_nn`.

use std::f64::consts::PI;

use crate::{max_abs, CMatrix, Error, RMatrix, Result, C64};

/// Tolerance on `∫|s_n|² dt = 1`.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance on `|∫ s_n* s_m dt|` for `n != m`, and on Hermiticity checks.
pub const ORTHO_TOL: f64 = 1e-8;

/// Uniformly spaced sample points `start + i * step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    /// Symmetric grid on `[-half_span, half_span]` with `points` samples.
    pub fn symmetric(half_span: f64, points: usize) -> Result<Self> {
        if !(half_span > 0.0) || points < 2 {
            return Err(Error::Config(format!(
                "time grid needs half_span > 0 and at least 2 points (got {half_span}, {points})"
            )));
        }
        Ok(Self {
            start: -half_span,
            step: 2.0 * half_span / (points - 1) as f64,
            len: points,
        })
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    pub fn half_span(&self) -> f64 {
        self.at(self.len - 1).abs().min(self.start.abs())
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.step; self.len];
        w[0] *= 0.5;
        w[self.len - 1] *= 0.5;
        w
    }
}

/// A finite set of orthonormal temporal supermode profiles sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    /// Number of modes; orders `0..n_max`.
    pub n_max: usize,
    /// Characteristic supermode duration.
    pub tau_s: f64,
    pub grid: TimeGrid,
    /// `profiles[n][i] = s_n(grid.at(i))`.
    pub profiles: Vec<Vec<C64>>,
}

impl ModeBasis {
    /// Wraps arbitrary sampled profiles, checking orthonormality.
    pub fn from_samples(grid: TimeGrid, tau_s: f64, profiles: Vec<Vec<C64>>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Config("a mode basis needs at least one profile".into()));
        }
        if let Some(bad) = profiles.iter().position(|p| p.len() != grid.len) {
            return Err(Error::Dimension(format!(
                "profile {bad} has {} samples, grid has {}",
                profiles[bad].len(),
                grid.len
            )));
        }
        let basis = Self {
            n_max: profiles.len(),
            tau_s,
            grid,
            profiles,
        };
        basis.check_orthonormal()?;
        Ok(basis)
    }

    /// `∫ s_n*(t) s_m(t) dt` by the trapezoid rule.
    pub fn inner(&self, n: usize, m: usize) -> C64 {
        quad(&self.grid, &self.profiles[n], &self.profiles[m])
    }

    fn check_orthonormal(&self) -> Result<()> {
        for n in 0..self.n_max {
            let norm = self.inner(n, n).re;
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Grid {
                    order: n,
                    detail: format!("has norm {norm:.12} (tolerance {NORM_TOL:e})"),
                });
            }
            for m in 0..n {
                let ov = self.inner(n, m).norm();
                if ov > ORTHO_TOL {
                    return Err(Error::Grid {
                        order: n,
                        detail: format!("overlaps mode {m} by {ov:.3e}"),
                    });
                }
            }
        }
        Ok(())
    }
}

fn quad(grid: &TimeGrid, a: &[C64], b: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let w = if i == 0 || i + 1 == grid.len { 0.5 } else { 1.0 };
        acc += x.conj() * y * w;
    }
    acc * grid.step
}

/// `iⁿ`
pub fn i_pow(n: usize) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Normalized Hermite functions `ψ_0(x) .. ψ_{count-1}(x)`, where
/// `ψ_n(x) = (√π 2ⁿ n!)^{-1/2} H_n(x) e^{-x²/2}`.
///
/// Uses the normalized three-term recurrence, so no factorials or large
/// polynomial values appear.
pub fn hermite_functions(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(2f64.sqrt() * x * psi0);
    for n in 1..count - 1 {
        let next = (2.0 / (n + 1) as f64).sqrt() * x * out[n]
            - (n as f64 / (n + 1) as f64).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Hermite-Gaussian supermodes `s_n(t) = iⁿ ψ_n(t/τ_s)/√τ_s`, `n < n_max`,
/// sampled on `[-half_span, half_span]`.
pub fn build_hermite_gaussian_basis(
    n_max: usize,
    tau_s: f64,
    half_span: f64,
    grid_points: usize,
) -> Result<ModeBasis> {
    if n_max == 0 {
        return Err(Error::Config("n_max must be at least 1".into()));
    }
    if !(tau_s > 0.0) {
        return Err(Error::Config(format!("tau_s must be positive (got {tau_s})")));
    }
    let grid = TimeGrid::symmetric(half_span, grid_points)?;
    let top = n_max - 1;
    let needed = ((2.0 * n_max as f64).sqrt() + 4.0) * tau_s;
    if half_span < needed {
        return Err(Error::Grid {
            order: top,
            detail: format!("needs the grid to cover ±{needed:.4}, got ±{half_span:.4}"),
        });
    }
    let per_tau = tau_s / grid.step;
    if per_tau < 16.0 {
        return Err(Error::Grid {
            order: top,
            detail: format!("needs at least 16 samples per tau_s, got {per_tau:.2}"),
        });
    }

    let scale = tau_s.sqrt().recip();
    let mut profiles = vec![Vec::with_capacity(grid.len); n_max];
    for i in 0..grid.len {
        let psi = hermite_functions(n_max, grid.at(i) / tau_s);
        for (n, p) in psi.into_iter().enumerate() {
            profiles[n].push(i_pow(n) * (p * scale));
        }
    }
    ModeBasis::from_samples(grid, tau_s, profiles)
}

/// Closed-form overlap matrix of the Hermite-Gaussian basis, in units of
/// `1/tau_s²`. Tridiagonal in steps of two; every other entry is exactly 0.
pub fn overlap_matrix_analytic(n_max: usize, tau_s: f64) -> RMatrix {
    let inv = 1.0 / (tau_s * tau_s);
    RMatrix::from_fn(n_max, n_max, |n, m| {
        let nf = n as f64;
        if n == m {
            -(nf + 0.5) * inv
        } else if n == m + 2 {
            -((nf - 1.0) * nf).sqrt() / 2.0 * inv
        } else if m == n + 2 {
            -((nf + 1.0) * (nf + 2.0)).sqrt() / 2.0 * inv
        } else {
            0.0
        }
    })
}

/// Finite-difference stencil for the second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// 3-point, second order.
    Central3,
    /// 5-point, fourth order.
    Central5,
    /// 7-point, sixth order.
    #[default]
    Central7,
}

impl Stencil {
    fn radius(self) -> usize {
        match self {
            Stencil::Central3 => 1,
            Stencil::Central5 => 2,
            Stencil::Central7 => 3,
        }
    }

    /// Coefficients for offsets `-r..=r`, and the common denominator.
    fn coefficients(self) -> (&'static [f64], f64) {
        match self {
            Stencil::Central3 => (&[1.0, -2.0, 1.0], 1.0),
            Stencil::Central5 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
            Stencil::Central7 => (&[2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0], 180.0),
        }
    }
}

/// Second derivative of uniformly sampled data. Central stencil in the
/// interior, one-sided four-point formula near the ends.
pub fn second_derivative(samples: &[C64], step: f64, stencil: Stencil) -> Vec<C64> {
    let n = samples.len();
    let r = stencil.radius();
    let (coef, denom) = stencil.coefficients();
    let h2 = step * step;
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 4 {
        return out;
    }
    for i in 0..n {
        out[i] = if i >= r && i + r < n {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in coef.iter().enumerate() {
                acc += samples[i + k - r] * *c;
            }
            acc / (denom * h2)
        } else if i < r {
            let i = i.min(n - 4);
            (samples[i] * 2.0 - samples[i + 1] * 5.0 + samples[i + 2] * 4.0 - samples[i + 3]) / h2
        } else {
            let i = i.max(3);
            (samples[i] * 2.0 - samples[i - 1] * 5.0 + samples[i - 2] * 4.0 - samples[i - 3]) / h2
        };
    }
    out
}

/// `O_nm = ∫ s_n*(t) s_m''(t) dt` by finite differences and trapezoid
/// quadrature.
pub fn overlap_matrix_numeric(basis: &ModeBasis, stencil: Stencil) -> Result<CMatrix> {
    let n = basis.n_max;
    let derivs: Vec<Vec<C64>> = basis
        .profiles
        .iter()
        .map(|p| second_derivative(p, basis.grid.step, stencil))
        .collect();
    let o = CMatrix::from_fn(n, n, |a, b| quad(&basis.grid, &basis.profiles[a], &derivs[b]));
    let deviation = hermitian_deviation(&o);
    if deviation > ORTHO_TOL * max_abs(&o).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(o)
}

/// `max |A_nm - conj(A_mn)|`
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Dispersion-induced coupling between supermodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingModel {
    /// `O_nm`, in the units of the basis (1/time²).
    pub overlap: CMatrix,
    /// `C_nm = D O_nm`.
    pub coupling: CMatrix,
    /// `Δ_n = Δ - C_nn`.
    pub detunings: Vec<f64>,
    /// Dispersion strength `D`.
    pub dispersion: f64,
    /// Global cavity detuning `Δ`.
    pub global_detuning: f64,
}

/// `C = D O`, `Δ_n = Δ - C_nn`. Fails if `O` is not Hermitian.
pub fn build_coupling_model(
    overlap: &CMatrix,
    dispersion: f64,
    global_detuning: f64,
) -> Result<CouplingModel> {
    if !overlap.is_square() {
        return Err(Error::Dimension(format!(
            "overlap matrix is {}x{}",
            overlap.nrows(),
            overlap.ncols()
        )));
    }
    let deviation = hermitian_deviation(overlap);
    if deviation > ORTHO_TOL * max_abs(overlap).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let coupling = overlap * C64::new(dispersion, 0.0);
    let detunings = (0..coupling.nrows())
        .map(|n| global_detuning - coupling[(n, n)].re)
        .collect();
    Ok(CouplingModel {
        overlap: overlap.clone(),
        coupling,
        detunings,
        dispersion,
        global_detuning,
    })
}

impl CouplingModel {
    /// Hermite-Gaussian coupling in dimensionless units (`tau_s = 1`, rates in
    /// units of `gamma`): `dispersion` is `D / (gamma tau_s²)`, i.e. the factor
    /// in `C_nm/gamma = dispersion * O_nm tau_s²`.
    pub fn hermite_gaussian(n_max: usize, dispersion: f64, global_detuning: f64) -> Self {
        let o = overlap_matrix_analytic(n_max, 1.0).map(|x| C64::new(x, 0.0));
        build_coupling_model(&o, dispersion, global_detuning)
            .expect("analytic overlap is symmetric")
    }

    /// No dispersion: `C = 0`, `Δ_n = Δ`.
    pub fn uncoupled(n_modes: usize, global_detuning: f64) -> Self {
        let zero = CMatrix::zeros(n_modes, n_modes);
        build_coupling_model(&zero, 0.0, global_detuning).expect("zero matrix is Hermitian")
    }

    /// Arbitrary Hermitian coupling matrix with the given global detuning.
    /// The overlap is reported as the coupling itself (unit dispersion).
    pub fn from_coupling(coupling: CMatrix, global_detuning: f64) -> Result<Self> {
        build_coupling_model(&coupling, 1.0, global_detuning)
    }

    pub fn n_modes(&self) -> usize {
        self.coupling.nrows()
    }

    /// Coupling with its diagonal removed. The diagonal lives in
    /// [`CouplingModel::detunings`], so sums over `m != n` are plain products
    /// with this matrix.
    pub fn off_diagonal(&self) -> CMatrix {
        let mut c = self.coupling.clone();
        c.fill_diagonal(C64::new(0.0, 0.0));
        c
    }

    /// Same structure with the coupling multiplied by `factor` (diagonal
    /// included, so detunings scale too).
    pub fn scaled(&self, factor: f64) -> Self {
        build_coupling_model(&self.overlap, self.dispersion * factor, self.global_detuning)
            .expect("overlap already validated")
    }

    /// Largest off-diagonal `|C_nm|`.
    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// `D = √R k₂ L / (2 T_R)`.
pub fn dispersion_from_physical(
    k2: f64,
    length: f64,
    round_trip_time: f64,
    reflectivity: f64,
) -> Result<f64> {
    if !(k2 > 0.0 && length > 0.0 && round_trip_time > 0.0) {
        return Err(Error::Config(format!(
            "k2, length and round-trip time must be positive (got {k2}, {length}, {round_trip_time})"
        )));
    }
    if !(reflectivity > 0.0 && reflectivity <= 1.0) {
        return Err(Error::Config(format!(
            "reflectivity must be in (0, 1] (got {reflectivity})"
        )));
    }
    Ok(reflectivity.sqrt() * k2 * length / (2.0 * round_trip_time))
}

/// Loss-rate bookkeeping for a ring cavity given its repetition rate and
/// finesse. Uses `gamma T_R = 2π/F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cavity {
    pub rep_rate: f64,
    pub finesse: f64,
    /// Intensity reflectivity of the coupling mirror; `None` means the value
    /// implied by the finesse, `√R = 1 - π/F`.
    pub reflectivity: Option<f64>,
}

impl Cavity {
    pub fn new(rep_rate: f64, finesse: f64) -> Result<Self> {
        if !(rep_rate > 0.0 && finesse > PI) {
            return Err(Error::Config(format!(
                "rep_rate must be positive and finesse above π (got {rep_rate}, {finesse})"
            )));
        }
        Ok(Self {
            rep_rate,
            finesse,
            reflectivity: None,
        })
    }

    pub fn round_trip_time(&self) -> f64 {
        1.0 / self.rep_rate
    }

    /// Field loss rate `gamma` [rad/s].
    pub fn gamma(&self) -> f64 {
        2.0 * PI * self.rep_rate / self.finesse
    }

    /// `gamma / 2π`, the FWHM of the cavity resonance [Hz].
    pub fn linewidth_hz(&self) -> f64 {
        self.gamma() / (2.0 * PI)
    }

    /// `N_gamma = (gamma T_R)^{-1} = F/2π`.
    pub fn photon_lifetime_round_trips(&self) -> f64 {
        1.0 / (self.gamma() * self.round_trip_time())
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
            .unwrap_or_else(|| (1.0 - PI / self.finesse).powi(2))
    }
}

/// Derived scales describing how strongly dispersion perturbs the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionDiagnostics {
    /// `D` [s].
    pub dispersion: f64,
    /// `L_D = tau_s²/k₂` [m].
    pub dispersion_length: f64,
    /// `N_gamma = (gamma T_R)^{-1}`.
    pub photon_round_trips: f64,
    /// `N_D = L_D / L`.
    pub dispersion_round_trips: f64,
    /// `N_gamma / N_D`.
    pub ratio: f64,
    /// `D / (gamma tau_s²) = (√R/2) N_gamma/N_D`: the factor in
    /// `C_nm/gamma = coupling_scale * O_nm tau_s²`.
    pub coupling_scale: f64,
}

pub fn dispersion_diagnostics(
    cavity: &Cavity,
    k2: f64,
    length: f64,
    tau_s: f64,
) -> Result<DispersionDiagnostics> {
    if !(tau_s > 0.0) {
        return Err(Error::Config(format!("tau_s must be positive (got {tau_s})")));
    }
    let dispersion = dispersion_from_physical(k2, length, cavity.round_trip_time(), cavity.reflectivity())?;
    let dispersion_length = tau_s * tau_s / k2;
    let photon_round_trips = cavity.photon_lifetime_round_trips();
    let dispersion_round_trips = dispersion_length / length;
    Ok(DispersionDiagnostics {
        dispersion,
        dispersion_length,
        photon_round_trips,
        dispersion_round_trips,
        ratio: photon_round_trips / dispersion_round_trips,
        coupling_scale: dispersion / (cavity.gamma() * tau_s * tau_s),
    })
}
