//! Down-conversion kernel and its supermode (Takagi) decomposition.
//!
//! Frequencies are offsets from the degenerate signal frequency `ω₀ = ω_p/2`.
//! The kernel is
//!
//! ```text
//! S̃(x, y) ∝ E_p(x + y) e^{iΔk L/2} sinc(Δk L/2)
//! Δk(x, y) = k₀ + k₁ (x + y) + k₂ (x² + y²) + k₁₁ x y
//! ```
//!
//! with a Gaussian pump `E_p(ν) = exp(-ν²/2σ²)`. Its Takagi factorization
//! `S̃ = Σ λ_n q_n q_nᵀ` gives the gains and the frequency-domain supermodes.

use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};

use nalgebra::DVector;

use crate::{CMatrix, Error, RMatrix, Result, C64};

/// Relative gap under which two singular values are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Singular values closer than this (relative) are factored as one block.
const CLUSTER_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest are numerical zeros.
const NOISE_FLOOR: f64 = 1e-13;
/// Fit residual above which a profile is not considered Gaussian.
pub const FIT_WARN: f64 = 0.05;

/// Uniform grid of frequency offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn symmetric(half_span: f64, points: usize) -> Result<Self> {
        if points < 2 || !(half_span > 0.0) {
            return Err(Error::Config(format!(
                "frequency grid needs >= 2 points and a positive span (got {points}, {half_span})"
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

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn is_symmetric(&self) -> bool {
        (self.start + self.end()).abs() <= 1e-9 * self.step.abs()
    }
}

/// Gaussian pump spectrum in the sum-frequency offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPump {
    /// Pump carrier `ω_p`, kept for reference.
    pub center: f64,
    /// Amplitude `1/√e` half width `σ`.
    pub bandwidth: f64,
}

impl GaussianPump {
    pub fn amplitude(&self, nu: f64) -> f64 {
        (-nu * nu / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

/// Quadratic phase mismatch and crystal length.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseMatching {
    pub k0: f64,
    /// Coefficient of `x + y` (group-velocity mismatch).
    pub k1: f64,
    /// Coefficient of `x² + y²`.
    pub k2: f64,
    /// Coefficient of `x y`.
    pub k11: f64,
    pub length: f64,
}

impl PhaseMatching {
    /// `Δk L / 2`.
    pub fn half_phase(&self, x: f64, y: f64) -> f64 {
        let dk = self.k0 + self.k1 * (x + y) + self.k2 * (x * x + y * y) + self.k11 * x * y;
        dk * self.length / 2.0
    }

    /// Largest change of `Δk L/2` between neighbouring grid points.
    fn max_phase_step(&self, grid: &FrequencyGrid) -> f64 {
        let ends = [grid.start, grid.end()];
        let mut worst: f64 = 0.0;
        for &x in &ends {
            for &y in &ends {
                let d = (self.k1 + 2.0 * self.k2 * x + self.k11 * y) * self.length / 2.0;
                worst = worst.max(d.abs() * grid.step);
            }
        }
        worst
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Sampled, symmetric down-conversion kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub grid: FrequencyGrid,
    pub values: CMatrix,
    pub pump: Option<GaussianPump>,
    pub phase_matching: Option<PhaseMatching>,
}

impl JointSpectralAmplitude {
    /// Wraps sampled values, symmetrizing them.
    pub fn from_values(grid: FrequencyGrid, values: CMatrix) -> Result<Self> {
        if values.nrows() != grid.len || values.ncols() != grid.len {
            return Err(Error::Dimension(format!(
                "kernel is {}x{} on a {}-point grid",
                values.nrows(),
                values.ncols(),
                grid.len
            )));
        }
        let values = (&values + values.transpose()) * C64::new(0.5, 0.0);
        Ok(Self {
            grid,
            values,
            pump: None,
            phase_matching: None,
        })
    }

    /// Largest `|S̃(x,y) - S̃(y,x)|`.
    pub fn asymmetry(&self) -> f64 {
        crate::max_abs(&(&self.values - self.values.transpose()))
    }

    /// `Δk L/2` on the grid, if a crystal model is attached.
    pub fn half_phase_samples(&self) -> Option<RMatrix> {
        let pm = self.phase_matching?;
        let x = self.grid.samples();
        Some(RMatrix::from_fn(x.len(), x.len(), |i, j| pm.half_phase(x[i], x[j])))
    }
}

/// Samples the kernel and scales it so that its largest gain is `lambda0`.
pub fn build_jsa(
    pump: GaussianPump,
    crystal: PhaseMatching,
    grid: FrequencyGrid,
    lambda0: f64,
) -> Result<JointSpectralAmplitude> {
    if !grid.is_symmetric() {
        return Err(Error::Config(format!(
            "frequency grid [{}, {}] is not symmetric about the degenerate frequency",
            grid.start,
            grid.end()
        )));
    }
    if !(pump.bandwidth > 0.0) || !(lambda0 > 0.0) {
        return Err(Error::Config(
            "pump bandwidth and target gain must be positive".into(),
        ));
    }
    let samples_per_fwhm = 2.0 * (2.0 * 2f64.ln()).sqrt() * pump.bandwidth / grid.step;
    if samples_per_fwhm < 16.0 {
        return Err(Error::Config(format!(
            "pump bandwidth resolved by {samples_per_fwhm:.1} samples, need 16"
        )));
    }
    let step = crystal.max_phase_step(&grid);
    if step > 2.0 * PI / 16.0 {
        return Err(Error::Config(format!(
            "phase matching unresolved: phase changes by {step:.3} rad per grid step"
        )));
    }
    let x = grid.samples();
    let mut values = CMatrix::from_fn(grid.len, grid.len, |i, j| {
        let h = crystal.half_phase(x[i], x[j]);
        C64::from_polar(pump.amplitude(x[i] + x[j]) * sinc(h), h)
    });
    values = (&values + values.transpose()) * C64::new(0.5, 0.0);
    let top = values.clone().singular_values().max();
    if !(top > 0.0) {
        return Err(Error::Config("kernel vanishes on the grid".into()));
    }
    values *= C64::new(lambda0 / top, 0.0);
    Ok(JointSpectralAmplitude {
        grid,
        values,
        pump: Some(pump),
        phase_matching: Some(crystal),
    })
}

/// `S̃ ≈ Σ λ_n q_n q_nᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupermodeDecomposition {
    /// Descending, non-negative.
    pub gains: Vec<f64>,
    /// Columns are the orthonormal modes `q_n` as grid samples.
    pub modes: CMatrix,
    /// `‖S̃ - Σ λ q qᵀ‖_F / ‖S̃‖_F` over the kept modes.
    pub residual: f64,
    /// Kept gains closer than [`DEGENERACY_TOL`]: those modes are only
    /// defined up to an orthogonal rotation.
    pub degenerate: bool,
}

impl SupermodeDecomposition {
    pub fn mode(&self, n: usize) -> Vec<C64> {
        self.modes.column(n).iter().copied().collect()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.modes.nrows(), self.modes.nrows());
        for (k, &g) in self.gains.iter().enumerate() {
            let q = self.modes.column(k);
            out += q * q.transpose() * C64::new(g, 0.0);
        }
        out
    }

    /// Comparison view: each mode rotated by the phase that makes its overlap
    /// with `reference[n]` real and positive. Rotations other than ±1 break
    /// the factorization, so this is for display only.
    pub fn aligned_to(&self, reference: &[Vec<C64>]) -> Vec<Vec<C64>> {
        reference
            .iter()
            .enumerate()
            .take(self.gains.len())
            .map(|(n, r)| {
                let q = self.mode(n);
                let ov: C64 = r.iter().zip(&q).map(|(a, b)| a.conj() * b).sum();
                let rot = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
                q.iter().map(|z| z * rot).collect()
            })
            .collect()
    }

    /// Dispersion overlap `O_nm = -Σ_i ω_i² conj(q_n[i]) q_m[i]` of the first
    /// `count` modes, in the inverse square of the time unit conjugate to
    /// `grid`.
    pub fn frequency_overlap(&self, grid: &FrequencyGrid, count: usize) -> CMatrix {
        let w2: Vec<f64> = grid.samples().iter().map(|w| w * w).collect();
        CMatrix::from_fn(count, count, |n, m| {
            -(0..w2.len())
                .map(|i| self.modes[(i, n)].conj() * self.modes[(i, m)] * w2[i])
                .sum::<C64>()
        })
    }
}

/// Sign so that the largest-magnitude sample has a positive real part (or a
/// zero real part and positive imaginary part).
fn fix_sign(q: &mut DVector<C64>) {
    let (k, _) = q
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 + 1e-12 { (i, z.norm()) } else { best });
    let z = q[k];
    if z.re < 0.0 || (z.re == 0.0 && z.im < 0.0) {
        q.neg_mut();
    }
}

/// Factorization `Z = W Wᵀ` of a symmetric unitary matrix with `W` unitary.
///
/// `Z = X + iY` with commuting real symmetric `X`, `Y`; a generic real
/// combination of the two shares their eigenvectors `O`, and then
/// `Z = O diag(e^{iθ}) Oᵀ`.
fn symmetric_unitary_sqrt(z: &CMatrix) -> CMatrix {
    let x = z.map(|c| c.re);
    let y = z.map(|c| c.im);
    let mix = &x + &y * 0.618_033_988_749_895;
    let sym = (&mix + mix.transpose()) * 0.5;
    let o = sym.symmetric_eigen().eigenvectors;
    let oc = o.map(|r| C64::new(r, 0.0));
    let d = oc.transpose() * z * &oc;
    let mut w = oc;
    for k in 0..d.nrows() {
        let root = d[(k, k)].sqrt();
        let mut col = w.column_mut(k);
        col *= root;
    }
    w
}

/// Autonne-Takagi factorization of a complex symmetric matrix, keeping the
/// `n_keep` largest gains.
pub fn takagi(a: &CMatrix, n_keep: usize) -> Result<SupermodeDecomposition> {
    let n = a.nrows();
    if !a.is_square() || n == 0 {
        return Err(Error::Dimension(format!("{}x{} kernel", a.nrows(), a.ncols())));
    }
    if n_keep > n {
        return Err(Error::Dimension(format!("n_keep = {n_keep} exceeds grid size {n}")));
    }
    let scale = crate::max_abs(a).max(f64::MIN_POSITIVE);
    if crate::max_abs(&(a - a.transpose())) > 1e-10 * scale {
        return Err(Error::Config("kernel is not complex symmetric".into()));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v = svd.v_t.expect("requested").adjoint();
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smax = sv[order[0]];

    let mut modes = CMatrix::zeros(n, n);
    let mut gains = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sv[order[start]] - sv[order[end]] <= CLUSTER_TOL * smax {
            end += 1;
        }
        let cols: Vec<usize> = order[start..end].to_vec();
        let uc = CMatrix::from_columns(&cols.iter().map(|&c| u.column(c)).collect::<Vec<_>>());
        if sv[order[start]] <= NOISE_FLOOR * smax {
            // numerical null space: any orthonormal completion will do
            for (k, &c) in cols.iter().enumerate() {
                modes.set_column(start + k, &uc.column(k));
                gains[start + k] = sv[c];
            }
        } else {
            let vc = CMatrix::from_columns(&cols.iter().map(|&c| v.column(c)).collect::<Vec<_>>());
            let z = uc.adjoint() * vc.map(|c| c.conj());
            let q = if cols.len() == 1 {
                &uc * z[(0, 0)].sqrt()
            } else {
                &uc * symmetric_unitary_sqrt(&z)
            };
            for (k, &c) in cols.iter().enumerate() {
                modes.set_column(start + k, &q.column(k));
                gains[start + k] = sv[c];
            }
        }
        start = end;
    }
    for k in 0..n {
        let mut col: DVector<C64> = modes.column(k).into_owned();
        fix_sign(&mut col);
        modes.set_column(k, &col);
    }

    let degenerate = (1..n_keep).any(|k| {
        gains[k] > NOISE_FLOOR * smax && gains[k - 1] - gains[k] <= DEGENERACY_TOL * smax
    });
    gains.truncate(n_keep);
    let modes = modes.columns(0, n_keep).into_owned();
    let mut dec = SupermodeDecomposition {
        gains,
        modes,
        residual: 0.0,
        degenerate,
    };
    let norm = a.norm();
    dec.residual = if norm > 0.0 { (a - dec.reconstruct()).norm() / norm } else { 0.0 };
    Ok(dec)
}

pub fn takagi_decompose(jsa: &JointSpectralAmplitude, n_keep: usize) -> Result<SupermodeDecomposition> {
    takagi(&jsa.values, n_keep)
}

/// Domain of a sampled fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `|s(t)| ∝ exp(-t²/2τ²)`.
    Time,
    /// `|s(ω)| ∝ exp(-ω²τ²/2)`.
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub tau_s: f64,
    /// `‖|s| - fit‖ / ‖s‖`.
    pub residual: f64,
    /// Residual above [`FIT_WARN`].
    pub poor: bool,
}

/// Least-squares Gaussian fit of `|values|` on `x`, centred at zero.
pub fn fit_tau_s(x: &[f64], values: &[C64], domain: Domain) -> Result<GaussianFit> {
    if x.len() != values.len() || x.len() < 3 {
        return Err(Error::Dimension("fit needs matching samples, at least 3".into()));
    }
    let mag: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    let norm = mag.iter().map(|m| m * m).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Config("cannot fit a zero profile".into()));
    }
    // residual for width w with the amplitude solved in closed form
    let residual = |w: f64| {
        let g: Vec<f64> = x.iter().map(|t| (-t * t / (2.0 * w * w)).exp()).collect();
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let amp = g.iter().zip(&mag).map(|(a, b)| a * b).sum::<f64>() / gg;
        g.iter()
            .zip(&mag)
            .map(|(a, b)| (b - amp * a).powi(2))
            .sum::<f64>()
            .sqrt()
            / norm
    };
    let span = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let dx = span / x.len() as f64;
    // coarse log scan, then golden section on the best bracket
    let (lo, hi) = (dx / 4.0, 2.0 * span);
    let steps: usize = 200;
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let widths: Vec<f64> = (0..=steps).map(|k| lo * ratio.powi(k as i32)).collect();
    let best = (0..widths.len())
        .min_by(|&i, &j| residual(widths[i]).total_cmp(&residual(widths[j])))
        .expect("non-empty scan");
    let (mut a, mut b) = (
        widths[best.saturating_sub(1)],
        widths[(best + 1).min(steps)],
    );
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (residual(c), residual(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * b {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = residual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = residual(d);
        }
    }
    let w = (a + b) / 2.0;
    let r = residual(w);
    Ok(GaussianFit {
        tau_s: match domain {
            Domain::Time => w,
            Domain::Frequency => 1.0 / w,
        },
        residual: r,
        poor: r > FIT_WARN,
    })
}

/// `τ_s` of a Gaussian whose intensity spectrum has the given FWHM in
/// wavelength, at the given centre wavelength (both in metres).
pub fn tau_s_from_spectral_fwhm(fwhm: f64, center: f64) -> f64 {
    const C: f64 = 299_792_458.0;
    let domega = 2.0 * PI * C * fwhm / (center * center);
    2.0 * 2f64.ln().sqrt() / domega
}

const MAGIC: &[u8; 8] = b"SPJSA\0v1";

/// Flat binary form: magic, `u64` size, `f64` grid start and step, then the
/// matrix row-major as little-endian `(re, im)` pairs.
pub fn write_jsa_binary<W: Write>(out: &mut W, jsa: &JointSpectralAmplitude) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(jsa.grid.len as u64).to_le_bytes())?;
    out.write_all(&jsa.grid.start.to_le_bytes())?;
    out.write_all(&jsa.grid.step.to_le_bytes())?;
    for i in 0..jsa.grid.len {
        for j in 0..jsa.grid.len {
            let z = jsa.values[(i, j)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_jsa_binary<R: Read>(input: &mut R) -> Result<JointSpectralAmplitude> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a kernel file (bad magic)".into()));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    if len == 0 || len > 1 << 14 {
        return Err(Error::Io(format!("implausible grid size {len}")));
    }
    let mut f = || -> Result<f64> {
        input.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let start = f()?;
    let step = f()?;
    let mut values = CMatrix::zeros(len, len);
    for i in 0..len {
        for j in 0..len {
            let re = f()?;
            let im = f()?;
            values[(i, j)] = C64::new(re, im);
        }
    }
    JointSpectralAmplitude::from_values(FrequencyGrid { start, step, len }, values)
}

pub const JSA_CSV_HEADER: &str = "omega,omega_prime,re,im";

/// Long-format CSV, rows in row-major order.
pub fn write_jsa_csv<W: Write>(out: &mut W, jsa: &JointSpectralAmplitude) -> Result<()> {
    writeln!(out, "{JSA_CSV_HEADER}")?;
    let x = jsa.grid.samples();
    for i in 0..x.len() {
        for j in 0..x.len() {
            let z = jsa.values[(i, j)];
            writeln!(out, "{},{},{},{}", x[i], x[j], z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_jsa_csv<R: BufRead>(input: R) -> Result<JointSpectralAmplitude> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Io("empty kernel CSV".into()))??;
    if header.trim() != JSA_CSV_HEADER {
        return Err(Error::Io(format!("unexpected kernel CSV header '{header}'")));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Io(format!("kernel CSV line {}: {e}", k + 2)))?;
        if f.len() != 4 {
            return Err(Error::Io(format!("kernel CSV line {}: expected 4 fields", k + 2)));
        }
        rows.push(f);
    }
    let len = (rows.len() as f64).sqrt().round() as usize;
    if len < 2 || len * len != rows.len() {
        return Err(Error::Io(format!("{} kernel entries is not a square grid", rows.len())));
    }
    let start = rows[0][1];
    let step = rows[1][1] - rows[0][1];
    let grid = FrequencyGrid { start, step, len };
    let mut values = CMatrix::zeros(len, len);
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / len, k % len);
        let tol = 1e-9 * step.abs().max(start.abs());
        if (r[0] - grid.at(i)).abs() > tol || (r[1] - grid.at(j)).abs() > tol {
            return Err(Error::Io(format!(
                "kernel CSV entry {} is off the uniform row-major grid",
                k + 2
            )));
        }
        values[(i, j)] = C64::new(r[2], r[3]);
    }
    JointSpectralAmplitude::from_values(grid, values)
}
