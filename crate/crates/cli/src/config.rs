//! Scenario files: TOML, unknown keys rejected.
//!
//! Rates are in units of the cavity loss rate `γ` (taken equal for all
//! supermodes); times in units of `τ_s`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spopo::homodyne::{frequency_grid, Provenance};
use spopo::modes::{
    build_coupling_model, dispersion_diagnostics, Cavity, CouplingModel, DispersionDiagnostics,
};
use spopo::pert::OscillatorParams;
use spopo::spdc::{fit_tau_s, read_jsa_binary, read_jsa_csv, takagi_decompose, Domain};
use spopo::CMatrix;

use crate::presets;
use crate::CliError;

const FS: f64 = 1e-15;
const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    /// `S(Ω)` per mode, phase and method.
    Spectrum,
    /// `S(Ω, φ)` over a phase grid.
    PhaseMap,
    /// Best suppression at `Ω = 0` with and without dispersion.
    Bars,
    /// Output photon number at orders 2 and 4 against the exact value.
    OrderCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub kind: Kind,
    pub cavity: CavityConfig,
    pub dispersion: DispersionConfig,
    pub modes: ModesConfig,
    pub pump: PumpConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub rep_rate_hz: f64,
    pub finesse: f64,
    /// Global detuning `Δ/γ`.
    #[serde(default)]
    pub detuning: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflectivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    /// Direct coupling scale `d` in `C_nm/γ = d O_nm τ_s²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_over_gamma_tau2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2_fs2_per_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<f64>,
    /// Multipliers of the dispersion; one scenario per entry.
    #[serde(default = "unit_scales")]
    pub scales: Vec<f64>,
}

fn unit_scales() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_s_fs: Option<f64>,
    /// Kernel file (`.csv` or flat binary), frequency offsets in rad/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsa: Option<PathBuf>,
}

fn default_n_max() -> usize {
    12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Only mode 0.
    Single,
    /// The first `count` modes at the same level.
    Equal,
    /// `level · ratio^n` for `n < count`.
    Geometric,
    /// `level · shape[n]`.
    Custom,
    /// `level · λ_n/λ_0` from the kernel decomposition.
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub profile: Profile,
    /// `λ/γ` of the leading mode; one scenario per entry.
    pub levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phases {
    Named(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    #[serde(default = "default_modes")]
    pub modes: Vec<usize>,
    /// Radians, or `"optimal"`.
    #[serde(default = "default_phases")]
    pub phases: Phases,
    /// Half span of the `Ω/γ` grid.
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Phase samples over `[0, π)` for phase maps.
    #[serde(default = "default_phase_points")]
    pub phase_points: usize,
}

fn default_modes() -> Vec<usize> {
    vec![0]
}
fn default_phases() -> Phases {
    Phases::List(vec![PI / 2.0])
}
fn default_omega_max() -> f64 {
    5.0
}
fn default_points() -> usize {
    401
}
fn default_phase_points() -> usize {
    64
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            phases: default_phases(),
            omega_max: default_omega_max(),
            points: default_points(),
            phase_points: default_phase_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Any of `pert2`, `pert4`, `exact`.
    #[serde(default = "default_orders")]
    pub orders: Vec<String>,
}

fn default_orders() -> Vec<String> {
    vec!["pert2".into()]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            orders: default_orders(),
        }
    }
}

/// Selected LO phases.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSelection {
    Optimal,
    Fixed(Vec<f64>),
}

/// Supermode structure taken from a kernel file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelModes {
    pub path: PathBuf,
    /// `λ_n/λ_0` of the kept modes.
    pub relative_gains: Vec<f64>,
    pub tau_s: f64,
    pub fit_residual: f64,
    #[serde(skip)]
    pub overlap: CMatrix,
    pub degenerate: bool,
}

/// Derived scales echoed by `validate` and recorded in manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub gamma_over_2pi_hz: f64,
    pub photon_round_trips: f64,
    pub reflectivity: f64,
    pub coupling_scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_length_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion_round_trips: Option<f64>,
    /// `N_γ/N_D`; for a direct coupling scale, the value it implies.
    pub ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_s_fs: Option<f64>,
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub diagnostics: Diagnostics,
    pub kernel: Option<KernelModes>,
    pub provenances: Vec<Provenance>,
    pub phases: PhaseSelection,
    pub omegas: Vec<f64>,
    pub warnings: Vec<String>,
}

fn invalid(field: &str, constraint: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {constraint}"))
}

/// Reads a scenario from a file, or from the built-in preset of that name.
pub fn load_config(source: &str) -> Result<(ScenarioConfig, PathBuf), CliError> {
    let path = Path::new(source);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{source}: {e}")))?;
        let cfg = parse_config(&text).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{source}: {m}")),
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((cfg, base));
    }
    match presets::get(source) {
        Some(text) => Ok((parse_config(text)?, PathBuf::from("."))),
        None => Err(CliError::Validation(format!(
            "{source}: no such file or preset (see `presets list`)"
        ))),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
}

pub fn parse_orders(spec: &str) -> Result<Vec<Provenance>, CliError> {
    match spec {
        "all" => Ok(vec![Provenance::Pert2, Provenance::Pert4, Provenance::Exact]),
        s => Ok(vec![parse_provenance(s)?]),
    }
}

fn parse_provenance(s: &str) -> Result<Provenance, CliError> {
    match s {
        "pert2" => Ok(Provenance::Pert2),
        "pert4" => Ok(Provenance::Pert4),
        "exact" => Ok(Provenance::Exact),
        other => Err(invalid(
            "output.orders",
            format!("unknown order '{other}' (expected pert2, pert4, exact or all)"),
        )),
    }
}

impl ScenarioConfig {
    /// Gains `λ_n/γ` over the `n_max` modes for one pump level.
    pub fn gains(&self, level: f64, kernel: Option<&KernelModes>) -> Result<Vec<f64>, CliError> {
        let n_max = self.modes.n_max;
        let p = &self.pump;
        let mut g = vec![0.0; n_max];
        let count = |default: usize| p.count.unwrap_or(default);
        match p.profile {
            Profile::Single => g[0] = level,
            Profile::Equal | Profile::Geometric => {
                let c = count(5);
                if c == 0 || c > n_max {
                    return Err(invalid(
                        "pump.count",
                        format!("must be between 1 and n_max = {n_max} (got {c})"),
                    ));
                }
                let r = if p.profile == Profile::Equal {
                    1.0
                } else {
                    p.ratio.unwrap_or(0.5)
                };
                for (n, x) in g.iter_mut().take(c).enumerate() {
                    *x = level * r.powi(n as i32);
                }
            }
            Profile::Custom => {
                let shape = p
                    .shape
                    .as_ref()
                    .ok_or_else(|| invalid("pump.shape", "required for the custom profile"))?;
                if shape.len() > n_max {
                    return Err(invalid(
                        "pump.shape",
                        format!("{} entries exceed n_max = {n_max}", shape.len()),
                    ));
                }
                for (x, s) in g.iter_mut().zip(shape) {
                    *x = level * s;
                }
            }
            Profile::Kernel => {
                let k = kernel.ok_or_else(|| {
                    invalid("pump.profile", "'kernel' needs modes.jsa to be set")
                })?;
                for (x, r) in g.iter_mut().zip(&k.relative_gains) {
                    *x = level * r;
                }
            }
        }
        Ok(g)
    }

    fn check_fields(&self) -> Result<(), CliError> {
        let c = &self.cavity;
        if !(c.rep_rate_hz > 0.0) {
            return Err(invalid("cavity.rep_rate_hz", "must be positive"));
        }
        if !(c.finesse > PI) {
            return Err(invalid("cavity.finesse", "must exceed π"));
        }
        if let Some(r) = c.reflectivity {
            if !(r > 0.0 && r <= 1.0) {
                return Err(invalid("cavity.reflectivity", "must be in (0, 1]"));
            }
        }
        if !c.detuning.is_finite() {
            return Err(invalid("cavity.detuning", "must be finite"));
        }
        let d = &self.dispersion;
        let physical = d.k2_fs2_per_mm.is_some() || d.length_mm.is_some();
        match (d.d_over_gamma_tau2, physical) {
            (Some(_), true) => {
                return Err(invalid(
                    "dispersion",
                    "give either d_over_gamma_tau2 or (k2_fs2_per_mm, length_mm), not both",
                ))
            }
            (None, false) => {
                return Err(invalid(
                    "dispersion",
                    "one of d_over_gamma_tau2 or (k2_fs2_per_mm, length_mm) is required",
                ))
            }
            (Some(v), false) if !(v >= 0.0) => {
                return Err(invalid("dispersion.d_over_gamma_tau2", "must be non-negative"))
            }
            (None, true) => {
                let (Some(k2), Some(l)) = (d.k2_fs2_per_mm, d.length_mm) else {
                    return Err(invalid(
                        "dispersion",
                        "k2_fs2_per_mm and length_mm must be given together",
                    ));
                };
                if !(k2 > 0.0 && l > 0.0) {
                    return Err(invalid("dispersion", "k2_fs2_per_mm and length_mm must be positive"));
                }
            }
            _ => {}
        }
        if d.scales.is_empty() || d.scales.iter().any(|s| !(*s >= 0.0)) {
            return Err(invalid("dispersion.scales", "must be a non-empty list of non-negative numbers"));
        }
        let m = &self.modes;
        if m.n_max == 0 {
            return Err(invalid("modes.n_max", "must be at least 1"));
        }
        match (m.tau_s_fs, &m.jsa) {
            (Some(_), Some(_)) => {
                return Err(invalid("modes", "give either tau_s_fs or jsa, not both"))
            }
            (Some(t), None) if !(t > 0.0) => return Err(invalid("modes.tau_s_fs", "must be positive")),
            (None, None) if physical => {
                return Err(invalid(
                    "modes",
                    "tau_s_fs or jsa is required to convert k2 and length to a coupling",
                ))
            }
            _ => {}
        }
        let p = &self.pump;
        if p.levels.is_empty() {
            return Err(invalid("pump.levels", "must not be empty"));
        }
        for &l in &p.levels {
            if !(l >= 0.0) {
                return Err(invalid("pump.levels", format!("λ/γ must be non-negative (got {l})")));
            }
        }
        if let Some(r) = p.ratio {
            if !(r > 0.0) {
                return Err(invalid("pump.ratio", "must be positive"));
            }
        }
        let det = &self.detection;
        if det.modes.is_empty() {
            return Err(invalid("detection.modes", "must not be empty"));
        }
        if let Some(&bad) = det.modes.iter().find(|&&n| n >= m.n_max) {
            return Err(invalid(
                "detection.modes",
                format!("mode {bad} is outside the basis (n_max = {})", m.n_max),
            ));
        }
        if !(det.omega_max > 0.0) || det.points < 2 {
            return Err(invalid(
                "detection",
                "omega_max must be positive and points at least 2",
            ));
        }
        if det.phase_points < 2 {
            return Err(invalid("detection.phase_points", "must be at least 2"));
        }
        Ok(())
    }
}

fn load_kernel(path: &Path, n_max: usize) -> Result<KernelModes, CliError> {
    let file = File::open(path).map_err(|e| invalid("modes.jsa", format!("{}: {e}", path.display())))?;
    let jsa = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        read_jsa_csv(BufReader::new(file))
    } else {
        read_jsa_binary(&mut BufReader::new(file))
    }
    .map_err(|e| invalid("modes.jsa", format!("{}: {e}", path.display())))?;
    if !jsa.grid.is_symmetric() {
        return Err(invalid("modes.jsa", "kernel grid is not symmetric about the degenerate frequency"));
    }
    if n_max > jsa.grid.len {
        return Err(invalid(
            "modes.n_max",
            format!("exceeds the {} kernel grid points", jsa.grid.len),
        ));
    }
    let dec = takagi_decompose(&jsa, n_max).map_err(|e| invalid("modes.jsa", e))?;
    let fit = fit_tau_s(&jsa.grid.samples(), &dec.mode(0), Domain::Frequency)
        .map_err(|e| invalid("modes.jsa", e))?;
    let overlap = dec.frequency_overlap(&jsa.grid, n_max) * spopo::C64::new(fit.tau_s * fit.tau_s, 0.0);
    let top = dec.gains[0];
    Ok(KernelModes {
        path: path.to_path_buf(),
        relative_gains: dec.gains.iter().map(|g| g / top).collect(),
        tau_s: fit.tau_s,
        fit_residual: fit.residual,
        overlap,
        degenerate: dec.degenerate,
    })
}

impl Scenario {
    /// Validates a configuration and derives everything a run needs.
    /// `orders` overrides `output.orders`.
    pub fn resolve(
        config: ScenarioConfig,
        base_dir: &Path,
        orders: Option<Vec<Provenance>>,
    ) -> Result<Self, CliError> {
        config.check_fields()?;
        let mut warnings = Vec::new();
        let mut cavity = Cavity::new(config.cavity.rep_rate_hz, config.cavity.finesse)
            .map_err(|e| invalid("cavity", e))?;
        cavity.reflectivity = config.cavity.reflectivity;

        let kernel = match &config.modes.jsa {
            Some(p) => {
                let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let k = load_kernel(&path, config.modes.n_max)?;
                if k.fit_residual > spopo::spdc::FIT_WARN {
                    warnings.push(format!(
                        "kernel fundamental mode is poorly fit by a Gaussian (residual {:.3})",
                        k.fit_residual
                    ));
                }
                if k.degenerate {
                    warnings.push("kernel gains are degenerate; supermodes are not unique".into());
                }
                Some(k)
            }
            None => None,
        };

        let tau_s = config
            .modes
            .tau_s_fs
            .map(|t| t * FS)
            .or(kernel.as_ref().map(|k| k.tau_s));
        let phys: Option<DispersionDiagnostics> =
            match (config.dispersion.k2_fs2_per_mm, config.dispersion.length_mm, tau_s) {
                (Some(k2), Some(l), Some(tau)) => Some(
                    dispersion_diagnostics(&cavity, k2 * FS * FS / MM, l * MM, tau)
                        .map_err(|e| invalid("dispersion", e))?,
                ),
                _ => None,
            };
        let reflectivity = cavity.reflectivity();
        let coupling_scale = match (&phys, config.dispersion.d_over_gamma_tau2) {
            (Some(p), _) => p.coupling_scale,
            (None, Some(d)) => d,
            (None, None) => unreachable!("checked above"),
        };
        let diagnostics = Diagnostics {
            gamma_over_2pi_hz: cavity.linewidth_hz(),
            photon_round_trips: cavity.photon_lifetime_round_trips(),
            reflectivity,
            coupling_scale,
            dispersion_s: phys.map(|p| p.dispersion),
            dispersion_length_mm: phys.map(|p| p.dispersion_length / MM),
            dispersion_round_trips: phys.map(|p| p.dispersion_round_trips),
            ratio: phys
                .map(|p| p.ratio)
                .unwrap_or(2.0 * coupling_scale / reflectivity.sqrt()),
            tau_s_fs: config.modes.tau_s_fs.or(kernel.as_ref().map(|k| k.tau_s / FS)),
        };

        let provenances = match orders {
            Some(o) => o,
            None => config
                .output
                .orders
                .iter()
                .map(|s| parse_provenance(s))
                .collect::<Result<_, _>>()?,
        };
        if provenances.is_empty() {
            return Err(invalid("output.orders", "must not be empty"));
        }
        let phases = match &config.detection.phases {
            Phases::Named(s) if s == "optimal" => PhaseSelection::Optimal,
            Phases::Named(s) => {
                return Err(invalid(
                    "detection.phases",
                    format!("expected a list of radians or \"optimal\" (got \"{s}\")"),
                ))
            }
            Phases::List(v) if v.is_empty() => {
                return Err(invalid("detection.phases", "must not be empty"))
            }
            Phases::List(v) => PhaseSelection::Fixed(v.clone()),
        };
        let omegas = frequency_grid(config.detection.omega_max, config.detection.points)
            .map_err(|e| invalid("detection", e))?;

        let scenario = Self {
            config,
            diagnostics,
            kernel,
            provenances,
            phases,
            omegas,
            warnings,
        };
        // threshold and basis checks for every combination up front
        for &level in &scenario.config.pump.levels {
            for &scale in &scenario.config.dispersion.scales {
                scenario.params(level, scale)?;
            }
        }
        Ok(scenario)
    }

    /// Coupling for a multiplier of the configured dispersion.
    pub fn coupling(&self, scale: f64) -> Result<CouplingModel, CliError> {
        let d = self.diagnostics.coupling_scale * scale;
        let detuning = self.config.cavity.detuning;
        match &self.kernel {
            Some(k) => build_coupling_model(&k.overlap, d, detuning).map_err(|e| invalid("modes.jsa", e)),
            None => Ok(CouplingModel::hermite_gaussian(self.config.modes.n_max, d, detuning)),
        }
    }

    /// Oscillator for one pump level and dispersion multiplier.
    pub fn params(&self, level: f64, scale: f64) -> Result<OscillatorParams, CliError> {
        self.params_with_basis(level, scale, self.config.modes.n_max)
    }

    /// Same, with the Hermite-Gaussian basis truncated at `n_max` instead.
    pub fn params_with_basis(
        &self,
        level: f64,
        scale: f64,
        n_max: usize,
    ) -> Result<OscillatorParams, CliError> {
        let mut gains = self.config.gains(level, self.kernel.as_ref())?;
        gains.resize(n_max, 0.0);
        let coupling = if n_max == self.config.modes.n_max {
            self.coupling(scale)?
        } else {
            CouplingModel::hermite_gaussian(
                n_max,
                self.diagnostics.coupling_scale * scale,
                self.config.cavity.detuning,
            )
        };
        let mut p = OscillatorParams::new(gains, vec![1.0; n_max], coupling).map_err(|e| match e {
            spopo::Error::AboveThreshold { mode, ratio } => CliError::Validation(format!(
                "pump.levels: mode {mode} at λ/γ = {ratio:.4} is above the oscillation threshold λ/γ = 1"
            )),
            other => invalid("pump", other),
        })?;
        p.round_trip_time = Some(1.0 / self.config.cavity.rep_rate_hz);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "spectrum"
[cavity]
rep_rate_hz = 76e6
finesse = 26
[dispersion]
d_over_gamma_tau2 = 0.25
[modes]
n_max = 8
[pump]
profile = "single"
levels = [0.48]
"#;

    fn resolve(text: &str) -> Result<Scenario, CliError> {
        Scenario::resolve(parse_config(text)?, Path::new("."), None)
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let s = resolve(MINIMAL).unwrap();
        assert_eq!(s.omegas.len(), 401);
        assert_eq!(s.provenances, vec![Provenance::Pert2]);
        assert_eq!(s.phases, PhaseSelection::Fixed(vec![PI / 2.0]));
        assert!((s.diagnostics.gamma_over_2pi_hz - 76e6 / 26.0).abs() < 1e-6);
        assert!((s.diagnostics.photon_round_trips - 26.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("finesse = 26", "finesse = 26\nfinese = 3");
        let err = resolve(&text).unwrap_err().to_string();
        assert!(err.contains("finese"), "{err}");
    }

    #[test]
    fn above_threshold_is_refused() {
        let text = MINIMAL.replace("levels = [0.48]", "levels = [1.2]");
        let err = resolve(&text).unwrap_err().to_string();
        assert!(err.contains("threshold"), "{err}");
        assert!(err.contains("1.2000"), "{err}");
    }

    #[test]
    fn both_dispersion_forms_are_rejected() {
        let text = MINIMAL.replace(
            "d_over_gamma_tau2 = 0.25",
            "d_over_gamma_tau2 = 0.25\nk2_fs2_per_mm = 136\nlength_mm = 2",
        );
        let err = resolve(&text).unwrap_err().to_string();
        assert!(err.starts_with("dispersion"), "{err}");
    }

    #[test]
    fn physical_dispersion_needs_a_duration() {
        let text = MINIMAL.replace(
            "d_over_gamma_tau2 = 0.25",
            "k2_fs2_per_mm = 136\nlength_mm = 2",
        );
        assert!(resolve(&text).is_err());
        let with_tau = text.replace("n_max = 8", "n_max = 8\ntau_s_fs = 67");
        let s = resolve(&with_tau).unwrap();
        let d = &s.diagnostics;
        assert!((d.dispersion_length_mm.unwrap() - 33.0).abs() < 0.1);
        assert_eq!(d.dispersion_round_trips.unwrap().round(), 17.0);
        // N_γ = F/2π, so the ratio is ≈ 0.25 rather than 0.5
        assert!((d.ratio - 26.0 / (2.0 * PI) / 16.5).abs() < 0.01);
    }

    #[test]
    fn detection_outside_basis() {
        let text = MINIMAL.replace("levels = [0.48]", "levels = [0.48]\n[detection]\nmodes = [8]");
        let err = resolve(&text).unwrap_err().to_string();
        assert!(err.contains("detection.modes"), "{err}");
    }

    #[test]
    fn pump_profiles() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.pump.profile = Profile::Geometric;
        cfg.pump.count = Some(3);
        cfg.pump.ratio = Some(0.5);
        assert_eq!(
            cfg.gains(0.4, None).unwrap(),
            vec![0.4, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        cfg.pump.profile = Profile::Custom;
        cfg.pump.shape = Some(vec![1.0, 0.0, 1.0]);
        assert_eq!(cfg.gains(0.3, None).unwrap()[..3], [0.3, 0.0, 0.3]);
        cfg.pump.profile = Profile::Kernel;
        assert!(cfg.gains(0.3, None).is_err());
    }

    #[test]
    fn every_preset_resolves() {
        for (name, _) in presets::PRESETS {
            let (cfg, base) = load_config(name).unwrap();
            Scenario::resolve(cfg, &base, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
