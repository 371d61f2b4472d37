//! One scenario: a job per (pump level, dispersion multiplier), computed in
//! parallel and written in a fixed order by a single writer.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use spopo::exact::{exact_photon_number, solve_exact};
use spopo::homodyne::{
    quadratics_at, squeezing_report, write_spectrum_csv, PhaseChoice, PhaseQuadratic, Provenance,
    SpectrumResult, CSV_HEADER,
};
use spopo::pert::{photon_number, transfer_coefficients, zeroth_order, OscillatorParams};

use crate::config::{Diagnostics, Kind, PhaseSelection, Scenario, ScenarioConfig};
use crate::CliError;

/// Relative disagreement above which a result is flagged.
pub const VALIDITY_ENVELOPE: f64 = 1e-2;

pub const BARS_HEADER: &str = "mode,without_dB,phi_without,with_dB,phi_with,loss_dB,provenance";
pub const PHOTON_HEADER: &str = "omega_over_gamma,mode,n_pert2,n_pert4,n_exact,negative";

/// A CSV table. `key` holds the column compared across sweep values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: &'static str,
    pub rows: Vec<String>,
    pub key: Vec<f64>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    /// Largest `γ² (|W|² - |V|²) - 1` over the grid, zeroth order.
    pub bogoliubov_max: f64,
    /// Largest relative commutator defect of the exact map.
    pub commutator_max: f64,
    /// Largest condition number met by the exact solver.
    pub condition_max: f64,
    /// Largest relative difference of the detected spectra from the exact ones.
    pub pert2_vs_exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pert4_vs_exact: Option<f64>,
    /// Same spectra with the basis enlarged by four modes (Hermite-Gaussian
    /// bases only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobResult {
    pub id: String,
    pub level: f64,
    pub scale: f64,
    /// `C_nm/γ = coupling_scale · O_nm τ_s²`.
    pub coupling_scale: f64,
    pub max_coupling_over_gamma: f64,
    pub gains: Vec<f64>,
    pub files: Vec<String>,
    pub invariants: Invariants,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone)]
pub struct Bundle {
    pub scenario: Scenario,
    pub jobs: Vec<JobResult>,
}

impl Bundle {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = self.scenario.warnings.clone();
        for j in &self.jobs {
            w.extend(j.warnings.iter().map(|m| format!("{}: {m}", j.id)));
        }
        w
    }
}

#[derive(Serialize)]
struct GridSpec<'a> {
    omega_over_gamma_max: f64,
    points: usize,
    phases: PhaseSpec<'a>,
    losses_over_gamma: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum PhaseSpec<'a> {
    Optimal(&'static str),
    Fixed(&'a [f64]),
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ScenarioConfig,
    orders: Vec<String>,
    n_max: usize,
    diagnostics: &'a Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel: Option<&'a crate::config::KernelModes>,
    grid: GridSpec<'a>,
    validity_envelope: f64,
    jobs: &'a [JobResult],
    warnings: Vec<String>,
}

fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| PI * k as f64 / points as f64).collect()
}

/// Quadratics of every mode at each frequency, `[omega][mode]`.
fn quadratics(
    params: &OscillatorParams,
    omegas: &[f64],
    prov: Provenance,
) -> Result<Vec<Vec<PhaseQuadratic>>, CliError> {
    omegas
        .iter()
        .map(|&w| quadratics_at(params, w, prov).map_err(CliError::from))
        .collect()
}

fn mode_column(q: &[Vec<PhaseQuadratic>], n: usize) -> Vec<PhaseQuadratic> {
    q.iter().map(|row| row[n]).collect()
}

/// Values of the detected spectra at the configured phases, flattened.
fn detected_values(
    q: &[Vec<PhaseQuadratic>],
    modes: &[usize],
    phases: &PhaseSelection,
) -> Vec<f64> {
    let mut out = Vec::new();
    for &n in modes {
        for row in q {
            match phases {
                PhaseSelection::Optimal => out.push(row[n].min()),
                PhaseSelection::Fixed(list) => out.extend(list.iter().map(|&p| row[n].eval(p))),
            }
        }
    }
    out
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

fn spectrum_rows(results: &[SpectrumResult]) -> Result<(Vec<String>, Vec<f64>), CliError> {
    let mut buf = Vec::new();
    write_spectrum_csv(&mut buf, results)?;
    let text = String::from_utf8(buf).expect("ascii csv");
    let rows = text.lines().skip(1).map(str::to_owned).collect();
    let key = results.iter().flat_map(|r| r.values.iter().copied()).collect();
    Ok((rows, key))
}

fn run_job(
    s: &Scenario,
    li: usize,
    si: usize,
) -> Result<JobResult, CliError> {
    let cfg = &s.config;
    let level = cfg.pump.levels[li];
    let scale = cfg.dispersion.scales[si];
    let params = s.params(level, scale)?;
    let id = format!("L{li}_D{si}");
    let modes = &cfg.detection.modes;
    let omegas: Vec<f64> = if cfg.kind == Kind::Bars { vec![0.0] } else { s.omegas.clone() };
    let mut warnings = Vec::new();

    let mut bogoliubov_max: f64 = 0.0;
    let mut commutator_max: f64 = 0.0;
    let mut condition_max: f64 = 0.0;
    for &w in &omegas {
        for (n, r) in zeroth_order(&params, w)?.iter().enumerate() {
            let g = params.losses[n];
            bogoliubov_max = bogoliubov_max.max(r.bogoliubov_residual(g).abs() * g * g);
        }
        let e = solve_exact(&params, w)?;
        commutator_max = commutator_max.max(e.commutator_residual());
        condition_max = condition_max.max(e.condition);
    }

    let exact_q = quadratics(&params, &omegas, Provenance::Exact)?;
    let pert2_q = quadratics(&params, &omegas, Provenance::Pert2)?;
    let pert4_q = if s.provenances.contains(&Provenance::Pert4) || cfg.kind == Kind::OrderCheck {
        Some(quadratics(&params, &omegas, Provenance::Pert4)?)
    } else {
        None
    };
    let pick = |p: Provenance| match p {
        Provenance::Exact => &exact_q,
        Provenance::Pert4 => pert4_q.as_ref().expect("computed when requested"),
        _ => &pert2_q,
    };

    let eval_phases = match cfg.kind {
        Kind::PhaseMap => PhaseSelection::Fixed(phase_grid(cfg.detection.phase_points)),
        Kind::Bars => PhaseSelection::Optimal,
        _ => s.phases.clone(),
    };
    let exact_vals = detected_values(&exact_q, modes, &eval_phases);
    let pert2_vs_exact = max_rel(&detected_values(&pert2_q, modes, &eval_phases), &exact_vals);
    let pert4_vs_exact = pert4_q
        .as_ref()
        .map(|q| max_rel(&detected_values(q, modes, &eval_phases), &exact_vals));

    let primary = s.provenances[0];
    let truncation = if s.kernel.is_none() {
        let wide = s.params_with_basis(level, scale, cfg.modes.n_max + 4)?;
        let q = quadratics(&wide, &omegas, primary)?;
        Some(max_rel(
            &detected_values(pick(primary), modes, &eval_phases),
            &detected_values(&q, modes, &eval_phases),
        ))
    } else {
        None
    };

    let mut tables = Vec::new();
    let mut negative = false;
    match cfg.kind {
        Kind::Spectrum | Kind::PhaseMap => {
            let choices: Vec<PhaseChoice> = match &eval_phases {
                PhaseSelection::Optimal => vec![PhaseChoice::Optimal],
                PhaseSelection::Fixed(v) => v.iter().map(|&p| PhaseChoice::Fixed(p)).collect(),
            };
            let mut results = Vec::new();
            for &prov in &s.provenances {
                let q = pick(prov);
                for &n in modes {
                    let col = mode_column(q, n);
                    for &c in &choices {
                        results.push(SpectrumResult::from_quadratics(
                            n,
                            params.losses[n],
                            &omegas,
                            &col,
                            c,
                            prov,
                        ));
                    }
                }
            }
            negative = results.iter().any(|r| r.negative);
            let (rows, key) = spectrum_rows(&results)?;
            let prefix = if cfg.kind == Kind::Spectrum { "spectrum" } else { "phase_map" };
            tables.push(Table {
                file: format!("{prefix}_{id}.csv"),
                header: CSV_HEADER,
                rows,
                key,
            });
        }
        Kind::Bars => {
            let mut rows = Vec::new();
            let mut key = Vec::new();
            for &prov in &s.provenances {
                for r in squeezing_report(&params, modes, prov)? {
                    negative |= !r.with_db.is_finite() || !r.without_db.is_finite();
                    rows.push(format!(
                        "{},{},{},{},{},{},{}",
                        r.mode, r.without_db, r.phi_without, r.with_db, r.phi_with, r.loss_db, prov
                    ));
                    key.push(r.with_db);
                }
            }
            tables.push(Table {
                file: format!("bars_{id}.csv"),
                header: BARS_HEADER,
                rows,
                key,
            });
        }
        Kind::OrderCheck => {
            let mut rows = Vec::new();
            let mut key = Vec::new();
            let mut worst_split: f64 = 0.0;
            for &n in modes {
                for &w in &omegas {
                    let tc = transfer_coefficients(&params, w, 4)?;
                    let n2 = photon_number(&tc, &params.losses, n, 2);
                    let n4 = photon_number(&tc, &params.losses, n, 4);
                    let ne = exact_photon_number(&solve_exact(&params, w)?, n);
                    let neg = n2 < 0.0 || n4 < 0.0;
                    negative |= neg;
                    worst_split = worst_split.max((n4 - n2).abs() / n4.abs());
                    let mut row = String::new();
                    write!(row, "{},{n},{n2},{n4},{ne},{neg}", w / params.losses[n])
                        .expect("string write");
                    rows.push(row);
                    key.push(n2);
                }
            }
            if worst_split > VALIDITY_ENVELOPE {
                warnings.push(format!(
                    "second- and fourth-order photon numbers differ by up to {:.1}%",
                    100.0 * worst_split
                ));
            }
            tables.push(Table {
                file: format!("photon_{id}.csv"),
                header: PHOTON_HEADER,
                rows,
                key,
            });
        }
    }

    if pert2_vs_exact > VALIDITY_ENVELOPE {
        warnings.push(format!(
            "second-order spectra differ from the exact solution by up to {:.2}% (envelope {:.0}%)",
            100.0 * pert2_vs_exact,
            100.0 * VALIDITY_ENVELOPE
        ));
    }
    if let Some(t) = truncation.filter(|t| *t > VALIDITY_ENVELOPE) {
        warnings.push(format!(
            "spectra change by {:.2}% when the basis grows from {} to {} modes; raise modes.n_max",
            100.0 * t,
            cfg.modes.n_max,
            cfg.modes.n_max + 4
        ));
    }
    if negative {
        warnings.push("negative (unphysical) values in the truncated expansion".into());
    }

    Ok(JobResult {
        id,
        level,
        scale,
        coupling_scale: s.diagnostics.coupling_scale * scale,
        max_coupling_over_gamma: params.coupling.max_off_diagonal(),
        gains: params.gains.clone(),
        files: tables.iter().map(|t| t.file.clone()).collect(),
        invariants: Invariants {
            bogoliubov_max,
            commutator_max,
            condition_max,
            pert2_vs_exact,
            pert4_vs_exact,
            truncation,
            negative,
        },
        warnings,
        tables,
    })
}

/// Computes every job of a scenario on the current rayon pool.
pub fn run_scenario(scenario: &Scenario) -> Result<Bundle, CliError> {
    let nl = scenario.config.pump.levels.len();
    let ns = scenario.config.dispersion.scales.len();
    let jobs: Vec<(usize, usize)> = (0..nl).flat_map(|l| (0..ns).map(move |d| (l, d))).collect();
    let results: Vec<Result<JobResult, CliError>> = jobs
        .par_iter()
        .map(|&(l, d)| run_job(scenario, l, d))
        .collect();
    Ok(Bundle {
        scenario: scenario.clone(),
        jobs: results.into_iter().collect::<Result<_, _>>()?,
    })
}

pub fn manifest_json(bundle: &Bundle) -> Result<String, CliError> {
    let s = &bundle.scenario;
    let phases = match &s.phases {
        PhaseSelection::Optimal => PhaseSpec::Optimal("optimal"),
        PhaseSelection::Fixed(v) => PhaseSpec::Fixed(v),
    };
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: &s.config,
        orders: s.provenances.iter().map(|p| p.to_string()).collect(),
        n_max: s.config.modes.n_max,
        diagnostics: &s.diagnostics,
        kernel: s.kernel.as_ref(),
        grid: GridSpec {
            omega_over_gamma_max: s.config.detection.omega_max,
            points: s.config.detection.points,
            phases,
            losses_over_gamma: 1.0,
        },
        validity_envelope: VALIDITY_ENVELOPE,
        jobs: &bundle.jobs,
        warnings: bundle.warnings(),
    };
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    Ok(text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes every table and `manifest.json` under `out`.
pub fn write_bundle(bundle: &Bundle, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for job in &bundle.jobs {
        for t in &job.tables {
            write_file(&out.join(&t.file), &t.to_csv())?;
        }
    }
    write_file(&out.join("manifest.json"), &manifest_json(bundle)?)
}
