//! One scenario per value of a single parameter.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use spopo::homodyne::Provenance;

use crate::config::{Phases, Scenario, ScenarioConfig};
use crate::run::{run_scenario, write_bundle, Bundle};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Multiplies every dispersion scale.
    Dispersion,
    /// Multiplies every pump level.
    Lambda,
    NMax,
    OmegaMax,
    /// Fixes the LO phase.
    Phi,
}

impl SweepParam {
    pub const NAMES: &'static [&'static str] = &["D", "lambda", "n_max", "omega_max", "phi"];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Dispersion => "D",
            SweepParam::Lambda => "lambda",
            SweepParam::NMax => "n_max",
            SweepParam::OmegaMax => "omega_max",
            SweepParam::Phi => "phi",
        }
    }

    /// Copy of `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, CliError> {
        let mut c = cfg.clone();
        match self {
            SweepParam::Dispersion => c.dispersion.scales.iter_mut().for_each(|s| *s *= value),
            SweepParam::Lambda => c.pump.levels.iter_mut().for_each(|l| *l *= value),
            SweepParam::NMax => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(CliError::Validation(format!(
                        "n_max: sweep values must be positive integers (got {value})"
                    )));
                }
                c.modes.n_max = value as usize;
            }
            SweepParam::OmegaMax => c.detection.omega_max = value,
            SweepParam::Phi => c.detection.phases = Phases::List(vec![value]),
        }
        Ok(c)
    }

    /// Whether tables for different values share rows, so they can be
    /// compared entry by entry.
    fn comparable(self) -> bool {
        self != SweepParam::OmegaMax
    }
}

impl FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "D" | "d" => Ok(SweepParam::Dispersion),
            "lambda" => Ok(SweepParam::Lambda),
            "n_max" => Ok(SweepParam::NMax),
            "omega_max" => Ok(SweepParam::OmegaMax),
            "phi" => Ok(SweepParam::Phi),
            other => Err(CliError::Validation(format!(
                "unknown sweep parameter '{other}' (expected one of {})",
                SweepParam::NAMES.join(", ")
            ))),
        }
    }
}

pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let values: Vec<f64> = list
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Validation(format!("--values: '{}' is not a number", v.trim())))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Validation("--values: empty list".into()));
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub struct SweepBundle {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub bundles: Vec<Bundle>,
}

impl SweepBundle {
    pub fn warnings(&self) -> Vec<String> {
        self.values
            .iter()
            .zip(&self.bundles)
            .flat_map(|(v, b)| {
                let p = self.param.name();
                b.warnings().into_iter().map(move |w| format!("{p}={v}: {w}"))
            })
            .collect()
    }

    fn subdir(&self, i: usize) -> String {
        format!("{}_{i}", self.param.name())
    }

    /// Long-format table of every value's results.
    pub fn combined_csv(&self) -> String {
        let header = self.bundles[0].jobs[0].tables[0].header;
        let mut s = format!("param,value,job,{header}\n");
        for (v, b) in self.values.iter().zip(&self.bundles) {
            for j in &b.jobs {
                for row in &j.tables[0].rows {
                    s.push_str(&format!("{},{v},{},{row}\n", self.param.name(), j.id));
                }
            }
        }
        s
    }

    /// Largest change of each job's key column relative to the last value.
    pub fn convergence_csv(&self) -> Option<String> {
        if !self.param.comparable() {
            return None;
        }
        let last = self.bundles.last()?;
        let mut s = String::from("param,value,job,max_abs_change\n");
        for (v, b) in self.values.iter().zip(&self.bundles) {
            for (j, r) in b.jobs.iter().zip(&last.jobs) {
                let (a, z) = (&j.tables[0].key, &r.tables[0].key);
                if a.len() != z.len() {
                    continue;
                }
                let d = a.iter().zip(z).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                s.push_str(&format!("{},{v},{},{d}\n", self.param.name(), j.id));
            }
        }
        Some(s)
    }
}

/// Resolves and runs the scenario for every value before anything is
/// written, so a bad value fails the whole sweep.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    base: &Path,
    orders: Option<Vec<Provenance>>,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepBundle, CliError> {
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&v| {
            Scenario::resolve(param.apply(cfg, v)?, base, orders.clone()).map_err(|e| match e {
                CliError::Validation(m) => {
                    CliError::Validation(format!("{}={v}: {m}", param.name()))
                }
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;
    let bundles = scenarios
        .iter()
        .map(run_scenario)
        .collect::<Result<_, _>>()?;
    Ok(SweepBundle {
        param,
        values: values.to_vec(),
        bundles,
    })
}

pub fn write_sweep(sweep: &SweepBundle, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut written = Vec::new();
    for (i, b) in sweep.bundles.iter().enumerate() {
        let dir = out.join(sweep.subdir(i));
        write_bundle(b, &dir)?;
        written.push(dir);
    }
    let name = sweep.param.name();
    let path = out.join(format!("sweep_{name}.csv"));
    fs::write(&path, sweep.combined_csv()).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    if let Some(text) = sweep.convergence_csv() {
        let path = out.join(format!("sweep_{name}_convergence.csv"));
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    #[test]
    fn parameter_names() {
        for n in SweepParam::NAMES {
            assert_eq!(n.parse::<SweepParam>().unwrap().name(), *n);
        }
        assert!("gamma".parse::<SweepParam>().is_err());
    }

    #[test]
    fn values_list() {
        assert_eq!(parse_values("0, 0.5,1,2").unwrap(), vec![0.0, 0.5, 1.0, 2.0]);
        assert!(parse_values("1,x").is_err());
    }

    #[test]
    fn n_max_sweep_converges() {
        let (mut cfg, base) = load_config("fig4-left").unwrap();
        cfg.pump.levels = vec![0.48];
        cfg.dispersion.scales = vec![1.0];
        cfg.detection.points = 5;
        let s = run_sweep(&cfg, &base, None, SweepParam::NMax, &[4.0, 8.0, 12.0]).unwrap();
        let conv = s.convergence_csv().unwrap();
        let changes: Vec<f64> = conv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(changes.len(), 3);
        assert!(changes[0] > changes[1]);
        assert_eq!(changes[2], 0.0);
    }

    #[test]
    fn lambda_sweep_past_threshold_is_refused() {
        let (cfg, base) = load_config("fig6").unwrap();
        let err = run_sweep(&cfg, &base, None, SweepParam::Lambda, &[1.0, 2.5]).unwrap_err();
        assert!(err.to_string().starts_with("lambda=2.5"), "{err}");
    }

    #[test]
    fn phi_sweep_traces_a_cosine() {
        let (mut cfg, base) = load_config("fig4-left").unwrap();
        cfg.pump.levels = vec![0.33];
        cfg.detection.points = 3;
        cfg.detection.modes = vec![0];
        cfg.modes.n_max = 6;
        let phis: Vec<f64> = (0..16).map(|k| k as f64 * std::f64::consts::PI / 16.0).collect();
        let s = run_sweep(&cfg, &base, None, SweepParam::Phi, &phis).unwrap();
        // S(φ) = a + b cos 2φ + c sin 2φ at the centre frequency of the D=1 job
        let y: Vec<f64> = s.bundles.iter().map(|b| b.jobs[1].tables[0].key[1]).collect();
        let fit = |k: usize| y[k];
        let (a, b, c) = (
            (fit(0) + fit(8)) / 2.0,
            (fit(0) - fit(8)) / 2.0,
            (fit(4) - fit(12)) / 2.0,
        );
        for (k, &phi) in phis.iter().enumerate() {
            let model = a + b * (2.0 * phi).cos() + c * (2.0 * phi).sin();
            assert!((model - y[k]).abs() < 1e-10);
        }
    }
}
