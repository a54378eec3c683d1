//! Scenario files and run manifests.
//!
//! A scenario is a TOML document. Frequencies are given in Hz and converted
//! to angular units when the runtime configurations are built. Every file a
//! run emits goes through [`OutputWriter`], which records its SHA-256 so the
//! manifest can be checked against the directory later.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{RingdownSettings, SystemParams};
use crate::error::{Error, Result};
use crate::estimator::{IasSettings, ProcessingOptions};
use crate::model::{ModeTuning, TuningModel};
use crate::pulse::{FilterModel, RampKind};
use crate::ramsey::{PulseSettings, RamseyConfig};
use crate::sensing::{ChargeModel, PerturbationScenario, TelegraphNoise};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub system: SystemSection,
    #[serde(default)]
    pub tuning: TuningSection,
    pub ramp: RampSection,
    pub ramsey: RamseySection,
    #[serde(default)]
    pub processing: ProcessingOptions,
    #[serde(default)]
    pub ias: IasSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub charge: ChargeModel,
    #[serde(default)]
    pub perturbation: Option<PerturbationSection>,
    #[serde(default)]
    pub telegraph: Option<TelegraphNoise>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// True splitting Ω₀/2π.
    pub splitting_hz: f64,
    /// Mechanical quality factor; sets γ = ω/Q at the crossing.
    #[serde(default)]
    pub quality_factor: Option<f64>,
    /// Energy decay rate γ in 1/s, as an alternative to `quality_factor`.
    #[serde(default)]
    pub damping_rate: Option<f64>,
    /// Absent means no dephasing.
    #[serde(default)]
    pub dephasing_time_s: Option<f64>,
    #[serde(default)]
    pub readout_sigma: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub ringdown: RingdownSection,
}

fn default_repeats() -> usize {
    30
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RingdownSection {
    pub duration_s: f64,
    pub samples: usize,
    pub noise: f64,
    pub floor_sigmas: f64,
}

impl Default for RingdownSection {
    fn default() -> Self {
        let r = RingdownSettings::default();
        Self {
            duration_s: r.duration,
            samples: r.samples,
            noise: r.noise,
            floor_sigmas: r.floor_sigmas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub center_hz: f64,
    /// Curvature of the tuning law, Hz/V².
    pub beta_hz_per_v2: f64,
    #[serde(default)]
    pub center_voltage: f64,
}

impl ModeSection {
    fn to_tuning(self) -> ModeTuning {
        ModeTuning {
            center: TAU * self.center_hz,
            beta: TAU * self.beta_hz_per_v2,
            center_voltage: self.center_voltage,
        }
    }

    fn from_tuning(m: &ModeTuning) -> Self {
        Self {
            center_hz: m.center / TAU,
            beta_hz_per_v2: m.beta / TAU,
            center_voltage: m.center_voltage,
        }
    }
}

/// Voltage tuning used to build pulses; defaults to the reference device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub oop: ModeSection,
    pub ip: ModeSection,
    /// Splitting assumed by the tuning law, Hz.
    pub splitting_hz: f64,
}

impl Default for TuningSection {
    fn default() -> Self {
        Self::from_model(&crate::model::reference_tuning())
    }
}

impl TuningSection {
    pub fn from_model(m: &TuningModel) -> Self {
        Self {
            oop: ModeSection::from_tuning(&m.oop),
            ip: ModeSection::from_tuning(&m.ip),
            splitting_hz: m.splitting / TAU,
        }
    }

    pub fn to_model(&self) -> TuningModel {
        TuningModel {
            oop: self.oop.to_tuning(),
            ip: self.ip.to_tuning(),
            splitting: TAU * self.splitting_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    #[serde(default)]
    pub kind: RampKind,
    pub u_i: f64,
    /// Plateau voltage; defaults to the crossing nearest `u_i`.
    #[serde(default)]
    pub u_f: Option<f64>,
    pub u_r: f64,
    #[serde(default)]
    pub edge_duration_s: Option<f64>,
    /// Fixed [c, d, c̄, d̄]; optimized per prior when absent.
    #[serde(default)]
    pub coefficients: Option<[f64; 4]>,
    #[serde(default)]
    pub filter: Option<FilterModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseySection {
    pub prior_hz: f64,
    #[serde(default = "default_spf")]
    pub samples_per_fringe: usize,
    /// Fringes for single traces such as `show-pulse`.
    #[serde(default = "default_fringes")]
    pub fringes: usize,
}

fn default_spf() -> usize {
    10
}

fn default_fringes() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IasSection {
    pub max_iter: usize,
    pub fringes: usize,
    pub bootstrap_fringes: usize,
    pub threshold_hz: Option<f64>,
    pub stop_on_convergence: bool,
}

impl Default for IasSection {
    fn default() -> Self {
        let s = IasSettings::default();
        Self {
            max_iter: s.max_iter,
            fringes: s.fringes,
            bootstrap_fringes: s.bootstrap_fringes,
            threshold_hz: s.threshold_hz,
            stop_on_convergence: s.stop_on_convergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub fringes: Vec<usize>,
    #[serde(default = "default_sweep_iterations")]
    pub iterations: usize,
}

fn default_sweep_iterations() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    #[serde(default)]
    pub label: String,
    pub baseline_splitting_hz: f64,
    pub perturbed_splitting_hz: f64,
    /// IAS iterations of the perturbed phase; the `[ias]` value when absent.
    #[serde(default)]
    pub perturbed_max_iter: Option<usize>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl Scenario {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Parse {
            line: e.span().map_or(1, |r| line_of(src, r.start)),
            message: e.message().to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize scenario: {e}")))
    }

    pub fn tuning_model(&self) -> TuningModel {
        self.tuning.to_model()
    }

    fn plateau_voltage(&self, tuning: &TuningModel) -> Result<f64> {
        match self.ramp.u_f {
            Some(u) => Ok(u),
            None => tuning
                .crossing_near(self.ramp.u_i)
                .ok_or_else(|| Error::config("tuning model has no crossing for the plateau")),
        }
    }

    pub fn system_params(&self, splitting_hz: f64) -> Result<SystemParams> {
        let s = &self.system;
        let tuning = self.tuning_model();
        let mut p = SystemParams::new(TAU * splitting_hz, tuning.detuning(self.ramp.u_i));
        p.gamma = match (s.quality_factor, s.damping_rate) {
            (Some(_), Some(_)) => {
                return Err(Error::config("give either quality_factor or damping_rate, not both"))
            }
            (Some(q), None) => {
                if !(q > 0.0) {
                    return Err(Error::config("quality factor must be positive"));
                }
                let (a, b) = tuning.bare(self.plateau_voltage(&tuning)?);
                (a * b).sqrt() / q
            }
            (None, Some(g)) => g,
            (None, None) => 0.0,
        };
        p.t_d = s.dephasing_time_s.unwrap_or(f64::INFINITY);
        p.sigma_meas = s.readout_sigma;
        p.repeats = s.repeats;
        p.ringdown = RingdownSettings {
            duration: s.ringdown.duration_s,
            samples: s.ringdown.samples,
            noise: s.ringdown.noise,
            floor_sigmas: s.ringdown.floor_sigmas,
        };
        Ok(p)
    }

    /// Ramsey template for a system whose true splitting is `splitting_hz`.
    pub fn ramsey_config_for(&self, splitting_hz: f64) -> Result<RamseyConfig> {
        let tuning = self.tuning_model();
        tuning.validate()?;
        let u_f = self.plateau_voltage(&tuning)?;
        Ok(RamseyConfig {
            fringes: self.ramsey.fringes,
            samples_per_fringe: self.ramsey.samples_per_fringe,
            prior: TAU * self.ramsey.prior_hz,
            pulse: PulseSettings {
                kind: self.ramp.kind,
                u_i: self.ramp.u_i,
                u_f,
                u_r: self.ramp.u_r,
                edge_duration: self.ramp.edge_duration_s,
                coefficients: self.ramp.coefficients,
                filter: self.ramp.filter,
            },
            tuning,
            system: self.system_params(splitting_hz)?,
            telegraph: self.telegraph,
        })
    }

    pub fn ramsey_config(&self) -> Result<RamseyConfig> {
        self.ramsey_config_for(self.system.splitting_hz)
    }

    pub fn ias_settings(&self) -> IasSettings {
        IasSettings {
            max_iter: self.ias.max_iter,
            fringes: self.ias.fringes,
            bootstrap_fringes: self.ias.bootstrap_fringes,
            processing: self.processing,
            threshold_hz: self.ias.threshold_hz,
            stop_on_convergence: self.ias.stop_on_convergence,
        }
    }

    pub fn perturbation_scenario(&self) -> Option<PerturbationScenario> {
        self.perturbation.as_ref().map(|p| {
            let baseline = self.ias_settings();
            PerturbationScenario {
                label: p.label.clone(),
                baseline_omega0: TAU * p.baseline_splitting_hz,
                perturbed_omega0: TAU * p.perturbed_splitting_hz,
                prior: TAU * self.ramsey.prior_hz,
                baseline,
                perturbed: IasSettings {
                    max_iter: p.perturbed_max_iter.unwrap_or(baseline.max_iter),
                    ..baseline
                },
            }
        })
    }

    /// Checks every section before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.ramsey_config()?.validate()?;
        self.ias_settings().validate()?;
        self.charge.validate()?;
        if let Some(s) = &self.sweep {
            validate_fringe_list(&s.fringes)?;
            if s.iterations == 0 {
                return Err(Error::config("sweep needs at least one iteration"));
            }
        }
        if let Some(p) = &self.perturbation_scenario() {
            p.validate()?;
            let hz = |w: f64| w / TAU;
            self.ramsey_config_for(hz(p.baseline_omega0))?.validate()?;
            self.ramsey_config_for(hz(p.perturbed_omega0))?.validate()?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    /// Content hash; the output directory is not part of it.
    pub fn hash(&self) -> Result<String> {
        let mut s = self.clone();
        s.out_dir = None;
        Ok(sha256_hex(serde_json::to_string(&s)?.as_bytes()))
    }
}

pub fn validate_fringe_list(n: &[usize]) -> Result<()> {
    if n.is_empty() {
        return Err(Error::config("fringe list is empty"));
    }
    if let Some(bad) = n.iter().find(|&&k| !(2..=64).contains(&k)) {
        return Err(Error::config(format!("fringe count {bad} outside [2, 64]")));
    }
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub exit_code: i32,
    pub error: Option<String>,
    pub files: Vec<ManifestEntry>,
    /// Only these two fields vary between identical runs.
    pub started_unix_s: f64,
    pub elapsed_s: f64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
    }

    /// Listed files whose size or checksum no longer match.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(b) => b.len() as u64 != f.bytes || sha256_hex(&b) != f.sha256,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

/// Writes run outputs and keeps the manifest entries in emission order.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
    started: Instant,
    started_unix_s: f64,
}

impl OutputWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0.0, |d| d.as_secs_f64()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[ManifestEntry] {
        &self.files
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let bytes = contents.as_ref();
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(ManifestEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s)
    }

    /// Writes the manifest and returns it.
    pub fn finish(
        self,
        command: &str,
        scenario_name: &str,
        scenario_hash: &str,
        seed: u64,
        outcome: Option<(i32, String)>,
    ) -> Result<RunManifest> {
        let (exit_code, error) = match outcome {
            Some((code, msg)) => (code, Some(msg)),
            None => (0, None),
        };
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            scenario_name: scenario_name.to_string(),
            scenario_hash: scenario_hash.to_string(),
            seed,
            exit_code,
            error,
            files: self.files,
            started_unix_s: self.started_unix_s,
            elapsed_s: self.started.elapsed().as_secs_f64(),
        };
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), s)?;
        Ok(manifest)
    }
}
