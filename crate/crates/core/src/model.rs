//! Coupled-oscillator algebra and the avoided-crossing fit.
//!
//! Mode 1 is the out-of-plane (OOP) mode, mode 2 the in-plane (IP) mode.
//! Damping is ignored here; it only enters the dynamics.

use std::f64::consts::TAU;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{self, SimplexOptions};

/// Largest ωκ²/(ω₁ω₂) for which the minimal-splitting approximation is trusted.
pub const WEAK_COUPLING_LIMIT: f64 = 1e-2;

/// Uncoupled angular frequencies and the coupling scale ωκ = √(κ/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareModes {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
}

impl BareModes {
    pub fn new(omega1: f64, omega2: f64, omega_kappa: f64) -> Self {
        Self {
            omega1,
            omega2,
            omega_kappa,
            mass: None,
        }
    }

    /// Build from a spring coupling constant κ (N/m) and effective mass (kg).
    pub fn from_spring(omega1: f64, omega2: f64, kappa: f64, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || kappa < 0.0 {
            return Err(Error::domain("mass must be positive and kappa non-negative"));
        }
        Ok(Self {
            omega1,
            omega2,
            omega_kappa: (kappa / mass).sqrt(),
            mass: Some(mass),
        })
    }

    /// Spring constant κ = m·ωκ², when the mass is known.
    pub fn kappa(&self) -> Option<f64> {
        self.mass.map(|m| m * self.omega_kappa * self.omega_kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega1 > 0.0 && self.omega2 > 0.0) {
            return Err(Error::domain(format!(
                "mode frequencies must be positive (got {} and {})",
                self.omega1, self.omega2
            )));
        }
        if !(self.omega_kappa >= 0.0) {
            return Err(Error::domain("coupling scale must be non-negative"));
        }
        Ok(())
    }

    pub fn coupling_ratio(&self) -> f64 {
        self.omega_kappa.powi(2) / (self.omega1 * self.omega2)
    }

    pub fn is_weakly_coupled(&self) -> bool {
        self.coupling_ratio() < WEAK_COUPLING_LIMIT
    }
}

/// Exact normal-mode frequencies (ω₊, ω₋) of two linearly coupled oscillators.
pub fn normal_mode_frequencies(bare: &BareModes) -> Result<(f64, f64)> {
    bare.validate()?;
    let w1 = bare.omega1 * bare.omega1;
    let w2 = bare.omega2 * bare.omega2;
    let k = bare.omega_kappa * bare.omega_kappa;
    let sum = w1 + w2 + 2.0 * k;
    let root = ((w1 - w2).powi(2) + 4.0 * k * k).sqrt();
    let plus_sq = 0.5 * (sum + root);
    // ω₋² from the determinant; avoids cancellation in (sum - root)
    let det = w1 * w2 + k * (w1 + w2);
    let minus_sq = det / plus_sq;
    Ok((plus_sq.sqrt(), minus_sq.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimalSplitting {
    /// ωκ²/√(ω₁ω₂), rad/s.
    pub omega0: f64,
    pub coupling_ratio: f64,
    /// False when the weak-coupling assumption behind the approximation fails.
    pub weak_coupling: bool,
}

/// Approximate minimal splitting Ω₀ ≃ ωκ²/√(ω₁ω₂).
///
/// This approximates the exact ω₊ − ω₋ at ω₁ = ω₂. Outside the weak-coupling
/// regime the value is still returned, with `weak_coupling` cleared.
pub fn minimal_splitting(bare: &BareModes) -> Result<MinimalSplitting> {
    bare.validate()?;
    Ok(MinimalSplitting {
        omega0: bare.omega_kappa.powi(2) / (bare.omega1 * bare.omega2).sqrt(),
        coupling_ratio: bare.coupling_ratio(),
        weak_coupling: bare.is_weakly_coupled(),
    })
}

/// Quadratic voltage tuning ω(U) = ω₀ + β(U − U₀)² of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTuning {
    /// rad/s
    pub center: f64,
    /// rad/s/V²
    pub beta: f64,
    /// V
    pub center_voltage: f64,
}

impl ModeTuning {
    pub fn omega(&self, voltage: f64) -> f64 {
        let du = voltage - self.center_voltage;
        self.center + self.beta * du * du
    }
}

/// Voltage-dependent bare modes plus the splitting at their crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningModel {
    /// Stiffening out-of-plane mode (β > 0).
    pub oop: ModeTuning,
    /// Softening in-plane mode (β < 0).
    pub ip: ModeTuning,
    /// Ω₀, rad/s.
    pub splitting: f64,
}

impl TuningModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.oop.beta > 0.0) {
            return Err(Error::domain("OOP tuning coefficient must be positive (stiffening)"));
        }
        if !(self.ip.beta < 0.0) {
            return Err(Error::domain("IP tuning coefficient must be negative (softening)"));
        }
        if !(self.oop.center > 0.0 && self.ip.center > 0.0) {
            return Err(Error::domain("mode center frequencies must be positive"));
        }
        if !(self.splitting >= 0.0) {
            return Err(Error::domain("splitting must be non-negative"));
        }
        Ok(())
    }

    /// Bare (ω_OOP, ω_IP) at a voltage, rad/s.
    pub fn bare(&self, voltage: f64) -> (f64, f64) {
        (self.oop.omega(voltage), self.ip.omega(voltage))
    }

    /// Δ(U) = ω_OOP(U) − ω_IP(U), rad/s.
    pub fn detuning(&self, voltage: f64) -> f64 {
        let (a, b) = self.bare(voltage);
        a - b
    }

    /// Voltages where the bare curves cross, in ascending order.
    pub fn crossing_voltages(&self) -> Vec<f64> {
        // Δ(U) = a U² + b U + c
        let (p, q) = (self.oop, self.ip);
        let a = p.beta - q.beta;
        let b = -2.0 * (p.beta * p.center_voltage - q.beta * q.center_voltage);
        let c = p.center - q.center + p.beta * p.center_voltage.powi(2)
            - q.beta * q.center_voltage.powi(2);
        if a == 0.0 {
            return if b != 0.0 { vec![-c / b] } else { vec![] };
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return vec![];
        }
        let s = disc.sqrt();
        // numerically stable pair
        let t = -0.5 * (b + b.signum() * s);
        let mut roots = if t == 0.0 {
            vec![0.0]
        } else {
            vec![t / a, c / t]
        };
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        roots
    }

    /// Crossing closest to `near`.
    pub fn crossing_near(&self, near: f64) -> Option<f64> {
        self.crossing_voltages()
            .into_iter()
            .min_by(|a, b| (a - near).abs().total_cmp(&(b - near).abs()))
    }

    /// Voltage on the same side of the crossing at `crossing` where Δ equals `target`.
    pub fn voltage_for_detuning(&self, crossing: f64, side: f64, target: f64) -> Result<f64> {
        let mut lo = crossing;
        let mut hi = crossing + side.signum() * 1e-3;
        let mut guard = 0;
        while (self.detuning(hi) - target) * (self.detuning(lo) - target) > 0.0 {
            hi = crossing + (hi - crossing) * 2.0;
            guard += 1;
            if guard > 80 {
                return Err(Error::domain("detuning target not reachable on this side of the crossing"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (self.detuning(mid) - target) * (self.detuning(lo) - target) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Coupled branch frequencies in Hz, upper first.
    pub fn branch_frequencies(&self, voltage: f64) -> (f64, f64) {
        let (w1, w2) = self.bare(voltage);
        let (up, low) = coupled_branches(w1, w2, self.splitting);
        (up / TAU, low / TAU)
    }
}

/// ω± for bare ω₁, ω₂ and splitting Ω₀, using ωκ² = Ω₀√(ω₁ω₂).
fn coupled_branches(w1: f64, w2: f64, omega0: f64) -> (f64, f64) {
    if omega0 == 0.0 {
        return if w1 >= w2 { (w1, w2) } else { (w2, w1) };
    }
    let g = (w1 * w2).abs().sqrt();
    let (a, b) = (w1 * w1, w2 * w2);
    let k = omega0 * g;
    let sum = a + b + 2.0 * k;
    let root = ((a - b).powi(2) + 4.0 * k * k).sqrt();
    let plus_sq = 0.5 * (sum + root);
    let minus_sq = (a * b + k * (a + b)) / plus_sq;
    (plus_sq.sqrt(), minus_sq.sqrt())
}

/// Coupled branch frequencies (Hz) at a voltage; see [`TuningModel::branch_frequencies`].
pub fn branch_frequencies(model: &TuningModel, voltage: f64) -> (f64, f64) {
    model.branch_frequencies(voltage)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Upper,
    Lower,
    Unassigned,
}

impl Branch {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" | "u" | "+" => Some(Branch::Upper),
            "lower" | "l" | "-" => Some(Branch::Lower),
            "" | "unassigned" | "?" => Some(Branch::Unassigned),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
            Branch::Unassigned => "unassigned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyPoint {
    pub voltage: f64,
    pub frequency_hz: f64,
    pub branch: Branch,
}

/// Branch frequencies extracted from a voltage sweep; may contain gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyData {
    pub points: Vec<SpectroscopyPoint>,
}

impl SpectroscopyData {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parse `voltage_V,frequency_Hz,branch` CSV.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(Error::Parse {
                line: 1,
                message: "empty input, expected header `voltage_V,frequency_Hz,branch`".into(),
            });
        }
        let expected = ["voltage_V", "frequency_Hz"];
        if headers.len() < 2 || headers.iter().take(2).ne(expected.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("bad header {:?}, expected `voltage_V,frequency_Hz,branch`", headers),
            });
        }

        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let field = |i: usize, name: &str| -> Result<f64> {
                let raw = rec.get(i).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("missing {name}"),
                })?;
                let v: f64 = raw.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("{name}: cannot parse {raw:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("{name} is not finite"),
                    });
                }
                Ok(v)
            };
            let voltage = field(0, "voltage_V")?;
            let frequency_hz = field(1, "frequency_Hz")?;
            let branch = match rec.get(2) {
                None => Branch::Unassigned,
                Some(s) => Branch::parse(s).ok_or_else(|| Error::Parse {
                    line,
                    message: format!("unknown branch label {s:?}"),
                })?,
            };
            points.push(SpectroscopyPoint {
                voltage,
                frequency_hz,
                branch,
            });
        }
        Ok(Self { points })
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("voltage_V,frequency_Hz,branch\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.voltage, p.frequency_hz, p.branch.as_str()));
        }
        s
    }
}

/// Sample a noisy synthetic sweep from a model.
///
/// Upper-branch points with voltages inside `upper_gap` are dropped.
pub fn synthetic_spectroscopy<R: Rng>(
    model: &TuningModel,
    voltages: &[f64],
    upper_gap: Option<(f64, f64)>,
    noise_hz: f64,
    rng: &mut R,
) -> SpectroscopyData {
    let normal = Normal::new(0.0, noise_hz.max(0.0)).expect("finite noise");
    let mut points = Vec::with_capacity(2 * voltages.len());
    for &u in voltages {
        let (up, low) = model.branch_frequencies(u);
        let in_gap = upper_gap.is_some_and(|(a, b)| u >= a.min(b) && u <= a.max(b));
        if !in_gap {
            points.push(SpectroscopyPoint {
                voltage: u,
                frequency_hz: up + normal.sample(rng),
                branch: Branch::Upper,
            });
        }
        points.push(SpectroscopyPoint {
            voltage: u,
            frequency_hz: low + normal.sample(rng),
            branch: Branch::Lower,
        });
    }
    SpectroscopyData { points }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub name: String,
    pub value: f64,
    /// One standard deviation from the Jacobian at the optimum.
    pub sigma: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub splitting_hz: f64,
    pub splitting_sigma_hz: f64,
    pub crossing_voltage: f64,
    pub rms_residual_hz: f64,
    pub parameters: Vec<ParameterEstimate>,
    pub points_used: usize,
    pub upper_points: usize,
    pub lower_points: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub model: TuningModel,
    pub report: FitReport,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_evals: usize,
    pub restarts: usize,
    /// Grid points per axis for the (crossing voltage, splitting) seed search.
    pub grid: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_evals: 60_000,
            restarts: 8,
            grid: 11,
        }
    }
}

const PARAM_NAMES: [(&str, &str); 6] = [
    ("crossing_frequency", "Hz"),
    ("crossing_voltage", "V"),
    ("oop_beta", "Hz/V^2"),
    ("ip_beta", "Hz/V^2"),
    ("tuning_center_voltage", "V"),
    ("splitting", "Hz"),
];

/// Internal fit coordinates, all in Hz / V:
/// [f_c, U_c, β_oop, β_ip, U₀, Ω₀/2π]. Both modes share the tuning center U₀
/// and meet at frequency f_c at voltage U_c.
fn params_from_model(m: &TuningModel, near: f64) -> [f64; 6] {
    let u0 = 0.5 * (m.oop.center_voltage + m.ip.center_voltage);
    let shared = TuningModel {
        oop: ModeTuning {
            center_voltage: u0,
            ..m.oop
        },
        ip: ModeTuning {
            center_voltage: u0,
            ..m.ip
        },
        ..*m
    };
    let uc = shared.crossing_near(near).unwrap_or(near);
    [
        shared.oop.omega(uc) / TAU,
        uc,
        m.oop.beta / TAU,
        m.ip.beta / TAU,
        u0,
        m.splitting / TAU,
    ]
}

fn model_from_params(p: &[f64]) -> TuningModel {
    let (fc, uc, b1, b2, u0, s) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    let d2 = (uc - u0).powi(2);
    TuningModel {
        oop: ModeTuning {
            center: TAU * (fc - b1 * d2),
            beta: TAU * b1,
            center_voltage: u0,
        },
        ip: ModeTuning {
            center: TAU * (fc - b2 * d2),
            beta: TAU * b2,
            center_voltage: u0,
        },
        splitting: TAU * s.abs(),
    }
}

fn assign(model: &TuningModel, data: &SpectroscopyData) -> Vec<Branch> {
    data.points
        .iter()
        .map(|p| match p.branch {
            Branch::Unassigned => {
                let (up, low) = model.branch_frequencies(p.voltage);
                // ties go to the lower branch
                if (p.frequency_hz - up).abs() < (p.frequency_hz - low).abs() {
                    Branch::Upper
                } else {
                    Branch::Lower
                }
            }
            b => b,
        })
        .collect()
}

fn residuals(model: &TuningModel, data: &SpectroscopyData, branches: &[Branch], out: &mut Vec<f64>) {
    out.clear();
    for (p, b) in data.points.iter().zip(branches) {
        let (up, low) = model.branch_frequencies(p.voltage);
        let f = if *b == Branch::Upper { up } else { low };
        out.push(p.frequency_hz - f);
    }
}

fn check_information(data: &SpectroscopyData, branches: &[Branch], crossing: f64) -> Result<(usize, usize)> {
    let upper = branches.iter().filter(|b| **b == Branch::Upper).count();
    let lower = branches.len() - upper;
    if upper < 2 || lower < 2 {
        return Err(Error::UnderDetermined(format!(
            "need points on both branches (upper: {upper}, lower: {lower})"
        )));
    }
    let below = data.points.iter().filter(|p| p.voltage < crossing).count();
    let above = data.points.len() - below;
    if below == 0 || above == 0 {
        return Err(Error::UnderDetermined(
            "data must span both sides of the crossing".into(),
        ));
    }
    Ok((upper, lower))
}

/// Least-squares fit of the coupled-branch model to spectroscopy data.
///
/// A coarse grid over (crossing voltage, splitting) seeds a simplex search over
/// all six parameters; the simplex is restarted from its best vertex until the
/// cost stops improving. Unlabeled points are re-assigned to the nearest branch
/// of the current model after each pass.
pub fn fit_avoided_crossing(
    data: &SpectroscopyData,
    initial_guess: &TuningModel,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    initial_guess.validate()?;
    let n_params = PARAM_NAMES.len();
    if data.len() < n_params {
        return Err(Error::domain(format!(
            "{} points cannot constrain {} parameters",
            data.len(),
            n_params
        )));
    }
    let center_u = data.points.iter().map(|p| p.voltage).sum::<f64>() / data.len() as f64;
    let p0 = params_from_model(initial_guess, center_u);
    let mut branches = assign(initial_guess, data);
    check_information(data, &branches, p0[1])?;

    let scale = [
        2.0e3,
        0.2,
        0.02 * p0[2].abs().max(1.0),
        0.02 * p0[3].abs().max(1.0),
        0.5,
        0.1 * p0[5].abs().max(100.0),
    ];
    let to_params = |z: &[f64]| -> Vec<f64> { p0.iter().zip(&scale).zip(z).map(|((p, s), z)| p + s * z).collect() };
    let mut buf = Vec::with_capacity(data.len());
    let mut evals_total = 0usize;

    // coarse grid over (U_c, Ω₀) with the remaining parameters at the guess
    let grid = opts.grid.max(1);
    let mut z = vec![0.0; n_params];
    let mut best_cost = f64::INFINITY;
    for i in 0..grid {
        for j in 0..grid {
            let span = |k: usize| if grid == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (grid - 1) as f64 };
            let mut zc = vec![0.0; n_params];
            zc[1] = 5.0 * span(i);
            zc[5] = 5.0 * span(j);
            let m = model_from_params(&to_params(&zc));
            residuals(&m, data, &branches, &mut buf);
            evals_total += 1;
            let c: f64 = buf.iter().map(|r| r * r).sum();
            if c < best_cost {
                best_cost = c;
                z = zc;
            }
        }
    }

    let mut converged = false;
    let mut last = f64::INFINITY;
    for pass in 0..opts.restarts.max(1) {
        let cost = |zz: &[f64], buf: &mut Vec<f64>, br: &[Branch]| -> f64 {
            let m = model_from_params(&to_params(zz));
            if m.oop.beta <= 0.0 || m.ip.beta >= 0.0 {
                return f64::INFINITY;
            }
            residuals(&m, data, br, buf);
            buf.iter().map(|r| r * r).sum()
        };
        let step = 0.5f64.powi(pass as i32).max(1e-3);
        let res = simplex::minimize(
            |zz| cost(zz, &mut buf, &branches),
            &z,
            &SimplexOptions {
                max_evals: opts.max_evals / opts.restarts.max(1),
                f_tol: 1e-12 * (1.0 + last.min(best_cost)),
                x_tol: 1e-9,
                step: vec![step; n_params],
                bounds: None,
            },
        );
        evals_total += res.evals;
        z = res.x;
        let new_branches = assign(&model_from_params(&to_params(&z)), data);
        let reassigned = new_branches != branches;
        branches = new_branches;
        let improved = res.f < last * (1.0 - 1e-10) || last.is_infinite();
        last = res.f.min(last);
        if res.converged && !reassigned && !improved && pass > 0 {
            converged = true;
            break;
        }
        if res.converged && !reassigned && res.f <= 1e-18 {
            converged = true;
            break;
        }
    }

    let params = to_params(&z);
    let model = model_from_params(&params);
    let (upper, lower) = check_information(data, &branches, params[1])?;
    residuals(&model, data, &branches, &mut buf);
    let ssr: f64 = buf.iter().map(|r| r * r).sum();
    let rms = (ssr / data.len() as f64).sqrt();
    let sigmas = parameter_sigmas(&params, &scale, data, &branches, ssr);

    let report = FitReport {
        splitting_hz: params[5].abs(),
        splitting_sigma_hz: sigmas[5],
        crossing_voltage: params[1],
        rms_residual_hz: rms,
        parameters: PARAM_NAMES
            .iter()
            .zip(params.iter().zip(&sigmas))
            .map(|((name, unit), (v, s))| ParameterEstimate {
                name: (*name).into(),
                value: if *name == "splitting" { v.abs() } else { *v },
                sigma: *s,
                unit: (*unit).into(),
            })
            .collect(),
        points_used: data.len(),
        upper_points: upper,
        lower_points: lower,
        evaluations: evals_total,
        converged,
    };
    let outcome = FitOutcome { model, report };
    if !converged {
        return Err(Error::FitNotConverged {
            iterations: evals_total,
            rms_hz: rms,
            best: Box::new(outcome),
        });
    }
    Ok(outcome)
}

/// Standard errors from (JᵀJ)⁻¹ scaled by the residual variance.
fn parameter_sigmas(
    params: &[f64],
    scale: &[f64],
    data: &SpectroscopyData,
    branches: &[Branch],
    ssr: f64,
) -> Vec<f64> {
    let n = data.len();
    let p = params.len();
    let mut jac = DMatrix::<f64>::zeros(n, p);
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for k in 0..p {
        let h = 1e-4 * scale[k];
        let mut pp = params.to_vec();
        pp[k] += h;
        residuals(&model_from_params(&pp), data, branches, &mut plus);
        pp[k] -= 2.0 * h;
        residuals(&model_from_params(&pp), data, branches, &mut minus);
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let dof = n.saturating_sub(p).max(1) as f64;
    let var = ssr / dof;
    let jtj = jac.transpose() * &jac;
    match jtj.try_inverse() {
        Some(inv) => (0..p).map(|k| (var * inv[(k, k)]).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; p],
    }
}

/// Bundled synthetic sweep resembling the measured avoided crossing:
/// splitting 41.3 kHz, crossing near −8 V, upper branch missing near the crossing.
pub fn reference_tuning() -> TuningModel {
    TuningModel {
        oop: ModeTuning {
            center: TAU * 7.256e6,
            beta: TAU * 2000.0,
            center_voltage: 0.0,
        },
        ip: ModeTuning {
            center: TAU * 7.514e6,
            beta: TAU * -2031.25,
            center_voltage: 0.0,
        },
        splitting: TAU * 41.3e3,
    }
}
