//! The five-step Ramsey sequence and return-probability traces.
//!
//! Each shot initializes the in-plane mode far from the crossing, sweeps into
//! the crossing, evolves freely for t_w, sweeps out to the readout point and
//! records a ringdown. The extrapolated amplitude is squared and normalized by
//! the ringdown of a freshly initialized in-plane state from the same repeat.

use std::f64::consts::{PI, TAU};

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, ModeState, Propagator, SystemParams};
use crate::error::{Error, Result};
use crate::model::TuningModel;
use crate::pulse::{self, CorrectionResult, Edge, FilterModel, RampKind, RampSpec};
use crate::seed::{self, TAG_PHASE, TAG_REFERENCE, TAG_TELEGRAPH, TAG_TRACE};
use crate::sensing::{telegraph_states, TelegraphNoise};

/// Largest fraction of grid points allowed to be missing from a trace.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

/// How the voltage pulse is built for a given prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSettings {
    pub kind: RampKind,
    pub u_i: f64,
    pub u_f: f64,
    pub u_r: f64,
    /// Fixed edge duration, s. When absent the edge lasts π/Ω̄ for prior Ω̄.
    #[serde(default)]
    pub edge_duration: Option<f64>,
    /// Fixed (c, d, c̄, d̄). When absent they are optimized for the prior.
    #[serde(default)]
    pub coefficients: Option<[f64; 4]>,
    #[serde(default)]
    pub filter: Option<FilterModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyConfig {
    /// Number of fringes n spanned by the t_w grid at the prior.
    pub fringes: usize,
    pub samples_per_fringe: usize,
    /// Prior splitting estimate Ω̄, rad/s.
    pub prior: f64,
    pub pulse: PulseSettings,
    pub tuning: TuningModel,
    pub system: SystemParams,
    #[serde(default)]
    pub telegraph: Option<TelegraphNoise>,
}

impl RamseyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fringes < 1 {
            return Err(Error::config("fringe count must be at least 1"));
        }
        if self.samples_per_fringe < 2 {
            return Err(Error::config("at least 2 samples per fringe are needed"));
        }
        if !(self.prior > 0.0 && self.prior.is_finite()) {
            return Err(Error::config("prior splitting must be positive"));
        }
        self.system.validate()?;
        self.tuning.validate()?;
        if let Some(f) = &self.pulse.filter {
            f.validate()?;
        }
        if let Some(t) = &self.telegraph {
            t.validate()?;
        }
        if let Some(e) = self.pulse.edge_duration {
            if !(e > 0.0) {
                return Err(Error::config("edge duration must be positive"));
            }
        }
        let plateau = self.tuning.detuning(self.pulse.u_f).abs();
        if plateau > 1e-3 * self.system.omega0 {
            return Err(Error::config(format!(
                "plateau voltage {} V is not at the crossing (detuning {:.1} Hz)",
                self.pulse.u_f,
                plateau / TAU
            )));
        }
        self.nominal_spec().validate()
    }

    pub fn edge_duration(&self) -> f64 {
        self.pulse.edge_duration.unwrap_or(PI / self.prior)
    }

    /// Ramp spec with a zero-length plateau and the configured coefficients.
    pub fn nominal_spec(&self) -> RampSpec {
        let mut s = RampSpec::with_timing(
            self.edge_duration(),
            0.0,
            self.pulse.u_i,
            self.pulse.u_f,
            self.pulse.u_r,
            self.pulse.kind,
        );
        if let Some([c, d, cb, db]) = self.pulse.coefficients {
            (s.c, s.d, s.c_bar, s.d_bar) = (c, d, cb, db);
        }
        s
    }

    /// Spacing of the t_w grid, 2π/(Ω̄·samples per fringe).
    pub fn grid_step(&self) -> f64 {
        TAU / (self.prior * self.samples_per_fringe as f64)
    }

    /// Uniform grid over [0, 2πn/Ω̄] with n·samples + 1 points.
    pub fn grid(&self) -> Vec<f64> {
        let step = self.grid_step();
        (0..=self.fringes * self.samples_per_fringe)
            .map(|k| k as f64 * step)
            .collect()
    }
}

/// Edge propagators and the pulse they were built from.
#[derive(Debug, Clone)]
pub struct SequencePlan {
    pub spec: RampSpec,
    pub lead: Propagator,
    pub trail: Propagator,
    pub corrections: Option<[CorrectionResult; 2]>,
}

/// Correction coefficients optimized against the prior (the design system).
pub fn design_corrections(config: &RampDesign) -> Result<[CorrectionResult; 2]> {
    let spec = config.spec;
    let lead = pulse::optimize_correction(&config.system, &spec, &config.tuning, Edge::Leading)?;
    let trail = pulse::optimize_correction(&config.system, &spec, &config.tuning, Edge::Trailing)?;
    Ok([lead, trail])
}

/// Inputs of the coefficient search.
#[derive(Debug, Clone, Copy)]
pub struct RampDesign {
    pub spec: RampSpec,
    pub tuning: TuningModel,
    pub system: SystemParams,
}

/// Final ramp spec for a configuration, optimizing coefficients when needed.
pub fn resolve_spec(config: &RamseyConfig) -> Result<(RampSpec, Option<[CorrectionResult; 2]>)> {
    let mut spec = config.nominal_spec();
    if spec.kind != RampKind::Corrected || config.pulse.coefficients.is_some() {
        return Ok((spec, None));
    }
    let design = RampDesign {
        spec,
        tuning: config.tuning,
        system: SystemParams {
            omega0: config.prior,
            delta0: config.tuning.detuning(config.pulse.u_i),
            gamma: 0.0,
            ..config.system
        },
    };
    let res = design_corrections(&design)?;
    spec.set_coefficients(Edge::Leading, res[0].c, res[0].d);
    spec.set_coefficients(Edge::Trailing, res[1].c, res[1].d);
    Ok((spec, Some(res)))
}

/// Edge propagators of `spec` for the given (true) system.
pub fn plan_with_spec(
    spec: &RampSpec,
    tuning: &TuningModel,
    system: &SystemParams,
    filter: Option<&FilterModel>,
) -> Result<(Propagator, Propagator)> {
    if spec.kind == RampKind::Ideal {
        let p = Propagator::scaled_identity((-0.5 * system.gamma * spec.edge_duration()).exp());
        return Ok((p, p));
    }
    let lead_w = pulse::edge_waveform(system, spec, tuning, Edge::Leading, filter)?;
    let trail_w = pulse::edge_waveform(system, spec, tuning, Edge::Trailing, filter)?;
    Ok((
        dynamics::propagator(&lead_w, system)?,
        dynamics::propagator(&trail_w, system)?,
    ))
}

pub fn plan(config: &RamseyConfig) -> Result<SequencePlan> {
    let (spec, corrections) = resolve_spec(config)?;
    let (lead, trail) = plan_with_spec(&spec, &config.tuning, &config.system, config.pulse.filter.as_ref())?;
    Ok(SequencePlan {
        spec,
        lead,
        trail,
        corrections,
    })
}

/// Undamped in-plane return probability after the full sequence.
fn coherent_return(plan: &SequencePlan, system: &SystemParams, t_w: f64) -> Result<f64> {
    let after_lead = plan.lead.apply(&ModeState::in_plane());
    let free = dynamics::free_evolution(&after_lead, t_w, system)?;
    let out = free.map(|s| plan.trail.apply(s));
    // the ringdown extrapolation refers the amplitude back to the sequence start
    let total = 2.0 * plan.spec.edge_duration() + t_w;
    Ok(out.population_ip() * (system.gamma * total).exp())
}

/// Shot outcome before normalization: extrapolated amplitude or a lost readout.
fn shot_amplitude(p_ip: f64, system: &SystemParams, t_seq: f64, seed: u64) -> Result<f64> {
    let amp = p_ip.clamp(0.0, 1.0).sqrt();
    let rec = dynamics::simulate_ringdown(amp, system, t_seq, system.ringdown.duration, seed)?;
    Ok(rec.amplitude)
}

fn reference_amplitude(system: &SystemParams, seed: u64, repeat: usize) -> Result<f64> {
    let rec = dynamics::simulate_ringdown(
        1.0,
        system,
        0.0,
        system.ringdown.duration,
        seed::derive(seed, &[TAG_REFERENCE, repeat as u64]),
    )?;
    Ok(rec.amplitude)
}

/// Convert an amplitude pair to a noisy, clipped probability.
fn to_probability(amp: f64, reference: f64, sigma: f64, seed: u64) -> (f64, bool) {
    let mut p = (amp / reference).powi(2);
    if sigma > 0.0 {
        let mut rng = seed::rng(seed, &[TAG_PHASE]);
        p += Normal::new(0.0, sigma).expect("finite sigma").sample(&mut rng);
    }
    let clipped = p.clamp(0.0, 1.0);
    (clipped, clipped != p)
}

/// Return probability at one t_w, averaged over the configured repeats.
pub fn run_sequence(config: &RamseyConfig, t_w: f64, seed: u64) -> Result<f64> {
    config.validate()?;
    if !(t_w >= 0.0) {
        return Err(Error::domain("free-evolution time must be non-negative"));
    }
    let plan = plan(config)?;
    let sys = &config.system;
    let p_ip = coherent_return(&plan, sys, t_w)?;
    let t_seq = 2.0 * plan.spec.edge_duration() + t_w;
    let mut acc = Vec::with_capacity(sys.repeats);
    let mut last_err = None;
    for r in 0..sys.repeats {
        let shot_seed = seed::derive(seed, &[TAG_TRACE, 0, r as u64]);
        let outcome = reference_amplitude(sys, seed, r)
            .and_then(|a_ref| shot_amplitude(p_ip, sys, t_seq, shot_seed).map(|a| (a, a_ref)));
        match outcome {
            Ok((a, a_ref)) => acc.push(to_probability(a, a_ref, sys.sigma_meas, shot_seed).0),
            Err(e) => last_err = Some(e),
        }
    }
    if acc.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Readout("no shots".into())));
    }
    Ok(acc.iter().sum::<f64>() / acc.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetadata {
    pub fringes: usize,
    pub samples_per_fringe: usize,
    pub prior_hz: f64,
    pub true_splitting_hz: f64,
    pub seed: u64,
    pub repeats: usize,
    pub ramp_kind: RampKind,
    pub edge_duration_s: f64,
    /// (c, d, c̄, d̄) actually used.
    pub coefficients: [f64; 4],
    pub edge_infidelity: Option<[f64; 2]>,
    pub soft_edge_infidelity: Option<[f64; 2]>,
    /// Shots whose probability was clipped into [0, 1].
    pub clipped_shots: usize,
    /// Shots lost to ringdown readout errors.
    pub lost_shots: usize,
    /// Grid indices without any valid shot.
    pub missing_points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RamseyTrace {
    pub t_w: Vec<f64>,
    /// Mean over repeats; NaN marks a missing point.
    pub p_return: Vec<f64>,
    pub p_std: Vec<f64>,
    /// Per-repeat traces, `shots[r][i]`; lost shots are filled with the point mean.
    pub shots: Vec<Vec<f64>>,
    pub metadata: TraceMetadata,
}

impl RamseyTrace {
    pub fn dt(&self) -> f64 {
        if self.t_w.len() > 1 {
            self.t_w[1] - self.t_w[0]
        } else {
            0.0
        }
    }

    pub fn len(&self) -> usize {
        self.t_w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_w.is_empty()
    }

    /// Mean trace with missing points linearly interpolated.
    pub fn filled(&self) -> Vec<f64> {
        fill_gaps(&self.p_return)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("t_w_s,p_return,p_std\n");
        for i in 0..self.len() {
            if self.p_return[i].is_nan() {
                s.push_str(&format!("{:e},,\n", self.t_w[i]));
            } else {
                s.push_str(&format!("{:e},{},{}\n", self.t_w[i], self.p_return[i], self.p_std[i]));
            }
        }
        s
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.metadata)?)
    }
}

/// Linear interpolation over NaN entries; edges take the nearest valid value.
pub fn fill_gaps(values: &[f64]) -> Vec<f64> {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    if valid.is_empty() {
        return values.to_vec();
    }
    (0..values.len())
        .map(|i| {
            if !values[i].is_nan() {
                return values[i];
            }
            let after = valid.partition_point(|&v| v < i);
            match (after.checked_sub(1).map(|k| valid[k]), valid.get(after)) {
                (Some(a), Some(&b)) => {
                    let w = (i - a) as f64 / (b - a) as f64;
                    values[a] * (1.0 - w) + values[b] * w
                }
                (Some(a), None) => values[a],
                (None, Some(&b)) => values[b],
                (None, None) => unreachable!(),
            }
        })
        .collect()
}

/// Evaluate the sequence on the full t_w grid with per-point fresh shots.
pub fn acquire_trace(config: &RamseyConfig, seed: u64) -> Result<RamseyTrace> {
    config.validate()?;
    let (spec, corrections) = resolve_spec(config)?;
    acquire_with_spec(config, &spec, corrections, seed)
}

/// As [`acquire_trace`] with a given, already resolved ramp spec.
pub fn acquire_with_spec(
    config: &RamseyConfig,
    spec: &RampSpec,
    corrections: Option<[CorrectionResult; 2]>,
    seed: u64,
) -> Result<RamseyTrace> {
    let sys = config.system;
    let grid = config.grid();
    let n = grid.len();
    let repeats = sys.repeats;

    // one propagator pair per distinct true splitting
    let mut levels = vec![sys.omega0];
    let mut shot_level = vec![0usize; n * repeats];
    if let Some(tn) = &config.telegraph {
        levels.push(sys.omega0 + TAU * tn.amplitude_hz);
        let states = telegraph_states(tn, n * repeats, seed::derive(seed, &[TAG_TELEGRAPH]));
        for (k, s) in states.iter().enumerate() {
            shot_level[k] = usize::from(*s);
        }
    }
    let plans: Vec<(SystemParams, SequencePlan)> = levels
        .iter()
        .map(|&w| {
            let s = SystemParams { omega0: w, ..sys };
            let (lead, trail) = plan_with_spec(spec, &config.tuning, &s, config.pulse.filter.as_ref())?;
            Ok((
                s,
                SequencePlan {
                    spec: *spec,
                    lead,
                    trail,
                    corrections,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let references: Vec<Result<f64>> = (0..repeats).map(|r| reference_amplitude(&sys, seed, r)).collect();

    // coherent return per (level, point)
    let coherent: Vec<Vec<f64>> = plans
        .iter()
        .map(|(s, p)| grid.iter().map(|&t| coherent_return(p, s, t)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    // shots[i][r]: Some((p, clipped)) or None if the readout was lost
    let per_point: Vec<Vec<Option<(f64, bool)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t_seq = 2.0 * spec.edge_duration() + grid[i];
            (0..repeats)
                .map(|r| {
                    let level = shot_level[r * n + i];
                    let shot_seed = seed::derive(seed, &[TAG_TRACE, i as u64, r as u64]);
                    let a_ref = references[r].as_ref().ok()?;
                    let a = shot_amplitude(coherent[level][i], &plans[level].0, t_seq, shot_seed).ok()?;
                    Some(to_probability(a, *a_ref, sys.sigma_meas, shot_seed))
                })
                .collect()
        })
        .collect();

    let mut p_return = Vec::with_capacity(n);
    let mut p_std = Vec::with_capacity(n);
    let mut missing = Vec::new();
    let (mut clipped, mut lost) = (0, 0);
    for (i, shots) in per_point.iter().enumerate() {
        let vals: Vec<f64> = shots.iter().flatten().map(|s| s.0).collect();
        clipped += shots.iter().flatten().filter(|s| s.1).count();
        lost += shots.len() - vals.len();
        if vals.is_empty() {
            missing.push(i);
            p_return.push(f64::NAN);
            p_std.push(f64::NAN);
            continue;
        }
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
        } else {
            0.0
        };
        p_return.push(m);
        p_std.push(var.sqrt());
    }
    if missing.len() as f64 > MAX_MISSING_FRACTION * n as f64 {
        return Err(Error::Trace(format!(
            "{} of {} points lost to readout errors",
            missing.len(),
            n
        )));
    }
    let filled_mean = fill_gaps(&p_return);
    let shots: Vec<Vec<f64>> = (0..repeats)
        .map(|r| {
            (0..n)
                .map(|i| per_point[i][r].map_or(filled_mean[i], |s| s.0))
                .collect()
        })
        .collect();

    let metadata = TraceMetadata {
        fringes: config.fringes,
        samples_per_fringe: config.samples_per_fringe,
        prior_hz: config.prior / TAU,
        true_splitting_hz: sys.omega0 / TAU,
        seed,
        repeats,
        ramp_kind: spec.kind,
        edge_duration_s: spec.edge_duration(),
        coefficients: [spec.c, spec.d, spec.c_bar, spec.d_bar],
        edge_infidelity: corrections.map(|c| [c[0].infidelity, c[1].infidelity]),
        soft_edge_infidelity: corrections.map(|c| [c[0].soft_infidelity, c[1].soft_infidelity]),
        clipped_shots: clipped,
        lost_shots: lost,
        missing_points: missing,
    };
    Ok(RamseyTrace {
        t_w: grid,
        p_return,
        p_std,
        shots,
        metadata,
    })
}

/// Fringe contrast (P_max − P_min)/(P_max + P_min) from the mean of the top
/// and bottom 5% of points.
pub fn visibility(trace: &RamseyTrace) -> Result<f64> {
    let span = trace.t_w.last().copied().unwrap_or(0.0) - trace.t_w.first().copied().unwrap_or(0.0);
    let prior = TAU * trace.metadata.prior_hz;
    if prior > 0.0 && span * prior < TAU * (1.0 - 1e-9) {
        return Err(Error::Precondition("visibility needs at least one full fringe".into()));
    }
    visibility_of(&trace.p_return, &trace.p_std)
}

/// [`visibility`] on raw values and per-point standard deviations.
pub fn visibility_of(values: &[f64], stds: &[f64]) -> Result<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.len() < 2 {
        return Err(Error::UndefinedVisibility("fewer than two points".into()));
    }
    v.sort_by(f64::total_cmp);
    let k = ((0.05 * v.len() as f64).ceil() as usize).max(1);
    let low = v[..k].iter().sum::<f64>() / k as f64;
    let high = v[v.len() - k..].iter().sum::<f64>() / k as f64;
    let valid_std: Vec<f64> = stds.iter().copied().filter(|x| !x.is_nan()).collect();
    let mean_std = if valid_std.is_empty() {
        0.0
    } else {
        valid_std.iter().sum::<f64>() / valid_std.len() as f64
    };
    let range = v[v.len() - 1] - v[0];
    if range <= 3.0 * mean_std || high + low <= 0.0 {
        return Err(Error::UndefinedVisibility(format!(
            "range {range:.3e} does not exceed three times the mean std {mean_std:.3e}"
        )));
    }
    Ok((high - low) / (high + low))
}
