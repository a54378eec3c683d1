//! Voltage pulse of the Ramsey sequence: ramp shapes, sampled waveforms, the
//! hardware low-pass filter and the numerical search for correction coefficients.
//!
//! The assembled voltage is
//!
//! ```text
//! U(t) = U_i                      t ≤ t0
//!        U_i + ΔU · g_lead(t)     t0 < t < ts
//!        U_f                      ts ≤ t ≤ tf
//!        U_f − ΔŪ · g_trail(t)    tf < t < tr
//!        U_r                      t ≥ tr
//! ```
//!
//! with ΔU = U_f − U_i and ΔŪ = U_f − U_r. The trailing edge is evaluated in
//! its own local time s = (t − tf)/(tr − tf), so g_trail(tf) = 0 and g_trail(tr) = 1.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, ModeState, SystemParams};
use crate::error::{Error, Result};
use crate::model::TuningModel;
use crate::simplex::{self, SimplexOptions};

/// Bound on |c| and |d| used by the correction search.
pub const COEFFICIENT_BOUND: f64 = 1.0;

/// Infidelity above which the optimizer result carries a warning.
pub const STAGNATION_INFIDELITY: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RampKind {
    /// Instantaneous edges: the state is carried through unchanged. Edge
    /// durations still count towards the sequence timing.
    Ideal,
    Soft,
    #[default]
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Leading,
    Trailing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub t0: f64,
    pub ts: f64,
    pub tf: f64,
    pub tr: f64,
    pub u_i: f64,
    pub u_f: f64,
    pub u_r: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub c_bar: f64,
    #[serde(default)]
    pub d_bar: f64,
    #[serde(default)]
    pub kind: RampKind,
}

impl RampSpec {
    /// Symmetric edges of length `edge`, a plateau of length `t_w`, starting at 0.
    pub fn with_timing(edge: f64, t_w: f64, u_i: f64, u_f: f64, u_r: f64, kind: RampKind) -> Self {
        Self {
            t0: 0.0,
            ts: edge,
            tf: edge + t_w,
            tr: 2.0 * edge + t_w,
            u_i,
            u_f,
            u_r,
            c: 0.0,
            d: 0.0,
            c_bar: 0.0,
            d_bar: 0.0,
            kind,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.t0, self.ts, self.tf, self.tr, self.u_i, self.u_f, self.u_r]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::config("ramp times and voltages must be finite"));
        }
        if !(self.t0 < self.ts && self.ts <= self.tf && self.tf < self.tr) {
            return Err(Error::config(format!(
                "ramp times must satisfy t0 < ts <= tf < tr (got {}, {}, {}, {})",
                self.t0, self.ts, self.tf, self.tr
            )));
        }
        let (lead, trail) = (self.ts - self.t0, self.tr - self.tf);
        if (lead - trail).abs() > 1e-9 * lead.max(trail) {
            return Err(Error::config(format!(
                "leading and trailing edges must last equally long ({lead} vs {trail})"
            )));
        }
        if self.delta_u() == 0.0 || self.delta_u_bar() == 0.0 {
            return Err(Error::config("voltage steps U_f - U_i and U_f - U_r must be nonzero"));
        }
        for (name, v) in [("c", self.c), ("d", self.d), ("c_bar", self.c_bar), ("d_bar", self.d_bar)] {
            if !(v.abs() <= COEFFICIENT_BOUND) {
                return Err(Error::config(format!("correction coefficient {name} = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    pub fn edge_duration(&self) -> f64 {
        self.ts - self.t0
    }

    pub fn delta_u(&self) -> f64 {
        self.u_f - self.u_i
    }

    pub fn delta_u_bar(&self) -> f64 {
        self.u_f - self.u_r
    }

    pub fn coefficients(&self, edge: Edge) -> (f64, f64) {
        match edge {
            Edge::Leading => (self.c, self.d),
            Edge::Trailing => (self.c_bar, self.d_bar),
        }
    }

    pub fn set_coefficients(&mut self, edge: Edge, c: f64, d: f64) {
        match edge {
            Edge::Leading => (self.c, self.d) = (c, d),
            Edge::Trailing => (self.c_bar, self.d_bar) = (c, d),
        }
    }

    pub fn edge_window(&self, edge: Edge) -> (f64, f64) {
        match edge {
            Edge::Leading => (self.t0, self.ts),
            Edge::Trailing => (self.tf, self.tr),
        }
    }

    /// Edge shape in local time s ∈ [0, 1] for this spec's ramp kind.
    fn shape(&self, edge: Edge, s: f64) -> f64 {
        match self.kind {
            RampKind::Ideal => {
                if s <= 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            RampKind::Soft => soft_shape(s),
            RampKind::Corrected => {
                let (c, d) = self.coefficients(edge);
                soft_shape(s) + correction_shape(c, d, s)
            }
        }
    }

    /// U(t) of the assembled sequence; continuous at every edge boundary.
    pub fn voltage(&self, t: f64) -> f64 {
        if t <= self.t0 {
            self.u_i
        } else if t < self.ts {
            self.u_i + self.delta_u() * self.shape(Edge::Leading, (t - self.t0) / self.edge_duration())
        } else if t <= self.tf {
            self.u_f
        } else if t < self.tr {
            self.u_f - self.delta_u_bar() * self.shape(Edge::Trailing, (t - self.tf) / (self.tr - self.tf))
        } else {
            self.u_r
        }
    }
}

fn soft_shape(s: f64) -> f64 {
    0.5 * (1.0 - (PI * s).cos())
}

fn correction_shape(c: f64, d: f64, s: f64) -> f64 {
    c * (1.0 - (2.0 * PI * s).cos()) + d * (2.0 * PI * s).sin()
}

fn local_time(lo: f64, hi: f64, t: f64) -> Result<f64> {
    if !(t >= lo && t <= hi) {
        return Err(Error::domain(format!("t = {t} outside edge window [{lo}, {hi}]")));
    }
    Ok((t - lo) / (hi - lo))
}

/// Half-cosine leading edge ½[1 − cos(π (t−t0)/(ts−t0))].
pub fn soft_ramp(spec: &RampSpec, t: f64) -> Result<f64> {
    Ok(soft_shape(local_time(spec.t0, spec.ts, t)?))
}

/// Soft leading edge plus the first-harmonic correction with coefficients (c, d).
pub fn corrected_ramp(spec: &RampSpec, t: f64) -> Result<f64> {
    let s = local_time(spec.t0, spec.ts, t)?;
    Ok(soft_shape(s) + correction_shape(spec.c, spec.d, s))
}

/// Trailing-edge shape with its own coefficients (c̄, d̄); 0 at tf, 1 at tr.
pub fn trailing_edge(spec: &RampSpec, t: f64) -> Result<f64> {
    let s = local_time(spec.tf, spec.tr, t)?;
    Ok(soft_shape(s) + correction_shape(spec.c_bar, spec.d_bar, s))
}

/// Uniformly sampled voltage and detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseWaveform {
    pub t_start: f64,
    pub dt: f64,
    pub voltage: Vec<f64>,
    /// Δ(t) in rad/s.
    pub detuning: Vec<f64>,
    /// DC part of the voltage; the hardware filter acts on the remainder only.
    pub dc_offset: f64,
    /// Voltage-to-detuning law, used to recompute Δ after filtering.
    pub tuning: Option<TuningModel>,
}

impl PulseWaveform {
    /// Sample the spec on [t_start, t_end] with `intervals` equal steps.
    ///
    /// Fails when the spacing is too coarse for the correction harmonic
    /// (fewer than 50 samples per harmonic period).
    pub fn sample(spec: &RampSpec, tuning: &TuningModel, t_start: f64, t_end: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 || !(t_end > t_start) {
            return Err(Error::config("waveform needs a positive duration and at least one interval"));
        }
        let dt = (t_end - t_start) / intervals as f64;
        if dt > spec.edge_duration() / 50.0 {
            return Err(Error::config(format!(
                "sample period {dt:e} s too coarse for a {:e} s edge",
                spec.edge_duration()
            )));
        }
        let voltage: Vec<f64> = (0..=intervals)
            .map(|k| {
                // pin the last sample to the window end exactly
                let t = if k == intervals { t_end } else { t_start + k as f64 * dt };
                spec.voltage(t)
            })
            .collect();
        let detuning = voltage.iter().map(|&u| tuning.detuning(u)).collect();
        Ok(Self {
            t_start,
            dt,
            voltage,
            detuning,
            dc_offset: spec.u_i,
            tuning: Some(*tuning),
        })
    }

    /// A detuning-only waveform (no voltage law attached).
    pub fn from_detuning(t_start: f64, dt: f64, detuning: Vec<f64>) -> Self {
        Self {
            t_start,
            dt,
            voltage: vec![0.0; detuning.len()],
            detuning,
            dc_offset: 0.0,
            tuning: None,
        }
    }

    pub fn from_fn(t_start: f64, dt: f64, samples: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_detuning(t_start, dt, (0..samples).map(|k| f(t_start + k as f64 * dt)).collect())
    }

    pub fn len(&self) -> usize {
        self.detuning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len().saturating_sub(1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Time-reversed copy (same grid, samples in reverse order).
    pub fn reversed(&self) -> Self {
        let mut w = self.clone();
        w.voltage.reverse();
        w.detuning.reverse();
        w
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("time_s,voltage_V,detuning_rad_s\n");
        for k in 0..self.len() {
            s.push_str(&format!("{:e},{},{}\n", self.time(k), self.voltage[k], self.detuning[k]));
        }
        s
    }
}

/// First-order low-pass model of the voltage combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    pub passband_gain_db: f64,
    pub corner_hz: f64,
}

impl Default for FilterModel {
    fn default() -> Self {
        Self {
            passband_gain_db: -0.4,
            corner_hz: 100e3,
        }
    }
}

impl FilterModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.corner_hz > 0.0) || !self.passband_gain_db.is_finite() {
            return Err(Error::config("filter corner must be positive and gain finite"));
        }
        Ok(())
    }

    pub fn passband_gain(&self) -> f64 {
        10f64.powf(self.passband_gain_db / 20.0)
    }

    /// |H(f)| of the continuous-time filter.
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        self.passband_gain() / (1.0 + (f_hz / self.corner_hz).powi(2)).sqrt()
    }

    fn run(&self, x: &[f64], dt: f64) -> Vec<f64> {
        let g = self.passband_gain();
        // exact zero-order-hold discretization of y' = ωc (g x − y)
        let alpha = 1.0 - (-2.0 * PI * self.corner_hz * dt).exp();
        let mut out = Vec::with_capacity(x.len());
        let mut y = x.first().map_or(0.0, |x0| g * x0);
        out.push(y);
        for prev in x.iter().take(x.len().saturating_sub(1)) {
            y += alpha * (g * prev - y);
            out.push(y);
        }
        out.truncate(x.len());
        out
    }
}

/// Pass the waveform's AC part through the first-order low-pass.
///
/// The filter starts in steady state with the first sample. When the waveform
/// carries a tuning law, the detuning is recomputed from the filtered voltage;
/// otherwise the detuning itself is filtered.
pub fn apply_bandwidth_filter(waveform: &PulseWaveform, filter: &FilterModel) -> PulseWaveform {
    let mut out = waveform.clone();
    match &waveform.tuning {
        Some(tuning) => {
            let ac: Vec<f64> = waveform.voltage.iter().map(|u| u - waveform.dc_offset).collect();
            out.voltage = filter
                .run(&ac, waveform.dt)
                .into_iter()
                .map(|y| y + waveform.dc_offset)
                .collect();
            out.detuning = out.voltage.iter().map(|&u| tuning.detuning(u)).collect();
        }
        None => {
            out.detuning = filter.run(&waveform.detuning, waveform.dt);
        }
    }
    out
}

/// Number of integration steps (each spanning two samples) for an edge.
///
/// Keeps the step below 1/200 of the shortest dynamical period and the
/// sampling above 50 samples per correction-harmonic period.
pub fn edge_steps(system: &SystemParams, spec: &RampSpec, tuning: &TuningModel, edge: Edge) -> usize {
    let (lo, hi) = spec.edge_window(edge);
    let probe = 2000;
    let max_delta = (0..=probe)
        .map(|k| tuning.detuning(spec.voltage(lo + (hi - lo) * k as f64 / probe as f64)).abs())
        .fold(0.0, f64::max);
    let t_min = dynamics::shortest_period(max_delta, system.omega0);
    // 1% margin: the probe grid can miss the true detuning maximum
    let steps = (1.01 * (hi - lo) / (t_min / dynamics::STEPS_PER_PERIOD as f64)).ceil() as usize;
    steps.max(50)
}

/// Sampled edge waveform suitable for [`dynamics::evolve`].
pub fn edge_waveform(
    system: &SystemParams,
    spec: &RampSpec,
    tuning: &TuningModel,
    edge: Edge,
    filter: Option<&FilterModel>,
) -> Result<PulseWaveform> {
    let (lo, hi) = spec.edge_window(edge);
    let steps = edge_steps(system, spec, tuning, edge);
    let mut w = PulseWaveform::sample(spec, tuning, lo, hi, 2 * steps)?;
    if let Some(f) = filter {
        // each edge is filtered from its own steady state
        w.dc_offset = match edge {
            Edge::Leading => spec.u_i,
            Edge::Trailing => spec.u_f,
        };
        w = apply_bandwidth_filter(&w, f);
    }
    Ok(w)
}

/// 1 − |⟨IP|U_edge|IP⟩|² for the given edge and coefficients, without damping.
///
/// Both edges should carry the in-plane state through unchanged: the leading
/// edge into the crossing, the trailing edge back out to the readout point.
pub fn edge_infidelity(
    system: &SystemParams,
    spec: &RampSpec,
    tuning: &TuningModel,
    edge: Edge,
    c: f64,
    d: f64,
) -> Result<f64> {
    let mut s = *spec;
    s.kind = RampKind::Corrected;
    s.set_coefficients(edge, c, d);
    let undamped = SystemParams {
        gamma: 0.0,
        ..*system
    };
    let w = edge_waveform(&undamped, &s, tuning, edge, None)?;
    let out = dynamics::evolve(&ModeState::in_plane(), &w, &undamped)?;
    Ok((1.0 - out.ip.norm_sqr()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionResult {
    pub c: f64,
    pub d: f64,
    pub infidelity: f64,
    /// Infidelity of the uncorrected soft edge, for comparison.
    pub soft_infidelity: f64,
    pub evaluations: usize,
    /// Set when the search stalled above the stagnation threshold.
    pub stalled: bool,
}

/// Minimize edge leakage over (c, d): a coarse grid, then a bounded simplex.
pub fn optimize_correction(
    system: &SystemParams,
    spec: &RampSpec,
    tuning: &TuningModel,
    edge: Edge,
) -> Result<CorrectionResult> {
    spec.validate()?;
    let grid = 21usize;
    let b = COEFFICIENT_BOUND;
    let axis = |k: usize| -b + 2.0 * b * k as f64 / (grid - 1) as f64;
    let cells: Vec<(f64, f64)> = (0..grid)
        .flat_map(|i| (0..grid).map(move |j| (axis(i), axis(j))))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(c, d)| edge_infidelity(system, spec, tuning, edge, c, d))
        .collect::<Result<_>>()?;
    // lowest score, ties to the earliest cell
    let (best_idx, _) = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let soft_infidelity = edge_infidelity(system, spec, tuning, edge, 0.0, 0.0)?;

    let mut failure = None;
    let res = simplex::minimize(
        |x| match edge_infidelity(system, spec, tuning, edge, x[0], x[1]) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        &[cells[best_idx].0, cells[best_idx].1],
        &SimplexOptions {
            max_evals: 600,
            f_tol: 1e-15,
            x_tol: 1e-8,
            step: vec![0.5 * (2.0 * b / (grid - 1) as f64); 2],
            bounds: Some(vec![(-b, b); 2]),
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (c, d, infidelity) = if res.f <= soft_infidelity {
        (res.x[0], res.x[1], res.f)
    } else {
        (0.0, 0.0, soft_infidelity)
    };
    Ok(CorrectionResult {
        c,
        d,
        infidelity,
        soft_infidelity,
        evaluations: cells.len() + 1 + res.evals,
        stalled: infidelity > STAGNATION_INFIDELITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_tuning;
    use std::f64::consts::TAU;

    fn spec() -> RampSpec {
        RampSpec::with_timing(12e-6, 20e-6, -13.5, -8.0, -13.2, RampKind::Corrected)
    }

    #[test]
    fn soft_ramp_endpoints_and_midpoint() {
        let s = spec();
        assert_eq!(soft_ramp(&s, s.t0).unwrap(), 0.0);
        assert!((soft_ramp(&s, s.ts).unwrap() - 1.0).abs() < 1e-15);
        assert!((soft_ramp(&s, 0.5 * (s.t0 + s.ts)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(soft_ramp(&s, s.ts + 1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_correction_is_soft() {
        let s = spec();
        for k in 0..=100 {
            let t = s.t0 + s.edge_duration() * k as f64 / 100.0;
            assert_eq!(corrected_ramp(&s, t).unwrap(), soft_ramp(&s, t).unwrap());
        }
    }

    #[test]
    fn correction_leaves_endpoints() {
        let mut s = spec();
        s.c = 0.7;
        s.d = -0.3;
        assert!(corrected_ramp(&s, s.t0).unwrap().abs() < 1e-15);
        assert!((corrected_ramp(&s, s.ts).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trailing_edge_runs_zero_to_one_and_mirrors_soft_lead() {
        let s = spec();
        assert_eq!(trailing_edge(&s, s.tf).unwrap(), 0.0);
        assert!((trailing_edge(&s, s.tr).unwrap() - 1.0).abs() < 1e-15);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let t_trail = if k == 20 { s.tr } else { s.tf + x * s.edge_duration() };
            // mirrored leading-edge time
            let t_lead = s.ts - x * s.edge_duration();
            let g = trailing_edge(&s, t_trail).unwrap();
            assert!((g - (1.0 - soft_ramp(&s, t_lead).unwrap())).abs() < 1e-12);
        }
    }

    #[test]
    fn corrected_ramp_has_only_two_harmonics() {
        // project onto {1, cos(2π f t), cos(2π 2f t), sin(2π 2f t)} with f = 1/(2T)
        let mut s = spec();
        s.c = 0.037;
        s.d = 0.605;
        let t_edge = s.edge_duration();
        let f = 1.0 / (2.0 * t_edge);
        let n = 400;
        let mut a = nalgebra::DMatrix::<f64>::zeros(n + 1, 4);
        let mut y = nalgebra::DVector::<f64>::zeros(n + 1);
        for k in 0..=n {
            let t = t_edge * k as f64 / n as f64;
            a[(k, 0)] = 1.0;
            a[(k, 1)] = (TAU * f * t).cos();
            a[(k, 2)] = (TAU * 2.0 * f * t).cos();
            a[(k, 3)] = (TAU * 2.0 * f * t).sin();
            y[k] = corrected_ramp(&s, t).unwrap();
        }
        let x = a.clone().svd(true, true).solve(&y, 1e-14).unwrap();
        let resid = (a * x - y).amax();
        assert!(resid < 1e-12);
        // a 12 μs edge has its fundamental at 41.7 kHz and the correction at 83.3 kHz
        assert!((f - 41_666.67).abs() < 0.01);
    }

    #[test]
    fn voltage_is_continuous_at_every_boundary() {
        let mut s = spec();
        s.c = 0.3;
        s.d = 0.9;
        s.c_bar = -0.2;
        s.d_bar = 0.4;
        for &t in &[s.t0, s.ts, s.tf, s.tr] {
            let eps = 1e-15 * s.tr.max(1e-6) + 1e-13;
            assert!((s.voltage(t - eps) - s.voltage(t + eps)).abs() < 1e-6, "t = {t}");
        }
        assert_eq!(s.voltage(-1.0), s.u_i);
        assert_eq!(s.voltage(s.ts), s.u_f);
        assert_eq!(s.voltage(s.tr), s.u_r);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec();
        assert!(s.validate().is_ok());
        s.tr += 1e-6;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = spec();
        s.u_r = s.u_f;
        assert!(s.validate().is_err());
    }

    #[test]
    fn waveform_endpoints_match_plateaus() {
        let s = spec();
        let w = PulseWaveform::sample(&s, &reference_tuning(), s.t0, s.tr, 4000).unwrap();
        assert_eq!(w.voltage[0], s.u_i);
        assert_eq!(*w.voltage.last().unwrap(), s.u_r);
        assert!(PulseWaveform::sample(&s, &reference_tuning(), s.t0, s.tr, 10).is_err());
    }

    #[test]
    fn filter_dc_gain() {
        let f = FilterModel::default();
        let w = PulseWaveform::from_detuning(0.0, 1e-7, vec![3.0; 500]);
        let y = apply_bandwidth_filter(&w, &f);
        let g = 10f64.powf(-0.4 / 20.0);
        assert!(y.detuning.iter().all(|v| (v - 3.0 * g).abs() < 1e-12));
    }

    fn steady_amplitude(f: &FilterModel, f_hz: f64) -> f64 {
        let dt = 1.0 / (f_hz * 2000.0);
        let n = 2000 * 40;
        let w = PulseWaveform::from_fn(0.0, dt, n, |t| (TAU * f_hz * t).sin());
        let y = apply_bandwidth_filter(&w, f);
        y.detuning[n - 4000..].iter().fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    #[test]
    fn filter_corner_attenuation() {
        let f = FilterModel::default();
        let amp = steady_amplitude(&f, f.corner_hz);
        let expected = f.passband_gain() / 2f64.sqrt();
        assert!((amp - expected).abs() / expected < 5e-3, "{amp} {expected}");
    }

    #[test]
    fn soft_ramp_component_barely_attenuated() {
        let f = FilterModel::default();
        let extra_db = |fr: f64| -20.0 * (f.magnitude(fr) / f.passband_gain()).log10();
        assert!(extra_db(20.8e3) < 0.2);
        let amp = steady_amplitude(&f, 20.8e3);
        let measured_db = -20.0 * (amp / f.passband_gain()).log10();
        assert!(measured_db < 0.2, "{measured_db}");
    }

    #[test]
    fn filter_is_linear() {
        let f = FilterModel::default();
        let w1 = PulseWaveform::from_fn(0.0, 1e-7, 3000, |t| (1e5 * t).sin());
        let w2 = PulseWaveform::from_fn(0.0, 1e-7, 3000, |t| (t * 3e5).cos() + 0.2);
        let (a, b) = (1.7, -0.6);
        let mix = PulseWaveform::from_detuning(
            0.0,
            1e-7,
            w1.detuning.iter().zip(&w2.detuning).map(|(x, y)| a * x + b * y).collect(),
        );
        let y = apply_bandwidth_filter(&mix, &f);
        let y1 = apply_bandwidth_filter(&w1, &f);
        let y2 = apply_bandwidth_filter(&w2, &f);
        for k in 0..3000 {
            assert!((y.detuning[k] - (a * y1.detuning[k] + b * y2.detuning[k])).abs() < 1e-10);
        }
    }

    fn system() -> SystemParams {
        SystemParams::new(TAU * 42.65e3, TAU * 5e6)
    }

    #[test]
    fn sudden_edge_carries_the_state_through() {
        let s = RampSpec::with_timing(50e-9, 20e-6, -13.5, -8.0, -13.2, RampKind::Soft);
        let leak = edge_infidelity(&system(), &s, &reference_tuning(), Edge::Leading, 0.0, 0.0).unwrap();
        assert!(leak < 1e-3, "{leak}");
    }

    #[test]
    fn optimizer_beats_soft_edge_and_reports_consistently() {
        let s = RampSpec::with_timing(0.5 / 41.3e3, 20e-6, -13.5, -8.0, -13.2, RampKind::Corrected);
        let (sys, tuning) = (system(), reference_tuning());
        let r = optimize_correction(&sys, &s, &tuning, Edge::Leading).unwrap();
        assert!(r.infidelity < 0.1 * r.soft_infidelity, "{r:?}");
        assert!(r.c.abs() <= COEFFICIENT_BOUND && r.d.abs() <= COEFFICIENT_BOUND);
        assert!(!r.stalled);
        let again = edge_infidelity(&sys, &s, &tuning, Edge::Leading, r.c, r.d).unwrap();
        assert!((again - r.infidelity).abs() < 1e-10);
    }
}
