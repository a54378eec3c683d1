//! Two-mode dynamics under H(t) = Δ(t)/2 σz + Ω₀/2 σx with uniform damping,
//! dephasing during free evolution, and the ringdown readout.
//!
//! Basis index 0 is the out-of-plane mode, index 1 the in-plane mode.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::PulseWaveform;
use crate::seed;

/// Integration steps per shortest dynamical period.
pub const STEPS_PER_PERIOD: usize = 200;

/// Minimum Δ₀/Ω₀ for the sequence to start far from the crossing.
pub const MIN_INITIAL_DETUNING_RATIO: f64 = 10.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ringdown acquisition after the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingdownSettings {
    /// Recording length, s.
    pub duration: f64,
    pub samples: usize,
    /// Gaussian noise per amplitude sample (amplitude units, full scale 1).
    pub noise: f64,
    /// Samples below `floor_sigmas · noise` are excluded from the fit.
    pub floor_sigmas: f64,
}

impl Default for RingdownSettings {
    fn default() -> Self {
        Self {
            duration: 4e-3,
            samples: 40,
            noise: 0.01,
            floor_sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// True splitting Ω₀, rad/s.
    pub omega0: f64,
    /// Initial detuning Δ₀, rad/s.
    pub delta0: f64,
    /// Mode energy decay rate γ, 1/s; amplitudes decay at γ/2.
    pub gamma: f64,
    /// Dephasing time between the normal modes, s (may be infinite).
    pub t_d: f64,
    /// Std of the per-shot return-probability readout.
    pub sigma_meas: f64,
    pub repeats: usize,
    #[serde(default)]
    pub ringdown: RingdownSettings,
}

impl SystemParams {
    pub fn new(omega0: f64, delta0: f64) -> Self {
        Self {
            omega0,
            delta0,
            gamma: 0.0,
            t_d: f64::INFINITY,
            sigma_meas: 0.0,
            repeats: 30,
            ringdown: RingdownSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return Err(Error::config("splitting must be positive"));
        }
        if !(self.delta0.abs() >= MIN_INITIAL_DETUNING_RATIO * self.omega0) {
            return Err(Error::config(format!(
                "initial detuning must be at least {MIN_INITIAL_DETUNING_RATIO} times the splitting (ratio {:.2})",
                self.delta0.abs() / self.omega0
            )));
        }
        if !(self.t_d > 0.0) {
            return Err(Error::config("dephasing time must be positive"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("damping rate must be finite and non-negative"));
        }
        if !(self.sigma_meas >= 0.0) || self.repeats == 0 {
            return Err(Error::config("readout noise must be non-negative and repeats at least 1"));
        }
        let r = &self.ringdown;
        if !(r.duration > 0.0) || r.samples < 2 || !(r.noise >= 0.0) || !(r.floor_sigmas >= 0.0) {
            return Err(Error::config("invalid ringdown settings"));
        }
        Ok(())
    }

    /// Ringdown time constant τ = 1/γ (energy decay time).
    pub fn tau(&self) -> f64 {
        1.0 / self.gamma
    }
}

/// Complex amplitudes of the out-of-plane and in-plane modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub oop: Complex64,
    pub ip: Complex64,
}

impl ModeState {
    pub fn new(oop: Complex64, ip: Complex64) -> Self {
        Self { oop, ip }
    }

    pub fn in_plane() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn out_of_plane() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.oop.norm_sqr() + self.ip.norm_sqr()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.oop * s, self.ip * s)
    }

    /// |⟨other|self⟩|² without normalization.
    pub fn overlap_sqr(&self, other: &ModeState) -> f64 {
        (other.oop.conj() * self.oop + other.ip.conj() * self.ip).norm_sqr()
    }

    /// Projections onto the normal modes (|0⟩ ± |1⟩)/√2.
    fn normal_mode_parts(&self) -> (ModeState, ModeState) {
        let plus = 0.5 * (self.oop + self.ip);
        let minus = 0.5 * (self.oop - self.ip);
        (ModeState::new(plus, plus), ModeState::new(minus, -minus))
    }
}

/// Weighted set of pure states standing in for a partially dephased state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeEnsemble {
    pub members: Vec<(f64, ModeState)>,
}

impl ModeEnsemble {
    pub fn pure(state: ModeState) -> Self {
        Self {
            members: vec![(1.0, state)],
        }
    }

    pub fn population_ip(&self) -> f64 {
        self.members.iter().map(|(w, s)| w * s.ip.norm_sqr()).sum()
    }

    pub fn population_oop(&self) -> f64 {
        self.members.iter().map(|(w, s)| w * s.oop.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.population_ip() + self.population_oop()
    }

    /// ⟨+|ρ|−⟩ in the normal-mode basis.
    pub fn normal_mode_coherence(&self) -> Complex64 {
        self.members
            .iter()
            .map(|(w, s)| {
                let (p, m) = s.normal_mode_parts();
                // amplitudes along |+⟩ and |−⟩
                let cp = p.oop * std::f64::consts::SQRT_2;
                let cm = m.oop * std::f64::consts::SQRT_2;
                *w * cp * cm.conj()
            })
            .sum()
    }

    pub fn map(&self, f: impl Fn(&ModeState) -> ModeState) -> Self {
        Self {
            members: self.members.iter().map(|(w, s)| (*w, f(s))).collect(),
        }
    }
}

/// Linear map of a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub m: [[Complex64; 2]; 2],
}

impl Propagator {
    pub fn scaled_identity(s: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let d = Complex64::new(s, 0.0);
        Self { m: [[d, z], [z, d]] }
    }

    pub fn apply(&self, s: &ModeState) -> ModeState {
        ModeState::new(
            self.m[0][0] * s.oop + self.m[0][1] * s.ip,
            self.m[1][0] * s.oop + self.m[1][1] * s.ip,
        )
    }
}

/// 2π / max √(Δ² + Ω₀²).
pub fn shortest_period(max_abs_detuning: f64, omega0: f64) -> f64 {
    TAU / (max_abs_detuning.powi(2) + omega0.powi(2)).sqrt()
}

fn derivative(delta: f64, omega0: f64, half_gamma: f64, a: &ModeState) -> ModeState {
    let h0 = 0.5 * delta * a.oop + 0.5 * omega0 * a.ip;
    let h1 = 0.5 * omega0 * a.oop - 0.5 * delta * a.ip;
    ModeState::new(-I * h0 - half_gamma * a.oop, -I * h1 - half_gamma * a.ip)
}

fn axpy(a: &ModeState, k: f64, b: &ModeState) -> ModeState {
    ModeState::new(a.oop + k * b.oop, a.ip + k * b.ip)
}

fn rk4_step(a: &ModeState, h: f64, d0: f64, dm: f64, d1: f64, omega0: f64, half_gamma: f64) -> ModeState {
    let k1 = derivative(d0, omega0, half_gamma, a);
    let k2 = derivative(dm, omega0, half_gamma, &axpy(a, 0.5 * h, &k1));
    let k3 = derivative(dm, omega0, half_gamma, &axpy(a, 0.5 * h, &k2));
    let k4 = derivative(d1, omega0, half_gamma, &axpy(a, h, &k3));
    ModeState::new(
        a.oop + h / 6.0 * (k1.oop + 2.0 * k2.oop + 2.0 * k3.oop + k4.oop),
        a.ip + h / 6.0 * (k1.ip + 2.0 * k2.ip + 2.0 * k3.ip + k4.ip),
    )
}

fn check_step(waveform: &PulseWaveform, params: &SystemParams) -> Result<()> {
    if waveform.len() < 2 || !(waveform.dt > 0.0) {
        return Err(Error::config("waveform needs at least two samples and a positive sample period"));
    }
    let max_delta = waveform.detuning.iter().fold(0.0, |a: f64, d| a.max(d.abs()));
    let limit = shortest_period(max_delta, params.omega0) / STEPS_PER_PERIOD as f64;
    let h = 2.0 * waveform.dt;
    if h > limit * (1.0 + 1e-9) {
        return Err(Error::config(format!(
            "integration step {h:e} s exceeds 1/{STEPS_PER_PERIOD} of the shortest period ({limit:e} s)"
        )));
    }
    Ok(())
}

/// Integrate i·ȧ = [H(t) − iγ/2]·a across the waveform with fixed-step RK4.
///
/// Each step spans two samples, so the midpoint detuning is a sample and no
/// interpolation is needed. A trailing odd interval is covered by one step of
/// a single sample period with a linearly interpolated midpoint.
pub fn evolve(state: &ModeState, waveform: &PulseWaveform, params: &SystemParams) -> Result<ModeState> {
    let mut out = *state;
    walk(state, waveform, params, |_, s| out = *s)?;
    Ok(out)
}

/// As [`evolve`], recording the state after each step.
pub fn evolve_trajectory(
    state: &ModeState,
    waveform: &PulseWaveform,
    params: &SystemParams,
) -> Result<Vec<(f64, ModeState)>> {
    let mut traj = vec![(waveform.t_start, *state)];
    walk(state, waveform, params, |t, s| traj.push((t, *s)))?;
    Ok(traj)
}

fn walk(
    state: &ModeState,
    waveform: &PulseWaveform,
    params: &SystemParams,
    mut visit: impl FnMut(f64, &ModeState),
) -> Result<()> {
    check_step(waveform, params)?;
    let d = &waveform.detuning;
    let h = 2.0 * waveform.dt;
    let hg = 0.5 * params.gamma;
    let mut a = *state;
    let mut k = 0;
    while k + 2 < d.len() {
        a = rk4_step(&a, h, d[k], d[k + 1], d[k + 2], params.omega0, hg);
        k += 2;
        visit(waveform.time(k), &a);
    }
    if k + 1 < d.len() {
        let mid = 0.5 * (d[k] + d[k + 1]);
        a = rk4_step(&a, waveform.dt, d[k], mid, d[k + 1], params.omega0, hg);
        visit(waveform.time(k + 1), &a);
    }
    Ok(())
}

/// Propagator of the waveform, built from the evolution of both basis states.
pub fn propagator(waveform: &PulseWaveform, params: &SystemParams) -> Result<Propagator> {
    let c0 = evolve(&ModeState::out_of_plane(), waveform, params)?;
    let c1 = evolve(&ModeState::in_plane(), waveform, params)?;
    Ok(Propagator {
        m: [[c0.oop, c1.oop], [c0.ip, c1.ip]],
    })
}

/// Free evolution at the crossing (Δ = 0) for t_w, with damping and dephasing.
///
/// The coherent part is exact: U = e^{−γt/2}[cos(Ω₀t/2) I − i sin(Ω₀t/2) σx].
/// Dephasing multiplies the normal-mode coherence by e^{−t/T_d}; the result is
/// the coherent state with weight e^{−t/T_d} plus its two normal-mode
/// projections with weight 1 − e^{−t/T_d}.
pub fn free_evolution(state: &ModeState, t_w: f64, params: &SystemParams) -> Result<ModeEnsemble> {
    free_evolution_ensemble(&ModeEnsemble::pure(*state), t_w, params)
}

pub fn free_evolution_ensemble(ensemble: &ModeEnsemble, t_w: f64, params: &SystemParams) -> Result<ModeEnsemble> {
    if !(t_w >= 0.0) {
        return Err(Error::domain(format!("free-evolution time must be non-negative (got {t_w})")));
    }
    let phase = 0.5 * params.omega0 * t_w;
    let damp = (-0.5 * params.gamma * t_w).exp();
    let (c, s) = (phase.cos() * damp, phase.sin() * damp);
    let u = Propagator {
        m: [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
    };
    let keep = if params.t_d.is_infinite() { 1.0 } else { (-t_w / params.t_d).exp() };
    let mut members = Vec::with_capacity(3 * ensemble.members.len());
    for (w, st) in &ensemble.members {
        let evolved = u.apply(st);
        members.push((w * keep, evolved));
        if keep < 1.0 {
            let (p, m) = evolved.normal_mode_parts();
            members.push((w * (1.0 - keep), p));
            members.push((w * (1.0 - keep), m));
        }
    }
    Ok(ModeEnsemble { members })
}

/// Sampled ringdown and its exponential fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingdownRecord {
    /// Sample times measured from the sequence start t₀ = 0.
    pub times: Vec<f64>,
    pub samples: Vec<f64>,
    /// Fit extrapolated to t₀ = 0.
    pub amplitude: f64,
    /// Fitted energy decay time; infinite when no decay is resolved.
    pub tau: f64,
    /// Samples above the noise floor that entered the fit.
    pub used: usize,
}

/// Record the decay A·e^{−t/(2τ)}, τ = 1/γ, from `start` to `start + duration`
/// with Gaussian sample noise, then fit log-amplitude and extrapolate to t₀ = 0.
///
/// `amplitude` is the undamped amplitude referred to t₀, so records started at
/// different times extrapolate to the same value.
pub fn simulate_ringdown(
    amplitude: f64,
    params: &SystemParams,
    start: f64,
    duration: f64,
    noise_seed: u64,
) -> Result<RingdownRecord> {
    if !(0.0..=1.0 + 1e-9).contains(&amplitude) {
        return Err(Error::domain(format!("ringdown amplitude {amplitude} outside [0, 1]")));
    }
    let settings = &params.ringdown;
    let n = settings.samples.max(2);
    let sigma = settings.noise;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = seed::rng(noise_seed, &[]);
    let times: Vec<f64> = (0..n).map(|k| start + duration * k as f64 / (n - 1) as f64).collect();
    let samples: Vec<f64> = times
        .iter()
        .map(|t| amplitude * (-0.5 * params.gamma * t).exp() + if sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 })
        .collect();
    if amplitude == 0.0 && sigma == 0.0 {
        return Ok(RingdownRecord {
            times,
            samples,
            amplitude: 0.0,
            tau: params.tau(),
            used: 0,
        });
    }
    let (amp, tau, used) = fit_ringdown(&times, &samples, settings.floor_sigmas * sigma)?;
    Ok(RingdownRecord {
        times,
        samples,
        amplitude: amp,
        tau,
        used,
    })
}

/// Least-squares line through ln(y) against t over samples above `floor`.
/// Returns (amplitude at t = 0, energy decay time, samples used).
pub fn fit_ringdown(times: &[f64], samples: &[f64], floor: f64) -> Result<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(samples)
        .filter(|(_, &y)| y > floor && y > 0.0)
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Readout(format!(
            "only {} of {} ringdown samples above the noise floor",
            pts.len(),
            samples.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = my - slope * mt;
    let tau = if slope < 0.0 { -0.5 / slope } else { f64::INFINITY };
    Ok((intercept.exp(), tau, pts.len()))
}

/// Trajectory dump: time, populations and the OOP/IP coherence.
pub fn trajectory_csv(traj: &[(f64, ModeState)]) -> String {
    let mut s = String::from("time_s,p_oop,p_ip,coherence_re,coherence_im\n");
    for (t, a) in traj {
        let c = a.oop * a.ip.conj();
        s.push_str(&format!("{:e},{},{},{},{}\n", t, a.oop.norm_sqr(), a.ip.norm_sqr(), c.re, c.im));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(omega0: f64) -> SystemParams {
        SystemParams::new(omega0, 10.0 * omega0)
    }

    fn constant(delta: f64, duration: f64, omega0: f64) -> PulseWaveform {
        let t_min = shortest_period(delta, omega0);
        let steps = (duration / (t_min / STEPS_PER_PERIOD as f64)).ceil() as usize;
        let dt = duration / (2 * steps) as f64;
        PulseWaveform::from_detuning(0.0, dt, vec![delta; 2 * steps + 1])
    }

    #[test]
    fn rabi_oscillation_at_constant_detuning() {
        let omega0 = TAU * 42e3;
        let delta = 2.5 * omega0;
        let p = params(omega0);
        let gen = (delta * delta + omega0 * omega0).sqrt();
        let vis = omega0 * omega0 / (gen * gen);
        for dur in [3e-6, 11e-6, 27e-6] {
            let w = constant(delta, dur, omega0);
            let out = evolve(&ModeState::in_plane(), &w, &p).unwrap();
            let expected = 1.0 - vis * (0.5 * gen * dur).sin().powi(2);
            assert!((out.ip.norm_sqr() - expected).abs() < 1e-7, "{} {}", out.ip.norm_sqr(), expected);
        }
    }

    #[test]
    fn resonant_exchange_period() {
        let omega0 = TAU * 42e3;
        let p = params(omega0);
        let half = constant(0.0, std::f64::consts::PI / omega0, omega0);
        let out = evolve(&ModeState::in_plane(), &half, &p).unwrap();
        assert!(out.oop.norm_sqr() > 1.0 - 1e-9);
        let full = constant(0.0, TAU / omega0, omega0);
        let out = evolve(&ModeState::in_plane(), &full, &p).unwrap();
        assert!(out.ip.norm_sqr() > 1.0 - 1e-9);
    }

    #[test]
    fn diagonal_hamiltonian_only_accumulates_phase() {
        let mut p = params(1.0);
        p.omega0 = 0.0;
        let dt = 1e-3;
        let w = PulseWaveform::from_fn(0.0, dt, 2001, |t| 3.0 + (5.0 * t).sin());
        let start = ModeState::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let out = evolve(&start, &w, &p).unwrap();
        let integral = 3.0 * 2.0 + (1.0 - (10.0f64).cos()) / 5.0;
        assert!((out.oop.norm_sqr() - 0.36).abs() < 1e-12);
        let expected = start.oop * (-I * 0.5 * integral).exp();
        assert!((out.oop - expected).norm() < 1e-9);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = params(TAU * 42e3);
        let w = PulseWaveform::from_detuning(0.0, 1e-6, vec![p.delta0; 11]);
        assert!(matches!(evolve(&ModeState::in_plane(), &w, &p), Err(Error::Config(_))));
    }

    #[test]
    fn damping_shrinks_norm() {
        let mut p = params(TAU * 42e3);
        p.gamma = 2000.0;
        let w = constant(p.delta0, 50e-6, p.omega0);
        let out = evolve(&ModeState::in_plane(), &w, &p).unwrap();
        assert!((out.norm_sqr() - (-p.gamma * w.duration()).exp()).abs() < 1e-9);
    }

    #[test]
    fn free_evolution_full_and_half_period() {
        let p = params(TAU * 42.65e3);
        let full = free_evolution(&ModeState::in_plane(), TAU / p.omega0, &p).unwrap();
        assert_eq!(full.members.len(), 1);
        let s = full.members[0].1;
        assert!((s.overlap_sqr(&ModeState::in_plane()) - 1.0).abs() < 1e-12);
        let half = free_evolution(&ModeState::in_plane(), std::f64::consts::PI / p.omega0, &p).unwrap();
        assert!((half.population_oop() - 1.0).abs() < 1e-12);
        assert!(matches!(free_evolution(&ModeState::in_plane(), -1.0, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn dephasing_decays_normal_mode_coherence() {
        let mut p = params(TAU * 42.65e3);
        p.t_d = 150e-6;
        for t in [0.0, 40e-6, 100e-6, 300e-6] {
            let e = free_evolution(&ModeState::in_plane(), t, &p).unwrap();
            // |⟨+|ψ⟩⟨ψ|−⟩| = 1/2 for the in-plane state, kept under free evolution
            let c = e.normal_mode_coherence().norm();
            assert!((c - 0.5 * (-t / p.t_d).exp()).abs() < 1e-12, "{t}");
            assert!((e.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ringdown_noiseless_fit_is_exact() {
        let mut p = params(1.0);
        p.gamma = 500.0;
        p.ringdown.noise = 0.0;
        let r = simulate_ringdown(0.8, &p, 0.0, 4e-3, 1).unwrap();
        assert!((r.amplitude - 0.8).abs() / 0.8 < 1e-6);
        assert!((r.tau - 2e-3).abs() / 2e-3 < 1e-6);
        let late = simulate_ringdown(0.8, &p, 3e-3, 4e-3, 1).unwrap();
        assert!((late.amplitude - 0.8).abs() < 1e-9);
        let max = r.samples.iter().cloned().fold(0.0, f64::max);
        assert!(r.amplitude >= max * (1.0 - 1e-9));
    }

    #[test]
    fn ringdown_zero_amplitude_without_noise() {
        let mut p = params(1.0);
        p.gamma = 500.0;
        p.ringdown.noise = 0.0;
        let r = simulate_ringdown(0.0, &p, 0.0, 4e-3, 1).unwrap();
        assert_eq!(r.amplitude, 0.0);
    }

    #[test]
    fn ringdown_lost_below_floor() {
        let mut p = params(1.0);
        p.gamma = 500.0;
        p.ringdown.noise = 0.05;
        assert!(matches!(simulate_ringdown(0.0, &p, 0.0, 4e-3, 9), Err(Error::Readout(_))));
        assert!(matches!(simulate_ringdown(1.5, &p, 0.0, 4e-3, 9), Err(Error::Domain(_))));
    }

    #[test]
    fn ringdown_noise_spread() {
        let mut p = params(1.0);
        p.gamma = 500.0;
        p.ringdown.noise = 0.01;
        let amps: Vec<f64> = (0..30)
            .map(|k| simulate_ringdown(0.8, &p, 1e-3, 4e-3, 100 + k).unwrap().amplitude)
            .collect();
        let mean = amps.iter().sum::<f64>() / 30.0;
        let std = (amps.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 29.0).sqrt();
        assert!(std < 0.01, "{std}");
        assert!((mean - 0.8).abs() < 0.01);
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let p = params(TAU * 42e3);
        let w = constant(0.0, 5e-6, p.omega0);
        let traj = evolve_trajectory(&ModeState::in_plane(), &w, &p).unwrap();
        let csv = trajectory_csv(&traj);
        assert!(csv.starts_with("time_s,p_oop,p_ip,coherence_re,coherence_im\n"));
        assert_eq!(csv.lines().count(), traj.len() + 1);
    }
}
