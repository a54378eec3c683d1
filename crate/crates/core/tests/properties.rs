use std::f64::consts::TAU;

use ias_core::dynamics::{self, ModeState, SystemParams};
use ias_core::estimator::{self, ProcessingOptions, WindowKind};
use ias_core::model::{self, BareModes, Branch, SpectroscopyData, SpectroscopyPoint};
use ias_core::pulse::{self, FilterModel, PulseWaveform, RampKind, RampSpec};
use ias_core::sensing::{self, ChargeModel};
use num_complex::Complex64;
use proptest::prelude::*;

fn system(omega0: f64, gamma: f64) -> SystemParams {
    let mut p = SystemParams::new(omega0, 20.0 * omega0);
    p.gamma = gamma;
    p
}

/// Exact propagator for constant Δ and Ω₀ without damping.
fn exact(state: &ModeState, delta: f64, omega0: f64, t: f64) -> ModeState {
    let w = (delta * delta + omega0 * omega0).sqrt();
    let (c, s) = ((0.5 * w * t).cos(), (0.5 * w * t).sin());
    let i = Complex64::i();
    let (nz, nx) = (delta / w, omega0 / w);
    ModeState::new(
        c * state.oop - i * s * (nz * state.oop + nx * state.ip),
        c * state.ip - i * s * (nx * state.oop - nz * state.ip),
    )
}

fn chirp(omega0: f64, periods: f64, samples: usize, a: f64, b: f64) -> PulseWaveform {
    let t_end = periods * TAU / omega0;
    let dt = t_end / (samples - 1) as f64;
    PulseWaveform::from_fn(0.0, dt, samples, |t| a * omega0 * (1.0 - 2.0 * t / t_end) + b * omega0 * (TAU * t / t_end).sin())
}

fn tone(f: f64, dt: f64, n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|k| 0.5 + 0.4 * (TAU * f * k as f64 * dt + phase).cos()).collect()
}

fn estimate(v: &[f64], dt: f64, fringes: usize, o: &ProcessingOptions) -> f64 {
    let p = estimator::preprocess(v, dt, fringes, o).unwrap();
    estimator::estimate_frequency(&p, o).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn damping_never_increases_norm(gamma in 0.0f64..5e4, a in -3.0f64..3.0, b in -1.0f64..1.0) {
        let omega0 = TAU * 40e3;
        let w = chirp(omega0, 3.0, 8001, a, b);
        let traj = dynamics::evolve_trajectory(&ModeState::in_plane(), &w, &system(omega0, gamma)).unwrap();
        let mut last = 1.0 + 1e-12;
        for (_, s) in &traj {
            prop_assert!(s.norm_sqr() <= last + 1e-12);
            last = s.norm_sqr();
        }
    }

    #[test]
    fn undamped_evolution_is_unitary(a in -3.0f64..3.0, b in -1.0f64..1.0, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let omega0 = TAU * 40e3;
        let w = chirp(omega0, 3.0, 8001, a, b);
        let p = dynamics::propagator(&w, &system(omega0, 0.0)).unwrap();
        let m = p.m;
        // columns orthonormal
        let c00 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let c11 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let c01 = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        prop_assert!((c00 - 1.0).abs() < 1e-8 && (c11 - 1.0).abs() < 1e-8 && c01.norm() < 1e-8);
        let s = ModeState::new(Complex64::new(re, im), Complex64::new(1.0, 0.0));
        let out = p.apply(&s);
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-8 * s.norm_sqr());
    }

    #[test]
    fn integrator_is_fourth_order(delta_ratio in -3.0f64..3.0, periods in 1.0f64..4.0) {
        let omega0 = TAU * 40e3;
        let delta = delta_ratio * omega0;
        let w_eff = (delta * delta + omega0 * omega0).sqrt();
        let t_end = periods * TAU / w_eff;
        let p = system(omega0, 0.0);
        let target = exact(&ModeState::in_plane(), delta, omega0, t_end);
        let err_at = |steps: usize| {
            let w = PulseWaveform::from_fn(0.0, t_end / (2 * steps) as f64, 2 * steps + 1, |_| delta);
            let s = dynamics::evolve(&ModeState::in_plane(), &w, &p).unwrap();
            ((s.oop - target.oop).norm_sqr() + (s.ip - target.ip).norm_sqr()).sqrt()
        };
        let coarse = (periods * dynamics::STEPS_PER_PERIOD as f64).ceil() as usize;
        let ratio = err_at(coarse) / err_at(2 * coarse);
        prop_assert!((10.0..=22.0).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn time_reversal_undoes_evolution(a in -3.0f64..3.0, b in -1.0f64..1.0) {
        let omega0 = TAU * 40e3;
        let w = chirp(omega0, 3.0, 8001, a, b);
        let p = system(omega0, 0.0);
        let start = ModeState::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let end = dynamics::evolve(&start, &w, &p).unwrap();
        let conj = |s: &ModeState| ModeState::new(s.oop.conj(), s.ip.conj());
        let back = conj(&dynamics::evolve(&conj(&end), &w.reversed(), &p).unwrap());
        prop_assert!((back.oop - start.oop).norm() < 1e-6 && (back.ip - start.ip).norm() < 1e-6);
    }

    #[test]
    fn free_evolution_matches_closed_form(t_w in 0.0f64..2e-4, gamma in 0.0f64..1e3) {
        let omega0 = TAU * 42.65e3;
        let p = system(omega0, gamma);
        let e = dynamics::free_evolution(&ModeState::in_plane(), t_w, &p).unwrap();
        let expect = (-gamma * t_w).exp() * (0.5 * omega0 * t_w).cos().powi(2);
        prop_assert!((e.population_ip() - expect).abs() < 1e-12);
    }

    #[test]
    fn ringdown_fit_is_exact_without_noise(amp in 0.05f64..1.0, gamma in 50.0f64..2e3) {
        let times: Vec<f64> = (0..40).map(|k| 1e-4 * k as f64).collect();
        let ys: Vec<f64> = times.iter().map(|t| amp * (-0.5 * gamma * t).exp()).collect();
        let (a, tau, used) = dynamics::fit_ringdown(&times, &ys, 0.0).unwrap();
        prop_assert!((a - amp).abs() < 1e-10 * amp);
        prop_assert!((tau * gamma - 1.0).abs() < 1e-8);
        prop_assert_eq!(used, 40);
    }

    #[test]
    fn normal_modes_are_ordered(w1 in 1.0f64..10.0, w2 in 1.0f64..10.0, k in 0.0f64..3.0, dk in 0.01f64..1.0) {
        let (p, m) = model::normal_mode_frequencies(&BareModes::new(w1, w2, k)).unwrap();
        prop_assert!(p >= m);
        prop_assert!(p >= w1.max(w2) * (1.0 - 1e-14));
        prop_assert!(m >= w1.min(w2) * (1.0 - 1e-14));
        let (p2, _) = model::normal_mode_frequencies(&BareModes::new(w1, w2, k + dk)).unwrap();
        prop_assert!(p2 > p);
    }

    #[test]
    fn splitting_grows_with_coupling(w in 1.0f64..10.0, k in 0.0f64..0.3, dk in 0.01f64..0.3) {
        let gap = |kk: f64| {
            let (p, m) = model::normal_mode_frequencies(&BareModes::new(w, w, kk * w)).unwrap();
            p - m
        };
        prop_assert!(gap(k + dk) > gap(k));
    }

    #[test]
    fn spectroscopy_csv_round_trips(pts in prop::collection::vec((-20.0f64..20.0, 1e6f64..1e7, 0u8..3), 1..40)) {
        let data = SpectroscopyData {
            points: pts
                .iter()
                .map(|&(u, f, b)| SpectroscopyPoint {
                    voltage: u,
                    frequency_hz: f,
                    branch: [Branch::Upper, Branch::Lower, Branch::Unassigned][b as usize],
                })
                .collect(),
        };
        let back = SpectroscopyData::from_csv_reader(data.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn ramp_edges_hit_their_endpoints(c in -1.0f64..1.0, d in -1.0f64..1.0, edge in 5e-6f64..2e-5) {
        let mut spec = RampSpec::with_timing(edge, 3e-5, -13.5, -8.0, -13.2, RampKind::Corrected);
        spec.c = c;
        spec.d = d;
        prop_assert!(pulse::corrected_ramp(&spec, spec.t0).unwrap().abs() < 1e-12);
        prop_assert!((pulse::corrected_ramp(&spec, spec.ts).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((spec.voltage(spec.ts) - spec.u_f).abs() < 1e-9);
        prop_assert!((spec.voltage(spec.tr) - spec.u_r).abs() < 1e-9);
        // continuity across the plateau boundaries
        let h = 1e-12;
        prop_assert!((spec.voltage(spec.ts - h) - spec.voltage(spec.ts + h)).abs() < 1e-5);
        prop_assert!((spec.voltage(spec.tf - h) - spec.voltage(spec.tf + h)).abs() < 1e-5);
    }

    #[test]
    fn soft_ramp_is_monotone(edge in 5e-6f64..2e-5) {
        let spec = RampSpec::with_timing(edge, 0.0, -13.5, -8.0, -13.2, RampKind::Soft);
        let mut last = -1e-15;
        for k in 0..=200 {
            let v = pulse::soft_ramp(&spec, k as f64 / 200.0 * edge).unwrap();
            prop_assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn filter_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, f1 in 1e3f64..3e5, f2 in 1e3f64..3e5) {
        let filter = FilterModel::default();
        let dt = 1e-7;
        let x = PulseWaveform::from_fn(0.0, dt, 500, |t| (TAU * f1 * t).sin());
        let y = PulseWaveform::from_fn(0.0, dt, 500, |t| (TAU * f2 * t).cos());
        let mix = PulseWaveform::from_detuning(
            0.0,
            dt,
            x.detuning.iter().zip(&y.detuning).map(|(p, q)| a * p + b * q).collect(),
        );
        let fx = pulse::apply_bandwidth_filter(&x, &filter).detuning;
        let fy = pulse::apply_bandwidth_filter(&y, &filter).detuning;
        let fm = pulse::apply_bandwidth_filter(&mix, &filter).detuning;
        for k in 0..500 {
            prop_assert!((fm[k] - (a * fx[k] + b * fy[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_keeps_estimate_within_half_bin(f in 35e3f64..50e3, phase in 0.0f64..TAU, pad in 8usize..32) {
        let dt = 1.0 / (413e3);
        let x = tone(f, dt, 41, phase);
        let o = ProcessingOptions::default();
        let base = estimate(&x, dt, 4, &o);
        let other = estimate(&x, dt, 4, &ProcessingOptions { pad_factor: pad, ..o });
        let half = estimator::half_padded_bin(x.len(), dt, pad.min(o.pad_factor));
        prop_assert!((base - other).abs() <= half, "{} vs {}", base, other);
    }

    #[test]
    fn estimate_ignores_scale_and_offset(f in 35e3f64..50e3, phase in 0.0f64..TAU, a in 0.05f64..20.0, b in -10.0f64..10.0) {
        let dt = 1.0 / (413e3);
        let x = tone(f, dt, 41, phase);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        for o in [ProcessingOptions::default(), ProcessingOptions { window: WindowKind::None, ..Default::default() }] {
            let (p, q) = (estimate(&x, dt, 4, &o), estimate(&y, dt, 4, &o));
            prop_assert!((p - q).abs() < 1e-6 * p);
        }
    }

    #[test]
    fn window_lowers_side_lobes(f in 38e3f64..48e3, phase in 0.0f64..TAU) {
        let dt = 1.0 / (413e3);
        let x = tone(f, dt, 41, phase);
        let contrast = |o: &ProcessingOptions| {
            let p = estimator::preprocess(&x, dt, 4, o).unwrap();
            let s = estimator::spectrum(&p, o.pad_factor);
            s.highest_side_lobe(s.main_peak().unwrap())
        };
        let windowed = contrast(&ProcessingOptions::default());
        let raw = contrast(&ProcessingOptions { window: WindowKind::None, ..Default::default() });
        prop_assert!(windowed < raw, "{} vs {}", windowed, raw);
    }

    #[test]
    fn charge_conversions_are_linear(x in -1e4f64..1e4, y in -1e4f64..1e4, a in -5.0f64..5.0) {
        let m = ChargeModel::default();
        let f = |v: f64| sensing::shift_to_charge_density(v, &m);
        prop_assert!((f(a * x + y) - (a * f(x) + f(y))).abs() <= 1e-12 * (1.0 + f(a * x + y).abs()));
        let n = sensing::density_to_electrons(f(x), &m);
        prop_assert!((sensing::charge_density_to_shift(sensing::electrons_to_density(n, &m), &m) - x).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}
