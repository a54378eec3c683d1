//! Short-signal frequency estimation and the iterative adaptive loop.
//!
//! A trace is mean-subtracted, optionally multiplied by a unit-area
//! raised-cosine window, zero-padded and transformed. The estimate is the
//! largest strictly local maximum beyond the zero-frequency lobe, refined by a
//! three-point quadratic fit of the log-magnitude.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ramsey::{self, RamseyConfig, RamseyTrace};
use crate::seed::{self, TAG_ITERATION, TAG_STANDARD};

/// Fewest fringes a windowed trace may span.
pub const MIN_WINDOWED_FRINGES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    None,
    #[default]
    Hann,
    Hamming,
}

impl WindowKind {
    fn a0(self) -> Option<f64> {
        match self {
            WindowKind::None => None,
            WindowKind::Hann => Some(0.5),
            WindowKind::Hamming => Some(0.54),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessingOptions {
    #[serde(default)]
    pub window: WindowKind,
    /// Window length as a fraction of the trace length.
    #[serde(default = "default_fraction")]
    pub window_fraction: f64,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    #[serde(default = "default_true")]
    pub interpolate: bool,
}

fn default_fraction() -> f64 {
    1.0
}

fn default_pad() -> usize {
    16
}

fn default_true() -> bool {
    true
}

impl Default for ProcessingOptions {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            window_fraction: default_fraction(),
            pad_factor: default_pad(),
            interpolate: true,
        }
    }
}

impl ProcessingOptions {
    /// Same padding and interpolation, no window.
    pub fn unprocessed(&self) -> Self {
        Self {
            window: WindowKind::None,
            ..*self
        }
    }

    pub fn is_windowed(&self) -> bool {
        self.window != WindowKind::None
    }

    pub fn validate(&self) -> Result<()> {
        if self.pad_factor < 1 {
            return Err(Error::config("zero-pad factor must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::config("window fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Unit-area raised-cosine window of length `len`.
pub fn window(kind: WindowKind, len: usize) -> Vec<f64> {
    let Some(a0) = kind.a0() else {
        return vec![1.0 / len as f64; len];
    };
    let denom = (len.max(2) - 1) as f64;
    let w: Vec<f64> = (0..len).map(|k| a0 - (1.0 - a0) * (TAU * k as f64 / denom).cos()).collect();
    let area: f64 = w.iter().sum();
    w.into_iter().map(|v| v / area).collect()
}

/// Effective span of a window in samples: area over peak height.
pub fn effective_span(w: &[f64]) -> f64 {
    let peak = w.iter().cloned().fold(0.0, f64::max);
    w.iter().sum::<f64>() / peak
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessedTrace {
    pub dt: f64,
    pub values: Vec<f64>,
    pub windowed: bool,
}

/// Mean subtraction and optional windowing.
///
/// `fringes` is the number of fringes the trace nominally spans; windowing
/// needs at least four.
pub fn preprocess(values: &[f64], dt: f64, fringes: usize, opts: &ProcessingOptions) -> Result<ProcessedTrace> {
    opts.validate()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("trace contains non-finite values".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let mut out: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let spread = out.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if spread <= 1e-12 * mean.abs() || spread == 0.0 {
        // a constant input leaves only rounding residue
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    if opts.is_windowed() {
        if fringes < MIN_WINDOWED_FRINGES {
            return Err(Error::Precondition(format!(
                "windowing needs at least {MIN_WINDOWED_FRINGES} fringes (trace spans {fringes})"
            )));
        }
        let len = ((opts.window_fraction * n as f64).round() as usize).min(n);
        if len < 4 {
            return Err(Error::Precondition("window shorter than 4 samples".into()));
        }
        let w = window(opts.window, len);
        let start = (n - len) / 2;
        for (k, v) in out.iter_mut().enumerate() {
            *v *= if k >= start && k < start + len { w[k - start] } else { 0.0 };
        }
    }
    Ok(ProcessedTrace {
        dt,
        values: out,
        windowed: opts.is_windowed(),
    })
}

pub fn preprocess_trace(trace: &RamseyTrace, opts: &ProcessingOptions) -> Result<ProcessedTrace> {
    preprocess(&trace.filled(), trace.dt(), trace.metadata.fringes, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Spectrum {
    pub frequency_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        if self.frequency_hz.len() > 1 {
            self.frequency_hz[1] - self.frequency_hz[0]
        } else {
            0.0
        }
    }

    /// Index of the first local minimum, i.e. the end of the zero-frequency lobe.
    pub fn dc_lobe_end(&self) -> usize {
        let s = &self.magnitude;
        if s.len() < 2 || s[0] <= s[1] {
            return 0;
        }
        let mut k = 0;
        while k + 1 < s.len() && s[k + 1] < s[k] {
            k += 1;
        }
        k
    }

    /// Largest strictly local maximum beyond the zero-frequency lobe.
    pub fn main_peak(&self) -> Option<usize> {
        let s = &self.magnitude;
        let start = self.dc_lobe_end() + 1;
        (start.max(1)..s.len().saturating_sub(1))
            .filter(|&k| s[k] > s[k - 1] && s[k] > s[k + 1])
            .max_by(|&a, &b| s[a].total_cmp(&s[b]).then(b.cmp(&a)))
    }

    /// Largest local maximum other than `peak`, relative to the peak height.
    pub fn highest_side_lobe(&self, peak: usize) -> f64 {
        let s = &self.magnitude;
        let start = self.dc_lobe_end() + 1;
        let side = (start.max(1)..s.len().saturating_sub(1))
            .filter(|&k| k != peak && s[k] > s[k - 1] && s[k] > s[k + 1])
            .map(|k| s[k])
            .fold(0.0, f64::max);
        side / s[peak]
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("frequency_Hz,magnitude\n");
        for (f, m) in self.frequency_hz.iter().zip(&self.magnitude) {
            out.push_str(&format!("{f},{m}\n"));
        }
        out
    }
}

/// Zero-padded magnitude spectrum over non-negative frequencies.
pub fn spectrum(trace: &ProcessedTrace, pad_factor: usize) -> Spectrum {
    let n = trace.values.len();
    let m = n * pad_factor.max(1);
    let mut buf: Vec<Complex64> = trace
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(m)
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let df = 1.0 / (m as f64 * trace.dt);
    let half = m / 2;
    Spectrum {
        frequency_hz: (0..=half).map(|k| k as f64 * df).collect(),
        magnitude: buf[..=half].iter().map(|c| c.norm()).collect(),
    }
}

/// Frequency (Hz) of the dominant tone in a processed trace.
pub fn estimate_frequency(trace: &ProcessedTrace, opts: &ProcessingOptions) -> Result<(f64, Spectrum)> {
    opts.validate()?;
    if trace.values.len() < 8 {
        return Err(Error::Precondition(format!(
            "trace has {} samples, at least 8 are needed",
            trace.values.len()
        )));
    }
    let spec = spectrum(trace, opts.pad_factor);
    let k = spec.main_peak().ok_or_else(|| {
        Error::NoPeak("spectrum has no local maximum beyond the zero-frequency lobe".into())
    })?;
    let s = &spec.magnitude;
    let mut pos = k as f64;
    if opts.interpolate && s[k - 1] > 0.0 && s[k + 1] > 0.0 {
        let (a, b, c) = (s[k - 1].ln(), s[k].ln(), s[k + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            pos += 0.5 * (a - c) / denom;
        }
    }
    Ok((pos * spec.bin_width(), spec))
}

/// Half a padded bin for a trace of `len` samples spaced `dt`, in Hz.
pub fn half_padded_bin(len: usize, dt: f64, pad_factor: usize) -> f64 {
    0.5 / (len as f64 * pad_factor.max(1) as f64 * dt)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// Iteration index m, starting at 1.
    pub iteration: usize,
    /// Ω̄⁽ᵐ⁾, rad/s: mean over per-repeat estimates.
    pub estimate: f64,
    /// Std over per-repeat estimates, rad/s.
    pub uncertainty: f64,
    pub processed: bool,
    pub fringes: usize,
    /// Prior Ω̄⁽ᵐ⁻¹⁾ the sequence was built for, rad/s.
    pub prior: f64,
    /// Same traces without windowing, rad/s.
    pub unprocessed_estimate: Option<f64>,
    pub unprocessed_uncertainty: Option<f64>,
    /// Per-repeat estimates, Hz.
    pub repeat_estimates_hz: Vec<f64>,
    pub unprocessed_repeat_estimates_hz: Vec<f64>,
    /// Repeats whose spectrum had no usable peak.
    pub failed_repeats: usize,
    pub padded_bin_hz: f64,
    pub converged: bool,
    pub spectrum: Spectrum,
}

impl EstimateRecord {
    pub fn estimate_hz(&self) -> f64 {
        self.estimate / TAU
    }

    pub fn uncertainty_hz(&self) -> f64 {
        self.uncertainty / TAU
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Per-repeat estimates; fails with NoPeak unless at least half succeed.
fn repeat_estimates(trace: &RamseyTrace, opts: &ProcessingOptions) -> Result<(Vec<f64>, usize)> {
    let dt = trace.dt();
    let results: Vec<Result<f64>> = trace
        .shots
        .par_iter()
        .map(|shot| {
            let p = preprocess(shot, dt, trace.metadata.fringes, opts)?;
            estimate_frequency(&p, opts).map(|r| r.0)
        })
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(f) => ok.push(f),
            Err(e) if e.is_no_peak() => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if ok.len() * 2 < trace.shots.len() || ok.is_empty() {
        return Err(Error::NoPeak(format!(
            "{failed} of {} repeats show no spectral peak",
            trace.shots.len()
        )));
    }
    Ok((ok, failed))
}

/// Estimate Ω₀ from one trace with the given processing.
///
/// The unprocessed estimate is computed alongside; it is left empty when it
/// finds no peak.
pub fn estimate_trace(trace: &RamseyTrace, opts: &ProcessingOptions, iteration: usize, prior: f64) -> Result<EstimateRecord> {
    let (main, failed) = repeat_estimates(trace, opts)?;
    let (mean, std) = mean_std(&main);
    let mean_trace = preprocess_trace(trace, opts)?;
    // the averaged trace can lack a peak even when most repeats show one
    let spectrum = match estimate_frequency(&mean_trace, opts) {
        Ok((_, s)) => s,
        Err(_) => spectrum(&mean_trace, opts.pad_factor),
    };
    let raw_opts = opts.unprocessed();
    let (raw, raw_est, raw_std) = if opts.is_windowed() {
        match repeat_estimates(trace, &raw_opts) {
            Ok((v, _)) => {
                let (m, s) = mean_std(&v);
                (v, Some(TAU * m), Some(TAU * s))
            }
            Err(_) => (Vec::new(), None, None),
        }
    } else {
        (main.clone(), Some(TAU * mean), Some(TAU * std))
    };
    Ok(EstimateRecord {
        iteration,
        estimate: TAU * mean,
        uncertainty: TAU * std,
        processed: opts.is_windowed(),
        fringes: trace.metadata.fringes,
        prior,
        unprocessed_estimate: raw_est,
        unprocessed_uncertainty: raw_std,
        repeat_estimates_hz: main,
        unprocessed_repeat_estimates_hz: raw,
        failed_repeats: failed,
        padded_bin_hz: 2.0 * half_padded_bin(trace.len(), trace.dt(), opts.pad_factor),
        converged: false,
        spectrum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IasSettings {
    pub max_iter: usize,
    /// Fringes per trace for m ≥ 2.
    pub fringes: usize,
    /// Fringes of the unprocessed bootstrap trace at m = 1.
    pub bootstrap_fringes: usize,
    pub processing: ProcessingOptions,
    /// Convergence threshold in Hz; half a padded bin when absent.
    pub threshold_hz: Option<f64>,
    pub stop_on_convergence: bool,
}

impl Default for IasSettings {
    fn default() -> Self {
        Self {
            max_iter: 8,
            fringes: 4,
            bootstrap_fringes: 2,
            processing: ProcessingOptions::default(),
            threshold_hz: None,
            stop_on_convergence: true,
        }
    }
}

impl IasSettings {
    pub fn validate(&self) -> Result<()> {
        self.processing.validate()?;
        if self.fringes < 2 || self.bootstrap_fringes < 2 {
            return Err(Error::config("fringe counts must be at least 2"));
        }
        if self.threshold_hz.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::config("convergence threshold must be positive"));
        }
        Ok(())
    }

    fn options_for(&self, iteration: usize) -> ProcessingOptions {
        if iteration == 1 {
            self.processing.unprocessed()
        } else {
            self.processing
        }
    }
}

/// Largest relative prior error the loop is specified for.
pub const CAPTURE_RANGE: f64 = 0.2;

/// Ramsey configuration of iteration `m` for prior `prior`.
pub fn iteration_config(template: &RamseyConfig, settings: &IasSettings, iteration: usize, prior: f64) -> RamseyConfig {
    RamseyConfig {
        fringes: if iteration == 1 {
            settings.bootstrap_fringes
        } else {
            settings.fringes
        },
        prior,
        ..template.clone()
    }
}

/// Iterative adaptive spectroscopy.
///
/// Iteration 1 measures an unwindowed two-fringe trace; later iterations use
/// `settings.fringes` with full processing. Every iteration rebuilds the grid,
/// the edge duration and the correction coefficients from the previous
/// estimate. `on_iteration` sees each record with its trace as it is produced.
pub fn ias_run_with(
    initial_prior: f64,
    template: &RamseyConfig,
    settings: &IasSettings,
    seed: u64,
    mut on_iteration: impl FnMut(&EstimateRecord, &RamseyTrace) -> Result<()>,
) -> Result<Vec<EstimateRecord>> {
    settings.validate()?;
    let mut first = template.clone();
    first.prior = initial_prior;
    first.validate()?;
    let truth = template.system.omega0;
    if (initial_prior - truth).abs() > CAPTURE_RANGE * truth {
        return Err(Error::Precondition(format!(
            "prior {:.3} kHz is outside the ±{:.0}% capture range around {:.3} kHz",
            initial_prior / TAU / 1e3,
            CAPTURE_RANGE * 100.0,
            truth / TAU / 1e3
        )));
    }
    let mut records: Vec<EstimateRecord> = Vec::new();
    let mut prior = initial_prior;
    for m in 1..=settings.max_iter {
        let step = || -> Result<(EstimateRecord, RamseyTrace)> {
            let config = iteration_config(template, settings, m, prior);
            let trace = ramsey::acquire_trace(&config, seed::derive(seed, &[TAG_ITERATION, m as u64]))?;
            let rec = estimate_trace(&trace, &settings.options_for(m), m, prior)?;
            Ok((rec, trace))
        };
        let (mut rec, trace) = match step() {
            Ok(v) => v,
            Err(e) => {
                return Err(Error::IasRun {
                    iteration: m,
                    partial: records,
                    source: Box::new(e),
                })
            }
        };
        let threshold = settings.threshold_hz.unwrap_or(0.5 * rec.padded_bin_hz);
        rec.converged = m > 1 && (rec.estimate - prior).abs() / TAU < threshold;
        if let Err(e) = on_iteration(&rec, &trace) {
            return Err(Error::IasRun {
                iteration: m,
                partial: records,
                source: Box::new(e),
            });
        }
        prior = rec.estimate;
        let done = rec.converged && settings.stop_on_convergence;
        records.push(rec);
        if done {
            break;
        }
    }
    Ok(records)
}

pub fn ias_run(
    initial_prior: f64,
    template: &RamseyConfig,
    settings: &IasSettings,
    seed: u64,
) -> Result<Vec<EstimateRecord>> {
    ias_run_with(initial_prior, template, settings, seed, |_, _| Ok(()))
}

/// Conventional Ramsey estimate: an unprocessed two-fringe trace at a fixed prior.
pub fn standard_ramsey(prior: f64, template: &RamseyConfig, processing: &ProcessingOptions, seed: u64) -> Result<EstimateRecord> {
    let config = RamseyConfig {
        fringes: 2,
        prior,
        ..template.clone()
    };
    let trace = ramsey::acquire_trace(&config, seed::derive(seed, &[TAG_STANDARD]))?;
    estimate_trace(&trace, &processing.unprocessed(), 1, prior)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fringes: usize,
    pub unprocessed_hz: Option<f64>,
    pub unprocessed_std_hz: Option<f64>,
    pub processed_hz: Option<f64>,
    pub processed_std_hz: Option<f64>,
    pub padded_bin_hz: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "n,f_unprocessed_Hz,f_unprocessed_std_Hz,f_processed_Hz,f_processed_std_Hz,padded_bin_Hz,error\n"
    }

    pub fn csv_line(&self) -> String {
        let o = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        format!(
            "{},{},{},{},{},{},{}\n",
            self.fringes,
            o(self.unprocessed_hz),
            o(self.unprocessed_std_hz),
            o(self.processed_hz),
            o(self.processed_std_hz),
            o(self.padded_bin_hz),
            self.error.as_deref().unwrap_or("").replace(',', ";")
        )
    }
}

/// Estimates after `iterations` IAS steps for each fringe count.
///
/// Counts below the windowing minimum run the loop unprocessed; their
/// processed column records the precondition error instead.
pub fn fringe_sweep(
    initial_prior: f64,
    template: &RamseyConfig,
    n_values: &[usize],
    iterations: usize,
    settings: &IasSettings,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::config("fringe list is empty"));
    }
    if let Some(bad) = n_values.iter().find(|&&n| !(2..=64).contains(&n)) {
        return Err(Error::config(format!("fringe count {bad} outside [2, 64]")));
    }
    if iterations == 0 {
        return Err(Error::config("fringe sweep needs at least one iteration"));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for (idx, &n) in n_values.iter().enumerate() {
        let windowed_ok = !settings.processing.is_windowed() || n >= MIN_WINDOWED_FRINGES;
        let s = IasSettings {
            max_iter: iterations,
            fringes: n,
            stop_on_convergence: false,
            processing: if windowed_ok {
                settings.processing
            } else {
                settings.processing.unprocessed()
            },
            ..*settings
        };
        let row_seed = seed::derive(seed, &[n as u64, idx as u64]);
        let row = match ias_run(initial_prior, template, &s, row_seed) {
            Ok(recs) => {
                let last = recs.last().expect("at least one iteration");
                let hz = |v: Option<f64>| v.map(|x| x / TAU);
                let processed = windowed_ok && last.processed;
                SweepRow {
                    fringes: n,
                    unprocessed_hz: hz(last.unprocessed_estimate),
                    unprocessed_std_hz: hz(last.unprocessed_uncertainty),
                    processed_hz: processed.then(|| last.estimate_hz()),
                    processed_std_hz: processed.then(|| last.uncertainty_hz()),
                    padded_bin_hz: Some(last.padded_bin_hz),
                    error: (!windowed_ok).then(|| {
                        format!("windowing needs at least {MIN_WINDOWED_FRINGES} fringes")
                    }),
                }
            }
            Err(e) => SweepRow {
                fringes: n,
                unprocessed_hz: None,
                unprocessed_std_hz: None,
                processed_hz: None,
                processed_std_hz: None,
                padded_bin_hz: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, dt: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n).map(|k| (TAU * f * k as f64 * dt + phase).cos()).collect()
    }

    #[test]
    fn unwindowed_preprocess_subtracts_mean() {
        let v = vec![1.0, 2.0, 3.0, 6.0];
        let p = preprocess(&v, 1.0, 2, &ProcessingOptions::default().unprocessed()).unwrap();
        assert_eq!(p.values, vec![-2.0, -1.0, 0.0, 3.0]);
    }

    #[test]
    fn windowing_needs_four_fringes() {
        let v = tone(1.0, 0.1, 21, 0.0);
        assert!(matches!(
            preprocess(&v, 0.1, 2, &ProcessingOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hann_window_halves_the_span() {
        // 4 fringes at 10 samples each
        let w = window(WindowKind::Hann, 41);
        let span = effective_span(&w);
        assert!((span - 20.0).abs() <= 1.0, "{span}");
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_period_tone_unwindowed() {
        // 41 samples: the last one completes the fourth period
        let f0 = 42.65e3;
        let dt = 1.0 / (10.0 * f0);
        let v = tone(f0, dt, 41, 0.0);
        let opts = ProcessingOptions::default().unprocessed();
        let p = preprocess(&v, dt, 4, &opts).unwrap();
        let (f, s) = estimate_frequency(&p, &opts).unwrap();
        assert!((f - f0).abs() < 0.5 * s.bin_width(), "{f}");
    }

    #[test]
    fn constant_trace_has_no_peak() {
        let v = vec![0.37; 41];
        let opts = ProcessingOptions::default();
        let p = preprocess(&v, 1e-6, 4, &opts).unwrap();
        assert!(matches!(estimate_frequency(&p, &opts), Err(Error::NoPeak(_))));
    }

    #[test]
    fn short_trace_is_rejected() {
        let opts = ProcessingOptions::default().unprocessed();
        let p = preprocess(&[1.0, 0.0, 1.0, 0.0], 1.0, 2, &opts).unwrap();
        assert!(matches!(estimate_frequency(&p, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn dc_lobe_skip_starts_at_zero_for_rising_spectrum() {
        let s = Spectrum {
            frequency_hz: (0..6).map(f64::from).collect(),
            magnitude: vec![0.1, 0.5, 1.0, 0.4, 0.2, 0.3],
        };
        assert_eq!(s.dc_lobe_end(), 0);
        assert_eq!(s.main_peak(), Some(2));
        let s = Spectrum {
            frequency_hz: (0..6).map(f64::from).collect(),
            magnitude: vec![3.0, 2.0, 0.5, 1.0, 0.2, 0.3],
        };
        assert_eq!(s.dc_lobe_end(), 2);
        assert_eq!(s.main_peak(), Some(3));
    }

    #[test]
    fn spectrum_csv_header() {
        let s = Spectrum {
            frequency_hz: vec![0.0, 1.0],
            magnitude: vec![2.0, 3.0],
        };
        assert_eq!(s.to_csv_string(), "frequency_Hz,magnitude\n0,2\n1,3\n");
    }
}
