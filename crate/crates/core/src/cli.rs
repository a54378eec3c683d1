//! Command-line front end of the `ias` binary.
//!
//! Exit codes: 0 on success, 1 for parse, configuration and other input
//! errors, 2 for fit failures, 3 when the estimator finds no spectral peak.
//! Runs that fail after producing output keep what they wrote and list it in
//! the manifest.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimator::{self, EstimateRecord, SweepRow};
use crate::model::{self, FitOptions, SpectroscopyData};
use crate::pulse::{self, PulseWaveform};
use crate::ramsey::{self, RamseyTrace};
use crate::scenario::{self, OutputWriter, Scenario};
use crate::sensing::{self, Distribution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FIT: i32 = 2;
pub const EXIT_NO_PEAK: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ias", version, about = "Ramsey simulation and iterative adaptive spectroscopy")]
pub struct Cli {
    /// Master seed; overrides the scenario's.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the scenario's.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Repeats per grid point; overrides the scenario's.
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the avoided-crossing model to spectroscopy CSV data.
    FitSpectrum(FitArgs),
    /// Run the adaptive loop and emit per-iteration records, traces and spectra.
    RunIas(ScenarioArgs),
    /// Final IAS estimates as a function of the fringe count.
    FringeSweep(SweepArgs),
    /// Baseline/perturbed sensing experiment with charge conversion.
    Sense(ScenarioArgs),
    /// Dump the voltage and detuning waveform of one sequence.
    ShowPulse(PulseArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with columns voltage_V,frequency_Hz[,branch].
    pub input: PathBuf,
    /// Scenario whose tuning section is the initial guess.
    #[arg(long)]
    pub guess: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    pub scenario: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    /// Fringe counts, comma separated; the scenario's sweep list when absent.
    #[arg(long = "n", value_delimiter = ',', num_args = 0..)]
    pub n: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct PulseArgs {
    pub scenario: PathBuf,
    /// Plateau length in seconds; one fringe at the prior when absent.
    #[arg(long)]
    pub t_w: Option<f64>,
    /// Samples over the whole sequence.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::UnderDetermined(_) | Error::FitNotConverged { .. } => EXIT_FIT,
        Error::NoPeak(_) => EXIT_NO_PEAK,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::FitSpectrum(a) => fit_spectrum(cli, a),
        Command::RunIas(a) => run_ias(cli, &a.scenario),
        Command::FringeSweep(a) => fringe_sweep(cli, a),
        Command::Sense(a) => sense(cli, &a.scenario),
        Command::ShowPulse(a) => show_pulse(cli, a),
    }
}

/// Loads the scenario, applies the global overrides and validates it.
pub fn load_scenario(cli: &Cli, path: &Path) -> Result<Scenario> {
    let mut s = Scenario::from_path(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(r) = cli.repeats {
        s.system.repeats = r;
    }
    if let Some(out) = &cli.out {
        s.out_dir = Some(out.clone());
    }
    s.validate()?;
    Ok(s)
}

fn out_dir(cli: &Cli, scenario: Option<&Scenario>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| scenario.and_then(|s| s.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Finishes the manifest; a failed body is recorded there and returned.
fn finalize(writer: OutputWriter, command: &str, scenario: &Scenario, body: Result<()>) -> Result<()> {
    let hash = scenario.hash()?;
    let outcome = body.as_ref().err().map(|e| (exit_code(e), e.to_string()));
    writer.finish(command, &scenario.name, &hash, scenario.seed, outcome)?;
    body
}

fn fit_spectrum(cli: &Cli, args: &FitArgs) -> Result<()> {
    let data = SpectroscopyData::from_csv_path(&args.input)?;
    let guess = match &args.guess {
        Some(p) => Scenario::from_path(p)?.tuning_model(),
        None => model::reference_tuning(),
    };
    let input_hash = scenario::sha256_hex(&std::fs::read(&args.input)?);
    let mut writer = OutputWriter::create(&out_dir(cli, None))?;
    let body = match model::fit_avoided_crossing(&data, &guess, &FitOptions::default()) {
        Ok(fit) => writer.write_json("fit.json", &fit),
        Err(Error::FitNotConverged { iterations, rms_hz, best }) => {
            writer.write_json("fit.json", &best)?;
            Err(Error::FitNotConverged { iterations, rms_hz, best })
        }
        Err(e) => Err(e),
    };
    let outcome = body.as_ref().err().map(|e| (exit_code(e), e.to_string()));
    let name = args.input.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
    writer.finish("fit-spectrum", &name, &input_hash, cli.seed.unwrap_or(0), outcome)?;
    body
}

fn estimates_header() -> &'static str {
    "m,prior_Hz,estimate_Hz,uncertainty_Hz,unprocessed_Hz,unprocessed_std_Hz,fringes,processed,padded_bin_Hz,failed_repeats,converged\n"
}

fn estimate_line(r: &EstimateRecord) -> String {
    let o = |v: Option<f64>| v.map_or(String::new(), |x| (x / TAU).to_string());
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        r.iteration,
        r.prior / TAU,
        r.estimate_hz(),
        r.uncertainty_hz(),
        o(r.unprocessed_estimate),
        o(r.unprocessed_uncertainty),
        r.fringes,
        r.processed,
        r.padded_bin_hz,
        r.failed_repeats,
        r.converged
    )
}

fn write_iteration(w: &mut OutputWriter, prefix: &str, rec: &EstimateRecord, trace: &RamseyTrace) -> Result<()> {
    let m = rec.iteration;
    w.write(&format!("{prefix}trace_m{m}.csv"), trace.to_csv_string())?;
    w.write(&format!("{prefix}trace_m{m}.json"), trace.metadata_json()? + "\n")?;
    w.write(&format!("{prefix}spectrum_m{m}.csv"), rec.spectrum.to_csv_string())?;
    Ok(())
}

fn run_ias(cli: &Cli, path: &Path) -> Result<()> {
    let s = load_scenario(cli, path)?;
    let template = s.ramsey_config()?;
    let settings = s.ias_settings();
    let mut writer = OutputWriter::create(&out_dir(cli, Some(&s)))?;
    let mut lines = String::from(estimates_header());
    let result = estimator::ias_run_with(template.prior, &template, &settings, s.seed, |rec, trace| {
        write_iteration(&mut writer, "", rec, trace)?;
        lines.push_str(&estimate_line(rec));
        writer.write("estimates.csv", &lines)
    });
    let body = match result {
        Ok(records) => {
            if records.is_empty() {
                Ok(())
            } else {
                writer.write_json("records.json", &records)
            }
        }
        Err(e) => {
            if let Error::IasRun { partial, .. } = &e {
                if !partial.is_empty() {
                    writer.write_json("records.json", partial)?;
                }
            }
            Err(e)
        }
    };
    finalize(writer, "run-ias", &s, body)
}

fn fringe_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let s = load_scenario(cli, &args.scenario)?;
    let (n, iterations) = match (&args.n, &s.sweep) {
        (Some(n), sec) => (n.clone(), sec.as_ref().map_or(4, |x| x.iterations)),
        (None, Some(sec)) => (sec.fringes.clone(), sec.iterations),
        (None, None) => return Err(Error::config("no fringe list given and the scenario has no [sweep] section")),
    };
    scenario::validate_fringe_list(&n)?;
    let template = s.ramsey_config()?;
    let settings = s.ias_settings();
    let mut writer = OutputWriter::create(&out_dir(cli, Some(&s)))?;
    let body = estimator::fringe_sweep(template.prior, &template, &n, iterations, &settings, s.seed).and_then(|rows| {
        let mut csv = String::from(SweepRow::csv_header());
        for r in &rows {
            csv.push_str(&r.csv_line());
        }
        writer.write("sweep.csv", csv)?;
        writer.write_json("sweep.json", &rows)
    });
    finalize(writer, "fringe-sweep", &s, body)
}

fn distribution_lines(out: &mut String, phase: &str, method: &str, d: &Distribution) {
    for (i, f) in d.estimates.iter().enumerate() {
        let _ = writeln!(out, "{phase},{method},{i},{f}");
    }
}

fn sense(cli: &Cli, path: &Path) -> Result<()> {
    let s = load_scenario(cli, path)?;
    let scen = s
        .perturbation_scenario()
        .ok_or_else(|| Error::config("scenario has no [perturbation] section"))?;
    let template = s.ramsey_config()?;
    let mut writer = OutputWriter::create(&out_dir(cli, Some(&s)))?;
    let body = sensing::run_perturbation_experiment(&scen, &template, &s.charge, s.seed).and_then(|rep| {
        let mut hist = String::from("phase,method,repeat,estimate_Hz\n");
        distribution_lines(&mut hist, "baseline", "ias", &rep.baseline);
        distribution_lines(&mut hist, "perturbed", "ias", &rep.perturbed);
        distribution_lines(&mut hist, "baseline", "n2", &rep.baseline_n2);
        distribution_lines(&mut hist, "perturbed", "n2", &rep.perturbed_n2);
        writer.write("distributions.csv", hist)?;
        for (phase, recs) in [("baseline", &rep.baseline_records), ("perturbed", &rep.perturbed_records)] {
            let mut csv = String::from(estimates_header());
            for r in recs {
                csv.push_str(&estimate_line(r));
            }
            writer.write(&format!("{phase}_estimates.csv"), csv)?;
        }
        if let Some(sw) = &rep.switching_trace_csv {
            writer.write("switching_trace.csv", sw)?;
        }
        writer.write_json("report.json", &rep)
    });
    finalize(writer, "sense", &s, body)
}

fn show_pulse(cli: &Cli, args: &PulseArgs) -> Result<()> {
    let s = load_scenario(cli, &args.scenario)?;
    if args.samples < 2 {
        return Err(Error::config("at least 2 samples are needed"));
    }
    let config = s.ramsey_config()?;
    let t_w = args.t_w.unwrap_or(TAU / config.prior);
    if !(t_w >= 0.0) {
        return Err(Error::config("plateau length must be non-negative"));
    }
    let mut writer = OutputWriter::create(&out_dir(cli, Some(&s)))?;
    let body = (|| {
        let (base, corrections) = ramsey::resolve_spec(&config)?;
        let mut spec = base;
        spec.tf = spec.ts + t_w;
        spec.tr = spec.tf + (base.tr - base.tf);
        let mut w = PulseWaveform::sample(&spec, &config.tuning, spec.t0, spec.tr, args.samples - 1)?;
        if let Some(f) = &config.pulse.filter {
            w.dc_offset = spec.u_i;
            w = pulse::apply_bandwidth_filter(&w, f);
        }
        writer.write("pulse.csv", w.to_csv_string())?;
        #[derive(serde::Serialize)]
        struct PulseInfo<'a> {
            spec: &'a pulse::RampSpec,
            edge_duration_s: f64,
            edge_fraction_of_half_period: f64,
            corrections: &'a Option<[pulse::CorrectionResult; 2]>,
        }
        writer.write_json(
            "pulse.json",
            &PulseInfo {
                spec: &spec,
                edge_duration_s: spec.edge_duration(),
                edge_fraction_of_half_period: spec.edge_duration() * config.prior / PI,
                corrections: &corrections,
            },
        )
    })();
    finalize(writer, "show-pulse", &s, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_root_cause() {
        let wrapped = Error::IasRun {
            iteration: 2,
            partial: Vec::new(),
            source: Box::new(Error::NoPeak("flat".into())),
        };
        assert_eq!(exit_code(&wrapped), EXIT_NO_PEAK);
        assert_eq!(exit_code(&Error::UnderDetermined("one branch".into())), EXIT_FIT);
        assert_eq!(exit_code(&Error::config("bad")), EXIT_INPUT);
    }

    #[test]
    fn global_overrides_parse_after_the_subcommand() {
        let cli = Cli::try_parse_from(["ias", "fringe-sweep", "s.toml", "--n", "2,4,8", "--seed", "9"]).unwrap();
        assert_eq!(cli.seed, Some(9));
        match cli.command {
            Command::FringeSweep(a) => assert_eq!(a.n, Some(vec![2, 4, 8])),
            other => panic!("{other:?}"),
        }
        assert_eq!(run_from(["ias", "no-such-command"]), EXIT_INPUT);
    }
}
