use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;

use depkde_core::density::kde_curve;
use depkde_core::dependence::{ZetaEstimator, DEFAULT_ZETA_POINTS};
use depkde_core::experiment::{replicate_sample, SamplerKind, StudyConfig};
use depkde_core::selectors::{select, Method, SelectorConfig, SelectorResult};
use depkde_core::{EvaluationGrid, Sample};

use crate::config::{Cli, Command, Format, Settings};
use crate::error::{CliError, CliResult};
use crate::input::read_sample;
use crate::report;
use crate::study::run_study_parallel;

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("depkde: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Select(args) => cmd_select(&Settings::for_select(args)?),
        Command::Study(args) => cmd_study(&Settings::for_study(args)?),
        Command::Curve(args) => cmd_curve(&Settings::for_curve(args)?),
    }
}

/// An output file created before any computation, so an unwritable path
/// fails fast. Dropped without `finish`, it removes the file.
struct Output {
    path: PathBuf,
    file: Option<BufWriter<File>>,
}

impl Output {
    fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Some(BufWriter::new(file)),
        })
    }

    fn writer(&mut self) -> &mut BufWriter<File> {
        self.file.as_mut().expect("output already finished")
    }

    fn finish(mut self) -> CliResult<()> {
        let mut file = self.file.take().expect("output already finished");
        file.flush().map_err(|e| self.io_error(e))
    }

    fn io_error(&self, e: io::Error) -> CliError {
        CliError::input(format!("writing {}: {e}", self.path.display()))
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        if self.file.take().is_some() {
            let _ = fs::remove_file(&self.path);
        }
    }
}

fn stdout_error(e: io::Error) -> CliError {
    CliError::input(format!("writing to stdout: {e}"))
}

/// Writes through `f` to `out` if one was opened, else to stdout.
fn emit<F>(out: Option<Output>, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match out {
        Some(mut o) => {
            f(o.writer()).map_err(|e| o.io_error(e))?;
            o.finish()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).and_then(|_| lock.flush()).map_err(stdout_error)
        }
    }
}

fn write_json(w: &mut dyn Write, value: &serde_json::Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

/// The input file, or replicate 0 of a study with the same sample flags.
fn obtain_sample(s: &Settings) -> CliResult<(Sample, SamplerKind)> {
    if let Some(path) = &s.input {
        return Ok((read_sample(path)?, SamplerKind::Mh));
    }
    let cfg = StudyConfig {
        replicates: 1,
        ..s.study_config()?
    };
    let (sample, _) = replicate_sample(&cfg, 0, None).map_err(CliError::method)?;
    Ok((sample, cfg.sampler))
}

fn selector_config(s: &Settings, method: Method, sample: &Sample) -> SelectorConfig {
    SelectorConfig {
        zeta_spec: s.autocorr_spec(),
        diagonal: s.diagonal(),
        ..SelectorConfig::for_sample(method, sample)
    }
}

fn run_select(s: &Settings, method: Method, sample: &Sample) -> CliResult<SelectorResult> {
    select(sample, &selector_config(s, method, sample))
        .map_err(|e| CliError::method(format!("{method}: {e}")))
}

fn open_out(s: &Settings) -> CliResult<Option<Output>> {
    s.out.as_deref().map(Output::create).transpose()
}

fn cmd_select(s: &Settings) -> CliResult<()> {
    let out = open_out(s)?;
    let (sample, _) = obtain_sample(s)?;
    let method = s.method.expect("checked by Settings::for_select");
    let res = run_select(s, method, &sample)?;
    let echo = s.echo("select");
    match s.format {
        Format::Csv => emit(out, |w| report::write_select_csv(w, &echo, sample.len(), &res)),
        Format::Json => emit(out, |w| {
            write_json(w, &report::select_json(&echo, sample.len(), &res))
        }),
    }
}

fn cmd_study(s: &Settings) -> CliResult<()> {
    let cfg = s.study_config()?;
    let echo = s.echo("study");
    let (out, summary_out) = match (&s.out, s.format) {
        (Some(path), Format::Csv) => {
            let out = Output::create(path)?;
            (Some(out), Some(Output::create(&report::summary_path(path))?))
        }
        (Some(path), Format::Json) => (Some(Output::create(path)?), None),
        (None, _) => (None, None),
    };
    let summary = run_study_parallel(&cfg).map_err(CliError::method)?;
    for o in &summary.outcomes {
        for f in &o.failures {
            eprintln!("depkde: replicate {} {}: {}", f.replicate, f.method, f.error);
        }
    }
    if summary.records().next().is_none() {
        return Err(CliError::method("every replicate failed"));
    }
    match s.format {
        Format::Json => emit(out, |w| write_json(w, &report::study_json(&echo, &summary))),
        Format::Csv => match summary_out {
            Some(sum) => {
                emit(out, |w| report::write_records_csv(w, &echo, &summary))?;
                emit(Some(sum), |w| {
                    report::write_summary_csv(w, &echo, &summary)?;
                    report::write_failures(w, &summary)
                })
            }
            // stdout: records, a blank line, then the summary
            None => emit(None, |w| {
                report::write_records_csv(w, &echo, &summary)?;
                writeln!(w)?;
                report::write_summary_csv(w, &[], &summary)?;
                report::write_failures(w, &summary)
            }),
        },
    }
}

fn cmd_curve(s: &Settings) -> CliResult<()> {
    let out = open_out(s)?;
    let (sample, _) = obtain_sample(s)?;
    let h = match (s.h, s.method) {
        (Some(h), _) => h,
        (None, Some(m)) => run_select(s, m, &sample)?.h,
        (None, None) => unreachable!("checked by Settings::for_curve"),
    };
    let grid = EvaluationGrid::for_sample(&sample, h, s.grid_points).map_err(CliError::method)?;
    let density = kde_curve(&sample, h, &grid).map_err(CliError::method)?;
    let iat = if s.iat {
        let mut est = ZetaEstimator::new(&sample, s.autocorr_spec(), DEFAULT_ZETA_POINTS);
        Some(est.estimate(h, &grid).map_err(CliError::method)?.per_point_iat)
    } else {
        None
    };
    let curve = report::Curve {
        h,
        x: grid.points().collect(),
        density,
        iat,
    };
    let echo = s.echo("curve");
    match s.format {
        Format::Csv => emit(out, |w| report::write_curve_csv(w, &echo, &curve)),
        Format::Json => emit(out, |w| write_json(w, &report::curve_json(&echo, &curve))),
    }
}
