//! Command line flags, the optional TOML config file, and the merged
//! settings. Flags override the file; the file overrides built-in defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use depkde_core::dependence::{AutocorrSpec, LagWindow};
use depkde_core::experiment::{SamplerKind, StudyConfig, StudyMethod};
use depkde_core::pairs::Diagonal;
use depkde_core::samplers::{MixtureComponent, TargetDistribution};
use depkde_core::selectors::Method;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "depkde",
    version,
    about = "Bandwidth selection for kernel density estimates of MCMC output"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a bandwidth for one series.
    Select(SelectArgs),
    /// Run a replicated simulation study.
    Study(StudyArgs),
    /// Write a density estimate on a grid.
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dist {
    Normal,
    Mixture,
    Lognormal,
    /// Target read from --target-file.
    #[value(name = "custom-file")]
    CustomFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Iid,
    Mh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagMode {
    Adaptive,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalMode {
    Include,
    Exclude,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: depkde_core::Error| e.to_string())
}

fn parse_study_method(s: &str) -> Result<StudyMethod, String> {
    s.parse().map_err(|e: depkde_core::Error| e.to_string())
}

/// Where the draws come from: a file, or a generated sample.
#[derive(Debug, Clone, Default, Args)]
pub struct SampleArgs {
    /// Series file: one value per line or a single-column CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dist: Option<Dist>,
    /// TOML description of the target for --dist custom-file.
    #[arg(long)]
    pub target_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sampler: Option<Sampler>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Points in the density grid (ISE grid for studies, output grid for curves).
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_enum)]
    pub zeta_lag_mode: Option<LagMode>,
    #[arg(long, value_enum)]
    pub diagonal: Option<DiagonalMode>,
    /// TOML file of defaults; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub thin_k: Option<usize>,
    /// Comma-separated: Target, Thin and any selector name.
    #[arg(long, alias = "method", value_delimiter = ',', value_parser = parse_study_method)]
    pub methods: Option<Vec<StudyMethod>>,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_parser = parse_method, conflicts_with = "h")]
    pub method: Option<Method>,
    /// Fixed bandwidth; skips selection.
    #[arg(long)]
    pub h: Option<f64>,
    /// Add the kernel IAT at each grid point as a column.
    #[arg(long)]
    pub iat: bool,
}

/// Keys accepted in a config file, spelled like the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub dist: Option<Dist>,
    pub target_file: Option<PathBuf>,
    pub sampler: Option<Sampler>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub grid_points: Option<usize>,
    pub zeta_lag_mode: Option<LagMode>,
    pub diagonal: Option<DiagonalMode>,
    pub replicates: Option<usize>,
    pub thin_k: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub method: Option<String>,
    pub h: Option<f64>,
    pub iat: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    fn method(&self) -> CliResult<Option<Method>> {
        self.method
            .as_deref()
            .map(parse_method)
            .transpose()
            .map_err(CliError::config)
    }

    fn methods(&self) -> CliResult<Option<Vec<StudyMethod>>> {
        self.methods
            .as_ref()
            .map(|ms| {
                ms.iter()
                    .map(|m| parse_study_method(m))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
            .map_err(CliError::config)
    }
}

/// Target description for --dist custom-file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Normal { mean: f64, sd: f64 },
    Mixture { components: Vec<ComponentSpec> },
    Lognormal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl TargetSpec {
    pub fn load(path: &Path) -> CliResult<TargetDistribution> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let spec: TargetSpec =
            toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        spec.build()
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn build(&self) -> depkde_core::Result<TargetDistribution> {
        match self {
            TargetSpec::Normal { mean, sd } => TargetDistribution::normal(*mean, *sd),
            TargetSpec::Mixture { components } => TargetDistribution::mixture(
                components
                    .iter()
                    .map(|c| MixtureComponent {
                        weight: c.weight,
                        mean: c.mean,
                        sd: c.sd,
                    })
                    .collect(),
            ),
            TargetSpec::Lognormal { mu, sigma } => TargetDistribution::log_normal(*mu, *sigma),
        }
    }
}

/// Flags merged over the config file and defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub dist: Dist,
    pub target_file: Option<PathBuf>,
    pub sampler: Sampler,
    pub n: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub grid_points: usize,
    pub zeta_lag_mode: LagMode,
    pub diagonal: DiagonalMode,
    pub replicates: usize,
    pub thin_k: usize,
    pub methods: Vec<StudyMethod>,
    pub method: Option<Method>,
    pub h: Option<f64>,
    pub iat: bool,
}

impl Settings {
    fn merge(sample: &SampleArgs, common: &CommonArgs) -> CliResult<(Self, FileConfig)> {
        let file = match &common.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let settings = Settings {
            input: sample.input.clone().or(file.input.clone()),
            dist: sample.dist.or(file.dist).unwrap_or(Dist::Normal),
            target_file: sample.target_file.clone().or(file.target_file.clone()),
            sampler: sample.sampler.or(file.sampler).unwrap_or(Sampler::Mh),
            n: sample.n.or(file.n).unwrap_or(10_000),
            seed: sample.seed.or(file.seed).unwrap_or(1),
            out: common.out.clone().or(file.out.clone()),
            format: common.format.or(file.format).unwrap_or(Format::Csv),
            grid_points: common
                .grid_points
                .or(file.grid_points)
                .unwrap_or(depkde_core::density::DEFAULT_GRID_POINTS),
            zeta_lag_mode: common
                .zeta_lag_mode
                .or(file.zeta_lag_mode)
                .unwrap_or(LagMode::Adaptive),
            diagonal: common.diagonal.or(file.diagonal).unwrap_or(DiagonalMode::Include),
            replicates: file.replicates.unwrap_or(50),
            thin_k: file.thin_k.unwrap_or(5),
            methods: file.methods()?.unwrap_or_else(StudyMethod::all),
            method: file.method()?,
            h: file.h,
            iat: file.iat.unwrap_or(false),
        };
        Ok((settings, file))
    }

    pub fn for_select(args: &SelectArgs) -> CliResult<Self> {
        let (mut s, _) = Self::merge(&args.sample, &args.common)?;
        s.method = args.method.or(s.method);
        if s.method.is_none() {
            return Err(CliError::config("select needs --method"));
        }
        s.check()?;
        Ok(s)
    }

    pub fn for_study(args: &StudyArgs) -> CliResult<Self> {
        let (mut s, _) = Self::merge(&args.sample, &args.common)?;
        s.replicates = args.replicates.unwrap_or(s.replicates);
        s.thin_k = args.thin_k.unwrap_or(s.thin_k);
        if let Some(m) = &args.methods {
            s.methods = m.clone();
        }
        if s.input.is_some() {
            return Err(CliError::config(
                "study draws its own samples; --input is not accepted",
            ));
        }
        s.check()?;
        s.study_config()?.validate().map_err(CliError::config)?;
        Ok(s)
    }

    pub fn for_curve(args: &CurveArgs) -> CliResult<Self> {
        let (mut s, file) = Self::merge(&args.sample, &args.common)?;
        // a flag of either kind replaces both settings from the file
        if args.h.is_some() || args.method.is_some() {
            s.h = args.h;
            s.method = args.method;
        }
        s.iat = args.iat || s.iat;
        if s.h.is_some() && s.method.is_some() {
            return Err(CliError::config("give either h or method, not both"));
        }
        if s.h.is_none() && s.method.is_none() {
            return Err(CliError::config("curve needs --h or --method"));
        }
        if let Some(h) = s.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::config(format!("--h must be positive, got {h}")));
            }
        }
        let _ = file;
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> CliResult<()> {
        if self.dist == Dist::CustomFile && self.target_file.is_none() && self.input.is_none() {
            return Err(CliError::config("--dist custom-file needs --target-file"));
        }
        if self.grid_points < 2 {
            return Err(CliError::config("--grid-points must be at least 2"));
        }
        if self.n < 2 {
            return Err(CliError::config("--n must be at least 2"));
        }
        Ok(())
    }

    pub fn target(&self) -> CliResult<TargetDistribution> {
        Ok(match self.dist {
            Dist::Normal => TargetDistribution::study_normal(),
            Dist::Mixture => TargetDistribution::study_mixture(),
            Dist::Lognormal => TargetDistribution::study_log_normal(),
            Dist::CustomFile => {
                let path = self
                    .target_file
                    .as_ref()
                    .ok_or_else(|| CliError::config("--dist custom-file needs --target-file"))?;
                TargetSpec::load(path)?
            }
        })
    }

    pub fn sampler_kind(&self) -> SamplerKind {
        match self.sampler {
            Sampler::Iid => SamplerKind::Iid,
            Sampler::Mh => SamplerKind::Mh,
        }
    }

    pub fn autocorr_spec(&self) -> AutocorrSpec {
        AutocorrSpec {
            max_lag: match self.zeta_lag_mode {
                LagMode::Adaptive => LagWindow::Adaptive,
                LagMode::Full => LagWindow::Full,
            },
            ..AutocorrSpec::default()
        }
    }

    pub fn diagonal(&self) -> Diagonal {
        match self.diagonal {
            DiagonalMode::Include => Diagonal::Include,
            DiagonalMode::Exclude => Diagonal::Exclude,
        }
    }

    pub fn study_config(&self) -> CliResult<StudyConfig> {
        Ok(StudyConfig {
            n: self.n,
            replicates: self.replicates,
            methods: self.methods.clone(),
            thin_k: self.thin_k,
            seed: self.seed,
            grid_points: self.grid_points,
            zeta_spec: self.autocorr_spec(),
            diagonal: self.diagonal(),
            ..StudyConfig::full_scale(self.target()?, self.sampler_kind())
        })
    }

    /// `key=value` pairs written as comment lines at the top of outputs.
    pub fn echo(&self, command: &str) -> Vec<(String, String)> {
        let mut out = vec![
            ("depkde".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("command".to_string(), command.to_string()),
        ];
        let mut push = |k: &str, v: &dyn fmt::Display| out.push((k.to_string(), v.to_string()));
        match &self.input {
            Some(p) => push("input", &p.display()),
            None => {
                push(
                    "dist",
                    &self.dist.to_possible_value().unwrap().get_name().to_string(),
                );
                if let Some(t) = &self.target_file {
                    push("target-file", &t.display());
                }
                push("sampler", &self.sampler_kind().name());
                push("n", &self.n);
                push("seed", &self.seed);
            }
        }
        match command {
            "study" => {
                push("replicates", &self.replicates);
                push("thin-k", &self.thin_k);
                let names: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
                push("methods", &names.join(","));
                push("grid-points", &self.grid_points);
            }
            "select" => push("method", &self.method.map_or("", |m| m.name())),
            _ => {
                match (self.h, self.method) {
                    (Some(h), _) => push("h", &h),
                    (None, Some(m)) => push("method", &m.name()),
                    _ => {}
                }
                push("grid-points", &self.grid_points);
            }
        }
        push(
            "zeta-lag-mode",
            &self
                .zeta_lag_mode
                .to_possible_value()
                .unwrap()
                .get_name()
                .to_string(),
        );
        push(
            "diagonal",
            &self.diagonal.to_possible_value().unwrap().get_name().to_string(),
        );
        out
    }
}
