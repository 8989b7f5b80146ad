//! The `fauxpas` command line: load a scenario, run its variants, and print
//! prediction profiles as a table, CSV, or JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fauxpas_core::oracle::{max_deviation, oracle_quantities};
use fauxpas_core::presets::{preset_names, preset_source};
use fauxpas_core::report::{engine_quantities, QUESTION_MAP};
use fauxpas_core::history::DEFAULT_HISTORY_CAP;
use fauxpas_core::scenario::{check_spec, Observability};
use fauxpas_core::{
    compare_variants, parse_scenario, prediction_profile, HistoryVariant, ModelError, ModelSettings,
    PredictionProfile, ScenarioSpec, SpecError, VariantComparison,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "fauxpas", version, about = "Exact inference for faux pas and intentional insults")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute prediction profiles for a scenario.
    Run(RunArgs),
    /// List bundled scenarios and any scenario files in a directory.
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantSelector {
    Shared,
    Diverging,
    Both,
}

impl VariantSelector {
    pub fn variants(self) -> Vec<HistoryVariant> {
        match self {
            VariantSelector::Shared => vec![HistoryVariant::Shared],
            VariantSelector::Diverging => vec![HistoryVariant::Diverging],
            VariantSelector::Both => HistoryVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Preset name or path to a scenario TOML file.
    #[arg(long, default_value = "curtain")]
    pub scenario: String,
    #[arg(long, value_enum, default_value_t = VariantSelector::Both)]
    pub variant: VariantSelector,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Literal-listener noise.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Speaker choice sharpness.
    #[arg(long)]
    pub rationality: Option<f64>,
    /// Weight on informativeness for the actual speaker.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_info: Option<f64>,
    /// Weight on the listener's evaluative belief for the actual speaker.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_eval: Option<f64>,
    /// Override a listener hypothesis prior, as NAME=PROB; repeatable.
    #[arg(long = "hypothesis-prior", value_name = "NAME=PROB")]
    pub hypothesis_priors: Vec<String>,
    /// Cross-check every quantity against the brute-force oracle.
    #[arg(long)]
    pub oracle: bool,
    /// Reserved; inference is exact and never samples.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Abort when history enumeration exceeds this many histories.
    #[arg(long, default_value_t = DEFAULT_HISTORY_CAP)]
    pub max_histories: usize,
}

/// Overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub rationality: Option<f64>,
    pub theta_info: Option<f64>,
    pub theta_eval: Option<f64>,
    pub hypothesis_priors: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: String,
    pub variant: VariantSelector,
    pub format: Format,
    pub overrides: Overrides,
    pub oracle: bool,
    pub seed: Option<u64>,
    pub max_histories: usize,
}

impl RunConfig {
    pub fn from_args(args: RunArgs) -> Result<Self, CliError> {
        let mut priors = BTreeMap::new();
        for item in &args.hypothesis_priors {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--hypothesis-prior expects NAME=PROB, got `{item}`")))?;
            let p: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("`{value}` is not a number in `{item}`")))?;
            priors.insert(name.trim().to_string(), p);
        }
        Ok(RunConfig {
            scenario: args.scenario,
            variant: args.variant,
            format: args.format,
            overrides: Overrides {
                epsilon: args.epsilon,
                rationality: args.rationality,
                theta_info: args.theta_info,
                theta_eval: args.theta_eval,
                hypothesis_priors: priors,
            },
            oracle: args.oracle,
            seed: args.seed,
            max_histories: args.max_histories,
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("scenario error: {0}")]
    Spec(#[from] SpecError),
    #[error("inference error: {0}")]
    Model(#[from] ModelError),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl From<fauxpas_core::Error> for CliError {
    fn from(e: fauxpas_core::Error) -> Self {
        match e {
            fauxpas_core::Error::Spec(e) => CliError::Spec(e),
            fauxpas_core::Error::Model(e) => CliError::Model(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Usage(_) => 2,
            CliError::Model(ModelError::ZeroPosterior { .. }) => 3,
            CliError::Model(ModelError::ExplosionGuard { .. }) => 4,
            CliError::Model(_) | CliError::Io { .. } => 1,
        }
    }
}

/// Where a scenario came from and what it resolved to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub source: String,
    pub variant: VariantSelector,
    /// Dotted paths that differ from the built-in defaults.
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub max_histories: usize,
    pub scenario: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub quantities: usize,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: EffectiveConfig,
    pub profiles: Vec<PredictionProfile>,
    pub comparison: Option<VariantComparison>,
    pub oracle: Option<OracleCheck>,
    pub questions: BTreeMap<String, String>,
}

pub fn load_scenario(name_or_path: &str) -> Result<(String, ScenarioSpec), CliError> {
    if let Some(text) = preset_source(name_or_path) {
        return Ok((format!("preset:{name_or_path}"), parse_scenario(text)?));
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Spec(SpecError::Invalid {
            path: "--scenario".into(),
            message: format!(
                "`{name_or_path}` is neither a preset ({}) nor an existing file",
                preset_names().join(", ")
            ),
        }));
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((path.display().to_string(), parse_scenario(&text)?))
}

pub fn apply_overrides(spec: &mut ScenarioSpec, o: &Overrides) -> Result<(), CliError> {
    if let Some(e) = o.epsilon {
        spec.epsilon = e;
    }
    if let Some(r) = o.rationality {
        spec.speaker_model.rationality = r;
    }
    if let Some(t) = o.theta_info {
        spec.speaker_model.theta_info = t;
    }
    if let Some(t) = o.theta_eval {
        spec.speaker_model.theta_eval = t;
    }
    for (name, p) in &o.hypothesis_priors {
        let hyp = spec
            .hypotheses
            .iter_mut()
            .find(|h| &h.name == name)
            .ok_or_else(|| {
                CliError::Spec(SpecError::Invalid {
                    path: "--hypothesis-prior".into(),
                    message: format!("no hypothesis named `{name}`"),
                })
            })?;
        hyp.prior = *p;
    }
    check_spec(spec)?;
    Ok(())
}

/// Computes the report for a configuration without formatting it.
pub fn compute(config: &RunConfig) -> Result<Report, CliError> {
    let (source, mut spec) = load_scenario(&config.scenario)?;
    apply_overrides(&mut spec, &config.overrides)?;
    let settings = ModelSettings {
        history_cap: config.max_histories,
        ..ModelSettings::from_spec(&spec)
    };
    let variants = config.variant.variants();
    let (profiles, comparison) = if config.variant == VariantSelector::Both {
        let cmp = compare_variants(&spec, &settings)?;
        (vec![cmp.shared.clone(), cmp.diverging.clone()], Some(cmp))
    } else {
        let p = prediction_profile(&spec, variants[0], &settings)?;
        (vec![p], None)
    };
    let oracle = if config.oracle {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for &v in &variants {
            let engine = engine_quantities(&spec, v, &settings)?;
            let brute = oracle_quantities(&spec, v, &settings);
            count += engine.len();
            worst = worst.max(max_deviation(&engine, &brute));
        }
        Some(OracleCheck {
            quantities: count,
            max_deviation: worst,
        })
    } else {
        None
    };
    Ok(Report {
        config: EffectiveConfig {
            source,
            variant: config.variant,
            overrides: spec.overrides(),
            seed: config.seed,
            max_histories: config.max_histories,
            scenario: spec,
        },
        profiles,
        comparison,
        oracle,
        questions: QUESTION_MAP
            .iter()
            .map(|(q, field)| (q.to_string(), field.to_string()))
            .collect(),
    })
}

/// Computes and formats a report.
pub fn run(config: &RunConfig) -> Result<String, CliError> {
    let report = compute(config)?;
    Ok(match config.format {
        Format::Table => render_table(&report),
        Format::Csv => render_csv(&report),
        Format::Json => render_json(&report),
    })
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn parse_json_report(text: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(text)
}

fn profile_rows(p: &PredictionProfile) -> Vec<(String, String)> {
    let mut rows: Vec<(String, String)> = p
        .fields()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    for (name, mass) in &p.hypothesis_posterior {
        rows.push((format!("hypothesis_posterior.{name}"), mass.to_string()));
    }
    rows.push(("signature".into(), p.signature.to_string()));
    rows
}

fn config_rows(report: &Report) -> Vec<(String, String)> {
    let c = &report.config;
    let s = &c.scenario;
    let mut rows = vec![
        ("scenario".to_string(), s.name.clone()),
        ("source".into(), c.source.clone()),
        ("variant".into(), format!("{:?}", c.variant).to_lowercase()),
        ("epsilon".into(), s.epsilon.to_string()),
        ("horizon".into(), s.horizon.to_string()),
        (
            "observability".into(),
            match s.observability {
                Observability::CoLocated => "co-located",
                Observability::Public => "public",
            }
            .into(),
        ),
        ("priors.ability_high".into(), s.priors.ability_high.to_string()),
        ("priors.perception_good".into(), s.priors.perception_good.to_string()),
        ("priors.modify".into(), s.priors.modify.to_string()),
        ("priors.speaker_arrives_before".into(), s.priors.speaker_arrives_before.to_string()),
        ("priors.modified_looks_good_if_high".into(), s.priors.modified_looks_good_if_high.to_string()),
        ("priors.modified_looks_good_if_low".into(), s.priors.modified_looks_good_if_low.to_string()),
        ("speaker.rationality".into(), s.speaker_model.rationality.to_string()),
        ("speaker.theta_info".into(), s.speaker_model.theta_info.to_string()),
        ("speaker.theta_eval".into(), s.speaker_model.theta_eval.to_string()),
    ];
    for h in &s.hypotheses {
        rows.push((
            format!("hypothesis.{}", h.name),
            format!("theta=({}, {}) prior={}", h.theta_info, h.theta_eval, h.prior),
        ));
    }
    rows.push((
        "overrides".into(),
        if c.overrides.is_empty() {
            "none".into()
        } else {
            c.overrides.join(" ")
        },
    ));
    rows.push(("max_histories".into(), c.max_histories.to_string()));
    rows.push((
        "seed".into(),
        c.seed.map_or("none (exact inference)".into(), |s| format!("{s} (unused)")),
    ));
    rows
}

pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let config = config_rows(report);
    let width = config.iter().map(|r| r.0.len()).max().unwrap_or(0);
    out.push_str("# configuration\n");
    for (k, v) in &config {
        let _ = writeln!(out, "  {k:<width$}  {v}");
    }
    out.push('\n');

    let mut headers: Vec<String> = vec!["field".into()];
    headers.extend(report.profiles.iter().map(|p| p.variant.to_string()));
    let columns: Vec<Vec<(String, String)>> = report.profiles.iter().map(profile_rows).collect();
    if report.comparison.is_some() {
        headers.push("contrast".into());
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, (name, _)) in columns[0].iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(columns.iter().map(|c| c[i].1.clone()));
        if let Some(cmp) = &report.comparison {
            row.push(cmp.contrasts.get(name).map_or(String::new(), |v| v.to_string()));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|j| rows.iter().map(|r| r[j].len()).chain([headers[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (j, cell) in cells.iter().enumerate() {
            if j == 0 {
                let _ = write!(s, "{cell:<w$}", w = widths[j]);
            } else {
                let _ = write!(s, "  {cell:>w$}", w = widths[j]);
            }
        }
        s.trim_end().to_string()
    };
    out.push_str("# prediction profiles\n");
    let _ = writeln!(out, "{}", line(&headers));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for row in &rows {
        let _ = writeln!(out, "{}", line(row));
    }
    out.push('\n');
    for p in &report.profiles {
        if p.is_faux_pas() {
            let _ = writeln!(out, "{}: faux pas (listener hurt, speaker did not expect it)", p.variant);
        } else {
            let _ = writeln!(out, "{}: {}", p.variant, p.signature);
        }
    }
    out.push_str("\n# question mapping\n");
    for (q, field) in &report.questions {
        let _ = writeln!(out, "  {q}  {field}");
    }
    if let Some(o) = &report.oracle {
        let _ = writeln!(
            out,
            "\noracle: {} quantities compared, max abs deviation {:e}",
            o.quantities, o.max_deviation
        );
    }
    out
}

pub fn render_csv(report: &Report) -> String {
    let mut out = String::from("variant,field,value\n");
    let quote = |s: &str| {
        if s.contains([',', '"', '\n']) {
            format!("\"{}\"", s.replace('"', "\"\""))
        } else {
            s.to_string()
        }
    };
    for (k, v) in config_rows(report) {
        let _ = writeln!(out, "config,{},{}", quote(&k), quote(&v));
    }
    for p in &report.profiles {
        for (k, v) in profile_rows(p) {
            let _ = writeln!(out, "{},{},{}", p.variant, k, quote(&v));
        }
    }
    if let Some(cmp) = &report.comparison {
        for (k, v) in &cmp.contrasts {
            let _ = writeln!(out, "contrast,{k},{v}");
        }
    }
    if let Some(o) = &report.oracle {
        let _ = writeln!(out, "oracle,quantities,{}", o.quantities);
        let _ = writeln!(out, "oracle,max_deviation,{}", o.max_deviation);
    }
    out
}

/// Bundled preset names followed by the `.toml` files in `dir`.
pub fn list_scenarios(dir: Option<&Path>) -> Result<Vec<String>, CliError> {
    let mut names: Vec<String> = preset_names().into_iter().map(String::from).collect();
    if let Some(dir) = dir {
        let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut user = Vec::new();
        for entry in entries {
            let path = entry
                .map_err(|source| CliError::Io {
                    path: dir.to_path_buf(),
                    source,
                })?
                .path();
            if path.extension().is_some_and(|e| e == "toml") {
                user.push(path.display().to_string());
            }
        }
        user.sort();
        names.extend(user);
    }
    Ok(names)
}

/// Runs a parsed command line, returning text for stdout.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(args) => run(&RunConfig::from_args(args)?),
        Command::List { dir } => {
            let mut out = String::new();
            for name in list_scenarios(dir.as_deref())? {
                out.push_str(&name);
                out.push('\n');
            }
            Ok(out)
        }
    }
}
