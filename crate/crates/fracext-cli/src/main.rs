//! Command line driver for convergence studies of the spectral fractional
//! diffusion solver.
//!
//! The driver builds a [`StudyConfig`] from flags and an optional key=value
//! configuration file, runs the refinement study, and prints the per-level
//! convergence table as CSV on standard output. When sample points are given
//! their per-level trace values are printed as a second CSV block.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use fracext::params::DomainSpec;
use fracext::study::{
    run_convergence_study, CoefChoice, DomainChoice, SourceChoice, StudyConfig,
};
use fracext::Vec2;

/// Convergence-study driver for the extension-based fractional diffusion
/// solver.
#[derive(Debug, Parser)]
#[command(
    name = "fracext",
    version,
    about = "Runs a mesh-refinement study for (-div(A grad))^beta u + s u = f \
             on the plane and reports energies, errors, and observed orders as CSV."
)]
struct Cli {
    /// Configuration file with `key=value` lines (same keys as the long
    /// flags, `#` starts a comment); explicit flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Fractional power, in (0, 1).
    #[arg(long, value_name = "BETA")]
    beta: Option<f64>,

    /// Reaction coefficient, positive (default 1).
    #[arg(long, value_name = "S")]
    s: Option<f64>,

    /// Geometric grading factor of the extended-variable grid, in (0, 1)
    /// (default 0.5).
    #[arg(long, value_name = "SIGMA")]
    sigma: Option<f64>,

    /// Finest refinement level; levels 0..=LEVELS are run (default 4).
    #[arg(long, value_name = "LEVELS")]
    levels: Option<usize>,

    /// Diffusion coefficient: `const` for the identity, `radial` for the
    /// bundled radially varying field (default const).
    #[arg(long, value_name = "KIND")]
    coef: Option<String>,

    /// Source term: `bump` for the smooth bump (1-|x|^2)^2, `hat` for the
    /// radial hat |x|(1-|x|), both supported on the unit disk (default bump).
    #[arg(long, value_name = "KIND")]
    source: Option<String>,

    /// Domain: `square:SIDE` for the axis-aligned square [-SIDE/2, SIDE/2]^2,
    /// or the path of a vertex file with one `x y` pair per line describing a
    /// star-shaped polygon (default square:4).
    #[arg(long, value_name = "SPEC")]
    domain: Option<String>,

    /// Also write the convergence CSV to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Fix the extended-variable polynomial degree (and layer count) instead
    /// of using the level-dependent selection rule.
    #[arg(long, value_name = "P")]
    p_override: Option<usize>,

    /// Fix the extended-variable truncation height instead of using the
    /// mesh-dependent selection rule.
    #[arg(long = "Y-override", value_name = "Y")]
    y_override: Option<f64>,

    /// File with one `x y` sample point per line; traces at these points are
    /// reported for every level.
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

/// Flat option set shared by the flag parser and the configuration file.
#[derive(Debug, Default)]
struct Settings {
    beta: Option<f64>,
    s: Option<f64>,
    sigma: Option<f64>,
    levels: Option<usize>,
    coef: Option<String>,
    source: Option<String>,
    domain: Option<String>,
    out: Option<PathBuf>,
    p_override: Option<usize>,
    y_override: Option<f64>,
    samples: Option<PathBuf>,
}

impl Settings {
    fn from_cli(cli: Cli) -> Settings {
        Settings {
            beta: cli.beta,
            s: cli.s,
            sigma: cli.sigma,
            levels: cli.levels,
            coef: cli.coef,
            source: cli.source,
            domain: cli.domain,
            out: cli.out,
            p_override: cli.p_override,
            y_override: cli.y_override,
            samples: cli.samples,
        }
    }

    /// Fills every unset field from `fallback`.
    fn or(self, fallback: Settings) -> Settings {
        Settings {
            beta: self.beta.or(fallback.beta),
            s: self.s.or(fallback.s),
            sigma: self.sigma.or(fallback.sigma),
            levels: self.levels.or(fallback.levels),
            coef: self.coef.or(fallback.coef),
            source: self.source.or(fallback.source),
            domain: self.domain.or(fallback.domain),
            out: self.out.or(fallback.out),
            p_override: self.p_override.or(fallback.p_override),
            y_override: self.y_override.or(fallback.y_override),
            samples: self.samples.or(fallback.samples),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("config key `{key}`: cannot parse value `{value}`"))
}

/// Parses a `key=value` configuration file. Keys match the long flags.
fn read_config_file(path: &Path) -> Result<Settings, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut out = Settings::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", idx + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "beta" => out.beta = Some(parse_value(key, value)?),
            "s" => out.s = Some(parse_value(key, value)?),
            "sigma" => out.sigma = Some(parse_value(key, value)?),
            "levels" => out.levels = Some(parse_value(key, value)?),
            "coef" => out.coef = Some(value.to_string()),
            "source" => out.source = Some(value.to_string()),
            "domain" => out.domain = Some(value.to_string()),
            "out" => out.out = Some(PathBuf::from(value)),
            "p-override" => out.p_override = Some(parse_value(key, value)?),
            "Y-override" => out.y_override = Some(parse_value(key, value)?),
            "samples" => out.samples = Some(PathBuf::from(value)),
            other => return Err(format!("config line {}: unknown key `{other}`", idx + 1)),
        }
    }
    Ok(out)
}

/// Parses a file with one `x y` point per line (blank lines and `#` comments
/// allowed).
fn read_point_file(path: &Path) -> Result<Vec<Vec2>, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read point file {}: {e}", path.display()))?;
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<f64, String> {
            tok.and_then(|t| t.parse().ok())
                .ok_or_else(|| format!("{}:{}: expected `x y`", path.display(), idx + 1))
        };
        let x = parse(parts.next())?;
        let y = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(format!("{}:{}: expected `x y`", path.display(), idx + 1));
        }
        points.push(Vec2::new(x, y));
    }
    if points.is_empty() {
        return Err(format!("point file {} has no points", path.display()));
    }
    Ok(points)
}

fn parse_domain(spec: &str) -> Result<DomainChoice, String> {
    if let Some(side) = spec.strip_prefix("square:") {
        let side: f64 = side
            .parse()
            .map_err(|_| format!("domain `{spec}`: cannot parse side length"))?;
        if !(side.is_finite() && side > 0.0) {
            return Err(format!("domain `{spec}`: side must be positive"));
        }
        return Ok(DomainChoice::Square { side });
    }
    let domain = DomainSpec::from_vertex_file(Path::new(spec))
        .map_err(|e| format!("domain file {spec}: {e}"))?;
    Ok(DomainChoice::Polygon { vertices: domain.vertices })
}

fn build_config(settings: Settings) -> Result<StudyConfig, String> {
    let beta = settings
        .beta
        .ok_or("missing `beta` (set --beta or a config file entry)")?;
    let s = settings.s.unwrap_or(1.0);
    let mut config = StudyConfig::new(beta, s);
    if let Some(sigma) = settings.sigma {
        config.sigma = sigma;
    }
    if let Some(levels) = settings.levels {
        config.max_level = levels;
    }
    if let Some(coef) = &settings.coef {
        config.coefficient = match coef.as_str() {
            "const" => CoefChoice::Identity,
            "radial" => CoefChoice::RadialVariable,
            other => return Err(format!("unknown coefficient `{other}` (const|radial)")),
        };
    }
    if let Some(source) = &settings.source {
        config.source = match source.as_str() {
            "bump" => SourceChoice::Bump,
            "hat" => SourceChoice::RadialHat,
            other => return Err(format!("unknown source `{other}` (bump|hat)")),
        };
    }
    if let Some(domain) = &settings.domain {
        config.domain = parse_domain(domain)?;
    }
    config.p_override = settings.p_override;
    config.y_override = settings.y_override;
    config.output = settings.out;
    if let Some(path) = &settings.samples {
        config.samples = read_point_file(path)?;
    }
    Ok(config)
}

/// Renders the per-level trace values at the configured sample points as a
/// CSV block with one row per sample point.
fn render_samples(config: &StudyConfig, values: &[Vec<f64>]) -> String {
    let mut out = String::from("x,y");
    for level in 0..values.len() {
        let _ = write!(out, ",level{level}");
    }
    out.push('\n');
    for (k, p) in config.samples.iter().enumerate() {
        let _ = write!(out, "{:.15e},{:.15e}", p.x, p.y);
        for level_vals in values {
            let _ = write!(out, ",{:.15e}", level_vals[k]);
        }
        out.push('\n');
    }
    out
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    let file_settings = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => Settings::default(),
    };
    let settings = Settings::from_cli(cli).or(file_settings);
    let config = build_config(settings)?;
    let output = run_convergence_study(&config).map_err(|e| e.to_string())?;
    print!("{}", output.csv);
    if !config.samples.is_empty() {
        println!();
        print!("{}", render_samples(&config, &output.sample_values));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
