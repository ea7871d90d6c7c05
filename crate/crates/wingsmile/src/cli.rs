//! Argument handling and the five subcommands.
//!
//! Besides `--config`, `--out` and `--format`, every config value can be set
//! from the command line by its dotted name: `--model.sigma 0.3`,
//! `--grid.n_points=17` or `--set mc.seed=7`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, Model, RunConfig};
use crate::error::CliError;
use crate::svg::{Plot, Series, Style};
use crate::table::{self, CompareRow};

#[derive(Parser, Debug)]
#[command(name = "wingsmile", version, about = "Small-strike implied volatility for models with an atom at zero")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mass at zero of the CEV model and its incomplete-gamma arguments
    Mass(Common),
    /// Wing approximations on the grid (exact smile too for CEV models)
    Smile(Common),
    /// Approximations against the CEV oracle and, with [mc], simulation
    Compare(Common),
    /// Monte Carlo smile on the grid
    Mc(Common),
    /// Two-sided bounds on the grid
    Bounds(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output file (default: output.path, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or svg (default: output.format)
    #[arg(long)]
    format: Option<String>,
    /// Extra `section.key=value` override
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Pulls `--section.key[=value]` flags out of `args`; clap sees the rest.
fn split_overrides(args: Vec<OsString>) -> Result<(Vec<OsString>, Vec<String>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let dotted = a.to_str().and_then(|s| s.strip_prefix("--")).filter(|s| {
            let key = s.split('=').next().unwrap_or("");
            key.contains('.') && !key.starts_with('.')
        });
        match dotted {
            Some(s) if s.contains('=') => overrides.push(s.to_owned()),
            Some(s) => {
                let key = s.to_owned();
                let value = it
                    .next()
                    .and_then(|v| v.into_string().ok())
                    .ok_or_else(|| CliError::Config(format!("--{key} needs a value")))?;
                overrides.push(format!("{key}={value}"));
            }
            None => rest.push(a),
        }
    }
    Ok((rest, overrides))
}

fn normalized(t: f64, k: f64, v: Option<f64>) -> Option<(f64, f64)> {
    v.map(|v| (k, v * t.sqrt() / k.abs()))
}

fn smile_plot(title: &str, t: f64, rows: &[CompareRow]) -> Plot {
    type Pick = fn(&CompareRow) -> Option<f64>;
    let columns: [(&str, Style, Pick); 7] = [
        ("exact", Style::Line, |r| r.exact_iv),
        ("three-term (m_T)", Style::Line, |r| r.three_term_atom),
        ("three-term (G)", Style::Dashed, |r| r.three_term_g),
        ("DMHJ", Style::Dashed, |r| r.dmhj),
        ("leading", Style::Dashed, |r| r.leading),
        ("upper bound", Style::Dashed, |r| r.upper),
        ("Monte Carlo", Style::Markers, |r| r.mc_iv),
    ];
    let series = columns
        .iter()
        .filter_map(|(name, style, pick)| {
            let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| normalized(t, r.k, pick(r))).collect();
            (!pts.is_empty()).then(|| Series::new(name, *style, pts))
        })
        .collect();
    Plot { title: title.to_owned(), x_label: "log-moneyness k".into(), y_label: "I(k) sqrt(T) / |k|".into(), series }
}

struct Output {
    bytes: Vec<u8>,
}

type Handler = fn(&RunConfig, Format) -> Result<Output, CliError>;

fn need_csv(format: Format, what: &str) -> Result<(), CliError> {
    match format {
        Format::Csv => Ok(()),
        Format::Svg => Err(CliError::Config(format!("`{what}` has no SVG output; use --format csv"))),
    }
}

fn maturity(model: &Model) -> f64 {
    match model {
        Model::Cev(d) => d.params().t(),
        Model::Atom { t, .. } => *t,
    }
}

fn cmd_mass(cfg: &RunConfig, format: Format) -> Result<Output, CliError> {
    need_csv(format, "mass")?;
    let p = cfg.cev_params()?;
    let mut bytes = Vec::new();
    table::write_mass(&mut bytes, &p)?;
    Ok(Output { bytes })
}

fn smile_table(cfg: &RunConfig, with_mc: bool) -> Result<(Vec<CompareRow>, f64), CliError> {
    let grid = cfg.grid()?.points();
    let model = cfg.model()?;
    let view = table::cev_view(&model)?;
    let ctx = table::context(&model, &view)?;
    let mut rows = table::compare_rows(&ctx, &grid, cfg.bounds_config())?;
    if with_mc {
        if let Some(mc) = cfg.mc_config()? {
            let (sample, est) = table::mc_estimates(&cfg.cev_params()?, &mc, &grid)?;
            let (f, se) = sample.absorbed_fraction();
            eprintln!("absorbed fraction {f:.6} (se {se:.6}) over {} paths", sample.len());
            table::attach_mc(&mut rows, &est);
        }
    }
    Ok((rows, maturity(&model)))
}

fn cmd_smile(cfg: &RunConfig, format: Format) -> Result<Output, CliError> {
    let (rows, t) = smile_table(cfg, false)?;
    render_compare("Left-wing smile approximations", rows, t, format)
}

fn cmd_compare(cfg: &RunConfig, format: Format) -> Result<Output, CliError> {
    if !matches!(cfg.model()?, Model::Cev(_)) {
        return Err(CliError::Config("`compare` needs a CEV model for its oracle".into()));
    }
    let (rows, t) = smile_table(cfg, true)?;
    render_compare("Approximations against the CEV oracle", rows, t, format)
}

fn render_compare(title: &str, rows: Vec<CompareRow>, t: f64, format: Format) -> Result<Output, CliError> {
    let mut bytes = Vec::new();
    match format {
        Format::Csv => table::write_compare(&mut bytes, &rows)?,
        Format::Svg => bytes.extend(smile_plot(title, t, &rows).render().into_bytes()),
    }
    Ok(Output { bytes })
}

fn cmd_mc(cfg: &RunConfig, format: Format) -> Result<Output, CliError> {
    let p = cfg.cev_params()?;
    let mc = cfg.mc_config()?.ok_or_else(|| CliError::Config("`mc` needs an [mc] section".into()))?;
    let grid = cfg.grid()?.points();
    let (sample, est) = table::mc_estimates(&p, &mc, &grid)?;
    let (f, se) = sample.absorbed_fraction();
    eprintln!(
        "absorbed fraction {f:.6} (se {se:.6}) over {} paths; analytic m_T {:.6}",
        sample.len(),
        wingsmile_core::cev::mass_at_zero(&p).value()
    );
    let mut bytes = Vec::new();
    match format {
        Format::Csv => table::write_mc(&mut bytes, p.t(), &est)?,
        Format::Svg => {
            let pts = est.iter().filter_map(|e| e.normalized_iv.map(|v| (e.k, v))).collect();
            let plot = Plot {
                title: "Monte Carlo normalized smile".into(),
                x_label: "log-moneyness k".into(),
                y_label: "I(k) sqrt(T) / |k|".into(),
                series: vec![Series::new("Monte Carlo", Style::Markers, pts)],
            };
            bytes.extend(plot.render().into_bytes());
        }
    }
    Ok(Output { bytes })
}

fn cmd_bounds(cfg: &RunConfig, format: Format) -> Result<Output, CliError> {
    let grid = cfg.grid()?.points();
    let model = cfg.model()?;
    let view = table::cev_view(&model)?;
    let ctx = table::context(&model, &view)?;
    let rows = table::bounds_rows(&ctx, &grid, cfg.bounds_config())?;
    if let Some(r) = rows.iter().find(|r| r.lower.is_none()) {
        if let Some(k) = r.lower_min_k {
            eprintln!("lower bound undefined at k = {}; defined for k <= {k:.4}", r.k);
        }
    }
    let mut bytes = Vec::new();
    match format {
        Format::Csv => table::write_bounds(&mut bytes, &rows)?,
        Format::Svg => {
            let t = maturity(&model);
            let pick = |f: fn(&table::BoundsRow) -> Option<f64>| -> Vec<(f64, f64)> {
                rows.iter().filter_map(|r| normalized(t, r.k, f(r))).collect()
            };
            let mut series = vec![
                Series::new("lower", Style::Dashed, pick(|r| r.lower)),
                Series::new("upper", Style::Dashed, pick(|r| r.upper)),
            ];
            let exact = pick(|r| r.exact_iv);
            if !exact.is_empty() {
                series.push(Series::new("exact", Style::Line, exact));
            }
            let plot = Plot {
                title: "Two-sided bounds".into(),
                x_label: "log-moneyness k".into(),
                y_label: "I(k) sqrt(T) / |k|".into(),
                series,
            };
            bytes.extend(plot.render().into_bytes());
        }
    }
    Ok(Output { bytes })
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match run_inner(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("wingsmile: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(args: Vec<OsString>) -> Result<(), CliError> {
    let (rest, mut overrides) = split_overrides(args)?;
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            if code == 0 {
                return Ok(());
            }
            return Err(CliError::Config("invalid command line".into()));
        }
    };
    let (common, run): (Common, Handler) = match cli.command {
        Command::Mass(c) => (c, cmd_mass),
        Command::Smile(c) => (c, cmd_smile),
        Command::Compare(c) => (c, cmd_compare),
        Command::Mc(c) => (c, cmd_mc),
        Command::Bounds(c) => (c, cmd_bounds),
    };
    overrides.extend(common.set.iter().cloned());
    let cfg = RunConfig::load(&common.config, &overrides)?;
    let format = match &common.format {
        Some(f) => f.parse()?,
        None => cfg.output.format,
    };
    let out = run(&cfg, format)?;
    match common.out.as_ref().or(cfg.output.path.as_ref()) {
        Some(path) => std::fs::write(path, &out.bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&out.bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}
