//! `dingstab`: relative Ding stability of toric Fano varieties from polytope data.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use dingstab::catalog::{self, CatalogEntry};
use dingstab::destabilizer::{energy_report, optimal_destabilizer, verify_balancing, Precision, Solver, SolverOptions};
use dingstab::error::{Error, Result};
use dingstab::function::PlConvexFunction;
use dingstab::geodesic::{mabuchi_interior_samples, mabuchi_residual, slope_convergence, QuadratureConfig, DEFAULT_T_GRID};
use dingstab::geometry::{structure_report, FanoPair};
use dingstab::invariants::{ding_via_lct, invariant_report};
use dingstab::io::{self, Format};
use dingstab::moments::moment_table;
use dingstab::rational::{format_rational, to_f64};
use dingstab::stability::{classify, Classification};

/// Mabuchi residuals above this fail `mabuchi-check`.
const MABUCHI_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(name = "dingstab", version, about = "Relative Ding stability of toric Fano varieties")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Solver tolerance on the residual and coefficient change.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, global = true, value_enum, default_value_t = SolverArg::Both)]
    solver: SolverArg,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Seed for the randomised balancing check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Comma-separated times for `slope` (default 1,2,5,10,20,50).
    #[arg(long, global = true, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Std)]
    precision: PrecisionArg,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SolverArg {
    Newton,
    Fixedpoint,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Json,
    Table,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PrecisionArg {
    Std,
    High,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a pair and report its structure.
    Analyze {
        /// Polytope JSON file or catalog label.
        poly: String,
        /// Include the degree-2 moment table of the moment polytope.
        #[arg(long)]
        dump_moments: bool,
    },
    /// Optimal destabilizer, infimum of the Ding energy and the balancing check.
    Destabilize {
        poly: String,
        /// Random convex functions used by the balancing check.
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Ding and Donaldson-Futaki invariants of a toric test configuration.
    Invariant {
        poly: String,
        /// Convex PL function as a JSON file or inline JSON.
        #[arg(long)]
        g: String,
    },
    /// Asymptotic slope of the Ding functional along the geodesic ray of `g`.
    Slope {
        poly: String,
        #[arg(long)]
        g: String,
    },
    /// Residual of the closed-form Mabuchi potential on P^2 blown up at a point.
    MabuchiCheck {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Minimal distance of the sample points from the boundary.
        #[arg(long, default_value_t = 0.02)]
        margin: f64,
        /// Added to the additive constant of the potential.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift: f64,
    },
    /// Built-in examples.
    Catalog {
        #[arg(long, conflicts_with_all = ["run", "export"])]
        list: bool,
        /// Entry label, or `all`.
        #[arg(long)]
        run: Option<String>,
        /// Print the polytope JSON of an entry.
        #[arg(long)]
        export: Option<String>,
    },
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidInput(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("--max-iter must be positive".into()));
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(Error::InvalidInput("--t-grid entries must be positive".into()));
            }
        }
        Ok(())
    }

    fn solver(&self) -> Solver {
        match self.solver {
            SolverArg::Newton => Solver::Newton,
            SolverArg::Fixedpoint => Solver::FixedPoint,
            SolverArg::Both => Solver::Both,
        }
    }

    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            precision: match self.precision {
                PrecisionArg::Std => Precision::Standard,
                PrecisionArg::High => Precision::High,
            },
            init: None,
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Json => Format::Json,
            FormatArg::Table => Format::Table,
            FormatArg::Csv => Format::Csv,
        }
    }
}

fn read_file(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))
}

/// A file path wins over a catalog label of the same name.
fn load_pair(arg: &str) -> Result<FanoPair> {
    if Path::new(arg).is_file() {
        return io::parse_polytope(&read_file(arg)?).map_err(|e| with_source(arg, e));
    }
    match catalog::entry(arg) {
        Ok(e) => Ok(e.pair),
        Err(_) => Err(Error::InvalidInput(format!("{arg}: no such file or catalog label"))),
    }
}

fn load_pl(arg: &str, dim: usize) -> Result<PlConvexFunction> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return io::parse_pl(arg, dim);
    }
    io::parse_pl(&read_file(arg)?, dim).map_err(|e| with_source(arg, e))
}

fn with_source(path: &str, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{path}: {m}")),
        Error::Json(j) => Error::InvalidInput(format!("{path}: {j}")),
        other => other,
    }
}

fn analyze(pair: &FanoPair, dump_moments: bool) -> Result<Value> {
    let report = classify(pair)?;
    let mut out = match io::stability_to_json(&report) {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    out.insert("structure".into(), io::structure_to_json(&structure_report(pair)));
    if dump_moments {
        out.insert("moments".into(), io::moments_to_json(&moment_table(&pair.delta, 2)));
    }
    Ok(Value::Object(out))
}

fn destabilize(pair: &FanoPair, cfg: &RunConfig, samples: usize) -> Result<Value> {
    let run = optimal_destabilizer(pair, cfg.solver(), &cfg.options())?;
    let energy = energy_report(pair, &run.primary)?;
    let balancing = verify_balancing(pair, &run.primary, samples, cfg.seed, cfg.tol.max(1e-10))?;
    Ok(io::destabilize_to_json(&run, &energy, &balancing))
}

fn invariant(pair: &FanoPair, g: &PlConvexFunction) -> Result<Value> {
    let report = invariant_report(pair, g)?;
    let lct = ding_via_lct(pair, g, None, None)?;
    if lct.ding != report.ding {
        return Err(Error::Consistency(format!(
            "lct route gives {} but the direct integral gives {}",
            format_rational(&lct.ding),
            format_rational(&report.ding)
        )));
    }
    Ok(io::invariant_to_json(&report, Some(&lct)))
}

fn slope(pair: &FanoPair, g: &PlConvexFunction, cfg: &RunConfig) -> Result<Value> {
    let grid = cfg.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
    let report = slope_convergence(pair, g, &grid, &QuadratureConfig::default())?;
    let mut v = serde_json::to_value(&report)?;
    let obj = v.as_object_mut().expect("report serialises to an object");
    // per-t samples become the CSV rows
    let rows = obj.remove("samples").unwrap_or(Value::Null);
    obj.insert("rows".into(), rows);
    Ok(v)
}

fn mabuchi(samples: usize, margin: f64, shift: f64) -> Result<(Value, bool)> {
    if samples == 0 || !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidInput("need at least one sample and a margin in (0, 1/2)".into()));
    }
    let pts = mabuchi_interior_samples(samples, margin);
    let check = mabuchi_residual(2, &pts, shift)?;
    let passed = check.max_residual <= MABUCHI_TOL && check.ode_max_residual <= MABUCHI_TOL;
    let rows: Vec<Value> = check
        .samples
        .iter()
        .zip(&check.residuals)
        .map(|(y, r)| json!({"y1": y[0], "y2": y[1], "residual": r}))
        .collect();
    let v = json!({
        "shift": shift,
        "tolerance": MABUCHI_TOL,
        "max_residual": check.max_residual,
        "ode_max_residual": check.ode_max_residual,
        "ricci": check.ricci,
        "passed": passed,
        "rows": rows,
    });
    Ok((v, passed))
}

fn classification_name(c: Option<Classification>) -> Value {
    c.map_or(Value::Null, |c| json!(c.as_str()))
}

/// One catalog entry checked against its expected data. Returns the row and whether it matched.
fn run_entry(entry: &CatalogEntry, cfg: &RunConfig) -> Result<(Map<String, Value>, bool)> {
    let pair = &entry.pair;
    let exp = &entry.expected;
    let report = classify(pair)?;
    let structure = structure_report(pair);
    let mut ok = true;
    let mut row = Map::new();
    row.insert("label".into(), json!(entry.label));
    row.insert("dim".into(), json!(pair.dim()));
    row.insert("classification".into(), json!(report.classification.as_str()));
    row.insert("expected_classification".into(), classification_name(exp.classification));
    ok &= exp.classification.map_or(true, |c| c == report.classification);
    row.insert("delta".into(), json!(format_rational(&report.ricci.min_value)));
    row.insert("smooth".into(), json!(structure.smooth));
    row.insert("expected_smooth".into(), json!(exp.smooth));
    ok &= exp.smooth.map_or(true, |s| s == structure.smooth);
    if let Some(l) = &exp.ricci {
        ok &= *l == report.ricci.l;
    }

    let mut energy = Value::Null;
    let mut destabilizer_error = Value::Null;
    if report.classification == Classification::Unstable {
        let run = optimal_destabilizer(pair, cfg.solver(), &cfg.options())?;
        let e = energy_report(pair, &run.primary)?;
        energy = json!(e.energy_infimum);
        if let Some(d) = &exp.destabilizer {
            let err = run
                .primary
                .h
                .coeffs
                .iter()
                .zip(&d.coeffs)
                .map(|(c, x)| (to_f64(c) - x).abs())
                .fold(0.0, f64::max);
            destabilizer_error = json!(err);
            ok &= err <= d.tol;
        }
        if let Some(x) = &exp.energy_infimum {
            ok &= (e.energy_infimum - x.value).abs() <= x.tol.max(1e-12);
        }
    } else if let Some(x) = &exp.energy_infimum {
        let run = optimal_destabilizer(pair, cfg.solver(), &cfg.options())?;
        let e = energy_report(pair, &run.primary)?;
        energy = json!(e.energy_infimum);
        ok &= (e.energy_infimum - x.value).abs() <= x.tol.max(1e-12);
    }
    row.insert("energy_infimum".into(), energy);
    row.insert("expected_energy_infimum".into(), exp.energy_infimum.as_ref().map_or(Value::Null, |x| json!(x.value)));
    row.insert("destabilizer_error".into(), destabilizer_error);

    // the duality question is reported, not asserted
    match &exp.dual_label {
        Some(d) => {
            let dual = catalog::entry(&format!("reflexive2d/{d}"))?;
            let dual_class = classify(&dual.pair)?.classification;
            row.insert("dual_label".into(), json!(d));
            row.insert("dual_classification".into(), json!(dual_class.as_str()));
            row.insert("same_as_dual".into(), json!(dual_class == report.classification));
        }
        None => {
            row.insert("dual_label".into(), Value::Null);
            row.insert("dual_classification".into(), Value::Null);
            row.insert("same_as_dual".into(), Value::Null);
        }
    }
    row.insert("matches_expected".into(), json!(ok));
    Ok((row, ok))
}

fn catalog_run(which: &str, cfg: &RunConfig) -> Result<(Value, i32)> {
    let labels = if which == "all" { catalog::labels() } else { vec![which.to_string()] };
    let entries: Vec<CatalogEntry> = labels.iter().map(|l| catalog::entry(l)).collect::<Result<_>>()?;
    // par_iter keeps the input order on collect
    let results: Vec<Result<(Map<String, Value>, bool)>> = entries.par_iter().map(|e| run_entry(e, cfg)).collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut code = 0;
    for (label, r) in labels.iter().zip(results) {
        match r {
            Ok((row, ok)) => {
                if !ok && code == 0 {
                    code = 3;
                }
                rows.push(Value::Object(row));
            }
            Err(e) => {
                if code == 0 || code == 3 {
                    code = e.exit_code();
                }
                rows.push(json!({"label": label, "error": e.to_string(), "matches_expected": false}));
            }
        }
    }
    let matched = rows.iter().filter(|r| r["matches_expected"] == json!(true)).count();
    Ok((json!({"entries": rows.len(), "matched": matched, "rows": rows}), code))
}

/// Runs a parsed command; the exit code is non-zero when a check fails after output was produced.
fn dispatch(cli: &Cli) -> Result<(Value, i32)> {
    let cfg = &cli.run;
    cfg.validate()?;
    match &cli.command {
        Command::Analyze { poly, dump_moments } => Ok((analyze(&load_pair(poly)?, *dump_moments)?, 0)),
        Command::Destabilize { poly, samples } => Ok((destabilize(&load_pair(poly)?, cfg, *samples)?, 0)),
        Command::Invariant { poly, g } => {
            let pair = load_pair(poly)?;
            let g = load_pl(g, pair.dim())?;
            Ok((invariant(&pair, &g)?, 0))
        }
        Command::Slope { poly, g } => {
            let pair = load_pair(poly)?;
            let g = load_pl(g, pair.dim())?;
            Ok((slope(&pair, &g, cfg)?, 0))
        }
        Command::MabuchiCheck { samples, margin, shift } => {
            let (v, passed) = mabuchi(*samples, *margin, *shift)?;
            Ok((v, if passed { 0 } else { 3 }))
        }
        Command::Catalog { list, run, export } => {
            if let Some(label) = export {
                return Ok((io::polytope_to_json(&catalog::entry(label)?.pair), 0));
            }
            if let Some(which) = run {
                return catalog_run(which, cfg);
            }
            if *list {
                let rows: Vec<Value> = catalog::labels().into_iter().map(|l| json!({ "label": l })).collect();
                return Ok((json!({ "rows": rows }), 0));
            }
            Err(Error::InvalidInput("catalog needs one of --list, --run or --export".into()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok((value, code)) => {
            let text = io::render(&value, cli.run.format());
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            if code != 0 {
                eprintln!("error: check failed (exit {code})");
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn defaults_and_global_flags() {
        let cli = Cli::try_parse_from(["dingstab", "slope", "P2", "--g", "{}", "--t-grid", "1,3", "--precision", "high"]).unwrap();
        assert_eq!(cli.run.tol, 1e-12);
        assert_eq!(cli.run.max_iter, 200);
        assert_eq!(cli.run.seed, 0);
        assert_eq!(cli.run.solver(), Solver::Both);
        assert_eq!(cli.run.options().precision, Precision::High);
        assert_eq!(cli.run.t_grid.as_deref(), Some(&[1.0, 3.0][..]));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let cli = Cli::try_parse_from(["dingstab", "--t-grid", "1,-2", "analyze", "P2"]).unwrap();
        assert_eq!(cli.run.validate().unwrap_err().exit_code(), 1);
        let cli = Cli::try_parse_from(["dingstab", "--max-iter", "0", "analyze", "P2"]).unwrap();
        assert!(cli.run.validate().is_err());
    }

    #[test]
    fn catalog_labels_resolve_without_files() {
        assert_eq!(load_pair("reflexive2d/9").unwrap().dim(), 2);
        assert_eq!(load_pair("nowhere/at/all").unwrap_err().exit_code(), 1);
    }
}
