//! Batch front-end: one JSON experiment config per run.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure
//! (divergence, lost positivity), 3 verification failure with the report
//! still written.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    c1_bound_check, c1_modulus_report, check_viscosity, default_threshold, discrete_zeros, holder_exponent,
    verify_flux_inequalities, HolderEstimate,
};
use crate::eigen::{principal_eigenvalue, EigenSign};
use crate::error::{Error, Result};
use crate::grid::{DiscreteRadialFunction, Domain, Grading, RadialGrid};
use crate::operators::{validate_hypotheses, OperatorSpec};
use crate::report::{Check, VerificationReport};
use crate::solver::{comparison_oracle, solve_dirichlet, Solution, SolverParams, SourceFunction};

/// Environment variable overriding `seed`.
pub const SEED_ENV: &str = "RDL_SEED";
const MIN_NODES: usize = 16;
const HYPOTHESIS_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Verify,
    Eigen,
    Study,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default)]
    pub grading: Grading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    /// Sign-interval threshold; derived from the solution when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub decades: f64,
    pub slopes: usize,
    pub curvatures: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            threshold: None,
            decades: 1.0,
            slopes: 17,
            curvatures: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenOptions {
    pub sign: EigenSign,
    pub tol: f64,
    pub max_outer: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            sign: EigenSign::Plus,
            tol: 1e-8,
            max_outer: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub operator: OperatorSpec,
    pub domain: Domain,
    pub grid: GridConfig,
    #[serde(default = "zero_source")]
    pub f: SourceFunction,
    #[serde(default)]
    pub params: SolverParams,
    #[serde(default)]
    pub verify_opts: VerifyOptions,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn zero_source() -> SourceFunction {
    SourceFunction::constant(0.0)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Reads a config, loads file-backed tables and resolves `output_dir`
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.f = config.f.load(base)?;
        if config.output_dir.is_relative() {
            config.output_dir = base.join(&config.output_dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n < MIN_NODES {
            return Err(Error::Config(format!("n must be ≥ {MIN_NODES}, got {}", self.grid.n)));
        }
        self.operator.validate()?;
        self.domain.validate()?;
        self.f.validate()?;
        self.params.validate()?;
        let v = &self.verify_opts;
        if v.threshold.is_some_and(|t| !(t > 0.0)) || !(v.decades >= 1.0) {
            return Err(Error::Config("verify_opts needs threshold > 0 and decades >= 1".into()));
        }
        Ok(())
    }

    fn grid_with(&self, n: usize) -> Result<RadialGrid> {
        RadialGrid::new(&self.domain, n, self.grid.grading)
    }
}

/// Files written by a run and whether every verification passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            3
        }
    }
}

pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(Error::Diverged { .. } | Error::LostPositivity { .. } | Error::NotConverged | Error::NonMonotone { .. }) => 2,
        Err(_) => 1,
    }
}

/// Seed from `RDL_SEED` when set, else the config's.
pub fn effective_seed(config: &ExperimentConfig, env: Option<&str>) -> Result<u64> {
    match env {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} = {text:?} is not an unsigned integer"))),
        None => Ok(config.seed),
    }
}

pub fn run(command: Command, config_path: &Path, out: Option<&Path>) -> Result<RunOutcome> {
    let mut config = ExperimentConfig::load(config_path)?;
    if config.command.is_some_and(|c| c != command) {
        return Err(Error::Config(format!(
            "config is for {:?}, invoked as {command:?}",
            config.command.unwrap()
        )));
    }
    config.seed = effective_seed(&config, std::env::var(SEED_ENV).ok().as_deref())?;
    if let Some(dir) = out {
        config.output_dir = dir.to_path_buf();
    }
    run_config(command, &config)
}

pub fn run_config(command: Command, config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;
    match command {
        Command::Solve => {
            let mut files = Vec::new();
            solve_and_write(config, &mut files)?;
            Ok(RunOutcome { files, passed: true })
        }
        Command::Verify => verify(config),
        Command::Eigen => eigen(config),
        Command::Study => study(config),
    }
}

fn write_csv_file(path: PathBuf, files: &mut Vec<PathBuf>, write: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    write(BufWriter::new(File::create(&path)?))?;
    files.push(path);
    Ok(())
}

/// Solves and writes `solution.csv` and `diagnostics.json`; on divergence the
/// partial iterate's diagnostics are still written.
fn solve_and_write(config: &ExperimentConfig, files: &mut Vec<PathBuf>) -> Result<Solution> {
    let grid = config.grid_with(config.grid.n)?;
    let dir = &config.output_dir;
    match solve_dirichlet(&config.operator, &config.domain, &config.f, &grid, &config.params) {
        Ok(sol) => {
            write_csv_file(dir.join("solution.csv"), files, |w| sol.u.write_csv(w))?;
            sol.write_diagnostics(&dir.join("diagnostics.json"))?;
            files.push(dir.join("diagnostics.json"));
            Ok(sol)
        }
        Err(err @ Error::Diverged { .. }) => {
            if let Error::Diverged { partial: Some(partial), .. } = &err {
                partial.write_diagnostics(&dir.join("diagnostics.json"))?;
            }
            Err(err)
        }
        Err(err) => Err(err),
    }
}

/// Forcing shifted by a constant, sampled at the grid nodes.
fn shifted(f: &SourceFunction, nodes: &[f64], delta: f64) -> Result<SourceFunction> {
    SourceFunction::table(nodes.to_vec(), nodes.iter().map(|&r| f.eval(r) + delta).collect())
}

fn verify(config: &ExperimentConfig) -> Result<RunOutcome> {
    let mut files = Vec::new();
    let sol = solve_and_write(config, &mut files)?;
    let (op, f, opts) = (&config.operator, &config.f, &config.verify_opts);
    let mut report = VerificationReport::new("");

    report.extend(validate_hypotheses(op, HYPOTHESIS_SAMPLES, config.seed)?);
    let threshold = opts.threshold.unwrap_or_else(|| default_threshold(&sol));
    report.extend(verify_flux_inequalities(&sol, op, f, threshold)?);
    report.extend(check_viscosity(&sol.u, op, f, opts.slopes, opts.curvatures)?);
    report.extend(c1_modulus_report(&sol.u, op.alpha)?);

    let beta_floor = 0.95 / (1.0 + op.alpha);
    let mut estimates: Vec<HolderEstimate> = Vec::new();
    for r_star in discrete_zeros(&sol.u) {
        report.extend(c1_bound_check(&sol, op, f, r_star)?);
        match holder_exponent(&sol.u, r_star, opts.decades) {
            Ok(est) => {
                report.push(Check::new("holder", r_star, est.beta_fit - beta_floor, 0.0).advisory());
                estimates.push(est);
            }
            Err(Error::InsufficientData(_)) => {}
            Err(e) => return Err(e),
        }
    }

    // Comparison spot-checks against solutions with shifted forcing.
    let grid = sol.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = f.sup_norm(grid.first(), grid.last()).max(1.0);
    let delta = scale * rng.gen_range(0.05..0.5);
    let (f_hi, f_lo) = (shifted(f, grid.nodes(), delta)?, shifted(f, grid.nodes(), -delta)?);
    let hi = solve_dirichlet(op, &config.domain, &f_hi, &grid, &config.params)?;
    let lo = solve_dirichlet(op, &config.domain, &f_lo, &grid, &config.params)?;
    report.extend(comparison_oracle(&hi, &sol, op, &f_hi, f)?);
    report.extend(comparison_oracle(&sol, &lo, op, f, &f_lo)?);

    let dir = &config.output_dir;
    report.write_json(&dir.join("report.json"))?;
    files.push(dir.join("report.json"));
    write_csv_file(dir.join("report.csv"), &mut files, |w| report.write_csv(w))?;
    let holder = File::create(dir.join("holder.json"))?;
    serde_json::to_writer_pretty(holder, &estimates)?;
    files.push(dir.join("holder.json"));
    Ok(RunOutcome {
        files,
        passed: report.passed(),
    })
}

#[derive(Serialize)]
struct EigenSummary<'a> {
    lambda: f64,
    sign: EigenSign,
    iterations: usize,
    lambda_history: &'a [f64],
}

fn eigen(config: &ExperimentConfig) -> Result<RunOutcome> {
    let grid = config.grid_with(config.grid.n)?;
    let opts = &config.eigen;
    let res = principal_eigenvalue(&config.operator, &config.domain, &grid, opts.sign, opts.tol, opts.max_outer)?;
    let dir = &config.output_dir;
    let mut files = Vec::new();
    let summary = EigenSummary {
        lambda: res.lambda_plus,
        sign: opts.sign,
        iterations: res.iterations,
        lambda_history: &res.lambda_history,
    };
    serde_json::to_writer_pretty(File::create(dir.join("eigen.json"))?, &summary)?;
    files.push(dir.join("eigen.json"));
    write_csv_file(dir.join("eigenfunction.csv"), &mut files, |w| res.phi.write_csv(w))?;
    Ok(RunOutcome { files, passed: true })
}

/// One row of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub n: usize,
    pub sup_error_vs_finest: f64,
    /// Observed order in `h` against the next finer level; absent on the finest.
    pub rate: Option<f64>,
}

/// Sup error of each level against the finest, measured at the coarse nodes,
/// and `log2(e_k / e_{k+1})` between consecutive levels.
pub fn study_rows(levels: &[(usize, DiscreteRadialFunction)]) -> Result<Vec<StudyRow>> {
    let (_, finest) = levels.last().ok_or_else(|| Error::InsufficientData("no study levels".into()))?;
    let errors = levels
        .iter()
        .map(|(_, u)| {
            u.nodes().iter().zip(u.values()).try_fold(0.0f64, |acc, (&r, &v)| {
                Ok::<_, Error>(acc.max((v - finest.interpolate(r)?).abs()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(k, (n, _))| StudyRow {
            n: *n,
            sup_error_vs_finest: errors[k],
            rate: (k + 2 < levels.len()).then(|| (errors[k] / errors[k + 1]).log2()),
        })
        .collect())
}

fn study(config: &ExperimentConfig) -> Result<RunOutcome> {
    let sizes = [config.grid.n, 2 * config.grid.n, 4 * config.grid.n];
    let solved: Vec<Result<(usize, DiscreteRadialFunction)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&n| {
                scope.spawn(move || {
                    let grid = config.grid_with(n)?;
                    let sol = solve_dirichlet(&config.operator, &config.domain, &config.f, &grid, &config.params)?;
                    Ok((n, sol.u))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("study worker panicked")).collect()
    });
    let levels = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = study_rows(&levels)?;
    let mut files = Vec::new();
    write_csv_file(config.output_dir.join("study.csv"), &mut files, |out| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["n", "sup_error_vs_finest", "rate"])?;
        for row in &rows {
            w.write_record([
                row.n.to_string(),
                format!("{:.16e}", row.sup_error_vs_finest),
                row.rate.map(|r| format!("{r:.16e}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    Ok(RunOutcome { files, passed: true })
}
