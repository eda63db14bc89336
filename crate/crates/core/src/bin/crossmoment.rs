//! Thin command-line surface over the library: simulate synthetic data,
//! estimate causal effects, run the benchmark grids, build the Gaussian
//! counterexample, and reproduce the minimum-wage table.
//!
//! Exit codes: 0 success, 1 usage, 2 input/schema, 3 estimator condition
//! failure (ratio condition not detected / sign undetermined),
//! 4 numerical degeneracy.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crossmoment::baselines::{
    cross_moment_wz, did_closed_form, ols_naive, two_proxy, twfe_regression, BootstrapConfig,
    TwfeDesign,
};
use crossmoment::cross_moment::{get_beta, DEFAULT_N_MAX, DEFAULT_TOL};
use crossmoment::dataset::{load_card_krueger, table1, ColumnMapping, OutcomeWeighting};
use crossmoment::error::Error;
use crossmoment::experiments::{run_bench, run_ratio_sweep, BenchGrid};
use crossmoment::gaussian_twin::{construct_twin, verify_twin, GaussianScm};
use crossmoment::scm::{sample_params, simulate, NoiseFamily, NoiseSpec, ScmParams};
use crossmoment::{Dataset, EstimateReport, Method, RunManifest};

#[derive(Parser)]
#[command(name = "crossmoment", version, about)]
struct Cli {
    /// Cap on the worker-thread count (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Append the run manifest (JSON line) to this file instead of stderr.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic observational data as CSV.
    Simulate(SimulateArgs),
    /// Estimate the causal effect from a CSV dataset.
    Estimate(EstimateArgs),
    /// Relative error of the estimators versus sample size.
    Bench(BenchArgs),
    /// Relative error of the two-proxy estimators versus Var(eps_w)/Var(eps_u).
    RatioSweep(RatioSweepArgs),
    /// Construct and verify the Gaussian non-identifiability twin.
    Counterexample(CounterexampleArgs),
    /// Reproduce the minimum-wage employment table from survey data.
    Table1(Table1Args),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "exponential")]
    family: String,
    /// Draw all structural parameters from the randomized protocol.
    #[arg(long)]
    random_params: bool,
    /// Include the second proxy W.
    #[arg(long)]
    with_w: bool,
    #[arg(long)]
    alpha_z: Option<f64>,
    #[arg(long)]
    alpha_d: Option<f64>,
    #[arg(long)]
    alpha_w: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Noise variances var_u,var_z,var_d,var_y[,var_w].
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<f64>>,
}

#[derive(Args)]
struct EstimateArgs {
    /// cross_moment | cross_moment_w | did | twfe | ols | two_proxy | combined_wz
    #[arg(long)]
    method: String,
    /// Input CSV path; '-' reads stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long, default_value_t = 100)]
    resamples: usize,
    #[arg(long, default_value_t = 1.0)]
    resample_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "cross_moment,did,ols")]
    methods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "exponential")]
    family: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long, default_value_t = 100)]
    resamples: usize,
    #[arg(long, default_value_t = 1.0)]
    resample_fraction: f64,
    /// Also emit per-replication raw rows after the aggregate rows.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct RatioSweepArgs {
    #[command(flatten)]
    bench: BenchArgs,
    /// Var(eps_w)/Var(eps_u) grid.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
    ratios: Vec<f64>,
    /// Fixed sample size for the sweep.
    #[arg(long, default_value_t = 100_000)]
    size: usize,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha_z: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_d: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Noise variances var_u,var_z,var_d,var_y.
    #[arg(long, value_delimiter = ',', default_value = "1,1,1,1")]
    vars: Vec<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct Table1Args {
    /// Survey data file.
    #[arg(long)]
    data: PathBuf,
    /// Column mapping (TOML).
    #[arg(long)]
    mapping: PathBuf,
    /// Use the conventional FTE weighting (full-time + half part-time).
    #[arg(long)]
    conventional_fte: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_max: u32,
    /// Emit CSV instead of the aligned text table.
    #[arg(long)]
    csv: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConditionNotDetected { .. } | Error::SignUndetermined { .. } => 3,
        Error::DegenerateDenominator(_)
        | Error::SingularDesign(_)
        | Error::ProxyUnusable { .. }
        | Error::InvalidDelta { .. }
        | Error::ConstructionFailed(_) => 4,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Estimate(args) => cmd_estimate(cli, args),
        Command::Bench(args) => cmd_bench(cli, args),
        Command::RatioSweep(args) => cmd_ratio_sweep(cli, args),
        Command::Counterexample(args) => cmd_counterexample(cli, args),
        Command::Table1(args) => cmd_table1(cli, args),
    }
}

fn emit(cli: &Cli, content: &str) -> Result<(), Error> {
    match &cli.output {
        Some(path) => std::fs::write(path, content)?,
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_manifest(cli: &Cli, manifest: &RunManifest) -> Result<(), Error> {
    let line = manifest.to_json_line();
    match &cli.manifest {
        Some(path) => {
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)?;
            file.write_all(line.as_bytes())?;
        }
        None => eprint!("{line}"),
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), Error> {
    let family = NoiseFamily::from_str(&args.family)?;
    let params = if args.random_params {
        sample_params(args.seed, family, args.with_w)
    } else {
        let vars = args.vars.clone().unwrap_or_else(|| vec![1.0; 4]);
        let want = if args.with_w || args.alpha_w.is_some() { 5 } else { 4 };
        if vars.len() != want {
            return Err(Error::InvalidParams(format!(
                "--vars needs {want} values, got {}",
                vars.len()
            )));
        }
        let alpha_w = args
            .alpha_w
            .or_else(|| args.with_w.then_some(args.alpha_z.unwrap_or(1.0)));
        ScmParams {
            alpha_z: args.alpha_z.unwrap_or(1.0),
            alpha_d: args.alpha_d.unwrap_or(1.0),
            alpha_w,
            beta: args.beta.unwrap_or(1.0),
            gamma: args.gamma.unwrap_or(1.0),
            noise_u: NoiseSpec::new(family, vars[0]),
            noise_z: NoiseSpec::new(family, vars[1]),
            noise_d: NoiseSpec::new(family, vars[2]),
            noise_y: NoiseSpec::new(family, vars[3]),
            noise_w: alpha_w.map(|_| NoiseSpec::new(family, *vars.get(4).unwrap_or(&1.0))),
        }
    };
    let ds = simulate(&params, args.n, args.seed)?;
    let manifest = RunManifest::new("simulate", args.seed)
        .flag("n", args.n)
        .flag("family", family)
        .flag("random_params", args.random_params)
        .flag("with_w", params.has_w())
        .flag("params", serde_json::to_string(&params).unwrap());
    emit_manifest(cli, &manifest)?;
    emit(cli, &ds.to_csv())
}

fn read_input_csv(input: &str) -> Result<Dataset, Error> {
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(input)?
    };
    parse_dataset_csv(&text)
}

fn parse_dataset_csv(text: &str) -> Result<Dataset, Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::SchemaError("empty CSV input".into()))?
        .split(',')
        .map(|s| s.trim())
        .collect();
    let find = |name: &str| header.iter().position(|h| *h == name);
    let (zi, di, yi) = match (find("z"), find("d"), find("y")) {
        (Some(z), Some(d), Some(y)) => (z, d, y),
        _ => {
            return Err(Error::SchemaError(
                "CSV header must contain columns z, d, y".into(),
            ))
        }
    };
    let wi = find("w");
    let mut z = Vec::new();
    let mut d = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        let get = |i: usize| -> Result<f64, Error> {
            fields
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::SchemaError(format!("bad value in data row {row}")))
        };
        z.push(get(zi)?);
        d.push(get(di)?);
        y.push(get(yi)?);
        if let Some(i) = wi {
            w.push(get(i)?);
        }
    }
    if z.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        z,
        d,
        y,
        w: wi.map(|_| w),
        x: Vec::new(),
    })
}

fn report_to_text(report: &EstimateReport) -> String {
    let mut out = format!("method,{}\nbeta_hat,{}\n", report.method, report.beta_hat);
    if let Some(r) = &report.ratio {
        out.push_str(&format!("ratio,{}\norder_n,{}\n", r.ratio, r.order_n));
    }
    for (key, value) in &report.diagnostics {
        out.push_str(&format!("diag_{key},{value}\n"));
    }
    out
}

fn cmd_estimate(cli: &Cli, args: &EstimateArgs) -> Result<(), Error> {
    let method = Method::from_str(&args.method)?;
    let ds = read_input_csv(&args.input)?.centered()?;
    let need_w = || {
        ds.w.as_deref().ok_or_else(|| {
            Error::SchemaError(format!("method {method} requires a w column"))
        })
    };
    let report = match method {
        Method::CrossMoment => get_beta(&ds.d, &ds.z, &ds.y, args.tol, args.n_max)?,
        Method::CrossMomentW => get_beta(&ds.d, need_w()?, &ds.y, args.tol, args.n_max)?,
        Method::DidClosedForm => did_closed_form(&ds.d, &ds.z, &ds.y)?,
        Method::TwfeRegression => twfe_regression(&TwfeDesign::new(&ds.d, &ds.z, &ds.y)?)?,
        Method::Ols => ols_naive(&ds.d, &ds.z, &ds.y)?,
        Method::TwoProxy => two_proxy(&ds.d, &ds.z, need_w()?, &ds.y, args.tol)?,
        Method::CombinedWz => {
            let cfg = BootstrapConfig {
                resamples: args.resamples,
                resample_fraction: args.resample_fraction,
                seed: args.seed,
            };
            cross_moment_wz(&ds.d, &ds.z, need_w()?, &ds.y, &cfg, args.tol, args.n_max)?
        }
    };
    let manifest = RunManifest::new("estimate", args.seed)
        .flag("method", method)
        .flag("input", &args.input)
        .flag("tol", args.tol)
        .flag("n_max", args.n_max)
        .flag("resamples", args.resamples)
        .flag("resample_fraction", args.resample_fraction);
    emit_manifest(cli, &manifest)?;
    emit(cli, &report_to_text(&report))
}

fn build_grid(args: &BenchArgs, ratios: Option<Vec<f64>>) -> Result<BenchGrid, Error> {
    let methods = args
        .methods
        .iter()
        .map(|m| Method::from_str(m))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchGrid {
        sample_sizes: args.sizes.clone(),
        replications: args.reps,
        noise_family: NoiseFamily::from_str(&args.family)?,
        methods,
        variance_ratio_grid: ratios,
        seed: args.seed,
        bootstrap: BootstrapConfig {
            resamples: args.resamples,
            resample_fraction: args.resample_fraction,
            seed: args.seed,
        },
        tol: args.tol,
        n_max: args.n_max,
    })
}

fn bench_manifest(name: &str, args: &BenchArgs) -> RunManifest {
    RunManifest::new(name, args.seed)
        .flag("methods", args.methods.join("+"))
        .flag(
            "sizes",
            args.sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join("+"),
        )
        .flag("reps", args.reps)
        .flag("family", &args.family)
        .flag("tol", args.tol)
        .flag("n_max", args.n_max)
        .flag("resamples", args.resamples)
        .flag("resample_fraction", args.resample_fraction)
        .flag("raw", args.raw)
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Result<(), Error> {
    let grid = build_grid(args, None)?;
    let result = run_bench(&grid)?;
    emit_manifest(cli, &bench_manifest("bench", args))?;
    let mut out = result.to_csv();
    if args.raw {
        out.push_str(&result.raw_to_csv());
    }
    emit(cli, &out)
}

fn cmd_ratio_sweep(cli: &Cli, args: &RatioSweepArgs) -> Result<(), Error> {
    let grid = build_grid(&args.bench, Some(args.ratios.clone()))?;
    let result = run_ratio_sweep(&grid, args.size)?;
    let manifest = bench_manifest("ratio_sweep", &args.bench)
        .flag(
            "ratios",
            args.ratios
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join("+"),
        )
        .flag("size", args.size);
    emit_manifest(cli, &manifest)?;
    let mut out = result.to_csv();
    if args.bench.raw {
        out.push_str(&result.raw_to_csv());
    }
    emit(cli, &out)
}

fn cmd_counterexample(cli: &Cli, args: &CounterexampleArgs) -> Result<(), Error> {
    if args.vars.len() != 4 {
        return Err(Error::InvalidParams(format!(
            "--vars needs 4 values (u,z,d,y), got {}",
            args.vars.len()
        )));
    }
    let m1 = GaussianScm {
        alpha_z: args.alpha_z,
        alpha_d: args.alpha_d,
        beta: args.beta,
        gamma: args.gamma,
        var_u: args.vars[0],
        var_z: args.vars[1],
        var_d: args.vars[2],
        var_y: args.vars[3],
    };
    let twin = construct_twin(&m1, args.delta)?;
    let report = verify_twin(&twin, args.tol);
    let manifest = RunManifest::new("counterexample", 0)
        .flag("delta", twin.delta)
        .flag("tol", args.tol);
    emit_manifest(cli, &manifest)?;

    let mut out = String::new();
    out.push_str(&format!(
        "m1,{}\nm2,{}\ndelta,{}\nk,{}\nbeta_m1,{}\nbeta_m2,{}\n",
        serde_json::to_string(&twin.m1).unwrap(),
        serde_json::to_string(&twin.m2).unwrap(),
        twin.delta,
        twin.k,
        twin.m1.beta,
        twin.m2.beta
    ));
    out.push_str("moment,m1,m2,abs_diff,status\n");
    for c in &report.comparisons {
        let status = if c.abs_diff <= args.tol { "PASS" } else { "FAIL" };
        out.push_str(&format!("{},{},{},{},{status}\n", c.name, c.m1, c.m2, c.abs_diff));
    }
    out.push_str(&format!(
        "overall,{}\n",
        if report.passed { "PASS" } else { "FAIL" }
    ));
    emit(cli, &out)?;
    if !report.passed {
        return Err(Error::ConstructionFailed(format!(
            "verification failed: max diff {:.3e}, beta gap {:.3e}",
            report.max_abs_diff, report.beta_gap
        )));
    }
    Ok(())
}

fn cmd_table1(cli: &Cli, args: &Table1Args) -> Result<(), Error> {
    let mapping = ColumnMapping::from_toml_file(&args.mapping)?;
    let weighting = if args.conventional_fte {
        OutcomeWeighting::FullPlusHalfPart
    } else {
        OutcomeWeighting::PartPlusHalfFull
    };
    let ds = load_card_krueger(&args.data, &mapping, weighting)?;
    let table = table1(&ds, args.tol, args.n_max)?;
    let manifest = RunManifest::new("table1", 0)
        .flag("data", args.data.display())
        .flag("mapping", args.mapping.display())
        .flag("conventional_fte", args.conventional_fte)
        .flag("rows", ds.len())
        .flag("tol", args.tol)
        .flag("n_max", args.n_max);
    emit_manifest(cli, &manifest)?;
    if args.csv {
        emit(cli, &table.to_csv())
    } else {
        emit(cli, &table.to_text())
    }
}
