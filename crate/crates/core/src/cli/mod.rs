//! Command line.
//!
//! Exit codes: 0 success, 2 validation or I/O error, 3 calibration
//! infeasible, 4 verification failure. Every output file of a command is
//! computed before the first one is written.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ChainConfig, CurveConfig, EsscherOverride, Grid, McConfig, PricingConfig, Resolved, RunConfig};

use crate::error::{Error, Result};
use crate::esscher::{
    calibration_report, esscher_dynamics, solve_esscher, to_risk_neutral, EsscherParams, JumpSpec,
    RiskNeutralRegimeSet,
};
use crate::markov_regime::{
    counts_csv, estimate_transition_matrix, observed_rows_csv, occupation_mgf, parse_open_prices, EstimatorWindows, DEFAULT_BAR_DT,
};
use crate::pricing::{curve_csv, price_call, price_curve, price_strikes, CurveModel, PriceResult, PricingModel};
use crate::simulation::{
    check_esscher_density, check_report, discounted_spot_mean, mc_price_call, mc_price_strikes,
    occupation_mgf_estimate, simulate_spot_path, CheckOutcome, MeasureTag,
};
use crate::stats::sub_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CALIBRATION: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fxjump", version, about = "Regime-switching jump-diffusion FX option pricer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a 3-state transition matrix from candle open prices.
    Estimate(EstimateArgs),
    /// Solve the Esscher parameters and print the calibration report.
    Calibrate(RunArgs),
    /// Price calls with the occupation-time series pricer.
    Price(RunArgs),
    /// Jump and no-jump price curves, one CSV per (maturity, jump rate).
    Curve(RunArgs),
    /// Price calls by full path simulation and optionally dump sample paths.
    Simulate(RunArgs),
    /// Run the four statistical verification checks.
    Check(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `mc.paths` (price, curve) or `mc.oracle_paths` (simulate, check).
    #[arg(long)]
    pub paths: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Open prices, one per line, optional header.
    #[arg(long)]
    pub input: PathBuf,
    /// Bar length in years.
    #[arg(long, default_value_t = DEFAULT_BAR_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = 30)]
    pub candles_back_up: usize,
    #[arg(long, default_value_t = 30)]
    pub candles_back_down: usize,
    /// Pips.
    #[arg(long, default_value_t = 10.0)]
    pub delta_back_up: f64,
    /// Pips.
    #[arg(long, default_value_t = 10.0)]
    pub delta_back_down: f64,
    #[arg(long, default_value_t = 30)]
    pub candles_up: usize,
    #[arg(long, default_value_t = 30)]
    pub candles_down: usize,
    /// Pips.
    #[arg(long, default_value_t = 10.0)]
    pub delta_up: f64,
    /// Pips.
    #[arg(long, default_value_t = 10.0)]
    pub delta_down: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Files produced by a command, written only after everything succeeded.
#[derive(Debug, Default)]
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn add(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    fn write(&self) -> Result<()> {
        if self.files.is_empty() {
            return Ok(());
        }
        std::fs::create_dir_all(&self.dir)?;
        for (name, body) in &self.files {
            std::fs::write(self.dir.join(name), body)?;
        }
        Ok(())
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_calibration() {
        EXIT_CALIBRATION
    } else {
        EXIT_VALIDATION
    }
}

fn execute(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Price(a) => cmd_price(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
    }
}

fn load(a: &RunArgs) -> Result<Resolved> {
    let mut r = RunConfig::load(&a.config)?;
    if let Some(s) = a.seed {
        r.config.mc.seed = s;
    }
    if let Some(out) = &a.out {
        r.output_dir = out.clone();
    }
    Ok(r)
}

fn outer_paths(a: &RunArgs, r: &Resolved) -> Result<u64> {
    let n = a.paths.unwrap_or(r.config.mc.paths);
    if n == 0 {
        return Err(Error::InvalidInput("--paths must be >= 1".into()));
    }
    Ok(n)
}

fn oracle_paths(a: &RunArgs, r: &Resolved) -> Result<u64> {
    let n = a.paths.unwrap_or(r.config.mc.oracle_paths);
    if n < 100 {
        return Err(Error::InvalidInput("--paths must be >= 100 for path simulation".into()));
    }
    Ok(n)
}

fn single_state(r: &Resolved, command: &str) -> Result<usize> {
    r.initial_state()
        .ok_or_else(|| Error::InvalidInput(format!("{command} needs pricing.initial_state")))
}

/// Esscher parameters: the override when present, otherwise calibrated.
fn esscher_params(r: &Resolved) -> Result<EsscherParams> {
    match r.override_params() {
        Some(p) => Ok(p),
        None => solve_esscher(&r.regimes, &r.config.jump, r.config.k0),
    }
}

/// Transformed dynamics; overrides skip the martingale check so that a
/// miscalibrated measure can be inspected.
fn risk_neutral(r: &Resolved, params: &EsscherParams) -> Result<RiskNeutralRegimeSet> {
    if r.config.esscher_override.is_some() {
        esscher_dynamics(&r.regimes, params, &r.config.jump)
    } else {
        to_risk_neutral(&r.regimes, params, &r.config.jump)
    }
}

fn cmd_estimate(a: &EstimateArgs) -> Result<i32> {
    let w = EstimatorWindows {
        candles_back_up: a.candles_back_up,
        candles_back_down: a.candles_back_down,
        delta_back_up: a.delta_back_up,
        delta_back_down: a.delta_back_down,
        candles_up: a.candles_up,
        candles_down: a.candles_down,
        delta_up: a.delta_up,
        delta_down: a.delta_down,
    };
    w.validate()?;
    if !(a.dt.is_finite() && a.dt > 0.0) {
        return Err(Error::InvalidInput(format!("--dt must be finite and > 0, got {}", a.dt)));
    }
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", a.input.display())))?;
    let opens = parse_open_prices(&text)?;
    let mut out = Outputs::new(a.out.clone());
    match estimate_transition_matrix(&opens, &w, a.dt) {
        Ok(est) => {
            out.add("transition_matrix.csv", est.matrix.to_csv());
            out.add("transition_counts.csv", counts_csv(&est.counts, &w));
            out.write()?;
            print!("{}", est.matrix.to_csv());
            Ok(EXIT_OK)
        }
        Err(Error::UnobservedRegimes { names, counts }) => {
            out.add("transition_counts.csv", counts_csv(&counts, &w));
            out.add("observed_rows.csv", observed_rows_csv(&counts));
            out.write()?;
            print!("{}", observed_rows_csv(&counts));
            eprintln!("error: {}", Error::UnobservedRegimes { names, counts });
            Ok(EXIT_VALIDATION)
        }
        Err(e) => Err(e),
    }
}

fn cmd_calibrate(a: &RunArgs) -> Result<i32> {
    let r = load(a)?;
    let params = esscher_params(&r)?;
    let rn = risk_neutral(&r, &params)?;
    let report = calibration_report(&r.config.jump, &rn);
    if a.out.is_some() {
        let mut out = Outputs::new(r.output_dir.clone());
        out.add("calibration.txt", report.clone());
        out.write()?;
    }
    print!("{report}");
    Ok(EXIT_OK)
}

/// Mixes per-state results over the initial distribution, one independent
/// seed stream per starting state.
fn mix_over_initial<F>(r: &Resolved, seed: u64, mut price: F) -> Result<Vec<PriceResult>>
where
    F: FnMut(usize, u64) -> Result<Vec<PriceResult>>,
{
    if let Some(i) = r.initial_state() {
        return price(i, seed);
    }
    let mut acc: Option<Vec<(PriceResult, f64)>> = None;
    for (i, &p) in r.initial.iter().enumerate().filter(|(_, p)| **p > 0.0) {
        let res = price(i, sub_seed(seed, i as u64 + 1))?;
        let acc = acc.get_or_insert_with(|| {
            let zero = PriceResult { price: 0.0, std_error: 0.0, n_paths: 0, series_truncation: 0 };
            vec![(zero, 0.0); res.len()]
        });
        for ((a, var), x) in acc.iter_mut().zip(&res) {
            a.price += p * x.price;
            *var += p * p * x.std_error * x.std_error;
            a.n_paths += x.n_paths;
            a.series_truncation = a.series_truncation.max(x.series_truncation);
        }
    }
    Ok(acc
        .unwrap_or_default()
        .into_iter()
        .map(|(a, var)| PriceResult { std_error: var.sqrt(), ..a })
        .collect())
}

fn prices_csv(rows: &[(f64, f64, PriceResult)]) -> String {
    let mut s = String::from("maturity,strike,price,std_error,n_paths,series_truncation\n");
    for (t, k, p) in rows {
        let _ = writeln!(s, "{t},{k},{:.12},{:.12},{},{}", p.price, p.std_error, p.n_paths, p.series_truncation);
    }
    s
}

fn cmd_price(a: &RunArgs) -> Result<i32> {
    let r = load(a)?;
    let n_paths = outer_paths(a, &r)?;
    let params = esscher_params(&r)?;
    let rn = risk_neutral(&r, &params)?;
    let p = &r.config.pricing;
    let mut rows = Vec::new();
    for &t in &p.maturities {
        let res = mix_over_initial(&r, r.config.mc.seed, |i, seed| {
            let model = PricingModel {
                regimes: &r.regimes,
                rate: &r.rate,
                rn: &rn,
                kernel: p.series_kernel,
                initial_state: i,
            };
            price_strikes(p.s0, &r.strikes, t, &model, n_paths, seed)
        })?;
        rows.extend(r.strikes.iter().zip(res).map(|(&k, x)| (t, k, x)));
    }
    let mut out = Outputs::new(r.output_dir.clone());
    out.add("prices.csv", prices_csv(&rows));
    out.write()?;
    Ok(EXIT_OK)
}

/// File name of one curve, e.g. `curve_T0.5_theta2.5.csv`.
pub fn curve_file_name(t: f64, theta: f64) -> String {
    format!("curve_T{t}_theta{theta}.csv")
}

fn cmd_curve(a: &RunArgs) -> Result<i32> {
    let r = load(a)?;
    let n_paths = outer_paths(a, &r)?;
    let curve = r
        .config
        .curve
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("curve section missing from config".into()))?;
    let initial_state = single_state(&r, "curve")?;
    let p = &r.config.pricing;
    let moneyness: Vec<f64> = match &r.moneyness {
        Some(x) => x.clone(),
        None => r.strikes.iter().map(|k| p.s0 / k).collect(),
    };
    let mut out = Outputs::new(r.output_dir.clone());
    for &t in &curve.maturities {
        for &theta in &curve.jump_rates {
            let model = CurveModel {
                regimes: &r.regimes,
                rate: &r.rate,
                spec: JumpSpec::exponential(theta)?,
                k0: r.config.k0,
                kernel: p.series_kernel,
                initial_state,
            };
            let points = price_curve(p.s0, &moneyness, t, &model, n_paths, r.config.mc.seed)?;
            out.add(curve_file_name(t, theta), curve_csv(&points));
        }
    }
    out.write()?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &RunArgs) -> Result<i32> {
    let r = load(a)?;
    let n_paths = oracle_paths(a, &r)?;
    let params = esscher_params(&r)?;
    let rn = risk_neutral(&r, &params)?;
    let p = &r.config.pricing;
    let seed = r.config.mc.seed;
    let mut rows = Vec::new();
    for &t in &p.maturities {
        let res = mix_over_initial(&r, seed, |i, seed| {
            mc_price_strikes(p.s0, &r.strikes, t, &r.regimes, &r.rate, &rn, i, n_paths, seed)
        })?;
        rows.extend(r.strikes.iter().zip(res).map(|(&k, x)| (t, k, x)));
    }
    let mut out = Outputs::new(r.output_dir.clone());
    out.add("simulated_prices.csv", prices_csv(&rows));

    let n_sample = r.config.mc.sample_paths;
    if n_sample > 0 {
        let initial_state = single_state(&r, "sample path output")?;
        let horizon = p.maturities.iter().copied().fold(0.0, f64::max);
        let mut s = String::from("path,time,state,spot\n");
        for k in 0..n_sample {
            let path = simulate_spot_path(
                &r.regimes,
                &r.rate,
                &r.config.jump,
                p.s0,
                horizon,
                MeasureTag::RiskNeutral(&rn),
                initial_state,
                sub_seed(seed, 1 + k as u64),
            )?;
            let states = path.chain.sojourns().iter().map(|&(i, _)| i).chain([path.chain.final_state()]);
            for ((t, x), i) in path.times.iter().zip(&path.log_spot).zip(states) {
                let _ = writeln!(s, "{k},{t},{i},{:.12}", x.exp());
            }
        }
        out.add("sample_paths.csv", s);
    }
    out.write()?;
    Ok(EXIT_OK)
}

/// Tilt vector of the occupation-time check: evenly spread over
/// `[-0.5, 0.5]`.
fn mgf_tilt(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n).map(|i| -0.5 + i as f64 / (n - 1) as f64).collect()
}

/// Runs the four checks on the first maturity and first strike of the
/// config. Returns the report and whether every check passed.
pub fn run_checks(r: &Resolved, outer: u64, oracle: u64, seed: u64) -> Result<(String, bool)> {
    let initial_state = single_state(r, "check")?;
    let p = &r.config.pricing;
    let t = p.maturities[0];
    let k = r.strikes[0];
    let params = esscher_params(r)?;
    let rn = risk_neutral(r, &params)?;
    let n = r.regimes.len();

    let density = check_esscher_density(
        &r.regimes,
        &r.rate,
        &r.config.jump,
        &params,
        t,
        initial_state,
        oracle,
        sub_seed(seed, 1),
    )?;
    let mart = discounted_spot_mean(&r.regimes, &r.rate, &rn, t, initial_state, oracle, sub_seed(seed, 2))?;
    let u = mgf_tilt(n);
    let mut e0 = vec![0.0; n];
    e0[initial_state] = 1.0;
    let mgf_exact = occupation_mgf(&r.rate, &u, t, &e0)?;
    let mgf_mc = occupation_mgf_estimate(&r.rate, &u, t, initial_state, oracle, sub_seed(seed, 3))?;
    let model = PricingModel {
        regimes: &r.regimes,
        rate: &r.rate,
        rn: &rn,
        kernel: p.series_kernel,
        initial_state,
    };
    let series = price_call(p.s0, k, t, &model, outer, sub_seed(seed, 4))?;
    let mc = mc_price_call(p.s0, k, t, &r.regimes, &r.rate, &rn, initial_state, oracle, sub_seed(seed, 5))?;
    let combined = series.std_error.hypot(mc.std_error);

    let checks = [
        CheckOutcome::new("esscher_density", density.mean, 1.0, density.std_error),
        CheckOutcome::new("discounted_martingale", mart.mean, 1.0, mart.std_error),
        CheckOutcome::new("occupation_mgf", mgf_mc.mean, mgf_exact, mgf_mc.std_error),
        CheckOutcome::new("dual_pricer", series.price, mc.price, combined),
    ];
    let mut report = String::new();
    let _ = writeln!(report, "horizon = {t}");
    let _ = writeln!(report, "strike = {k}");
    let _ = writeln!(report, "initial_state = {initial_state}");
    let _ = writeln!(report, "oracle_paths = {oracle}");
    let _ = writeln!(report, "series_paths = {}", series.n_paths);
    let _ = writeln!(report, "dual_pricer.series_price = {:.12e}", series.price);
    let _ = writeln!(report, "dual_pricer.series_std_error = {:.6e}", series.std_error);
    let _ = writeln!(report, "dual_pricer.mc_price = {:.12e}", mc.price);
    let _ = writeln!(report, "dual_pricer.mc_std_error = {:.6e}", mc.std_error);
    report.push_str(&check_report(&checks));
    Ok((report, checks.iter().all(|c| c.pass)))
}

fn cmd_check(a: &RunArgs) -> Result<i32> {
    let r = load(a)?;
    let outer = r.config.mc.paths;
    let oracle = oracle_paths(a, &r)?;
    let (report, pass) = run_checks(&r, outer, oracle, r.config.mc.seed)?;
    let mut out = Outputs::new(r.output_dir.clone());
    out.add("check_report.txt", report.clone());
    out.write()?;
    print!("{report}");
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}
