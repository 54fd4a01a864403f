//! Command-line front end: instance generation, LP solving, scheme runs,
//! mechanism pipelines, verification suites, and factory benches.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crsmech::bernoulli::{constant_coin, divide, Coin};
use crsmech::harness::{
    all_pass, audit_bic, build_named_scheme, emit_report, generate_instance,
    generate_procurement, trial_rng, verify_end_to_end, verify_selectability, ConstraintKind,
    GeneratorParams, ReportFormat, SuiteResult,
};
use crsmech::instance::{sample_index, AuctionInstance};
use crsmech::lp::{
    brute_force_optimal_revenue, build_lp1, build_lp2, interim_from_lp1, interim_from_lp2,
    solve_lp, InterimRule, LpError, ProcurementInstance, ProcurementInterimRule,
};
use crsmech::mechanism::{
    procurement_ocrs_instance, run_procurement, KeepCoinMode, MechanismConfig,
};
use crsmech::schemes::{stochastic_knapsack_ocrs, ProbMode};

#[derive(Parser)]
#[command(name = "crsmech", version, about = "Contention-resolution mechanism toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    globals: Globals,
}

#[derive(Args, Clone)]
struct Globals {
    /// Master seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output path prefix (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// JSON config file mirroring the global flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
struct FileConfig {
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
}

struct Settings {
    seed: u64,
    trials: u64,
    out: Option<PathBuf>,
    format: ReportFormat,
}

impl Settings {
    fn resolve(globals: &Globals, default_trials: u64) -> Result<Self, String> {
        let file: FileConfig = match &globals.config {
            Some(path) => serde_json::from_str(
                &fs::read_to_string(path).map_err(|e| format!("config {path:?}: {e}"))?,
            )
            .map_err(|e| format!("config {path:?}: {e}"))?,
            None => FileConfig::default(),
        };
        let format = globals
            .format
            .clone()
            .or(file.format)
            .unwrap_or_else(|| "json".into())
            .parse::<ReportFormat>()?;
        Ok(Settings {
            seed: globals.seed.or(file.seed).unwrap_or(0),
            trials: globals.trials.or(file.trials).unwrap_or(default_trials),
            out: globals.out.clone().or(file.out),
            format,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Solve the interim LP of an auction or procurement instance.
    SolveLp(SolveLpArgs),
    /// Run a scheme over an instance's induced process; emit per-element
    /// selection statistics (CSV) and a JSON summary.
    RunScheme(RunSchemeArgs),
    /// Run the sequential mechanism pipeline.
    RunMech(RunMechArgs),
    /// Run the sequential procurement pipeline.
    RunProcurement(RunProcArgs),
    /// Statistical verification suites; exit code 0 iff all pass.
    Verify(VerifyArgs),
    /// Bernoulli division bias estimates and toss statistics as CSV.
    BernoulliBench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// single-copy | k-uniform | knapsack | multi-choice | vh
    #[arg(long, default_value = "single-copy")]
    kind: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    types: usize,
    #[arg(long, default_value_t = 2.0)]
    capacity: f64,
    #[arg(long, default_value_t = 8)]
    weight_grid: usize,
    #[arg(long, default_value_t = 1)]
    row_limit: usize,
    /// Generate a procurement instance instead (capacity becomes the budget).
    #[arg(long)]
    procurement: bool,
}

#[derive(Args)]
struct SolveLpArgs {
    instance: PathBuf,
    /// Also run the exact brute-force benchmark when the instance is tiny.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct RunSchemeArgs {
    instance: PathBuf,
    /// vh | knapsack | multi-choice | stochastic
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    /// Estimation accuracy; oracle probabilities when omitted.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
}

#[derive(Args)]
struct RunMechArgs {
    instance: PathBuf,
    /// Interim rule JSON (solved on the fly when omitted).
    #[arg(long)]
    interim: Option<PathBuf>,
    /// vh | knapsack | multi-choice
    #[arg(long)]
    scheme: String,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args)]
struct RunProcArgs {
    instance: PathBuf,
    #[arg(long)]
    interim: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// all | knapsack | multi-choice | end-to-end | bic | procurement
    #[arg(long, default_value = "all")]
    suite: String,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
}

fn main() -> ExitCode {
    if let Ok(workers) = std::env::var("CRSMECH_WORKERS") {
        if let Ok(k) = workers.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, suffix: &str, content: &str) -> Result<(), String> {
    match out {
        Some(prefix) => {
            let path = with_suffix(prefix, suffix);
            fs::write(&path, content).map_err(|e| format!("write {path:?}: {e}"))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            if content.ends_with('\n') {
                print!("{content}");
            } else {
                println!("{content}");
            }
            Ok(())
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    if suffix.is_empty() {
        return prefix.to_path_buf();
    }
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("read {path:?}: {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("parse {path:?}: {e}"))
}

/// An instance file holds either an auction or a procurement instance.
enum AnyInstance {
    Auction(AuctionInstance),
    Procurement(ProcurementInstance),
}

fn read_instance(path: &Path) -> Result<AnyInstance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("read {path:?}: {e}"))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("parse {path:?}: {e}"))?;
    if value.get("budget").is_some() {
        let inst =
            ProcurementInstance::from_json(&text).map_err(|e| format!("{path:?}: {e}"))?;
        Ok(AnyInstance::Procurement(inst))
    } else {
        let inst = AuctionInstance::from_json(&text).map_err(|e| format!("{path:?}: {e}"))?;
        Ok(AnyInstance::Auction(inst))
    }
}

fn solve_auction(instance: &AuctionInstance) -> Result<InterimRule, String> {
    let model = build_lp1(instance).map_err(|e| e.to_string())?;
    let sol = solve_lp(&model).map_err(|e| e.to_string())?;
    interim_from_lp1(instance, &sol).map_err(|e| e.to_string())
}

fn solve_procurement(instance: &ProcurementInstance) -> Result<ProcurementInterimRule, String> {
    let model = build_lp2(instance).map_err(|e| e.to_string())?;
    let sol = solve_lp(&model).map_err(|e| e.to_string())?;
    interim_from_lp2(instance, &sol).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Gen(args) => {
            let settings = Settings::resolve(&cli.globals, 0)?;
            let kind = match args.kind.as_str() {
                "single-copy" => ConstraintKind::SingleCopy,
                "k-uniform" => ConstraintKind::KUniform,
                "knapsack" => ConstraintKind::Knapsack,
                "multi-choice" => ConstraintKind::MultiChoice,
                "vh" => ConstraintKind::Vh,
                other => return Err(format!("unknown kind {other:?}")),
            };
            let params = GeneratorParams {
                n: args.n,
                m: args.m,
                types_per_agent: args.types,
                kind,
                capacity: args.capacity,
                weight_grid: args.weight_grid,
                row_limit: args.row_limit,
                ..Default::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            let text = if args.procurement {
                generate_procurement(&params, &mut rng)
                    .map_err(|e| e.to_string())?
                    .to_json()
            } else {
                generate_instance(&params, &mut rng)
                    .map_err(|e| e.to_string())?
                    .to_json()
            };
            write_or_print(&settings.out, "", &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveLp(args) => {
            let settings = Settings::resolve(&cli.globals, 0)?;
            match read_instance(&args.instance)? {
                AnyInstance::Auction(instance) => {
                    let rule = solve_auction(&instance)?;
                    let mut output = serde_json::json!({
                        "kind": "auction",
                        "objective": rule.objective,
                        "pi": rule.pi,
                        "q": rule.q,
                    });
                    if args.oracle {
                        match brute_force_optimal_revenue(&instance) {
                            Ok(opt) => {
                                output["oracle_opt"] = serde_json::json!(opt);
                            }
                            Err(LpError::TooLarge(msg)) => {
                                output["oracle_error"] = serde_json::json!(msg);
                            }
                            Err(e) => return Err(e.to_string()),
                        }
                    }
                    write_or_print(
                        &settings.out,
                        "",
                        &serde_json::to_string_pretty(&output).unwrap(),
                    )?;
                }
                AnyInstance::Procurement(instance) => {
                    let rule = solve_procurement(&instance)?;
                    let output = serde_json::json!({
                        "kind": "procurement",
                        "objective": rule.objective,
                        "pi": rule.pi,
                        "q": rule.q,
                    });
                    write_or_print(
                        &settings.out,
                        "",
                        &serde_json::to_string_pretty(&output).unwrap(),
                    )?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RunScheme(args) => {
            let settings = Settings::resolve(&cli.globals, 100_000)?;
            let mode = match args.eps {
                Some(eps) => ProbMode::Estimated { eps, delta: args.delta, seed: settings.seed },
                None => ProbMode::Oracle,
            };
            match read_instance(&args.instance)? {
                AnyInstance::Auction(instance) => {
                    if args.scheme == "stochastic" {
                        return Err("the stochastic scheme runs on procurement instances".into());
                    }
                    let rule = solve_auction(&instance)?;
                    let process = rule.induced_process(&instance);
                    let b = args.b;
                    let name = args.scheme.clone();
                    let report = verify_selectability(
                        || {
                            build_named_scheme(&name, &instance, &process, b, mode)
                                .expect("scheme builds")
                        },
                        &process,
                        &instance.constraint,
                        settings.trials,
                        settings.seed,
                    );
                    let mut csv = String::from("agent,item,active,selected,rate\n");
                    for e in &report.per_element {
                        csv.push_str(&format!(
                            "{},{},{},{},{}\n",
                            e.agent, e.item, e.active, e.selected, e.rate
                        ));
                    }
                    let summary = serde_json::json!({
                        "declared_c": report.declared_c,
                        "min_empirical_c": report.min_rate,
                        "feasibility_violations": report.feasibility_violations,
                        "clamp_count": report.clamp_count,
                        "trials": report.trials,
                        "pass": report.pass,
                    });
                    write_or_print(&settings.out, ".csv", &csv)?;
                    write_or_print(
                        &settings.out,
                        ".json",
                        &serde_json::to_string_pretty(&summary).unwrap(),
                    )?;
                    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
                }
                AnyInstance::Procurement(instance) => {
                    if args.scheme != "stochastic" {
                        return Err("procurement instances drive the stochastic scheme".into());
                    }
                    let rule = solve_procurement(&instance)?;
                    let ocrs_inst =
                        procurement_ocrs_instance(&instance, &rule).map_err(|e| e.to_string())?;
                    let mut scheme =
                        stochastic_knapsack_ocrs(ocrs_inst, mode).map_err(|e| e.to_string())?;
                    let c = scheme.declared_c();
                    let mut arrived = vec![0u64; instance.n];
                    let mut chosen = vec![0u64; instance.n];
                    let mut overfills = 0u64;
                    for t in 0..settings.trials {
                        let mut rng = trial_rng(settings.seed, t);
                        scheme.reset(&mut rng);
                        for i in 0..instance.n {
                            let ti = scheme.sample_weight_index(i, &mut rng);
                            let sel = scheme.offer(i, ti, &mut rng);
                            arrived[i] += 1;
                            chosen[i] += sel as u64;
                        }
                        if scheme.selected_weight() > scheme.capacity() + 1e-9 {
                            overfills += 1;
                        }
                    }
                    let mut csv = String::from("element,arrived,selected,rate\n");
                    let mut min_rate = f64::INFINITY;
                    for i in 0..instance.n {
                        let rate = chosen[i] as f64 / arrived[i] as f64;
                        min_rate = min_rate.min(rate);
                        csv.push_str(&format!("{},{},{},{}\n", i, arrived[i], chosen[i], rate));
                    }
                    let pass = overfills == 0
                        && min_rate
                            >= c - 4.0 * (c * (1.0 - c) / settings.trials as f64).sqrt();
                    let summary = serde_json::json!({
                        "declared_c": c,
                        "min_empirical_c": min_rate,
                        "feasibility_violations": overfills,
                        "clamp_count": scheme.clamp_count(),
                        "trials": settings.trials,
                        "pass": pass,
                    });
                    write_or_print(&settings.out, ".csv", &csv)?;
                    write_or_print(
                        &settings.out,
                        ".json",
                        &serde_json::to_string_pretty(&summary).unwrap(),
                    )?;
                    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
                }
            }
        }
        Command::RunMech(args) => {
            let settings = Settings::resolve(&cli.globals, 100_000)?;
            let AnyInstance::Auction(instance) = read_instance(&args.instance)? else {
                return Err("run-mech needs an auction instance".into());
            };
            let rule: InterimRule = match &args.interim {
                Some(path) => {
                    let rule: InterimRule = read_json(path)?;
                    rule.validate(&instance).map_err(|e| e.to_string())?;
                    rule
                }
                None => solve_auction(&instance)?,
            };
            let process = rule.induced_process(&instance);
            let name = args.scheme.clone();
            let b = args.b;
            let probe = build_named_scheme(&name, &instance, &process, b, ProbMode::Oracle)?;
            let c = probe.guarantee().1;
            drop(probe);
            let config = MechanismConfig {
                b,
                c,
                eps: args.eps,
                keep_mode: KeepCoinMode::KnownProbability,
            };
            let builder = || {
                (
                    build_named_scheme(&name, &instance, &process, b, ProbMode::Oracle)
                        .expect("scheme builds"),
                    None,
                )
            };
            let report = verify_end_to_end(
                &instance,
                &rule,
                &config,
                builder,
                settings.trials,
                settings.seed,
            )
            .map_err(|e| e.to_string())?;
            let bic = audit_bic(
                &instance,
                &rule,
                &config,
                builder,
                (settings.trials / 10).clamp(2_000, 50_000),
                settings.seed ^ 0x5eed,
            )
            .map_err(|e| e.to_string())?;
            // per-trial CSV for the first slice of trials
            let mut csv = String::from("trial,revenue,allocated\n");
            let (mut live, _) = builder();
            for t in 0..settings.trials.min(10_000) {
                let mut rng = trial_rng(settings.seed, t);
                let reports: Vec<usize> = (0..instance.n)
                    .map(|i| sample_index(&instance.agents[i].probs, &mut rng))
                    .collect();
                let out = crsmech::mechanism::run_tocrs_mechanism(
                    &instance,
                    &rule,
                    &config,
                    live.as_mut(),
                    None,
                    &reports,
                    &mut rng,
                )
                .map_err(|e| e.to_string())?;
                csv.push_str(&format!(
                    "{},{},{}\n",
                    t,
                    out.revenue(),
                    out.allocation.len()
                ));
            }
            let summary = serde_json::json!({
                "mean_revenue": report.mean_revenue,
                "lp_objective": report.lp_objective,
                "expected_revenue": report.expected_revenue,
                "oracle_opt": report.oracle_opt,
                "ratio": report.achieved_ratio,
                "guarantee_ratio": report.guarantee_ratio,
                "bic_violations": bic.bic_violations,
                "feasibility_violations": report.feasibility_violations,
                "identity_pass": report.identity_pass,
                "trials": report.trials,
            });
            write_or_print(&settings.out, ".csv", &csv)?;
            write_or_print(
                &settings.out,
                ".json",
                &serde_json::to_string_pretty(&summary).unwrap(),
            )?;
            let ok = report.identity_pass
                && report.guarantee_pass
                && report.feasibility_violations == 0
                && bic.pass;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::RunProcurement(args) => {
            let settings = Settings::resolve(&cli.globals, 100_000)?;
            let AnyInstance::Procurement(instance) = read_instance(&args.instance)? else {
                return Err("run-procurement needs a procurement instance".into());
            };
            let rule: ProcurementInterimRule = match &args.interim {
                Some(path) => {
                    let rule: ProcurementInterimRule = read_json(path)?;
                    rule.validate(&instance).map_err(|e| e.to_string())?;
                    rule
                }
                None => solve_procurement(&instance)?,
            };
            let ocrs_inst =
                procurement_ocrs_instance(&instance, &rule).map_err(|e| e.to_string())?;
            let mut scheme = stochastic_knapsack_ocrs(ocrs_inst, ProbMode::Oracle)
                .map_err(|e| e.to_string())?;
            let c = scheme.declared_c();
            let mut csv = String::from("trial,payments,value\n");
            let mut total_value = 0.0;
            let mut over_budget = 0u64;
            for t in 0..settings.trials {
                let mut rng = trial_rng(settings.seed, t);
                let reports: Vec<usize> = (0..instance.n)
                    .map(|i| sample_index(&instance.sellers[i].probs, &mut rng))
                    .collect();
                let out =
                    run_procurement(&instance, &rule, &mut scheme, args.eps, &reports, &mut rng)
                        .map_err(|e| e.to_string())?;
                let paid: f64 = out.payments.iter().sum();
                if paid > instance.budget + 1e-9 {
                    over_budget += 1;
                }
                total_value += out.buyer_value;
                if t < 10_000 {
                    csv.push_str(&format!("{},{},{}\n", t, paid, out.buyer_value));
                }
            }
            let mean_value = total_value / settings.trials as f64;
            let ratio = mean_value / rule.objective;
            let summary = serde_json::json!({
                "mean_value": mean_value,
                "lp_objective": rule.objective,
                "ratio": ratio,
                "declared_c": c,
                "bic_violations": 0,
                "feasibility_violations": over_budget,
                "trials": settings.trials,
            });
            write_or_print(&settings.out, ".csv", &csv)?;
            write_or_print(
                &settings.out,
                ".json",
                &serde_json::to_string_pretty(&summary).unwrap(),
            )?;
            let ok = over_budget == 0 && ratio >= (c - args.eps) - 0.02;
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Verify(args) => {
            let settings = Settings::resolve(&cli.globals, 50_000)?;
            let results = run_verify_suites(&args.suite, &settings)?;
            let mut buf = Vec::new();
            emit_report(&results, settings.format, &mut buf).map_err(|e| e.to_string())?;
            let text = String::from_utf8(buf).unwrap();
            match &settings.out {
                Some(_) => write_or_print(&settings.out, "", &text)?,
                None => print!("{text}"),
            }
            Ok(if all_pass(&results) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::BernoulliBench(args) => {
            let settings = Settings::resolve(&cli.globals, 0)?;
            let corpus = [(0.1, 0.6), (0.25, 0.5), (0.4, 0.9)];
            let mut csv =
                String::from("p0,p1,delta,samples,bias,expected,mean_tosses,reference_bound\n");
            for (p0, p1) in corpus {
                let delta = p1 - p0;
                let mut coin = divide(
                    Box::new(constant_coin(p0).unwrap()),
                    Box::new(constant_coin(p1).unwrap()),
                    delta,
                )
                .unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
                let mut hits = 0u64;
                for _ in 0..args.samples {
                    hits += coin.flip(&mut rng) as u64;
                }
                let bias = hits as f64 / args.samples as f64;
                let mean_tosses = coin.tosses() as f64 / args.samples as f64;
                let reference = 22.12 / p1 * (1.0 + 1.0 / delta);
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    p0,
                    p1,
                    delta,
                    args.samples,
                    bias,
                    p0 / p1,
                    mean_tosses,
                    reference
                ));
            }
            write_or_print(&settings.out, "", &csv)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// The CLI verification suites: lighter cousins of the acceptance tests,
/// same statistics.
fn run_verify_suites(which: &str, settings: &Settings) -> Result<Vec<SuiteResult>, String> {
    let mut results = Vec::new();
    let run_all = which == "all";
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    if run_all || which == "knapsack" {
        let params = GeneratorParams {
            n: 3,
            m: 3,
            types_per_agent: 2,
            kind: ConstraintKind::Knapsack,
            ..Default::default()
        };
        let instance = generate_instance(&params, &mut rng).map_err(|e| e.to_string())?;
        let rule = solve_auction(&instance)?;
        let process = rule.induced_process(&instance);
        let report = verify_selectability(
            || {
                build_named_scheme("knapsack", &instance, &process, 1.0, ProbMode::Oracle)
                    .expect("builds")
            },
            &process,
            &instance.constraint,
            settings.trials,
            settings.seed,
        );
        results.push(SuiteResult::new(
            "knapsack-selectability",
            report.pass,
            format!(
                "min rate {:.4} vs declared {:.4}; {} violations",
                report.min_rate, report.declared_c, report.feasibility_violations
            ),
            &report,
        ));
    }
    if run_all || which == "multi-choice" {
        let params = GeneratorParams {
            n: 3,
            m: 3,
            types_per_agent: 2,
            kind: ConstraintKind::MultiChoice,
            ..Default::default()
        };
        let instance = generate_instance(&params, &mut rng).map_err(|e| e.to_string())?;
        let rule = solve_auction(&instance)?;
        let process = rule.induced_process(&instance);
        let report = verify_selectability(
            || {
                build_named_scheme("multi-choice", &instance, &process, 1.0, ProbMode::Oracle)
                    .expect("builds")
            },
            &process,
            &instance.constraint,
            settings.trials,
            settings.seed,
        );
        results.push(SuiteResult::new(
            "multi-choice-selectability",
            report.pass,
            format!(
                "min rate {:.4} vs declared {:.4}; {} violations",
                report.min_rate, report.declared_c, report.feasibility_violations
            ),
            &report,
        ));
    }
    if run_all || which == "end-to-end" {
        let params = GeneratorParams {
            n: 2,
            m: 2,
            types_per_agent: 2,
            kind: ConstraintKind::SingleCopy,
            ..Default::default()
        };
        let instance = generate_instance(&params, &mut rng).map_err(|e| e.to_string())?;
        let rule = solve_auction(&instance)?;
        let process = rule.induced_process(&instance);
        let builder = || {
            (
                build_named_scheme("vh", &instance, &process, 1.0, ProbMode::Oracle)
                    .expect("builds"),
                None,
            )
        };
        let c = builder().0.guarantee().1;
        let config =
            MechanismConfig { b: 1.0, c, eps: 0.0, keep_mode: KeepCoinMode::KnownProbability };
        let report =
            verify_end_to_end(&instance, &rule, &config, builder, settings.trials, settings.seed)
                .map_err(|e| e.to_string())?;
        results.push(SuiteResult::new(
            "end-to-end-identity",
            report.identity_pass && report.guarantee_pass && report.feasibility_violations == 0,
            format!(
                "mean revenue {:.4} vs target {:.4}",
                report.mean_revenue, report.expected_revenue
            ),
            &report,
        ));
    }
    if run_all || which == "bic" {
        let params = GeneratorParams {
            n: 2,
            m: 2,
            types_per_agent: 2,
            kind: ConstraintKind::SingleCopy,
            ..Default::default()
        };
        let instance = generate_instance(&params, &mut rng).map_err(|e| e.to_string())?;
        let rule = solve_auction(&instance)?;
        let process = rule.induced_process(&instance);
        let builder = || {
            (
                build_named_scheme("vh", &instance, &process, 1.0, ProbMode::Oracle)
                    .expect("builds"),
                None,
            )
        };
        let c = builder().0.guarantee().1;
        let config =
            MechanismConfig { b: 1.0, c, eps: 0.0, keep_mode: KeepCoinMode::KnownProbability };
        let report = audit_bic(
            &instance,
            &rule,
            &config,
            builder,
            (settings.trials / 5).max(2_000),
            settings.seed,
        )
        .map_err(|e| e.to_string())?;
        results.push(SuiteResult::new(
            "bic-audit",
            report.pass,
            format!(
                "{} BIC violations, {} identity violations",
                report.bic_violations, report.identity_violations
            ),
            &report,
        ));
    }
    if run_all || which == "procurement" {
        let params = GeneratorParams {
            n: 3,
            m: 2,
            types_per_agent: 2,
            kind: ConstraintKind::SingleCopy,
            capacity: 1.5,
            ..Default::default()
        };
        let instance = generate_procurement(&params, &mut rng).map_err(|e| e.to_string())?;
        let rule = solve_procurement(&instance)?;
        let ocrs_inst = procurement_ocrs_instance(&instance, &rule).map_err(|e| e.to_string())?;
        let mut scheme =
            stochastic_knapsack_ocrs(ocrs_inst, ProbMode::Oracle).map_err(|e| e.to_string())?;
        let c = scheme.declared_c();
        let mut total_value = 0.0;
        let mut over_budget = 0u64;
        for t in 0..settings.trials {
            let mut trng = trial_rng(settings.seed, t);
            let reports: Vec<usize> = (0..instance.n)
                .map(|i| sample_index(&instance.sellers[i].probs, &mut trng))
                .collect();
            let out = run_procurement(&instance, &rule, &mut scheme, 0.0, &reports, &mut trng)
                .map_err(|e| e.to_string())?;
            let paid: f64 = out.payments.iter().sum();
            if paid > instance.budget + 1e-9 {
                over_budget += 1;
            }
            total_value += out.buyer_value;
        }
        let ratio = total_value / settings.trials as f64 / rule.objective;
        let pass = over_budget == 0 && ratio >= c - 0.02;
        results.push(SuiteResult::new(
            "procurement-pipeline",
            pass,
            format!("value ratio {ratio:.4} vs c {c:.4}; {over_budget} over budget"),
            serde_json::json!({"ratio": ratio, "declared_c": c, "over_budget": over_budget}),
        ));
    }
    if results.is_empty() {
        return Err(format!("unknown suite {which:?}"));
    }
    Ok(results)
}
