use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use unit_pricing::anchoring::{self, DEFAULT_ORACLE_ETA};
use unit_pricing::discretization::{self, DiscretizeParams};
use unit_pricing::distributions::{Class, ANCHOR_C1, ANCHOR_C2};
use unit_pricing::dp::{DpConfig, DpMode, DEFAULT_STATE_CAP};
use unit_pricing::oracle::{self, DEFAULT_BRUTE_CAP};
use unit_pricing::pipeline::{self, Discretization, SolveOptions, Solver, DEFAULT_SAMPLES, DEFAULT_SEED};
use unit_pricing::rational::{self, Rational};
use unit_pricing::{Error, Instance, Result, TieBreak};

#[derive(Parser)]
#[command(name = "unit-pricing", version, about = "Item pricing for a unit-demand buyer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver and write a JSON report.
    Solve(SolveArgs),
    /// Best price vector over a finite grid by enumeration.
    Brute(BruteArgs),
    /// Revenue of a given price vector.
    Eval(EvalArgs),
    /// Print the restricted instance and the grid sizes.
    Discretize(DiscretizeArgs),
    /// Compute the anchors and check their tail bounds by sampling.
    VerifyAnchors(AnchorArgs),
    /// Run every solver on one instance and print a CSV gap table.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Lowest,
    Highest,
}

impl From<TieArg> for TieBreak {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Lowest => TieBreak::LowestIndex,
            TieArg::Highest => TieBreak::HighestIndex,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Dp,
    Brute,
    Iid,
}

#[derive(Args)]
struct Common {
    /// Instance JSON file.
    instance: PathBuf,
    /// Overrides the instance's tie-breaking rule.
    #[arg(long, value_enum)]
    tie_break: Option<TieArg>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    /// Value-grid step; implies --price-eps if that is not given.
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    price_eps: Option<String>,
    /// Use delta = (eps/8)^8 and eps' = delta/4.
    #[arg(long, conflicts_with_all = ["delta", "price_eps"])]
    theorem_constants: bool,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Rounding denominator M for the dynamic program.
    #[arg(long)]
    m_override: Option<u64>,
    /// Run the dynamic program without rounding.
    #[arg(long)]
    exact_dp: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value = "dp")]
    solver: SolverArg,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BruteArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated price set; the union of supports when absent.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BRUTE_CAP)]
    cap: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated prices, one per item.
    #[arg(long)]
    prices: String,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct DiscretizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Only print the grid sizes.
    #[arg(long)]
    plan_only: bool,
}

#[derive(Args)]
struct AnchorArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "1/10")]
    epsilon: String,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Also write the table here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<Rational>> {
    s.split(',').map(rational::parse).collect()
}

fn load(common: &Common) -> Result<Instance> {
    let mut inst = Instance::from_path(&common.instance)?;
    if let Some(t) = common.tie_break {
        inst.tie_break = t.into();
    }
    Ok(inst)
}

fn options(p: &PipelineArgs) -> Result<SolveOptions> {
    let mut o = SolveOptions::new(rational::parse(&p.epsilon)?);
    o.discretization = if p.theorem_constants {
        Discretization::Theorem
    } else {
        match (&p.delta, &p.price_eps) {
            (None, None) => Discretization::Practical,
            (d, e) => {
                let delta = match d {
                    Some(d) => rational::parse(d)?,
                    None => return Err(Error::Domain("--price-eps needs --delta".into())),
                };
                let price_eps = match e {
                    Some(e) => rational::parse(e)?,
                    None => &o.eps / rational::int(2),
                };
                Discretization::Given { delta, price_eps }
            }
        }
    };
    o.dp = DpConfig {
        mode: if p.exact_dp { DpMode::Exact } else { DpMode::Canonical },
        m_override: p.m_override,
        state_cap: p.state_cap,
        ..DpConfig::default()
    };
    o.samples = p.samples;
    o.seed = p.seed;
    Ok(o)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => {
            let inst = load(&a.common)?;
            let mut o = options(&a.pipeline)?;
            o.solver = match a.solver {
                SolverArg::Dp => Solver::Dp,
                SolverArg::Brute => Solver::Brute,
                SolverArg::Iid => Solver::Iid,
            };
            let report = pipeline::solve(&inst, &o)?;
            write_out(a.out.as_deref(), &report.to_json_string())
        }
        Command::Brute(a) => {
            let inst = load(&a.common)?;
            let grid = match &a.grid {
                Some(g) => parse_list(g)?,
                None => oracle::union_support(&inst.discrete_items()?),
            };
            let r = oracle::brute_force_optimum(&inst, &grid, a.cap)?;
            println!("{}", serde_json::to_string(&r).expect("serializable"));
            Ok(())
        }
        Command::Eval(a) => {
            let inst = load(&a.common)?;
            let prices = parse_list(&a.prices)?;
            let ev = pipeline::evaluate(&inst, &prices, a.samples, a.seed)?;
            let prices: Vec<String> = prices.iter().map(rational::format).collect();
            let out = match (&ev.exact_revenue, &ev.monte_carlo) {
                (Some(r), _) => json!({ "prices": prices, "exact_revenue": rational::format(r) }),
                (None, Some(mc)) => json!({ "prices": prices, "monte_carlo": mc }),
                _ => unreachable!("evaluation yields one of the two"),
            };
            println!("{out}");
            Ok(())
        }
        Command::Discretize(a) => {
            let inst = load(&a.common)?;
            let o = options(&a.pipeline)?;
            let prep = pipeline::prepare(&inst, &o);
            let (lo, hi) = match &prep {
                Ok(p) => discretization::value_range(&p.truncated)?,
                Err(_) => discretization::value_range(&inst)?,
            };
            let theorem = discretization::discretization_plan(&lo, &hi, &DiscretizeParams::theorem(&o.eps));
            let prep = prep?;
            let mut out = json!({
                "value_range": [rational::format(&lo), rational::format(&hi)],
                "theorem_plan": theorem,
                "provenance": prep.restricted.provenance,
                "vertical_denominator": prep.vertical_denominator,
            });
            if !a.plan_only {
                out["restricted"] = prep.restricted.to_json();
            }
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(())
        }
        Command::VerifyAnchors(a) => {
            let inst = load(&a.common)?;
            let eps = rational::to_f64(&rational::parse(&a.epsilon)?);
            let mut reports = serde_json::Map::new();
            if inst.class != Some(Class::Regular) {
                let beta = anchoring::beta_mhr(&inst, DEFAULT_ORACLE_ETA)?;
                let r = anchoring::verify_mhr_anchor(&inst, &beta, eps, a.samples, a.seed)?;
                reports.insert("mhr".into(), json!({ "anchor": beta, "report": r, "passed": r.passed() }));
            }
            if inst.class != Some(Class::Mhr) && inst.len() >= 2 {
                let alpha =
                    anchoring::alpha_regular(&inst, &rational::from_f64(ANCHOR_C1)?, &rational::from_f64(ANCHOR_C2)?)?;
                let r = anchoring::verify_regular_anchor(&inst, &alpha, eps, a.samples, a.seed)?;
                reports.insert("regular".into(), json!({ "anchor": alpha, "report": r, "passed": r.passed() }));
            }
            println!("{}", serde_json::to_string_pretty(&reports).expect("serializable"));
            Ok(())
        }
        Command::Compare(a) => {
            let inst = load(&a.common)?;
            let o = options(&a.pipeline)?;
            let csv = pipeline::compare_csv(&pipeline::compare(&inst, &o));
            if let Some(p) = &a.csv {
                std::fs::write(p, &csv)?;
            }
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Resource(_) => 3,
                Error::Convergence(_) => 1,
                _ => 2,
            })
        }
    }
}
