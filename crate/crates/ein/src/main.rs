use std::fs;
use std::io::Read as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ein::data::parse_data;
use ein::doc::{from_json, to_doc};
use ein::envfile::{parse_env, Env};
use ein::gen::GenConfig;
use ein::harness::{run_properties, Property, RunConfig, RunReport};
use ein::trace::{trace_json, trace_text};
use ein_core::eval::{assignments, eval_numeric, Data};
use ein_core::rewrite::{normalize_with, RewriteError};
use ein_core::{infer_type, is_normal_form, parse_in, try_size, Expr, Strategy};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ein", version, about = "Type-check, normalize and evaluate EIN expressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Infer the type of an expression.
    Check(Input),
    /// Rewrite to normal form.
    Normalize {
        #[command(flatten)]
        input: Input,
        /// Print every step.
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = StrategyArg::Innermost)]
        strategy: StrategyArg,
    },
    /// Evaluate a field-free expression under every index assignment.
    Eval {
        #[command(flatten)]
        input: Input,
        /// Tensor data (JSON).
        #[arg(long)]
        data: String,
    },
    /// Size of an expression under the termination metric.
    Size(Input),
    /// Check the normal-form grammar.
    Nf(Input),
    /// Run generated property checks.
    Fuzz(FuzzArgs),
}

#[derive(Args)]
struct Input {
    /// Expression file, `-` for stdin. Surface syntax or a JSON AST document.
    #[arg(required_unless_present = "expr", conflicts_with = "expr")]
    path: Option<String>,
    /// Expression given inline.
    #[arg(short, long)]
    expr: Option<String>,
    /// Declarations of tensors, fields, images, kernels and result indices.
    #[arg(long)]
    env: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct FuzzArgs {
    /// One of type, descent, nf-equiv, value, eval-agree; all when omitted.
    property: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    /// Comma-separated field dimensions.
    #[arg(long, default_value = "2,3", value_delimiter = ',')]
    dims: Vec<u32>,
    /// Generate field-free expressions only.
    #[arg(long)]
    no_fields: bool,
    #[arg(long)]
    no_shrink: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Innermost,
    InnermostRight,
    Outermost,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Innermost => Strategy::Innermost,
            StrategyArg::InnermostRight => Strategy::InnermostRight,
            StrategyArg::Outermost => Strategy::Outermost,
        }
    }
}

enum Failure {
    /// Bad input: exit 1.
    User(String),
    /// A checked property does not hold: exit 2.
    Property(String),
}

type Outcome = Result<(), Failure>;

fn user<E: std::fmt::Display>(e: E) -> Failure {
    Failure::User(e.to_string())
}

fn read_source(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| user(format!("stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| user(format!("{path}: {e}")))
}

impl Input {
    fn env(&self) -> Result<Env, Failure> {
        match &self.env {
            Some(p) => parse_env(&read_source(p)?).map_err(|e| user(format!("{p}: {e}"))),
            None => Ok(Env::default()),
        }
    }

    fn require_env(&self) -> Result<Env, Failure> {
        if self.env.is_none() {
            return Err(user("--env is required for this command"));
        }
        self.env()
    }

    fn expr(&self, env: &Env) -> Result<Expr, Failure> {
        let text = match (&self.expr, &self.path) {
            (Some(e), _) => e.clone(),
            (None, Some(p)) => read_source(p)?,
            (None, None) => return Err(user("no expression given")),
        };
        if text.trim_start().starts_with('{') {
            return from_json(&text).map_err(user);
        }
        parse_in(text.trim(), &env.types).map_err(user)
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values always serialize"));
}

fn check(input: &Input) -> Outcome {
    let env = input.require_env()?;
    let e = input.expr(&env)?;
    let ty = infer_type(&env.types, &env.ctx, &e).map_err(user)?;
    match input.format {
        Format::Text => println!("{ty}"),
        Format::Json => print_json(&json!({ "type": ty.to_string(), "kind": ty.kind.to_string() })),
    }
    Ok(())
}

fn normalize(input: &Input, trace: bool, strategy: Strategy) -> Outcome {
    let env = input.require_env()?;
    let e = input.expr(&env)?;
    let t = normalize_with(&env.types, &env.ctx, &e, strategy).map_err(|err| match err {
        RewriteError::IllTyped(te) => user(te),
        other => Failure::Property(other.to_string()),
    })?;
    match (input.format, trace) {
        (Format::Text, true) => print!("{}", trace_text(&t)),
        (Format::Text, false) => println!("{}", t.final_expr),
        (Format::Json, true) => print!("{}", trace_json(&t)),
        (Format::Json, false) => print_json(&json!({ "final": to_doc(&t.final_expr), "steps": t.steps.len() })),
    }
    Ok(())
}

fn eval(input: &Input, data_path: &str) -> Outcome {
    let env = input.require_env()?;
    let e = input.expr(&env)?;
    infer_type(&env.types, &env.ctx, &e).map_err(user)?;
    let data: Data = parse_data(&read_source(data_path)?).map_err(|err| user(format!("{data_path}: {err}")))?;
    let mut rows = Vec::new();
    for rho in assignments(env.ctx.entries()) {
        let v = eval_numeric(&data, &env.ctx, &rho, &e).map_err(user)?;
        rows.push((rho, v));
    }
    match input.format {
        Format::Text if env.ctx.is_empty() => println!("{}", rows[0].1),
        Format::Text => {
            for (rho, v) in &rows {
                let at: Vec<String> = rho.iter().map(|(k, n)| format!("{k}={n}")).collect();
                println!("{}: {v}", at.join(" "));
            }
        }
        Format::Json => {
            let values: Vec<Value> = rows
                .iter()
                .map(|(rho, v)| json!({ "assignment": rho, "value": v.to_string(), "exact": v.is_exact() }))
                .collect();
            print_json(&json!({ "values": values }));
        }
    }
    Ok(())
}

fn size(input: &Input) -> Outcome {
    let env = input.env()?;
    let e = input.expr(&env)?;
    let s = try_size(&e).map_err(user)?;
    match input.format {
        Format::Text => println!("{s}"),
        Format::Json => print_json(&json!({ "size": s.to_string() })),
    }
    Ok(())
}

fn nf(input: &Input) -> Outcome {
    let env = input.require_env()?;
    let e = input.expr(&env)?;
    infer_type(&env.types, &env.ctx, &e).map_err(user)?;
    let v = is_normal_form(&env.types, &env.ctx, &e);
    match input.format {
        Format::Text => {
            println!("{}", if v.in_normal_form { "normal form" } else { "not in normal form" });
            for x in &v.violations {
                println!("violation at {}: {} ({})", ein_core::expr::path_string(&x.path), x.detail, x.production);
            }
            for g in &v.gaps {
                println!("gap at {}: {}", ein_core::expr::path_string(&g.path), g.kind);
            }
        }
        Format::Json => {
            let violations: Vec<Value> = v
                .violations
                .iter()
                .map(|x| json!({ "production": x.production, "path": x.path, "detail": x.detail }))
                .collect();
            let gaps: Vec<Value> = v.gaps.iter().map(|g| json!({ "kind": g.kind.name(), "path": g.path })).collect();
            print_json(&json!({ "inNormalForm": v.in_normal_form, "violations": violations, "gaps": gaps }));
        }
    }
    Ok(())
}

fn fuzz_summary(r: &RunReport) -> String {
    let mut out = format!(
        "{} cases, {} steps, {} truncated, largest {} nodes, {:.1}s\n",
        r.cases,
        r.steps,
        r.truncated,
        r.max_nodes,
        r.elapsed.as_secs_f64()
    );
    out += &format!("{:<20} {:>9} {:>9} {:>7}\n", "property", "checks", "skipped", "failed");
    for p in &r.reports {
        out += &format!("{:<20} {:>9} {:>9} {:>7}\n", p.property.name(), p.checks, p.skipped, p.failed);
        for c in &p.failures {
            out += &format!(
                "  case {} under {}: {}\n    original {}\n    shrunk   {}\n",
                c.case, c.ctx, c.message, c.original, c.shrunk
            );
        }
    }
    out
}

fn fuzz_json(r: &RunReport) -> Value {
    let props: Vec<Value> = r
        .reports
        .iter()
        .map(|p| {
            let failures: Vec<Value> = p
                .failures
                .iter()
                .map(|c| {
                    json!({
                        "case": c.case,
                        "ctx": c.ctx.to_string(),
                        "message": c.message,
                        "original": to_doc(&c.original),
                        "shrunk": to_doc(&c.shrunk),
                    })
                })
                .collect();
            json!({
                "property": p.property.name(),
                "checks": p.checks,
                "skipped": p.skipped,
                "failed": p.failed,
                "failures": failures,
            })
        })
        .collect();
    json!({ "cases": r.cases, "steps": r.steps, "truncated": r.truncated, "properties": props })
}

fn fuzz(a: &FuzzArgs) -> Outcome {
    let properties = match &a.property {
        None => Property::ALL.to_vec(),
        Some(name) => vec![Property::from_name(name).ok_or_else(|| user(format!("unknown property '{name}'")))?],
    };
    let gen = GenConfig {
        seed: a.seed,
        max_depth: a.max_depth,
        dims: a.dims.clone(),
        field_terms: !a.no_fields,
        ..GenConfig::default()
    };
    gen.validate().map_err(user)?;
    let cfg = RunConfig { gen, cases: a.cases, properties, shrink: !a.no_shrink, ..RunConfig::default() };
    let report = run_properties(&cfg);
    match a.format {
        Format::Text => print!("{}", fuzz_summary(&report)),
        Format::Json => print_json(&fuzz_json(&report)),
    }
    if report.ok() {
        Ok(())
    } else {
        Err(Failure::Property("property check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(i) => check(i),
        Command::Normalize { input, trace, strategy } => normalize(input, *trace, (*strategy).into()),
        Command::Eval { input, data } => eval(input, data),
        Command::Size(i) => size(i),
        Command::Nf(i) => nf(i),
        Command::Fuzz(a) => fuzz(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Property(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(2)
        }
    }
}
