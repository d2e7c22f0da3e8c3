//! `vdmo` — command-line front end for the oracle toolkit.
//!
//! Exit codes, total over every command path:
//!   0  success (for `run`: every comparator verdict true; for `diff`: no
//!      regressions)
//!   1  input problems: unreadable or unparseable specification, suite, or
//!      report files; mapping or emission failures
//!   2  `eval` produced a contract violation
//!   3  `eval` produced an evaluation error
//!   4  `run` recorded at least one comparator=false verdict
//!   5  `diff` found at least one regression
//!   64 command-line usage errors

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;

use vdm_oracle::emit::{emit_driver, emit_oracle_class, write_units};
use vdm_oracle::eval::{expected_result_cfg, EvalConfig, InputToken, OracleOutcome};
use vdm_oracle::harness::{
    diff_runs, run_suite, BuiltinIut, IutAdapter, MutantId, RunConfig, RunReport, SubprocessAdapter,
    Suite,
};
use vdm_oracle::optimize::map_class_with_scope;
use vdm_oracle::parser::parse_source;
use vdm_oracle::resolve::ResolvedClass;
use vdm_oracle::SpecFile;

#[derive(Parser)]
#[command(
    name = "vdmo",
    about = "Specification-based test oracle toolkit for a VDM++ subset",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct SpecArgs {
    /// Specification file (.vdmpp)
    spec: PathBuf,
    /// Class to use when the file defines several (default: the first)
    #[arg(long)]
    class: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a specification and print a summary of each class
    Parse {
        /// Specification file (.vdmpp)
        spec: PathBuf,
    },
    /// Evaluate an entry point on inputs and print the oracle outcome
    Eval {
        #[command(flatten)]
        spec: SpecArgs,
        /// Entry-point function name
        #[arg(long)]
        entry: String,
        /// Comma-separated inputs: integers, single characters, or M, M+1, M-1
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        inputs: String,
        /// Maximum natural bound substituted for the M symbols
        #[arg(long = "max-nat", default_value = "2147483647")]
        max_nat: String,
    },
    /// Emit oracle-class and driver skeletons plus a structure manifest
    Transpile {
        #[command(flatten)]
        spec: SpecArgs,
        /// Output directory for generated units
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        /// Name of the implementation-under-test class for drivers
        /// (default: the specification class name)
        #[arg(long = "iut-class")]
        iut_class: Option<String>,
    },
    /// Run a test suite against an implementation and persist a report
    Run {
        #[command(flatten)]
        spec: SpecArgs,
        /// Suite file (JSON array of test cases)
        #[arg(long)]
        suite: PathBuf,
        /// Implementation under test: builtin:reference, builtin:mutant:<id>,
        /// or exec:<command>
        #[arg(long, default_value = "builtin:reference")]
        iut: String,
        /// Maximum natural bound substituted for the M symbols
        #[arg(long = "max-nat", default_value = "2147483647")]
        max_nat: String,
        /// Directory for persisted run reports
        #[arg(long = "report-dir", default_value = "runs")]
        report_dir: PathBuf,
        /// Per-case timeout in seconds for external implementations
        #[arg(long = "timeout-secs", default_value_t = 5)]
        timeout_secs: u64,
        /// Rendering an implementation may answer to match an oracle-side
        /// rejection (contract violation or evaluation error)
        #[arg(long)]
        rejection: Option<String>,
    },
    /// Compare two run reports and list regressions and fixes
    Diff {
        /// Older report file
        older: PathBuf,
        /// Newer report file
        newer: PathBuf,
    },
}

fn fail(message: impl std::fmt::Display) -> i32 {
    eprintln!("vdmo: {}", message);
    1
}

fn load_spec(path: &Path) -> Result<(String, SpecFile), i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return Err(fail(format!("cannot read {}: {}", path.display(), e))),
    };
    match parse_source(&text) {
        Ok(file) => Ok((text, file)),
        Err(diags) => {
            for d in &diags {
                eprintln!("{}: {}", path.display(), d);
            }
            Err(1)
        }
    }
}

fn pick_class<'a>(file: &'a SpecFile, wanted: &Option<String>, path: &Path) -> Result<&'a str, i32> {
    match wanted {
        None => Ok(&file.classes[0].name),
        Some(name) => match file.find_class(name) {
            Some(c) => Ok(&c.name),
            None => Err(fail(format!("no class '{}' in {}", name, path.display()))),
        },
    }
}

fn parse_max_nat(text: &str) -> Result<BigInt, i32> {
    let m: BigInt = match text.parse() {
        Ok(m) => m,
        Err(_) => return Err(fail(format!("--max-nat '{}' is not an integer", text))),
    };
    if m < BigInt::from(3) {
        return Err(fail("--max-nat must be at least 3"));
    }
    Ok(m)
}

fn parse_inputs(text: &str) -> Result<Vec<InputToken>, i32> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| {
            InputToken::parse(part)
                .ok_or_else(|| fail(format!("cannot decode input token '{}'", part.trim())))
        })
        .collect()
}

fn make_adapter(spec: &str, timeout: Duration) -> Result<Box<dyn IutAdapter>, i32> {
    if spec == "builtin:reference" {
        return Ok(Box::new(BuiltinIut::reference()));
    }
    if let Some(id) = spec.strip_prefix("builtin:mutant:") {
        return match MutantId::parse(id) {
            Some(id) => Ok(Box::new(BuiltinIut::mutant(id))),
            None => Err(fail(format!("unknown mutant '{}' (expected M1..M4)", id))),
        };
    }
    if let Some(command) = spec.strip_prefix("exec:") {
        let parts: Vec<String> = command.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(fail("exec: needs a command"));
        }
        return Ok(Box::new(SubprocessAdapter::new(parts, timeout)));
    }
    Err(fail(format!(
        "unknown --iut '{}' (expected builtin:reference, builtin:mutant:<id>, or exec:<command>)",
        spec
    )))
}

fn cmd_parse(spec: &Path) -> i32 {
    let (_, file) = match load_spec(spec) {
        Ok(v) => v,
        Err(code) => return code,
    };
    for class in &file.classes {
        let supers = if class.superclasses.is_empty() {
            String::new()
        } else {
            format!(" is subclass of {}", class.superclasses.join(", "))
        };
        println!("class {}{}", class.name, supers);
        if !class.type_defs.is_empty() {
            println!(
                "  types: {}",
                class.type_defs.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
            );
        }
        if !class.value_defs.is_empty() {
            println!(
                "  values: {}",
                class.value_defs.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(", ")
            );
        }
        if !class.instance_vars.is_empty() {
            println!(
                "  instance variables: {}",
                class.instance_vars.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(", ")
            );
        }
        println!("  invariant: {}", if class.invariant.is_some() { "present" } else { "none" });
        for f in &class.function_defs {
            println!("  function {} {} ({} parameter(s))", f.access, f.name, f.params.len());
        }
        for op in &class.operations {
            println!("  operation {} {} ({} parameter(s))", op.access, op.name, op.params.len());
        }
    }
    0
}

fn cmd_eval(spec_args: &SpecArgs, entry: &str, inputs: &str, max_nat: &str) -> i32 {
    let (_, file) = match load_spec(&spec_args.spec) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let class_name = match pick_class(&file, &spec_args.class, &spec_args.spec) {
        Ok(n) => n.to_string(),
        Err(code) => return code,
    };
    let resolved = match ResolvedClass::resolve(&file, &class_name) {
        Ok(r) => r,
        Err(d) => return fail(d),
    };
    let m = match parse_max_nat(max_nat) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let tokens = match parse_inputs(inputs) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let outcome = expected_result_cfg(&resolved, &EvalConfig::default(), entry, &tokens, &m);
    println!("{}", outcome);
    match outcome {
        OracleOutcome::Result(_) => 0,
        OracleOutcome::ContractViolation { .. } => 2,
        OracleOutcome::EvalError(_) => 3,
    }
}

fn cmd_transpile(spec_args: &SpecArgs, out_dir: &Path, iut_class: &Option<String>) -> i32 {
    let (_, file) = match load_spec(&spec_args.spec) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let mut units = Vec::new();
    for class in &file.classes {
        let scope = match ResolvedClass::resolve(&file, &class.name) {
            Ok(r) => r,
            Err(d) => return fail(d),
        };
        let model = match map_class_with_scope(class, &scope.class) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let unit = match emit_oracle_class(&model) {
            Ok(u) => u,
            Err(e) => return fail(e),
        };
        units.push(unit);
        let has_public =
            model.methods.iter().any(|m| m.access == vdm_oracle::ast::Access::Public);
        if has_public {
            let iut_name = iut_class.clone().unwrap_or_else(|| class.name.clone());
            match emit_driver(&model, &iut_name) {
                Ok(u) => units.push(u),
                Err(e) => return fail(e),
            }
        }
    }
    match write_units(&units, out_dir) {
        Ok(manifest) => {
            for unit in &units {
                println!("wrote {}", out_dir.join(&unit.filename).display());
            }
            println!("wrote {}", manifest.display());
            0
        }
        Err(e) => fail(format!("cannot write to {}: {}", out_dir.display(), e)),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    spec_args: &SpecArgs,
    suite_path: &Path,
    iut_spec: &str,
    max_nat: &str,
    report_dir: &Path,
    timeout_secs: u64,
    rejection: &Option<String>,
) -> i32 {
    let (source, file) = match load_spec(&spec_args.spec) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let class_name = match pick_class(&file, &spec_args.class, &spec_args.spec) {
        Ok(n) => n.to_string(),
        Err(code) => return code,
    };
    let resolved = match ResolvedClass::resolve(&file, &class_name) {
        Ok(r) => r,
        Err(d) => return fail(d),
    };
    let m = match parse_max_nat(max_nat) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let suite = match Suite::load(suite_path) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let mut adapter = match make_adapter(iut_spec, Duration::from_secs(timeout_secs)) {
        Ok(a) => a,
        Err(code) => return code,
    };
    let config = RunConfig {
        m,
        report_dir: report_dir.to_path_buf(),
        rejection_rendering: rejection.clone(),
        eval: EvalConfig::default(),
    };
    let report = match run_suite(&source, &resolved, &suite, adapter.as_mut(), &config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let s = report.summary;
    println!(
        "run {}: {}/{} passed ({} mismatch, {} oracle-error, {} iut-error, {} iut-timeout)",
        report.run_id, s.passed, s.total, s.mismatch, s.oracle_error, s.iut_error, s.iut_timeout
    );
    for r in report.records.iter().filter(|r| !r.comparator) {
        println!(
            "  case {}: {}({}) oracle={} iut={}",
            r.case_id,
            r.entry,
            r.inputs.join(","),
            r.oracle_outcome,
            r.iut_outcome
        );
    }
    for r in report.records.iter().filter(|r| r.note.is_some()) {
        println!("  note case {}: {}", r.case_id, r.note.as_deref().unwrap_or_default());
    }
    println!("report: {}", report_dir.join(format!("{}.json", report.run_id)).display());
    if s.passed == s.total {
        0
    } else {
        4
    }
}

fn cmd_diff(older: &Path, newer: &Path) -> i32 {
    let old_report = match RunReport::load(older) {
        Ok(r) => r,
        Err(e) => return fail(format!("cannot load {}: {}", older.display(), e)),
    };
    let new_report = match RunReport::load(newer) {
        Ok(r) => r,
        Err(e) => return fail(format!("cannot load {}: {}", newer.display(), e)),
    };
    let diff = match diff_runs(&old_report, &new_report) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    if diff.regressions.is_empty() {
        println!("regressions: none");
    } else {
        println!(
            "regressions: {}",
            diff.regressions.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
        );
    }
    if diff.fixes.is_empty() {
        println!("fixes: none");
    } else {
        println!(
            "fixes: {}",
            diff.fixes.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
        );
    }
    if diff.regressions.is_empty() {
        0
    } else {
        5
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{}", e);
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{}", e);
                    std::process::exit(64);
                }
            }
        }
    };
    let code = match &cli.command {
        Cmd::Parse { spec } => cmd_parse(spec),
        Cmd::Eval { spec, entry, inputs, max_nat } => cmd_eval(spec, entry, inputs, max_nat),
        Cmd::Transpile { spec, out_dir, iut_class } => cmd_transpile(spec, out_dir, iut_class),
        Cmd::Run { spec, suite, iut, max_nat, report_dir, timeout_secs, rejection } => {
            cmd_run(spec, suite, iut, max_nat, report_dir, *timeout_secs, rejection)
        }
        Cmd::Diff { older, newer } => cmd_diff(older, newer),
    };
    std::process::exit(code);
}
