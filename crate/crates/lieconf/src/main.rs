//! Command-line front end: parse algebra definitions, run the structure
//! analyses, and emit human-readable or JSON reports.
//!
//! Exit codes: 0 on success, 1 on input or computation errors, 2 when
//! axiom violations are detected, 3 when a degree cap or candidate budget
//! is exhausted.

use clap::{Parser, Subcommand, ValueEnum};
use lieconf::conformal::{CapConfig, ConformalAlgebra};
use lieconf::error::Error;
use lieconf::report::{self, SCHEMA_VERSION};
use lieconf::textio::{self, Definition};
use lieconf::vertex::{RootConfig, VertexAlgebra};
use std::io::Read;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "lieconf", version, about = "Structure theory of Lie conformal algebras and finite vertex algebras, in exact arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Initial degree cap for linear solves over k[D] (doubles up to 16x).
    #[arg(long, global = true, default_value_t = 4)]
    cap: usize,
    /// Truncation order for vertex-axiom and product-window checks.
    #[arg(long, global = true, default_value_t = 8)]
    truncation: i64,
    /// Candidate budget of the minimal-singularity search.
    #[arg(long, global = true, default_value_t = 200)]
    budget: usize,
    /// Seed for candidate-enumeration tie-breaks (the mathematics is exact).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Definition file ("-" reads standard input).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the axioms of the input algebra.
    Check,
    /// Derived series, central series and the stabilized ideal.
    Series,
    /// Solvability, nilpotence, derived length and related structure data.
    Classify,
    /// Generalized weight decomposition for the adjoint action of an
    /// element (modifying it first if needed); for vertex input without an
    /// element, the full root-space decomposition.
    Decompose {
        /// Element expression, e.g. "u + D*n".
        #[arg(long, visible_alias = "generator")]
        element: Option<String>,
    },
    /// Modify an element so that it generates a nilpotent subalgebra.
    Modify {
        /// Element expression, e.g. "u + D*n".
        #[arg(long)]
        element: String,
    },
    /// Materialize a built-in algebra (available: vertex-M).
    Example { which: String },
    /// Aggregate report: classification, series and axiom checks.
    Report,
}

fn main() {
    let cli = Cli::parse();
    let code = match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(msg)) => {
            eprintln!("error: {}", msg.0);
            msg.1
        }
        Err(_) => {
            eprintln!("error: internal panic (please report)");
            1
        }
    };
    std::process::exit(code);
}

struct Failure(String, i32);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::CapExhausted(_)
            | Error::BudgetExhausted(_)
            | Error::IterationCap(_)
            | Error::OutsideWindow { .. } => 3,
            _ => 1,
        };
        Failure(e.to_string(), code)
    }
}

impl From<textio::ParseError> for Failure {
    fn from(e: textio::ParseError) -> Self {
        Failure(e.to_string(), 1)
    }
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let cap = CapConfig { initial: cli.cap.max(1), max: (cli.cap.max(1)) * 16 };
    match &cli.command {
        Cmd::Example { which } => {
            if which != "vertex-M" {
                return Err(Failure(format!("unknown example '{which}' (available: vertex-M)"), 1));
            }
            let v = VertexAlgebra::example();
            let definition = textio::serialize_vertex("M", &v);
            match cli.format {
                Format::Text => print!("{definition}"),
                Format::Json => {
                    let rep = report::ExampleReport {
                        schema_version: SCHEMA_VERSION,
                        command: "example".into(),
                        name: "M".into(),
                        definition,
                    };
                    println!("{}", serde_json::to_string_pretty(&rep).unwrap());
                }
            }
            Ok(0)
        }
        Cmd::Check => {
            let def = load(cli)?;
            match &def {
                Definition::Conformal { name, algebra, warnings } => {
                    let rep = report::build_check_conformal(name, warnings, algebra);
                    emit(cli, &rep, |out| {
                        out.push_str(&format!("algebra {}: ", rep.name));
                        if rep.passes {
                            out.push_str("all conformal axioms hold\n");
                        } else {
                            out.push_str("axiom violations found\n");
                            for v in &rep.violations {
                                out.push_str(&format!("  {v}\n"));
                            }
                        }
                    });
                    Ok(if rep.passes { 0 } else { 2 })
                }
                Definition::Vertex { name, algebra, warnings } => {
                    let rep = report::build_check_vertex(name, warnings, algebra, cli.truncation)?;
                    emit(cli, &rep, |out| {
                        out.push_str(&format!("vertex algebra {}: ", rep.name));
                        if rep.passes {
                            out.push_str("all vertex axioms hold at this truncation\n");
                        } else {
                            out.push_str("axiom violations found\n");
                            for v in &rep.violations {
                                out.push_str(&format!("  {v}\n"));
                            }
                        }
                        if let Some(orders) = &rep.locality_orders {
                            for (pair, n) in orders {
                                out.push_str(&format!("  locality order N({pair}) = {n}\n"));
                            }
                        }
                    });
                    Ok(if rep.passes { 0 } else { 2 })
                }
            }
        }
        Cmd::Classify => {
            let (name, algebra, warnings) = conformal_input(cli)?;
            let rep = report::build_classify(&name, &warnings, &algebra, cap);
            emit(cli, &rep, |out| {
                banner(out, &rep.name, rep.axioms_verified);
                out.push_str(&format!(
                    "solvable: {}\nnilpotent: {}\nabelian: {}\n",
                    rep.solvable, rep.nilpotent, rep.abelian
                ));
                if let Some(d) = rep.derived_length {
                    out.push_str(&format!("derived length: {d}\n"));
                }
                out.push_str(&format!(
                    "stabilized ideal: rank {} generated by [{}]\n",
                    rep.stabilized_ideal_rank,
                    rep.stabilized_ideal.join(", ")
                ));
                out.push_str(&format!(
                    "centre: [{}] ({})\n",
                    rep.centre.join(", "),
                    rep.centre_status
                ));
            });
            Ok(code_for_verified(rep.axioms_verified))
        }
        Cmd::Series => {
            let (name, algebra, warnings) = conformal_input(cli)?;
            let rep = report::build_series(&name, &warnings, &algebra);
            emit(cli, &rep, |out| {
                banner(out, &rep.name, rep.axioms_verified);
                out.push_str("derived series:\n");
                for (i, term) in rep.derived_series.iter().enumerate() {
                    out.push_str(&format!("  L^({i}) = [{}]\n", term.join(", ")));
                }
                out.push_str("central series:\n");
                for (i, term) in rep.central_series.iter().enumerate() {
                    out.push_str(&format!("  L^[{i}] = [{}]\n", term.join(", ")));
                }
                out.push_str(&format!(
                    "stabilized ideal: [{}]\n",
                    rep.stabilized_ideal.join(", ")
                ));
            });
            Ok(code_for_verified(rep.axioms_verified))
        }
        Cmd::Modify { element } => {
            let (name, algebra, warnings) = conformal_input(cli)?;
            let rep =
                report::build_modify(&name, &warnings, Arc::new(algebra), element, cap, cli.seed)?;
            emit(cli, &rep, |out| {
                banner(out, &rep.name, rep.axioms_verified);
                out.push_str(&format!("original: {}\n", rep.original));
                out.push_str(&format!("modified: {}\n", rep.result));
                out.push_str(&format!("singularity: {}\n", rep.singularity));
                for s in &rep.steps {
                    out.push_str(&format!("  step {}", s.case));
                    if let Some(c) = &s.correction {
                        out.push_str(&format!(" correction {c}"));
                    }
                    if let Some(c) = &s.lift_correction {
                        out.push_str(&format!(" lift correction {c}"));
                    }
                    out.push('\n');
                }
            });
            Ok(code_for_verified(rep.axioms_verified))
        }
        Cmd::Decompose { element } => {
            let def = load(cli)?;
            match (&def, element) {
                (Definition::Vertex { name, algebra, warnings }, None) => {
                    let rep = report::build_root(
                        name,
                        warnings,
                        algebra,
                        RootConfig {
                            cap,
                            truncation: cli.truncation,
                            candidate_budget: cli.budget,
                            seed: cli.seed,
                        },
                    )?;
                    emit(cli, &rep, |out| {
                        out.push_str(&format!("vertex algebra {}\n", rep.name));
                        out.push_str(&format!("candidate of minimal singularity: {}\n", rep.candidate));
                        out.push_str(&format!("modified element: {}\n", rep.modified));
                        out.push_str(&format!("singularity: {}\n", rep.singularity));
                        out.push_str(&format!("U = span{{{}}}\n", rep.u_part.join(", ")));
                        out.push_str(&format!("N = span{{{}}}\n", rep.n_part.join(", ")));
                    });
                    Ok(if rep.vertex_axioms_pass { 0 } else { 2 })
                }
                (_, None) => Err(Failure(
                    "decompose needs --element for a conformal algebra".into(),
                    1,
                )),
                (_, Some(expr)) => {
                    let (name, algebra, warnings) = conformal_of(def)?;
                    let rep = report::build_decompose(
                        &name,
                        &warnings,
                        Arc::new(algebra),
                        expr,
                        cap,
                        cli.seed,
                    )?;
                    emit(cli, &rep, |out| {
                        banner(out, &rep.name, rep.axioms_verified);
                        out.push_str(&format!("element: {}\n", rep.element));
                        if rep.modified != rep.element {
                            out.push_str(&format!("modified to: {}\n", rep.modified));
                        }
                        for (w, gens) in &rep.weights {
                            out.push_str(&format!("  weight {w}: span{{{}}}\n", gens.join(", ")));
                        }
                        out.push_str(&format!("covers the module: {}\n", rep.covers));
                        out.push_str(&format!("U = span{{{}}}\n", rep.u_part.join(", ")));
                        out.push_str(&format!("N = span{{{}}}\n", rep.n_part.join(", ")));
                        out.push_str(&format!("singularity: {}\n", rep.singularity));
                    });
                    Ok(code_for_verified(rep.axioms_verified))
                }
            }
        }
        Cmd::Report => {
            let def = load(cli)?;
            let value = match &def {
                Definition::Conformal { name, algebra, warnings } => {
                    let verified = algebra.check_axioms().passes();
                    let (centre, status) = algebra.centre(cap);
                    let stabilized = algebra.stabilized_ideal();
                    serde_json::json!({
                        "schema_version": SCHEMA_VERSION,
                        "command": "report",
                        "name": name,
                        "kind": "conformal",
                        "warnings": warnings,
                        "axioms_verified": verified,
                        "violations": report::axiom_violations(algebra),
                        "solvable": algebra.is_solvable(),
                        "nilpotent": algebra.is_nilpotent(),
                        "abelian": algebra.is_abelian(),
                        "derived_length": algebra.derived_length(),
                        "stabilized_ideal_rank": stabilized.module_rank(),
                        "stabilized_ideal": report::submodule_generators(&stabilized),
                        "centre": report::submodule_generators(&centre),
                        "centre_status": report::cap_status(status),
                        "derived_series": algebra.derived_series().iter().map(report::submodule_generators).collect::<Vec<_>>(),
                        "central_series": algebra.central_series().iter().map(report::submodule_generators).collect::<Vec<_>>(),
                    })
                }
                Definition::Vertex { name, algebra, warnings } => {
                    let check = algebra.check_vertex_axioms(cli.truncation)?;
                    let lie = algebra.lie_functor()?;
                    let dec = algebra.root_space_decomposition(RootConfig {
                        cap,
                        truncation: cli.truncation,
                        candidate_budget: cli.budget,
                        seed: cli.seed,
                    })?;
                    serde_json::json!({
                        "schema_version": SCHEMA_VERSION,
                        "command": "report",
                        "name": name,
                        "kind": "vertex",
                        "warnings": warnings,
                        "vertex_axioms_pass": check.passes(),
                        "violations": report::vertex_violations(&check),
                        "locality_orders": report::locality_orders(&check),
                        "lie_solvable": lie.is_solvable(),
                        "lie_nilpotent": lie.is_nilpotent(),
                        "lie_derived_length": lie.derived_length(),
                        "candidate": dec.candidate.to_string(),
                        "modified": dec.trace.result.to_string(),
                        "singularity": dec.singularity,
                        "u_part": report::submodule_generators(&dec.u_part),
                        "n_part": report::submodule_generators(&dec.n_part),
                    })
                }
            };
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&value).unwrap()),
                Format::Text => print_value_text(&value),
            }
            let ok = match &def {
                Definition::Conformal { algebra, .. } => algebra.check_axioms().passes(),
                Definition::Vertex { algebra, .. } => {
                    algebra.check_vertex_axioms(cli.truncation)?.passes()
                }
            };
            Ok(if ok { 0 } else { 2 })
        }
    }
}

fn banner(out: &mut String, name: &str, verified: bool) {
    out.push_str(&format!("algebra {name}\n"));
    if !verified {
        out.push_str("WARNING: axioms unverified - the bracket table violates the axioms\n");
    }
}

fn code_for_verified(verified: bool) -> i32 {
    if verified {
        0
    } else {
        2
    }
}

fn load(cli: &Cli) -> Result<Definition, Failure> {
    let Some(path) = &cli.input else {
        return Err(Failure("no --input given (use --input <path> or --input -)".into(), 1));
    };
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure(format!("cannot read stdin: {e}"), 1))?;
        buf
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Failure(format!("cannot read {}: {e}", path.display()), 1))?
    };
    Ok(textio::parse_definition(&text)?)
}

fn conformal_input(cli: &Cli) -> Result<(String, ConformalAlgebra, Vec<String>), Failure> {
    conformal_of(load(cli)?)
}

/// Conformal view of any input: vertex algebras contribute their Lie part.
fn conformal_of(def: Definition) -> Result<(String, ConformalAlgebra, Vec<String>), Failure> {
    match def {
        Definition::Conformal { name, algebra, warnings } => Ok((name, algebra, warnings)),
        Definition::Vertex { name, algebra, mut warnings } => {
            warnings.push("using the Lie conformal part of the vertex algebra".into());
            let lie = algebra.lie_functor()?;
            Ok((name, lie, warnings))
        }
    }
}

fn emit<T: serde::Serialize>(cli: &Cli, rep: &T, text: impl FnOnce(&mut String)) {
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(rep).unwrap()),
        Format::Text => {
            let mut out = String::new();
            text(&mut out);
            print!("{out}");
        }
    }
}

fn print_value_text(v: &serde_json::Value) {
    if let serde_json::Value::Object(map) = v {
        for (k, val) in map {
            println!("{k}: {val}");
        }
    } else {
        println!("{v}");
    }
}
