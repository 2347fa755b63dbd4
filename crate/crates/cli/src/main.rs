//! `mbar0`: exact intersection theory on moduli of stable pointed genus-0
//! curves, and the bielliptic-locus pipeline.
//!
//! Output is deterministic: identical invocations produce byte-identical
//! output. Exit codes: 0 success, 1 domain errors (grade mismatches,
//! not-in-span, inconsistent surface data), 2 parse or usage errors.

use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbar0::bielliptic;
use mbar0::expr::TautExpr;
use mbar0::invariant::{to_invariant, InvariantClass};
use mbar0::selftest;
use mbar0::strata::{orbit_decompose, standard_involution, Permutation};
use mbar0::TautClass;

const EXPRESSION_GRAMMAR: &str = "\
Expression grammar (the ambient marking count n is given with --n):
  expr   := term (('+'|'-') term)*
  term   := factor ('*' factor)*
  factor := '-' factor | rational | atom | '(' expr ')'
  atom   := D(<part>|<part>)            boundary divisor, e.g. D(15|2346)
          | S(<part>|...|<part>)        boundary stratum,  e.g. S(1278|56|34)
          | psi(<marking>)              cotangent class
          | kappa(<index>)              kappa class, index >= 1
  rational := integer ('/' integer)?    e.g. 3, -5, 3/2
Marking lists are digit strings for n <= 9 (e.g. 1278) and comma-separated
for n = 10. The parts of D(...) and S(...) must partition 1..n.";

#[derive(Parser)]
#[command(
    name = "mbar0",
    about = "Exact intersection theory on moduli spaces of stable pointed genus-0 curves",
    after_help = EXPRESSION_GRAMMAR,
    version
)]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisKind {
    /// The normal-form boundary strata combination.
    Strata,
    /// Coordinates over the invariant orbit sums d_λ.
    Invariant,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression to its normal-form strata combination.
    Eval {
        expression: String,
        /// Marking count (3..=10).
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=10))]
        n: u8,
    },
    /// Evaluate and integrate a top-grade expression.
    Integrate {
        expression: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=10))]
        n: u8,
    },
    /// Express an evaluated class in a basis.
    Express {
        expression: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=10))]
        n: u8,
        #[arg(long, value_enum, default_value = "invariant")]
        basis: BasisKind,
    },
    /// Sum the conjugates of a class attached to a fixed-point-free
    /// involution over its whole conjugacy class.
    Symmetrize {
        expression: String,
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=10))]
        n: u8,
        /// Base involution in cycle notation, e.g. "(12)(34)(56)(78)".
        /// Defaults to (12)(34)...(n-1,n); n must be even.
        #[arg(long)]
        base_involution: Option<String>,
        #[arg(long, value_enum, default_value = "strata")]
        basis: BasisKind,
    },
    /// List the orbits of boundary strata under the symmetric group.
    Orbits {
        #[arg(long, value_parser = clap::value_parser!(u8).range(3..=10))]
        n: u8,
        #[arg(long)]
        codim: u8,
    },
    /// Run the bielliptic pipeline for genus 2 or 3.
    Pipeline {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        genus: u8,
        /// JSON file with test surfaces [{name, numbers: [7 strings],
        /// expected_count}]; defaults to the built-in data.
        #[arg(long)]
        surfaces: Option<std::path::PathBuf>,
    },
    /// Run the acceptance checks (suites: all, quick).
    Selftest {
        #[arg(default_value = "all")]
        suite: String,
    },
}

enum CliError {
    /// Malformed input: exit code 2.
    Parse(String),
    /// Domain failure: exit code 1.
    Domain(String),
}

impl CliError {
    fn parse(e: impl std::fmt::Display) -> Self {
        CliError::Parse(e.to_string())
    }

    fn domain(e: impl std::fmt::Display) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    mbar0::configure_threads_from_env();
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Eval { expression, n } => {
            let class = evaluate(n, &expression)?;
            Ok(render_class(&class, cli.json))
        }
        Command::Integrate { expression, n } => {
            let class = evaluate(n, &expression)?;
            let value = class.integrate().map_err(CliError::domain)?;
            if cli.json {
                Ok(format!("{{\"value\":\"{value}\"}}\n"))
            } else {
                Ok(format!("{value}\n"))
            }
        }
        Command::Express {
            expression,
            n,
            basis,
        } => {
            let class = evaluate(n, &expression)?;
            match basis {
                BasisKind::Strata => Ok(render_class(&class, cli.json)),
                BasisKind::Invariant => {
                    let inv = to_invariant(&class).map_err(CliError::domain)?;
                    Ok(render_invariant(&inv, cli.json))
                }
            }
        }
        Command::Symmetrize {
            expression,
            n,
            base_involution,
            basis,
        } => {
            let class = evaluate(n, &expression)?;
            let base = match base_involution {
                Some(text) => Permutation::from_cycles(n, &text).map_err(CliError::parse)?,
                None => standard_involution(n).map_err(CliError::domain)?,
            };
            let total =
                mbar0::invariant::sum_over_conjugates(&class, &base).map_err(CliError::domain)?;
            match basis {
                BasisKind::Strata => Ok(render_class(&total, cli.json)),
                BasisKind::Invariant => {
                    let inv = to_invariant(&total).map_err(CliError::domain)?;
                    Ok(render_invariant(&inv, cli.json))
                }
            }
        }
        Command::Orbits { n, codim } => {
            let orbits = orbit_decompose(n, codim).map_err(CliError::domain)?;
            if cli.json {
                let items: Vec<serde_json::Value> = orbits
                    .iter()
                    .map(|(shape, count)| {
                        serde_json::json!({"shape": shape.to_string(), "count": count})
                    })
                    .collect();
                Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&items).expect("serializable")
                ))
            } else {
                let mut out = String::new();
                for (shape, count) in &orbits {
                    writeln!(out, "{shape}: {count}").unwrap();
                }
                Ok(out)
            }
        }
        Command::Pipeline { genus, surfaces } => {
            let supplied = match surfaces {
                None => None,
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        CliError::Domain(format!("cannot read {}: {e}", path.display()))
                    })?;
                    Some(bielliptic::parse_surfaces(&text).map_err(CliError::parse)?)
                }
            };
            if genus == 2 {
                let sol = bielliptic::solve_genus2().map_err(CliError::domain)?;
                if cli.json {
                    Ok(format!(
                        "{}\n",
                        serde_json::to_string_pretty(&sol).expect("serializable")
                    ))
                } else {
                    Ok(render_genus2(&sol))
                }
            } else {
                let report =
                    bielliptic::report(supplied.as_deref()).map_err(CliError::domain)?;
                if cli.json {
                    Ok(format!(
                        "{}\n",
                        serde_json::to_string_pretty(&report).expect("serializable")
                    ))
                } else {
                    Ok(render_genus3(&report))
                }
            }
        }
        Command::Selftest { suite } => {
            let results = selftest::run_suite(&suite)
                .ok_or_else(|| CliError::Parse(format!("unknown suite {suite:?}")))?;
            let mut out = String::new();
            let mut failed = 0usize;
            for r in &results {
                writeln!(out, "{}", r.line()).unwrap();
                if !r.passed {
                    failed += 1;
                }
            }
            writeln!(out, "selftest: {} passed, {failed} failed", results.len() - failed)
                .unwrap();
            if failed > 0 {
                print!("{out}");
                return Err(CliError::Domain(format!("{failed} check(s) failed")));
            }
            Ok(out)
        }
    }
}

fn evaluate(n: u8, expression: &str) -> Result<TautClass, CliError> {
    let parsed = TautExpr::parse(n, expression).map_err(CliError::parse)?;
    parsed.evaluate().map_err(CliError::domain)
}

fn render_class(class: &TautClass, json: bool) -> String {
    if json {
        let terms: Vec<serde_json::Value> = class
            .terms()
            .map(|(tree, coeff)| {
                let stratum: serde_json::Value = if tree.chain_parts().is_some() {
                    serde_json::Value::String(tree.to_string())
                } else {
                    serde_json::to_value(tree).expect("serializable")
                };
                serde_json::json!({"stratum": stratum, "coeff": coeff.to_string()})
            })
            .collect();
        let doc = serde_json::json!({
            "n": class.n(),
            "codim": class.codim(),
            "terms": terms,
        });
        format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"))
    } else {
        let mut out = format!(
            "n={} codim={} terms={}\n",
            class.n(),
            class.codim(),
            class.num_terms()
        );
        for (tree, coeff) in class.terms() {
            writeln!(out, "{coeff}\t{tree}").unwrap();
        }
        out
    }
}

fn render_invariant(inv: &InvariantClass, json: bool) -> String {
    if json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(inv).expect("serializable")
        )
    } else {
        let mut out = String::new();
        for (shape, coeff) in inv.coeffs() {
            writeln!(out, "{shape} = {coeff}").unwrap();
        }
        out
    }
}

fn render_genus2(sol: &bielliptic::Genus2Solution) -> String {
    let mut out = String::new();
    writeln!(out, "genus 2 bielliptic class").unwrap();
    writeln!(
        out,
        "  lambda form: {}*lambda + {}*delta_1",
        sol.lambda_form[0], sol.lambda_form[1]
    )
    .unwrap();
    writeln!(
        out,
        "  delta form:  {}*delta_0 + {}*delta_1",
        sol.delta_form[0], sol.delta_form[1]
    )
    .unwrap();
    writeln!(out, "  invariant locus: {}", sol.i6_inv).unwrap();
    out
}

fn render_genus3(report: &bielliptic::Report) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "genus 3 bielliptic class over ({})",
        report.genus3.basis.join(", ")
    )
    .unwrap();
    let coords: Vec<String> = report.genus3.coords.iter().map(|c| c.to_string()).collect();
    writeln!(out, "  coords: {}", coords.join(", ")).unwrap();
    writeln!(out, "  epsilon: {}", report.genus3.epsilon).unwrap();
    writeln!(out, "  delta_0^2 coefficient: {}", report.genus3.delta0_sq).unwrap();
    writeln!(out, "  invariant locus (eight markings): {}", report.i8inv).unwrap();
    writeln!(out, "  pull-back matrix rank: {}", report.phi_matrix.rank).unwrap();
    writeln!(out, "  surface checks:").unwrap();
    for check in &report.surface_checks {
        writeln!(
            out,
            "    {}: predicted {}, expected {}, {}",
            check.name,
            check.predicted,
            check.expected,
            if check.consistent { "ok" } else { "MISMATCH" }
        )
        .unwrap();
    }
    if !report.external_surfaces.is_empty() {
        writeln!(out, "  external surfaces (external data required):").unwrap();
        for ext in &report.external_surfaces {
            let reference = ext
                .reference_expectation
                .as_ref()
                .map(|r| format!(", reference {r}"))
                .unwrap_or_default();
            writeln!(
                out,
                "    {}: predicted {}, supplied {}{}",
                ext.name, ext.predicted, ext.supplied_count, reference
            )
            .unwrap();
        }
    }
    out
}
