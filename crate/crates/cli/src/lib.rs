//! Argument parsing and command dispatch for the `assign` binary.
//!
//! Exit codes: 0 when the command succeeds or the checked property holds,
//! 1 when the property fails or a witness is found, 2 on usage or input
//! errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use assign_core::assignment::parse_assignment_any;
use assign_core::efficiency::{
    detect_trading_cycle, enumerate_pareto_optimal_discrete, is_ex_post_efficient,
    ExPostVerdict, TradingCycle,
};
use assign_core::mechanisms::{AssignmentRule, Rule};
use assign_core::preference::enumerate_weak_orders;
use assign_core::profile::{default_object_label, parse_profile_any};
use assign_core::strategyproofness::{
    check_extension_of_ps, find_manipulation, sweep_strict_profiles, verify_impossibility_theorem,
    ManipulationScope, Notion, TheoremError,
};
use assign_core::{AgentId, Assignment, Profile, Rational};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "assign", version, about = "Exact random assignment: mechanisms, efficiency and strategyproofness checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a mechanism's assignment for a profile
    Run {
        #[arg(long)]
        mechanism: Rule,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, conflicts_with = "decimal")]
        json: bool,
        /// Print approximate decimals with this many digits instead of fractions
        #[arg(long, value_name = "DIGITS")]
        decimal: Option<usize>,
    },
    /// Check a property of an assignment or a mechanism on a profile
    Check {
        #[arg(long, value_enum)]
        property: Property,
        #[arg(long)]
        profile: PathBuf,
        /// Assignment to check; defaults to the mechanism's outcome
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value = "eps")]
        mechanism: Rule,
        #[arg(long)]
        json: bool,
    },
    /// Search for a profitable misreport
    Manipulate {
        #[arg(long)]
        mechanism: Rule,
        #[arg(long, required_unless_present = "exhaustive_n", conflicts_with = "exhaustive_n")]
        profile: Option<PathBuf>,
        /// Sweep every strict profile with this many agents
        #[arg(long, value_name = "K")]
        exhaustive_n: Option<usize>,
        #[arg(long)]
        notion: Notion,
        /// Only consider misreports by this agent (1-based)
        #[arg(long)]
        agent: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Replay the impossibility argument and re-validate every certificate
    VerifyTheorem {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=5))]
        n: u8,
        #[arg(long)]
        json: bool,
    },
    /// List weak orders or Pareto optimal matchings
    Enumerate {
        #[arg(long, value_name = "K", conflicts_with = "po_matchings", required_unless_present = "po_matchings")]
        weak_orders: Option<usize>,
        #[arg(long, value_name = "FILE")]
        po_matchings: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Property {
    SdEfficiency,
    ExPost,
    PoDiscrete,
    Extension,
    Symmetry,
}

type Outcome = Result<i32, String>;

/// Parses `argv` (including the program name) and runs the command.
pub fn run_command<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut out = String::new();
    let result = dispatch(cli.command, &mut out);
    let _ = stdout.write_all(out.as_bytes());
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut String) -> Outcome {
    match command {
        Command::Run { mechanism, profile, json, decimal } => run(mechanism, &profile, json, decimal, out),
        Command::Check { property, profile, matrix, mechanism, json } => {
            check(property, &profile, matrix.as_deref(), mechanism, json, out)
        }
        Command::Manipulate { mechanism, profile, exhaustive_n, notion, agent, json } => match (profile, exhaustive_n) {
            (Some(path), _) => manipulate_profile(mechanism, &path, notion, agent, json, out),
            (None, Some(n)) => manipulate_sweep(mechanism, n, notion, json, out),
            (None, None) => Err("give --profile or --exhaustive-n".into()),
        },
        Command::VerifyTheorem { n, json } => verify_theorem(n as usize, json, out),
        Command::Enumerate { weak_orders, po_matchings, json } => match (weak_orders, po_matchings) {
            (Some(k), _) => enumerate_orders(k, json, out),
            (None, Some(path)) => enumerate_po(&path, json, out),
            (None, None) => Err("give --weak-orders or --po-matchings".into()),
        },
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn load_profile(path: &Path) -> Result<Profile, String> {
    parse_profile_any(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_matrix(path: &Path, profile: &Profile) -> Result<Assignment, String> {
    let p = parse_assignment_any(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    if p.n() != profile.n() {
        return Err(format!("{}: matrix is {}x{} but the profile has {} agents", path.display(), p.n(), p.n(), profile.n()));
    }
    Ok(p)
}

fn assign(rule: Rule, profile: &Profile) -> Result<Assignment, String> {
    rule.assign(profile).map_err(|e| format!("{rule}: {e}"))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn format_table(p: &Assignment, profile: &Profile, decimal: Option<usize>) -> String {
    let cell = |v: &Rational| match decimal {
        Some(k) => v.to_decimal_string(k),
        None => v.to_string(),
    };
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(p.n() + 1);
    grid.push(std::iter::once(String::new()).chain(profile.objects().iter().cloned()).collect());
    for (i, row) in p.rows().iter().enumerate() {
        grid.push(std::iter::once(profile.agent_label(AgentId(i)).to_string()).chain(row.iter().map(cell)).collect());
    }
    let widths: Vec<usize> =
        (0..=p.n()).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut text = String::new();
    if let Some(k) = decimal {
        text.push_str(&format!("# approximate: decimals rounded to {k} digits\n"));
    }
    for row in grid {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect();
        text.push_str(cells.join("  ").trim_end());
        text.push('\n');
    }
    text
}

fn run(rule: Rule, path: &Path, json: bool, decimal: Option<usize>, out: &mut String) -> Outcome {
    let profile = load_profile(path)?;
    let p = assign(rule, &profile)?;
    if json {
        out.push_str(&to_json(&p));
    } else {
        out.push_str(&format_table(&p, &profile, decimal));
    }
    Ok(EXIT_OK)
}

fn verdict(holds: bool) -> i32 {
    if holds {
        EXIT_OK
    } else {
        EXIT_FAILS
    }
}

fn subject(profile: &Profile, matrix: Option<&Path>, rule: Rule) -> Result<Assignment, String> {
    match matrix {
        Some(m) => load_matrix(m, profile),
        None => assign(rule, profile),
    }
}

fn check(property: Property, path: &Path, matrix: Option<&Path>, rule: Rule, json: bool, out: &mut String) -> Outcome {
    let profile = load_profile(path)?;
    match property {
        Property::SdEfficiency => {
            let p = subject(&profile, matrix, rule)?;
            let cycle = detect_trading_cycle(&p, &profile);
            if json {
                out.push_str(&to_json(&json!({ "sd_efficient": cycle.is_none(), "cycle": cycle })));
            } else {
                write_cycle_verdict(cycle.as_ref(), &profile, out);
            }
            Ok(verdict(cycle.is_none()))
        }
        Property::ExPost => {
            let p = subject(&profile, matrix, rule)?;
            let v = is_ex_post_efficient(&p, &profile).map_err(|e| e.to_string())?;
            if json {
                out.push_str(&to_json(&v));
            } else {
                match &v {
                    ExPostVerdict::Efficient { decomposition } => {
                        out.push_str("ex post efficient\ndecomposition:\n");
                        for w in decomposition {
                            out.push_str(&format!("  {}  {}\n", w.weight, format_matching(&w.matching, &profile)));
                        }
                    }
                    ExPostVerdict::NotEfficient { certificate } => {
                        out.push_str("not ex post efficient\n");
                        let labels: Vec<String> = certificate.multipliers.iter().map(Rational::to_string).collect();
                        out.push_str(&format!("farkas multipliers: {}\n", labels.join(" ")));
                    }
                }
            }
            Ok(verdict(v.is_efficient()))
        }
        Property::PoDiscrete => {
            let p = subject(&profile, matrix, rule)?;
            let Some(m) = p.as_discrete() else {
                return Err("po-discrete needs a 0/1 matrix".into());
            };
            let cycle = detect_trading_cycle(&p, &profile);
            if json {
                out.push_str(&to_json(
                    &json!({ "matching": m.objects(), "pareto_optimal": cycle.is_none(), "cycle": cycle }),
                ));
            } else {
                out.push_str(&format!("matching: {}\n", format_matching(m.objects(), &profile)));
                out.push_str(if cycle.is_none() { "pareto optimal\n" } else { "not pareto optimal\n" });
                if let Some(c) = &cycle {
                    out.push_str(&format!("trading cycle: {}\n", c.display(&profile)));
                }
            }
            Ok(verdict(cycle.is_none()))
        }
        Property::Extension => {
            if matrix.is_some() {
                return Err("extension is a property of a mechanism; drop --matrix".into());
            }
            let report = check_extension_of_ps(&rule, profile.n()).map_err(|e| e.to_string())?;
            if json {
                out.push_str(&to_json(&report));
            } else {
                let scope = if report.exhaustive { "all" } else { "sampled" };
                out.push_str(&format!(
                    "{rule} vs ps on {scope} strict profiles with {} agents: {} checked\n",
                    report.n, report.profiles_checked
                ));
                match &report.first_discrepancy {
                    None => out.push_str("extension of ps: holds\n"),
                    Some(d) => {
                        out.push_str("extension of ps: fails\nprofile:\n");
                        out.push_str(&indent(&d.profile.to_text()));
                        out.push_str("ps:\n");
                        out.push_str(&indent(&d.expected.to_text()));
                        out.push_str(&format!("{rule}:\n"));
                        out.push_str(&indent(&d.got.to_text()));
                    }
                }
            }
            Ok(verdict(report.holds()))
        }
        Property::Symmetry => {
            if matrix.is_some() {
                return Err("symmetry is a property of a mechanism; drop --matrix".into());
            }
            let report = assign_core::strategyproofness::check_symmetry_properties(&rule, &profile)
                .map_err(|e| e.to_string())?;
            let holds = report.anonymous && report.neutral && report.equal_treatment;
            if json {
                out.push_str(&to_json(&report));
            } else {
                let yn = |b: bool| if b { "yes" } else { "no" };
                out.push_str(&format!("anonymous: {}\n", yn(report.anonymous)));
                out.push_str(&format!("neutral: {}\n", yn(report.neutral)));
                out.push_str(&format!("equal treatment: {}\n", yn(report.equal_treatment)));
                for v in &report.violations {
                    out.push_str(&format!("  {v}\n"));
                }
            }
            Ok(verdict(holds))
        }
    }
}

fn write_cycle_verdict(cycle: Option<&TradingCycle>, profile: &Profile, out: &mut String) {
    match cycle {
        None => out.push_str("sd-efficient: no trading cycle\n"),
        Some(c) => {
            out.push_str("not sd-efficient\n");
            out.push_str(&format!("trading cycle: {}\n", c.display(profile)));
        }
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

fn format_matching(objects: &[usize], profile: &Profile) -> String {
    objects
        .iter()
        .enumerate()
        .map(|(i, &o)| format!("{}->{}", profile.agent_label(AgentId(i)), profile.objects()[o]))
        .collect::<Vec<_>>()
        .join(" ")
}

fn manipulate_profile(
    rule: Rule,
    path: &Path,
    notion: Notion,
    agent: Option<usize>,
    json: bool,
    out: &mut String,
) -> Outcome {
    let profile = load_profile(path)?;
    let agents = match agent {
        Some(a) if a == 0 || a > profile.n() => return Err(format!("--agent must be between 1 and {}", profile.n())),
        Some(a) => Some(vec![AgentId(a - 1)]),
        None => None,
    };
    let scope = ManipulationScope { agents, misreports: None };
    let witness = find_manipulation(&rule, &profile, notion, &scope).map_err(|e| e.to_string())?;
    if json {
        out.push_str(&to_json(&witness));
    } else {
        match &witness {
            Some(w) => out.push_str(&w.to_text()),
            None => out.push_str("none\n"),
        }
    }
    Ok(verdict(witness.is_none()))
}

fn manipulate_sweep(rule: Rule, n: usize, notion: Notion, json: bool, out: &mut String) -> Outcome {
    let report = sweep_strict_profiles(&rule, n, notion).map_err(|e| e.to_string())?;
    if json {
        out.push_str(&to_json(&report));
    } else {
        out.push_str(&format!(
            "{rule}, {notion}: {} strict profiles, {} misreports checked, {} violations\n",
            report.profiles, report.checks, report.violations
        ));
        match &report.first_witness {
            Some(w) => {
                out.push_str("first witness:\n");
                out.push_str(&w.to_text());
            }
            None => out.push_str("none\n"),
        }
    }
    Ok(verdict(report.violations == 0))
}

fn verify_theorem(n: usize, json: bool, out: &mut String) -> Outcome {
    let cert = match verify_impossibility_theorem(n) {
        Ok(cert) => cert,
        Err(e @ TheoremError::UnsupportedSize { .. }) => return Err(e.to_string()),
        Err(e) => {
            out.push_str(&format!("verification failed: {e}\n"));
            return Ok(EXIT_FAILS);
        }
    };
    if let Err(e) = cert.revalidate() {
        out.push_str(&format!("re-validation failed: {e}\n"));
        return Ok(EXIT_FAILS);
    }
    if json {
        out.push_str(&to_json(&cert));
    } else {
        out.push_str(&cert.to_text());
    }
    Ok(verdict(cert.verified))
}

fn enumerate_orders(k: usize, json: bool, out: &mut String) -> Outcome {
    let orders = enumerate_weak_orders(k).map_err(|e| e.to_string())?;
    if json {
        out.push_str(&to_json(&orders));
        return Ok(EXIT_OK);
    }
    for order in &orders {
        let classes: Vec<String> = order
            .classes()
            .iter()
            .map(|c| c.iter().map(|o| default_object_label(o.0)).collect::<Vec<_>>().join(" ~ "))
            .collect();
        out.push_str(&classes.join(" > "));
        out.push('\n');
    }
    Ok(EXIT_OK)
}

fn enumerate_po(path: &Path, json: bool, out: &mut String) -> Outcome {
    let profile = load_profile(path)?;
    let matchings = enumerate_pareto_optimal_discrete(&profile).map_err(|e| e.to_string())?;
    if json {
        out.push_str(&to_json(&matchings));
        return Ok(EXIT_OK);
    }
    for m in &matchings {
        out.push_str(&format_matching(m.objects(), &profile));
        out.push('\n');
    }
    Ok(EXIT_OK)
}

