//! Command-line front end. [`run`] parses arguments, dispatches, and returns
//! the process exit code: 0 on success, 1 when a solver fails on a valid
//! problem, 2 on bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::belief::{first_order_dominates, mlrp_compare, reduce_distribution, Distribution};
use crate::cara::{cara_compstat, CaraSystem};
use crate::compstat::{detect_regime_change, sweep, Party, SolverKind, Tilt};
use crate::error::{Error, Result};
use crate::first_best::{belief_order, classify_monotonicity, solve_first_best};
use crate::instance::{ActionSpec, ProblemInstance};
use crate::io::{cara_sweep_csv, figure_csv, fmt_f64, read_problem, sweep_csv, to_json, ProblemFile};
use crate::oracle::{audit, OracleMode};
use crate::second_best::{
    choose_action, figure_data, kkt_certificate, monotonicity_report, solve_second_best_with, SecondBestOptions,
};
use crate::spread::{compare_with_direct, SpreadProblem};

#[derive(Parser, Debug)]
#[command(name = "hetcontract", version, about = "Contracts under heterogeneous beliefs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal contract when the action is observable.
    SolveFirstBest(Common),
    /// Cost-minimising incentive-compatible contract.
    SolveSecondBest {
        #[command(flatten)]
        common: Common,
        /// Wage bounds `lo,hi` imposed on every state.
        #[arg(long, value_parser = parse_pair_f64)]
        wage_box: Option<(f64, f64)>,
    },
    /// Profit-maximising action under second-best contracts.
    ChooseAction(Common),
    /// Re-solve along a grid of belief shifts.
    Compstat {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tilt: TiltArgs,
        #[arg(long, value_enum, default_value = "second-best")]
        solver: SolverArg,
    },
    /// Locate where the second best starts or stops coinciding with the
    /// first best along a belief shift.
    DetectRegime {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tilt: TiltArgs,
    },
    /// Likelihood-ratio comparison of two distributions.
    Mlrp {
        #[command(flatten)]
        common: Common,
        /// Comma-separated probabilities.
        #[arg(long, value_parser = parse_probs)]
        f: Option<Probs>,
        #[arg(long, value_parser = parse_probs)]
        g: Option<Probs>,
    },
    /// Lump the top states of every belief vector together.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Number of states to keep.
        #[arg(long)]
        keep: usize,
    },
    /// Four-state contract through the utility spread, against the direct solve.
    Iterate4(Common),
    /// Compare the solver with a brute-force grid search.
    OracleAudit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, value_enum, default_value = "second-best")]
        mode: ModeArg,
    },
    /// Curves of the two-state contract diagram.
    FigureData {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Target action; defaults to the costliest one.
    #[arg(long)]
    action: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct TiltArgs {
    /// `s,s'`: mass moves onto `s` from `s'` (0-based).
    #[arg(long, value_parser = parse_pair_usize)]
    states: (usize, usize),
    /// `start:stop:count` or a comma-separated list.
    #[arg(long, value_parser = parse_eps_grid)]
    eps_grid: EpsGrid,
    #[arg(long, value_enum, default_value = "principal")]
    party: PartyArg,
    /// Action whose beliefs are shifted; defaults to the target action.
    #[arg(long)]
    which_action: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartyArg {
    Principal,
    Agent,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    FirstBest,
    SecondBest,
    /// Three-state CARA closed form.
    Cara,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    FirstBest,
    SecondBest,
}

#[derive(Clone, Debug)]
struct EpsGrid {
    values: Vec<f64>,
    /// Set for the `start:stop:count` form.
    range: Option<(f64, f64, usize)>,
}

fn parse_list_f64(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}

#[derive(Clone, Debug)]
struct Probs(Vec<f64>);

fn parse_probs(s: &str) -> std::result::Result<Probs, String> {
    parse_list_f64(s).map(Probs)
}

fn parse_pair_f64(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_list_f64(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two comma-separated numbers, got '{s}'")),
    }
}

fn parse_pair_usize(s: &str) -> std::result::Result<(usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected 's,s_prime', got '{s}'")),
    }
}

fn parse_eps_grid(s: &str) -> std::result::Result<EpsGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let a: f64 = a.trim().parse().map_err(|e| format!("start: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("stop: {e}"))?;
            let n: usize = n.trim().parse().map_err(|e| format!("count: {e}"))?;
            if n == 0 {
                return Err("count must be positive".into());
            }
            let values = if n == 1 {
                vec![a]
            } else {
                (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
            };
            Ok(EpsGrid {
                values,
                range: Some((a, b, n)),
            })
        }
        [_] => Ok(EpsGrid {
            values: parse_list_f64(s)?,
            range: None,
        }),
        _ => Err(format!("expected start:stop:count or a comma list, got '{s}'")),
    }
}

/// Parses `args` (program name first) and runs the command. Output goes to
/// `--out` when given, otherwise to `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => match emit(&cli.command, &args, out, stdout) {
            Ok(()) => 0,
            Err(e) => report(e, stderr),
        },
        Err(e) => report(e, stderr),
    }
}

fn report(e: Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error[{}]: {e}", e.code());
    if e.is_input_error() {
        2
    } else {
        1
    }
}

struct Output {
    format: Format,
    body: String,
}

fn common(c: &Command) -> &Common {
    match c {
        Command::SolveFirstBest(c) | Command::ChooseAction(c) | Command::Iterate4(c) => c,
        Command::SolveSecondBest { common, .. }
        | Command::Compstat { common, .. }
        | Command::DetectRegime { common, .. }
        | Command::Mlrp { common, .. }
        | Command::Reduce { common, .. }
        | Command::OracleAudit { common, .. }
        | Command::FigureData { common, .. } => common,
    }
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::SolveFirstBest(_) => "solve-first-best",
        Command::SolveSecondBest { .. } => "solve-second-best",
        Command::ChooseAction(_) => "choose-action",
        Command::Compstat { .. } => "compstat",
        Command::DetectRegime { .. } => "detect-regime",
        Command::Mlrp { .. } => "mlrp",
        Command::Reduce { .. } => "reduce",
        Command::Iterate4(_) => "iterate4",
        Command::OracleAudit { .. } => "oracle-audit",
        Command::FigureData { .. } => "figure-data",
    }
}

fn emit(cmd: &Command, args: &[OsString], out: Output, stdout: &mut dyn Write) -> Result<()> {
    match &common(cmd).out {
        Some(path) => {
            write_file(path, &out.body)?;
            let meta = json!({
                "tool": "hetcontract",
                "version": env!("CARGO_PKG_VERSION"),
                "command": name(cmd),
                "arguments": args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>(),
                "format": match out.format { Format::Json => "json", Format::Csv => "csv" },
                "threads": rayon::current_num_threads(),
            });
            let mut meta_path = path.clone().into_os_string();
            meta_path.push(".meta.json");
            write_file(Path::new(&meta_path), &to_json(&meta))
        }
        None => stdout
            .write_all(out.body.as_bytes())
            .map_err(|e| Error::Io(format!("stdout: {e}"))),
    }
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(c: &Common) -> Result<ProblemInstance> {
    let path = c
        .problem
        .as_ref()
        .ok_or_else(|| Error::Validation {
            path: "--problem".into(),
            message: "this command needs a problem file".into(),
        })?;
    read_problem(path)
}

fn target(c: &Common, inst: &ProblemInstance) -> Result<String> {
    match &c.action {
        Some(a) => Ok(inst.action(a)?.name.clone()),
        None => Ok(inst.costliest_action().to_string()),
    }
}

fn check_tol(c: &Common) -> Result<()> {
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        return Err(Error::Validation {
            path: "--tol".into(),
            message: format!("tolerance must be positive, got {}", c.tol),
        });
    }
    Ok(())
}

fn json_only(c: &Common, value: &impl Serialize) -> Result<Output> {
    if c.format == Some(Format::Csv) {
        return Err(Error::Validation {
            path: "--format".into(),
            message: "this command only writes json".into(),
        });
    }
    Ok(Output {
        format: Format::Json,
        body: to_json(value),
    })
}

fn wage_table(inst: &ProblemInstance, wages: &[f64], residuals: &[f64]) -> String {
    let mut s = String::from("state,output,wage,foc_residual\n");
    for (k, (w, r)) in wages.iter().zip(residuals).enumerate() {
        s.push_str(&format!("{k},{},{},{}\n", fmt_f64(inst.outputs()[k]), fmt_f64(*w), fmt_f64(*r)));
    }
    s
}

fn dispatch(cmd: &Command) -> Result<Output> {
    let c = common(cmd);
    check_tol(c)?;
    match cmd {
        Command::SolveFirstBest(_) => {
            let inst = load(c)?;
            let action = target(c, &inst)?;
            let sol = solve_first_best(&inst, &action, c.tol)?;
            if c.format == Some(Format::Csv) {
                return Ok(Output {
                    format: Format::Csv,
                    body: wage_table(&inst, &sol.wages, &sol.foc_residuals),
                });
            }
            let order = belief_order(&inst, &action)?;
            let shape = classify_monotonicity(&sol, order);
            json_only(c, &json!({ "solution": sol, "belief_order": order, "shape": shape }))
        }
        Command::SolveSecondBest { wage_box, .. } => {
            let inst = load(c)?;
            let action = target(c, &inst)?;
            let opts = SecondBestOptions {
                tol: c.tol,
                wage_box: *wage_box,
            };
            let sol = solve_second_best_with(&inst, &action, &opts)?;
            if c.format == Some(Format::Csv) {
                return Ok(Output {
                    format: Format::Csv,
                    body: wage_table(&inst, &sol.wages, &sol.foc_residuals),
                });
            }
            let kkt = kkt_certificate(&inst, &sol)?;
            let mono = monotonicity_report(&sol, &inst, &action)?;
            json_only(c, &json!({ "solution": sol, "kkt": kkt, "monotonicity": mono }))
        }
        Command::ChooseAction(_) => {
            let inst = load(c)?;
            json_only(c, &choose_action(&inst, c.tol)?)
        }
        Command::Compstat { tilt, solver, .. } => {
            let inst = load(c)?;
            let action = target(c, &inst)?;
            let (s, sp) = tilt.states;
            let format = c.format.unwrap_or(Format::Csv);
            if let SolverArg::Cara = solver {
                if !matches!(tilt.party, PartyArg::Principal) {
                    return Err(Error::Validation {
                        path: "--party".into(),
                        message: "the closed form sweeps principal beliefs only".into(),
                    });
                }
                let sys = CaraSystem::from_instance(&inst)?;
                let res = cara_compstat(&sys, s, sp, &tilt.eps_grid.values)?;
                let body = match format {
                    Format::Csv => cara_sweep_csv(&res),
                    Format::Json => to_json(&res),
                };
                return Ok(Output { format, body });
            }
            let t = Tilt::new(
                tilt.which_action.clone().unwrap_or_else(|| action.clone()),
                party(tilt.party),
                s,
                sp,
            );
            let kind = match solver {
                SolverArg::FirstBest => SolverKind::FirstBest,
                _ => SolverKind::SecondBest,
            };
            let res = sweep(&inst, &action, &t, &tilt.eps_grid.values, kind)?;
            let alternatives: Vec<String> = match kind {
                SolverKind::FirstBest => Vec::new(),
                SolverKind::SecondBest => inst
                    .actions()
                    .iter()
                    .filter(|a| a.name != action)
                    .map(|a| a.name.clone())
                    .collect(),
            };
            let body = match format {
                Format::Csv => sweep_csv(&res, &alternatives),
                Format::Json => to_json(&res),
            };
            Ok(Output { format, body })
        }
        Command::DetectRegime { tilt, .. } => {
            let inst = load(c)?;
            let action = target(c, &inst)?;
            let (lo, hi, scan) = tilt.eps_grid.range.ok_or_else(|| Error::Validation {
                path: "--eps-grid".into(),
                message: "detect-regime needs the start:stop:count form".into(),
            })?;
            let t = Tilt::new(
                tilt.which_action.clone().unwrap_or_else(|| action.clone()),
                party(tilt.party),
                tilt.states.0,
                tilt.states.1,
            );
            let rc = detect_regime_change(&inst, &action, &t, lo, hi, scan.max(2))?;
            json_only(c, &json!({ "action": action, "tilt": t, "regime_change": rc }))
        }
        Command::Mlrp { f, g, .. } => {
            if let (Some(f), Some(g)) = (f, g) {
                let f = Distribution::new(f.0.clone())?;
                let g = Distribution::new(g.0.clone())?;
                return json_only(
                    c,
                    &json!({
                        "order": mlrp_compare(&f, &g)?,
                        "f_first_order_dominates_g": first_order_dominates(&f, &g)?,
                        "g_first_order_dominates_f": first_order_dominates(&g, &f)?,
                    }),
                );
            }
            let inst = load(c)?;
            let mut vectors: Vec<(String, &Distribution)> = Vec::new();
            for a in inst.actions() {
                vectors.push((format!("{}.principal", a.name), &a.principal_beliefs));
                vectors.push((format!("{}.agent", a.name), &a.agent_beliefs));
            }
            let mut pairs = Vec::new();
            for i in 0..vectors.len() {
                for j in i + 1..vectors.len() {
                    pairs.push(json!({
                        "f": vectors[i].0,
                        "g": vectors[j].0,
                        "order": mlrp_compare(vectors[i].1, vectors[j].1)?,
                    }));
                }
            }
            json_only(c, &json!({ "pairs": pairs }))
        }
        Command::Reduce { keep, .. } => {
            let inst = load(c)?;
            let actions = inst
                .actions()
                .iter()
                .map(|a| {
                    Ok(ActionSpec::new(
                        a.name.clone(),
                        a.cost,
                        reduce_distribution(&a.principal_beliefs, *keep)?,
                        reduce_distribution(&a.agent_beliefs, *keep)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let reduced = ProblemInstance::new(
                inst.outputs()[..*keep].to_vec(),
                actions,
                inst.reservation_utility(),
                inst.utility().clone(),
            )?;
            let mut orders = Vec::new();
            for (a, r) in inst.actions().iter().zip(reduced.actions()) {
                for (b, q) in inst.actions().iter().zip(reduced.actions()) {
                    if a.name < b.name {
                        orders.push(json!({
                            "f": format!("{}.agent", a.name),
                            "g": format!("{}.agent", b.name),
                            "before": mlrp_compare(&a.agent_beliefs, &b.agent_beliefs)?,
                            "after": mlrp_compare(&r.agent_beliefs, &q.agent_beliefs)?,
                        }));
                    }
                }
                orders.push(json!({
                    "f": format!("{}.agent", a.name),
                    "g": format!("{}.principal", a.name),
                    "before": mlrp_compare(&a.agent_beliefs, &a.principal_beliefs)?,
                    "after": mlrp_compare(&r.agent_beliefs, &r.principal_beliefs)?,
                }));
            }
            json_only(c, &json!({ "problem": ProblemFile::from_instance(&reduced), "orders": orders }))
        }
        Command::Iterate4(_) => {
            let inst = load(c)?;
            let sp = SpreadProblem::new(inst)?;
            let rep = compare_with_direct(&sp, c.tol)?;
            if c.format == Some(Format::Csv) {
                let mut s = String::from("m,reduced_cost,spread_cost,total\n");
                for r in &rep.iterative.trace {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_f64(r.m),
                        fmt_f64(r.reduced_cost),
                        fmt_f64(r.spread_cost),
                        fmt_f64(r.total)
                    ));
                }
                return Ok(Output {
                    format: Format::Csv,
                    body: s,
                });
            }
            json_only(c, &rep)
        }
        Command::OracleAudit { points, mode, .. } => {
            let inst = load(c)?;
            let action = target(c, &inst)?;
            let mode = match mode {
                ModeArg::FirstBest => OracleMode::FirstBest,
                ModeArg::SecondBest => OracleMode::SecondBest,
            };
            json_only(c, &audit(&inst, &action, *points, mode, c.tol)?)
        }
        Command::FigureData { points, .. } => {
            let inst = load(c)?;
            let fig = figure_data(&inst, *points)?;
            let format = c.format.unwrap_or(Format::Csv);
            let body = match format {
                Format::Csv => figure_csv(&fig),
                Format::Json => to_json(&fig),
            };
            Ok(Output { format, body })
        }
    }
}

fn party(p: PartyArg) -> Party {
    match p {
        PartyArg::Principal => Party::Principal,
        PartyArg::Agent => Party::Agent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_grid_forms() {
        let g = parse_eps_grid("0:0.1:3").unwrap();
        assert_eq!(g.values, vec![0.0, 0.05, 0.1]);
        assert_eq!(g.range, Some((0.0, 0.1, 3)));
        assert_eq!(parse_eps_grid("0.01,0.02").unwrap().values, vec![0.01, 0.02]);
        assert!(parse_eps_grid("0:1").is_err());
        assert!(parse_eps_grid("0:1:0").is_err());
    }

    #[test]
    fn bad_flags_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["hetcontract", "solve-first-best", "--tol", "x"], &mut o, &mut e), 2);
        assert_eq!(run(["hetcontract", "nonsense"], &mut o, &mut e), 2);
        assert_eq!(run(["hetcontract", "solve-first-best"], &mut o, &mut e), 2);
    }

    #[test]
    fn mlrp_inline() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(["hetcontract", "mlrp", "--f", "0.2,0.3,0.5", "--g", "0.5,0.3,0.2"], &mut o, &mut e);
        assert_eq!(code, 0);
        assert!(String::from_utf8(o).unwrap().contains("FDominatesG"));
    }
}
