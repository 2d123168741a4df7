use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use eps_select::baselines::{mab_run, portfolio_from_runs};
use eps_select::csp::Model;
use eps_select::eps::{decompose, Decomposition, Subproblem};
use eps_select::fixtures;
use eps_select::json::load_json;
use eps_select::models::{generate, Builtin};
use eps_select::report::{
    compare, compare_fixture, mab_rows, portfolio_rows, pss_rows, render_table, solve_rows,
    RunReport, SingleSummary,
};
use eps_select::runner::{solve_all, SolveAllReport, TimeMode};
use eps_select::selection::{pss_on_decomposition, race_all, MatrixSource, PssConfig, RaceConfig};
use eps_select::strategy::{parse_strategy_list, StrategyId};

mod output;

#[derive(Parser, Debug)]
#[command(
    name = "eps-select",
    version,
    about = "Pick a search strategy on a sample of EPS subproblems"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Mode>,
    /// Same as giving the subcommand.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Solve with one strategy.
    Solve,
    /// Select a strategy on a sample, then solve the rest with it.
    Pss,
    /// One bandit pull per subproblem.
    Mab,
    /// Every strategy on every subproblem.
    Portfolio,
    /// Ratio table of every single strategy, pss, mab and a 4-strategy portfolio.
    Compare,
    /// Dump the subproblems.
    Decompose,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TimeModeArg {
    Work,
    Wall,
}

impl From<TimeModeArg> for TimeMode {
    fn from(t: TimeModeArg) -> Self {
        match t {
            TimeModeArg::Work => TimeMode::Work,
            TimeModeArg::Wall => TimeMode::Wall,
        }
    }
}

#[derive(Args, Debug, serde::Serialize)]
struct Opts {
    /// Builtin model: allinterval, golomb, nqueens, magicsquare, latin.
    #[arg(long, global = true)]
    model: Option<String>,
    /// Builtin size.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Golomb ruler length cap (default n*n).
    #[arg(long, global = true)]
    maxlen: Option<usize>,
    /// Model file instead of a builtin.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Strategy for `solve`.
    #[arg(long, global = true, default_value = "ff")]
    strategy: String,
    /// Comma-separated candidates (default all seven).
    #[arg(long, global = true)]
    strategies: Option<String>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Sampling seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    sample_size: Option<usize>,
    #[arg(long, global = true)]
    target_subproblems: Option<usize>,
    #[arg(long, global = true, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, global = true, default_value_t = 2.0)]
    timeout_factor: f64,
    #[arg(long, global = true, value_enum, default_value_t = TimeModeArg::Work)]
    #[serde(skip)]
    time_mode: TimeModeArg,
    /// Write the JSON report here.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the result rows as CSV here.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// `compare` on a known runtime matrix: `didactic`.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// `compare` on a runtime matrix CSV, one column per strategy.
    #[arg(long, global = true, value_name = "PATH")]
    matrix: Option<PathBuf>,
}

/// Bad flags or parameters; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("EPS_SELECT_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() {
                2
            } else {
                1
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mode = match (cli.command, cli.mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(usage(format!("subcommand {a} conflicts with --mode {b}")))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(usage("give a subcommand or --mode")),
    };
    let o = &cli.opts;
    let cfg = pss_config(o)?;
    let config_echo = serde_json::to_value(o)?;
    let time_mode = cfg.race.time_mode;

    if mode == Mode::Compare && (o.fixture.is_some() || o.matrix.is_some()) {
        return compare_matrix(o, &cfg.race, config_echo);
    }
    let model = load_model(o)?;
    let name = model.name().to_string();
    let fresh = |m: Mode| {
        RunReport::new(
            &m.to_string(),
            &name,
            o.seed,
            time_mode,
            config_echo.clone(),
        )
    };

    let report = match mode {
        Mode::Solve => {
            let sid: StrategyId = o.strategy.parse().map_err(|e| usage(format!("{e}")))?;
            let subs = if o.workers > 1 || o.target_subproblems.is_some() {
                decomposition(&model, &cfg)?.subproblems
            } else {
                vec![Subproblem::root()]
            };
            let r = solve_all(&model, &subs, sid, o.workers, None, time_mode)?;
            output::print_solve(&r);
            let mut rep = fresh(mode)
                .with_rows(solve_rows(&name, &r))
                .with_details(&SingleSummary::from(&r));
            rep.winner = Some(sid.label().to_string());
            rep.total_work = r.total_work as f64;
            rep.wall_ms = r.wall.as_secs_f64() * 1000.0;
            rep
        }
        Mode::Pss => {
            let dec = decomposition(&model, &cfg)?;
            let out = pss_on_decomposition(&model, &dec, &cfg)?;
            let rows = pss_rows(&name, &out);
            output::print_pss(&out, &rows);
            let mut rep = fresh(mode).with_rows(rows).with_details(&out);
            rep.winner = Some(out.strategy.label().to_string());
            rep.selection_cost = Some(out.selection.selection_cost);
            rep.total_work = out.total_cost;
            rep.wall_ms = out.wall.as_secs_f64() * 1000.0;
            rep
        }
        Mode::Mab => {
            let dec = decomposition(&model, &cfg)?;
            let started = Instant::now();
            let r = mab_run(&model, &dec.subproblems, &cfg.strategies, time_mode)?;
            let wall_ms = started.elapsed().as_secs_f64() * 1000.0;
            output::print_mab(&r);
            let mut rep = fresh(mode)
                .with_rows(mab_rows(&name, &r, wall_ms))
                .with_details(&r);
            rep.total_work = r.total_cost;
            rep.wall_ms = wall_ms;
            rep
        }
        Mode::Portfolio => {
            let dec = decomposition(&model, &cfg)?;
            let runs: Vec<SolveAllReport> = cfg
                .strategies
                .iter()
                .map(|&s| solve_all(&model, &dec.subproblems, s, o.workers, None, time_mode))
                .collect::<Result<_, _>>()?;
            let p = portfolio_from_runs(&model, &runs);
            let rows = portfolio_rows(&name, &runs, &p);
            print!("{}", render_table(&rows));
            println!("solutions: {}", p.solutions);
            output::print_objective(p.best_objective);
            let mut rep = fresh(mode).with_rows(rows).with_details(&p);
            rep.total_work = p.total_work as f64;
            rep
        }
        Mode::Compare => {
            let dec = decomposition(&model, &cfg)?;
            let c = compare(&model, &dec, &cfg, 4)?;
            print!("{}", render_table(&c.rows));
            println!(
                "winner: {} (full run {} vs best {} {})",
                c.pss.strategy,
                c.winner_single().total_work,
                c.best_single().strategy,
                c.best_single().total_work
            );
            let mut rep = fresh(mode).with_rows(c.rows.clone()).with_details(&c);
            rep.winner = Some(c.pss.strategy.label().to_string());
            rep.selection_cost = Some(c.pss.selection.selection_cost);
            rep.total_work = c.pss.total_cost;
            rep
        }
        Mode::Decompose => {
            let dec = decomposition(&model, &cfg)?;
            output::print_decomposition(&dec)?;
            let mut rep = fresh(mode).with_details(&dec);
            rep.total_work = dec.work as f64;
            rep
        }
    };
    output::write_report(&report, o.out.as_deref(), o.csv.as_deref())
}

fn pss_config(o: &Opts) -> Result<PssConfig> {
    let strategies = match &o.strategies {
        Some(s) => parse_strategy_list(s).map_err(|e| usage(e.to_string()))?,
        None => StrategyId::ALL.to_vec(),
    };
    if strategies.is_empty() {
        return Err(usage("--strategies is empty"));
    }
    if o.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    if o.target_subproblems == Some(0) {
        return Err(usage("--target-subproblems must be at least 1"));
    }
    if o.sample_size == Some(0) {
        return Err(usage("--sample-size must be at least 1"));
    }
    let race = RaceConfig {
        timeout_factor: o.timeout_factor,
        alpha: o.alpha,
        sample_seed: o.seed,
        time_mode: o.time_mode.into(),
    };
    race.validate().map_err(usage)?;
    Ok(PssConfig {
        race,
        strategies,
        workers: o.workers,
        target_subproblems: o.target_subproblems,
        sample_size: o.sample_size,
        measure_untimed: false,
    })
}

fn load_model(o: &Opts) -> Result<Model> {
    match (&o.json, &o.model) {
        (Some(_), Some(_)) => Err(usage("give either --model or --json, not both")),
        (Some(path), None) => {
            info!("loading {}", path.display());
            load_json(path).with_context(|| format!("loading {}", path.display()))
        }
        (None, Some(name)) => {
            let which: Builtin = name.parse().map_err(|e| usage(format!("{e}")))?;
            let n =
                o.n.ok_or_else(|| usage(format!("--n is required for --model {name}")))?;
            generate(which, n, o.maxlen).map_err(|e| usage(e.to_string()))
        }
        (None, None) => Err(usage("give --model <name> --n <size> or --json <path>")),
    }
}

fn decomposition(model: &Model, cfg: &PssConfig) -> Result<Decomposition> {
    let dec = decompose(model, &cfg.decomposition())?;
    info!("{} subproblems at depth {}", dec.len(), dec.depth);
    if dec.is_empty() {
        bail!("the model has no solution: decomposition is empty");
    }
    Ok(dec)
}

fn compare_matrix(o: &Opts, race: &RaceConfig, config_echo: serde_json::Value) -> Result<()> {
    let (problem, costs, labels) = match (&o.fixture, &o.matrix) {
        (Some(_), Some(_)) => return Err(usage("give either --fixture or --matrix, not both")),
        (Some(f), None) if f == "didactic" => (
            "didactic".to_string(),
            fixtures::didactic(),
            fixtures::didactic_labels(),
        ),
        (Some(f), None) => return Err(usage(format!("unknown fixture '{f}' (expected didactic)"))),
        (None, Some(path)) => {
            let (labels, costs) = output::read_matrix(path)?;
            let stem = path
                .file_stem()
                .map_or("matrix".into(), |s| s.to_string_lossy().into_owned());
            (stem, costs, labels)
        }
        (None, None) => unreachable!("checked by the caller"),
    };
    let (race_matrix, _) = race_all(
        &mut MatrixSource::new(costs.clone()),
        labels.clone(),
        (0..costs.len()).collect(),
        race,
    );
    let r = compare_fixture(&problem, &costs, labels, race)?;
    output::print_fixture(&costs, &race_matrix, &r);
    let mut rep = RunReport::new("compare", &problem, o.seed, race.time_mode, config_echo)
        .with_rows(r.rows.clone())
        .with_details(&r);
    rep.winner = Some(r.selection.winner_label().to_string());
    rep.selection_cost = Some(r.selection.selection_cost);
    rep.total_work = r.selection.selection_cost;
    output::write_report(&rep, o.out.as_deref(), o.csv.as_deref())
}
