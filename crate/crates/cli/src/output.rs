use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use eps_select::baselines::MabReport;
use eps_select::eps::Decomposition;
use eps_select::report::{render_table, FixtureReport, MethodRow, RunReport};
use eps_select::runner::SolveAllReport;
use eps_select::selection::{PssOutcome, RuntimeMatrix};

pub fn print_objective(best: Option<i64>) {
    if let Some(v) = best {
        println!("best objective: {v}");
    }
}

pub fn print_solve(r: &SolveAllReport) {
    println!("strategy: {}", r.strategy);
    println!("solutions: {}", r.solutions);
    print_objective(r.best_objective);
    println!("work: {}", r.total_work);
    println!("load balance: {:.3}", r.load_balance());
}

pub fn print_pss(out: &PssOutcome, rows: &[MethodRow]) {
    print!("{}", render_table(rows));
    let sel = &out.selection;
    println!("winner: {}", out.strategy);
    for c in &sel.eliminated {
        println!(
            "  eliminated {} (W+ {}, n {}, p {:.3e})",
            sel.matrix.arms[c.arm], c.wsr.w_plus, c.wsr.n, c.wsr.p_value
        );
    }
    for c in &sel.survivors {
        println!(
            "  kept {} (W+ {}, n {}, p {:.3e})",
            sel.matrix.arms[c.arm], c.wsr.w_plus, c.wsr.n, c.wsr.p_value
        );
    }
    println!("confidence: {:.4}", sel.overall_confidence);
    println!(
        "subproblems: {} (sample {}, depth {})",
        out.subproblems,
        out.sample.len(),
        out.depth
    );
    println!(
        "selection cost: {} (race {}, bound {}, re-solve {})",
        sel.selection_cost, sel.race_cost, sel.race_bound, sel.resolve_cost
    );
    println!("solve cost: {}", out.solve_cost);
    println!("total cost: {}", out.total_cost);
    println!("solutions: {}", out.solutions);
    print_objective(out.best_objective);
}

pub fn print_mab(r: &MabReport) {
    for (s, p) in r.strategies.iter().zip(&r.pulls) {
        println!("{:<10} {p:>8} pulls", s.label());
    }
    println!("total cost: {}", r.total_cost);
    println!("solutions: {}", r.solutions);
    print_objective(r.best_objective);
}

/// Stops quietly when the reader goes away, as with `| head`.
pub fn print_decomposition(d: &Decomposition) -> Result<()> {
    let mut w = BufWriter::new(io::stdout().lock());
    let res = (|| -> io::Result<()> {
        writeln!(
            w,
            "{} subproblems, depth {}, work {}{}",
            d.len(),
            d.depth,
            d.work,
            if d.reached_target {
                ""
            } else {
                " (target not reached)"
            }
        )?;
        for sp in &d.subproblems {
            let parts: Vec<String> = sp
                .assignment
                .iter()
                .map(|(v, x)| format!("x{}={x}", v.0))
                .collect();
            writeln!(w, "{:>6}: {}", sp.id, parts.join(" "))?;
        }
        w.flush()
    })();
    match res {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cell(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Runtimes, the race with its timeouts, the tests and the ratio table.
pub fn print_fixture(costs: &[Vec<f64>], race: &RuntimeMatrix, r: &FixtureReport) {
    let header: String = r.arms.iter().map(|a| format!("{a:>10}")).collect();
    println!("runtimes\n{:>4}{header}", "j");
    for (j, row) in costs.iter().enumerate() {
        let line: String = row.iter().map(|v| format!("{:>10}", cell(*v))).collect();
        println!("{:>4}{line}", j + 1);
    }
    let totals: String = r
        .uncensored_totals
        .iter()
        .map(|v| format!("{:>10}", cell(*v)))
        .collect();
    println!("{:>4}{totals}", "sum");

    println!("race (T = stopped at the timeout)\n{:>4}{header}", "j");
    for (j, row) in race.entries.iter().enumerate() {
        let line: String = row
            .iter()
            .map(|e| {
                format!(
                    "{:>10}",
                    if e.censored {
                        format!("{}T", cell(e.value))
                    } else {
                        cell(e.value)
                    }
                )
            })
            .collect();
        println!("{:>4}{line}", j + 1);
    }
    let totals: String = r
        .censored_totals
        .iter()
        .map(|v| format!("{:>10}", cell(*v)))
        .collect();
    println!("{:>4}{totals}", "sum");

    let sel = &r.selection;
    for c in sel.eliminated.iter().chain(&sel.survivors) {
        println!(
            "{} vs {}: W+ {} n {} p {:.4} ({:?}, {:?})",
            r.arms[sel.winner],
            r.arms[c.arm],
            c.wsr.w_plus,
            c.wsr.n,
            c.wsr.p_value,
            c.wsr.method,
            c.wsr.decision
        );
    }
    println!("winner: {}", sel.winner_label());
    println!(
        "race cost {} (without timeouts {})",
        sel.race_cost, r.untimed_race_cost
    );
    print!("{}", render_table(&r.rows));
}

pub fn write_report(report: &RunReport, out: Option<&Path>, csv_path: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(f), report)?;
    }
    if let Some(path) = csv_path {
        let mut w =
            csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for row in &report.rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// A header of strategy names, then one row of runtimes per subproblem.
pub fn read_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let labels: Vec<String> = rd.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        if row.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            bail!(
                "{}: row {} has a non-positive runtime",
                path.display(),
                i + 2
            );
        }
        rows.push(row);
    }
    Ok((labels, rows))
}
