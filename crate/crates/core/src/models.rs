//! Built-in benchmark model generators.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::csp::{Domain, Model, VarId};

/// Names accepted by [`generate`].
pub const BUILTIN_NAMES: [&str; 5] = ["allinterval", "golomb", "nqueens", "magicsquare", "latin"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    AllInterval,
    Golomb,
    NQueens,
    MagicSquare,
    Latin,
}

impl FromStr for Builtin {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allinterval" | "all-interval" => Ok(Builtin::AllInterval),
            "golomb" => Ok(Builtin::Golomb),
            "nqueens" | "queens" => Ok(Builtin::NQueens),
            "magicsquare" | "magic" => Ok(Builtin::MagicSquare),
            "latin" | "quasigroup" => Ok(Builtin::Latin),
            other => Err(GenerateError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error(
        "unknown model '{0}' (expected one of allinterval, golomb, nqueens, magicsquare, latin)"
    )]
    UnknownModel(String),
    #[error("invalid size for {model}: {reason}")]
    InvalidParams { model: &'static str, reason: String },
}

/// Builds a builtin. `extra` is the Golomb ruler length cap (defaults to `n * n`).
pub fn generate(which: Builtin, n: usize, extra: Option<usize>) -> Result<Model, GenerateError> {
    let invalid = |model, reason: &str| GenerateError::InvalidParams {
        model,
        reason: reason.to_string(),
    };
    match which {
        Builtin::AllInterval if n >= 2 => Ok(allinterval(n)),
        Builtin::AllInterval => Err(invalid("allinterval", "n must be at least 2")),
        Builtin::Golomb if n >= 2 => {
            let maxlen = extra.unwrap_or(n * n);
            if maxlen < n - 1 {
                return Err(invalid("golomb", "ruler length must be at least n - 1"));
            }
            Ok(golomb(n, maxlen))
        }
        Builtin::Golomb => Err(invalid("golomb", "n must be at least 2")),
        Builtin::NQueens if n >= 1 => Ok(nqueens(n)),
        Builtin::NQueens => Err(invalid("nqueens", "n must be at least 1")),
        Builtin::MagicSquare if n >= 1 => Ok(magicsquare(n)),
        Builtin::MagicSquare => Err(invalid("magicsquare", "n must be at least 1")),
        Builtin::Latin if n >= 1 => Ok(latin(n)),
        Builtin::Latin => Err(invalid("latin", "n must be at least 1")),
    }
}

/// Permutations of `0..n` whose successive absolute differences are all distinct.
pub fn allinterval(n: usize) -> Model {
    let mut b = Model::builder(format!("allinterval-{n}"));
    let top = n as i32 - 1;
    let xs: Vec<VarId> = (0..n).map(|i| b.int_var(format!("x{i}"), 0, top)).collect();
    let ds: Vec<VarId> = (0..n - 1)
        .map(|i| b.int_var(format!("d{i}"), 1, top))
        .collect();
    b.all_different(xs.clone());
    for i in 0..n - 1 {
        b.abs_diff(xs[i], xs[i + 1], ds[i]);
    }
    b.all_different(ds);
    b.build().expect("generated model is valid")
}

/// Shortest ruler with `n` marks in `0..=maxlen` and pairwise-distinct distances.
///
/// Marks come first in declaration order, then the distances `d(i, j)` for
/// `i < j`; the first distance is kept below the last one to break mirror symmetry.
pub fn golomb(n: usize, maxlen: usize) -> Model {
    let mut b = Model::builder(format!("golomb-{n}"));
    let top = maxlen as i32;
    let marks: Vec<VarId> = (0..n)
        .map(|i| {
            if i == 0 {
                b.var("m0", Domain::singleton(0))
            } else {
                b.int_var(format!("m{i}"), 0, top)
            }
        })
        .collect();
    for i in 0..n - 1 {
        b.linear_le(vec![1, -1], vec![marks[i], marks[i + 1]], -1);
    }
    let mut diffs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = b.int_var(format!("d{i}_{j}"), 1, top);
            b.linear_eq(vec![1, -1, -1], vec![marks[j], marks[i], d], 0);
            diffs.push(d);
        }
    }
    if n >= 3 {
        let first = diffs[0];
        let last = *diffs.last().unwrap();
        b.linear_le(vec![1, -1], vec![first, last], -1);
    }
    b.all_different(diffs);
    b.minimize(marks[n - 1]);
    b.build().expect("generated model is valid")
}

/// Queens `q_i` in column `i`, row `q_i`, no two attacking.
pub fn nqueens(n: usize) -> Model {
    let mut b = Model::builder(format!("nqueens-{n}"));
    let qs: Vec<VarId> = (0..n)
        .map(|i| b.int_var(format!("q{i}"), 0, n as i32 - 1))
        .collect();
    b.all_different(qs.clone());
    for i in 0..n {
        for j in i + 1..n {
            let k = (j - i) as i64;
            b.not_equal(qs[i], qs[j], k);
            b.not_equal(qs[i], qs[j], -k);
        }
    }
    b.build().expect("generated model is valid")
}

/// Normal magic square of order `n` over `1..=n*n`.
pub fn magicsquare(n: usize) -> Model {
    let mut b = Model::builder(format!("magicsquare-{n}"));
    let cells: Vec<VarId> = (0..n * n)
        .map(|k| b.int_var(format!("c{}_{}", k / n, k % n), 1, (n * n) as i32))
        .collect();
    let magic = (n * (n * n + 1) / 2) as i64;
    b.all_different(cells.clone());
    let ones = vec![1i64; n];
    for r in 0..n {
        b.linear_eq(
            ones.clone(),
            (0..n).map(|c| cells[r * n + c]).collect(),
            magic,
        );
    }
    for c in 0..n {
        b.linear_eq(
            ones.clone(),
            (0..n).map(|r| cells[r * n + c]).collect(),
            magic,
        );
    }
    b.linear_eq(
        ones.clone(),
        (0..n).map(|i| cells[i * n + i]).collect(),
        magic,
    );
    b.linear_eq(
        ones,
        (0..n).map(|i| cells[i * n + n - 1 - i]).collect(),
        magic,
    );
    b.build().expect("generated model is valid")
}

/// Latin square of order `n`: every row and every column is a permutation of `0..n`.
pub fn latin(n: usize) -> Model {
    let mut b = Model::builder(format!("latin-{n}"));
    let cells: Vec<VarId> = (0..n * n)
        .map(|k| b.int_var(format!("x{}_{}", k / n, k % n), 0, n as i32 - 1))
        .collect();
    for r in 0..n {
        b.all_different((0..n).map(|c| cells[r * n + c]).collect());
    }
    for c in 0..n {
        b.all_different((0..n).map(|r| cells[r * n + c]).collect());
    }
    b.build().expect("generated model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{count_all, solve, SearchMode, WorkBudget};
    use crate::strategy::StrategyId;
    use crate::Subproblem;

    fn permutations(n: usize) -> Vec<Vec<i32>> {
        fn rec(cur: &mut Vec<i32>, used: &mut Vec<bool>, out: &mut Vec<Vec<i32>>) {
            if cur.len() == used.len() {
                out.push(cur.clone());
                return;
            }
            for v in 0..used.len() {
                if !used[v] {
                    used[v] = true;
                    cur.push(v as i32);
                    rec(cur, used, out);
                    cur.pop();
                    used[v] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    fn brute_allinterval(n: usize) -> u64 {
        permutations(n)
            .into_iter()
            .filter(|p| {
                let mut d: Vec<i32> = p.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
                d.sort();
                d.windows(2).all(|w| w[0] != w[1])
            })
            .count() as u64
    }

    fn brute_queens(n: usize) -> u64 {
        permutations(n)
            .into_iter()
            .filter(|p| (0..n).all(|i| (i + 1..n).all(|j| (p[i] - p[j]).abs() != (j - i) as i32)))
            .count() as u64
    }

    /// Shortest ruler over every `n`-mark subset of `0..=maxlen` that starts at 0.
    fn brute_golomb(n: usize, maxlen: usize) -> Option<i64> {
        fn rec(marks: &mut Vec<usize>, n: usize, maxlen: usize, best: &mut Option<usize>) {
            if marks.len() == n {
                let mut diffs = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        diffs.push(marks[j] - marks[i]);
                    }
                }
                diffs.sort();
                if diffs.windows(2).all(|w| w[0] != w[1]) {
                    let len = *marks.last().unwrap();
                    if best.is_none_or(|b| len < b) {
                        *best = Some(len);
                    }
                }
                return;
            }
            let start = marks.last().map_or(0, |m| m + 1);
            for m in start..=maxlen {
                marks.push(m);
                rec(marks, n, maxlen, best);
                marks.pop();
            }
        }
        let mut best = None;
        rec(&mut vec![0], n, maxlen, &mut best);
        best.map(|b| b as i64)
    }

    #[test]
    fn allinterval_matches_permutation_count() {
        for n in 3..=6 {
            let expected = brute_allinterval(n);
            for sid in StrategyId::ALL {
                assert_eq!(
                    count_all(&allinterval(n), sid).unwrap().solutions_found,
                    expected,
                    "n={n} {sid}"
                );
            }
        }
    }

    #[test]
    fn queens_match_brute_force() {
        for n in 1..=7 {
            let expected = brute_queens(n);
            assert_eq!(
                count_all(&nqueens(n), StrategyId::FirstFail)
                    .unwrap()
                    .solutions_found,
                expected,
                "n={n}"
            );
        }
        assert_eq!(brute_queens(4), 2);
        assert_eq!(brute_queens(6), 4);
    }

    #[test]
    fn golomb_four_is_six() {
        assert_eq!(brute_golomb(4, 12), Some(6));
        for sid in StrategyId::ALL {
            let out = solve(
                &golomb(4, 12),
                &Subproblem::root(),
                sid,
                SearchMode::Optimize { incumbent: None },
                WorkBudget::unlimited(),
            )
            .unwrap();
            assert_eq!(out.best_objective, Some(6), "{sid}");
        }
        assert_eq!(brute_golomb(5, 14), Some(11));
        let out = solve(
            &golomb(5, 14),
            &Subproblem::root(),
            StrategyId::DomOverWdeg,
            SearchMode::Optimize { incumbent: None },
            WorkBudget::unlimited(),
        )
        .unwrap();
        assert_eq!(out.best_objective, Some(11));
    }

    #[test]
    fn small_latin_and_magic_counts() {
        // 2x2 latin squares: 2; 3x3: 12; 3x3 magic squares: 8
        assert_eq!(
            count_all(&latin(2), StrategyId::FirstFail)
                .unwrap()
                .solutions_found,
            2
        );
        assert_eq!(
            count_all(&latin(3), StrategyId::FirstFail)
                .unwrap()
                .solutions_found,
            12
        );
        assert_eq!(
            count_all(&magicsquare(3), StrategyId::FirstFail)
                .unwrap()
                .solutions_found,
            8
        );
    }

    #[test]
    fn generate_validates() {
        assert!(matches!(
            "sudoku".parse::<Builtin>(),
            Err(GenerateError::UnknownModel(_))
        ));
        assert!(generate(Builtin::Golomb, 4, Some(2)).is_err());
        assert_eq!(
            count_all(
                &generate(Builtin::NQueens, 1, None).unwrap(),
                StrategyId::FirstFail
            )
            .unwrap()
            .solutions_found,
            1
        );
    }
}
