//! Dynamic-programming antenna selection: a predecessor table associates
//! every candidate antenna of RF chain `k` with the best antenna of chain
//! `k-1`, earlier chains being reconstructed by recursion through the
//! already-filled columns. Backtracking from the best last-chain antenna
//! recovers the full selection, which is then re-solved once for the final
//! covariance.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SelectionVector;
use crate::scenario::Scenario;
use crate::solver::{solve_inner, InnerSolution, SolverConfig};

/// Sentinel for table cells that are never written (the first column).
pub const UNFILLED: usize = usize::MAX;

/// Predecessor table: `pi[n][c]` (for chain positions `c >= 1`, 0-based)
/// holds the best antenna for chain `c-1` given chain `c` uses antenna `n`.
/// `f_prime[n]` is the best objective when the last chain uses antenna `n`.
#[derive(Clone, Debug)]
pub struct DpTable {
    pi: Vec<Vec<usize>>,
    f_prime: Vec<f64>,
    num_antennas: usize,
    num_chains: usize,
}

impl DpTable {
    fn new(num_antennas: usize, num_chains: usize) -> Self {
        Self {
            pi: vec![vec![UNFILLED; num_chains]; num_antennas],
            f_prime: vec![f64::INFINITY; num_antennas],
            num_antennas,
            num_chains,
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_chains(&self) -> usize {
        self.num_chains
    }

    /// Best antenna for chain `chain - 1` given `chain` uses `antenna`;
    /// `None` for the first chain or unfilled cells.
    pub fn predecessor(&self, antenna: usize, chain: usize) -> Option<usize> {
        if chain == 0 || chain >= self.num_chains {
            return None;
        }
        match self.pi[antenna][chain] {
            UNFILLED => None,
            v => Some(v),
        }
    }

    pub fn f_prime(&self) -> &[f64] {
        &self.f_prime
    }

    /// Debug dump: one row per antenna, one column per RF chain (the first
    /// chain column is blank), plus the last-chain objective. Antenna
    /// indices are written 1-based.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "antenna")?;
        for c in 1..=self.num_chains {
            write!(out, ",chain_{c}")?;
        }
        writeln!(out, ",f_prime")?;
        for n in 0..self.num_antennas {
            write!(out, "{}", n + 1)?;
            for c in 0..self.num_chains {
                match self.pi[n][c] {
                    UNFILLED => write!(out, ",")?,
                    v => write!(out, ",{}", v + 1)?,
                }
            }
            writeln!(out, ",{}", self.f_prime[n])?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    #[cfg(test)]
    pub(crate) fn from_raw(pi: Vec<Vec<usize>>, f_prime: Vec<f64>) -> Self {
        let num_antennas = pi.len();
        let num_chains = pi[0].len();
        Self {
            pi,
            f_prime,
            num_antennas,
            num_chains,
        }
    }
}

/// Output of a selection method: the chain-to-antenna assignment, the
/// induced selection vector, the final inner solution and the exact number
/// of inner solves performed.
#[derive(Clone, Debug)]
pub struct SelectionResult {
    /// Antenna index per RF chain (0-based). May contain duplicates, in
    /// which case `duplicate_warning` is set and the selection vector has
    /// fewer active antennas than RF chains.
    pub selection: Vec<usize>,
    pub p: SelectionVector,
    pub inner: InnerSolution,
    pub inner_solve_count: usize,
    pub duplicate_warning: bool,
}

impl SelectionResult {
    /// Active antennas sorted ascending (duplicates collapsed).
    pub fn support(&self) -> &[usize] {
        self.p.selected_indices()
    }

    pub fn objective(&self) -> f64 {
        self.inner.breakdown.scalarized
    }
}

/// First index attaining the minimum (strict comparison, so ties break to
/// the lowest index). NaN entries are never selected.
pub(crate) fn argmin_lowest(values: &[f64]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Recovers the chain-to-antenna assignment from a filled table, starting
/// from `last` for the final RF chain. Pure lookups, no solves.
pub fn backtrack(table: &DpTable, last: usize) -> Result<Vec<usize>> {
    let k = table.num_chains;
    let mut r = vec![0usize; k];
    r[k - 1] = last;
    for c in (1..k).rev() {
        let pred = table.pi[r[c]][c];
        if pred == UNFILLED {
            return Err(Error::validation(
                "dp_table",
                format!("column {c} is unfilled at antenna {}", r[c]),
            ));
        }
        r[c - 1] = pred;
    }
    Ok(r)
}

fn has_duplicates(r: &[usize]) -> bool {
    let mut sorted = r.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Dynamic-programming selection; see [`dp_select_with_table`] for the
/// variant that also returns the filled table.
pub fn dp_select(scenario: &Scenario, cfg: &SolverConfig) -> Result<SelectionResult> {
    dp_select_with_table(scenario, cfg).map(|(result, _)| result)
}

/// Fills the predecessor table column by column (each cell scanning all
/// candidate predecessors, earlier chains reconstructed by recursion),
/// backtracks from the best last-chain antenna and runs one final solve on
/// the resulting selection.
///
/// For `num_rf_chains >= 2` the inner problem is solved exactly
/// `N²(K-1) + 1` times. The degenerate single-chain case is an `N`-way
/// argmin over single-antenna solves (`N` solves, no final re-solve).
pub fn dp_select_with_table(
    scenario: &Scenario,
    cfg: &SolverConfig,
) -> Result<(SelectionResult, DpTable)> {
    let n = scenario.num_antennas();
    let k = scenario.num_rf_chains();
    let counter = AtomicUsize::new(0);

    let solve_support = |chain: &[usize]| -> Result<InnerSolution> {
        let p = SelectionVector::from_indices(n, chain)?;
        counter.fetch_add(1, Ordering::Relaxed);
        solve_inner(&p, scenario, cfg)
    };

    if k == 1 {
        let solutions: Vec<InnerSolution> = (0..n)
            .into_par_iter()
            .map(|antenna| solve_support(&[antenna]))
            .collect::<Result<_>>()?;
        let objectives: Vec<f64> = solutions.iter().map(|s| s.breakdown.scalarized).collect();
        let (best, _) = argmin_lowest(&objectives);
        let result = SelectionResult {
            selection: vec![best],
            p: SelectionVector::from_indices(n, &[best])?,
            inner: solutions.into_iter().nth(best).expect("index in range"),
            inner_solve_count: counter.load(Ordering::Relaxed),
            duplicate_warning: false,
        };
        return Ok((result, DpTable::new(n, 1)));
    }

    let mut table = DpTable::new(n, k);
    for c in 1..k {
        // all (antenna of chain c, candidate for chain c-1) pairs of this column
        let objectives: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let antenna = idx / n;
                let candidate = idx % n;
                let mut chain = vec![0usize; c + 1];
                chain[c] = antenna;
                chain[c - 1] = candidate;
                for j in (1..c).rev() {
                    chain[j - 1] = table.pi[chain[j]][j];
                }
                solve_support(&chain).map(|s| s.breakdown.scalarized)
            })
            .collect::<Result<_>>()?;
        for antenna in 0..n {
            let row = &objectives[antenna * n..(antenna + 1) * n];
            let (best, value) = argmin_lowest(row);
            table.pi[antenna][c] = best;
            if c == k - 1 {
                table.f_prime[antenna] = value;
            }
        }
    }

    let (last, _) = argmin_lowest(&table.f_prime);
    let selection = backtrack(&table, last)?;
    let inner = solve_support(&selection)?;
    let duplicate_warning = has_duplicates(&selection);
    let p = SelectionVector::from_indices(n, &selection)?;
    let inner_solve_count = counter.load(Ordering::Relaxed);
    debug_assert_eq!(inner_solve_count, n * n * (k - 1) + 1);

    Ok((
        SelectionResult {
            selection,
            p,
            inner,
            inner_solve_count,
            duplicate_warning,
        },
        table,
    ))
}
