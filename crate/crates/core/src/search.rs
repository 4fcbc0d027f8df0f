//! Global baselines: exhaustive search over all fixed-cardinality supports
//! and the fixed contiguous-array reference without selection.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::dp::SelectionResult;
use crate::error::{Error, Result};
use crate::model::SelectionVector;
use crate::scenario::{ChannelSpec, Scenario};
use crate::solver::{solve_inner, SolverConfig};

/// Default cap on the number of subsets an exhaustive search may enumerate.
pub const DEFAULT_ES_BUDGET: u128 = 1_000_000;

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        match c.checked_mul((n - k + i) as u128) {
            Some(v) => c = v / i as u128,
            None => return u128::MAX,
        }
    }
    c
}

/// Lexicographic iterator over all `k`-subsets of `{0, .., n-1}`.
struct Combinations {
    n: usize,
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, k, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.take()?;
        let out = current.clone();
        let mut next = current;
        // rightmost position that can still advance
        let mut i = self.k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - self.k + i {
                next[i] += 1;
                for j in i + 1..self.k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Solves the inner problem for every cardinality-`K` support and returns
/// the minimizer. Enumeration is lexicographic; ties in the objective break
/// to the lexicographically smallest subset, so the result is invariant to
/// evaluation order. Errors out (without solving anything) when the subset
/// count exceeds `budget`.
pub fn exhaustive_search(
    scenario: &Scenario,
    cfg: &SolverConfig,
    budget: u128,
) -> Result<SelectionResult> {
    let n = scenario.num_antennas();
    let k = scenario.num_rf_chains();
    let subsets = binomial(n as u64, k as u64);
    if subsets > budget {
        return Err(Error::BudgetExceeded { subsets, budget });
    }

    let counter = AtomicUsize::new(0);
    let all: Vec<Vec<usize>> = Combinations::new(n, k).collect();
    let best = all
        .into_par_iter()
        .map(|subset| -> Result<(Vec<usize>, crate::solver::InnerSolution)> {
            let p = SelectionVector::from_indices(n, &subset)?;
            counter.fetch_add(1, Ordering::Relaxed);
            let inner = solve_inner(&p, scenario, cfg)?;
            Ok((subset, inner))
        })
        .try_reduce_with(|a, b| {
            let pick_a = match a.1.breakdown.scalarized.partial_cmp(&b.1.breakdown.scalarized) {
                Some(std::cmp::Ordering::Less) => true,
                Some(std::cmp::Ordering::Greater) => false,
                _ => a.0 <= b.0,
            };
            Ok(if pick_a { a } else { b })
        })
        .ok_or_else(|| Error::validation("search", "no subsets to enumerate"))??;

    let (subset, inner) = best;
    let p = SelectionVector::from_indices(n, &subset)?;
    Ok(SelectionResult {
        selection: subset,
        p,
        inner,
        inner_solve_count: counter.load(Ordering::Relaxed),
        duplicate_warning: false,
    })
}

/// The scenario the fixed-array baseline solves: a contiguous array with as
/// many antennas as RF chains at the same spacing, its channel taken from
/// the first `K` columns of this scenario's channel draw so comparisons
/// stay paired per seed.
pub fn ula_scenario(scenario: &Scenario) -> Result<Scenario> {
    let k = scenario.num_rf_chains();
    let prefix = SelectionVector::prefix(scenario.num_antennas(), k);
    let h = prefix.gather_columns(scenario.channel().matrix());
    let mut spec = scenario.to_spec();
    spec.geometry.num_antennas = k;
    spec.num_rf_chains = k;
    spec.channel = ChannelSpec {
        num_ue_antennas: scenario.channel().num_ue_antennas(),
        noise_variance: scenario.channel().noise_variance(),
        seed: None,
        explicit_matrix: Some(
            (0..h.nrows())
                .map(|i| (0..h.ncols()).map(|j| [h[(i, j)].re, h[(i, j)].im]).collect())
                .collect(),
        ),
    };
    Scenario::from_spec(&spec)
}

/// Fixed contiguous-array baseline: all antennas of the reduced array
/// active, a single inner solve for the covariance.
pub fn fixed_ula_baseline(scenario: &Scenario, cfg: &SolverConfig) -> Result<SelectionResult> {
    let sub = ula_scenario(scenario)?;
    let k = sub.num_antennas();
    let p = SelectionVector::all_ones(k);
    let inner = solve_inner(&p, &sub, cfg)?;
    Ok(SelectionResult {
        selection: (0..k).collect(),
        p,
        inner,
        inner_solve_count: 1,
        duplicate_warning: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_inner;

    fn small(n: usize, k: usize, seed: u64, mu: f64) -> Scenario {
        crate::dp::tests::small_scenario(n, k, seed, mu)
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 8), 495);
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(20, 12), 125_970);
        assert_eq!(binomial(4, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn combinations_are_lexicographic_and_complete() {
        let all: Vec<Vec<usize>> = Combinations::new(5, 3).collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1, 2]);
        assert_eq!(all[1], vec![0, 1, 3]);
        assert_eq!(all[9], vec![2, 3, 4]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn single_subset_equals_direct_solve() {
        let sc = small(4, 4, 3, 0.01);
        let cfg = SolverConfig::for_power(1.0);
        let es = exhaustive_search(&sc, &cfg, DEFAULT_ES_BUDGET).unwrap();
        assert_eq!(es.inner_solve_count, 1);
        assert_eq!(es.selection, vec![0, 1, 2, 3]);
        let direct = solve_inner(&SelectionVector::all_ones(4), &sc, &cfg).unwrap();
        assert_eq!(es.objective(), direct.breakdown.scalarized);
    }

    #[test]
    fn es_dominates_every_resolved_subset() {
        let sc = small(4, 2, 9, 0.001);
        let cfg = SolverConfig::for_power(1.0);
        let es = exhaustive_search(&sc, &cfg, DEFAULT_ES_BUDGET).unwrap();
        assert_eq!(es.inner_solve_count, 6);
        for subset in [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]] {
            let p = SelectionVector::from_indices(4, &subset).unwrap();
            let sol = solve_inner(&p, &sc, &cfg).unwrap();
            assert!(
                es.objective() <= sol.breakdown.scalarized + 1e-12,
                "subset {subset:?} beat the exhaustive search"
            );
        }
    }

    #[test]
    fn budget_is_enforced_before_solving() {
        let sc = small(6, 3, 1, 0.0);
        let cfg = SolverConfig::for_power(1.0);
        let err = exhaustive_search(&sc, &cfg, 10).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { subsets: 20, budget: 10 }));
    }

    #[test]
    fn ula_baseline_uses_prefix_channel_columns() {
        let sc = small(6, 3, 4, 0.01);
        let sub = ula_scenario(&sc).unwrap();
        assert_eq!(sub.num_antennas(), 3);
        assert_eq!(sub.num_rf_chains(), 3);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(
                    sub.channel().matrix()[(i, j)],
                    sc.channel().matrix()[(i, j)]
                );
            }
        }
        let base = fixed_ula_baseline(&sc, &SolverConfig::for_power(1.0)).unwrap();
        assert_eq!(base.inner_solve_count, 1);
        assert_eq!(base.p.popcount(), 3);
        assert_eq!(base.selection, vec![0, 1, 2]);
    }
}
