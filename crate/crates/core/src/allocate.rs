//! Adaptive per-function budget allocation.
//!
//! Small functions are kept whole. The rest of the budget, `B_large`, is split
//! across large functions: a shared baseline ratio is biased up or down by each
//! function's normalized importance, clamped to `[0, 1]`, then rescaled so the
//! retained tokens add up to `B_large`. Ratios pushed above 1 by the rescale
//! are pinned at 1 and the surplus is spread over the others until nothing
//! moves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::TokenCount;

/// The allocation view of a selected chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub id: usize,
    pub tokens: TokenCount,
    /// Non-blank lines.
    pub lines: usize,
    /// Raw AMI against the instruction.
    pub ami: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AllocationFlag {
    /// Small functions used up the whole budget; large functions get nothing.
    NoBudget,
    /// Every biased ratio was zero; a uniform ratio was used instead.
    DegenerateWeights,
    /// Small functions alone exceeded the budget; these were dropped.
    SmallOverflow { dropped: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    /// Small functions kept in full.
    pub small_set: Vec<usize>,
    /// Small functions that did not fit even whole.
    pub dropped_small: Vec<usize>,
    pub large_set: Vec<usize>,
    pub r_base: f64,
    /// Biased ratios after the `[0, 1]` clamp, before rescaling.
    pub biased: BTreeMap<usize, f64>,
    pub retention: BTreeMap<usize, f64>,
    pub per_chunk_budget: BTreeMap<usize, TokenCount>,
    pub b_large: TokenCount,
    pub flags: Vec<AllocationFlag>,
}

impl AllocationPlan {
    /// `sum(R_i * T_i)` over large functions, before flooring.
    pub fn retained_large(&self, large: &[FunctionInfo]) -> f64 {
        large
            .iter()
            .map(|f| self.retention[&f.id] * f.tokens.get() as f64)
            .sum()
    }
}

/// Functions with fewer than `threshold_lines` non-blank lines are small.
pub fn partition_small_large(funcs: &[FunctionInfo], threshold_lines: usize) -> (Vec<FunctionInfo>, Vec<FunctionInfo>) {
    funcs.iter().partition(|f| f.lines < threshold_lines)
}

pub fn biased_ratio(r_base: f64, beta: f64, ami_norm: f64) -> f64 {
    (r_base * (1.0 + beta * (2.0 * ami_norm - 1.0))).clamp(0.0, 1.0)
}

/// Scales `biased` so `sum(R_i * T_i) == b_large`, pinning ratios at 1 and
/// redistributing the surplus until no further ratio exceeds 1.
pub fn rescale(biased: &[f64], tokens: &[f64], b_large: f64) -> Vec<f64> {
    let n = biased.len();
    let mut pinned = vec![false; n];
    loop {
        let fixed: f64 = (0..n).filter(|&i| pinned[i]).map(|i| tokens[i]).sum();
        let remaining = b_large - fixed;
        let free: f64 = (0..n).filter(|&i| !pinned[i]).map(|i| biased[i] * tokens[i]).sum();
        if free <= 0.0 || remaining <= 0.0 {
            return (0..n).map(|i| if pinned[i] { 1.0 } else { 0.0 }).collect();
        }
        let scale = remaining / free;
        let mut moved = false;
        for i in 0..n {
            if !pinned[i] && biased[i] * scale > 1.0 {
                pinned[i] = true;
                moved = true;
            }
        }
        if !moved {
            return (0..n)
                .map(|i| if pinned[i] { 1.0 } else { biased[i] * scale })
                .collect();
        }
    }
}

const EPS: f64 = 1e-9;

/// Integer budgets `floor(R_i * T_i)`; the rounding shortfall goes one token
/// at a time to the most important functions with a fractional remainder.
fn integer_budgets(
    large: &[FunctionInfo],
    retention: &BTreeMap<usize, f64>,
    ami_norm: &BTreeMap<usize, f64>,
) -> BTreeMap<usize, TokenCount> {
    let exact: Vec<f64> = large.iter().map(|f| retention[&f.id] * f.tokens.get() as f64).collect();
    let mut budgets: Vec<usize> = exact
        .iter()
        .zip(large)
        .map(|(&x, f)| ((x + EPS).floor() as usize).min(f.tokens.get()))
        .collect();
    let target = (exact.iter().sum::<f64>() + EPS).floor() as usize;
    let mut order: Vec<usize> = (0..large.len())
        .filter(|&i| exact[i] - budgets[i] as f64 > EPS && budgets[i] < large[i].tokens.get())
        .collect();
    order.sort_by(|&a, &b| {
        let (ia, ib) = (large[a].id, large[b].id);
        ami_norm[&ib].total_cmp(&ami_norm[&ia]).then(ia.cmp(&ib))
    });
    let mut shortfall = target.saturating_sub(budgets.iter().sum());
    for i in order {
        if shortfall == 0 {
            break;
        }
        budgets[i] += 1;
        shortfall -= 1;
    }
    large.iter().zip(budgets).map(|(f, b)| (f.id, TokenCount(b))).collect()
}

pub fn allocate(
    small: &[FunctionInfo],
    large: &[FunctionInfo],
    ami_norm: &BTreeMap<usize, f64>,
    budget: TokenCount,
    beta: f64,
) -> Result<AllocationPlan> {
    if budget == TokenCount::ZERO {
        return Err(Error::ConfigInvalid("budget must be positive".into()));
    }
    for f in large {
        let a = ami_norm
            .get(&f.id)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("no normalized AMI for function {}", f.id)))?;
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidInput(format!(
                "normalized AMI {a} of function {} outside [0, 1]",
                f.id
            )));
        }
    }
    let mut flags = Vec::new();

    // Small functions: all of them when they fit, else by descending AMI.
    let small_total: TokenCount = small.iter().map(|f| f.tokens).sum();
    let (small_set, dropped_small) = if small_total <= budget {
        (small.iter().map(|f| f.id).collect(), Vec::new())
    } else {
        let mut order: Vec<&FunctionInfo> = small.iter().collect();
        order.sort_by(|a, b| b.ami.total_cmp(&a.ami).then(a.id.cmp(&b.id)));
        let mut used = TokenCount::ZERO;
        let (mut kept, mut dropped) = (Vec::new(), Vec::new());
        for f in order {
            if used + f.tokens <= budget {
                used += f.tokens;
                kept.push(f.id);
            } else {
                dropped.push(f.id);
            }
        }
        kept.sort_unstable();
        dropped.sort_unstable();
        flags.push(AllocationFlag::SmallOverflow {
            dropped: dropped.clone(),
        });
        (kept, dropped)
    };
    let kept_small: TokenCount = small
        .iter()
        .filter(|f| small_set.contains(&f.id))
        .map(|f| f.tokens)
        .sum();
    let b_large = budget.saturating_sub(kept_small);

    let large_total: f64 = large.iter().map(|f| f.tokens.get() as f64).sum();
    let r_base = if large_total > 0.0 {
        b_large.get() as f64 / large_total
    } else {
        0.0
    };
    let biased: Vec<f64> = large
        .iter()
        .map(|f| biased_ratio(r_base, beta, ami_norm[&f.id]))
        .collect();
    let tokens: Vec<f64> = large.iter().map(|f| f.tokens.get() as f64).collect();
    let weighted: f64 = biased.iter().zip(&tokens).map(|(r, t)| r * t).sum();

    let ratios: Vec<f64> = if large.is_empty() {
        Vec::new()
    } else if b_large == TokenCount::ZERO {
        flags.push(AllocationFlag::NoBudget);
        vec![0.0; large.len()]
    } else if weighted <= 0.0 {
        flags.push(AllocationFlag::DegenerateWeights);
        let uniform = if large_total > 0.0 {
            (b_large.get() as f64 / large_total).min(1.0)
        } else {
            1.0
        };
        vec![uniform; large.len()]
    } else {
        rescale(&biased, &tokens, b_large.get() as f64)
    };

    let retention: BTreeMap<usize, f64> = large.iter().map(|f| f.id).zip(ratios).collect();
    let per_chunk_budget = integer_budgets(large, &retention, ami_norm);
    Ok(AllocationPlan {
        small_set,
        dropped_small,
        large_set: large.iter().map(|f| f.id).collect(),
        r_base,
        biased: large.iter().map(|f| f.id).zip(biased).collect(),
        retention,
        per_chunk_budget,
        b_large,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(id: usize, tokens: usize, lines: usize, ami: f64) -> FunctionInfo {
        FunctionInfo {
            id,
            tokens: TokenCount(tokens),
            lines,
            ami,
        }
    }

    fn norms(v: &[(usize, f64)]) -> BTreeMap<usize, f64> {
        v.iter().copied().collect()
    }

    #[test]
    fn partition_uses_strict_threshold() {
        let funcs = [f(0, 10, 4, 0.0), f(1, 10, 5, 0.0)];
        let (small, large) = partition_small_large(&funcs, 5);
        assert_eq!(small.iter().map(|f| f.id).collect::<Vec<_>>(), [0]);
        assert_eq!(large.iter().map(|f| f.id).collect::<Vec<_>>(), [1]);
        let (small, large) = partition_small_large(&[], 5);
        assert!(small.is_empty() && large.is_empty());
    }

    #[test]
    fn two_function_hand_example() {
        // R_base = 100/200 = 0.5; biased 0.5*(1±0.5) = 0.75, 0.25; weighted sum 100 = B_large.
        let large = [f(0, 100, 10, 1.0), f(1, 100, 10, 0.0)];
        let plan = allocate(&[], &large, &norms(&[(0, 1.0), (1, 0.0)]), TokenCount(100), 0.5).unwrap();
        assert_eq!(plan.r_base, 0.5);
        assert_eq!(plan.biased[&0], 0.75);
        assert_eq!(plan.biased[&1], 0.25);
        assert!((plan.retention[&0] - 0.75).abs() < 1e-12);
        assert!((plan.retention[&1] - 0.25).abs() < 1e-12);
        assert_eq!(plan.per_chunk_budget[&0], TokenCount(75));
        assert_eq!(plan.per_chunk_budget[&1], TokenCount(25));
    }

    #[test]
    fn zero_beta_has_no_bias() {
        let large = [f(0, 80, 9, 0.0), f(1, 120, 9, 0.0), f(2, 50, 9, 0.0)];
        let plan = allocate(
            &[],
            &large,
            &norms(&[(0, 1.0), (1, 0.0), (2, 0.3)]),
            TokenCount(100),
            0.0,
        )
        .unwrap();
        assert!(plan.biased.values().all(|&r| r == plan.r_base));
        assert!(plan.retention.values().all(|&r| (r - 0.4).abs() < 1e-12));
    }

    #[test]
    fn small_functions_consume_budget() {
        let small = [f(0, 60, 3, 0.0), f(1, 40, 2, 0.0)];
        let large = [f(2, 100, 10, 0.0)];
        let plan = allocate(&small, &large, &norms(&[(2, 0.5)]), TokenCount(100), 0.5).unwrap();
        assert_eq!(plan.b_large, TokenCount(0));
        assert_eq!(plan.retention[&2], 0.0);
        assert_eq!(plan.per_chunk_budget[&2], TokenCount(0));
        assert_eq!(plan.flags, [AllocationFlag::NoBudget]);
        assert_eq!(plan.small_set, [0, 1]);
    }

    #[test]
    fn small_overflow_keeps_most_relevant() {
        let small = [f(0, 60, 3, 1.0), f(1, 50, 2, 9.0), f(2, 30, 2, 5.0)];
        let plan = allocate(&small, &[], &norms(&[]), TokenCount(100), 0.5).unwrap();
        assert_eq!(plan.small_set, [1, 2]);
        assert_eq!(plan.dropped_small, [0]);
        assert_eq!(plan.flags, [AllocationFlag::SmallOverflow { dropped: vec![0] }]);
    }

    #[test]
    fn rescale_pins_and_redistributes() {
        // Scale 2 would give the first function 1.2; pinned at 1, the other
        // absorbs the remaining 60 tokens: 0.2 * 3 = 0.6.
        let r = rescale(&[0.6, 0.2], &[100.0, 100.0], 160.0);
        assert_eq!(r[0], 1.0);
        assert!((r[1] - 0.6).abs() < 1e-12);
        let r = rescale(&[0.5, 0.5], &[10.0, 10.0], 100.0);
        assert_eq!(r, [1.0, 1.0]);
    }

    #[test]
    fn generous_budget_keeps_everything() {
        let large = [f(0, 100, 10, 0.0), f(1, 50, 10, 0.0)];
        let plan = allocate(&[], &large, &norms(&[(0, 0.0), (1, 1.0)]), TokenCount(150), 0.5).unwrap();
        assert!(plan.retention.values().all(|&r| r == 1.0));
        assert_eq!(plan.per_chunk_budget[&0], TokenCount(100));
        assert_eq!(plan.per_chunk_budget[&1], TokenCount(50));
    }

    #[test]
    fn integer_budgets_hit_floor_of_total() {
        let large = [f(0, 7, 9, 0.0), f(1, 7, 9, 0.0), f(2, 7, 9, 0.0)];
        let plan = allocate(
            &[],
            &large,
            &norms(&[(0, 0.5), (1, 0.5), (2, 0.5)]),
            TokenCount(10),
            0.5,
        )
        .unwrap();
        let total: usize = plan.per_chunk_budget.values().map(|t| t.get()).sum();
        assert_eq!(total, 10);
        // Each gets 10/3; the spare token goes to the lowest id among equals.
        assert_eq!(plan.per_chunk_budget[&0], TokenCount(4));
    }

    #[test]
    fn rejects_bad_inputs() {
        let large = [f(0, 10, 9, 0.0)];
        assert!(allocate(&[], &large, &norms(&[(0, 1.5)]), TokenCount(5), 0.5).is_err());
        assert!(allocate(&[], &large, &norms(&[]), TokenCount(5), 0.5).is_err());
        assert!(allocate(&[], &large, &norms(&[(0, 0.5)]), TokenCount(0), 0.5).is_err());
    }

    proptest! {
        #[test]
        fn raising_importance_never_lowers_ratio(
            tokens in proptest::collection::vec(1usize..300, 2..6),
            norm in proptest::collection::vec(0.0f64..=1.0, 6),
            bump in 0.0f64..1.0,
            beta in 0.0f64..1.0,
            frac in 0.05f64..0.95,
        ) {
            let large: Vec<FunctionInfo> = tokens.iter().enumerate().map(|(i, &t)| f(i, t, 9, 0.0)).collect();
            let total: usize = tokens.iter().sum();
            let budget = TokenCount(((total as f64 * frac) as usize).max(1));
            let base: BTreeMap<usize, f64> = (0..tokens.len()).map(|i| (i, norm[i])).collect();
            let mut raised = base.clone();
            raised.insert(0, (norm[0] + bump).min(1.0));
            let a = allocate(&[], &large, &base, budget, beta).unwrap();
            let b = allocate(&[], &large, &raised, budget, beta).unwrap();
            prop_assert!(b.retention[&0] >= a.retention[&0] - 1e-12);
            prop_assert!(b.biased[&0] >= a.biased[&0]);
        }
    }
}
