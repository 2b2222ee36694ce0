//! Exact offline optima and exact expectations of randomized online algorithms.

use serde::{Deserialize, Serialize};

use crate::algo::OnlineAlgorithm;
use crate::error::{Error, Result};
use crate::model::{CompiledModel, Problem, Realization, TOL};

/// Default cap on the number of assignments enumerated by brute force.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Default cap on the number of rounding outcomes enumerated exactly.
pub const BRANCH_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub value: f64,
    pub assignment: Realization,
}

/// Number of feasible assignments, prod_j (deg_j + 1).
pub fn assignment_count(problem: &Problem) -> f64 {
    problem
        .graph
        .arcs
        .iter()
        .map(|a| (a.len() + 1) as f64)
        .product()
}

/// Exact max of c(M) over all assignments; ties go to the lexicographically
/// smallest assignment (NONE before any offline vertex, offline vertices by id).
pub fn opt_bruteforce(problem: &Problem, cap: f64) -> Result<OptResult> {
    let size = assignment_count(problem);
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    let g = &problem.graph;
    let r = g.n_online();
    if r == 0 {
        return Ok(OptResult {
            value: 0.0,
            assignment: Realization::empty(0),
        });
    }
    let first: Vec<Option<usize>> = std::iter::once(None)
        .chain(g.arcs[0].iter().map(|n| Some(n.i)))
        .collect();
    let search = |c0: &Option<usize>| -> Result<(f64, Vec<Option<usize>>)> {
        let mut choice = vec![0usize; r];
        let mut assign = vec![None; r];
        assign[0] = *c0;
        let mut best = (f64::NEG_INFINITY, assign.clone());
        loop {
            let v = problem.reward_unchecked(&assign)?;
            if v > best.0 {
                best = (v, assign.clone());
            }
            // odometer over vertices 1.., last vertex fastest
            let mut j = r - 1;
            loop {
                if j == 0 {
                    return Ok(best);
                }
                if choice[j] < g.arcs[j].len() {
                    choice[j] += 1;
                    assign[j] = Some(g.arcs[j][choice[j] - 1].i);
                    break;
                }
                choice[j] = 0;
                assign[j] = None;
                j -= 1;
            }
        }
    };
    let parts: Vec<Result<(f64, Vec<Option<usize>>)>> = crate::par::map_vec(&first, search);
    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    for p in parts {
        let p = p?;
        if best.as_ref().is_none_or(|b| p.0 > b.0) {
            best = Some(p);
        }
    }
    let (value, assign) = best.expect("at least one branch");
    Ok(OptResult {
        value,
        assignment: Realization {
            assign,
            success: None,
        },
    })
}

/// Maximum-weight bipartite matching (Hungarian method), the free-disposal optimum.
pub fn opt_matching_fd(problem: &Problem) -> Result<OptResult> {
    if !matches!(problem.model, CompiledModel::FreeDisposal) {
        return Err(Error::ModelMismatch {
            algorithm: "max-weight matching",
            expected: "free_disposal",
            found: problem.model_name(),
        });
    }
    let g = &problem.graph;
    let (l, r) = (g.n_offline(), g.n_online());
    let n = l.max(r);
    if n == 0 || g.n_edges() == 0 {
        return Ok(OptResult {
            value: 0.0,
            assignment: Realization::empty(r),
        });
    }
    // rows are online vertices, columns offline; minimize -w
    let mut cost = vec![vec![0.0f64; n]; n];
    for (j, arcs) in g.arcs.iter().enumerate() {
        for a in arcs {
            cost[j][a.i] = -a.w;
        }
    }
    let col_of_row = hungarian(&cost);
    let mut assign = vec![None; r];
    let mut value = 0.0;
    for j in 0..r {
        let i = col_of_row[j];
        if let Some(a) = g.nbr(i, j) {
            if a.w > 0.0 {
                assign[j] = Some(i);
                value += a.w;
            }
        }
    }
    Ok(OptResult {
        value,
        assignment: Realization {
            assign,
            success: None,
        },
    })
}

/// Minimum-cost perfect assignment on a square matrix; returns the column of each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        p[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Exact expected realized reward of `alg`, enumerating every rounding outcome.
pub fn alg_expectation_exact<A: OnlineAlgorithm>(alg: A, cap: usize) -> Result<f64> {
    let mut leaves = 0usize;
    expand(alg, 0, 1.0, &mut leaves, cap)
}

fn expand<A: OnlineAlgorithm>(
    mut alg: A,
    j: usize,
    prob: f64,
    leaves: &mut usize,
    cap: usize,
) -> Result<f64> {
    if j == alg.n_online() {
        *leaves += 1;
        if *leaves > cap {
            return Err(Error::SizeCap {
                size: *leaves as f64,
                cap: cap as f64,
            });
        }
        return Ok(prob * alg.primal());
    }
    let row = alg.allocate(j)?;
    let mass: f64 = row.iter().map(|r| r.1).sum();
    let mut outcomes: Vec<(Option<usize>, f64)> = row.iter().map(|&(i, x)| (Some(i), x)).collect();
    let norm = if mass < 1.0 - TOL {
        outcomes.push((None, 1.0 - mass));
        1.0
    } else {
        mass
    };
    let mut acc = 0.0;
    for (choice, p) in outcomes {
        let mut next = alg.clone();
        next.commit(j, choice);
        acc += expand(next, j + 1, prob * p / norm, leaves, cap)?;
    }
    Ok(acc)
}

/// Default cap on the number of load states of the budget dynamic program.
pub const DP_STATE_CAP: usize = 20_000_000;

/// Exact optimum of an additive-budget (or stochastic-reward) instance whose
/// weights and budgets are integer multiples of `unit`, by dynamic programming
/// over capped loads.
pub fn opt_budget_dp(problem: &Problem, unit: f64, state_cap: usize) -> Result<OptResult> {
    let g = &problem.graph;
    let weight_of = |n: &crate::model::Nbr| match problem.model {
        CompiledModel::AdditiveBudget => Ok(n.w),
        CompiledModel::StochasticReward => Ok(n.p * g.weight[n.i]),
        _ => Err(Error::ModelMismatch {
            algorithm: "budget dynamic program",
            expected: "additive_budget or stochastic_reward",
            found: problem.model_name(),
        }),
    };
    let budget_of = |i: usize| match problem.model {
        CompiledModel::StochasticReward => g.weight[i],
        _ => g.budget[i],
    };
    let to_units = |x: f64| -> Result<usize> {
        let k = (x / unit).round();
        if (k * unit - x).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(Error::Config(format!(
                "{x} is not a multiple of the grid unit {unit}"
            )));
        }
        Ok(k as usize)
    };
    let l = g.n_offline();
    let caps: Vec<usize> = (0..l)
        .map(|i| to_units(budget_of(i)))
        .collect::<Result<_>>()?;
    let mut radix = vec![1usize; l + 1];
    for i in 0..l {
        radix[i + 1] = radix[i]
            .checked_mul(caps[i] + 1)
            .filter(|&s| s <= state_cap)
            .ok_or(Error::SizeCap {
                size: f64::INFINITY,
                cap: state_cap as f64,
            })?;
    }
    let states = radix[l];
    let steps: Vec<Vec<(usize, usize)>> = g
        .arcs
        .iter()
        .map(|arcs| {
            arcs.iter()
                .map(|n| Ok((n.i, to_units(weight_of(n)?)?)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    // parent[j][s] = (previous state, choice index + 1) for reachable states after vertex j
    const UNSEEN: u32 = u32::MAX;
    let mut reach = vec![false; states];
    reach[0] = true;
    let mut parents: Vec<Vec<(u32, u8)>> = Vec::with_capacity(g.n_online());
    for arcs in &steps {
        let mut next = vec![false; states];
        let mut parent = vec![(UNSEEN, 0u8); states];
        for s in (0..states).filter(|&s| reach[s]) {
            if parent[s].0 == UNSEEN {
                parent[s] = (s as u32, 0);
                next[s] = true;
            }
            for (k, &(i, w)) in arcs.iter().enumerate() {
                let load = s / radix[i] % (caps[i] + 1);
                let add = w.min(caps[i] - load);
                let t = s + add * radix[i];
                if parent[t].0 == UNSEEN {
                    parent[t] = (s as u32, (k + 1) as u8);
                    next[t] = true;
                }
            }
        }
        parents.push(parent);
        reach = next;
    }
    let units_of = |s: usize| -> usize { (0..l).map(|i| s / radix[i] % (caps[i] + 1)).sum() };
    let best = (0..states)
        .filter(|&s| reach[s])
        .max_by_key(|&s| (units_of(s), std::cmp::Reverse(s)))
        .unwrap_or(0);
    let mut assign = vec![None; g.n_online()];
    let mut s = best;
    for j in (0..g.n_online()).rev() {
        let (prev, k) = parents[j][s];
        if k > 0 {
            assign[j] = Some(g.arcs[j][k as usize - 1].i);
        }
        s = prev as usize;
    }
    let assignment = Realization {
        assign,
        success: None,
    };
    let value = problem.reward(&assignment)?;
    Ok(OptResult { value, assignment })
}

/// Bounds on the fractional optimum of a separable concave instance, from
/// Frank-Wolfe iterations over the product of per-arrival simplices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalBounds {
    /// Objective of the best iterate.
    pub lower: f64,
    /// Iterate value plus the smallest Frank-Wolfe gap seen.
    pub upper: f64,
}

pub fn opt_fractional_concave(problem: &Problem, iterations: usize) -> Result<FractionalBounds> {
    let CompiledModel::ConcaveSeparable(fs) = &problem.model else {
        return Err(Error::ModelMismatch {
            algorithm: "fractional concave optimum",
            expected: "concave_separable",
            found: problem.model_name(),
        });
    };
    let g = &problem.graph;
    let mut x: Vec<Vec<f64>> = g.arcs.iter().map(|a| vec![0.0; a.len()]).collect();
    let loads = |x: &[Vec<f64>]| {
        let mut u = vec![0.0; g.n_offline()];
        for (j, arcs) in g.arcs.iter().enumerate() {
            for (k, n) in arcs.iter().enumerate() {
                u[n.i] += n.w * x[j][k];
            }
        }
        u
    };
    let value = |u: &[f64]| u.iter().zip(fs).map(|(&ui, f)| f.p(ui)).sum::<f64>();
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    for _ in 0..iterations {
        let u = loads(&x);
        let cur = value(&u);
        lower = lower.max(cur);
        // linear maximization oracle: each arrival picks its steepest edge, or nothing
        let mut gap = 0.0;
        let mut target: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        for (j, arcs) in g.arcs.iter().enumerate() {
            let grads: Vec<f64> = arcs.iter().map(|n| n.w * fs[n.i].dp(u[n.i])).collect();
            let mut row = vec![0.0; arcs.len()];
            if let Some(k) = crate::algo::argmax_by(&grads, |&d| d > 0.0, |&d| d) {
                row[k] = 1.0;
            }
            for k in 0..arcs.len() {
                gap += grads[k] * (row[k] - x[j][k]);
            }
            target.push(row);
        }
        upper = upper.min(cur + gap.max(0.0));
        if gap <= 1e-12 {
            break;
        }
        // exact line search on the concave one-dimensional restriction, by ternary search
        let dir_loads = {
            let mut d = vec![0.0; g.n_offline()];
            for (j, arcs) in g.arcs.iter().enumerate() {
                for (k, n) in arcs.iter().enumerate() {
                    d[n.i] += n.w * (target[j][k] - x[j][k]);
                }
            }
            d
        };
        let along = |gamma: f64| {
            value(
                &u.iter()
                    .zip(&dir_loads)
                    .map(|(a, d)| a + gamma * d)
                    .collect::<Vec<_>>(),
            )
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if along(m1) < along(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let gamma = 0.5 * (lo + hi);
        for (row, tr) in x.iter_mut().zip(&target) {
            for (v, tv) in row.iter_mut().zip(tr) {
                *v += gamma * (tv - *v);
            }
        }
    }
    lower = lower.max(value(&loads(&x)));
    Ok(FractionalBounds { lower, upper })
}
