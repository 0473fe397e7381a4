//! Dense min-cost perfect matching.
//!
//! An ε-scaling auction produces a near-optimal matching and column prices.
//! Rows whose matched column is not an exact minimiser of the reduced cost are
//! released, and shortest augmenting paths (Jonker–Volgenant) rematch them
//! against the auction prices, so the final matching is exactly optimal.

const NONE: usize = usize::MAX;

/// Price-update factor between auction phases.
const EPS_DECAY: f64 = 7.0;
/// Final auction ε relative to the largest cost, before division by `n`.
const EPS_FINAL_REL: f64 = 1e-9;

/// Returns `assign` with row `i` matched to column `assign[i]`, minimising
/// `Σ cost[i][assign[i]]`. `cost` is row-major `n × n` with finite entries.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    assert!(cost.iter().all(|c| c.is_finite()), "cost matrix must be finite");
    match n {
        0 => return Vec::new(),
        1 => return vec![0],
        _ => {}
    }
    // duals are shift-invariant; work with nonnegative costs
    let cmin = cost.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = cost.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if cmax == cmin {
        return (0..n).collect();
    }
    let (mut x, price) = auction(cost, n, cmax - cmin);
    let mut v: Vec<f64> = price.iter().map(|p| -p).collect();
    let mut y = vec![NONE; n];
    let mut free_rows = Vec::new();
    for i in 0..n {
        let row = &cost[i * n..(i + 1) * n];
        let best = (0..n).map(|j| row[j] - v[j]).fold(f64::INFINITY, f64::min);
        let j = x[i];
        if row[j] - v[j] <= best {
            y[j] = i;
        } else {
            x[i] = NONE;
            free_rows.push(i);
        }
    }
    augment(cost, n, &free_rows, &mut x, &mut y, &mut v);
    x
}

/// Gauss–Seidel forward auction with ε-scaling. Returns the matching and the
/// column prices; the matching is within `n·ε_final` of optimal.
fn auction(cost: &[f64], n: usize, range: f64) -> (Vec<usize>, Vec<f64>) {
    let eps_final = EPS_FINAL_REL * range / n as f64;
    let mut eps = (range / 4.0).max(eps_final);
    let mut price = vec![0.0; n];
    let mut owner = vec![NONE; n];
    let mut x = vec![NONE; n];
    let mut queue: Vec<usize> = Vec::with_capacity(n);
    loop {
        owner.iter_mut().for_each(|o| *o = NONE);
        queue.clear();
        queue.extend((0..n).rev());
        while let Some(i) = queue.pop() {
            let row = &cost[i * n..(i + 1) * n];
            // best and second-best value −c_ij − p_j
            let (mut j1, mut v1, mut v2) = (0usize, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for j in 0..n {
                let val = -row[j] - price[j];
                if val > v2 {
                    if val > v1 {
                        v2 = v1;
                        v1 = val;
                        j1 = j;
                    } else {
                        v2 = val;
                    }
                }
            }
            price[j1] += v1 - v2 + eps;
            let prev = owner[j1];
            if prev != NONE {
                queue.push(prev);
            }
            owner[j1] = i;
            x[i] = j1;
        }
        if eps <= eps_final {
            break;
        }
        eps = (eps / EPS_DECAY).max(eps_final);
    }
    (x, price)
}

fn augment(cost: &[f64], n: usize, free_rows: &[usize], x: &mut [usize], y: &mut [usize], v: &mut [f64]) {
    if free_rows.is_empty() {
        return;
    }
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    let mut d = vec![0.0; n];
    for &free_i in free_rows {
        let mut j = find_path(cost, n, free_i, y, v, &mut pred, &mut cols, &mut d);
        let mut i = NONE;
        let mut guard = 0;
        while i != free_i {
            i = pred[j];
            y[j] = i;
            std::mem::swap(&mut j, &mut x[i]);
            guard += 1;
            debug_assert!(guard <= n, "augmenting path longer than n");
        }
    }
}

/// Dijkstra over reduced costs from `start`; returns the free column reached
/// and updates the duals of the settled columns.
#[allow(clippy::too_many_arguments)]
fn find_path(
    cost: &[f64],
    n: usize,
    start: usize,
    y: &[usize],
    v: &mut [f64],
    pred: &mut [usize],
    cols: &mut [usize],
    d: &mut [f64],
) -> usize {
    let row = &cost[start * n..(start + 1) * n];
    for j in 0..n {
        cols[j] = j;
        d[j] = row[j] - v[j];
        pred[j] = start;
    }
    // cols[..ready] settled, cols[lo..hi] at the current minimum, cols[hi..] unseen
    let (mut lo, mut hi, mut ready) = (0usize, 0usize, 0usize);
    let mut final_j = NONE;
    while final_j == NONE {
        if lo == hi {
            ready = lo;
            hi = lo + 1;
            let mut mind = d[cols[lo]];
            for k in hi..n {
                let j = cols[k];
                if d[j] <= mind {
                    if d[j] < mind {
                        hi = lo;
                        mind = d[j];
                    }
                    cols[k] = cols[hi];
                    cols[hi] = j;
                    hi += 1;
                }
            }
            for &j in &cols[lo..hi] {
                if y[j] == NONE {
                    final_j = j;
                }
            }
        }
        if final_j == NONE {
            // scan
            while lo != hi {
                let j = cols[lo];
                lo += 1;
                let i = y[j];
                let mind = d[j];
                let r = &cost[i * n..(i + 1) * n];
                let h = r[j] - v[j] - mind;
                let mut k = hi;
                while k < n {
                    let j = cols[k];
                    let cred = r[j] - v[j] - h;
                    if cred < d[j] {
                        d[j] = cred;
                        pred[j] = i;
                        if cred == mind {
                            if y[j] == NONE {
                                final_j = j;
                                break;
                            }
                            cols[k] = cols[hi];
                            cols[hi] = j;
                            hi += 1;
                        }
                    }
                    k += 1;
                }
                if final_j != NONE {
                    break;
                }
            }
        }
    }
    // the free column reached sits at the current minimum distance
    let mind = d[final_j];
    for &j in &cols[..ready] {
        v[j] += d[j] - mind;
    }
    final_j
}
