//! Dense linear assignment by the Jonker-Volgenant shortest augmenting path method.
//! Column duals are warm-started from a forward auction with epsilon scaling; rows
//! whose auction column is an exact row minimum under those duals keep it, and the
//! rest are routed by Dijkstra-like augmentation, which makes the result exact.
//! Cold starts (all costs equal) fall back to column reduction with reduction transfer.

const NONE: usize = usize::MAX;

/// Square cost matrix in row-major order.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "cost matrix must be n x n");
        Self { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

}

/// Source of assignment costs; `cost(i, j)` is the price of giving column `j` to row `i`.
pub trait Costs {
    fn size(&self) -> usize;
    fn cost(&self, i: usize, j: usize) -> f64;
}

impl Costs for CostMatrix {
    fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Minimum-cost perfect matching; returns the column assigned to each row.
pub fn solve<C: Costs>(c: &C) -> Vec<usize> {
    let n = c.size();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![0];
    }
    let mut x = vec![NONE; n];
    let mut y = vec![NONE; n];
    let mut v = vec![0.0; n];
    let mut free_rows = vec![0usize; n];

    let n_free = match auction(c) {
        Some((prices, owner)) => warm_start(c, &prices, &owner, &mut free_rows, &mut x, &mut y, &mut v),
        None => column_reduction(c, &mut free_rows, &mut x, &mut y, &mut v),
    };
    if n_free > 0 {
        augment(c, &free_rows[..n_free], &mut x, &mut y, &mut v);
    }
    x
}

/// Sum of `c[i][assignment[i]]`.
pub fn assignment_cost<C: Costs>(c: &C, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| c.cost(i, j)).sum()
}

/// Auction prices stop refining at this fraction of the cost spread.
const EPS_FLOOR: f64 = 1e-7;
const EPS_STEP: f64 = 8.0;

/// Forward auction (rows bid for columns at cost plus price) with epsilon scaling.
/// Returns the prices and the row owning each column, or `None` when the costs are
/// constant or not finite.
fn auction<C: Costs>(c: &C) -> Option<(Vec<f64>, Vec<usize>)> {
    let n = c.size();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in 0..n {
            let cij = c.cost(i, j);
            lo = lo.min(cij);
            hi = hi.max(cij);
        }
    }
    let spread = hi - lo;
    if !(spread > 0.0 && spread.is_finite()) {
        return None;
    }
    let eps_min = spread * EPS_FLOOR;
    let mut eps = spread / 4.0;
    let mut price = vec![0.0; n];
    let mut owner = vec![NONE; n];
    let mut bidders: Vec<usize> = Vec::with_capacity(n);
    loop {
        owner.fill(NONE);
        bidders.clear();
        bidders.extend((0..n).rev());
        while let Some(i) = bidders.pop() {
            let (mut best, mut second, mut jb) = (f64::INFINITY, f64::INFINITY, 0);
            for (j, p) in price.iter().enumerate() {
                let val = c.cost(i, j) + p;
                if val < second {
                    if val < best {
                        second = best;
                        best = val;
                        jb = j;
                    } else {
                        second = val;
                    }
                }
            }
            price[jb] += second - best + eps;
            let prev = std::mem::replace(&mut owner[jb], i);
            if prev != NONE {
                bidders.push(prev);
            }
        }
        if eps <= eps_min {
            return Some((price, owner));
        }
        eps = (eps / EPS_STEP).max(eps_min);
    }
}

/// Sets `v = -prices` and keeps the auction pairs that are exact row minima; other
/// rows take their row-minimum column if it is still free. Returns the free row count.
fn warm_start<C: Costs>(
    c: &C,
    prices: &[f64],
    owner: &[usize],
    free_rows: &mut [usize],
    x: &mut [usize],
    y: &mut [usize],
    v: &mut [f64],
) -> usize {
    for (vj, p) in v.iter_mut().zip(prices) {
        *vj = -p;
    }
    let row_min = |i: usize| {
        let (mut best, mut jb) = (f64::INFINITY, 0);
        for (j, vj) in v.iter().enumerate() {
            let r = c.cost(i, j) - vj;
            if r < best {
                best = r;
                jb = j;
            }
        }
        (best, jb)
    };
    let mut pending = Vec::new();
    for (j, &i) in owner.iter().enumerate() {
        let (best, _) = row_min(i);
        if c.cost(i, j) - v[j] <= best {
            x[i] = j;
            y[j] = i;
        } else {
            pending.push(i);
        }
    }
    let mut n_free = 0;
    for i in pending {
        let (_, jb) = row_min(i);
        if y[jb] == NONE {
            x[i] = jb;
            y[jb] = i;
        } else {
            free_rows[n_free] = i;
            n_free += 1;
        }
    }
    n_free
}

fn column_reduction<C: Costs>(c: &C, free_rows: &mut [usize], x: &mut [usize], y: &mut [usize], v: &mut [f64]) -> usize {
    let n = c.size();
    v.fill(f64::INFINITY);
    y.fill(0);
    for i in 0..n {
        for j in 0..n {
            let cij = c.cost(i, j);
            if cij < v[j] {
                v[j] = cij;
                y[j] = i;
            }
        }
    }
    let mut unique = vec![true; n];
    for j in (0..n).rev() {
        let i = y[j];
        if x[i] == NONE {
            x[i] = j;
        } else {
            unique[i] = false;
            y[j] = NONE;
        }
    }
    let mut n_free = 0;
    for i in 0..n {
        if x[i] == NONE {
            free_rows[n_free] = i;
            n_free += 1;
        } else if unique[i] {
            // reduction transfer
            let j = x[i];
            let mut min = f64::INFINITY;
            for j2 in 0..n {
                if j2 != j {
                    min = min.min(c.cost(i, j2) - v[j2]);
                }
            }
            v[j] -= min;
        }
    }
    n_free
}

/// Moves the columns at minimum distance to the front of `cols[lo..]`; returns the new `hi`.
fn find(lo: usize, d: &[f64], cols: &mut [usize]) -> usize {
    let n = cols.len();
    let mut hi = lo + 1;
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
    hi
}

#[allow(clippy::too_many_arguments)]
fn scan<C: Costs>(
    c: &C,
    plo: &mut usize,
    phi: &mut usize,
    d: &mut [f64],
    cols: &mut [usize],
    pred: &mut [usize],
    y: &[usize],
    v: &[f64],
) -> usize {
    let n = c.size();
    // lo and hi are written back only when the scan list is exhausted
    let (mut lo, mut hi) = (*plo, *phi);
    while lo != hi {
        let j = cols[lo];
        lo += 1;
        let i = y[j];
        let mind = d[j];
        let h = c.cost(i, j) - v[j] - mind;
        let mut k = hi;
        while k < n {
            let j = cols[k];
            let cred = c.cost(i, j) - v[j] - h;
            if cred < d[j] {
                d[j] = cred;
                pred[j] = i;
                if cred == mind {
                    if y[j] == NONE {
                        return j;
                    }
                    cols[k] = cols[hi];
                    cols[hi] = j;
                    hi += 1;
                }
            }
            k += 1;
        }
    }
    *plo = lo;
    *phi = hi;
    NONE
}

fn find_path<C: Costs>(c: &C, start_i: usize, y: &[usize], v: &mut [f64], pred: &mut [usize], d: &mut [f64], cols: &mut [usize]) -> usize {
    let n = c.size();
    for j in 0..n {
        cols[j] = j;
        pred[j] = start_i;
        d[j] = c.cost(start_i, j) - v[j];
    }
    let (mut lo, mut hi, mut n_ready) = (0usize, 0usize, 0usize);
    let mut final_j = NONE;
    while final_j == NONE {
        if lo == hi {
            n_ready = lo;
            hi = find(lo, d, cols);
            for &j in &cols[lo..hi] {
                if y[j] == NONE {
                    final_j = j;
                }
            }
        }
        if final_j == NONE {
            final_j = scan(c, &mut lo, &mut hi, d, cols, pred, y, v);
        }
    }
    let mind = d[cols[lo]];
    for &j in &cols[..n_ready] {
        v[j] += d[j] - mind;
    }
    final_j
}

fn augment<C: Costs>(c: &C, free_rows: &[usize], x: &mut [usize], y: &mut [usize], v: &mut [f64]) {
    let n = c.size();
    let mut pred = vec![0usize; n];
    let mut d = vec![0.0; n];
    let mut cols = vec![0usize; n];
    for &free_i in free_rows {
        let mut j = find_path(c, free_i, y, v, &mut pred, &mut d, &mut cols);
        loop {
            let i = pred[j];
            y[j] = i;
            std::mem::swap(&mut j, &mut x[i]);
            if i == free_i {
                break;
            }
        }
    }
}
