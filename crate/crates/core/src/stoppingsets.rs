//! Exact counting of small stopping sets and the BEC peeling decoder.
//!
//! A column subset `I` of `H` is a stopping set when no row of `H`
//! restricted to `I` has weight exactly one. The counter walks an
//! include/exclude tree: whenever some row meets the current set exactly
//! once, one of that row's remaining columns must join the set, so the search
//! branches only over those columns (choosing the row with the fewest). Row
//! states are kept as two bitmasks (rows hit at least once, rows hit exactly
//! once), which limits matrices to 128 rows and 128 columns.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::BinaryMatrix;

/// Result of a stopping-set count.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct StoppingSetReport {
    pub matrix_id: String,
    pub sigma_max: usize,
    /// `counts[s - 1]` is the number of stopping sets of size exactly `s`.
    pub counts: Vec<u64>,
    /// False when the node budget ran out; counts are then lower bounds.
    pub complete: bool,
    pub elapsed: f64,
}

impl StoppingSetReport {
    /// `|S_sigma|`; zero for sizes outside `1..=sigma_max`.
    pub fn count(&self, sigma: usize) -> u64 {
        if sigma == 0 {
            return 0;
        }
        self.counts.get(sigma - 1).copied().unwrap_or(0)
    }

    /// CSV with header `sigma,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, c));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct CountOptions {
    pub sigma_max: usize,
    /// Abort after visiting this many search nodes.
    pub node_budget: Option<u64>,
    /// Use cyclic shift symmetry when the matrix is invariant under it.
    pub use_symmetry: bool,
    pub parallel: bool,
    pub matrix_id: String,
}

impl CountOptions {
    pub fn new(sigma_max: usize) -> Self {
        Self {
            sigma_max,
            node_budget: None,
            use_symmetry: true,
            parallel: true,
            matrix_id: String::new(),
        }
    }
}

/// Counts stopping sets of every size `1..=sigma_max`.
pub fn count_stopping_sets(h: &BinaryMatrix, sigma_max: usize) -> Result<StoppingSetReport> {
    count_stopping_sets_with(h, &CountOptions::new(sigma_max))
}

pub fn count_stopping_sets_with(h: &BinaryMatrix, opts: &CountOptions) -> Result<StoppingSetReport> {
    let start = Instant::now();
    let n = h.cols();
    if n > 128 || h.rows() > 128 {
        return Err(Error::Infeasible(format!(
            "stopping-set search supports at most 128 rows and columns, got {}x{n}",
            h.rows()
        )));
    }
    if opts.sigma_max > n {
        return Err(Error::InvalidArgument(format!(
            "sigma_max {} exceeds n = {n}",
            opts.sigma_max
        )));
    }
    let search = Search::new(h, opts.sigma_max, opts.node_budget);
    let mut counts = vec![0u64; opts.sigma_max];
    if opts.sigma_max > 0 {
        let symmetric = opts.use_symmetry && n > 1 && is_shift_invariant(h);
        let roots: Vec<Node> = if symmetric {
            vec![search.root().child(0, 0, &search)]
        } else {
            let root = search.root();
            let free = search.free(&root);
            (0..n)
                .map(|c| root.child(c, free & ((1u128 << c) - 1), &search))
                .collect()
        };
        let frontier = search.expand_frontier(roots, &mut counts, 4 * rayon::current_num_threads().max(1) * 16);
        let partial: Vec<Vec<u64>> = if opts.parallel {
            frontier
                .par_iter()
                .map(|node| {
                    let mut c = vec![0u64; opts.sigma_max];
                    search.dfs(node, &mut c);
                    c
                })
                .collect()
        } else {
            frontier
                .iter()
                .map(|node| {
                    let mut c = vec![0u64; opts.sigma_max];
                    search.dfs(node, &mut c);
                    c
                })
                .collect()
        };
        for p in partial {
            for (a, b) in counts.iter_mut().zip(p) {
                *a += b;
            }
        }
        if symmetric {
            // every stopping set of size s contains s columns, each equivalent to column 0
            for (i, c) in counts.iter_mut().enumerate() {
                let s = (i + 1) as u64;
                let total = *c * n as u64;
                if !total.is_multiple_of(s) {
                    return Err(Error::Numerical(format!(
                        "symmetry reduction produced a non-integral count at size {s}"
                    )));
                }
                *c = total / s;
            }
        }
    }
    Ok(StoppingSetReport {
        matrix_id: opts.matrix_id.clone(),
        sigma_max: opts.sigma_max,
        counts,
        complete: !search.aborted.load(Ordering::Relaxed),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// True when shifting every row cyclically by one position yields the same
/// multiset of rows.
pub fn is_shift_invariant(h: &BinaryMatrix) -> bool {
    let n = h.cols();
    let mut rows: Vec<_> = h.iter_rows().collect();
    let mut shifted: Vec<_> = rows
        .iter()
        .map(|r| {
            let mut s = r.clone();
            for i in 0..n {
                s.set((i + 1) % n, r.get(i));
            }
            s
        })
        .collect();
    rows.sort();
    shifted.sort();
    rows == shifted
}

#[derive(Clone, Copy, Debug)]
struct Node {
    chosen: u128,
    excluded: u128,
    /// rows meeting the set at least once
    touched: u128,
    /// rows meeting the set exactly once
    deficient: u128,
    size: usize,
}

impl Node {
    fn child(&self, c: usize, newly_excluded: u128, search: &Search) -> Node {
        let r = search.col_rows[c];
        Node {
            chosen: self.chosen | (1u128 << c),
            excluded: self.excluded | newly_excluded,
            touched: self.touched | r,
            deficient: (self.deficient & !r) | (r & !self.touched),
            size: self.size + 1,
        }
    }
}

struct Search {
    all_cols: u128,
    col_rows: Vec<u128>,
    row_cols: Vec<u128>,
    sigma_max: usize,
    budget: Option<u64>,
    nodes: AtomicU64,
    aborted: AtomicBool,
}

fn low_mask(n: usize) -> u128 {
    if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

impl Search {
    fn new(h: &BinaryMatrix, sigma_max: usize, budget: Option<u64>) -> Self {
        let (m, n) = (h.rows(), h.cols());
        let mut col_rows = vec![0u128; n];
        let mut row_cols = vec![0u128; m];
        for r in 0..m {
            for c in 0..n {
                if h.get(r, c) {
                    col_rows[c] |= 1u128 << r;
                    row_cols[r] |= 1u128 << c;
                }
            }
        }
        Self {
            all_cols: low_mask(n),
            col_rows,
            row_cols,
            sigma_max,
            budget,
            nodes: AtomicU64::new(0),
            aborted: AtomicBool::new(false),
        }
    }

    fn root(&self) -> Node {
        Node {
            chosen: 0,
            excluded: 0,
            touched: 0,
            deficient: 0,
            size: 0,
        }
    }

    fn free(&self, node: &Node) -> u128 {
        self.all_cols & !node.chosen & !node.excluded
    }

    /// Columns that may join next, or `None` if the branch is dead.
    fn branch_mask(&self, node: &Node) -> Option<u128> {
        let free = self.free(node);
        if node.deficient == 0 {
            return Some(free);
        }
        let mut best = u128::MAX;
        let mut best_count = u32::MAX;
        let mut d = node.deficient;
        while d != 0 {
            let r = d.trailing_zeros() as usize;
            d &= d - 1;
            let cand = self.row_cols[r] & free;
            let cnt = cand.count_ones();
            if cnt == 0 {
                return None;
            }
            if cnt < best_count {
                best_count = cnt;
                best = cand;
                if cnt == 1 {
                    break;
                }
            }
        }
        Some(best)
    }

    /// Counts the node itself and, at depth `sigma_max - 1`, all one-column
    /// extensions. Returns true when the node's children still need visiting.
    fn visit(&self, node: &Node, counts: &mut [u64]) -> bool {
        if let Some(b) = self.budget {
            if self.nodes.fetch_add(1, Ordering::Relaxed) >= b {
                self.aborted.store(true, Ordering::Relaxed);
                return false;
            }
        }
        if node.deficient == 0 && node.size > 0 {
            counts[node.size - 1] += 1;
        }
        if node.size >= self.sigma_max {
            return false;
        }
        if node.size + 1 == self.sigma_max {
            let mut free = self.free(node);
            let mut extra = 0;
            while free != 0 {
                let c = free.trailing_zeros() as usize;
                free &= free - 1;
                let r = self.col_rows[c];
                if node.deficient & !r == 0 && r & !node.touched == 0 {
                    extra += 1;
                }
            }
            counts[self.sigma_max - 1] += extra;
            return false;
        }
        true
    }

    fn dfs(&self, node: &Node, counts: &mut [u64]) {
        if self.aborted.load(Ordering::Relaxed) || !self.visit(node, counts) {
            return;
        }
        let Some(mut cand) = self.branch_mask(node) else {
            return;
        };
        let mut tried = 0u128;
        while cand != 0 {
            let c = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            let child = node.child(c, tried, self);
            self.dfs(&child, counts);
            tried |= 1u128 << c;
        }
    }

    /// Breadth-first expansion until at least `target` independent subtrees exist.
    fn expand_frontier(&self, mut level: Vec<Node>, counts: &mut [u64], target: usize) -> Vec<Node> {
        let mut done = Vec::new();
        while !level.is_empty() && level.len() + done.len() < target {
            let mut next = Vec::new();
            for node in &level {
                if !self.visit(node, counts) {
                    continue;
                }
                let Some(mut cand) = self.branch_mask(node) else {
                    continue;
                };
                let mut tried = 0u128;
                while cand != 0 {
                    let c = cand.trailing_zeros() as usize;
                    cand &= cand - 1;
                    next.push(node.child(c, tried, self));
                    tried |= 1u128 << c;
                }
            }
            level = next;
            if level.iter().all(|n| n.size + 1 >= self.sigma_max) {
                break;
            }
        }
        done.extend(level);
        done
    }
}

/// Checks the definition directly: no row meets `set` exactly once.
pub fn is_stopping_set(h: &BinaryMatrix, set: &[usize]) -> bool {
    (0..h.rows()).all(|r| set.iter().filter(|&&c| h.get(r, c)).count() != 1)
}

/// Iterative erasure decoding: any row with exactly one erased position in
/// its support resolves that position. Returns the unresolved positions,
/// ascending; this is the largest stopping set contained in `erased`.
pub fn bec_peel(h: &BinaryMatrix, erased: &[usize]) -> Vec<usize> {
    let n = h.cols();
    let mut is_erased = vec![false; n];
    for &e in erased {
        if e < n {
            is_erased[e] = true;
        }
    }
    let supports: Vec<Vec<usize>> = (0..h.rows())
        .map(|r| (0..n).filter(|&c| h.get(r, c)).collect())
        .collect();
    loop {
        let mut progress = false;
        for s in &supports {
            let mut hit = None;
            let mut count = 0;
            for &c in s {
                if is_erased[c] {
                    count += 1;
                    hit = Some(c);
                    if count > 1 {
                        break;
                    }
                }
            }
            if count == 1 {
                is_erased[hit.unwrap()] = false;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    (0..n).filter(|&c| is_erased[c]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::BinaryVector;
    use proptest::prelude::*;

    fn naive_counts(h: &BinaryMatrix, sigma_max: usize) -> Vec<u64> {
        let n = h.cols();
        let mut counts = vec![0u64; sigma_max];
        for mask in 1u32..(1 << n) {
            let s = mask.count_ones() as usize;
            if s > sigma_max {
                continue;
            }
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if is_stopping_set(h, &set) {
                counts[s - 1] += 1;
            }
        }
        counts
    }

    fn circulant(first: &str) -> BinaryMatrix {
        let v: BinaryVector = first.parse().unwrap();
        let n = v.len();
        let rows: Vec<BinaryVector> = (0..n)
            .map(|j| BinaryVector::from_positions(n, v.iter_ones().map(|i| (i + j) % n)).unwrap())
            .collect();
        BinaryMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn zero_columns_are_singleton_stopping_sets() {
        let h: BinaryMatrix = "2 4\n1100\n0100\n".parse().unwrap();
        let r = count_stopping_sets(&h, 1).unwrap();
        assert_eq!(r.count(1), 2);
        assert!(r.complete);
    }

    #[test]
    fn hamming_circulant_matches_naive() {
        let h = circulant("1101000");
        assert!(is_shift_invariant(&h));
        let fast = count_stopping_sets(&h, 7).unwrap();
        assert_eq!(fast.counts, naive_counts(&h, 7));
        let mut opts = CountOptions::new(7);
        opts.use_symmetry = false;
        assert_eq!(count_stopping_sets_with(&h, &opts).unwrap().counts, fast.counts);
    }

    #[test]
    fn csv_output() {
        let h = circulant("1101000");
        let r = count_stopping_sets(&h, 2).unwrap();
        assert_eq!(r.to_csv(), "sigma,count\n1,0\n2,0\n");
    }

    #[test]
    fn budget_flags_partial_results() {
        let h = circulant("110100000000000");
        let mut opts = CountOptions::new(6);
        opts.node_budget = Some(5);
        let r = count_stopping_sets_with(&h, &opts).unwrap();
        assert!(!r.complete);
    }

    #[test]
    fn rejects_oversized_sigma() {
        let h = circulant("1101000");
        assert!(count_stopping_sets(&h, 8).is_err());
    }

    #[test]
    fn peeling_basics() {
        let h = circulant("1101000");
        assert!(bec_peel(&h, &[]).is_empty());
        assert!(bec_peel(&h, &[3]).is_empty());
        let all: Vec<usize> = (0..7).collect();
        assert_eq!(bec_peel(&h, &all), all);
    }

    fn random_matrix(m: usize, n: usize, bits: &[bool]) -> BinaryMatrix {
        let data: Vec<u8> = bits.iter().take(m * n).map(|&b| b as u8).collect();
        BinaryMatrix::from_dense(m, n, &data).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pruned_counter_matches_naive(
            m in 1usize..9, n in 1usize..13,
            bits in proptest::collection::vec(any::<bool>(), 120)
        ) {
            let h = random_matrix(m, n, &bits);
            let sigma = n.min(5);
            let fast = count_stopping_sets(&h, sigma).unwrap();
            prop_assert_eq!(fast.counts, naive_counts(&h, sigma));
        }

        #[test]
        fn peel_residual_is_a_stopping_set(
            m in 1usize..9, n in 1usize..13,
            bits in proptest::collection::vec(any::<bool>(), 120),
            mask in any::<u16>()
        ) {
            let h = random_matrix(m, n, &bits);
            let erased: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let res = bec_peel(&h, &erased);
            prop_assert!(res.iter().all(|c| erased.contains(c)));
            prop_assert!(is_stopping_set(&h, &res));
            if is_stopping_set(&h, &erased) {
                prop_assert_eq!(res, erased);
            }
        }

        #[test]
        fn counts_invariant_under_permutations(
            bits in proptest::collection::vec(any::<bool>(), 80),
            seed in any::<u64>()
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let h = random_matrix(8, 10, &bits);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..8).collect();
            let mut cp: Vec<usize> = (0..10).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let base = count_stopping_sets(&h, 5).unwrap().counts;
            let hr = h.permute_rows(&rp).unwrap();
            let hc = h.permute_columns(&cp).unwrap();
            prop_assert_eq!(&count_stopping_sets(&hr, 5).unwrap().counts, &base);
            prop_assert_eq!(&count_stopping_sets(&hc, 5).unwrap().counts, &base);
        }
    }
}
