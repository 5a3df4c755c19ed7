//! Sum-product belief propagation on a Tanner graph, flooding schedule.
//!
//! Messages are log-likelihood ratios `ln(P(0)/P(1))`, clipped to
//! `[-LLR_MAX, LLR_MAX]`. A decoder can export its per-variable extrinsic
//! beliefs as probabilities and accept replacements, which is how the
//! exchanging multi-basis decoders talk to each other.

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};

/// Message magnitude bound.
pub const LLR_MAX: f64 = 30.0;
/// Probabilities are clipped to `[PROB_EPS, 1 - PROB_EPS]`.
pub const PROB_EPS: f64 = 1e-12;

/// Edge lists of a parity-check matrix, grouped by check and by variable.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    m: usize,
    n: usize,
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    var_start: Vec<usize>,
    var_edge: Vec<usize>,
}

impl TannerGraph {
    pub fn from_matrix(h: &BinaryMatrix) -> Self {
        let (m, n) = (h.rows(), h.cols());
        let mut check_start = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for r in 0..m {
            edge_var.extend(h.row(r).iter_ones());
            check_start.push(edge_var.len());
        }
        let mut per_var: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, &v) in edge_var.iter().enumerate() {
            per_var[v].push(e);
        }
        let mut var_start = Vec::with_capacity(n + 1);
        let mut var_edge = Vec::with_capacity(edge_var.len());
        var_start.push(0);
        for list in per_var {
            var_edge.extend(list);
            var_start.push(var_edge.len());
        }
        Self {
            m,
            n,
            check_start,
            edge_var,
            var_start,
            var_edge,
        }
    }

    /// Number of check nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of variable nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_var.len()
    }

    /// Variables adjacent to check `c`.
    pub fn check_neighbors(&self, c: usize) -> &[usize] {
        &self.edge_var[self.check_start[c]..self.check_start[c + 1]]
    }

    pub fn variable_degree(&self, v: usize) -> usize {
        self.var_start[v + 1] - self.var_start[v]
    }

    pub fn syndrome_is_zero(&self, word: &BinaryVector) -> bool {
        (0..self.m).all(|c| {
            self.check_neighbors(c)
                .iter()
                .filter(|&&v| word.get(v))
                .count()
                % 2
                == 0
        })
    }
}

/// What happens to a decoder's edge messages when extrinsic values are injected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconciliation {
    /// Check-to-variable memory is cleared; the next variable update sends
    /// `intrinsic + injected` on every edge.
    #[default]
    ClearAndReseed,
    /// Check-to-variable memory is kept; the next variable update sends
    /// `intrinsic + injected - own incoming message` on each edge.
    RetainEdgeMemory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pending {
    /// Variable messages already set; use them as they are.
    Preset,
    /// Retained memory: subtract the edge's own check message from the injected total.
    Retained,
    Normal,
}

/// Message state of one BP decoder.
#[derive(Clone, Debug)]
pub struct DecoderState {
    intrinsic: Vec<f64>,
    extrinsic: Vec<f64>,
    injected: Vec<f64>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    hard: BinaryVector,
    converged: bool,
    iterations: usize,
    pending: Pending,
    policy: Reconciliation,
}

fn clip(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_MAX, LLR_MAX)
    }
}

impl DecoderState {
    /// Fresh state with zero extrinsic information.
    pub fn new(graph: &TannerGraph, intrinsic: &[f64], policy: Reconciliation) -> Result<Self> {
        if intrinsic.len() != graph.n {
            return Err(Error::DimensionMismatch {
                expected: graph.n,
                actual: intrinsic.len(),
            });
        }
        let intrinsic: Vec<f64> = intrinsic.iter().map(|&x| clip(x)).collect();
        let v2c = (0..graph.edge_count())
            .map(|e| intrinsic[graph.edge_var[e]])
            .collect();
        let hard = BinaryVector::from_positions(
            graph.n,
            (0..graph.n).filter(|&v| intrinsic[v] < 0.0),
        )
        .expect("in range");
        Ok(Self {
            extrinsic: vec![0.0; graph.n],
            injected: vec![0.0; graph.n],
            v2c,
            c2v: vec![0.0; graph.edge_count()],
            hard,
            converged: false,
            iterations: 0,
            pending: Pending::Preset,
            policy,
            intrinsic,
        })
    }

    pub fn intrinsic(&self) -> &[f64] {
        &self.intrinsic
    }

    /// Sum of incoming check messages per variable (after the last iteration).
    pub fn extrinsic(&self) -> &[f64] {
        &self.extrinsic
    }

    pub fn posterior(&self) -> Vec<f64> {
        self.intrinsic
            .iter()
            .zip(&self.extrinsic)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn hard_decision(&self) -> &BinaryVector {
        &self.hard
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations
    }

    pub fn policy(&self) -> Reconciliation {
        self.policy
    }

    /// Variable-to-check messages in check-major edge order.
    pub fn variable_to_check(&self) -> &[f64] {
        &self.v2c
    }

    /// Check-to-variable messages in check-major edge order.
    pub fn check_to_variable(&self) -> &[f64] {
        &self.c2v
    }
}

/// LLRs `2y/variance` for antipodal signaling `0 -> +1`, `1 -> -1`.
pub fn channel_llr(y: &[f64], noise_variance: f64) -> Result<Vec<f64>> {
    if !(noise_variance > 0.0) || !noise_variance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    Ok(y.iter().map(|&v| 2.0 * v / noise_variance).collect())
}

fn variable_update(state: &mut DecoderState, graph: &TannerGraph) {
    for v in 0..graph.n {
        let edges = &graph.var_edge[graph.var_start[v]..graph.var_start[v + 1]];
        match state.pending {
            Pending::Preset => {}
            Pending::Retained => {
                let total = state.intrinsic[v] + state.injected[v];
                for &e in edges {
                    state.v2c[e] = clip(total - state.c2v[e]);
                }
            }
            Pending::Normal => {
                let total = state.intrinsic[v] + edges.iter().map(|&e| state.c2v[e]).sum::<f64>();
                for &e in edges {
                    state.v2c[e] = clip(total - state.c2v[e]);
                }
            }
        }
    }
    state.pending = Pending::Normal;
}

fn check_update(state: &mut DecoderState, graph: &TannerGraph, scratch: &mut Vec<f64>) {
    for c in 0..graph.m {
        let (lo, hi) = (graph.check_start[c], graph.check_start[c + 1]);
        let deg = hi - lo;
        if deg == 0 {
            continue;
        }
        scratch.clear();
        scratch.extend(state.v2c[lo..hi].iter().map(|&x| (0.5 * x).tanh()));
        // suffix products into the output slots, then sweep forward with a running prefix
        let out = &mut state.c2v[lo..hi];
        let mut suffix = 1.0;
        for i in (0..deg).rev() {
            out[i] = suffix;
            suffix *= scratch[i];
        }
        let mut prefix = 1.0;
        for i in 0..deg {
            let p = prefix * out[i];
            out[i] = clip(2.0 * p.atanh());
            prefix *= scratch[i];
        }
    }
}

/// One flooding iteration: variable update, check update, extrinsic
/// aggregation, hard decision and syndrome check.
pub fn bp_iteration(state: &mut DecoderState, graph: &TannerGraph) {
    let mut scratch = Vec::new();
    variable_update(state, graph);
    check_update(state, graph, &mut scratch);
    let mut hard = BinaryVector::zeros(graph.n);
    for v in 0..graph.n {
        let ext: f64 = graph.var_edge[graph.var_start[v]..graph.var_start[v + 1]]
            .iter()
            .map(|&e| state.c2v[e])
            .sum();
        state.extrinsic[v] = ext;
        if state.intrinsic[v] + ext < 0.0 {
            hard.set(v, true);
        }
    }
    state.hard = hard;
    state.converged = graph.syndrome_is_zero(&state.hard);
    state.iterations += 1;
}

fn prob_to_llr(p0: f64) -> f64 {
    let p = if p0.is_nan() { 0.5 } else { p0.clamp(PROB_EPS, 1.0 - PROB_EPS) };
    (p / (1.0 - p)).ln()
}

/// `1 / (1 + e^-x)`, clipped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn llr_to_prob(llr: f64) -> f64 {
    let p = if llr >= 0.0 {
        1.0 / (1.0 + (-llr).exp())
    } else {
        let e = llr.exp();
        e / (1.0 + e)
    };
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Replaces the decoder's extrinsic beliefs with `p0` (probabilities that
/// each bit is zero).
pub fn inject_extrinsic(state: &mut DecoderState, graph: &TannerGraph, p0: &[f64]) -> Result<()> {
    let llr: Vec<f64> = p0.iter().map(|&p| prob_to_llr(p)).collect();
    inject_extrinsic_llr(state, graph, &llr)
}

/// As [`inject_extrinsic`], with the replacement given as LLRs (clipped to
/// the range representable by clipped probabilities).
pub fn inject_extrinsic_llr(state: &mut DecoderState, graph: &TannerGraph, llr: &[f64]) -> Result<()> {
    if llr.len() != graph.n {
        return Err(Error::DimensionMismatch {
            expected: graph.n,
            actual: llr.len(),
        });
    }
    let bound = prob_to_llr(1.0);
    for (slot, &x) in state.injected.iter_mut().zip(llr) {
        *slot = if x.is_nan() { 0.0 } else { x.clamp(-bound, bound) };
    }
    state.extrinsic.copy_from_slice(&state.injected);
    match state.policy {
        Reconciliation::ClearAndReseed => {
            state.c2v.iter_mut().for_each(|m| *m = 0.0);
            for (e, m) in state.v2c.iter_mut().enumerate() {
                let v = graph.edge_var[e];
                *m = clip(state.intrinsic[v] + state.injected[v]);
            }
            state.pending = Pending::Preset;
        }
        Reconciliation::RetainEdgeMemory => state.pending = Pending::Retained,
    }
    Ok(())
}

/// `P(c_v = 0)` implied by each variable's extrinsic LLR.
pub fn extrinsic_probabilities(state: &DecoderState) -> Vec<f64> {
    state.extrinsic.iter().map(|&x| llr_to_prob(x)).collect()
}

/// Plain BP: iterate until the syndrome vanishes or `max_iterations` pass.
pub fn decode(graph: &TannerGraph, llr: &[f64], max_iterations: usize) -> Result<DecoderState> {
    let mut state = DecoderState::new(graph, llr, Reconciliation::default())?;
    for _ in 0..max_iterations {
        bp_iteration(&mut state, graph);
        if state.converged {
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spc3() -> TannerGraph {
        TannerGraph::from_matrix(&"1 3\n111\n".parse().unwrap())
    }

    fn tree() -> (BinaryMatrix, TannerGraph) {
        let h: BinaryMatrix = "3 7\n1110000\n0011100\n0000111\n".parse().unwrap();
        let g = TannerGraph::from_matrix(&h);
        (h, g)
    }

    /// Exact bitwise posterior LLRs by summing over all codewords.
    fn brute_marginals(h: &BinaryMatrix, llr: &[f64]) -> Vec<f64> {
        let n = h.cols();
        let mut p0 = vec![0.0f64; n];
        let mut p1 = vec![0.0f64; n];
        for w in 0u32..(1 << n) {
            let word = BinaryVector::from_positions(n, (0..n).filter(|i| w >> i & 1 == 1)).unwrap();
            if !h.is_codeword(&word) {
                continue;
            }
            let logp: f64 = (0..n)
                .map(|i| if word.get(i) { -llr[i] / 2.0 } else { llr[i] / 2.0 })
                .sum();
            let p = logp.exp();
            for i in 0..n {
                if word.get(i) {
                    p1[i] += p;
                } else {
                    p0[i] += p;
                }
            }
        }
        (0..n).map(|i| (p0[i] / p1[i]).ln()).collect()
    }

    #[test]
    fn channel_llr_cases() {
        assert_eq!(channel_llr(&[0.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(channel_llr(&[0.5], 0.5).unwrap(), vec![2.0]);
        assert!(channel_llr(&[1.0], 0.0).is_err());
        assert!(channel_llr(&[1.0], -1.0).is_err());
    }

    #[test]
    fn first_iteration_sends_intrinsic() {
        let g = spc3();
        let s = DecoderState::new(&g, &[1.0, -2.0, 0.5], Reconciliation::default()).unwrap();
        assert_eq!(s.variable_to_check(), &[1.0, -2.0, 0.5]);
    }

    #[test]
    fn noiseless_converges_in_one_iteration() {
        let (_, g) = tree();
        let s = decode(&g, &[f64::INFINITY; 7], 10).unwrap();
        assert!(s.converged());
        assert_eq!(s.iterations_used(), 1);
        assert!(s.hard_decision().is_zero());
    }

    #[test]
    fn single_parity_check_marginals_exact() {
        let g = spc3();
        let h: BinaryMatrix = "1 3\n111\n".parse().unwrap();
        let llr = [0.7, -1.3, 2.1];
        let mut s = DecoderState::new(&g, &llr, Reconciliation::default()).unwrap();
        bp_iteration(&mut s, &g);
        let exact = brute_marginals(&h, &llr);
        for (a, b) in s.posterior().iter().zip(exact) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn tree_marginals_exact_after_diameter_iterations() {
        let (h, g) = tree();
        let llr = [0.3, -0.9, 1.4, 0.2, -0.4, 0.8, 1.1];
        let mut s = DecoderState::new(&g, &llr, Reconciliation::default()).unwrap();
        for _ in 0..4 {
            bp_iteration(&mut s, &g);
        }
        let exact = brute_marginals(&h, &llr);
        for (a, b) in s.posterior().iter().zip(exact) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn injection_round_trip_and_neutral_value() {
        let (_, g) = tree();
        let llr = [0.3, -0.9, 1.4, 0.2, -0.4, 0.8, 1.1];
        let mut s = DecoderState::new(&g, &llr, Reconciliation::default()).unwrap();
        bp_iteration(&mut s, &g);
        let p = extrinsic_probabilities(&s);
        let mut t = s.clone();
        inject_extrinsic(&mut t, &g, &p).unwrap();
        for (a, b) in extrinsic_probabilities(&t).iter().zip(&p) {
            assert!((a - b).abs() < 1e-12);
        }
        inject_extrinsic(&mut t, &g, &[0.5; 7]).unwrap();
        assert!(t.extrinsic().iter().all(|&x| x == 0.0));
        assert_eq!(t.variable_to_check(), DecoderState::new(&g, &llr, Reconciliation::default()).unwrap().variable_to_check());
        inject_extrinsic(&mut t, &g, &[1.0; 7]).unwrap();
        assert!(extrinsic_probabilities(&t).iter().all(|&p| (p - (1.0 - PROB_EPS)).abs() < 1e-15));
    }

    #[test]
    fn extrinsic_probability_values() {
        assert_eq!(llr_to_prob(0.0), 0.5);
        assert_eq!(llr_to_prob(1e6), 1.0 - PROB_EPS);
        assert!((llr_to_prob(1.5) - 1.0 / (1.0 + (-1.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn retained_memory_reinjection_is_transparent() {
        let h: BinaryMatrix = "4 7\n1101000\n0110100\n0011010\n0001101\n".parse().unwrap();
        let g = TannerGraph::from_matrix(&h);
        let llr = [0.3, -0.9, 1.4, 0.2, -0.4, 0.8, 1.1];
        let mut a = DecoderState::new(&g, &llr, Reconciliation::RetainEdgeMemory).unwrap();
        let mut b = a.clone();
        for i in 0..6 {
            bp_iteration(&mut a, &g);
            bp_iteration(&mut b, &g);
            if i % 2 == 1 {
                let e = b.extrinsic().to_vec();
                inject_extrinsic_llr(&mut b, &g, &e).unwrap();
            }
        }
        for (x, y) in a.posterior().iter().zip(b.posterior()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn sign_symmetry(llr in proptest::collection::vec(-8.0f64..8.0, 7)) {
            prop_assume!(llr.iter().all(|x| x.abs() > 1e-3));
            // even-weight checks: the all-one word is a codeword
            let h: BinaryMatrix = "3 7\n1111000\n0011110\n1100011\n".parse().unwrap();
            let g = TannerGraph::from_matrix(&h);
            let neg: Vec<f64> = llr.iter().map(|x| -x).collect();
            let mut a = DecoderState::new(&g, &llr, Reconciliation::default()).unwrap();
            let mut b = DecoderState::new(&g, &neg, Reconciliation::default()).unwrap();
            for _ in 0..5 {
                bp_iteration(&mut a, &g);
                bp_iteration(&mut b, &g);
                for (x, y) in a.check_to_variable().iter().zip(b.check_to_variable()) {
                    prop_assert!((x + y).abs() < 1e-9);
                }
                for (x, y) in a.posterior().iter().zip(b.posterior()) {
                    if x.abs() > 1e-9 {
                        prop_assert_eq!(*x < 0.0, y >= 0.0);
                    }
                }
            }
        }

        #[test]
        fn messages_stay_finite_and_bounded(llr in proptest::collection::vec(-1e3f64..1e3, 7)) {
            let h: BinaryMatrix = "4 7\n1101000\n0110100\n0011010\n0001101\n".parse().unwrap();
            let g = TannerGraph::from_matrix(&h);
            let mut s = DecoderState::new(&g, &llr, Reconciliation::default()).unwrap();
            for _ in 0..5 {
                bp_iteration(&mut s, &g);
                prop_assert!(s.check_to_variable().iter().chain(s.variable_to_check()).all(|x| x.is_finite() && x.abs() <= LLR_MAX));
                if s.converged() {
                    prop_assert!(h.is_codeword(s.hard_decision()));
                }
            }
        }
    }
}
