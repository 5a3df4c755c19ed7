//! Multiple-bases belief propagation: `l` BP decoders on different
//! parity-check matrices of one code, combined at the end (NX variants) or
//! through periodic extrinsic exchange (X variants).

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bp::{bp_iteration, inject_extrinsic_llr, llr_to_prob, DecoderState, Reconciliation, TannerGraph};
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variant {
    #[serde(rename = "nx-s")]
    NxS,
    #[serde(rename = "nx-fs")]
    NxFs,
    #[serde(rename = "x-pa")]
    XPa,
    #[serde(rename = "x-hr")]
    XHr,
    #[serde(rename = "x-ic")]
    XIc,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::NxS, Variant::NxFs, Variant::XPa, Variant::XHr, Variant::XIc];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NxS => "nx-s",
            Variant::NxFs => "nx-fs",
            Variant::XPa => "x-pa",
            Variant::XHr => "x-hr",
            Variant::XIc => "x-ic",
        }
    }

    pub fn is_exchanging(self) -> bool {
        matches!(self, Variant::XPa | Variant::XHr | Variant::XIc)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown decoder variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MbbpConfig {
    pub variant: Variant,
    /// Maximum number of iterations `N`.
    pub max_iterations: usize,
    /// Exchange period `N_p` (X variants).
    pub exchange_period: usize,
    pub reconciliation: Reconciliation,
    /// X variants: test syndromes after every iteration instead of only at
    /// exchange points.
    pub check_every_iteration: bool,
}

impl MbbpConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            max_iterations: 100,
            exchange_period: 10,
            reconciliation: Reconciliation::default(),
            check_every_iteration: false,
        }
    }
}

/// How the final estimate was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    /// Least-metric selection among converged decoders.
    Lms,
    /// The only decoder that converged first.
    FirstSuccess,
    /// Uniform draw among several converged decoders.
    RandomTie,
    /// Nothing converged; chosen among all decoders.
    Fallback,
}

#[derive(Clone, Debug)]
pub struct MbbpOutcome {
    pub codeword_estimate: BinaryVector,
    /// Some decoder converged.
    pub valid: bool,
    pub winner: Option<usize>,
    /// Iterations run by each decoder.
    pub iterations: Vec<usize>,
    /// Parallel iteration rounds until the decoder stopped.
    pub rounds: usize,
    pub selected_by: Selection,
    /// Decoders that converged (in index order).
    pub converged: Vec<usize>,
}

/// Index of the candidate closest to `y` in squared Euclidean distance
/// (`0 -> +1`, `1 -> -1`); ties go to the lowest index.
pub fn least_metric_index(candidates: &[&BinaryVector], y: &[f64]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to select from".into()));
    }
    let mut best = 0;
    let mut best_metric = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        if c.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                actual: c.len(),
            });
        }
        let metric: f64 = y
            .iter()
            .enumerate()
            .map(|(v, &yv)| {
                let s = if c.get(v) { -1.0 } else { 1.0 };
                (yv - s) * (yv - s)
            })
            .sum();
        if metric < best_metric {
            best_metric = metric;
            best = i;
        }
    }
    Ok(best)
}

pub fn least_metric_select(candidates: &[BinaryVector], y: &[f64]) -> Result<BinaryVector> {
    let refs: Vec<&BinaryVector> = candidates.iter().collect();
    Ok(candidates[least_metric_index(&refs, y)?].clone())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Soft majority vote: per variable, the sum over decoders of
/// `ln(p0 / (1 - p0))`. `extrinsics[l][v]` is decoder `l`'s `P(c_v = 0)`.
pub fn majority_vote(extrinsics: &[Vec<f64>]) -> Vec<f64> {
    let n = extrinsics.first().map_or(0, Vec::len);
    (0..n)
        .map(|v| extrinsics.iter().map(|row| logit(row[v])).sum())
        .collect()
}

fn sign(x: f64) -> bool {
    x >= 0.0
}

/// Decoders whose belief agrees in sign with the vote; `sgn(0) = +1`.
pub fn active_set(extrinsics: &[Vec<f64>], vote: &[f64]) -> Vec<Vec<usize>> {
    vote.iter()
        .enumerate()
        .map(|(v, &s)| {
            (0..extrinsics.len())
                .filter(|&l| sign(logit(extrinsics[l][v])) == sign(s))
                .collect()
        })
        .collect()
}

/// Probability averaging over the active decoders.
pub fn combine_pa(extrinsics: &[Vec<f64>], active: &[Vec<usize>]) -> Vec<f64> {
    active
        .iter()
        .enumerate()
        .map(|(v, set)| set.iter().map(|&l| extrinsics[l][v]).sum::<f64>() / set.len() as f64)
        .collect()
}

/// The active decoder farthest from 0.5; ties go to the lowest index.
pub fn combine_hr(extrinsics: &[Vec<f64>], active: &[Vec<usize>]) -> Vec<f64> {
    active
        .iter()
        .enumerate()
        .map(|(v, set)| {
            let mut best = extrinsics[set[0]][v];
            for &l in &set[1..] {
                let p = extrinsics[l][v];
                if (p - 0.5).abs() > (best - 0.5).abs() {
                    best = p;
                }
            }
            best
        })
        .collect()
}

/// Information combining: normalized product of the active decoders' beliefs.
pub fn combine_ic(extrinsics: &[Vec<f64>], active: &[Vec<usize>]) -> Vec<f64> {
    active
        .iter()
        .enumerate()
        .map(|(v, set)| {
            let (mut a, mut b) = (1.0, 1.0);
            for &l in set {
                a *= extrinsics[l][v];
                b *= 1.0 - extrinsics[l][v];
            }
            a / (a + b)
        })
        .collect()
}

/// LLR-domain combination used inside the decoder; agrees with the
/// probability-domain rules but keeps full precision for reliable bits.
fn combine_llr(variant: Variant, llrs: &[&[f64]], out: &mut [f64]) {
    let l = llrs.len();
    for (v, slot) in out.iter_mut().enumerate() {
        let vote: f64 = llrs.iter().map(|row| row[v]).sum();
        let s = sign(vote);
        let active = (0..l).filter(|&d| sign(llrs[d][v]) == s);
        *slot = match variant {
            Variant::XPa => {
                let (mut p0, mut p1, mut cnt) = (0.0, 0.0, 0.0);
                for d in active {
                    let x = llrs[d][v];
                    p0 += sigmoid(x);
                    p1 += sigmoid(-x);
                    cnt += 1.0;
                }
                (p0 / cnt).ln() - (p1 / cnt).ln()
            }
            Variant::XHr => {
                let mut best: Option<f64> = None;
                for d in active {
                    let x = llrs[d][v];
                    if best.is_none_or(|b| x.abs() > b.abs()) {
                        best = Some(x);
                    }
                }
                best.unwrap_or(0.0)
            }
            Variant::XIc => active.map(|d| llrs[d][v]).sum(),
            Variant::NxS | Variant::NxFs => unreachable!("no exchange for NX variants"),
        };
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-decoder extrinsic `P(c_v = 0)` as an `l x n` matrix.
pub fn extrinsic_matrix(states: &[DecoderState]) -> Vec<Vec<f64>> {
    states
        .iter()
        .map(|s| s.extrinsic().iter().map(|&x| llr_to_prob(x)).collect())
        .collect()
}

/// A configured multi-basis decoder.
#[derive(Clone, Debug)]
pub struct MbbpDecoder {
    graphs: Vec<TannerGraph>,
    config: MbbpConfig,
}

impl MbbpDecoder {
    /// Checks that all bases share a row space and that the configuration is consistent.
    pub fn new(bases: &[BinaryMatrix], config: MbbpConfig) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::Config("at least one basis is required".into()))?;
        for b in &bases[1..] {
            if b.cols() != first.cols() {
                return Err(Error::DimensionMismatch {
                    expected: first.cols(),
                    actual: b.cols(),
                });
            }
            if !b.same_row_space(first) {
                return Err(Error::Config("bases define different codes".into()));
            }
        }
        if config.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if config.variant.is_exchanging()
            && (config.exchange_period == 0 || config.exchange_period > config.max_iterations)
        {
            return Err(Error::Config(format!(
                "exchange period {} must lie in 1..={}",
                config.exchange_period, config.max_iterations
            )));
        }
        Ok(Self {
            graphs: bases.iter().map(TannerGraph::from_matrix).collect(),
            config,
        })
    }

    pub fn l(&self) -> usize {
        self.graphs.len()
    }

    pub fn config(&self) -> &MbbpConfig {
        &self.config
    }

    pub fn graphs(&self) -> &[TannerGraph] {
        &self.graphs
    }

    /// Decodes a received vector given its channel LLRs.
    pub fn decode<R: Rng>(&self, y: &[f64], llr: &[f64], rng: &mut R) -> Result<MbbpOutcome> {
        if self.config.variant.is_exchanging() {
            run_x(self, y, llr, rng)
        } else {
            run_nx(self, y, llr, rng)
        }
    }
}

fn new_states(dec: &MbbpDecoder, llr: &[f64]) -> Result<Vec<DecoderState>> {
    dec.graphs
        .iter()
        .map(|g| DecoderState::new(g, llr, dec.config.reconciliation))
        .collect()
}

fn pick_random<R: Rng>(set: &[usize], rng: &mut R) -> usize {
    set[rng.random_range(0..set.len())]
}

/// Decoding without exchange (standard or first-success).
pub fn run_nx<R: Rng>(dec: &MbbpDecoder, y: &[f64], llr: &[f64], rng: &mut R) -> Result<MbbpOutcome> {
    let variant = dec.config.variant;
    if variant.is_exchanging() {
        return Err(Error::Config(format!("{variant} is not a non-exchanging variant")));
    }
    let l = dec.l();
    let mut states = new_states(dec, llr)?;
    let mut done = vec![false; l];
    let mut converged = Vec::new();
    let mut rounds = 0;
    while rounds < dec.config.max_iterations {
        rounds += 1;
        for (i, (s, g)) in states.iter_mut().zip(&dec.graphs).enumerate() {
            if !done[i] {
                bp_iteration(s, g);
                if s.converged() {
                    done[i] = true;
                    converged.push(i);
                }
            }
        }
        if (variant == Variant::NxFs && !converged.is_empty()) || converged.len() == l {
            break;
        }
    }
    converged.sort_unstable();
    let valid = !converged.is_empty();
    let pool: Vec<usize> = if valid { converged.clone() } else { (0..l).collect() };
    let (winner, selected_by) = match variant {
        Variant::NxS => {
            let cands: Vec<&BinaryVector> = pool.iter().map(|&i| states[i].hard_decision()).collect();
            let w = pool[least_metric_index(&cands, y)?];
            (w, if valid { Selection::Lms } else { Selection::Fallback })
        }
        _ => {
            let w = if pool.len() == 1 { pool[0] } else { pick_random(&pool, rng) };
            let how = match (valid, pool.len()) {
                (false, _) => Selection::Fallback,
                (true, 1) => Selection::FirstSuccess,
                _ => Selection::RandomTie,
            };
            (w, how)
        }
    };
    Ok(MbbpOutcome {
        codeword_estimate: states[winner].hard_decision().clone(),
        valid,
        winner: valid.then_some(winner),
        iterations: states.iter().map(DecoderState::iterations_used).collect(),
        rounds,
        selected_by,
        converged,
    })
}

/// Decoding with periodic exchange of extrinsic information.
pub fn run_x<R: Rng>(dec: &MbbpDecoder, _y: &[f64], llr: &[f64], rng: &mut R) -> Result<MbbpOutcome> {
    let variant = dec.config.variant;
    if !variant.is_exchanging() {
        return Err(Error::Config(format!("{variant} is not an exchanging variant")));
    }
    let l = dec.l();
    let n = llr.len();
    let mut states = new_states(dec, llr)?;
    let mut converged: Vec<usize> = Vec::new();
    let mut combined = vec![0.0; n];
    let mut i = 0;
    while i < dec.config.max_iterations && converged.is_empty() {
        i += 1;
        for (s, g) in states.iter_mut().zip(&dec.graphs) {
            bp_iteration(s, g);
        }
        let exchange = i % dec.config.exchange_period == 0;
        if exchange {
            let rows: Vec<&[f64]> = states.iter().map(DecoderState::extrinsic).collect();
            combine_llr(variant, &rows, &mut combined);
            for (s, g) in states.iter_mut().zip(&dec.graphs) {
                inject_extrinsic_llr(s, g, &combined)?;
            }
        }
        if exchange || dec.config.check_every_iteration {
            converged = (0..l).filter(|&d| states[d].converged()).collect();
        }
    }
    let valid = !converged.is_empty();
    let pool: Vec<usize> = if valid { converged.clone() } else { (0..l).collect() };
    let winner = if pool.len() == 1 { pool[0] } else { pick_random(&pool, rng) };
    let selected_by = match (valid, pool.len()) {
        (false, _) => Selection::Fallback,
        (true, 1) => Selection::FirstSuccess,
        _ => Selection::RandomTie,
    };
    Ok(MbbpOutcome {
        codeword_estimate: states[winner].hard_decision().clone(),
        valid,
        winner: valid.then_some(winner),
        iterations: vec![i; l],
        rounds: i,
        selected_by,
        converged,
    })
}
