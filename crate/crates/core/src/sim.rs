//! Channels, the maximum-likelihood reference decoder and the Monte Carlo
//! harness.
//!
//! Every frame draws its channel realization from a ChaCha8 stream keyed by
//! `(seed, snr index)` and positioned by the frame index, so results do not
//! depend on how frames are spread over worker threads. All decoders at a
//! given frame see the same noise.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::bounds::noise_variance;
use crate::bp::{channel_llr, decode, Reconciliation, TannerGraph};
use crate::codebook::{
    build_code, dual, min_weight_codewords, parse_word_list, weight_distribution, CodeName, CodeSpec,
    BCH127_DUAL_COGS, MAX_ENUMERATION_DIMENSION,
};
use crate::error::{Error, Result};
use crate::gf2::{systematic_generator, BinaryMatrix, BinaryVector, SystematicGenerator};
use crate::mbbp::{MbbpConfig, MbbpDecoder, Variant};
use crate::orbits::{build_parity_matrix, classify_families, default_sigma_max, partition_orbits, Cog, CogFamily};
use crate::stoppingsets::bec_peel;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelModel {
    /// Antipodal signaling `0 -> +1`, `1 -> -1` with Gaussian noise.
    Biawgn { snr_db: f64, rate: f64 },
    Bec { erasure_prob: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::Biawgn { snr_db, rate } => {
                if !snr_db.is_finite() || !(rate > 0.0 && rate <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "invalid BiAWGN parameters snr {snr_db} dB, rate {rate}"
                    )));
                }
            }
            ChannelModel::Bec { erasure_prob } => {
                if !(0.0..=1.0).contains(&erasure_prob) {
                    return Err(Error::InvalidArgument(format!(
                        "erasure probability {erasure_prob} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `1 / (2 R 10^(snr/10))`, floored at `1e-300`; `None` for the BEC.
    pub fn noise_variance(&self) -> Option<f64> {
        match *self {
            ChannelModel::Biawgn { snr_db, rate } => Some(noise_variance(rate, snr_db).max(1e-300)),
            ChannelModel::Bec { .. } => None,
        }
    }
}

/// `0 -> +1`, `1 -> -1`.
pub fn bpsk(c: &BinaryVector) -> Vec<f64> {
    (0..c.len()).map(|i| if c.get(i) { -1.0 } else { 1.0 }).collect()
}

pub fn transmit_biawgn<R: Rng>(c: &BinaryVector, variance: f64, rng: &mut R) -> Vec<f64> {
    let sigma = variance.max(0.0).sqrt();
    bpsk(c)
        .into_iter()
        .map(|x| {
            let z: f64 = rng.sample(StandardNormal);
            x + sigma * z
        })
        .collect()
}

/// Each symbol is erased (`None`) independently with probability `erasure_prob`.
pub fn transmit_bec<R: Rng>(c: &BinaryVector, erasure_prob: f64, rng: &mut R) -> Vec<Option<bool>> {
    (0..c.len())
        .map(|i| {
            if rng.random::<f64>() < erasure_prob {
                None
            } else {
                Some(c.get(i))
            }
        })
        .collect()
}

/// Exhaustive maximum-likelihood decoding over all `2^k` codewords.
#[derive(Clone, Debug)]
pub struct MlDecoder {
    n: usize,
    rows: Vec<u128>,
}

impl MlDecoder {
    pub fn new(code: &CodeSpec) -> Result<Self> {
        let g = code.generator();
        if g.rows() > MAX_ENUMERATION_DIMENSION {
            return Err(Error::Infeasible(format!(
                "ML decoding enumerates 2^{} codewords; the limit is 2^{MAX_ENUMERATION_DIMENSION}",
                g.rows()
            )));
        }
        if code.n > 128 {
            return Err(Error::Infeasible(format!("ML decoding supports n <= 128, got {}", code.n)));
        }
        Ok(Self {
            n: code.n,
            rows: g.iter_rows().map(|r| r.to_u128().expect("n <= 128")).collect(),
        })
    }

    /// Codeword closest to `y` in Euclidean distance; ties go to the
    /// lexicographically smallest word.
    pub fn decode(&self, y: &[f64]) -> Result<BinaryVector> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: y.len(),
            });
        }
        // distance is minimal where the sum of y over the word's support is
        let bytes = self.n.div_ceil(8);
        let mut table = vec![0.0f64; bytes * 256];
        for b in 0..bytes {
            let t = &mut table[b * 256..(b + 1) * 256];
            for pat in 1..256usize {
                let low = pat.trailing_zeros() as usize;
                let pos = 8 * b + low;
                let val = if pos < self.n { y[pos] } else { 0.0 };
                t[pat] = t[pat & (pat - 1)] + val;
            }
        }
        let metric = |c: u128| -> f64 {
            let mut s = 0.0;
            for b in 0..bytes {
                s += table[b * 256 + ((c >> (8 * b)) & 0xff) as usize];
            }
            s
        };
        let mut c = 0u128;
        let mut best = (0.0, 0u128);
        let total: u64 = 1 << self.rows.len();
        for i in 1..total {
            c ^= self.rows[i.trailing_zeros() as usize];
            let m = metric(c);
            if m < best.0 || (m == best.0 && c.reverse_bits() < best.1.reverse_bits()) {
                best = (m, c);
            }
        }
        Ok(BinaryVector::from_u128(self.n, best.1))
    }
}

pub fn ml_decode(code: &CodeSpec, y: &[f64]) -> Result<BinaryVector> {
    MlDecoder::new(code)?.decode(y)
}

/// The bases stacked into one matrix with duplicate rows removed.
pub fn stacked_matrix(bases: &[BinaryMatrix]) -> Result<BinaryMatrix> {
    let first = bases
        .first()
        .ok_or_else(|| Error::InvalidArgument("no bases to stack".into()))?;
    let mut h = first.clone();
    for b in &bases[1..] {
        h = h.vstack(b)?;
    }
    Ok(h.dedup_rows())
}

/// Plain BP on the stacked matrix.
pub fn stacked_matrix_decode(bases: &[BinaryMatrix], llr: &[f64], max_iterations: usize) -> Result<BinaryVector> {
    let g = TannerGraph::from_matrix(&stacked_matrix(bases)?);
    Ok(decode(&g, llr, max_iterations)?.hard_decision().clone())
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Failure probability of iterative erasure decoding on `h`, summed over
/// every erasure pattern (`n <= 20`).
pub fn bec_failure_probability(h: &BinaryMatrix, erasure_prob: f64) -> Result<f64> {
    let n = h.cols();
    if n > 20 {
        return Err(Error::Infeasible(format!("exhaustive erasure patterns need n <= 20, got {n}")));
    }
    let mut p = 0.0;
    for mask in 1u32..(1 << n) {
        let erased: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if !bec_peel(h, &erased).is_empty() {
            let e = erased.len() as i32;
            p += erasure_prob.powi(e) * (1.0 - erasure_prob).powi(n as i32 - e);
        }
    }
    Ok(p)
}

/// Number of frames, out of `frames`, on which peeling leaves erasures.
pub fn simulate_bec_failures(h: &BinaryMatrix, erasure_prob: f64, frames: u64, seed: u64) -> u64 {
    let zero = BinaryVector::zeros(h.cols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .filter(|_| {
            let rx = transmit_bec(&zero, erasure_prob, &mut rng);
            let erased: Vec<usize> = (0..rx.len()).filter(|&i| rx[i].is_none()).collect();
            !bec_peel(h, &erased).is_empty()
        })
        .count() as u64
}

/// Which decoder a campaign column runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    /// BP on the first basis only.
    Bp,
    /// BP on all `l` bases stacked.
    Stacked,
    Ml,
    Mbbp(Variant),
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Bp => "bp",
            DecoderKind::Stacked => "stacked",
            DecoderKind::Ml => "ml",
            DecoderKind::Mbbp(v) => v.as_str(),
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" => Ok(DecoderKind::Bp),
            "stacked" => Ok(DecoderKind::Stacked),
            "ml" => Ok(DecoderKind::Ml),
            _ => s.parse().map(DecoderKind::Mbbp),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmitMode {
    #[default]
    AllZero,
    RandomCodewords,
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

fn default_family() -> usize {
    1
}
fn default_max_frames() -> u64 {
    1_000_000
}
fn default_target() -> u64 {
    200
}
fn default_n() -> usize {
    100
}
fn default_np() -> usize {
    10
}

/// Campaign configuration, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub code: String,
    /// One or more of `bp`, `stacked`, `ml`, `nx-s`, `nx-fs`, `x-pa`, `x-hr`, `x-ic`.
    #[serde(deserialize_with = "one_or_many")]
    pub variant: Vec<String>,
    /// Number of bases; defaults per code.
    #[serde(default)]
    pub l: Option<usize>,
    /// 1-based family index, best signature first.
    #[serde(default = "default_family")]
    pub family: usize,
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default = "default_target")]
    pub target_frame_errors: u64,
    #[serde(rename = "N", default = "default_n")]
    pub max_iterations: usize,
    #[serde(rename = "N_p", default = "default_np")]
    pub exchange_period: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub transmit_mode: TransmitMode,
    #[serde(default)]
    pub reconciliation: Reconciliation,
    #[serde(default)]
    pub check_every_iteration: bool,
    /// Cog list (one word per line) used instead of the computed family.
    #[serde(default)]
    pub cogs_file: Option<String>,
}

impl CampaignConfig {
    pub fn new(code: CodeName, variants: &[&str], snr_grid_db: Vec<f64>, seed: u64) -> Self {
        Self {
            code: code.as_str().to_string(),
            variant: variants.iter().map(|s| s.to_string()).collect(),
            l: None,
            family: 1,
            snr_grid_db,
            max_frames: default_max_frames(),
            target_frame_errors: default_target(),
            max_iterations: default_n(),
            exchange_period: default_np(),
            seed: Some(seed),
            transmit_mode: TransmitMode::AllZero,
            reconciliation: Reconciliation::default(),
            check_every_iteration: false,
            cogs_file: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn code_name(&self) -> Result<CodeName> {
        self.code.parse()
    }

    pub fn decoder_kinds(&self) -> Result<Vec<DecoderKind>> {
        self.variant.iter().map(|v| v.parse()).collect()
    }

    pub fn effective_l(&self) -> Result<usize> {
        Ok(self.l.unwrap_or_else(|| default_l(self.code_name().unwrap_or(CodeName::Golay24))))
    }

    /// Rejects inconsistent settings before any frame is simulated.
    pub fn validate(&self) -> Result<()> {
        let name = self.code_name()?;
        let kinds = self.decoder_kinds()?;
        if kinds.is_empty() {
            return Err(Error::Config("no decoder variant given".into()));
        }
        if self.seed.is_none() {
            return Err(Error::Config("a seed is required".into()));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("the SNR grid must be a nonempty list of finite values".into()));
        }
        if self.max_frames == 0 || self.target_frame_errors == 0 {
            return Err(Error::Config("max_frames and target_frame_errors must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("N must be positive".into()));
        }
        if self.effective_l()? == 0 || self.family == 0 {
            return Err(Error::Config("l and family must be positive".into()));
        }
        let exchanging = kinds
            .iter()
            .any(|k| matches!(k, DecoderKind::Mbbp(v) if v.is_exchanging()));
        if exchanging && (self.exchange_period == 0 || self.exchange_period > self.max_iterations) {
            return Err(Error::Config(format!(
                "N_p = {} must lie in 1..=N = {}",
                self.exchange_period, self.max_iterations
            )));
        }
        if kinds.contains(&DecoderKind::Ml) && name == CodeName::Bch127 {
            return Err(Error::Config("ML decoding is infeasible for bch127".into()));
        }
        Ok(())
    }
}

/// Default number of bases per code.
pub fn default_l(code: CodeName) -> usize {
    match code {
        CodeName::Golay24 => 11,
        CodeName::Bch31 => 6,
        CodeName::Qr47 => 23,
        CodeName::Bch127 => 10,
    }
}

/// Cogs of minimum-weight dual codewords: by enumeration when the dual
/// dimension allows it, otherwise from the bundled list (`bch127`).
pub fn dual_cogs(code: &CodeSpec) -> Result<Vec<Cog>> {
    let d = dual(code);
    let nc = code.cyclic_len();
    if d.k <= MAX_ENUMERATION_DIMENSION {
        let w = weight_distribution(&d)?
            .min_distance()
            .ok_or_else(|| Error::Infeasible("dual code has no nonzero codeword".into()))?;
        let words = min_weight_codewords(&d, w)?;
        Ok(partition_orbits(&words, nc).cogs)
    } else if code.name == CodeName::Bch127.as_str() {
        let words = parse_word_list(BCH127_DUAL_COGS, code.n)?;
        Ok(words.iter().map(|w| Cog::from_word(w, nc)).collect())
    } else {
        Err(Error::Infeasible(format!("no cog source for {}", code.name)))
    }
}

/// Cog families of a code at its default signature depth.
pub fn code_families(code: &CodeSpec) -> Result<Vec<CogFamily>> {
    classify_families(&dual_cogs(code)?, code, default_sigma_max(code))
}

/// Parity-check matrices of the first `l` members of family `family` (1-based).
pub fn family_bases(code: &CodeSpec, family: usize, l: usize) -> Result<Vec<BinaryMatrix>> {
    let fams = code_families(code)?;
    let fam = fams.get(family.wrapping_sub(1)).ok_or_else(|| {
        Error::Config(format!("family {family} does not exist ({} families)", fams.len()))
    })?;
    if l > fam.len() {
        return Err(Error::Config(format!(
            "family {family} has {} members, {l} requested",
            fam.len()
        )));
    }
    fam.members[..l]
        .iter()
        .map(|c| build_parity_matrix(&c.word, code, None))
        .collect()
}

/// Parity-check matrices built from an explicit cog list, first `l` used.
pub fn bases_from_cogs(code: &CodeSpec, cogs: &[BinaryVector], l: usize) -> Result<Vec<BinaryMatrix>> {
    if l > cogs.len() {
        return Err(Error::Config(format!("{} cogs given, {l} requested", cogs.len())));
    }
    cogs[..l].iter().map(|c| build_parity_matrix(c, code, None)).collect()
}

#[derive(Clone, Debug)]
enum Engine {
    Bp(TannerGraph),
    Ml(MlDecoder),
    Mbbp(MbbpDecoder),
}

/// A decoder ready to run frames.
#[derive(Clone, Debug)]
pub struct FrameDecoder {
    pub kind: DecoderKind,
    pub l: usize,
    engine: Engine,
    max_iterations: usize,
}

impl FrameDecoder {
    pub fn new(kind: DecoderKind, code: &CodeSpec, bases: &[BinaryMatrix], config: &MbbpConfig) -> Result<Self> {
        let first = bases
            .first()
            .ok_or_else(|| Error::Config("at least one basis is required".into()))?;
        let (engine, l) = match kind {
            DecoderKind::Bp => (Engine::Bp(TannerGraph::from_matrix(first)), 1),
            DecoderKind::Stacked => (Engine::Bp(TannerGraph::from_matrix(&stacked_matrix(bases)?)), bases.len()),
            DecoderKind::Ml => (Engine::Ml(MlDecoder::new(code)?), 1),
            DecoderKind::Mbbp(v) => {
                let mut c = config.clone();
                c.variant = v;
                (Engine::Mbbp(MbbpDecoder::new(bases, c)?), bases.len())
            }
        };
        Ok(Self {
            kind,
            l,
            engine,
            max_iterations: config.max_iterations,
        })
    }

    /// Returns the estimate and the number of (parallel) iterations used.
    pub fn decode<R: Rng>(&self, y: &[f64], llr: &[f64], rng: &mut R) -> Result<(BinaryVector, usize)> {
        match &self.engine {
            Engine::Bp(g) => {
                let s = decode(g, llr, self.max_iterations)?;
                Ok((s.hard_decision().clone(), s.iterations_used()))
            }
            Engine::Ml(m) => Ok((m.decode(y)?, 0)),
            Engine::Mbbp(d) => {
                let o = d.decode(y, llr, rng)?;
                Ok((o.codeword_estimate, o.rounds))
            }
        }
    }
}

/// Per-decoder result of one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameOutcome {
    pub frame_error: bool,
    pub bit_errors_info: usize,
    pub bit_errors_code: usize,
    pub iterations: usize,
}

const STREAM_CHANNEL: u64 = 0;

fn frame_rng(seed: u64, snr_index: usize, tag: u64, frame: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(snr_index as u64).to_le_bytes());
    key[16..24].copy_from_slice(&tag.to_le_bytes());
    key[24..].copy_from_slice(b"mbbp-sim");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(frame);
    rng
}

/// A code, its encoder and a list of decoders, simulated frame by frame.
#[derive(Clone, Debug)]
pub struct Simulator {
    pub code: CodeSpec,
    pub encoder: SystematicGenerator,
    pub decoders: Vec<FrameDecoder>,
    pub seed: u64,
    pub transmit_mode: TransmitMode,
}

impl Simulator {
    pub fn new(code: CodeSpec, decoders: Vec<FrameDecoder>, seed: u64, transmit_mode: TransmitMode) -> Result<Self> {
        let encoder = systematic_generator(code.generator())?;
        Ok(Self {
            code,
            encoder,
            decoders,
            seed,
            transmit_mode,
        })
    }

    /// Transmitted codeword, information word and channel output of a frame.
    pub fn channel(&self, snr_index: usize, snr_db: f64, frame: u64) -> (BinaryVector, BinaryVector, Vec<f64>) {
        let mut rng = frame_rng(self.seed, snr_index, STREAM_CHANNEL, frame);
        let k = self.encoder.k();
        let (c, u) = match self.transmit_mode {
            TransmitMode::AllZero => (BinaryVector::zeros(self.code.n), BinaryVector::zeros(k)),
            TransmitMode::RandomCodewords => {
                let u = BinaryVector::from_positions(k, (0..k).filter(|_| rng.random::<bool>()))
                    .expect("in range");
                (self.encoder.encode(&u).expect("dimension k"), u)
            }
        };
        let ch = ChannelModel::Biawgn {
            snr_db,
            rate: self.code.rate(),
        };
        let var = ch.noise_variance().expect("gaussian channel");
        let y = transmit_biawgn(&c, var, &mut rng);
        (c, u, y)
    }

    /// Runs decoder `i` for every `active[i]` on one frame.
    pub fn frame(&self, snr_index: usize, snr_db: f64, frame: u64, active: &[bool]) -> Result<Vec<Option<FrameOutcome>>> {
        let (c, u, y) = self.channel(snr_index, snr_db, frame);
        let var = noise_variance(self.code.rate(), snr_db).max(1e-300);
        let llr = channel_llr(&y, var)?;
        self.decoders
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if !active.get(i).copied().unwrap_or(true) {
                    return Ok(None);
                }
                let mut rng = frame_rng(self.seed, snr_index, 1 + i as u64, frame);
                let (est, iterations) = d.decode(&y, &llr, &mut rng)?;
                let u_hat = self.encoder.extract_info(&est);
                Ok(Some(FrameOutcome {
                    frame_error: est != c,
                    bit_errors_info: u_hat.xor(&u).weight(),
                    bit_errors_code: est.xor(&c).weight(),
                    iterations,
                }))
            })
            .collect()
    }
}

/// One `(decoder, SNR)` point of a campaign.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimRecord {
    pub code: String,
    pub variant: String,
    pub l: usize,
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors_info: u64,
    pub bit_errors_code: u64,
    pub info_bits_per_frame: usize,
    pub avg_iterations: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Not part of the CSV row, which must be reproducible.
    pub wall_time: f64,
}

pub const CSV_HEADER: &str =
    "code,variant,l,snr_db,frames,frame_errors,bit_errors_info,bit_errors_code,ber_info,fer,ci_low,ci_high,avg_iter,max_iter,seed";

impl SimRecord {
    pub fn fer(&self) -> f64 {
        if self.frames == 0 {
            0.0
        } else {
            self.frame_errors as f64 / self.frames as f64
        }
    }

    pub fn ber_info(&self) -> f64 {
        let bits = self.frames * self.info_bits_per_frame as u64;
        if bits == 0 {
            0.0
        } else {
            self.bit_errors_info as f64 / bits as f64
        }
    }

    /// Wilson 95% interval of the FER.
    pub fn fer_interval(&self) -> (f64, f64) {
        wilson_interval(self.frame_errors, self.frames, Z95)
    }

    pub fn csv_row(&self) -> String {
        let (lo, hi) = self.fer_interval();
        format!(
            "{},{},{},{},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.4},{},{}",
            self.code,
            self.variant,
            self.l,
            self.snr_db,
            self.frames,
            self.frame_errors,
            self.bit_errors_info,
            self.bit_errors_code,
            self.ber_info(),
            self.fer(),
            lo,
            hi,
            self.avg_iterations,
            self.max_iterations,
            self.seed
        )
    }
}

pub fn records_to_csv(records: &[SimRecord]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

const CHUNK: u64 = 128;

#[derive(Clone, Debug, Default)]
struct Tally {
    frames: u64,
    frame_errors: u64,
    bit_errors_info: u64,
    bit_errors_code: u64,
    iterations: u64,
    max_iterations: usize,
}

impl Simulator {
    /// Simulates one SNR point. Each decoder stops after `target_frame_errors`
    /// errors or `max_frames` frames; frames are processed in fixed chunks and
    /// tallied in frame order, so the result is independent of thread count.
    pub fn run_point(&self, snr_index: usize, snr_db: f64, max_frames: u64, target_frame_errors: u64) -> Result<Vec<SimRecord>> {
        let start = Instant::now();
        let nd = self.decoders.len();
        let mut tallies = vec![Tally::default(); nd];
        let mut active = vec![true; nd];
        let mut next = 0u64;
        while next < max_frames && active.iter().any(|&a| a) {
            let end = (next + CHUNK).min(max_frames);
            let outcomes: Vec<Vec<Option<FrameOutcome>>> = (next..end)
                .into_par_iter()
                .map(|f| self.frame(snr_index, snr_db, f, &active))
                .collect::<Result<_>>()?;
            for frame in outcomes {
                for (i, o) in frame.into_iter().enumerate() {
                    let (Some(o), true) = (o, active[i]) else {
                        continue;
                    };
                    let t = &mut tallies[i];
                    t.frames += 1;
                    t.frame_errors += o.frame_error as u64;
                    t.bit_errors_info += o.bit_errors_info as u64;
                    t.bit_errors_code += o.bit_errors_code as u64;
                    t.iterations += o.iterations as u64;
                    t.max_iterations = t.max_iterations.max(o.iterations);
                    if t.frame_errors >= target_frame_errors {
                        active[i] = false;
                    }
                }
            }
            next = end;
        }
        let wall = start.elapsed().as_secs_f64();
        Ok(self
            .decoders
            .iter()
            .zip(tallies)
            .map(|(d, t)| SimRecord {
                code: self.code.name.clone(),
                variant: d.kind.as_str().to_string(),
                l: d.l,
                snr_db,
                frames: t.frames,
                frame_errors: t.frame_errors,
                bit_errors_info: t.bit_errors_info,
                bit_errors_code: t.bit_errors_code,
                info_bits_per_frame: self.encoder.k(),
                avg_iterations: if t.frames == 0 {
                    0.0
                } else {
                    t.iterations as f64 / t.frames as f64
                },
                max_iterations: t.max_iterations,
                seed: self.seed,
                wall_time: wall,
            })
            .collect())
    }
}

/// Builds the simulator described by a validated campaign configuration.
pub fn build_simulator(config: &CampaignConfig) -> Result<Simulator> {
    config.validate()?;
    let name = config.code_name()?;
    let code = build_code(name)?;
    let kinds = config.decoder_kinds()?;
    let needs_bases = kinds.iter().any(|k| *k != DecoderKind::Ml);
    let l = config.effective_l()?;
    let bases = if !needs_bases {
        vec![code.parity_check().clone()]
    } else if let Some(path) = &config.cogs_file {
        let text = std::fs::read_to_string(path)?;
        bases_from_cogs(&code, &parse_word_list(&text, code.n)?, l)?
    } else {
        family_bases(&code, config.family, l)?
    };
    let mut mc = MbbpConfig::new(Variant::NxS);
    mc.max_iterations = config.max_iterations;
    mc.exchange_period = config.exchange_period;
    mc.reconciliation = config.reconciliation;
    mc.check_every_iteration = config.check_every_iteration;
    let decoders = kinds
        .into_iter()
        .map(|k| FrameDecoder::new(k, &code, &bases, &mc))
        .collect::<Result<_>>()?;
    Simulator::new(code, decoders, config.seed.expect("validated"), config.transmit_mode)
}

/// Runs every SNR point of a campaign, handing each record to `sink` as soon
/// as its point finishes.
pub fn run_campaign_with(config: &CampaignConfig, mut sink: impl FnMut(&SimRecord) -> Result<()>) -> Result<Vec<SimRecord>> {
    let sim = build_simulator(config)?;
    let mut all = Vec::new();
    for (i, &snr) in config.snr_grid_db.iter().enumerate() {
        for r in sim.run_point(i, snr, config.max_frames, config.target_frame_errors)? {
            sink(&r)?;
            all.push(r);
        }
    }
    Ok(all)
}

pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<SimRecord>> {
    run_campaign_with(config, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::GOLAY24_REFERENCE_COGS;

    fn golay() -> CodeSpec {
        build_code(CodeName::Golay24).unwrap()
    }

    /// Independent ML oracle: information words in Gray order, direct distance.
    fn ml_oracle(code: &CodeSpec, y: &[f64]) -> BinaryVector {
        let sys = systematic_generator(code.generator()).unwrap();
        let k = sys.k();
        let mut best: Option<(f64, BinaryVector)> = None;
        for i in 0u64..(1 << k) {
            let gray = i ^ (i >> 1);
            let u = BinaryVector::from_positions(k, (0..k).filter(|b| gray >> b & 1 == 1)).unwrap();
            let c = sys.encode(&u).unwrap();
            let d: f64 = bpsk(&c).iter().zip(y).map(|(x, v)| (v - x) * (v - x)).sum();
            let better = match &best {
                None => true,
                Some((bd, bc)) => d < *bd || (d == *bd && c < *bc),
            };
            if better {
                best = Some((d, c));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn ml_matches_oracle_on_random_vectors() {
        let code = golay();
        let ml = MlDecoder::new(&code).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let y: Vec<f64> = (0..24).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            assert_eq!(ml.decode(&y).unwrap(), ml_oracle(&code, &y));
        }
    }

    #[test]
    fn ml_recovers_exact_images_and_breaks_ties() {
        let code = golay();
        let c = code.generator().row(3).xor(&code.generator().row(7));
        assert_eq!(ml_decode(&code, &bpsk(&c)).unwrap(), c);
        // y = 0 ties every codeword; the smallest is the zero word
        assert_eq!(ml_decode(&code, &[0.0; 24]).unwrap(), BinaryVector::zeros(24));
        assert!(ml_decode(&code, &[0.0; 5]).is_err());
        let big = build_code(CodeName::Bch127).unwrap();
        assert!(matches!(MlDecoder::new(&big), Err(Error::Infeasible(_))));
    }

    #[test]
    fn channel_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c: BinaryVector = "1010".parse().unwrap();
        let y = transmit_biawgn(&c, 1e-30, &mut rng);
        for (a, b) in y.iter().zip(bpsk(&c)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(transmit_bec(&c, 0.0, &mut rng).iter().all(|s| s.is_some()));
        assert!(transmit_bec(&c, 1.0, &mut rng).iter().all(|s| s.is_none()));
        assert!(ChannelModel::Bec { erasure_prob: 1.5 }.validate().is_err());
    }

    #[test]
    fn noise_variance_matches_model() {
        let ch = ChannelModel::Biawgn { snr_db: 2.0, rate: 0.5 };
        let var = ch.noise_variance().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let zero = BinaryVector::zeros(1000);
        let mut sum2 = 0.0;
        let mut count = 0.0;
        for _ in 0..1000 {
            for v in transmit_biawgn(&zero, var, &mut rng) {
                sum2 += (v - 1.0) * (v - 1.0);
                count += 1.0;
            }
        }
        assert!((sum2 / count / var - 1.0).abs() < 0.01);
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn stacked_single_basis_is_plain_bp() {
        let code = golay();
        let h = build_parity_matrix(&GOLAY24_REFERENCE_COGS[0].parse().unwrap(), &code, None).unwrap();
        let ch = ChannelModel::Biawgn { snr_db: 2.0, rate: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y = transmit_biawgn(&BinaryVector::zeros(24), ch.noise_variance().unwrap(), &mut rng);
            let llr = channel_llr(&y, ch.noise_variance().unwrap()).unwrap();
            let plain = decode(&TannerGraph::from_matrix(&h), &llr, 100).unwrap();
            let single = stacked_matrix_decode(std::slice::from_ref(&h), &llr, 100).unwrap();
            let doubled = stacked_matrix_decode(&[h.clone(), h.clone()], &llr, 100).unwrap();
            assert_eq!(&single, plain.hard_decision());
            assert_eq!(&doubled, plain.hard_decision());
        }
    }

    #[test]
    fn bec_predictor_matches_simulation() {
        let h: BinaryMatrix = "4 8\n11110000\n00111100\n11000011\n10101010\n".parse().unwrap();
        let eps = 0.3;
        let p = bec_failure_probability(&h, eps).unwrap();
        let frames = 20_000;
        let fails = simulate_bec_failures(&h, eps, frames, 11);
        let (lo, hi) = wilson_interval(fails, frames, 3.0);
        assert!(lo <= p && p <= hi, "{p} not in [{lo}, {hi}]");
    }

    #[test]
    fn config_parsing_and_validation() {
        let text = r#"{"code":"golay24","variant":"nx-s","snr_grid_db":[1,2],"seed":4,"N":50,"N_p":5}"#;
        let c = CampaignConfig::from_json(text).unwrap();
        assert_eq!(c.variant, vec!["nx-s"]);
        assert_eq!((c.max_iterations, c.exchange_period, c.family), (50, 5, 1));
        assert_eq!(c.effective_l().unwrap(), 11);
        c.validate().unwrap();
        let many = r#"{"code":"bch31","variant":["bp","x-pa"],"snr_grid_db":[1],"seed":1,"N":5,"N_p":6}"#;
        assert!(CampaignConfig::from_json(many).unwrap().validate().is_err());
        let unseeded = r#"{"code":"bch31","variant":"bp","snr_grid_db":[1]}"#;
        assert!(CampaignConfig::from_json(unseeded).unwrap().validate().is_err());
        assert!(CampaignConfig::from_json(r#"{"code":"bch31","variant":"bp","snr_grid_db":[1],"bogus":1}"#).is_err());
        let mut bad = CampaignConfig::new(CodeName::Golay24, &["nx-q"], vec![1.0], 1);
        assert!(bad.validate().is_err());
        bad.variant = vec!["ml".into()];
        bad.code = "bch127".into();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn noiseless_campaign_has_no_errors() {
        let mut c = CampaignConfig::new(CodeName::Golay24, &["bp", "nx-s", "x-ic", "ml"], vec![200.0], 7);
        c.max_frames = 50;
        c.transmit_mode = TransmitMode::RandomCodewords;
        let recs = run_campaign(&c).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            assert_eq!((r.frames, r.frame_errors, r.bit_errors_code), (50, 0, 0));
        }
        assert_eq!(recs[0].max_iterations, 1);
    }

    #[test]
    fn campaign_is_deterministic() {
        let mut c = CampaignConfig::new(CodeName::Golay24, &["bp", "nx-fs"], vec![1.0, 2.0], 99);
        c.max_frames = 300;
        c.target_frame_errors = 40;
        let a = records_to_csv(&run_campaign(&c).unwrap());
        let b = records_to_csv(&run_campaign(&c).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn stop_rule_counts_exactly_to_target() {
        let mut c = CampaignConfig::new(CodeName::Golay24, &["bp"], vec![-2.0], 3);
        c.target_frame_errors = 25;
        let r = &run_campaign(&c).unwrap()[0];
        assert_eq!(r.frame_errors, 25);
        assert!(r.frames < 1000);
    }
}
