//! Cyclic orbits of dual codewords, cog families, and parity-check matrices
//! of cyclic form.
//!
//! Permutations act on the cyclic part `0..n'` of a word; for extended codes
//! the trailing positions stay fixed.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::codebook::CodeSpec;
use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use crate::stoppingsets::{count_stopping_sets_with, CountOptions};

/// A position permutation: the output position `map[i]` carries input bit `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || std::mem::replace(&mut seen[m], true) {
                return Err(Error::InvalidPermutation(format!("{map:?} is not a bijection")));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// `i -> q*i + omega (mod cyclic_len)` on the first `cyclic_len`
    /// positions of a length-`n` word.
    pub fn affine(n: usize, cyclic_len: usize, q: usize, omega: usize) -> Result<Self> {
        if cyclic_len == 0 || cyclic_len > n {
            return Err(Error::InvalidArgument(format!(
                "cyclic length {cyclic_len} invalid for n = {n}"
            )));
        }
        if gcd(q % cyclic_len, cyclic_len) != 1 {
            return Err(Error::InvalidPermutation(format!(
                "multiplier {q} is not a unit modulo {cyclic_len}"
            )));
        }
        let map = (0..n)
            .map(|i| {
                if i < cyclic_len {
                    (q * i + omega) % cyclic_len
                } else {
                    i
                }
            })
            .collect();
        Ok(Self { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn apply(&self, v: &BinaryVector) -> Result<BinaryVector> {
        if v.len() != self.map.len() {
            return Err(Error::DimensionMismatch {
                expected: self.map.len(),
                actual: v.len(),
            });
        }
        Ok(BinaryVector::from_positions(v.len(), v.iter_ones().map(|i| self.map[i]))
            .expect("images are in range"))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { map: inv }
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `alpha^j`: `out[i] = v[(i - j) mod n']` on the cyclic part.
pub fn cyclic_shift(v: &BinaryVector, cyclic_len: usize, j: usize) -> BinaryVector {
    let n = v.len();
    BinaryVector::from_positions(
        n,
        v.iter_ones()
            .map(|i| if i < cyclic_len { (i + j) % cyclic_len } else { i }),
    )
    .expect("in range")
}

/// `beta`: the bit at position `i` moves to `2i mod n'`.
pub fn doubling_map(v: &BinaryVector, cyclic_len: usize) -> Result<BinaryVector> {
    if cyclic_len.is_multiple_of(2) {
        return Err(Error::InvalidPermutation(format!(
            "doubling is not a bijection modulo even length {cyclic_len}"
        )));
    }
    affine_apply(v, cyclic_len, 2, 0)
}

/// `theta: i -> q*i + omega mod n'` applied to positions.
pub fn affine_apply(v: &BinaryVector, cyclic_len: usize, q: usize, omega: usize) -> Result<BinaryVector> {
    Permutation::affine(v.len(), cyclic_len, q, omega)?.apply(v)
}

/// Multiplicative order of 2 modulo odd `n`.
pub fn order_of_two(n: usize) -> usize {
    assert!(n % 2 == 1 && n > 1);
    let mut x = 2 % n;
    let mut h = 1;
    while x != 1 {
        x = 2 * x % n;
        h += 1;
    }
    h
}

/// A cyclic orbit generator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cog {
    pub word: BinaryVector,
    pub period: usize,
}

impl Cog {
    /// The orbit representative of `word`: its lexicographically smallest shift.
    pub fn from_word(word: &BinaryVector, cyclic_len: usize) -> Cog {
        let mut best = word.clone();
        let mut period = cyclic_len;
        for j in 1..cyclic_len {
            let s = cyclic_shift(word, cyclic_len, j);
            if &s == word {
                period = period.min(j);
            }
            if s < best {
                best = s;
            }
        }
        Cog { word: best, period }
    }
}

/// Orbit representatives of a shift-closed word set.
#[derive(Clone, Debug)]
pub struct OrbitPartition {
    /// Full-period orbits, sorted by representative.
    pub cogs: Vec<Cog>,
    /// Orbits with period below `n'`; these are not used as cogs.
    pub excluded: Vec<Cog>,
}

pub fn partition_orbits(words: &[BinaryVector], cyclic_len: usize) -> OrbitPartition {
    let reps: BTreeSet<Cog> = words.iter().map(|w| Cog::from_word(w, cyclic_len)).collect();
    let (cogs, excluded) = reps.into_iter().partition(|c| c.period == cyclic_len);
    OrbitPartition { cogs, excluded }
}

/// Parity-check matrix of cyclic form.
///
/// For a cyclic code the `n` consecutive shifts of the cog; for an extended
/// cyclic code the `n'` shifts of the cyclic part (trailing bits copied) plus
/// a final row, the all-one word unless `last_row` overrides it. The result
/// must have rank `n - k`.
pub fn build_parity_matrix(
    cog: &BinaryVector,
    code: &CodeSpec,
    last_row: Option<&BinaryVector>,
) -> Result<BinaryMatrix> {
    if cog.len() != code.n {
        return Err(Error::DimensionMismatch {
            expected: code.n,
            actual: cog.len(),
        });
    }
    if !code.generator().is_codeword(cog) {
        return Err(Error::InvalidArgument(
            "cog is not a codeword of the dual code".into(),
        ));
    }
    let nc = code.cyclic_len();
    let mut rows: Vec<BinaryVector> = (0..nc).map(|j| cyclic_shift(cog, nc, j)).collect();
    if code.is_extended() {
        let extra = match last_row {
            Some(r) => {
                if r.len() != code.n {
                    return Err(Error::DimensionMismatch {
                        expected: code.n,
                        actual: r.len(),
                    });
                }
                if !code.generator().is_codeword(r) {
                    return Err(Error::InvalidArgument(
                        "override row is not a dual codeword".into(),
                    ));
                }
                r.clone()
            }
            None => BinaryVector::ones(code.n),
        };
        rows.push(extra);
    }
    let h = BinaryMatrix::from_rows(&rows)?;
    let rank = h.rank();
    if rank != code.n - code.k {
        return Err(Error::RankDeficient {
            rank,
            expected: code.n - code.k,
        });
    }
    Ok(h)
}

/// A set of cogs whose matrices share a stopping-set signature.
#[derive(Clone, Debug)]
pub struct CogFamily {
    /// 1-based, in ascending signature order.
    pub id: usize,
    pub members: Vec<Cog>,
    /// `|S_1| .. |S_sigma_max|`.
    pub signature: Vec<u64>,
}

impl CogFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Default signature depth per code length.
pub fn default_sigma_max(code: &CodeSpec) -> usize {
    match code.n {
        n if n <= 31 => code.d.unwrap_or(8).max(1).min(n),
        47 => 9,
        _ => 5,
    }
}

/// Canonical representative of the doubling-map class of an orbit.
pub fn beta_class(cog: &Cog, cyclic_len: usize) -> Cog {
    let mut best = cog.clone();
    let mut w = cog.word.clone();
    for _ in 1..order_of_two(cyclic_len) {
        w = doubling_map(&w, cyclic_len).expect("odd cyclic length");
        let c = Cog::from_word(&w, cyclic_len);
        if c < best {
            best = c;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct FamilyOptions {
    pub sigma_max: usize,
    /// Compute one signature per doubling-map class (matrices within a class
    /// differ by row and column permutations).
    pub use_beta_classes: bool,
    pub node_budget: Option<u64>,
}

impl FamilyOptions {
    pub fn new(sigma_max: usize) -> Self {
        Self {
            sigma_max,
            use_beta_classes: true,
            node_budget: None,
        }
    }
}

/// Stopping-set signature `|S_1| .. |S_sigma_max|` of the matrix built from `cog`.
pub fn signature(cog: &Cog, code: &CodeSpec, sigma_max: usize, budget: Option<u64>) -> Result<Vec<u64>> {
    let h = build_parity_matrix(&cog.word, code, None)?;
    let mut opts = CountOptions::new(sigma_max);
    opts.node_budget = budget;
    let r = count_stopping_sets_with(&h, &opts)?;
    if !r.complete {
        return Err(Error::Infeasible(format!(
            "stopping-set budget exhausted for cog {}",
            cog.word
        )));
    }
    Ok(r.counts)
}

/// Groups cogs into families of identical signature, best (smallest) first.
/// Cogs whose matrices lack full rank are dropped.
pub fn classify_families(cogs: &[Cog], code: &CodeSpec, sigma_max: usize) -> Result<Vec<CogFamily>> {
    classify_families_with(cogs, code, &FamilyOptions::new(sigma_max))
}

pub fn classify_families_with(cogs: &[Cog], code: &CodeSpec, opts: &FamilyOptions) -> Result<Vec<CogFamily>> {
    let nc = code.cyclic_len();
    let keys: Vec<Cog> = cogs
        .iter()
        .map(|c| {
            if opts.use_beta_classes && nc % 2 == 1 {
                beta_class(c, nc)
            } else {
                c.clone()
            }
        })
        .collect();
    let distinct: Vec<Cog> = keys.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let sigs: Vec<(Cog, Option<Vec<u64>>)> = distinct
        .into_par_iter()
        .map(|k| {
            let s = match signature(&k, code, opts.sigma_max, opts.node_budget) {
                Ok(s) => Ok(Some(s)),
                Err(Error::RankDeficient { .. }) => Ok(None),
                Err(e) => Err(e),
            };
            s.map(|s| (k, s))
        })
        .collect::<Result<_>>()?;
    let by_key: BTreeMap<Cog, Option<Vec<u64>>> = sigs.into_iter().collect();
    let mut groups: BTreeMap<Vec<u64>, Vec<Cog>> = BTreeMap::new();
    for (cog, key) in cogs.iter().zip(&keys) {
        if let Some(sig) = &by_key[key] {
            groups.entry(sig.clone()).or_default().push(cog.clone());
        }
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(i, (signature, mut members))| {
            members.sort();
            CogFamily {
                id: i + 1,
                members,
                signature,
            }
        })
        .collect())
}

/// Orbit representatives reached from the seeds by repeated doubling, in
/// discovery order without duplicates.
pub fn generate_family_members(seeds: &[BinaryVector], code: &CodeSpec) -> Result<Vec<Cog>> {
    let nc = code.cyclic_len();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for seed in seeds {
        if seed.len() != code.n {
            return Err(Error::DimensionMismatch {
                expected: code.n,
                actual: seed.len(),
            });
        }
        let mut w = seed.clone();
        for _ in 0..order_of_two(nc) {
            let c = Cog::from_word(&w, nc);
            if seen.insert(c.clone()) {
                out.push(c);
            }
            w = doubling_map(&w, nc)?;
        }
    }
    Ok(out)
}

/// CSV rows `family_id,cog_bits,S_1,..,S_sigma_max`, one per member.
pub fn families_to_csv(families: &[CogFamily]) -> String {
    let sigma_max = families.first().map_or(0, |f| f.signature.len());
    let mut out = String::from("family_id,cog_bits");
    for s in 1..=sigma_max {
        out.push_str(&format!(",S_{s}"));
    }
    out.push('\n');
    for f in families {
        let sig: String = f.signature.iter().map(|c| format!(",{c}")).collect();
        for m in &f.members {
            out.push_str(&format!("{},{}{}\n", f.id, m.word, sig));
        }
    }
    out
}
