//! The four benchmark codes, their duals, and codeword enumeration.
//!
//! Codes are built from generator polynomials: BCH codes from minimal
//! polynomials over GF(2^5) and GF(2^7), quadratic-residue codes (including
//! the length-23 Golay code) from their idempotents. Every construction is
//! checked on the way out: the generator matrix must have rank `k`, and for
//! `n <= 47` the minimum distance is confirmed by full enumeration.

pub mod field;
pub mod poly;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gf2::{BinaryMatrix, BinaryVector};
use field::{BinaryField, PRIMITIVE_GF128, PRIMITIVE_GF32};
pub use poly::Gf2Poly;

/// Largest code dimension enumerated exhaustively.
pub const MAX_ENUMERATION_DIMENSION: usize = 24;

/// Minimum-weight dual codewords of the extended Golay code used as
/// representatives of its three cog families, in the order they are usually
/// quoted (the second one has the worst stopping-set profile).
pub const GOLAY24_REFERENCE_COGS: [&str; 3] = [
    "110101001100100000001000",
    "111000001001100000100001",
    "110100110000000101001000",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeName {
    Golay24,
    Bch31,
    Qr47,
    Bch127,
}

impl CodeName {
    pub const ALL: [CodeName; 4] = [
        CodeName::Golay24,
        CodeName::Bch31,
        CodeName::Qr47,
        CodeName::Bch127,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeName::Golay24 => "golay24",
            CodeName::Bch31 => "bch31",
            CodeName::Qr47 => "qr47",
            CodeName::Bch127 => "bch127",
        }
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodeName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCode(s.to_string()))
    }
}

/// How cyclic shifts act on the code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Structure {
    /// Cyclic code of length `n` generated by the polynomial.
    Cyclic { generator: Gf2Poly },
    /// A cyclic code of length `n - 1` plus an overall parity position `n - 1`.
    ExtendedCyclic { base_generator: Gf2Poly },
    /// Invariant under cyclic shifts of the first `cyclic_len` positions
    /// (e.g. the dual of an extended cyclic code).
    ShiftInvariant { cyclic_len: usize },
}

/// An `[n, k, d]` binary linear code with its generator and parity-check matrices.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    pub name: String,
    pub n: usize,
    pub k: usize,
    /// Minimum distance, when known (verified or declared).
    pub d: Option<usize>,
    /// Whether `d` was confirmed by enumeration.
    pub d_verified: bool,
    pub structure: Structure,
    generator: BinaryMatrix,
    parity_check: BinaryMatrix,
}

impl CodeSpec {
    /// Number of leading positions permuted by cyclic shifts.
    pub fn cyclic_len(&self) -> usize {
        match &self.structure {
            Structure::Cyclic { .. } => self.n,
            Structure::ExtendedCyclic { .. } => self.n - 1,
            Structure::ShiftInvariant { cyclic_len } => *cyclic_len,
        }
    }

    pub fn is_extended(&self) -> bool {
        self.cyclic_len() < self.n
    }

    /// `k x n` generator matrix (full rank).
    pub fn generator(&self) -> &BinaryMatrix {
        &self.generator
    }

    /// `(n-k) x n` parity-check matrix (full rank).
    pub fn parity_check(&self) -> &BinaryMatrix {
        &self.parity_check
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn contains(&self, word: &BinaryVector) -> bool {
        self.parity_check.is_codeword(word)
    }

    fn from_cyclic(name: &str, n: usize, g: Gf2Poly) -> Result<CodeSpec> {
        let xn = Gf2Poly::x_n_minus_1(n);
        let (h, r) = xn.div_rem(&g);
        if !r.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "generator {g:?} does not divide x^{n} - 1"
            )));
        }
        let deg_g = g.degree().unwrap_or(0);
        let k = n - deg_g;
        let generator = shift_matrix(&g, n, k);
        let parity_check = shift_matrix(&h.reciprocal(), n, deg_g);
        Ok(CodeSpec {
            name: name.to_string(),
            n,
            k,
            d: None,
            d_verified: false,
            structure: Structure::Cyclic { generator: g },
            generator,
            parity_check,
        })
    }

    fn extend(self, name: &str) -> CodeSpec {
        let Structure::Cyclic { generator: g } = self.structure else {
            panic!("only cyclic codes are extended");
        };
        let n = self.n + 1;
        let rows: Vec<BinaryVector> = self
            .generator
            .iter_rows()
            .map(|r| {
                let mut e = r.extended(1);
                if r.weight() % 2 == 1 {
                    e.set(n - 1, true);
                }
                e
            })
            .collect();
        let generator = BinaryMatrix::from_rows(&rows).expect("uniform rows");
        let parity_check = generator.null_space();
        CodeSpec {
            name: name.to_string(),
            n,
            k: self.k,
            d: None,
            d_verified: false,
            structure: Structure::ExtendedCyclic { base_generator: g },
            generator,
            parity_check,
        }
    }

    fn verify(mut self, declared_d: usize) -> Result<CodeSpec> {
        let rank = self.generator.rank();
        if rank != self.k {
            return Err(Error::RankDeficient {
                rank,
                expected: self.k,
            });
        }
        if self.parity_check.rank() != self.n - self.k {
            return Err(Error::RankDeficient {
                rank: self.parity_check.rank(),
                expected: self.n - self.k,
            });
        }
        if self.n <= 47 && self.k <= MAX_ENUMERATION_DIMENSION {
            let d = min_distance(&self.generator)?;
            if d != declared_d {
                return Err(Error::InvalidArgument(format!(
                    "{}: enumerated minimum distance {d}, expected {declared_d}",
                    self.name
                )));
            }
            self.d_verified = true;
        }
        self.d = Some(declared_d);
        Ok(self)
    }
}

/// `rows` consecutive shifts `x^j p(x)` as an `rows x n` matrix.
fn shift_matrix(p: &Gf2Poly, n: usize, rows: usize) -> BinaryMatrix {
    let exps = p.exponents();
    let vecs: Vec<BinaryVector> = (0..rows)
        .map(|j| BinaryVector::from_positions(n, exps.iter().map(|e| (e + j) % n)).unwrap())
        .collect();
    if vecs.is_empty() {
        return BinaryMatrix::zeros(0, n);
    }
    BinaryMatrix::from_rows(&vecs).expect("uniform rows")
}

/// Narrow-sense primitive BCH generator: product of the distinct minimal
/// polynomials of `alpha^1 .. alpha^(delta-1)`.
pub fn bch_generator(field: &BinaryField, designed_distance: usize) -> Gf2Poly {
    let mut seen = std::collections::BTreeSet::new();
    let mut g = Gf2Poly::one();
    for i in 1..designed_distance {
        let leader = field.cyclotomic_coset(i)[0];
        if seen.insert(leader) {
            g = g.mul(&field.minimal_polynomial(i));
        }
    }
    g
}

fn quadratic_residues(p: usize) -> Vec<usize> {
    let mut q: Vec<usize> = (1..p).map(|x| x * x % p).collect();
    q.sort_unstable();
    q.dedup();
    q
}

/// The two generator polynomials of degree `(p-1)/2` of the binary quadratic
/// residue codes of prime length `p = +-1 mod 8`, sorted by exponent list.
pub fn quadratic_residue_generators(p: usize) -> Vec<Gf2Poly> {
    assert!(p % 8 == 1 || p % 8 == 7, "binary QR codes need p = +-1 mod 8");
    let residues = quadratic_residues(p);
    let non_residues: Vec<usize> = (1..p).filter(|x| residues.binary_search(x).is_err()).collect();
    let xn = Gf2Poly::x_n_minus_1(p);
    let mut out = Vec::new();
    for set in [&residues, &non_residues] {
        for with_one in [false, true] {
            let mut e = Gf2Poly::from_exponents(set.iter().copied());
            if with_one {
                e = e.add(&Gf2Poly::one());
            }
            let g = e.gcd(&xn);
            if g.degree() == Some((p - 1) / 2) && !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out.sort_by_key(|g| g.exponents());
    out
}

/// Builds one of the four benchmark codes.
pub fn build_code(name: CodeName) -> Result<CodeSpec> {
    match name {
        CodeName::Golay24 => {
            let references: Vec<BinaryVector> = GOLAY24_REFERENCE_COGS
                .iter()
                .map(|s| s.parse().expect("static bit string"))
                .collect();
            for g in quadratic_residue_generators(23) {
                let code = CodeSpec::from_cyclic("golay23", 23, g)?.extend("golay24");
                if references.iter().all(|c| code.contains(c)) {
                    return code.verify(8);
                }
            }
            Err(Error::InvalidArgument(
                "no Golay generator contains the reference cogs".into(),
            ))
        }
        CodeName::Bch31 => {
            let field = BinaryField::new(5, PRIMITIVE_GF32);
            CodeSpec::from_cyclic("bch31", 31, bch_generator(&field, 7))?.verify(7)
        }
        CodeName::Qr47 => {
            let g = quadratic_residue_generators(47)
                .into_iter()
                .next()
                .expect("p = 47 is 7 mod 8");
            CodeSpec::from_cyclic("qr47", 47, g)?.verify(11)
        }
        CodeName::Bch127 => {
            let field = BinaryField::new(7, PRIMITIVE_GF128);
            CodeSpec::from_cyclic("bch127", 127, bch_generator(&field, 21))?.verify(21)
        }
    }
}

/// The dual code. Its minimum distance is filled in when its dimension is
/// small enough to enumerate.
pub fn dual(code: &CodeSpec) -> CodeSpec {
    let structure = match &code.structure {
        Structure::Cyclic { generator } => {
            let (h, _) = Gf2Poly::x_n_minus_1(code.n).div_rem(generator);
            Structure::Cyclic {
                generator: h.reciprocal(),
            }
        }
        _ => Structure::ShiftInvariant {
            cyclic_len: code.cyclic_len(),
        },
    };
    let k = code.n - code.k;
    let (d, d_verified) = if k <= MAX_ENUMERATION_DIMENSION && k > 0 {
        (min_distance(&code.parity_check).ok(), true)
    } else {
        (None, false)
    };
    CodeSpec {
        name: format!("{}-dual", code.name),
        n: code.n,
        k,
        d,
        d_verified,
        structure,
        generator: code.parity_check.clone(),
        parity_check: code.generator.clone(),
    }
}

fn rows_as_u128(m: &BinaryMatrix) -> Result<Vec<u128>> {
    if m.cols() > 128 {
        return Err(Error::Infeasible(format!(
            "enumeration supports n <= 128, got {}",
            m.cols()
        )));
    }
    Ok(m.iter_rows().map(|r| r.to_u128().expect("n <= 128")).collect())
}

/// Calls `f` on every codeword spanned by `rows` (Gray-code order, zero first).
fn for_each_codeword(rows: &[u128], mut f: impl FnMut(u128)) {
    let mut c = 0u128;
    f(c);
    let total: u64 = 1 << rows.len();
    for i in 1..total {
        c ^= rows[i.trailing_zeros() as usize];
        f(c);
    }
}

fn check_dimension(g: &BinaryMatrix) -> Result<()> {
    if g.rows() > MAX_ENUMERATION_DIMENSION {
        return Err(Error::Infeasible(format!(
            "dimension {} exceeds the enumeration limit {MAX_ENUMERATION_DIMENSION}",
            g.rows()
        )));
    }
    Ok(())
}

fn min_distance(g: &BinaryMatrix) -> Result<usize> {
    check_dimension(g)?;
    let rows = rows_as_u128(g)?;
    let mut best = usize::MAX;
    for_each_codeword(&rows, |c| {
        let w = c.count_ones() as usize;
        if w > 0 && w < best {
            best = w;
        }
    });
    Ok(best)
}

/// All codewords of Hamming weight exactly `w`, sorted lexicographically.
///
/// Fails with [`Error::Infeasible`] when the dimension exceeds
/// [`MAX_ENUMERATION_DIMENSION`].
pub fn min_weight_codewords(code: &CodeSpec, w: usize) -> Result<Vec<BinaryVector>> {
    check_dimension(&code.generator)?;
    let rows = rows_as_u128(&code.generator)?;
    let mut found = Vec::new();
    for_each_codeword(&rows, |c| {
        if c.count_ones() as usize == w {
            found.push(c);
        }
    });
    let mut out: Vec<BinaryVector> = found
        .into_iter()
        .map(|c| BinaryVector::from_u128(code.n, c))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Weight enumerator `{A_i}` of a code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightDistribution {
    counts: Vec<u64>,
}

impl WeightDistribution {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    /// Block length `n` (the distribution covers weights `0..=n`).
    pub fn n(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn count(&self, weight: usize) -> u64 {
        self.counts.get(weight).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn min_distance(&self) -> Option<usize> {
        (1..self.counts.len()).find(|&i| self.counts[i] > 0)
    }
}

/// Exact weight distribution by full enumeration (`k <= 24`).
pub fn weight_distribution(code: &CodeSpec) -> Result<WeightDistribution> {
    check_dimension(&code.generator)?;
    let rows = rows_as_u128(&code.generator)?;
    let mut counts = vec![0u64; code.n + 1];
    for_each_codeword(&rows, |c| counts[c.count_ones() as usize] += 1);
    Ok(WeightDistribution { counts })
}

/// Randomized information-set search for low-weight codewords.
///
/// Each round draws a random column order, reduces the generator to
/// systematic form on the resulting information set, and inspects every
/// single row and every pair of rows (Lee-Brickell with `p = 2`). Returns the
/// distinct codewords of weight at most `max_weight` that were found, sorted.
/// The result is a sample, not an exhaustive list.
pub fn search_low_weight_codewords<R: Rng>(
    code: &CodeSpec,
    max_weight: usize,
    rounds: usize,
    rng: &mut R,
) -> Vec<BinaryVector> {
    let n = code.n;
    let mut found = std::collections::BTreeSet::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..rounds {
        order.shuffle(rng);
        let permuted = code
            .generator
            .permute_columns(&order)
            .expect("shuffled identity is a permutation");
        let (reduced, _) = permuted.row_reduced();
        let rows: Vec<BinaryVector> = reduced.iter_rows().collect();
        let mut consider = |v: &BinaryVector| {
            if v.weight() <= max_weight && !v.is_zero() {
                let mut orig = BinaryVector::zeros(n);
                for j in v.iter_ones() {
                    orig.set(order[j], true);
                }
                found.insert(orig);
            }
        };
        for (i, a) in rows.iter().enumerate() {
            consider(a);
            for b in &rows[i + 1..] {
                consider(&a.xor(b));
            }
        }
    }
    found.into_iter().collect()
}

/// Parses a cog/codeword list: one `0/1` string per line; blank lines and
/// lines starting with `#` are skipped.
pub fn parse_word_list(text: &str, n: usize) -> Result<Vec<BinaryVector>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: BinaryVector = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            msg: "expected a string of 0/1 symbols".into(),
        })?;
        if v.len() != n {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("word has length {}, expected {n}", v.len()),
            });
        }
        out.push(v);
    }
    Ok(out)
}

pub fn format_word_list(words: &[BinaryVector]) -> String {
    words.iter().map(|w| format!("{w}\n")).collect()
}

/// Pregenerated minimum-weight-candidate cogs of the dual of the
/// `[127,64,21]` BCH code, found by [`search_low_weight_codewords`]. The list
/// is not exhaustive.
pub const BCH127_DUAL_COGS: &str = include_str!("../../data/bch127_dual_cogs.txt");

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cyclic_shift(v: &BinaryVector, n: usize) -> BinaryVector {
        let mut out = v.clone();
        for i in 0..n {
            out.set((i + 1) % n, v.get(i));
        }
        out
    }

    #[test]
    fn code_names_parse() {
        assert_eq!("qr47".parse::<CodeName>().unwrap(), CodeName::Qr47);
        assert!(matches!(
            "hamming7".parse::<CodeName>(),
            Err(Error::UnknownCode(_))
        ));
    }

    #[test]
    fn golay_parameters_and_self_duality() {
        let g = build_code(CodeName::Golay24).unwrap();
        assert_eq!((g.n, g.k, g.d), (24, 12, Some(8)));
        assert!(g.d_verified);
        let d = dual(&g);
        assert_eq!(d.k, 12);
        assert!(d.generator().same_row_space(g.generator()));
        for s in GOLAY24_REFERENCE_COGS {
            assert!(g.contains(&s.parse().unwrap()));
        }
    }

    #[test]
    fn bch31_parameters() {
        let c = build_code(CodeName::Bch31).unwrap();
        assert_eq!((c.n, c.k, c.d), (31, 16, Some(7)));
        let d = dual(&c);
        assert_eq!(d.k, 15);
        assert_eq!(d.generator().rank(), 15);
        assert_eq!(d.d, Some(8));
    }

    #[test]
    fn qr47_parameters() {
        let c = build_code(CodeName::Qr47).unwrap();
        assert_eq!((c.n, c.k, c.d), (47, 24, Some(11)));
        assert_eq!(dual(&c).d, Some(12));
        // both residue-set generators give distance-11 codes
        let gens = quadratic_residue_generators(47);
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[0].reciprocal(), gens[1]);
    }

    #[test]
    fn bch127_parameters() {
        let c = build_code(CodeName::Bch127).unwrap();
        assert_eq!((c.n, c.k), (127, 64));
        assert!(!c.d_verified);
        let d = dual(&c);
        assert_eq!(d.k, 63);
        assert!(matches!(min_weight_codewords(&d, 22), Err(Error::Infeasible(_))));
        assert!(matches!(weight_distribution(&c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn generator_orthogonal_to_parity_check() {
        for name in CodeName::ALL {
            let c = build_code(name).unwrap();
            for row in c.generator().iter_rows() {
                assert!(c.parity_check().syndrome(&row).unwrap().is_zero(), "{name}");
            }
        }
    }

    #[test]
    fn cyclic_shifts_stay_in_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in [CodeName::Bch31, CodeName::Qr47, CodeName::Bch127] {
            let c = build_code(name).unwrap();
            for _ in 0..10 {
                let u = BinaryVector::from_bits(
                    &(0..c.k).map(|_| rng.random_range(0..2u8)).collect::<Vec<_>>(),
                );
                let cw = c.generator().left_mul(&u).unwrap();
                assert!(c.contains(&cyclic_shift(&cw, c.n)));
            }
        }
    }

    #[test]
    fn golay_weight_distribution() {
        let wd = weight_distribution(&build_code(CodeName::Golay24).unwrap()).unwrap();
        let expected: Vec<(usize, u64)> = vec![(0, 1), (8, 759), (12, 2576), (16, 759), (24, 1)];
        for i in 0..=24 {
            let e = expected.iter().find(|(w, _)| *w == i).map_or(0, |x| x.1);
            assert_eq!(wd.count(i), e, "A_{i}");
            assert_eq!(wd.count(i), wd.count(24 - i));
        }
        assert_eq!(wd.total(), 1 << 12);
    }

    #[test]
    fn bch31_distribution_sums() {
        let wd = weight_distribution(&build_code(CodeName::Bch31).unwrap()).unwrap();
        assert_eq!(wd.total(), 1 << 16);
        assert_eq!(wd.count(0), 1);
        assert_eq!(wd.min_distance(), Some(7));
    }

    #[test]
    fn min_weight_words_zero_weight_and_sorted() {
        let g = build_code(CodeName::Golay24).unwrap();
        let zero = min_weight_codewords(&g, 0).unwrap();
        assert_eq!(zero, vec![BinaryVector::zeros(24)]);
        let w8 = min_weight_codewords(&dual(&g), 8).unwrap();
        assert_eq!(w8.len(), 759);
        assert!(w8.windows(2).all(|p| p[0] < p[1]));
        assert!(w8.iter().all(|w| w.weight() == 8 && g.contains(w)));
    }

    #[test]
    fn word_list_parsing() {
        let words = parse_word_list("# header\n1010\n\n0101\n", 4).unwrap();
        assert_eq!(words.len(), 2);
        assert!(parse_word_list("101\n", 4).is_err());
        assert_eq!(format_word_list(&words), "1010\n0101\n");
    }

    #[test]
    fn low_weight_search_finds_golay_octads() {
        let g = build_code(CodeName::Golay24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let words = search_low_weight_codewords(&g, 8, 20, &mut rng);
        assert!(!words.is_empty());
        assert!(words.iter().all(|w| w.weight() == 8 && g.contains(w)));
    }

    #[test]
    fn bch127_fixture_words_are_dual_codewords() {
        let c = build_code(CodeName::Bch127).unwrap();
        let d = dual(&c);
        let words = parse_word_list(BCH127_DUAL_COGS, 127).unwrap();
        assert!(words.len() >= 10);
        for w in &words {
            assert!(d.contains(w));
        }
    }
}
