//! Rate-compatible puncturing: puncturing matrices, puncture/depuncture,
//! polyphase blocking of a `1/n` mother code into a `K/nK` code, and
//! equivalent punctured codes obtained by deleting blocked output columns.
//!
//! Serialization order is fixed everywhere: at time step `t` the mother
//! outputs `v_0..v_{n-1}` follow each other, and matrix entry
//! `(row = output index, col = t mod P_c)` gates transmission. Blocked output
//! columns are ordered `(phase p, output i) -> p * n + i`, which is the same
//! stream order, so one matrix entry maps to one blocked column.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convcode::{distance_spectrum, is_catastrophic, safe_len_cap, DistanceSpectrum, Encoder, GeneratorSpec, Poly};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// `n x P_c` binary deletion pattern (1 = transmit, 0 = delete).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct PuncturingMatrix {
    rows: Vec<Vec<u8>>,
}

impl PuncturingMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let period = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || period == 0 {
            return Err(Error::InvalidPuncturing("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != period) {
            return Err(Error::InvalidPuncturing("rows of unequal length".into()));
        }
        if rows.iter().flatten().any(|&e| e > 1) {
            return Err(Error::InvalidPuncturing("entries must be 0 or 1".into()));
        }
        if rows.iter().flatten().all(|&e| e == 0) {
            return Err(Error::InvalidPuncturing("no transmitted positions".into()));
        }
        Ok(Self { rows })
    }

    pub fn all_ones(n: usize, period: usize) -> Self {
        Self { rows: vec![vec![1; period]; n] }
    }

    /// Mother outputs per step.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Puncturing period `P_c`.
    pub fn period(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn keeps(&self, output: usize, time: usize) -> bool {
        self.rows[output][time % self.period()] == 1
    }

    /// Transmitted bits per period, `P_c + delta`.
    pub fn ones(&self) -> usize {
        self.rows.iter().flatten().filter(|&&e| e == 1).count()
    }

    /// `delta` in `P_c + delta` transmitted bits per period. A valid
    /// punctured rate needs `1 <= delta <= (n - 1) P_c`.
    pub fn delta(&self) -> isize {
        self.ones() as isize - self.period() as isize
    }

    /// True when every transmitted position of `self` is also transmitted by `other`.
    pub fn is_nested_in(&self, other: &PuncturingMatrix) -> bool {
        self.rows.len() == other.rows.len()
            && self.period() == other.period()
            && self.rows.iter().flatten().zip(other.rows.iter().flatten()).all(|(&a, &b)| a <= b)
    }
}

impl TryFrom<Vec<Vec<u8>>> for PuncturingMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<PuncturingMatrix> for Vec<Vec<u8>> {
    fn from(m: PuncturingMatrix) -> Self {
        m.rows
    }
}

impl fmt::Display for PuncturingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// Unreduced code rate `info/coded`, e.g. 2/4 stays 2/4.
#[derive(Debug, Clone, Copy, Eq, Serialize, Deserialize)]
pub struct CodeRate {
    pub info: u32,
    pub coded: u32,
}

impl CodeRate {
    pub fn value(self) -> f64 {
        self.info as f64 / self.coded as f64
    }

    /// False at rate one or above.
    pub fn has_redundancy(self) -> bool {
        self.coded > self.info
    }
}

impl PartialEq for CodeRate {
    fn eq(&self, other: &Self) -> bool {
        self.info as u64 * other.coded as u64 == other.info as u64 * self.coded as u64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.info, self.coded)
    }
}

/// `P_c` information bits per period over the transmitted count.
pub fn code_rate(matrix: &PuncturingMatrix) -> CodeRate {
    CodeRate { info: matrix.period() as u32, coded: matrix.ones() as u32 }
}

/// Keep gated bits in stream order. Input must hold whole periods.
pub fn puncture<T: Copy>(matrix: &PuncturingMatrix, codeword: &[T]) -> Result<Vec<T>> {
    let n = matrix.n();
    let frame = n * matrix.period();
    if !codeword.len().is_multiple_of(frame) {
        return Err(Error::LengthNotMultiple { len: codeword.len(), multiple: frame });
    }
    Ok(codeword
        .iter()
        .enumerate()
        .filter(|(idx, _)| matrix.keeps(idx % n, idx / n))
        .map(|(_, &v)| v)
        .collect())
}

/// Reinsert erasures (`None`) at deleted positions.
pub fn depuncture<T: Copy>(matrix: &PuncturingMatrix, survivors: &[T]) -> Result<Vec<Option<T>>> {
    let per = matrix.ones();
    if !survivors.len().is_multiple_of(per) {
        return Err(Error::LengthNotMultiple { len: survivors.len(), multiple: per });
    }
    let n = matrix.n();
    let total = survivors.len() / per * n * matrix.period();
    let mut it = survivors.iter();
    Ok((0..total)
        .map(|idx| if matrix.keeps(idx % n, idx / n) { it.next().copied() } else { None })
        .collect())
}

/// Split `poly` into `P_0..P_{K-1}` with `poly = sum_j D^j P_j(D^K)`.
pub fn polyphase_decompose(poly: Poly, k_block: usize) -> Vec<Poly> {
    assert!(k_block >= 1, "blocking factor must be positive");
    let deg = poly.degree().unwrap_or(0);
    (0..k_block)
        .map(|j| {
            let mut p = 0u64;
            let mut s = 0u32;
            while (s as usize) * k_block + j <= deg as usize {
                p |= (poly.coeff(s * k_block as u32 + j as u32) as u64) << s;
                s += 1;
            }
            Poly(p)
        })
        .collect()
}

/// Inverse of [`polyphase_decompose`].
pub fn polyphase_recompose(phases: &[Poly]) -> Poly {
    let k_block = phases.len() as u32;
    let mut out = 0u64;
    for (j, p) in phases.iter().enumerate() {
        let mut bits = p.0;
        let mut s = 0u32;
        while bits != 0 {
            if bits & 1 == 1 {
                out |= 1 << (s * k_block + j as u32);
            }
            bits >>= 1;
            s += 1;
        }
    }
    Poly(out)
}

/// `K`-times blocked generator of a `1/n` mother code.
///
/// `grid[r][p * n + i]` maps input phase `r` to output `i` at phase `p`:
/// `P_{i, p-r}` when `r <= p`, otherwise `D * P_{i, p-r+K}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockedGenerator {
    k_block: usize,
    mother_n: usize,
    /// `phases[i][j] = P_ij`.
    phases: Vec<Vec<Poly>>,
    grid: Vec<Vec<Poly>>,
}

impl BlockedGenerator {
    pub fn k_block(&self) -> usize {
        self.k_block
    }

    pub fn mother_n(&self) -> usize {
        self.mother_n
    }

    pub fn phase(&self, output: usize, j: usize) -> Poly {
        self.phases[output][j]
    }

    pub fn grid(&self) -> &[Vec<Poly>] {
        &self.grid
    }

    /// The blocked code as a `K/nK` generator.
    pub fn code(&self) -> Result<GeneratorSpec> {
        GeneratorSpec::new(self.grid.clone())
    }
}

pub fn blocked_generator(code: &GeneratorSpec, k_block: usize) -> Result<BlockedGenerator> {
    if code.k() != 1 {
        return Err(Error::InvalidGenerator(format!("blocking needs a 1/n mother, got k = {}", code.k())));
    }
    if k_block == 0 {
        return Err(Error::InvalidParameter("blocking factor must be positive".into()));
    }
    let n = code.n();
    let phases: Vec<Vec<Poly>> = (0..n).map(|i| polyphase_decompose(code.poly(0, i), k_block)).collect();
    for (i, ph) in phases.iter().enumerate() {
        debug_assert_eq!(polyphase_recompose(ph), code.poly(0, i));
    }
    let grid = (0..k_block)
        .map(|r| {
            (0..k_block * n)
                .map(|col| {
                    let (p, i) = (col / n, col % n);
                    if r <= p {
                        phases[i][p - r]
                    } else {
                        phases[i][p + k_block - r].shifted(1)
                    }
                })
                .collect()
        })
        .collect();
    Ok(BlockedGenerator { k_block, mother_n: n, phases, grid })
}

/// Delete the punctured blocked columns. Verifies the result against the
/// punctured mother stream but does not reject catastrophic codes.
pub fn delete_punctured_columns(blocked: &BlockedGenerator, matrix: &PuncturingMatrix) -> Result<GeneratorSpec> {
    let n = blocked.mother_n;
    let k = blocked.k_block;
    if matrix.n() != n || !k.is_multiple_of(matrix.period()) {
        return Err(Error::Dimension(format!(
            "{}x{} puncturing matrix against a {k}-times blocked rate 1/{n} code",
            matrix.n(),
            matrix.period()
        )));
    }
    let keep: Vec<usize> = (0..k * n).filter(|&col| matrix.keeps(col % n, col / n)).collect();
    if keep.len() <= k {
        return Err(Error::InvalidPuncturing(format!(
            "{} transmitted bits per {k} inputs leaves no redundancy",
            keep.len()
        )));
    }
    let grid: Vec<Vec<Poly>> = blocked.grid.iter().map(|row| keep.iter().map(|&c| row[c]).collect()).collect();
    let equivalent = GeneratorSpec::new(grid)?;
    let mother = mother_of(blocked)?;
    verify_equivalence(&mother, &equivalent, matrix, 256, 0x5eed_0001)?;
    Ok(equivalent)
}

/// Equivalent `K/(P_c + delta)` code of a punctured mother code.
pub fn punctured_equivalent(blocked: &BlockedGenerator, matrix: &PuncturingMatrix) -> Result<GeneratorSpec> {
    let code = delete_punctured_columns(blocked, matrix)?;
    if is_catastrophic(&code) {
        return Err(Error::Catastrophic);
    }
    Ok(code)
}

fn mother_of(blocked: &BlockedGenerator) -> Result<GeneratorSpec> {
    let polys: Vec<Poly> = blocked.phases.iter().map(|ph| polyphase_recompose(ph)).collect();
    GeneratorSpec::rate_one_over(&polys)
}

/// Check bit-exactly that `equivalent` encodes `blocks` random `K`-bit words
/// to `puncture(matrix, mother output)`. Neither encoder is flushed; the
/// comparison covers the full stream.
pub fn verify_equivalence(
    mother: &GeneratorSpec,
    equivalent: &GeneratorSpec,
    matrix: &PuncturingMatrix,
    blocks: usize,
    seed: u64,
) -> Result<()> {
    let k = equivalent.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..blocks * k).map(|_| rng.random_range(0..2u8)).collect();
    let reference = puncture(matrix, &Encoder::new(mother).push_all(&bits))?;
    let candidate = Encoder::new(equivalent).push_all(&bits);
    if let Some(pos) = reference.iter().zip(&candidate).position(|(a, b)| a != b) {
        return Err(Error::EquivalenceFailed(format!("first difference at coded bit {pos}")));
    }
    if reference.len() != candidate.len() {
        return Err(Error::EquivalenceFailed(format!(
            "length {} vs {}",
            reference.len(),
            candidate.len()
        )));
    }
    Ok(())
}

/// Mother code, blocking factor and puncturing matrices. Every member is
/// nested in each member of lower rate; members of equal rate are
/// alternatives and need not be nested in each other.
#[derive(Debug, Clone)]
pub struct RcpcFamily {
    mother: GeneratorSpec,
    blocked: BlockedGenerator,
    matrices: Vec<PuncturingMatrix>,
}

impl RcpcFamily {
    pub fn new(mother: GeneratorSpec, k_block: usize, matrices: Vec<PuncturingMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidParameter("family has no members".into()));
        }
        let blocked = blocked_generator(&mother, k_block)?;
        let period = matrices[0].period();
        for m in &matrices {
            if m.n() != mother.n() || m.period() != period {
                return Err(Error::Dimension(format!(
                    "matrix {m} does not match rate 1/{} mother with period {period}",
                    mother.n()
                )));
            }
        }
        for i in 0..matrices.len() {
            for j in 0..matrices.len() {
                if matrices[j].ones() < matrices[i].ones() && !matrices[j].is_nested_in(&matrices[i]) {
                    return Err(Error::NotRateCompatible(format!(
                        "member {j} {} transmits a bit that member {i} {} deletes",
                        matrices[j], matrices[i]
                    )));
                }
            }
        }
        Ok(Self { mother, blocked, matrices })
    }

    pub fn mother(&self) -> &GeneratorSpec {
        &self.mother
    }

    pub fn blocked(&self) -> &BlockedGenerator {
        &self.blocked
    }

    pub fn period(&self) -> usize {
        self.matrices[0].period()
    }

    pub fn members(&self) -> &[PuncturingMatrix] {
        &self.matrices
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn rate(&self, member: usize) -> CodeRate {
        code_rate(&self.matrices[member])
    }

    pub fn equivalent(&self, member: usize) -> Result<GeneratorSpec> {
        punctured_equivalent(&self.blocked, &self.matrices[member])
    }
}

/// One row of a spectrum table.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumRow {
    Spectrum { rate: CodeRate, spectrum: DistanceSpectrum },
    Catastrophic { rate: CodeRate },
}

/// Spectra of the equivalent codes for each candidate matrix; catastrophic
/// members are reported as such.
pub fn spectrum_table(
    mother: &GeneratorSpec,
    k_block: usize,
    matrices: &[PuncturingMatrix],
    d_max: u32,
    exec: Execution,
) -> Result<Vec<SpectrumRow>> {
    let blocked = blocked_generator(mother, k_block)?;
    exec.try_map_indexed(matrices.len(), |idx| {
        let matrix = &matrices[idx];
        let rate = code_rate(matrix);
        let code = delete_punctured_columns(&blocked, matrix)?;
        if is_catastrophic(&code) {
            return Ok(SpectrumRow::Catastrophic { rate });
        }
        let spectrum = distance_spectrum(&code, d_max, safe_len_cap(&code, d_max))?;
        Ok(SpectrumRow::Spectrum { rate, spectrum })
    })
}
