//! Feedforward convolutional codes: generator description, trellis,
//! zero-tail encoding, soft-decision Viterbi decoding, exact distance
//! spectra and catastrophic-encoder detection.
//!
//! # Polynomial convention
//!
//! Octal generator strings are read most-significant bit first, and the most
//! significant bit is the tap on the *current* input. So `"7"` is
//! `1 + D + D^2`, `"13"` is `1 + D^2 + D^3`, and `"657"` (binary
//! `110101111`) is `1 + D + D^3 + D^5 + D^6 + D^7 + D^8`.
//! Internally a [`Poly`] stores the coefficient of `D^j` in bit `j`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary polynomial in `D`; bit `j` holds the coefficient of `D^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Poly(pub u64);

impl Poly {
    pub const ZERO: Poly = Poly(0);
    pub const ONE: Poly = Poly(1);

    /// Parse an octal string, most significant bit = current-input tap.
    pub fn from_octal(s: &str) -> Result<Poly> {
        let s = s.trim();
        let value = u64::from_str_radix(s, 8)
            .map_err(|_| Error::InvalidGenerator(format!("'{s}' is not an octal number")))?;
        if value == 0 {
            return Ok(Poly::ZERO);
        }
        let width = 64 - value.leading_zeros();
        if width > 63 {
            return Err(Error::InvalidGenerator(format!("'{s}' is too long")));
        }
        Ok(Poly(reverse_bits(value, width)))
    }

    /// Octal rendering in the same convention as [`Poly::from_octal`].
    pub fn to_octal(self) -> String {
        match self.degree() {
            None => "0".to_string(),
            Some(deg) => format!("{:o}", reverse_bits(self.0, deg + 1)),
        }
    }

    pub fn from_coeffs(coeffs: &[u8]) -> Poly {
        Poly(
            coeffs
                .iter()
                .enumerate()
                .filter(|(_, &c)| c & 1 == 1)
                .fold(0, |acc, (j, _)| acc | (1 << j)),
        )
    }

    pub fn degree(self) -> Option<u32> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros())
    }

    pub fn coeff(self, j: u32) -> u8 {
        ((self.0 >> j) & 1) as u8
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Multiply by `D^s`.
    pub fn shifted(self, s: u32) -> Poly {
        Poly(self.0 << s)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for j in 0..64 {
            if self.coeff(j) == 1 {
                if !first {
                    write!(f, "+")?;
                }
                first = false;
                match j {
                    0 => write!(f, "1")?,
                    1 => write!(f, "D")?,
                    _ => write!(f, "D^{j}")?,
                }
            }
        }
        Ok(())
    }
}

fn reverse_bits(value: u64, width: u32) -> u64 {
    (0..width).fold(0, |acc, i| acc | (((value >> i) & 1) << (width - 1 - i)))
}

/// A `k`-input, `n`-output feedforward convolutional code.
///
/// `polys[j][i]` is the transfer polynomial from input `j` to output `i`.
/// Input `j` owns a shift register of `row_memory[j]` cells (the largest
/// degree in row `j`); the code memory is the sum over rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    k: usize,
    n: usize,
    polys: Vec<Vec<Poly>>,
    row_memory: Vec<u32>,
}

impl GeneratorSpec {
    pub fn new(polys: Vec<Vec<Poly>>) -> Result<Self> {
        let k = polys.len();
        if k == 0 {
            return Err(Error::InvalidGenerator("no input rows".into()));
        }
        let n = polys[0].len();
        if polys.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidGenerator("ragged generator matrix".into()));
        }
        if k >= n {
            return Err(Error::InvalidGenerator(format!("rate {k}/{n} is not below one")));
        }
        for i in 0..n {
            if polys.iter().all(|row| row[i].is_zero()) {
                return Err(Error::InvalidGenerator(format!("output {i} has no taps")));
            }
        }
        let row_memory: Vec<u32> = polys
            .iter()
            .map(|row| row.iter().filter_map(|p| p.degree()).max().unwrap_or(0))
            .collect();
        if row_memory.iter().sum::<u32>() > 24 {
            return Err(Error::InvalidGenerator("memory above 24 cells".into()));
        }
        Ok(Self { k, n, polys, row_memory })
    }

    /// Rate `1/n` code from polynomials.
    pub fn rate_one_over(polys: &[Poly]) -> Result<Self> {
        Self::new(vec![polys.to_vec()])
    }

    /// Rate `1/n` code from octal strings, e.g. `["5", "7"]`.
    pub fn from_octal<S: AsRef<str>>(octal: &[S]) -> Result<Self> {
        let polys = octal
            .iter()
            .map(|s| Poly::from_octal(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::rate_one_over(&polys)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polys(&self) -> &[Vec<Poly>] {
        &self.polys
    }

    pub fn poly(&self, input: usize, output: usize) -> Poly {
        self.polys[input][output]
    }

    pub fn row_memory(&self) -> &[u32] {
        &self.row_memory
    }

    /// Total shift-register cells.
    pub fn memory(&self) -> u32 {
        self.row_memory.iter().sum()
    }

    /// Zero input words needed to return any state to zero.
    pub fn flush_steps(&self) -> usize {
        self.row_memory.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Octal strings for a rate `1/n` code, `None` otherwise.
    pub fn octal(&self) -> Option<Vec<String>> {
        (self.k == 1).then(|| self.polys[0].iter().map(|p| p.to_octal()).collect())
    }

    /// Encoded length (bits) of `info_len` information bits with zero tail.
    pub fn encoded_len(&self, info_len: usize) -> usize {
        self.n * (info_len / self.k + self.flush_steps())
    }

    pub fn trellis(&self) -> Trellis {
        Trellis::new(self)
    }
}

/// Fully tabulated state machine of a [`GeneratorSpec`].
///
/// Input words pack input `j` in bit `j`; output words pack output `i` in
/// bit `i`.
#[derive(Debug, Clone)]
pub struct Trellis {
    k: usize,
    n: usize,
    num_states: usize,
    next: Vec<u32>,
    output: Vec<u32>,
}

impl Trellis {
    pub fn new(code: &GeneratorSpec) -> Self {
        let num_states = code.num_states();
        let words = 1usize << code.k;
        let mut offsets = Vec::with_capacity(code.k);
        let mut off = 0;
        for &m in &code.row_memory {
            offsets.push(off);
            off += m;
        }
        let mut next = vec![0; num_states * words];
        let mut output = vec![0; num_states * words];
        for state in 0..num_states as u32 {
            for word in 0..words as u32 {
                let mut ns = 0u32;
                let mut out = 0u32;
                for (j, row) in code.polys.iter().enumerate() {
                    let m = code.row_memory[j];
                    let mask = (1u64 << m) - 1;
                    let reg = ((((state >> offsets[j]) as u64) & mask) << 1) | ((word >> j) & 1) as u64;
                    for (i, p) in row.iter().enumerate() {
                        out ^= ((reg & p.0).count_ones() & 1) << i;
                    }
                    ns |= ((reg & mask) as u32) << offsets[j];
                }
                let idx = state as usize * words + word as usize;
                next[idx] = ns;
                output[idx] = out;
            }
        }
        Self { k: code.k, n: code.n, num_states, next, output }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_inputs(&self) -> usize {
        1 << self.k
    }

    /// `(next state, output word)` for `state` driven by input `word`.
    #[inline]
    pub fn step(&self, state: u32, word: u32) -> (u32, u32) {
        let idx = state as usize * self.num_inputs() + word as usize;
        (self.next[idx], self.output[idx])
    }
}

/// Streaming encoder without termination; used for bit-exact comparisons
/// between equivalent encoders.
#[derive(Debug, Clone)]
pub struct Encoder {
    trellis: Trellis,
    state: u32,
}

impl Encoder {
    pub fn new(code: &GeneratorSpec) -> Self {
        Self { trellis: code.trellis(), state: 0 }
    }

    /// Push one input word (`k` bits, input `j` at index `j`), returning `n` bits.
    pub fn push(&mut self, bits: &[u8], out: &mut Vec<u8>) {
        let word = bits.iter().enumerate().fold(0u32, |w, (j, &b)| w | (((b & 1) as u32) << j));
        let (ns, o) = self.trellis.step(self.state, word);
        self.state = ns;
        out.extend((0..self.trellis.n).map(|i| ((o >> i) & 1) as u8));
    }

    /// Encode a whole multiple-of-`k` sequence without flushing.
    pub fn push_all(&mut self, bits: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(bits.len() / self.trellis.k * self.trellis.n);
        for chunk in bits.chunks(self.trellis.k) {
            self.push(chunk, &mut out);
        }
        out
    }

    pub fn state(&self) -> u32 {
        self.state
    }
}

/// Zero-tail encoding: the encoder starts in state zero and `flush_steps`
/// all-zero input words are appended.
pub fn encode(code: &GeneratorSpec, bits: &[u8]) -> Result<Vec<u8>> {
    if !bits.len().is_multiple_of(code.k) {
        return Err(Error::LengthNotMultiple { len: bits.len(), multiple: code.k });
    }
    let mut enc = Encoder::new(code);
    let mut out = enc.push_all(bits);
    let zeros = vec![0u8; code.k];
    for _ in 0..code.flush_steps() {
        enc.push(&zeros, &mut out);
    }
    Ok(out)
}

/// Per-coded-bit soft value; positive favours bit 0. `None` is an erasure.
pub type SoftBit = Option<f64>;

/// Noise-free soft values for a codeword: bit 0 -> +1, bit 1 -> -1.
pub fn antipodal(bits: &[u8]) -> Vec<SoftBit> {
    bits.iter().map(|&b| Some(if b & 1 == 0 { 1.0 } else { -1.0 })).collect()
}

/// Maximum-correlation path through the zero-terminated trellis.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiOutput {
    pub bits: Vec<u8>,
    pub metric: f64,
}

/// Soft-decision Viterbi decoding with the correlation metric
/// `sum_i r_i * (1 - 2 v_i)`; erasures contribute zero.
///
/// Returns the information bits (tail removed) of the best path that ends in
/// the zero state. Ties go to the smaller predecessor state, then the smaller
/// input word.
pub fn viterbi_decode(code: &GeneratorSpec, metrics: &[SoftBit]) -> Result<Vec<u8>> {
    viterbi_decode_with_metric(code, &code.trellis(), metrics).map(|o| o.bits)
}

pub fn viterbi_decode_with_metric(
    code: &GeneratorSpec,
    trellis: &Trellis,
    metrics: &[SoftBit],
) -> Result<ViterbiOutput> {
    let n = code.n;
    let flush = code.flush_steps();
    if !metrics.len().is_multiple_of(n) || metrics.len() / n < flush {
        return Err(Error::LengthMismatch {
            expected: n * (metrics.len() / n).max(flush),
            got: metrics.len(),
        });
    }
    let steps = metrics.len() / n;
    let states = trellis.num_states();
    let words = trellis.num_inputs();

    // predecessors of every state, sorted by (previous state, input word)
    let mut preds: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new(); states];
    for s in 0..states as u32 {
        for w in 0..words as u32 {
            let (ns, o) = trellis.step(s, w);
            preds[ns as usize].push((s, w, o));
        }
    }

    let mut branch = vec![0.0f64; 1 << n];
    let mut pm = vec![f64::NEG_INFINITY; states];
    pm[0] = 0.0;
    let mut next_pm = vec![f64::NEG_INFINITY; states];
    let mut survivors = vec![(0u32, 0u32); steps * states];

    for t in 0..steps {
        let r = &metrics[t * n..(t + 1) * n];
        for (o, slot) in branch.iter_mut().enumerate() {
            *slot = r
                .iter()
                .enumerate()
                .map(|(i, m)| match m {
                    Some(v) if (o >> i) & 1 == 0 => *v,
                    Some(v) => -*v,
                    None => 0.0,
                })
                .sum();
        }
        for ns in 0..states {
            let mut best = f64::NEG_INFINITY;
            let mut choice = (0u32, 0u32);
            let mut found = false;
            for &(s, w, o) in &preds[ns] {
                let prev = pm[s as usize];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                let cand = prev + branch[o as usize];
                if !found || cand > best {
                    best = cand;
                    choice = (s, w);
                    found = true;
                }
            }
            next_pm[ns] = if found { best } else { f64::NEG_INFINITY };
            survivors[t * states + ns] = choice;
        }
        std::mem::swap(&mut pm, &mut next_pm);
    }

    let metric = pm[0];
    let mut words_out = vec![0u32; steps];
    let mut state = 0u32;
    for t in (0..steps).rev() {
        let (s, w) = survivors[t * states + state as usize];
        words_out[t] = w;
        state = s;
    }
    let info_steps = steps - flush;
    let bits = words_out[..info_steps]
        .iter()
        .flat_map(|&w| (0..code.k).map(move |j| ((w >> j) & 1) as u8))
        .collect();
    Ok(ViterbiOutput { bits, metric })
}

/// Weight enumeration of first-return error events.
///
/// `a[d]` counts paths that leave the zero state and first return to it
/// with output weight `d`; `c[d]` is the summed input weight of those paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceSpectrum {
    /// Smallest weight with a nonzero count, if any path has weight `<= d_max`.
    pub d_free: Option<u32>,
    pub a: BTreeMap<u32, u64>,
    pub c: BTreeMap<u32, u64>,
    pub d_max: u32,
}

impl DistanceSpectrum {
    pub fn a_d(&self, d: u32) -> u64 {
        self.a.get(&d).copied().unwrap_or(0)
    }

    pub fn c_d(&self, d: u32) -> u64 {
        self.c.get(&d).copied().unwrap_or(0)
    }

    /// Spectrum known only through its `c_d` values (`a` left empty).
    pub fn from_c_counts(c: BTreeMap<u32, u64>, d_max: u32) -> DistanceSpectrum {
        let c: BTreeMap<u32, u64> = c.into_iter().filter(|&(d, v)| v > 0 && d <= d_max).collect();
        DistanceSpectrum { d_free: c.keys().next().copied(), a: BTreeMap::new(), c, d_max }
    }

    /// `(d, c_d)` pairs with nonzero `c_d`, ascending in `d`.
    pub fn terms(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.c.iter().filter(|(_, &c)| c > 0).map(|(&d, &c)| (d, c))
    }

    pub fn is_empty(&self) -> bool {
        self.d_free.is_none()
    }

    /// Keep only weights `<= d_max`.
    pub fn truncated(&self, d_max: u32) -> DistanceSpectrum {
        let a: BTreeMap<u32, u64> = self.a.range(..=d_max).map(|(&d, &v)| (d, v)).collect();
        let c: BTreeMap<u32, u64> = self.c.range(..=d_max).map(|(&d, &v)| (d, v)).collect();
        let d_free = c.iter().find(|(_, &v)| v > 0).map(|(&d, _)| d);
        DistanceSpectrum { d_free, a, c, d_max: d_max.min(self.d_max) }
    }
}

/// Exact spectrum up to weight `d_max` by breadth-first enumeration over
/// `(state, accumulated weight)`.
///
/// `len_cap` bounds the path length in trellis steps. The cap is certified:
/// if any path of weight `<= d_max` is still open after `len_cap` steps the
/// call fails, so a successful result does not depend on the cap.
pub fn distance_spectrum(code: &GeneratorSpec, d_max: u32, len_cap: usize) -> Result<DistanceSpectrum> {
    if d_max < 1 {
        return Err(Error::InvalidParameter("d_max must be at least 1".into()));
    }
    if is_catastrophic(code) {
        return Err(Error::Catastrophic);
    }
    let trellis = code.trellis();
    let states = trellis.num_states();
    let words = trellis.num_inputs() as u32;
    let width = d_max as usize + 1;
    let mut a = vec![0u64; width];
    let mut c = vec![0u64; width];

    // live[state * width + w] = (path count, summed input weight)
    let mut live = vec![(0u64, 0u64); states * width];
    let mut any_live = false;
    for w in 1..words {
        let (ns, o) = trellis.step(0, w);
        let d = o.count_ones() as usize;
        let iw = w.count_ones() as u64;
        if d > d_max as usize {
            continue;
        }
        if ns == 0 {
            a[d] += 1;
            c[d] += iw;
        } else {
            let e = &mut live[ns as usize * width + d];
            e.0 += 1;
            e.1 += iw;
            any_live = true;
        }
    }

    let mut steps = 1;
    let mut next = vec![(0u64, 0u64); states * width];
    while any_live {
        if steps >= len_cap {
            return Err(Error::LenCapInsufficient { len_cap, d_max });
        }
        steps += 1;
        any_live = false;
        next.iter_mut().for_each(|e| *e = (0, 0));
        for s in 1..states {
            for d in 0..width {
                let (cnt, ins) = live[s * width + d];
                if cnt == 0 {
                    continue;
                }
                for w in 0..words {
                    let (ns, o) = trellis.step(s as u32, w);
                    let nd = d + o.count_ones() as usize;
                    if nd >= width {
                        continue;
                    }
                    let iw = w.count_ones() as u64;
                    let overflow = || Error::CountOverflow { d_max };
                    let add_ins = cnt.checked_mul(iw).and_then(|x| x.checked_add(ins)).ok_or_else(overflow)?;
                    let (ca, cc) = if ns == 0 {
                        (&mut a[nd], &mut c[nd])
                    } else {
                        any_live = true;
                        let e = &mut next[ns as usize * width + nd];
                        (&mut e.0, &mut e.1)
                    };
                    *ca = ca.checked_add(cnt).ok_or_else(overflow)?;
                    *cc = cc.checked_add(add_ins).ok_or_else(overflow)?;
                }
            }
        }
        std::mem::swap(&mut live, &mut next);
    }

    let d_free = a.iter().position(|&x| x > 0).map(|d| d as u32);
    let a: BTreeMap<u32, u64> = a.iter().enumerate().filter(|(_, &x)| x > 0).map(|(d, &x)| (d as u32, x)).collect();
    let c: BTreeMap<u32, u64> = c.iter().enumerate().filter(|(d, _)| a.contains_key(&(*d as u32))).map(|(d, &x)| (d as u32, x)).collect();
    Ok(DistanceSpectrum { d_free, a, c, d_max })
}

/// Free distance of a non-catastrophic code, found by widening the
/// enumeration window until an event appears.
pub fn free_distance(code: &GeneratorSpec) -> Result<u32> {
    let mut d_max = 8;
    loop {
        if let Some(d) = distance_spectrum(code, d_max, safe_len_cap(code, d_max))?.d_free {
            return Ok(d);
        }
        d_max += 8;
    }
}

/// A path-length cap that certifies for any non-catastrophic code: every
/// cycle avoiding the zero state adds weight at least one.
pub fn safe_len_cap(code: &GeneratorSpec, d_max: u32) -> usize {
    (d_max as usize + 2) * code.num_states() + 1
}

/// True iff some cycle of zero output weight exists other than the
/// zero-state, zero-input self-loop.
pub fn is_catastrophic(code: &GeneratorSpec) -> bool {
    let trellis = code.trellis();
    let states = trellis.num_states();
    let words = trellis.num_inputs() as u32;
    let adj: Vec<Vec<u32>> = (0..states as u32)
        .map(|s| {
            (0..words)
                .filter(|&w| !(s == 0 && w == 0))
                .filter_map(|w| {
                    let (ns, o) = trellis.step(s, w);
                    (o == 0).then_some(ns)
                })
                .collect()
        })
        .collect();

    // iterative three-colour DFS
    let mut colour = vec![0u8; states];
    for root in 0..states {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        colour[root] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let u = adj[v][*i] as usize;
                *i += 1;
                match colour[u] {
                    0 => {
                        colour[u] = 1;
                        stack.push((u, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code57() -> GeneratorSpec {
        GeneratorSpec::from_octal(&["5", "7"]).unwrap()
    }

    #[test]
    fn octal_convention() {
        assert_eq!(Poly::from_octal("7").unwrap(), Poly(0b111));
        // 13 octal = 1011: 1 + D^2 + D^3
        assert_eq!(Poly::from_octal("13").unwrap(), Poly(0b1101));
        assert_eq!(Poly::from_octal("657").unwrap().degree(), Some(8));
        assert_eq!(Poly::from_octal("435").unwrap().to_octal(), "435");
        assert_eq!(Poly(0b1101).to_string(), "1+D^2+D^3");
        assert!(Poly::from_octal("9").is_err());
    }

    #[test]
    fn encode_identity_code() {
        let code = GeneratorSpec::rate_one_over(&[Poly::ONE, Poly::ONE]).unwrap();
        assert_eq!(encode(&code, &[1, 0, 1]).unwrap(), vec![1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn encode_57_impulse() {
        // 5 = 1 + D^2, 7 = 1 + D + D^2
        assert_eq!(encode(&code57(), &[1]).unwrap(), vec![1, 1, 0, 1, 1, 1]);
    }

    #[test]
    fn encode_rejects_partial_word() {
        let blocked = GeneratorSpec::new(vec![vec![Poly::ONE, Poly::ONE, Poly::ZERO], vec![Poly::ZERO, Poly::ONE, Poly::ONE]]).unwrap();
        assert!(matches!(encode(&blocked, &[1, 0, 1]), Err(Error::LengthNotMultiple { .. })));
    }

    #[test]
    fn generator_validation() {
        assert!(GeneratorSpec::rate_one_over(&[Poly::ONE]).is_err());
        assert!(GeneratorSpec::rate_one_over(&[Poly::ONE, Poly::ZERO]).is_err());
        assert_eq!(code57().memory(), 2);
        assert_eq!(code57().octal().unwrap(), vec!["5", "7"]);
    }

    #[test]
    fn viterbi_all_erased_gives_zero() {
        let code = code57();
        let out = viterbi_decode(&code, &vec![None; 2 * 12]).unwrap();
        assert_eq!(out, vec![0; 10]);
    }

    #[test]
    fn viterbi_length_mismatch() {
        assert!(viterbi_decode(&code57(), &[Some(1.0); 7]).is_err());
    }

    #[test]
    fn spectrum_57() {
        let s = distance_spectrum(&code57(), 8, 64).unwrap();
        assert_eq!(s.d_free, Some(5));
        assert_eq!((s.a_d(5), s.c_d(5)), (1, 1));
        // transfer function D^5 L / (1 - 2 D L): a_d = 2^(d-5), c_d = (d-4) 2^(d-5)
        for d in 5..=8u32 {
            assert_eq!(s.a_d(d), 1 << (d - 5));
            assert_eq!(s.c_d(d), (d as u64 - 4) << (d - 5));
        }
    }

    #[test]
    fn spectrum_identity_code() {
        let code = GeneratorSpec::rate_one_over(&[Poly::ONE, Poly::ONE]).unwrap();
        let s = distance_spectrum(&code, 2, 4).unwrap();
        assert_eq!(s.d_free, Some(2));
        assert_eq!((s.a_d(2), s.c_d(2)), (1, 1));
    }

    #[test]
    fn len_cap_is_certified() {
        assert!(matches!(distance_spectrum(&code57(), 10, 3), Err(Error::LenCapInsufficient { .. })));
        let a = distance_spectrum(&code57(), 10, 40).unwrap();
        let b = distance_spectrum(&code57(), 10, 400).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn catastrophic_detection() {
        assert!(!is_catastrophic(&code57()));
        // 6 = 1 + D and 5 = 1 + D^2 share the factor 1 + D
        assert!(is_catastrophic(&GeneratorSpec::from_octal(&["6", "5"]).unwrap()));
        // (1 + D, 1) and a pure delay factor are not catastrophic
        assert!(!is_catastrophic(&GeneratorSpec::from_octal(&["6", "4"]).unwrap()));
        assert!(!is_catastrophic(&GeneratorSpec::rate_one_over(&[Poly(0b110), Poly(0b100)]).unwrap()));
        assert!(matches!(
            distance_spectrum(&GeneratorSpec::from_octal(&["6", "5"]).unwrap(), 5, 100),
            Err(Error::Catastrophic)
        ));
    }
}
