#![allow(dead_code)]

use std::collections::BTreeMap;

use vblast_core::convcode::GeneratorSpec;

/// Spectrum of first-return error events by exhaustive enumeration of input
/// word sequences, with outputs formed by explicit convolution of the input
/// history with the generator taps.
pub struct BruteSpectrum {
    pub a: BTreeMap<u32, u64>,
    pub c: BTreeMap<u32, u64>,
    /// Counts are exact for every weight below this value.
    pub exact_below: u32,
}

struct Search<'a> {
    code: &'a GeneratorSpec,
    max_words: usize,
    weight_cap: u32,
    history: Vec<u32>,
    a: BTreeMap<u32, u64>,
    c: BTreeMap<u32, u64>,
    open_min: u32,
}

impl Search<'_> {
    fn bit(&self, t: isize, j: usize) -> u8 {
        if t < 0 || t as usize >= self.history.len() {
            0
        } else {
            ((self.history[t as usize] >> j) & 1) as u8
        }
    }

    fn output_weight(&self, t: usize) -> u32 {
        let mut w = 0;
        for i in 0..self.code.n() {
            let mut v = 0u8;
            for j in 0..self.code.k() {
                let p = self.code.poly(j, i);
                for r in 0..=p.degree().unwrap_or(0) {
                    v ^= p.coeff(r) & self.bit(t as isize - r as isize, j);
                }
            }
            w += v as u32;
        }
        w
    }

    fn state_is_zero(&self, t: usize) -> bool {
        (0..self.code.k()).all(|j| (1..=self.code.row_memory()[j] as isize).all(|r| self.bit(t as isize - r, j) == 0))
    }

    fn flush_weight(&self) -> u32 {
        let t0 = self.history.len();
        (0..self.code.flush_steps()).map(|s| self.output_weight(t0 + s)).sum()
    }

    fn dfs(&mut self, weight: u32, input_weight: u32) {
        let t = self.history.len();
        let words = 1u32 << self.code.k();
        let start = if t == 0 { 1 } else { 0 };
        for word in start..words {
            self.history.push(word);
            let w = weight + self.output_weight(t);
            let iw = input_weight + word.count_ones();
            if w <= self.weight_cap {
                if word != 0 {
                    let total = w + self.flush_weight();
                    if total <= self.weight_cap {
                        *self.a.entry(total).or_default() += 1;
                        *self.c.entry(total).or_default() += iw as u64;
                    }
                }
                if !self.state_is_zero(t + 1) {
                    if t + 1 == self.max_words {
                        self.open_min = self.open_min.min(w);
                    } else {
                        self.dfs(w, iw);
                    }
                }
            }
            self.history.pop();
        }
    }
}

pub fn brute_force_spectrum(code: &GeneratorSpec, max_words: usize, weight_cap: u32) -> BruteSpectrum {
    let mut s = Search {
        code,
        max_words,
        weight_cap,
        history: Vec::new(),
        a: BTreeMap::new(),
        c: BTreeMap::new(),
        open_min: u32::MAX,
    };
    s.dfs(0, 0);
    let exact_below = s.open_min.min(weight_cap + 1);
    BruteSpectrum { a: s.a, c: s.c, exact_below }
}
