//! Reference `c_d` rows for the [657 435] mother code blocked to rate 2/4
//! and punctured with period 2, and a row-by-row comparison against
//! computed spectra.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::convcode::{DistanceSpectrum, GeneratorSpec};
use crate::error::Result;
use crate::rcpc::{PuncturingMatrix, RcpcFamily, SpectrumRow};

pub const MOTHER_OCTAL: [&str; 2] = ["657", "435"];
pub const BLOCKING: usize = 2;
/// Largest weight listed in the reference rows.
pub const D_MAX: u32 = 15;

#[derive(Debug, Clone, Copy)]
pub struct ReferenceRow {
    pub matrix: [[u8; 2]; 2],
    /// First listed weight and the `c_d` values from there up to [`D_MAX`].
    pub first_d: u32,
    pub c: &'static [u64],
    pub catastrophic: bool,
}

pub const ROWS: [ReferenceRow; 5] = [
    ReferenceRow { matrix: [[1, 1], [1, 1]], first_d: 8, c: &[3, 0, 47, 0, 263, 0, 2017, 0], catastrophic: false },
    ReferenceRow {
        matrix: [[0, 1], [1, 1]],
        first_d: 5,
        c: &[8, 26, 8, 263, 1470, 5272, 21705, 99998, 424070, 1747352, 7265287],
        catastrophic: false,
    },
    ReferenceRow {
        matrix: [[1, 0], [1, 1]],
        first_d: 6,
        c: &[9, 17, 181, 774, 3140, 13737, 60959, 262324, 1094392, 4613797],
        catastrophic: false,
    },
    ReferenceRow {
        matrix: [[1, 1], [0, 1]],
        first_d: 5,
        c: &[9, 10, 58, 400, 1968, 8575, 35003, 149563, 637000, 2649633, 10935387],
        catastrophic: false,
    },
    ReferenceRow { matrix: [[1, 1], [1, 0]], first_d: 5, c: &[], catastrophic: true },
];

impl ReferenceRow {
    pub fn puncturing(&self) -> PuncturingMatrix {
        PuncturingMatrix::new(self.matrix.iter().map(|r| r.to_vec()).collect()).expect("valid reference matrix")
    }

    /// `None` for the catastrophic row.
    pub fn spectrum(&self) -> Option<DistanceSpectrum> {
        if self.catastrophic {
            return None;
        }
        let c: BTreeMap<u32, u64> = self.c.iter().enumerate().map(|(i, &v)| (self.first_d + i as u32, v)).collect();
        Some(DistanceSpectrum::from_c_counts(c, D_MAX))
    }
}

pub fn matrices() -> Vec<PuncturingMatrix> {
    ROWS.iter().map(ReferenceRow::puncturing).collect()
}

/// Mother code in the crate's octal convention (first digit holds the
/// current-input tap).
pub fn mother() -> Result<GeneratorSpec> {
    GeneratorSpec::from_octal(&MOTHER_OCTAL)
}

/// The five reference matrices over the blocked mother code.
pub fn family() -> Result<RcpcFamily> {
    RcpcFamily::new(mother()?, BLOCKING, matrices())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowComparison {
    pub encoder: usize,
    pub matrix: String,
    pub reference_d_free: Option<u32>,
    pub computed_d_free: Option<u32>,
    pub reference_catastrophic: bool,
    pub computed_catastrophic: bool,
    /// `(d, reference, computed)` wherever the two differ, `d <= D_MAX`.
    pub mismatches: Vec<(u32, u64, u64)>,
}

impl RowComparison {
    pub fn matches(&self) -> bool {
        self.reference_catastrophic == self.computed_catastrophic && self.mismatches.is_empty()
    }
}

/// Compares computed rows (in [`ROWS`] order) with the reference ones.
pub fn compare(computed: &[SpectrumRow]) -> Vec<RowComparison> {
    ROWS.iter()
        .zip(computed)
        .enumerate()
        .map(|(encoder, (reference, row))| {
            let matrix = reference.puncturing().to_string();
            let listed = reference.spectrum();
            let (computed_spectrum, computed_catastrophic) = match row {
                SpectrumRow::Spectrum { spectrum, .. } => (Some(spectrum.truncated(D_MAX)), false),
                SpectrumRow::Catastrophic { .. } => (None, true),
            };
            let mut mismatches = Vec::new();
            if let (Some(p), Some(c)) = (&listed, &computed_spectrum) {
                for d in 1..=D_MAX {
                    if p.c_d(d) != c.c_d(d) {
                        mismatches.push((d, p.c_d(d), c.c_d(d)));
                    }
                }
            }
            RowComparison {
                encoder,
                matrix,
                reference_d_free: listed.as_ref().and_then(|s| s.d_free),
                computed_d_free: computed_spectrum.as_ref().and_then(|s| s.d_free),
                reference_catastrophic: reference.catastrophic,
                computed_catastrophic,
                mismatches,
            }
        })
        .collect()
}

/// Plain-text discrepancy report, one block per row.
pub fn report(rows: &[RowComparison]) -> String {
    let mut out = String::new();
    for r in rows {
        let status = if r.matches() { "match" } else { "MISMATCH" };
        let _ = writeln!(out, "encoder {} {}: {}", r.encoder, r.matrix, status);
        let _ = writeln!(
            out,
            "  d_free reference {} computed {}",
            r.reference_d_free.map_or("-".into(), |d| d.to_string()),
            r.computed_d_free.map_or("-".into(), |d| d.to_string()),
        );
        if r.reference_catastrophic != r.computed_catastrophic {
            let _ = writeln!(
                out,
                "  catastrophic reference {} computed {}",
                r.reference_catastrophic, r.computed_catastrophic
            );
        }
        for &(d, p, c) in &r.mismatches {
            let _ = writeln!(out, "  c_{d}: reference {p} computed {c}");
        }
    }
    out
}
