mod common;

use proptest::prelude::*;
use vblast_core::convcode::{
    antipodal, distance_spectrum, encode, free_distance, is_catastrophic, safe_len_cap, viterbi_decode,
    viterbi_decode_with_metric, GeneratorSpec, Poly,
};

fn rate_half(max_poly: u64) -> impl Strategy<Value = GeneratorSpec> {
    (1..max_poly, 1..max_poly).prop_map(|(a, b)| GeneratorSpec::rate_one_over(&[Poly(a), Poly(b)]).unwrap())
}

fn two_input() -> impl Strategy<Value = GeneratorSpec> {
    proptest::collection::vec(0u64..8, 6).prop_filter_map("valid 2/3 code", |p| {
        GeneratorSpec::new(vec![p[..3].iter().map(|&x| Poly(x)).collect(), p[3..].iter().map(|&x| Poly(x)).collect()]).ok()
    })
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

proptest! {
    #[test]
    fn encoder_is_linear(code in rate_half(64), bits in proptest::collection::vec(0u8..2, 0..40), other in proptest::collection::vec(0u8..2, 40)) {
        let other = &other[..bits.len()];
        let lhs = encode(&code, &xor(&bits, other)).unwrap();
        let rhs = xor(&encode(&code, &bits).unwrap(), &encode(&code, other).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn noiseless_decoding_recovers_input(code in rate_half(32), bits in proptest::collection::vec(0u8..2, 0..60)) {
        prop_assume!(!is_catastrophic(&code));
        let coded = encode(&code, &bits).unwrap();
        prop_assert_eq!(viterbi_decode(&code, &antipodal(&coded)).unwrap(), bits);
    }

    #[test]
    fn viterbi_metric_is_maximum_likelihood(
        code in rate_half(16),
        len in 1usize..=10,
        soft in proptest::collection::vec(prop_oneof![3 => (-2.0f64..2.0).prop_map(Some), 1 => Just(None)], 26),
    ) {
        let coded_len = code.encoded_len(len);
        let metrics = &soft[..coded_len.min(soft.len())];
        prop_assume!(metrics.len() == coded_len);
        let out = viterbi_decode_with_metric(&code, &code.trellis(), metrics).unwrap();
        let mut best = f64::NEG_INFINITY;
        for word in 0u32..(1 << len) {
            let bits: Vec<u8> = (0..len).map(|i| ((word >> i) & 1) as u8).collect();
            let v = encode(&code, &bits).unwrap();
            let m: f64 = metrics.iter().zip(&v).map(|(r, &b)| r.map_or(0.0, |r| r * (1.0 - 2.0 * b as f64))).sum();
            best = best.max(m);
        }
        prop_assert!((out.metric - best).abs() <= 1e-9 * best.abs().max(1.0));
        let own: f64 = metrics
            .iter()
            .zip(&encode(&code, &out.bits).unwrap())
            .map(|(r, &b)| r.map_or(0.0, |r| r * (1.0 - 2.0 * b as f64)))
            .sum();
        prop_assert!((own - out.metric).abs() <= 1e-9 * best.abs().max(1.0));
    }

    #[test]
    fn spectrum_matches_enumeration(code in rate_half(32)) {
        prop_assume!(!is_catastrophic(&code));
        let brute = common::brute_force_spectrum(&code, 18, 12);
        let limit = brute.exact_below - 1;
        let fast = distance_spectrum(&code, limit, safe_len_cap(&code, limit)).unwrap();
        for d in 1..=limit {
            prop_assert_eq!(fast.a_d(d), brute.a.get(&d).copied().unwrap_or(0));
            prop_assert_eq!(fast.c_d(d), brute.c.get(&d).copied().unwrap_or(0));
        }
    }

    #[test]
    fn spectrum_matches_enumeration_two_inputs(code in two_input()) {
        prop_assume!(!is_catastrophic(&code));
        let brute = common::brute_force_spectrum(&code, 8, 10);
        let limit = brute.exact_below - 1;
        let fast = distance_spectrum(&code, limit, safe_len_cap(&code, limit)).unwrap();
        for d in 1..=limit {
            prop_assert_eq!(fast.a_d(d), brute.a.get(&d).copied().unwrap_or(0));
            prop_assert_eq!(fast.c_d(d), brute.c.get(&d).copied().unwrap_or(0));
        }
    }

    #[test]
    fn truncation_is_a_prefix(code in rate_half(64), cut in 1u32..12) {
        prop_assume!(!is_catastrophic(&code));
        let full = distance_spectrum(&code, 14, safe_len_cap(&code, 14)).unwrap();
        let short = distance_spectrum(&code, cut, safe_len_cap(&code, cut)).unwrap();
        prop_assert_eq!(full.truncated(cut), short);
    }
}

#[test]
fn known_free_distances() {
    // memory-2 (7,5), memory-6 (171,133)
    for (octal, d) in [(["7", "5"], 5), (["171", "133"], 10)] {
        assert_eq!(free_distance(&GeneratorSpec::from_octal(&octal).unwrap()).unwrap(), d);
    }
}

#[test]
fn catastrophic_code_is_refused() {
    let code = GeneratorSpec::from_octal(&["6", "5"]).unwrap();
    assert!(is_catastrophic(&code));
    assert!(distance_spectrum(&code, 8, 100).is_err());
}
