use proptest::prelude::*;
use vblast_core::convcode::{encode, is_catastrophic, GeneratorSpec, Poly};
use vblast_core::rcpc::{
    blocked_generator, delete_punctured_columns, depuncture, polyphase_decompose, polyphase_recompose, puncture,
    verify_equivalence, PuncturingMatrix, RcpcFamily,
};
use vblast_core::reference;

fn matrix(n: usize, period: usize) -> impl Strategy<Value = PuncturingMatrix> {
    proptest::collection::vec(0u8..2, n * period).prop_filter_map("valid matrix", move |bits| {
        let rows: Vec<Vec<u8>> = bits.chunks(period).map(|c| c.to_vec()).collect();
        PuncturingMatrix::new(rows).ok()
    })
}

fn redundant(n: usize, period: usize) -> impl Strategy<Value = PuncturingMatrix> {
    matrix(n, period).prop_filter("rate below one", move |m| m.ones() > period)
}

proptest! {
    #[test]
    fn polyphase_roundtrip(p in 1u64..1 << 20, k in 1usize..5) {
        prop_assert_eq!(polyphase_recompose(&polyphase_decompose(Poly(p), k)), Poly(p));
    }

    #[test]
    fn depuncture_inverts_puncture(m in matrix(2, 3), periods in 1usize..10, seed in any::<u64>()) {
        let len = periods * 6;
        let data: Vec<u64> = (0..len as u64).map(|i| i ^ seed).collect();
        let kept = puncture(&m, &data).unwrap();
        prop_assert_eq!(kept.len(), periods * m.ones());
        let back = depuncture(&m, &kept).unwrap();
        for (i, v) in back.iter().enumerate() {
            match v {
                Some(x) => prop_assert_eq!(*x, data[i]),
                None => prop_assert!(!m.keeps(i % 2, i / 2)),
            }
        }
    }

    #[test]
    fn equivalent_code_matches_punctured_mother(
        g0 in 1u64..64, g1 in 1u64..64, m in redundant(2, 2), seed in any::<u64>(),
    ) {
        let mother = GeneratorSpec::rate_one_over(&[Poly(g0), Poly(g1)]).unwrap();
        let blocked = blocked_generator(&mother, 2).unwrap();
        let eq = delete_punctured_columns(&blocked, &m).unwrap();
        prop_assert_eq!(eq.k(), 2);
        prop_assert_eq!(eq.n(), m.ones());
        verify_equivalence(&mother, &eq, &m, 64, seed).unwrap();
    }

    #[test]
    fn period_three_blocking(g0 in 1u64..32, g1 in 1u64..32, m in redundant(2, 3), seed in any::<u64>()) {
        let mother = GeneratorSpec::rate_one_over(&[Poly(g0), Poly(g1)]).unwrap();
        let eq = delete_punctured_columns(&blocked_generator(&mother, 3).unwrap(), &m).unwrap();
        verify_equivalence(&mother, &eq, &m, 40, seed).unwrap();
    }
}

#[test]
fn family_members_encode_like_the_mother() {
    let family = reference::family().unwrap();
    let bits: Vec<u8> = (0..200).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
    let mother_out = encode(family.mother(), &bits).unwrap();
    for (i, m) in family.members().iter().enumerate() {
        let eq = family.equivalent(i).unwrap();
        assert!(!is_catastrophic(&eq));
        assert_eq!(encode(&eq, &bits).unwrap(), puncture(m, &mother_out).unwrap());
    }
}

#[test]
fn rates_of_reference_family() {
    let family = reference::family().unwrap();
    let rates: Vec<String> = (0..family.len()).map(|i| family.rate(i).to_string()).collect();
    assert_eq!(rates, ["2/4", "2/3", "2/3", "2/3", "2/3"]);
}

#[test]
fn nested_family_accepted_and_violation_rejected() {
    let mother = GeneratorSpec::from_octal(&["7", "5"]).unwrap();
    let ok = vec![
        PuncturingMatrix::all_ones(2, 4),
        PuncturingMatrix::new(vec![vec![1, 1, 1, 1], vec![1, 1, 1, 0]]).unwrap(),
        PuncturingMatrix::new(vec![vec![1, 1, 1, 1], vec![1, 0, 1, 0]]).unwrap(),
    ];
    assert!(RcpcFamily::new(mother.clone(), 4, ok).is_ok());
    let bad = vec![
        PuncturingMatrix::new(vec![vec![1, 1, 1, 1], vec![1, 1, 1, 0]]).unwrap(),
        PuncturingMatrix::new(vec![vec![1, 0, 1, 0], vec![0, 0, 0, 1]]).unwrap(),
    ];
    assert!(RcpcFamily::new(mother, 4, bad).is_err());
}
