use proptest::prelude::*;
use vblast_core::exec::Execution;
use vblast_core::mimo::{Criterion, DetectionConfig, Ordering};
use vblast_core::modem::QamParams;
use vblast_core::reference;
use vblast_core::simkit::{payload_bits, run_sweep, run_trial, trial_seed, Coding, FadingMode, LinkConfig, StopRule};

fn base() -> LinkConfig {
    LinkConfig {
        rx: 2,
        tx: 2,
        m: 0.5,
        fading: FadingMode::Block,
        detection: DetectionConfig::new(Criterion::Mmse),
        qam: QamParams::qpsk(),
        coding: Coding::Rcpc { family: reference::family().unwrap(), interleave: false },
        grid_db: vec![0.0, 6.0],
        symbols_per_trial: 240,
        stop: StopRule { min_errors: 200, max_trials: 40, batch: 8 },
        seed: 42,
        noiseless: false,
    }
}

fn without_clock(mut s: vblast_core::simkit::RunSummary) -> vblast_core::simkit::RunSummary {
    s.wall_clock_s = 0.0;
    s
}

#[test]
fn noiseless_coded_mimo_is_error_free() {
    for criterion in [Criterion::Zf, Criterion::Mmse] {
        for fading in [FadingMode::Block, FadingMode::Fast] {
            let mut c = base();
            c.noiseless = true;
            c.fading = fading;
            c.detection = DetectionConfig::new(criterion);
            c.stop = StopRule { min_errors: 1, max_trials: 16, batch: 4 };
            let s = run_sweep(&c, Execution::Parallel).unwrap();
            assert!(s.points.iter().all(|p| p.errors == 0 && p.trials == 16));
        }
    }
}

#[test]
fn sweep_totals_are_sums_of_trials() {
    let c = base();
    let s = run_sweep(&c, Execution::Parallel).unwrap();
    for (gi, p) in s.points.iter().enumerate() {
        let (mut bits, mut errors) = (0, 0);
        for t in 0..p.trials {
            let r = run_trial(&c, p.ebn0_db, trial_seed(c.seed, gi, t)).unwrap();
            bits += r.bits;
            errors += r.errors;
        }
        assert_eq!((bits, errors), (p.bits, p.errors));
        assert!((p.ber - errors as f64 / bits as f64).abs() < 1e-15);
        assert!(p.errors >= c.stop.min_errors || p.trials == c.stop.max_trials);
        assert_eq!(p.trials % c.stop.batch, 0);
    }
}

#[test]
fn payload_per_trial_matches_allocation() {
    let mut c = base();
    c.noiseless = true;
    c.stop = StopRule { min_errors: 1, max_trials: 4, batch: 4 };
    let family = reference::family().unwrap();
    let coded = c.symbols_per_trial * c.qam.bits();
    let strong = payload_bits(&family, 0, coded);
    let weak = payload_bits(&family, 1, coded);
    let r = run_trial(&c, 3.0, 5).unwrap();
    assert_eq!(r.bits as usize, strong + weak);
    assert!(strong < weak);
}

#[test]
fn deterministic_across_execution_modes() {
    let mut c = base();
    c.detection.ordering = Ordering::BestFirst;
    let reference_run = without_clock(run_sweep(&c, Execution::Sequential).unwrap());
    for threads in [1, 2, 8] {
        let s = Execution::Parallel.with_threads(threads, || run_sweep(&c, Execution::Parallel).unwrap());
        assert_eq!(without_clock(s), reference_run);
    }
}

#[test]
fn uncoded_rayleigh_matches_closed_form() {
    let c = LinkConfig {
        rx: 1,
        tx: 1,
        m: 1.0,
        fading: FadingMode::Fast,
        detection: DetectionConfig::new(Criterion::Zf),
        qam: QamParams::qpsk(),
        coding: Coding::Uncoded,
        grid_db: vec![0.0, 5.0, 10.0],
        symbols_per_trial: 2000,
        stop: StopRule { min_errors: u64::MAX, max_trials: 64, batch: 16 },
        seed: 3,
        noiseless: false,
    };
    for p in run_sweep(&c, Execution::Parallel).unwrap().points {
        let g = 10f64.powf(p.ebn0_db / 10.0);
        let exact = 0.5 * (1.0 - (g / (1.0 + g)).sqrt());
        assert!(((p.ber - exact) / p.std_err).abs() < 4.0, "{} dB: {} vs {exact}", p.ebn0_db, p.ber);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = base();
    c.tx = 3;
    c.detection = DetectionConfig::new(Criterion::Zf);
    assert!(run_sweep(&c, Execution::Sequential).is_err());
    let mut c = base();
    c.symbols_per_trial = 2;
    assert!(c.validate().is_err());
    let mut c = base();
    c.grid_db = vec![3.0, 1.0];
    assert!(c.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parallel_equals_sequential_for_any_seed(seed in any::<u64>()) {
        let mut c = base();
        c.seed = seed;
        c.grid_db = vec![2.0];
        c.stop = StopRule { min_errors: u64::MAX, max_trials: 4, batch: 2 };
        let a = run_sweep(&c, Execution::Parallel).unwrap();
        let b = run_sweep(&c, Execution::Sequential).unwrap();
        prop_assert_eq!(&a.points, &b.points);
        prop_assert_eq!(a.points[0].trials, 4);
        prop_assert!(a.points[0].errors <= a.points[0].bits);
    }
}
