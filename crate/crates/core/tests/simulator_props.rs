mod common;

use common::{random_permutation_machine, random_unitary_machine, ClassicalEnd, DenseEnd, DenseEngine};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wkqfa::machine::{check_well_formed, complete_operators, fill_default_rejects, MachineDef};
use wkqfa::simulator::{accepts, run_strand, AcceptOptions, AcceptancePolicy, HaltReason, RunOptions};
use wkqfa::strand::{complements, Strand};

fn words(m: &MachineDef, max_len: usize) -> Vec<Strand> {
    let uppers: Vec<usize> = m.alphabet().input_ids().collect();
    common::all_words(&uppers, max_len)
        .into_iter()
        .map(Strand::new)
        .collect()
}

fn cap(m: &MachineDef, w1: &Strand, w2: &Strand) -> usize {
    4 * m.state_count() * (w1.len() + 2) * (w2.len() + 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lockstep_unitary_runs_conserve_probability(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = complete_operators(&random_unitary_machine(&mut rng, true)).unwrap();
        prop_assert!(check_well_formed(&m, 1e-9).is_well_formed());
        for w1 in words(&m, 3) {
            for w2 in complements(&w1, m.rho()) {
                let out = run_strand(&m, &w1, &w2, RunOptions::default()).unwrap();
                prop_assert_eq!(out.halt_reason, HaltReason::AllHalted);
                prop_assert!(out.max_conservation_error <= 1e-9);
                prop_assert!(out.norm_anomalies.is_empty());
                prop_assert!((out.p_acc + out.p_rej - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn unitary_operators_conserve_probability_under_any_head_motion(seed in any::<u64>()) {
        // A target configuration fixes its source position, so per-pair
        // unitarity is enough.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = complete_operators(&random_unitary_machine(&mut rng, false)).unwrap();
        for w1 in words(&m, 3) {
            for w2 in complements(&w1, m.rho()) {
                let out = run_strand(&m, &w1, &w2, RunOptions::default()).unwrap();
                prop_assert!(out.max_conservation_error <= 1e-9);
                prop_assert!(out.norm_anomalies.is_empty());
            }
        }
    }

    #[test]
    fn sparse_matches_dense_on_random_unitary_machines(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_unitary_machine(&mut rng, false);
        let m = fill_default_rejects(&raw);
        let dense = DenseEngine::new(&raw);
        for w1 in words(&m, 3) {
            for w2 in complements(&w1, m.rho()) {
                let c = cap(&m, &w1, &w2);
                let sparse = run_strand(&m, &w1, &w2, RunOptions { step_cap: Some(c), trace: false }).unwrap();
                let reference = dense.run(raw.start(), &w1, &w2, c);
                prop_assert_eq!(sparse.halt_reason == HaltReason::HeadOverrun, reference.end == DenseEnd::Overrun);
                if reference.end != DenseEnd::Overrun {
                    prop_assert!((sparse.p_acc - reference.p_acc).abs() <= 1e-9, "{} vs {}", sparse.p_acc, reference.p_acc);
                    prop_assert!((sparse.p_rej - reference.p_rej).abs() <= 1e-9, "{} vs {}", sparse.p_rej, reference.p_rej);
                }
            }
        }
    }

    #[test]
    fn permutation_machines_match_classical_automaton(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (raw, classical) = random_permutation_machine(&mut rng);
        let m = complete_operators(&raw).unwrap();
        for w1 in words(&m, 4) {
            for w2 in complements(&w1, m.rho()) {
                let out = run_strand(&m, &w1, &w2, RunOptions::default()).unwrap();
                let expected = classical.run(&w1, &w2);
                let got = match out.halt_reason {
                    HaltReason::HeadOverrun => ClassicalEnd::Overrun,
                    HaltReason::StepCap => ClassicalEnd::Loop,
                    HaltReason::AllHalted if out.p_acc == 1.0 => ClassicalEnd::Accept,
                    HaltReason::AllHalted => {
                        prop_assert_eq!(out.p_rej, 1.0);
                        ClassicalEnd::Reject
                    }
                };
                prop_assert_eq!(got, expected);
                if let Some(trace) = run_strand(&m, &w1, &w2, RunOptions { trace: true, ..Default::default() }).unwrap().trace {
                    prop_assert!(trace.iter().all(|r| r.configs.len() <= 1));
                }
            }
        }
    }

    #[test]
    fn trace_probabilities_sum_to_outcome(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = fill_default_rejects(&random_unitary_machine(&mut rng, true));
        for w1 in words(&m, 2) {
            for w2 in complements(&w1, m.rho()) {
                let out = run_strand(&m, &w1, &w2, RunOptions { trace: true, ..Default::default() }).unwrap();
                let trace = out.trace.as_ref().unwrap();
                prop_assert_eq!(trace.len(), out.steps);
                let acc: f64 = trace.iter().map(|r| r.dp_acc).sum();
                let rej: f64 = trace.iter().map(|r| r.dp_rej).sum();
                prop_assert!((acc - out.p_acc).abs() < 1e-12);
                prop_assert!((rej - out.p_rej).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certain_acceptance_clears_every_cutpoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = fill_default_rejects(&random_unitary_machine(&mut rng, true));
        for w1 in words(&m, 2) {
            let certain = accepts(&m, &w1, AcceptancePolicy::default(), AcceptOptions::default()).unwrap();
            let half = accepts(&m, &w1, AcceptancePolicy::cutpoint(0.5).unwrap(), AcceptOptions::default()).unwrap();
            // Anything accepted with certainty clears every cut-point.
            prop_assert!(!certain.accepted || half.accepted);
            if !half.accepted {
                prop_assert!(half.best_p_acc < 0.5);
            }
        }
    }
}

#[test]
fn stationary_loop_hits_step_cap() {
    let doc = r##"{
        "states": ["p", "q"], "start": "p", "accept": [], "reject": [],
        "alphabet": ["a"], "rho": [["a", "a"]],
        "directions": {"p": [0, 0], "q": [0, 0]},
        "operators": [{"upper": "#", "lower": "#", "entries": [
            {"from": "p", "to": "q", "amp": "1"}, {"from": "q", "to": "p", "amp": "1"}]}]
    }"##;
    let m = fill_default_rejects(&wkqfa::machine::load_machine(doc).unwrap());
    let out = run_strand(&m, &Strand::empty(), &Strand::empty(), RunOptions::default()).unwrap();
    assert_eq!(out.halt_reason, HaltReason::StepCap);
    assert_eq!(out.steps, 4 * m.state_count() * 2 * 2);
    assert!((out.p_residual - 1.0).abs() < 1e-12);
}

#[test]
fn non_unitary_operator_raises_norm_anomaly() {
    // u and v share a column under (#,#), so their amplitudes add up.
    let doc = r##"{
        "states": ["p", "u", "v", "w", "acc"], "start": "p", "accept": ["acc"], "reject": [],
        "alphabet": ["a"], "rho": [["a", "a"]],
        "directions": {"p": [0, 0], "u": [0, 0], "v": [0, 0], "w": [0, 0], "acc": [0, 0]},
        "operators": [{"upper": "#", "lower": "#", "entries": [
            {"from": "p", "to": "u", "amp": "1/sqrt(2)"}, {"from": "p", "to": "v", "amp": "1/sqrt(2)"},
            {"from": "u", "to": "w", "amp": "1"}, {"from": "v", "to": "w", "amp": "1"},
            {"from": "w", "to": "acc", "amp": "1"}]}]
    }"##;
    let m = fill_default_rejects(&wkqfa::machine::load_machine(doc).unwrap());
    assert!(!check_well_formed(&m, 1e-9).is_well_formed());
    let out = run_strand(&m, &Strand::empty(), &Strand::empty(), RunOptions::default()).unwrap();
    assert_eq!(out.norm_anomalies.len(), 1);
    assert_eq!(out.norm_anomalies[0].step, 2);
    assert!((out.p_acc - 2.0).abs() < 1e-12);
    assert!((out.max_conservation_error - 1.0).abs() < 1e-12);
}
