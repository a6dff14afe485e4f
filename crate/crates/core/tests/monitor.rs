mod common;

use common::{bindings, monitor, requirement, ATOMS};
use mtlmon::monitor::{run_all, Execution, Monitor, RunOptions, Verdict};
use mtlmon::oracle::{evaluate, random_trace, FormulaGen};
use mtlmon::spec::RequirementSet;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn final_verdict_agrees_with_oracle(seed in any::<u64>(), len in 1usize..=8) {
        let e = FormulaGen::new(seed, &ATOMS).expr(4);
        let rho = random_trace(seed.rotate_right(7), len, &ATOMS);
        let expected = evaluate(&rho, 1, &e.to_formula(), &bindings()).unwrap();
        let run = monitor(e.clone(), &rho);
        prop_assert_eq!(run.verdict == Verdict::NotViolated, expected, "{}", e);
        prop_assert_eq!(run.verdict == Verdict::Violated, !expected);
    }

    #[test]
    fn conclusive_verdicts_latch(seed in any::<u64>(), len in 1usize..=8) {
        let e = FormulaGen::new(seed, &ATOMS).expr(4);
        let rho = random_trace(seed ^ 0xabcd, len, &ATOMS);
        let run = monitor(e, &rho);
        if let Some(k) = run.live.iter().position(Verdict::is_conclusive) {
            for j in k..len {
                prop_assert_eq!(run.live[j], run.live[k]);
                prop_assert_eq!(run.times[j], run.times[k]);
            }
            prop_assert_eq!(run.verdict, run.live[k]);
            prop_assert_eq!(run.violation_time, run.times[k]);
        }
    }

    #[test]
    fn early_violations_survive_every_extension(seed in any::<u64>(), len in 2usize..=8) {
        let e = FormulaGen::new(seed, &ATOMS).expr(4);
        let f = e.to_formula();
        let rho = random_trace(seed.wrapping_add(99), len, &ATOMS);
        let run = monitor(e, &rho);
        if let Some(k) = run.live.iter().position(|v| *v == Verdict::Violated) {
            // Feed k + 1 derived event k, and reports its time. A formula
            // that is false outright is violated before any event.
            let derived = k.checked_sub(1).map(|j| rho.events()[j].tau);
            prop_assert_eq!(run.times[k], derived);
            for n in k + 1..=len {
                prop_assert!(!evaluate(&rho.prefix(n), 1, &f, &bindings()).unwrap());
            }
        }
    }

    #[test]
    fn monitors_are_independent(seeds in prop::collection::vec(any::<u64>(), 1..6), len in 1usize..=8) {
        let requirements = seeds
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut r = (*requirement(FormulaGen::new(*s, &ATOMS).expr(4))).clone();
                r.name = format!("r{k}");
                std::sync::Arc::new(r)
            })
            .collect();
        let set = RequirementSet { predicates: bindings(), requirements };
        let rho = random_trace(seeds[0] ^ 1, len, &ATOMS);
        let options = |execution| RunOptions { execution, chunk: 3, ..RunOptions::default() };
        let parallel = run_all(&set, &rho, options(Execution::Parallel)).unwrap();
        let sequential = run_all(&set, &rho, options(Execution::Sequential)).unwrap();
        for (k, r) in set.requirements.iter().enumerate() {
            let alone = monitor(r.expr.clone(), &rho);
            for report in [&parallel.requirements[k], &sequential.requirements[k]] {
                prop_assert_eq!(&report.name, &r.name);
                prop_assert_eq!(report.verdict, alone.verdict);
                prop_assert_eq!(report.violation_time, alone.violation_time);
                prop_assert_eq!(report.events, len);
            }
        }
        prop_assert_eq!(
            parallel.summary.violated,
            parallel.requirements.iter().filter(|r| r.verdict == Verdict::Violated).count()
        );
    }
}

#[test]
fn finish_is_never_inconclusive() {
    for seed in 0..2000u64 {
        let e = FormulaGen::new(seed, &ATOMS).expr(4);
        let rho = random_trace(seed, 1 + (seed % 8) as usize, &ATOMS);
        let mut m = Monitor::new(requirement(e));
        for ev in rho.events() {
            m.feed(ev).unwrap();
        }
        assert!(m.finish().unwrap().is_conclusive());
    }
}
