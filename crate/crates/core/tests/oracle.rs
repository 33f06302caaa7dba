mod common;

use act_core::pipeline::{prune_by_reachability, symmetric_difference};

#[test]
fn hundred_random_instances_match_the_oracles() {
    for seed in 0..100 {
        common::check_oracle_equivalence(seed).unwrap();
    }
}

#[test]
fn instances_exercise_both_sides_and_pruning() {
    // Guards against a generator that makes the equivalence check vacuous.
    let (mut missing, mut additional, mut pruned) = (0, 0, 0);
    for seed in 0..100 {
        let (before, incident) = common::oracle_instance(seed);
        let Ok(diff) = symmetric_difference(&before, &incident) else {
            continue;
        };
        missing += usize::from(!diff.missing.is_empty());
        additional += usize::from(!diff.additional.is_empty());
        pruned += usize::from(prune_by_reachability(&diff, &before, &incident).diff.len() < diff.len());
    }
    assert!(missing >= 30, "only {missing} instances with missing pairs");
    assert!(additional >= 30, "only {additional} instances with additional pairs");
    assert!(pruned >= 10, "only {pruned} instances where pruning removed something");
}
