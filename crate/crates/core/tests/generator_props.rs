//! Dataset generation invariants over seeds and limits.

use std::collections::BTreeSet;

use proptest::prelude::*;

use flowbench::generator::{
    dataset_stats, generate_dataset, programs_to_jsonl, read_dataset, satisfies_progress_rule,
    write_dataset, GenerationConfig,
};
use flowbench::oracle::{check_termination, DEFAULT_FUEL};
use flowbench::program::{validate_program, ComplexityLevel, StructureCategory};

fn config(seed: u64, limit: usize, cats: Vec<StructureCategory>) -> GenerationConfig {
    GenerationConfig {
        categories: cats,
        limit,
        seed,
        ..GenerationConfig::default()
    }
}

fn categories() -> impl Strategy<Value = Vec<StructureCategory>> {
    prop::sample::subsequence(StructureCategory::ALL.to_vec(), 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deterministic_valid_and_limited(seed in any::<u64>(), limit in 1usize..15, cats in categories()) {
        let cfg = config(seed, limit, cats.clone());
        let a = generate_dataset(&cfg).unwrap();
        let b = generate_dataset(&cfg).unwrap();
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
        prop_assert_eq!(&a.fingerprint, &b.fingerprint);

        let ids: Vec<&str> = a.programs.iter().map(|p| p.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(&ids, &sorted);

        for c in &cats {
            let n = a.programs.iter().filter(|p| p.category == *c).count();
            prop_assert!(n >= 1 && n <= limit, "{c}: {n}");
        }
        for p in &a.programs {
            prop_assert!(cats.contains(&p.category));
            prop_assert!(validate_program(p).is_valid());
            prop_assert!(satisfies_progress_rule(p));
            for id in p.binding.values() {
                prop_assert!(cfg.catalog.get(id).unwrap().level() <= ComplexityLevel::Mid);
            }
            prop_assert!(check_termination(p, -100..=100, 64, DEFAULT_FUEL).passed());
        }
        let sum: f64 = a.stats.categories.iter().map(|s| s.coverage).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn seed_changes_only_the_sample(seed in any::<u64>()) {
        let full = generate_dataset(&config(0, 10_000, vec![StructureCategory::Branch])).unwrap();
        let part = generate_dataset(&config(seed, 5, vec![StructureCategory::Branch])).unwrap();
        let all: BTreeSet<&str> = full.programs.iter().map(|p| p.id.as_str()).collect();
        prop_assert!(part.programs.iter().all(|p| all.contains(p.id.as_str())));
    }
}

#[test]
fn dataset_round_trips_through_file() {
    let d = generate_dataset(&config(7, 10, StructureCategory::ALL.to_vec())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dataset.jsonl");
    write_dataset(&path, &d.programs).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, d.programs);
    assert_eq!(programs_to_jsonl(&back), d.to_jsonl());
    assert_eq!(dataset_stats(&back).unwrap(), d.stats);
}

#[test]
fn single_category_has_full_coverage() {
    let d = generate_dataset(&config(42, 100, vec![StructureCategory::Sequence])).unwrap();
    assert_eq!(d.stats.categories.len(), 1);
    assert_eq!(d.stats.categories[0].coverage, 1.0);
}

#[test]
fn max_level_gates_catalog_entries() {
    let cfg = GenerationConfig {
        max_level: ComplexityLevel::Low,
        ..config(42, 50, StructureCategory::ALL.to_vec())
    };
    let d = generate_dataset(&cfg).unwrap();
    assert!(!d.programs.is_empty());
    for p in &d.programs {
        for id in p.binding.values() {
            assert_eq!(
                cfg.catalog.get(id).unwrap().level(),
                ComplexityLevel::Low,
                "{}",
                p.id
            );
        }
    }
}
