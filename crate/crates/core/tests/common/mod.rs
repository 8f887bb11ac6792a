use gdarb::catalog::{CatalogEntry, Params};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRunner};

/// Deterministic runner shared by the property tests.
pub fn runner() -> TestRunner {
    TestRunner::new(Config { rng_algorithm: RngAlgorithm::ChaCha, ..Config::default() })
}

/// One schema-valid parameter draw from the sampling ranges of `entry`.
pub fn draw(runner: &mut TestRunner, entry: &CatalogEntry) -> Params {
    let values: Vec<(&str, f64)> = entry
        .params
        .iter()
        .map(|p| {
            let (a, b) = p.sample;
            let v = if p.integer {
                (a as i64..=b as i64).new_tree(runner).unwrap().current() as f64
            } else {
                (a..b).new_tree(runner).unwrap().current()
            };
            (p.name, v)
        })
        .collect();
    entry.resolve(values).unwrap()
}
