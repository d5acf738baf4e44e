//! Acceptance criteria: one PASS/FAIL line each, non-zero exit on any failure.
//!
//! `cargo test --test acceptance -- 4 6` runs a subset.

use fbmstcn::acceptance;

fn main() {
    let ids: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids = if ids.is_empty() {
        (1..=10).collect()
    } else {
        ids
    };
    let dir = tempfile::tempdir().expect("scratch directory");
    let mut failed = 0;
    for id in ids {
        let c = acceptance::run(id, dir.path());
        println!("{}", c.line());
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
