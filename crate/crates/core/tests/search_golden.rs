//! Exhaustive search results for small n, pinned as golden files.
//!
//! Set `ALLOWSEQ_BLESS=1` to rewrite the files after an intended change.

use std::path::PathBuf;

use allowseq_core::engine::verify_trace;
use allowseq_core::format::parse_trace;
use allowseq_core::oracle::{reachable_states, search_best_deviation, SearchMode, DEFAULT_SEARCH_LIMIT};
use num::rational::Ratio;

fn golden(n: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/search_n{n}.txt"))
}

fn parse_ratio(s: &str) -> Ratio<i64> {
    let (p, q) = s.split_once('/').unwrap();
    Ratio::new(p.parse().unwrap(), q.parse().unwrap())
}

#[test]
fn golden_files_match() {
    let bless = std::env::var_os("ALLOWSEQ_BLESS").is_some();
    for n in 4..=7 {
        let res = search_best_deviation(n, SearchMode::SingleFlip, DEFAULT_SEARCH_LIMIT).unwrap();
        let text = res.to_text().unwrap();
        let path = golden(n);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
        }
        let stored = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(stored, text, "n={n}");

        let (header, body) = stored.split_once('\n').unwrap();
        let fields: Vec<&str> = header.split(' ').collect();
        assert_eq!(fields[0].parse::<usize>().unwrap(), n);
        let best = parse_ratio(fields[1]);
        let witness = parse_trace(body).unwrap();
        let rep = verify_trace(&witness);
        assert!(rep.allowable && rep.reaches_reversal, "n={n}");
        assert_eq!(rep.min_deviation, Some(best), "n={n}");
        assert_eq!(fields[2].parse::<usize>().unwrap(), reachable_states(n));
    }
}

#[test]
fn forced_small_cases() {
    let r = search_best_deviation(2, SearchMode::SingleFlip, DEFAULT_SEARCH_LIMIT).unwrap();
    assert_eq!(r.best_min_deviation, Ratio::from_integer(0));
    let r = search_best_deviation(3, SearchMode::SingleFlip, DEFAULT_SEARCH_LIMIT).unwrap();
    assert_eq!(r.best_min_deviation, Ratio::new(1, 2));
    let rep = verify_trace(&r.witness);
    assert!(rep.allowable && rep.reaches_reversal);
}

#[test]
fn multi_flip_never_worse() {
    for n in 2..=6 {
        let s = search_best_deviation(n, SearchMode::SingleFlip, DEFAULT_SEARCH_LIMIT).unwrap();
        let m = search_best_deviation(n, SearchMode::MultiFlip, DEFAULT_SEARCH_LIMIT).unwrap();
        assert!(m.best_min_deviation >= s.best_min_deviation);
    }
}

#[test]
fn reachable_counts_are_all_permutations_for_tiny_n() {
    // any adjacent transposition of an increasing pair is valid, so every
    // permutation is reachable
    for (n, f) in [(2, 2), (3, 6), (4, 24), (5, 120), (6, 720)] {
        assert_eq!(reachable_states(n), f);
    }
}

#[test]
fn guard_refuses_large_n() {
    assert!(search_best_deviation(9, SearchMode::SingleFlip, DEFAULT_SEARCH_LIMIT).is_err());
}
