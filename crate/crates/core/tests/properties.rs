//! Property tests: each public invariant against an independent oracle.

use allowseq_core::engine::{verify_trace, Span, Trace, TraceBuilder};
use allowseq_core::format::{format_points, parse_points, parse_trace, trace_to_string};
use allowseq_core::geom::{circular_sequence, deviation_imbalance_link, line_imbalances, orientation, PointSet};
use allowseq_core::lemmas::decompose_balanced;
use allowseq_core::oracle::{allowability_bruteforce, sample_balanced_block, trace_states, width_dp};
use allowseq_core::seq::{
    greedy_partition, is_decreasing, is_r_balanced, max_balance, width_greedy, Block, CentredSequence, Flip, Window,
};
use num::{BigRational, Zero};
use proptest::prelude::*;

fn distinct_values(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    (0..=max_len).prop_flat_map(|n| Just((1..=n as i64).collect::<Vec<_>>()).prop_shuffle())
}

fn signed_block(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    (distinct_values(max_len), prop::collection::vec(any::<bool>(), max_len))
        .prop_map(|(v, s)| v.iter().zip(&s).map(|(&x, &neg)| if neg { -x } else { x }).collect())
}

fn ratio() -> impl Strategy<Value = BigRational> {
    prop_oneof![Just((1, 1)), Just((2, 1)), Just((7, 2)), Just((5, 1)), Just((0, 1)), Just((1, 3))]
        .prop_map(|(p, q)| BigRational::new(p.into(), q.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flip_matches_index_arithmetic(v in distinct_values(30), a in 0usize..30, len in 1usize..30, lo in -15i64..15) {
        prop_assume!(!v.is_empty());
        let a = a % v.len();
        let b = (a + len - 1).min(v.len() - 1);
        let s = CentredSequence::new(lo, v.clone()).unwrap();
        let f = Flip::new(lo + a as i64, lo + b as i64).unwrap();
        let got = s.apply_flip(&f).unwrap();
        for i in 0..v.len() {
            let src = if i >= a && i <= b { a + b - i } else { i };
            prop_assert_eq!(got.values()[i], v[src]);
        }
        prop_assert_eq!(got.apply_flip(&f).unwrap(), s);
    }

    #[test]
    fn width_greedy_matches_dp(v in distinct_values(200)) {
        let b = Block::new(v.clone()).unwrap();
        let (w, part) = width_greedy(&b);
        prop_assert_eq!(w, width_dp(&b));
        let mut seen = vec![false; v.len()];
        for chain in &part.chains {
            let vals: Vec<i64> = chain.iter().map(|&i| v[i]).collect();
            prop_assert!(vals.windows(2).all(|p| p[0] < p[1]));
            for &i in chain {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        let pw = greedy_partition(&v).prefix_widths(v.len());
        for m in [1, v.len() / 2, v.len()] {
            if m >= 1 && m <= v.len() {
                prop_assert_eq!(pw[m - 1], width_dp(&Block::new(v[..m].to_vec()).unwrap()));
            }
        }
    }

    #[test]
    fn max_balance_is_tight(v in signed_block(40), r in ratio()) {
        let b = Block::new(v).unwrap();
        let rep = is_r_balanced(&b, &r).unwrap();
        match max_balance(&b).unwrap() {
            None => prop_assert!(!rep.balanced),
            Some(None) => prop_assert!(rep.balanced),
            Some(Some(m)) => {
                prop_assert_eq!(rep.balanced, r <= m);
                prop_assert!(is_r_balanced(&b, &m).unwrap().balanced);
            }
        }
    }

    #[test]
    fn sampled_blocks_decompose(size in 1usize..120, r in ratio(), seed in any::<u64>()) {
        let b = sample_balanced_block(size, &r, seed).unwrap();
        prop_assert_eq!(&b, &sample_balanced_block(size, &r, seed).unwrap());
        prop_assert!(is_r_balanced(&b, &r).unwrap().balanced);
        let dec = decompose_balanced(&b, &r).unwrap();
        let floor_r = r.floor().to_integer();
        let pos: Vec<i64> = b.values().iter().copied().filter(|&x| x > 0).collect();
        let width = width_dp(&Block::new(pos.clone()).unwrap());
        prop_assert_eq!(dec.k(), width.max(1));
        let mut last_neg = i64::MIN;
        for c in &dec.blocks {
            prop_assert!(c.is_increasing());
            let negs: Vec<i64> = c.values().iter().copied().filter(|&x| x < 0).collect();
            if !pos.is_empty() {
                prop_assert!(BigRational::from_integer((negs.len() as i64).into()) >= BigRational::from_integer(floor_r.clone()));
            }
            for x in negs {
                prop_assert!(x > last_neg);
                last_neg = x;
            }
        }
        prop_assert!(dec.tail.values().iter().all(|&x| x < 0 && x > last_neg) || dec.tail.is_empty());
        let mut cur = b.values().to_vec();
        for f in &dec.schedule {
            let (a, z) = ((f.c - 1) as usize, (f.d - 1) as usize);
            prop_assert!(cur[a] < cur[z]);
            cur.swap(a, z);
        }
        prop_assert_eq!(cur, dec.concatenation());
    }

    #[test]
    fn sort_region_yields_decreasing(v in distinct_values(25), t in 0i64..3) {
        let n = v.len() as i64;
        let s = CentredSequence::new(t + 1, v).unwrap();
        let mut b = TraceBuilder::new(s, Window::new(t).unwrap());
        b.sort_region_decreasing(Span::new(t + 1, n)).unwrap();
        prop_assert!(is_decreasing(b.state()));
        let rep = verify_trace(&b.finish());
        prop_assert!(rep.all_valid);
        prop_assert!(rep.flip_count as i64 <= n * n);
    }

    #[test]
    fn block_swap_moves_blocks(l in 0usize..10, r in 0usize..10, t in 0i64..2) {
        let lo = t + 1;
        let left: Vec<i64> = (1..=l as i64).collect();
        let right: Vec<i64> = (l as i64 + 1..=(l + r) as i64).collect();
        let mut v = left.clone();
        v.extend(&right);
        prop_assume!(!v.is_empty());
        let mut b = TraceBuilder::new(CentredSequence::new(lo, v).unwrap(), Window::new(t).unwrap());
        b.swap_adjacent_blocks(Span::new(lo, l as i64), Span::new(lo + l as i64, r as i64)).unwrap();
        let mut want = right.clone();
        want.extend(&left);
        prop_assert_eq!(b.state(), want.as_slice());
        prop_assert!(verify_trace(&b.finish()).all_valid);
    }

    #[test]
    fn bruteforce_agrees_with_verifier(
        n in 2usize..9,
        raw in prop::collection::vec(prop::collection::vec((0usize..8, 2usize..5), 1..3), 1..12),
    ) {
        let mut steps = Vec::new();
        for step in raw {
            let fs: Vec<Flip> = step
                .into_iter()
                .filter_map(|(a, len)| {
                    let a = a % n;
                    let b = a + len - 1;
                    (b < n).then(|| Flip { c: a as i64 + 1, d: b as i64 + 1 })
                })
                .collect();
            let mut fs2: Vec<Flip> = Vec::new();
            for f in fs {
                if fs2.iter().all(|g| !g.overlaps(&f)) {
                    fs2.push(f);
                }
            }
            if !fs2.is_empty() {
                steps.push(fs2);
            }
        }
        prop_assume!(!steps.is_empty());
        let tr = Trace::from_parts(CentredSequence::identity(1, n as i64).unwrap(), Window::new(0).unwrap(), steps, vec![]).unwrap();
        let init: Vec<i64> = (1..=n as i64).collect();
        prop_assert_eq!(allowability_bruteforce(&init, &trace_states(&tr)), verify_trace(&tr).allowable);
    }

    #[test]
    fn trace_text_round_trips(v in distinct_values(12), picks in prop::collection::vec(0usize..12, 0..20), t in 0i64..2) {
        prop_assume!(v.len() >= 2);
        let lo = -(v.len() as i64) / 2;
        let mut b = TraceBuilder::new(CentredSequence::new(lo, v).unwrap(), Window::new(t).unwrap());
        b.open("fuzz");
        for p in picks {
            let c = lo + (p % (b.state().len() - 1)) as i64;
            let _ = b.flip(Flip { c, d: c + 1 });
        }
        b.close();
        let tr = b.finish();
        let text = trace_to_string(&tr).unwrap();
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(trace_to_string(&back).unwrap(), text);
        prop_assert_eq!(back.flips(), tr.flips());
        prop_assert_eq!(back.events(), tr.events());
    }

    #[test]
    fn points_round_trip(pts in prop::collection::vec((-50i64..50, 1i64..7, -50i64..50, 1i64..7), 0..15)) {
        let ps: Vec<(BigRational, BigRational)> = pts
            .iter()
            .map(|&(a, b, c, d)| (BigRational::new(a.into(), b.into()), BigRational::new(c.into(), d.into())))
            .collect();
        let text = format_points(&ps);
        prop_assert_eq!(&parse_points(&text).unwrap(), &ps);
        prop_assert_eq!(format_points(&parse_points(&text).unwrap()), text);
    }
}

fn general_position(n: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-40i64..40, -40i64..40), n).prop_filter("general position", |pts| {
        let ps = match PointSet::from_integers(pts) {
            Ok(ps) => ps,
            Err(_) => return false,
        };
        let m = pts.len();
        for a in 1..=m {
            for b in a + 1..=m {
                for c in b + 1..=m {
                    if orientation(ps.point(a), ps.point(b), ps.point(c)) == 0 {
                        return false;
                    }
                }
            }
        }
        true
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn circular_sequences_are_allowable(pts in (2usize..=10).prop_flat_map(general_position)) {
        let ps = PointSet::from_integers(&pts).unwrap();
        let n = ps.len();
        let hp = circular_sequence(&ps).unwrap();
        let rep = verify_trace(&hp.trace());
        prop_assert!(rep.allowable && rep.reaches_reversal);
        prop_assert_eq!(hp.transpositions(), n * (n - 1) / 2);
        prop_assert!(deviation_imbalance_link(&ps).unwrap());
        let (recs, _) = line_imbalances(&ps).unwrap();
        for r in recs {
            prop_assert_eq!(r.left + r.right + r.labels.len(), n);
            prop_assert_eq!(r.imbalance() % 2, n % 2);
        }
    }

    #[test]
    fn sequence_independent_of_translation(pts in (2usize..=8).prop_flat_map(general_position), dx in -9i64..9, dy in -9i64..9) {
        let a = circular_sequence(&PointSet::from_integers(&pts).unwrap()).unwrap();
        let moved: Vec<(i64, i64)> = pts.iter().map(|&(x, y)| (x + dx, y + dy)).collect();
        let b = circular_sequence(&PointSet::from_integers(&moved).unwrap()).unwrap();
        prop_assert_eq!(a.initial, b.initial);
        prop_assert_eq!(a.events, b.events);
    }
}

#[test]
fn enumeration_width_matches_for_small_blocks() {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let n = rng.gen_range(0..=10usize);
        let mut v: Vec<i64> = (1..=n as i64).collect();
        v.shuffle(&mut rng);
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let sub: Vec<i64> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| v[i]).collect();
            if sub.windows(2).all(|p| p[0] > p[1]) {
                best = best.max(sub.len());
            }
        }
        let b = Block::new(v).unwrap();
        assert_eq!(width_dp(&b), best);
        assert_eq!(width_greedy(&b).0, best);
    }
}

#[test]
fn zero_ratio_accepts_any_increasing_negatives() {
    let b = Block::new(vec![5, -3, 9, 8, -1, 7]).unwrap();
    assert!(is_r_balanced(&b, &BigRational::zero()).unwrap().balanced);
}
