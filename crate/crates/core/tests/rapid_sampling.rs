mod common;

use overlay_core::graph::{make_benign, BenignParams};
use overlay_core::metrics::{endpoint_histogram, Sampler};
use overlay_core::sampling::{sample_walks, stitch_round, Schedule, StitchToken};
use overlay_core::{KnowledgeGraph, MultiGraph};
use proptest::prelude::*;

/// Benign version of the 5-node graph `0-1-2-3-4` plus chord `{1, 3}`.
fn five_node() -> MultiGraph {
    let g = KnowledgeGraph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]).unwrap();
    let params = BenignParams {
        ell: 8,
        delta: 16,
        lambda: 2,
        evolutions: 1,
    };
    make_benign(&g, &params).unwrap()
}

#[test]
fn survivors_follow_the_halving_schedule() {
    let g = five_node();
    for ell in [4usize, 8, 16] {
        let m0 = 400;
        let r = sample_walks(&g, &[m0; 5], ell, ell as u64, false);
        // Two warm-up steps, then every stitch round halves the tokens.
        let expected = (5 * m0 * 2 / ell) as f64;
        let got = r.survivors() as f64;
        assert!((got / expected - 1.0).abs() < 0.1, "ell {ell}: {got} vs {expected}");
    }
}

#[test]
fn stitched_endpoints_match_matrix_power() {
    let g = five_node();
    let hist = endpoint_histogram(&g, 8, 0, 100_000, Sampler::Stitched, 77);
    let tv = common::tv(&hist, &common::walk_power(&g, 8)[0]);
    assert!(tv <= 0.05, "tv {tv}");
}

#[test]
fn paired_survivors_collide_like_independent_walks() {
    let g = five_node();
    let ell = 8;
    let (mut same, mut pairs) = (0usize, 0usize);
    let mut shuffler = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    for seed in 0..200 {
        let r = sample_walks(&g, &[200; 5], ell, seed, false);
        // Reports arrive grouped by endpoint, so pair survivors at random.
        let mut walks = r.per_origin[0].clone();
        rand::seq::SliceRandom::shuffle(walks.as_mut_slice(), &mut shuffler);
        for pair in walks.chunks_exact(2) {
            pairs += 1;
            same += usize::from(pair[0].endpoint == pair[1].endpoint);
        }
    }
    let (mut ind_same, mut ind_pairs) = (0usize, 0usize);
    let slots = g.slot_table();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    for _ in 0..pairs {
        let mut end = [0usize; 2];
        for e in &mut end {
            let mut v = 0;
            for _ in 0..ell {
                v = slots[v][rand::Rng::random_range(&mut rng, 0..slots[v].len())];
            }
            *e = v;
        }
        ind_pairs += 1;
        ind_same += usize::from(end[0] == end[1]);
    }
    let q1 = same as f64 / pairs as f64;
    let q2 = ind_same as f64 / ind_pairs as f64;
    let se = (q1 * (1.0 - q1) / pairs as f64 + q2 * (1.0 - q2) / ind_pairs as f64).sqrt();
    assert!((q1 - q2).abs() <= 2.0 * se, "stitched {q1} vs independent {q2}, se {se}");
}

#[test]
fn stitch_round_consumes_each_blue_once() {
    let tokens: Vec<Vec<StitchToken>> = (0..6)
        .map(|v| (0..7).map(|_| StitchToken { covered: 2, ..StitchToken::new(v, false) }).collect())
        .collect();
    let out = stitch_round(tokens, 3, 0);
    let total: usize = out.iter().map(Vec::len).sum();
    // Seven tokens per node: one dropped, three stitched pairs.
    assert_eq!(total, 6 * 3);
    assert!(out.iter().flatten().all(|t| t.covered == 4));
}

#[test]
fn arbitrary_lengths_round_up() {
    assert_eq!(Schedule::new(6).ell, 8);
    assert_eq!(Schedule::new(8).ell, 8);
    assert_eq!(Schedule::new(9).ell, 16);
    assert_eq!(Schedule::new(16).stitches, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn survivors_are_valid_full_length_walks(
        n in 2usize..20,
        extra in 0usize..10,
        log_ell in 0u32..5,
        starts in 1usize..40,
        seed in any::<u64>(),
    ) {
        let g = common::connected_graph(n, extra, seed);
        let params = BenignParams::desk(n, g.max_degree() * 2);
        let b = make_benign(&g, &params).unwrap();
        let ell = 1usize << log_ell;
        let r = sample_walks(&b, &vec![starts; n], ell, seed, true);
        for (origin, walks) in r.per_origin.iter().enumerate() {
            for w in walks {
                let walk = w.walk.as_ref().unwrap();
                prop_assert_eq!(walk.len(), ell + 1);
                prop_assert_eq!(walk[0], origin);
                prop_assert_eq!(*walk.last().unwrap(), w.endpoint);
                for h in walk.windows(2) {
                    prop_assert!(b.multiplicity(h[0], h[1]) > 0 || (h[0] == h[1] && b.loops(h[0]) > 0));
                }
            }
        }
    }
}
