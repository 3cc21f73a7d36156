use std::collections::BTreeSet;

use asph_core::kernel::build_g_2d;
use asph_core::{build_neighbor_lists, build_neighbor_lists_mirrored, MirrorBox, ParticleSet, SpatialVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(seed: u64, n: usize, anisotropic: bool) -> ParticleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<SpatialVector> =
        (0..n).map(|_| SpatialVector::new_2d(rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5))).collect();
    let smoothing = (0..n)
        .map(|_| {
            let h1 = rng.gen_range(0.02..0.08);
            let h2 = if anisotropic { rng.gen_range(0.02..0.08) } else { h1 };
            build_g_2d(h1, h2, rng.gen_range(0.0..std::f64::consts::PI)).unwrap()
        })
        .collect();
    ParticleSet::new(2, positions, vec![1.0 / n as f64; n], smoothing).unwrap()
}

fn brute_force(ps: &ParticleSet) -> BTreeSet<(usize, usize)> {
    let g = ps.smoothing();
    let mut pairs = BTreeSet::new();
    for i in 0..ps.len() {
        for j in 0..ps.len() {
            let r = ps.position(i) - ps.position(j);
            if i != j && g[i].eta(&r).min(g[j].eta(&r)) < 2.0 {
                pairs.insert((i, j));
            }
        }
    }
    pairs
}

#[test]
fn cell_search_matches_brute_force() {
    for (seed, aniso) in [(1, false), (2, true), (3, true)] {
        let ps = random_cloud(seed, 400, aniso);
        let nl = build_neighbor_lists(&ps);
        let found: BTreeSet<(usize, usize)> =
            (0..ps.len()).flat_map(|i| nl.neighbors(i).iter().map(move |nb| (i, nb.j))).collect();
        assert_eq!(found, brute_force(&ps));
        assert_eq!(nl.total_pairs(), found.len());
    }
}

#[test]
fn mirrored_lists_contain_the_interior_lists() {
    let ps = random_cloud(4, 300, true);
    let plain = build_neighbor_lists(&ps);
    let mirrored = build_neighbor_lists_mirrored(&ps, &MirrorBox::new(&[0.0, 0.0], &[1.0, 0.5]));
    for i in 0..ps.len() {
        let inner: Vec<usize> = mirrored.neighbors(i).iter().filter(|nb| !nb.mirrored).map(|nb| nb.j).collect();
        let expected: Vec<usize> = plain.neighbors(i).iter().map(|nb| nb.j).collect();
        assert_eq!(inner, expected);
        for nb in mirrored.neighbors(i).iter().filter(|nb| nb.mirrored) {
            assert!(nb.kernel.value > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn neighbor_relation_is_symmetric(seed in 0u64..1000) {
        let ps = random_cloud(seed, 150, true);
        let nl = build_neighbor_lists(&ps);
        for i in 0..ps.len() {
            for nb in nl.neighbors(i) {
                let back = nl.neighbors(nb.j).iter().find(|m| m.j == i);
                prop_assert!(back.is_some());
                let back = back.unwrap();
                prop_assert_eq!(back.r_ij, -nb.r_ij);
                prop_assert_eq!(back.kernel.value, nb.kernel.value);
            }
        }
    }
}
