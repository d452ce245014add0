use std::collections::{BTreeSet, VecDeque};

use netfrag_core::fragments::settle::support;
use netfrag_core::fragments::{
    coherent_components, lateral_learn, library_from_str, library_to_string, settle_fragments, CorticalField,
    FragmentConfig, Member, NetFragment, ThresholdSchedule,
};
use netfrag_core::fragments::library::sorted_jaccard;
use netfrag_core::harness::{generate_texture_mosaic, TextureKind};
use netfrag_core::substrate::{ActivityState, Image, RngStream, Sheet, WeightField};
use proptest::prelude::*;

/// Random lateral field on `sheet` with weights only inside `radius`.
fn random_field(sheet: Sheet, radius: f64, density: f64, rng: &mut RngStream) -> CorticalField {
    let mut lateral = WeightField::empty_lateral(sheet);
    let probe = CorticalField::new(sheet, radius).unwrap();
    for a in 0..sheet.unit_count() {
        for b in 0..sheet.unit_count() {
            if a != b && probe.within_radius(a, b) && rng.draw_uniform() < density {
                lateral.set_weight(a, b, rng.draw_uniform()).unwrap();
            }
        }
    }
    CorticalField::from_lateral(lateral, radius).unwrap()
}

/// Breadth-first components over the undirected graph joining two members
/// whose stronger directed weight reaches `w`; sorted by size, then lowest id.
fn bfs_components(units: &[usize], field: &CorticalField, w: f64) -> Vec<Vec<usize>> {
    let members: BTreeSet<usize> = units.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in &members {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &members {
                let linked = field.weight(u, v).max(field.weight(v, u)) >= w;
                if v != u && linked && seen.insert(v) {
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

fn small_corpus(seed: u64, n: usize) -> Vec<Image> {
    let mut rng = RngStream::new(seed, 11);
    (0..n)
        .map(|i| generate_texture_mosaic(TextureKind::ALL[i % 4], 16, 0.1, &mut rng).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn components_match_breadth_first_oracle(
        side in 2usize..7,
        features in 1usize..3,
        seed in any::<u64>(),
        density in 0.05f64..0.6,
        w in 0.0f64..1.0,
        keep in 0.1f64..1.0,
    ) {
        let sheet = Sheet::new(side, side, features).unwrap();
        let mut rng = RngStream::new(seed, 2);
        let field = random_field(sheet, 1.5, density, &mut rng);
        let units: Vec<usize> = (0..sheet.unit_count()).filter(|_| rng.draw_uniform() < keep).collect();
        let net = coherent_components(&units, &field, w);
        prop_assert_eq!(net.components, bfs_components(&units, &field, w));
    }

    #[test]
    fn settling_shrinks_terminates_and_is_binary(
        side in 3usize..7,
        seed in any::<u64>(),
        density in 0.1f64..0.9,
        theta0 in 0.05f64..0.3,
    ) {
        let sheet = Sheet::new(side, side, 2).unwrap();
        let mut rng = RngStream::new(seed, 5);
        let field = random_field(sheet, 2.0, density, &mut rng);
        let drive: Vec<f64> = (0..sheet.unit_count()).map(|_| (rng.draw_uniform() - 0.4).max(0.0)).collect();
        let initial = ActivityState::from_values(sheet, drive.clone()).unwrap();
        let schedule = ThresholdSchedule { theta0, ..ThresholdSchedule::default() };
        let out = settle_fragments(&initial, &field, &schedule).unwrap();
        prop_assert!(out.sizes.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(out.steps() <= initial.active_set().len() + schedule.steps_to_cap());
        let mut member = vec![false; sheet.unit_count()];
        out.stable.iter().for_each(|&u| member[u] = true);
        for &u in &out.stable {
            let s = support(u, &drive, &member, &field, schedule.lambda);
            prop_assert!(s >= schedule.theta_max - 1e-12, "stable unit {} support {}", u, s);
        }
        if out.steps() < schedule.max_steps {
            for u in initial.active_set().into_iter().filter(|&u| !member[u]) {
                let s = support(u, &drive, &member, &field, schedule.lambda);
                prop_assert!(s < schedule.theta_max + 1e-12, "silenced unit {} support {}", u, s);
            }
        }
    }

    #[test]
    fn sorted_jaccard_matches_set_arithmetic(
        a in proptest::collection::btree_set(0usize..40, 0..20),
        b in proptest::collection::btree_set(0usize..40, 0..20),
    ) {
        let (va, vb): (Vec<usize>, Vec<usize>) = (a.iter().copied().collect(), b.iter().copied().collect());
        let union = a.union(&b).count();
        let expected = if union == 0 { 1.0 } else { a.intersection(&b).count() as f64 / union as f64 };
        prop_assert!((sorted_jaccard(&va, &vb) - expected).abs() < 1e-15);
    }

    #[test]
    fn library_text_round_trips(
        fragments in proptest::collection::vec(
            (proptest::collection::btree_set((0usize..6, 0usize..6, 0usize..10), 1..8), 1usize..50, 0usize..20, 0usize..20),
            0..5,
        )
    ) {
        let library: Vec<NetFragment> = fragments
            .into_iter()
            .enumerate()
            .map(|(id, (members, count, r, c))| {
                let members: Vec<Member> = members.into_iter().map(|(row, col, feature)| Member { row, col, feature }).collect();
                let edges = (1..members.len()).map(|i| (i - 1, i)).collect();
                NetFragment { id, members, edges, count, occurrences: Vec::new(), origin: (r, c) }
            })
            .collect();
        let back = library_from_str(&library_to_string(&library)).unwrap();
        prop_assert_eq!(back, library);
    }
}

#[test]
fn learning_respects_locality_and_budget_after_every_image() {
    let config = FragmentConfig::default();
    let corpus = small_corpus(9, 12);
    for n in [1, 5, 12] {
        let field = lateral_learn(&corpus[..n], &config).unwrap();
        let lateral = field.lateral();
        for (post, pre, w) in lateral.triples() {
            assert!(field.within_radius(post, pre), "link {pre} -> {post} beyond radius");
            assert!(w > 0.0);
        }
        for u in 0..lateral.post_units() {
            let sum = lateral.incoming_sum(u);
            assert!(sum == 0.0 || (sum - config.budget).abs() <= 1e-9, "unit {u} sum {sum}");
            assert!(lateral.fan_in(u) <= config.fan_in_cap);
        }
    }
}
