use netfrag_core::substrate::{init_weight_field, Image, InitMode, RngStream, Sheet};
use proptest::prelude::*;

fn mode(choice: u8, bias: f64) -> InitMode {
    match choice % 3 {
        0 => InitMode::UniformNoise,
        1 => InitMode::PolarityBiased { bias },
        _ => InitMode::Identity,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn node_ids_are_a_bijection(rows in 1usize..20, cols in 1usize..20, features in 1usize..4) {
        let sheet = Sheet::new(rows, cols, features).unwrap();
        for id in 0..sheet.node_count() {
            let (r, c) = sheet.coords(id);
            prop_assert!(r < rows && c < cols);
            prop_assert_eq!(sheet.node_id(r, c), id);
        }
        for unit in 0..sheet.unit_count() {
            let (node, f) = sheet.unit_parts(unit);
            prop_assert_eq!(sheet.unit_id(node, f), unit);
        }
    }

    #[test]
    fn initial_fields_meet_the_budget(
        side in 2usize..9,
        choice in any::<u8>(),
        bias in 0.0f64..1.0,
        budget in 0.1f64..10.0,
        noise in 0.0f64..0.99,
        seed in any::<u64>(),
    ) {
        let sheet = Sheet::new(side, side, 1).unwrap();
        let field = init_weight_field(sheet, sheet, mode(choice, bias), budget, noise, &mut RngStream::new(seed, 0)).unwrap();
        for post in 0..field.post_units() {
            prop_assert!((field.incoming_sum(post) - budget).abs() <= 1e-9 * budget);
        }
    }

    #[test]
    fn draws_stay_in_range(seed in any::<u64>(), stream in any::<u64>(), n in 1usize..1000) {
        let mut rng = RngStream::new(seed, stream);
        for _ in 0..50 {
            prop_assert!(rng.draw_index(n) < n);
            let u = rng.draw_uniform();
            prop_assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn crop_matches_direct_indexing(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>(), a in 0usize..12, b in 0usize..12) {
        let mut rng = RngStream::new(seed, 1);
        let image = Image::from_fn(rows, cols, |_, _| rng.draw_uniform()).unwrap();
        let (top, left) = (a % rows, b % cols);
        let (h, w) = (rows - top, cols - left);
        let crop = image.crop(top, left, h, w).unwrap();
        for r in 0..h {
            for c in 0..w {
                prop_assert_eq!(crop.get(r, c), image.get(top + r, left + c));
            }
        }
    }
}
