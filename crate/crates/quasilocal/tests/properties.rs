//! Property tests: invariants checked across families of random inputs.
//! Heavier constructions draw their randomness from a proptest-chosen seed
//! so failures shrink to a single reproducible seed.

use proptest::prelude::*;
use quasilocal::decompose::{
    decompose_dp_map, decompose_ns_channel, negativity, reconstruct, strategy_counts, Algorithm,
    DecomposeOptions, FactorMode, Objective, QuasiMixture,
};
use quasilocal::duotensor::{to_gpt, to_stochastic, FiducialFrame, QuasiStochasticMatrix};
use quasilocal::model::{is_measure_and_prepare, measure_and_prepare_certificate};
use quasilocal::nonsignalling::ns_report_channel;
use quasilocal::numerics::{
    joint_index, kron_apply, min_l1_affine, solve_affine, split_index, RealMatrix,
};
use quasilocal::theories::{
    build_theory, canonical_table, embed_classical_box, random_affine_columns,
    random_local_channel, random_ns_channel, random_stochastic_matrix, TheoryId,
};
use quasilocal::{Error, GptSystem, PartitionedMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const C2: TheoryId = TheoryId::Classical(2);
const C3: TheoryId = TheoryId::Classical(3);
const GBIT: TheoryId = TheoryId::Gbit;
const QUBIT: TheoryId = TheoryId::Qubit;

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = RealMatrix> {
    prop::collection::vec(-2.0..2.0f64, rows * cols)
        .prop_map(move |v| RealMatrix::from_fn(rows, cols, |r, c| v[r * cols + c]))
}

/// Signed weights normalized to sum exactly to 1.
fn affine_weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, k).prop_filter_map("sum too close to zero", |raw| {
        let total: f64 = raw.iter().sum();
        if total.abs() < 0.3 {
            return None;
        }
        Some(raw.iter().map(|v| v / total).collect())
    })
}

fn convex_weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, k).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|v| v / total).collect()
    })
}

fn combine(basis: &RealMatrix, weights: &[f64]) -> Vec<f64> {
    (0..basis.rows())
        .map(|r| weights.iter().enumerate().map(|(i, w)| w * basis.at(r, i)).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_apply_agrees_with_dense_kron(
        a in matrix_strategy(2, 3),
        b in matrix_strategy(3, 2),
        v in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        let fast = kron_apply(&[&a, &b], &v).unwrap();
        let dense = a.kron(&b).mul_vec(&v).unwrap();
        for (x, y) in fast.iter().zip(dense.iter()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn kron_is_associative(
        a in matrix_strategy(2, 2),
        b in matrix_strategy(2, 3),
        c in matrix_strategy(3, 2),
    ) {
        let left = a.kron(&b).kron(&c);
        let right = a.kron(&b.kron(&c));
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn joint_and_split_index_are_inverse(
        sizes in prop::collection::vec(1..5usize, 1..5),
        raw in 0..10_000usize,
    ) {
        let total: usize = sizes.iter().product();
        let idx = raw % total;
        let digits = split_index(idx, &sizes);
        for (d, s) in digits.iter().zip(sizes.iter()) {
            prop_assert!(d < s);
        }
        prop_assert_eq!(joint_index(&digits, &sizes), idx);
    }

    #[test]
    fn affine_solver_recombines_generated_targets(
        basis in matrix_strategy(3, 5),
        w0 in affine_weights(5),
    ) {
        let target = combine(&basis, &w0);
        let solution = solve_affine(&basis, &target, 1e-7).unwrap();
        prop_assert!(solution.residual_norm <= 1e-7);
        let sum: f64 = solution.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-7);
        let rebuilt = combine(&basis, &solution.weights);
        for (x, y) in rebuilt.iter().zip(target.iter()) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn min_l1_beats_the_generating_weights(
        basis in matrix_strategy(3, 6),
        w0 in affine_weights(6),
    ) {
        let target = combine(&basis, &w0);
        let solution = min_l1_affine(&basis, &target, 1e-7).unwrap();
        prop_assert!(solution.residual_norm <= 1e-7);
        let l1_bound: f64 = w0.iter().map(|w| w.abs()).sum();
        prop_assert!(solution.l1_norm <= l1_bound + 1e-6);
        prop_assert!(solution.l1_norm >= 1.0 - 1e-9);
    }

    #[test]
    fn min_l1_of_convex_targets_is_one(
        basis in matrix_strategy(4, 5),
        w0 in convex_weights(5),
    ) {
        let target = combine(&basis, &w0);
        let solution = min_l1_affine(&basis, &target, 1e-7).unwrap();
        prop_assert!(solution.residual_norm <= 1e-7);
        prop_assert!((solution.l1_norm - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn negativity_matches_its_closed_form(w0 in affine_weights(7)) {
        let value = negativity(&w0).unwrap();
        let l1: f64 = w0.iter().map(|w| w.abs()).sum();
        prop_assert!((value - (l1 - 1.0) / 2.0).abs() <= 1e-12);
        prop_assert!(value >= -1e-12);
        let negative_part: f64 = w0.iter().filter(|w| **w < 0.0).map(|w| -*w).sum();
        prop_assert!((value - negative_part).abs() <= 1e-12);
    }

    #[test]
    fn duotensor_round_trip_on_every_theory(seed in 0..1_000u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for id in [C2, C3, GBIT, QUBIT] {
            let frame = build_theory(&id).unwrap();
            let channel = random_local_channel(&id, &id, &mut rng).unwrap();
            let q = to_stochastic(&channel, &[&frame], &[&frame]).unwrap();
            let back = to_gpt(&q, &[&frame], &[&frame]).unwrap();
            prop_assert!(back.matrix().max_abs_diff(channel.matrix()).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn coordinate_tables_round_trip_the_other_way(seed in 0..1_000u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for id in [GBIT, QUBIT] {
            let frame = build_theory(&id).unwrap();
            let n = frame.size();
            let coords = random_affine_columns(n, n, &mut rng);
            let q = QuasiStochasticMatrix::new(coords.clone()).unwrap();
            let channel = to_gpt(&q, &[&frame], &[&frame]).unwrap();
            let back = to_stochastic(&channel, &[&frame], &[&frame]).unwrap();
            prop_assert!(back.matrix().max_abs_diff(&coords).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn composite_frame_equals_per_party_frames(seed in 0..500u64) {
        let parties = [(GBIT, GBIT), (C2, C2)];
        let map = random_ns_channel(&parties, seed, 0.4).unwrap();
        let f1 = build_theory(&GBIT).unwrap();
        let f2 = build_theory(&C2).unwrap();
        let per_party = to_stochastic(&map, &[&f1, &f2], &[&f1, &f2]).unwrap();

        let composite_frame = FiducialFrame::composite(&[&f1, &f2]).unwrap();
        let composite_system =
            GptSystem::composite(&[f1.system(), f2.system()]).unwrap();
        let fused = PartitionedMap::single_party(
            composite_system.clone(),
            composite_system,
            map.matrix().clone(),
        )
        .unwrap();
        let joint = to_stochastic(&fused, &[&composite_frame], &[&composite_frame]).unwrap();
        prop_assert!(
            joint.matrix().max_abs_diff(per_party.matrix()).unwrap() <= 1e-12
        );
    }

    #[test]
    fn blends_of_non_signalling_channels_stay_non_signalling(
        seed_a in 0..400u64,
        seed_b in 400..800u64,
        lambda in 0.0..1.0f64,
    ) {
        let parties = [(C2, C2), (C2, C2)];
        let a = random_ns_channel(&parties, seed_a, 0.7).unwrap();
        let b = random_ns_channel(&parties, seed_b, 0.2).unwrap();
        let blended = a
            .matrix()
            .scale(lambda)
            .add(&b.matrix().scale(1.0 - lambda))
            .unwrap();
        let frame = build_theory(&C2).unwrap();
        let map = PartitionedMap::new(
            a.in_systems().to_vec(),
            a.out_systems().to_vec(),
            a.parties().to_vec(),
            blended,
        )
        .unwrap();
        let report = ns_report_channel(&map, &[&frame, &frame], 1e-9).unwrap();
        prop_assert!(report.is_ns);
    }

    #[test]
    fn feasible_decomposition_is_sound(seed in 0..200u64, mix in 0.0..1.0f64) {
        let parties = [(C2, C2), (C2, C2)];
        let map = random_ns_channel(&parties, seed, mix).unwrap();
        let frame = build_theory(&C2).unwrap();
        let mixdec = decompose_ns_channel(
            &map,
            &[&frame, &frame],
            &[&frame, &frame],
            &DecomposeOptions::default(),
        )
        .unwrap();
        prop_assert!(mixdec.residual <= 1e-7);
        let sum: f64 = mixdec.terms.iter().map(|t| t.weight).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        let rebuilt = reconstruct(&mixdec).unwrap();
        prop_assert!(rebuilt.max_abs_diff(map.matrix()).unwrap() <= 1e-7);
    }

    #[test]
    fn dp_maps_decompose_tightly(seed in 0..400u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id = [C2, C3, GBIT, QUBIT][(seed % 4) as usize].clone();
        let frame = build_theory(&id).unwrap();
        let coords = random_affine_columns(frame.size(), frame.size(), &mut rng);
        let lifted = quasilocal::decompose::lift_local_dp(&frame, &frame, &coords).unwrap();
        let map = PartitionedMap::single_party(
            frame.system().clone(),
            frame.system().clone(),
            lifted,
        )
        .unwrap();
        let dec = decompose_dp_map(&map, &frame, &frame, 1e-9).unwrap();
        prop_assert!(dec.residual <= 1e-9);
        let sum: f64 = dec.weights.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn stochastic_cores_lift_to_measure_and_prepare(seed in 0..400u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let id = [C2, C3, GBIT][(seed % 3) as usize].clone();
        let frame = build_theory(&id).unwrap();
        let core = random_stochastic_matrix(frame.size(), frame.size(), &mut rng);
        let matrix = frame.prep().matmul(&core).unwrap().matmul(frame.meas()).unwrap();
        let map = PartitionedMap::single_party(
            frame.system().clone(),
            frame.system().clone(),
            matrix.clone(),
        )
        .unwrap();
        prop_assert!(is_measure_and_prepare(&map, 1e-7).unwrap());
        let cert = measure_and_prepare_certificate(&map, 1e-7).unwrap().unwrap();
        let dim = frame.system().dim();
        let mut rebuilt = RealMatrix::from_fn(dim, dim, |_, _| 0.0);
        for (e, s) in cert.effects.iter().zip(cert.states.iter()) {
            let outer = RealMatrix::from_fn(dim, dim, |r, c| s[r] * e[c]);
            rebuilt = rebuilt.add(&outer).unwrap();
        }
        prop_assert!(rebuilt.max_abs_diff(&matrix).unwrap() <= 1e-7);
    }

    #[test]
    fn product_channels_decompose_without_negativity(seed in 0..100u64) {
        let parties = [(C2, C2), (C2, C2)];
        let map = random_ns_channel(&parties, seed, 0.0).unwrap();
        let frame = build_theory(&C2).unwrap();
        let options = DecomposeOptions {
            mode: FactorMode::DpFactors,
            algorithm: Algorithm::Pipeline,
            objective: Objective::MinNegativity,
            tol: 1e-7,
        };
        let mix = decompose_ns_channel(&map, &[&frame, &frame], &[&frame, &frame], &options)
            .unwrap();
        prop_assert!(mix.negativity <= 1e-7, "negativity {}", mix.negativity);
    }

    #[test]
    fn mixing_in_a_product_channel_never_raises_negativity(
        seed in 0..60u64,
        lambda in 0.1..0.9f64,
    ) {
        let parties = [(C2, C2), (C2, C2)];
        let frame = build_theory(&C2).unwrap();
        let frames = [&frame, &frame];
        let channel = random_ns_channel(&parties, seed, 0.9).unwrap();
        let product = random_ns_channel(&parties, seed + 1000, 0.0).unwrap();
        let blended = PartitionedMap::new(
            channel.in_systems().to_vec(),
            channel.out_systems().to_vec(),
            channel.parties().to_vec(),
            channel
                .matrix()
                .scale(lambda)
                .add(&product.matrix().scale(1.0 - lambda))
                .unwrap(),
        )
        .unwrap();
        let options = DecomposeOptions {
            mode: FactorMode::DpFactors,
            algorithm: Algorithm::Pipeline,
            objective: Objective::MinNegativity,
            tol: 1e-7,
        };
        let neg = |m: &PartitionedMap| -> f64 {
            decompose_ns_channel(m, &frames, &frames, &options)
                .unwrap()
                .negativity
        };
        // The blend admits the blended decomposition, so its minimum cannot
        // exceed lambda times the channel's minimum.
        prop_assert!(neg(&blended) <= lambda * neg(&channel) + 1e-6);
    }
}

#[test]
fn strategy_counts_enforce_the_cap() {
    let err = strategy_counts(&[4; 5], &[4; 5]).unwrap_err();
    assert!(matches!(err, Error::CapExceeded { .. }), "{err}");
}

#[test]
fn embedding_rejects_oversized_label_sets() {
    let table = QuasiStochasticMatrix::new(RealMatrix::from_fn(9, 9, |r, c| {
        if r == c {
            1.0
        } else {
            0.0
        }
    }))
    .unwrap();
    let parties = [(C2, C2), (C2, C2)];
    let err = embed_classical_box(&table, &parties, &[3, 3], &[3, 3]).unwrap_err();
    assert!(matches!(err, Error::LabelOverflow { .. }), "{err}");
}

#[test]
fn empty_mixture_is_rejected() {
    let mixture = QuasiMixture {
        terms: Vec::new(),
        negativity: 0.0,
        residual: 0.0,
        dropped_mass: 0.0,
    };
    assert!(matches!(reconstruct(&mixture), Err(Error::EmptyMixture)));
}

#[test]
fn copy_boxes_embed_to_signalling_channels_on_every_theory() {
    let copy = QuasiStochasticMatrix::new(RealMatrix::from_fn(4, 4, |row, col| {
        let (a, b) = (row / 2, row % 2);
        let (x, y) = (col / 2, col % 2);
        if a == y && b == x {
            1.0
        } else {
            0.0
        }
    }))
    .unwrap();
    for id in [C2, GBIT, QUBIT] {
        let parties = [(id.clone(), id.clone()), (id.clone(), id.clone())];
        let map = embed_classical_box(&copy, &parties, &[2, 2], &[2, 2]).unwrap();
        let frame = build_theory(&id).unwrap();
        let report = ns_report_channel(&map, &[&frame, &frame], 1e-7).unwrap();
        assert!(!report.is_ns, "{id}: copy box reported non-signalling");
        let table = canonical_table(&map, &parties).unwrap();
        let sizes = [frame.size(), frame.size()];
        let table_report = quasilocal::nonsignalling::ns_report_stochastic(
            table.matrix(),
            &sizes,
            &sizes,
            1e-7,
        )
        .unwrap();
        assert!(!table_report.is_ns, "{id}: table route disagrees");
    }
}
