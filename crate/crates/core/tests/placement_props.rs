//! Placement invariants over random cells and move sequences.

mod common;

use cellsynth::fixtures;
use cellsynth::grid::build_grid;
use cellsynth::netlist::Netlist;
use cellsynth::placement::{realize_placement, slot_count, PlacementRep};
use cellsynth::placer::{anneal, apply, exhaustive_min_width, propose, score};
use cellsynth::tech::TechParams;
use proptest::prelude::*;
use rand::SeedableRng;

type Rng64 = rand_chacha::ChaCha8Rng;

fn cell(index: usize, lib_seed: u64) -> Netlist {
    let lib = fixtures::generate_library(lib_seed);
    lib[index % lib.len()].clone()
}

/// A rep reached from the initial placement by `moves` random moves.
fn walked(nl: &Netlist, tech: &TechParams, seed: u64, moves: usize) -> PlacementRep {
    let mut r = Rng64::seed_from_u64(seed);
    let mut rep = PlacementRep::initial(nl, slot_count(nl, tech));
    for _ in 0..moves {
        rep = apply(&rep, &propose(&mut r, &rep));
    }
    rep
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moves_keep_reps_valid(index in 0usize..20, lib_seed in 0u64..4, seed: u64, moves in 0usize..200) {
        let tech = TechParams::default();
        let nl = cell(index, lib_seed);
        let mut r = Rng64::seed_from_u64(seed);
        let mut rep = PlacementRep::initial(&nl, slot_count(&nl, &tech));
        for _ in 0..moves {
            rep = apply(&rep, &propose(&mut r, &rep));
            prop_assert!(rep.validate(&nl).is_ok());
            prop_assert_eq!(rep.slots(), slot_count(&nl, &tech));
        }
    }

    #[test]
    fn realization_is_deterministic_and_monotone_in_gaps(
        index in 0usize..20, seed: u64, moves in 0usize..60, k_s in 0usize..3, k_f in 0usize..3
    ) {
        let nl = cell(index, fixtures::DEFAULT_SEED);
        let base = TechParams { k_s, k_f, max_width: 1000, ..TechParams::default() };
        let rep = walked(&nl, &base, seed, moves);
        let a = realize_placement(&rep, &nl, &base).unwrap();
        prop_assert_eq!(&a, &realize_placement(&rep, &nl, &base).unwrap());
        let wider_s = TechParams { k_s: k_s + 1, ..base.clone() };
        let wider_f = TechParams { k_f: k_f + 1, ..base.clone() };
        prop_assert!(realize_placement(&rep, &nl, &wider_s).unwrap().width >= a.width);
        prop_assert!(realize_placement(&rep, &nl, &wider_f).unwrap().width >= a.width);
        let mut cols = std::collections::BTreeSet::new();
        for &x in &a.x_p {
            prop_assert!(cols.insert(x));
            prop_assert!(x < a.width);
        }
    }

    #[test]
    fn swapping_empty_slots_changes_nothing(index in 0usize..20, seed: u64, moves in 0usize..60) {
        let tech = TechParams::default();
        let nl = cell(index, fixtures::DEFAULT_SEED);
        let rep = walked(&nl, &tech, seed, moves);
        let empties: Vec<usize> = (0..rep.slots()).filter(|&k| rep.order_p[k].is_none()).collect();
        prop_assume!(empties.len() >= 2);
        let mut swapped = rep.clone();
        swapped.order_p.swap(empties[0], empties[empties.len() - 1]);
        prop_assert_eq!(realize_placement(&rep, &nl, &tech).unwrap(), realize_placement(&swapped, &nl, &tech).unwrap());
    }

    #[test]
    fn flipping_a_symmetric_device_keeps_columns(index in 0usize..20, seed: u64, moves in 0usize..60, which: usize) {
        let tech = TechParams::default();
        let mut nl = cell(index, fixtures::DEFAULT_SEED);
        let pmos = nl.pmos();
        let d = pmos[which % pmos.len()];
        nl.devices[d].drain = nl.devices[d].source.clone();
        let rep = walked(&nl, &tech, seed, moves);
        let mut flipped = rep.clone();
        let i = which % pmos.len();
        flipped.flip_p[i] = !flipped.flip_p[i];
        let (a, b) = (realize_placement(&rep, &nl, &tech).unwrap(), realize_placement(&flipped, &nl, &tech).unwrap());
        prop_assert_eq!(a.width, b.width);
        prop_assert_eq!(&a.x_p, &b.x_p);
        prop_assert_eq!(&a.x_n, &b.x_n);
    }

    #[test]
    fn grid_building_is_pure(index in 0usize..20, seed: u64, moves in 0usize..40) {
        let tech = TechParams { max_width: 1000, ..TechParams::default() };
        let nl = cell(index, fixtures::DEFAULT_SEED);
        let rep = walked(&nl, &tech, seed, moves);
        let r = realize_placement(&rep, &nl, &tech).unwrap();
        let g = build_grid(&r, &nl, &tech).unwrap();
        prop_assert_eq!(&g, &build_grid(&realize_placement(&rep, &nl, &tech).unwrap(), &nl, &tech).unwrap());
        prop_assert_eq!(g.width, TechParams::m1_width(r.width));
        prop_assert_eq!(g.height, tech.grid_height);
    }

    #[test]
    fn score_is_deterministic(index in 0usize..20, seed: u64, moves in 0usize..40) {
        let tech = TechParams::default();
        let nl = cell(index, fixtures::DEFAULT_SEED);
        let rep = walked(&nl, &tech, seed, moves);
        prop_assert_eq!(score(&rep, &nl, &tech, None).to_bits(), score(&rep, &nl, &tech, None).to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn anneal_best_never_worsens(index in 0usize..20, seed: u64) {
        let tech = TechParams::default();
        let nl = cell(index, fixtures::DEFAULT_SEED);
        let out = anneal(&nl, &tech, 2_000, &mut Rng64::seed_from_u64(seed), None);
        prop_assert_eq!(out.best_trace.len(), 2_000);
        prop_assert!(out.best_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*out.best_trace.last().unwrap(), out.best_score);
        prop_assert!((score(&out.best, &nl, &tech, None) - out.best_score).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_search_agrees_with_the_oracle(lib_seed in 0u64..50, index in 8usize..20, k_s in 0usize..3, k_f in 0usize..3) {
        let nl = cell(index, lib_seed);
        prop_assume!(nl.devices.len() <= 6);
        let tech = TechParams { k_s, k_f, max_width: 1000, ..TechParams::default() };
        prop_assert_eq!(
            exhaustive_min_width(&nl, &tech),
            common::oracle_min_width(&nl, &tech, slot_count(&nl, &tech))
        );
    }
}

#[test]
fn library_cells_respect_the_generator_contract() {
    let lib = fixtures::generate_library(9);
    assert_eq!(lib, fixtures::generate_library(9));
    let names: Vec<&str> = lib.iter().take(8).map(|n| n.name.as_str()).collect();
    assert_eq!(names, ["INV", "NAND2", "NOR2", "AOI21", "OAI21", "MUX2", "XOR2", "LATCH"]);
    let tech = TechParams::default();
    assert_eq!(common::oracle_min_width(&fixtures::inverter(), &tech, 1), 1);
    assert_eq!(common::oracle_min_width(&fixtures::nand2(), &tech, slot_count(&fixtures::nand2(), &tech)), 2);
}
