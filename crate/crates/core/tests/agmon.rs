use std::sync::Arc;
use std::time::Instant;

use pphi2_core::agmon::{agmon_distance, path_energy, path_length, AgmonOptions, Path};
use pphi2_core::potential::{make_example_potential, ExampleVariant};
use pphi2_core::{Boundary, ClassicalPotential, CutoffFunction, Field, Grid, ModeBasis};

fn double_well(n: usize) -> ClassicalPotential {
    let basis = Arc::new(ModeBasis::new(Grid::new(2.0, n, Boundary::Periodic).unwrap(), 1.0).unwrap());
    let g = CutoffFunction::uniform(&basis);
    make_example_potential(1.0, 1.0, 1, ExampleVariant::Interval, basis, g).unwrap()
}

#[test]
fn double_well_distance_between_wells() {
    let pot = double_well(32);
    let b = pot.basis().clone();
    let h = Field::constant(&b, -1.0);
    let k = Field::constant(&b, 1.0);
    let start = Instant::now();
    let r = agmon_distance(&pot, &h, &k, &AgmonOptions::default()).unwrap();
    eprintln!("d = {} in {:?}, change {:?}", r.distance, start.elapsed(), r.refinement_change);
    assert!((r.distance / (8.0 / 3.0) - 1.0).abs() < 0.02);
    assert!(r.length <= r.energy.sqrt() * (1.0 + 1e-12));
}

#[test]
fn symmetric_in_endpoints() {
    let pot = double_well(12);
    let b = pot.basis().clone();
    let h = Field::from_fn(&b, |x| -1.0 + 0.2 * (std::f64::consts::PI * x).cos());
    let k = Field::constant(&b, 1.0);
    let opts = AgmonOptions {
        knots: 32,
        refine: false,
        ..Default::default()
    };
    let a = agmon_distance(&pot, &h, &k, &opts).unwrap().distance;
    let b2 = agmon_distance(&pot, &k, &h, &opts).unwrap().distance;
    let c = agmon_distance(&pot, &h.scaled(-1.0), &k.scaled(-1.0), &opts).unwrap().distance;
    assert!((a - b2).abs() < 1e-4 * a, "{a} {b2}");
    assert!((a - c).abs() < 1e-4 * a, "{a} {c}");
}

#[test]
fn optimized_path_beats_straight() {
    let pot = double_well(12);
    let b = pot.basis().clone();
    let h = Field::from_fn(&b, |x| -1.0 + 0.3 * x);
    let k = Field::from_fn(&b, |x| 0.8 + 0.4 * (std::f64::consts::PI * x).sin());
    let straight = Path::straight(&h, &k, 32, 1.0, 1.0).unwrap();
    let r = agmon_distance(&pot, &h, &k, &AgmonOptions { knots: 32, ..Default::default() }).unwrap();
    assert!(r.length <= path_length(&pot, &straight).unwrap());
    assert!(path_energy(&pot, &r.path).unwrap() >= r.length * r.length * (1.0 - 1e-12));
}
