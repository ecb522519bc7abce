//! Shared fixtures for the benchmarks.

use geomv::geomask::{build_features, MaskParams, SpatialFeature};
use geomv::synthgen::{generate, SynthConfig, SynthWorld};

/// A synthetic country with its masked features.
pub struct Bench {
    pub world: SynthWorld,
    pub features: Vec<SpatialFeature>,
}

pub fn bench_world(n_eas: usize) -> Bench {
    let cfg = SynthConfig { seed: 99, n_eas, households_per_ea: 5, start_year: 2008, end_year: 2017, ..Default::default() };
    let world = generate(&cfg).expect("synthetic world");
    let params = MaskParams { seed: 99, ..Default::default() };
    let features = build_features(&world.population.households, &world.population.admins, &params).expect("features");
    Bench { world, features }
}
