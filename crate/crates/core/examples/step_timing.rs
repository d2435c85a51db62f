use mvlab_core::*;
use std::sync::Arc;
use std::time::Instant;
fn main() {
    let grid = Arc::new(TorusGrid::new(5.0, 512).unwrap());
    let kernel = InteractionKernel::morse(4.0, 1.0, 0.125, 0.05).unwrap();
    let field =
        DensityField::periodized_gaussian(grid.clone(), 0.0, 0.5, DEFAULT_IMAGE_TOL).unwrap();
    let mut ens = ParticleEnsemble::sample_from_density(&field, 10_000, 0).unwrap();
    let start = Instant::now();
    for _ in 0..1000 {
        ens.em_step(&kernel, 1.1, 1e-3).unwrap();
    }
    println!(
        "1000 steps N=1e4: {:?} ({:?}/step)",
        start.elapsed(),
        start.elapsed() / 1000
    );
}
