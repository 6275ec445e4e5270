//! Instance generators shared by the sumset benchmarks.

use kemplab::group::{make_cyclic, make_product, make_s3, make_torus, GroupModel};
use kemplab::Subset;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two uniformly random sets of `size` elements each.
pub fn random_pair(g: &GroupModel, size: usize, seed: u64) -> (Subset, Subset) {
    let n = g.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Subset::from_indices(n, sample(&mut rng, n, size.min(n)));
    let b = Subset::from_indices(n, sample(&mut rng, n, size.min(n)));
    (a, b)
}

/// One model per kernel path, with a label.
pub fn kernel_zoo() -> Vec<(&'static str, GroupModel)> {
    vec![
        ("cyclic-fft", make_cyclic(1 << 14)),
        ("torus-blocks", make_torus(&[128, 64]).unwrap()),
        ("walsh", make_torus(&[2; 12]).unwrap()),
        ("table-rows", make_product(&make_s3(), &make_cyclic(400)).unwrap()),
    ]
}
