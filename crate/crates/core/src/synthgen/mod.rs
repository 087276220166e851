//! Procedural synthetic scenes with automatic labels.
//!
//! A scene starts from an "empty" sea background. Land, coast and sea
//! entities constrain where objects go; a jittered anchor grid over the sea
//! provides candidate positions; platform clusters are random line networks
//! with points along the lines, single platforms and wind turbines are single
//! points. Every point is textured with a randomized anisotropic Gaussian
//! kernel and the label box is derived from the placed geometry.

mod anchors;
mod background;
mod cluster;
mod dataset;
mod entity;
mod kernel;
mod scene;

pub use anchors::{make_anchor_grid, AnchorGrid};
pub use background::{procedural_background, BackgroundParams};
pub use cluster::{gen_cluster_geometry, gen_point_geometry, ClusterGeometry, ClusterParams, Point, Segment};
pub use dataset::{
    balance_manifest, generate_dataset, load_backgrounds, write_dataset, ClassBalance,
    GenerationManifest, SynthConfig,
};
pub use entity::{build_entity_map, screen_background, Entity, EntityMap};
pub use kernel::{render_kernel, KernelRanges, KernelSpec, Stamp};
pub use scene::{place_object, Background, StampPixel, SynthObject, SynthScene};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream for `(seed, path...)`, so per-scene streams do not
/// depend on evaluation order.
pub(crate) fn derive_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(seed);
    for &p in path {
        state = splitmix(state ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    ChaCha8Rng::seed_from_u64(state)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
