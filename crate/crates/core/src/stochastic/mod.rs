//! Random streams, samplers, Brownian paths and the reflection map.

mod gamma;
mod path;
mod reflect;
mod rng;

pub use gamma::{sample_chi, sample_gamma, sample_ln_gamma};
pub use path::{
    bridge_minimum, bridge_upcross_prob, resample_brownian, sample_brownian, BridgeChannel,
    BrownianPath, TimeGrid, MAX_BRIDGE_EXP,
};
pub use reflect::{skorokhod_reflect, ReflectedSegment};
pub(crate) use rng::{hash_open01, mix64};
pub use rng::RandomStream;
