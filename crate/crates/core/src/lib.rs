//! Internal clustering validity indices with a kernel-density index family,
//! classical baselines, candidate partition generators and an evaluation harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod density;
pub mod harness;
pub mod indices;
pub mod kdi;
pub mod partition;

pub use data::{load_dataset, DataError, Dataset, Format, LabelColumn};
pub use density::{BandwidthGrid, BandwidthSearch, Kde};
pub use harness::{evaluate_dataset, EvaluationReport, RunConfig};
pub use indices::{adjusted_rand_index, Direction, IndexKind, IndexScore};
pub use kdi::{kdi_index, KdiParams, KdiScore};
pub use partition::{Generator, Linkage, Partition};

/// Derive an independent stream seed from `seed` and `salt` (splitmix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::mix_seed;

    #[test]
    fn mix_seed_separates_salts() {
        assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(0, 1));
        assert_eq!(mix_seed(42, 7), mix_seed(42, 7));
    }
}
