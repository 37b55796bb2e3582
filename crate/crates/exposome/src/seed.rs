//! Deterministic seed derivation.
//!
//! Every stage, layer, fold and tree gets its own RNG seeded from
//! `derive_seed(base, label)`. The derivation is a plain FNV-1a hash of the
//! label folded into the base seed and finished with a splitmix64 round, so
//! it is stable across platforms and releases. Re-running any sub-stage in
//! isolation reproduces exactly the stream it saw inside the full run.

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

/// Derive a child seed from a base seed and a stage label.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(base ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_across_calls() {
        assert_eq!(derive_seed(7, "stats"), derive_seed(7, "stats"));
    }

    #[test]
    fn labels_and_bases_separate_streams() {
        assert_ne!(derive_seed(7, "stats"), derive_seed(7, "spatial"));
        assert_ne!(derive_seed(7, "stats"), derive_seed(8, "stats"));
    }
}
