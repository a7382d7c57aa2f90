use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; keeps e.g. data bits and pixel arrivals of the
/// same block apart.
#[derive(Debug, Clone, Copy)]
#[repr(u8)]
pub(crate) enum Purpose {
    Arrivals = 1,
    Pixel = 2,
    WarmupBits = 3,
    DataBits = 4,
    Chunk = 5,
    Standalone = 6,
}

/// Independent generator for `(seed, purpose, block, pixel)`.
///
/// The stream id packs the purpose in the top byte, the block index in the
/// next 32 bits and the pixel index in the low 24 bits.
pub(crate) fn substream(seed: u64, purpose: Purpose, block: u64, pixel: u32) -> ChaCha8Rng {
    debug_assert!(block < 1 << 32);
    debug_assert!(pixel < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(
        ((purpose as u64) << 56) | ((block & 0xffff_ffff) << 24) | (pixel as u64 & 0xff_ffff),
    );
    rng
}
