/// Longest side used for training batches.
pub const DEFAULT_MAX_SIZE: u32 = 128;

/// Caps the longer side at `max_size` while keeping the aspect ratio.
///
/// With `m` the longer and `s` the shorter side: `m' = M` if `m >= M`,
/// otherwise `m' = m`; then `r = m / m'` and `s' = s / r`, rounded half up
/// with a floor of 1. Orientation is preserved.
pub fn cap_resize(width: u32, height: u32, max_size: u32) -> (u32, u32) {
    let (width, height, max_size) = (width.max(1), height.max(1), max_size.max(1));
    let (long, short) = (width.max(height) as u64, width.min(height) as u64);
    let long_capped = if long >= max_size as u64 { max_size as u64 } else { long };
    // round(short * m' / m) = floor((2 * short * m' + m) / (2 * m))
    let short_capped = ((2 * short * long_capped + long) / (2 * long)).max(1);
    if width >= height {
        (long_capped as u32, short_capped as u32)
    } else {
        (short_capped as u32, long_capped as u32)
    }
}
