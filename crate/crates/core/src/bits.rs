//! Cyclic shifts and masks over packed bit rings.
//!
//! A ring of `n` bits is stored least-significant-bit first in `ceil(n / 64)`
//! words. Bits above `n` in the last word are always zero.

pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

/// Mask of the valid bits in the last word.
pub(crate) fn last_word_mask(n: usize) -> u64 {
    let rem = n % 64;
    if rem == 0 {
        u64::MAX
    } else {
        (1u64 << rem) - 1
    }
}

/// `out[i] = x[(i + 1) mod n]`.
pub(crate) fn shift_toward_lower(x: &[u64], n: usize, out: &mut [u64]) {
    let nw = x.len();
    for w in 0..nw - 1 {
        out[w] = (x[w] >> 1) | (x[w + 1] << 63);
    }
    let top = n - 64 * (nw - 1) - 1;
    out[nw - 1] = (x[nw - 1] >> 1) | ((x[0] & 1) << top);
}

/// `out[i] = x[(i + n - 1) mod n]`.
pub(crate) fn shift_toward_higher(x: &[u64], n: usize, out: &mut [u64]) {
    let nw = x.len();
    let top = n - 64 * (nw - 1) - 1;
    let wrap = (x[nw - 1] >> top) & 1;
    for w in (1..nw).rev() {
        out[w] = (x[w] << 1) | (x[w - 1] >> 63);
    }
    out[0] = (x[0] << 1) | wrap;
    out[nw - 1] &= last_word_mask(n);
}

/// Engine mask: occupied sites whose clockwise neighbour is empty.
/// `scratch` must have the same length as `x`.
pub(crate) fn engine_mask_into(x: &[u64], n: usize, scratch: &mut [u64], out: &mut [u64]) {
    shift_toward_lower(x, n, scratch);
    for w in 0..x.len() {
        out[w] = x[w] & !scratch[w];
    }
}

pub(crate) fn popcount(x: &[u64]) -> usize {
    x.iter().map(|w| w.count_ones() as usize).sum()
}

/// Ascending positions of the set bits.
pub(crate) fn set_positions(x: &[u64]) -> impl Iterator<Item = usize> + '_ {
    x.iter().enumerate().flat_map(|(w, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(64 * w + b)
            }
        })
    })
}
