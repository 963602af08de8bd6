//! Ring configurations and their train structure.
//!
//! Sites are indexed `0..2L`. Site `k` here is site `k + 1` in the usual
//! 1-based notation, so the blockage bond joins site `2L - 1` to site `0`
//! and the first half of the ring is `0..L`. Particles move clockwise,
//! from `k` to `(k + 1) mod 2L`.

use std::fmt;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::bits;
use crate::error::{invalid, Result};

/// A ring of `2L` sites with the blockage on the bond from the last site to the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingGeometry {
    half_size: usize,
}

impl RingGeometry {
    pub fn new(half_size: usize) -> Result<Self> {
        if half_size < 2 {
            return invalid(format!("half size L must be at least 2, got {half_size}"));
        }
        Ok(RingGeometry { half_size })
    }

    /// Geometry for a ring with `sites` sites; `sites` must be even and at least 4.
    pub fn with_sites(sites: usize) -> Result<Self> {
        if sites % 2 != 0 {
            return invalid(format!("site count must be even, got {sites}"));
        }
        Self::new(sites / 2)
    }

    /// `L`.
    pub fn half_size(&self) -> usize {
        self.half_size
    }

    /// `2L`.
    pub fn site_count(&self) -> usize {
        2 * self.half_size
    }

    /// The site in front of the blockage (the last site).
    pub fn blockage_site(&self) -> usize {
        self.site_count() - 1
    }

    /// The blocked bond as `(from, to)`.
    pub fn blockage_bond(&self) -> (usize, usize) {
        (self.blockage_site(), 0)
    }

    /// Mirror image of `site` across the blockage bond.
    pub fn mirror(&self, site: usize) -> usize {
        self.site_count() - 1 - site
    }

    /// Index of the site written `σ_{-i}` in 1-based notation, where
    /// `σ_{-i} = σ_{2L-i+1}`. Takes a 1-based `i` in `1..=2L`, returns a 0-based index.
    pub fn negative_site(&self, i: usize) -> usize {
        assert!(
            (1..=self.site_count()).contains(&i),
            "1-based site {i} out of range"
        );
        self.site_count() - i
    }

    pub(crate) fn word_count(&self) -> usize {
        bits::word_count(self.site_count())
    }
}

/// One maximal block of adjacent particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Train {
    /// Rear particle.
    pub caboose: usize,
    /// Front particle, the only one that can move.
    pub engine: usize,
    pub length: usize,
}

/// Trains of a configuration, ordered by engine site.
///
/// The fully occupied ring has no engine and is reported with no trains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainDecomposition {
    pub trains: Vec<Train>,
}

impl TrainDecomposition {
    pub fn engine_count(&self) -> usize {
        self.trains.len()
    }
}

/// Occupancy of every site of a ring, packed one bit per site.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    geometry: RingGeometry,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(geometry: RingGeometry) -> Self {
        Configuration {
            geometry,
            words: vec![0; geometry.word_count()],
        }
    }

    /// Builds a configuration from 0/1 values; the ring size is `bits.len()`.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let geometry = RingGeometry::with_sites(bits.len())?;
        let mut config = Self::empty(geometry);
        for (site, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => config.set(site, true),
                other => return invalid(format!("site value must be 0 or 1, got {other}")),
            }
        }
        Ok(config)
    }

    pub fn from_occupied(
        geometry: RingGeometry,
        sites: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let mut config = Self::empty(geometry);
        for site in sites {
            if site >= geometry.site_count() {
                return invalid(format!(
                    "site {site} outside ring of {}",
                    geometry.site_count()
                ));
            }
            config.set(site, true);
        }
        Ok(config)
    }

    /// Parses a bit string such as `"1010"`, site 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => invalid(format!("unexpected character {other:?} in bit string")),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bits(&bits)
    }

    /// `1010…10`: every even site occupied.
    pub fn alternating(geometry: RingGeometry) -> Self {
        Self::from_occupied(geometry, (0..geometry.site_count()).step_by(2))
            .expect("sites are in range")
    }

    /// All particles compressed behind the blockage: first half empty, second half full.
    pub fn queue(geometry: RingGeometry) -> Self {
        Self::from_occupied(geometry, geometry.half_size()..geometry.site_count())
            .expect("sites are in range")
    }

    pub(crate) fn from_words(geometry: RingGeometry, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), geometry.word_count());
        Configuration { geometry, words }
    }

    pub fn geometry(&self) -> RingGeometry {
        self.geometry
    }

    pub fn site_count(&self) -> usize {
        self.geometry.site_count()
    }

    /// Packed occupancy, least significant bit = site 0.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn get(&self, site: usize) -> bool {
        debug_assert!(site < self.site_count());
        (self.words[site / 64] >> (site % 64)) & 1 == 1
    }

    pub(crate) fn set(&mut self, site: usize, occupied: bool) {
        let bit = 1u64 << (site % 64);
        if occupied {
            self.words[site / 64] |= bit;
        } else {
            self.words[site / 64] &= !bit;
        }
    }

    /// Site values as 0/1, site 0 first.
    pub fn bits(&self) -> Vec<u8> {
        (0..self.site_count()).map(|s| self.get(s) as u8).collect()
    }

    /// `m(σ)`.
    pub fn particle_count(&self) -> usize {
        bits::popcount(&self.words)
    }

    pub fn engine_mask(&self) -> Vec<u64> {
        let mut scratch = vec![0; self.words.len()];
        let mut out = vec![0; self.words.len()];
        bits::engine_mask_into(&self.words, self.site_count(), &mut scratch, &mut out);
        out
    }

    /// `l(σ)`: sites `i` with `σ_i = 1` and `σ_{i+1} = 0`, cyclically.
    pub fn engine_count(&self) -> usize {
        bits::popcount(&self.engine_mask())
    }

    /// Engine sites in ascending order.
    pub fn engines(&self) -> Vec<usize> {
        bits::set_positions(&self.engine_mask()).collect()
    }

    pub fn is_engine(&self, site: usize) -> bool {
        self.get(site) && !self.get((site + 1) % self.site_count())
    }

    /// `r(σ)`: particles in the first half `0..L`.
    pub fn first_half_count(&self) -> usize {
        (0..self.geometry.half_size())
            .filter(|&s| self.get(s))
            .count()
    }

    /// Engines in the second half `L..2L`.
    pub fn second_half_engine_count(&self) -> usize {
        let l = self.geometry.half_size();
        self.engines().into_iter().filter(|&e| e >= l).count()
    }

    pub fn trains(&self) -> TrainDecomposition {
        let n = self.site_count();
        let trains = self
            .engines()
            .into_iter()
            .map(|engine| {
                let mut caboose = engine;
                let mut length = 1;
                loop {
                    let behind = (caboose + n - 1) % n;
                    if !self.get(behind) {
                        break;
                    }
                    caboose = behind;
                    length += 1;
                }
                Train {
                    caboose,
                    engine,
                    length,
                }
            })
            .collect();
        TrainDecomposition { trains }
    }

    /// `σ_i = 1 - σ_{-i}` for every site.
    pub fn is_ph_symmetric(&self) -> bool {
        (0..self.geometry.half_size()).all(|s| self.get(s) != self.get(self.geometry.mirror(s)))
    }

    /// Particle-hole symmetric and every particle in the first half is free to move.
    pub fn is_in_omega_inf(&self) -> bool {
        self.is_ph_symmetric()
            && (0..self.geometry.half_size()).all(|s| !self.get(s) || self.is_engine(s))
    }

    /// Configuration obtained by moving every particle in `moves` one site clockwise.
    /// `moves` must be a subset of the engine mask.
    pub(crate) fn advanced(&self, moves: &[u64]) -> Configuration {
        let mut shifted = vec![0; self.words.len()];
        bits::shift_toward_higher(moves, self.site_count(), &mut shifted);
        let words = self
            .words
            .iter()
            .zip(moves)
            .zip(&shifted)
            .map(|((&w, &m), &s)| (w & !m) | s)
            .collect();
        Configuration::from_words(self.geometry, words)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in 0..self.site_count() {
            f.write_str(if self.get(s) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

/// `σ_queue` for the given ring.
pub fn queue_configuration(geometry: RingGeometry) -> Configuration {
    Configuration::queue(geometry)
}

/// Every configuration with `m` particles, exactly once.
///
/// Order: lexicographic in the ascending list of occupied sites, so for
/// `2L = 4, m = 2` the sequence is `1100, 1010, 1001, 0110, 0101, 0011`.
pub fn enumerate_configurations(
    geometry: RingGeometry,
    m: usize,
) -> Result<impl Iterator<Item = Configuration>> {
    let n = geometry.site_count();
    if m > n {
        return invalid(format!("particle count {m} exceeds {n} sites"));
    }
    Ok((0..n).combinations(m).map(move |occupied| {
        Configuration::from_occupied(geometry, occupied).expect("sites are in range")
    }))
}

/// `C(n, k)` with the standard convention: zero unless `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigUint {
    if k < 0 || n < 0 || k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from((n - i) as u64);
        acc /= BigUint::from((i + 1) as u64);
    }
    acc
}

/// Number `n(l)` of half-filled configurations of a `2L` ring with exactly `l` trains.
///
/// For `l >= 2` this is `2 Σ_{l1=1}^{L-l+1} l1 C(L-l1-1, l-2) C(L-1, l-1)`:
/// split particles and holes into `l` ordered groups each, then place site 1.
/// A single train has `n(1) = 2L` (one block, `2L` rotations).
pub fn train_count_table(half_size: usize, trains: usize) -> Result<BigUint> {
    if half_size < 1 {
        return invalid("half size L must be positive");
    }
    if trains < 1 || trains > half_size {
        return invalid(format!(
            "train count must lie in 1..={half_size}, got {trains}"
        ));
    }
    if trains == 1 {
        return Ok(BigUint::from(2 * half_size as u64));
    }
    let (l_big, l) = (half_size as i64, trains as i64);
    let groups = binomial(l_big - 1, l - 1);
    let placements: BigUint = (1..=l_big - l + 1)
        .map(|l1| BigUint::from(l1 as u64) * binomial(l_big - l1 - 1, l - 2))
        .sum();
    Ok(BigUint::from(2u32) * placements * groups)
}
