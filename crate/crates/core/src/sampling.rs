//! Random primitives: reproducible substreams, Gamma variates, uniform
//! directions on the unit sphere and rescaled Dirichlet time partitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;

/// Generator type behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// Address of an independent random substream.
///
/// The pair `(seed, stream_id)` fully determines the variate sequence: the
/// seed keys a ChaCha8 generator and the stream id selects one of its 2^64
/// non-overlapping streams, so substreams can be consumed in any order or
/// on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derives a child stream. Children of distinct indices (and of distinct
    /// parents) land on distinct stream ids with overwhelming probability.
    pub fn substream(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(
                splitmix64(self.stream_id) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93),
            ),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A unit vector in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Displacement durations `tau_1, ..., tau_{n+1}` of a flight on `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    tau: Vec<f64>,
    horizon: f64,
}

impl TimePartition {
    pub fn durations(&self) -> &[f64] {
        &self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of direction changes, one fewer than the number of durations.
    pub fn changes(&self) -> usize {
        self.tau.len() - 1
    }

    /// Times at which the direction changes (partial sums, last one dropped).
    pub fn change_times(&self) -> Vec<f64> {
        self.tau[..self.tau.len() - 1]
            .iter()
            .scan(0.0, |acc, &tau| {
                *acc += tau;
                Some(*acc)
            })
            .collect()
    }
}

/// A standard normal variate (ziggurat).
#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on `(0, 1]`.
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn sample_unit_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Direction> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut v = vec![0.0; d];
    fill_unit_direction(rng, &mut v);
    Ok(Direction(v))
}

/// Writes a uniform point of the unit sphere `S^{len-1}` into `out` by
/// normalizing independent standard normals.
pub(crate) fn fill_unit_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            *x = standard_normal(rng);
            sq += *x * *x;
        }
        // A zero vector has probability zero but would poison the path.
        if sq > f64::MIN_POSITIVE {
            let inv = sq.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::param(
            "shape",
            format!("Gamma shape must be positive and finite, got {shape}"),
        ));
    }
    Ok(gamma_unchecked(shape, rng))
}

/// Gamma(shape, 1): Marsaglia-Tsang squeeze for `shape >= 1`, and the
/// boost `Gamma(shape + 1) * U^(1/shape)` below one.
pub(crate) fn gamma_unchecked<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let g = marsaglia_tsang(shape + 1.0, rng);
        return g * open_unit(rng).powf(shape.recip());
    }
    marsaglia_tsang(shape, rng)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = (9.0 * d).sqrt().recip();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

pub fn sample_time_partition<R: Rng + ?Sized>(
    family: Family,
    d: usize,
    n: u64,
    t: f64,
    rng: &mut R,
) -> Result<TimePartition> {
    check_partition_args(family, d, n, t)?;
    let mut tau = vec![0.0; n as usize + 1];
    fill_partition(family.dirichlet_shape(d), t, &mut tau, rng);
    Ok(TimePartition { tau, horizon: t })
}

pub(crate) fn check_partition_args(family: Family, d: usize, n: u64, t: f64) -> Result<()> {
    family.check_dimension(d)?;
    if n == 0 {
        return Err(Error::param(
            "n",
            "conditional flights need at least one change of direction",
        ));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::param(
            "t",
            format!("horizon must be positive and finite, got {t}"),
        ));
    }
    Ok(())
}

/// Fills `out` with a symmetric Dirichlet(shape) vector scaled to sum `t`.
pub(crate) fn fill_partition<R: Rng + ?Sized>(shape: f64, t: f64, out: &mut [f64], rng: &mut R) {
    loop {
        let mut total = 0.0;
        for g in out.iter_mut() {
            *g = gamma_unchecked(shape, rng);
            total += *g;
        }
        if total > 0.0 && out.iter().all(|&g| g > 0.0) {
            let scale = t / total;
            out.iter_mut().for_each(|g| *g *= scale);
            return;
        }
    }
}
