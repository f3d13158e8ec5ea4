//! Deterministic, splittable random streams.
//!
//! Every random quantity in the laboratory is drawn from its own substream,
//! addressed by a [`StreamId`] — a (experiment, trial, variable) triple.
//! Substream derivation is a pure function of the master seed and the id, so
//! trial 17 sees the same draws whether it runs first, last, or on another
//! thread. That property, not statistical quality alone, is the point: it is
//! what makes every experiment bit-reproducible across worker counts.
//!
//! The generator is a 64-bit counter generator with the splitmix finalizer;
//! normal deviates come from the inverse CDF (Wichura's rational
//! approximation), consuming exactly one uniform per deviate so stream
//! accounting stays trivial.

use std::error::Error;
use std::fmt;

/// Golden-ratio increment of the splitmix stream.
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit avalanche finalizer (the splitmix output function). Bijective.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Errors from drawing with invalid distribution parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum RngError {
    /// `lo >= hi` passed to a uniform draw.
    InvalidRange { lo: f64, hi: f64 },
    /// Negative standard deviation passed to a normal draw.
    NegativeSd(f64),
}

impl fmt::Display for RngError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RngError::InvalidRange { lo, hi } => {
                write!(f, "invalid uniform range: lo ({lo}) must be < hi ({hi})")
            }
            RngError::NegativeSd(sd) => {
                write!(f, "negative standard deviation: {sd}")
            }
        }
    }
}

impl Error for RngError {}

/// Addresses one logical random stream.
///
/// Distinct ids yield independent substreams under the same master seed.
/// `variable` separates the random quantities consumed by a single trial or
/// run (0 = U noise, 1 = K noise, 2 = accuracy noise / event uniforms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    /// Namespace of the experiment consuming the stream.
    pub experiment: u16,
    /// Trial or run index within the experiment.
    pub trial: u32,
    /// Which random variable within the trial.
    pub variable: u16,
}

impl StreamId {
    pub fn new(experiment: u16, trial: u32, variable: u16) -> Self {
        StreamId {
            experiment,
            trial,
            variable,
        }
    }

    /// Packs the triple into one word. Injective: the three fields occupy
    /// disjoint bit ranges.
    fn pack(self) -> u64 {
        (u64::from(self.experiment) << 48)
            | (u64::from(self.variable) << 32)
            | u64::from(self.trial)
    }
}

/// A single-consumer pseudo-random source.
///
/// The output sequence is a pure function of the initial state. Sources are
/// deliberately not `Clone`: a copied source would silently replay the same
/// draws, which is exactly the bug the substream design exists to prevent.
#[derive(Debug)]
pub struct RandomSource {
    state: u64,
}

impl RandomSource {
    /// A source seeded directly. Prefer [`RandomSource::derive`] everywhere a
    /// stream belongs to an experiment.
    pub fn new(seed: u64) -> Self {
        RandomSource { state: seed }
    }

    /// Derives the substream for `id` under `master_seed`.
    ///
    /// The state is an avalanche mix of both inputs, so distinct ids (or
    /// distinct seeds) land in unrelated regions of the state space. Pure:
    /// deriving the same pair twice yields identical sources, which is also
    /// how paired experiment arms share their environmental draws.
    pub fn derive(master_seed: u64, id: StreamId) -> Self {
        RandomSource {
            state: mix64(master_seed.wrapping_add(mix64(id.pack()))),
        }
    }

    /// Next raw 64-bit output.
    pub fn next_raw(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53-bit resolution.
    fn next_unit(&mut self) -> f64 {
        // Top 53 bits scaled by 2^-53: exact, in [0, 1 - 2^-53].
        (self.next_raw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in the open interval `(0, 1)`, for inverse-CDF sampling.
    fn next_unit_open(&mut self) -> f64 {
        // Forcing the 53-bit integer odd keeps the result strictly inside
        // (0, 1), so the normal inverse CDF never sees an endpoint.
        (((self.next_raw() >> 11) | 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    // The negated comparison is load-bearing: `!(lo < hi)` also rejects NaN
    // bounds, which `lo >= hi` would accept.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn next_uniform(&mut self, lo: f64, hi: f64) -> Result<f64, RngError> {
        if !(lo < hi) {
            return Err(RngError::InvalidRange { lo, hi });
        }
        let v = lo + self.next_unit() * (hi - lo);
        // lo + u*(hi-lo) can round up onto hi when hi-lo is large relative
        // to lo; clamp one ulp down to honor the half-open contract.
        Ok(if v >= hi { hi.next_down() } else { v })
    }

    /// Normal deviate with the given mean and standard deviation.
    ///
    /// Consumes exactly one uniform, including when `sd == 0`, where the
    /// result is `mean` exactly; stream accounting is therefore identical
    /// across noise levels.
    pub fn next_normal(&mut self, mean: f64, sd: f64) -> Result<f64, RngError> {
        if sd < 0.0 {
            return Err(RngError::NegativeSd(sd));
        }
        let z = normal_inverse_cdf(self.next_unit_open());
        Ok(mean + sd * z)
    }
}

/// Inverse CDF of the standard normal (Wichura's PPND16 rational
/// approximation, absolute error below 1e-15 on (0, 1)).
///
/// Callers must pass `p` strictly inside (0, 1); the open-interval uniform
/// above guarantees that for sampling.
// The coefficients keep their full published digit strings even where they
// exceed f64 precision: transcription stays checkable against the source.
#[allow(clippy::excessive_precision)]
pub fn normal_inverse_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "inverse CDF needs p in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        // Central region: rational approximation in r = 0.425^2 - q^2.
        let r = 0.180_625 - q * q;
        let num = ((((((2.509_080_928_730_122_672_7e3 * r + 3.343_057_558_358_812_810_5e4) * r
            + 6.726_577_092_700_870_085_3e4)
            * r
            + 4.592_195_393_154_987_145_7e4)
            * r
            + 1.373_169_376_550_946_112_5e4)
            * r
            + 1.971_590_950_306_551_442_7e3)
            * r
            + 1.331_416_678_917_843_774_5e2)
            * r
            + 3.387_132_872_796_366_608;
        let den = ((((((5.226_495_278_852_545_61e3 * r + 2.872_908_573_572_194_267_4e4) * r
            + 3.930_789_580_009_271_061e4)
            * r
            + 2.121_379_430_158_659_586_7e4)
            * r
            + 5.394_196_021_424_751_107_7e3)
            * r
            + 6.871_870_074_920_579_083e2)
            * r
            + 4.231_333_070_160_091_125_2e1)
            * r
            + 1.0;
        return q * num / den;
    }
    // Tail regions: rational approximations in r = sqrt(-ln(min(p, 1-p))),
    // split at r = 5 (p about 1.39e-11).
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414_076_4e-4 * r + 2.272_384_498_926_918_458_33e-2)
            * r
            + 2.417_807_251_774_506_117_7e-1)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((1.050_750_071_644_416_843_24e-9 * r + 5.475_938_084_995_344_946e-4)
            * r
            + 1.519_866_656_361_645_719_66e-2)
            * r
            + 1.481_039_764_274_800_745_9e-1)
            * r
            + 6.897_673_349_851_000_045_5e-1)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_132_65e-7 * r + 2.711_555_568_743_487_578_15e-5)
            * r
            + 1.242_660_947_388_078_438_6e-3)
            * r
            + 2.653_218_952_657_612_309_3e-2)
            * r
            + 2.965_605_718_285_048_912_3e-1)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((2.044_263_103_389_939_785_64e-15 * r + 1.421_511_758_316_445_888_7e-7)
            * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 1.487_536_129_085_061_485_25e-2)
            * r
            + 1.369_298_809_227_358_043_4e-1)
            * r
            + 5.998_322_065_558_879_376_9e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}
