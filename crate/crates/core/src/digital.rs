//! Digital baseline: uniform quantization, uncoded Gray-mapped QAM and
//! per-hop decode-and-forward relaying to the destination.
//!
//! Each IVA component is quantized to `Q` bits and carried by one `2^Q`-QAM
//! symbol, so a complex IVA costs two resource blocks per hop.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::NoiseProfile;
use crate::mapreduce::{IvaDistribution, IvaProfile};
use crate::protocol::complex_gaussian;
use crate::rng::rng_from;
use crate::topology::AggregationTree;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    pub q_bits: u32,
    /// Range `A`; levels are `0, step, ..., A`.
    pub range: f64,
    /// Dithered (unbiased) rounding instead of nearest-level rounding.
    pub randomized: bool,
}

impl QuantizerConfig {
    pub fn new(q_bits: u32, range: f64, randomized: bool) -> Result<Self> {
        if !(1..=16).contains(&q_bits) {
            return Err(Error::Config(format!("Q must be in 1..=16, got {q_bits}")));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::Config(format!("range A must be positive, got {range}")));
        }
        Ok(Self {
            q_bits,
            range,
            randomized,
        })
    }

    pub fn max_level(&self) -> u32 {
        (1u32 << self.q_bits) - 1
    }

    /// `A / (2^Q - 1)`.
    pub fn step(&self) -> f64 {
        self.range / self.max_level() as f64
    }

    /// Level index for one component; the flag reports clamping into `[0, A]`.
    pub fn level<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> (u32, bool) {
        let clamped = !(0.0..=self.range).contains(&v);
        let x = v.clamp(0.0, self.range) / self.step();
        let top = self.max_level() as f64;
        let level = if self.randomized {
            let lo = x.floor().min(top);
            let up = rng.random::<f64>() < x - lo;
            lo + f64::from(u8::from(up))
        } else {
            x.round()
        };
        (level.min(top) as u32, clamped)
    }
}

/// Bits of a level, most significant first.
pub fn level_bits(level: u32, q_bits: u32) -> Vec<u8> {
    (0..q_bits).rev().map(|b| ((level >> b) & 1) as u8).collect()
}

pub fn bits_level(bits: &[u8]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub bits_re: Vec<u8>,
    pub bits_im: Vec<u8>,
    /// `step * n` per component.
    pub message: Complex64,
    pub clamped: usize,
}

/// Quantizes a value already shifted into `[0, A]` per component.
pub fn quantize<R: Rng + ?Sized>(value: Complex64, cfg: &QuantizerConfig, rng: &mut R) -> Quantized {
    let (lr, cr) = cfg.level(value.re, rng);
    let (li, ci) = cfg.level(value.im, rng);
    Quantized {
        bits_re: level_bits(lr, cfg.q_bits),
        bits_im: level_bits(li, cfg.q_bits),
        message: Complex64::new(lr as f64, li as f64) * cfg.step(),
        clamped: usize::from(cr) + usize::from(ci),
    }
}

fn gray(p: u32) -> u32 {
    p ^ (p >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut p = g;
    while g > 0 {
        g >>= 1;
        p ^= g;
    }
    p
}

/// Rectangular Gray-mapped `2^Q`-QAM with unit average energy: the top
/// `ceil(Q/2)` bits select the in-phase amplitude, the rest the quadrature one.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    q_bits: u32,
    bits_i: u32,
    bits_q: u32,
    scale: f64,
}

impl Constellation {
    pub fn new(q_bits: u32) -> Result<Self> {
        if !(1..=16).contains(&q_bits) {
            return Err(Error::Config(format!("Q must be in 1..=16, got {q_bits}")));
        }
        let bits_i = q_bits.div_ceil(2);
        let bits_q = q_bits / 2;
        let axis_energy = |b: u32| {
            let m = (1u64 << b) as f64;
            (m * m - 1.0) / 3.0
        };
        let scale = (axis_energy(bits_i) + axis_energy(bits_q)).sqrt().recip();
        Ok(Self {
            q_bits,
            bits_i,
            bits_q,
            scale,
        })
    }

    pub fn q_bits(&self) -> u32 {
        self.q_bits
    }

    pub fn size(&self) -> usize {
        1 << self.q_bits
    }

    fn amplitude(p: u32, bits: u32) -> f64 {
        let m = (1u32 << bits) as f64;
        2.0 * p as f64 - (m - 1.0)
    }

    fn nearest(v: f64, bits: u32) -> u32 {
        let m = 1u32 << bits;
        let p = ((v + (m as f64 - 1.0)) / 2.0).round();
        p.clamp(0.0, (m - 1) as f64) as u32
    }

    pub fn modulate(&self, label: u32) -> Complex64 {
        let gi = label >> self.bits_q;
        let gq = label & ((1 << self.bits_q) - 1);
        Complex64::new(
            Self::amplitude(gray_inverse(gi), self.bits_i),
            Self::amplitude(gray_inverse(gq), self.bits_q),
        ) * self.scale
    }

    /// Minimum-distance (ML under AWGN) label for an equalized sample.
    pub fn detect(&self, y: Complex64) -> u32 {
        let pi = Self::nearest(y.re / self.scale, self.bits_i);
        let pq = Self::nearest(y.im / self.scale, self.bits_q);
        (gray(pi) << self.bits_q) | gray(pq)
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.size() as u32).map(|l| self.modulate(l)).collect()
    }
}

/// One decode-and-forward hop: `y = h sqrt(P) s + n`, `n ~ CN(0, noise_var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub h: Complex64,
    pub power: f64,
    pub noise_var: f64,
}

/// Carries one symbol label over `hops`, re-detecting at every receiver.
/// Returns the delivered label and the number of hops whose detection differed
/// from the symbol sent on that hop.
pub fn relay_transmit<R: Rng + ?Sized>(
    label: u32,
    hops: &[Hop],
    constellation: &Constellation,
    rng: &mut R,
) -> (u32, usize) {
    let mut current = label;
    let mut errors = 0;
    for hop in hops {
        let gain = hop.h * hop.power.sqrt();
        let y = gain * constellation.modulate(current) + complex_gaussian(rng, hop.noise_var);
        let detected = constellation.detect(y / gain);
        errors += usize::from(detected != current);
        current = detected;
    }
    (current, errors)
}

/// Hops from source `i` to the destination. Hop `u -> pi(u)` uses the hop
/// channel of `u`, the transmit power of `u` and the receiver noise of `pi(u)`.
pub fn path_hops(tree: &AggregationTree, i: usize, powers: &[f64], noise: &NoiseProfile) -> Vec<Hop> {
    let path = tree.path_to_root(i);
    path.windows(2)
        .map(|w| Hop {
            h: tree.hop_channel(w[0]),
            power: powers[w[0]],
            noise_var: noise.get(w[1]),
        })
        .collect()
}

/// `sum_i 2 |H(P_{i->K})|`: two symbols per source per hop on its path.
pub fn digital_resource_blocks(tree: &AggregationTree) -> usize {
    (0..tree.sources()).map(|i| 2 * tree.level(i)).sum()
}

/// Quantizer plus modulation for one digital scheme. `offset` is subtracted
/// before quantization and added back after decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalScheme {
    pub quantizer: QuantizerConfig,
    pub offset: Complex64,
    pub constellation: Constellation,
}

impl DigitalScheme {
    pub fn new(q_bits: u32, range: f64, offset: Complex64, randomized: bool) -> Result<Self> {
        Ok(Self {
            quantizer: QuantizerConfig::new(q_bits, range, randomized)?,
            offset,
            constellation: Constellation::new(q_bits)?,
        })
    }

    /// Quantizer window taken from the IVA distribution: both components share
    /// the range `A` of the distribution's component window.
    pub fn for_distribution(q_bits: u32, dist: &IvaDistribution, randomized: bool) -> Result<Self> {
        let [(re_lo, re_hi), (im_lo, _)] = dist.component_windows();
        Self::new(q_bits, re_hi - re_lo, Complex64::new(re_lo, im_lo), randomized)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DigitalOutcome {
    /// Mean `|a_hat - a|^2` over trials.
    pub mse: f64,
    pub mse_se: f64,
    /// `mse / |ground truth|^2`.
    pub nmse: f64,
    pub nmse_se: f64,
    pub resource_blocks: usize,
    pub hop_symbol_errors: usize,
    pub symbols_sent: usize,
    pub clamped: usize,
}

/// Monte Carlo quantize, relay and sum pipeline. The destination adds every
/// decoded message as received (there is no error detection) plus its own IVA.
pub fn digital_shuffle_mse(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    scheme: &DigitalScheme,
    powers: &[f64],
    noise: &NoiseProfile,
    trials: usize,
    seed: u64,
) -> Result<DigitalOutcome> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    if powers.len() != tree.sources() || ivas.k() != tree.k() || noise.len() != tree.k() {
        return Err(Error::InvalidInput("digital inputs do not match the tree".into()));
    }
    let truth = ivas.ground_truth();
    let paths: Vec<Vec<Hop>> = (0..tree.sources())
        .map(|i| path_hops(tree, i, powers, noise))
        .collect();
    let mut errors = Vec::with_capacity(trials);
    let mut hop_symbol_errors = 0;
    let mut symbols_sent = 0;
    let mut clamped = 0;
    for t in 0..trials {
        let mut rng = rng_from(seed, &[t as u64]);
        let mut estimate = ivas.destination_value();
        for (i, hops) in paths.iter().enumerate() {
            let quantized = quantize(ivas.values()[i] - scheme.offset, &scheme.quantizer, &mut rng);
            clamped += quantized.clamped;
            let mut parts = [0.0; 2];
            for (part, bits) in parts.iter_mut().zip([&quantized.bits_re, &quantized.bits_im]) {
                let (label, errs) = relay_transmit(bits_level(bits), hops, &scheme.constellation, &mut rng);
                hop_symbol_errors += errs;
                symbols_sent += hops.len();
                *part = label as f64 * scheme.quantizer.step();
            }
            estimate += Complex64::new(parts[0], parts[1]) + scheme.offset;
        }
        errors.push((estimate - truth).norm_sqr());
    }
    let n = trials as f64;
    let mse = errors.iter().sum::<f64>() / n;
    let se = if trials > 1 {
        let var = errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let norm = truth.norm_sqr();
    Ok(DigitalOutcome {
        mse,
        mse_se: se,
        nmse: mse / norm,
        nmse_se: se / norm,
        resource_blocks: digital_resource_blocks(tree),
        hop_symbol_errors,
        symbols_sent,
        clamped,
    })
}
