//! Slot-by-slot simulation of the multi-level OTA aggregation and its MSE.
//!
//! Devices at level `l` transmit in slot `L - l + 1`. A leaf sends its
//! channel-inverted, scaled IVA; an intermediate forwards what it received
//! from its children plus its own channel-inverted contribution; the
//! destination scales its reception by `1/gamma` and adds its own IVA.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::NoiseProfile;
use crate::mapreduce::IvaProfile;
use crate::rng::rng_from;
use crate::topology::{AggregationTree, MIN_CHANNEL_GAIN};
use crate::{Error, Result};

/// Source transmit coefficients `eta` (length K-1) and destination filter `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverDesign {
    pub eta: Vec<Complex64>,
    pub gamma: f64,
}

impl TransceiverDesign {
    pub fn new(eta: Vec<Complex64>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
        }
        if eta.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::InvalidInput("eta must be finite".into()));
        }
        Ok(Self { eta, gamma })
    }

    /// `eta^T a`.
    pub fn weighted_sum(&self, a: &[Complex64]) -> Complex64 {
        self.eta.iter().zip(a).map(|(e, a)| e * a).sum()
    }
}

/// `|eta^T a / gamma - 1^T a|^2 + sigma^2 / gamma^2`.
pub fn analytic_mse(design: &TransceiverDesign, ivas: &IvaProfile, sigma_sq: f64) -> Result<f64> {
    if !(design.gamma > 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {}",
            design.gamma
        )));
    }
    let a = ivas.sources();
    if design.eta.len() != a.len() {
        return Err(Error::InvalidInput(format!(
            "design has {} coefficients for {} sources",
            design.eta.len(),
            a.len()
        )));
    }
    let bias = design.weighted_sum(a) / design.gamma - ivas.source_sum();
    Ok(bias.norm_sqr() + sigma_sq / (design.gamma * design.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leaf,
    Intermediate,
    Destination,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Leaf => "leaf",
            Role::Intermediate => "intermediate",
            Role::Destination => "destination",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Receive,
    Transmit,
}

/// One recorded signal; `device` is 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEvent {
    pub slot: usize,
    pub device: usize,
    pub role: Role,
    pub kind: SignalKind,
    pub signal: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    /// Transmitted signal per source.
    pub x: Vec<Complex64>,
    /// Received signal per device (`None` for leaves). The destination's entry
    /// already includes the `1/gamma` filter.
    pub y: Vec<Option<Complex64>>,
    /// Receiver noise draw per device (zero for leaves).
    pub noise: Vec<Complex64>,
    /// `sum_{j in inter} h_{j->K} n_j + n_K`.
    pub accumulated_noise: Complex64,
    pub estimate: Complex64,
    pub error: Complex64,
    pub slots_used: usize,
    /// Per-slot signals, filled only by [`simulate_aggregation_traced`].
    pub events: Vec<SlotEvent>,
}

impl ProtocolTrace {
    pub fn instantaneous_power(&self, i: usize) -> f64 {
        self.x[i].norm_sqr()
    }

    /// Writes `slot device role kind re im`, devices 1-based.
    pub fn write_events<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "slot,device,role,kind,re,im")?;
        for e in &self.events {
            let kind = match e.kind {
                SignalKind::Receive => "rx",
                SignalKind::Transmit => "tx",
            };
            writeln!(
                w,
                "{},{},{},{kind},{:.16e},{:.16e}",
                e.slot,
                e.device + 1,
                e.role.as_str(),
                e.signal.re,
                e.signal.im
            )?;
        }
        Ok(())
    }
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

pub fn simulate_aggregation(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    design: &TransceiverDesign,
    noise: &NoiseProfile,
    seed: u64,
) -> Result<ProtocolTrace> {
    simulate(tree, ivas, design, noise, seed, false)
}

/// Same as [`simulate_aggregation`] but records every per-slot signal.
pub fn simulate_aggregation_traced(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    design: &TransceiverDesign,
    noise: &NoiseProfile,
    seed: u64,
) -> Result<ProtocolTrace> {
    simulate(tree, ivas, design, noise, seed, true)
}

fn simulate(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    design: &TransceiverDesign,
    noise: &NoiseProfile,
    seed: u64,
    record: bool,
) -> Result<ProtocolTrace> {
    let k = tree.k();
    let root = tree.root();
    if ivas.k() != k || noise.len() != k || design.eta.len() != tree.sources() {
        return Err(Error::InvalidInput(format!(
            "size mismatch: tree {k}, ivas {}, noise {}, eta {}",
            ivas.k(),
            noise.len(),
            design.eta.len()
        )));
    }
    let a = ivas.values();

    // Noise is drawn in device order so the stream does not depend on the schedule.
    let mut rng = rng_from(seed, &[]);
    let mut n = vec![Complex64::new(0.0, 0.0); k];
    for (j, nj) in n.iter_mut().enumerate() {
        if j == root || tree.is_intermediate(j) {
            *nj = complex_gaussian(&mut rng, noise.get(j));
        }
    }

    let depth = tree.depth();
    let mut x = vec![Complex64::new(0.0, 0.0); k - 1];
    let mut y = vec![None; k];
    let mut events = Vec::new();

    let receive = |j: usize, x: &[Complex64]| -> Complex64 {
        tree.children(j)
            .iter()
            .map(|&c| tree.hop_channel(c) * x[c])
            .sum::<Complex64>()
            + n[j]
    };

    for level in (1..=depth).rev() {
        let slot = depth - level + 1;
        for i in tree.level_set(level) {
            let h = tree.effective_channel(i);
            if h.norm() < MIN_CHANNEL_GAIN {
                return Err(Error::DegenerateChannel { device: i + 1 });
            }
            let own = design.eta[i] * a[i] / h;
            let (role, sent) = if tree.is_leaf(i) {
                (Role::Leaf, own)
            } else {
                let yi = receive(i, &x);
                y[i] = Some(yi);
                if record {
                    events.push(SlotEvent {
                        slot: slot - 1,
                        device: i,
                        role: Role::Intermediate,
                        kind: SignalKind::Receive,
                        signal: yi,
                    });
                }
                (Role::Intermediate, yi + own)
            };
            x[i] = sent;
            if record {
                events.push(SlotEvent {
                    slot,
                    device: i,
                    role,
                    kind: SignalKind::Transmit,
                    signal: sent,
                });
            }
        }
    }

    let y_root = receive(root, &x) / design.gamma;
    y[root] = Some(y_root);
    if record {
        events.push(SlotEvent {
            slot: depth,
            device: root,
            role: Role::Destination,
            kind: SignalKind::Receive,
            signal: y_root,
        });
    }
    let estimate = y_root + a[root];
    let accumulated_noise = tree
        .intermediates()
        .into_iter()
        .map(|j| tree.effective_channel(j) * n[j])
        .sum::<Complex64>()
        + n[root];

    Ok(ProtocolTrace {
        x,
        y,
        noise: n,
        accumulated_noise,
        estimate,
        error: estimate - ivas.ground_truth(),
        slots_used: depth,
        events,
    })
}

/// Expected (over noise) and sampled transmit power of one source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub device: usize,
    pub expected: f64,
    pub instantaneous: f64,
    pub cap: f64,
    /// `cap - expected`; negative means the cap is violated on average.
    pub margin: f64,
}

/// Expected power of source `j`:
/// `|sum_{i in N_j^+ + {j}} eta_i a_i|^2 / |h_{j->K}|^2 +
/// sum_{i in N_j^+ cap inter} |h_{i->j}|^2 sigma_i^2 + sigma_j^2`, with the
/// noise terms present only for intermediates.
pub fn expected_power(
    tree: &AggregationTree,
    design: &TransceiverDesign,
    ivas: &IvaProfile,
    noise: &NoiseProfile,
    j: usize,
) -> f64 {
    let a = ivas.values();
    let signal: Complex64 = design.eta[j] * a[j]
        + tree
            .descendants(j)
            .iter()
            .map(|&i| design.eta[i] * a[i])
            .sum::<Complex64>();
    signal.norm_sqr() / tree.effective_channel(j).norm_sqr() + noise.forwarded_power(tree, j)
}

pub fn measure_power(
    trace: &ProtocolTrace,
    tree: &AggregationTree,
    design: &TransceiverDesign,
    ivas: &IvaProfile,
    noise: &NoiseProfile,
    caps: &[f64],
) -> Vec<PowerReport> {
    (0..tree.sources())
        .map(|j| {
            let expected = expected_power(tree, design, ivas, noise, j);
            PowerReport {
                device: j,
                expected,
                instantaneous: trace.instantaneous_power(j),
                cap: caps[j],
                margin: caps[j] - expected,
            }
        })
        .collect()
}

/// Monte Carlo mean of `|e|^2` and its standard error over `draws` noise
/// realizations with seeds derived from `seed`.
pub fn empirical_mse(
    tree: &AggregationTree,
    ivas: &IvaProfile,
    design: &TransceiverDesign,
    noise: &NoiseProfile,
    draws: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if draws < 2 {
        return Err(Error::InvalidInput("need at least 2 draws".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for d in 0..draws {
        let e = simulate_aggregation(tree, ivas, design, noise, crate::rng::derive_seed(seed, &[d as u64]))?
            .error
            .norm_sqr();
        sum += e;
        sum_sq += e * e;
    }
    let n = draws as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
