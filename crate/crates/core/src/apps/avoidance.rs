//! Eight-direction avoidance decisions on the first NPU.
//!
//! Each motion direction owns one NPU1 neuron. Pre-processed motion evidence
//! arrives as external events on those addresses; mutual inhibition turns the
//! population into a winner-take-all, and the decision is the direction that
//! spiked most over a window.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::io::description::Network;
use crate::io::run::{run, RunOptions};
use crate::io::trace::{RasterFile, StimulusRecord, StimulusTrace};
use crate::processor::{NpuId, ProcessorConfig};
use crate::rng::Lcg;
use crate::synapse::GroupSparseConfig;

pub const DIRECTIONS: usize = 8;
pub const DEFAULT_WINDOW_STEPS: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecisionWindow {
    pub window_steps: u64,
}

impl DecisionWindow {
    pub fn new(window_steps: u64) -> Result<Self> {
        if window_steps == 0 {
            return Err(Error::config("window_steps", "must be at least 1"));
        }
        Ok(Self { window_steps })
    }

    /// Timesteps covered by window `index`.
    pub fn range(&self, index: u64) -> Range<u64> {
        index * self.window_steps..(index + 1) * self.window_steps
    }
}

impl Default for DecisionWindow {
    fn default() -> Self {
        Self {
            window_steps: DEFAULT_WINDOW_STEPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AvoidanceWeights {
    /// Weight between every pair of distinct direction neurons.
    pub inhibit: i32,
    /// Self-connection of each direction neuron; 0 disables it.
    pub excite: i32,
}

impl Default for AvoidanceWeights {
    fn default() -> Self {
        Self {
            inhibit: -2,
            excite: 0,
        }
    }
}

pub fn build_avoidance_network(weights: AvoidanceWeights) -> Result<Network> {
    let mut cfg = ProcessorConfig::new(DIRECTIONS, 1);
    let npu = &mut cfg.npu1;
    for src in 0..DIRECTIONS {
        for dst in 0..DIRECTIONS {
            let w = if src == dst {
                weights.excite
            } else {
                weights.inhibit
            };
            npu.set_weight(src, dst, w)?;
        }
    }
    npu.gs = GroupSparseConfig::from_memory(&npu.weights);
    let net = Network::new(cfg);
    net.validate()?;
    Ok(net)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub window: u64,
    pub direction: usize,
    /// Another direction matched the winner's count.
    pub tie: bool,
    pub counts: [u32; DIRECTIONS],
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{}",
            self.window,
            self.direction,
            u8::from(self.tie)
        )?;
        for c in self.counts {
            write!(f, ",{c}")?;
        }
        Ok(())
    }
}

pub const DECISION_HEADER: &str = "window,direction,tie,d0,d1,d2,d3,d4,d5,d6,d7";

/// Decides window `index`: the direction with the most NPU1 spikes, lowest
/// index on a tie.
pub fn decide_direction(
    raster: &RasterFile,
    window: DecisionWindow,
    index: u64,
) -> Result<Decision> {
    let range = window.range(index);
    let v = raster.spike_counts(NpuId::Npu1, range.clone(), DIRECTIONS);
    let counts: [u32; DIRECTIONS] = v.try_into().expect("one count per direction");
    let best = *counts.iter().max().expect("non-empty");
    if best == 0 {
        return Err(Error::NoDecision(format!(
            "window {index} (timesteps {}..{}) has no spikes",
            range.start, range.end
        )));
    }
    let direction = counts.iter().position(|&c| c == best).expect("max exists");
    Ok(Decision {
        window: index,
        direction,
        tie: counts.iter().filter(|&&c| c == best).count() > 1,
        counts,
    })
}

/// Per-timestep evidence levels of a synthetic motion trace. Every direction
/// receives one event per timestep: the dominant one around `dominant`, the
/// rest around `background`, each with uniform jitter of `±jitter`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvidenceProfile {
    pub dominant: i32,
    pub background: i32,
    pub jitter: i32,
}

impl Default for EvidenceProfile {
    fn default() -> Self {
        Self {
            dominant: 40,
            background: 12,
            jitter: 10,
        }
    }
}

/// Stimulus where window `i` is dominated by `dominant[i]`.
pub fn dominant_stimulus(
    dominant: &[usize],
    window: DecisionWindow,
    profile: EvidenceProfile,
    seed: u64,
) -> Result<StimulusTrace> {
    let mut rng = Lcg::new(seed);
    let mut records = Vec::new();
    for (i, &dir) in dominant.iter().enumerate() {
        if dir >= DIRECTIONS {
            return Err(Error::config(
                format!("dominant[{i}]"),
                format!("direction {dir} outside 0..{DIRECTIONS}"),
            ));
        }
        for t in window.range(i as u64) {
            for neuron in 0..DIRECTIONS {
                let mean = if neuron == dir {
                    profile.dominant
                } else {
                    profile.background
                };
                let value = (mean + rng.range(-profile.jitter, profile.jitter)).clamp(-128, 127);
                if value != 0 {
                    records.push(StimulusRecord {
                        timestep: t,
                        npu: NpuId::Npu1,
                        neuron,
                        value,
                    });
                }
            }
        }
    }
    StimulusTrace::new(records)
}

#[derive(Debug)]
pub struct AvoidanceOutcome {
    pub decisions: Vec<Result<Decision>>,
    /// Chip cycles (parallel NPUs) spent in each window.
    pub cycles: Vec<u64>,
    pub raster: RasterFile,
}

impl AvoidanceOutcome {
    pub fn mean_cycles_per_decision(&self) -> f64 {
        if self.cycles.is_empty() {
            return 0.0;
        }
        self.cycles.iter().sum::<u64>() as f64 / self.cycles.len() as f64
    }
}

/// Runs `windows` consecutive windows from rest and decides each one.
pub fn run_avoidance(
    network: &Network,
    stimulus: &StimulusTrace,
    window: DecisionWindow,
    windows: u64,
) -> Result<AvoidanceOutcome> {
    let out = run(
        network,
        stimulus,
        &RunOptions {
            steps: windows * window.window_steps,
            ..Default::default()
        },
    )?;
    let decisions = (0..windows)
        .map(|i| decide_direction(&out.raster, window, i))
        .collect();
    let cycles = out
        .cycles
        .chunks(window.window_steps as usize)
        .map(|c| c.iter().map(|r| r.parallel()).sum())
        .collect();
    Ok(AvoidanceOutcome {
        decisions,
        cycles,
        raster: out.raster,
    })
}
