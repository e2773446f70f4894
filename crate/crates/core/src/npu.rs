//! One neuromorphic processing unit: population controller, post-synaptic
//! core and I-QIF neuron cluster.
//!
//! Neuron addresses `0..active` are the population; address `active` is the
//! global excitatory/inhibitory neuron. The spike stream seen by the decoder
//! is `[upstream sources.., own population.., own global]`, and SRAM row `r`
//! belongs to stream source `r` (the own global neuron has no row; its fan-out
//! is a single broadcast weight).

use serde::{Deserialize, Serialize};

use crate::cycle::{CycleModel, NpuCycles};
use crate::error::{Error, Result};
use crate::neuron::{neuron_step, NeuronParams, NeuronState};
use crate::synapse::{
    accumulate_spike, decode_spike_stream_with, GroupSparseConfig, GsCode, PostSynapticState,
    SpikeStream, SynapticWeight, WeightMemory, WEIGHTS_PER_WORD,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlobalMode {
    Excitatory,
    #[default]
    Inhibitory,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalNeuron {
    pub params: NeuronParams,
    pub out_weight: SynapticWeight,
    pub mode: GlobalMode,
}

impl Default for GlobalNeuron {
    fn default() -> Self {
        Self {
            params: NeuronParams::default(),
            out_weight: SynapticWeight::default(),
            mode: GlobalMode::Inhibitory,
        }
    }
}

impl GlobalNeuron {
    /// Broadcast value with the sign set by the mode.
    pub fn broadcast(&self) -> i32 {
        let magnitude = i32::from(self.out_weight).abs();
        match self.mode {
            GlobalMode::Excitatory => magnitude,
            GlobalMode::Inhibitory => -magnitude,
        }
    }
}

/// Split of one population into two uni-directionally connected halves:
/// neurons `0..n1` feed `n1..n1+n2`, never the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chop {
    pub n1: usize,
    pub n2: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpuConfig {
    pub max_neurons: usize,
    pub active_neurons: usize,
    /// Sources arriving from a lower hierarchy level (0 for the first NPU).
    pub upstream_sources: usize,
    pub chop: Option<Chop>,
    pub params: Vec<NeuronParams>,
    pub decay_a: u8,
    pub gs: GroupSparseConfig,
    pub global: GlobalNeuron,
    /// `upstream_sources + active_neurons` rows over `active_neurons + 1` targets.
    pub weights: WeightMemory,
}

impl NpuConfig {
    /// A population of `active` neurons with default parameters, zero weights
    /// and every group enabled.
    pub fn new(max_neurons: usize, active: usize, upstream_sources: usize) -> Self {
        let weights = WeightMemory::zeros(upstream_sources + active, active + 1);
        Self {
            max_neurons,
            active_neurons: active,
            upstream_sources,
            chop: None,
            params: vec![NeuronParams::default(); active],
            decay_a: 3,
            gs: GroupSparseConfig::dense(active + 1),
            global: GlobalNeuron::default(),
            weights,
        }
    }

    pub fn targets(&self) -> usize {
        self.active_neurons + 1
    }

    /// Length of the spike stream entering the decoder.
    pub fn stream_len(&self) -> usize {
        self.upstream_sources + self.active_neurons + 1
    }

    pub fn global_index(&self) -> usize {
        self.active_neurons
    }

    fn global_source(&self) -> usize {
        self.upstream_sources + self.active_neurons
    }

    pub fn params_for(&self, addr: usize) -> &NeuronParams {
        if addr == self.active_neurons {
            &self.global.params
        } else {
            &self.params[addr]
        }
    }

    pub fn set_weight(&mut self, source_row: usize, target: usize, w: i32) -> Result<()> {
        let w = SynapticWeight::new(w).map_err(|_| Error::WeightOutOfRange {
            index: source_row * self.targets() + target,
            value: w,
        })?;
        self.weights.set(source_row, target, w);
        Ok(())
    }

    /// Synaptic operations of one dense timestep.
    pub fn op_count(&self) -> usize {
        match self.chop {
            Some(Chop { n1, n2 }) => chop_op_count(n1, n2),
            None => self.active_neurons * self.active_neurons,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let err = |field: &str, msg: String| Error::config(format!("{path}.{field}"), msg);
        if !matches!(self.max_neurons, 32 | 128) {
            return Err(err(
                "max_neurons",
                format!(
                    "{} is not a supported NPU size (32 or 128)",
                    self.max_neurons
                ),
            ));
        }
        if self.active_neurons == 0 || self.active_neurons > self.max_neurons {
            return Err(err(
                "active_neurons",
                format!("{} outside 1..={}", self.active_neurons, self.max_neurons),
            ));
        }
        match self.chop {
            None => {
                if !self.active_neurons.is_power_of_two() {
                    return Err(err(
                        "active_neurons",
                        format!("{} is not a power of two", self.active_neurons),
                    ));
                }
            }
            Some(c) => {
                check_chop_sizes(c.n1, c.n2, self.max_neurons)
                    .map_err(|e| err("chop", e.to_string()))?;
                if c.n1 + c.n2 != self.active_neurons {
                    return Err(err(
                        "chop",
                        format!(
                            "{} + {} does not equal active_neurons {}",
                            c.n1, c.n2, self.active_neurons
                        ),
                    ));
                }
                if let Some((s, t)) = self.backward_weight(c) {
                    return Err(err(
                        "chop",
                        format!("weight from sub-population 2 neuron {s} to sub-population 1 neuron {t}"),
                    ));
                }
            }
        }
        if self.params.len() != self.active_neurons {
            return Err(err(
                "params",
                format!(
                    "{} parameter sets for {} neurons",
                    self.params.len(),
                    self.active_neurons
                ),
            ));
        }
        for (i, p) in self.params.iter().enumerate() {
            p.validate()
                .map_err(|e| err(&format!("params[{i}]"), e.to_string()))?;
        }
        self.global
            .params
            .validate()
            .map_err(|e| err("global.params", e.to_string()))?;
        if self.decay_a > 7 {
            return Err(err("decay_a", format!("{} outside 0..=7", self.decay_a)));
        }
        let rows = self.upstream_sources + self.active_neurons;
        if self.weights.rows() != rows || self.weights.targets() != self.targets() {
            return Err(err(
                "weights",
                format!(
                    "memory is {}x{}, expected {}x{}",
                    self.weights.rows(),
                    self.weights.targets(),
                    rows,
                    self.targets()
                ),
            ));
        }
        self.gs
            .validate(self.weights.groups())
            .map_err(|e| err("gs", e.to_string()))?;
        Ok(())
    }

    fn backward_weight(&self, c: Chop) -> Option<(usize, usize)> {
        let first = self.upstream_sources + c.n1;
        for s in 0..c.n2 {
            for t in 0..c.n1 {
                if self.weights.get(first + s, t).get() != 0 {
                    return Some((c.n1 + s, t));
                }
            }
        }
        None
    }
}

/// `n1·n1 + (n1 + n2)·n2`: the first half reaches both halves, the second
/// half reaches only itself.
pub fn chop_op_count(n1: usize, n2: usize) -> usize {
    n1 * n1 + (n1 + n2) * n2
}

fn check_chop_sizes(n1: usize, n2: usize, max: usize) -> Result<()> {
    if !n1.is_power_of_two() || !n2.is_power_of_two() {
        return Err(Error::Chop(format!(
            "sub-population sizes {n1} and {n2} must both be powers of two"
        )));
    }
    if n1 + n2 > max {
        return Err(Error::Chop(format!("{n1} + {n2} exceeds {max} neurons")));
    }
    Ok(())
}

/// Splits the population into `n1` then `n2` neurons. The weight memory must
/// already be laid out for `n1 + n2` neurons with no sub-population 2 to
/// sub-population 1 weight; rows of sub-population 2 are then masked to the
/// groups covering sub-population 2 and the global neuron.
pub fn configure_chop(cfg: &NpuConfig, n1: usize, n2: usize) -> Result<NpuConfig> {
    check_chop_sizes(n1, n2, cfg.max_neurons)?;
    if n1 + n2 != cfg.active_neurons {
        return Err(Error::Chop(format!(
            "{n1} + {n2} does not match the {} neurons the weights are laid out for",
            cfg.active_neurons
        )));
    }
    let chop = Chop { n1, n2 };
    if let Some((s, t)) = cfg.backward_weight(chop) {
        return Err(Error::Chop(format!(
            "sub-population 2 neuron {s} has a weight onto sub-population 1 neuron {t}"
        )));
    }
    let mut out = cfg.clone();
    out.chop = Some(chop);
    let first_group = n1 / WEIGHTS_PER_WORD;
    let last_group = (n1 + n2) / WEIGHTS_PER_WORD;
    let sub2_mask = (first_group..=last_group).fold(0u64, |m, g| m | (1 << g));
    for s in 0..n2 {
        let row = cfg.upstream_sources + n1 + s;
        let code = GsCode(cfg.gs.code_for(row).0 & sub2_mask);
        out.gs.overrides.insert(row, code);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExternalEvent {
    pub neuron_addr: usize,
    pub value: i32,
}

impl ExternalEvent {
    pub fn new(neuron_addr: usize, value: i32) -> Self {
        Self { neuron_addr, value }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpuState {
    pub neurons: Vec<NeuronState>,
    pub psp: PostSynapticState,
    pub last_spikes: SpikeStream,
}

impl NpuState {
    /// Every neuron at its resting potential, accumulators cleared.
    pub fn resting(cfg: &NpuConfig) -> Self {
        let neurons = (0..cfg.targets())
            .map(|k| NeuronState::at(cfg.params_for(k).v_r))
            .collect();
        Self {
            neurons,
            psp: PostSynapticState::new(cfg.targets(), cfg.decay_a),
            last_spikes: SpikeStream::new(cfg.targets()),
        }
    }
}

/// One timestep: external stimulus, inter-spike accumulation, decay, PDE.
/// Returns this timestep's spikes (also kept as `last_spikes`) and the cycles
/// charged by `model`.
pub fn npu_timestep(
    state: &mut NpuState,
    cfg: &NpuConfig,
    model: &dyn CycleModel,
    external: &[ExternalEvent],
    feedforward: &SpikeStream,
) -> Result<(SpikeStream, NpuCycles)> {
    if feedforward.len() != cfg.upstream_sources {
        return Err(Error::config(
            "feedforward",
            format!(
                "stream has {} bits, NPU expects {} upstream sources",
                feedforward.len(),
                cfg.upstream_sources
            ),
        ));
    }
    for (i, ev) in external.iter().enumerate() {
        if ev.neuron_addr >= cfg.targets() {
            return Err(Error::EventAddress {
                event: i,
                addr: ev.neuron_addr,
                limit: cfg.targets(),
            });
        }
        if !(-128..=127).contains(&ev.value) {
            return Err(Error::EventValue {
                event: i,
                value: ev.value,
            });
        }
    }

    let mut cycles = NpuCycles {
        external: model.external_cycles(external.len()),
        ..Default::default()
    };
    for ev in external {
        state.psp.y[ev.neuron_addr] += ev.value;
    }

    let stream = feedforward.concat(&state.last_spikes);
    let global_source = cfg.global_source();
    let schedule = decode_spike_stream_with(&stream, |src| {
        if src == global_source {
            GsCode(1)
        } else {
            cfg.gs.code_for(src)
        }
    });
    for entry in &schedule.entries {
        if entry.source == global_source {
            state.psp.add_all(cfg.global.broadcast());
        } else {
            accumulate_spike(entry.source, &cfg.weights, &cfg.gs, &mut state.psp)?;
        }
    }
    state.psp.saturate();
    let spike = model.spike_cycles(&schedule);
    cycles.scan = spike.scan;
    cycles.mac = spike.mac;

    state.psp.decay();
    cycles.decay = model.decay_cycles(cfg.targets());

    let mut out = SpikeStream::new(cfg.targets());
    for k in 0..cfg.targets() {
        let (next, spiked) = neuron_step(state.neurons[k], cfg.params_for(k), state.psp.y[k]);
        state.neurons[k] = next;
        if spiked {
            out.set(k, true);
        }
    }
    cycles.pde = model.pde_cycles(cfg.targets());
    state.last_spikes = out.clone();
    Ok((out, cycles))
}
