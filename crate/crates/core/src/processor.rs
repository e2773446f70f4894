//! Top controller: two NPUs joined by the hierarchy-population scheduler.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cycle::{cycle_model, CycleModel, CycleReport, DEFAULT_CYCLE_MODEL};
use crate::error::{Error, Result};
use crate::npu::{npu_timestep, ExternalEvent, NpuConfig, NpuState};
use crate::synapse::SpikeStream;

pub const NPU1_MAX_NEURONS: usize = 32;
pub const NPU2_MAX_NEURONS: usize = 128;
pub const DEFAULT_CLOCK_HZ: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum NpuId {
    Npu1,
    Npu2,
}

impl NpuId {
    pub fn index(self) -> usize {
        match self {
            NpuId::Npu1 => 0,
            NpuId::Npu2 => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl TryFrom<u8> for NpuId {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(NpuId::Npu1),
            2 => Ok(NpuId::Npu2),
            _ => Err(format!("npu id {v} is neither 1 nor 2")),
        }
    }
}

impl From<NpuId> for u8 {
    fn from(id: NpuId) -> u8 {
        id.number()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessorConfig {
    pub npu1: NpuConfig,
    /// Rows `0..npu1.targets()` of this NPU's memory are the feedforward
    /// weights from NPU1; its own recurrent rows follow.
    pub npu2: NpuConfig,
    pub clock_hz: u64,
    pub cycle_model: String,
}

impl ProcessorConfig {
    /// Both NPUs with `n1` and `n2` active neurons, zero weights.
    pub fn new(n1: usize, n2: usize) -> Self {
        Self {
            npu1: NpuConfig::new(NPU1_MAX_NEURONS, n1, 0),
            npu2: NpuConfig::new(NPU2_MAX_NEURONS, n2, n1 + 1),
            clock_hz: DEFAULT_CLOCK_HZ,
            cycle_model: DEFAULT_CYCLE_MODEL.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.npu1.max_neurons != NPU1_MAX_NEURONS {
            return Err(Error::config(
                "npu1.max_neurons",
                "first NPU has 32 neurons",
            ));
        }
        if self.npu2.max_neurons != NPU2_MAX_NEURONS {
            return Err(Error::config(
                "npu2.max_neurons",
                "second NPU has 128 neurons",
            ));
        }
        if self.npu1.upstream_sources != 0 {
            return Err(Error::config(
                "npu1.upstream_sources",
                "feedforward is strictly NPU1 -> NPU2",
            ));
        }
        if self.npu2.upstream_sources != self.npu1.targets() {
            return Err(Error::config(
                "npu2.upstream_sources",
                format!(
                    "{} feedforward rows, NPU1 has {} sources",
                    self.npu2.upstream_sources,
                    self.npu1.targets()
                ),
            ));
        }
        self.npu1.validate("npu1")?;
        self.npu2.validate("npu2")?;
        if self.clock_hz == 0 {
            return Err(Error::config("clock_hz", "must be positive"));
        }
        cycle_model(&self.cycle_model)?;
        Ok(())
    }

    /// Feedforward weight from NPU1 neuron `src` onto NPU2 neuron `dst`.
    pub fn ff_weight(&self, src: usize, dst: usize) -> i32 {
        self.npu2.weights.get(src, dst).into()
    }

    pub fn set_ff_weight(&mut self, src: usize, dst: usize, w: i32) -> Result<()> {
        self.npu2.set_weight(src, dst, w)
    }

    pub fn npu(&self, id: NpuId) -> &NpuConfig {
        match id {
            NpuId::Npu1 => &self.npu1,
            NpuId::Npu2 => &self.npu2,
        }
    }
}

/// NPU1 spikes of the previous timestep, waiting to be fed to NPU2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulerBuffer {
    pub pending: SpikeStream,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessorState {
    pub timestep: u64,
    pub npu1: NpuState,
    pub npu2: NpuState,
    pub scheduler: SchedulerBuffer,
}

impl ProcessorState {
    pub fn resting(cfg: &ProcessorConfig) -> Self {
        Self {
            timestep: 0,
            npu1: NpuState::resting(&cfg.npu1),
            npu2: NpuState::resting(&cfg.npu2),
            scheduler: SchedulerBuffer {
                pending: SpikeStream::new(cfg.npu1.targets()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutput {
    pub timestep: u64,
    pub rasters: [SpikeStream; 2],
    /// What NPU2 consumed from the scheduler this timestep.
    pub feedforward: SpikeStream,
    pub report: CycleReport,
}

/// Runs one timestep on both NPUs. With `concurrent` set the two NPUs are
/// evaluated on separate threads; results are identical either way.
pub fn processor_timestep(
    state: &mut ProcessorState,
    cfg: &ProcessorConfig,
    model: &dyn CycleModel,
    stimulus: &[(NpuId, ExternalEvent)],
    concurrent: bool,
) -> Result<StepOutput> {
    let mut ext1 = Vec::new();
    let mut ext2 = Vec::new();
    for &(id, ev) in stimulus {
        match id {
            NpuId::Npu1 => ext1.push(ev),
            NpuId::Npu2 => ext2.push(ev),
        }
    }
    let upstream = SpikeStream::new(0);
    let feedforward = state.scheduler.pending.clone();
    let ProcessorState { npu1, npu2, .. } = state;
    let (r1, r2) = if concurrent {
        std::thread::scope(|s| {
            let h = s.spawn(|| npu_timestep(npu1, &cfg.npu1, model, &ext1, &upstream));
            let r2 = npu_timestep(npu2, &cfg.npu2, model, &ext2, &feedforward);
            (h.join().expect("NPU1 worker panicked"), r2)
        })
    } else {
        (
            npu_timestep(npu1, &cfg.npu1, model, &ext1, &upstream),
            npu_timestep(npu2, &cfg.npu2, model, &ext2, &feedforward),
        )
    };
    let (spikes1, c1) = r1?;
    let (spikes2, c2) = r2?;
    state.scheduler.pending = spikes1.clone();
    let out = StepOutput {
        timestep: state.timestep,
        rasters: [spikes1, spikes2],
        feedforward,
        report: CycleReport {
            model: model.name(),
            npu: [c1, c2],
        },
    };
    state.timestep += 1;
    Ok(out)
}

/// A configured processor with its state and resolved cycle model.
#[derive(Clone, Debug)]
pub struct Processor {
    cfg: ProcessorConfig,
    model: Arc<dyn CycleModel>,
    state: ProcessorState,
    concurrent: bool,
}

impl Processor {
    pub fn new(cfg: ProcessorConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cycle_model(&cfg.cycle_model)?;
        let state = ProcessorState::resting(&cfg);
        Ok(Self {
            cfg,
            model,
            state,
            concurrent: false,
        })
    }

    pub fn with_model(mut self, model: Arc<dyn CycleModel>) -> Self {
        self.cfg.cycle_model = model.name().to_string();
        self.model = model;
        self
    }

    pub fn concurrent(mut self, yes: bool) -> Self {
        self.concurrent = yes;
        self
    }

    pub fn config(&self) -> &ProcessorConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ProcessorState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ProcessorState {
        &mut self.state
    }

    pub fn step(&mut self, stimulus: &[(NpuId, ExternalEvent)]) -> Result<StepOutput> {
        processor_timestep(
            &mut self.state,
            &self.cfg,
            self.model.as_ref(),
            stimulus,
            self.concurrent,
        )
    }
}

/// Full recurrent connectivity within each NPU.
pub fn synapse_count(n1_total: u64, n2_total: u64) -> u64 {
    n1_total * n1_total + n2_total * n2_total
}

/// Fractional saving in synaptic operations of an `n → m` uni-directional
/// hierarchy over one flat recurrent population of `n + m` neurons.
pub fn hierarchy_op_reduction(n: u64, m: u64) -> f64 {
    let total = (n + m) * (n + m);
    let hier = n * n + (n + m) * m;
    (total - hier) as f64 / total as f64
}
