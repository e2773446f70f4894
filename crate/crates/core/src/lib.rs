//! Bit-exact emulator of a two-NPU population-based spiking neuromorphic
//! processor built on integer quadratic integrate-and-fire neurons.

pub mod apps;
pub mod cycle;
pub mod error;
pub mod io;
pub mod neuron;
pub mod npu;
pub mod processor;
pub mod rng;
pub mod synapse;

pub use cycle::{CycleModel, CycleModelRegistry, CycleReport, NpuCycles};
pub use error::{Error, Result};
pub use neuron::{neuron_step, NeuronParams, NeuronState};
pub use npu::{npu_timestep, ExternalEvent, NpuConfig, NpuState};
pub use processor::{NpuId, Processor, ProcessorConfig, ProcessorState};
pub use synapse::{SpikeStream, SynapticWeight, WeightMemory};
