//! Clock-cycle accounting.
//!
//! How the spike decoder's 2-bit scan interleaves with SRAM MAC reads is a
//! property of the controller, so it is pluggable: each [`CycleModel`] is
//! registered by name and selected from the network description or the CLI.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::synapse::{SpikeSchedule, WEIGHTS_PER_WORD};

/// Scan and MAC clocks charged for the inter-spike accumulation phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpikePhaseCycles {
    pub scan: u64,
    pub mac: u64,
}

pub trait CycleModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// One input-bus cycle per external event.
    fn external_cycles(&self, events: usize) -> u64 {
        events as u64
    }

    fn spike_cycles(&self, schedule: &SpikeSchedule) -> SpikePhaseCycles;

    /// The post-synaptic core updates one 8-wide group per clock.
    fn decay_cycles(&self, targets: usize) -> u64 {
        targets.div_ceil(WEIGHTS_PER_WORD) as u64
    }

    /// The neuron cluster evaluates every neuron in one clock.
    fn pde_cycles(&self, neurons: usize) -> u64 {
        u64::from(neurons > 0)
    }
}

/// Scan and MAC never overlap: every 2-bit look costs a clock, and every
/// group read of every spiking source costs another.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl CycleModel for Sequential {
    fn name(&self) -> &'static str {
        "sequential"
    }

    fn spike_cycles(&self, schedule: &SpikeSchedule) -> SpikePhaseCycles {
        SpikePhaseCycles {
            scan: u64::from(schedule.scan_cycles),
            mac: schedule.mac_cycles(),
        }
    }
}

/// The scan clock of a window is hidden under its MAC reads; only windows
/// with no spike cost a bare scan clock.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overlapped;

impl CycleModel for Overlapped {
    fn name(&self) -> &'static str {
        "overlapped"
    }

    fn spike_cycles(&self, schedule: &SpikeSchedule) -> SpikePhaseCycles {
        let windows = schedule.window_mac_cycles();
        let idle = windows.iter().filter(|&&m| m == 0).count() as u64;
        SpikePhaseCycles {
            scan: idle,
            mac: schedule.mac_cycles(),
        }
    }
}

pub const DEFAULT_CYCLE_MODEL: &str = "sequential";

#[derive(Clone, Debug)]
pub struct CycleModelRegistry {
    models: BTreeMap<&'static str, Arc<dyn CycleModel>>,
}

impl Default for CycleModelRegistry {
    fn default() -> Self {
        let mut r = Self {
            models: BTreeMap::new(),
        };
        r.register(Arc::new(Sequential));
        r.register(Arc::new(Overlapped));
        r
    }
}

impl CycleModelRegistry {
    pub fn register(&mut self, model: Arc<dyn CycleModel>) {
        self.models.insert(model.name(), model);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CycleModel>> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownCycleModel(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.models.keys().copied()
    }
}

/// Looks a model up in the built-in registry.
pub fn cycle_model(name: &str) -> Result<Arc<dyn CycleModel>> {
    CycleModelRegistry::default().get(name)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NpuCycles {
    pub external: u64,
    pub scan: u64,
    pub mac: u64,
    pub decay: u64,
    pub pde: u64,
}

impl NpuCycles {
    pub fn total(&self) -> u64 {
        self.external + self.scan + self.mac + self.decay + self.pde
    }
}

impl std::ops::AddAssign for NpuCycles {
    fn add_assign(&mut self, o: Self) {
        self.external += o.external;
        self.scan += o.scan;
        self.mac += o.mac;
        self.decay += o.decay;
        self.pde += o.pde;
    }
}

/// Cycle tally for one processor timestep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub model: &'static str,
    pub npu: [NpuCycles; 2],
}

impl CycleReport {
    /// NPUs run concurrently: the chip waits for the slower one.
    pub fn parallel(&self) -> u64 {
        self.npu[0].total().max(self.npu[1].total())
    }

    pub fn serial(&self) -> u64 {
        self.npu[0].total() + self.npu[1].total()
    }

    pub fn timesteps_per_sec(&self, clock_hz: u64) -> f64 {
        match self.parallel() {
            0 => f64::INFINITY,
            c => clock_hz as f64 / c as f64,
        }
    }
}

/// Running sums over many timesteps.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CycleTotals {
    pub timesteps: u64,
    pub npu: [NpuCycles; 2],
    pub parallel: u64,
    pub serial: u64,
}

impl CycleTotals {
    pub fn add(&mut self, r: &CycleReport) {
        self.timesteps += 1;
        self.npu[0] += r.npu[0];
        self.npu[1] += r.npu[1];
        self.parallel += r.parallel();
        self.serial += r.serial();
    }

    pub fn mean_parallel(&self) -> f64 {
        if self.timesteps == 0 {
            0.0
        } else {
            self.parallel as f64 / self.timesteps as f64
        }
    }
}
