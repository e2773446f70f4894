//! Deterministic run loop.

use std::sync::Arc;

use super::description::Network;
use super::trace::{RasterFile, StimulusTrace};
use crate::cycle::{cycle_model, CycleModel, CycleReport, CycleTotals};
use crate::error::{Error, Result};
use crate::npu::ExternalEvent;
use crate::processor::{NpuId, Processor, StepOutput};
use crate::rng::Lcg;

/// Produces the external events of each timestep: tonic inputs, then seeded
/// noise, then trace records.
#[derive(Clone, Debug)]
pub struct Driver<'a> {
    network: &'a Network,
    trace: &'a StimulusTrace,
    rng: Lcg,
}

impl<'a> Driver<'a> {
    pub fn new(network: &'a Network, trace: &'a StimulusTrace, seed: u64) -> Result<Self> {
        for (i, r) in trace.records().iter().enumerate() {
            let limit = network.config.npu(r.npu).targets();
            if r.neuron >= limit {
                return Err(Error::EventAddress {
                    event: i,
                    addr: r.neuron,
                    limit,
                });
            }
            if !(-128..=127).contains(&r.value) {
                return Err(Error::EventValue {
                    event: i,
                    value: r.value,
                });
            }
        }
        Ok(Self {
            network,
            trace,
            rng: Lcg::new(seed),
        })
    }

    pub fn events(&mut self, t: u64) -> Vec<(NpuId, ExternalEvent)> {
        let drive = &self.network.drive;
        let mut out: Vec<_> = drive
            .tonic
            .iter()
            .map(|ti| (ti.npu, ExternalEvent::new(ti.neuron, ti.value)))
            .collect();
        for src in &drive.noise {
            for &n in &src.neurons {
                let v = self.rng.range(-src.amplitude, src.amplitude);
                if v != 0 {
                    out.push((src.npu, ExternalEvent::new(n, v)));
                }
            }
        }
        out.extend(self.trace.at(t));
        out
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub steps: u64,
    pub seed: u64,
    /// 1 evaluates the NPUs back to back; 2 or more on separate threads.
    pub workers: usize,
    /// Overrides the description's cycle model.
    pub cycle_model: Option<String>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            steps: 0,
            seed: 0,
            workers: 1,
            cycle_model: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub raster: RasterFile,
    pub cycles: Vec<CycleReport>,
    pub totals: CycleTotals,
}

impl RunOutput {
    fn record(&mut self, out: &StepOutput) {
        self.raster
            .push_step(out.timestep, NpuId::Npu1, &out.rasters[0]);
        self.raster
            .push_step(out.timestep, NpuId::Npu2, &out.rasters[1]);
        self.totals.add(&out.report);
        self.cycles.push(out.report.clone());
    }
}

pub fn build_processor(network: &Network, opts: &RunOptions) -> Result<Processor> {
    network.validate()?;
    let mut p = Processor::new(network.config.clone())?.concurrent(opts.workers > 1);
    if let Some(name) = &opts.cycle_model {
        let model: Arc<dyn CycleModel> = cycle_model(name)?;
        p = p.with_model(model);
    }
    Ok(p)
}

/// Runs `opts.steps` timesteps from the resting state.
pub fn run(network: &Network, stimulus: &StimulusTrace, opts: &RunOptions) -> Result<RunOutput> {
    let mut processor = build_processor(network, opts)?;
    let mut driver = Driver::new(network, stimulus, opts.seed)?;
    let mut output = RunOutput::default();
    for t in 0..opts.steps {
        let events = driver.events(t);
        let step = processor.step(&events)?;
        output.record(&step);
    }
    Ok(output)
}
