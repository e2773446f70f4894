//! Comma-separated stimulus, raster and cycle files. Each starts with a
//! one-line header.

use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::cycle::CycleReport;
use crate::error::{Error, Result};
use crate::npu::ExternalEvent;
use crate::processor::NpuId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub timestep: u64,
    pub npu: NpuId,
    pub neuron: usize,
    pub value: i32,
}

/// External events ordered by timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StimulusTrace {
    records: Vec<StimulusRecord>,
}

impl StimulusTrace {
    pub fn new(records: Vec<StimulusRecord>) -> Result<Self> {
        if let Some(i) = records
            .windows(2)
            .position(|w| w[1].timestep < w[0].timestep)
        {
            return Err(Error::Parse {
                file: "stimulus".into(),
                line: i + 3,
                message: format!(
                    "timestep {} follows {}",
                    records[i + 1].timestep,
                    records[i].timestep
                ),
            });
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[StimulusRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Events of timestep `t`, in file order.
    pub fn at(&self, t: u64) -> impl Iterator<Item = (NpuId, ExternalEvent)> + '_ {
        let start = self.records.partition_point(|r| r.timestep < t);
        self.records[start..]
            .iter()
            .take_while(move |r| r.timestep == t)
            .map(|r| (r.npu, ExternalEvent::new(r.neuron, r.value)))
    }

    pub fn last_timestep(&self) -> Option<u64> {
        self.records.last().map(|r| r.timestep)
    }

    pub fn read_from(reader: impl Read, origin: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize().enumerate() {
            records.push(row.map_err(|e| parse_err(origin, i + 2, e))?);
        }
        Self::new(records).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                file: origin.into(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn write_to(&self, writer: impl Write) -> Result<()> {
        write_csv(
            writer,
            &self.records,
            &["timestep", "npu", "neuron", "value"],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RasterRecord {
    pub timestep: u64,
    pub npu: NpuId,
    pub neuron: usize,
}

/// Spike events sorted by `(timestep, npu, neuron)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RasterFile {
    records: Vec<RasterRecord>,
}

impl RasterFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(mut records: Vec<RasterRecord>) -> Self {
        records.sort_unstable();
        Self { records }
    }

    /// Appends one timestep's spikes. Timesteps must be pushed in order.
    pub fn push_step(&mut self, timestep: u64, npu: NpuId, spikes: &crate::synapse::SpikeStream) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|r| (r.timestep, r.npu) < (timestep, npu)));
        self.records
            .extend(spikes.ones().map(|neuron| RasterRecord {
                timestep,
                npu,
                neuron,
            }));
    }

    pub fn records(&self) -> &[RasterRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Spike counts of neurons `0..neurons` of `npu` over `window`.
    pub fn spike_counts(&self, npu: NpuId, window: Range<u64>, neurons: usize) -> Vec<u32> {
        let mut counts = vec![0; neurons];
        let start = self.records.partition_point(|r| r.timestep < window.start);
        for r in self.records[start..]
            .iter()
            .take_while(|r| r.timestep < window.end)
        {
            if r.npu == npu && r.neuron < neurons {
                counts[r.neuron] += 1;
            }
        }
        counts
    }

    /// Spikes of `npu` at timestep `t`.
    pub fn at(&self, t: u64, npu: NpuId) -> Vec<usize> {
        let start = self
            .records
            .partition_point(|r| (r.timestep, r.npu) < (t, npu));
        self.records[start..]
            .iter()
            .take_while(|r| r.timestep == t && r.npu == npu)
            .map(|r| r.neuron)
            .collect()
    }

    pub fn read_from(reader: impl Read, origin: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut records: Vec<RasterRecord> = Vec::new();
        for (i, row) in rdr.deserialize().enumerate() {
            let rec: RasterRecord = row.map_err(|e| parse_err(origin, i + 2, e))?;
            if records.last().is_some_and(|last| *last >= rec) {
                return Err(Error::Parse {
                    file: origin.into(),
                    line: i + 2,
                    message: "raster records must be strictly sorted".into(),
                });
            }
            records.push(rec);
        }
        Ok(Self { records })
    }

    pub fn write_to(&self, writer: impl Write) -> Result<()> {
        write_csv(writer, &self.records, &["timestep", "npu", "neuron"])
    }
}

pub const CYCLE_HEADER: &[&str] = &[
    "timestep",
    "model",
    "npu1_external",
    "npu1_scan",
    "npu1_mac",
    "npu1_decay",
    "npu1_pde",
    "npu1_total",
    "npu2_external",
    "npu2_scan",
    "npu2_mac",
    "npu2_decay",
    "npu2_pde",
    "npu2_total",
    "chip_parallel",
    "chip_serial",
];

/// One row per timestep; `reports[i]` belongs to timestep `i`.
pub fn write_cycles(writer: impl Write, reports: &[CycleReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CYCLE_HEADER).map_err(csv_err)?;
    for (t, r) in reports.iter().enumerate() {
        let mut row = vec![t.to_string(), r.model.to_string()];
        for c in &r.npu {
            row.extend(
                [c.external, c.scan, c.mac, c.decay, c.pde, c.total()].map(|v| v.to_string()),
            );
        }
        row.push(r.parallel().to_string());
        row.push(r.serial().to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("cycles", e))
}

fn write_csv<T: Serialize>(writer: impl Write, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("csv", e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::io("csv", std::io::Error::other(e.to_string()))
}

fn parse_err(origin: &str, line: usize, e: csv::Error) -> Error {
    Error::Parse {
        file: origin.into(),
        line,
        message: e.to_string(),
    }
}
