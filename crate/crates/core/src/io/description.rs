//! TOML network description plus its companion weight image.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::weights::WeightImage;
use crate::cycle::DEFAULT_CYCLE_MODEL;
use crate::error::{Error, Result};
use crate::neuron::NeuronParams;
use crate::npu::{Chop, GlobalNeuron, NpuConfig};
use crate::processor::{NpuId, ProcessorConfig, DEFAULT_CLOCK_HZ};
use crate::synapse::{GroupSparseConfig, GsCode, WeightMemory};

pub const SCHEMA_VERSION: u32 = 1;

/// Constant external input applied every timestep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TonicInput {
    pub npu: NpuId,
    pub neuron: usize,
    pub value: i32,
}

/// Seeded noise: every timestep each listed neuron draws a value uniformly
/// from `-amplitude..=amplitude`; nonzero draws become external events.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSource {
    pub npu: NpuId,
    pub neurons: Vec<usize>,
    pub amplitude: i32,
}

/// Inputs declared by the network itself rather than by a stimulus trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Drive {
    pub tonic: Vec<TonicInput>,
    pub noise: Vec<NoiseSource>,
}

/// A fully validated, runnable network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    pub config: ProcessorConfig,
    pub drive: Drive,
}

impl Network {
    pub fn new(config: ProcessorConfig) -> Self {
        Self {
            config,
            drive: Drive::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        for (i, t) in self.drive.tonic.iter().enumerate() {
            let limit = self.config.npu(t.npu).targets();
            if t.neuron >= limit {
                return Err(Error::config(
                    format!("tonic[{i}].neuron"),
                    format!("{} out of range ({limit} addresses)", t.neuron),
                ));
            }
            if !(-128..=127).contains(&t.value) {
                return Err(Error::config(
                    format!("tonic[{i}].value"),
                    format!("{} does not fit in a signed byte", t.value),
                ));
            }
        }
        for (i, n) in self.drive.noise.iter().enumerate() {
            let limit = self.config.npu(n.npu).targets();
            if let Some(&bad) = n.neurons.iter().find(|&&a| a >= limit) {
                return Err(Error::config(
                    format!("noise[{i}].neurons"),
                    format!("{bad} out of range ({limit} addresses)"),
                ));
            }
            if !(0..=127).contains(&n.amplitude) {
                return Err(Error::config(
                    format!("noise[{i}].amplitude"),
                    format!("{} outside 0..=127", n.amplitude),
                ));
            }
        }
        Ok(())
    }

    pub fn weight_image(&self) -> WeightImage {
        WeightImage::from_memories(&[&self.config.npu1.weights, &self.config.npu2.weights])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamOverride {
    pub neuron: usize,
    #[serde(flatten)]
    pub params: NeuronParams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GsOverride {
    pub source: usize,
    pub code: GsCode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpuSection {
    pub max_neurons: usize,
    pub active_neurons: usize,
    pub decay_a: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chop: Option<Chop>,
    pub gs_default: GsCode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gs_overrides: Vec<GsOverride>,
    pub default_params: NeuronParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub param_overrides: Vec<ParamOverride>,
    pub global: GlobalNeuron,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDescription {
    pub version: u32,
    #[serde(default = "default_clock")]
    pub clock_hz: u64,
    #[serde(default = "default_model")]
    pub cycle_model: String,
    /// Path of the weight image, relative to the description file.
    pub weights_file: String,
    pub weights_sha256: String,
    pub npu1: NpuSection,
    pub npu2: NpuSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tonic: Vec<TonicInput>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noise: Vec<NoiseSource>,
}

fn default_clock() -> u64 {
    DEFAULT_CLOCK_HZ
}

fn default_model() -> String {
    DEFAULT_CYCLE_MODEL.to_string()
}

impl NpuSection {
    fn from_config(cfg: &NpuConfig) -> Self {
        // (a, b, v_r, v_t, v_reset) -> (count, first index)
        type Key = (u8, u8, u8, u8, u8);
        let mut freq: BTreeMap<Key, (usize, usize)> = BTreeMap::new();
        for (i, p) in cfg.params.iter().enumerate() {
            let e = freq
                .entry((p.a_num, p.b_num, p.v_r, p.v_t, p.v_reset))
                .or_insert((0, i));
            e.0 += 1;
        }
        // Most frequent parameter set, earliest first on ties.
        let default_params = freq
            .values()
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|&(_, i)| cfg.params[i])
            .unwrap_or_default();
        let param_overrides = cfg
            .params
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != default_params)
            .map(|(neuron, &params)| ParamOverride { neuron, params })
            .collect();
        Self {
            max_neurons: cfg.max_neurons,
            active_neurons: cfg.active_neurons,
            decay_a: cfg.decay_a,
            chop: cfg.chop,
            gs_default: cfg.gs.default,
            gs_overrides: cfg
                .gs
                .overrides
                .iter()
                .map(|(&source, &code)| GsOverride { source, code })
                .collect(),
            default_params,
            param_overrides,
            global: cfg.global,
        }
    }

    /// Population-size rules, checked before the weight image is consulted.
    fn check_population(&self, path: &str) -> Result<()> {
        let n = self.active_neurons;
        if self.chop.is_none() && !n.is_power_of_two() {
            return Err(Error::config(
                format!("{path}.active_neurons"),
                format!("{n} is not a power of two"),
            ));
        }
        if n == 0 || n > self.max_neurons {
            return Err(Error::config(
                format!("{path}.active_neurons"),
                format!("{n} outside 1..={}", self.max_neurons),
            ));
        }
        Ok(())
    }

    fn to_config(&self, path: &str, upstream: usize, weights: WeightMemory) -> Result<NpuConfig> {
        let mut params = vec![self.default_params; self.active_neurons];
        for (i, o) in self.param_overrides.iter().enumerate() {
            let slot = params.get_mut(o.neuron).ok_or_else(|| {
                Error::config(
                    format!("{path}.param_overrides[{i}].neuron"),
                    format!("{} out of range", o.neuron),
                )
            })?;
            *slot = o.params;
        }
        let mut gs = GroupSparseConfig::uniform(self.gs_default);
        for (i, o) in self.gs_overrides.iter().enumerate() {
            if o.source >= upstream + self.active_neurons {
                return Err(Error::config(
                    format!("{path}.gs_overrides[{i}].source"),
                    format!("{} out of range", o.source),
                ));
            }
            gs.overrides.insert(o.source, o.code);
        }
        Ok(NpuConfig {
            max_neurons: self.max_neurons,
            active_neurons: self.active_neurons,
            upstream_sources: upstream,
            chop: self.chop,
            params,
            decay_a: self.decay_a,
            gs,
            global: self.global,
            weights,
        })
    }
}

impl NetworkDescription {
    pub fn from_network(net: &Network, weights_file: &str, weights_sha256: &str) -> Self {
        let c = &net.config;
        Self {
            version: SCHEMA_VERSION,
            clock_hz: c.clock_hz,
            cycle_model: c.cycle_model.clone(),
            weights_file: weights_file.to_string(),
            weights_sha256: weights_sha256.to_string(),
            npu1: NpuSection::from_config(&c.npu1),
            npu2: NpuSection::from_config(&c.npu2),
            tonic: net.drive.tonic.clone(),
            noise: net.drive.noise.clone(),
        }
    }

    /// Combines the description with its weight image and validates the
    /// result.
    pub fn to_network(&self, image: &WeightImage) -> Result<Network> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::config(
                "version",
                format!(
                    "schema version {} unsupported (expected {SCHEMA_VERSION})",
                    self.version
                ),
            ));
        }
        if image.regions.len() != 2 {
            return Err(Error::WeightImage(format!(
                "{} regions, expected 2",
                image.regions.len()
            )));
        }
        self.npu1.check_population("npu1")?;
        self.npu2.check_population("npu2")?;
        let upstream2 = self.npu1.active_neurons + 1;
        let check_rows = |i: usize, path: &str, expected: usize| -> Result<()> {
            let rows = image.regions[i].0.rows as usize;
            if rows != expected {
                return Err(Error::config(
                    format!("{path}.weights"),
                    format!("image has {rows} rows, configuration needs {expected}"),
                ));
            }
            Ok(())
        };
        check_rows(0, "npu1", self.npu1.active_neurons)?;
        check_rows(1, "npu2", upstream2 + self.npu2.active_neurons)?;
        let w1 = image.memory(0, self.npu1.active_neurons + 1)?;
        let w2 = image.memory(1, self.npu2.active_neurons + 1)?;
        let config = ProcessorConfig {
            npu1: self.npu1.to_config("npu1", 0, w1)?,
            npu2: self.npu2.to_config("npu2", upstream2, w2)?,
            clock_hz: self.clock_hz,
            cycle_model: self.cycle_model.clone(),
        };
        let net = Network {
            config,
            drive: Drive {
                tonic: self.tonic.clone(),
                noise: self.noise.clone(),
            },
        };
        net.validate()?;
        Ok(net)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("description always serializes")
    }

    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(origin, e.to_string()))
    }
}

/// Loads a description and its weight image (resolved relative to the
/// description), verifying the checksum and every configuration invariant.
pub fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let desc = NetworkDescription::from_toml(&text, &path.display().to_string())?;
    let weights_path = resolve(path, &desc.weights_file);
    let image = WeightImage::read(&weights_path, Some(&desc.weights_sha256))?;
    desc.to_network(&image)
}

/// Writes `path` and the weight image `<stem>.weights` beside it.
pub fn save_network(path: &Path, net: &Network) -> Result<()> {
    net.validate()?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("network");
    let weights_file = format!("{stem}.weights");
    let sum = net.weight_image().write(&resolve(path, &weights_file))?;
    let desc = NetworkDescription::from_network(net, &weights_file, &sum);
    std::fs::write(path, desc.to_toml()).map_err(|e| Error::io(path, e))
}

fn resolve(description: &Path, file: &str) -> PathBuf {
    match description.parent() {
        Some(dir) => dir.join(file),
        None => PathBuf::from(file),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npu::GlobalMode;
    use crate::synapse::SynapticWeight;

    fn sample() -> Network {
        let mut cfg = ProcessorConfig::new(4, 8);
        cfg.npu1.params[2] = NeuronParams::new(1, 7, 10, 200, 0).unwrap();
        cfg.npu1.global = GlobalNeuron {
            params: NeuronParams::new(0, 0, 0, 0, 0).unwrap(),
            out_weight: SynapticWeight::new(-3).unwrap(),
            mode: GlobalMode::Inhibitory,
        };
        cfg.npu1.set_weight(1, 2, -7).unwrap();
        cfg.set_ff_weight(4, 7, 5).unwrap();
        cfg.npu2.gs = GroupSparseConfig::from_memory(&cfg.npu2.weights);
        cfg.npu2.decay_a = 5;
        let mut net = Network::new(cfg);
        net.drive.tonic.push(TonicInput {
            npu: NpuId::Npu2,
            neuron: 3,
            value: 40,
        });
        net.drive.noise.push(NoiseSource {
            npu: NpuId::Npu1,
            neurons: vec![0, 1],
            amplitude: 4,
        });
        net
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        let net = sample();
        save_network(&path, &net).unwrap();
        let back = load_network(&path).unwrap();
        assert_eq!(back, net);
        save_network(&path, &back).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn minimal_network_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("min.toml");
        let net = Network::new(ProcessorConfig::new(1, 1));
        save_network(&path, &net).unwrap();
        assert_eq!(load_network(&path).unwrap(), net);
    }

    #[test]
    fn non_power_of_two_is_rejected_with_field_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        save_network(&path, &Network::new(ProcessorConfig::new(4, 4))).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bad = text.replacen("active_neurons = 4", "active_neurons = 3", 1);
        std::fs::write(&path, bad).unwrap();
        let err = load_network(&path).unwrap_err().to_string();
        assert!(err.contains("npu1.active_neurons"), "{err}");
        assert!(err.contains("power of two"), "{err}");
    }

    #[test]
    fn checksum_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.toml");
        save_network(&path, &sample()).unwrap();
        let wpath = dir.path().join("net.weights");
        let mut bytes = std::fs::read(&wpath).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        std::fs::write(&wpath, bytes).unwrap();
        assert!(matches!(load_network(&path), Err(Error::Checksum { .. })));
    }

    #[test]
    fn rejects_bad_version_and_unknown_fields() {
        let net = sample();
        let img = net.weight_image();
        let mut d = NetworkDescription::from_network(&net, "x", "y");
        d.version = 9;
        assert!(d
            .to_network(&img)
            .unwrap_err()
            .to_string()
            .contains("version"));
        let text =
            "bogus = 1\n".to_string() + &NetworkDescription::from_network(&net, "x", "y").to_toml();
        assert!(NetworkDescription::from_toml(&text, "t").is_err());
    }
}
