//! Single-neuron behavior sweep.
//!
//! Drives one neuron with a current profile and records its `(v_m, spike)`
//! trajectory. Trajectories are summarized by an inter-spike-interval
//! signature: the spike count plus a coarse bucket of the ISI coefficient of
//! variation.

use sha2::{Digest, Sha256};

use crate::neuron::{NeuronParams, NeuronState};

pub const BEHAVIOR_STEPS: usize = 300;

/// Input current as a function of the timestep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurrentProfile {
    Constant(i32),
    /// Zero before `onset`, `level` from then on.
    Step {
        onset: usize,
        level: i32,
    },
    /// `level` for the first `width` steps of every `period`, zero otherwise.
    Pulses {
        period: usize,
        width: usize,
        level: i32,
    },
    /// Linear from `from` at step 0 to `to` at the last step (integer division).
    Ramp {
        from: i32,
        to: i32,
    },
}

impl CurrentProfile {
    pub fn at(&self, t: usize, steps: usize) -> i32 {
        match *self {
            Self::Constant(i) => i,
            Self::Step { onset, level } => {
                if t >= onset {
                    level
                } else {
                    0
                }
            }
            Self::Pulses {
                period,
                width,
                level,
            } => {
                if t % period.max(1) < width {
                    level
                } else {
                    0
                }
            }
            Self::Ramp { from, to } => {
                let span = steps.saturating_sub(1).max(1) as i64;
                let v = i64::from(from) + (i64::from(to) - i64::from(from)) * t as i64 / span;
                v as i32
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory {
    /// Potential after each step.
    pub v_m: Vec<u8>,
    pub spikes: Vec<bool>,
}

/// Spike count and ISI coefficient-of-variation bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsiSignature {
    pub spikes: usize,
    /// 0: CV < 0.1 or fewer than two intervals; 1: < 0.3; 2: < 0.6; 3: otherwise.
    pub cv_bucket: u8,
}

impl Trajectory {
    pub fn spike_times(&self) -> Vec<usize> {
        self.spikes
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn isis(&self) -> Vec<usize> {
        self.spike_times().windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Population coefficient of variation of the ISIs.
    pub fn isi_cv(&self) -> Option<f64> {
        let isis = self.isis();
        if isis.len() < 2 {
            return None;
        }
        let n = isis.len() as f64;
        let mean = isis.iter().sum::<usize>() as f64 / n;
        let var = isis.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
        Some(var.sqrt() / mean)
    }

    pub fn signature(&self) -> IsiSignature {
        let cv_bucket = match self.isi_cv() {
            None => 0,
            Some(cv) if cv < 0.1 => 0,
            Some(cv) if cv < 0.3 => 1,
            Some(cv) if cv < 0.6 => 2,
            Some(_) => 3,
        };
        IsiSignature {
            spikes: self.spikes.iter().filter(|&&s| s).count(),
            cv_bucket,
        }
    }

    /// Hex SHA-256 over the potentials followed by one byte per spike flag.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(&self.v_m);
        h.update(self.spikes.iter().map(|&s| u8::from(s)).collect::<Vec<_>>());
        hex::encode(h.finalize())
    }
}

/// Runs one neuron from rest (`v_m = v_r`) for `steps` timesteps.
pub fn simulate(params: &NeuronParams, profile: &CurrentProfile, steps: usize) -> Trajectory {
    let mut state = NeuronState::at(params.v_r);
    let mut traj = Trajectory {
        v_m: Vec::with_capacity(steps),
        spikes: Vec::with_capacity(steps),
    };
    for t in 0..steps {
        let spiked = state.step(params, profile.at(t, steps));
        traj.v_m.push(state.v_m);
        traj.spikes.push(spiked);
    }
    traj
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRecord {
    pub params: usize,
    pub profile: usize,
    pub trajectory: Trajectory,
}

/// Every parameter set against every profile, parameter-major.
pub fn behavior_sweep(
    param_grid: &[NeuronParams],
    profiles: &[CurrentProfile],
    steps: usize,
) -> Vec<SweepRecord> {
    param_grid
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| {
            profiles.iter().enumerate().map(move |(qi, q)| SweepRecord {
                params: pi,
                profile: qi,
                trajectory: simulate(p, q, steps),
            })
        })
        .collect()
}

/// A committed parameter set and the profile that exhibits its behavior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BehaviorPreset {
    pub name: &'static str,
    pub params: NeuronParams,
    pub profile: CurrentProfile,
}

const fn params(a_num: u8, b_num: u8, v_r: u8, v_t: u8, v_reset: u8) -> NeuronParams {
    NeuronParams {
        a_num,
        b_num,
        v_r,
        v_t,
        v_reset,
    }
}

pub const PRESETS: [BehaviorPreset; 5] = [
    BehaviorPreset {
        name: "tonic",
        params: params(2, 4, 50, 150, 30),
        profile: CurrentProfile::Constant(20),
    },
    BehaviorPreset {
        name: "latency",
        params: params(4, 1, 40, 120, 40),
        profile: CurrentProfile::Step {
            onset: 50,
            level: 9,
        },
    },
    BehaviorPreset {
        name: "bistable",
        params: params(2, 2, 30, 100, 160),
        profile: CurrentProfile::Pulses {
            period: 150,
            width: 3,
            level: 40,
        },
    },
    BehaviorPreset {
        name: "class1",
        params: params(3, 3, 40, 140, 20),
        profile: CurrentProfile::Ramp { from: 0, to: 40 },
    },
    BehaviorPreset {
        name: "alternating",
        params: params(4, 5, 20, 60, 40),
        profile: CurrentProfile::Pulses {
            period: 4,
            width: 1,
            level: 30,
        },
    },
];
