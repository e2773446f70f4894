//! Dense reference models used as test oracles. They share no arithmetic
//! with the library beyond reading configuration fields.

#![allow(dead_code)]

use poppins_core::neuron::NeuronParams;
use poppins_core::npu::{GlobalMode, NpuConfig};
use poppins_core::processor::ProcessorConfig;
use poppins_core::rng::Lcg;

pub fn ref_neuron(v: u8, p: &NeuronParams, i: i32) -> (u8, bool) {
    let (a, b) = (i64::from(p.a_num), i64::from(p.b_num));
    let (vr, vt, v) = (i64::from(p.v_r), i64::from(p.v_t), i64::from(v));
    let crossover = if a + b == 0 {
        vt
    } else {
        (a * vr + b * vt) / (a + b)
    };
    let drift = if v < crossover {
        (a * (vr - v)).div_euclid(8)
    } else {
        (b * (v - vt)).div_euclid(8)
    };
    let next = v + drift + i64::from(i);
    if next >= 256 {
        (p.v_reset, true)
    } else {
        (next.max(0) as u8, false)
    }
}

pub fn ref_decay(y: i64, a: u8) -> i64 {
    let mut s = y.div_euclid(1 << a);
    if s == 0 {
        s = y.signum();
    }
    y - s
}

/// One population simulated with a plain weight matrix.
#[derive(Clone, Debug)]
pub struct DenseNpu {
    /// `w[row][target]`, already masked by the group-sparse codes.
    pub w: Vec<Vec<i64>>,
    pub params: Vec<NeuronParams>,
    pub decay_a: u8,
    pub broadcast: i64,
    pub upstream: usize,
    pub v: Vec<u8>,
    pub y: Vec<i64>,
    pub last: Vec<bool>,
}

impl DenseNpu {
    pub fn from_config(cfg: &NpuConfig) -> Self {
        let targets = cfg.active_neurons + 1;
        let rows = cfg.upstream_sources + cfg.active_neurons;
        let w = (0..rows)
            .map(|r| {
                let code = cfg.gs.code_for(r).0;
                (0..targets)
                    .map(|t| {
                        if code >> (t / 8) & 1 == 1 {
                            i64::from(cfg.weights.get(r, t).get())
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        let mut params = cfg.params.clone();
        params.push(cfg.global.params);
        let mag = i64::from(cfg.global.out_weight.get()).abs();
        let broadcast = match cfg.global.mode {
            GlobalMode::Excitatory => mag,
            GlobalMode::Inhibitory => -mag,
        };
        Self {
            w,
            v: params.iter().map(|p| p.v_r).collect(),
            params,
            decay_a: cfg.decay_a,
            broadcast,
            upstream: cfg.upstream_sources,
            y: vec![0; targets],
            last: vec![false; targets],
        }
    }

    pub fn targets(&self) -> usize {
        self.params.len()
    }

    /// `decay_first = false` swaps the decay and neuron phases; used to show
    /// that the phase order is observable.
    pub fn step_with_order(
        &mut self,
        ext: &[(usize, i32)],
        ff: &[bool],
        decay_first: bool,
    ) -> Vec<bool> {
        assert_eq!(ff.len(), self.upstream);
        for &(addr, v) in ext {
            self.y[addr] += i64::from(v);
        }
        let n = self.targets();
        let sources: Vec<bool> = ff.iter().chain(self.last.iter()).copied().collect();
        for (s, &fired) in sources.iter().enumerate() {
            if !fired {
                continue;
            }
            if s == self.upstream + n - 1 {
                for y in &mut self.y {
                    *y += self.broadcast;
                }
            } else {
                for t in 0..n {
                    self.y[t] += self.w[s][t];
                }
            }
        }
        for y in &mut self.y {
            *y = (*y).clamp(-2048, 2047);
        }
        if decay_first {
            for y in &mut self.y {
                *y = ref_decay(*y, self.decay_a);
            }
        }
        let mut out = vec![false; n];
        for (t, fired) in out.iter_mut().enumerate() {
            let (v, s) = ref_neuron(self.v[t], &self.params[t], self.y[t] as i32);
            self.v[t] = v;
            *fired = s;
        }
        if !decay_first {
            for y in &mut self.y {
                *y = ref_decay(*y, self.decay_a);
            }
        }
        self.last = out.clone();
        out
    }

    pub fn step(&mut self, ext: &[(usize, i32)], ff: &[bool]) -> Vec<bool> {
        self.step_with_order(ext, ff, true)
    }
}

#[derive(Clone, Debug)]
pub struct DenseProcessor {
    pub npu1: DenseNpu,
    pub npu2: DenseNpu,
    pub pending: Vec<bool>,
}

impl DenseProcessor {
    pub fn new(cfg: &ProcessorConfig) -> Self {
        let npu1 = DenseNpu::from_config(&cfg.npu1);
        Self {
            pending: vec![false; npu1.targets()],
            npu1,
            npu2: DenseNpu::from_config(&cfg.npu2),
        }
    }

    pub fn step(&mut self, ext1: &[(usize, i32)], ext2: &[(usize, i32)]) -> [Vec<bool>; 2] {
        let ff = std::mem::take(&mut self.pending);
        let s1 = self.npu1.step(ext1, &[]);
        let s2 = self.npu2.step(ext2, &ff);
        self.pending = s1.clone();
        [s1, s2]
    }
}

pub fn random_params(rng: &mut Lcg) -> NeuronParams {
    let v_r = rng.range(0, 120) as u8;
    NeuronParams {
        a_num: rng.below(8) as u8,
        b_num: rng.below(8) as u8,
        v_r,
        v_t: rng.range(i32::from(v_r), 200) as u8,
        v_reset: rng.range(0, 150) as u8,
    }
}

/// Random weights (roughly `density` percent nonzero) and parameters for
/// every population of `cfg`, plus a random global neuron.
pub fn randomize_npu(cfg: &mut NpuConfig, rng: &mut Lcg, density: u32) {
    let rows = cfg.weights.rows();
    let targets = cfg.targets();
    for r in 0..rows {
        for t in 0..targets {
            if (rng.below(100) as u32) < density {
                cfg.set_weight(r, t, rng.range(-8, 7)).unwrap();
            }
        }
    }
    cfg.params = (0..cfg.active_neurons)
        .map(|_| random_params(rng))
        .collect();
    cfg.decay_a = rng.below(8) as u8;
    cfg.global.params = random_params(rng);
    cfg.global.out_weight = poppins_core::SynapticWeight::new(rng.range(-8, 7)).unwrap();
    cfg.global.mode = if rng.below(2) == 0 {
        GlobalMode::Excitatory
    } else {
        GlobalMode::Inhibitory
    };
}

pub fn random_events(rng: &mut Lcg, targets: usize, max_events: usize) -> Vec<(usize, i32)> {
    let n = rng.below(max_events + 1);
    (0..n)
        .map(|_| (rng.below(targets), rng.range(-40, 127)))
        .collect()
}
