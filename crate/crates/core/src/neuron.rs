//! Integer quadratic integrate-and-fire (I-QIF) neuron.
//!
//! The membrane potential is an unsigned 8-bit register. Each timestep adds a
//! piecewise-linear drift plus the synaptic current; a carry out of the 8-bit
//! register is the spike, after which the potential is reloaded with
//! `v_reset`.
//!
//! Slopes are 3-bit fractions in eighths, so `a = a_num / 8`. The product is
//! formed at full width and arithmetic-shifted right by 3 (floor).

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Largest membrane potential; anything above it overflows into a spike.
pub const V_MAX: i32 = 255;

/// Per-timestep input current `I[t]` (decayed post-synaptic value plus any
/// stimulus already folded into it).
pub type SynapticCurrent = i32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeuronParams {
    pub a_num: u8,
    pub b_num: u8,
    pub v_r: u8,
    pub v_t: u8,
    pub v_reset: u8,
}

impl Default for NeuronParams {
    fn default() -> Self {
        Self {
            a_num: 2,
            b_num: 4,
            v_r: 50,
            v_t: 150,
            v_reset: 30,
        }
    }
}

impl NeuronParams {
    pub fn new(a_num: u8, b_num: u8, v_r: u8, v_t: u8, v_reset: u8) -> Result<Self, Error> {
        let p = Self {
            a_num,
            b_num,
            v_r,
            v_t,
            v_reset,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.a_num > 7 {
            return Err(Error::InvalidParams(format!(
                "a_num {} does not fit in 3 bits",
                self.a_num
            )));
        }
        if self.b_num > 7 {
            return Err(Error::InvalidParams(format!(
                "b_num {} does not fit in 3 bits",
                self.b_num
            )));
        }
        if self.v_r > self.v_t {
            return Err(Error::InvalidParams(format!(
                "v_r {} exceeds v_t {}",
                self.v_r, self.v_t
            )));
        }
        Ok(())
    }

    /// Crossover potential between the restoring and the regenerative branch.
    pub fn pde_threshold(&self) -> u8 {
        pde_threshold(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct NeuronState {
    pub v_m: u8,
}

impl NeuronState {
    pub fn at(v_m: u8) -> Self {
        Self { v_m }
    }

    pub fn step(&mut self, params: &NeuronParams, i_t: SynapticCurrent) -> bool {
        let (next, spiked) = neuron_step(*self, params, i_t);
        *self = next;
        spiked
    }
}

/// `floor((a·v_r + b·v_t) / (a + b))`, or `v_t` when both slopes are zero.
pub fn pde_threshold(params: &NeuronParams) -> u8 {
    let a = u32::from(params.a_num);
    let b = u32::from(params.b_num);
    if a + b == 0 {
        return params.v_t;
    }
    let num = a * u32::from(params.v_r) + b * u32::from(params.v_t);
    // Weighted mean of two u8 values stays within u8.
    (num / (a + b)) as u8
}

#[inline]
fn mul_eighths(num: u8, x: i32) -> i32 {
    (i32::from(num) * x) >> 3
}

pub fn delta_vm(v_prev: u8, params: &NeuronParams, i_t: SynapticCurrent) -> i32 {
    let v = i32::from(v_prev);
    let drift = if v_prev < pde_threshold(params) {
        mul_eighths(params.a_num, i32::from(params.v_r) - v)
    } else {
        mul_eighths(params.b_num, v - i32::from(params.v_t))
    };
    drift + i_t
}

/// Advance one timestep. Returns the new state and whether the 8-bit register
/// overflowed (spike).
pub fn neuron_step(
    state: NeuronState,
    params: &NeuronParams,
    i_t: SynapticCurrent,
) -> (NeuronState, bool) {
    let sum = i32::from(state.v_m) + delta_vm(state.v_m, params, i_t);
    if sum > V_MAX {
        (NeuronState::at(params.v_reset), true)
    } else if sum < 0 {
        (NeuronState::at(0), false)
    } else {
        (NeuronState::at(sum as u8), false)
    }
}
