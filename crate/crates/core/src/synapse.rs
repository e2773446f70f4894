//! Post-synaptic core: packed 4-bit weight SRAM, group-sparse spike decoding,
//! virtualized crossbar accumulation and reciprocal decay.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights per 32-bit SRAM word, which is also the width of one target group.
pub const WEIGHTS_PER_WORD: usize = 8;

/// Saturation range of a post-synaptic accumulator (signed 12-bit).
pub const PSP_MIN: i32 = -2048;
pub const PSP_MAX: i32 = 2047;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct SynapticWeight(i8);

impl SynapticWeight {
    pub const MIN: i8 = -8;
    pub const MAX: i8 = 7;

    pub fn new(value: i32) -> Result<Self> {
        if (i32::from(Self::MIN)..=i32::from(Self::MAX)).contains(&value) {
            Ok(Self(value as i8))
        } else {
            Err(Error::WeightOutOfRange { index: 0, value })
        }
    }

    pub fn get(self) -> i8 {
        self.0
    }

    fn nibble(self) -> u32 {
        (self.0 as u8 & 0xF) as u32
    }

    fn from_nibble(n: u32) -> Self {
        // Sign-extend bit 3.
        Self((((n & 0xF) as i8) << 4) >> 4)
    }
}

impl TryFrom<i32> for SynapticWeight {
    type Error = Error;
    fn try_from(value: i32) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SynapticWeight> for i32 {
    fn from(w: SynapticWeight) -> i32 {
        i32::from(w.0)
    }
}

fn groups_for(targets: usize) -> usize {
    targets.div_ceil(WEIGHTS_PER_WORD)
}

/// Word-addressable synaptic SRAM. Row `r` holds the fan-out of presynaptic
/// source `r`; nibble `k` of word `g` is the weight onto target `8g + k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightMemory {
    words: Vec<u32>,
    rows: usize,
    targets: usize,
    row_stride_words: usize,
}

impl WeightMemory {
    pub fn zeros(rows: usize, targets: usize) -> Self {
        let row_stride_words = groups_for(targets);
        Self {
            words: vec![0; rows * row_stride_words],
            rows,
            targets,
            row_stride_words,
        }
    }

    /// Packs a row-major `rows × targets` matrix.
    pub fn from_dense(rows: usize, targets: usize, weights: &[i32]) -> Result<Self> {
        if weights.len() != rows * targets {
            return Err(Error::WeightImage(format!(
                "expected {} weights for a {rows}x{targets} matrix, got {}",
                rows * targets,
                weights.len()
            )));
        }
        let mut mem = Self::zeros(rows, targets);
        for (index, &value) in weights.iter().enumerate() {
            let w =
                SynapticWeight::new(value).map_err(|_| Error::WeightOutOfRange { index, value })?;
            mem.set(index / targets.max(1), index % targets.max(1), w);
        }
        Ok(mem)
    }

    /// Rebuilds a memory from raw words as read from a weight image.
    pub fn from_words(rows: usize, targets: usize, words: Vec<u32>) -> Result<Self> {
        let row_stride_words = groups_for(targets);
        if words.len() != rows * row_stride_words {
            return Err(Error::WeightImage(format!(
                "{rows} rows of {row_stride_words} words need {} words, got {}",
                rows * row_stride_words,
                words.len()
            )));
        }
        Ok(Self {
            words,
            rows,
            targets,
            row_stride_words,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn row_stride_words(&self) -> usize {
        self.row_stride_words
    }

    pub fn groups(&self) -> usize {
        self.row_stride_words
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn word(&self, row: usize, group: usize) -> u32 {
        self.words[row * self.row_stride_words + group]
    }

    pub fn get(&self, row: usize, target: usize) -> SynapticWeight {
        let word = self.word(row, target / WEIGHTS_PER_WORD);
        SynapticWeight::from_nibble(word >> (4 * (target % WEIGHTS_PER_WORD)))
    }

    pub fn set(&mut self, row: usize, target: usize, w: SynapticWeight) {
        assert!(
            row < self.rows && target < self.targets,
            "weight address out of range"
        );
        let idx = row * self.row_stride_words + target / WEIGHTS_PER_WORD;
        let shift = 4 * (target % WEIGHTS_PER_WORD);
        self.words[idx] = (self.words[idx] & !(0xF << shift)) | (w.nibble() << shift);
    }

    pub fn row(&self, row: usize) -> Vec<SynapticWeight> {
        (0..self.targets).map(|t| self.get(row, t)).collect()
    }

    /// Row-major dense copy of all weights.
    pub fn unpack(&self) -> Vec<i32> {
        (0..self.rows)
            .flat_map(|r| (0..self.targets).map(move |t| (r, t)))
            .map(|(r, t)| i32::from(self.get(r, t)))
            .collect()
    }

    /// Bitmask of the groups in `row` holding at least one nonzero weight.
    pub fn nonzero_groups(&self, row: usize) -> GsCode {
        let mut code = 0u64;
        for g in 0..self.row_stride_words {
            if self.word(row, g) != 0 {
                code |= 1 << g;
            }
        }
        GsCode(code)
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

/// Packs a single row of weights, eight per word, zero-padding the last word.
pub fn pack_weights(weights: &[i32]) -> Result<WeightMemory> {
    WeightMemory::from_dense(1, weights.len(), weights)
}

/// Group-sparse code: bit `g` enables the SRAM word covering targets
/// `8g..8g+8`. Its popcount is the number of MAC cycles a spike costs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct GsCode(pub u64);

impl GsCode {
    pub fn all(groups: usize) -> Self {
        assert!(groups <= 64, "at most 64 groups per row");
        if groups == 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << groups) - 1)
        }
    }

    pub fn gs_num(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_enabled(self, group: usize) -> bool {
        group < 64 && self.0 & (1 << group) != 0
    }

    pub fn highest_group(self) -> Option<usize> {
        (self.0 != 0).then(|| 63 - self.0.leading_zeros() as usize)
    }
}

impl Serialize for GsCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:#x}", self.0))
    }
}

impl<'de> Deserialize<'de> for GsCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .ok_or_else(|| serde::de::Error::custom("gs code must be a 0x-prefixed hex string"))?;
        u64::from_str_radix(digits, 16)
            .map(GsCode)
            .map_err(serde::de::Error::custom)
    }
}

/// Per-source group-sparse masks with a shared default.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupSparseConfig {
    pub default: GsCode,
    pub overrides: BTreeMap<usize, GsCode>,
}

impl GroupSparseConfig {
    pub fn uniform(code: GsCode) -> Self {
        Self {
            default: code,
            overrides: BTreeMap::new(),
        }
    }

    pub fn dense(targets: usize) -> Self {
        Self::uniform(GsCode::all(groups_for(targets)))
    }

    /// Disables every all-zero group, row by row.
    pub fn from_memory(mem: &WeightMemory) -> Self {
        let default = GsCode::all(mem.groups());
        let overrides = (0..mem.rows())
            .map(|r| (r, mem.nonzero_groups(r)))
            .filter(|&(_, code)| code != default)
            .collect();
        Self { default, overrides }
    }

    pub fn code_for(&self, source: usize) -> GsCode {
        self.overrides.get(&source).copied().unwrap_or(self.default)
    }

    pub fn with_override(mut self, source: usize, code: GsCode) -> Self {
        self.overrides.insert(source, code);
        self
    }

    /// Checks that no code enables a group beyond `groups`.
    pub fn validate(&self, groups: usize) -> Result<()> {
        let check = |what: String, code: GsCode| match code.highest_group() {
            Some(g) if g >= groups => Err(Error::config(
                what,
                format!("enables group {g} but rows only have {groups} groups"),
            )),
            _ => Ok(()),
        };
        check("gs_default".into(), self.default)?;
        for (&src, &code) in &self.overrides {
            check(format!("gs_overrides[{src}]"), code)?;
        }
        Ok(())
    }
}

/// One bit per presynaptic source; `true` means it spiked last timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SpikeStream {
    bits: Vec<bool>,
}

impl SpikeStream {
    pub fn new(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn from_indices(len: usize, spiking: &[usize]) -> Self {
        let mut s = Self::new(len);
        for &i in spiking {
            s.set(i, true);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn concat(&self, other: &SpikeStream) -> SpikeStream {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduledSpike {
    pub source: usize,
    pub mac_cycles: u32,
}

/// Output of the spike decoder for one timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SpikeSchedule {
    pub entries: Vec<ScheduledSpike>,
    pub scan_cycles: u32,
}

impl SpikeSchedule {
    pub fn mac_cycles(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.mac_cycles)).sum()
    }

    /// MAC cycles charged inside each 2-bit scan window.
    pub fn window_mac_cycles(&self) -> Vec<u32> {
        let mut per = vec![0u32; self.scan_cycles as usize];
        for e in &self.entries {
            per[e.source / 2] += e.mac_cycles;
        }
        per
    }

    /// Sequential charge: every scan clock plus every MAC clock.
    pub fn total_cycles(&self) -> u64 {
        u64::from(self.scan_cycles) + self.mac_cycles()
    }
}

/// Walks the spike stream register two bits per clock, starting at the LSB and
/// rotating right after each look, until every bit has been examined. An odd
/// length is padded with one zero bit.
pub fn decode_spike_stream(stream: &SpikeStream, gs: &GroupSparseConfig) -> SpikeSchedule {
    decode_spike_stream_with(stream, |source| gs.code_for(source))
}

/// Same as [`decode_spike_stream`] with a caller-supplied code per source.
pub fn decode_spike_stream_with(
    stream: &SpikeStream,
    code_for: impl Fn(usize) -> GsCode,
) -> SpikeSchedule {
    let mut register: std::collections::VecDeque<bool> = stream.bits.iter().copied().collect();
    if register.len() % 2 == 1 {
        register.push_back(false);
    }
    let scan_cycles = register.len() / 2;
    let mut entries = Vec::new();
    for cycle in 0..scan_cycles {
        for (lane, &bit) in register.iter().take(2).enumerate() {
            if bit {
                let source = 2 * cycle + lane;
                entries.push(ScheduledSpike {
                    source,
                    mac_cycles: code_for(source).gs_num(),
                });
            }
        }
        register.rotate_left(2);
    }
    SpikeSchedule {
        entries,
        scan_cycles: scan_cycles as u32,
    }
}

/// Signed post-synaptic accumulators of one population.
///
/// Accumulation runs at full `i32` width; [`PostSynapticState::saturate`] is
/// applied once per timestep, so the order of accumulation never matters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostSynapticState {
    pub y: Vec<i32>,
    pub decay_a: u8,
}

impl PostSynapticState {
    pub fn new(targets: usize, decay_a: u8) -> Self {
        Self {
            y: vec![0; targets],
            decay_a,
        }
    }

    pub fn saturate(&mut self) {
        for y in &mut self.y {
            *y = (*y).clamp(PSP_MIN, PSP_MAX);
        }
    }

    pub fn decay(&mut self) {
        for y in &mut self.y {
            *y = decay_value(*y, self.decay_a);
        }
    }

    pub fn add_all(&mut self, delta: i32) {
        for y in &mut self.y {
            *y += delta;
        }
    }
}

/// Reads one word per enabled group of the source's row and adds its eight
/// weights into the accumulators. Returns the MAC cycles spent, which equals
/// the group-sparse count of the source.
pub fn accumulate_spike(
    source: usize,
    mem: &WeightMemory,
    gs: &GroupSparseConfig,
    psp: &mut PostSynapticState,
) -> Result<u32> {
    if source >= mem.rows() {
        return Err(Error::SourceOutOfRange {
            source_row: source,
            rows: mem.rows(),
        });
    }
    let code = gs.code_for(source);
    let limit = mem.targets().min(psp.y.len());
    for group in (0..mem.groups()).filter(|&g| code.is_enabled(g)) {
        let word = mem.word(source, group);
        if word == 0 {
            continue;
        }
        let base = group * WEIGHTS_PER_WORD;
        for lane in 0..WEIGHTS_PER_WORD {
            let target = base + lane;
            if target >= limit {
                break;
            }
            psp.y[target] += i32::from(SynapticWeight::from_nibble(word >> (4 * lane)));
        }
    }
    Ok(code.gs_num())
}

/// Reciprocal decay with the anti-fatigue selector: subtract `y >> decay_a`
/// (floor), or `±1` by the sign of `y` when the shift vanishes.
pub fn decay_value(y: i32, decay_a: u8) -> i32 {
    if y == 0 {
        return 0;
    }
    let shifted = y >> decay_a;
    let step = if shifted == 0 { y.signum() } else { shifted };
    y - step
}

/// Smallest number of decay steps after which `|y| ≤ fraction·|y0|`.
pub fn steps_to_fraction(y0: i32, decay_a: u8, fraction: f64) -> u32 {
    if y0 == 0 {
        return 0;
    }
    let bound = fraction * f64::from(y0.unsigned_abs());
    let mut y = y0;
    let mut n = 0;
    while f64::from(y.unsigned_abs()) > bound {
        y = decay_value(y, decay_a);
        n += 1;
    }
    n
}
