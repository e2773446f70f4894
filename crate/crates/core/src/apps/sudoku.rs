//! Sudoku as a winner-take-all spiking network on the second NPU.
//!
//! Neuron `(cell, digit)` sits at address `cell·n + digit − 1`. Neurons whose
//! assignments conflict (same cell, or same digit in a row, column or box)
//! inhibit each other; each neuron excites itself; clue neurons receive a
//! strong tonic input and every other neuron seeded noise.

use std::fmt;
use std::ops::Range;

use rayon::prelude::*;

use crate::cycle::CycleTotals;
use crate::error::{Error, Result};
use crate::io::description::{Network, NoiseSource, TonicInput};
use crate::io::run::{build_processor, Driver, RunOptions};
use crate::io::trace::{RasterFile, StimulusTrace};
use crate::neuron::NeuronParams;
use crate::processor::{NpuId, ProcessorConfig};
use crate::rng::Lcg;
use crate::synapse::GroupSparseConfig;

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 5;

/// Decode cadence of the solver loop, in timesteps.
pub const DECODE_INTERVAL: u64 = 200;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SudokuPuzzle {
    pub n: usize,
    /// `(row, col, digit)` with digits `1..=n`.
    pub clues: Vec<(usize, usize, u8)>,
}

/// Box shape used for side `n`: the most square factorization with
/// `rows ≤ cols`. Sizes 2, 3 and 5 degenerate to single-row boxes.
pub fn box_shape(n: usize) -> (usize, usize) {
    let rows = (1..=n)
        .filter(|&r| n.is_multiple_of(r) && r * r <= n)
        .max()
        .unwrap_or(1);
    (rows, n / rows)
}

impl SudokuPuzzle {
    pub fn new(n: usize, clues: Vec<(usize, usize, u8)>) -> Result<Self> {
        let p = Self { n, clues };
        p.validate()?;
        Ok(p)
    }

    pub fn neurons(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Nominal synapse budget of the full network, `n⁶`.
    pub fn nominal_synapses(&self) -> usize {
        self.neurons() * self.neurons()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if !(MIN_SIZE..=MAX_SIZE).contains(&n) {
            return Err(Error::Puzzle(format!(
                "side {n} outside {MIN_SIZE}..={MAX_SIZE}"
            )));
        }
        let mut grid = vec![0u8; n * n];
        for &(r, c, d) in &self.clues {
            if r >= n || c >= n || d == 0 || usize::from(d) > n {
                return Err(Error::Puzzle(format!("clue ({r}, {c}) = {d} out of range")));
            }
            if grid[r * n + c] != 0 && grid[r * n + c] != d {
                return Err(Error::Puzzle(format!("cell ({r}, {c}) has two clues")));
            }
            grid[r * n + c] = d;
        }
        for &(r, c, d) in &self.clues {
            for (r2, c2) in peers(n, r, c) {
                if grid[r2 * n + c2] == d {
                    return Err(Error::Puzzle(format!(
                        "clues ({r}, {c}) and ({r2}, {c2}) both hold {d}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses a text grid: one row per line, `0` for blanks. Digits may be
    /// separated by whitespace or written back to back.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.chars()
                    .filter(|c| !c.is_whitespace() && *c != ',')
                    .map(|c| {
                        c.to_digit(10)
                            .map(|d| d as u8)
                            .ok_or_else(|| Error::Puzzle(format!("unexpected character {c:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Puzzle(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        let clues = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &d)| d != 0)
                    .map(move |(c, &d)| (r, c, d))
            })
            .collect();
        Self::new(n, clues)
    }

    pub fn clue_grid(&self) -> Vec<u8> {
        let mut g = vec![0; self.n * self.n];
        for &(r, c, d) in &self.clues {
            g[r * self.n + c] = d;
        }
        g
    }
}

impl fmt::Display for SudokuPuzzle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_grid(f, self.n, &self.clue_grid())
    }
}

pub fn write_grid(f: &mut impl fmt::Write, n: usize, grid: &[u8]) -> fmt::Result {
    for row in grid.chunks(n) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Cells sharing a row, column or box with `(r, c)`, excluding itself.
fn peers(n: usize, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> {
    let (br, bc) = box_shape(n);
    (0..n)
        .flat_map(move |r2| (0..n).map(move |c2| (r2, c2)))
        .filter(move |&(r2, c2)| {
            (r2, c2) != (r, c) && (r2 == r || c2 == c || (r2 / br == r / br && c2 / bc == c / bc))
        })
}

pub fn neuron_index(n: usize, row: usize, col: usize, digit: u8) -> usize {
    (row * n + col) * n + usize::from(digit) - 1
}

/// Addresses of every neuron whose assignment conflicts with `(row, col, digit)`.
pub fn conflicts(n: usize, row: usize, col: usize, digit: u8) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=n as u8)
        .filter(|&d| d != digit)
        .map(|d| neuron_index(n, row, col, d))
        .collect();
    out.extend(peers(n, row, col).map(|(r, c)| neuron_index(n, r, c, digit)));
    out.sort_unstable();
    out
}

/// Tunable network constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SudokuSettings {
    pub inhibit: i32,
    pub excite: i32,
    /// Tonic input of clue neurons.
    pub clue_drive: i32,
    /// Tonic input of every non-clue neuron.
    pub bias: i32,
    pub noise: i32,
    pub decay_a: u8,
    pub params: NeuronParams,
}

impl Default for SudokuSettings {
    fn default() -> Self {
        Self {
            inhibit: -8,
            excite: 3,
            clue_drive: 30,
            bias: 4,
            noise: 16,
            decay_a: 4,
            params: NeuronParams {
                a_num: 1,
                b_num: 2,
                v_r: 0,
                v_t: 120,
                v_reset: 0,
            },
        }
    }
}

/// Built network plus the explicit stimulus that accompanies it. The clue
/// drive and noise are declared in the network itself, so the trace is empty.
#[derive(Clone, Debug)]
pub struct SudokuNetwork {
    pub network: Network,
    pub stimulus: StimulusTrace,
}

pub fn build_sudoku_network(puzzle: &SudokuPuzzle, s: &SudokuSettings) -> Result<SudokuNetwork> {
    puzzle.validate()?;
    let n = puzzle.n;
    let neurons = puzzle.neurons();
    let active = neurons.next_power_of_two();
    let mut cfg = ProcessorConfig::new(1, active);
    let npu = &mut cfg.npu2;
    npu.decay_a = s.decay_a;
    npu.params = vec![s.params; active];
    let ff = npu.upstream_sources;
    for r in 0..n {
        for c in 0..n {
            for d in 1..=n as u8 {
                let src = neuron_index(n, r, c, d);
                for dst in conflicts(n, r, c, d) {
                    npu.set_weight(ff + src, dst, s.inhibit)?;
                }
                npu.set_weight(ff + src, src, s.excite)?;
            }
        }
    }
    npu.gs = GroupSparseConfig::from_memory(&npu.weights);

    let clue_neurons: Vec<usize> = puzzle
        .clues
        .iter()
        .map(|&(r, c, d)| neuron_index(n, r, c, d))
        .collect();
    let mut network = Network::new(cfg);
    for &neuron in &clue_neurons {
        network.drive.tonic.push(TonicInput {
            npu: NpuId::Npu2,
            neuron,
            value: s.clue_drive,
        });
    }
    let free: Vec<usize> = (0..neurons).filter(|i| !clue_neurons.contains(i)).collect();
    if s.bias != 0 {
        network
            .drive
            .tonic
            .extend(free.iter().map(|&neuron| TonicInput {
                npu: NpuId::Npu2,
                neuron,
                value: s.bias,
            }));
    }
    if s.noise > 0 && !free.is_empty() {
        network.drive.noise.push(NoiseSource {
            npu: NpuId::Npu2,
            neurons: free,
            amplitude: s.noise,
        });
    }
    network.validate()?;
    Ok(SudokuNetwork {
        network,
        stimulus: StimulusTrace::default(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedGrid {
    pub n: usize,
    pub grid: Vec<u8>,
    /// Cells whose winning digit tied with another.
    pub low_confidence: Vec<usize>,
}

/// Reads each cell's digit as the most active of its `n` neurons over
/// `window`. Ties resolve to the lowest digit and are flagged.
pub fn decode_sudoku_solution(
    raster: &RasterFile,
    window: Range<u64>,
    n: usize,
) -> Result<DecodedGrid> {
    let counts = raster.spike_counts(NpuId::Npu2, window.clone(), n * n * n);
    let mut grid = Vec::with_capacity(n * n);
    let mut low_confidence = Vec::new();
    for cell in 0..n * n {
        let cell_counts = &counts[cell * n..(cell + 1) * n];
        let best = *cell_counts.iter().max().expect("n > 0");
        if best == 0 {
            return Err(Error::NoDecision(format!(
                "cell ({}, {}) has no spikes in timesteps {}..{}",
                cell / n,
                cell % n,
                window.start,
                window.end
            )));
        }
        let digit = cell_counts
            .iter()
            .position(|&c| c == best)
            .expect("max exists");
        if cell_counts.iter().filter(|&&c| c == best).count() > 1 {
            low_confidence.push(cell);
        }
        grid.push(digit as u8 + 1);
    }
    Ok(DecodedGrid {
        n,
        grid,
        low_confidence,
    })
}

/// Exhaustive validity check: every row, column and box holds each digit
/// exactly once and every clue is respected.
pub fn verify_sudoku(grid: &[u8], puzzle: &SudokuPuzzle) -> bool {
    let n = puzzle.n;
    if grid.len() != n * n {
        return false;
    }
    let (br, bc) = box_shape(n);
    let mut units: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        units.push((0..n).map(|j| i * n + j).collect());
        units.push((0..n).map(|j| j * n + i).collect());
    }
    for b0 in (0..n).step_by(br) {
        for b1 in (0..n).step_by(bc) {
            units.push(
                (b0..b0 + br)
                    .flat_map(|r| (b1..b1 + bc).map(move |c| r * n + c))
                    .collect(),
            );
        }
    }
    let complete = units.iter().all(|u| {
        let mut seen = vec![false; n + 1];
        u.iter().all(|&cell| {
            let d = usize::from(grid[cell]);
            (1..=n).contains(&d) && !std::mem::replace(&mut seen[d], true)
        })
    });
    complete && puzzle.clues.iter().all(|&(r, c, d)| grid[r * n + c] == d)
}

/// Counts completions of `grid` (0 = blank), stopping at `limit`.
pub fn count_solutions(n: usize, grid: &mut [u8], limit: usize) -> usize {
    let Some(cell) = grid.iter().position(|&d| d == 0) else {
        return 1;
    };
    let (r, c) = (cell / n, cell % n);
    let mut found = 0;
    for d in 1..=n as u8 {
        if peers(n, r, c).all(|(r2, c2)| grid[r2 * n + c2] != d) {
            grid[cell] = d;
            found += count_solutions(n, grid, limit - found);
            grid[cell] = 0;
            if found >= limit {
                break;
            }
        }
    }
    found
}

fn random_solution(n: usize, rng: &mut Lcg) -> Vec<u8> {
    fn fill(n: usize, grid: &mut [u8], rng: &mut Lcg) -> bool {
        let Some(cell) = grid.iter().position(|&d| d == 0) else {
            return true;
        };
        let (r, c) = (cell / n, cell % n);
        let mut digits: Vec<u8> = (1..=n as u8).collect();
        rng.shuffle(&mut digits);
        for d in digits {
            if peers(n, r, c).all(|(r2, c2)| grid[r2 * n + c2] != d) {
                grid[cell] = d;
                if fill(n, grid, rng) {
                    return true;
                }
                grid[cell] = 0;
            }
        }
        false
    }
    let mut grid = vec![0; n * n];
    assert!(fill(n, &mut grid, rng), "every size 2..=5 has a solution");
    grid
}

/// Random puzzle with a unique solution: clues are removed in random order
/// while the solution stays unique and more than `min_clues` remain.
pub fn generate_puzzle(n: usize, seed: u64, min_clues: usize) -> Result<SudokuPuzzle> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&n) {
        return Err(Error::Puzzle(format!(
            "side {n} outside {MIN_SIZE}..={MAX_SIZE}"
        )));
    }
    let mut rng = Lcg::new(seed);
    let mut grid = random_solution(n, &mut rng);
    let mut order: Vec<usize> = (0..n * n).collect();
    rng.shuffle(&mut order);
    let mut clues = n * n;
    for cell in order {
        if clues <= min_clues {
            break;
        }
        let keep = grid[cell];
        grid[cell] = 0;
        if count_solutions(n, &mut grid.clone(), 2) == 1 {
            clues -= 1;
        } else {
            grid[cell] = keep;
        }
    }
    let clues = grid
        .iter()
        .enumerate()
        .filter(|(_, &d)| d != 0)
        .map(|(i, &d)| (i / n, i % n, d))
        .collect();
    SudokuPuzzle::new(n, clues)
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solved: bool,
    /// Timesteps executed.
    pub steps: u64,
    /// Last decoded grid, if any decode succeeded.
    pub grid: Option<DecodedGrid>,
    pub cycles: CycleTotals,
}

/// Runs the network, decoding the most recent [`DECODE_INTERVAL`] timesteps
/// after each interval, until the decoded grid is valid or `max_steps` pass.
pub fn solve_sudoku(
    puzzle: &SudokuPuzzle,
    settings: &SudokuSettings,
    seed: u64,
    max_steps: u64,
) -> Result<SolveOutcome> {
    let built = build_sudoku_network(puzzle, settings)?;
    let opts = RunOptions {
        steps: max_steps,
        seed,
        ..Default::default()
    };
    let mut processor = build_processor(&built.network, &opts)?;
    let mut driver = Driver::new(&built.network, &built.stimulus, seed)?;
    let mut raster = RasterFile::new();
    let mut cycles = CycleTotals::default();
    let mut grid = None;
    let mut t = 0;
    while t < max_steps {
        let out = processor.step(&driver.events(t))?;
        raster.push_step(t, NpuId::Npu2, &out.rasters[1]);
        cycles.add(&out.report);
        t += 1;
        if t % DECODE_INTERVAL == 0 || t == max_steps {
            let window = t.saturating_sub(DECODE_INTERVAL)..t;
            if let Ok(decoded) = decode_sudoku_solution(&raster, window, puzzle.n) {
                let ok = verify_sudoku(&decoded.grid, puzzle);
                grid = Some(decoded);
                if ok {
                    return Ok(SolveOutcome {
                        solved: true,
                        steps: t,
                        grid,
                        cycles,
                    });
                }
            }
            // Only the current window is ever decoded.
            raster = RasterFile::new();
        }
    }
    Ok(SolveOutcome {
        solved: false,
        steps: t,
        grid,
        cycles,
    })
}

/// Solves `(puzzle, seed)` jobs in parallel, one processor per job. Results
/// keep the input order.
pub fn solve_batch(
    jobs: &[(SudokuPuzzle, u64)],
    settings: &SudokuSettings,
    max_steps: u64,
) -> Vec<Result<SolveOutcome>> {
    jobs.par_iter()
        .map(|(p, seed)| solve_sudoku(p, settings, *seed, max_steps))
        .collect()
}
