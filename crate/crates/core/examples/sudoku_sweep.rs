//! Solves a batch of generated 4x4 puzzles and prints per-puzzle timings.
//!
//! usage: sudoku_sweep [puzzles] [max_steps] [inhibit excite clue bias noise decay a b v_t]
//!
//! The side length comes from the `N` environment variable (default 4).

use poppins_core::apps::sudoku::{generate_puzzle, solve_batch, SudokuSettings};

fn main() {
    let args: Vec<i64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("integer"))
        .collect();
    let puzzles = *args.first().unwrap_or(&20) as u64;
    let max_steps = *args.get(1).unwrap_or(&100_000) as u64;
    let mut s = SudokuSettings::default();
    if args.len() >= 11 {
        s.inhibit = args[2] as i32;
        s.excite = args[3] as i32;
        s.clue_drive = args[4] as i32;
        s.bias = args[5] as i32;
        s.noise = args[6] as i32;
        s.decay_a = args[7] as u8;
        s.params.a_num = args[8] as u8;
        s.params.b_num = args[9] as u8;
        s.params.v_t = args[10] as u8;
    }
    let n = std::env::var("N")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(4);
    let jobs: Vec<_> = (0..puzzles)
        .map(|seed| (generate_puzzle(n, seed, 0).unwrap(), seed))
        .collect();
    let outcomes = solve_batch(&jobs, &s, max_steps);
    let results: Vec<_> = jobs
        .iter()
        .zip(outcomes)
        .map(|((p, seed), o)| (*seed, p.clues.len(), o.unwrap()))
        .collect();
    let mut solved = 0;
    let mut cycles = 0u64;
    let mut steps = 0u64;
    for (seed, clues, o) in &results {
        println!(
            "puzzle {seed:2} clues {clues:2} solved {} steps {}",
            o.solved, o.steps
        );
        if o.solved {
            solved += 1;
            cycles += o.cycles.parallel;
            steps += o.steps;
        }
    }
    let k = solved.max(1) as f64;
    println!(
        "solved {solved}/{puzzles}  mean steps {:.0}  mean cycles {:.0}",
        steps as f64 / k,
        cycles as f64 / k
    );
}
