use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poppins_core::apps::avoidance::{
    build_avoidance_network, run_avoidance, AvoidanceWeights, DecisionWindow, DECISION_HEADER,
    DIRECTIONS,
};
use poppins_core::apps::sudoku::{
    build_sudoku_network, generate_puzzle, solve_sudoku, write_grid, SudokuPuzzle, SudokuSettings,
};
use poppins_core::io::{
    load_network, run, save_network, write_cycles, Network, RunOptions, StimulusTrace,
};
use poppins_core::processor::{hierarchy_op_reduction, synapse_count};
use poppins_core::Error;

#[derive(Parser)]
#[command(
    name = "poppins",
    version,
    about = "Two-NPU spiking processor emulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a network description for a number of timesteps.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        raster_out: Option<PathBuf>,
        #[arg(long)]
        cycles_out: Option<PathBuf>,
        /// 2 or more evaluates the two NPUs on separate threads.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the description's cycle model.
        #[arg(long)]
        cycle_model: Option<String>,
    },
    /// Solve a Sudoku puzzle, given as a text grid or generated from the seed.
    Sudoku {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        puzzle: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also save the built network description here.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Decide one motion direction per window of a stimulus trace.
    Avoid {
        #[arg(long)]
        stimulus: PathBuf,
        #[arg(long)]
        windows: u64,
        #[arg(long, default_value_t = 50)]
        window_steps: u64,
        /// Network to use instead of the built-in eight-direction one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print size and memory figures of a network description.
    Inspect {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Unsolved(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::Unsolved(_) => "unsolved",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Unsolved(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read_stimulus(path: &Path) -> Result<StimulusTrace, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(StimulusTrace::read_from(file, &path.display().to_string())?)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| io_err(path, e))?,
    ))
}

fn cmd_run(
    config: &Path,
    stimulus: Option<&Path>,
    opts: RunOptions,
    raster_out: Option<&Path>,
    cycles_out: Option<&Path>,
) -> Result<(), CliError> {
    let network = load_network(config)?;
    let trace = match stimulus {
        Some(p) => read_stimulus(p)?,
        None => StimulusTrace::default(),
    };
    let out = run(&network, &trace, &opts)?;
    if let Some(p) = raster_out {
        out.raster.write_to(create(p)?)?;
    }
    if let Some(p) = cycles_out {
        write_cycles(create(p)?, &out.cycles)?;
    }
    println!("steps {}", opts.steps);
    println!("spikes {}", out.raster.len());
    println!("cycles_parallel {}", out.totals.parallel);
    println!("cycles_serial {}", out.totals.serial);
    Ok(())
}

fn cmd_sudoku(
    n: Option<usize>,
    puzzle: Option<&Path>,
    max_steps: u64,
    seed: u64,
    export: Option<&Path>,
) -> Result<(), CliError> {
    let puzzle = match puzzle {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let p = SudokuPuzzle::parse(&text)?;
            if let Some(n) = n.filter(|&n| n != p.n) {
                return Err(CliError::Usage(format!(
                    "--n {n} does not match the {}x{} puzzle in {}",
                    p.n,
                    p.n,
                    path.display()
                )));
            }
            p
        }
        None => generate_puzzle(n.unwrap_or(4), seed, 0)?,
    };
    let settings = SudokuSettings::default();
    if let Some(path) = export {
        save_network(path, &build_sudoku_network(&puzzle, &settings)?.network)?;
    }
    let outcome = solve_sudoku(&puzzle, &settings, seed, max_steps)?;
    let mut text = String::new();
    write_grid(&mut text, puzzle.n, &puzzle.clue_grid()).expect("writing to a String");
    println!("puzzle\n{text}");
    if let Some(g) = &outcome.grid {
        let mut text = String::new();
        write_grid(&mut text, g.n, &g.grid).expect("writing to a String");
        println!("decoded\n{text}");
    }
    println!("solved {}", outcome.solved);
    println!("steps {}", outcome.steps);
    println!("cycles_parallel {}", outcome.cycles.parallel);
    if outcome.solved {
        Ok(())
    } else {
        Err(CliError::Unsolved(format!(
            "no valid grid within {max_steps} timesteps"
        )))
    }
}

fn cmd_avoid(
    stimulus: &Path,
    windows: u64,
    window_steps: u64,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let window = DecisionWindow::new(window_steps)?;
    let network: Network = match config {
        Some(p) => load_network(p)?,
        None => build_avoidance_network(AvoidanceWeights::default())?,
    };
    let trace = read_stimulus(stimulus)?;
    let out = run_avoidance(&network, &trace, window, windows)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let write = |w: &mut std::io::StdoutLock<'_>, line: String| {
        writeln!(w, "{line}").map_err(|e| io_err(Path::new("stdout"), e))
    };
    write(&mut w, DECISION_HEADER.to_string())?;
    for (i, d) in out.decisions.iter().enumerate() {
        match d {
            Ok(d) => write(&mut w, d.to_string())?,
            Err(_) => write(&mut w, format!("{i},none,0{}", ",0".repeat(DIRECTIONS)))?,
        }
    }
    eprintln!("cycles_per_decision {:.0}", out.mean_cycles_per_decision());
    Ok(())
}

fn cmd_inspect(config: &Path) -> Result<(), CliError> {
    let network = load_network(config)?;
    let cfg = &network.config;
    let n1 = cfg.npu1.targets() as u64;
    let n2 = cfg.npu2.targets() as u64;
    println!("npu1_neurons {}", cfg.npu1.active_neurons);
    println!("npu2_neurons {}", cfg.npu2.active_neurons);
    println!("synapse_count {}", synapse_count(n1, n2));
    println!(
        "hierarchy_op_reduction {:.4}",
        hierarchy_op_reduction(n1, n2)
    );
    let mut total = 0;
    for (name, npu) in [("npu1", &cfg.npu1), ("npu2", &cfg.npu2)] {
        let mem = &npu.weights;
        let words = mem.words().len();
        let used = mem.words().iter().filter(|&&w| w != 0).count();
        let enabled: u32 = (0..mem.rows()).map(|r| npu.gs.code_for(r).gs_num()).sum();
        println!("{name}_memory_words {words}");
        println!("{name}_nonzero_words {used}");
        println!("{name}_enabled_groups {enabled}");
        total += words;
    }
    println!("memory_words {total}");
    println!("cycle_model {}", cfg.cycle_model);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            stimulus,
            steps,
            seed,
            raster_out,
            cycles_out,
            workers,
            cycle_model,
        } => cmd_run(
            &config,
            stimulus.as_deref(),
            RunOptions {
                steps,
                seed,
                workers,
                cycle_model,
            },
            raster_out.as_deref(),
            cycles_out.as_deref(),
        ),
        Command::Sudoku {
            n,
            puzzle,
            max_steps,
            seed,
            export,
        } => cmd_sudoku(n, puzzle.as_deref(), max_steps, seed, export.as_deref()),
        Command::Avoid {
            stimulus,
            windows,
            window_steps,
            config,
        } => cmd_avoid(&stimulus, windows, window_steps, config.as_deref()),
        Command::Inspect { config } => cmd_inspect(&config),
    }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let e = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", error_line(e.kind(), &e.message()));
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.message()));
            ExitCode::FAILURE
        }
    }
}
