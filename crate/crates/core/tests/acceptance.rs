//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::Instant;

use common::{ref_decay, ref_neuron};
use poppins_core::apps::avoidance::{
    build_avoidance_network, dominant_stimulus, run_avoidance, AvoidanceWeights, DecisionWindow,
    EvidenceProfile,
};
use poppins_core::apps::behavior::{simulate, BEHAVIOR_STEPS, PRESETS};
use poppins_core::apps::sudoku::{
    build_sudoku_network, generate_puzzle, solve_batch, verify_sudoku, SudokuSettings,
};
use poppins_core::io::{run, write_cycles, RunOptions};
use poppins_core::npu::ExternalEvent;
use poppins_core::processor::{hierarchy_op_reduction, synapse_count, NpuId, Processor};
use poppins_core::rng::Lcg;
use poppins_core::synapse::{
    accumulate_spike, decay_value, decode_spike_stream, GroupSparseConfig, GsCode,
    PostSynapticState, SpikeStream, WeightMemory,
};
use poppins_core::{neuron_step, NeuronParams, NeuronState, ProcessorConfig};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn neuron_oracle() -> Outcome {
    let start = Instant::now();
    let fixture = include_str!("fixtures/iqif_cases.txt");
    let mut cases = 0;
    let mut self_checked = 0u64;
    for line in fixture.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let k: u64 = f[0].parse().map_err(|e| format!("{e}"))?;
        let mut rng = Lcg::new(k);
        let a = rng.below(8) as u8;
        let b = rng.below(8) as u8;
        let v_r = rng.below(256) as u8;
        let v_t = rng.range(i32::from(v_r), 255) as u8;
        let p =
            NeuronParams::new(a, b, v_r, v_t, rng.below(256) as u8).map_err(|e| e.to_string())?;
        let mut st = NeuronState::at(rng.below(256) as u8);
        let lo = rng.range(-100, 40);
        let hi = lo + rng.range(0, 160);
        let mut vs = Vec::with_capacity(10_000);
        let mut spikes = Vec::with_capacity(10_000);
        let mut ref_v = st.v_m;
        for _ in 0..10_000 {
            let i = rng.range(lo, hi);
            let (next, s) = neuron_step(st, &p, i);
            let (rv, rs) = ref_neuron(ref_v, &p, i);
            check(
                (next.v_m, s) == (rv, rs),
                format!("case {k} diverges from in-crate reference"),
            )?;
            self_checked += 1;
            ref_v = rv;
            st = next;
            vs.push(st.v_m);
            spikes.push(u8::from(s));
        }
        let mut h = Sha256::new();
        h.update(&vs);
        h.update(&spikes);
        check(
            hex::encode(h.finalize()) == f[2],
            format!("case {k} differs from scripted evaluator"),
        )?;
        cases += 1;
    }
    check(cases == 1000, format!("{cases} cases in fixture"))?;
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "{cases} cases x 10000 steps bit-exact ({self_checked} steps, {secs:.1}s)"
    ))
}

fn decay_properties() -> Outcome {
    let start = Instant::now();
    let mut longest = 0;
    for a in 0..=7u8 {
        for y0 in -2047..=2047i32 {
            let mut y = y0;
            let mut steps = 0;
            while y != 0 {
                let next = decay_value(y, a);
                check(
                    i64::from(next) == ref_decay(i64::from(y), a),
                    format!("y={y} a={a} disagrees with reference"),
                )?;
                check(
                    next == 0 || next.signum() == y.signum(),
                    format!("sign flip at y={y} a={a}"),
                )?;
                check(next.abs() < y.abs(), format!("no progress at y={y} a={a}"))?;
                y = next;
                steps += 1;
            }
            longest = longest.max(steps);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "4095 x 8 sequences reach 0 monotonically, longest {longest} steps ({secs:.1}s)"
    ))
}

fn crossbar_equivalence() -> Outcome {
    let mut spikes = 0;
    for seed in 0..200u64 {
        let mut rng = Lcg::new(seed ^ 0xC0FFEE);
        let sources = 1 + rng.below(160);
        let targets = 1 + rng.below(160);
        let groups = targets.div_ceil(8);
        let mut gs = GroupSparseConfig::uniform(GsCode::all(groups));
        let mut dense = vec![0i32; sources * targets];
        for s in 0..sources {
            let mask = (0..groups).fold(0u64, |m, g| if rng.below(3) > 0 { m | 1 << g } else { m });
            gs = gs.with_override(s, GsCode(mask));
            for t in 0..targets {
                if mask >> (t / 8) & 1 == 1 && rng.below(2) == 0 {
                    dense[s * targets + t] = rng.range(-8, 7);
                }
            }
        }
        let stream = SpikeStream::from_bits((0..sources).map(|_| rng.below(3) == 0).collect());
        let mem = WeightMemory::from_dense(sources, targets, &dense).map_err(|e| e.to_string())?;
        let mut psp = PostSynapticState::new(targets, 0);
        for e in &decode_spike_stream(&stream, &gs).entries {
            let charged =
                accumulate_spike(e.source, &mem, &gs, &mut psp).map_err(|e| e.to_string())?;
            check(
                charged == gs.code_for(e.source).0.count_ones() && e.mac_cycles == charged,
                format!(
                    "seed {seed}: cycle charge of source {} is not popcount",
                    e.source
                ),
            )?;
            spikes += 1;
        }
        let want: Vec<i32> = (0..targets)
            .map(|t| {
                (0..sources)
                    .filter(|&s| stream.get(s))
                    .map(|s| dense[s * targets + t])
                    .sum()
            })
            .collect();
        check(
            psp.y == want,
            format!("seed {seed}: accumulation differs from dense product"),
        )?;
    }
    Ok(format!(
        "200 instances up to 160x160 exact, {spikes} spikes charged popcount(gs)"
    ))
}

fn hierarchy_arithmetic() -> Outcome {
    for n in 1..256 {
        let r = hierarchy_op_reduction(n, n);
        check(r == 0.25, format!("reduction({n}, {n}) = {r}"))?;
    }
    let s = synapse_count(33, 129);
    check(s == 17730, format!("synapse_count(33, 129) = {s}"))?;
    Ok(format!(
        "reduction(n, n) = 0.25 for n in 1..256; synapse_count(33, 129) = {s}"
    ))
}

fn scheduler_delay() -> Outcome {
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut rng = Lcg::new(seed);
        let n1 = 1 << rng.below(6);
        let mut cfg = ProcessorConfig::new(n1, 1 << rng.below(8));
        for s in 0..n1 {
            for t in 0..=n1 {
                cfg.npu1
                    .set_weight(s, t, rng.range(-8, 7))
                    .map_err(|e| e.to_string())?;
            }
        }
        let mut p = Processor::new(cfg).map_err(|e| e.to_string())?;
        let mut previous: Option<SpikeStream> = None;
        for t in 0..200 {
            let stim: Vec<_> = (0..rng.below(6))
                .map(|_| {
                    (
                        NpuId::Npu1,
                        ExternalEvent::new(rng.below(n1 + 1), rng.range(-20, 127)),
                    )
                })
                .collect();
            let out = p.step(&stim).map_err(|e| e.to_string())?;
            let want = previous.take().unwrap_or_else(|| SpikeStream::new(n1 + 1));
            check(
                out.feedforward == want,
                format!("seed {seed} t {t}: feedforward is not the previous NPU1 raster"),
            )?;
            checked += out.rasters[0].count();
            previous = Some(out.rasters[0].clone());
        }
    }
    check(checked > 0, "no NPU1 spikes were generated")?;
    Ok(format!(
        "50 random traces x 200 steps, {checked} NPU1 spikes delayed by one step"
    ))
}

fn bytes_of(out: &poppins_core::io::RunOutput) -> Result<(Vec<u8>, Vec<u8>), String> {
    let mut r = Vec::new();
    out.raster.write_to(&mut r).map_err(|e| e.to_string())?;
    let mut c = Vec::new();
    write_cycles(&mut c, &out.cycles).map_err(|e| e.to_string())?;
    Ok((r, c))
}

fn determinism() -> Outcome {
    let sudoku = build_sudoku_network(
        &generate_puzzle(4, 1, 0).map_err(|e| e.to_string())?,
        &SudokuSettings::default(),
    )
    .map_err(|e| e.to_string())?;
    let avoid = build_avoidance_network(AvoidanceWeights::default()).map_err(|e| e.to_string())?;
    let avoid_trace = dominant_stimulus(
        &[2, 5],
        DecisionWindow::default(),
        EvidenceProfile::default(),
        9,
    )
    .map_err(|e| e.to_string())?;
    let fixtures = [
        ("sudoku", &sudoku.network, &sudoku.stimulus, 2000),
        ("avoidance", &avoid, &avoid_trace, 100),
    ];
    for (name, net, trace, steps) in fixtures {
        let opts = RunOptions {
            steps,
            seed: 42,
            ..Default::default()
        };
        let a = bytes_of(&run(net, trace, &opts).map_err(|e| e.to_string())?)?;
        let b = bytes_of(&run(net, trace, &opts).map_err(|e| e.to_string())?)?;
        let c = bytes_of(
            &run(
                net,
                trace,
                &RunOptions {
                    workers: 2,
                    ..opts.clone()
                },
            )
            .map_err(|e| e.to_string())?,
        )?;
        check(a == b, format!("{name}: repeated run differs"))?;
        check(a == c, format!("{name}: worker count changes output"))?;
        check(!a.0.is_empty(), format!("{name}: empty raster"))?;
    }
    Ok("sudoku and avoidance fixtures byte-identical across reruns and worker counts".into())
}

fn sudoku() -> Outcome {
    const REFERENCE_CYCLES: f64 = 7_500.0;
    let jobs: Vec<_> = (0..20u64)
        .map(|seed| generate_puzzle(4, seed, 0).map(|p| (p, seed)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let outcomes = solve_batch(&jobs, &SudokuSettings::default(), 100_000);
    let mut solved = 0;
    let mut cycles = 0u64;
    for ((p, seed), o) in jobs.iter().zip(outcomes) {
        let o = o.map_err(|e| e.to_string())?;
        if o.solved {
            let grid = o.grid.as_ref().ok_or("solved without a grid")?;
            check(
                verify_sudoku(&grid.grid, p),
                format!("seed {seed}: solved grid fails verification"),
            )?;
            solved += 1;
            cycles += o.cycles.parallel;
        }
    }
    let per = cycles as f64 / f64::from(solved.max(1));
    let detail = format!(
        "{solved}/20 solved; {per:.0} cycles/puzzle = {:.1}x the ~7.5k reference",
        per / REFERENCE_CYCLES
    );
    check(solved >= 19, detail.clone())?;
    check(per <= 100.0 * REFERENCE_CYCLES, detail.clone())?;
    Ok(detail)
}

fn avoidance() -> Outcome {
    const REFERENCE_CYCLES: f64 = 100e6 / 29_400.0;
    let net = build_avoidance_network(AvoidanceWeights::default()).map_err(|e| e.to_string())?;
    let w = DecisionWindow::default();
    let mut correct = 0;
    let mut cycles = 0.0;
    for seed in 0..20u64 {
        let dir = Lcg::new(seed).below(8);
        let trace = dominant_stimulus(&[dir], w, EvidenceProfile::default(), seed)
            .map_err(|e| e.to_string())?;
        let out = run_avoidance(&net, &trace, w, 1).map_err(|e| e.to_string())?;
        if let Ok(d) = &out.decisions[0] {
            if d.direction == dir && !d.tie {
                correct += 1;
            }
        }
        cycles += out.mean_cycles_per_decision();
    }
    let per = cycles / 20.0;
    let detail = format!(
        "{correct}/20 correct over 50-step windows; {per:.0} cycles/decision (reference ~{REFERENCE_CYCLES:.0})"
    );
    check(correct == 20, detail.clone())?;
    Ok(detail)
}

fn behavior_fixtures() -> Outcome {
    let fixture = include_str!("fixtures/behavior.txt");
    let pinned: Vec<Vec<&str>> = fixture
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect())
        .collect();
    check(pinned.len() == 5, "fixture must pin five presets")?;
    let mut sigs = std::collections::BTreeSet::new();
    for (p, want) in PRESETS.iter().zip(&pinned) {
        let first = simulate(&p.params, &p.profile, BEHAVIOR_STEPS);
        let again = simulate(&p.params, &p.profile, BEHAVIOR_STEPS);
        check(first == again, format!("{} is not reproducible", p.name))?;
        check(
            first.digest() == want[3],
            format!("{} differs from its pinned trajectory", p.name),
        )?;
        let s = first.signature();
        check(
            s.spikes.to_string() == want[1] && s.cv_bucket.to_string() == want[2],
            format!("{} signature changed", p.name),
        )?;
        sigs.insert(s);
    }
    check(
        sigs.len() == 5,
        format!("only {} distinct signatures", sigs.len()),
    )?;
    let list: Vec<String> = PRESETS
        .iter()
        .map(|p| {
            let s = simulate(&p.params, &p.profile, BEHAVIOR_STEPS).signature();
            format!("{}({}, cv{})", p.name, s.spikes, s.cv_bucket)
        })
        .collect();
    Ok(format!("5 distinct signatures: {}", list.join(" ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("neuron oracle equivalence", neuron_oracle),
        ("decay properties", decay_properties),
        ("crossbar equivalence", crossbar_equivalence),
        ("hierarchy arithmetic", hierarchy_arithmetic),
        ("scheduler delay", scheduler_delay),
        ("determinism", determinism),
        ("sudoku", sudoku),
        ("avoidance", avoidance),
        ("behavior fixtures", behavior_fixtures),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {}/9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
