use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use ptopo_core::critical::hierarchy_invariant_fraction;
use ptopo_core::io::{
    diagram_to_csv, level_stats_to_csv, sidecar_path, write_atomic, write_convergence,
    write_critical_points, write_diagram, write_raw_volume, write_tracks,
};
use ptopo_core::metrics::convergence_report;
use ptopo_core::synth::generate;
use ptopo_core::{
    run_nonprogressive, run_progressive, Budget, CriticalPoint, LevelStats, LifetimeTracker,
    PersistenceDiagram, Side, StopReason, VolumeHeader,
};

use crate::{input, BenchArgs, Mode, RunArgs, SynthArgs};

fn init_threads(threads: Option<u32>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

/// First Ctrl-C: finish the current level, emit, exit. Second: exit now.
fn interrupt_flag() -> Result<Arc<AtomicBool>> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = Arc::clone(&flag);
    ctrlc::set_handler(move || {
        if handler_flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing the current level");
    })
    .context("installing the interrupt handler")?;
    Ok(flag)
}

fn budget(args: &RunArgs) -> Result<Budget> {
    Ok(Budget {
        time: args.budget_ms.map(Duration::from_millis),
        max_level: args.levels,
        interrupt: Some(interrupt_flag()?),
    })
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn level_file(dir: &Path, stem: &str, level: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_level{level:02}.{ext}"))
}

fn stop_label(stop: StopReason) -> &'static str {
    match stop {
        StopReason::Completed => "completed",
        StopReason::TimeBudget => "time budget reached",
        StopReason::LevelCap => "level cap reached",
        StopReason::Interrupted => "interrupted",
    }
}

fn reject_progressive_only(args: &RunArgs) -> Result<()> {
    let flags = [
        (args.per_level, "--per-level"),
        (args.metrics, "--metrics"),
        (args.lifetime, "--lifetime"),
        (args.budget_ms.is_some(), "--budget-ms"),
        (args.levels.is_some(), "--levels"),
    ];
    if let Some((_, name)) = flags.iter().find(|(set, _)| *set) {
        bail!("{name} requires --mode progressive");
    }
    Ok(())
}

struct Trackers {
    minima: LifetimeTracker,
    maxima: LifetimeTracker,
}

impl Trackers {
    fn new(l_max: usize) -> Self {
        Trackers {
            minima: LifetimeTracker::new(Side::Lower, l_max),
            maxima: LifetimeTracker::new(Side::Upper, l_max),
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write_tracks(self.minima.tracks(), &dir.join("tracks_minima.csv"))?;
        write_tracks(self.maxima.tracks(), &dir.join("tracks_maxima.csv"))?;
        Ok(())
    }
}

pub fn diagram(args: &RunArgs) -> Result<()> {
    init_threads(args.threads)?;
    let (field, h) = input::load(&args.input)?;
    prepare_out(&args.out)?;
    let ext = args.format.extension();
    let final_path = args.out.join(format!("diagram.{ext}"));

    if args.mode == Mode::Nonprogressive {
        reject_progressive_only(args)?;
        let start = Instant::now();
        let (_, d) = run_nonprogressive(&h, &field, Some(args.pairs))?;
        let d = d.context("no diagram computed")?;
        write_diagram(&d, &final_path, args.format)?;
        eprintln!(
            "level {} (non-progressive): {} pairs in {:.1} ms -> {}",
            d.level,
            d.len(),
            start.elapsed().as_secs_f64() * 1e3,
            final_path.display()
        );
        return Ok(());
    }

    let budget = budget(args)?;
    let mut last: Option<PersistenceDiagram> = None;
    let mut history = Vec::new();
    let mut trackers = args.lifetime.then(|| Trackers::new(args.lmax));
    let summary = run_progressive(&h, &field, Some(args.pairs), &budget, |out| {
        let Some(d) = out.diagram else {
            return Ok(());
        };
        if args.per_level {
            write_diagram(d, &level_file(&args.out, "diagram", out.level, ext), args.format)?;
        }
        if args.metrics {
            history.push((out.level, out.elapsed.as_secs_f64() * 1e3, d.clone()));
        }
        if let Some(t) = trackers.as_mut() {
            t.minima.update(&h, out.state);
            t.maxima.update(&h, out.state);
        }
        eprintln!(
            "level {}: {} pairs, {:.1} ms",
            out.level,
            d.len(),
            out.elapsed.as_secs_f64() * 1e3
        );
        last = Some(d.clone());
        Ok(())
    })?;
    let d = last.context("no level was completed")?;
    write_diagram(&d, &final_path, args.format)?;
    if args.metrics {
        let (lo, hi) = field.range();
        let rows = convergence_report(&history, hi - lo)?;
        write_convergence(&rows, &args.out.join("convergence.csv"))?;
    }
    if let Some(t) = &trackers {
        t.write(&args.out)?;
    }
    eprintln!(
        "level {}/{} ({}): {} pairs -> {}",
        summary.last_level,
        summary.finest_level,
        stop_label(summary.stop),
        d.len(),
        final_path.display()
    );
    Ok(())
}

fn print_ti(stats: &[LevelStats]) {
    for s in stats {
        println!(
            "level {}: {} vertices, {} invariant ({:.4})",
            s.level,
            s.vertices,
            s.invariant(),
            s.invariant_fraction()
        );
    }
    let total: usize = stats.iter().map(|s| s.invariant()).sum();
    println!(
        "total: {} invariant, fraction {:.4}",
        total,
        hierarchy_invariant_fraction(stats)
    );
}

pub fn critical_points(args: &RunArgs) -> Result<()> {
    if args.metrics {
        bail!("--metrics applies to the diagram subcommand");
    }
    init_threads(args.threads)?;
    let (field, h) = input::load(&args.input)?;
    prepare_out(&args.out)?;
    let final_path = args.out.join("critical_points.csv");
    let stats_path = args.out.join("ti_stats.csv");

    if args.mode == Mode::Nonprogressive {
        reject_progressive_only(args)?;
        let (state, _) = run_nonprogressive(&h, &field, None)?;
        write_critical_points(&state.critical_points(&h), &final_path)?;
        write_atomic(&stats_path, level_stats_to_csv(&[*state.stats()]).as_bytes())?;
        print_ti(&[*state.stats()]);
        return Ok(());
    }

    let budget = budget(args)?;
    let mut last: Vec<CriticalPoint> = Vec::new();
    let mut trackers = args.lifetime.then(|| Trackers::new(args.lmax));
    let summary = run_progressive(&h, &field, None, &budget, |out| {
        let points = out.state.critical_points(&h);
        if args.per_level {
            write_critical_points(&points, &level_file(&args.out, "critical_points", out.level, "csv"))?;
        }
        if let Some(t) = trackers.as_mut() {
            t.minima.update(&h, out.state);
            t.maxima.update(&h, out.state);
        }
        last = points;
        Ok(())
    })?;
    write_critical_points(&last, &final_path)?;
    write_atomic(&stats_path, level_stats_to_csv(&summary.stats).as_bytes())?;
    if let Some(t) = &trackers {
        t.write(&args.out)?;
    }
    print_ti(&summary.stats);
    eprintln!(
        "level {}/{} ({}): {} critical points -> {}",
        summary.last_level,
        summary.finest_level,
        stop_label(summary.stop),
        last.len(),
        final_path.display()
    );
    Ok(())
}

struct BenchRow {
    mode: Mode,
    threads: usize,
    best_ms: f64,
    median_ms: f64,
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let (field, h) = input::load(&args.input)?;
    let n = match args.threads {
        Some(n) => n as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let mut thread_counts = vec![1];
    if n > 1 {
        thread_counts.push(n);
    }
    let mut rows = Vec::new();
    let mut reference: Option<String> = None;
    for &threads in &thread_counts {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        for mode in [Mode::Progressive, Mode::Nonprogressive] {
            let mut times = Vec::new();
            for _ in 0..args.repeat {
                let start = Instant::now();
                let d = pool.install(|| run_once(&h, &field, args, mode))?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
                let csv = diagram_to_csv(&d);
                match &reference {
                    None => reference = Some(csv),
                    Some(r) if *r != csv => {
                        bail!("diagram differs between runs ({mode:?}, {threads} threads)")
                    }
                    Some(_) => {}
                }
            }
            times.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                mode,
                threads,
                best_ms: times[0],
                median_ms: times[times.len() / 2],
            });
        }
    }

    let mut table = String::from("mode,threads,best_ms,median_ms\n");
    for r in &rows {
        let mode = match r.mode {
            Mode::Progressive => "progressive",
            Mode::Nonprogressive => "nonprogressive",
        };
        let _ = writeln!(table, "{mode},{},{:.3},{:.3}", r.threads, r.best_ms, r.median_ms);
    }
    println!("{:<16}{:>8}{:>12}{:>12}", "mode", "threads", "best ms", "median ms");
    for line in table.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        println!("{:<16}{:>8}{:>12}{:>12}", f[0], f[1], f[2], f[3]);
    }
    println!(
        "identical diagrams across {} runs",
        rows.len() * args.repeat as usize
    );
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        write_atomic(&dir.join("bench.csv"), table.as_bytes())?;
    }
    Ok(())
}

fn run_once(
    h: &ptopo_core::Hierarchy,
    field: &ptopo_core::ScalarField,
    args: &BenchArgs,
    mode: Mode,
) -> Result<PersistenceDiagram> {
    match mode {
        Mode::Nonprogressive => run_nonprogressive(h, field, Some(args.pairs))?
            .1
            .context("no diagram computed"),
        Mode::Progressive => {
            let mut last = None;
            run_progressive(h, field, Some(args.pairs), &Budget::unlimited(), |out| {
                if out.level == h.finest() {
                    last = out.diagram.cloned();
                }
                Ok(())
            })?;
            last.context("no diagram computed")
        }
    }
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let field = generate(args.name, args.dims, args.seed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        prepare_out(parent)?;
    }
    write_raw_volume(&args.out, &field, args.dtype)?;
    let header = VolumeHeader {
        dims: args.dims,
        dtype: args.dtype,
    };
    let side = sidecar_path(&args.out);
    write_atomic(&side, header.to_json().as_bytes())?;
    eprintln!(
        "wrote {} ({}) and {}",
        args.out.display(),
        args.dtype.as_str(),
        side.display()
    );
    Ok(())
}
