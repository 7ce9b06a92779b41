//! `pon-qkd`: validate scenarios, run simulations and compute key rates.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pon_qkd::io::write_bundle;
use pon_qkd::par::Execution;
use pon_qkd::postproc::{
    binary_entropy, collision_probability, distill, secure_fraction, secure_rate, serve_parities, KeyReport,
    ParityResponder, SecurityParams,
};
use pon_qkd::scenario::{Scenario, ScenarioConfig};
use pon_qkd::simcore::{expected_raw_rate, run_scenario_with, RunOptions, SimReport};
use pon_qkd::Error;

#[derive(Parser)]
#[command(name = "pon-qkd", version, about = "Multi-user DPS QKD over a passive optical network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario and print its derived timing, losses and rates.
    Validate {
        /// Scenario file, or the name of a shipped preset.
        config: String,
    },
    /// Simulate a scenario, distill keys and write the output bundle.
    Run(RunArgs),
    /// Secure fraction and final rate for given parameters.
    Keyrate(KeyrateArgs),
    /// Run a scenario for several seeds, one bundle per seed.
    Sweep(SweepArgs),
    /// Answer CASCADE parity queries on stdin/stdout for a key file.
    #[command(hide = true)]
    ParityServer {
        /// File of `0`/`1` characters.
        key: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// List the shipped presets.
    Presets,
}

#[derive(Args)]
struct RunOverrides {
    /// Scenario file, or the name of a shipped preset.
    config: String,
    /// Master seed (default: the scenario's `run.seed`)
    #[arg(long)]
    seed: Option<u64>,
    /// Packets to simulate (default: the scenario's `run.packets`)
    #[arg(long)]
    packets: Option<u64>,
    /// Run even if the silence check fails.
    #[arg(long)]
    force: bool,
    /// Replace an existing bundle.
    #[arg(long)]
    overwrite: bool,
    /// Output directory (default: the scenario's `run.output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the simulation on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: RunOverrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: RunOverrides,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long, default_value_t = 4)]
    seeds: u64,
    /// Seeds run at the same time.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct KeyrateArgs {
    /// Mean photon number per pulse.
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Up-stream transmissivity.
    #[arg(long = "transmissivity", short = 't', default_value_t = 0.2)]
    transmissivity: f64,
    /// Quantum bit error rate.
    #[arg(long, short = 'e', default_value_t = 0.027)]
    qber: f64,
    /// Error-correction efficiency.
    #[arg(long, short = 'f', default_value_t = 1.05)]
    ec_efficiency: f64,
    /// Raw key rate, counts/s.
    #[arg(long, default_value_t = 10_000.0)]
    raw_rate: f64,
    /// Emit CSV over a log grid of transmissivities: `MIN:MAX:POINTS`.
    #[arg(long, value_name = "MIN:MAX:POINTS")]
    sweep_t: Option<String>,
}

/// Exit 1 for problems with the inputs, 2 for failures while running.
enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Desync { .. } | Error::Estimation(_) => Failure::Runtime(e.into()),
            _ => Failure::Invalid(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Run(args) => cmd_run(&args.common),
        Command::Keyrate(args) => cmd_keyrate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::ParityServer { key, seed } => cmd_parity_server(&key, seed),
        Command::Presets => {
            for (name, text) in pon_qkd::scenario::PRESETS {
                let description = ScenarioConfig::from_toml(text).ok().and_then(|c| c.description).unwrap_or_default();
                println!("{name:<20} {description}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn ns(t: f64) -> String {
    format!("{:.3} ns", t * 1e9)
}

fn cmd_validate(target: &str) -> CmdResult {
    let config = ScenarioConfig::locate(target)?;
    println!("scenario: {target}");
    if let Some(d) = &config.description {
        println!("  {d}");
    }
    println!("config digest: {}", config.digest());
    let s = match Scenario::from_config(config) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL: {e}");
            return Err(e.into());
        }
    };
    let sched = &s.schedule;
    println!();
    println!("photons per pulse at the source: {:.4e}", s.source.photons_per_pulse());
    println!("slot period {}, packet {} slots ({})", ns(sched.slot_period), s.slot_count(), ns(sched.packet_length));
    println!("guard {}", ns(sched.guard));
    println!("minimal packet period T_r(min) = {}", ns(sched.min_period));
    println!("packet period T_r = {}", ns(sched.period));
    for note in &sched.notes {
        println!("  note: {note}");
    }
    let rates = expected_raw_rate(&s);
    for ch in &s.users {
        let leaf = ch.bob.leaf;
        let w = &sched.users[sched.user_index(leaf).expect("scheduled")];
        println!();
        println!("leaf {leaf}:");
        println!("  T_f = {}  T_b = {}", ns(ch.fiber_time), ns(ch.bob.storage_time));
        println!("  return window {} .. {}", ns(w.signal.start), ns(w.signal.end));
        println!(
            "  path loss down {:.3} dB, up {:.3} dB; attenuator {:.3} dB",
            ch.downstream_loss_db, ch.upstream_loss_db, ch.attenuator_db
        );
        println!("  mu = {}  T = {:.6e}", ch.bob.mu_target, ch.transmissivity);
        if let Some(u) = rates.users.iter().find(|u| u.leaf == leaf) {
            let f = &u.factors;
            println!(
                "  rate factors: f_p {:.4e} /s x duty {:.6} x mu {} x T {:.6} x eta {} x (n-1)/n {:.6} = {:.1} counts/s",
                f.pulse_rate,
                f.duty_cycle,
                f.mu,
                f.transmissivity,
                f.efficiency,
                f.key_slot_fraction,
                f.linear_signal_rate
            );
            println!(
                "  model click rate (no dead time): key slots {:.1} counts/s, of which dark {:.1}",
                u.key_rate, u.dark_rate
            );
        }
        if let Some(raw) = s.config.postproc.raw_rate {
            println!("  raw rate pinned to {:.1} counts/s for the key report", raw.0);
        }
    }
    println!();
    let silence = &s.silence;
    for (leaf, flux) in &silence.max_flux {
        println!("leaf {leaf}: max stray flux in window {flux:.3e} photons/slot (threshold {:.1e})", silence.threshold);
    }
    if silence.pass {
        println!("PASS");
        Ok(())
    } else {
        for v in &silence.violations {
            println!(
                "silence violation: leaf {} bin {} at {}: {:.3e} photons/slot from {}",
                v.user,
                v.bin,
                ns(v.time),
                v.flux,
                v.dominant.name()
            );
        }
        println!("FAIL");
        Err(Failure::Invalid(anyhow!("{} silence violation(s)", silence.violations.len())))
    }
}

fn load_with_overrides(o: &RunOverrides) -> Result<ScenarioConfig, Failure> {
    let mut config = ScenarioConfig::locate(&o.config)?;
    if let Some(seed) = o.seed {
        config.run.seed = seed;
    }
    if let Some(packets) = o.packets {
        config.run.packets = packets;
    }
    Ok(config)
}

fn out_dir(o: &RunOverrides, config: &ScenarioConfig) -> PathBuf {
    o.out.clone().or_else(|| config.run.output.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

struct Outcome {
    report: SimReport,
    keys: Vec<KeyReport>,
    files: Vec<PathBuf>,
}

fn simulate(config: ScenarioConfig, dir: &Path, o: &RunOverrides, execution: Execution) -> Result<Outcome, Failure> {
    let scenario = Scenario::from_config(config)?;
    let options = RunOptions { execution, force: o.force, packets: None };
    let run = run_scenario_with(&scenario, scenario.config.run.seed, &options)?;
    let keys = distill(&scenario, &run, execution)?;
    let files = write_bundle(dir, &scenario, &run.report, &keys, o.overwrite)?;
    Ok(Outcome { report: run.report, keys, files })
}

fn print_summary(out: &Outcome) {
    let m = &out.report.meta;
    println!(
        "{} packets, {} records, raw count rate {:.1} counts/s over {:.6} s",
        m.packets,
        out.report.records.len(),
        out.report.raw_count_rate,
        m.duration_s
    );
    for k in &out.keys {
        println!(
            "leaf {}: sifted {} bits, QBER {:.4}, leaked {}, secure fraction {:.4}, final rate {:.1} bits/s{}",
            k.leaf,
            k.sifted_length,
            k.qber,
            k.leaked_bits,
            k.secure_fraction,
            k.final_rate,
            if k.raw_rate_pinned { " (pinned raw rate)" } else { "" }
        );
        for n in &k.notes {
            println!("  note: {n}");
        }
    }
}

fn cmd_run(o: &RunOverrides) -> CmdResult {
    let config = load_with_overrides(o)?;
    let dir = out_dir(o, &config);
    let execution = if o.sequential { Execution::Sequential } else { Execution::Parallel };
    let out = simulate(config, &dir, o, execution)?;
    print_summary(&out);
    println!("wrote {} files to {}", out.files.len(), dir.display());
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let o = &args.common;
    let base = load_with_overrides(o)?;
    let root = out_dir(o, &base);
    let first = base.run.seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Failure::Runtime(e.into()))?;
    // each seed is its own unit of work; inner loops stay sequential
    let outcomes: Vec<(u64, Result<Outcome, Failure>)> = pool.install(|| {
        (first..first + args.seeds)
            .into_par_iter()
            .map(|seed| {
                let mut config = base.clone();
                config.run.seed = seed;
                let dir = root.join(format!("seed-{seed}"));
                (seed, simulate(config, &dir, o, Execution::Sequential))
            })
            .collect()
    });
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    writeln!(w, "seed,leaf,raw_count_rate,sifted_bits,qber,leaked_bits,secure_fraction,final_rate")?;
    let mut failure = None;
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(out) => {
                for k in &out.keys {
                    writeln!(
                        w,
                        "{seed},{},{},{},{},{},{},{}",
                        k.leaf,
                        k.raw_count_rate,
                        k.sifted_length,
                        k.qber,
                        k.leaked_bits,
                        k.secure_fraction,
                        k.final_rate
                    )?;
                }
            }
            Err(e) => {
                let msg = match &e {
                    Failure::Invalid(e) | Failure::Runtime(e) => format!("{e:#}"),
                };
                eprintln!("seed {seed}: {msg}");
                failure.get_or_insert(e);
            }
        }
    }
    failure.map_or(Ok(()), Err)
}

fn parse_sweep(range: &str) -> anyhow::Result<(f64, f64, usize)> {
    let parts: Vec<&str> = range.split(':').collect();
    let [min, max, points] = parts[..] else {
        return Err(anyhow!("expected MIN:MAX:POINTS, got `{range}`"));
    };
    let (min, max, points): (f64, f64, usize) =
        (min.parse().context("MIN")?, max.parse().context("MAX")?, points.parse().context("POINTS")?);
    if !(min > 0.0 && max >= min && points >= 1) {
        return Err(anyhow!("need 0 < MIN <= MAX and POINTS >= 1"));
    }
    Ok((min, max, points))
}

fn cmd_keyrate(a: &KeyrateArgs) -> CmdResult {
    let params = SecurityParams {
        mu: a.mu,
        transmissivity: a.transmissivity,
        qber: a.qber,
        ec_efficiency: a.ec_efficiency,
    };
    if let Some(range) = &a.sweep_t {
        let (min, max, points) = parse_sweep(range).map_err(Failure::Invalid)?;
        let stdout = std::io::stdout();
        let mut w = stdout.lock();
        writeln!(w, "transmissivity,secure_fraction,final_rate")?;
        for i in 0..points {
            let t = if i == 0 {
                min
            } else if i + 1 == points {
                max
            } else {
                (min.ln() + (max.ln() - min.ln()) * i as f64 / (points - 1) as f64).exp()
            };
            let r = secure_fraction(&SecurityParams { transmissivity: t, ..params })?;
            writeln!(w, "{t:e},{},{}", r.value, secure_rate(a.raw_rate, r.value)?)?;
        }
        return Ok(());
    }
    let r = secure_fraction(&params)?;
    let pc = collision_probability(a.qber)?;
    println!("mu              {}", a.mu);
    println!("T               {}", a.transmissivity);
    println!("e               {}", a.qber);
    println!("f               {}", a.ec_efficiency);
    println!("h(e)            {:.5}", binary_entropy(a.qber)?);
    println!("p_c             {:.5}{}", pc.value, if pc.saturated { " (saturated)" } else { "" });
    println!("secure fraction {:.4}", r.value);
    println!("raw rate        {} counts/s", a.raw_rate);
    println!("final rate      {:.1} bits/s", secure_rate(a.raw_rate, r.value)?);
    Ok(())
}

fn cmd_parity_server(path: &Path, seed: u64) -> CmdResult {
    let text = std::fs::read_to_string(path).with_context(|| path.display().to_string()).map_err(Failure::Runtime)?;
    let key = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Failure::Invalid(anyhow!("key file may only contain 0 and 1, found `{other}`"))),
        })
        .collect::<Result<Vec<bool>, Failure>>()?;
    let mut responder = ParityResponder::new(key, seed);
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let served = serve_parities(&mut responder, stdin.lock(), stdout.lock())?;
    eprintln!("disclosed {served} parities");
    Ok(())
}
