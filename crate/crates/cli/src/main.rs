use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odin_core::energy::{global_energy_per_sop, EnergyParams, PowerBreakdown};
use odin_core::engine::Engine;
use odin_core::mem::{CoreMemory, GlobalConfig, NeuronMemory, SynapseMemory};
use odin_core::trace::{read_input_trace, write_output_trace};
use odin_workloads::{behaviors, ltp};
use odin_workloads::classifier::{self, Coding, MnistConfig, Weights, CLASSES};
use odin_workloads::mnist::{self, Split};

mod error;
mod si;

use error::CliError;

#[derive(Parser)]
#[command(name = "odin", version, about = "Event-driven emulator of a 256-neuron, 64k-synapse spiking core")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an input event trace against memory images.
    Run(RunArgs),
    /// Evaluate the power model at a clock frequency and SOP rate.
    Energy(EnergyArgs),
    /// Run neuron behavior presets and check their predicates.
    Behaviors(BehaviorArgs),
    /// Monte Carlo estimate of the probability of potentiation on one synapse.
    Ltp(LtpArgs),
    /// Train the 10-neuron classifier on-chip with SDSP and a teacher signal.
    TrainMnist(TrainArgs),
    /// Measure accuracy and energy per inference on the MNIST test set.
    InferMnist(InferArgs),
    /// Write preprocessed 16x16 samples as 257-byte records (label, then pixels).
    PreprocessMnist(PreprocessArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON-lines input trace.
    #[arg(long)]
    trace: PathBuf,
    /// Synapse memory image (8192 little-endian words). Defaults to all zero.
    #[arg(long)]
    synapses: Option<PathBuf>,
    /// Neuron memory image (256 16-byte records). Defaults to all zero.
    #[arg(long)]
    neurons: Option<PathBuf>,
    /// Global registers as TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output trace path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write `key=value` counters here; stderr when omitted.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the final synapse image here.
    #[arg(long)]
    synapses_out: Option<PathBuf>,
    #[arg(long, value_parser = si::parse_u64)]
    max_cycles: Option<u64>,
}

#[derive(Args)]
struct EnergyArgs {
    /// Clock frequency in Hz (SI suffixes accepted).
    #[arg(long, value_parser = si::parse_f64)]
    fclk: f64,
    /// Synaptic operation rate in SOP/s.
    #[arg(long, value_parser = si::parse_f64)]
    rsop: f64,
    /// TOML file with p_leak, p_idle and e_sop.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct BehaviorArgs {
    /// Behavior id (1-20) or name; all behaviors when omitted.
    #[arg(long)]
    id: Option<String>,
    /// Directory for one `NN_name.csv` trace per behavior.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct LtpArgs {
    #[arg(long, value_parser = si::parse_u64)]
    seed: u64,
    #[arg(long, default_value = "1000", value_parser = si::parse_usize)]
    trials: usize,
    /// Experiment configuration (TOML); the shipped one when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = si::parse_usize)]
    jobs: Option<usize>,
    /// Write the weight trajectories of the first trials as CSV.
    #[arg(long)]
    weight_trace: Option<PathBuf>,
    /// Number of trials in --weight-trace.
    #[arg(long, default_value = "2", value_parser = si::parse_usize)]
    traced: usize,
}

#[derive(Args)]
struct DataArgs {
    /// Directory holding the MNIST IDX files; `$ODIN_MNIST_DIR` or `data/mnist` by default.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    /// MNIST configuration (TOML); the shipped one when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = si::parse_u64)]
    seed: u64,
    /// Number of training samples; the configured count when omitted.
    #[arg(long, value_parser = si::parse_usize)]
    samples: Option<usize>,
    /// Learned weights, 10 rows of 256 values in 0..=7.
    #[arg(long)]
    out: PathBuf,
    /// Directory for one PGM image per class.
    #[arg(long)]
    pgm_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodingArg {
    Rate,
    Rank,
    Both,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = si::parse_u64)]
    seed: u64,
    /// Weights file: trained weights in 0..=7, or offline weights in -4..=3 with --external.
    #[arg(long)]
    weights: PathBuf,
    /// Treat --weights as offline weights in [-4, 3].
    #[arg(long)]
    external: bool,
    #[arg(long, value_enum, default_value = "both")]
    coding: CodingArg,
    /// Evaluate only the first N test samples.
    #[arg(long, value_parser = si::parse_usize)]
    limit: Option<usize>,
    #[arg(long, value_parser = si::parse_usize)]
    jobs: Option<usize>,
    /// Energy parameters (TOML).
    #[arg(long)]
    energy_params: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    split: SplitArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = si::parse_usize)]
    limit: Option<usize>,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn read_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // only fails if a pool already exists, which then stays in use
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let mut mem = CoreMemory::default();
    if let Some(p) = &a.synapses {
        mem.synapses = SynapseMemory::from_bytes(&read(p)?)?;
    }
    if let Some(p) = &a.neurons {
        mem.neurons = NeuronMemory::from_bytes(&read(p)?)?;
    }
    if let Some(p) = &a.config {
        mem.config = toml::from_str::<GlobalConfig>(&read_string(p)?)
            .map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
    }
    let file = fs::File::open(&a.trace).map_err(|e| CliError::io(&a.trace, e))?;
    let trace = read_input_trace(BufReader::new(file))?;
    let mut engine = Engine::new(mem);
    let r = engine.run(&trace, a.max_cycles)?;

    let out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = BufWriter::new(out);
    write_output_trace(&mut out, &r.events).map_err(|e| CliError::io("output trace", e))?;
    out.flush().map_err(|e| CliError::io("output trace", e))?;

    let mut kv = r.stats.to_kv();
    kv.push_str(&format!("truncated={}\n", r.truncated));
    match &a.stats {
        Some(p) => write(p, kv.as_bytes())?,
        None => eprint!("{kv}"),
    }
    if let Some(p) = &a.synapses_out {
        write(p, &engine.memory().synapses.to_bytes())?;
    }
    Ok(())
}

fn cmd_energy(a: EnergyArgs) -> Result<(), CliError> {
    let params = match &a.params {
        Some(p) => EnergyParams::load(p)?,
        None => EnergyParams::default(),
    };
    let b = PowerBreakdown::new(&params, a.fclk, a.rsop)?;
    let total = b.total();
    let e_sop = global_energy_per_sop(total, a.rsop)?;
    let line = serde_json::json!({
        "f_clk_hz": a.fclk,
        "r_sop_per_s": a.rsop,
        "total_power_w": total,
        "leak_power_w": b.leak,
        "idle_power_w": b.idle,
        "sop_power_w": b.dynamic,
        "leak_share": b.leak_share(),
        "idle_share": b.idle_share(),
        "energy_per_sop_j": e_sop,
    });
    println!("{line}");
    eprintln!(
        "total power {:.1} uW, global energy per SOP {:.2} pJ",
        total * 1e6,
        e_sop * 1e12
    );
    Ok(())
}

fn cmd_behaviors(a: BehaviorArgs) -> Result<(), CliError> {
    let list = match &a.id {
        Some(key) => vec![behaviors::preset(key)?],
        None => behaviors::presets(),
    };
    if let Some(d) = &a.out_dir {
        fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }
    println!("id,name,packets,spikes,predicate");
    let mut failed = Vec::new();
    for p in &list {
        let t = behaviors::run_preset(p)?;
        if let Some(d) = &a.out_dir {
            write(&d.join(format!("{:02}_{}.csv", p.id, p.name)), t.to_csv().as_bytes())?;
        }
        let verdict = behaviors::check(p, &t);
        let spikes: u32 = t.packets.iter().map(|k| k.spikes).sum();
        println!(
            "{},{},{},{},{}",
            p.id,
            p.name,
            t.packets.len(),
            spikes,
            if verdict.is_ok() { "pass" } else { "fail" }
        );
        if let Err(e) = verdict {
            failed.push(format!("{}: {e}", p.name));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join("; ")))
    }
}

fn cmd_ltp(a: LtpArgs) -> Result<(), CliError> {
    set_jobs(a.jobs);
    let cfg = match &a.config {
        Some(p) => ltp::LtpConfig::load(p)?,
        None => ltp::LtpConfig::default(),
    };
    if let Some(p) = &a.weight_trace {
        let mut csv = String::from("trial,t_cycle,weight\n");
        for i in 0..a.traced as u64 {
            let t = ltp::run_trial(&cfg, a.seed, i)?;
            csv.push_str(&format!("{i},0,{}\n", cfg.init_weight));
            for (c, w) in &t.weights {
                csv.push_str(&format!("{i},{c},{w}\n"));
            }
        }
        write(p, csv.as_bytes())?;
    }
    let s = ltp::monte_carlo(&cfg, a.seed, a.trials)?;
    let line = serde_json::json!({
        "seed": a.seed,
        "trials": s.trials,
        "potentiated": s.potentiated,
        "probability": s.probability(),
        "std_error": s.std_error(),
    });
    println!("{line}");
    Ok(())
}

fn mnist_setup(d: &DataArgs) -> Result<(MnistConfig, PathBuf), CliError> {
    let cfg = match &d.config {
        Some(p) => MnistConfig::load(p)?,
        None => MnistConfig::default(),
    };
    let dir = d.mnist_dir.clone().unwrap_or_else(mnist::default_dir);
    Ok((cfg, dir))
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let (cfg, dir) = mnist_setup(&a.data)?;
    let data = mnist::load(&dir, Split::Train)?;
    let n = a.samples.unwrap_or(cfg.train.samples);
    let train = classifier::prepare(&data, &cfg.preprocess, Some(n));
    let (weights, stats) = classifier::train_sdsp(&train, &cfg, a.seed)?;
    write(&a.out, weights.to_text().as_bytes())?;
    if let Some(d) = &a.pgm_dir {
        fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        for c in 0..CLASSES {
            write(&d.join(format!("class{c}.pgm")), &weights.to_pgm(c))?;
        }
    }
    let line = serde_json::json!({
        "samples": train.len(),
        "seed": a.seed,
        "sop_count": stats.sop_count,
        "cycle_count": stats.cycle_count,
        "output_spike_count": stats.output_spike_count,
    });
    println!("{line}");
    Ok(())
}

fn cmd_infer(a: InferArgs) -> Result<(), CliError> {
    set_jobs(a.jobs);
    let (cfg, dir) = mnist_setup(&a.data)?;
    let text = read_string(&a.weights)?;
    let weights = if a.external {
        classifier::load_external_weights(&text)?
    } else {
        Weights::from_text(&text)?
    };
    let energy = match &a.energy_params {
        Some(p) => EnergyParams::load(p)?,
        None => EnergyParams::default(),
    };
    let data = mnist::load(&dir, Split::Test)?;
    let test = classifier::prepare(&data, &cfg.preprocess, a.limit);
    let codings: &[Coding] = match a.coding {
        CodingArg::Rate => &[Coding::Rate],
        CodingArg::Rank => &[Coding::Rank],
        CodingArg::Both => &[Coding::Rate, Coding::Rank],
    };
    for &coding in codings {
        let r = classifier::evaluate(&weights, &test, coding, &cfg, &energy, a.seed)?;
        let line = serde_json::json!({
            "coding": coding,
            "samples": r.samples,
            "accuracy": r.accuracy(),
            "no_decision": r.no_decision,
            "mean_sop_count": r.mean_sops,
            "mean_cycle_count": r.mean_cycles,
            "mean_energy_j": r.mean_energy,
        });
        println!("{line}");
    }
    Ok(())
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let (cfg, dir) = mnist_setup(&a.data)?;
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    };
    let data = mnist::load(&dir, split)?;
    let samples = classifier::prepare(&data, &cfg.preprocess, a.limit);
    let mut bytes = Vec::with_capacity(samples.len() * 257);
    for s in &samples {
        bytes.push(s.label);
        bytes.extend_from_slice(&s.pixels);
    }
    write(&a.out, &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Energy(a) => cmd_energy(a),
        Command::Behaviors(a) => cmd_behaviors(a),
        Command::Ltp(a) => cmd_ltp(a),
        Command::TrainMnist(a) => cmd_train(a),
        Command::InferMnist(a) => cmd_infer(a),
        Command::PreprocessMnist(a) => cmd_preprocess(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
