//! `wur` — batch front end for the wake-up receiver toolkit.
//!
//! Exit codes: 0 success, 2 usage, 3 unreadable or malformed input,
//! 4 domain error (valid input the model rejects).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use wur_core::analog::{resonant_frequency, sweep_tune, ReceiverChain};
use wur_core::catalog::{builtin_catalog, load_catalog, Catalog};
use wur_core::codec::{self, DecoderConfig, WakeFrame, Waveform, DEFAULT_WAKE_DELAY_US};
use wur_core::config::{apply_overrides, load_candidates, load_chains, load_scenario, parse_id, ConfigError};
use wur_core::energy::{self, Activity, PowerProfile, MATCHER_SLEEP_NA};
use wur_core::netsim;
use wur_core::units;

const BUNDLED_CHAINS: &str = include_str!("../../../configs/chains.toml");
const BUNDLED_SCENARIO: &str = include_str!("../../../configs/demo_scenario.toml");
const BUNDLED_CANDIDATES: &str = include_str!("../../../configs/tune_candidates.toml");

#[derive(Parser, Debug)]
#[command(name = "wur", version, about = "Wake-up receiver modelling toolkit")]
struct Cli {
    /// Directory for output files (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra component catalog, merged over the built-in one.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Noise seed for `sim` (overrides the scenario's `noise_seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key=value` override applied to the config file the command reads.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a wake frame into an OOK timeline CSV.
    Encode(EncodeArgs),
    /// Decode a sampled comparator waveform CSV.
    Decode(DecodeArgs),
    /// Sensitivity table for a set of receiver chains.
    Sense(SenseArgs),
    /// Sweep candidate matching networks and pick the best.
    Tune(TuneArgs),
    /// Energy report for one receiver chain.
    Energy(EnergyArgs),
    /// Run a network scenario.
    Sim(SimArgs),
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long, value_parser = id_arg)]
    net: u8,
    #[arg(long, value_parser = id_arg)]
    addr: u8,
    /// Bit rate, e.g. `1000` or `1 kbps`.
    #[arg(long, default_value = "1000", value_parser = bit_rate_arg)]
    rate: f64,
    /// Preamble length, e.g. `10us`.
    #[arg(long, default_value = "10us", value_parser = micros_arg)]
    preamble: f64,
    #[arg(long = "tx-power", default_value = "14 dBm", value_parser = dbm_arg)]
    tx_power: f64,
    /// Merge adjacent segments with equal carrier state.
    #[arg(long)]
    merge: bool,
    /// Also write the ideal sampled waveform (`waveform.csv`, needs --out).
    #[arg(long)]
    waveform: bool,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    /// Waveform CSV (`time_us,level`).
    input: PathBuf,
    #[arg(long, value_parser = id_arg)]
    net: u8,
    /// Accepted address; repeat or comma-separate for several.
    #[arg(long, required = true, value_delimiter = ',', value_parser = id_arg)]
    addr: Vec<u8>,
    #[arg(long, default_value = "1000", value_parser = bit_rate_arg)]
    rate: f64,
    #[arg(long = "wake-delay", value_parser = micros_arg)]
    wake_delay: Option<f64>,
}

#[derive(Args, Debug)]
struct SenseArgs {
    /// Chain file; defaults to the bundled chains.
    chains: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    /// Candidate file; defaults to the bundled candidates.
    candidates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    /// Chain name from the chain file.
    #[arg(long)]
    chain: String,
    /// Chain file; defaults to the bundled chains.
    #[arg(long)]
    chains: Option<PathBuf>,
    /// Frames addressed to the node per hour.
    #[arg(long = "wakes-per-hour", default_value_t = 0.0)]
    wakes_per_hour: f64,
    /// Frames rejected by the matcher per hour.
    #[arg(long = "false-wakes-per-hour", default_value_t = 0.0)]
    false_wakes_per_hour: f64,
    /// Battery capacity, e.g. `1000 mAh`.
    #[arg(long, default_value = "1000 mAh", value_parser = capacity_arg)]
    capacity: f64,
    /// Span covered by the exported ledger, e.g. `1 s` or `3600 s`.
    #[arg(long, default_value = "3600 s", value_parser = seconds_arg)]
    span: f64,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Scenario file; defaults to the bundled 3-node demo.
    scenario: Option<PathBuf>,
}

fn id_arg(s: &str) -> Result<u8, String> {
    parse_id(s)
}

fn bit_rate_arg(s: &str) -> Result<f64, String> {
    units::parse_bit_rate(s).map_err(|e| e.to_string())
}

fn micros_arg(s: &str) -> Result<f64, String> {
    units::parse_micros(s).map_err(|e| e.to_string())
}

fn seconds_arg(s: &str) -> Result<f64, String> {
    units::parse_seconds(s).map_err(|e| e.to_string())
}

fn dbm_arg(s: &str) -> Result<f64, String> {
    units::parse_dbm(s).map_err(|e| e.to_string())
}

fn capacity_arg(s: &str) -> Result<f64, String> {
    units::parse_quantity(s, "Ah", -3).map_err(|e| e.to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const USAGE: u8 = 2;
const INPUT: u8 = 3;
const DOMAIN: u8 = 4;

trait Classify<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn config_failure(e: ConfigError) -> Failure {
    let code = match e {
        ConfigError::Override(..) => USAGE,
        ref e if e.is_parse() => INPUT,
        _ => DOMAIN,
    };
    Failure { code, error: e.into() }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("wur: usage: {}", one_line(&e.to_string()));
            return ExitCode::from(USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = format!("{:#}", f.error).replace('\n', " ");
            eprintln!("wur: error: {msg}");
            ExitCode::from(f.code)
        }
    }
}

/// Clap's message without the usage block, folded onto one line.
fn one_line(msg: &str) -> String {
    let body = msg.split("\n\n").next().unwrap_or(msg);
    let body = body.trim_start_matches("error: ");
    body.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct Ctx {
    out: Option<PathBuf>,
    catalog: Catalog,
    seed: Option<u64>,
    overrides: Vec<String>,
}

impl Ctx {
    /// Reads `path` (or the bundled text) and applies `--set` overrides.
    fn config_text(&self, path: Option<&Path>, bundled: &str) -> Result<String, Failure> {
        let text = match path {
            Some(p) => read(p)?,
            None => bundled.to_string(),
        };
        apply_overrides(&text, &self.overrides).map_err(config_failure)
    }

    fn no_overrides(&self, cmd: &str) -> Result<(), Failure> {
        if self.overrides.is_empty() {
            Ok(())
        } else {
            Err(anyhow!("`{cmd}` reads no config file, --set does not apply")).code(USAGE)
        }
    }

    fn out_dir(&self) -> Result<Option<&Path>, Failure> {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir)
                    .with_context(|| format!("cannot create output directory {}", dir.display()))
                    .code(DOMAIN)?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }

    fn write_file(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), Failure> {
        let Some(dir) = self.out_dir()? else { return Ok(()) };
        let mut buf = Vec::new();
        f(&mut buf).code(DOMAIN)?;
        let path = dir.join(name);
        fs::write(&path, buf)
            .with_context(|| format!("cannot write {}", path.display()))
            .code(DOMAIN)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .code(INPUT)
}

fn stdout(bytes: &[u8]) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(bytes).and_then(|_| out.flush()).code(DOMAIN)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut catalog = builtin_catalog();
    if let Some(path) = &cli.catalog {
        let text = read(path)?;
        catalog.extend(
            load_catalog(&text)
                .with_context(|| format!("catalog {}", path.display()))
                .code(INPUT)?,
        );
    }
    let ctx = Ctx {
        out: cli.out,
        catalog,
        seed: cli.seed,
        overrides: cli.overrides,
    };
    match cli.command {
        Command::Encode(a) => encode(&ctx, a),
        Command::Decode(a) => decode(&ctx, a),
        Command::Sense(a) => sense(&ctx, a),
        Command::Tune(a) => tune(&ctx, a),
        Command::Energy(a) => energy_report(&ctx, a),
        Command::Sim(a) => sim(&ctx, a),
    }
}

fn encode(ctx: &Ctx, a: EncodeArgs) -> Result<(), Failure> {
    ctx.no_overrides("encode")?;
    if a.waveform && ctx.out.is_none() {
        return Err(anyhow!("--waveform needs --out")).code(USAGE);
    }
    let frame = WakeFrame::new(a.net, a.addr).with_preamble(a.preamble);
    let timeline = codec::encode_frame_checked(&frame, a.rate, a.tx_power, DEFAULT_WAKE_DELAY_US).code(DOMAIN)?;
    let mut csv = Vec::new();
    timeline.write_csv(&mut csv, a.merge).code(DOMAIN)?;
    if ctx.out.is_some() {
        ctx.write_file("timeline.csv", |b| {
            b.extend_from_slice(&csv);
            Ok(())
        })?;
        if a.waveform {
            ctx.write_file("waveform.csv", |b| timeline.ideal_waveform().write_csv(b))?;
        }
    }
    stdout(&csv)
}

fn decode(ctx: &Ctx, a: DecodeArgs) -> Result<(), Failure> {
    ctx.no_overrides("decode")?;
    let file = fs::File::open(&a.input)
        .with_context(|| format!("cannot read {}", a.input.display()))
        .code(INPUT)?;
    let waveform = Waveform::read_csv(io::BufReader::new(file))
        .with_context(|| format!("{}", a.input.display()))
        .code(INPUT)?;
    let config = DecoderConfig::new(a.net, a.addr)
        .with_bit_rate(a.rate)
        .with_wake_delay(a.wake_delay.unwrap_or(DEFAULT_WAKE_DELAY_US));
    let outcome = codec::decode_stream(&waveform, &config).code(DOMAIN)?;
    let line = format!("{outcome}\n");
    ctx.write_file("decode.txt", |b| b.write_all(line.as_bytes()))?;
    stdout(line.as_bytes())
}

fn chains(ctx: &Ctx, path: Option<&Path>) -> Result<Vec<ReceiverChain>, Failure> {
    let text = ctx.config_text(path, BUNDLED_CHAINS)?;
    load_chains(&text, &ctx.catalog).map_err(|e| {
        let mut f = config_failure(e);
        if let Some(p) = path {
            f.error = f.error.context(p.display().to_string());
        }
        f
    })
}

fn sense(ctx: &Ctx, a: SenseArgs) -> Result<(), Failure> {
    let chains = chains(ctx, a.chains.as_deref())?;
    let rows = netsim::sensitivity_sweep(&chains, None).code(DOMAIN)?;
    let mut csv = Vec::new();
    netsim::write_sensitivity_csv(&rows, &mut csv).code(DOMAIN)?;
    ctx.write_file("sensitivity.csv", |b| b.write_all(&csv))?;
    stdout(&csv)
}

fn tune(ctx: &Ctx, a: TuneArgs) -> Result<(), Failure> {
    let text = ctx.config_text(a.candidates.as_deref(), BUNDLED_CANDIDATES)?;
    let (plan, candidates) = load_candidates(&text).map_err(config_failure)?;
    // the sweep probes the bare rectifier, as with an SDR on the bench
    let detector = wur_core::analog::DetectorCurve::direct_load();
    let result = sweep_tune(&candidates, &plan, &detector).code(DOMAIN)?;

    let mut text =
        String::from("candidate,inductance_nH,capacitance_pF,resonance_hz,peak_hz,envelope_at_center_volts\n");
    for (i, t) in result.tables.iter().enumerate() {
        let c = &t.candidate;
        let f0 = resonant_frequency(c.inductance_nh, c.capacitance_pf).code(DOMAIN)?;
        text.push_str(&format!(
            "{i},{},{},{:.0},{},{:e}\n",
            c.inductance_nh,
            c.capacitance_pf,
            f0,
            t.peak_frequency(),
            t.envelope_at_center
        ));
        ctx.write_file(&format!("tune_candidate_{i}.csv"), |b| t.write_csv(b))?;
    }
    ctx.write_file("tune_summary.csv", |b| b.write_all(text.as_bytes()))?;
    let best = result.best();
    text.push_str(&format!(
        "best: {}, {}\n",
        units::format_quantity(best.inductance_nh, -9, "H"),
        units::format_quantity(best.capacitance_pf, -12, "F")
    ));
    stdout(text.as_bytes())
}

fn energy_report(ctx: &Ctx, a: EnergyArgs) -> Result<(), Failure> {
    let chains = chains(ctx, a.chains.as_deref())?;
    let chain = chains
        .iter()
        .find(|c| c.name == a.chain)
        .ok_or_else(|| {
            let names: Vec<&str> = chains.iter().map(|c| c.name.as_str()).collect();
            anyhow!("no chain named {:?} (available: {})", a.chain, names.join(", "))
        })
        .code(INPUT)?;
    let profile = PowerProfile::for_chain(chain);
    let frame = WakeFrame::new(chain.decoder.network_id, 0);
    let frame_s = codec::encode_frame(&frame, chain.decoder.bit_rate, 0.0)
        .code(DOMAIN)?
        .duration_us()
        / 1e6;
    let activity = Activity {
        wake_rate: a.wakes_per_hour / 3600.0,
        false_wake_rate: a.false_wakes_per_hour / 3600.0,
        frame_duration_s: frame_s,
        host_active_s: profile.host_active_s,
    };
    let avg = energy::average_current(&profile, &activity).code(DOMAIN)?;
    let life_h = energy::lifetime(a.capacity, avg).code(DOMAIN)?;
    let ledger = energy::activity_ledger(&profile, &activity, a.span).code(DOMAIN)?;
    let quiescent = energy::quiescent_current(chain, true);

    let nano = |ua: f64| units::format_quantity(ua, -6, "A");
    let mut text = String::new();
    text.push_str(&format!("chain: {}\n", chain.name));
    text.push_str(&format!("quiescent: {}\n", units::format_quantity(quiescent, -9, "A")));
    text.push_str(&format!(
        "  receiver: {}, matcher sleep: {}\n",
        units::format_quantity(profile.wur_quiescent_na, -9, "A"),
        units::format_quantity(MATCHER_SLEEP_NA, -9, "A")
    ));
    text.push_str(&format!("matcher active: {}\n", nano(profile.mcu_active_ua())));
    text.push_str(&format!("average: {}\n", nano(avg)));
    text.push_str(&format!("lifetime: {life_h:.1} h ({:.2} years)\n", life_h / 8766.0));
    ctx.write_file("energy.csv", |b| ledger.write_csv(b, Some(a.span)))?;
    ctx.write_file("energy.txt", |b| b.write_all(text.as_bytes()))?;
    stdout(text.as_bytes())
}

fn sim(ctx: &Ctx, a: SimArgs) -> Result<(), Failure> {
    let text = ctx.config_text(a.scenario.as_deref(), BUNDLED_SCENARIO)?;
    let mut scenario = load_scenario(&text, &ctx.catalog).map_err(config_failure)?;
    if let Some(seed) = ctx.seed {
        scenario.noise_seed = Some(seed);
    }
    let report = netsim::run(&scenario).code(DOMAIN)?;
    let summary = report.summary_json();
    ctx.write_file("summary.json", |b| b.write_all(summary.as_bytes()))?;
    for node in &report.nodes {
        ctx.write_file(&format!("events_{}.csv", node.id), |b| node.write_events_csv(b))?;
        ctx.write_file(&format!("energy_{}.csv", node.id), |b| {
            node.ledger.write_csv(b, Some(report.duration_s))
        })?;
    }
    stdout(summary.as_bytes())
}
