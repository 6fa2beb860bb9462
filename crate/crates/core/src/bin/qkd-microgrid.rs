use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qkd_microgrid::link::EndpointId;
use qkd_microgrid::qkd::{evaluate, ChannelModel, ProtocolParams};
use qkd_microgrid::sim::{
    emit_csv, emit_sweep_csv, run_loopback, run_simulation, stepped, sweep_keyrate, write_sweep, SimConfig,
    SimError, SweepGrid, Table, Trace,
};

#[derive(Parser)]
#[command(name = "qkd-microgrid", version, about = "QKD-keyed microgrid communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the finite-key secret key length for one channel.
    Keyrate {
        /// TOML file with optional [model] and [protocol] tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        length_km: Option<f64>,
        #[arg(long)]
        e_mis: Option<f64>,
        #[arg(long)]
        eta_bob: Option<f64>,
        #[arg(long)]
        pulse_rate: Option<f64>,
    },
    /// Key generation speed over a grid of lengths, e_mis and eta_Bob.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 5.0, 10.0, 20.0, 40.0, 80.0])]
        lengths: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = stepped(5e-4, 9e-4, 1e-4))]
        e_mis: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1])]
        eta_bob: Vec<f64>,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file and write its trace tables.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Carry datagrams over UDP on 127.0.0.1.
        #[arg(long)]
        loopback: bool,
        /// First UDP port in loopback mode: MGCC gets it, controller i gets
        /// base + i, the attacker base + 255. Free ports when omitted.
        #[arg(long, requires = "loopback")]
        base_port: Option<u16>,
        /// Pace the loopback run against the wall clock.
        #[arg(long, requires = "loopback")]
        throttle: bool,
    },
    /// Two-channel key pool sharing scenario, with and without sharing.
    KpsDemo {
        #[arg(long, default_value = "out/kps-demo")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = KpsMode::Both)]
        kps: KpsMode,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KpsMode {
    Off,
    On,
    Both,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct KeyrateFile {
    model: ChannelModel,
    protocol: ProtocolParams,
}

fn keyrate(
    config: Option<&Path>,
    length_km: Option<f64>,
    e_mis: Option<f64>,
    eta_bob: Option<f64>,
    pulse_rate: Option<f64>,
) -> Result<(), SimError> {
    let file = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
            toml::from_str::<KeyrateFile>(&text).map_err(|e| SimError::Config(e.to_string()))?
        }
        None => KeyrateFile::default(),
    };
    let mut model = file.model;
    model.length_km = length_km.unwrap_or(model.length_km);
    model.e_mis = e_mis.unwrap_or(model.e_mis);
    model.eta_bob = eta_bob.unwrap_or(model.eta_bob);
    model.pulse_rate = pulse_rate.unwrap_or(model.pulse_rate);
    model.validate()?;
    file.protocol.validate()?;
    let r = evaluate(&file.protocol, &model)?;
    println!("ell = {}", r.ell);
    println!("n_pulses = {}", r.n_pulses);
    println!("speed_bps = {:.3}", r.speed(model.pulse_rate));
    println!("block_period_s = {:.3}", r.block_period(model.pulse_rate));
    println!("phi_x = {:.6}", r.bounds.phi_x);
    if r.insufficient_statistics {
        println!("note = single-photon bounds vanished; block yields no key");
    }
    Ok(())
}

fn write_trace(trace: &Trace, dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::Io(format!("{}: {e}", dir.display())))?;
    for table in Table::ALL {
        emit_csv(trace, table, &dir.join(table.file_name()))?;
    }
    Ok(())
}

fn summarize(label: &str, trace: &Trace) {
    println!("{label}");
    for c in &trace.channels {
        let exhaustions = trace.exhaustion_for(c.pool).count();
        let compromised = trace.compromised_for(c.pool).count();
        println!(
            "  pool {}: blocks {}, final {} bits, min {} bits, controls sent {}, suppressed {}, \
             exhaustion intervals {} ({:.3} s), compromised intervals {}",
            c.pool,
            c.key_blocks,
            c.final_level,
            c.min_level.map_or_else(|| "-".to_string(), |m| m.to_string()),
            c.packets.controls_sent,
            c.packets.controls_suppressed,
            exhaustions,
            trace.exhausted_secs(c.pool),
            compromised,
        );
    }
    if !trace.transfers.is_empty() {
        println!("  transfers: {}", trace.transfers.len());
    }
}

fn run(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Keyrate {
            config,
            length_km,
            e_mis,
            eta_bob,
            pulse_rate,
        } => keyrate(config.as_deref(), length_km, e_mis, eta_bob, pulse_rate),
        Command::Sweep {
            lengths,
            e_mis,
            eta_bob,
            out,
        } => {
            let grid = SweepGrid {
                lengths_km: lengths,
                e_mis,
                eta_bob,
            };
            let rows = sweep_keyrate(&grid, &ProtocolParams::default(), &ChannelModel::default())?;
            match out {
                Some(path) => emit_sweep_csv(&rows, &path),
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    write_sweep(&rows, &mut lock)?;
                    lock.flush().map_err(|e| SimError::Io(e.to_string()))
                }
            }
        }
        Command::Simulate {
            config,
            out,
            seed,
            loopback,
            base_port,
            throttle,
        } => {
            let mut cfg = SimConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let trace = if loopback {
                let mut ports = BTreeMap::new();
                if let Some(base) = base_port {
                    ports.insert(EndpointId::MGCC, base);
                    ports.insert(EndpointId(255), base.saturating_add(255));
                    for i in 1..=cfg.channels.len() {
                        ports.insert(EndpointId(i as u8), base.saturating_add(i as u16));
                    }
                }
                run_loopback(&cfg, ports, throttle)?
            } else {
                run_simulation(&cfg)?
            };
            write_trace(&trace, &out)?;
            summarize(&format!("wrote {}", out.display()), &trace);
            Ok(())
        }
        Command::KpsDemo { out, kps } => {
            let modes: &[(bool, &str)] = match kps {
                KpsMode::Off => &[(false, "kps-off")],
                KpsMode::On => &[(true, "kps-on")],
                KpsMode::Both => &[(false, "kps-off"), (true, "kps-on")],
            };
            for &(enabled, name) in modes {
                let trace = run_simulation(&SimConfig::kps_demo(enabled))?;
                let dir = out.join(name);
                write_trace(&trace, &dir)?;
                summarize(&format!("{name}: wrote {}", dir.display()), &trace);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
