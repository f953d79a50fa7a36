//! `ofdmid` command-line tool.
//!
//! Exit status: 0 on success, 1 for invalid arguments or configuration, 2 for
//! runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ofdmid::channel::{ChannelProfile, ImpairmentConfig};
use ofdmid::detector::{identify, identify_part, DetectorConfig, BLIND_LAG_SPAN, GaussianityDecision, SignalPart};
use ofdmid::harness::{
    append_csv, emit_csv, plot_sweep, received_signal, run_experiment, ExperimentConfig, Modulation,
    WaveformShape,
};
use ofdmid::hos::default_lag_span;
use ofdmid::waveforms::{read_waveform, write_waveform, SampledSignal, WaveformMeta};
use ofdmid::{Error, Result};

#[derive(Parser)]
#[command(name = "ofdmid", version, about = "Tell OFDM from single-carrier signals with a fourth-order cumulant test")]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a waveform, pass it through the channel and write an I/Q file.
    Synth {
        #[command(flatten)]
        source: SourceArgs,
        /// Output file; a `.toml` sidecar is written next to it.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Classify a waveform file, or a waveform generated on the fly.
    Identify {
        /// I/Q file written by `synth`. Without it a waveform is generated.
        #[arg(short, long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        /// Significance level (target false-alarm rate).
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Largest cumulant lag in samples. Defaults to 1.5 symbols when the
        /// oversampling is known and 12 otherwise.
        #[arg(long)]
        max_lag: Option<usize>,
        /// Covariance truncation limit; chosen from the data when absent.
        #[arg(long)]
        kn: Option<usize>,
        /// Also report the statistic of the imaginary part.
        #[arg(long)]
        both_parts: bool,
    },
    /// Run a Monte-Carlo sweep described by a TOML file and write CSV.
    Sweep {
        /// Experiment configuration.
        #[arg(short, long)]
        config: PathBuf,
        /// CSV output path.
        #[arg(short, long)]
        out: PathBuf,
        /// Append rows instead of replacing the file.
        #[arg(long)]
        append: bool,
        /// Optional SVG chart of the rejection rate.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// ofdm, sc-psk, sc-fsk or sc-qam.
    #[arg(long, default_value = "sc-qam")]
    modulation: String,
    #[arg(long, default_value_t = 32)]
    order: u32,
    #[arg(long, default_value_t = 1024)]
    n_symbols: usize,
    /// Signal-to-noise ratio; `inf` for a noiseless signal.
    #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
    snr_db: f64,
    /// Use the default four-tap Rayleigh channel instead of a direct path.
    #[arg(long)]
    fading: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    fn experiment(&self, detector: DetectorConfig) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            modulation: self.modulation.parse()?,
            order: self.order,
            n_symbols: self.n_symbols,
            snr_grid_db: vec![self.snr_db],
            channel: if self.fading {
                ChannelProfile::default_fading()
            } else {
                ChannelProfile::identity()
            },
            impairments: ImpairmentConfig::default(),
            detector,
            trials: 1,
            master_seed: self.seed,
            waveform: WaveformShape::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn generate(&self, detector: DetectorConfig) -> Result<(SampledSignal, ExperimentConfig)> {
        let cfg = self.experiment(detector)?;
        let sig = received_signal(&cfg, self.snr_db, 0)?.with_label(format!(
            "{} {} snr={} dB seed={}",
            cfg.modulation, cfg.order, self.snr_db, self.seed
        ));
        Ok((sig, cfg))
    }
}

fn print_decision(part: &str, d: &GaussianityDecision) {
    println!(
        "{part}: verdict={} statistic={:.6} threshold={:.6} dof={} kn={} condition={:.3e}",
        d.verdict, d.statistic, d.threshold, d.dof, d.kn, d.covariance_condition
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { source, out } => {
            let (sig, cfg) = source.generate(DetectorConfig::default())?;
            let meta = WaveformMeta {
                sample_rate: sig.sample_rate(),
                scheme: cfg.modulation.to_string(),
                order: cfg.order,
                n_symbols: cfg.n_symbols,
                seed: cfg.master_seed,
                n_samples: None,
                label: None,
            };
            write_waveform(&out, &sig, &meta)?;
            println!("wrote {} samples to {}", sig.len(), out.display());
        }
        Command::Identify {
            input,
            source,
            alpha,
            max_lag,
            kn,
            both_parts,
        } => {
            let (sig, known_sps) = match &input {
                Some(path) => {
                    let (sig, meta) = read_waveform(path)?;
                    let sps = match meta.scheme.parse::<Modulation>() {
                        Ok(Modulation::Ofdm) | Err(_) => None,
                        Ok(_) => Some(WaveformShape::default().samples_per_symbol),
                    };
                    (sig, sps)
                }
                None => {
                    let (sig, cfg) = source.generate(DetectorConfig::default())?;
                    let sps = (cfg.modulation != Modulation::Ofdm).then_some(cfg.waveform.samples_per_symbol);
                    (sig, sps)
                }
            };
            let detector = DetectorConfig {
                significance: alpha,
                max_lag: max_lag
                    .or(known_sps.map(|sps| default_lag_span(sps as f64)))
                    .unwrap_or(BLIND_LAG_SPAN),
                kn,
                ..DetectorConfig::default()
            };
            detector.validate()?;
            println!("signal: {} ({} samples)", sig.label(), sig.len());
            let real = identify(&sig, &detector)?;
            print_decision("real", &real);
            if both_parts {
                let imag = identify_part(&sig, &detector, SignalPart::Imaginary)?;
                print_decision("imag", &imag);
            }
            println!("{}", GaussianityDecision::RECORD_HEADER);
            println!("{}", real.record_line());
        }
        Command::Sweep {
            config,
            out,
            append,
            plot,
        } => {
            // An unreadable config file is a usage problem, not a runtime one.
            let cfg = ExperimentConfig::from_toml_file(&config).map_err(|e| match e {
                Error::Io { path, source } => Error::Format {
                    path,
                    message: source.to_string(),
                },
                other => other,
            })?;
            let result = run_experiment(&cfg)?;
            if append {
                append_csv(&result, &out)?;
            } else {
                emit_csv(&result, &out)?;
            }
            if let Some(plot) = plot {
                plot_sweep(&result, &plot)?;
            }
            for row in &result.rows {
                println!(
                    "snr={} dB p_reject={:.4} [{:.4}, {:.4}]",
                    row.snr_db, row.p_reject, row.ci_lo, row.ci_hi
                );
            }
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config() || matches!(err, Error::Range { .. } | Error::Dimension { .. }) {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
