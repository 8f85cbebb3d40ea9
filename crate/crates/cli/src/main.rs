use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jmfar::classifier::{cross_validate, select_features, train, Dataset, MlpModel};
use jmfar::cost::{bufar_report, cost, ram_estimate, CostAssumptions, CostReport, CostUnit};
use jmfar::eval::{evaluate, read_label_csv, write_label_csv, Activity, BlockMetrics, EvalReport};
use jmfar::features::{read_feature_csv, write_feature_csv, FeatureMask, FeatureRow, Variant};
use jmfar::frontend::detect_events;
use jmfar::synth::{balanced_spec, generate_corpus, generate_recording, ActivityModel, SynthRecording};
use jmfar::{Error, Result};
use jmfar_cli::pipeline::{majority_label, recording_envelope, segment_features};
use jmfar_cli::{exit_code, ingest_wav, run_pipeline, write_wav, Config};

#[derive(Parser)]
#[command(name = "jmfar", version, about = "Foraging activity recognition from jaw-movement sounds")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file (default: $JMFAR_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Detect jaw-movement events in a WAV recording.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute per-segment features of a WAV recording.
    Features {
        #[arg(long)]
        input: PathBuf,
        /// Activity labels used to tag each segment with its majority label.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        segment_len: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train a classifier on labelled feature tables.
    Train {
        #[arg(long = "features", required = true, num_args = 1..)]
        features: Vec<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        model: PathBuf,
    },
    /// Genetic-algorithm feature selection on labelled feature tables.
    Select {
        #[arg(long = "features", required = true, num_args = 1..)]
        features: Vec<PathBuf>,
        /// Candidate features.
        #[arg(long)]
        variant: Option<String>,
        /// Selection report (JSON).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify a WAV recording into activity blocks.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        segment_len: Option<f64>,
        /// Activity blocks (CSV).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Per-segment features with their predicted labels (CSV).
        #[arg(long)]
        segments: Option<PathBuf>,
    },
    /// Score predicted activity blocks against ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Recording length in seconds (default: end of the last truth block).
        #[arg(long)]
        length: Option<f64>,
        /// Leave the Other class out of the weighted F1.
        #[arg(long)]
        exclude_other: bool,
        #[arg(long)]
        json: bool,
    },
    /// Operations-per-second and RAM budget of a feature set.
    Cost {
        #[arg(long, default_value = "jmfar")]
        variant: String,
        /// Report the predecessor recognizer's published budget instead.
        #[arg(long, conflicts_with = "variant")]
        bufar: bool,
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic labelled corpus.
    Synth {
        #[arg(long)]
        output_dir: PathBuf,
        /// One recording from `activity:seconds` parts, e.g. `rumination:900,grazing:900`.
        #[arg(long)]
        parts: Option<String>,
        /// Balanced corpus: this many segment-long recordings per class.
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long)]
        segment_len: Option<f64>,
        /// Skip the WAV files.
        #[arg(long)]
        no_audio: bool,
        /// Also write `features.csv` computed from noisy synthetic envelopes.
        #[arg(long)]
        features: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::resolve(cli.common.config.as_deref())?;
    if let Some(seed) = cli.common.seed {
        cfg.pipeline.seed = seed;
        cfg.train.seed = seed;
        cfg.select.seed = seed;
    }
    if let Some(jobs) = cli.common.jobs {
        cfg.jobs = jobs;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn dispatch(command: Command, mut cfg: Config) -> Result<()> {
    match command {
        Command::Detect { input, output } => {
            let audio = ingest_wav(&input)?;
            let events = if audio.is_empty() {
                Vec::new()
            } else {
                detect_events(&recording_envelope(&audio, &cfg.pipeline.detector)?, &cfg.pipeline.detector)
            };
            let mut w = csv_writer(output.as_deref())?;
            w.write_record(["timestamp_s", "amplitude", "duration_s"])?;
            for e in events {
                w.write_record([e.timestamp_s.to_string(), e.amplitude.to_string(), e.duration_s.to_string()])?;
            }
            w.flush()?;
        }
        Command::Features {
            input,
            labels,
            variant,
            segment_len,
            output,
        } => {
            override_pipeline(&mut cfg, variant, segment_len);
            cfg.pipeline.validate()?;
            let audio = ingest_wav(&input)?;
            let truth = labels.map(|p| read_label_csv(File::open(p)?)).transpose()?;
            let mut rows = if audio.is_empty() {
                Vec::new()
            } else {
                let env = recording_envelope(&audio, &cfg.pipeline.detector)?;
                let events = detect_events(&env, &cfg.pipeline.detector);
                segment_features(&events, &env, cfg.pipeline.segment_len_s, cfg.pipeline.mask()?)?
            };
            if let Some(truth) = &truth {
                for row in &mut rows {
                    row.label = majority_label(truth, row.segment_start_s, cfg.pipeline.segment_len_s);
                }
            }
            write_feature_csv(writer(output.as_deref())?, &rows)?;
        }
        Command::Train {
            features,
            variant,
            model,
        } => {
            override_pipeline(&mut cfg, variant, None);
            let mask = cfg.pipeline.mask()?;
            let data = Dataset::from_rows(&read_tables(&features)?, mask)?;
            let cv = cross_validate(&data, &cfg.train)?;
            let trained = train(&data, &cfg.train)?;
            trained.save(&model)?;
            println!("features {mask}");
            println!("samples {}", data.len());
            println!("cv_accuracy {:.6}", cv.accuracy);
            for (f, acc) in cv.fold_accuracy.iter().enumerate() {
                println!("fold {f} accuracy {acc:.6}");
            }
        }
        Command::Select {
            features,
            variant,
            output,
        } => {
            override_pipeline(&mut cfg, variant, None);
            let data = Dataset::from_rows(&read_tables(&features)?, cfg.pipeline.mask()?)?;
            let selection = select_features(&data, &cfg.select)?;
            println!("selected {}", selection.mask);
            for (f, (mask, acc)) in selection
                .fold_masks
                .iter()
                .zip(&selection.fold_validation_accuracy)
                .enumerate()
            {
                println!("fold {f} {mask} validation_accuracy {acc:.6}");
            }
            if let Some(path) = output {
                fs::write(path, serde_json::to_string_pretty(&selection)?)?;
            }
        }
        Command::Classify {
            input,
            model,
            variant,
            segment_len,
            output,
            segments,
        } => {
            let model = MlpModel::load(&model)?;
            override_pipeline(&mut cfg, variant.clone(), segment_len);
            if variant.is_none() {
                cfg.pipeline.variant = model.mask.to_string();
            }
            let audio = ingest_wav(&input)?;
            let out = run_pipeline(&audio, &cfg.pipeline, &model)?;
            write_label_csv(writer(output.as_deref())?, &out.blocks)?;
            if let Some(path) = segments {
                write_feature_csv(File::create(path)?, &out.segments)?;
            }
        }
        Command::Evaluate {
            truth,
            pred,
            length,
            exclude_other,
            json,
        } => {
            let truth = read_label_csv(File::open(truth)?)?;
            let pred = read_label_csv(File::open(pred)?)?;
            let length = length.unwrap_or_else(|| truth.last().map_or(0.0, |b| b.end_s));
            let report = evaluate(&truth, &pred, length, !exclude_other)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_eval(&report);
            }
        }
        Command::Cost { variant, bufar, json } => {
            let report = if bufar {
                bufar_report()
            } else {
                let mask = parse_variant(&variant)?;
                let mut a = CostAssumptions::for_mask(mask);
                a.segment_len_s = cfg.pipeline.segment_len_s;
                let mut report = cost(&a)?;
                report.ram_bytes = ram_estimate(&a);
                report
            };
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_cost(&report);
            }
        }
        Command::Synth {
            output_dir,
            parts,
            per_class,
            segment_len,
            no_audio,
            features,
        } => {
            override_pipeline(&mut cfg, None, segment_len);
            cfg.pipeline.validate()?;
            synth(&cfg, &output_dir, parts.as_deref(), per_class, !no_audio, features)?;
        }
    }
    Ok(())
}

fn override_pipeline(cfg: &mut Config, variant: Option<String>, segment_len: Option<f64>) {
    if let Some(v) = variant {
        cfg.pipeline.variant = v;
    }
    if let Some(len) = segment_len {
        cfg.pipeline.segment_len_s = len;
    }
}

fn parse_variant(s: &str) -> Result<FeatureMask> {
    s.parse::<Variant>()
        .map(Variant::mask)
        .map_err(|e| Error::Config(format!("variant: {e}")))
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(writer(path)?))
}

fn read_tables(paths: &[PathBuf]) -> Result<Vec<FeatureRow>> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_feature_csv(File::open(p)?, FeatureMask::JMFAR)?);
    }
    Ok(rows)
}

fn print_eval(r: &EvalReport) {
    println!("frames {}", r.frames);
    println!("weighted_f1 {:.6}", r.f1.weighted);
    for class in Activity::ALL {
        let f1 = r.f1.per_class[class.index()].map_or("n/a".to_string(), |v| format!("{v:.6}"));
        println!("f1 {class} {f1} support {}", r.f1.support[class.index()]);
    }
    println!("confusion (rows truth, columns predicted; grazing rumination other)");
    for row in &r.confusion {
        println!("  {:.6} {:.6} {:.6}", row[0], row[1], row[2]);
    }
    for class in Activity::ALL {
        let m = &r.block_metrics[class.index()];
        let parts: Vec<String> = BlockMetrics::NAMES
            .iter()
            .zip(m.values())
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect();
        println!("blocks {class} {}", parts.join(" "));
    }
}

fn print_cost(r: &CostReport) {
    for s in &r.stages {
        let unit = match s.unit {
            CostUnit::PerSecond => "ops/s",
            CostUnit::PerSegment => "ops/segment",
        };
        println!("{:<48} {:>12} {unit}", s.stage, s.ops);
    }
    println!("per_second {} ops/s", r.per_second_ops);
    println!("per_segment {} ops/segment over {} s", r.per_segment_ops, r.segment_len_s);
    println!("ram {} B", r.ram_bytes);
    println!("total {} ops/s", r.total_ops_per_s);
}

fn parse_parts(spec: &str) -> Result<Vec<(ActivityModel, f64)>> {
    spec.split(',')
        .map(|part| {
            let (name, secs) = part
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("part '{part}' is not activity:seconds")))?;
            let secs: f64 = secs
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("part '{part}' has a bad duration")))?;
            let model = match name.trim().to_ascii_lowercase().as_str() {
                "resting" => ActivityModel::resting(),
                other => ActivityModel::preset(other.parse().map_err(|e| Error::Config(format!("{e}")))?),
            };
            Ok((model, secs))
        })
        .collect()
}

fn synth(
    cfg: &Config,
    dir: &Path,
    parts: Option<&str>,
    per_class: usize,
    audio: bool,
    features: bool,
) -> Result<()> {
    let seed = cfg.pipeline.seed;
    let segment_len = cfg.pipeline.segment_len_s;
    let recordings: Vec<SynthRecording> = match parts {
        Some(spec) => vec![generate_recording(&parse_parts(spec)?, seed)?],
        None => generate_corpus(&balanced_spec(per_class, segment_len), seed)?,
    };
    fs::create_dir_all(dir)?;
    let mut table = Vec::new();
    let mask = cfg.pipeline.mask()?;
    for (i, rec) in recordings.iter().enumerate() {
        let stem = format!("rec_{i:03}");
        write_label_csv(File::create(dir.join(format!("{stem}.labels.csv")))?, &rec.blocks)?;
        let mut w = csv_writer(Some(&dir.join(format!("{stem}.events.csv"))))?;
        w.write_record(["timestamp_s", "amplitude", "duration_s"])?;
        for e in &rec.events {
            w.write_record([e.timestamp_s.to_string(), e.amplitude.to_string(), e.duration_s.to_string()])?;
        }
        w.flush()?;
        if audio {
            write_wav(&dir.join(format!("{stem}.wav")), &rec.audio(&cfg.synth.render)?)?;
        }
        if features {
            let env = rec.noisy_envelope(cfg.synth.envelope_rate_hz, cfg.synth.envelope_snr_db)?;
            let events = detect_events(&env, &cfg.pipeline.detector);
            let mut rows = segment_features(&events, &env, segment_len, mask)?;
            for row in &mut rows {
                row.label = majority_label(&rec.blocks, row.segment_start_s, segment_len);
            }
            table.extend(rows);
        }
    }
    if features {
        write_feature_csv(File::create(dir.join("features.csv"))?, &table)?;
    }
    println!("wrote {} recordings to {}", recordings.len(), dir.display());
    Ok(())
}
