use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use portpress::analyze::{analyze_kernel, render_machine_readable, render_report};
use portpress::asm::extract_marked_kernel;
use portpress::bench::{
    gen_conflict_kernel, gen_latency_kernel, gen_throughput_kernel, infer_params,
    parse_measurements, BenchmarkKernel,
};
use portpress::cycles::{format_exact, format_two_decimals};
use portpress::model::{InstructionForm, ModelDatabase};
use portpress::sim::simulate;

const SKL_MODEL: &str = include_str!("../models/skl.model");
const ZEN_MODEL: &str = include_str!("../models/zen.model");

#[derive(Parser)]
#[command(
    name = "portpress",
    about = "Best-case throughput prediction for marked x86 assembly loops",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lat,
    Tp,
    Conflict,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a marked loop kernel and report per-port pressure.
    Analyze {
        /// Assembly file containing marker-delimited loop body
        input: PathBuf,
        #[arg(long, default_value = "skl")]
        arch: String,
        /// Model file overriding the shipped one for --arch
        #[arg(long)]
        model: Option<PathBuf>,
        /// Directory for benchmark kernels generated for unmatched forms
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Line-oriented exact output instead of the table
        #[arg(long)]
        machine_readable: bool,
        /// Do not write benchmark kernels for unmatched forms
        #[arg(long)]
        no_benchgen: bool,
    },
    /// Cross-check the analytical bottleneck by deterministic scheduling.
    Simulate {
        input: PathBuf,
        #[arg(long, default_value = "skl")]
        arch: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        simulate_iterations: u64,
    },
    /// Generate a latency/throughput/conflict benchmark kernel for a form.
    Benchgen {
        /// Instruction form key, e.g. vfmadd132pd-xmm_xmm_mem
        key: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Companion form key (conflict mode only)
        #[arg(long)]
        companion: Option<String>,
        /// Independent chains (throughput/conflict) or 1 (latency)
        #[arg(long, default_value_t = 10)]
        parallelism: u32,
        /// Instructions in the loop body (latency/throughput)
        #[arg(long)]
        body_length: Option<u32>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Infer latency/throughput/conflicts from a measurement log.
    Ingest {
        log: PathBuf,
    },
}

fn load_db(arch: &str, model: &Option<PathBuf>) -> Result<ModelDatabase, String> {
    let loaded = match model {
        Some(path) => ModelDatabase::load_path(path)
            .map_err(|e| format!("cannot load model {}: {e}", path.display()))?,
        None => {
            let text = match arch {
                "skl" => SKL_MODEL,
                "zen" => ZEN_MODEL,
                other => return Err(format!("unknown arch {other:?} (shipped: skl, zen)")),
            };
            ModelDatabase::load_str(text).map_err(|e| format!("shipped {arch} model: {e}"))?
        }
    };
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.db)
}

fn write_kernel(kernel: &BenchmarkKernel, out_dir: &Path) -> Result<PathBuf, String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let path = out_dir.join(kernel.file_name());
    std::fs::write(&path, &kernel.asm_text)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            input,
            arch,
            model,
            out_dir,
            machine_readable,
            no_benchgen,
        } => {
            let db = load_db(&arch, &model)?;
            let text = std::fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
            let kernel =
                extract_marked_kernel(&text).map_err(|e| format!("{}: {e}", input.display()))?;
            let analysis = analyze_kernel(&kernel, &db);
            if machine_readable {
                print!("{}", render_machine_readable(&analysis, &db.port_model));
            } else {
                print!("{}", render_report(&analysis, &db.port_model));
            }
            if analysis.unmatched_forms.is_empty() {
                return Ok(0);
            }
            if !no_benchgen {
                for form in &analysis.unmatched_forms {
                    for gen in [
                        gen_latency_kernel(form, 1),
                        gen_throughput_kernel(form, 10, 100),
                    ] {
                        match gen {
                            Ok(k) => {
                                let path = write_kernel(&k, &out_dir)?;
                                eprintln!("wrote benchmark kernel {}", path.display());
                            }
                            Err(e) => eprintln!("warning: {}: {e}", form.key()),
                        }
                    }
                }
            }
            Ok(2)
        }
        Command::Simulate {
            input,
            arch,
            model,
            simulate_iterations,
        } => {
            let db = load_db(&arch, &model)?;
            let text = std::fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
            let kernel =
                extract_marked_kernel(&text).map_err(|e| format!("{}: {e}", input.display()))?;
            let cycles = simulate(&kernel, &db, simulate_iterations).map_err(|e| e.to_string())?;
            println!("{}", format_two_decimals(cycles));
            Ok(0)
        }
        Command::Benchgen {
            key,
            mode,
            companion,
            parallelism,
            body_length,
            out_dir,
        } => {
            let form =
                InstructionForm::parse_key(&key).ok_or_else(|| format!("bad form key {key:?}"))?;
            let kernel = match mode {
                Mode::Lat => gen_latency_kernel(&form, body_length.unwrap_or(10))
                    .map_err(|e| e.to_string())?,
                Mode::Tp => gen_throughput_kernel(
                    &form,
                    parallelism,
                    body_length.unwrap_or(10 * parallelism),
                )
                .map_err(|e| e.to_string())?,
                Mode::Conflict => {
                    let companion = companion
                        .ok_or("conflict mode needs --companion <form-key>".to_string())?;
                    let b = InstructionForm::parse_key(&companion)
                        .ok_or_else(|| format!("bad form key {companion:?}"))?;
                    gen_conflict_kernel(&form, &b, parallelism).map_err(|e| e.to_string())?
                }
            };
            let path = write_kernel(&kernel, &out_dir)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Ingest { log } => {
            let text = std::fs::read_to_string(&log)
                .map_err(|e| format!("cannot read {}: {e}", log.display()))?;
            let series = parse_measurements(&text).map_err(|e| e.to_string())?;
            for s in &series {
                let params = match infer_params(s) {
                    Ok(p) => p,
                    Err(e) => {
                        eprintln!("warning: skipping series: {e}");
                        continue;
                    }
                };
                for w in &params.warnings {
                    eprintln!("warning: {w}");
                }
                println!("form {}", params.form_key);
                println!("  latency {}", format_exact(params.latency));
                println!(
                    "  reciprocal_throughput {}",
                    format_exact(params.reciprocal_throughput)
                );
                println!("  port_count_estimate {}", params.port_count_estimate);
                let join = |set: &std::collections::BTreeSet<String>| {
                    set.iter().cloned().collect::<Vec<_>>().join(",")
                };
                if !params.conflicts.is_empty() {
                    println!("  conflicts {}", join(&params.conflicts));
                }
                if !params.non_conflicts.is_empty() {
                    println!("  non_conflicts {}", join(&params.non_conflicts));
                }
                if !params.indeterminate.is_empty() {
                    println!("  indeterminate {}", join(&params.indeterminate));
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
