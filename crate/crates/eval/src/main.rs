use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tepmon_eval::{
    format_detection_table, format_diagnosis_table, run_detection_eval, run_diagnosis_eval,
    write_detection_csv, write_diagnosis_csv, DetectionParams,
};
use tepmon_explain::{
    HttpBackend, HttpBackendConfig, LlmBackend, PromptLibrary, PromptMode, RetryPolicy, StubBackend,
};

#[derive(Debug, Parser)]
#[command(version, about = "Offline evaluation of the TEP monitor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detection outcome and final-step deviations per fault.
    Detect {
        #[command(flatten)]
        detection: DetectionArgs,
        /// CSV output path; the table is also printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Root-cause classification of the detected faults.
    Diagnose {
        #[command(flatten)]
        detection: DetectionArgs,
        #[arg(long, value_enum, default_value_t = Mode::Included)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = BackendKind::Stub)]
        backend: BackendKind,
        /// TOML file with the HTTP backend settings.
        #[arg(long)]
        backend_config: Option<PathBuf>,
        /// Fixed reply for the stub backend; it echoes the prompt otherwise.
        #[arg(long)]
        stub_reply: Option<String>,
        /// Template directory; the compiled-in templates are used when unset.
        #[arg(long)]
        prompts_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DetectionArgs {
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0.90)]
    variance: f64,
    /// Number of top deviations reported.
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    consecutive: usize,
    /// Rank contributions by magnitude instead of signed value.
    #[arg(long)]
    rank_by_abs: bool,
}

impl DetectionArgs {
    fn params(&self) -> DetectionParams {
        DetectionParams {
            alpha: self.alpha,
            variance_target: self.variance,
            top_k: self.k,
            consecutive_required: self.consecutive,
            rank_by_abs: self.rank_by_abs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Included,
    General,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendKind {
    Stub,
    Http,
}

fn make_backend(
    kind: BackendKind,
    config: Option<&PathBuf>,
    stub_reply: Option<String>,
) -> anyhow::Result<Arc<dyn LlmBackend>> {
    Ok(match kind {
        BackendKind::Stub => Arc::new(match stub_reply {
            Some(text) => StubBackend::fixed(text),
            None => StubBackend::echo(),
        }),
        BackendKind::Http => {
            let config: HttpBackendConfig = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => HttpBackendConfig::default(),
            };
            Arc::new(HttpBackend::new(config)?)
        }
    })
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Detect { detection, out } => {
            let table = run_detection_eval(&detection.data_dir, detection.params())?;
            print!("{}", format_detection_table(&table));
            if let Some(path) = out {
                let file =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_detection_csv(&table, BufWriter::new(file))?;
            }
        }
        Command::Diagnose {
            detection,
            mode,
            backend,
            backend_config,
            stub_reply,
            prompts_dir,
            out,
        } => {
            let mode = match mode {
                Mode::Included => PromptMode::RootCausesIncluded,
                Mode::General => PromptMode::GeneralReasoning,
            };
            let prompts = match prompts_dir {
                Some(dir) => PromptLibrary::load(&dir)?,
                None => PromptLibrary::embedded(),
            };
            let backend = make_backend(backend, backend_config.as_ref(), stub_reply)?;
            let table = run_detection_eval(&detection.data_dir, detection.params())?;
            let diagnosis = run_diagnosis_eval(
                &table,
                mode,
                &prompts,
                backend.as_ref(),
                RetryPolicy::default(),
            )
            .await?;
            print!("{}", format_diagnosis_table(&diagnosis));
            if let Some(path) = out {
                let file =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_diagnosis_csv(&diagnosis, BufWriter::new(file))?;
            }
        }
    }
    Ok(())
}
