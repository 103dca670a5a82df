use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use cbseg::evaluation::ReportTable;
use cbseg::pipeline::{run, PipelineConfig};
use cbseg::Error;
use cbseg_cli::{fail, parse_args};
use clap::Parser;

/// Codebook background subtraction with edge-based refinement.
///
/// Every option can also be given in a `key = value` configuration file.
/// Values are layered: built-in defaults, preset, configuration file, flags.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset: canoe or fountain01.
    #[arg(long)]
    preset: Option<String>,
    /// Directory holding the input frames.
    #[arg(long)]
    input: Option<String>,
    /// Frame file name pattern [default: in%06d.jpg].
    #[arg(long)]
    pattern: Option<String>,
    /// Index of the first frame [default: 1].
    #[arg(long)]
    first: Option<String>,
    /// Index of the last frame [default: last consecutive file on disk].
    #[arg(long)]
    last: Option<String>,
    /// Number of training frames N [default: 100].
    #[arg(long)]
    train: Option<String>,
    /// cb, mog, cb+sobel, cb+log or cb+canny [default: cb+sobel].
    #[arg(long)]
    method: Option<String>,
    /// Codebook color distortion threshold [default: 10].
    #[arg(long)]
    epsilon: Option<String>,
    /// Codebook lower brightness factor [default: 0.4].
    #[arg(long)]
    alpha: Option<String>,
    /// Codebook upper brightness factor [default: 1.25].
    #[arg(long)]
    beta: Option<String>,
    /// Edge threshold fraction [default: 0.85].
    #[arg(long)]
    theta: Option<String>,
    /// Contours enclosing fewer pixels are not hull-filled [default: 0].
    #[arg(long)]
    min_hull_area: Option<String>,
    /// Ground-truth directory; enables evaluation.
    #[arg(long)]
    gt: Option<String>,
    /// Directory for the output masks.
    #[arg(long)]
    out: Option<String>,
    /// CSV report path.
    #[arg(long)]
    report: Option<String>,
    /// Dataset label used in reports.
    #[arg(long)]
    dataset: Option<String>,
    /// micro or macro [default: micro].
    #[arg(long)]
    averaging: Option<String>,
    /// Benchmark with this many repetitions (at least 3).
    #[arg(long)]
    bench: Option<String>,
    /// Worker threads [default: all cores; 1 for benchmarks].
    #[arg(long)]
    threads: Option<String>,
    /// Save the trained model as JSON.
    #[arg(long)]
    save_model: Option<String>,
    /// Load a trained model instead of training.
    #[arg(long)]
    load_model: Option<String>,
    /// Any other configuration key, as KEY=VALUE.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Args {
    fn entries(&self) -> Result<Vec<(String, String)>, Error> {
        let named = [
            ("preset", &self.preset),
            ("input", &self.input),
            ("pattern", &self.pattern),
            ("first", &self.first),
            ("last", &self.last),
            ("train", &self.train),
            ("method", &self.method),
            ("epsilon", &self.epsilon),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("theta", &self.theta),
            ("min_hull_area", &self.min_hull_area),
            ("gt", &self.gt),
            ("out", &self.out),
            ("report", &self.report),
            ("dataset", &self.dataset),
            ("averaging", &self.averaging),
            ("bench", &self.bench),
            ("threads", &self.threads),
            ("save_model", &self.save_model),
            ("load_model", &self.load_model),
        ];
        let mut entries: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(entries)
    }
}

fn execute(args: &Args) -> Result<(), Error> {
    let file = match &args.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?),
        None => None,
    };
    let config = PipelineConfig::layered(file.as_deref(), &args.entries()?)?;
    let summary = run(&config)?;

    println!(
        "{} [{}]: frames {}..={}, {} masks",
        summary.dataset, summary.method, summary.first_frame, summary.last_frame, summary.masks
    );
    if let Some(row) = summary.report_row() {
        println!("evaluated {} frames", summary.confusion.len());
        print!("{}", ReportTable(&[row]));
    }
    if let Some(timing) = &summary.timing {
        print!("{timing}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let args: Args = match parse_args() {
        Ok(a) => a,
        Err(code) => return code,
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail("segment", &e),
    }
}
