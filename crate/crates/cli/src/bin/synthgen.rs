use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use cbseg::synthgen::{write_scene, SceneSpec};
use cbseg::Error;
use cbseg_cli::{fail, parse_args};
use clap::Parser;

/// Render a synthetic scene as an input sequence with exact ground truth.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// JSON scene description.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; receives input/, groundtruth/ and temporalROI.txt.
    #[arg(long)]
    out: PathBuf,
    /// File name pattern for input frames.
    #[arg(long, default_value = "in%06d.jpg")]
    pattern: String,
}

fn main() -> ExitCode {
    let args: Args = match parse_args() {
        Ok(a) => a,
        Err(code) => return code,
    };
    let result = fs::read_to_string(&args.spec)
        .map_err(|e| Error::Io {
            path: args.spec.clone(),
            source: e,
        })
        .and_then(|text| SceneSpec::from_json(&text).map_err(|e| Error::Config(e.to_string())))
        .and_then(|spec| {
            write_scene(&spec, &args.out, &args.pattern)?;
            Ok(spec)
        });
    match result {
        Ok(spec) => {
            println!(
                "wrote {} frames of {}x{} to {}",
                spec.frames,
                spec.width,
                spec.height,
                args.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => fail("synthgen", &e),
    }
}
