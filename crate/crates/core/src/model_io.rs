//! Versioned model dumps.
//!
//! Models are stored as JSON documents of the form
//! `{"format": "<kind>", "version": <n>, "model": {...}}`. The `format` tag
//! names the model family (`cbseg-codebook` or `cbseg-mog`) and `version` is
//! bumped whenever the layout of `model` changes; readers reject any tag or
//! version they do not know.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::codebook::CodebookModel;
use crate::error::{Error, Result};
use crate::mog::MogModel;

pub const FORMAT_VERSION: u32 = 1;
pub const CODEBOOK_FORMAT: &str = "cbseg-codebook";
pub const MOG_FORMAT: &str = "cbseg-mog";

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'a str,
    version: u32,
    model: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    format: String,
    version: u32,
    model: T,
}

fn write_model<T: Serialize, W: Write>(writer: W, format: &str, model: &T) -> serde_json::Result<()> {
    serde_json::to_writer(
        writer,
        &EnvelopeOut {
            format,
            version: FORMAT_VERSION,
            model,
        },
    )
}

fn read_model<T: DeserializeOwned, R: Read>(reader: R, format: &str) -> std::result::Result<T, String> {
    let env: EnvelopeIn<serde_json::Value> = serde_json::from_reader(reader).map_err(|e| e.to_string())?;
    if env.format != format {
        return Err(format!("expected a {format} dump, found {}", env.format));
    }
    if env.version != FORMAT_VERSION {
        return Err(format!(
            "unsupported {format} version {} (this build reads {FORMAT_VERSION})",
            env.version
        ));
    }
    serde_json::from_value(env.model).map_err(|e| e.to_string())
}

fn save<T: Serialize>(path: &Path, format: &str, model: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_model(&mut w, format, model).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn load<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(file), format).map_err(|reason| Error::Format {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn save_codebook(model: &CodebookModel, path: impl AsRef<Path>) -> Result<()> {
    save(path.as_ref(), CODEBOOK_FORMAT, model)
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<CodebookModel> {
    let model: CodebookModel = load(path.as_ref(), CODEBOOK_FORMAT)?;
    model.params().validate()?;
    Ok(model)
}

pub fn save_mog(model: &MogModel, path: impl AsRef<Path>) -> Result<()> {
    save(path.as_ref(), MOG_FORMAT, model)
}

pub fn load_mog(path: impl AsRef<Path>) -> Result<MogModel> {
    let model: MogModel = load(path.as_ref(), MOG_FORMAT)?;
    model.params().validate()?;
    Ok(model)
}
