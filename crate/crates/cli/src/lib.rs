//! Batch front end: reads forms as JSON, runs one operation, emits a JSON
//! result and a replayable run manifest.

pub mod args;
mod commands;
pub mod manifest;

use std::collections::BTreeMap;
use std::path::Path;

use biquad_sos::Error;

pub use args::{Cli, Command, Common, Target};
pub use manifest::{digest, RunManifest};

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Indeterminate(_) => EXIT_INDETERMINATE,
        Error::NotPsdForm { .. }
        | Error::NotPsd { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::NotAZero { .. }
        | Error::InvalidCertificate(_) => EXIT_NEGATIVE,
        Error::InvalidIndex(_)
        | Error::InvalidInput(_)
        | Error::InvalidShape(_)
        | Error::NotTripartite(_)
        | Error::NotFromForm211(_)
        | Error::UnknownFixture(_)
        | Error::NotRepresentable(_)
        | Error::Parse(_) => EXIT_INVALID,
    }
}

/// One finished run; nothing has been written yet.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub code: i32,
    /// Pretty JSON with a trailing newline.
    pub result: String,
    pub manifest: RunManifest,
}

pub(crate) struct Outcome {
    pub code: i32,
    pub value: serde_json::Value,
    pub seeds: Vec<u64>,
}

pub(crate) fn read_file(path: &Path, inputs: &mut BTreeMap<String, String>) -> biquad_sos::Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    inputs.insert(path.display().to_string(), digest(&bytes));
    String::from_utf8(bytes).map_err(|_| Error::Parse(format!("{} is not UTF-8", path.display())))
}

/// Runs the command without touching the filesystem beyond reading inputs.
pub fn run(cli: &Cli) -> RunOutput {
    let start = std::time::Instant::now();
    let mut inputs = BTreeMap::new();
    let outcome = commands::dispatch(cli, &mut inputs).unwrap_or_else(|e| Outcome {
        code: exit_code(&e),
        value: serde_json::json!({ "error": e.to_string(), "exit_code": exit_code(&e) }),
        seeds: vec![cli.common.seed],
    });
    let mut result = serde_json::to_string_pretty(&outcome.value).expect("serializable");
    result.push('\n');
    let manifest = RunManifest::new(cli, outcome.seeds, inputs, &result, outcome.code, start.elapsed());
    RunOutput {
        code: outcome.code,
        result,
        manifest,
    }
}

/// Writes the result and manifest where the flags say and returns the
/// exit code.
pub fn run_and_write(cli: &Cli) -> i32 {
    let out = run(cli);
    let manifest_text = serde_json::to_string_pretty(&out.manifest).expect("serializable") + "\n";
    let write = |p: &Path, s: &str| {
        if let Err(e) = std::fs::write(p, s) {
            eprintln!("cannot write {}: {e}", p.display());
            return false;
        }
        true
    };
    match &cli.common.out {
        Some(p) => {
            if !write(p, &out.result) {
                return EXIT_INVALID;
            }
        }
        None => print!("{}", out.result),
    }
    let manifest_path = cli.common.manifest.clone().or_else(|| {
        cli.common
            .out
            .as_ref()
            .map(|p| p.with_file_name(format!("{}.manifest.json", p.file_name().unwrap_or_default().to_string_lossy())))
    });
    match manifest_path {
        Some(p) => {
            if !write(&p, &manifest_text) {
                return EXIT_INVALID;
            }
        }
        None => eprint!("{manifest_text}"),
    }
    out.code
}

/// Caps the global rayon pool from `BIQUAD_SOS_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("BIQUAD_SOS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
