use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "biquad-sos", version, about = "Sum-of-squares tools for biquadratic and tripartite quartic forms")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Form (or manifest, for `verify`) as JSON.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Built-in form instead of `--input`: choi, product, perfect-square, calderon-demo.
    #[arg(long, global = true)]
    pub fixture: Option<String>,
    /// x-dimension for sized fixtures.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// y-dimension for sized fixtures.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Result JSON path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.json`, or stderr.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Iteration budget of the underlying solver.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Rational arithmetic where supported.
    #[arg(long, global = true)]
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate a form at a point.
    Eval {
        /// Comma-separated x values.
        #[arg(long)]
        x: String,
        /// Comma-separated y values (a single value for m11 forms).
        #[arg(long)]
        y: String,
        #[arg(long)]
        z: Option<String>,
    },
    /// Structure-preserving transforms.
    Transform {
        #[arg(long, value_enum)]
        to: Target,
        /// Certificate of the input to carry along.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Multi-start psd test.
    CheckPsd,
    /// Gram-matrix sos certificate.
    Sos,
    /// Low-rank sos search (`--k`) or rank estimate up to `--kmax`.
    Rank {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Dual (moment) witness that the form is not sos.
    Witness,
    /// Case split of a degenerated 2x1x1 form.
    Classify,
    /// Rank survey of random psd 2x1x1 forms.
    Survey {
        #[arg(long)]
        count: usize,
    },
    /// Replay a manifest, or check `--certificate` against the input form.
    Verify {
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Tripartite,
    Biquadratic,
    M11,
    Dehomogenize,
    PdReduce,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval { .. } => "eval",
            Command::Transform { .. } => "transform",
            Command::CheckPsd => "check-psd",
            Command::Sos => "sos",
            Command::Rank { .. } => "rank",
            Command::Witness => "witness",
            Command::Classify => "classify",
            Command::Survey { .. } => "survey",
            Command::Verify { .. } => "verify",
        }
    }
}
