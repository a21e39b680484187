//! Command-line arguments.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use myopic_core::formulas::FormulaVariant;
use myopic_core::search::{IntRange, PConstraint};
use myopic_core::UtilityKind;

use crate::config::PolicyName;

/// Exact evaluation, verification and simulation of myopic multi-channel sensing.
#[derive(Debug, Parser)]
#[command(name = "myopic", version, about)]
pub struct Cli {
    /// Run configuration file (TOML, or JSON with a `.json` extension).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for sweeps, searches and simulation (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Seed for random search, simulation and errata sampling.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Node budget for the brute-force solver (total for sweeps).
    #[arg(long, global = true, value_name = "N")]
    pub budget: Option<u64>,

    /// Closed-form reading used for verdicts.
    #[arg(long, global = true, value_enum, default_value_t = VariantArg::Corrected)]
    pub variant: VariantArg,

    /// Report format. CSV is available for sweep and search findings only.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// What to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact expected reward of the configured policy.
    Eval {
        /// Override the policy in the config.
        #[arg(long, value_enum)]
        policy: Option<PolicyName>,
    },
    /// Recompute a reference counterexample and compare with its printed gap.
    Reproduce {
        /// Counterexample number.
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        id: u8,
    },
    /// Grid sweep of a claimed optimality region; exit 0 iff nothing is found.
    Verify {
        /// Region to sweep.
        #[arg(value_enum)]
        claim: Claim,
        /// Grid step for beliefs and transition probabilities.
        #[arg(long)]
        step: Option<f64>,
        /// Gaps above this count as findings.
        #[arg(long, default_value_t = myopic_core::search::DEFAULT_GAP_THRESHOLD)]
        threshold: f64,
        /// List at most this many findings (all by default; 100 for exploratory sweeps).
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Seeded random search for the largest myopic gap.
    Search {
        /// Channel counts, `N` or `LO..HI`.
        #[arg(long, default_value = "6")]
        channels: RangeArg,
        /// Sensing widths, `K` or `LO..HI`.
        #[arg(long, default_value = "3")]
        sense_k: RangeArg,
        /// Horizons, `T` or `LO..HI`.
        #[arg(long, default_value = "2")]
        horizon: RangeArg,
        /// Admissible transition pairs.
        #[arg(long, value_enum, default_value_t = ConstraintArg::P11GeP01)]
        p_constraint: ConstraintArg,
        /// Reward rule.
        #[arg(long, value_enum, default_value_t = UtilityArg::AtLeastOne)]
        utility: UtilityArg,
        /// Number of sampled instances.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Gaps above this count as findings.
        #[arg(long, default_value_t = myopic_core::search::DEFAULT_GAP_THRESHOLD)]
        threshold: f64,
    },
    /// Monte Carlo estimate of the configured policy, compared with its exact value.
    Simulate {
        /// Episodes (overrides the config).
        #[arg(long)]
        episodes: Option<u64>,
        /// Override the policy in the config.
        #[arg(long, value_enum)]
        policy: Option<PolicyName>,
    },
    /// Sign checks and identity discrepancies of the closed-form bounds.
    Errata {
        /// Random instances to draw.
        #[arg(long, default_value_t = 10_000)]
        instances: u64,
    },
}

/// Sweep regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Claim {
    /// `k = 2, T = 2, N = 3..6`, positively correlated channels.
    Thm1,
    /// `k = 2, T = 2, N = 3..4`, negatively correlated channels.
    Thm2,
    /// `k = 1, T = 2..4, N = 2..4`, positively correlated channels.
    #[value(name = "k1-cited")]
    K1Cited,
    /// `k = 2, T = 2, N = 5`, negatively correlated; exploratory, never fails.
    #[value(name = "thm2-n5")]
    Thm2N5,
}

/// `--variant` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    /// Formulas exactly as printed.
    AsPrinted,
    /// Formulas with the typographical corrections applied.
    Corrected,
}

impl From<VariantArg> for FormulaVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::AsPrinted => FormulaVariant::AsPrinted,
            VariantArg::Corrected => FormulaVariant::Corrected,
        }
    }
}

/// `--output` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Nested JSON report.
    Json,
    /// Flat table of findings.
    Csv,
}

/// `--p-constraint` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    /// `p11 >= p01`.
    P11GeP01,
    /// `p11 < p01`.
    P11LtP01,
    /// Any pair.
    Any,
    /// `p11 = p01`.
    Equal,
}

impl From<ConstraintArg> for PConstraint {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::P11GeP01 => PConstraint::P11GeP01,
            ConstraintArg::P11LtP01 => PConstraint::P11LtP01,
            ConstraintArg::Any => PConstraint::Any,
            ConstraintArg::Equal => PConstraint::Equal,
        }
    }
}

/// `--utility` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityArg {
    /// One unit when any sensed channel is idle.
    AtLeastOne,
    /// One unit per idle sensed channel.
    CountIdle,
}

impl From<UtilityArg> for UtilityKind {
    fn from(u: UtilityArg) -> Self {
        match u {
            UtilityArg::AtLeastOne => UtilityKind::AtLeastOne,
            UtilityArg::CountIdle => UtilityKind::CountIdle,
        }
    }
}

/// An integer or an inclusive range `LO..HI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeArg(pub IntRange);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{s}` is not an integer or LO..HI range"))
        };
        let range = match s.split_once("..") {
            Some((lo, hi)) => IntRange::new(parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => IntRange::single(parse(s)?),
        };
        Ok(RangeArg(range))
    }
}
