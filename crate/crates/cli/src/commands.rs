use std::io::Read as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monodromy::algebra::CMatrix;
use monodromy::bundles::{semistability_report, Completeness, Stability};
use monodromy::localforms::{normal_form_with, LocalLogConnection, NormalFormOptions, NormalFormWarning};
use monodromy::spectral::{norm_log_with, CLUSTER_TOL};
use monodromy::synth::{
    bq_frame, commutative_fuchsian, double_rank_embedding, rank3_decide, shift_weights, solve_weights_parabolic,
    Rank3Certificate, Rank3Verdict, SplittingType, WeightMode,
};
use monodromy::verify::{growth_exponent, growth_exponent_at, verify_monodromy, GrowthEstimate};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::codec::*;
use crate::doc::{parse_json, Envelope, Kind};
use crate::error::{CliError, CliResult};
use crate::{EXIT_OK, EXIT_UNDETERMINED};

const DEFAULT_INTEGRATION_TOL: f64 = 1e-10;
const DEFAULT_CONJUGACY_TOL: f64 = 1e-6;
const DEFAULT_GROWTH_RADII: usize = 11;

/// Local normal forms, weighted flat bundles, Fuchsian synthesis and
/// monodromy verification on JSON documents.
#[derive(Debug, Parser)]
#[command(name = "monodromy", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Tolerance of the command's numerical method (defaults per command).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Truncation order for series computations.
    #[arg(long, global = true)]
    pub order: Option<usize>,

    /// Exit with status 4 when a verdict is undetermined.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output path, `-` for standard output.
    #[arg(long, global = true, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Strict,
    Relaxed,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized logarithm of a matrix (bare nested array) or of every
    /// matrix of a representation.
    Normlog { input: PathBuf },
    /// Normal form of a local logarithmic connection.
    NormalForm { input: PathBuf },
    /// Degree and slope of a weighted bundle.
    Degree { input: PathBuf },
    /// Semistability verdict of a weighted bundle.
    Semistable { input: PathBuf },
    /// Fuchsian system with a given commuting monodromy.
    SynthCommutative { input: PathBuf },
    /// Frame solving the divisibility conditions for a splitting type and
    /// a series `Q`; input is a report with `splitting` and `q`.
    BqFrame { input: PathBuf },
    /// Integer weights for an upper triangular representation.
    SolveWeights {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
    },
    /// Adds an integer to every weight at each puncture.
    ShiftWeights {
        input: PathBuf,
        /// One shift per puncture.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        by: Vec<i64>,
    },
    /// Embeds a representation into one of twice the rank.
    EmbedDouble { input: PathBuf },
    /// Decides realizability of a rank three representation.
    DecideRank3 { input: PathBuf },
    /// Integrates a Fuchsian system and compares with a target
    /// representation up to conjugation.
    Verify {
        input: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Relative tolerance of the conjugacy test.
        #[arg(long, default_value_t = DEFAULT_CONJUGACY_TOL)]
        conj_tol: f64,
    },
    /// Growth exponent of a flat section near a puncture of a local
    /// connection or a Fuchsian system.
    Growth {
        input: PathBuf,
        /// Initial vector (real entries); defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        vector: Vec<f64>,
        /// Decreasing radii; defaults to a geometric sequence over five
        /// decades.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        /// Puncture index, for Fuchsian systems.
        #[arg(long, default_value_t = 0)]
        puncture: usize,
    },
}

/// A document to emit and the exit status that goes with it.
#[derive(Debug)]
pub struct Outcome {
    pub document: Envelope,
    pub status: i32,
}

impl Outcome {
    fn ok(kind: Kind, payload: Value) -> Self {
        Self {
            document: Envelope::new(kind, payload),
            status: EXIT_OK,
        }
    }

    fn report(command: &str, mut payload: Value) -> Self {
        payload["command"] = Value::String(command.into());
        Self::ok(Kind::Report, payload)
    }

    fn undetermined_if(mut self, undetermined: bool, strict: bool) -> Self {
        if undetermined && strict {
            self.status = EXIT_UNDETERMINED;
        }
        self
    }
}

pub fn read_input(path: &PathBuf) -> CliResult<String> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

fn load(path: &PathBuf, kind: Kind) -> CliResult<Value> {
    Envelope::parse(&read_input(path)?)?.expect(kind)
}

fn warning(w: &NormalFormWarning) -> Value {
    match *w {
        NormalFormWarning::NearResonance {
            block_row,
            block_col,
            order,
            sigma_min,
        } => json!({
            "type": "near-resonance",
            "block": [block_row, block_col],
            "order": order,
            "sigma_min": real(sigma_min),
        }),
        NormalFormWarning::UndeterminedCoupling { block_row, block_col, gap } => json!({
            "type": "undetermined-coupling",
            "block": [block_row, block_col],
            "gap": gap,
        }),
        NormalFormWarning::IllConditionedArrangement { coupling } => json!({
            "type": "ill-conditioned-arrangement",
            "coupling": real(coupling),
        }),
    }
}

fn normlog_payload(g: &CMatrix, tol: f64) -> CliResult<Value> {
    let nl = norm_log_with(g, tol)?;
    let exponents: Vec<Value> = nl
        .exponents
        .iter()
        .map(|&(mu, mult)| json!({ "value": complex(mu), "multiplicity": mult }))
        .collect();
    Ok(json!({ "k": matrix(&nl.k), "exponents": exponents }))
}

fn normlog(input: &PathBuf, tol: f64) -> CliResult<Outcome> {
    let v = parse_json(&read_input(input)?)?;
    if v.is_array() {
        let g = read_matrix(&v, "matrix")?;
        return Ok(Outcome::report("normlog", normlog_payload(&g, tol)?));
    }
    let rep = read_representation(&Envelope::from_value(v)?.expect(Kind::Representation)?)?;
    let logs = rep
        .matrices()
        .iter()
        .map(|g| normlog_payload(g, tol))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Outcome::report("normlog", json!({ "logs": logs })))
}

fn normal_form(input: &PathBuf, common: &Common) -> CliResult<Outcome> {
    let mut conn = read_local_connection(&load(input, Kind::LocalConnection)?)?;
    if let Some(order) = common.order {
        if order > conn.order() {
            return Err(CliError::Usage(format!(
                "--order {order} exceeds the order {} of the connection",
                conn.order()
            )));
        }
        conn = LocalLogConnection::new(conn.matrix().truncate(order))?;
    }
    let opts = NormalFormOptions {
        cluster_tol: common.tol.unwrap_or(CLUSTER_TOL),
        ..NormalFormOptions::default()
    };
    let nf = normal_form_with(&conn, &opts)?;
    let gauge_residual = nf.gauge_residuals().into_iter().fold(0.0, f64::max);
    Ok(Outcome::report(
        "normal-form",
        json!({
            "k": matrix(&nf.k),
            "weights": integers(nf.phi.entries()),
            "constant_gauge": matrix(&nf.t),
            "constant_gauge_inverse": matrix(&nf.t_inv),
            "series_gauge": series(&nf.m),
            "normal_matrix": series(&nf.b),
            "gauge_residual": real(gauge_residual),
            "warnings": Value::Array(nf.warnings.iter().map(warning).collect()),
        }),
    ))
}

fn degree(input: &PathBuf) -> CliResult<Outcome> {
    let wfb = read_weighted_bundle(&load(input, Kind::WeightedBundle)?)?;
    Ok(Outcome::report(
        "degree",
        json!({
            "rank": wfb.rank(),
            "degree": wfb.degree()?,
            "degree_value": complex(wfb.degree_value()?),
            "slope": rational(wfb.slope()?),
        }),
    ))
}

fn semistable(input: &PathBuf, common: &Common) -> CliResult<Outcome> {
    let wfb = read_weighted_bundle(&load(input, Kind::WeightedBundle)?)?;
    let report = semistability_report(&wfb, common.seed)?;
    let verdict = match report.verdict {
        Stability::Stable => "stable",
        Stability::Semistable => "semistable",
        Stability::Unstable => "unstable",
        Stability::Undetermined => "undetermined",
    };
    let destabilizer = match &report.destabilizer {
        Some((basis, slope)) => json!({ "basis": matrix(basis), "slope": rational(*slope) }),
        None => Value::Null,
    };
    let outcome = Outcome::report(
        "semistable",
        json!({
            "verdict": verdict,
            "slope": rational(report.slope),
            "destabilizer": destabilizer,
            "equal_slope": report.equal_slope.as_ref().map_or(Value::Null, matrix),
            "subspaces_complete": report.completeness == Completeness::Complete,
        }),
    );
    Ok(outcome.undetermined_if(report.verdict == Stability::Undetermined, common.strict))
}

fn synth_commutative(input: &PathBuf) -> CliResult<Outcome> {
    let rep = read_representation(&load(input, Kind::Representation)?)?;
    let sys = commutative_fuchsian(&rep)?;
    Ok(Outcome::ok(Kind::FuchsianSystem, fuchsian_system(&sys)))
}

fn bq(input: &PathBuf) -> CliResult<Outcome> {
    let v = load(input, Kind::Report)?;
    let c = SplittingType::new(read_integers(v.get("splitting").unwrap_or(&Value::Null), "splitting")?)?;
    let q = read_series(v.get("q").ok_or_else(|| CliError::schema("missing field \"q\""))?)?;
    let sol = bq_frame(&c, &q)?;
    let perm: Vec<Value> = sol.perm.iter().map(|&p| Value::from(p)).collect();
    Ok(Outcome::report(
        "bq-frame",
        json!({ "permutation": perm, "frame": series(&sol.b), "residual": real(sol.residual) }),
    ))
}

fn solve_weights(input: &PathBuf, mode: ModeArg) -> CliResult<Outcome> {
    let rep = read_representation(&load(input, Kind::Representation)?)?;
    let (mode, tag) = match mode {
        ModeArg::Strict => (WeightMode::Strict, "strict"),
        ModeArg::Relaxed => (WeightMode::Relaxed, "relaxed"),
    };
    let payload = match solve_weights_parabolic(&rep, mode)? {
        Some(sol) => json!({
            "mode": tag,
            "found": true,
            "weights": Value::Array(sol.phi.iter().map(|row| integers(row)).collect()),
            "column_sums": integers(&sol.lambda),
            "route": sol.route,
        }),
        None => json!({ "mode": tag, "found": false }),
    };
    Ok(Outcome::report("solve-weights", payload))
}

fn shift(input: &PathBuf, by: &[i64]) -> CliResult<Outcome> {
    let wfb = read_weighted_bundle(&load(input, Kind::WeightedBundle)?)?;
    Ok(Outcome::ok(Kind::WeightedBundle, weighted_bundle(&shift_weights(&wfb, by)?)))
}

fn embed_double(input: &PathBuf) -> CliResult<Outcome> {
    let rep = read_representation(&load(input, Kind::Representation)?)?;
    Ok(Outcome::ok(Kind::Representation, representation(&double_rank_embedding(&rep)?.rep)))
}

fn decide_rank3(input: &PathBuf, common: &Common) -> CliResult<Outcome> {
    let rep = read_representation(&load(input, Kind::Representation)?)?;
    let verdict = rank3_decide(&rep, common.seed)?;
    let payload = match &verdict {
        Rank3Verdict::Realizable(Rank3Certificate::Irreducible { algebra_dim }) => json!({
            "verdict": "realizable",
            "certificate": "irreducible",
            "algebra_dim": algebra_dim,
        }),
        Rank3Verdict::Realizable(Rank3Certificate::SeveralJordanBlocks { puncture, blocks }) => json!({
            "verdict": "realizable",
            "certificate": "several-jordan-blocks",
            "puncture": puncture,
            "blocks": blocks,
        }),
        Rank3Verdict::NotRealizable {
            algebra_dim,
            subspace,
            exponent_sum,
        } => json!({
            "verdict": "not-realizable",
            "algebra_dim": algebra_dim,
            "subspace": subspace.as_ref().map_or(Value::Null, matrix),
            "exponent_sum": complex(*exponent_sum),
        }),
        Rank3Verdict::Undetermined { reason } => json!({ "verdict": "undetermined", "reason": reason }),
    };
    Ok(Outcome::report("decide-rank3", payload).undetermined_if(!verdict.is_definite(), common.strict))
}

fn verify(input: &PathBuf, target: &PathBuf, conj_tol: f64, common: &Common) -> CliResult<Outcome> {
    let sys = read_fuchsian_system(&load(input, Kind::FuchsianSystem)?)?;
    let rep = read_representation(&load(target, Kind::Representation)?)?;
    let tol = common.tol.unwrap_or(DEFAULT_INTEGRATION_TOL);
    let report = verify_monodromy(&sys, rep.matrices(), tol, conj_tol)?;
    let residuals: Vec<Value> = report.residuals.iter().map(|&r| real(r)).collect();
    Ok(Outcome::report(
        "verify",
        json!({
            "conjugate": report.conjugate,
            "conjugator": report.conjugator.as_ref().map_or(Value::Null, matrix),
            "computed": matrices(&report.computed),
            "product_defect": real(report.product_defect),
            "reintegration_defect": real(report.reintegration_defect),
            "residuals": residuals,
        }),
    ))
}

fn geometric_radii(start: f64) -> Vec<f64> {
    let ratio = 10f64.powf(-0.5);
    (0..DEFAULT_GROWTH_RADII).map(|i| start * ratio.powi(i as i32)).collect()
}

fn growth_payload(est: &GrowthEstimate) -> Value {
    let samples: Vec<Value> = est.samples.iter().map(|&(t, y)| json!([real(t), real(y)])).collect();
    json!({
        "exponent": est.exponent,
        "slope": real(est.slope),
        "interval": [real(est.interval.0), real(est.interval.1)],
        "reliable": est.reliable,
        "samples": samples,
    })
}

fn growth(input: &PathBuf, vector: &[f64], radii: &[f64], puncture: usize, common: &Common) -> CliResult<Outcome> {
    let doc = Envelope::parse(&read_input(input)?)?;
    let tol = common.tol.unwrap_or(DEFAULT_INTEGRATION_TOL);
    let column = |r: usize| -> CliResult<CMatrix> {
        if vector.is_empty() {
            return Ok(CMatrix::from_element(r, 1, Complex64::new(1.0, 0.0)));
        }
        if vector.len() != r {
            return Err(CliError::Usage(format!("--vector has {} entries for rank {r}", vector.len())));
        }
        Ok(CMatrix::from_iterator(r, 1, vector.iter().map(|&x| Complex64::new(x, 0.0))))
    };
    let est = match doc.kind {
        Kind::LocalConnection => {
            let conn = read_local_connection(&doc.payload)?;
            let radii = if radii.is_empty() { geometric_radii(0.1) } else { radii.to_vec() };
            growth_exponent(&conn, &column(conn.rank())?, &radii, tol)?
        }
        Kind::FuchsianSystem => {
            let sys = read_fuchsian_system(&doc.payload)?;
            let radii = if radii.is_empty() {
                let a = sys.punctures().get(puncture).copied().unwrap_or_default();
                let nearest = sys
                    .punctures()
                    .iter()
                    .filter(|&&p| p != a)
                    .map(|&p| (p - a).norm())
                    .fold(f64::INFINITY, f64::min);
                geometric_radii(if nearest.is_finite() { 0.1 * nearest } else { 0.1 })
            } else {
                radii.to_vec()
            };
            growth_exponent_at(&sys, puncture, &column(sys.rank())?, &radii, tol)?
        }
        other => {
            return Err(CliError::schema(format!(
                "growth needs a local-connection or fuchsian-system document, got {}",
                other.tag()
            )))
        }
    };
    Ok(Outcome::report("growth", growth_payload(&est)).undetermined_if(!est.reliable, common.strict))
}

/// Runs one subcommand; the caller writes the document and exits with the
/// status.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let common = &cli.common;
    match &cli.command {
        Command::Normlog { input } => normlog(input, common.tol.unwrap_or(CLUSTER_TOL)),
        Command::NormalForm { input } => normal_form(input, common),
        Command::Degree { input } => degree(input),
        Command::Semistable { input } => semistable(input, common),
        Command::SynthCommutative { input } => synth_commutative(input),
        Command::BqFrame { input } => bq(input),
        Command::SolveWeights { input, mode } => solve_weights(input, *mode),
        Command::ShiftWeights { input, by } => shift(input, by),
        Command::EmbedDouble { input } => embed_double(input),
        Command::DecideRank3 { input } => decide_rank3(input, common),
        Command::Verify { input, target, conj_tol } => verify(input, target, *conj_tol, common),
        Command::Growth {
            input,
            vector,
            radii,
            puncture,
        } => growth(input, vector, radii, *puncture, common),
    }
}
