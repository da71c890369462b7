//! Command-line harness for the `ursketch` library.
//!
//! One binary, many subcommands: protocol simulations (`ur-sim`), stream
//! ingestion (`sketch`), the subset codecs (`codec`, `codec-k`), code-family
//! construction (`codes`), the indexing reduction (`augindex`), the exact
//! inequality verifiers (`verify`), and the message-size table (`scaling`).
//!
//! All randomness flows from each subcommand's single `--seed`: trial `t`
//! derives its generator by mixing the seed with `t`, so identical flags
//! produce byte-identical output. Environment variables are never read.
//! JSON output is one object per line; CSV is RFC-4180 (no quoting needed
//! for the numeric tables emitted here). Exit codes: 0 on success, 1 when an
//! invoked check fails or a runtime/data error occurs, 2 on flag errors.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use ursketch::augindex::{
    charlie_encode, diane_decode_adaptive, diane_decode_oneshot, make_universe, AugIndexInstance,
};
use ursketch::codec::{dec, dec_k, enc, enc_k, measure_cost, CodecKParams, CodecParams};
use ursketch::codes::build_family;
use ursketch::error::Error;
use ursketch::info::{
    check_adaptivity_bound, check_bits_saving, check_pochhammer, random_adaptivity_instance,
    random_bits_saving_instance,
};
use ursketch::protocol::{PlainUr, ProtocolParams, SupportVector, UrProtocol};
use ursketch::recovery::Backend;
use ursketch::rng::{domain, mix2, DetRng};
use ursketch::sketch::{parse_stream, Sketch, StreamCommand};

#[derive(Parser)]
#[command(
    name = "ursketch",
    version,
    about = "Experiments and verifiers for one-way support-finding protocols",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    /// Power-sum syndromes with verified decoding (never silently wrong).
    Rs,
    /// Ternary measurements with first-consistent decoding (smaller, can err).
    Gf3,
}

impl BackendArg {
    fn to_backend(self) -> Backend {
        match self {
            BackendArg::Rs => Backend::RsSyndrome,
            BackendArg::Gf3 => Backend::Gf3Brute,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    /// Sequential single-sample queries with repetition-class folding.
    Adaptive,
    /// One batched query of 8·m samples, pure filtering.
    Oneshot,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo failure-rate and message-size run for one (n, k).
    ///
    /// Each trial draws a fresh difference size in [1, n/4], a pair y ⊂ x
    /// with that difference, and a fresh protocol seed, then asks for k
    /// difference indices. Output: one JSON object {"n", "k", "trials",
    /// "failures", "empirical_rate", "message_bits"}.
    UrSim {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Rs)]
        backend: BackendArg,
        /// Reporting failure budget (sets the sample-size parameter t).
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Ingest a turnstile stream and answer support queries.
    ///
    /// Reads the line format `U <i> <+1|-1>` (update), `Q <k>` (query), `#`
    /// comments, from FILE or standard input. Emits one JSON object per
    /// query: {"query", "k", "found"} where "found" is a list of indices or
    /// null when the protocol honestly fails. The net vector must stay in
    /// {-1,0,1}^n. Queries may ask for at most --k indices.
    Sketch {
        /// Stream file ("-" or absent reads standard input).
        file: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        /// Largest k any single query may request.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Rs)]
        backend: BackendArg,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
    },
    /// Lossless subset-codec experiments (one recovery per round).
    Codec {
        #[command(subcommand)]
        command: CodecCommand,
    },
    /// Lossless k-batch subset-codec experiments.
    CodecK {
        #[command(subcommand)]
        command: CodecKCommand,
    },
    /// Families of m-sets with pairwise intersections below m/2.
    Codes {
        #[command(subcommand)]
        command: CodesCommand,
    },
    /// Indexing-reduction experiments on the padded product universe.
    Augindex {
        #[command(subcommand)]
        command: AugindexCommand,
    },
    /// Exact numerical verifiers; exit 0 iff every checked instance holds.
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// Message-size table: bits and bits/(t·log₂²(n/t)) per universe size.
    ///
    /// Output: CSV with header "n,bits,ratio".
    Scaling {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Comma-separated universe sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, value_enum, default_value_t = BackendArg::Rs)]
        backend: BackendArg,
    },
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Encode/decode random m-subsets and report the per-trial cost split.
    ///
    /// Output per trial: {"seed", "b", "residual_size", "s_bits",
    /// "baseline_bits", "savings_bits"} — b is the round success string,
    /// s_bits the side-information cost (size field + b + residual code),
    /// baseline_bits = log₂ C(n,m).
    Run {
        #[arg(long)]
        n: usize,
        /// Target failure scale; sets (m, K, R) through the parameter rules.
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CodecKCommand {
    /// As `codec run`, with k recoveries requested per round.
    ///
    /// Output per trial: {"seed", "b", "residual_size", "s_bits",
    /// "baseline_bits", "savings_bits"}.
    Run {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CodesCommand {
    /// Build a family by rejection sampling and write its binary encoding.
    ///
    /// Output: one JSON object {"u", "m", "size", "bits", "bytes"}.
    Build {
        #[arg(long)]
        u: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Destination file for the serialized family.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AugindexCommand {
    /// Hide a random bit string, encode it, and decode one target bit.
    ///
    /// Output per trial: {"success", "queries_used", "level_histogram",
    /// "distinct_T_count"}. In oneshot mode the single batched query asks
    /// for 8·m samples.
    Run {
        /// Universe size hint (padded exactly to this size).
        #[arg(long)]
        n: usize,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        beta: usize,
        /// Family set size per level.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Adaptivity bound on random uniform-X instances.
    ///
    /// Output: {"checked", "failures": [{"instance", "lhs", "rhs"}]}.
    Lemma1 {
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Masking overhead product against 2^(5K) for K = 1..=kmax.
    ///
    /// Output: {"checked", "failures": [{"k", "product", "bound"}]}.
    Pochhammer {
        #[arg(long, default_value_t = 64)]
        kmax: usize,
    },
    /// Subset-code savings bound on random W-distributions.
    ///
    /// Output: {"checked", "failures": [{"case", "n", "m", "lhs", "rhs"}]}.
    BitsSaving {
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A subcommand failure: `code` 2 for flag-level mistakes, 1 for runtime or
/// data errors.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn run(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

/// `Ok(true)` means success, `Ok(false)` an orderly check failure (exit 1).
type CliResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(failure) => {
            eprintln!("ursketch: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::UrSim { n, k, trials, seed, backend, delta } => {
            ur_sim(n, k, trials, seed, backend.to_backend(), delta)
        }
        Command::Sketch { file, n, k, seed, backend, delta } => {
            run_sketch(file, n, k, seed, backend.to_backend(), delta)
        }
        Command::Codec { command: CodecCommand::Run { n, delta, trials, seed } } => {
            codec_run(n, delta, trials, seed)
        }
        Command::CodecK { command: CodecKCommand::Run { n, k, trials, seed } } => {
            codec_k_run(n, k, trials, seed)
        }
        Command::Codes { command: CodesCommand::Build { u, m, seed, out } } => {
            codes_build(u, m, seed, &out)
        }
        Command::Augindex {
            command: AugindexCommand::Run { n, levels, beta, m, trials, mode, seed },
        } => augindex_run(n, levels, beta, m, trials, mode, seed),
        Command::Verify { command } => match command {
            VerifyCommand::Lemma1 { instances, seed } => verify_lemma1(instances, seed),
            VerifyCommand::Pochhammer { kmax } => verify_pochhammer(kmax),
            VerifyCommand::BitsSaving { cases, seed } => verify_bits_saving(cases, seed),
        },
        Command::Scaling { k, delta, ns, backend } => {
            scaling(k, delta, &ns, backend.to_backend())
        }
    }
}

/// Random `(x, y)` with `y ⊂ x`, `|x| = kept + diff`, `|x \ y| = diff`.
fn random_pair(
    rng: &mut DetRng,
    n: usize,
    kept: usize,
    diff: usize,
) -> (SupportVector, SupportVector) {
    let x = rng.sample_distinct(n, kept + diff);
    let mut y = x.clone();
    for _ in 0..diff {
        let at = rng.next_below(y.len() as u64) as usize;
        y.swap_remove(at);
    }
    let x = SupportVector::new(n, x).expect("sampled indices are distinct and in range");
    let y = SupportVector::new(n, y).expect("subset of a valid support");
    (x, y)
}

fn ur_sim(n: usize, k: usize, trials: u64, seed: u64, backend: Backend, delta: f64) -> CliResult {
    if trials == 0 {
        return Err(Failure::usage("--trials must be positive"));
    }
    let probe = ProtocolParams::new(n, k, delta, backend, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let message_bits = probe.message_bits();
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u64, Failure> {
            let trial_seed = mix2(seed, trial);
            let mut rng = DetRng::for_domain(trial_seed, domain::TRIAL);
            let max_diff = (n / 4).max(1) as u64;
            let diff = 1 + rng.next_below(max_diff) as usize;
            let kept = rng.next_below((n / 2 - diff + 1) as u64) as usize;
            let (x, y) = random_pair(&mut rng, n, kept, diff);
            let params = ProtocolParams::new(n, k, delta, backend, mix2(trial_seed, 1))
                .expect("validated by the probe construction");
            let proto = PlainUr::new(params);
            let message = proto.alice(&x).map_err(|e| Failure::run(e.to_string()))?;
            match proto.bob(&message, &y, k) {
                Ok(found) => {
                    let sound = found.len() == k.min(diff)
                        && found.iter().all(|&i| x.contains(i) && !y.contains(i));
                    if sound {
                        Ok(0)
                    } else {
                        Err(Failure::run(format!("trial {trial}: unsound answer {found:?}")))
                    }
                }
                Err(Error::ProtocolFail) => Ok(1),
                Err(other) => Err(Failure::run(format!("trial {trial}: {other}"))),
            }
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    println!(
        "{}",
        json!({
            "n": n,
            "k": k,
            "trials": trials,
            "failures": failures,
            "empirical_rate": failures as f64 / trials as f64,
            "message_bits": message_bits,
        })
    );
    Ok(true)
}

fn run_sketch(
    file: Option<PathBuf>,
    n: usize,
    k: usize,
    seed: u64,
    backend: Backend,
    delta: f64,
) -> CliResult {
    // Keep the default 16x recovery headroom when the universe allows it,
    // shrinking toward the minimum of 4 on small universes.
    let c_rec = (n / (2 * k.max(1))).clamp(4, 16);
    let params = ProtocolParams::with_c_rec(n, k, delta, c_rec, backend, seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let text = match file.as_deref() {
        Some(path) if path.as_os_str() != "-" => fs::read_to_string(path)
            .map_err(|e| Failure::run(format!("{}: {e}", path.display())))?,
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Failure::run(format!("standard input: {e}")))?;
            buf
        }
    };
    let commands = parse_stream(&text).map_err(|e| Failure::run(e.to_string()))?;
    let mut sketch = Sketch::new(params).map_err(|e| Failure::usage(e.to_string()))?;
    let mut query_index = 0usize;
    for command in commands {
        match command {
            StreamCommand::Update(update) => {
                sketch.update(update).map_err(|e| Failure::run(e.to_string()))?;
            }
            StreamCommand::Query(q) => {
                let found = match sketch.query_support_find(q) {
                    Ok(found) => json!(found),
                    Err(Error::ProtocolFail) => json!(null),
                    Err(other) => return Err(Failure::run(other.to_string())),
                };
                println!("{}", json!({ "query": query_index, "k": q, "found": found }));
                query_index += 1;
            }
        }
    }
    Ok(true)
}

fn codec_run(n: usize, delta: f64, trials: u64, seed: u64) -> CliResult {
    CodecParams::new(n, delta, seed).map_err(|e| Failure::usage(e.to_string()))?;
    let lines: Vec<String> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<String, Failure> {
            let trial_seed = mix2(seed, trial);
            let params = CodecParams::new(n, delta, trial_seed)
                .expect("validated by the probe construction");
            let mut rng = DetRng::for_domain(trial_seed, domain::SPLIT);
            let subset = SupportVector::new(n, rng.sample_distinct(n, params.m()))
                .expect("sampled in range");
            let proto = PlainUr::new(
                ProtocolParams::with_c_rec(n, 1, 0.01, 4, Backend::RsSyndrome, mix2(trial_seed, 1))
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
            let out = enc(&subset, &params, &proto).map_err(|e| Failure::run(e.to_string()))?;
            let decoded = dec(&out, &params, &proto).map_err(|e| Failure::run(e.to_string()))?;
            if decoded != subset.indices() {
                return Err(Failure::run(format!("trial {trial}: round-trip diverged")));
            }
            let cost = measure_cost(&out, n, params.m());
            let b: String =
                out.success.iter().map(|&bit| if bit { '1' } else { '0' }).collect();
            Ok(json!({
                "seed": trial_seed,
                "b": b,
                "residual_size": out.residual.len(),
                "s_bits": cost.residual_bits,
                "baseline_bits": cost.baseline_bits,
                "savings_bits": cost.savings_bits,
            })
            .to_string())
        })
        .collect::<Result<_, _>>()?;
    for line in lines {
        println!("{line}");
    }
    Ok(true)
}

fn codec_k_run(n: usize, k: usize, trials: u64, seed: u64) -> CliResult {
    CodecKParams::new(n, k, seed).map_err(|e| Failure::usage(e.to_string()))?;
    let lines: Vec<String> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<String, Failure> {
            let trial_seed = mix2(seed, trial);
            let params = CodecKParams::new(n, k, trial_seed)
                .expect("validated by the probe construction");
            let mut rng = DetRng::for_domain(trial_seed, domain::SPLIT);
            let subset = SupportVector::new(n, rng.sample_distinct(n, params.m()))
                .expect("sampled in range");
            let proto = PlainUr::new(
                ProtocolParams::with_c_rec(n, k, 0.5, 4, Backend::RsSyndrome, mix2(trial_seed, 1))
                    .map_err(|e| Failure::usage(e.to_string()))?,
            );
            let out = enc_k(&subset, &params, &proto).map_err(|e| Failure::run(e.to_string()))?;
            let decoded =
                dec_k(&out, &params, &proto).map_err(|e| Failure::run(e.to_string()))?;
            if decoded != subset.indices() {
                return Err(Failure::run(format!("trial {trial}: round-trip diverged")));
            }
            let cost = measure_cost(&out, n, params.m());
            let b: String =
                out.success.iter().map(|&bit| if bit { '1' } else { '0' }).collect();
            Ok(json!({
                "seed": trial_seed,
                "b": b,
                "residual_size": out.residual.len(),
                "s_bits": cost.residual_bits,
                "baseline_bits": cost.baseline_bits,
                "savings_bits": cost.savings_bits,
            })
            .to_string())
        })
        .collect::<Result<_, _>>()?;
    for line in lines {
        println!("{line}");
    }
    Ok(true)
}

fn codes_build(u: usize, m: usize, seed: u64, out: &PathBuf) -> CliResult {
    let family = match build_family(u, m, seed) {
        Ok(family) => family,
        Err(e @ Error::Parameter(_)) => return Err(Failure::usage(e.to_string())),
        Err(e) => return Err(Failure::run(e.to_string())),
    };
    let bytes = family.to_bytes();
    fs::write(out, &bytes).map_err(|e| Failure::run(format!("{}: {e}", out.display())))?;
    println!(
        "{}",
        json!({
            "u": u,
            "m": m,
            "size": family.len(),
            "bits": family.bits(),
            "bytes": bytes.len(),
        })
    );
    Ok(true)
}

fn augindex_run(
    n: usize,
    levels: usize,
    beta: usize,
    m: usize,
    trials: u64,
    mode: Mode,
    seed: u64,
) -> CliResult {
    let params =
        make_universe(n, levels, beta, m, seed).map_err(|e| Failure::usage(e.to_string()))?;
    let protocol_k = match mode {
        Mode::Adaptive => 1,
        Mode::Oneshot => 8 * m,
    };
    let lines: Vec<String> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<String, Failure> {
            let trial_seed = mix2(seed, trial);
            let instance = AugIndexInstance::random(&params, trial_seed);
            let proto = PlainUr::new(
                ProtocolParams::new(
                    params.n(),
                    protocol_k,
                    0.01,
                    Backend::RsSyndrome,
                    mix2(trial_seed, 1),
                )
                .map_err(|e| Failure::usage(e.to_string()))?,
            );
            let message = charlie_encode(&instance, &params, &proto)
                .map_err(|e| Failure::run(e.to_string()))?;
            let run = match mode {
                Mode::Adaptive => diane_decode_adaptive(
                    &message,
                    instance.j_star(),
                    instance.suffix(),
                    &params,
                    &proto,
                ),
                Mode::Oneshot => diane_decode_oneshot(
                    &message,
                    instance.j_star(),
                    instance.suffix(),
                    &params,
                    &proto,
                    protocol_k,
                ),
            }
            .map_err(|e| Failure::run(e.to_string()))?;
            Ok(json!({
                "success": run.outcome == Some(instance.target_bit()),
                "queries_used": run.queries_used,
                "level_histogram": run.level_histogram,
                "distinct_T_count": run.distinct_t,
            })
            .to_string())
        })
        .collect::<Result<_, _>>()?;
    for line in lines {
        println!("{line}");
    }
    Ok(true)
}

fn verify_lemma1(instances: u64, seed: u64) -> CliResult {
    let failures: Vec<serde_json::Value> = (0..instances)
        .into_par_iter()
        .filter_map(|i| {
            let (f, d) = random_adaptivity_instance(mix2(seed, i));
            match check_adaptivity_bound(&f, &d) {
                Ok(record) if record.holds => None,
                Ok(record) => {
                    Some(json!({ "instance": i, "lhs": record.lhs, "rhs": record.rhs }))
                }
                Err(e) => Some(json!({ "instance": i, "error": e.to_string() })),
            }
        })
        .collect();
    println!("{}", json!({ "checked": instances, "failures": failures }));
    Ok(failures.is_empty())
}

fn verify_pochhammer(kmax: usize) -> CliResult {
    if kmax == 0 {
        return Err(Failure::usage("--kmax must be positive"));
    }
    let failures: Vec<serde_json::Value> = (1..=kmax)
        .filter_map(|k| match check_pochhammer(k) {
            Ok(record) if record.holds => None,
            Ok(record) => {
                Some(json!({ "k": k, "product": record.product, "bound": record.bound }))
            }
            Err(e) => Some(json!({ "k": k, "error": e.to_string() })),
        })
        .collect();
    println!("{}", json!({ "checked": kmax, "failures": failures }));
    Ok(failures.is_empty())
}

fn verify_bits_saving(cases: u64, seed: u64) -> CliResult {
    let failures: Vec<serde_json::Value> = (0..cases)
        .into_par_iter()
        .filter_map(|case| {
            let (n, m, pmf) = random_bits_saving_instance(mix2(seed, case));
            match check_bits_saving(n, m, &pmf) {
                Ok(record) if record.holds => None,
                Ok(record) => Some(json!({
                    "case": case, "n": n, "m": m, "lhs": record.lhs, "rhs": record.rhs,
                })),
                Err(e) => Some(json!({ "case": case, "n": n, "m": m, "error": e.to_string() })),
            }
        })
        .collect();
    println!("{}", json!({ "checked": cases, "failures": failures }));
    Ok(failures.is_empty())
}

fn scaling(k: usize, delta: f64, ns: &[usize], backend: Backend) -> CliResult {
    println!("n,bits,ratio");
    for &n in ns {
        let params = ProtocolParams::new(n, k, delta, backend, 0)
            .map_err(|e| Failure::usage(format!("n = {n}: {e}")))?;
        let bits = params.message_bits();
        let t = params.t() as f64;
        let ratio = bits as f64 / (t * (n as f64 / t).log2().powi(2));
        println!("{n},{bits},{ratio:.6}");
    }
    Ok(true)
}
