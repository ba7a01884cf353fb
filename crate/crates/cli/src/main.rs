//! `submatch` command-line front end.
//!
//! Exit codes: 0 on success, 1 when the analysis itself fails (architecture
//! mismatch, infeasible forge target, output fit out of tolerance), 2 on
//! usage errors and unreadable or malformed input files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use submatch::experiments::{generate_dataset, twin_experiment, TrainConfig, TwinSummary};
use submatch::forge::{
    corrected_fixture, example1_fixture, forge_twin, verify_counterexample, CounterexampleVerdict, Fixture,
    ForgeTarget,
};
use submatch::network::record_activations;
use submatch::repmatch::compare_networks;
use submatch::{Dataset, Error, Matrix, Network, DEFAULT_OUTPUT_TOL, DEFAULT_RANK_TOL};

#[derive(Parser)]
#[command(name = "submatch", version, about = "Subspace match analysis of neural representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare two networks layer by layer on a dataset.
    Analyze {
        net_a: PathBuf,
        net_b: PathBuf,
        data: PathBuf,
        /// Relative rank tolerance.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Show the built-in 2-2-2 fixtures and their verdicts.
    Example1 {
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Output-equality tolerance.
        #[arg(long, default_value_t = DEFAULT_OUTPUT_TOL)]
        out_tol: f64,
        /// Write both verdicts as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build a twin of a one-hidden-layer reference network whose hidden
    /// activations follow a target pattern.
    Forge {
        data: PathBuf,
        reference: PathBuf,
        /// Pattern document: {"pattern": [[...], ...]}, one row per hidden neuron.
        target: PathBuf,
        /// Where the forged network is written.
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_OUTPUT_TOL)]
        out_tol: f64,
    },
    /// Train pairs of networks from different seeds and compare them.
    Twins {
        /// Layer widths, input first.
        #[arg(long, default_value = "2,16,16,2", value_parser = parse_sizes)]
        sizes: Sizes,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        /// Seed pair `a,b`; repeat the flag or separate pairs with `;`.
        #[arg(long = "seeds", value_parser = parse_seed_pairs)]
        seeds: Vec<Vec<(u64, u64)>>,
        /// Points per class in the generated dataset.
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Dataset seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        /// Per-layer CSV summary.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full JSON summary.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let sizes = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad width {t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err("need at least two positive widths".into());
    }
    Ok(Sizes(sizes))
}

fn parse_seed_pairs(s: &str) -> Result<Vec<(u64, u64)>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [a, b] => {
                    let a = a.parse().map_err(|e| format!("bad seed {a:?}: {e}"))?;
                    let b = b.parse().map_err(|e| format!("bad seed {b:?}: {e}"))?;
                    Ok((a, b))
                }
                _ => Err(format!("seed pair {p:?} is not of the form a,b")),
            }
        })
        .collect()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Io(_) | Error::Csv(_) => 2,
            Error::Input(_) | Error::InfeasibleRow { .. } | Error::Residual { .. } => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

/// Reading errors name the file they came from.
fn read<T>(path: &Path, load: impl FnOnce(&Path) -> submatch::Result<T>) -> Result<T, Failure> {
    load(path).map_err(|e| {
        let f = Failure::from(e);
        Failure { code: f.code, message: format!("{}: {}", path.display(), f.message) }
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn check_tol(name: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be a finite non-negative number")))
    }
}

fn analyze(net_a: &Path, net_b: &Path, data: &Path, tol: f64, json: Option<&Path>) -> Result<(), Failure> {
    check_tol("tol", tol)?;
    let a = read(net_a, |p| Network::load(p))?;
    let b = read(net_b, |p| Network::load(p))?;
    let d = read(data, |p| Dataset::load(p))?;
    let report = compare_networks(&a, &b, &d, tol)?;
    print!("{}", report.to_table());
    if let Some(p) = json {
        write_text(p, &report.to_json())?;
    }
    Ok(())
}

fn format_matrix(m: &Matrix) -> String {
    m.row_iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:>6}")).collect();
            format!("      [{}]", cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn print_verdict(v: &CounterexampleVerdict) {
    println!(
        "  outputs_equal: {} (max deviation {:e}, tolerance {:e})",
        v.outputs_equal, v.max_output_deviation, v.tolerance
    );
    for h in &v.hidden {
        println!(
            "  hidden layer {}: exact_match {}, isomorphic {}, dims {:?}, score {:.6}",
            h.layer, h.exact_match, h.isomorphic, h.dims, h.score
        );
    }
}

fn show_fixture(title: &str, f: &Fixture, tol: f64, out_tol: f64) -> Result<CounterexampleVerdict, Failure> {
    println!("== {title} ==");
    for (name, net) in [("net_a", &f.net_a), ("net_b", &f.net_b)] {
        let rec = record_activations(net, &f.data)?;
        println!("  {name} (rows: neurons, columns: inputs)");
        for layer in 1..rec.num_layers() {
            println!("    layer {layer}");
            println!("{}", format_matrix(rec.post(layer).expect("layer in range")));
        }
    }
    let v = verify_counterexample(&f.net_a, &f.net_b, &f.data, out_tol, tol)?;
    print_verdict(&v);
    Ok(v)
}

#[derive(Serialize)]
struct Example1Report {
    printed: CounterexampleVerdict,
    corrected: CounterexampleVerdict,
}

fn example1(tol: f64, out_tol: f64, json: Option<&Path>) -> Result<(), Failure> {
    check_tol("tol", tol)?;
    check_tol("out-tol", out_tol)?;
    let printed = show_fixture("printed fixture", &example1_fixture(), tol, out_tol)?;
    println!(
        "  note: recomputed from its weights, the printed fixture's hidden activations\n  \
         are not the ones usually quoted for it, and its outputs differ between the\n  \
         two networks; the values above are the computed ones."
    );
    println!();
    let corrected = show_fixture("corrected fixture", &corrected_fixture(), tol, out_tol)?;
    if let Some(p) = json {
        let doc = Example1Report { printed, corrected };
        write_text(p, &serde_json::to_string_pretty(&doc).expect("verdicts serialize"))?;
    }
    Ok(())
}

fn forge(
    data: &Path,
    reference: &Path,
    target: &Path,
    out: &Path,
    tol: f64,
    out_tol: f64,
) -> Result<(), Failure> {
    check_tol("tol", tol)?;
    check_tol("out-tol", out_tol)?;
    let d = read(data, |p| Dataset::load(p))?;
    let r = read(reference, |p| Network::load(p))?;
    let t = read(target, |p| ForgeTarget::load(p))?;
    let twin = forge_twin(&d, &r, &t, tol)?;
    twin.save(out).map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
    println!("forged network written to {}", out.display());
    let v = verify_counterexample(&r, &twin, &d, out_tol, tol)?;
    print_verdict(&v);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn twins(
    sizes: Sizes,
    epochs: usize,
    lr: f64,
    seeds: Vec<Vec<(u64, u64)>>,
    points: usize,
    seed: u64,
    tol: f64,
    out: Option<&Path>,
    json: Option<&Path>,
) -> Result<(), Failure> {
    check_tol("tol", tol)?;
    if points == 0 {
        return Err(Failure::usage("--points must be positive"));
    }
    let config = TrainConfig::new(sizes.0, lr, epochs, 0).map_err(|e| Failure::usage(e.to_string()))?;
    let mut pairs: Vec<(u64, u64)> = seeds.into_iter().flatten().collect();
    if pairs.is_empty() {
        pairs = (0..5).map(|i| (2 * i + 1, 2 * i + 2)).collect();
    }
    let data = generate_dataset(points, seed)?;
    let summary: TwinSummary = twin_experiment(&config, &data, &pairs, tol)?;
    println!("layer  mean_score  min_score  max_score");
    for l in &summary.layers {
        println!("{:>5}  {:>10.6}  {:>9.6}  {:>9.6}", l.layer, l.mean_score, l.min_score, l.max_score);
    }
    if let Some(p) = out {
        summary.write_csv(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = json {
        write_text(p, &summary.to_json())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { net_a, net_b, data, tol, json } => analyze(&net_a, &net_b, &data, tol, json.as_deref()),
        Command::Example1 { tol, out_tol, json } => example1(tol, out_tol, json.as_deref()),
        Command::Forge { data, reference, target, out, tol, out_tol } => {
            forge(&data, &reference, &target, &out, tol, out_tol)
        }
        Command::Twins { sizes, epochs, lr, seeds, points, seed, tol, out, json } => {
            twins(sizes, epochs, lr, seeds, points, seed, tol, out.as_deref(), json.as_deref())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
