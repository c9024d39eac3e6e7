//! `tropicode` — pooled-testing schedules over the min-plus semiring.
//!
//! Subcommands mirror the library: `construct` builds block designs
//! (deterministic families or seeded random ones), `verify` runs the
//! exhaustive disjunctness check, `schedule`/`encode`/`decode` handle the
//! delay-matrix codec, `estimate` measures error rates, and
//! `plan`/`compare` evaluate the test-count bounds.
//!
//! Exit codes: 0 success, 1 domain error (infeasible parameters,
//! ambiguous decode, failed precondition), 2 usage error.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use num::traits::ToPrimitive;

use tropicode::codec::ScheduleMatrix;
use tropicode::design::{
    check_disjunct, design_sha256, fano_plane, graham_sloane, kautz_singleton, BlockDesign,
    DisjunctLevel,
};
use tropicode::eval::{compare_methods, design_failure_rate, exhaustive_confusion, CompareOptions};
use tropicode::prob::{generate_design, plan, default_delta, ConstructionParams};
use tropicode::tropical::TropicalVector;

#[derive(Parser)]
#[command(
    name = "tropicode",
    version,
    about = "Pooled-testing schedule design, encoding, decoding and planning over the min-plus semiring"
)]
struct Cli {
    /// Seed for randomized commands (falls back to fresh entropy).
    #[arg(long, global = true, env = "TROPICODE_SEED")]
    seed: Option<u64>,

    /// Worker threads for parallel estimation (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a block design and write it in design-file form.
    Construct {
        #[command(subcommand)]
        family: ConstructCmd,
    },
    /// Exhaustively check (double) disjunctness of a design.
    Verify {
        /// Disjunctness order d.
        #[arg(long)]
        d: usize,
        /// Residual threshold: 1 = disjunct, 2 = doubly disjunct.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        threshold: u8,
        /// Design file (defaults to stdin).
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Turn a design into its power-of-two delay schedule.
    Schedule {
        /// Design file (defaults to stdin).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Schedule file (defaults to stdout); a `.meta` sidecar is
        /// written alongside when a path is given.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute test outcomes S ⊙ x for a Ct vector.
    Encode {
        /// Schedule file.
        #[arg(long)]
        schedule: PathBuf,
        /// Ct vector, e.g. `3,inf,0`.
        #[arg(long)]
        x: String,
    },
    /// Recover the infected set from test outcomes.
    Decode {
        /// Schedule file.
        #[arg(long)]
        schedule: PathBuf,
        /// Outcome vector, e.g. `12,inf,9`.
        #[arg(long)]
        y: String,
        /// Maximum number of infected.
        #[arg(long)]
        d: usize,
    },
    /// Measure error rates.
    Estimate {
        #[command(subcommand)]
        which: EstimateCmd,
    },
    /// Evaluate the test-count bounds for (n, d, epsilon).
    Plan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = PlanFormat::Csv)]
        format: PlanFormat,
    },
    /// Compare the three construction routes at (n, d, epsilon).
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        epsilon: f64,
        /// Monte Carlo trials per probabilistic route.
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
}

#[derive(Subcommand)]
enum ConstructCmd {
    /// The 7-point projective plane (7 blocks on 7 vertices).
    Fano(OutputArgs),
    /// Residue-class design: w-subsets of {1..t} with index sum = residue mod t.
    GrahamSloane {
        #[arg(long)]
        t: usize,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        residue: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reed-Solomon concatenation: q^k blocks on q^2 vertices.
    KautzSingleton {
        /// Field size (prime power).
        #[arg(long)]
        q: u64,
        /// Polynomial degree bound (1 <= k <= q).
        #[arg(long)]
        k: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Vertex-doubling map onto 2t vertices (disjunct -> doubly disjunct).
    Double {
        /// Design file (defaults to stdin).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seeded random design from the weight-symmetric row distribution.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Test count (defaults to the planner recommendation, needs --epsilon).
        #[arg(long)]
        t: Option<usize>,
        /// Error budget used to derive the default slack and test count.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Explicit slack above the minimum pattern mass (overrides the default).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value_t = TargetArg::Doubly)]
        target: TargetArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Subcommand)]
enum EstimateCmd {
    /// Exhaustively count colliding outcome pairs over the bounded sparse class.
    Confusion {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        ct_max: u64,
    },
    /// Monte Carlo rate of generated designs failing the (d-1)-doubly-disjunct check.
    FailureRate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Test count (defaults to the planner recommendation).
        #[arg(long)]
        t: Option<usize>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DesignFormat::Text)]
    format: DesignFormat,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DesignFormat {
    /// Design file: header `t n`, one block per line.
    Text,
    /// 0/1 incidence matrix, one test row per line.
    Incidence,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanFormat {
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    /// Aim for (d-1)-doubly-disjunct designs: pattern mass (2+delta)/t.
    Doubly,
    /// Aim for plain (d-1)-disjunct designs: pattern mass (1+delta)/t.
    Disjunct,
}

impl From<TargetArg> for DisjunctLevel {
    fn from(v: TargetArg) -> Self {
        match v {
            TargetArg::Doubly => DisjunctLevel::DoublyDisjunct,
            TargetArg::Disjunct => DisjunctLevel::Disjunct,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // best effort: a second init in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let seed = cli.seed.unwrap_or_else(rand::random);
    match cli.command {
        Command::Construct { family } => construct(family, seed),
        Command::Verify { d, threshold, input } => {
            let design = read_design(input.as_deref())?;
            let level = DisjunctLevel::from_threshold(threshold as usize)
                .expect("threshold range-checked by clap");
            let report = check_disjunct(&design, d, level)?;
            println!("holds: {}", report.holds);
            if let Some(w) = report.witness {
                let covering: Vec<String> =
                    w.covering.iter().map(|j| (j + 1).to_string()).collect();
                println!(
                    "witness: block {} minus blocks {} leaves {} element(s)",
                    w.z + 1,
                    covering.join(","),
                    w.residual.len()
                );
            }
            Ok(())
        }
        Command::Schedule { input, out } => {
            let design = read_design(input.as_deref())?;
            let schedule = ScheduleMatrix::from_design(&design)?;
            write_output(out.as_deref(), &schedule.to_text())?;
            if let Some(path) = out {
                let meta = format!(
                    "format=schedule-meta.v1\nindex_base=1\ndelay_rule=pow2(i+j*t)\nt={}\nn={}\ndesign_sha256={}\n",
                    schedule.t(),
                    schedule.n(),
                    design_sha256(&design)
                );
                fs::write(sidecar_path(&path), meta)?;
            }
            Ok(())
        }
        Command::Encode { schedule, x } => {
            let s = read_schedule(&schedule)?;
            let x: TropicalVector = x.parse()?;
            println!("{}", s.encode(&x)?);
            Ok(())
        }
        Command::Decode { schedule, y, d } => {
            let s = read_schedule(&schedule)?;
            let y: TropicalVector = y.parse()?;
            let result = s.decode(&y, d)?;
            if !result.unique {
                return Err(format!(
                    "ambiguous decode: several vectors with <= {d} finite entries produce this outcome (smallest: {})",
                    result.x_hat
                )
                .into());
            }
            println!("{}", result.x_hat);
            Ok(())
        }
        Command::Estimate { which } => estimate(which, seed),
        Command::Plan { n, d, epsilon, format } => {
            let report = plan(n, d, epsilon)?;
            match format {
                PlanFormat::Csv => {
                    println!("{}", tropicode::prob::PlanReport::csv_header());
                    println!("{}", report.csv_row());
                }
                PlanFormat::Text => println!("{report}"),
            }
            Ok(())
        }
        Command::Compare { n, d, epsilon, trials } => {
            let report = compare_methods(
                n,
                d,
                epsilon,
                &CompareOptions { trials, seed, ..CompareOptions::default() },
            )?;
            // keep the CSV clean; the seed still gets recorded
            eprintln!("seed={seed}");
            print!("{}", report.to_csv());
            Ok(())
        }
    }
}

fn construct(cmd: ConstructCmd, seed: u64) -> Result<(), Box<dyn std::error::Error>> {
    match cmd {
        ConstructCmd::Fano(output) => emit_design(&fano_plane(), &output),
        ConstructCmd::GrahamSloane { t, w, residue, output } => {
            emit_design(&graham_sloane(t, w, residue)?, &output)
        }
        ConstructCmd::KautzSingleton { q, k, output } => {
            emit_design(&kautz_singleton(q, k)?, &output)
        }
        ConstructCmd::Double { input, output } => {
            let design = read_design(input.as_deref())?;
            emit_design(&design.double(), &output)
        }
        ConstructCmd::Random { n, d, t, epsilon, delta, target, output } => {
            let t = match (t, epsilon) {
                (Some(t), _) => t,
                (None, Some(eps)) => plan(n, d, eps)?.t_recommended,
                (None, None) => {
                    return Err("construct random needs --t or --epsilon".into());
                }
            };
            let delta_f64 = match (delta, epsilon) {
                (Some(dl), _) => dl,
                (None, Some(eps)) => default_delta(n, d, eps),
                (None, None) => return Err("construct random needs --delta or --epsilon".into()),
            };
            let delta_exact = BigRational::from_float(delta_f64)
                .ok_or("delta must be a finite nonnegative number")?;
            let params = ConstructionParams::new(n, d, t, delta_exact, target.into())?;
            let generated = generate_design(&params, seed)?;
            emit_design(&generated.design, &output)?;
            let meta = format!(
                "format=design-meta.v1\nseed={}\nn={}\nd={}\nt={}\ndelta={:.9}\nepsilon={}\ntarget={}\nduplicate_columns={}\nempty_columns={}\n",
                generated.seed,
                n,
                d,
                t,
                delta_f64,
                epsilon.map_or_else(|| "NA".into(), |e| e.to_string()),
                DisjunctLevel::from(target),
                generated.duplicate_columns,
                generated.empty_columns,
            );
            match &output.out {
                Some(path) => fs::write(sidecar_path(path), meta)?,
                None => eprint!("{meta}"),
            }
            Ok(())
        }
    }
}

fn estimate(cmd: EstimateCmd, seed: u64) -> Result<(), Box<dyn std::error::Error>> {
    match cmd {
        EstimateCmd::Confusion { schedule, d, ct_max } => {
            let s = read_schedule(&schedule)?;
            let est = exhaustive_confusion(&s, d, ct_max)?;
            print!("{}", est.report_lines());
            Ok(())
        }
        EstimateCmd::FailureRate { n, d, t, epsilon, trials } => {
            let t = match t {
                Some(t) => t,
                None => plan(n, d, epsilon)?.t_recommended,
            };
            let params = ConstructionParams::with_default_delta(
                n,
                d,
                t,
                epsilon,
                DisjunctLevel::DoublyDisjunct,
            )?;
            let est = design_failure_rate(&params, trials, seed)?;
            println!("seed={seed}");
            println!("t={t}");
            println!(
                "delta={:.9}",
                params.delta().to_f64().unwrap_or(f64::NAN)
            );
            print!("{}", est.report_lines());
            Ok(())
        }
    }
}

fn emit_design(design: &BlockDesign, output: &OutputArgs) -> Result<(), Box<dyn std::error::Error>> {
    let text = match output.format {
        DesignFormat::Text => design.to_text(),
        DesignFormat::Incidence => {
            let mut out = String::new();
            for row in design.incidence_rows() {
                let cells: Vec<String> = row.iter().map(|b| b.to_string()).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
            out
        }
    };
    write_output(output.out.as_deref(), &text)
}

fn read_design(path: Option<&Path>) -> Result<BlockDesign, Box<dyn std::error::Error>> {
    Ok(BlockDesign::from_text(&read_input(path)?)?)
}

fn read_schedule(path: &Path) -> Result<ScheduleMatrix, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(ScheduleMatrix::from_text(&text)?)
}

fn read_input(path: Option<&Path>) -> Result<String, Box<dyn std::error::Error>> {
    match path {
        Some(p) => {
            Ok(fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?)
        }
        None => {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            Ok(buf)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Box<dyn std::error::Error>> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| format!("cannot write {}: {e}", p.display()).into()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map_or_else(String::new, |n| {
        n.to_string_lossy().into_owned()
    });
    name.push_str(".meta");
    path.with_file_name(name)
}
