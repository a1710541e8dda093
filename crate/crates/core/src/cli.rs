//! The `pipkit` command line. Vertex labels on the command line and in text
//! edge lists are 1-based.

use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{csv_writer, run_bench, BenchAlgo, BenchSpec};
use crate::error::{PipError, Result};
use crate::gen::{gen_array, gen_graph, ArrayKind, GraphKind};
use crate::graph_oracle::{build_owned, CsrGraph, OracleConfig, OwnedOracle};
use crate::io::{read_array, read_graph, write_array, write_graph};
use crate::merge::{merge, MergeConfig};
use crate::reference::{ref_components, ref_kruskal, ref_merge};
use crate::shuffle::{buffered_shuffle, parallel_shuffle, sequential_knuth, SeededTargets};
use crate::verify::{all_passed, partition_matches, verify_all, Ctx, Fault, Scale};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "pipkit", version, about = "Parallel in-place merge, shuffle and graph oracle toolkit")]
pub struct Cli {
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, env = "PIP_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a random array file.
    GenArray {
        #[arg(long)]
        size: usize,
        #[arg(long, value_enum, default_value_t = ArrayKind::RandomDistinct)]
        kind: ArrayKind,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a random graph file.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, value_enum, default_value_t = GraphKind::Gnm)]
        kind: GraphKind,
        #[arg(long, default_value_t = 1000)]
        max_weight: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Merge the two sorted runs of an array file.
    Merge {
        #[arg(short, long)]
        input: PathBuf,
        /// Length of the first run; defaults to half the array.
        #[arg(long)]
        left: Option<usize>,
        /// Enable precomputed coins, the round cap and cached targets.
        #[arg(long)]
        tuned: bool,
        #[arg(long)]
        verify: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Shuffle an array file.
    Shuffle {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = ShuffleVariant::Buffered)]
        variant: ShuffleVariant,
        #[arg(long)]
        verify: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Graph oracle commands.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Time algorithms and print CSV records.
    Bench(BenchArgs),
    /// Run the acceptance suite.
    VerifyAll {
        #[arg(long, value_enum, default_value_t = ScaleArg::Smoke)]
        scale: ScaleArg,
        /// Only these criterion ids.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
        /// Corrupt a codec fixture to check that the suite notices.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ShuffleVariant {
    Parallel,
    Buffered,
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Smoke,
    Full,
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Build the oracle and print its statistics as JSON.
    Build {
        #[command(flatten)]
        graph: GraphInput,
        /// Write the array with its adjacency lists sorted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Is edge (u, v) in the minimum spanning forest?
    QueryMsf {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        u: usize,
        #[arg(long)]
        v: usize,
    },
    /// Component label of a vertex.
    QueryConn {
        #[command(flatten)]
        graph: GraphInput,
        #[arg(long)]
        v: usize,
    },
    /// Check every query against reference algorithms.
    Verify {
        #[command(flatten)]
        graph: GraphInput,
        /// Compare MSF membership of every edge with Kruskal.
        #[arg(long)]
        against_kruskal: bool,
    },
}

#[derive(Args, Debug)]
pub struct GraphInput {
    /// Binary graph file or a `u v w` text edge list.
    #[arg(short, long)]
    input: PathBuf,
    /// Frontier constant of the center search.
    #[arg(long, default_value_t = 4)]
    frontier_factor: usize,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',')]
    algo: Vec<BenchAlgo>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Thread counts to sweep; defaults to the global thread count.
    #[arg(long = "thread-counts", value_delimiter = ',')]
    thread_counts: Vec<usize>,
    /// Seeds; defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    verify: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &PipError) -> i32 {
    match e {
        PipError::Invariant(_) => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let threads = match cli.threads {
        Some(0) => return Err(PipError::Input("--threads must be positive".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |c| c.get()),
    };
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| PipError::Invariant(e.to_string()))?;
    pool.install(|| dispatch(cli, threads, out, err))
}

fn verdict(out: &mut (dyn Write + Send), ok: bool, what: &str) -> Result<i32> {
    writeln!(out, "{what}: {}", if ok { "ok" } else { "MISMATCH" })?;
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

fn vertex(label: usize, n: usize) -> Result<usize> {
    if label == 0 || label > n {
        return Err(PipError::Input(format!("vertex {label} outside 1..={n}")));
    }
    Ok(label - 1)
}

type EdgeList = Vec<(usize, usize, u64)>;

fn load_oracle(g: &GraphInput, seed: u64) -> Result<(EdgeList, OwnedOracle)> {
    let words = read_graph(&g.input)?;
    let edges = CsrGraph::from_words(words.clone())?.edges();
    let cfg = OracleConfig { frontier_factor: g.frontier_factor, ..OracleConfig::seeded(seed) };
    Ok((edges, build_owned(words, &cfg)?))
}

fn dispatch(cli: &Cli, threads: usize, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let seed = cli.seed;
    match &cli.command {
        Command::GenArray { size, kind, output } => {
            write_array(output, &gen_array(*size, seed, *kind))?;
        }
        Command::GenGraph { n, m, kind, max_weight, output } => {
            write_graph(output, gen_graph(*kind, *n, *m, seed, *max_weight)?.words())?;
        }
        Command::Merge { input, left, tuned, verify, output } => {
            let mut data = read_array(input)?;
            let left = left.unwrap_or(data.len() / 2);
            if left > data.len() {
                return Err(PipError::Input(format!("--left {left} exceeds the array length {}", data.len())));
            }
            let want = verify.then(|| ref_merge(&data[..left], &data[left..]));
            let cfg = if *tuned { MergeConfig::tuned(seed) } else { MergeConfig { seed, ..MergeConfig::default() } };
            let stats = merge(&mut data, left, &cfg)?;
            writeln!(
                out,
                "merged {} elements: path {:?}, block {}, rounds {}",
                data.len(),
                stats.path,
                stats.block_size,
                stats.rounds
            )?;
            if let Some(path) = output {
                write_array(path, &data)?;
            }
            if let Some(want) = want {
                return verdict(out, want == data, "verify");
            }
        }
        Command::Shuffle { input, variant, verify, output } => {
            let mut data = read_array(input)?;
            let original = verify.then(|| data.clone());
            match variant {
                ShuffleVariant::Parallel => {
                    parallel_shuffle(&mut data, seed)?;
                }
                ShuffleVariant::Buffered => {
                    if buffered_shuffle(&mut data, seed)?.fallback {
                        writeln!(err, "note: input too small for buffers, used the heap-backed shuffle")?;
                    }
                }
                ShuffleVariant::Sequential => sequential_knuth(&mut data, &SeededTargets::new(seed)),
            }
            writeln!(out, "shuffled {} elements", data.len())?;
            if let Some(path) = output {
                write_array(path, &data)?;
            }
            if let Some(mut want) = original {
                let ok = if *variant == ShuffleVariant::Parallel {
                    sequential_knuth(&mut want, &SeededTargets::new(seed));
                    want == data
                } else {
                    let mut got = data.clone();
                    got.sort_unstable();
                    want.sort_unstable();
                    got == want
                };
                return verdict(out, ok, "verify");
            }
        }
        Command::Graph(g) => return graph(g, seed, out),
        Command::Bench(b) => {
            let spec = BenchSpec {
                algos: b.algo.clone(),
                sizes: b.sizes.clone(),
                threads: if b.thread_counts.is_empty() { vec![threads] } else { b.thread_counts.clone() },
                seeds: if b.seeds.is_empty() { vec![seed] } else { b.seeds.clone() },
                verify: b.verify,
            };
            let mut sink: Box<dyn Write> = match &b.output {
                Some(p) => Box::new(std::fs::File::create(p)?),
                None => Box::new(&mut *out),
            };
            let mut w = csv_writer(&mut sink);
            let recs = run_bench(&spec, |r| {
                w.serialize(r).map_err(|e| PipError::Io(e.into()))?;
                w.flush()?;
                Ok(())
            })?;
            drop(w);
            if recs.iter().any(|r| r.verified == "fail") {
                return Ok(EXIT_VERIFY);
            }
        }
        Command::VerifyAll { scale, only, inject_fault } => {
            let ctx = Ctx {
                scale: if *scale == ScaleArg::Full { Scale::Full } else { Scale::Smoke },
                fault: if *inject_fault { Fault::CorruptCodec } else { Fault::None },
            };
            let results = verify_all(&ctx, only.as_deref(), |r| {
                let _ = writeln!(out, "{}", r.line());
            });
            let passed = results.iter().filter(|r| r.pass).count();
            writeln!(out, "{passed}/{} criteria passed", results.len())?;
            return Ok(if all_passed(&results) { EXIT_OK } else { EXIT_VERIFY });
        }
    }
    Ok(EXIT_OK)
}

fn graph(cmd: &GraphCommand, seed: u64, out: &mut (dyn Write + Send)) -> Result<i32> {
    match cmd {
        GraphCommand::Build { graph, output } => {
            let (_, oracle) = load_oracle(graph, seed)?;
            let stats = serde_json::to_string(&oracle.stats()).map_err(|e| PipError::Invariant(e.to_string()))?;
            writeln!(out, "{stats}")?;
            if let Some(path) = output {
                write_graph(path, &oracle.into_words())?;
            }
        }
        GraphCommand::QueryMsf { graph, u, v } => {
            let (_, oracle) = load_oracle(graph, seed)?;
            let n = oracle.n();
            let in_msf = match oracle.msf_query(vertex(*u, n)?, vertex(*v, n)?) {
                Err(PipError::Contract(_)) => return Err(PipError::Input(format!("({u}, {v}) is not an edge"))),
                r => r?,
            };
            writeln!(out, "{in_msf}")?;
        }
        GraphCommand::QueryConn { graph, v } => {
            let (_, oracle) = load_oracle(graph, seed)?;
            writeln!(out, "{}", oracle.connectivity_query(vertex(*v, oracle.n())?)? + 1)?;
        }
        GraphCommand::Verify { graph, against_kruskal } => {
            let (edges, oracle) = load_oracle(graph, seed)?;
            let n = oracle.n();
            let labels = (0..n).map(|v| oracle.connectivity_query(v)).collect::<Result<Vec<_>>>()?;
            let comp = ref_components(n, &edges)?;
            let mut ok = verdict(out, partition_matches(&labels, &comp), "connectivity")? == EXIT_OK;
            if *against_kruskal {
                let msf: HashSet<_> = ref_kruskal(n, &edges).into_iter().collect();
                let mut agree = true;
                for &(u, v, w) in &edges {
                    agree &= oracle.msf_query(u, v)? == msf.contains(&(w, u.min(v), u.max(v)));
                }
                ok &= verdict(out, agree, "msf")? == EXIT_OK;
            }
            return Ok(if ok { EXIT_OK } else { EXIT_VERIFY });
        }
    }
    Ok(EXIT_OK)
}
