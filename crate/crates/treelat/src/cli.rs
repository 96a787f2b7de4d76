//! The `treelat` command-line surface.
//!
//! Every subcommand maps to one library pipeline, prints structured JSON to
//! stdout (plain `p/q` lines for covolumes and degrees), and reports
//! diagnostics on stderr.  Exit codes: 0 on success, 2 for parse errors,
//! 3 for structural-invariant violations, 4 for violated mathematical
//! preconditions.  Identical invocations produce byte-identical stdout.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::grouping::{cover_degree, verify_cover};
use crate::growth::{self, equivalent, is_acceptable, p_stabilizer_growth, parse_growth};
use crate::indexed_graph::{compute_ordering, EdgeIndexedGraph, OrderFunction, OrderingError};
use crate::io;
use crate::num_util::{format_ratio, parse_ratio};
use crate::realize::{
    self, realize_covolume, realize_covolume_growth, realize_full, sample_digit_sequences,
    shrink_covolume, RealizeError,
};
use crate::star_tree::{
    build_single_star, build_star_ray, Block, ClassSelector, CovolumeValue, IndexedStarTree,
    StarTreeError, StarTreeSpec,
};
use crate::weights::AdmissibleSequence;

const EXIT_OK: i32 = 0;
const EXIT_PARSE: i32 = 2;
const EXIT_INVARIANT: i32 = 3;
const EXIT_PRECONDITION: i32 = 4;

#[derive(Debug)]
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn parse(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
    fn invariant(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVARIANT,
            message: message.into(),
        }
    }
    fn precondition(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        match e {
            io::IoError::Parse(_) => CliError::parse(e.to_string()),
            io::IoError::Invalid(_) => CliError::invariant(e.to_string()),
            io::IoError::Cover(_) => CliError::invariant(e.to_string()),
            io::IoError::OrderingMismatch => CliError::parse(e.to_string()),
        }
    }
}

impl From<StarTreeError> for CliError {
    fn from(e: StarTreeError) -> Self {
        CliError::precondition(e.to_string())
    }
}

impl From<RealizeError> for CliError {
    fn from(e: RealizeError) -> Self {
        CliError::precondition(e.to_string())
    }
}

impl From<growth::GrowthError> for CliError {
    fn from(e: growth::GrowthError) -> Self {
        match e {
            growth::GrowthError::InvalidFamily(_) => CliError::parse(e.to_string()),
            _ => CliError::precondition(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "treelat",
    version,
    about = "Construct, verify, and measure lattices on biregular trees with exact arithmetic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the structural invariants of a graph file.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Propagate the unique ordering from a base vertex.
    Order {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        base: String,
        /// Base value as `p/q` (or an integer).
        #[arg(long, default_value = "1")]
        value: String,
    },
    /// Verify a covering of edge-indexed graphs.
    CoverCheck {
        #[arg(long)]
        cover: PathBuf,
    },
    /// Compute the covering degree, checking agreement at every vertex.
    CoverDegree {
        #[arg(long)]
        cover: PathBuf,
    },
    /// Build a star-tree spec or its truncation.
    Startree {
        #[command(flatten)]
        tree: TreeSource,
        /// Glue a weighted block: `depth@level` (repeatable).
        #[arg(long = "glue")]
        glue: Vec<String>,
        /// Glue a growth tree: `family@level`, e.g. `exp:3/2@2`.
        #[arg(long = "glue-growth")]
        glue_growth: Option<String>,
        /// Truncation depth for graph output.
        #[arg(long, default_value_t = 6)]
        depth: u32,
        #[arg(long, value_enum, default_value_t = Emit::Spec)]
        emit: Emit,
    },
    /// Exact (or certified-interval) covolume of a star tree.
    Covolume {
        #[command(flatten)]
        tree: TreeSource,
        #[arg(long, value_enum, default_value_t = Selector::V0)]
        selector: Selector,
        /// Also print the partial sum and tail bound at this depth.
        #[arg(long)]
        partial_depth: Option<u32>,
    },
    /// Realize a covolume (and optionally a growth type) exactly.
    Realize {
        /// Target covolume as `p/q`.
        #[arg(long)]
        kappa: String,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        /// Divisor sequence period, e.g. `3,6` (canonical when omitted).
        #[arg(long)]
        seq: Option<String>,
        /// Quotient growth family, e.g. `exp:3/2`.
        #[arg(long)]
        growth: Option<String>,
        /// Sample this many distinct digit sequences instead.
        #[arg(long)]
        sample: Option<usize>,
        /// Seed for the sampler; the only entropy source.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Shrink the covolume of a star tree by a semidirect tower.
    Shrink {
        #[command(flatten)]
        tree: TreeSource,
        /// Tower parameter: the unit group is the residues mod `w(k)`.
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 8)]
        depth: u32,
    },
    /// Growth tabulation and comparison.
    Growth {
        #[command(subcommand)]
        command: GrowthCommand,
    },
    /// Export graphs and specs as JSON or DOT.
    Export {
        /// Graph file to export.
        #[arg(long, conflicts_with_all = ["startree", "spec"])]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tree: TreeSourceOptional,
        #[arg(long, default_value_t = 6)]
        depth: u32,
        /// Label vertices with the ordering from this base vertex.
        #[arg(long)]
        ordering_base: Option<String>,
        #[arg(long, default_value = "1")]
        ordering_value: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Subcommand, Debug)]
enum GrowthCommand {
    /// Decide `f preceq g` both ways, with witnesses.
    Compare { f: String, g: String },
    /// Acceptability report for a growth function.
    Acceptable { f: String },
    /// Ball growth of a star tree in the half-edge metric.
    Ball {
        #[command(flatten)]
        tree: TreeSource,
        #[arg(long, default_value_t = 12)]
        kmax: u32,
    },
    /// Stabilizer growth (max group order in balls) of the ordering.
    Stabilizer {
        #[command(flatten)]
        tree: TreeSource,
        #[arg(long, default_value_t = 12)]
        kmax: u32,
        /// Restrict the maxima to part-0 vertices.
        #[arg(long)]
        v0_only: bool,
        /// Take p-parts of the orders for this prime.
        #[arg(long)]
        p: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Builtin {
    Ray,
    Star,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Selector {
    V0,
    V1,
    All,
}

impl From<Selector> for ClassSelector {
    fn from(s: Selector) -> Self {
        match s {
            Selector::V0 => ClassSelector::PartZero,
            Selector::V1 => ClassSelector::PartOne,
            Selector::All => ClassSelector::All,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Emit {
    Spec,
    Graph,
    Dot,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Json,
    Dot,
}

/// Where a star tree comes from: a built-in spec or a JSON file, plus the
/// indexing parameters.
#[derive(Args, Debug)]
struct TreeSource {
    /// Built-in spec (`ray` or `star`).
    #[arg(long, value_enum)]
    startree: Option<Builtin>,
    /// Star-tree spec JSON file.
    #[arg(long, conflicts_with = "startree")]
    spec: Option<PathBuf>,
    /// Degree of the part-0 vertices (required with --startree).
    #[arg(long)]
    m: Option<u64>,
    /// Opposite degree of the biregular tree.
    #[arg(long)]
    n: u64,
    /// Divisor sequence: `period` or `prefix|period`, e.g. `3,6` or `6|3,6`.
    #[arg(long)]
    seq: Option<String>,
}

#[derive(Args, Debug)]
struct TreeSourceOptional {
    #[arg(long, value_enum)]
    startree: Option<Builtin>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seq: Option<String>,
}

fn parse_seq(n: u64, text: Option<&str>) -> Result<AdmissibleSequence, CliError> {
    match text {
        None => AdmissibleSequence::canonical(n).map_err(|e| CliError::parse(e.to_string())),
        Some(text) => {
            let (prefix, period) = match text.split_once('|') {
                Some((p, q)) => (p, q),
                None => ("", text),
            };
            let parse_list = |part: &str| -> Result<Vec<u64>, CliError> {
                if part.trim().is_empty() {
                    return Ok(Vec::new());
                }
                part.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<u64>()
                            .map_err(|_| CliError::parse(format!("bad sequence entry {v:?}")))
                    })
                    .collect()
            };
            AdmissibleSequence::new(n, parse_list(prefix)?, parse_list(period)?)
                .map_err(|e| CliError::parse(e.to_string()))
        }
    }
}

impl TreeSource {
    fn load(&self) -> Result<(StarTreeSpec, AdmissibleSequence), CliError> {
        let seq = parse_seq(self.n, self.seq.as_deref())?;
        let spec = match (&self.startree, &self.spec) {
            (Some(builtin), None) => {
                let m = self
                    .m
                    .ok_or_else(|| CliError::parse("--m is required with --startree"))?;
                match builtin {
                    Builtin::Ray => build_star_ray(m)?,
                    Builtin::Star => build_single_star(m)?,
                }
            }
            (None, Some(path)) => io::spec_from_json(&read_file(path)?)?,
            _ => {
                return Err(CliError::parse(
                    "exactly one of --startree or --spec is required",
                ))
            }
        };
        Ok((spec, seq))
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))
}

fn ratio_arg(text: &str) -> Result<num_rational::BigRational, CliError> {
    parse_ratio(text).map_err(CliError::parse)
}

fn load_graph(path: &Path) -> Result<EdgeIndexedGraph, CliError> {
    Ok(io::graph_from_json(&read_file(path)?)?)
}

fn integral_orders_of(ordering: &OrderFunction) -> Result<Vec<BigUint>, CliError> {
    ordering
        .integral_values()
        .map(|(vs, _)| vs)
        .ok_or_else(|| CliError::precondition("ordering is not integral"))
}

fn render_covolume(value: &CovolumeValue) -> String {
    match value {
        CovolumeValue::Exact(v) => format_ratio(v),
        CovolumeValue::Interval { lower, upper } => {
            format!("[{}, {}]", format_ratio(lower), format_ratio(upper))
        }
    }
}

/// Entry point used by both the binary and the CLI tests.
pub fn run<O: Write, E: Write>(
    args: impl IntoIterator<Item = String>,
    out: &mut O,
    err: &mut E,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version on stdout with status 0
            return if e.use_stderr() {
                let _ = write!(err, "{e}");
                EXIT_PARSE
            } else {
                let _ = write!(out, "{e}");
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch<O: Write>(command: Command, out: &mut O) -> Result<(), CliError> {
    match command {
        Command::Validate { graph } => {
            let text = read_file(&graph)?;
            let data: crate::indexed_graph::GraphData =
                serde_json::from_str(&text).map_err(|e| CliError::parse(e.to_string()))?;
            let violations = EdgeIndexedGraph::validate_data(&data);
            let valid = violations.is_empty();
            let report = serde_json::json!({
                "valid": valid,
                "violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            if valid {
                Ok(())
            } else {
                Err(CliError::invariant(format!(
                    "{} violation(s)",
                    violations.len()
                )))
            }
        }
        Command::Order { graph, base, value } => {
            let g = load_graph(&graph)?;
            let base_value = ratio_arg(&value)?;
            let ordering = compute_ordering(&g, &base, &base_value).map_err(|e| match e {
                OrderingError::UnknownVertex(_) | OrderingError::NonPositiveBase => {
                    CliError::parse(e.to_string())
                }
                _ => CliError::precondition(e.to_string()),
            })?;
            writeln!(out, "{}", io::ordering_to_json(&g, &ordering)?).ok();
            Ok(())
        }
        Command::CoverCheck { cover } => {
            let c = io::cover_from_json(&read_file(&cover)?)?;
            let problems = verify_cover(&c);
            let report = serde_json::json!({
                "valid": problems.is_empty(),
                "problems": problems,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            if problems.is_empty() {
                Ok(())
            } else {
                Err(CliError::invariant(format!(
                    "{} cover problem(s)",
                    problems.len()
                )))
            }
        }
        Command::CoverDegree { cover } => {
            let c = io::cover_from_json(&read_file(&cover)?)?;
            let problems = verify_cover(&c);
            if !problems.is_empty() {
                return Err(CliError::invariant(problems.join("; ")));
            }
            let degree = cover_degree(&c).map_err(|e| CliError::invariant(e.to_string()))?;
            writeln!(out, "{degree}").ok();
            Ok(())
        }
        Command::Startree {
            tree,
            glue,
            glue_growth,
            depth,
            emit,
        } => {
            let (mut spec, seq) = tree.load()?;
            for item in &glue {
                let (d, level) = item.split_once('@').ok_or_else(|| {
                    CliError::parse(format!("expected depth@level, got {item:?}"))
                })?;
                let d: u32 = d
                    .parse()
                    .map_err(|_| CliError::parse(format!("bad block depth {d:?}")))?;
                let level: u32 = level
                    .parse()
                    .map_err(|_| CliError::parse(format!("bad level {level:?}")))?;
                spec = spec.glue(Block::Weighted { depth: d }, level)?;
            }
            if let Some(item) = &glue_growth {
                let (family, level) = item.rsplit_once('@').ok_or_else(|| {
                    CliError::parse(format!("expected family@level, got {item:?}"))
                })?;
                let f = parse_growth(family)?;
                let level: u32 = level
                    .parse()
                    .map_err(|_| CliError::parse(format!("bad level {level:?}")))?;
                spec = spec.glue(crate::star_tree::growth_block(f)?, level)?;
            }
            let tree = IndexedStarTree::with_sequence(spec, seq)?;
            match emit {
                Emit::Spec => writeln!(out, "{}", io::spec_to_json(&tree.spec)).ok(),
                Emit::Graph => {
                    let t = tree.truncate(depth)?;
                    writeln!(out, "{}", io::graph_to_json(&t.graph)).ok()
                }
                Emit::Dot => {
                    let t = tree.truncate(depth)?;
                    write!(out, "{}", io::graph_to_dot(&t.graph, None)).ok()
                }
            };
            Ok(())
        }
        Command::Covolume {
            tree,
            selector,
            partial_depth,
        } => {
            let (spec, seq) = tree.load()?;
            let value = spec.covolume(&seq, selector.into())?;
            writeln!(out, "{}", render_covolume(&value)).ok();
            if let Some(depth) = partial_depth {
                let (partial, tail) = spec.covolume_v0_partial(&seq, depth)?;
                let report = serde_json::json!({
                    "depth": depth,
                    "partial": format_ratio(&partial),
                    "tail_bound": format_ratio(&tail),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            }
            Ok(())
        }
        Command::Realize {
            kappa,
            m,
            n,
            seq,
            growth,
            sample,
            seed,
        } => {
            let kappa = ratio_arg(&kappa)?;
            let seq = parse_seq(n, seq.as_deref())?;
            if let Some(count) = sample {
                let samples = sample_digit_sequences(&kappa, &seq, count, seed)?;
                let report = serde_json::json!({
                    "kappa": format_ratio(&kappa),
                    "seed": seed,
                    "count": samples.len(),
                    "sequences": samples,
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
                return Ok(());
            }
            let f = match &growth {
                Some(text) => Some(parse_growth(text)?),
                None => None,
            };
            let realization = match (&f, seq.is_canonical()) {
                (None, true) => realize_covolume(&kappa, m, n)?,
                (None, false) => {
                    // constant quotient growth by default
                    let f = crate::growth::GrowthFunction::Polynomial { degree: 0 };
                    realize_full(&kappa, &f, &seq, m)?
                }
                (Some(f), true) if kappa > seq.ray_covolume() => {
                    realize_covolume_growth(&kappa, f, m, n)?
                }
                (Some(f), _) => realize_full(&kappa, f, &seq, m)?,
            };
            let report = realization.report(m)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            Ok(())
        }
        Command::Shrink { tree, k, depth } => {
            let (spec, seq) = tree.load()?;
            let shrunk = shrink_covolume(&spec, &seq, k, depth)?;
            let tower_report = shrunk
                .tower
                .verify(1, 1 << 16)
                .map_err(|e| CliError::precondition(e.to_string()))?;
            let problems = shrunk.grouping.validate(crate::grouping::ELEMENT_BOUND);
            if !problems.is_empty() {
                return Err(CliError::invariant(problems.join("; ")));
            }
            let report = serde_json::json!({
                "k": k,
                "unit_order": shrunk.unit_order.to_string(),
                "covolume": render_covolume(&shrunk.covolume),
                "faithfulness_witnesses": tower_report.faithfulness_witnesses,
                "levels_checked": tower_report.levels_checked,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            Ok(())
        }
        Command::Growth { command } => growth_command(command, out),
        Command::Export {
            graph,
            tree,
            depth,
            ordering_base,
            ordering_value,
            format,
        } => {
            let g = match (&graph, &tree.startree, &tree.spec) {
                (Some(path), None, None) => load_graph(path)?,
                (None, startree, spec) if startree.is_some() || spec.is_some() => {
                    let n = tree
                        .n
                        .ok_or_else(|| CliError::parse("--n is required for spec export"))?;
                    let source = TreeSource {
                        startree: tree.startree,
                        spec: tree.spec.clone(),
                        m: tree.m,
                        n,
                        seq: tree.seq.clone(),
                    };
                    let (spec, seq) = source.load()?;
                    IndexedStarTree::with_sequence(spec, seq)?
                        .truncate(depth)?
                        .graph
                }
                _ => return Err(CliError::parse("need --graph, --startree, or --spec")),
            };
            let ordering = match &ordering_base {
                Some(base) => Some(
                    compute_ordering(&g, base, &ratio_arg(&ordering_value)?)
                        .map_err(|e| CliError::precondition(e.to_string()))?,
                ),
                None => None,
            };
            match format {
                Format::Json => writeln!(out, "{}", io::graph_to_json(&g)).ok(),
                Format::Dot => write!(out, "{}", io::graph_to_dot(&g, ordering.as_ref())).ok(),
            };
            Ok(())
        }
    }
}

fn growth_command<O: Write>(command: GrowthCommand, out: &mut O) -> Result<(), CliError> {
    match command {
        GrowthCommand::Compare { f, g } => {
            let f = parse_growth(&f)?;
            let g = parse_growth(&g)?;
            let verdict = equivalent(&f, &g);
            let report = serde_json::json!({
                "equivalent": verdict.decided(),
                "forward": verdict.forward,
                "backward": verdict.backward,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            Ok(())
        }
        GrowthCommand::Acceptable { f } => {
            let f = parse_growth(&f)?;
            let report = is_acceptable(&f);
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap()).ok();
            Ok(())
        }
        GrowthCommand::Ball { tree, kmax } => {
            let (spec, seq) = tree.load()?;
            let tab = IndexedStarTree::with_sequence(spec, seq)?.level_ball_growth(kmax);
            writeln!(out, "{}", serde_json::to_string_pretty(&tab).unwrap()).ok();
            Ok(())
        }
        GrowthCommand::Stabilizer {
            tree,
            kmax,
            v0_only,
            p,
        } => {
            let (spec, seq) = tree.load()?;
            let tab = match p {
                None => realize::stabilizer_growth_of(&spec, &seq, kmax, v0_only)?,
                Some(p) => {
                    // tabulate on a truncation deep enough for the radius
                    let tree = IndexedStarTree::with_sequence(spec, seq)?;
                    let t = tree.truncate(kmax + 1)?;
                    let ordering = compute_ordering(
                        &t.graph,
                        &t.base,
                        &num_rational::BigRational::from_integer(1.into()),
                    )
                    .map_err(|e| CliError::precondition(e.to_string()))?;
                    let orders = integral_orders_of(&ordering)?;
                    p_stabilizer_growth(
                        &t.graph,
                        &orders,
                        &t.base,
                        p,
                        kmax,
                        v0_only,
                        Some(t.depth),
                    )?
                }
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&tab).unwrap()).ok();
            Ok(())
        }
    }
}

/// Convenience wrapper capturing stdout as a string, used by tests.
pub fn run_capture(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("treelat".to_string()).chain(args.iter().map(|s| s.to_string())),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}
