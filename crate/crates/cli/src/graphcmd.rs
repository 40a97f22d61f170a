use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context};
use clap::{Args, Subcommand, ValueEnum};
use tracegap_core::graphlab::{
    bound_trials, closed_walk_counts, enumerate_closed_walks, irreducible_loop_counts, mc_expected_irreducible,
    ramanujan_residual, random_regular, spectral_bound_check, spectrum, Closure, RegularGraph,
};

use crate::output::{self, emit, emit_json, require_file};
use crate::{Cli, Format, Status};

#[derive(Subcommand, Debug)]
pub enum GraphCmd {
    /// Adjacency spectrum and bipartiteness.
    Spectrum(GraphSrc),
    /// Closed walk counts Tr(A^ℓ).
    Walks(WalkArgs),
    /// Closed non-backtracking walk counts.
    Irreducible(IrreducibleArgs),
    /// Spectral trace bound over random trials, or on one given graph.
    Bound(BoundArgs),
    /// Monte Carlo mean of irreducible loop counts.
    Mc(McArgs),
    /// Fit counts to p(ℓ)(d−1)^ℓ and test the residual against (d−1)^{ℓ/2}.
    Fit(FitArgs),
}

#[derive(Args, Debug)]
pub struct GraphSrc {
    #[arg(long, required_unless_present = "graph")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "graph")]
    pub d: Option<usize>,
    /// Edge list file ("n d" header, then one "u v" pair per line).
    #[arg(long, conflicts_with_all = ["n", "d"])]
    pub graph: Option<PathBuf>,
    /// Also write the graph as an edge list here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[command(flatten)]
    pub src: GraphSrc,
    #[arg(long, default_value_t = 10)]
    pub lmax: usize,
    /// Cross-check against exhaustive enumeration (small graphs only).
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClosureArg {
    Cyclic,
    Path,
}

impl From<ClosureArg> for Closure {
    fn from(c: ClosureArg) -> Self {
        match c {
            ClosureArg::Cyclic => Closure::Cyclic,
            ClosureArg::Path => Closure::Path,
        }
    }
}

#[derive(Args, Debug)]
pub struct IrreducibleArgs {
    #[command(flatten)]
    pub walks: WalkArgs,
    #[arg(long, value_enum, default_value = "cyclic")]
    pub closure: ClosureArg,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long, required_unless_present = "graph")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "graph")]
    pub d: Option<usize>,
    #[arg(long, conflicts_with_all = ["n", "d", "trials"])]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub lmax: usize,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 12)]
    pub lmax: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub d: usize,
    /// CSV with ell and count columns (a header line is skipped). Without it
    /// the counts come from a Monte Carlo run with --n and --trials.
    #[arg(long)]
    pub counts: Option<PathBuf>,
    #[arg(long, required_unless_present = "counts", conflicts_with = "counts")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 12)]
    pub lmax: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Degree of the polynomial in front of (d−1)^ℓ.
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
}

fn check_out_path(p: &Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(parent) = p
        .as_ref()
        .and_then(|p| p.parent())
        .filter(|p| !p.as_os_str().is_empty())
    {
        ensure!(parent.is_dir(), "directory {} does not exist", parent.display());
    }
    Ok(())
}

fn load_graph(path: &std::path::Path) -> anyhow::Result<RegularGraph> {
    let text = require_file(path, "graph")?;
    RegularGraph::from_edge_list(&text).with_context(|| format!("reading {}", path.display()))
}

fn graph(cli: &Cli, src: &GraphSrc) -> anyhow::Result<RegularGraph> {
    check_out_path(&src.dump)?;
    let g = match (&src.graph, src.n, src.d) {
        (Some(p), _, _) => load_graph(p)?,
        (None, Some(n), Some(d)) => random_regular(n, d, cli.seed)?,
        _ => bail!("give --graph or both --n and --d"),
    };
    if let Some(p) = &src.dump {
        std::fs::write(p, g.to_edge_list()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(g)
}

/// `counts[i]` is the count at `ℓ = i + 1`.
fn counts_out(
    cli: &Cli,
    fmt: Format,
    counts: &[num_bigint::BigUint],
    oracle: Option<&[u64]>,
) -> anyhow::Result<Status> {
    let mut pass = true;
    let rows: Vec<serde_json::Value> = counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = serde_json::json!({ "ell": i + 1, "count": c.to_string() });
            if let Some(o) = oracle {
                pass &= c.to_string() == o[i].to_string();
                row["enumerated"] = o[i].to_string().into();
            }
            row
        })
        .collect();
    match fmt {
        Format::Json => emit_json(cli, &rows)?,
        Format::Csv => {
            let mut s = String::from(if oracle.is_some() {
                "ell,count,enumerated\n"
            } else {
                "ell,count\n"
            });
            for (i, c) in counts.iter().enumerate() {
                s.push_str(&format!("{},{c}", i + 1));
                if let Some(o) = oracle {
                    s.push_str(&format!(",{}", o[i]));
                }
                s.push('\n');
            }
            emit(cli, &s)?;
        }
    }
    Ok(Status::from_pass(pass))
}

/// Exhaustive enumeration is refused beyond this many walks.
const ORACLE_LIMIT: f64 = 1e9;

fn oracle_counts(g: &RegularGraph, lmax: usize, nb: Option<Closure>) -> anyhow::Result<Vec<u64>> {
    let work = g.n as f64 * (g.d as f64).powi(lmax as i32);
    ensure!(
        work <= ORACLE_LIMIT,
        "enumeration of {work:.1e} walks is too large for --oracle"
    );
    Ok((1..=lmax).map(|ell| enumerate_closed_walks(g, ell, nb)).collect())
}

fn read_counts(path: &std::path::Path) -> anyhow::Result<BTreeMap<usize, f64>> {
    let text = require_file(path, "counts")?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
            bail!("{}:{}: expected ell,count", path.display(), i + 1);
        };
        let ell: usize = a
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad ell", path.display(), i + 1))?;
        let v: f64 = b
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad count", path.display(), i + 1))?;
        out.insert(ell, v);
    }
    Ok(out)
}

pub fn run(cli: &Cli, cmd: &GraphCmd) -> anyhow::Result<Status> {
    match cmd {
        GraphCmd::Spectrum(src) => {
            output::format(cli, Format::Json, false)?;
            let g = graph(cli, src)?;
            emit_json(cli, &spectrum(&g))?;
            Ok(Status::Pass)
        }
        GraphCmd::Walks(a) => {
            let fmt = output::format(cli, Format::Csv, true)?;
            let g = graph(cli, &a.src)?;
            let oracle = if a.oracle {
                Some(oracle_counts(&g, a.lmax, None)?)
            } else {
                None
            };
            counts_out(cli, fmt, &closed_walk_counts(&g, a.lmax)[1..], oracle.as_deref())
        }
        GraphCmd::Irreducible(a) => {
            let fmt = output::format(cli, Format::Csv, true)?;
            let w = &a.walks;
            let closure: Closure = a.closure.into();
            let g = graph(cli, &w.src)?;
            let oracle = if w.oracle {
                Some(oracle_counts(&g, w.lmax, Some(closure))?)
            } else {
                None
            };
            counts_out(
                cli,
                fmt,
                &irreducible_loop_counts(&g, w.lmax, closure)[1..],
                oracle.as_deref(),
            )
        }
        GraphCmd::Bound(a) => {
            output::format(cli, Format::Json, false)?;
            if let Some(p) = &a.graph {
                let rep = spectral_bound_check(&load_graph(p)?, a.lmax)?;
                emit_json(cli, &rep)?;
                return Ok(Status::from_pass(rep.holds));
            }
            let (Some(n), Some(d)) = (a.n, a.d) else {
                bail!("give --graph or both --n and --d");
            };
            let rep = bound_trials(n, d, a.lmax, a.trials.unwrap_or(1), cli.seed)?;
            emit_json(cli, &rep)?;
            Ok(Status::from_pass(rep.holds))
        }
        GraphCmd::Mc(a) => {
            let fmt = output::format(cli, Format::Csv, true)?;
            let rep = mc_expected_irreducible(a.n, a.d, a.lmax, a.trials, cli.seed)?;
            match fmt {
                Format::Csv => emit(cli, &rep.to_csv())?,
                Format::Json => emit_json(cli, &rep)?,
            }
            Ok(Status::Pass)
        }
        GraphCmd::Fit(a) => {
            output::format(cli, Format::Json, false)?;
            let counts = match (&a.counts, a.n) {
                (Some(p), _) => read_counts(p)?,
                (None, Some(n)) => mc_expected_irreducible(n, a.d, a.lmax, a.trials, cli.seed)?.means(),
                _ => bail!("give --counts or --n"),
            };
            let rep = ramanujan_residual(&counts, a.d, a.degree)?;
            emit_json(cli, &rep)?;
            Ok(Status::from_pass(rep.bounded))
        }
    }
}
