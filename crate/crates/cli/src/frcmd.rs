use anyhow::{anyhow, ensure};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use tracegap_core::frfun::{
    apply_l_pow, apply_p, check_char_fr, class_e_check, comparison_l0, convolve, fr_norm, pseudo_convolve,
    weak_fr_norm, Expr, FRFunction, PseudoConvSpec,
};

use tracegap_core::frfun::pseudo::all_alphas;

use crate::args::{EllRange, FnSpec, Grid};
use crate::output::{self, emit, emit_json};
use crate::{Cli, Format, Status};

#[derive(Subcommand, Debug)]
pub enum FrCmd {
    /// Apply P or a power of L to a function.
    ApplyOp(ApplyArgs),
    /// FR norm and weak FR norm.
    Norm(OneFn),
    /// Convolution of two functions.
    Convolve(ConvolveArgs),
    /// Pseudo-convolution over the level sets of h, sampled at given lengths.
    Pseudo(PseudoArgs),
    /// Characterization check: is L^K f a remainder of order N?
    Charfr(OneFn),
    /// Exponential-decay class check of a level function's derivatives.
    ClassE(ClassEArgs),
    /// Comparison constant sup(Σx − h) on the sample box.
    L0(L0Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Op {
    P,
    L,
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    #[arg(long, value_enum)]
    pub op: Op,
    /// Number of applications of L.
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    /// Function as PRINCIPAL;REMAINDER[;K[;N]], e.g. "1;0" for e^x.
    #[arg(long = "fn", value_name = "SPEC")]
    pub f: FnSpec,
    /// Spacing of the written samples.
    #[arg(long, default_value_t = 0.1)]
    pub every: f64,
}

#[derive(Args, Debug)]
pub struct OneFn {
    /// Function as PRINCIPAL;REMAINDER[;K[;N]].
    #[arg(long = "fn", value_name = "SPEC")]
    pub f: FnSpec,
}

#[derive(Args, Debug)]
pub struct ConvolveArgs {
    /// Exactly two functions.
    #[arg(long = "fn", value_name = "SPEC", num_args = 1, required = true)]
    pub fs: Vec<FnSpec>,
    #[arg(long, default_value_t = 0.1)]
    pub every: f64,
}

#[derive(Args, Debug)]
pub struct PseudoArgs {
    /// One function per coordinate.
    #[arg(long = "fn", value_name = "SPEC", required = true)]
    pub fs: Vec<FnSpec>,
    /// Level function in x1..xn. Defaults to the coordinate sum.
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long, default_value = "1")]
    pub weight: String,
    /// Lengths as A..B:STEP.
    #[arg(long)]
    pub ell: EllRange,
    /// Also compute the ordinary convolution and fail if it differs by more
    /// than the tolerance.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Args, Debug)]
pub struct ClassEArgs {
    /// Level function in x1..xn.
    #[arg(long)]
    pub phi: String,
    #[arg(long)]
    pub n: usize,
    /// Lower corner of the sample box.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long)]
    pub bound: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct L0Args {
    #[arg(long)]
    pub level: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

#[derive(Serialize)]
struct Sample {
    ell: f64,
    value: f64,
    remainder: f64,
}

#[derive(Serialize)]
struct Sampled {
    principal: Vec<f64>,
    k: usize,
    n: usize,
    step: f64,
    l_max: f64,
    samples: Vec<Sample>,
}

fn sampled(f: &FRFunction, every: f64) -> anyhow::Result<Sampled> {
    ensure!(every > 0.0 && every.is_finite(), "--every must be positive");
    let stride = ((every / f.step).round() as usize).max(1);
    let samples = (0..f.len())
        .step_by(stride)
        .map(|i| Sample {
            ell: f.grid_point(i),
            value: f.principal_at(f.grid_point(i)) + f.remainder[i],
            remainder: f.remainder[i],
        })
        .collect();
    Ok(Sampled {
        principal: f.principal.clone(),
        k: f.k,
        n: f.n,
        step: f.step,
        l_max: f.l_max(),
        samples,
    })
}

fn write_fn(cli: &Cli, fmt: Format, f: &FRFunction, every: f64) -> anyhow::Result<()> {
    let s = sampled(f, every)?;
    match fmt {
        Format::Json => emit_json(cli, &s),
        Format::Csv => {
            let mut out = String::from("ell,value,remainder\n");
            for r in &s.samples {
                out.push_str(&format!("{},{:e},{:e}\n", r.ell, r.value, r.remainder));
            }
            emit(cli, &out)
        }
    }
}

fn parse_expr(what: &str, s: &str, n: usize) -> anyhow::Result<Expr> {
    let e = Expr::parse(s).map_err(|e| anyhow!("{what} {s:?}: {e}"))?;
    ensure!(e.arity() <= n, "{what} {s:?} uses x{} but n = {n}", e.arity());
    Ok(e)
}

pub fn run(cli: &Cli, cmd: &FrCmd) -> anyhow::Result<Status> {
    let grid = cli.grid.unwrap_or_default();
    match cmd {
        FrCmd::ApplyOp(a) => {
            let fmt = output::format(cli, Format::Csv, true)?;
            let f = a.f.sample(grid)?;
            let g = match a.op {
                Op::P => (0..a.power).fold(f, |acc, _| apply_p(&acc)),
                Op::L => apply_l_pow(&f, a.power),
            };
            write_fn(cli, fmt, &g, a.every)?;
            Ok(Status::Pass)
        }
        FrCmd::Norm(a) => {
            output::format(cli, Format::Json, false)?;
            let f = a.f.sample(grid)?;
            let (k, n) = (a.f.k, a.f.n);
            emit_json(
                cli,
                &serde_json::json!({
                    "k": k,
                    "n": n,
                    "norm": fr_norm(&f, k, n),
                    "weak_norm": weak_fr_norm(&f, k, n),
                }),
            )?;
            Ok(Status::Pass)
        }
        FrCmd::Convolve(a) => {
            let fmt = output::format(cli, Format::Csv, true)?;
            ensure!(a.fs.len() == 2, "convolve takes exactly two --fn, got {}", a.fs.len());
            let f = a.fs[0].sample(grid)?;
            let g = a.fs[1].sample(grid)?;
            write_fn(cli, fmt, &convolve(&f, &g)?, a.every)?;
            Ok(Status::Pass)
        }
        FrCmd::Pseudo(a) => run_pseudo(cli, grid, a),
        FrCmd::Charfr(a) => {
            output::format(cli, Format::Json, false)?;
            let f = a.f.sample(grid)?;
            let rep = check_char_fr(&f, a.f.k, a.f.n);
            emit_json(cli, &rep)?;
            Ok(Status::from_pass(rep.member))
        }
        FrCmd::ClassE(a) => {
            output::format(cli, Format::Json, false)?;
            let phi = parse_expr("phi", &a.phi, a.n)?;
            let rep = class_e_check(&|x: &[f64]| phi.eval(x), a.n, a.a, &all_alphas(a.n), a.bound, a.samples)?;
            emit_json(cli, &rep)?;
            Ok(Status::from_pass(rep.pass))
        }
        FrCmd::L0(a) => {
            output::format(cli, Format::Json, false)?;
            let spec = PseudoConvSpec::from_exprs(a.n, &a.level, "1", a.a)?;
            let l0 = comparison_l0(&spec, a.samples)?;
            emit_json(
                cli,
                &serde_json::json!({ "n": a.n, "a": a.a, "samples": a.samples, "l0": l0 }),
            )?;
            Ok(Status::Pass)
        }
    }
}

#[derive(Serialize)]
struct PseudoRow {
    ell: f64,
    value: f64,
    err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    convolution: Option<f64>,
}

fn run_pseudo(cli: &Cli, grid: Grid, a: &PseudoArgs) -> anyhow::Result<Status> {
    let fmt = output::format(cli, Format::Csv, true)?;
    let n = a.fs.len();
    let level = match &a.level {
        Some(l) => l.clone(),
        None => (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(" + "),
    };
    parse_expr("level", &level, n)?;
    parse_expr("weight", &a.weight, n)?;
    let spec = PseudoConvSpec::from_exprs(n, &level, &a.weight, 1.0)?;
    let fs =
        a.fs.iter()
            .map(|s| s.sample(grid))
            .collect::<anyhow::Result<Vec<_>>>()?;
    let ells = a.ell.values();
    let tol = cli.tol.unwrap_or(1e-6);
    let samples = pseudo_convolve(&fs, &spec, &ells, (tol * 1e-2).max(1e-12))?;
    let reference = if a.compare {
        let mut acc = fs[0].clone();
        for f in &fs[1..] {
            acc = convolve(&acc, f)?;
        }
        Some(acc)
    } else {
        None
    };
    let mut pass = true;
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let convolution = match &reference {
            Some(r) => {
                let c = r.eval(s.ell)?;
                pass &= (s.value - c).abs() <= tol * c.abs().max(1.0);
                Some(c)
            }
            None => None,
        };
        rows.push(PseudoRow {
            ell: s.ell,
            value: s.value,
            err: s.err,
            convolution,
        });
    }
    match fmt {
        Format::Json => emit_json(cli, &rows)?,
        Format::Csv => {
            let mut out = String::from("ell,value,err");
            if reference.is_some() {
                out.push_str(",convolution");
            }
            out.push('\n');
            for r in &rows {
                out.push_str(&format!("{},{:e},{:e}", r.ell, r.value, r.err));
                if let Some(c) = r.convolution {
                    out.push_str(&format!(",{c:e}"));
                }
                out.push('\n');
            }
            emit(cli, &out)?;
        }
    }
    Ok(Status::from_pass(pass))
}
