use anyhow::{bail, Context};
use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use tracegap_core::volfun::{
    self, curve_csv, enumerate_realizations, phi_s, v_pop_type, v_simple, v_simple_via_phi, CurveRow, PopForm, VolError,
};
use tracegap_core::FillingSignature;

use crate::args::EllRange;
use crate::output::{self, emit, emit_json, load_table};
use crate::{Cli, Format, Status};

#[derive(Subcommand, Debug)]
pub enum VolumesCmd {
    /// Load a table, report lints and cross-check the simple-volume paths.
    Validate,
    /// Print one entry.
    Inspect {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: u32,
    },
    /// Rewrite the table in canonical order.
    Export,
    /// List the realizations of a filling signature in ambient genus g.
    Realizations {
        /// Signature as G,N, e.g. 0,3 for a pair of pants.
        #[arg(long)]
        sig: String,
        #[arg(long)]
        g: u32,
    },
}

#[derive(Args, Debug)]
pub struct VsimpleArgs {
    #[arg(long)]
    pub g: u32,
    /// Lengths as A..B:STEP.
    #[arg(long)]
    pub ell: EllRange,
    /// Evaluate through the realization expansion instead of the closed sum.
    #[arg(long)]
    pub via_phi: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Primary,
    Alternate,
    HalfDomain,
}

impl From<FormArg> for PopForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Primary => PopForm::Primary,
            FormArg::Alternate => PopForm::Alternate,
            FormArg::HalfDomain => PopForm::HalfDomain,
        }
    }
}

#[derive(Args, Debug)]
pub struct VtypeArgs {
    #[arg(long)]
    pub g: u32,
    /// Lengths as A..B:STEP. Values must exceed the figure-eight threshold.
    #[arg(long)]
    pub ell: EllRange,
    /// Symmetry factor n(T). Not known for the figure-eight; defaults to 1.
    #[arg(long)]
    pub n_t: Option<u32>,
    #[arg(long, value_enum, default_value = "primary")]
    pub form: FormArg,
}

fn parse_sig(s: &str) -> anyhow::Result<FillingSignature> {
    let (g, n) = s.split_once(',').context("signature must be G,N")?;
    Ok(FillingSignature::new(
        g.trim().parse().context("bad signature genus")?,
        n.trim().parse().context("bad signature boundary count")?,
    ))
}

#[derive(Serialize)]
struct CrossPath {
    points: usize,
    genera: Vec<u32>,
    max_rel_err: f64,
    tol: f64,
}

#[derive(Serialize)]
struct Validation {
    table: String,
    entries: usize,
    signatures: Vec<(u32, u32)>,
    lints: Vec<String>,
    cross_path: CrossPath,
    pass: bool,
}

const CROSS_ELLS: [f64; 5] = [0.25, 1.0, 2.5, 5.0, 10.0];

pub fn run_volumes(cli: &Cli, cmd: &VolumesCmd) -> anyhow::Result<Status> {
    output::format(cli, Format::Json, false)?;
    let table = load_table(cli)?;
    let t = table.get();
    match cmd {
        VolumesCmd::Validate => {
            let tol = cli.tol.unwrap_or(1e-10);
            let mut genera = Vec::new();
            let mut worst: f64 = 0.0;
            let mut points = 0;
            for g in 2..=8 {
                let phi = match phi_s(t, FillingSignature::new(0, 2), g) {
                    Ok(p) => p,
                    Err(VolError::MissingEntries(_)) => continue,
                    Err(e) => return Err(e.into()),
                };
                genera.push(g);
                for ell in CROSS_ELLS {
                    let a = v_simple(t, g, ell)?;
                    let b = v_simple_via_phi(&phi, ell)?;
                    worst = worst.max(((a - b) / a).abs());
                    points += 1;
                }
            }
            let v = Validation {
                table: cli
                    .table
                    .as_ref()
                    .map_or("bundled".to_string(), |p| p.display().to_string()),
                entries: t.len(),
                signatures: t.signatures().collect(),
                lints: t.lints().to_vec(),
                pass: t.lints().is_empty() && worst <= tol,
                cross_path: CrossPath {
                    points,
                    genera,
                    max_rel_err: worst,
                    tol,
                },
            };
            emit_json(cli, &v)?;
            Ok(Status::from_pass(v.pass))
        }
        VolumesCmd::Inspect { g, n } => {
            let Some(e) = t.entry(*g, *n) else {
                bail!("table has no entry ({g},{n})");
            };
            let terms: Vec<String> = e.poly.terms().map(|(m, c)| format!("{c} * x^{:?}", m.alpha)).collect();
            emit_json(
                cli,
                &serde_json::json!({
                    "g": g,
                    "n": n,
                    "source": e.source,
                    "degree": e.poly.degree(),
                    "polynomial": e.poly.to_string(),
                    "terms": terms,
                }),
            )?;
            Ok(Status::Pass)
        }
        VolumesCmd::Export => {
            emit(cli, &(t.to_json() + "\n"))?;
            Ok(Status::Pass)
        }
        VolumesCmd::Realizations { sig, g } => {
            let sig = parse_sig(sig)?;
            let terms: Vec<String> = enumerate_realizations(sig, *g).iter().map(|r| r.to_string()).collect();
            emit_json(
                cli,
                &serde_json::json!({ "sig": [sig.g, sig.n], "g": g, "terms": terms }),
            )?;
            Ok(Status::Pass)
        }
    }
}

pub fn run_vsimple(cli: &Cli, a: &VsimpleArgs) -> anyhow::Result<Status> {
    let fmt = output::format(cli, Format::Csv, true)?;
    let table = load_table(cli)?;
    let t = table.get();
    let ells = a.ell.values();
    let phi = if a.via_phi {
        Some(phi_s(t, FillingSignature::new(0, 2), a.g)?)
    } else {
        None
    };
    let rows = ells
        .iter()
        .map(|&ell| {
            let value = match &phi {
                Some(p) => v_simple_via_phi(p, ell)?,
                None => v_simple(t, a.g, ell)?,
            };
            Ok(CurveRow {
                ell,
                value,
                err_estimate: 0.0,
                g: a.g,
                kind: "simple".to_string(),
            })
        })
        .collect::<Result<Vec<_>, VolError>>()?;
    write_rows(cli, fmt, &rows)?;
    Ok(Status::Pass)
}

pub fn run_vtype(cli: &Cli, a: &VtypeArgs) -> anyhow::Result<Status> {
    let fmt = output::format(cli, Format::Csv, true)?;
    let tol = cli.tol.unwrap_or(1e-8);
    let n_t = a.n_t.unwrap_or_else(|| {
        log::warn!("n(T) for the figure-eight is not known; using 1 (set --n-t to override)");
        1
    });
    let table = load_table(cli)?;
    let phi = phi_s(table.get(), FillingSignature::new(0, 3), a.g)?;
    let form: PopForm = a.form.into();
    let rows = a
        .ell
        .values()
        .par_iter()
        .map(|&ell| {
            let q = v_pop_type(&phi, ell, n_t, form, tol)?;
            Ok(CurveRow {
                ell,
                value: q.value,
                err_estimate: q.err,
                g: a.g,
                kind: "figure-eight".to_string(),
            })
        })
        .collect::<Result<Vec<_>, volfun::VolError>>()?;
    write_rows(cli, fmt, &rows)?;
    Ok(Status::Pass)
}

fn write_rows(cli: &Cli, fmt: Format, rows: &[CurveRow]) -> anyhow::Result<()> {
    match fmt {
        Format::Csv => emit(cli, &curve_csv(rows)),
        Format::Json => emit_json(cli, rows),
    }
}
