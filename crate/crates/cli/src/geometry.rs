use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;
use tracegap_core::diagram::{examples, Diagram, ValidDiagram};
use tracegap_core::geolen::{density_proportionality, jacobian_suite, oracle_suite, VerificationReport};

use crate::output::{self, emit_json, require_file};
use crate::{Cli, Format, Status};

#[derive(Args, Debug)]
pub struct LengthArgs {
    /// Check every bundled diagram with this many bars.
    #[arg(long, conflicts_with = "diagram")]
    pub r: Option<usize>,
    /// A bundled diagram name or a path to a diagram JSON file.
    #[arg(long)]
    pub diagram: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct JacobianArgs {
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Central-difference step of the chart Jacobian.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
}

#[derive(Serialize)]
struct LengthReport {
    tol: f64,
    reports: Vec<VerificationReport>,
    max_rel_err: f64,
    pass: bool,
}

fn diagrams(a: &LengthArgs) -> anyhow::Result<Vec<(String, ValidDiagram)>> {
    if let Some(d) = &a.diagram {
        if let Some(v) = examples::by_name(d) {
            return Ok(vec![(d.clone(), v)]);
        }
        let text = require_file(std::path::Path::new(d), "diagram")
            .with_context(|| format!("{d:?} is neither a bundled diagram ({})", examples::NAMES.join(", ")))?;
        let v = Diagram::from_json(&text)?.validate()?;
        return Ok(vec![(d.clone(), v)]);
    }
    let all = examples::NAMES
        .iter()
        .map(|n| (n.to_string(), examples::by_name(n).expect("listed name")))
        .filter(|(_, v)| v.r() >= 1);
    let picked: Vec<_> = match a.r {
        Some(r) => all.filter(|(_, v)| v.r() == r).collect(),
        None => all.collect(),
    };
    if picked.is_empty() {
        bail!("no bundled diagram has r = {}", a.r.unwrap_or(0));
    }
    Ok(picked)
}

pub fn run_length(cli: &Cli, a: &LengthArgs) -> anyhow::Result<Status> {
    output::format(cli, Format::Json, false)?;
    let tol = cli.tol.unwrap_or(1e-9);
    let reports = diagrams(a)?
        .iter()
        .map(|(id, d)| oracle_suite(d, id, a.samples, cli.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let max_rel_err = reports.iter().map(|r| r.max_rel_err).fold(0.0, f64::max);
    let rep = LengthReport {
        tol,
        reports,
        max_rel_err,
        pass: max_rel_err <= tol,
    };
    emit_json(cli, &rep)?;
    Ok(Status::from_pass(rep.pass))
}

pub fn run_jacobian(cli: &Cli, a: &JacobianArgs) -> anyhow::Result<Status> {
    output::format(cli, Format::Json, false)?;
    let tol = cli.tol.unwrap_or(1e-6);
    let s = jacobian_suite(a.samples, cli.seed, a.step)?;
    let pass = s.max_rel_err <= tol;
    emit_json(cli, &serde_json::json!({ "tol": tol, "suite": s, "pass": pass }))?;
    Ok(Status::from_pass(pass))
}

pub fn run_density(cli: &Cli, a: &DensityArgs) -> anyhow::Result<Status> {
    output::format(cli, Format::Json, false)?;
    let tol = cli.tol.unwrap_or(1e-6);
    let d = density_proportionality(a.samples, cli.seed, a.step)?;
    let pass = d.spread <= tol && d.power_of_two_rel_err <= tol;
    emit_json(cli, &serde_json::json!({ "tol": tol, "report": d, "pass": pass }))?;
    Ok(Status::from_pass(pass))
}
