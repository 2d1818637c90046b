//! Subcommand drivers: run an experiment, write its files, pick the exit status.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use spinbell::clustering::CorrelationSample;

use crate::error::{CliResult, ExitStatus};
use crate::experiments::{self, Run};
use crate::output::{num, sites, RunOutput};
use crate::self_test;

/// What a finished subcommand reports back to `main`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

pub const SAMPLE_HEADER: [&str; 9] = ["r", "t", "size_x", "size_y", "op_a", "op_b", "value", "x", "y"];

fn sample_rows(samples: &[CorrelationSample]) -> Vec<Vec<String>> {
    samples
        .iter()
        .map(|s| {
            vec![
                num(s.r),
                num(s.t),
                s.size_x().to_string(),
                s.size_y().to_string(),
                s.op_a.clone(),
                s.op_b.clone(),
                num(s.value),
                sites(&s.x),
                sites(&s.y),
            ]
        })
        .collect()
}

fn run_record(run: &Run, command: &str) -> Value {
    json!({
        "record": "run",
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": run.config_hash(),
        "input_digests": run
            .digests
            .iter()
            .map(|(path, digest)| json!({ "path": path, "blob_sha256": digest }))
            .collect::<Vec<_>>(),
        "seed": run.config.seed,
        "beta_below_beta_star": run.config.state.below_beta_star(),
        "fit_hyperparameters": run.config.fit,
        "seesaw": run.config.seesaw,
        "config": run.config,
    })
}

fn summary_record(started: Instant, fields: Value) -> Value {
    let mut v = json!({ "record": "summary", "wall_time_s": started.elapsed().as_secs_f64() });
    if let (Some(obj), Value::Object(extra)) = (v.as_object_mut(), fields) {
        obj.extend(extra);
    }
    v
}

fn record<T: Serialize>(kind: &str, value: &T) -> Value {
    let mut v = serde_json::to_value(value).unwrap_or(Value::Null);
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("record".into(), kind.into());
            v
        }
        None => json!({ "record": kind, "value": v }),
    }
}

fn violation_status(violations: usize) -> ExitStatus {
    if violations == 0 {
        ExitStatus::Success
    } else {
        ExitStatus::CertificateViolation
    }
}

pub fn chsh_scan(run: &Run) -> CliResult<Outcome> {
    let started = Instant::now();
    let report = experiments::chsh_scan(run)?;
    let mut out = RunOutput::create(&run.out_dir)?;
    out.write_csv("samples.csv", &SAMPLE_HEADER, &sample_rows(&report.samples))?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                sites(&r.x),
                sites(&r.y),
                num(r.r),
                num(r.chsh_sup),
                num(r.epsilon),
                num(r.bound),
                r.satisfied.to_string(),
                r.converged.to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "chsh_scan.csv",
        &["x", "y", "r", "chsh_sup", "epsilon", "bound", "satisfied", "converged"],
        &rows,
    )?;
    let violations = report.rows.iter().filter(|r| !r.satisfied).count();
    let mut records = vec![run_record(run, "chsh-scan"), json!({ "record": "fit", "source": report.fit_source, "fit": report.fit })];
    records.extend(report.rows.iter().map(|r| record("row", r)));
    records.push(summary_record(started, json!({ "rows": report.rows.len(), "violations": violations })));
    out.write_jsonl("chsh_scan.jsonl", &records)?;
    Ok(Outcome {
        status: violation_status(violations),
        summary: format!(
            "chsh-scan: {} pairs, {} violations, C = {}, lambda = {}",
            report.rows.len(),
            violations,
            report.fit.c,
            report.fit.lambda
        ),
        files: out.written().to_vec(),
    })
}

pub fn clustering_fit(run: &Run) -> CliResult<Outcome> {
    let started = Instant::now();
    let report = experiments::clustering_fit(run)?;
    let mut out = RunOutput::create(&run.out_dir)?;
    out.write_csv("samples.csv", &SAMPLE_HEADER, &sample_rows(&report.samples))?;
    out.write_json(
        "fit.json",
        &json!({
            "config_hash": run.config_hash(),
            "source": report.fit_source,
            "fit": report.fit,
            "dominance": { "samples": report.samples.len(), "violations": report.violations },
        }),
    )?;
    let records = vec![
        run_record(run, "clustering-fit"),
        json!({ "record": "fit", "source": report.fit_source, "fit": report.fit }),
        summary_record(started, json!({ "samples": report.samples.len(), "violations": report.violations })),
    ];
    out.write_jsonl("clustering_fit.jsonl", &records)?;
    let status = if report.violations == 0 { ExitStatus::Success } else { ExitStatus::NumericFailure };
    Ok(Outcome {
        status,
        summary: format!(
            "clustering-fit: C = {}, lambda = {}, {} samples, {} outside the envelope",
            report.fit.c,
            report.fit.lambda,
            report.samples.len(),
            report.violations
        ),
        files: out.written().to_vec(),
    })
}

pub fn quench(run: &Run) -> CliResult<Outcome> {
    let started = Instant::now();
    let report = experiments::quench(run)?;
    let mut out = RunOutput::create(&run.out_dir)?;
    out.write_csv("samples.csv", &SAMPLE_HEADER, &sample_rows(&report.samples))?;
    let rows: Vec<Vec<String>> = report
        .cells
        .iter()
        .map(|c| vec![num(c.t), num(c.r), num(c.value), num(c.bound), c.dominated.to_string()])
        .collect();
    out.write_csv("light_cone.csv", &["t", "r", "value", "bound", "dominated"], &rows)?;
    let undominated = report.cells.iter().filter(|c| !c.dominated).count();
    let mut records = vec![run_record(run, "quench"), json!({ "record": "fit", "source": report.fit_source, "fit": report.fit })];
    records.extend(report.cells.iter().map(|c| record("cell", c)));
    records.push(summary_record(started, json!({ "cells": report.cells.len(), "undominated": undominated })));
    out.write_jsonl("quench.jsonl", &records)?;
    let status = if undominated == 0 { ExitStatus::Success } else { ExitStatus::NumericFailure };
    Ok(Outcome {
        status,
        summary: format!(
            "quench: C = {}, lambda = {}, v = {}, {} cells, {} undominated",
            report.fit.c,
            report.fit.lambda,
            report.fit.v,
            report.cells.len(),
            undominated
        ),
        files: out.written().to_vec(),
    })
}

pub fn bell_certify(run: &Run) -> CliResult<Outcome> {
    let started = Instant::now();
    let report = experiments::bell_certify(run)?;
    let mut out = RunOutput::create(&run.out_dir)?;
    out.write_csv("samples.csv", &SAMPLE_HEADER, &sample_rows(&report.samples))?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            let c = &row.certificate;
            vec![
                row.set.to_string(),
                num(row.t),
                row.regions.iter().map(sites).collect::<Vec<_>>().join(";"),
                serde_json::to_value(c.formula).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
                num(c.value),
                num(c.bound),
                num(c.margin()),
                c.satisfied.to_string(),
                c.converged.to_string(),
            ]
        })
        .collect();
    out.write_csv(
        "certificates.csv",
        &["set", "t", "regions", "formula", "value", "bound", "margin", "satisfied", "converged"],
        &rows,
    )?;
    let violations = report.rows.iter().filter(|r| !r.certificate.satisfied).count();
    let mut records = vec![run_record(run, "bell-certify"), json!({ "record": "fit", "source": report.fit_source, "fit": report.fit })];
    records.extend(report.rows.iter().map(|r| record("certificate", r)));
    records.push(summary_record(started, json!({ "rows": report.rows.len(), "violations": violations })));
    out.write_jsonl("certificates.jsonl", &records)?;
    Ok(Outcome {
        status: violation_status(violations),
        summary: format!("bell-certify: {} certificates, {} violations", report.rows.len(), violations),
        files: out.written().to_vec(),
    })
}

pub fn local_bound(path: &Path) -> CliResult<Outcome> {
    let (ineq, bound) = experiments::local_bound(path)?;
    let strategy: Vec<String> = bound
        .strategy
        .iter()
        .enumerate()
        .map(|(p, s)| format!("party {p}: {}", s.iter().map(|v| format!("{v:+}")).collect::<Vec<_>>().join(" ")))
        .collect();
    Ok(Outcome {
        status: ExitStatus::Success,
        summary: format!(
            "delta_c = {}\nsettings = {:?}\n{}",
            bound.value,
            ineq.settings(),
            strategy.join("\n")
        ),
        files: Vec::new(),
    })
}

pub fn self_test() -> CliResult<Outcome> {
    let checks = self_test::run_all();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let lines: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
        .collect();
    Ok(Outcome {
        status: if failed == 0 { ExitStatus::Success } else { ExitStatus::NumericFailure },
        summary: lines.join("\n"),
        files: Vec::new(),
    })
}
