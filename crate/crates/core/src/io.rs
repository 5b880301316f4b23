//! File formats: CSV artifacts, JSON reports, the run manifest and the flat
//! key-value config file.
//!
//! CSV floats are printed with 17 significant digits so every value
//! round-trips exactly; reruns with identical arguments produce
//! byte-identical CSVs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::FarFieldFit;
use crate::error::{Error, Result};
use crate::nls::{DiagnosticsRow, FieldState};
use crate::profile::RadialProfile;
use crate::shooting::{ShootResult, TraceRow};

/// 17 significant digits, round-trip safe for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_profile_csv(path: &Path, profile: &RadialProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "rho,re_q,im_q,abs_q,re_dq,im_dq")?;
    for i in 0..profile.len() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(profile.rho[i]),
            fmt_f64(profile.q[i].re),
            fmt_f64(profile.q[i].im),
            fmt_f64(profile.q[i].norm()),
            fmt_f64(profile.dq[i].re),
            fmt_f64(profile.dq[i].im),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    c1_re: f64,
    c1_im: f64,
    c2_re: f64,
    c2_im: f64,
    window_lo: f64,
    window_hi: f64,
    residual: f64,
}

pub fn write_fit_json(path: &Path, fit: &FarFieldFit) -> Result<()> {
    let report = FitReport {
        c1_re: fit.c1.re,
        c1_im: fit.c1.im,
        c2_re: fit.c2.re,
        c2_im: fit.c2.im,
        window_lo: fit.window.0,
        window_hi: fit.window.1,
        residual: fit.residual,
    };
    write_json(path, &report)
}

#[derive(Serialize)]
pub struct DecayReport {
    pub window_lo: f64,
    pub window_hi: f64,
    pub slope: f64,
    /// -(d - 1/sigma), the predicted far-field envelope exponent.
    pub predicted: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Config(format!("json serialization failed: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Serialize)]
struct ShootReport {
    a_opt: f64,
    q0_opt: f64,
    c2_min: f64,
    evaluations: usize,
    converged: bool,
}

pub fn write_shoot_json(path: &Path, res: &ShootResult) -> Result<()> {
    let report = ShootReport {
        a_opt: res.a_opt,
        q0_opt: res.q0_opt,
        c2_min: res.c2_min,
        evaluations: res.evaluations,
        converged: res.converged,
    };
    write_json(path, &report)
}

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iter,a,q0,abs_c2")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{}",
            r.iter,
            fmt_f64(r.a),
            fmt_f64(r.q0),
            fmt_f64(r.abs_c2)
        )?;
    }
    Ok(())
}

pub fn write_snapshot_csv(path: &Path, state: &FieldState) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,re_psi,im_psi,abs_psi")?;
    for (x, p) in state.x.iter().zip(&state.psi) {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(*x),
            fmt_f64(p.re),
            fmt_f64(p.im),
            fmt_f64(p.norm())
        )?;
    }
    Ok(())
}

/// Snapshot reader for the `diagnose` command; accepts exactly the schema
/// written by [`write_snapshot_csv`].
pub fn read_snapshot_csv(path: &Path) -> Result<FieldState> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty snapshot file".into()))??;
    if header.trim() != "x,re_psi,im_psi,abs_psi" {
        return Err(Error::Config(format!(
            "unexpected snapshot header: {header}"
        )));
    }
    let mut x = Vec::new();
    let mut psi = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(Error::Config(format!("bad snapshot row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad float {s:?}: {e}")))
        };
        x.push(parse(cols[0])?);
        psi.push(Complex64::new(parse(cols[1])?, parse(cols[2])?));
    }
    if x.len() < 2 {
        return Err(Error::Config("snapshot needs at least two rows".into()));
    }
    Ok(FieldState { t: 0.0, x, psi })
}

pub fn write_diagnostics_csv(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,mass,hamiltonian,linf,focusing")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.mass),
            fmt_f64(r.hamiltonian),
            fmt_f64(r.linf),
            fmt_f64(r.focusing)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub core_radius: f64,
    pub rel_linf: f64,
    pub rel_l2: f64,
}

pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,core_radius,rel_linf,rel_l2")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.core_radius),
            fmt_f64(r.rel_linf),
            fmt_f64(r.rel_l2)
        )?;
    }
    Ok(())
}

/// Blowup-norm rows: the exact scaling law L^(d/p - 1/sigma) ||Q||_p next to
/// the plain ||Q||_p / L^(1/sigma) form (they coincide at p = inf; the
/// change-of-variables factor separates them at finite p).
#[derive(Debug, Clone, Copy)]
pub struct NormRow {
    pub t: f64,
    pub l: f64,
    pub p: f64,
    pub norm_exact: f64,
    pub norm_plain_form: f64,
}

pub fn write_norms_csv(path: &Path, rows: &[NormRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,l,p,norm_exact,norm_plain_form")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.l),
            if r.p.is_infinite() {
                "inf".to_string()
            } else {
                fmt_f64(r.p)
            },
            fmt_f64(r.norm_exact),
            fmt_f64(r.norm_plain_form)
        )?;
    }
    Ok(())
}

/// Record of one CLI invocation: what ran, with which parameters, what it
/// wrote. Emitted on success and on failure (then with the error attached).
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub wall_time_s: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            status: "ok".to_string(),
            error: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }
}

/// Flat `key = value` config file; `#` starts a comment. Keys mirror the
/// long CLI flags with underscores; flags win over file values.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let r = BufReader::new(File::open(path)?);
    let mut map = BTreeMap::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
