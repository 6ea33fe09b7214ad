//! On-disk formats.
//!
//! # Problem file
//!
//! Little-endian flat binary holding one measurement ensemble and, when
//! known, the generating signal:
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 8    | magic `SPRSFPR1`                              |
//! | 8      | 1    | mode: 0 real, 1 complex                       |
//! | 9      | 7    | zero padding                                  |
//! | 16     | 8    | `m` (u64)                                     |
//! | 24     | 8    | `n` (u64)                                     |
//! | 32     | 8    | `k`, nonzeros of the stored truth; 0 = absent |
//! | 40     | …    | rows `a_1 … a_m`, row-major scalars           |
//! |        | 8m   | observed amplitudes `q`                       |
//! |        | 8m   | noiseless amplitudes                          |
//! |        | …    | truth (n scalars), present iff `k > 0`        |
//!
//! A scalar is one f64 in real mode and an interleaved `(re, im)` pair of
//! f64 in complex mode.
//!
//! # Tables
//!
//! CSV with a header row; floats use the shortest round-trip form (exponent
//! notation outside `[1e-4, 1e16)`)
//! and the noiseless SNR is written as `inf`. Sweep tables omit wall time
//! unless asked, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use sprsf_core::model::{MeasurementEnsemble, SparseSignal};
use sprsf_core::numerics::count_nonzero;
use sprsf_core::solver::SolverTrace;
use sprsf_core::{Complex64, FieldMode, Scalar};

use crate::error::{Error, Result};
use crate::harness::{Reconstruction, SweepResult, TrialRecord};

pub const PROBLEM_MAGIC: &[u8; 8] = b"SPRSFPR1";
const HEADER_LEN: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData<S> {
    pub ensemble: MeasurementEnsemble<S>,
    pub truth: Option<SparseSignal<S>>,
}

/// A problem file of either field.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Real(ProblemData<f64>),
    Complex(ProblemData<Complex64>),
}

impl Problem {
    pub fn mode(&self) -> FieldMode {
        match self {
            Problem::Real(_) => FieldMode::Real,
            Problem::Complex(_) => FieldMode::Complex,
        }
    }
}

fn put_scalars<S: Scalar>(out: &mut Vec<u8>, v: &[S]) {
    for s in v {
        out.extend_from_slice(&s.re().to_le_bytes());
        if S::MODE == FieldMode::Complex {
            out.extend_from_slice(&s.im().to_le_bytes());
        }
    }
}

fn put_reals(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_problem<S: Scalar>(ens: &MeasurementEnsemble<S>, truth: Option<&SparseSignal<S>>) -> Result<Vec<u8>> {
    if let Some(x) = truth {
        if x.n() != ens.n() {
            return Err(sprsf_core::Error::DimensionMismatch {
                expected: ens.n(),
                found: x.n(),
            }
            .into());
        }
    }
    let width = if S::MODE == FieldMode::Complex { 16 } else { 8 };
    let mut out = Vec::with_capacity(HEADER_LEN + width * ens.m() * (ens.n() + 1) + 16 * ens.m());
    out.extend_from_slice(PROBLEM_MAGIC);
    out.push(match S::MODE {
        FieldMode::Real => 0,
        FieldMode::Complex => 1,
    });
    out.extend_from_slice(&[0u8; 7]);
    out.extend_from_slice(&(ens.m() as u64).to_le_bytes());
    out.extend_from_slice(&(ens.n() as u64).to_le_bytes());
    let k = truth.map_or(0, |x| count_nonzero(&x.vector));
    out.extend_from_slice(&(k as u64).to_le_bytes());
    put_scalars(&mut out, ens.raw_rows());
    put_reals(&mut out, &ens.q);
    put_reals(&mut out, &ens.clean);
    if let Some(x) = truth.filter(|_| k > 0) {
        put_scalars(&mut out, &x.vector);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, len: usize) -> std::result::Result<&[u8], String> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn scalars<S: Scalar>(&mut self, count: usize) -> std::result::Result<Vec<S>, String> {
        (0..count)
            .map(|_| {
                let re = self.f64()?;
                let im = if S::MODE == FieldMode::Complex {
                    self.f64()?
                } else {
                    0.0
                };
                Ok(S::from_parts(re, im))
            })
            .collect()
    }

    fn reals(&mut self, count: usize) -> std::result::Result<Vec<f64>, String> {
        (0..count).map(|_| self.f64()).collect()
    }
}

fn decode_body<S: Scalar>(
    c: &mut Cursor<'_>,
    m: usize,
    n: usize,
    k: usize,
) -> std::result::Result<ProblemData<S>, String> {
    let cells = m.checked_mul(n).ok_or("m*n overflows")?;
    let rows = c.scalars::<S>(cells)?;
    let q = c.reals(m)?;
    let clean = c.reals(m)?;
    let ensemble = MeasurementEnsemble::from_parts(m, n, rows, q, Some(clean)).map_err(|e| e.to_string())?;
    let truth = if k > 0 {
        let v = c.scalars::<S>(n)?;
        let x = SparseSignal::from_vector(v);
        if x.sparsity() != k {
            return Err(format!("header says k = {k} but truth has {} nonzeros", x.sparsity()));
        }
        Some(x)
    } else {
        None
    };
    if c.pos != c.bytes.len() {
        return Err(format!("{} trailing bytes", c.bytes.len() - c.pos));
    }
    Ok(ProblemData { ensemble, truth })
}

pub fn decode_problem(bytes: &[u8]) -> std::result::Result<Problem, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != PROBLEM_MAGIC {
        return Err("bad magic".into());
    }
    let mode = c.take(8)?[0];
    let m = c.u64()? as usize;
    let n = c.u64()? as usize;
    let k = c.u64()? as usize;
    if k > n {
        return Err(format!("k = {k} exceeds n = {n}"));
    }
    match mode {
        0 => decode_body::<f64>(&mut c, m, n, k).map(Problem::Real),
        1 => decode_body::<Complex64>(&mut c, m, n, k).map(Problem::Complex),
        other => Err(format!("unknown mode byte {other}")),
    }
}

pub fn write_problem<S: Scalar>(
    path: &Path,
    ens: &MeasurementEnsemble<S>,
    truth: Option<&SparseSignal<S>>,
) -> Result<()> {
    let bytes = encode_problem(ens, truth)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_problem(path: &Path) -> Result<Problem> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_problem(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e16)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn opt_snr(s: Option<f64>) -> String {
    s.map_or_else(|| "inf".to_string(), num)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub const SWEEP_HEADER: [&str; 15] = [
    "cell",
    "algorithm",
    "mode",
    "n",
    "true_k",
    "k_hat",
    "m_over_n",
    "m",
    "snr_db",
    "trials",
    "successes",
    "success_rate",
    "mean_rel_err",
    "median_rel_err",
    "mean_iterations",
];

/// One row per cell. `timing` appends `mean_wall_secs`.
pub fn write_sweep_csv<W: Write>(w: W, result: &SweepResult, timing: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if timing {
        header.push("mean_wall_secs");
    }
    out.write_record(&header)?;
    for c in &result.cells {
        let mut row = vec![
            c.cell.to_string(),
            c.algorithm.to_string(),
            c.mode.to_string(),
            c.n.to_string(),
            c.true_k.to_string(),
            c.k_hat.to_string(),
            num(c.m_over_n),
            c.m.to_string(),
            opt_snr(c.snr_db),
            c.trials.to_string(),
            c.successes.to_string(),
            num(c.success_rate),
            num(c.mean_rel_err),
            num(c.median_rel_err),
            num(c.mean_iterations),
        ];
        if timing {
            row.push(num(c.mean_wall_secs));
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_sweep_csv(path: &Path, result: &SweepResult, timing: bool) -> Result<()> {
    write_sweep_csv(create(path)?, result, timing)
}

/// One JSON object per trial. Without `timing` the `wall_secs` key is
/// dropped.
pub fn write_trials_jsonl<W: Write>(mut w: W, trials: &[TrialRecord], timing: bool) -> Result<()> {
    for t in trials {
        let mut v = serde_json::to_value(t)?;
        if !timing {
            if let Some(obj) = v.as_object_mut() {
                obj.remove("wall_secs");
            }
        }
        serde_json::to_writer(&mut w, &v)?;
        w.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
    }
    w.flush().map_err(|e| Error::io("<jsonl>", e))
}

pub fn save_trials_jsonl(path: &Path, trials: &[TrialRecord], timing: bool) -> Result<()> {
    write_trials_jsonl(create(path)?, trials, timing)
}

/// Columns `t, mu, grad_norm, objective, rel_err`; `rel_err` is empty
/// without ground truth.
pub fn write_trace_csv<W: Write>(w: W, trace: &SolverTrace) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "mu", "grad_norm", "objective", "rel_err"])?;
    for r in &trace.records {
        out.write_record([
            r.t.to_string(),
            num(r.mu),
            num(r.grad_norm),
            num(r.objective),
            r.rel_err.map_or_else(String::new, num),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_trace_csv(path: &Path, trace: &SolverTrace) -> Result<()> {
    write_trace_csv(create(path)?, trace)
}

/// Columns `index, re, im`.
pub fn write_vector_csv<W: Write, S: Scalar>(w: W, v: &[S]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["index", "re", "im"])?;
    for (i, s) in v.iter().enumerate() {
        out.write_record([i.to_string(), num(s.re()), num(s.im())])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_vector_csv<S: Scalar>(path: &Path, v: &[S]) -> Result<()> {
    write_vector_csv(create(path)?, v)
}

/// Columns `index, truth_re, truth_im, sprsf_re, sprsf_im, baseline_re,
/// baseline_im`.
pub fn write_reconstruction_csv<W: Write>(w: W, r: &Reconstruction) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "index",
        "truth_re",
        "truth_im",
        "sprsf_re",
        "sprsf_im",
        "baseline_re",
        "baseline_im",
    ])?;
    for i in 0..r.truth.len() {
        let (t, s, b) = (r.truth[i], r.sprsf[i], r.baseline[i]);
        out.write_record([
            i.to_string(),
            num(t.re),
            num(t.im),
            num(s.re),
            num(s.im),
            num(b.re),
            num(b.im),
        ])?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_reconstruction_csv(path: &Path, r: &Reconstruction) -> Result<()> {
    write_reconstruction_csv(create(path)?, r)
}

/// Small summary printed to stdout by the CLI.
#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub algorithm: &'static str,
    pub mode: &'static str,
    pub m: usize,
    pub n: usize,
    pub k_hat: usize,
    pub iterations: usize,
    pub final_mu: f64,
    pub final_grad_norm: f64,
    pub rel_err: Option<f64>,
    pub init_rel_err: Option<f64>,
    pub converged_early: bool,
    pub diverged: bool,
}
