//! Plain CSV writers and a reader for exported state files.
//!
//! Floats are written with `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use symrom::rom::TraceRecord;

use crate::error::CliError;

pub const TRACE_HEADER: &str = "t,H,dH";
pub const TRACE_REF_HEADER: &str = "t,H,dH,H_ref,state_error";

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `t,q_1..q_N,p_1..p_N` for states of dimension `2N`.
pub fn state_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=n {
        write!(h, ",q_{i}").expect("write to String");
    }
    for i in 1..=n {
        write!(h, ",p_{i}").expect("write to String");
    }
    h
}

pub fn states_csv(times: &[f64], states: &[&[f64]]) -> String {
    let n = states.first().map_or(0, |s| s.len() / 2);
    let mut out = state_header(n);
    out.push('\n');
    for (t, s) in times.iter().zip(states) {
        out.push_str(&fmt(*t));
        for v in *s {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        out.push('\n');
    }
    out
}

/// Reference columns for a trace: `H_ref` and `‖x − x_ref‖₂` per row.
pub struct TraceReference {
    pub h: Vec<f64>,
    pub state_error: Vec<f64>,
}

pub fn trace_csv(records: &[TraceRecord], reference: Option<&TraceReference>) -> String {
    let mut out = String::from(if reference.is_some() { TRACE_REF_HEADER } else { TRACE_HEADER });
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        write!(out, "{},{},{}", fmt(r.t), fmt(r.h), fmt(r.dh)).expect("write to String");
        if let Some(rf) = reference {
            write!(out, ",{},{}", fmt(rf.h[i]), fmt(rf.state_error[i])).expect("write to String");
        }
        out.push('\n');
    }
    out
}

/// Reads a state CSV back into `(times, states)`.
pub fn read_states_csv(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?;
    let cols = header.split(',').count();
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (row, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Validation(format!("{} row {row}: {e}", path.display())))?;
        if vals.len() != cols {
            return Err(CliError::Validation(format!(
                "{} row {row}: expected {cols} columns, found {}",
                path.display(),
                vals.len()
            )));
        }
        times.push(vals[0]);
        states.push(vals[1..].to_vec());
    }
    Ok((times, states))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_empty_trace_is_header_only() {
        assert_eq!(trace_csv(&[], None), "t,H,dH\n");
    }

    #[test]
    fn test_state_header() {
        assert_eq!(state_header(2), "t,q_1,q_2,p_1,p_2");
    }

    #[test]
    fn test_float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
