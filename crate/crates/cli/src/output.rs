//! CSV and JSON writers.

use std::io::Write;

use serde::Serialize;

use crate::sweep::{BellReport, SweepRecord};
use crate::CliError;

pub const CSV_HEADER: [&str; 10] = [
    "t_over_t1",
    "p",
    "nbar",
    "scheme",
    "f_unfiltered",
    "f_filtered",
    "p_success",
    "f_analytic_unf",
    "f_analytic_f",
    "o_factor",
];

const SIG_DIGITS: i32 = 12;

/// Fixed-point decimal with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // take the exponent after rounding, so 0.9999999999999 counts as 1
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let exponent: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (SIG_DIGITS - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            format_sig(r.t_over_t1),
            format_sig(r.p),
            format_sig(r.nbar),
            r.scheme.clone(),
            format_sig(r.f_unfiltered),
            format_sig(r.f_filtered),
            format_sig(r.p_success),
            format_sig(r.f_analytic_unf),
            format_sig(r.f_analytic_f),
            r.o_factor.map(format_sig).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::Io(io),
        other => CliError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

pub fn write_report<W: Write>(r: &BellReport, mut out: W) -> Result<(), CliError> {
    writeln!(out, "state               {}", r.state)?;
    writeln!(out, "decay probability   {}", format_sig(r.p))?;
    writeln!(out, "fidelity unfiltered {}", format_sig(r.f_unfiltered))?;
    writeln!(
        out,
        "fidelity filtered   {}  (closed form {})",
        format_sig(r.f_filtered),
        format_sig(r.f_analytic_filtered)
    )?;
    writeln!(out, "success probability {}", format_sig(r.p_success))?;
    writeln!(
        out,
        "singlet reference   1-p = {}, 1/(1+p) = {}, (1-p)^2(1+p) = {}",
        format_sig(r.singlet_unfiltered),
        format_sig(r.singlet_filtered),
        format_sig(r.singlet_success)
    )?;
    writeln!(out, "ancilla outcomes ({} POVM)", r.povm)?;
    for o in &r.outcomes {
        writeln!(out, "  {}  {}", o.bits, format_sig(o.probability))?;
    }
    writeln!(out, "  sum {}", format_sig(r.outcome_total))?;
    writeln!(
        out,
        "gate fidelity, Monte Carlo {} +/- {} (closed form {})",
        format_sig(r.haar_gate_fidelity),
        format_sig(r.haar_stderr),
        format_sig(r.analytic_gate_fidelity)
    )?;
    Ok(())
}
