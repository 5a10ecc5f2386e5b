//! CSV and JSON writers for curves, traces and reports.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pv_model::{Environment, IvPoint};
use crate::sim_engine::SimTrace;

pub const TRACE_HEADER: [&str; 12] = [
    "time",
    "duty_applied",
    "d_hat",
    "g_hat",
    "eta",
    "alpha",
    "power",
    "env_irradiance",
    "env_temperature",
    "oracle_d_star",
    "oracle_p_star",
    "saturation_flag",
];

pub fn write_pv_curve<W: Write>(out: W, points: &[IvPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["voltage", "current", "power"])?;
    for p in points {
        w.write_record([p.voltage.to_string(), p.current.to_string(), p.power.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_duty_curve<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["duty", "power"])?;
    for (d, p) in points {
        w.write_record([d.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub const PV_FAMILY_HEADER: [&str; 5] = ["irradiance", "temperature", "voltage", "current", "power"];

/// One CSV holding several I-V curves, each row tagged with its environment.
pub fn write_pv_family<W: Write>(out: W, curves: &[(Environment, Vec<IvPoint>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PV_FAMILY_HEADER)?;
    for (env, points) in curves {
        for p in points {
            w.write_record(
                [env.irradiance, env.temperature, p.voltage, p.current, p.power].map(|v| v.to_string()),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pv_family<R: Read>(input: R) -> Result<Vec<(Environment, Vec<IvPoint>)>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(PV_FAMILY_HEADER.iter().copied()) {
        return Err(Error::InvalidParameter("unexpected pv curve header".into()));
    }
    let mut out: Vec<(Environment, Vec<IvPoint>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut v = [0.0; 5];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("`{field}` is not a number")))?;
        }
        let env = Environment { irradiance: v[0], temperature: v[1] };
        let point = IvPoint { voltage: v[2], current: v[3], power: v[4] };
        match out.last_mut() {
            Some((e, pts)) if *e == env => pts.push(point),
            _ => out.push((env, vec![point])),
        }
    }
    Ok(out)
}

/// Writes a trace with [`TRACE_HEADER`]; floats use shortest round-trip text.
pub fn write_trace<W: Write>(out: W, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for k in 0..trace.len() {
        let row = [
            trace.time[k],
            trace.duty_applied[k],
            trace.d_hat[k],
            trace.g_hat[k],
            trace.eta[k],
            trace.alpha[k],
            trace.power[k],
            trace.env_irradiance[k],
            trace.env_temperature[k],
            trace.oracle_d_star[k],
            trace.oracle_p_star[k],
        ];
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(u8::from(trace.saturation_flag[k]).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<SimTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::InvalidParameter(format!("unexpected trace header: {header:?}")));
    }
    let mut t = SimTrace::default();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| {
                Error::InvalidParameter(format!("row {}: `{}` in column {} is not a number", row + 1, &rec[i], TRACE_HEADER[i]))
            })
        };
        t.time.push(num(0)?);
        t.duty_applied.push(num(1)?);
        t.d_hat.push(num(2)?);
        t.g_hat.push(num(3)?);
        t.eta.push(num(4)?);
        t.alpha.push(num(5)?);
        t.power.push(num(6)?);
        t.env_irradiance.push(num(7)?);
        t.env_temperature.push(num(8)?);
        t.oracle_d_star.push(num(9)?);
        t.oracle_p_star.push(num(10)?);
        t.saturation_flag.push(match &rec[11] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::InvalidParameter(format!("row {}: saturation flag `{other}`", row + 1)));
            }
        });
    }
    Ok(t)
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}
