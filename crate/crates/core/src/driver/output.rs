use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::SimConfig;
use super::run::{RunOutput, SampleRow};
use crate::error::Result;
use crate::euler::EulerianFrame;

#[derive(Serialize)]
struct FrameLine<'a> {
    t: f64,
    a: f64,
    b: f64,
    x: &'a [f64],
    y: &'a [f64],
    /// `(rho, v, m)` per cell.
    cells: Vec<[f64; 3]>,
    rh_max: f64,
}

pub fn write_frame(w: &mut impl Write, f: &EulerianFrame) -> Result<()> {
    let line = FrameLine {
        t: f.t,
        a: f.a,
        b: f.b,
        x: &f.x,
        y: &f.y,
        cells: f.cells.iter().map(|c| [c.rho, c.v, c.m]).collect(),
        rh_max: f.rh_max,
    };
    serde_json::to_writer(&mut *w, &line)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn diag_header(k_max: usize, n_probes: usize) -> String {
    let mut cols: Vec<String> = [
        "t", "step", "L", "L_in", "L_0out", "L_Mout", "L_drop", "L_xi", "V", "tv_ln_u", "tv_v", "osc_v", "u_min",
        "u_max", "mass", "momentum", "a", "b", "n_fronts", "max_gen", "rh_max",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=k_max).map(|k| format!("F_{k}")));
    cols.extend((0..n_probes).map(|i| format!("W_{i}")));
    cols.extend((0..n_probes).map(|i| format!("A_{i}")));
    cols.join(",")
}

pub fn diag_row(s: &SampleRow, shift: f64) -> String {
    let d = &s.diag;
    let mut cols: Vec<String> = vec![
        d.t.to_string(),
        s.step.to_string(),
        d.l.to_string(),
        d.l_in.to_string(),
        d.l_0out.to_string(),
        d.l_mout.to_string(),
        d.l_drop.to_string(),
        d.l_xi.to_string(),
        d.v_gen.to_string(),
        d.tv_ln_u.to_string(),
        d.tv_v.to_string(),
        d.osc_v.to_string(),
        d.u_min.to_string(),
        d.u_max.to_string(),
        d.mass.to_string(),
        d.momentum.to_string(),
        (d.a + shift * d.t).to_string(),
        (d.b + shift * d.t).to_string(),
        d.n_fronts.to_string(),
        d.max_gen.to_string(),
        s.rh_max.to_string(),
    ];
    cols.extend(d.f.iter().map(|x| x.to_string()));
    cols.extend(d.w.iter().map(|x| x.to_string()));
    cols.extend(d.approaching.iter().map(|x| x.to_string()));
    cols.join(",")
}

/// Writes `diag.csv`, `report.json` and, if enabled, `events.csv`.
pub fn write_run(dir: &Path, cfg: &SimConfig, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let shift = if cfg.deshift { out.report.v_bar } else { 0.0 };
    let mut w = BufWriter::new(File::create(dir.join("diag.csv"))?);
    writeln!(w, "{}", diag_header(cfg.k_max, out.report.resolved.probes.len()))?;
    for s in &out.samples {
        writeln!(w, "{}", diag_row(s, shift))?;
    }
    w.flush()?;
    if cfg.event_log {
        let mut w = BufWriter::new(File::create(dir.join("events.csv"))?);
        writeln!(w, "t,kind,y,delta_L,delta_L_xi,L,L_in,L_xi")?;
        for e in &out.events {
            writeln!(w, "{},{},{},{},{},{},{},{}", e.t, e.kind, e.y, e.delta_l, e.delta_l_xi, e.l, e.l_in, e.l_xi)?;
        }
        w.flush()?;
    }
    let mut w = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(&mut w, &out.report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
