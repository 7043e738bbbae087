//! CSV and JSON emitters. Floats are written with 17 significant digits so
//! that every value round-trips bit for bit.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::asymptotics::ConvergenceReport;
use crate::config::{ExponentConfig, RawConfig};
use crate::dynamics::DynState;
use crate::error::Result;
use crate::picard::GridFunctionPair;
use crate::radial::RadialTrajectory;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<W: Write, const D: usize>(
    out: W,
    header: [&str; D],
    rows: impl Iterator<Item = [f64; D]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// `r,u,du,v,dv,P,Q`, one row per sample.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &RadialTrajectory) -> Result<()> {
    write_rows(
        out,
        ["r", "u", "du", "v", "dv", "P", "Q"],
        traj.samples
            .iter()
            .map(|s| [s.r, s.u, s.du, s.v, s.dv, s.p_mom, s.q_mom]),
    )
}

/// `r,u,du,v` on the Picard grid.
pub fn write_picard_csv<W: Write>(out: W, pair: &GridFunctionPair) -> Result<()> {
    write_rows(
        out,
        ["r", "u", "du", "v"],
        (0..pair.len()).map(|i| {
            [
                pair.grid[i],
                pair.u_vals[i],
                pair.du_vals[i],
                pair.v_vals[i],
            ]
        }),
    )
}

/// `t,X,Y,Z,W`.
pub fn write_dyn_csv<W: Write>(out: W, states: &[DynState]) -> Result<()> {
    write_rows(
        out,
        ["t", "X", "Y", "Z", "W"],
        states.iter().map(|s| [s.t, s.x, s.y, s.z, s.w]),
    )
}

/// `r,u_ratio,v_ratio` over the last decade.
pub fn write_ratio_csv<W: Write>(out: W, report: &ConvergenceReport) -> Result<()> {
    write_rows(
        out,
        ["r", "u_ratio", "v_ratio"],
        report.ratios.iter().copied(),
    )
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Reads a JSON object with keys `N, k, m, p, q, s` and validates it.
pub fn read_config(path: &Path) -> Result<ExponentConfig> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawConfig = serde_json::from_str(&text)?;
    raw.validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate;
    use crate::radial::{integrate, IntegrateOptions};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let cfg = validate(5.0, 2.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let t = integrate(&cfg, 1.0, 1.0, 1.0, &IntegrateOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,u,du,v,dv,P,Q"));
        assert_eq!(lines.count(), t.samples.len());
    }

    #[test]
    fn config_file_is_validated() {
        let dir = std::env::temp_dir().join(format!("khessian-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.json");
        std::fs::write(&good, r#"{"N":5,"k":2,"m":0,"p":1,"q":1,"s":0}"#).unwrap();
        assert_eq!(read_config(&good).unwrap().delta(), 3.0);
        let bad = dir.join("bad.json");
        std::fs::write(&bad, r#"{"N":3,"k":1,"m":0,"p":1,"q":1,"s":0}"#).unwrap();
        assert!(read_config(&bad).unwrap_err().is_usage());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
