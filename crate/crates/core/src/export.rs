//! CSV and JSON writers.
//!
//! CSV output is comma-separated with a header row and LF line endings.
//! Run metadata goes in leading `# key: value` comment lines so that every
//! file describes the configuration that produced it.

use std::io::{self, Write};

use serde::Serialize;

use crate::mc::EmissionRecord;
use crate::pde::{PdeSample, ProbabilityField};
use crate::stats::DelayDistribution;

/// Writes `# key: value` lines.
pub fn write_header<W: Write>(w: &mut W, entries: &[(String, String)]) -> io::Result<()> {
    for (k, v) in entries {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

pub fn write_field_csv<W: Write>(w: &mut W, field: &ProbabilityField) -> io::Result<()> {
    writeln!(w, "theta_center,p")?;
    for (theta, p) in field.grid().centers().zip(field.values()) {
        writeln!(w, "{theta},{p}")?;
    }
    Ok(())
}

pub fn write_populations_csv<W: Write>(w: &mut W, samples: &[PdeSample]) -> io::Result<()> {
    writeln!(w, "t,rho0,rho1")?;
    for s in samples {
        writeln!(w, "{},{},{}", s.t, s.rho0, s.rho1)?;
    }
    Ok(())
}

pub fn write_emissions_csv<W: Write>(w: &mut W, records: &[EmissionRecord]) -> io::Result<()> {
    writeln!(w, "trajectory_id,emission_time")?;
    for (id, rec) in records.iter().enumerate() {
        for t in &rec.times {
            writeln!(w, "{id},{t}")?;
        }
    }
    Ok(())
}

/// Long-format distributions: `tau,density,kind`.
pub fn write_distributions_csv<W: Write>(w: &mut W, dists: &[&DelayDistribution]) -> io::Result<()> {
    writeln!(w, "tau,density,kind")?;
    for d in dists {
        let kind = d.kind().as_str();
        for (t, v) in d.tau().iter().zip(d.density()) {
            writeln!(w, "{t},{v},{kind}")?;
        }
    }
    Ok(())
}

/// Baseline delay-function curve: `tau,ell_q`.
pub fn write_delay_function_csv<W: Write>(w: &mut W, dist: &DelayDistribution) -> io::Result<()> {
    writeln!(w, "tau,ell_q")?;
    for (t, v) in dist.tau().iter().zip(dist.density()) {
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AtomAngle;
    use crate::pde::ThetaGrid;

    #[test]
    fn csv_layouts() {
        let mut buf = Vec::new();
        write_header(&mut buf, &[("seed".into(), "7".into())]).unwrap();
        let field = ProbabilityField::delta(ThetaGrid::new(16).unwrap(), AtomAngle::GROUND);
        write_field_csv(&mut buf, &field).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed: 7");
        assert_eq!(lines[1], "theta_center,p");
        assert_eq!(lines.len(), 18);
        assert!(!text.contains('\r'));

        let mut buf = Vec::new();
        let recs = vec![
            EmissionRecord { times: vec![0.5, 1.25], t_end: 2.0 },
            EmissionRecord { times: vec![], t_end: 2.0 },
            EmissionRecord { times: vec![1.0], t_end: 2.0 },
        ];
        write_emissions_csv(&mut buf, &recs).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trajectory_id,emission_time\n0,0.5\n0,1.25\n2,1\n"
        );
    }
}
