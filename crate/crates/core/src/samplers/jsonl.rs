//! JSON-lines trajectory output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::gillespie::Trajectory;
use crate::error::Result;
use crate::state_space::StateSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub seed: u64,
    pub model_ref: String,
    pub t: f64,
    pub gamma: f64,
    pub mode: String,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub site: usize,
    pub from_symbol: char,
    pub to_symbol: char,
}

/// Writes the header line followed by one line per jump.
pub fn write_trajectory<W: Write>(
    mut out: W,
    header: &TrajectoryHeader,
    space: &StateSpace,
    traj: &Trajectory,
) -> Result<()> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    let alpha = space.alphabet();
    for j in &traj.jumps {
        let rec = JumpRecord {
            time: j.time,
            site: j.site,
            from_symbol: alpha.symbol(j.from_symbol),
            to_symbol: alpha.symbol(j.to_symbol),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::gillespie::Jump;

    #[test]
    fn writes_header_then_jumps() {
        let sp = StateSpace::codons();
        let traj = Trajectory {
            start: sp.parse("AAA").unwrap(),
            jumps: vec![Jump {
                time: 0.25,
                site: 1,
                from_symbol: 0,
                to_symbol: 3,
            }],
        };
        let header = TrajectoryHeader {
            seed: 7,
            model_ref: "m.json".into(),
            t: 1.0,
            gamma: 0.0,
            mode: "none".into(),
            start: "AAA".into(),
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &header, &sp, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let back: TrajectoryHeader = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(back, header);
        assert_eq!(lines[1], r#"{"time":0.25,"site":1,"from_symbol":"A","to_symbol":"T"}"#);
    }
}
