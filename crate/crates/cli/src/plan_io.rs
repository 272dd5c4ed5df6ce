//! Plan file format: a `sensikit-plan v1` header followed by one
//! `key=value` line per field, as printed by the `plan` subcommand and read
//! back by `release`.

use std::io::{BufRead, Write};

use sensikit::planner::{PlanObjective, SamplingPlan};
use sensikit::{Error, Result};

pub fn write_plan<W: Write>(mut w: W, plan: &SamplingPlan) -> Result<()> {
    writeln!(w, "sensikit-plan v1")?;
    writeln!(w, "objective={}", plan.objective.id())?;
    writeln!(w, "rho={}", plan.rho)?;
    writeln!(w, "m={}", plan.m)?;
    writeln!(w, "k={}", plan.k)?;
    writeln!(w, "gamma={}", plan.gamma)?;
    Ok(())
}

pub fn read_plan<R: BufRead>(r: R) -> Result<SamplingPlan> {
    let mut lines = r.lines();
    let magic = lines.next().ok_or_else(|| Error::Parse("empty plan file".into()))??;
    if magic != "sensikit-plan v1" {
        return Err(Error::Parse(format!("bad plan header: {magic:?}")));
    }
    let mut objective = None;
    let mut rho = None;
    let mut m = None;
    let mut k = None;
    let mut gamma = None;
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::Parse(format!("bad plan line {line:?}")))?;
        match key {
            "objective" => objective = Some(PlanObjective::from_id(value)?),
            "rho" => {
                rho = Some(value.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?)
            }
            "m" => m = Some(value.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?),
            "k" => k = Some(value.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?),
            "gamma" => {
                gamma = Some(value.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?)
            }
            other => return Err(Error::Parse(format!("unknown plan field {other:?}"))),
        }
    }
    Ok(SamplingPlan {
        objective: objective.ok_or_else(|| Error::Parse("plan missing objective".into()))?,
        rho: rho.ok_or_else(|| Error::Parse("plan missing rho".into()))?,
        m: m.ok_or_else(|| Error::Parse("plan missing m".into()))?,
        k: k.ok_or_else(|| Error::Parse("plan missing k".into()))?,
        gamma: gamma.ok_or_else(|| Error::Parse("plan missing gamma".into()))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sensikit::planner::plan_min_m;

    #[test]
    fn round_trip_preserves_every_field() {
        let plan = plan_min_m(0.05).unwrap();
        let mut bytes = Vec::new();
        write_plan(&mut bytes, &plan).unwrap();
        assert_eq!(read_plan(&bytes[..]).unwrap(), plan);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_plan("".as_bytes()).is_err());
        assert!(read_plan("sensikit-plan v2\n".as_bytes()).is_err());
        assert!(read_plan("sensikit-plan v1\nrho=0.1\n".as_bytes()).is_err());
    }
}
