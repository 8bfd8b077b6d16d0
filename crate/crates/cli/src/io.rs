use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use meterguard::{StateSet, System};

use crate::Global;

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_system(g: &Global) -> Result<System> {
    let (Some(case), Some(meas)) = (&g.case, &g.meas) else {
        bail!("both --case and --meas are required");
    };
    let case_text = read(case)?;
    let meas_text = read(meas)?;
    let sys = System::from_json(&case_text, &meas_text, g.pmu)
        .with_context(|| format!("loading {} and {}", case.display(), meas.display()))?;
    Ok(sys.with_eps(g.eps))
}

/// Writes to `--out` when given, else stdout.
pub fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

pub fn emit_json(g: &Global, v: &impl serde::Serialize) -> Result<()> {
    emit(g, &(serde_json::to_string_pretty(v)? + "\n"))
}

/// `all` or a comma-separated list of bus ids.
pub fn parse_targets(sys: &System, spec: &[String]) -> Result<StateSet> {
    if spec.len() == 1 && spec[0] == "all" {
        return Ok(sys.all_states());
    }
    let ids = spec
        .iter()
        .map(|s| s.trim().parse::<u32>().with_context(|| format!("bad bus id {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(sys.targets(&ids)?)
}

/// Meter ids from either a plan JSON (its `protected` list) or a bare JSON
/// array of ids.
pub fn read_meter_list(path: &Path) -> Result<Vec<String>> {
    let text = read(path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let list = match &v {
        serde_json::Value::Array(_) => &v,
        serde_json::Value::Object(o) => o
            .get("protected")
            .with_context(|| format!("{} has no `protected` list", path.display()))?,
        _ => bail!("{} is neither a plan nor a list of meter ids", path.display()),
    };
    serde_json::from_value(list.clone()).with_context(|| format!("meter ids in {}", path.display()))
}
