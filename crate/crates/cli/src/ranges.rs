//! Integer list syntax for grid flags: `3`, `1,2,5`, `2..6`, `8..256:8`, and
//! `key=list;key=list` groups.

use std::collections::BTreeMap;

pub fn parse_list(spec: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((range, step)) = part.split_once("..") {
            let (hi, step) = match step.split_once(':') {
                Some((hi, st)) => (hi, parse_one(st)?),
                None => (step, 1),
            };
            let (lo, hi) = (parse_one(range)?, parse_one(hi)?);
            if step == 0 || lo > hi {
                return Err(format!("bad range {part:?}"));
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(parse_one(part)?);
        }
    }
    if out.is_empty() {
        return Err(format!("empty list {spec:?}"));
    }
    Ok(out)
}

fn parse_one(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a non-negative integer"))
}

/// Parses `B=1..3;W=2..6;lambda=4,8` into named lists.
pub fn parse_grid(spec: &str, keys: &[&str]) -> Result<BTreeMap<String, Vec<usize>>, String> {
    let mut out = BTreeMap::new();
    for group in spec.split(';').map(str::trim).filter(|g| !g.is_empty()) {
        let (key, list) = group
            .split_once('=')
            .ok_or_else(|| format!("expected key=values, got {group:?}"))?;
        let key = key.trim();
        if !keys.contains(&key) {
            return Err(format!(
                "unknown grid key {key:?}, expected one of {keys:?}"
            ));
        }
        out.insert(key.to_string(), parse_list(list)?);
    }
    for k in keys {
        if !out.contains_key(*k) {
            return Err(format!("grid {spec:?} is missing {k}"));
        }
    }
    Ok(out)
}
