//! Binary columnar trajectory files.
//!
//! Layout: a UTF-8 header of `key value` lines ending with `end`, then the
//! `Q` column and the `Q̇` column as little-endian `f64`, `n_steps + 1`
//! values each. Floats in the header use shortest round-trip formatting, so
//! a read-back trajectory compares equal to the one written.

use std::io::{BufRead, Write};

use super::integrator::Trajectory;
use crate::error::{Error, Result};
use crate::greens::AtomParams;

const MAGIC: &str = "fluxbalance-trajectory 1";

pub fn write_trajectory<W: Write>(mut w: W, tr: &Trajectory) -> Result<()> {
    let p = &tr.params;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "dt {}", tr.dt)?;
    writeln!(w, "n_steps {}", tr.n_steps())?;
    writeln!(w, "omega {}", p.frequency())?;
    writeln!(w, "gamma {}", p.damping())?;
    writeln!(w, "mass {}", p.mass())?;
    writeln!(w, "coupling {}", p.coupling())?;
    writeln!(w, "seed {}", tr.seed)?;
    writeln!(w, "q0 {}", tr.q0)?;
    writeln!(w, "qdot0 {}", tr.qdot0)?;
    writeln!(w, "columns q qdot")?;
    writeln!(w, "end")?;
    for x in tr.q.iter().chain(&tr.qdot) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::TrajectoryFormat(msg.into())
}

pub fn read_trajectory<R: BufRead>(mut r: R) -> Result<Trajectory> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(bad(format!("unexpected first line {:?}", line.trim_end())));
    }
    let mut fields = std::collections::HashMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("header ends before `end`"));
        }
        let l = line.trim_end();
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| bad(format!("bad header line {l:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| fields.get(k).ok_or_else(|| bad(format!("missing `{k}`")));
    let num = |k: &str| -> Result<f64> {
        get(k)?.parse::<f64>().map_err(|e| bad(format!("`{k}`: {e}")))
    };
    if get("columns")? != "q qdot" {
        return Err(bad("unsupported column set"));
    }
    let n_steps: usize = get("n_steps")?.parse().map_err(|e| bad(format!("`n_steps`: {e}")))?;
    let seed: u64 = get("seed")?.parse().map_err(|e| bad(format!("`seed`: {e}")))?;
    let params = AtomParams::from_parts(num("coupling")?, num("mass")?, num("omega")?, num("gamma")?)?;

    let len = n_steps + 1;
    let mut bytes = vec![0u8; 2 * len * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| bad(format!("expected {} data bytes", bytes.len())))?;
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing data after the columns"));
    }
    let mut vals = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let q: Vec<f64> = vals.by_ref().take(len).collect();
    let qdot: Vec<f64> = vals.collect();
    Ok(Trajectory {
        dt: num("dt")?,
        q,
        qdot,
        q0: num("q0")?,
        qdot0: num("qdot0")?,
        params,
        seed,
    })
}
