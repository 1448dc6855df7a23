//! Text snapshot of a [`QuantumState`].
//!
//! ```text
//! qhhg-state 1
//! labeling sigma_x            # or `energy`
//! modes <M>
//! mode <k> <n_max> <Re γ> <Im γ>   # M lines, k = 0..M
//! amplitudes <2·Π(n_max+1)>
//! <Re c> <Im c>                # one line per amplitude, row-major (atom, mode_1, …)
//! ```
//!
//! Floats are written in shortest round-trip form, so a read-back is exact.

use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;

use super::{AtomLabel, BasisDescriptor, FockBasis, QuantumState};
use crate::error::{Error, Result};

const MAGIC: &str = "qhhg-state 1";

pub fn write_snapshot<W: Write>(state: &QuantumState, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    let label = match state.labeling() {
        AtomLabel::Energy => "energy",
        AtomLabel::SigmaX => "sigma_x",
    };
    writeln!(w, "labeling {label}")?;
    writeln!(w, "modes {}", state.n_modes())?;
    for (k, m) in state.basis().modes.iter().enumerate() {
        let g = m.displacement();
        writeln!(w, "mode {k} {} {:?} {:?}", m.n_max(), g.re, g.im)?;
    }
    writeln!(w, "amplitudes {}", state.amplitudes().len())?;
    for c in state.amplitudes() {
        writeln!(w, "{:?} {:?}", c.re, c.im)?;
    }
    Ok(())
}

fn field<'a>(line: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut it = line.split_whitespace();
    match it.next() {
        Some(k) if k == key => Ok(it.collect()),
        _ => Err(Error::Snapshot(format!("expected `{key}`, found `{line}`"))),
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Snapshot(format!("bad number `{s}`")))
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<QuantumState> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines.next().ok_or_else(|| Error::Snapshot("unexpected end of file".into()))?.map_err(Error::from)
    };
    if next()?.trim() != MAGIC {
        return Err(Error::Snapshot("missing header".into()));
    }
    let l = next()?;
    let labeling = match field(&l, "labeling")?.as_slice() {
        ["energy"] => AtomLabel::Energy,
        ["sigma_x"] => AtomLabel::SigmaX,
        _ => return Err(Error::Snapshot(format!("bad labeling line `{l}`"))),
    };
    let l = next()?;
    let m: usize = match field(&l, "modes")?.as_slice() {
        [v] => num(v)?,
        _ => return Err(Error::Snapshot(format!("bad modes line `{l}`"))),
    };
    let mut modes = Vec::with_capacity(m);
    for k in 0..m {
        let l = next()?;
        match field(&l, "mode")?.as_slice() {
            [idx, n, re, im] if num::<usize>(idx)? == k => {
                modes.push(FockBasis::displaced(num(n)?, C64::new(num(re)?, num(im)?))?)
            }
            _ => return Err(Error::Snapshot(format!("bad mode line `{l}`"))),
        }
    }
    let basis = BasisDescriptor::new(labeling, modes)?;
    let l = next()?;
    let count: usize = match field(&l, "amplitudes")?.as_slice() {
        [v] => num(v)?,
        _ => return Err(Error::Snapshot(format!("bad amplitudes line `{l}`"))),
    };
    if count != basis.dim() {
        return Err(Error::Snapshot(format!("{count} amplitudes for dimension {}", basis.dim())));
    }
    let mut amps = Vec::with_capacity(count);
    for _ in 0..count {
        let l = next()?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        match parts.as_slice() {
            [re, im] => amps.push(C64::new(num(re)?, num(im)?)),
            _ => return Err(Error::Snapshot(format!("bad amplitude line `{l}`"))),
        }
    }
    QuantumState::new(basis, amps)
}
