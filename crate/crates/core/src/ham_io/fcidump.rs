use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::scf::MolecularHamiltonian;

/// Header fields of an FCIDUMP namelist.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FcidumpHeader {
    pub norb: usize,
    pub nelec: Option<usize>,
    pub ms2: Option<i64>,
}

pub fn parse_fcidump(text: &str) -> Result<MolecularHamiltonian> {
    Ok(parse_fcidump_with_header(text)?.0)
}

fn parse_header(header: &str, line: usize) -> Result<FcidumpHeader> {
    let mut out = FcidumpHeader::default();
    let mut norb = None;
    let body = header
        .replace("&FCI", " ")
        .replace("&fci", " ")
        .replace("&END", " ")
        .replace("&end", " ")
        .replace('/', " ");
    // glue `KEY = value` into one token
    let mut glued = String::with_capacity(body.len());
    for (k, part) in body.split('=').enumerate() {
        if k > 0 {
            glued.truncate(glued.trim_end().len());
            glued.push('=');
            glued.push_str(part.trim_start());
        } else {
            glued.push_str(part);
        }
    }
    for tok in glued.split([',', ' ', '\t', '\n']).filter(|t| !t.is_empty()) {
        let Some((key, val)) = tok.split_once('=') else {
            continue;
        };
        let val = val.trim();
        let perr = |what: &str| Error::Parse {
            line,
            msg: format!("bad {what} value '{val}'"),
        };
        match key.trim().to_ascii_uppercase().as_str() {
            "NORB" => norb = Some(val.parse::<usize>().map_err(|_| perr("NORB"))?),
            "NELEC" => out.nelec = Some(val.parse::<usize>().map_err(|_| perr("NELEC"))?),
            "MS2" => out.ms2 = Some(val.parse::<i64>().map_err(|_| perr("MS2"))?),
            _ => {}
        }
    }
    out.norb = norb.ok_or_else(|| Error::Parse {
        line,
        msg: "header lacks NORB".into(),
    })?;
    Ok(out)
}

/// Parses the namelist header and `value i j k l` records (1-based, chemist's notation).
///
/// Each two-body record is written to all 8 symmetry-equivalent slots, the
/// last record winning when a file lists equivalent entries more than once.
pub fn parse_fcidump_with_header(text: &str) -> Result<(MolecularHamiltonian, FcidumpHeader)> {
    let lines: Vec<&str> = text.lines().collect();
    let end = lines
        .iter()
        .position(|l| {
            let t = l.trim().to_ascii_uppercase();
            t.ends_with("&END") || t == "/" || t.ends_with("/")
        })
        .ok_or_else(|| Error::Parse {
            line: lines.len().max(1),
            msg: "header terminator (&END or /) not found".into(),
        })?;
    if !lines.first().is_some_and(|l| l.trim_start().to_ascii_uppercase().starts_with("&FCI")) {
        return Err(Error::Parse {
            line: 1,
            msg: "file must start with an &FCI header".into(),
        });
    }
    let header = parse_header(&lines[..=end].join("\n"), 1)?;
    let n = header.norb;
    let mut constant = 0.0;
    let mut h = RMat::zeros(n, n);
    let mut v = vec![0.0; n.pow(4)];
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;

    for (k, raw) in lines.iter().enumerate().skip(end + 1) {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(perr(format!("expected 'value i j k l', found {} fields", fields.len())));
        }
        let value: f64 = fields[0]
            .replace(['D', 'd'], "e")
            .parse()
            .map_err(|e| perr(format!("bad value '{}': {e}", fields[0])))?;
        let mut ix = [0usize; 4];
        for (slot, f) in ix.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|e| perr(format!("bad index '{f}': {e}")))?;
            if *slot > n {
                return Err(perr(format!("index {slot} exceeds NORB = {n}")));
            }
        }
        match ix {
            [0, 0, 0, 0] => constant = value,
            [i, j, 0, 0] if i > 0 && j > 0 => {
                h[(i - 1, j - 1)] = value;
                h[(j - 1, i - 1)] = value;
            }
            // orbital energies carry no Hamiltonian information
            [_, 0, 0, 0] => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (p, q, r, s) = (i - 1, j - 1, k - 1, l - 1);
                for (a, b, c, d) in [
                    (p, q, r, s),
                    (q, p, r, s),
                    (p, q, s, r),
                    (q, p, s, r),
                    (r, s, p, q),
                    (s, r, p, q),
                    (r, s, q, p),
                    (s, r, q, p),
                ] {
                    v[idx(a, b, c, d)] = value;
                }
            }
            _ => return Err(perr(format!("unsupported index pattern {ix:?}"))),
        }
    }
    Ok((MolecularHamiltonian::new(constant, h, v)?, header))
}

/// Serializes with shortest round-trip float formatting, one record per unique integral.
pub fn write_fcidump(ham: &MolecularHamiltonian, nelec: usize, ms2: i64) -> String {
    let n = ham.n_modes();
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(out, "&FCI NORB={n},NELEC={nelec},MS2={ms2},");
    let _ = writeln!(out, " ORBSYM={orbsym},");
    let _ = writeln!(out, " ISYM=1,");
    let _ = writeln!(out, "&END");
    for p in 0..n {
        for q in 0..=p {
            for r in 0..=p {
                let smax = if r == p { q } else { r };
                for s in 0..=smax {
                    let x = ham.v(p, q, r, s);
                    if x != 0.0 {
                        let _ = writeln!(out, "{x:e} {} {} {} {}", p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let x = ham.h()[(p, q)];
            if x != 0.0 {
                let _ = writeln!(out, "{x:e} {} {} 0 0", p + 1, q + 1);
            }
        }
    }
    let _ = writeln!(out, "{:e} 0 0 0 0", ham.constant);
    out
}
