//! Line-based tensor files.
//!
//! ```text
//! tensor 3^1 2 2 2
//! 0 0 0 1
//! 1 1 1 1
//! ```
//!
//! Indices are 0-based, coefficients are listed low-to-high in the power
//! basis, omitted entries are zero. Blank lines and `#` comments are skipped.

use std::collections::HashSet;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::ffield::{Field, FieldDesignation};
use crate::tensor::Tensor3;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_tensor(text: &str) -> Result<Tensor3> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "tensor" {
        return Err(perr(hline, "expected `tensor p^k n1 n2 n3`"));
    }
    let desig: FieldDesignation = parts[1].parse().map_err(|e: Error| perr(hline, e.to_string()))?;
    let field = Field::from_designation(desig).map_err(|e| perr(hline, e.to_string()))?;
    let mut dims = [0usize; 3];
    for (d, s) in dims.iter_mut().zip(&parts[2..]) {
        *d = s.parse().map_err(|_| perr(hline, format!("bad dimension {s:?}")))?;
    }
    if dims.iter().any(|&d| d > 64) {
        return Err(perr(hline, "dimensions above 64 are not supported"));
    }

    let mut t = Tensor3::zeros(&field, dims);
    let mut seen = HashSet::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(perr(ln, "expected `i j k c0[,c1,...]`"));
        }
        let mut idx = [0usize; 3];
        for a in 0..3 {
            idx[a] = toks[a]
                .parse()
                .map_err(|_| perr(ln, format!("bad index {:?}", toks[a])))?;
            if idx[a] >= dims[a] {
                return Err(perr(ln, format!("index {} out of range for axis of length {}", idx[a], dims[a])));
            }
        }
        let coeffs = toks[3]
            .split(',')
            .map(|c| c.trim().parse::<u32>().map_err(|_| perr(ln, format!("bad coefficient {c:?}"))))
            .collect::<Result<Vec<u32>>>()?;
        let v = field.from_coeffs(&coeffs).map_err(|e| perr(ln, e.to_string()))?;
        if !seen.insert(idx) {
            return Err(perr(ln, format!("duplicate entry {} {} {}", idx[0], idx[1], idx[2])));
        }
        t.set(idx[0], idx[1], idx[2], v);
    }
    Ok(t)
}

/// Canonical text: header, then nonzero entries in index order with all
/// `k` coefficients spelled out.
pub fn write_tensor(t: &Tensor3) -> String {
    let f = t.field();
    let [n1, n2, n3] = t.dims();
    let mut s = format!("tensor {} {n1} {n2} {n3}\n", f.designation());
    for [i, j, k] in t.support() {
        let c: Vec<String> = f.coeffs(t.get(i, j, k)).iter().map(u32::to_string).collect();
        writeln!(s, "{i} {j} {k} {}", c.join(",")).unwrap();
    }
    s
}
