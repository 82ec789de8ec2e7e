//! Line-oriented certificate files.
//!
//! ```text
//! # mode: q1            provenance header (free-form `# key: value`)
//! kind quadratic
//! vars x1 x2
//! level 5
//! row 0.5 0             P, row-major
//! row 0 0.5
//! guard M = 1           optional, model formula syntax
//! ```
//! Barrier files use `kind barrier`, `center`, `margin`, one `domain v lo hi`
//! per axis and one `coeff c monomial` per basis element (`x1^2*x2`, or `1`).

use std::fmt::Write;

use crate::hp::{parse_formula, Model};
use crate::icp::{Interval, IntervalBox};
use crate::poly::Monomial;

use super::{BarrierCertificate, CertError, QuadraticCertificate};

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    Quadratic(QuadraticCertificate),
    Barrier(BarrierCertificate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateFile {
    pub provenance: Vec<(String, String)>,
    pub cert: Certificate,
}

fn mono_text(m: &Monomial) -> String {
    if m.is_empty() {
        return "1".into();
    }
    m.iter().map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") }).collect::<Vec<_>>().join("*")
}

fn parse_mono(s: &str) -> Option<Monomial> {
    if s == "1" {
        return Some(Vec::new());
    }
    let mut m: Monomial = s
        .split('*')
        .map(|f| match f.split_once('^') {
            Some((v, e)) => Some((v.to_string(), e.parse().ok().filter(|e| *e > 0)?)),
            None => Some((f.to_string(), 1)),
        })
        .collect::<Option<_>>()?;
    m.sort();
    Some(m)
}

pub fn write_certificate(file: &CertificateFile) -> String {
    let mut out = String::from("# ficut certificate\n");
    for (k, v) in &file.provenance {
        let _ = writeln!(out, "# {k}: {v}");
    }
    match &file.cert {
        Certificate::Quadratic(q) => {
            let _ = writeln!(out, "kind quadratic\nvars {}", q.vars.join(" "));
            if let Some(l) = q.level {
                let _ = writeln!(out, "level {l}");
            }
            for row in &q.p {
                let _ = writeln!(out, "row {}", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            }
            if let Some(g) = &q.guard {
                let _ = writeln!(out, "guard {g}");
            }
        }
        Certificate::Barrier(b) => {
            let _ = writeln!(out, "kind barrier\nvars {}", b.vars.join(" "));
            let _ = writeln!(out, "center {}", b.center.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
            let _ = writeln!(out, "margin {}", b.margin);
            for (v, iv) in b.domain.vars.iter().zip(&b.domain.ivs) {
                let _ = writeln!(out, "domain {v} {} {}", iv.lo, iv.hi);
            }
            for (m, c) in b.basis.iter().zip(&b.coeffs) {
                let _ = writeln!(out, "coeff {c} {}", mono_text(m));
            }
        }
    }
    out
}

/// Parses a certificate file; `model` resolves names in a guard formula.
pub fn read_certificate(text: &str, model: &Model) -> Result<CertificateFile, CertError> {
    let err = |line: usize, msg: &str| CertError::Format { line, msg: msg.to_string() };
    let num = |line: usize, s: &str| s.parse::<f64>().map_err(|_| err(line, &format!("bad number `{s}`")));
    let mut provenance = Vec::new();
    let (mut kind, mut vars, mut level, mut rows, mut guard) = (None, Vec::new(), None, Vec::new(), None);
    let (mut center, mut margin, mut domain, mut basis, mut coeffs) = (None, 0.0, Vec::new(), Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.split_once(':') {
                provenance.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let words: Vec<&str> = rest.split_whitespace().collect();
        match key {
            "kind" => kind = Some(rest.trim().to_string()),
            "vars" => vars = words.iter().map(|s| s.to_string()).collect(),
            "level" => level = Some(num(ln, rest.trim())?),
            "row" => rows.push(words.iter().map(|w| num(ln, w)).collect::<Result<Vec<_>, _>>()?),
            "guard" => guard = Some(parse_formula(rest, model).map_err(|e| err(ln, &e.to_string()))?),
            "center" => center = Some(words.iter().map(|w| num(ln, w)).collect::<Result<Vec<_>, _>>()?),
            "margin" => margin = num(ln, rest.trim())?,
            "domain" => match words.as_slice() {
                [v, lo, hi] => domain.push((v.to_string(), Interval::new(num(ln, lo)?, num(ln, hi)?))),
                _ => return Err(err(ln, "expected `domain var lo hi`")),
            },
            "coeff" => match words.as_slice() {
                [c, m] => {
                    coeffs.push(num(ln, c)?);
                    basis.push(parse_mono(m).ok_or_else(|| err(ln, &format!("bad monomial `{m}`")))?);
                }
                _ => return Err(err(ln, "expected `coeff value monomial`")),
            },
            other => return Err(err(ln, &format!("unknown directive `{other}`"))),
        }
    }
    let cert = match kind.as_deref() {
        Some("quadratic") => {
            let mut q = QuadraticCertificate::new(vars, rows)?;
            q.level = level;
            q.guard = guard;
            Certificate::Quadratic(q)
        }
        Some("barrier") => {
            let center = center.unwrap_or_else(|| vec![0.0; vars.len()]);
            if center.len() != vars.len() {
                return Err(CertError::Dimension("center length differs from vars".into()));
            }
            Certificate::Barrier(BarrierCertificate { vars, basis, coeffs, center, domain: IntervalBox::new(domain), margin })
        }
        _ => return Err(err(0, "missing or unknown `kind`")),
    };
    Ok(CertificateFile { provenance, cert })
}
