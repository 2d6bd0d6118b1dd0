//! Parsers for `--grid`, `--at` and `--contour`.

use std::f64::consts::PI;

use mellin_core::transforms::ContourSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    pub m: usize,
    pub log_spaced: bool,
}

impl Grid {
    /// `(r, psi)` pairs, `r` varying fastest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let rs = spaced(self.r_min, self.r_max, self.n, self.log_spaced);
        let psis = spaced(self.psi_min, self.psi_max, self.m, false);
        psis.iter().flat_map(|&p| rs.iter().map(move |&r| (r, p))).collect()
    }
}

fn spaced(a: f64, b: f64, n: usize, log: bool) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                a * (b / a).powf(t)
            } else {
                a + (b - a) * t
            }
        })
        .collect()
}

/// Numbers with optional `pi`: `1.5`, `pi`, `-pi/3`, `2pi/3`, `0.5*pi`.
pub fn number(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if let Ok(x) = t.parse::<f64>() {
        return finite(x, text);
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.trim().parse::<f64>().map_err(|_| format!("bad number '{text}'"))?),
        None => (body, 1.0),
    };
    let Some(coef) = num.trim().strip_suffix("pi") else {
        return Err(format!("bad number '{text}'"));
    };
    let coef = coef.trim().trim_end_matches('*');
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| format!("bad number '{text}'"))? };
    finite(sign * c * PI / den, text)
}

fn finite(x: f64, text: &str) -> Result<f64, String> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{text}' is not finite"))
    }
}

fn range(text: &str) -> Result<(f64, f64), String> {
    match text.split_once("..") {
        Some((a, b)) => Ok((number(a)?, number(b)?)),
        None => {
            let x = number(text)?;
            Ok((x, x))
        }
    }
}

fn pairs(text: &str) -> Result<Vec<(&str, &str)>, String> {
    text.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| format!("expected key=value, got '{p}'")))
        .collect()
}

/// `r=A..B,n=N[,psi=P|psi=P1..P2[,m=M]][,spacing=log|linear]`.
pub fn parse_grid(text: &str) -> Result<Grid, String> {
    let mut g = Grid { r_min: f64::NAN, r_max: f64::NAN, n: 1, psi_min: 0.0, psi_max: 0.0, m: 0, log_spaced: true };
    for (k, v) in pairs(text)? {
        match k {
            "r" => (g.r_min, g.r_max) = range(v)?,
            "n" => g.n = v.parse().map_err(|_| format!("n must be a positive integer, got '{v}'"))?,
            "psi" => (g.psi_min, g.psi_max) = range(v)?,
            "m" => g.m = v.parse().map_err(|_| format!("m must be a positive integer, got '{v}'"))?,
            "spacing" => {
                g.log_spaced = match v {
                    "log" => true,
                    "linear" => false,
                    _ => return Err(format!("spacing must be log or linear, got '{v}'")),
                }
            }
            _ => return Err(format!("unknown grid key '{k}' (r, n, psi, m, spacing)")),
        }
    }
    if g.r_min.is_nan() {
        return Err("grid needs r=".into());
    }
    if !(g.r_min > 0.0 && g.r_max >= g.r_min) {
        return Err(format!("grid needs 0 < r_min <= r_max, got r={}..{}", g.r_min, g.r_max));
    }
    if g.n == 0 {
        return Err("grid needs n >= 1".into());
    }
    if g.m == 0 {
        g.m = if g.psi_min == g.psi_max { 1 } else { g.n };
    }
    Ok(g)
}

/// A single evaluation point: `r=R,psi=P` or `log_r=L,psi=P`.
pub fn parse_at(text: &str) -> Result<(f64, f64), String> {
    let (mut log_r, mut psi) = (None, 0.0);
    for (k, v) in pairs(text)? {
        match k {
            "r" => {
                let r = number(v)?;
                if r <= 0.0 {
                    return Err(format!("r must be positive, got {r}"));
                }
                log_r = Some(r.ln());
            }
            "log_r" => log_r = Some(number(v)?),
            "psi" => psi = number(v)?,
            _ => return Err(format!("unknown point key '{k}' (r, log_r, psi)")),
        }
    }
    log_r.map(|l| (l, psi)).ok_or_else(|| "point needs r= or log_r=".into())
}

/// `lalpha:ALPHA[,vertex=V]` or `vertical:C`.
pub fn parse_contour(text: &str) -> Result<ContourSpec, String> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| format!("contour must be lalpha:A[,vertex=V] or vertical:C, got '{text}'"))?;
    match kind.trim() {
        "lalpha" => {
            let mut parts = rest.splitn(2, ',');
            let alpha = number(parts.next().unwrap_or(""))?;
            let mut vertex = 0.0;
            for (k, v) in pairs(parts.next().unwrap_or(""))? {
                match k {
                    "vertex" => vertex = number(v)?,
                    _ => return Err(format!("unknown lalpha key '{k}' (vertex)")),
                }
            }
            Ok(ContourSpec::l_alpha(alpha, vertex))
        }
        "vertical" => Ok(ContourSpec::vertical(number(rest)?)),
        other => Err(format!("unknown contour '{other}' (lalpha, vertical)")),
    }
}
