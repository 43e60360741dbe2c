//! Text formats: key-value model and run files, CSV tables and JSON results.
//!
//! Key-value files hold `key = value` pairs, several per line if separated by
//! whitespace. `#` starts a comment. Bracketed values may contain spaces:
//!
//! ```text
//! command = ritz
//! b1=1 b2=2 alpha1=-3 alpha2=-4
//! l1 = [(1,0), (0,1), (0,0)]
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Vector2, Vector3};
use num_complex::Complex64;
use serde::Serialize;

use crate::bangbang::BangBangSchedule;
use crate::bloch_model::{build_dissipation, ComplexVector3, LindbladSpec};
use crate::error::{Error, Result};
use crate::planar::PlanarSystem;
use crate::recovery::ControlProfile;
use crate::ritz::{RitzCandidate, RitzSolution};
use crate::trajectory::{Trajectory, TrajectorySample};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parsed key-value file; keys are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Entry>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            for entry in split_pairs(content, line)? {
                if let Some(prev) = entries.get(&entry.key) {
                    return Err(parse_err(
                        line,
                        format!("duplicate key '{}' (first set on line {})", entry.key, prev.line),
                    ));
                }
                entries.insert(entry.key.clone(), entry);
            }
        }
        Ok(Self { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values()
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }

    /// Typed value of `key`, if present.
    pub fn parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| parse_err(e.line, format!("{key}: {err}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => parse_real(&e.value).map(Some).map_err(|m| parse_err(e.line, format!("{key}: {m}"))),
        }
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => parse_real_list(&e.value)
                .map(Some)
                .map_err(|m| parse_err(e.line, format!("{key}: {m}"))),
        }
    }
}

fn split_pairs(content: &str, line: usize) -> Result<Vec<Entry>> {
    let chars: Vec<char> = content.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        if i >= chars.len() {
            return Ok(out);
        }
        let start = i;
        while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
            i += 1;
        }
        let key: String = chars[start..i].iter().collect();
        if key.is_empty() {
            return Err(parse_err(line, format!("expected a key at column {}", start + 1)));
        }
        skip_ws(&mut i);
        if i >= chars.len() || chars[i] != '=' {
            return Err(parse_err(line, format!("expected '=' after key '{key}'")));
        }
        i += 1;
        skip_ws(&mut i);
        let vstart = i;
        if i < chars.len() && chars[i] == '[' {
            let mut depth = 0i32;
            while i < chars.len() {
                match chars[i] {
                    '[' | '(' => depth += 1,
                    ']' | ')' => depth -= 1,
                    _ => {}
                }
                i += 1;
                if depth == 0 {
                    break;
                }
            }
            if depth != 0 {
                return Err(parse_err(line, format!("unbalanced brackets in value of '{key}'")));
            }
        } else {
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
        }
        let value: String = chars[vstart..i].iter().collect();
        if value.is_empty() {
            return Err(parse_err(line, format!("missing value for key '{key}'")));
        }
        out.push(Entry {
            key: key.to_ascii_lowercase(),
            value,
            line,
        });
    }
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if !v.is_finite() {
        return Err(format!("'{}' is not finite", s.trim()));
    }
    Ok(v)
}

fn strip_brackets(s: &str) -> std::result::Result<&str, String> {
    let t = s.trim();
    t.strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("expected a bracketed list, got '{t}'"))
}

/// `[1, -0.5, 2]`.
pub fn parse_real_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = strip_brackets(s)?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_real).collect()
}

/// `[(re, im), ...]`; plain reals are accepted as entries with zero imaginary part.
pub fn parse_complex_list(s: &str) -> std::result::Result<Vec<Complex64>, String> {
    let inner = strip_brackets(s)?;
    let mut out = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix('(') {
            let close = after.find(')').ok_or("unclosed '('")?;
            let parts: Vec<&str> = after[..close].split(',').collect();
            if parts.len() != 2 {
                return Err(format!("complex entry '({})' needs two parts", &after[..close]));
            }
            out.push(Complex64::new(parse_real(parts[0])?, parse_real(parts[1])?));
            rest = after[close + 1..].trim_start();
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            out.push(Complex64::new(parse_real(&rest[..end])?, 0.0));
            rest = &rest[end..];
        }
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return Err("trailing comma".into());
            }
        } else if !rest.is_empty() {
            return Err(format!("unexpected '{rest}'"));
        }
    }
    Ok(out)
}

/// Model described by a key-value file.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Lindblad(LindbladSpec),
    Planar(PlanarSystem),
}

impl ModelSource {
    /// The planar system, reducing a single-operator Lindblad model if needed.
    pub fn planar(&self) -> Result<PlanarSystem> {
        match self {
            ModelSource::Planar(p) => Ok(*p),
            ModelSource::Lindblad(spec) => Ok(build_dissipation(spec)?.reduce_to_planar()?.system),
        }
    }
}

const PLANAR_KEYS: [&str; 4] = ["b1", "b2", "alpha1", "alpha2"];

/// Whether `key` names a Lindblad vector (`l1`, `l2`, ...).
pub fn is_lindblad_key(key: &str) -> bool {
    key.len() > 1 && key.starts_with('l') && key[1..].chars().all(|c| c.is_ascii_digit())
}

pub fn is_model_key(key: &str) -> bool {
    PLANAR_KEYS.contains(&key) || is_lindblad_key(key) || key == "control"
}

/// Reads the model part of a key-value file.
pub fn load_model(kv: &KeyValues) -> Result<ModelSource> {
    let mut lindblad: Vec<(usize, &Entry)> = kv
        .entries()
        .filter(|e| is_lindblad_key(&e.key))
        .map(|e| (e.key[1..].parse::<usize>().unwrap_or(usize::MAX), e))
        .collect();
    lindblad.sort_by_key(|(n, _)| *n);
    let planar_present: Vec<&str> = PLANAR_KEYS.iter().copied().filter(|k| kv.contains(k)).collect();

    match (lindblad.is_empty(), planar_present.is_empty()) {
        (true, true) => Err(Error::invalid(
            "no model: give either b1, b2, alpha1, alpha2 or Lindblad vectors l1, l2, ...",
        )),
        (false, false) => Err(Error::invalid(
            "exactly one model source is allowed, found both planar parameters and Lindblad vectors",
        )),
        (true, false) => {
            let mut vals = [0.0; 4];
            for (k, key) in PLANAR_KEYS.iter().enumerate() {
                vals[k] = kv
                    .f64(key)?
                    .ok_or_else(|| Error::invalid(format!("planar model is missing '{key}'")))?;
            }
            if kv.contains("control") {
                let line = kv.get("control").map_or(0, |e| e.line);
                return Err(parse_err(line, "'control' applies to Lindblad models only"));
            }
            Ok(ModelSource::Planar(PlanarSystem::new(vals[0], vals[1], vals[2], vals[3])?))
        }
        (false, true) => {
            let mut vectors = Vec::with_capacity(lindblad.len());
            for (_, e) in lindblad {
                let entries = parse_complex_list(&e.value).map_err(|m| parse_err(e.line, format!("{}: {m}", e.key)))?;
                if entries.len() != 3 {
                    return Err(parse_err(
                        e.line,
                        format!("{}: expected 3 components, got {}", e.key, entries.len()),
                    ));
                }
                vectors.push(ComplexVector3::new(entries[0], entries[1], entries[2]));
            }
            let mut spec = LindbladSpec::new(vectors);
            if let Some(c) = kv.reals("control")? {
                if c.len() != 3 {
                    let line = kv.get("control").map_or(0, |e| e.line);
                    return Err(parse_err(line, format!("control: expected 3 components, got {}", c.len())));
                }
                spec = spec.with_control(Vector3::new(c[0], c[1], c[2]));
            }
            // validate now so errors surface at load time
            build_dissipation(&spec)?;
            Ok(ModelSource::Lindblad(spec))
        }
    }
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const TRAJECTORY_HEADER: &str = "t,x,y,u,r,purity";

fn push_sample(out: &mut String, s: &TrajectorySample) {
    let _ = write!(
        out,
        "{},{},{},{},{},{}",
        fmt_g9(s.t),
        fmt_g9(s.q.x),
        fmt_g9(s.q.y),
        fmt_g9(s.u),
        fmt_g9(s.r),
        fmt_g9(s.purity)
    );
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        push_sample(&mut out, s);
        out.push('\n');
    }
    out
}

/// Arcs in order, each sample tagged with its arc index.
pub fn arcs_csv(arcs: &[Trajectory]) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push_str(",arc\n");
    for (k, arc) in arcs.iter().enumerate() {
        for s in &arc.samples {
            push_sample(&mut out, s);
            let _ = writeln!(out, ",{k}");
        }
    }
    out
}

/// Reads a trajectory CSV; an `arc` column, if present, is ignored.
pub fn read_trajectory_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty trajectory file"))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let expected: Vec<&str> = TRAJECTORY_HEADER.split(',').collect();
    if cols.len() < expected.len() || cols[..expected.len()] != expected[..] {
        return Err(parse_err(1, format!("expected header '{TRAJECTORY_HEADER}'")));
    }
    let mut traj = Trajectory::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(idx + 1, format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let num = |k: usize| parse_real(fields[k]).map_err(|m| parse_err(idx + 1, m));
        traj.push(TrajectorySample {
            t: num(0)?,
            q: Vector2::new(num(1)?, num(2)?),
            u: num(3)?,
            r: num(4)?,
            purity: num(5)?,
        });
    }
    Ok(traj)
}

/// Piecewise-constant control `t,u`: `u` holds from its `t` until the next row.
pub fn read_control_schedule(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || (idx == 0 && line.replace(' ', "") == "t,u") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(idx + 1, "expected 't,u'"));
        }
        let t = parse_real(fields[0]).map_err(|m| parse_err(idx + 1, m))?;
        let u = parse_real(fields[1]).map_err(|m| parse_err(idx + 1, m))?;
        if let Some(&(prev, _)) = out.last() {
            if t <= prev {
                return Err(parse_err(idx + 1, "switch times must increase"));
            }
        } else if t != 0.0 {
            return Err(parse_err(idx + 1, "the first row must start at t = 0"));
        }
        out.push((t, u));
    }
    if out.is_empty() {
        return Err(parse_err(1, "control file has no rows"));
    }
    Ok(out)
}

/// Value of a piecewise-constant control at `t`.
pub fn control_at(schedule: &[(f64, f64)], t: f64) -> f64 {
    let i = schedule.partition_point(|&(s, _)| s <= t);
    schedule[i.saturating_sub(1)].1
}

pub fn control_profile_csv(profile: &ControlProfile) -> String {
    let mut out = String::from("x,u\n");
    for s in &profile.samples {
        let _ = writeln!(out, "{},{}", fmt_g9(s.x), fmt_g9(s.u));
    }
    out
}

pub fn chimney_csv(profile: &[(f64, f64)]) -> String {
    let mut out = String::from("theta,g\n");
    for (theta, g) in profile {
        let _ = writeln!(out, "{},{}", fmt_g9(*theta), fmt_g9(*g));
    }
    out
}

#[derive(Serialize)]
struct BestReport<'a> {
    c: &'a [f64],
    time: f64,
    energy: f64,
    nu: f64,
}

#[derive(Serialize)]
struct CandidateReport<'a> {
    restart: usize,
    c: &'a [f64],
    time: f64,
    energy: f64,
    nu: f64,
}

#[derive(Serialize)]
struct RitzReport<'a> {
    order: usize,
    best: BestReport<'a>,
    candidates: Vec<CandidateReport<'a>>,
}

fn candidate_report(c: &RitzCandidate) -> CandidateReport<'_> {
    CandidateReport {
        restart: c.restart,
        c: &c.c,
        time: c.time,
        energy: c.energy,
        nu: c.nu,
    }
}

pub fn ritz_json(sol: &RitzSolution) -> String {
    let report = RitzReport {
        order: sol.order,
        best: BestReport {
            c: &sol.best.c,
            time: sol.best.time,
            energy: sol.best.energy,
            nu: sol.best.nu,
        },
        candidates: sol.candidates.iter().map(candidate_report).collect(),
    };
    let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SwitchReport {
    t: f64,
    x: f64,
    y: f64,
    gap: f64,
    determinant: f64,
}

#[derive(Serialize)]
struct ScheduleReport {
    initial_sign: i32,
    switches: Vec<SwitchReport>,
    horizon: f64,
}

pub fn schedule_json(schedule: &BangBangSchedule) -> String {
    let report = ScheduleReport {
        initial_sign: schedule.initial_sign.as_i32(),
        switches: schedule
            .switches
            .iter()
            .map(|s| SwitchReport {
                t: s.t,
                x: s.q.x,
                y: s.q.y,
                gap: s.gap,
                determinant: s.determinant,
            })
            .collect(),
        horizon: schedule.horizon,
    };
    let mut s = serde_json::to_string_pretty(&report).expect("schedule serializes");
    s.push('\n');
    s
}
