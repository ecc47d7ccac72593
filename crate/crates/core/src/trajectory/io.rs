//! Text format for trajectories.
//!
//! ```text
//! N,<number of relative poses>
//! <head: r11,r12,r13,r21,r22,r23,r31,r32,r33,tx,ty,tz>
//! <relative pose 1>
//! ...
//! <relative pose N>
//! covariances,<N+1>
//! <head covariance: 36 values, row-major, twist order (rho, phi)>
//! <edge 1 covariance>
//! ...
//! ```
//!
//! Values use shortest round-trip float formatting, so writing and reading back
//! reproduces every bit.

use std::fs;
use std::path::Path;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::liegroup::{Mat6, Pose};
use crate::linalg::csv::{format_row, parse_row};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_count(line: Option<(usize, &str)>, key: &str) -> Result<usize> {
    let (no, text) = line.ok_or_else(|| parse_err(0, format!("missing `{key}` header")))?;
    let (k, v) = text
        .split_once(',')
        .ok_or_else(|| parse_err(no, format!("expected `{key},<count>`")))?;
    if k.trim() != key {
        return Err(parse_err(no, format!("expected `{key}` header, found `{}`", k.trim())));
    }
    v.trim()
        .parse()
        .map_err(|e| parse_err(no, format!("bad count {v:?}: {e}")))
}

fn fixed_row(line: Option<(usize, &str)>, width: usize, what: &str) -> Result<(usize, Vec<f64>)> {
    let (no, text) = line.ok_or_else(|| parse_err(0, format!("file ends before {what}")))?;
    let values = parse_row(text, no)?;
    if values.len() != width {
        return Err(parse_err(
            no,
            format!("{what} needs {width} values, found {}", values.len()),
        ));
    }
    Ok((no, values))
}

pub fn trajectory_to_string(t: &Trajectory) -> String {
    let mut out = format!("N,{}\n", t.num_edges());
    for p in once_then(t.head(), t.rel_poses()) {
        out.push_str(&format_row(&p.to_row12()));
        out.push('\n');
    }
    out.push_str(&format!("covariances,{}\n", t.covariances().len()));
    for c in t.covariances() {
        let row_major: Vec<f64> = c.transpose().iter().copied().collect();
        out.push_str(&format_row(&row_major));
        out.push('\n');
    }
    out
}

fn once_then<'a>(head: &'a Pose, rest: &'a [Pose]) -> impl Iterator<Item = &'a Pose> {
    std::iter::once(head).chain(rest)
}

pub fn trajectory_from_str(text: &str) -> Result<Trajectory> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let n = header_count(lines.next(), "N")?;
    let mut vars = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let (no, values) = fixed_row(lines.next(), 12, &format!("pose {}", k + 1))?;
        vars.push(Pose::from_row12(&values).map_err(|e| parse_err(no, e.to_string()))?);
    }
    let count = header_count(lines.next(), "covariances")?;
    if count != n + 1 {
        return Err(parse_err(0, format!("expected {} covariances, header says {count}", n + 1)));
    }
    let mut covs = Vec::with_capacity(count);
    for k in 0..count {
        let (_, values) = fixed_row(lines.next(), 36, &format!("covariance {}", k + 1))?;
        covs.push(Mat6::from_row_slice(&values));
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no, "unexpected trailing content"));
    }
    Trajectory::from_variables(&vars, covs)
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_to_string(t))?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    trajectory_from_str(&fs::read_to_string(path)?)
}
