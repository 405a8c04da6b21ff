//! Plain-text channel dumps: a header line `M N K N_ue model seed` followed by
//! one `re im` line per entry in row-major order.

use std::fmt::Write as _;

use super::models::{ChannelModel, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Users with unequal antenna counts are written with `N_ue = 0`.
pub fn write_dump(r: &ChannelRealization) -> String {
    let n_ue = match r.partition.first() {
        Some(&first) if r.partition.iter().all(|&nk| nk == first) => first,
        _ => 0,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {} {} {}",
        r.m(),
        r.n(),
        r.partition.len(),
        n_ue,
        r.model.id(),
        r.seed.unwrap_or(0)
    );
    for z in r.h.as_slice() {
        let _ = writeln!(out, "{} {}", z.re, z.im);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDump {
    pub h: ComplexMatrix,
    pub k_users: usize,
    pub n_ue: usize,
    pub model: ChannelModel,
    pub seed: u64,
}

pub fn read_dump(text: &str) -> Result<ChannelDump> {
    let bad = |msg: String| Error::Validation(format!("channel dump: {msg}"));
    let mut lines = text.lines();
    let header: Vec<u64> = lines
        .next()
        .ok_or_else(|| bad("empty input".into()))?
        .split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|e| bad(format!("header field {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    let [m, n, k, n_ue, model, seed] = header[..] else {
        return Err(bad(format!("header has {} fields, expected 6", header.len())));
    };
    let model = ChannelModel::try_from(model as u8).map_err(bad)?;
    let mut data = Vec::with_capacity((m * n) as usize);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let mut parts = line.split_whitespace().map(str::parse::<f64>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(re)), Some(Ok(im)), None) => data.push(C64::new(re, im)),
            _ => return Err(bad(format!("entry {i} is not a `re im` pair"))),
        }
    }
    let h = ComplexMatrix::new(m as usize, n as usize, data)?;
    Ok(ChannelDump {
        h,
        k_users: k as usize,
        n_ue: n_ue as usize,
        model,
        seed,
    })
}
