//! Condition numbers of original and e-signal Gram matrices.

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde_json::json;

use uwsvd::channel::{build_geometry, ChannelGenerator};
use uwsvd::detect::{build_problem_esignal, build_problem_original, uw_svd, Mode};
use uwsvd::linalg::{cond_number, ComplexMatrix, ZERO};
use uwsvd::modem::SnrSpec;
use uwsvd::Flops;

use crate::config::{Experiment, SimConfig};
use crate::output::{fmt_f64, Report, Table};
use crate::{is_degenerate, with_threads};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AZf,
    ALmmse,
    PhiZf,
    PhiLmmse,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Self::AZf, Self::ALmmse, Self::PhiZf, Self::PhiLmmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::AZf => "A_zf",
            Metric::ALmmse => "A_lmmse",
            Metric::PhiZf => "Phi_zf",
            Metric::PhiLmmse => "Phi_lmmse",
        }
    }
}

/// `[cond(A_ZF), cond(A_LMMSE), cond(Φ_ZF), cond(Φ_LMMSE)]` for one channel.
pub fn condition_numbers(h: &ComplexMatrix, partition: &[usize], rho: f64) -> uwsvd::Result<[f64; 4]> {
    let y = vec![ZERO; h.rows()];
    let factors = uw_svd(h, partition)?;
    let mut out = [0.0; 4];
    for (slot, mode) in [(0, Mode::Zf), (1, Mode::Lmmse)] {
        let a = build_problem_original(h, &y, mode, rho)?.materialize(&mut Flops::default());
        out[slot] = cond_number(&a)?;
        let phi = build_problem_esignal(&factors, &y, mode, rho)?.materialize(&mut Flops::default());
        out[slot + 2] = cond_number(&phi)?;
    }
    Ok([out[0], out[1], out[2], out[3]])
}

#[derive(Debug, Clone)]
pub struct CondResults {
    /// Per metric, in trial order.
    pub values: [Vec<f64>; 4],
    pub trials_skipped: usize,
    pub rho_db: f64,
}

impl CondResults {
    pub fn samples(&self, metric: Metric) -> &[f64] {
        &self.values[metric as usize]
    }

    pub fn median(&self, metric: Metric) -> f64 {
        median(self.samples(metric))
    }

    pub fn report(&self, config: &SimConfig) -> Report {
        let mut table = Table::new(vec!["model", "rho_corr", "metric", "value", "cdf"]);
        let model = config.channel.model.to_string();
        let rho = fmt_f64(config.channel.corr_rho);
        let mut medians = serde_json::Map::new();
        let mut lines = Vec::new();
        for metric in Metric::ALL {
            let cdf = empirical_cdf(self.samples(metric));
            for (v, p) in cdf {
                table.push(vec![
                    model.clone(),
                    rho.clone(),
                    metric.name().into(),
                    fmt_f64(v),
                    fmt_f64(p),
                ]);
            }
            let med = self.median(metric);
            medians.insert(metric.name().into(), json!(med));
            lines.push(format!("median cond({}) = {med:.3}", metric.name()));
        }
        lines.push(format!(
            "{} draws used, {} degenerate draws skipped; LMMSE at {} dB",
            self.values[0].len(),
            self.trials_skipped,
            self.rho_db
        ));
        Report {
            experiment: Experiment::CondCdf,
            tables: vec![(Experiment::CondCdf.file_stem().into(), table)],
            summary: json!({
                "trials_used": self.values[0].len(),
                "trials_skipped": self.trials_skipped,
                "lmmse_snr_db": self.rho_db,
                "medians": medians,
            }),
            lines,
            failed: false,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sorted values paired with `rank / count`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect()
}

pub fn cond_cdf(config: &SimConfig) -> Result<CondResults> {
    config.validate()?;
    let geometry = build_geometry(&config.system.geometry())?;
    let c = &config.channel;
    let generator = ChannelGenerator::new(c.model, &geometry, c.propagation, c.model4, c.corr_rho)?;
    let rho_db = config.detection.snr_db[0];
    let rho = SnrSpec::from_db(rho_db)?.rho_linear();
    let seed = config.monte_carlo.seed;
    let trials = config.monte_carlo.trials as u64;
    let draws: Vec<Option<[f64; 4]>> = with_threads(config.monte_carlo.threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let outcome = generator
                    .generate_trial(seed, t)
                    .and_then(|r| condition_numbers(&r.h, &r.partition, rho));
                match outcome {
                    Ok(v) => Ok(Some(v)),
                    Err(e) if is_degenerate(&e) => Ok(None),
                    Err(e) => Err(anyhow::Error::from(e)),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut values: [Vec<f64>; 4] = Default::default();
    let mut skipped = 0;
    for d in draws {
        match d {
            Some(v) => {
                for (dst, x) in values.iter_mut().zip(v) {
                    dst.push(x);
                }
            }
            None => skipped += 1,
        }
    }
    if values[0].is_empty() {
        bail!("all {skipped} channel draws were degenerate");
    }
    Ok(CondResults {
        values,
        trials_skipped: skipped,
        rho_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_endpoints() {
        let cdf = empirical_cdf(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(cdf.first(), Some(&(1.0, 0.25)));
        assert_eq!(cdf.last(), Some(&(3.0, 1.0)));
        assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
