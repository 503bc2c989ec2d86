//! Fixed-column CSV files. Floats are written in scientific notation with
//! 17 significant digits, which reads back to the identical `f64`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One iteration of one sweep point, aggregated over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub rho: f64,
    pub iter: usize,
    pub mse_amp_mean: f64,
    pub mse_amp_stderr: f64,
    pub mse_se: f64,
    pub n_trials: usize,
    pub converged_fraction: f64,
}

/// One layer at one state-evolution iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeRow {
    pub beta: f64,
    pub rho: f64,
    pub iter: usize,
    pub layer: usize,
    pub m: f64,
    pub m_hat: f64,
    pub mse_se: f64,
}

const SWEEP_HEADER: [&str; 8] =
    ["beta", "rho", "iter", "mse_amp_mean", "mse_amp_stderr", "mse_se", "n_trials", "converged_fraction"];
const SE_HEADER: [&str; 7] = ["beta", "rho", "iter", "layer", "m", "m_hat", "mse_se"];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            fmt(r.beta),
            fmt(r.rho),
            r.iter.to_string(),
            fmt(r.mse_amp_mean),
            fmt(r.mse_amp_stderr),
            fmt(r.mse_se),
            r.n_trials.to_string(),
            fmt(r.converged_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

pub fn write_se_csv<W: Write>(rows: &[SeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SE_HEADER)?;
    for r in rows {
        w.write_record([
            fmt(r.beta),
            fmt(r.rho),
            r.iter.to_string(),
            r.layer.to_string(),
            fmt(r.m),
            fmt(r.m_hat),
            fmt(r.mse_se),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_se_csv<R: Read>(input: R) -> Result<Vec<SeRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<SeRow>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(0.0), Just(1e-300), Just(-0.0)]
    }

    proptest! {
        #[test]
        fn sweep_rows_round_trip(
            vals in proptest::collection::vec((finite(), finite(), 0usize..1000, finite(), finite(), finite(), 1usize..50, finite()), 1..20)
        ) {
            let rows: Vec<SweepRow> = vals
                .into_iter()
                .map(|(beta, rho, iter, a, b, c, n, f)| SweepRow {
                    beta, rho, iter, mse_amp_mean: a, mse_amp_stderr: b, mse_se: c, n_trials: n, converged_fraction: f,
                })
                .collect();
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf).unwrap();
            let back = read_sweep_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (x, y) in back.iter().zip(&rows) {
                prop_assert_eq!(x.beta.to_bits(), y.beta.to_bits());
                prop_assert_eq!(x.mse_amp_mean.to_bits(), y.mse_amp_mean.to_bits());
                prop_assert_eq!(x.mse_amp_stderr.to_bits(), y.mse_amp_stderr.to_bits());
                prop_assert_eq!(x.mse_se.to_bits(), y.mse_se.to_bits());
                prop_assert_eq!(x.converged_fraction.to_bits(), y.converged_fraction.to_bits());
                prop_assert_eq!((x.iter, x.n_trials), (y.iter, y.n_trials));
            }
        }
    }

    #[test]
    fn header_and_nan() {
        let row = SeRow { beta: 0.5, rho: f64::NAN, iter: 0, layer: 1, m: 0.0, m_hat: 0.0, mse_se: 0.25 };
        let mut buf = Vec::new();
        write_se_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("beta,rho,iter,layer,m,m_hat,mse_se\n"));
        assert!(text.contains("5.0000000000000000e-1,NaN,0,1,"));
        let back = read_se_csv(buf.as_slice()).unwrap();
        assert!(back[0].rho.is_nan());
        assert_eq!(back[0].mse_se, 0.25);
    }
}
