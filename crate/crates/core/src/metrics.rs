//! Performance indices of adjoint sensitivity and estimation quality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::TimeAxis;
use crate::transport::AdjointRecord;

/// Adjoint ratio: rms over mean of the sensitivity trace at the source.
pub fn epsilon(record: &AdjointRecord) -> Result<f64> {
    ratio(record.rms(), record.mean())
}

/// Adjoint ratio of a raw trace, using the same quadrature as [`AdjointRecord`].
pub fn epsilon_of_trace(time: &TimeAxis, trace: &[f64]) -> Result<f64> {
    ratio(time.rms(trace), time.mean(trace))
}

fn ratio(rms: f64, mean: f64) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(Error::DegenerateSensitivity(format!(
            "sensitivity mean is {mean}; the sensor never sees the source"
        )));
    }
    Ok(rms / mean)
}

/// Correlation coefficient of the mean-removed traces, trapezoidal in time.
pub fn psi_phi(time: &TimeAxis, truth: &[f64], est: &[f64]) -> Result<f64> {
    check_len(time, truth, est)?;
    let mt = time.mean(truth);
    let me = time.mean(est);
    let dt: Vec<f64> = truth.iter().map(|v| v - mt).collect();
    let de: Vec<f64> = est.iter().map(|v| v - me).collect();
    let cov = time.integrate(&dt.iter().zip(&de).map(|(a, b)| a * b).collect::<Vec<_>>());
    let vt = time.integrate(&dt.iter().map(|a| a * a).collect::<Vec<_>>());
    let ve = time.integrate(&de.iter().map(|a| a * a).collect::<Vec<_>>());
    if !(vt > 0.0 && ve > 0.0) {
        return Err(Error::UndefinedCorrelation(
            "one of the traces is constant".into(),
        ));
    }
    Ok((cov / (vt.sqrt() * ve.sqrt())).clamp(-1.0, 1.0))
}

/// `sqrt((1/T) integral (truth - est)^2 dt)`.
pub fn l2_norm(time: &TimeAxis, truth: &[f64], est: &[f64]) -> Result<f64> {
    check_len(time, truth, est)?;
    let d: Vec<f64> = truth
        .iter()
        .zip(est)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(time.mean(&d).sqrt())
}

fn check_len(time: &TimeAxis, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != time.len() || b.len() != time.len() {
        return Err(Error::Shape(format!(
            "traces have {} and {} samples, time axis has {}",
            a.len(),
            b.len(),
            time.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSummary {
    pub epsilon: f64,
    pub psi_phi: f64,
    pub l2_norm: f64,
    pub scenario: String,
    pub iteration: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceCurve {
    /// `(epsilon, psi_phi)` sorted by epsilon.
    pub pairs: Vec<(f64, f64)>,
    pub spearman: f64,
}

/// Minimum number of summaries for a rank correlation.
pub const MIN_CURVE_POINTS: usize = 5;

/// Spearman rank correlation between epsilon and psi over `summaries`.
pub fn epsilon_performance_curve(summaries: &[PerformanceSummary]) -> Result<PerformanceCurve> {
    if summaries.len() < MIN_CURVE_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_CURVE_POINTS,
            got: summaries.len(),
        });
    }
    let eps: Vec<f64> = summaries.iter().map(|s| s.epsilon).collect();
    let psi: Vec<f64> = summaries.iter().map(|s| s.psi_phi).collect();
    let mut pairs: Vec<(f64, f64)> = eps.iter().copied().zip(psi.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PerformanceCurve {
        pairs,
        spearman: spearman(&eps, &psi)?,
    })
}

/// Spearman correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    let ra = ranks(a);
    let rb = ranks(b);
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut c, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        c += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::UndefinedCorrelation("constant ranks".into()));
    }
    Ok(c / (va.sqrt() * vb.sqrt()))
}
