use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::engine::{run, EngineError, GraphError, GraphFamily, RunOptions};
use crate::protocols::{Color, Protocol};

/// Least-squares fit of `log y = intercept + exponent * log x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% confidence interval of the exponent.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// Needs at least three points with positive coordinates and two distinct
/// `x` values.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<PowerFit> {
    if xs.len() != ys.len() || xs.len() < 3 || xs.iter().chain(ys).any(|&v| v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    let dof = n - 2.0;
    let stderr = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).ok()?.inverse_cdf(0.975);
    Some(PowerFit {
        exponent,
        intercept,
        stderr,
        ci_low: exponent - t * stderr,
        ci_high: exponent + t * stderr,
        points: xs.len(),
    })
}

/// First-correct step of one run, `None` when it hit the step limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSample {
    pub n: usize,
    pub seed: u64,
    pub steps: Option<u64>,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeMean {
    pub n: usize,
    pub runs: usize,
    pub mean_steps: f64,
    pub mean_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub protocol: String,
    pub family: String,
    pub means: Vec<SizeMean>,
    /// Fit of mean activations against n.
    pub fit: Option<PowerFit>,
    /// Fit of mean continuous time against n.
    pub time_fit: Option<PowerFit>,
    /// `(n, seed)` of runs excluded for hitting the step limit.
    pub excluded: Vec<(usize, u64)>,
}

impl ScalingReport {
    pub fn from_samples(protocol: &str, family: &str, samples: &[ScalingSample]) -> Self {
        let mut sizes: Vec<usize> = samples.iter().map(|s| s.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut means = Vec::new();
        for n in sizes {
            let done: Vec<&ScalingSample> = samples.iter().filter(|s| s.n == n && s.steps.is_some()).collect();
            if done.is_empty() {
                continue;
            }
            let k = done.len() as f64;
            means.push(SizeMean {
                n,
                runs: done.len(),
                mean_steps: done.iter().map(|s| s.steps.unwrap_or(0) as f64).sum::<f64>() / k,
                mean_time: done.iter().map(|s| s.time).sum::<f64>() / k,
            });
        }
        let xs: Vec<f64> = means.iter().map(|m| m.n as f64).collect();
        let steps: Vec<f64> = means.iter().map(|m| m.mean_steps).collect();
        let times: Vec<f64> = means.iter().map(|m| m.mean_time).collect();
        Self {
            protocol: protocol.to_string(),
            family: family.to_string(),
            fit: fit_power_law(&xs, &steps),
            time_fit: fit_power_law(&xs, &times),
            excluded: samples.iter().filter(|s| s.steps.is_none()).map(|s| (s.n, s.seed)).collect(),
            means,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScalingError {
    #[error("scaling needs at least 3 sizes and 1 seed")]
    TooFewPoints,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Runs `protocol` on `family` at every size and seed (in parallel) and
/// fits the growth of the mean first-correct step. Seeds feed both the
/// graph generator and the scheduler.
pub fn scaling_report<P: Protocol>(
    protocol: &P,
    family: &GraphFamily,
    sizes: &[usize],
    seeds: &[u64],
    input: impl Fn(usize, u64) -> Vec<Color> + Sync,
    options: &RunOptions,
) -> Result<ScalingReport, ScalingError> {
    if sizes.len() < 3 || seeds.is_empty() {
        return Err(ScalingError::TooFewPoints);
    }
    let grid: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let samples = grid
        .par_iter()
        .map(|&(n, seed)| -> Result<ScalingSample, ScalingError> {
            let graph = family.spec(n).build(seed)?;
            let opts = RunOptions { seed, record_trace: false, ..options.clone() };
            let out = run(protocol, &graph, &input(n, seed), &opts)?;
            let r = out.result;
            let steps = if r.stabilized { r.first_correct_step } else { None };
            Ok(ScalingSample { n, seed, steps, time: r.elapsed_time })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScalingReport::from_samples(&protocol.name(), &family.to_string(), &samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let xs = [8.0, 16.0, 32.0, 64.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.exponent - 2.5).abs() < 1e-9);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-9);
        assert!(f.stderr < 1e-9);
    }

    #[test]
    fn noisy_fit_has_interval() {
        let xs = [8.0, 16.0, 32.0, 64.0];
        let ys = [70.0, 230.0, 1100.0, 3900.0];
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!(f.ci_low < f.exponent && f.exponent < f.ci_high);
        assert!(fit_power_law(&xs[..2], &ys[..2]).is_none());
        assert!(fit_power_law(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn timeouts_are_excluded() {
        let s = |n, seed, steps| ScalingSample { n, seed, steps, time: 1.0 };
        let r = ScalingReport::from_samples(
            "p",
            "f",
            &[s(4, 0, Some(10)), s(4, 1, None), s(8, 0, Some(40)), s(16, 0, Some(160))],
        );
        assert_eq!(r.excluded, vec![(4, 1)]);
        assert_eq!(r.means[0].runs, 1);
        assert!((r.fit.unwrap().exponent - 2.0).abs() < 1e-9);
    }
}
