//! Least-squares fits of the single Gaussian, individual Gaussian and
//! linear regression models.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::scoring::AccuracyPair;

/// Pooled offset model: `y = x + mu + e` for every system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SParams {
    pub mu: f64,
    pub sigma2: f64,
    pub xbar: f64,
    pub s2x: f64,
    pub pool_size: usize,
    pub n_systems: usize,
    pub n: usize,
    pub systems: Vec<String>,
}

/// Per-system offset: `y = x + mu_a + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IEntry {
    pub mu_a: f64,
    pub sigma2_a: f64,
    pub xbar_a: f64,
    pub s2x_a: f64,
    pub n: usize,
}

/// Per-system line: `y = a x + b + e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LEntry {
    pub a: f64,
    pub b: f64,
    pub sigma2_a: f64,
    pub xbar_a: f64,
    pub s2x_a: f64,
    pub n: usize,
}

pub type IParams = BTreeMap<String, IEntry>;
pub type LParams = BTreeMap<String, LEntry>;

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len() as f64;
    values.sum::<f64>() / n
}

/// Unbiased variance around a given center.
fn variance(values: impl ExactSizeIterator<Item = f64>, center: f64) -> f64 {
    let denom = (values.len() - 1) as f64;
    values.map(|v| (v - center).powi(2)).sum::<f64>() / denom
}

fn require(points: usize, needed: usize) -> Result<(), EstimatorError> {
    if points < needed {
        return Err(EstimatorError::InsufficientData { needed, got: points });
    }
    Ok(())
}

pub fn fit_individual_gaussian(points: &[(f64, f64)]) -> Result<IEntry, EstimatorError> {
    require(points.len(), 2)?;
    let mu_a = mean(points.iter().map(|(x, y)| y - x));
    let xbar_a = mean(points.iter().map(|p| p.0));
    Ok(IEntry {
        mu_a,
        sigma2_a: variance(points.iter().map(|(x, y)| y - x), mu_a),
        xbar_a,
        s2x_a: variance(points.iter().map(|p| p.0), xbar_a),
        n: points.len(),
    })
}

pub fn fit_linear_regression(points: &[(f64, f64)]) -> Result<LEntry, EstimatorError> {
    require(points.len(), 3)?;
    let n = points.len();
    let xbar = mean(points.iter().map(|p| p.0));
    let ybar = mean(points.iter().map(|p| p.1));
    let sxx: f64 = points.iter().map(|(x, _)| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EstimatorError::DegenerateDesign);
    }
    let sxy: f64 = points.iter().map(|(x, y)| (y - ybar) * (x - xbar)).sum();
    let a = sxy / sxx;
    let b = ybar - a * xbar;
    let sse: f64 = points.iter().map(|(x, y)| (y - a * x - b).powi(2)).sum();
    Ok(LEntry {
        a,
        b,
        sigma2_a: sse / (n - 2) as f64,
        xbar_a: xbar,
        s2x_a: sxx / (n - 1) as f64,
        n,
    })
}

/// Intercept-only fit with the slope held at `slope`. One parameter is
/// estimated, so the residual variance uses `n - 1`.
pub fn fit_linear_fixed_slope(points: &[(f64, f64)], slope: f64) -> Result<LEntry, EstimatorError> {
    require(points.len(), 2)?;
    let n = points.len();
    let xbar = mean(points.iter().map(|p| p.0));
    let b = mean(points.iter().map(|(x, y)| y - slope * x));
    let sse: f64 = points.iter().map(|(x, y)| (y - slope * x - b).powi(2)).sum();
    Ok(LEntry {
        a: slope,
        b,
        sigma2_a: sse / (n - 1) as f64,
        xbar_a: xbar,
        s2x_a: variance(points.iter().map(|p| p.0), xbar),
        n,
    })
}

/// Groups validation pairs by system, keeping first-appearance order.
/// Every pair must carry a ground-truth accuracy.
pub fn group_by_system(pairs: &[AccuracyPair]) -> Result<Vec<(String, Vec<&AccuracyPair>)>, EstimatorError> {
    let mut groups: Vec<(String, Vec<&AccuracyPair>)> = Vec::new();
    for p in pairs {
        if p.y.is_none() {
            return Err(EstimatorError::MissingGroundTruth {
                song: p.song_id.clone(),
                system: p.system.clone(),
            });
        }
        match groups.iter_mut().find(|(s, _)| *s == p.system) {
            Some((_, rows)) => rows.push(p),
            None => groups.push((p.system.clone(), vec![p])),
        }
    }
    Ok(groups)
}

fn points(rows: &[&AccuracyPair]) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|p| (p.x, p.y.expect("checked by group_by_system")))
        .collect()
}

pub fn fit_single_gaussian(pairs: &[AccuracyPair]) -> Result<SParams, EstimatorError> {
    let groups = group_by_system(pairs)?;
    let reference: Option<BTreeSet<&str>> = groups
        .first()
        .map(|(_, rows)| rows.iter().map(|p| p.song_id.as_str()).collect());
    for (_, rows) in &groups {
        let songs: BTreeSet<&str> = rows.iter().map(|p| p.song_id.as_str()).collect();
        if songs.len() != rows.len() || Some(&songs) != reference.as_ref() {
            return Err(EstimatorError::UnbalancedPanel);
        }
    }
    let pool_size = pairs.len();
    require(pool_size, 2)?;
    let mu = mean(pairs.iter().map(|p| p.y.unwrap() - p.x));
    let xbar = mean(pairs.iter().map(|p| p.x));
    Ok(SParams {
        mu,
        sigma2: variance(pairs.iter().map(|p| p.y.unwrap() - p.x), mu),
        xbar,
        s2x: variance(pairs.iter().map(|p| p.x), xbar),
        pool_size,
        n_systems: groups.len(),
        n: pool_size / groups.len(),
        systems: groups.into_iter().map(|(s, _)| s).collect(),
    })
}

pub fn fit_individual(pairs: &[AccuracyPair]) -> Result<IParams, EstimatorError> {
    group_by_system(pairs)?
        .into_iter()
        .map(|(system, rows)| Ok((system, fit_individual_gaussian(&points(&rows))?)))
        .collect()
}

pub fn fit_linear(pairs: &[AccuracyPair]) -> Result<LParams, EstimatorError> {
    group_by_system(pairs)?
        .into_iter()
        .map(|(system, rows)| Ok((system, fit_linear_regression(&points(&rows))?)))
        .collect()
}
