//! FastICA (deflation, log-cosh contrast) and blink-component removal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

use super::EegRecording;

/// Minimum recording length for a stable decomposition, seconds.
pub const MIN_ICA_SECONDS: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaConfig {
    /// Components to extract; all channels when `None`.
    pub n_components: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    /// Fit on every `decimate`-th sample.
    pub decimate: usize,
    /// Components whose activation correlates above this with the blink
    /// reference are removed.
    pub blink_r: f64,
    /// Channels averaged into the blink reference.
    pub blink_reference: Vec<String>,
    pub seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            n_components: None,
            max_iter: 200,
            tol: 1e-6,
            decimate: 4,
            blink_r: 0.7,
            blink_reference: vec!["Fp1".into(), "Fp2".into()],
            seed: 0x1CA,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaModel {
    pub mean: DVector<f64>,
    /// Components x channels.
    pub unmixing: DMatrix<f64>,
    /// Channels x components.
    pub mixing: DMatrix<f64>,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
}

impl IcaModel {
    pub fn n_components(&self) -> usize {
        self.unmixing.nrows()
    }

    pub fn sources(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut xc = x.clone();
        for mut col in xc.column_iter_mut() {
            col -= &self.mean;
        }
        &self.unmixing * xc
    }
}

fn row_mean(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.mean()))
}

/// Estimate `k` independent components of `x` (channels x samples).
pub fn fastica<R: Rng + ?Sized>(x: &DMatrix<f64>, k: usize, cfg: &IcaConfig, rng: &mut R) -> Result<IcaModel> {
    let (c, n) = x.shape();
    if k == 0 || k > c {
        return Err(invalid_arg(format!("cannot extract {k} components from {c} channels")));
    }
    if n <= c {
        return Err(invalid_arg(format!("{n} samples are too few for {c} channels")));
    }
    let mean = row_mean(x);
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        col -= &mean;
    }
    let cov = (&xc * xc.transpose()) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let k = order
        .iter()
        .take(k)
        .take_while(|&&i| eig.eigenvalues[i] > 1e-10 * top)
        .count();
    if k == 0 {
        return Err(Error::Analysis("data have no variance".into()));
    }
    let vecs = DMatrix::from_fn(c, k, |r, j| eig.eigenvectors[(r, order[j])]);
    let scale = DVector::from_fn(k, |j, _| eig.eigenvalues[order[j]].sqrt());
    let whitening = DMatrix::from_fn(k, c, |j, r| vecs[(r, j)] / scale[j]);
    let z = &whitening * &xc;

    let mut w_rows: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut converged = Vec::with_capacity(k);
    let mut iterations = Vec::with_capacity(k);
    let orthogonalize = |w: &mut DVector<f64>, prev: &[DVector<f64>]| {
        for p in prev {
            let d = w.dot(p);
            w.axpy(-d, p, 1.0);
        }
        let norm = w.norm();
        if norm > 0.0 {
            *w /= norm;
        }
    };
    for _ in 0..k {
        let mut w = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        orthogonalize(&mut w, &w_rows);
        let mut done = false;
        let mut it = 0;
        while it < cfg.max_iter {
            it += 1;
            let wx = z.tr_mul(&w);
            let g = wx.map(f64::tanh);
            let gp_mean = g.iter().map(|v| 1.0 - v * v).sum::<f64>() / n as f64;
            let mut next = (&z * &g) / n as f64 - &w * gp_mean;
            orthogonalize(&mut next, &w_rows);
            let lim = (1.0 - next.dot(&w).abs()).abs();
            w = next;
            if lim < cfg.tol {
                done = true;
                break;
            }
        }
        w_rows.push(w);
        converged.push(done);
        iterations.push(it);
    }
    let w = DMatrix::from_fn(k, k, |i, j| w_rows[i][j]);
    let unmixing = &w * &whitening;
    let dewhitening = DMatrix::from_fn(c, k, |r, j| vecs[(r, j)] * scale[j]);
    let mixing = dewhitening * w.transpose();
    Ok(IcaModel {
        mean,
        unmixing,
        mixing,
        converged,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcaReport {
    pub n_components: usize,
    pub converged_components: usize,
    /// Correlation of each component with the blink reference.
    pub correlations: Vec<f64>,
    pub removed: Vec<usize>,
    /// True when the decomposition failed and the data were passed through.
    pub passthrough: bool,
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

/// Decompose the recording, zero every converged component that tracks the
/// frontal blink reference and re-mix the rest.
pub fn remove_eye_artifacts(rec: &EegRecording, cfg: &IcaConfig) -> Result<(EegRecording, IcaReport)> {
    let (c, n) = (rec.data.len(), rec.n_samples());
    if c < super::MONTAGE_10_20.len() {
        return Err(invalid_arg(format!("eye-artifact removal needs 19 channels, got {c}")));
    }
    if (n as f64) < MIN_ICA_SECONDS * rec.fs {
        return Err(invalid_arg(format!(
            "eye-artifact removal needs {MIN_ICA_SECONDS} s of data, got {:.1} s",
            n as f64 / rec.fs
        )));
    }
    let refs = cfg
        .blink_reference
        .iter()
        .map(|l| {
            rec.channel_index(l)
                .ok_or_else(|| Error::InvalidMontage(format!("blink reference channel {l} missing")))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference: Vec<f64> = (0..n)
        .map(|t| refs.iter().map(|&i| rec.data[i][t]).sum::<f64>() / refs.len() as f64)
        .collect();

    let step = cfg.decimate.max(1);
    let cols: Vec<usize> = (0..n).step_by(step).collect();
    let fit = DMatrix::from_fn(c, cols.len(), |r, j| rec.data[r][cols[j]]);
    let k = cfg.n_components.unwrap_or(c).min(c);
    let mut rng = crate::kinematics::SeededRng::new(cfg.seed, 0x1CA);
    let model = fastica(&fit, k, cfg, &mut rng)?;
    let converged_components = model.converged.iter().filter(|&&c| c).count();
    if converged_components == 0 {
        log::warn!("ICA did not converge in {} iterations; data passed through", cfg.max_iter);
        return Ok((
            rec.clone(),
            IcaReport {
                n_components: model.n_components(),
                converged_components,
                correlations: vec![],
                removed: vec![],
                passthrough: true,
            },
        ));
    }
    let full = DMatrix::from_fn(c, n, |r, t| rec.data[r][t]);
    let sources = model.sources(&full);
    let correlations: Vec<f64> = (0..model.n_components())
        .map(|j| {
            let row: Vec<f64> = sources.row(j).iter().copied().collect();
            pearson(&row, &reference).unwrap_or(0.0)
        })
        .collect();
    let removed: Vec<usize> = (0..model.n_components())
        .filter(|&j| model.converged[j] && correlations[j].abs() > cfg.blink_r)
        .collect();
    let mut data = rec.data.clone();
    for &j in &removed {
        for (ch, row) in data.iter_mut().enumerate() {
            let a = model.mixing[(ch, j)];
            for (v, s) in row.iter_mut().zip(sources.row(j).iter()) {
                *v -= a * s;
            }
        }
    }
    Ok((
        EegRecording {
            data,
            ..rec.clone()
        },
        IcaReport {
            n_components: model.n_components(),
            converged_components,
            correlations,
            removed,
            passthrough: false,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::SeededRng;

    #[test]
    fn recovers_three_source_mixture() {
        let n = 6000;
        let t = |i: usize| i as f64 / 300.0;
        let s1: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 1.3 * t(i)).sin()).collect();
        let s2: Vec<f64> = (0..n).map(|i| if (t(i) * 0.7).fract() < 0.5 { 1.0 } else { -1.0 }).collect();
        let s3: Vec<f64> = (0..n).map(|i| 2.0 * (t(i) * 0.45).fract() - 1.0).collect();
        let sources = [s1, s2, s3];
        let mix = [[1.0, 0.6, -0.4], [0.3, 1.0, 0.8], [-0.7, 0.2, 1.0]];
        let x = DMatrix::from_fn(3, n, |r, i| (0..3).map(|j| mix[r][j] * sources[j][i]).sum());
        let mut rng = SeededRng::new(4, 0);
        let model = fastica(&x, 3, &IcaConfig::default(), &mut rng).unwrap();
        assert!(model.converged.iter().all(|&c| c));
        let est = model.sources(&x);
        for truth in &sources {
            let best = (0..3)
                .map(|j| {
                    let row: Vec<f64> = est.row(j).iter().copied().collect();
                    pearson(&row, truth).unwrap().abs()
                })
                .fold(0.0, f64::max);
            assert!(best > 0.95, "best |r| = {best}");
        }
    }

    #[test]
    fn mixing_inverts_unmixing() {
        let mut rng = SeededRng::new(9, 1);
        let x = DMatrix::from_fn(4, 2000, |_, _| rng.random::<f64>() - 0.5);
        let model = fastica(&x, 4, &IcaConfig::default(), &mut SeededRng::new(1, 1)).unwrap();
        let id = &model.mixing * &model.unmixing;
        assert!((id - DMatrix::identity(4, 4)).abs().max() < 1e-9);
    }
}
