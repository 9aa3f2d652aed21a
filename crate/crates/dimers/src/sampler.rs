//! Random dimer covers: exact sampling by sequential conditioning on the
//! inverse Kasteleyn matrix, batches of samples or chains, and empirical
//! statistics over a batch.
//!
//! At each white vertex the edge `(w, b)` is taken with probability
//! `K(b, w) K^-1(w, b)` for the matrix with all earlier choices removed.
//! Removing row `b` and column `w` updates the inverse by the Schur
//! complement `M'(w', b') = M(w', b') - M(w', b) M(w, b') / M(w, b)`, so one
//! sample costs `O(n^3)` after a single dense inversion shared by the batch.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gauss::Phase;
use crate::graph::{BipartiteGraph, Label};
use crate::height::{height_function, tileable, BaseFlow, Glauber, Matching};
use crate::kasteleyn::KasteleynMatrix;
use crate::linalg::complex_inverse;

/// Probabilities below this are treated as zero when conditioning.
const PROB_FLOOR: f64 = 1e-14;

/// Precomputed float Kasteleyn data for repeated exact sampling.
pub struct ExactSampler<'a> {
    g: &'a BipartiteGraph,
    /// `K[b][w]`, summed over parallel edges.
    k: Vec<Vec<Complex64>>,
    /// `K^-1[w][b]`.
    kinv: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
}

impl<'a> ExactSampler<'a> {
    pub fn new(g: &'a BipartiteGraph, ph: &[Phase]) -> Result<Self> {
        if !g.is_balanced() {
            return Err(Error::Untileable);
        }
        let km = KasteleynMatrix::new(g, ph);
        let k: Vec<Vec<Complex64>> = km.dense().iter().map(|r| r.iter().map(|v| v.to_complex()).collect()).collect();
        let kinv = complex_inverse(&k).ok_or(Error::Untileable)?;
        let weights = g.edges.iter().map(|e| e.weight.to_f64().unwrap_or(0.0)).collect();
        Ok(ExactSampler { g, k, kinv, weights })
    }

    /// One exact sample and the log of its probability under the sampler.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(Matching, f64)> {
        let g = self.g;
        let (nw, nb) = (g.nw(), g.nb());
        let mut m = self.kinv.clone();
        let mut alive_b = vec![true; nb];
        let mut alive_w = vec![true; nw];
        let mut white_edge = vec![usize::MAX; nw];
        let mut logp = 0.0;
        for w in 0..nw {
            // candidate blacks with their conditional probabilities
            let mut cands: Vec<(usize, f64)> = Vec::new();
            for &e in g.white_edges(w) {
                let b = g.edges[e].black;
                if !alive_b[b] || cands.iter().any(|c| c.0 == b) {
                    continue;
                }
                let p = (self.k[b][w] * m[w][b]).re;
                cands.push((b, if p > PROB_FLOOR { p } else { 0.0 }));
            }
            let total: f64 = cands.iter().map(|c| c.1).sum();
            if total <= 0.0 {
                return Err(Error::Tolerance(format!("no admissible edge at white {w}")));
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = cands.len() - 1;
            for (i, c) in cands.iter().enumerate() {
                if u < c.1 {
                    pick = i;
                    break;
                }
                u -= c.1;
            }
            let (b, p) = cands[pick];
            logp += (p / total).ln();
            // among parallel edges, proportional to weight
            let par: Vec<usize> = g.white_edges(w).iter().copied().filter(|&e| g.edges[e].black == b).collect();
            let e = if par.len() == 1 {
                par[0]
            } else {
                let tw: f64 = par.iter().map(|&e| self.weights[e]).sum();
                let mut u = rng.random::<f64>() * tw;
                let mut ch = par[par.len() - 1];
                for &e in &par {
                    if u < self.weights[e] {
                        ch = e;
                        break;
                    }
                    u -= self.weights[e];
                }
                logp += (self.weights[ch] / tw).ln();
                ch
            };
            white_edge[w] = e;
            alive_w[w] = false;
            alive_b[b] = false;
            let piv = m[w][b];
            let row: Vec<Complex64> = m[w].clone();
            for w2 in (w + 1)..nw {
                if !alive_w[w2] {
                    continue;
                }
                let f = m[w2][b] / piv;
                if f.norm() == 0.0 {
                    continue;
                }
                let r2 = &mut m[w2];
                for b2 in 0..nb {
                    if alive_b[b2] {
                        r2[b2] -= f * row[b2];
                    }
                }
            }
        }
        Ok((Matching { white_edge }, logp))
    }
}

/// Draws one matching exactly from the Boltzmann measure.
pub fn exact_sample(g: &BipartiteGraph, ph: &[Phase], seed: u64) -> Result<Matching> {
    let s = ExactSampler::new(g, ph)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(s.sample(&mut rng)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Glauber,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBatch {
    pub matchings: Vec<Matching>,
    pub seed: u64,
    pub method: Method,
    /// Log-probabilities of exact samples, empty for chains.
    pub log_probs: Vec<f64>,
}

/// Per-sample generator: ChaCha8 seeded with the master seed, stream `i`.
pub fn stream_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i);
    r
}

/// `count` independent exact samples, in parallel, reproducible per seed.
pub fn exact_batch(g: &BipartiteGraph, ph: &[Phase], count: usize, seed: u64) -> Result<SampleBatch> {
    let s = ExactSampler::new(g, ph)?;
    let out: Result<Vec<(Matching, f64)>> = (0..count).into_par_iter().map(|i| s.sample(&mut stream_rng(seed, i as u64))).collect();
    let (matchings, log_probs) = out?.into_iter().unzip();
    Ok(SampleBatch { matchings, seed, method: Method::Exact, log_probs })
}

/// Glauber chain options; the burn-in default is `10 |faces|` sweeps.
#[derive(Clone, Copy, Debug)]
pub struct ChainConfig {
    pub chains: usize,
    pub burn_in: Option<u64>,
    /// Proposals between recorded samples.
    pub thin: u64,
    pub per_chain: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { chains: 4, burn_in: None, thin: 0, per_chain: 1 }
    }
}

/// Samples from independent chains started at a maximum matching. A zero
/// `thin` means one sweep (`|faces|` proposals).
pub fn glauber_batch(g: &BipartiteGraph, cfg: ChainConfig, seed: u64) -> Result<SampleBatch> {
    let (ok, m0) = tileable(g);
    let m0 = match (ok, m0) {
        (true, Some(m)) => m,
        _ => return Err(Error::Untileable),
    };
    let chains: Vec<Vec<Matching>> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let sub = stream_rng(seed, c as u64).random::<u64>();
            let mut ch = Glauber::new(g, m0.clone(), sub);
            match cfg.burn_in {
                Some(n) => ch.run(n),
                None => ch.burn_in(),
            }
            let thin = if cfg.thin == 0 { ch.face_count().max(1) as u64 } else { cfg.thin };
            let mut out = Vec::with_capacity(cfg.per_chain);
            for k in 0..cfg.per_chain {
                if k > 0 {
                    ch.run(thin);
                }
                out.push(ch.matching.clone());
            }
            out
        })
        .collect();
    Ok(SampleBatch { matchings: chains.into_iter().flatten().collect(), seed, method: Method::Glauber, log_probs: Vec::new() })
}

/// Which statistics `collect_stats` should gather.
#[derive(Clone, Debug, Default)]
pub struct StatsQuery {
    /// Faces at which to report height mean and variance.
    pub faces: Vec<usize>,
    pub base: Option<BaseFlow>,
    /// Square bin size for label density fields, in position units.
    pub density_cell: Option<f64>,
}

/// Fraction of matched edges of each label among matched edges whose
/// midpoints fall in each bin, averaged over the batch.
#[derive(Clone, Debug, Serialize)]
pub struct DensityField {
    pub origin: (f64, f64),
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub labels: Vec<String>,
    /// `values[label][iy * nx + ix]`; `NaN` for empty bins.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatsReport {
    pub samples: usize,
    pub edge_freq: Vec<f64>,
    pub height_mean: Vec<f64>,
    pub height_var: Vec<f64>,
    pub density: Option<DensityField>,
}

impl StatsReport {
    /// Binomial z-score of the empirical frequency of edge `e` against `p`.
    pub fn edge_z(&self, e: usize, p: f64) -> f64 {
        let n = self.samples as f64;
        let sd = (p * (1.0 - p) / n).sqrt();
        if sd == 0.0 {
            if (self.edge_freq[e] - p).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.edge_freq[e] - p) / sd
        }
    }
}

pub fn edge_midpoint(g: &BipartiteGraph, e: usize) -> (f64, f64) {
    let ed = &g.edges[e];
    let a = g.whites[ed.white].pos;
    let b = g.black_pos_lifted(e);
    ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
}

pub fn collect_stats(g: &BipartiteGraph, batch: &SampleBatch, q: &StatsQuery) -> Result<StatsReport> {
    let n = batch.matchings.len();
    if n == 0 {
        return Err(Error::Malformed("empty batch".into()));
    }
    let mut counts = vec![0usize; g.edges.len()];
    for m in &batch.matchings {
        for &e in &m.white_edge {
            counts[e] += 1;
        }
    }
    let edge_freq = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let (mut height_mean, mut height_var) = (Vec::new(), Vec::new());
    if !q.faces.is_empty() {
        let base = q.base.clone().unwrap_or(BaseFlow::Uniform);
        let hs: Result<Vec<Vec<f64>>> = batch
            .matchings
            .par_iter()
            .map(|m| {
                let h = height_function(g, m, &base, None)?;
                Ok(q.faces.iter().map(|&f| h.get(f).and_then(|v| v.to_f64()).unwrap_or(f64::NAN)).collect())
            })
            .collect();
        let hs = hs?;
        for i in 0..q.faces.len() {
            let mean = hs.iter().map(|h| h[i]).sum::<f64>() / n as f64;
            let var = hs.iter().map(|h| (h[i] - mean).powi(2)).sum::<f64>() / n as f64;
            height_mean.push(mean);
            height_var.push(var);
        }
    }

    let density = q.density_cell.map(|cell| {
        let mids: Vec<(f64, f64)> = (0..g.edges.len()).map(|e| edge_midpoint(g, e)).collect();
        let x0 = mids.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let y0 = mids.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let x1 = mids.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let y1 = mids.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let nx = ((x1 - x0) / cell).floor() as usize + 1;
        let ny = ((y1 - y0) / cell).floor() as usize + 1;
        let mut labels: Vec<Label> = g.edges.iter().map(|e| e.label).collect();
        labels.sort();
        labels.dedup();
        let li: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let bin = |e: usize| {
            let (x, y) = mids[e];
            (((y - y0) / cell) as usize).min(ny - 1) * nx + (((x - x0) / cell) as usize).min(nx - 1)
        };
        let mut per = vec![vec![0usize; nx * ny]; labels.len()];
        let mut tot = vec![0usize; nx * ny];
        for (e, &c) in counts.iter().enumerate() {
            let k = bin(e);
            per[li[&g.edges[e].label]][k] += c;
            tot[k] += c;
        }
        let values = per
            .iter()
            .map(|row| row.iter().zip(&tot).map(|(&a, &t)| if t == 0 { f64::NAN } else { a as f64 / t as f64 }).collect())
            .collect();
        DensityField { origin: (x0, y0), cell, nx, ny, labels: labels.iter().map(|l| l.name().to_string()).collect(), values }
    });
    Ok(StatsReport { samples: n, edge_freq, height_mean, height_var, density })
}

/// Pearson chi-square of observed counts against a uniform law over `k`
/// outcomes; returns the statistic and its upper-tail p-value.
pub fn chi_square_uniform(observed: &[usize]) -> (f64, f64) {
    let k = observed.len();
    let n: usize = observed.iter().sum();
    let e = n as f64 / k as f64;
    let stat: f64 = observed.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}
