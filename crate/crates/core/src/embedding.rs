//! Map from embeddings to next-token distributions.
//!
//! Two operations live here and they are deliberately different:
//!
//! * [`convex_combine`] mixes two anchors with one weight applied to both the
//!   embedding and the distribution, so it is convexity preserving by
//!   construction.
//! * [`EmbeddingMap::interpolate`] is the practical approximator for unseen
//!   embeddings: inverse-distance weighting over the `k` nearest anchors.
//!   It always returns a point on the simplex but is not linear in the query.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DIST_TOL: f64 = 1e-10;
/// Distances below this count as an exact anchor hit.
const EXACT_HIT: f64 = 1e-12;
/// Regulariser in the inverse-distance weights.
const IDW_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    L2,
    Cosine,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 && nb == 0.0 {
                    0.0
                } else if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    (1.0 - dot / (na * nb)).max(0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingAnchor {
    #[serde(rename = "e")]
    pub embedding: Vec<f64>,
    #[serde(rename = "d")]
    pub distribution: Vec<f64>,
}

impl EmbeddingAnchor {
    pub fn new(embedding: Vec<f64>, distribution: Vec<f64>) -> Result<Self> {
        check_distribution(&distribution)?;
        if embedding.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("embedding coordinates must be finite"));
        }
        Ok(Self {
            embedding,
            distribution,
        })
    }
}

fn check_distribution(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::InvalidProbability("empty distribution".into()));
    }
    if d.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidProbability(format!(
            "negative or non-finite entry in {d:?}"
        )));
    }
    let s: f64 = d.iter().sum();
    if (s - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidProbability(format!(
            "distribution sums to {s}"
        )));
    }
    Ok(())
}

/// `w * a + (1 - w) * b` on both embedding and distribution.
pub fn convex_combine(a: &EmbeddingAnchor, b: &EmbeddingAnchor, w: f64) -> Result<EmbeddingAnchor> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::param(format!("weight {w} outside [0, 1]")));
    }
    if a.embedding.len() != b.embedding.len() {
        return Err(Error::LengthMismatch {
            expected: a.embedding.len(),
            got: b.embedding.len(),
        });
    }
    if a.distribution.len() != b.distribution.len() {
        return Err(Error::LengthMismatch {
            expected: a.distribution.len(),
            got: b.distribution.len(),
        });
    }
    let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(y)
            .map(|(u, v)| w * u + (1.0 - w) * v)
            .collect()
    };
    Ok(EmbeddingAnchor {
        embedding: mix(&a.embedding, &b.embedding),
        distribution: mix(&a.distribution, &b.distribution),
    })
}

/// A finite set of anchors plus the metric used to find neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapDoc", into = "MapDoc")]
pub struct EmbeddingMap {
    r: usize,
    m: usize,
    metric: Metric,
    anchors: Vec<EmbeddingAnchor>,
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    r: usize,
    m: usize,
    #[serde(default)]
    metric: Metric,
    anchors: Vec<EmbeddingAnchor>,
}

impl TryFrom<MapDoc> for EmbeddingMap {
    type Error = Error;

    fn try_from(doc: MapDoc) -> Result<Self> {
        let map = EmbeddingMap::new(doc.anchors, doc.metric)?;
        if map.r != doc.r || map.m != doc.m {
            return Err(Error::Document(format!(
                "declared r = {}, m = {} but anchors have r = {}, m = {}",
                doc.r, doc.m, map.r, map.m
            )));
        }
        Ok(map)
    }
}

impl From<EmbeddingMap> for MapDoc {
    fn from(map: EmbeddingMap) -> Self {
        MapDoc {
            r: map.r,
            m: map.m,
            metric: map.metric,
            anchors: map.anchors,
        }
    }
}

impl EmbeddingMap {
    pub fn new(anchors: Vec<EmbeddingAnchor>, metric: Metric) -> Result<Self> {
        let first = anchors
            .first()
            .ok_or_else(|| Error::Empty("embedding map has no anchors".into()))?;
        let (r, m) = (first.embedding.len(), first.distribution.len());
        for a in &anchors {
            if a.embedding.len() != r {
                return Err(Error::LengthMismatch {
                    expected: r,
                    got: a.embedding.len(),
                });
            }
            if a.distribution.len() != m {
                return Err(Error::LengthMismatch {
                    expected: m,
                    got: a.distribution.len(),
                });
            }
            check_distribution(&a.distribution)?;
        }
        Ok(Self {
            r,
            m,
            metric,
            anchors,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Document(format!("embedding map: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn anchors(&self) -> &[EmbeddingAnchor] {
        &self.anchors
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn embedding_dim(&self) -> usize {
        self.r
    }

    pub fn vocab_size(&self) -> usize {
        self.m
    }

    /// Inverse-distance weights over the `k` nearest anchors, as
    /// `(anchor index, weight)` sorted by distance then index.
    pub fn neighbour_weights(&self, query: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
        if query.len() != self.r {
            return Err(Error::LengthMismatch {
                expected: self.r,
                got: query.len(),
            });
        }
        if k == 0 || k > self.anchors.len() {
            return Err(Error::param(format!(
                "k = {k} must be in 1..={}",
                self.anchors.len()
            )));
        }
        let mut dists: Vec<(usize, f64)> = self
            .anchors
            .iter()
            .enumerate()
            .map(|(i, a)| (i, self.metric.distance(query, &a.embedding)))
            .collect();
        dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        dists.truncate(k);
        if dists[0].1 < EXACT_HIT {
            return Ok(vec![(dists[0].0, 1.0)]);
        }
        let inv: Vec<f64> = dists.iter().map(|(_, d)| 1.0 / (d + IDW_EPS)).collect();
        let s: f64 = inv.iter().sum();
        Ok(dists
            .iter()
            .zip(inv)
            .map(|((i, _), w)| (*i, w / s))
            .collect())
    }

    /// Distribution at an unseen embedding from its `k` nearest anchors.
    /// An exact anchor hit returns that anchor's distribution unchanged.
    pub fn interpolate(&self, query: &[f64], k: usize) -> Result<Vec<f64>> {
        let weights = self.neighbour_weights(query, k)?;
        if let [(i, _)] = weights.as_slice() {
            return Ok(self.anchors[*i].distribution.clone());
        }
        let mut out = vec![0.0; self.m];
        for (i, w) in weights {
            for (o, d) in out.iter_mut().zip(&self.anchors[i].distribution) {
                *o += w * d;
            }
        }
        Ok(out)
    }

    /// Largest observed `|interpolate(q') - interpolate(q)|_1 / delta` over
    /// `trials` random perturbations `q' = q + delta * v`, `|v| = 1`.
    pub fn continuity_probe(
        &self,
        query: &[f64],
        k: usize,
        delta: f64,
        trials: usize,
        seed: u64,
    ) -> Result<f64> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::param(format!("delta must be positive, got {delta}")));
        }
        let base = self.interpolate(query, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let mut dir: Vec<f64> = (0..self.r)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for v in &mut dir {
                *v *= delta / norm;
            }
            let moved: Vec<f64> = query.iter().zip(&dir).map(|(q, d)| q + d).collect();
            let out = self.interpolate(&moved, k)?;
            let l1: f64 = out.iter().zip(&base).map(|(a, b)| (a - b).abs()).sum();
            worst = worst.max(l1 / delta);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anchor(e: &[f64], d: &[f64]) -> EmbeddingAnchor {
        EmbeddingAnchor::new(e.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn combine_identity_and_midpoint() {
        let a = anchor(&[0.0, 1.0], &[1.0, 0.0]);
        let b = anchor(&[2.0, 3.0], &[0.0, 1.0]);
        assert_eq!(convex_combine(&a, &b, 1.0).unwrap(), a);
        let mid = convex_combine(&a, &b, 0.5).unwrap();
        assert_eq!(mid.distribution, vec![0.5, 0.5]);
        assert_eq!(mid.embedding, vec![1.0, 2.0]);
    }

    #[test]
    fn nested_combine_weights() {
        let a = anchor(&[1.0], &[1.0, 0.0, 0.0]);
        let b = anchor(&[2.0], &[0.0, 1.0, 0.0]);
        let c = anchor(&[3.0], &[0.0, 0.0, 1.0]);
        let ab = convex_combine(&a, &b, 0.5).unwrap();
        let abc = convex_combine(&ab, &c, 1.0 / 3.0).unwrap();
        let expected = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
        for (x, e) in abc.distribution.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn combine_errors() {
        let a = anchor(&[1.0], &[1.0, 0.0]);
        let b = anchor(&[1.0, 2.0], &[1.0, 0.0]);
        assert!(convex_combine(&a, &b, 0.5).is_err());
        assert!(convex_combine(&a, &a, 1.5).is_err());
    }

    fn two_anchor_map(metric: Metric) -> EmbeddingMap {
        EmbeddingMap::new(
            vec![
                anchor(&[0.0, 0.0], &[0.9, 0.1, 0.0]),
                anchor(&[1.0, 0.0], &[0.1, 0.2, 0.7]),
            ],
            metric,
        )
        .unwrap()
    }

    #[test]
    fn exact_hit_is_idempotent() {
        let map = two_anchor_map(Metric::L2);
        for k in 1..=2 {
            assert_eq!(
                map.interpolate(&[1.0, 0.0], k).unwrap(),
                vec![0.1, 0.2, 0.7]
            );
        }
    }

    #[test]
    fn midpoint_averages() {
        let map = two_anchor_map(Metric::L2);
        let out = map.interpolate(&[0.5, 0.0], 2).unwrap();
        for (o, e) in out.iter().zip([0.5, 0.15, 0.35]) {
            assert!((o - e).abs() < 1e-12);
        }
    }

    #[test]
    fn k1_is_nearest() {
        let map = two_anchor_map(Metric::L2);
        assert_eq!(
            map.interpolate(&[0.2, 0.3], 1).unwrap(),
            vec![0.9, 0.1, 0.0]
        );
    }

    #[test]
    fn bad_k_and_dims() {
        let map = two_anchor_map(Metric::L2);
        assert!(map.interpolate(&[0.0, 0.0], 0).is_err());
        assert!(map.interpolate(&[0.0, 0.0], 3).is_err());
        assert!(map.interpolate(&[0.0], 1).is_err());
        assert!(matches!(
            EmbeddingMap::new(vec![], Metric::L2),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn single_anchor_probe_is_zero() {
        let map = EmbeddingMap::new(vec![anchor(&[0.0, 0.0], &[0.5, 0.5])], Metric::L2).unwrap();
        assert_eq!(
            map.continuity_probe(&[0.3, 0.1], 1, 1e-3, 50, 1).unwrap(),
            0.0
        );
    }

    #[test]
    fn probe_respects_simplex_diameter() {
        let map = two_anchor_map(Metric::L2);
        for delta in [1.0, 0.1, 0.01] {
            let m = map.continuity_probe(&[0.5, 0.0], 1, delta, 100, 4).unwrap();
            assert!(m <= 2.0 / delta + 1e-12);
        }
        assert!(map.continuity_probe(&[0.5, 0.0], 1, 0.0, 10, 4).is_err());
    }

    #[test]
    fn cosine_metric() {
        assert!(Metric::Cosine.distance(&[1.0, 0.0], &[2.0, 0.0]).abs() < 1e-15);
        assert!((Metric::Cosine.distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(Metric::Cosine.distance(&[0.0, 0.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn json_document() {
        let doc = r#"{"r":2,"m":2,"metric":"cosine","anchors":[{"e":[1,0],"d":[1,0]},{"e":[0,1],"d":[0.25,0.75]}]}"#;
        let map = EmbeddingMap::from_json(doc).unwrap();
        assert_eq!(map.metric(), Metric::Cosine);
        assert_eq!(EmbeddingMap::from_json(&map.to_json()).unwrap(), map);
        let bad_r = r#"{"r":3,"m":2,"anchors":[{"e":[1,0],"d":[1,0]}]}"#;
        assert!(EmbeddingMap::from_json(bad_r).is_err());
        let bad_d = r#"{"r":2,"m":2,"anchors":[{"e":[1,0],"d":[0.5,0.6]}]}"#;
        assert!(EmbeddingMap::from_json(bad_d).is_err());
    }
}
