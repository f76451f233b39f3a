use crate::error::{Error, Result};

/// The sparsity pair controlling edge weights: `f` is the weight given to a
/// pair at the block's mean squared distance, `t` is the weight cutoff below
/// which edges are dropped. Both lie strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    f: f64,
    t: f64,
}

impl GraphParams {
    /// Offline-trained defaults.
    pub const DEFAULT_F: f64 = 0.3;
    pub const DEFAULT_T: f64 = 0.6;

    pub fn new(f: f64, t: f64) -> Result<Self> {
        for (name, v) in [("f", f), ("t", t)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!("{name}={v} must lie in (0, 1)")));
            }
        }
        Ok(Self { f, t })
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// The parameters as the decoder sees them after a trip through the
    /// binary32 header fields.
    pub fn wire_rounded(&self) -> Self {
        Self {
            f: self.f as f32 as f64,
            t: self.t as f32 as f64,
        }
    }
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            f: Self::DEFAULT_F,
            t: Self::DEFAULT_T,
        }
    }
}

/// Gaussian kernel width such that a pair at squared distance `mean_sq_dist`
/// gets weight exactly `f`.
pub fn sigma_sq_from_f(f: f64, mean_sq_dist: f64) -> Result<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParameter(format!("f={f} must lie in (0, 1)")));
    }
    if !mean_sq_dist.is_finite() || mean_sq_dist <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean squared distance {mean_sq_dist} must be positive"
        )));
    }
    Ok(mean_sq_dist / -f.ln())
}

/// Fully connected candidate graph over one block, pruned by the weight
/// threshold. `adjacency` is row-major `size x size`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGraph {
    pub size: usize,
    pub mean_sq_dist: f64,
    /// `None` for a degenerate block whose points all coincide.
    pub sigma_sq: Option<f64>,
    pub adjacency: Vec<f64>,
    pub degrees: Vec<f64>,
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

pub fn build_adjacency(positions: &[[f64; 3]], params: &GraphParams) -> Result<BlockGraph> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::GraphTooSmall(n));
    }
    let mut w = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(&positions[i], &positions[j]);
            w[i * n + j] = d;
            total += d;
        }
    }
    let mean_sq_dist = total / (n * (n - 1) / 2) as f64;

    let sigma_sq = if mean_sq_dist > 0.0 {
        Some(sigma_sq_from_f(params.f(), mean_sq_dist)?)
    } else {
        None
    };

    for i in 0..n {
        for j in i + 1..n {
            let weight = match sigma_sq {
                Some(s2) => {
                    let v = (-w[i * n + j] / s2).exp();
                    if v >= params.t() {
                        v
                    } else {
                        0.0
                    }
                }
                None => 1.0,
            };
            w[i * n + j] = weight;
            w[j * n + i] = weight;
        }
    }
    let degrees = (0..n).map(|i| w[i * n..(i + 1) * n].iter().sum()).collect();

    Ok(BlockGraph {
        size: n,
        mean_sq_dist,
        sigma_sq,
        adjacency: w,
        degrees,
    })
}

impl BlockGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i * self.size + j]
    }

    /// Squared-distance cutoff equivalent to the weight threshold `t`.
    pub fn tau(&self, params: &GraphParams) -> Option<f64> {
        self.sigma_sq.map(|s2| s2 * -params.t().ln())
    }

    /// Combinatorial Laplacian `S - W`, row-major.
    pub fn laplacian(&self) -> Vec<f64> {
        let n = self.size;
        let mut l: Vec<f64> = self.adjacency.iter().map(|w| -w).collect();
        for i in 0..n {
            l[i * n + i] = self.degrees[i];
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_must_be_open_unit() {
        assert!(GraphParams::new(0.3, 0.6).is_ok());
        for (f, t) in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0), (f64::NAN, 0.5)] {
            assert!(GraphParams::new(f, t).is_err());
        }
    }

    #[test]
    fn sigma_sq_examples() {
        let e_inv = (-1.0f64).exp();
        assert!((sigma_sq_from_f(e_inv, 2.0).unwrap() - 2.0).abs() < 1e-12);
        // 1 / ln(1/0.3)
        assert!((sigma_sq_from_f(0.3, 1.0).unwrap() - 0.830_583_545_082_537_3).abs() < 1e-12);
        assert!((sigma_sq_from_f(0.3, 5.0).unwrap() - 4.152_917_725_412_687).abs() < 1e-12);
        assert!(sigma_sq_from_f(0.3, 0.0).is_err());
    }

    #[test]
    fn pair_at_mean_distance_gets_weight_f() {
        let params = GraphParams::new(0.3, 0.6).unwrap();
        let g = build_adjacency(&[[0.0; 3], [3.0, 4.0, 0.0]], &params).unwrap();
        assert_eq!(g.mean_sq_dist, 25.0);
        assert_eq!(g.weight(0, 1), 0.0);
        assert_eq!(g.degrees, vec![0.0, 0.0]);

        let keep = GraphParams::new(0.3, 0.25).unwrap();
        let g = build_adjacency(&[[0.0; 3], [3.0, 4.0, 0.0]], &keep).unwrap();
        assert!((g.weight(0, 1) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_get_unit_weight() {
        let params = GraphParams::new(0.3, 0.99).unwrap();
        let g = build_adjacency(&[[1.0; 3], [1.0; 3]], &params).unwrap();
        assert!(g.sigma_sq.is_none());
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.degrees, vec![1.0, 1.0]);
    }

    #[test]
    fn equilateral_triangle_weights_equal_f() {
        let s = 3f64.sqrt() / 2.0;
        let tri = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, s, 0.0]];
        let dense = build_adjacency(&tri, &GraphParams::new(0.4, 0.3).unwrap()).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((dense.weight(i, j) - 0.4).abs() < 1e-12);
        }
        let pruned = build_adjacency(&tri, &GraphParams::new(0.3, 0.4).unwrap()).unwrap();
        assert!(pruned.adjacency.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn graph_invariants() {
        let pts: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let i = i as f64;
                [(i * 1.7) % 11.0, (i * 3.1) % 7.0, (i * 0.37) % 5.0]
            })
            .collect();
        let params = GraphParams::default();
        let g = build_adjacency(&pts, &params).unwrap();
        let n = g.size;
        for i in 0..n {
            assert_eq!(g.weight(i, i), 0.0);
            let row: f64 = (0..n).map(|j| g.weight(i, j)).sum();
            assert!((row - g.degrees[i]).abs() < 1e-12);
            for j in 0..n {
                let w = g.weight(i, j);
                assert_eq!(w, g.weight(j, i));
                assert!((0.0..=1.0).contains(&w));
                assert!(w == 0.0 || w >= params.t());
                if i != j {
                    let kept = sq_dist(&pts[i], &pts[j]) <= g.tau(&params).unwrap() * (1.0 + 1e-12);
                    assert_eq!(w > 0.0, kept);
                }
            }
        }
        let l = g.laplacian();
        for i in 0..n {
            assert!(l[i * n..(i + 1) * n].iter().sum::<f64>().abs() < 1e-12);
        }
        assert!(matches!(
            build_adjacency(&pts[..1], &params),
            Err(Error::GraphTooSmall(1))
        ));
    }
}
