use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use super::{check_assumption1, BusLimits, BusModel, LineData, NetworkSpec, OperatingPoint};
use crate::error::{Error, Result};
use crate::models::{AgcParams, SwingParams, AGC_TABLE};

/// Parameter ranges for random test networks.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomNetworkOptions {
    /// Probability that a bus carries AGC rather than a bare swing model.
    pub agc_fraction: f64,
    pub susceptance: (f64, f64),
    pub swing_m: (f64, f64),
    pub swing_d: (f64, f64),
    /// Relative perturbation of the reference AGC rows.
    pub agc_jitter: f64,
    pub vmax: (f64, f64),
    /// Angles are drawn in `[-spread, spread]`.
    pub angle_spread: f64,
}

impl Default for RandomNetworkOptions {
    fn default() -> Self {
        Self {
            agc_fraction: 0.5,
            susceptance: (0.1, 2.0),
            swing_m: (0.05, 0.5),
            swing_d: (0.5, 2.0),
            agc_jitter: 0.2,
            vmax: (1.0, 1.1),
            angle_spread: 0.6,
        }
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Erdos-Renyi graph on `n` nodes with edge probability `min(1, 2 ln n / n)`, redrawn until connected.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize) -> Result<Vec<(usize, usize)>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("random graph needs at least 2 nodes (got {n})")));
    }
    let p = (2.0 * (n as f64).ln() / n as f64).min(1.0);
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        if connected(n, &edges) {
            return Ok(edges);
        }
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            p[r] = p[p[r]];
            r = p[r];
        }
        r
    }
    let mut comps = n;
    for &(i, j) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a] = b;
            comps -= 1;
        }
    }
    comps == 1
}

/// Connected network of swing and AGC buses with an operating point that satisfies the
/// angle and voltage assumption.
pub fn random_network<R: Rng>(rng: &mut R, n: usize, opts: &RandomNetworkOptions) -> Result<NetworkSpec> {
    let edges = random_connected_graph(rng, n)?;
    let lines: Vec<LineData> = edges
        .into_iter()
        .map(|(i, j)| LineData {
            i,
            j,
            b: uniform(rng, opts.susceptance),
        })
        .collect();
    let buses = (0..n)
        .map(|_| {
            if rng.gen_bool(opts.agc_fraction.clamp(0.0, 1.0)) {
                let base = AGC_TABLE[rng.gen_range(0..AGC_TABLE.len())];
                let mut jit = |x: f64| x * (1.0 + opts.agc_jitter * rng.gen_range(-1.0..=1.0));
                let p = AgcParams {
                    m: jit(base.m),
                    d: jit(base.d),
                    tg: jit(base.tg),
                    tt: jit(base.tt),
                    r: jit(base.r),
                    beta: jit(base.beta),
                    k: jit(base.k),
                };
                p.validate().map(|_| BusModel::Agc(p))
            } else {
                let m = uniform(rng, opts.swing_m);
                let d = uniform(rng, opts.swing_d);
                SwingParams::new(m, d).map(BusModel::Swing)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let vmax: Vec<f64> = (0..n).map(|_| uniform(rng, opts.vmax)).collect();
    let limits = BusLimits { vmax: vmax.clone() };
    let spread = opts.angle_spread.clamp(0.0, FRAC_PI_2 / 2.0 - 1e-3);
    let op = loop {
        let op = OperatingPoint {
            v0: vmax.iter().map(|&v| v * rng.gen_range(0.9..=1.0)).collect(),
            theta0: (0..n).map(|_| rng.gen_range(-spread..=spread)).collect(),
        };
        if check_assumption1(&lines, &op, &limits).ok {
            break op;
        }
    };
    NetworkSpec::new(buses, lines, limits, Some(op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_networks_are_connected_and_reproducible() {
        for n in [2, 5, 20] {
            let a = random_network(&mut ChaCha8Rng::seed_from_u64(7), n, &RandomNetworkOptions::default()).unwrap();
            let b = random_network(&mut ChaCha8Rng::seed_from_u64(7), n, &RandomNetworkOptions::default()).unwrap();
            assert_eq!(a, b);
            assert!(a.is_connected());
            assert_eq!(a.n(), n);
        }
    }
}
