use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{build_laplacian, BusModel, NetworkSpec};
use crate::error::{Error, Result};
use crate::tf::{realize_state_space, FrequencyResponse, StateSpaceRealization};

/// Power injection `magnitude` at `bus` on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub bus: usize,
    pub magnitude: f64,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub pulses: Vec<Pulse>,
}

impl Disturbance {
    /// Persistent step from `start`.
    pub fn step(bus: usize, magnitude: f64, start: f64) -> Self {
        Self::pulse(bus, magnitude, start, f64::INFINITY)
    }

    pub fn pulse(bus: usize, magnitude: f64, start: f64, end: f64) -> Self {
        Self {
            pulses: vec![Pulse {
                bus,
                magnitude,
                start,
                end,
            }],
        }
    }

    fn apply(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for p in &self.pulses {
            if t >= p.start && t < p.end {
                out[p.bus] += p.magnitude;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every this many steps.
    pub sample_every: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 20.0,
            sample_every: 10,
        }
    }
}

/// Sampled deviations from the operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `theta_dot[k][i]`, frequency deviation at bus `i`.
    pub theta_dot: Vec<Vec<f64>>,
    /// `p_n[k][i]`, linearized network injection `L delta`.
    pub p_n: Vec<Vec<f64>>,
    /// `line_flows[k][l]`, flow on line `l` from `i` to `j`.
    pub line_flows: Vec<Vec<f64>>,
    pub lines: Vec<(usize, usize)>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn to_csv_states(&self) -> String {
        let mut s = String::from("t,bus,theta_dot,p_n\n");
        for (k, t) in self.times.iter().enumerate() {
            for (i, (w, p)) in self.theta_dot[k].iter().zip(&self.p_n[k]).enumerate() {
                let _ = writeln!(s, "{t},{i},{w},{p}");
            }
        }
        s
    }

    pub fn to_csv_flows(&self) -> String {
        let mut s = String::from("t,i,j,flow\n");
        for (k, t) in self.times.iter().enumerate() {
            for (&(i, j), f) in self.lines.iter().zip(&self.line_flows[k]) {
                let _ = writeln!(s, "{t},{i},{j},{f}");
            }
        }
        s
    }

    /// Largest `|theta_dot|` over the samples at or after `t0`.
    pub fn max_abs_frequency_after(&self, t0: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.theta_dot)
            .filter(|(t, _)| **t >= t0)
            .flat_map(|(_, row)| row.iter().map(|x| x.abs()))
            .fold(0.0, f64::max)
    }
}

enum BusDyn {
    Rational(StateSpaceRealization),
    /// `m w' = -d w - w(t - tau)/r + u`
    Delay { m: f64, d: f64, r: f64, tau: f64, slot: usize },
}

impl BusDyn {
    fn order(&self) -> usize {
        match self {
            BusDyn::Rational(r) => r.order(),
            BusDyn::Delay { .. } => 1,
        }
    }
}

/// History of the delayed bus frequencies, zero before `t = 0`.
struct History {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl History {
    fn at(&self, slot: usize, t: f64) -> f64 {
        if t <= 0.0 || self.times.is_empty() {
            return 0.0;
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.values[last][slot];
        }
        let k = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1][slot] * (1.0 - w) + self.values[k][slot] * w
    }
}

struct System {
    buses: Vec<BusDyn>,
    offsets: Vec<usize>,
    nx: usize,
    l: DMatrix<f64>,
}

impl System {
    fn outputs(&self, x: &DVector<f64>, u: &[f64]) -> Vec<f64> {
        self.buses
            .iter()
            .zip(&self.offsets)
            .enumerate()
            .map(|(i, (b, &o))| match b {
                BusDyn::Rational(r) => {
                    let k = r.order();
                    let cx = if k == 0 { 0.0 } else { (r.c.view((0, 0), (1, k)) * x.rows(o, k))[(0, 0)] };
                    cx + r.d[(0, 0)] * u[i]
                }
                BusDyn::Delay { .. } => x[o],
            })
            .collect()
    }

    fn injections(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.l * x.rows(self.nx, self.l.nrows())
    }

    fn deriv(&self, t: f64, x: &DVector<f64>, dist: &Disturbance, hist: &History) -> DVector<f64> {
        let n = self.buses.len();
        let pn = self.injections(x);
        let mut u = vec![0.0; n];
        dist.apply(t, &mut u);
        for i in 0..n {
            u[i] -= pn[i];
        }
        let y = self.outputs(x, &u);
        let mut dx = DVector::zeros(x.len());
        for (i, (b, &o)) in self.buses.iter().zip(&self.offsets).enumerate() {
            match b {
                BusDyn::Rational(r) => {
                    let k = r.order();
                    if k > 0 {
                        let v = &r.a * x.rows(o, k) + r.b.column(0) * u[i];
                        dx.rows_mut(o, k).copy_from(&v);
                    }
                }
                BusDyn::Delay { m, d, r, tau, slot } => {
                    let delayed = if *tau > 0.0 { hist.at(*slot, t - tau) } else { x[o] };
                    dx[o] = (-d * x[o] - delayed / r + u[i]) / m;
                }
            }
        }
        for i in 0..n {
            dx[self.nx + i] = y[i];
        }
        dx
    }
}

/// Fixed-step RK4 of the linearized network around its operating point, starting at rest.
///
/// Delayed droop buses read their past frequency from a linearly interpolated history.
pub fn simulate(spec: &NetworkSpec, dist: &Disturbance, opts: &SimulationOptions) -> Result<Trajectory> {
    spec.validate()?;
    let n = spec.n();
    if !(opts.dt > 0.0 && opts.t_end > 0.0 && opts.dt.is_finite() && opts.t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt = {} and t_end = {} must be positive", opts.dt, opts.t_end)));
    }
    if let Some(p) = dist.pulses.iter().find(|p| p.bus >= n) {
        return Err(Error::Index(format!("disturbance at bus {} outside 0..{n}", p.bus)));
    }
    let mut buses = Vec::with_capacity(n);
    let mut slots = 0;
    let mut fastest: f64 = 0.0;
    for (i, b) in spec.buses.iter().enumerate() {
        let dynamics = match b {
            BusModel::DroopDelay(p) if p.tau > 0.0 => {
                if p.m <= 0.0 {
                    return Err(Error::InvalidParameter(format!("bus {i}: delayed droop needs m > 0 to simulate")));
                }
                fastest = fastest.max((p.d + 1.0 / p.r) / p.m).max(1.0 / p.tau);
                slots += 1;
                BusDyn::Delay {
                    m: p.m,
                    d: p.d,
                    r: p.r,
                    tau: p.tau,
                    slot: slots - 1,
                }
            }
            _ => {
                let g = b.closed_loop().map_err(|e| e.at_bus(i))?;
                let g = g.as_rational().ok_or(Error::DelayModelPresent(i))?;
                let r = realize_state_space(&g).map_err(|e| e.at_bus(i))?.reduce_minimal(1e-10);
                if let Ok(poles) = r.poles() {
                    fastest = poles.iter().map(|z| z.norm()).fold(fastest, f64::max);
                }
                BusDyn::Rational(r)
            }
        };
        buses.push(dynamics);
    }
    if opts.dt * fastest > 0.1 {
        log::warn!(
            "step dt = {} is large against the fastest bus time constant {:.3e}",
            opts.dt,
            1.0 / fastest
        );
    }
    let mut offsets = Vec::with_capacity(n);
    let mut nx = 0;
    for b in &buses {
        offsets.push(nx);
        nx += b.order();
    }
    let op = spec.operating_point_or_default();
    let l = build_laplacian(n, &spec.lines, &op)?;
    let weights: Vec<f64> = spec
        .lines
        .iter()
        .map(|ln| op.v0[ln.i] * op.v0[ln.j] * ln.b * (op.theta0[ln.i] - op.theta0[ln.j]).cos())
        .collect();
    let sys = System { buses, offsets, nx, l };

    let delay_slots: Vec<(usize, usize)> = sys
        .buses
        .iter()
        .zip(&sys.offsets)
        .filter_map(|(b, &o)| match b {
            BusDyn::Delay { slot, .. } => Some((*slot, o)),
            _ => None,
        })
        .collect();
    let mut hist = History {
        times: Vec::new(),
        values: Vec::new(),
    };
    let record_hist = |hist: &mut History, t: f64, x: &DVector<f64>| {
        if !delay_slots.is_empty() {
            let mut v = vec![0.0; delay_slots.len()];
            for &(s, o) in &delay_slots {
                v[s] = x[o];
            }
            hist.times.push(t);
            hist.values.push(v);
        }
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        theta_dot: Vec::new(),
        p_n: Vec::new(),
        line_flows: Vec::new(),
        lines: spec.lines.iter().map(|l| (l.i, l.j)).collect(),
        diverged: false,
    };
    let mut u = vec![0.0; n];
    let mut sample = |traj: &mut Trajectory, t: f64, x: &DVector<f64>| {
        let pn = sys.injections(x);
        dist.apply(t, &mut u);
        for i in 0..n {
            u[i] -= pn[i];
        }
        traj.times.push(t);
        traj.theta_dot.push(sys.outputs(x, &u));
        traj.p_n.push(pn.iter().copied().collect());
        let delta = x.rows(sys.nx, n);
        traj.line_flows.push(
            spec.lines
                .iter()
                .zip(&weights)
                .map(|(ln, w)| w * (delta[ln.i] - delta[ln.j]))
                .collect(),
        );
    };

    let mut x = DVector::zeros(nx + n);
    let steps = (opts.t_end / opts.dt).round() as usize;
    let every = opts.sample_every.max(1);
    let h = opts.dt;
    record_hist(&mut hist, 0.0, &x);
    sample(&mut traj, 0.0, &x);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = sys.deriv(t, &x, dist, &hist);
        let k2 = sys.deriv(t + 0.5 * h, &(&x + &k1 * (0.5 * h)), dist, &hist);
        let k3 = sys.deriv(t + 0.5 * h, &(&x + &k2 * (0.5 * h)), dist, &hist);
        let k4 = sys.deriv(t + h, &(&x + &k3 * h), dist, &hist);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let t1 = (k + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            log::warn!("simulation diverged at t = {t1}");
            traj.diverged = true;
            break;
        }
        record_hist(&mut hist, t1, &x);
        if (k + 1) % every == 0 {
            sample(&mut traj, t1, &x);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{DroopDelayParams, SwingParams};
    use crate::network::{BusLimits, LineData};

    fn pair(a: BusModel, b: BusModel) -> NetworkSpec {
        NetworkSpec::new(
            vec![a, b],
            vec![LineData { i: 0, j: 1, b: 1.0 }],
            BusLimits { vmax: vec![1.0; 2] },
            None,
        )
        .unwrap()
    }

    #[test]
    fn step_settles_at_synchronous_frequency() {
        // two identical swing buses: steady frequency is P / (d1 + d2)
        let sw = BusModel::Swing(SwingParams::new(1.0, 1.0).unwrap());
        let tr = simulate(
            &pair(sw.clone(), sw),
            &Disturbance::step(0, 1.0, 0.0),
            &SimulationOptions {
                dt: 1e-2,
                t_end: 30.0,
                sample_every: 10,
            },
        )
        .unwrap();
        let last = tr.theta_dot.last().unwrap();
        assert!((last[0] - 0.5).abs() < 1e-4 && (last[1] - 0.5).abs() < 1e-4, "{last:?}");
        // flow from bus 0 to bus 1 carries half of the injection
        assert!((tr.line_flows.last().unwrap()[0] - 0.5).abs() < 1e-3);
        assert!(tr.to_csv_states().lines().count() == 1 + 2 * tr.times.len());
    }

    #[test]
    fn delayed_droop_pulse_decays() {
        let sw = BusModel::Swing(SwingParams::new(1.0, 1.0).unwrap());
        let dd = BusModel::DroopDelay(DroopDelayParams::new(1.0, 0.5, 1.0, 0.2).unwrap());
        let tr = simulate(
            &pair(sw, dd),
            &Disturbance::pulse(1, 1.0, 0.0, 1.0),
            &SimulationOptions {
                dt: 1e-2,
                t_end: 60.0,
                sample_every: 10,
            },
        )
        .unwrap();
        assert!(!tr.diverged);
        assert!(tr.max_abs_frequency_after(50.0) < 1e-3);
    }
}
