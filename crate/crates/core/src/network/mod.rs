//! Network data, Laplacian scaling, the certification pipeline and the
//! closed-loop oracle used to cross-check certificates.

mod certify;
mod laplacian;
mod oracle;
mod random;
mod simulate;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{AgcParams, DroopDelayParams, SwingParams};
use crate::tf::{lft_lower, DroopDelayLoop, FrequencyResponse, HighFrequency, RationalFunction, TransferMatrix2x2};

pub use certify::{certify_network, BusCertificate, CertificateReport, MultiplierSpec};
pub use laplacian::{
    build_laplacian, check_assumption1, gamma_bounds, kron_reduce, scaled_laplacian, Assumption1Report,
    GammaScaling, Violation,
};
pub use oracle::{closed_loop_oracle, closed_loop_oracle_with, rank_factor, StabilityKind, StabilityVerdict, ORACLE_TOL};
pub use random::{random_connected_graph, random_network, RandomNetworkOptions};
pub use simulate::{simulate, Disturbance, Pulse, SimulationOptions, Trajectory};

/// Transmission line `i - j` with susceptance `b >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineData {
    pub i: usize,
    pub j: usize,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v0: Vec<f64>,
    pub theta0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusLimits {
    pub vmax: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Swing,
    DroopDelay,
    Agc,
    Custom,
}

impl BusKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BusKind::Swing => "swing",
            BusKind::DroopDelay => "droop_delay",
            BusKind::Agc => "agc",
            BusKind::Custom => "custom",
        }
    }
}

/// Generalized plant and local controller of one bus.
#[derive(Clone, Debug, PartialEq)]
pub enum BusModel {
    Swing(SwingParams),
    DroopDelay(DroopDelayParams),
    Agc(AgcParams),
    Custom {
        plant: TransferMatrix2x2,
        controller: RationalFunction,
    },
}

impl BusModel {
    pub fn kind(&self) -> BusKind {
        match self {
            BusModel::Swing(_) => BusKind::Swing,
            BusModel::DroopDelay(_) => BusKind::DroopDelay,
            BusModel::Agc(_) => BusKind::Agc,
            BusModel::Custom { .. } => BusKind::Custom,
        }
    }

    /// Bus with the given closed loop and no controller.
    pub fn from_closed_loop(g: RationalFunction) -> Self {
        BusModel::Custom {
            plant: TransferMatrix2x2::uniform(g),
            controller: RationalFunction::zero(),
        }
    }

    /// Closed loop from network input to frequency.
    pub fn closed_loop(&self) -> Result<ClosedLoop> {
        Ok(match self {
            BusModel::Swing(p) => ClosedLoop::Rational(p.transfer()),
            BusModel::DroopDelay(p) => ClosedLoop::Delay(p.closed_loop()),
            BusModel::Agc(p) => ClosedLoop::Rational(p.closed_loop()?),
            BusModel::Custom { plant, controller } => ClosedLoop::Rational(lft_lower(plant, controller)?),
        })
    }

    pub fn has_delay(&self) -> bool {
        matches!(self, BusModel::DroopDelay(p) if p.tau > 0.0)
    }
}

/// Closed-loop bus response, rational or with a delayed droop term.
#[derive(Clone, Debug, PartialEq)]
pub enum ClosedLoop {
    Rational(RationalFunction),
    Delay(DroopDelayLoop),
}

impl FrequencyResponse for ClosedLoop {
    fn eval(&self, s: Complex64) -> Result<Complex64> {
        match self {
            ClosedLoop::Rational(g) => g.eval(s),
            ClosedLoop::Delay(g) => g.eval(s),
        }
    }
    fn dc_value(&self) -> Option<Complex64> {
        match self {
            ClosedLoop::Rational(g) => g.dc_value(),
            ClosedLoop::Delay(g) => g.dc_value(),
        }
    }
    fn high_frequency(&self) -> HighFrequency {
        match self {
            ClosedLoop::Rational(g) => g.high_frequency(),
            ClosedLoop::Delay(g) => g.high_frequency(),
        }
    }
    fn check_stable(&self) -> Result<()> {
        match self {
            ClosedLoop::Rational(g) => g.check_stable(),
            ClosedLoop::Delay(g) => g.check_stable(),
        }
    }
    fn as_rational(&self) -> Option<RationalFunction> {
        match self {
            ClosedLoop::Rational(g) => Some(g.clone()),
            ClosedLoop::Delay(g) => g.as_rational(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub buses: Vec<BusModel>,
    pub lines: Vec<LineData>,
    pub limits: BusLimits,
    pub operating_point: Option<OperatingPoint>,
}

impl NetworkSpec {
    /// Validates indices, susceptances and vector lengths; warns on a disconnected graph.
    pub fn new(
        buses: Vec<BusModel>,
        lines: Vec<LineData>,
        limits: BusLimits,
        operating_point: Option<OperatingPoint>,
    ) -> Result<Self> {
        let spec = Self {
            buses,
            lines,
            limits,
            operating_point,
        };
        spec.validate()?;
        if !spec.is_connected() {
            log::warn!("network graph is not connected");
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.buses.len();
        for (k, l) in self.lines.iter().enumerate() {
            if l.i >= n || l.j >= n {
                return Err(Error::Index(format!("line {k} references bus outside 0..{n}")));
            }
            if l.i == l.j {
                return Err(Error::Index(format!("line {k} is a self-loop at bus {}", l.i)));
            }
            if !(l.b >= 0.0 && l.b.is_finite()) {
                return Err(Error::InvalidParameter(format!("line {k} has susceptance {}", l.b)));
            }
        }
        if self.limits.vmax.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "vmax has {} entries for {n} buses",
                self.limits.vmax.len()
            )));
        }
        if let Some(k) = self.limits.vmax.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("vmax[{k}] must be positive")));
        }
        if let Some(op) = &self.operating_point {
            if op.v0.len() != n || op.theta0.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "operating point has {} voltages and {} angles for {n} buses",
                    op.v0.len(),
                    op.theta0.len()
                )));
            }
            if let Some(k) = op.v0.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidParameter(format!("v0[{k}] must be positive")));
            }
            if let Some(k) = op.theta0.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("theta0[{k}] must be finite")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    /// The supplied operating point, or flat angles at the voltage caps.
    pub fn operating_point_or_default(&self) -> OperatingPoint {
        self.operating_point.clone().unwrap_or_else(|| OperatingPoint {
            v0: self.limits.vmax.clone(),
            theta0: vec![0.0; self.n()],
        })
    }

    /// Connectivity over lines with positive susceptance.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for l in self.lines.iter().filter(|l| l.b > 0.0) {
            adj[l.i].push(l.j);
            adj[l.j].push(l.i);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}
