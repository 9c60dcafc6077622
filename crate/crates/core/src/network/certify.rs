use rayon::prelude::*;
use serde::Serialize;

use super::{check_assumption1, gamma_bounds, ClosedLoop, NetworkSpec};
use crate::cert::{auto_multiplier, check_p, gamma_star, AutoSearch, CertOptions, Multiplier};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum MultiplierSpec {
    Fixed(Multiplier),
    Auto(AutoSearch),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusCertificate {
    pub gamma_required: f64,
    /// `+inf` when the search hit the cap.
    pub gamma_star: f64,
    /// `gamma_star / gamma_required`; the cap stands in for a capped value.
    pub margin: f64,
    pub capped: bool,
    /// Why the bus could not be assessed (unstable or degenerate closed loop).
    pub reason: Option<String>,
}

impl BusCertificate {
    pub fn passes(&self) -> bool {
        self.reason.is_none() && self.gamma_star >= self.gamma_required
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub certified: bool,
    pub multiplier: Multiplier,
    pub per_bus: Vec<BusCertificate>,
    pub failing_buses: Vec<usize>,
}

/// Decentralized certificate: every bus must keep `gamma_i g_i` in the class for one shared `h`.
///
/// The operating point, when present, must satisfy the angle and voltage assumptions.
/// Buses whose closed loop is unstable or has zero DC gain are reported as failing.
pub fn certify_network(spec: &NetworkSpec, h: &MultiplierSpec, opts: &CertOptions) -> Result<CertificateReport> {
    spec.validate()?;
    let n = spec.n();
    if let Some(op) = &spec.operating_point {
        let rep = check_assumption1(&spec.lines, op, &spec.limits);
        if !rep.ok {
            return Err(Error::InvalidParameter(format!(
                "operating point violates the angle/voltage assumption: {:?}",
                rep.violations
            )));
        }
    }
    let scaling = gamma_bounds(n, &spec.lines, &spec.limits)?;
    let loops: Vec<Result<ClosedLoop>> = spec
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| b.closed_loop().map_err(|e| e.at_bus(i)))
        .collect();
    let usable: Vec<Option<String>> = loops
        .iter()
        .map(|g| match g {
            Ok(g) => check_p(g, opts.tol_dc).err().map(|e| e.to_string()),
            Err(e) => Some(e.to_string()),
        })
        .collect();

    let multiplier = match h {
        MultiplierSpec::Fixed(m) => m.clone(),
        MultiplierSpec::Auto(search) => {
            let buses: Vec<(&ClosedLoop, f64)> = loops
                .iter()
                .zip(&usable)
                .zip(&scaling.gamma)
                .filter_map(|((g, u), &gr)| match (g, u) {
                    (Ok(g), None) => Some((g, gr)),
                    _ => None,
                })
                .collect();
            if buses.is_empty() {
                Multiplier::first_order(1.0)?
            } else {
                let res = auto_multiplier(&buses, search, opts)?;
                log::info!("auto multiplier {:?} with estimated score {:.4}", res.multiplier, res.score);
                res.multiplier
            }
        }
    };

    let per_bus = (0..n)
        .into_par_iter()
        .map(|i| {
            let gr = scaling.gamma[i];
            let failed = |reason: String| BusCertificate {
                gamma_required: gr,
                gamma_star: 0.0,
                margin: 0.0,
                capped: false,
                reason: Some(reason),
            };
            if let Some(reason) = &usable[i] {
                return Ok(failed(reason.clone()));
            }
            let g = loops[i].as_ref().expect("usable loop");
            let gs = match gamma_star(g, &multiplier, opts) {
                Ok(gs) => gs,
                Err(e @ (Error::UnstableP(_) | Error::ZeroDc(_) | Error::UnstableLocalLoop(_))) => {
                    return Ok(failed(e.to_string()))
                }
                Err(e) => return Err(e.at_bus(i)),
            };
            Ok(BusCertificate {
                gamma_required: gr,
                gamma_star: gs.value,
                margin: gs.effective(opts.gamma_cap) / gr,
                capped: gs.capped,
                reason: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let failing_buses: Vec<usize> = per_bus
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.passes())
        .map(|(i, _)| i)
        .collect();
    Ok(CertificateReport {
        certified: failing_buses.is_empty(),
        multiplier,
        per_bus,
        failing_buses,
    })
}
