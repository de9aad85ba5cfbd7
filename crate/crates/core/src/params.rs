//! Parameter vector of the machine, exciter and governor.
//!
//! Every scalar is addressable by a stable name (`"H"`, `"KA"`, `"Tdo_t"`, ...)
//! so that grids, sensitivity candidates and config files can refer to it.

use crate::error::{Error, Result};

/// Two-axis machine with step-up transformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParameters {
    /// Inertia constant (s).
    pub h: f64,
    /// Damping coefficient (pu).
    pub d: f64,
    pub xd: f64,
    pub xq: f64,
    /// X'_d (pu).
    pub xd_t: f64,
    /// X'_q (pu).
    pub xq_t: f64,
    /// T'_do (s).
    pub tdo_t: f64,
    /// T'_qo (s).
    pub tqo_t: f64,
    /// Step-up transformer reactance (pu).
    pub xtr: f64,
    /// Synchronous speed (rad/s).
    pub omega_s: f64,
}

/// Reduced static exciter: lead-lag, amplifier lag and output limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExciterParameters {
    pub ka: f64,
    pub ta: f64,
    pub tb: f64,
    pub tc: f64,
    pub efd_min: f64,
    pub efd_max: f64,
    /// Voltage setpoint; back-solved at initialization.
    pub vref: f64,
}

/// Reduced hydro governor: droop, gate servo and linear turbine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorParameters {
    pub a23: f64,
    pub tg: f64,
    pub r_droop: f64,
    /// Gate reference; back-solved at initialization.
    pub pref: f64,
    pub gate_min: f64,
    pub gate_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters {
    pub machine: MachineParameters,
    pub exciter: ExciterParameters,
    pub governor: GovernorParameters,
}

/// Names of every addressable parameter, in canonical order.
pub const PARAMETER_NAMES: [&str; 23] = [
    "H", "D", "Xd", "Xq", "Xd_t", "Xq_t", "Tdo_t", "Tqo_t", "Xtr", "omega_s", "KA", "TA", "TB",
    "TC", "Efd_min", "Efd_max", "Vref", "a23", "Tg", "R_droop", "Pref", "gate_min", "gate_max",
];

impl Default for ModelParameters {
    /// The reference unit used throughout the examples and tests.
    fn default() -> Self {
        Self {
            machine: MachineParameters {
                h: 5.4,
                d: 2.0,
                xd: 1.8,
                xq: 1.7,
                xd_t: 0.3,
                xq_t: 0.55,
                tdo_t: 5.4,
                tqo_t: 0.6,
                xtr: 0.15,
                omega_s: 2.0 * std::f64::consts::PI * 60.0,
            },
            exciter: ExciterParameters {
                ka: 125.0,
                ta: 0.02,
                tb: 3.86,
                tc: 1.0,
                efd_min: -6.0,
                efd_max: 7.0,
                vref: 1.0,
            },
            governor: GovernorParameters {
                a23: 1.102,
                tg: 0.5,
                r_droop: 0.05,
                pref: 0.7,
                gate_min: 0.0,
                gate_max: 1.5,
            },
        }
    }
}

impl ModelParameters {
    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        let m = &mut self.machine;
        let e = &mut self.exciter;
        let g = &mut self.governor;
        Some(match name {
            "H" => &mut m.h,
            "D" => &mut m.d,
            "Xd" => &mut m.xd,
            "Xq" => &mut m.xq,
            "Xd_t" => &mut m.xd_t,
            "Xq_t" => &mut m.xq_t,
            "Tdo_t" => &mut m.tdo_t,
            "Tqo_t" => &mut m.tqo_t,
            "Xtr" => &mut m.xtr,
            "omega_s" => &mut m.omega_s,
            "KA" => &mut e.ka,
            "TA" => &mut e.ta,
            "TB" => &mut e.tb,
            "TC" => &mut e.tc,
            "Efd_min" => &mut e.efd_min,
            "Efd_max" => &mut e.efd_max,
            "Vref" => &mut e.vref,
            "a23" => &mut g.a23,
            "Tg" => &mut g.tg,
            "R_droop" => &mut g.r_droop,
            "Pref" => &mut g.pref,
            "gate_min" => &mut g.gate_min,
            "gate_max" => &mut g.gate_max,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        let mut copy = *self;
        copy.slot(name)
            .map(|v| *v)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        *slot = value;
        Ok(())
    }

    /// Returns a copy with the named parameters overwritten.
    pub fn with_values(&self, names: &[String], values: &[f64]) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} names but {} values",
                names.len(),
                values.len()
            )));
        }
        let mut out = *self;
        for (n, v) in names.iter().zip(values) {
            out.set(n, *v)?;
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter {
                name: name.to_string(),
                reason: reason.to_string(),
            })
        };
        for name in PARAMETER_NAMES {
            if !self.get(name)?.is_finite() {
                return bad(name, "must be finite");
            }
        }
        let m = &self.machine;
        if m.h <= 0.0 {
            return bad("H", "must be positive");
        }
        if m.xd_t <= 0.0 || m.xd < m.xd_t {
            return bad("Xd_t", "requires Xd >= Xd_t > 0");
        }
        if m.xq_t <= 0.0 || m.xq < m.xq_t {
            return bad("Xq_t", "requires Xq >= Xq_t > 0");
        }
        if m.xtr <= 0.0 {
            return bad("Xtr", "must be positive");
        }
        if m.tdo_t <= 0.0 {
            return bad("Tdo_t", "must be positive");
        }
        if m.tqo_t <= 0.0 {
            return bad("Tqo_t", "must be positive");
        }
        if m.omega_s <= 0.0 {
            return bad("omega_s", "must be positive");
        }
        let e = &self.exciter;
        if e.ka <= 0.0 {
            return bad("KA", "must be positive");
        }
        if e.ta < 0.0 {
            return bad("TA", "must be non-negative");
        }
        if e.tb <= 0.0 {
            return bad("TB", "must be positive");
        }
        if e.tc < 0.0 {
            return bad("TC", "must be non-negative");
        }
        if e.efd_min >= e.efd_max {
            return bad("Efd_min", "must be below Efd_max");
        }
        let g = &self.governor;
        if g.a23 <= 0.0 {
            return bad("a23", "must be positive");
        }
        if g.tg <= 0.0 {
            return bad("Tg", "must be positive");
        }
        if g.r_droop <= 0.0 {
            return bad("R_droop", "must be positive");
        }
        if g.gate_min >= g.gate_max {
            return bad("gate_min", "must be below gate_max");
        }
        Ok(())
    }
}
