//! Reduced-order generator dynamics under event-playback boundary conditions.
//!
//! The machine is a two-axis transient model with swing equation. It is tied
//! to the measured bus phasor `V∠θ` through `X'_d + X_tr` on both axes; `X'_q`
//! enters only the `E'_d` dynamics. The exciter is a lead-lag/amplifier
//! chain driven by `Vref - V(t)` and the governor a droop/gate-servo loop with
//! a linear turbine `P_m = a23 * gate`.
//!
//! States are integrated with fixed-step RK4; measured inputs are held
//! constant between samples.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::params::ModelParameters;

/// RK4 sub-steps per playback sample.
pub const SUBSTEPS_PER_SAMPLE: usize = 4;

/// Tolerance on sample-time uniformity (s).
pub const SPACING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneratorState {
    pub delta: f64,
    pub omega: f64,
    pub eq_t: f64,
    pub ed_t: f64,
    pub x_ll: f64,
    pub efd: f64,
    pub gate: f64,
    pub pm: f64,
}

pub const STATE_NAMES: [&str; 8] = ["delta", "omega", "Eq_t", "Ed_t", "x_ll", "Efd", "gate", "Pm"];

impl GeneratorState {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.delta, self.omega, self.eq_t, self.ed_t, self.x_ll, self.efd, self.gate, self.pm,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            delta: a[0],
            omega: a[1],
            eq_t: a[2],
            ed_t: a[3],
            x_ll: a[4],
            efd: a[5],
            gate: a[6],
            pm: a[7],
        }
    }

    fn first_non_finite(&self) -> Option<&'static str> {
        self.to_array()
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| STATE_NAMES[i])
    }

    /// Magnitude and system-frame angle of the transient internal voltage `E'_d + jE'_q`.
    pub fn internal_voltage(&self) -> (f64, f64) {
        let e = self.ed_t.hypot(self.eq_t);
        let angle = self.delta + (-self.ed_t).atan2(self.eq_t);
        (e, angle)
    }
}

/// One PMU sample of the boundary phasor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaybackSample {
    pub t: f64,
    pub v_mag: f64,
    pub v_ang: f64,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTrajectory {
    pub p_model: Vec<f64>,
    pub q_model: Vec<f64>,
}

impl OutputTrajectory {
    pub fn len(&self) -> usize {
        self.p_model.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_model.is_empty()
    }

    /// The stacked output vector `[P; Q]`.
    pub fn stacked(&self) -> impl Iterator<Item = f64> + '_ {
        self.p_model.iter().chain(self.q_model.iter()).copied()
    }
}

/// Active and reactive power seen at the bus for an internal voltage `e∠delta`
/// behind `x_total`. `q` is positive when the machine absorbs reactive power.
pub fn electrical_power(
    e_internal: f64,
    delta: f64,
    v_mag: f64,
    v_ang: f64,
    x_total: f64,
) -> Result<(f64, f64)> {
    if !(x_total > 0.0) {
        return Err(Error::InvalidReactance(x_total));
    }
    let (s, c) = (delta - v_ang).sin_cos();
    let p = e_internal * v_mag * s / x_total;
    let q = (v_mag * v_mag - e_internal * v_mag * c) / x_total;
    Ok((p, q))
}

/// Stator currents and bus voltage resolved on the rotor d/q axes.
#[derive(Debug, Clone, Copy)]
struct Interface {
    vd: f64,
    vq: f64,
    id: f64,
    iq: f64,
}

impl Interface {
    fn solve(state: &GeneratorState, input: &PlaybackSample, params: &ModelParameters) -> Self {
        let m = &params.machine;
        let x = m.xd_t + m.xtr;
        let (s, c) = (state.delta - input.v_ang).sin_cos();
        let vd = input.v_mag * s;
        let vq = input.v_mag * c;
        Self {
            vd,
            vq,
            id: (state.eq_t - vq) / x,
            iq: (vd - state.ed_t) / x,
        }
    }

    fn electrical_power(&self) -> f64 {
        self.vd * self.id + self.vq * self.iq
    }
}

/// Lead-lag output for input `u` and internal state `x`.
fn lead_lag(u: f64, x: f64, tc: f64, tb: f64) -> f64 {
    x + (tc / tb) * (u - x)
}

/// Field voltage acting on the machine. With `TA = 0` the amplifier is
/// algebraic and the stored `Efd` is only refreshed after each step.
fn effective_efd(state: &GeneratorState, input: &PlaybackSample, params: &ModelParameters) -> f64 {
    let e = &params.exciter;
    if e.ta > 0.0 {
        state.efd
    } else {
        let y = lead_lag(e.vref - input.v_mag, state.x_ll, e.tc, e.tb);
        (e.ka * y).clamp(e.efd_min, e.efd_max)
    }
}

/// Time derivatives of all eight states.
pub fn derivatives(
    state: &GeneratorState,
    input: &PlaybackSample,
    params: &ModelParameters,
) -> Result<GeneratorState> {
    if let Some(name) = state.first_non_finite() {
        return Err(Error::NonFinite(name));
    }
    let m = &params.machine;
    let e = &params.exciter;
    let g = &params.governor;
    let io = Interface::solve(state, input, params);
    let dw = state.omega - 1.0;

    let d_delta = m.omega_s * dw;
    let d_omega = (state.pm - io.electrical_power() - m.d * dw) / (2.0 * m.h);
    let efd = effective_efd(state, input, params);
    let d_eq = (efd - state.eq_t - (m.xd - m.xd_t) * io.id) / m.tdo_t;
    let d_ed = (-state.ed_t + (m.xq - m.xq_t) * io.iq) / m.tqo_t;

    let v_err = e.vref - input.v_mag;
    let d_xll = (v_err - state.x_ll) / e.tb;
    let d_efd = if e.ta > 0.0 {
        let y = lead_lag(v_err, state.x_ll, e.tc, e.tb);
        (e.ka * y - state.efd) / e.ta
    } else {
        0.0
    };

    let d_gate = (g.pref - dw / g.r_droop - state.gate) / g.tg;
    let d_pm = g.a23 * d_gate;

    let out = GeneratorState {
        delta: d_delta,
        omega: d_omega,
        eq_t: d_eq,
        ed_t: d_ed,
        x_ll: d_xll,
        efd: d_efd,
        gate: d_gate,
        pm: d_pm,
    };
    match out.first_non_finite() {
        Some(name) => Err(Error::NonFinite(name)),
        None => Ok(out),
    }
}

/// Steady operating point together with the parameters whose setpoints
/// (`Vref`, `Pref`) were back-solved to hold it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub state: GeneratorState,
    pub params: ModelParameters,
}

/// Solves the steady state that delivers `(p0, q0)` at the first bus sample.
/// `q0` uses the same sign convention as [`electrical_power`].
pub fn initialize_equilibrium(
    params: &ModelParameters,
    first_sample: &PlaybackSample,
    p0: f64,
    q0: f64,
) -> Result<Equilibrium> {
    params.validate()?;
    let m = &params.machine;
    let v = first_sample.v_mag;
    let theta = first_sample.v_ang;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Initialization(format!(
            "bus voltage must be positive, got {v}"
        )));
    }
    if !p0.is_finite() || !q0.is_finite() {
        return Err(Error::Initialization("non-finite operating point".into()));
    }
    let x = m.xd_t + m.xtr;
    let e = &params.exciter;
    if p0.abs() > e.efd_max * v / x {
        return Err(Error::Initialization(format!(
            "p0 = {p0} exceeds the transfer limit {} of the interface",
            e.efd_max * v / x
        )));
    }

    // Generator current phasor from S = V I*, with machine-delivered Q = -q0.
    let (vr, vi) = (v * theta.cos(), v * theta.sin());
    let (sp, sq) = (p0, -q0);
    let vm2 = v * v;
    let ir = (sp * vr + sq * vi) / vm2;
    let ii = (sp * vi - sq * vr) / vm2;

    // Rotor q-axis lies along V + j x_q,eff I.
    let xq_eff = m.xq - m.xq_t + x;
    let delta = (vi + xq_eff * ir).atan2(vr - xq_eff * ii);

    // Rotate into the d/q frame: F_dq = F * exp(-j (delta - pi/2)).
    let rot = -(delta - FRAC_PI_2);
    let (rs, rc) = rot.sin_cos();
    let to_dq = |re: f64, im: f64| (re * rc - im * rs, re * rs + im * rc);
    let (vd, vq) = to_dq(vr, vi);
    let (id, iq) = to_dq(ir, ii);

    let eq_t = vq + x * id;
    let ed_t = vd - x * iq;
    let efd = eq_t + (m.xd - m.xd_t) * id;
    if efd < e.efd_min || efd > e.efd_max {
        return Err(Error::Initialization(format!(
            "required field voltage {efd:.4} lies outside [{}, {}]",
            e.efd_min, e.efd_max
        )));
    }

    let g = &params.governor;
    let gate = p0 / g.a23;
    if gate < g.gate_min || gate > g.gate_max {
        return Err(Error::Initialization(format!(
            "required gate {gate:.4} lies outside [{}, {}]",
            g.gate_min, g.gate_max
        )));
    }

    let y = efd / e.ka;
    let mut solved = *params;
    solved.exciter.vref = v + y;
    solved.governor.pref = gate;

    let state = GeneratorState {
        delta,
        omega: 1.0,
        eq_t,
        ed_t,
        x_ll: y,
        efd,
        gate,
        pm: p0,
    };
    Ok(Equilibrium {
        state,
        params: solved,
    })
}

fn axpy(base: &[f64; 8], k: &[f64; 8], h: f64) -> [f64; 8] {
    std::array::from_fn(|i| base[i] + h * k[i])
}

/// One classical RK4 step of length `dt` with the input held constant.
/// Field voltage and gate are clamped to their limits afterwards.
pub fn integrate_step(
    state: &GeneratorState,
    input: &PlaybackSample,
    params: &ModelParameters,
    dt: f64,
) -> Result<GeneratorState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStep(dt));
    }
    let divergence = |e: Error| match e {
        Error::NonFinite(name) => Error::Divergence {
            state: name,
            t: input.t,
        },
        other => other,
    };
    let f = |a: [f64; 8]| {
        derivatives(&GeneratorState::from_array(a), input, params)
            .map(|d| d.to_array())
            .map_err(divergence)
    };
    let y = state.to_array();
    let k1 = f(y)?;
    let k2 = f(axpy(&y, &k1, 0.5 * dt))?;
    let k3 = f(axpy(&y, &k2, 0.5 * dt))?;
    let k4 = f(axpy(&y, &k3, dt))?;
    let next: [f64; 8] =
        std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    let mut next = GeneratorState::from_array(next);

    let e = &params.exciter;
    let g = &params.governor;
    next.efd = if e.ta > 0.0 {
        next.efd.clamp(e.efd_min, e.efd_max)
    } else {
        effective_efd(&next, input, params)
    };
    next.gate = next.gate.clamp(g.gate_min, g.gate_max);
    next.pm = g.a23 * next.gate;

    match next.first_non_finite() {
        Some(name) => Err(Error::Divergence {
            state: name,
            t: input.t + dt,
        }),
        None => Ok(next),
    }
}

/// Checks sample count and uniform spacing, returning the sample period.
pub fn sample_period(inputs: &[PlaybackSample]) -> Result<f64> {
    if inputs.len() < 2 {
        return Err(Error::EmptyEvent(inputs.len()));
    }
    let dt = inputs[1].t - inputs[0].t;
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing {
            row: 1,
            expected: dt,
            got: dt,
        });
    }
    for (k, w) in inputs.windows(2).enumerate() {
        let got = w[1].t - w[0].t;
        if (got - dt).abs() > SPACING_TOLERANCE {
            return Err(Error::NonUniformSpacing {
                row: k + 1,
                expected: dt,
                got,
            });
        }
    }
    Ok(dt)
}

fn output(state: &GeneratorState, input: &PlaybackSample, params: &ModelParameters) -> Result<(f64, f64)> {
    let (e, angle) = state.internal_voltage();
    let m = &params.machine;
    electrical_power(e, angle, input.v_mag, input.v_ang, m.xd_t + m.xtr)
}

/// Replays the measured boundary signals into the model from the steady
/// state at `(p0, q0)` and records P/Q at every sample instant.
pub fn playback(
    params: &ModelParameters,
    inputs: &[PlaybackSample],
    p0: f64,
    q0: f64,
) -> Result<OutputTrajectory> {
    let period = sample_period(inputs)?;
    let eq = initialize_equilibrium(params, &inputs[0], p0, q0)?;
    let params = &eq.params;
    let h = period / SUBSTEPS_PER_SAMPLE as f64;

    let mut out = OutputTrajectory {
        p_model: Vec::with_capacity(inputs.len()),
        q_model: Vec::with_capacity(inputs.len()),
    };
    let mut state = eq.state;
    for (k, input) in inputs.iter().enumerate() {
        let (p, q) = output(&state, input, params)?;
        out.p_model.push(p);
        out.q_model.push(q);
        if k + 1 < inputs.len() {
            let mut held = *input;
            for _ in 0..SUBSTEPS_PER_SAMPLE {
                state = integrate_step(&state, &held, params, h)?;
                held.t += h;
            }
        }
    }
    Ok(out)
}
