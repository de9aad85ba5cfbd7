use gencal::events::synth_event;
use gencal::model::playback;
use gencal::{rank_parameters, trajectory_sensitivity, DisturbanceSpec, Event, ModelParameters};
use proptest::prelude::*;

const CANDIDATES: [&str; 4] = ["KA", "TB", "a23", "Tdo_t"];

fn reference() -> (ModelParameters, Event) {
    let p = ModelParameters::default();
    let e = synth_event(&p, &DisturbanceSpec::default(), 10.0, 30.0, 0.8, -0.2, None).unwrap();
    (p, e)
}

/// Scaled mean absolute output derivative, by central difference, computed
/// straight from playback.
fn finite_difference(params: &ModelParameters, event: &Event, name: &str, h: f64) -> f64 {
    let a = params.get(name).unwrap();
    let run = |v: f64| {
        let mut p = *params;
        p.set(name, v).unwrap();
        let (p0, q0) = (event.p_meas[0], event.q_meas[0]);
        playback(&p, &event.samples, p0, q0).unwrap()
    };
    let step = h * a.abs();
    let (hi, lo) = (run(a + step), run(a - step));
    let k = hi.p_model.len();
    let mut sum = 0.0;
    for i in 0..k {
        sum += (hi.p_model[i] - lo.p_model[i]).abs() + (hi.q_model[i] - lo.q_model[i]).abs();
    }
    a.abs() * sum / (2.0 * step) / (2 * k) as f64
}

#[test]
fn agrees_with_a_fine_finite_difference() {
    let (p, e) = reference();
    for name in CANDIDATES.iter().chain(&["H", "Xd_t"]) {
        let oracle = finite_difference(&p, &e, name, 0.001);
        let s = trajectory_sensitivity(&p, &e, name, 0.05).unwrap();
        let rel = (s - oracle).abs() / oracle;
        assert!(rel < 0.10, "{name}: S = {s:e}, oracle {oracle:e}, rel {rel:.3}");
    }
}

#[test]
fn halving_the_perturbation_changes_little() {
    let (p, e) = reference();
    for name in CANDIDATES {
        let full = trajectory_sensitivity(&p, &e, name, 0.05).unwrap();
        let half = trajectory_sensitivity(&p, &e, name, 0.025).unwrap();
        assert!((full - half).abs() / full < 0.05, "{name}: {full:e} vs {half:e}");
    }
}

#[test]
fn reference_candidates_outrank_the_control() {
    let (p, e) = reference();
    let mut names: Vec<String> = CANDIDATES.map(String::from).to_vec();
    names.push("Efd_min".into());
    let report = rank_parameters(&p, &e, &names, 0.05).unwrap();
    let control = report.get("Efd_min").unwrap();
    assert_eq!(control.sensitivity, 0.0);
    assert_eq!(control.rank, 5);
    for name in CANDIDATES {
        let entry = report.get(name).unwrap();
        assert!(entry.sensitivity > 0.0);
        assert!(entry.rank < control.rank);
    }
    let values: Vec<f64> = report.entries.iter().map(|e| e.sensitivity).collect();
    assert!(values.windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(report, rank_parameters(&p, &e, &names, 0.05).unwrap());
}

#[test]
fn symmetric_in_the_perturbation_pair() {
    // Swapping the plus and minus runs is the same as a negative step.
    let (p, e) = reference();
    for name in CANDIDATES {
        let fwd = finite_difference(&p, &e, name, 0.05);
        let a = p.get(name).unwrap();
        let rev = {
            let run = |v: f64| {
                let mut q = p;
                q.set(name, v).unwrap();
                e.replay(&q).unwrap()
            };
            let (lo, hi) = (run(a - 0.05 * a.abs()), run(a + 0.05 * a.abs()));
            let sum: f64 = lo.stacked().zip(hi.stacked()).map(|(x, y)| (x - y).abs()).sum();
            a.abs() * sum / (0.1 * a.abs()) / (2 * lo.len()) as f64
        };
        let s = trajectory_sensitivity(&p, &e, name, 0.05).unwrap();
        assert!((fwd - rev).abs() <= 1e-12 * fwd);
        assert!((s - rev).abs() <= 1e-9 * s, "{name}: {s:e} vs {rev:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sensitivity_is_non_negative(
        idx in 0usize..gencal::params::PARAMETER_NAMES.len(),
        delta in 0.01f64..0.2,
        mag in 0.05f64..0.3,
    ) {
        let name = gencal::params::PARAMETER_NAMES[idx];
        let p = ModelParameters::default();
        let spec = DisturbanceSpec { magnitude: mag, ..DisturbanceSpec::default() };
        let e = synth_event(&p, &spec, 4.0, 30.0, 0.8, -0.2, None).unwrap();
        match trajectory_sensitivity(&p, &e, name, delta) {
            Ok(s) => prop_assert!(s >= 0.0),
            Err(gencal::Error::ZeroNominal(_)) => prop_assert_eq!(p.get(name).unwrap(), 0.0),
            // Large perturbations may leave the feasible region.
            Err(err) => prop_assert!(err.kind() != gencal::ErrorKind::Numerical, "{err}"),
        }
    }
}
