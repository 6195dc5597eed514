use std::sync::OnceLock;

use droplet_qed::emission::*;
use droplet_qed::qnm::{asymptotic_width, ModeTable, Polarization, QnmMode};
use droplet_qed::specfun::Complex;
use droplet_qed::Error;

const N0: f64 = 1.47;

fn table() -> &'static ModeTable {
    static T: OnceLock<ModeTable> = OnceLock::new();
    T.get_or_init(|| ModeTable::solve(Polarization::TE, N0, 0.0, 60.0, 1.2 * asymptotic_width(N0).unwrap()).unwrap())
}

fn rhodamine_emitter(m: u8) -> EmitterSpec {
    EmitterSpec::from_alpha_beta(11.2, 0.0314, m, 1.0).unwrap()
}

#[test]
fn width_substitution_matches_mode_sum() {
    for m in [1u8, 2, 3] {
        let e = rhodamine_emitter(m);
        for a in [2.5, 3.1, 4.0, 4.4] {
            let s = SphereSpec::new(N0, a).unwrap();
            let rate = decay_rate_general(&e, &s, table(), 1.3).unwrap();
            let dos = density_of_states(e.x0(&s), table(), e.gamma_h_x(&s)).unwrap();
            let via_dos = 3.0 / f64::from(m) * dos;
            assert!((rate.rate_vs_vacuum / via_dos - 1.0).abs() < 1e-9);
            assert_eq!(rate.rate_vs_bulk, rate.rate_vs_vacuum / (N0 * 1.3));
            assert_eq!(rate.regime, Regime::Weak);
            assert_eq!(rate.dominant_mode.unwrap().j, 1);
        }
    }
}

#[test]
fn coverage_is_enforced() {
    let e = rhodamine_emitter(2);
    let s = SphereSpec::new(N0, 5.2).unwrap();
    assert!(matches!(decay_rate_general(&e, &s, table(), 1.0), Err(Error::Range(_))));
    assert!(matches!(density_of_states(58.0, table(), 0.0), Err(Error::Range(_))));
    let curve = build_decay_curve(&e, N0, &[3.0, 5.2], 1.0, 0.7, Method::ModeSum, Some(table()));
    let msg = curve.unwrap_err().to_string();
    assert!(msg.contains("radius 5.2"), "{msg}");
}

#[test]
fn strong_coupling_is_refused() {
    let x = Complex::new(50.0, -1e-9);
    let mode = QnmMode {
        pol: Polarization::TE,
        l: 70,
        j: 1,
        x,
        width_x: 2e-9,
        k_factor: 0.05 / 2e-9,
    };
    let t = ModeTable::from_modes(Polarization::TE, N0, 0.0, 100.0, 2.0, vec![mode]).unwrap().with_fsr(0.7);
    let e = EmitterSpec::from_alpha_beta(10.0, 0.0, 2, 1.0).unwrap();
    let s = SphereSpec::new(N0, 5.0).unwrap();
    assert!(matches!(decay_rate_general(&e, &s, &t, 1.0), Err(Error::Regime { margin }) if margin > 100.0));
}

#[test]
fn margin_decreases_with_linewidth() {
    let s = SphereSpec::new(N0, 10.0).unwrap();
    let mode = QnmMode {
        pol: Polarization::TE,
        l: 150,
        j: 1,
        x: Complex::new(112.0, -1e-10),
        width_x: 2e-10,
        k_factor: least_leaky_weight(N0, 112.0) / 2e-10,
    };
    let mut last = f64::INFINITY;
    for i in 0..200 {
        let gh = 1e-3 * 1.08f64.powi(i);
        let e = EmitterSpec::new(560.0, gh, 2, 1.0).unwrap();
        let c = classify_coupling(&e, &s, &mode).unwrap();
        assert!(c.margin < last);
        last = c.margin;
    }
    let typical = EmitterSpec::new(560.0, 100.0, 2, 1.0).unwrap();
    assert_eq!(classify_coupling(&typical, &s, &mode).unwrap().regime, Regime::Weak);
}

#[test]
fn amplitude_satisfies_its_equation() {
    for &(k, g, gh, tau) in &[(5.0, 0.2, 1.0, 1.0), (40.0, 0.5, 0.0, 0.5), (0.3, 0.05, 2.0, 2.0), (1.0, 1.0, 1.0, 1.0)] {
        let c = |t: f64| single_mode_amplitude(k, g, gh, tau, t);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        let mut size: f64 = 0.0;
        for i in 1..2000 {
            let t = 0.01 * i as f64;
            let d2 = (c(t + h) - 2.0 * c(t) + c(t - h)) / (h * h);
            let d1 = (c(t + h) - c(t - h)) / (2.0 * h);
            let residual = d2 + 0.5 * (gh + g) * d1 + k * g / (4.0 * tau) * c(t);
            worst = worst.max(residual.norm());
            size = size.max(c(t).norm());
        }
        assert!(worst < 1e-6 * size.max(1.0), "K={k}: residual {worst}");
        assert_eq!(c(0.0), Complex::new(1.0, 0.0));
    }
}

#[test]
fn closed_form_tail() {
    let e = rhodamine_emitter(2);
    let xi = real_cavity_factor(N0).unwrap();
    let radii: Vec<f64> = (0..=200).map(|i| 40.0 + 5.0 * i as f64).collect();
    let curve = build_decay_curve(&e, N0, &radii, xi, 0.7, Method::ClosedForm, None).unwrap();
    let limit = large_radius_rate(N0, xi);
    for p in &curve.points {
        assert!((p.rate_vs_bulk / limit - 1.0).abs() < 0.01);
    }
    let early = build_decay_curve(&e, N0, &[2.0, 3.0, 5.0, 8.0], xi, 0.7, Method::ClosedForm, None).unwrap();
    assert!(early.points.windows(2).all(|w| w[1].rate_vs_bulk < w[0].rate_vs_bulk));
}

#[test]
fn curve_serialization() {
    let e = rhodamine_emitter(2);
    let curve = build_decay_curve(&e, N0, &[2.0, 7.5], 1.2, 0.7, Method::ClosedForm, None).unwrap();
    let mut csv = Vec::new();
    curve.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("radius_um,rate_vs_bulk\n2.0,"));
    let mut json = Vec::new();
    curve.write_json(&mut json).unwrap();
    let back: DecayCurve = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, curve);
}

#[test]
fn dos_spectrum_is_positive() {
    let xs: Vec<f64> = (0..5000).map(|i| 0.01 * i as f64).collect();
    let spectrum = dos_spectrum(table(), &xs, 0.0).unwrap();
    assert!(spectrum.iter().all(|&(_, d)| d > 0.0 && d.is_finite()));
    let mut out = Vec::new();
    write_dos_csv(&mut out, &spectrum[..2]).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "x,dos_over_rho0\n0.0,".to_string() + &format!("{}\n0.01,{}\n", spectrum[0].1, spectrum[1].1));
}
