use droplet_qed::specfun::{riccati_psi_scaled, riccati_xi_scaled, Complex, ScaledPair};
use proptest::prelude::*;

const I: Complex = Complex::new(0.0, 1.0);

fn argument() -> impl Strategy<Value = Complex> {
    (prop_oneof![-400.0..-0.1f64, 0.1..400.0f64], -5.0..5.0f64).prop_map(|(re, im)| Complex::new(re, im))
}

/// `a` and `b` brought to the scale of `a`.
fn rescale(a: &ScaledPair, b: &ScaledPair) -> (Complex, Complex) {
    let f = (b.log_scale - a.log_scale).exp();
    (b.value * f, b.derivative * f)
}

fn wronskian(l: u32, z: Complex) -> Complex {
    let p = riccati_psi_scaled(l, z).unwrap();
    let x = riccati_xi_scaled(l, z).unwrap();
    let w = p.value * x.derivative - p.derivative * x.value;
    w * (p.log_scale + x.log_scale).exp()
}

fn recurrence_gap(f: impl Fn(u32) -> ScaledPair, l: u32, z: Complex) -> Option<f64> {
    let (lo, mid, hi) = (f(l - 1), f(l), f(l + 1));
    let top = lo.log_scale.max(mid.log_scale).max(hi.log_scale);
    let bottom = lo.log_scale.min(mid.log_scale).min(hi.log_scale);
    if top - bottom > 6.0 * std::f64::consts::LN_10 {
        return None;
    }
    let at = |p: &ScaledPair| p.value * (p.log_scale - top).exp();
    let (a, b, c) = (at(&lo), at(&mid), at(&hi));
    let rhs = (2 * l + 1) as f64 / z * b;
    let size = a.norm().max(c.norm()).max(rhs.norm());
    Some((a + c - rhs).norm() / size)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn wronskian_is_i(l in 0u32..=200, z in argument()) {
        let w = wronskian(l, z);
        prop_assert!((w - I).norm() < 1e-10, "l={} z={} W={}", l, z, w);
    }

    #[test]
    fn three_term_recurrence(l in 1u32..=199, z in argument()) {
        if let Some(gap) = recurrence_gap(|n| riccati_psi_scaled(n, z).unwrap(), l, z) {
            prop_assert!(gap < 1e-9, "psi l={} z={} gap={}", l, z, gap);
        }
        if let Some(gap) = recurrence_gap(|n| riccati_xi_scaled(n, z).unwrap(), l, z) {
            prop_assert!(gap < 1e-9, "xi l={} z={} gap={}", l, z, gap);
        }
    }

    #[test]
    fn reflection_symmetry(l in 0u32..=200, z in argument()) {
        let mirror = -z.conj();
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        for (a, b) in [
            (riccati_psi_scaled(l, z).unwrap(), riccati_psi_scaled(l, mirror).unwrap()),
            (riccati_xi_scaled(l, z).unwrap(), riccati_xi_scaled(l, mirror).unwrap()),
        ] {
            let (v, _) = rescale(&a, &b);
            let expected = sign * a.value.conj();
            prop_assert!((v - expected).norm() <= 1e-12 * expected.norm(), "l={} z={}", l, z);
        }
    }

    #[test]
    fn derivatives_match_central_differences(l in 0u32..=200, z in argument()) {
        let h = 1e-6 * z.norm().max(1.0);
        for f in [riccati_psi_scaled, riccati_xi_scaled] {
            let at = f(l, z).unwrap();
            let (plus, _) = rescale(&at, &f(l, z + h).unwrap());
            let (minus, _) = rescale(&at, &f(l, z - h).unwrap());
            let fd = (plus - minus) / (2.0 * h);
            let size = at.derivative.norm().max(at.value.norm() * (l as f64 + 1.0) / z.norm());
            prop_assert!((fd - at.derivative).norm() <= 1e-6 * size, "l={} z={} fd={} d={}", l, z, fd, at.derivative);
        }
    }
}

#[test]
fn wronskian_on_grid() {
    let mut worst: f64 = 0.0;
    for l in (0..=200).step_by(10) {
        for &r in &[0.1f64, 0.5, 2.0, 10.0, 50.0, 150.0, 400.0] {
            for &im in &[-5.0, -1.0, 0.0, 1.0, 5.0] {
                let re: f64 = (r * r - im * im).max(0.0).sqrt();
                let z = Complex::new(re.max(0.05), im);
                worst = worst.max((wronskian(l, z) - I).norm());
            }
        }
    }
    assert!(worst < 1e-10, "worst Wronskian deviation {worst:e}");
}
