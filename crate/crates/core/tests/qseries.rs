use polyostat::qseries::{
    escalier_convergents, escalier_p, escalier_q, kernel_h, kernel_numerators, kernel_numerators_at,
    q_pochhammer, theta_phi, KernelModel, Numerators, ThetaBuilder,
};
use polyostat::{markov, spectral, FamilyId};
use proptest::prelude::*;

fn model(f: FamilyId) -> KernelModel {
    KernelModel::default_for(f)
}

fn first(n: Numerators<f64>) -> f64 {
    n.first()
}

fn rho_dcc() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// Product accumulated in log space, term by term.
fn naive_pochhammer(a: f64, z: f64, n: usize) -> f64 {
    let mut log = 0.0f64;
    let mut zk = 1.0f64;
    for _ in 0..n {
        log += (-a * zk).ln_1p();
        zk *= z;
    }
    log.exp()
}

#[test]
fn pochhammer_examples() {
    assert_eq!(q_pochhammer(0.3, 0.5, 0), 1.0);
    assert!((q_pochhammer(0.5, 0.5, 2) - 0.375).abs() < 1e-15);
    let p = q_pochhammer(0.9, 0.9, 30);
    assert!(p > 0.0 && p < 1.0);
    assert!((p / naive_pochhammer(0.9, 0.9, 30) - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_examples() {
    let dcc = model(FamilyId::Dcc);
    assert!(kernel_h(FamilyId::Dcc, 1.0, rho_dcc(), &dcc).unwrap().abs() < 1e-12);
    assert_eq!(kernel_h(FamilyId::Dcc, 1.0, 0.0, &dcc).unwrap(), -1.0);
    let cc = kernel_h(FamilyId::Cc, 1.0, 0.25, &model(FamilyId::Cc)).unwrap();
    assert!((cc + 0.125).abs() < 1e-15);
    assert!(kernel_h(FamilyId::Wa, 1.0, 0.5, &model(FamilyId::Wa)).unwrap().abs() < 1e-15);
}

#[test]
fn dcc_total_numerator() {
    let r = rho_dcc();
    let m = model(FamilyId::Dcc);
    let n1 = first(kernel_numerators_at(&m, 1.0, r, None).unwrap());
    assert!((n1 - r * (r - 1.0)).abs() < 1e-15);
}

#[test]
fn first_column_numerators_sum_to_the_total() {
    for f in [FamilyId::Dcc, FamilyId::Cc, FamilyId::Wa] {
        let m = model(f);
        for (w, z) in [(1.0, 0.2), (0.8, 0.3), (1.1, 0.15)] {
            let total = first(kernel_numerators_at(&m, w, z, None).unwrap());
            let parts: f64 = (1..400).map(|i| first(kernel_numerators(f, w, z, i, &m).unwrap())).sum();
            assert!((parts - total).abs() < 1e-12 * total.abs().max(1.0), "{f} {w} {z}: {parts} vs {total}");
        }
    }
}

#[test]
fn es_first_amplitude_matches_published_value() {
    let m = model(FamilyId::Es);
    let sc = spectral::bender_width_constants(FamilyId::Es).unwrap();
    let s = first(kernel_numerators(FamilyId::Es, 1.0, sc.rho, 1, &m).unwrap());
    let c2 = -s / sc.kernel.w;
    assert!(((c2 - 0.8600102250) / 0.8600102250).abs() < 1e-6, "C2(1) = {c2:.10}");
}

#[test]
fn theta_value_sums_to_the_numerator() {
    for f in FamilyId::ALL {
        let m = model(f);
        let rho = spectral::find_rho(f).unwrap();
        for i in 1..=4 {
            let phi = theta_phi(f, rho, i, &m).unwrap();
            let n1 = first(kernel_numerators(f, 1.0, rho, i, &m).unwrap());
            assert!((phi.value.sum() - n1).abs() < 1e-12 * n1.abs().max(1e-3), "{f} {i}");
        }
    }
}

#[test]
fn theta_value_is_proportional_to_last_column_law() {
    for f in FamilyId::ALL {
        let m = model(f);
        let rho = spectral::find_rho(f).unwrap();
        for i in 1..=3 {
            let phi = theta_phi(f, rho, i, &m).unwrap();
            let total = phi.value.sum();
            for l in 1..=25 {
                let g = phi.value.coeff(l) / total;
                let pi = markov::last_column_law(f, l).unwrap();
                assert!((g - pi).abs() < 1e-9, "{f} i={i} l={l}: {g} vs {pi}");
            }
        }
    }
}

#[test]
fn theta_w_derivative_matches_central_difference() {
    let e = 1e-5;
    for f in FamilyId::ALL {
        let m = model(f);
        let rho = spectral::find_rho(f).unwrap();
        for i in 1..=3 {
            let phi = ThetaBuilder::new(&m, rho).unwrap().phi(i).unwrap();
            let up = ThetaBuilder::at_w(&m, rho, 1.0 + e).unwrap().phi(i).unwrap();
            let down = ThetaBuilder::at_w(&m, rho, 1.0 - e).unwrap().phi(i).unwrap();
            let scale = phi.dw.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            for l in 0..phi.dw.coeffs.len() {
                let fd = (up.value.coeff(l) - down.value.coeff(l)) / (2.0 * e);
                let d = phi.dw.coeff(l);
                assert!((fd - d).abs() <= 1e-6 * d.abs().max(1e-3 * scale), "{f} i={i} l={l}: {d} vs {fd}");
            }
        }
    }
}

#[test]
fn escalier_theta_weights_sum_to_one() {
    let rho = spectral::find_rho(FamilyId::Es).unwrap();
    let phi = theta_phi(FamilyId::Es, rho, 1, &model(FamilyId::Es)).unwrap();
    // coefficient n + 1 is ρ·H_n(1,ρ)
    assert_eq!(phi.value.coeff(0), 0.0);
    assert!((phi.value.sum() / rho - 1.0).abs() < 1e-12);
}

#[test]
fn theta_tails_are_negligible() {
    for f in FamilyId::ALL {
        let rho = spectral::find_rho(f).unwrap();
        let phi = theta_phi(f, rho, 1, &model(f)).unwrap();
        assert!(phi.value.tail_ratio() <= 1e-12, "{f}: {}", phi.value.tail_ratio());
    }
}

#[test]
fn convergents_examples() {
    assert_eq!(escalier_convergents(0, 1.0, 0.5), (1.0, 1.0));
    // P₁ = P₀ − z x P₋₁ with P₋₁ = 0
    let (p, q) = escalier_convergents(1, 1.0, 0.5);
    assert!((p - 1.0).abs() < 1e-15);
    assert!((q - 0.5).abs() < 1e-15);
}

#[test]
fn convergents_approach_the_series_ratio() {
    let explicit = |x: f64, z: f64| escalier_p(40, &x, &z).unwrap() / escalier_q(40, &x, &z).unwrap();
    let (p, q) = escalier_convergents(25, 0.3, 0.4);
    assert!((p / q - explicit(0.3, 0.4)).abs() < 1e-10);
    for x in [0.2, 0.4] {
        for z in [0.3, 0.5] {
            let (p, q) = escalier_convergents(60, x, z);
            assert!((p / q - explicit(x, z)).abs() < 1e-10, "{x} {z}");
        }
    }
}

/// `Σ (−1)ⁿ zⁿ z^{n(n+1)/2} / (z;z)_n²` at `w = 1`.
fn staircase_theta_form(z: f64) -> f64 {
    let mut acc = 1.0;
    let mut poch = 1.0;
    for n in 1..60 {
        poch *= 1.0 - z.powi(n);
        let term = z.powi(n * (n + 1) / 2) / (poch * poch);
        acc += if n % 2 == 1 { -term } else { term };
    }
    acc
}

#[test]
fn staircase_root_agrees_with_theta_form() {
    let (mut lo, mut hi) = (0.3, 0.5);
    assert!(staircase_theta_form(lo) * staircase_theta_form(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if staircase_theta_form(lo) * staircase_theta_form(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho = spectral::find_rho(FamilyId::St).unwrap();
    assert!((rho - 0.5 * (lo + hi)).abs() < 1e-10, "{rho} vs {lo}");
}

#[test]
fn truncation_is_converged() {
    for f in [FamilyId::Dc, FamilyId::St, FamilyId::Es] {
        let rho = spectral::find_rho(f).unwrap();
        let short = KernelModel::new(f, 12, 60).unwrap();
        let long = KernelModel::new(f, 16, 60).unwrap();
        let a = kernel_h(f, 1.0, rho, &short).unwrap();
        let b = kernel_h(f, 1.0, rho, &long).unwrap();
        assert!((a - b).abs() < 1e-12, "{f}: {a} vs {b}");
    }
}

#[test]
fn model_bounds() {
    assert!(KernelModel::new(FamilyId::Dc, 7, 60).is_err());
    assert!(KernelModel::new(FamilyId::Dc, 8, 39).is_err());
    assert!(KernelModel::new(FamilyId::Dc, 8, 40).is_ok());
    assert!(model(FamilyId::Cc).closed_form());
    assert!(!model(FamilyId::Es).closed_form());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dcc_kernel_is_the_polynomial(w in 0.5f64..1.2, z in 0.05f64..0.6) {
        let h = kernel_h(FamilyId::Dcc, w, z, &model(FamilyId::Dcc)).unwrap();
        prop_assert!((h - (-z * z + 2.0 * z + z * w - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn cc_kernel_is_the_polynomial(w in 0.5f64..1.2, z in 0.05f64..0.6) {
        let h = kernel_h(FamilyId::Cc, w, z, &model(FamilyId::Cc)).unwrap();
        let p = z.powi(4) * (w - 1.0) + z.powi(3) * (w * w - w + 4.0) - z * z * (w + 6.0) + z * (w + 4.0) - 1.0;
        prop_assert!((h - p).abs() < 1e-12);
    }

    #[test]
    fn pochhammer_matches_naive_loop(a in 0.0f64..0.95, z in 0.0f64..0.95, n in 0usize..60) {
        let p = q_pochhammer(a, z, n);
        prop_assert!((p - naive_pochhammer(a, z, n)).abs() <= 1e-13 * p.abs().max(1e-300));
    }
}
