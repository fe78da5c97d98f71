//! Oracle checks: every closed form is compared against an independent
//! brute-force route on randomly generated data.

use maxcorr_core::{
    calc_d, calc_sig_hat, est_psi_rows, gradient_second_moment, remainder, Accumulator,
    CorrSummary, Index, MomentState, Observation, ScreenConfig, Sign,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const VF: f64 = 1e-12;

fn unit_rows(rng: &mut ChaCha12Rng, n: usize, p: usize) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = rng.gen_range(-1.0..1.0);
            Observation::new(x, y)
        })
        .collect()
}

/// Rows with signal so the selection is not pure noise.
fn signal_rows(rng: &mut ChaCha12Rng, n: usize, p: usize, coef: f64) -> Vec<Observation> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = (coef * x[0] + (1.0 - coef) * rng.gen_range(-1.0..1.0)).clamp(-1.0, 1.0);
            Observation::new(x, y)
        })
        .collect()
}

#[test]
fn streaming_moments_track_batch_over_long_streams() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    let rows = unit_rows(&mut rng, 1000, 50);
    let mut h = MomentState::initialize(&rows[0], &rows[1]).unwrap();
    for o in &rows[2..] {
        h.update(o).unwrap();
    }
    let batch = MomentState::from_rows(&rows).unwrap();
    let mut worst = 0.0f64;
    for k in 0..50 {
        for (r, s) in [(1, 0), (2, 0), (3, 0), (4, 0), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)]
        {
            worst = worst.max((h.moment(k, r, s) - batch.moment(k, r, s)).abs());
        }
    }
    for s in 1..=4 {
        worst = worst.max((h.moment(0, 0, s) - batch.moment(0, 0, s)).abs());
    }
    assert!(worst <= 1e-10, "max streaming/batch deviation {worst}");
}

#[test]
fn correlations_match_textbook_two_pass_formula() {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let rows = unit_rows(&mut rng, 200, 10);
    let h = MomentState::from_rows(&rows).unwrap();
    let (corr, var_x, var_y) = h.correlations(VF);

    let n = rows.len() as f64;
    let mean_y: f64 = rows.iter().map(|o| o.y).sum::<f64>() / n;
    let vy: f64 = rows.iter().map(|o| (o.y - mean_y).powi(2)).sum::<f64>() / n;
    assert!((var_y - vy).abs() <= 1e-10);
    for k in 0..10 {
        let mean_x: f64 = rows.iter().map(|o| o.x[k]).sum::<f64>() / n;
        let vx: f64 = rows.iter().map(|o| (o.x[k] - mean_x).powi(2)).sum::<f64>() / n;
        let cov: f64 = rows
            .iter()
            .map(|o| (o.x[k] - mean_x) * (o.y - mean_y))
            .sum::<f64>()
            / n;
        let r = cov / (vx * vy).sqrt();
        assert!((corr[k] - r).abs() <= 1e-10, "k={k}: {} vs {r}", corr[k]);
        assert!((var_x[k] - vx).abs() <= 1e-10);
    }
}

/// Second, independent transcription of the canonical gradient display.
fn gradient_reference(s: &CorrSummary, m: f64, x: f64, y: f64) -> f64 {
    m * ((x - s.mean_x) * (y - s.mean_y) / (s.sd_x * s.sd_y)
        - 0.5
            * s.corr
            * ((x - s.mean_x).powi(2) / (s.sd_x * s.sd_x)
                + (y - s.mean_y).powi(2) / (s.sd_y * s.sd_y)))
}

#[test]
fn calc_d_agrees_with_independent_transcription() {
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    for _ in 0..50 {
        let rows = unit_rows(&mut rng, 50, 4);
        let h = MomentState::from_rows(&rows).unwrap();
        let o = Observation::new(
            (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            rng.gen_range(-1.0..1.0),
        );
        for k in 0..4 {
            let s = h.summary(k, VF).unwrap();
            for sign in [Sign::Plus, Sign::Minus] {
                let got = calc_d(&h, Index { k, sign }, &o, VF);
                let want = gradient_reference(&s, sign.as_f64(), o.x[k], o.y);
                assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
            }
        }
    }
}

#[test]
fn gradients_are_mean_zero_under_the_empirical_law() {
    let mut rng = ChaCha12Rng::seed_from_u64(19);
    let rows = unit_rows(&mut rng, 200, 6);
    let h = MomentState::from_rows(&rows).unwrap();
    for k in 0..6 {
        for sign in [Sign::Plus, Sign::Minus] {
            let d = Index { k, sign };
            let mean: f64 = rows.iter().map(|o| calc_d(&h, d, o, VF)).sum::<f64>()
                / rows.len() as f64;
            assert!(mean.abs() <= 1e-9, "k={k}: P_j D = {mean}");
        }
    }
}

#[test]
fn closed_form_variance_matches_brute_force() {
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    for trial in 0..30 {
        let n = rng.gen_range(20..200);
        let rows = unit_rows(&mut rng, n, 3);
        let h = MomentState::from_rows(&rows).unwrap();
        let k = rng.gen_range(0..3);
        let d = Index { k, sign: Sign::Plus };
        let vals: Vec<f64> = rows.iter().map(|o| calc_d(&h, d, o, VF)).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let brute = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let closed = gradient_second_moment(&h, k, VF).unwrap();
        let rel = ((closed - brute) / brute).abs();
        assert!(rel <= 1e-9, "trial {trial}: rel {rel}");
        let sig = calc_sig_hat(&h, d, 1e-4, VF);
        assert!((sig * sig - closed.max(1e-4)).abs() <= 1e-12);
    }
}

/// Weighted summary of a discrete distribution on a few support points.
fn discrete_summary(pts: &[(f64, f64)], w: &[f64]) -> CorrSummary {
    let mean_x: f64 = pts.iter().zip(w).map(|(p, w)| w * p.0).sum();
    let mean_y: f64 = pts.iter().zip(w).map(|(p, w)| w * p.1).sum();
    let vx: f64 = pts.iter().zip(w).map(|(p, w)| w * (p.0 - mean_x).powi(2)).sum();
    let vy: f64 = pts.iter().zip(w).map(|(p, w)| w * (p.1 - mean_y).powi(2)).sum();
    let cov: f64 = pts
        .iter()
        .zip(w)
        .map(|(p, w)| w * (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let (sd_x, sd_y) = (vx.sqrt(), vy.sqrt());
    CorrSummary { mean_x, mean_y, sd_x, sd_y, corr: cov / (sd_x * sd_y) }
}

fn random_discrete(rng: &mut ChaCha12Rng, support: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let pts: Vec<(f64, f64)> = (0..support)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let raw: Vec<f64> = (0..support).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    (pts, raw.into_iter().map(|v| v / total).collect())
}

#[test]
fn remainder_equals_expansion_defect_exactly() {
    // The defining identity: Psi(P) - Psi(P0) + E_{P0}[D(P)] = Rem(P), with
    // both sides computed by exhaustive summation over the discrete support.
    let mut rng = ChaCha12Rng::seed_from_u64(29);
    for trial in 0..200 {
        let support_p = rng.gen_range(3..6);
        let support_0 = rng.gen_range(3..6);
        let (pts_p, w_p) = random_discrete(&mut rng, support_p);
        let (pts_0, w_0) = random_discrete(&mut rng, support_0);
        let sp = discrete_summary(&pts_p, &w_p);
        let s0 = discrete_summary(&pts_0, &w_0);
        if sp.sd_x < 0.05 || sp.sd_y < 0.05 || s0.sd_x < 0.05 || s0.sd_y < 0.05 {
            continue;
        }
        for sign in [Sign::Plus, Sign::Minus] {
            let m = sign.as_f64();
            let psi_p = m * sp.corr;
            let psi_0 = m * s0.corr;
            let e0_d: f64 = pts_0
                .iter()
                .zip(&w_0)
                .map(|(pt, w)| w * gradient_reference(&sp, m, pt.0, pt.1))
                .sum();
            let lhs = psi_p - psi_0 + e0_d;
            let rhs = remainder(&sp, &s0, sign).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-12,
                "trial {trial}: identity defect {}",
                lhs - rhs
            );
        }
    }
}

/// Reference driver that recomputes all moments from scratch at every step.
fn quadratic_reference(
    rows: &[Observation],
    ell: usize,
    cfg: &ScreenConfig,
) -> (f64, f64, f64, f64) {
    let n = rows.len();
    let mut acc = Accumulator::new();
    for j in ell..n {
        let h = MomentState::from_rows(&rows[..j]).unwrap();
        let d = h.maximizer(cfg.var_floor);
        let plug = match h.summary(d.k, cfg.var_floor) {
            Some(s) => d.sign.as_f64() * s.corr,
            None => 0.0,
        };
        let sigma = calc_sig_hat(&h, d, cfg.sigma_floor_sq, cfg.var_floor);
        let g = calc_d(&h, d, &rows[j], cfg.var_floor);
        acc.accumulate(plug, g, sigma).unwrap();
    }
    let est = acc.finalize(cfg.alpha).unwrap();
    (est.psi_hat, est.sigma_bar, est.ci_lower, est.ci_upper)
}

#[test]
fn online_driver_matches_quadratic_reference() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for trial in 0..8 {
        let n = rng.gen_range(60..150);
        let p = rng.gen_range(2..10);
        let rows = signal_rows(&mut rng, n, p, 0.4);
        let ell_override = if trial % 2 == 0 { Some(rng.gen_range(2..n / 2)) } else { None };
        let cfg = ScreenConfig { ell_override, ..ScreenConfig::default() };
        let res = est_psi_rows(rows.clone(), n, &cfg).unwrap();
        let (psi, sigma, lo, hi) = quadratic_reference(&rows, res.ell_n, &cfg);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()));
        assert!(close(res.psi_hat, psi), "trial {trial}: {} vs {psi}", res.psi_hat);
        assert!(close(res.sigma_bar, sigma));
        assert!(close(res.ci_lower, lo));
        assert!(close(res.ci_upper, hi));
    }
}

#[test]
fn negating_a_column_flips_its_sign_but_not_the_estimate() {
    let mut rng = ChaCha12Rng::seed_from_u64(37);
    let n = 120;
    let rows = signal_rows(&mut rng, n, 5, 0.5);
    let flipped: Vec<Observation> = rows
        .iter()
        .map(|o| {
            let mut x = o.x.clone();
            x[0] = -x[0];
            Observation::new(x, o.y)
        })
        .collect();
    let cfg = ScreenConfig::default();
    let a = est_psi_rows(rows.clone(), n, &cfg).unwrap();
    let b = est_psi_rows(flipped, n, &cfg).unwrap();
    // The flipped column is still selected, with the opposite sign, and the
    // estimate and interval are bit-identical.
    assert_eq!(a.diagnostics.selected.k, 0);
    assert_eq!(b.diagnostics.selected.k, 0);
    assert_ne!(a.diagnostics.selected.sign, b.diagnostics.selected.sign);
    assert_eq!(a.psi_hat, b.psi_hat);
    assert_eq!(a.sigma_bar, b.sigma_bar);
    assert_eq!(a.ci_lower, b.ci_lower);
    assert_eq!(a.ci_upper, b.ci_upper);

    let h = MomentState::from_rows(&rows).unwrap();
    let hf = MomentState::from_rows(
        &rows
            .iter()
            .map(|o| {
                let mut x = o.x.clone();
                x[0] = -x[0];
                Observation::new(x, o.y)
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(h.corr(0, VF), -hf.corr(0, VF));
}

#[test]
fn permuting_columns_permutes_the_selection() {
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    let n = 150;
    let p = 6;
    let rows = signal_rows(&mut rng, n, p, 0.5);
    // Rotate columns left by 2: original column k lands at (k + p - 2) % p.
    let rotated: Vec<Observation> = rows
        .iter()
        .map(|o| {
            let mut x = o.x.clone();
            x.rotate_left(2);
            Observation::new(x, o.y)
        })
        .collect();
    let cfg = ScreenConfig::default();
    let a = est_psi_rows(rows, n, &cfg).unwrap();
    let b = est_psi_rows(rotated, n, &cfg).unwrap();
    assert_eq!(b.diagnostics.selected.k, (a.diagnostics.selected.k + p - 2) % p);
    assert_eq!(a.diagnostics.selected.sign, b.diagnostics.selected.sign);
    assert_eq!(a.psi_hat, b.psi_hat);
    assert_eq!(a.ci_lower, b.ci_lower);
    assert_eq!(a.ci_upper, b.ci_upper);
}
