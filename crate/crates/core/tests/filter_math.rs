use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2i_handover::channel::{synthesize_measurement, NoiseConfig};
use v2i_handover::geometry::wrap_angle;
use v2i_handover::handover::{SensingTracker, TriggerConfig};
use v2i_handover::scenario::synthetic;
use v2i_handover::tracking::{
    imm_step_block, kf_update, mix_probabilities, model_jacobian, model_propagate, HeadingFrame, ImmConfig,
    ImmObservation, ImmState, KfState, Maneuver,
};

const DT: f64 = 0.02;

fn default_transition() -> Matrix3<f64> {
    Matrix3::new(0.9, 0.05, 0.05, 0.05, 0.9, 0.05, 0.05, 0.05, 0.9)
}

fn finite_difference(kind: Maneuver, xi: &Vector6<f64>) -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    for c in 0..6 {
        let h = 1e-6 * xi[c].abs().max(1.0);
        let mut up = *xi;
        let mut down = *xi;
        up[c] += h;
        down[c] -= h;
        let mut delta = model_propagate(kind, &up, DT).unwrap() - model_propagate(kind, &down, DT).unwrap();
        delta[0] = wrap_angle(delta[0]);
        j.set_column(c, &(delta / (2.0 * h)));
    }
    j
}

fn random_state(rng: &mut ChaCha8Rng) -> Vector6<f64> {
    Vector6::new(
        rng.random_range(-3.1..3.1),
        rng.random_range(-0.5..0.5),
        rng.random_range(-150.0..150.0),
        rng.random_range(-150.0..150.0),
        rng.random_range(-30.0..30.0),
        rng.random_range(-30.0..30.0),
    )
}

fn well_conditioned(kind: Maneuver, xi: &Vector6<f64>) -> bool {
    match kind {
        Maneuver::Straight => {
            let (s, c) = xi[0].sin_cos();
            c.abs() > 0.1 && (xi[2] * c + xi[3] * s).abs() > 5.0
        }
        _ => xi[2].hypot(xi[3]) > 5.0,
    }
}

#[test]
fn analytic_jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for kind in Maneuver::ALL {
        let mut checked = 0;
        let mut worst = 0.0f64;
        while checked < 1000 {
            let xi = random_state(&mut rng);
            if !well_conditioned(kind, &xi) {
                continue;
            }
            let analytic = model_jacobian(kind, &xi, DT).unwrap();
            let numeric = finite_difference(kind, &xi);
            let err = (analytic - numeric).norm() / analytic.norm();
            worst = worst.max(err);
            checked += 1;
        }
        assert!(worst < 1e-5, "{kind}: worst relative error {worst:e}");
    }
}

fn imm_config() -> ImmConfig<f64> {
    ImmConfig {
        p0: Vector3::new(0.75, 0.125, 0.125),
        transition: default_transition(),
        process_scale: 0.003,
        velocity_process_scale: 0.1,
        init_scale: 10.0,
        dt: DT,
    }
}

fn observation(frame: &HeadingFrame<f64>, theta: f64, d: f64, v: f64) -> ImmObservation<f64> {
    let sigma = Vector4::new(1f64.to_radians(), 1f64.to_radians(), 0.5, 0.5);
    frame.observe(&Vector4::new(theta, 0.1, d, v), &sigma)
}

fn is_psd(m: &Matrix6<f64>) -> bool {
    let scale = m.diagonal().max().max(1.0);
    m.symmetric_eigenvalues().min() >= -1e-9 * scale
}

fn arb_simplex() -> impl Strategy<Value = Vector3<f64>> {
    (0.001f64..1.0, 0.001f64..1.0, 0.001f64..1.0).prop_map(|(a, b, c)| Vector3::new(a, b, c) / (a + b + c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mixing_stays_on_simplex(p in arb_simplex(), l0 in -2000.0f64..50.0, l1 in -2000.0f64..50.0, l2 in -2000.0f64..50.0) {
        let (q, _) = mix_probabilities(&p, &default_transition(), &Vector3::new(l0, l1, l2));
        prop_assert!((q.sum() - 1.0).abs() < 1e-12);
        prop_assert!(q.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn mixing_ignores_common_likelihood_scale(p in arb_simplex(), l in prop::array::uniform3(-50.0f64..0.0), shift in -300.0f64..300.0) {
        let base = Vector3::from(l);
        let (a, _) = mix_probabilities(&p, &default_transition(), &base);
        let (b, _) = mix_probabilities(&p, &default_transition(), &base.add_scalar(shift));
        prop_assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn imm_steps_keep_simplex_and_psd_covariances(
        heading in -3.1f64..3.1,
        start in prop::collection::vec((-3.1f64..3.1, 5.0f64..200.0, -20.0f64..20.0), 4),
        drift in prop::collection::vec((-0.05f64..0.05, -2.0f64..2.0, -1.0f64..1.0), 20),
    ) {
        let frame = HeadingFrame::new(heading);
        let (theta0, d0, v0) = start[0];
        let mut s = ImmState::new(&observation(&frame, theta0, d0, v0), &imm_config()).unwrap();
        let (mut theta, mut d, mut v) = (theta0, d0, v0);
        for chunk in drift.chunks(4) {
            let block: Vec<_> = chunk
                .iter()
                .map(|&(dt, dd, dv)| {
                    theta = wrap_angle(theta + dt);
                    d = (d + dd).max(1.0);
                    v += dv;
                    observation(&frame, theta, d, v)
                })
                .collect();
            let (next, diag) = imm_step_block(&s, &block).unwrap();
            prop_assert!((next.probabilities.sum() - 1.0).abs() < 1e-12);
            for p in &diag.per_observation {
                prop_assert!((p.sum() - 1.0).abs() < 1e-12);
            }
            for cov in &next.covs {
                prop_assert!((cov - cov.transpose()).amax() == 0.0);
                prop_assert!(is_psd(cov));
            }
            s = next;
        }
    }

    #[test]
    fn kf_update_equals_sequential_scalar_updates(
        mean in prop::array::uniform4(-1.0f64..1.0),
        factor in prop::array::uniform16(-1.0f64..1.0),
        noise in prop::array::uniform4(0.01f64..2.0),
        offset in prop::array::uniform4(-0.5f64..0.5),
    ) {
        let mean = Vector4::new(mean[0] * 3.0, mean[1] * 0.5, 100.0 + 50.0 * mean[2], 10.0 * mean[3]);
        let l = Matrix4::from_row_slice(&factor);
        let cov = l * l.transpose() + Matrix4::identity() * 0.1;
        let r = Matrix4::from_diagonal(&Vector4::from(noise));
        let s = KfState::new(mean, cov, r * 0.1, r, DT);
        let z = mean + Vector4::from(offset);

        let joint = kf_update(&s, &z).unwrap();

        let mut x = s.mean;
        let mut p = s.cov;
        for j in 0..4 {
            let gain = p.column(j) / (p[(j, j)] + r[(j, j)]);
            let mut residual = z[j] - x[j];
            if j == 0 {
                residual = wrap_angle(residual);
            }
            x += gain * residual;
            p -= gain * p.row(j);
        }
        x[0] = wrap_angle(x[0]);
        prop_assert!((joint.mean - x).amax() < 1e-9, "{} vs {}", joint.mean, x);
        prop_assert!((joint.cov - p).amax() < 1e-9);
    }

    #[test]
    fn noiseless_right_turn_is_identified_quickly(speed in 10.0f64..20.0) {
        let mut scenario = synthetic::intersection(Maneuver::Right, speed);
        scenario.params.noise = NoiseConfig::noiseless();
        let p = scenario.params.clone();
        let route = &scenario.routes[0];
        let anchor = scenario.gnbs[0].position;
        let imm = TriggerConfig::probability(0).imm_config(&p.tracker, p.dt_s);
        let mut tracker = SensingTracker::new(anchor, p.noise, p.tracker.clone(), Some(imm), p.dt_s);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let corner_block = (route.corner_time(1) / p.dt_s).ceil() as u64;
        let mut identified = None;
        for l in 0..corner_block + 40 {
            let t = l as f64 * p.dt_s;
            let block: Vec<_> = (0..4u8)
                .map(|i| {
                    let truth = route.sample(t + f64::from(i) * 1.25e-3, p.turn_window_m).unwrap();
                    synthesize_measurement(&anchor, &truth, &p.noise, l, i + 1, &mut rng).unwrap()
                })
                .collect();
            tracker.process_block(&block).unwrap();
            if l >= corner_block && tracker.imm().map(|s| s.dominant()) == Some(Maneuver::Right) {
                identified = Some(l - corner_block);
                break;
            }
        }
        prop_assert!(matches!(identified, Some(k) if k <= 10), "identified after {identified:?} blocks");
    }
}
