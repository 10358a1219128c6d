use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2i_handover::geometry::{
    beam_gain, candidate_distance, cartesian_to_spherical, spherical_to_cartesian, steering_vector, SphericalObs,
    UpaGeometry,
};
use v2i_handover::Vec3;

fn random_point(rng: &mut ChaCha8Rng, half_width: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half_width..half_width),
        rng.random_range(-half_width..half_width),
        rng.random_range(-half_width..half_width),
    )
}

#[test]
fn round_trip_over_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let anchor = random_point(&mut rng, 500.0);
        let point = random_point(&mut rng, 500.0);
        if (point - anchor).norm() < 1e-3 {
            continue;
        }
        let obs = cartesian_to_spherical(&anchor, &point).unwrap();
        let back = spherical_to_cartesian(&anchor, &obs);
        worst = worst.max((back - point).norm());
        assert_relative_eq!(candidate_distance(&point, &anchor), obs.d, max_relative = 1e-12);
    }
    assert!(worst < 1e-9, "worst round-trip error {worst}");
}

#[test]
fn steering_vectors_are_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for geom in [UpaGeometry::new(1, 1), UpaGeometry::new(2, 2), UpaGeometry::new(4, 4), UpaGeometry::new(8, 2)] {
        for _ in 0..200 {
            let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let phi = rng.random_range(-1.5..1.5);
            let a = steering_vector(theta, phi, geom);
            assert_eq!(a.elements.len(), geom.elements());
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn beam_gain_peaks_at_array_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for geom in [UpaGeometry::new(2, 2), UpaGeometry::new(4, 4), UpaGeometry::new(8, 8)] {
        let n = geom.elements() as f64;
        for _ in 0..200 {
            let target = SphericalObs::direction(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
            assert_relative_eq!(beam_gain(geom, &target, &target), n, max_relative = 1e-12);
            let other = SphericalObs::direction(rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
            assert!(beam_gain(geom, &other, &target) <= n * (1.0 + 1e-12));
        }
    }
}
