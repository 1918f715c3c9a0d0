//! Numerical confirmation that a transformation maps solutions onto
//! solutions.

mod correspondence;
mod target;

pub use correspondence::{
    second_derivative_residual, verify_field_transform, verify_field_transform_with_target, verify_linearisation,
    CorrespondenceReport, EmbeddedTrajectories, SampleTable, TargetField, Verdict, VerifyOptions, DEFAULT_SAMPLES,
    STENCIL_FRACTION,
};
pub use target::{solve_linear_target, Homogeneous, LinearTarget, Particular};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::fixtures;
    use crate::sode1d::{linearize, linearize_split, QuadraticSode};

    fn cfg_at(x0: f64) -> RunConfig {
        RunConfig::default().with_base_point(x0)
    }

    fn opts(tol: f64) -> VerifyOptions {
        VerifyOptions::new(tol, &RunConfig::default())
    }

    #[test]
    fn free_particle_is_exact() {
        let d = crate::Interval::new(-5.0, 5.0).unwrap();
        let s = QuadraticSode::parse("0", "0", "0", d, &[]).unwrap();
        let lin = linearize(&s, &RunConfig::default()).unwrap();
        assert!(lin.outcome.transform().unwrap().is_identity());
        let r = verify_linearisation(&s, &lin.outcome, 0.5, 1.0, 2.0, &opts(1e-12)).unwrap();
        assert!(r.passed());
        assert!(r.max_state_error <= 1e-14 && r.max_velocity_error <= 1e-14, "{r:?}");
    }

    #[test]
    fn ermakov_pinney_truncates_at_domain_exit() {
        let s = fixtures::ermakov_pinney(1.0).unwrap();
        let lin = linearize(&s, &cfg_at(1.0)).unwrap();
        let r = verify_linearisation(&s, &lin.outcome, 1.0, 0.0, 0.8, &opts(1e-6)).unwrap();
        assert!(r.passed(), "{} {}", r.max_state_error, r.max_velocity_error);
        // x(t)² = 1 − τ² with t = ∫√(1 − τ²)dτ reaches x = 0.3 at t ≈ 0.776
        assert!(r.truncation.is_some());
        assert!((r.covered_t_end - 0.776).abs() < 2e-3, "{}", r.covered_t_end);
        assert!(r.tau_crosscheck < 1e-8, "{}", r.tau_crosscheck);
    }

    #[test]
    fn nap_passes() {
        let s = fixtures::nap().unwrap();
        let lin = linearize(&s, &cfg_at(1.0)).unwrap();
        let r = verify_linearisation(&s, &lin.outcome, 1.0, 0.0, 2.0, &opts(1e-6)).unwrap();
        assert!(r.passed(), "{} {} {:?}", r.max_state_error, r.max_velocity_error, r.truncation);
        assert!(r.tau_crosscheck < 1e-8);
    }

    #[test]
    fn injected_h_error_is_detected() {
        let s = fixtures::ermakov_pinney(1.0).unwrap();
        let lin = linearize(&s, &cfg_at(1.0)).unwrap();
        let r = verify_linearisation(&s, &lin.outcome, 1.0, 0.0, 0.8, &opts(1e-6).with_h_scale(1.01)).unwrap();
        assert!(!r.passed());
        assert!(r.max_state_error >= 1e-3, "{}", r.max_state_error);
    }

    #[test]
    fn sphere_piece_passes() {
        let s = fixtures::sphere_geodesics().unwrap();
        let pieces = linearize_split(&s, &RunConfig::default()).unwrap();
        let lin = &pieces[0];
        let r = verify_linearisation(&s, &lin.outcome, 1.0, -0.5, 1.0, &opts(1e-6)).unwrap();
        assert!(r.passed(), "{} {} {:?}", r.max_state_error, r.max_velocity_error, r.truncation);
    }

    #[test]
    fn field_transform_soft_oscillator() {
        let g = fixtures::oscillator(1.0, crate::Interval::new(-3.0, 3.0).unwrap()).unwrap();
        let f = fixtures::soft_time_function(1).unwrap();
        let r = verify_field_transform(&g, &f, &[1.0], &[0.0], 2.0, &opts(1e-5).with_ivp_tol(1e-10)).unwrap();
        assert!(r.passed() && r.truncation.is_none(), "{r:?}");
        assert!(r.tau_crosscheck < 1e-8);
    }

    #[test]
    fn field_transform_unit_function_is_interpolation_exact() {
        let g = fixtures::oscillator_2d().unwrap();
        let one = crate::sodend::BasicFunction::constant(1.0, g.domain().to_vec()).unwrap();
        let r = verify_field_transform(&g, &one, &[1.0, 0.0], &[0.0, 1.0], 2.0, &opts(1e-9)).unwrap();
        assert!(r.max_state_error <= 1e-9 && r.max_velocity_error <= 1e-9, "{r:?}");
    }

    #[test]
    fn kepler_reduced_equation() {
        let (k, l) = (1.0, 1.0);
        let g = fixtures::kepler_radial(k, l).unwrap();
        let f = fixtures::kepler_time_function().unwrap();
        let e = fixtures::kepler_energy(k, l, 1.0, 0.3);
        let target = move |x: &[f64]| Ok(vec![2.0 * e * x[0] + k]);
        let r = verify_field_transform_with_target(&g, &f, &[1.0], &[0.3], 1.0, &opts(1e-5), Some(&target)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.target_residual.unwrap() <= 1e-4, "{:?}", r.target_residual);
    }

    #[test]
    fn csv_table_layout() {
        let s = fixtures::nap().unwrap();
        let lin = linearize(&s, &cfg_at(1.0)).unwrap();
        let mut o = opts(1e-6);
        o.samples = 5;
        o.embed_trajectories = true;
        let r = verify_linearisation(&s, &lin.outcome, 1.0, 0.0, 1.0, &o).unwrap();
        let csv = r.table.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "t,x,v,tau,y_mapped,w_mapped,y_closed_form,w_closed_form");
        assert_eq!(csv.lines().count(), 6);
        let emb = r.trajectories.as_ref().unwrap();
        assert!(emb.original.starts_with("t,x1,v1\n") && emb.transformed.starts_with("tau,y,w\n"));
        let json = r.to_json();
        assert_eq!(json["verdict"], "pass");
        assert!(json.get("table").is_none());
    }
}
