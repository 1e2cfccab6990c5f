//! Closed-form states against direct integration of the no-jump equation.

use catkick_core::fock::FockVector;
use catkick_core::oracle::{self, Detector, Generator, JointState, DEFAULT_TOL, SINGLE_CAVITY, SINGLE_SOURCE};
use catkick_core::quad::adaptive_simpson;
use catkick_core::{MZParams, MachZehnder, ModelParams, SingleCavity, TwoPhoton, C64};

fn unit_kick(dim: usize) -> ModelParams {
    ModelParams::new(1.0, 2.0, 0.02, 0.02, dim).unwrap()
}

fn router_params() -> ModelParams {
    ModelParams::with_photons(2.0, 0.05, 0.02, 2).unwrap()
}

#[test]
fn cavity_branch_matches_oracle_at_t2() {
    let p = unit_kick(40);
    let (_, state) = oracle::single_no_jump_state(&p, 2.0, DEFAULT_TOL).unwrap();
    let phi1 = SingleCavity::new(p).unwrap().phi1(2.0);
    let dev = phi1.max_abs_diff(&state.mech_vector(SINGLE_CAVITY));
    assert!(dev < 1e-8, "{dev:e}");
}

#[test]
fn source_branch_decays_without_dressing() {
    let p = unit_kick(40);
    let (_, state) = oracle::single_no_jump_state(&p, 3.0, DEFAULT_TOL).unwrap();
    let expected = FockVector::vacuum(40).scaled(C64::new((-3.0f64).exp(), 0.0));
    assert!(state.mech_vector(SINGLE_SOURCE).max_abs_diff(&expected) < 1e-10);
}

#[test]
fn jump_output_matches_after_calibration() {
    let p = unit_kick(40);
    let (g, state) = oracle::single_no_jump_state(&p, 2.0, DEFAULT_TOL).unwrap();
    let jumped = oracle::apply_jump(&g, &state).unwrap();
    let cav = SingleCavity::new(p).unwrap();
    let (_, reference) = oracle::single_no_jump_state(&p, 1.0, DEFAULT_TOL).unwrap();
    let c = oracle::calibrate_prefactor(&cav.displaced_branch(1.0), &reference.mech_vector(SINGLE_CAVITY)).unwrap();
    let dev = jumped.max_abs_diff(&cav.with_prefactor(c).jump_state(2.0));
    assert!(dev < 1e-8, "{dev:e}");
}

#[test]
fn late_injection_propagator_matches_oracle() {
    let p = unit_kick(40);
    let g = Generator::single(&p).unwrap();
    let start = JointState::with_source_mechanics(&g, &FockVector::vacuum(40)).unwrap();
    let (end, _) = oracle::integrate_no_jump(&g, &start, 2.0, DEFAULT_TOL).unwrap();
    let k = SingleCavity::new(p).unwrap().propagator_k(3.0, 1.0).unwrap();
    let dev = k.apply(&FockVector::vacuum(40)).max_abs_diff(&end.mech_vector(SINGLE_CAVITY));
    assert!(dev < 1e-8, "{dev:e}");
}

#[test]
fn surviving_norm_is_one_minus_counted_probability() {
    let p = unit_kick(40);
    let cav = SingleCavity::new(p).unwrap();
    for t in [1.0, 4.0, 9.0] {
        let (_, state) = oracle::single_no_jump_state(&p, t, DEFAULT_TOL).unwrap();
        let counted = adaptive_simpson(|s| cav.count_rate_1(s).total, 0.0, t, 1e-12, 40);
        assert!((state.norm_sqr() - (1.0 - counted)).abs() < 1e-6, "t = {t}");
    }
}

/// Integrate in chunks, renormalizing between them so the absolute step
/// tolerance acts as a relative one on a state decaying like `e^{-t}`.
/// Returns the unit-norm state and the accumulated scale.
fn integrate_rescaled(g: &Generator, t: f64, chunk: f64, tol: f64) -> (JointState, f64) {
    let mut state = JointState::single_photon_in_source(g);
    let (mut done, mut scale) = (0.0, 1.0);
    while done < t {
        let dt = chunk.min(t - done);
        state = oracle::integrate_no_jump(g, &state, done + dt, tol).unwrap().0;
        let n = state.norm_sqr().sqrt();
        for b in 0..g.photonic_dim() {
            state.block_mut(b).iter_mut().for_each(|z| *z /= n);
        }
        scale *= n;
        done += dt;
    }
    (state, scale)
}

#[test]
fn interferometer_state_matches_oracle_at_half_period() {
    let p = unit_kick(32);
    // At 24 levels the truncated b + b_dag in the oracle is off by ~4e-6 relative.
    let mz = MachZehnder::new(MZParams::identical(p).unwrap()).unwrap();
    let g = Generator::mach_zehnder(mz.params()).unwrap();
    let t = 0.5 * p.mech_period();
    let analytic = mz.mz_conditional_state(t).to_dense();

    let (state, _) = oracle::integrate_no_jump(&g, &JointState::single_photon_in_source(&g), t, DEFAULT_TOL).unwrap();
    let direct = oracle::apply_jump_mz(&g, &state, Detector::D1).unwrap().to_dense();
    assert!((&direct - &analytic).camax() < 1e-8);

    // Amplitudes are ~1e-34 here, so the absolute check above is weak; redo it relative.
    let (state, scale) = integrate_rescaled(&g, t, 4.0, 1e-11);
    let direct = oracle::apply_jump_mz(&g, &state, Detector::D1).unwrap().to_dense() * C64::new(scale, 0.0);
    let dev = (direct - &analytic).camax() / analytic.camax();
    assert!(dev < 1e-8, "relative {dev:e}");
}

#[test]
fn interferometer_rates_match_oracle() {
    let p = unit_kick(20);
    let mz = MachZehnder::new(MZParams::identical(p).unwrap()).unwrap();
    let g = Generator::mach_zehnder(mz.params()).unwrap();
    let mut state = JointState::single_photon_in_source(&g);
    for t in [0.5, 2.0, 5.0] {
        state = oracle::integrate_no_jump(&g, &state, t, DEFAULT_TOL).unwrap().0;
        let d1 = oracle::apply_jump_mz(&g, &state, Detector::D1).unwrap();
        let d2 = oracle::apply_jump_mz(&g, &state, Detector::D2).unwrap();
        assert!((d1.norm_sqr() - mz.d1_rate(t)).abs() < 1e-8, "D1 at t = {t}");
        let analytic_d2 = mz.d2_conditional_state(t).to_dense();
        assert!((d2.to_dense() - analytic_d2).camax() < 1e-8, "D2 at t = {t}");
    }
}

#[test]
fn uncoupled_interferometer_is_dark_at_d2() {
    let p = ModelParams::new(1.0, 2.0, 0.0, 0.02, 6).unwrap();
    let g = Generator::mach_zehnder(&MZParams::identical(p).unwrap()).unwrap();
    let mut state = JointState::single_photon_in_source(&g);
    for t in [0.3, 1.0, 4.0] {
        state = oracle::integrate_no_jump(&g, &state, t, DEFAULT_TOL).unwrap().0;
        assert!(oracle::apply_jump_mz(&g, &state, Detector::D2).unwrap().norm_sqr() < 1e-12);
    }
}

#[test]
fn histories_match_two_stage_run_branch_by_branch() {
    let p = router_params();
    let h = TwoPhoton::new(p).unwrap().histories(2.0, 5.0, 1.0).unwrap();
    let [rr, rt, tr, tt] = oracle::two_photon_oracle_branches(&p, 2.0, 5.0, 1.0, DEFAULT_TOL).unwrap();
    for (name, a, b) in [("rr", &h.rr, &rr), ("rt", &h.rt, &rt), ("tr", &h.tr, &tr), ("tt", &h.tt, &tt)] {
        let dev = a.max_abs_diff(b);
        assert!(dev < 1e-7, "{name}: {dev:e}");
    }
}

#[test]
fn second_rate_matches_two_stage_run() {
    let p = router_params();
    let tp = TwoPhoton::new(p).unwrap();
    let tm = p.mech_period();
    for (t_d, tau) in [(0.0, 0.5), (0.25 * tm, 3.0), (0.5 * tm, 7.0), (1.3 * tm, 1.0)] {
        let analytic = tp.rate_2(2.0, t_d, tau, false).unwrap();
        let direct = oracle::two_photon_oracle(&p, 2.0, t_d, tau, DEFAULT_TOL).unwrap();
        assert!((analytic.total - direct.rate).abs() < 1e-6, "t_d = {t_d}, tau = {tau}");
    }
}

#[test]
fn uncoupled_second_rate_ignores_delay() {
    let p = ModelParams::new(1.0, 2.0, 0.0, 0.02, 4).unwrap();
    let rates: Vec<f64> = [0.0, 50.0, 200.0, 600.0]
        .iter()
        .map(|&t_d| oracle::two_photon_oracle(&p, 2.0, t_d, 1.5, DEFAULT_TOL).unwrap().rate)
        .collect();
    let spread = rates.iter().cloned().fold(f64::MIN, f64::max) - rates.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-9 * rates[0], "{rates:?}");
}

#[test]
fn immediate_second_photon_matches_small_tau_limit() {
    let p = router_params();
    let tau = 1e-4;
    let analytic = TwoPhoton::new(p).unwrap().rate_2(2.0, 0.0, tau, false).unwrap().total;
    let direct = oracle::two_photon_oracle(&p, 2.0, 0.0, tau, DEFAULT_TOL).unwrap().rate;
    assert!((analytic - direct).abs() < 0.01 * direct);
}
