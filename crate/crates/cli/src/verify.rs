//! Oracle cross-checks run by `spinreset verify`.

use num_complex::Complex64;
use spinreset::finite_size::{transition_prob_approx, transition_prob_exact, Approximation};
use spinreset::observables::{
    connected_correlation, lqu, protocol_one_correlation, protocol_two_mixture_correlation,
};
use spinreset::quad::QuadOptions;
use spinreset::renewal::{
    chopped_density_closed_form, exp_weighted_average, exp_weighted_average_series_quadrature,
    poisson_density_closed_form, stationary_state_p1, stationary_state_p2,
};
use spinreset::spin_dynamics::{free_pair_series, free_qubit_series, number_operator, Mat4};
use spinreset::trajectory_sim::run_ensemble;
use spinreset::{
    DriveParams, NSpins, ProtocolKind, QubitState, SimConfig, Spin, TwoQubitState, WaitingTime,
};

use crate::args::VerifyArgs;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, error: f64, tolerance: f64) -> Check {
    Check {
        name,
        passed: error <= tolerance,
        detail: format!("max error {error:.3e} (tolerance {tolerance:.1e})"),
    }
}

fn max_over<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn grid() -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for &omega in &[0.0, 0.3, 0.8, 1.0, 1.4, 2.0] {
        for &gamma in &[0.2, 0.5, 1.5] {
            g.push((omega, gamma));
        }
    }
    g
}

fn p(omega: f64) -> DriveParams {
    DriveParams::new(omega, 1.0).expect("valid drive")
}

fn poisson(gamma: f64) -> WaitingTime {
    WaitingTime::poisson(gamma).expect("valid rate")
}

fn density_routes() -> Check {
    let err = max_over(grid().into_iter().map(|(omega, gamma)| {
        let dist = poisson(gamma);
        let closed = poisson_density_closed_form(p(omega), gamma);
        let renewal = stationary_state_p1(p(omega), &dist).density;
        let series = free_qubit_series(p(omega), &QubitState::up());
        let quad = exp_weighted_average_series_quadrature(&dist, &series, QuadOptions::default())
            .map(|m| (number_operator() * m).trace().re)
            .unwrap_or(f64::NAN);
        let e = (closed - renewal).abs().max((closed - quad).abs());
        if e.is_nan() {
            f64::INFINITY
        } else {
            e
        }
    }));
    check("density: closed form vs renewal vs quadrature", err, 1e-8)
}

fn pair_routes() -> Check {
    let err = max_over(grid().into_iter().map(|(omega, gamma)| {
        let dist = poisson(gamma);
        let series = free_pair_series(p(omega), Spin::Up, Spin::Up);
        let closed = exp_weighted_average(&dist, &series);
        match exp_weighted_average_series_quadrature(&dist, &series, QuadOptions::default()) {
            Ok(q) => (closed - q).iter().map(|z| z.norm()).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        }
    }));
    check("pair state: series vs quadrature, 16 entries", err, 1e-8)
}

fn correlation_routes() -> Check {
    let err = max_over(grid().into_iter().map(|(omega, gamma)| {
        let st = stationary_state_p1(p(omega), &poisson(gamma));
        (connected_correlation(&st.pair) - protocol_one_correlation(p(omega), gamma)).abs()
    }));
    check(
        "unconditional correlation: closed form vs renewal",
        err,
        1e-10,
    )
}

fn mixture_routes() -> Check {
    let err = max_over([1.2, 1.5, 2.0, 3.0].into_iter().map(|omega| {
        match stationary_state_p2(p(omega), &poisson(0.5), NSpins::Thermodynamic) {
            Ok(st) => (connected_correlation(&st.pair)
                - protocol_two_mixture_correlation(p(omega), 0.5))
            .abs()
            .max((st.density - 0.5).abs()),
            Err(_) => f64::INFINITY,
        }
    }));
    check("two-state mixture: closed form vs renewal", err, 1e-10)
}

fn chopped_routes() -> Check {
    let mut err: f64 = 0.0;
    for gt in [1.0, 5.0, 20.0] {
        for (omega, gamma) in grid() {
            let dist = WaitingTime::chopped(gamma, gt / gamma).expect("valid law");
            let closed = chopped_density_closed_form(p(omega), gamma, gt / gamma);
            err = err.max((closed - stationary_state_p1(p(omega), &dist).density).abs());
        }
    }
    check("chopped law: closed form vs series", err, 1e-10)
}

fn chopped_limit() -> Check {
    let err = max_over(grid().into_iter().map(|(omega, gamma)| {
        (chopped_density_closed_form(p(omega), gamma, 40.0 / gamma)
            - poisson_density_closed_form(p(omega), gamma))
        .abs()
    }));
    check("chopped law at gamma t_max = 40 vs Poisson", err, 1e-6)
}

fn threshold_oracle() -> Check {
    let err = max_over((0..=90).map(|k| {
        let q = 0.05 + 0.01 * k as f64;
        match (
            transition_prob_exact(1001, q),
            transition_prob_approx(1001, q, Approximation::NormalErf),
        ) {
            (Ok(a), Ok(b)) => (a.value - b.value).abs(),
            _ => f64::INFINITY,
        }
    }));
    check("threshold probability: exact vs erf at N = 1001", err, 5e-3)
}

fn lqu_oracle() -> Check {
    let bell = Mat4::from_fn(|r, k| {
        let on = (r == 0 || r == 3) && (k == 0 || k == 3);
        Complex64::new(if on { 0.5 } else { 0.0 }, 0.0)
    });
    let bell = TwoQubitState::new(bell)
        .and_then(|s| lqu(&s))
        .map(|l| l.value);
    let product = lqu(&TwoQubitState::basis(Spin::Up, Spin::Down)).map(|l| l.value);
    let err = match (bell, product) {
        (Ok(b), Ok(pr)) => (b - 1.0).abs().max(pr.abs()),
        _ => f64::INFINITY,
    };
    check(
        "local quantum uncertainty: Bell and product states",
        err,
        1e-8,
    )
}

fn monte_carlo(args: &VerifyArgs) -> Check {
    let params = p(1.0);
    let config = SimConfig::new(
        ProtocolKind::UnconditionalReset,
        params,
        poisson(0.5),
        NSpins::Thermodynamic,
        30.0,
        args.trajectories,
        args.seed,
    );
    match run_ensemble(&config) {
        Ok(stats) => {
            let pt = stats.final_point();
            let zd =
                (pt.density - poisson_density_closed_form(params, 0.5)).abs() / pt.density_stderr;
            let zc = (pt.correlation - protocol_one_correlation(params, 0.5)).abs()
                / pt.correlation_stderr;
            let z = zd.max(zc);
            Check {
                name: "Monte Carlo density and correlation vs closed form",
                passed: z <= 4.0,
                detail: format!("largest deviation {z:.2} standard errors (tolerance 4)"),
            }
        }
        Err(e) => Check {
            name: "Monte Carlo density and correlation vs closed form",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_checks(args: &VerifyArgs) -> Vec<Check> {
    vec![
        density_routes(),
        pair_routes(),
        correlation_routes(),
        mixture_routes(),
        chopped_routes(),
        chopped_limit(),
        threshold_oracle(),
        lqu_oracle(),
        monte_carlo(args),
    ]
}
