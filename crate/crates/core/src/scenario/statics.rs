use crate::dynamics::{self, LoadModel};
use crate::error::Fault;
use crate::params::ActuatorParams;

/// Largest static torque residual accepted from the solver, Nm.
pub const STATIC_RESIDUAL_TOL: f64 = 1e-10;

/// Rest angle of the load in parallel elastic mode with the equilibrium at
/// `q_eq`: the root of `k·(q − q_eq) − τ_ext(q)` bracketed by the deflection
/// range. Scripted loads are evaluated at the start of their table.
pub fn static_equilibrium_solve(params: &ActuatorParams, load: &LoadModel, q_eq: f64) -> Result<f64, Fault> {
    let t0 = match load {
        LoadModel::Scripted(table) => table.start(),
        _ => 0.0,
    };
    let residual = |q: f64| -> Result<f64, Fault> {
        Ok(params.stiffness * (q - q_eq) - dynamics::external_torque(load, q, t0)?)
    };

    let mut lo = q_eq - params.max_deflection;
    let mut hi = q_eq + params.max_deflection;
    let mut f_lo = residual(lo)?;
    let f_hi = residual(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Fault::NoStaticEquilibrium { q_eq });
    }

    let mut best = (f64::INFINITY, q_eq);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = residual(mid)?;
        if f_mid.abs() < best.0 {
            best = (f_mid.abs(), mid);
        }
        if f_mid == 0.0 {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > STATIC_RESIDUAL_TOL {
        return Err(Fault::NoStaticEquilibrium { q_eq });
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BarMount, Payload, Pendulum, TorqueTable};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn unloaded_rests_at_equilibrium() {
        let p = ActuatorParams::reference();
        let q = static_equilibrium_solve(&p, &LoadModel::None, 0.3).unwrap();
        assert!((q - 0.3).abs() < 1e-12);
    }

    #[test]
    fn constant_torque_load() {
        let p = ActuatorParams::reference();
        let load = LoadModel::Scripted(TorqueTable::new(vec![(0.0, -4.7), (10.0, -4.7)]).unwrap());
        let q = static_equilibrium_solve(&p, &load, -FRAC_PI_4).unwrap();
        assert!((q - (-FRAC_PI_4 - 4.7 / 21.0)).abs() < 1e-12);
        assert!((q + 1.0092).abs() < 1e-4);
    }

    #[test]
    fn overload_is_detected() {
        let p = ActuatorParams::reference();
        // Moment ≈ 441 Nm against at most 21·1.31 ≈ 27.5 Nm of spring torque.
        let heavy = Pendulum::bar(1.0, 0.5, BarMount::End).with_payload(Payload { mass: 90.0, lever: 0.5 });
        let r = static_equilibrium_solve(&p, &LoadModel::Gravity(heavy), 0.0);
        assert!(matches!(r, Err(Fault::NoStaticEquilibrium { .. })));
    }

    proptest! {
        #[test]
        fn residual_vanishes_at_solution(
            bar_mass in 0.0f64..2.0, payload in 0.0f64..3.0, lever in 0.0f64..0.4, q_eq in -1.2f64..1.2, k in 15.0f64..40.0,
        ) {
            let p = ActuatorParams { stiffness: k, ..ActuatorParams::reference() };
            let pendulum = Pendulum::bar(bar_mass, 0.61, BarMount::End).with_payload(Payload { mass: payload, lever });
            let load = LoadModel::Gravity(pendulum);
            prop_assume!(pendulum.moment() < k);
            let q = static_equilibrium_solve(&p, &load, q_eq).unwrap();
            let r = k * (q - q_eq) - dynamics::external_torque(&load, q, 0.0).unwrap();
            prop_assert!(r.abs() <= STATIC_RESIDUAL_TOL);
        }
    }
}
