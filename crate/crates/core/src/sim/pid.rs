use crate::model::{Action, PidConfig};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Accumulated error integral (error units times seconds).
    pub integral: f64,
    pub prev_error: f64,
    pub initialized: bool,
}

/// Error as seen by the controller: `SP - PV` for direct action, `PV - SP`
/// for reverse action.
pub fn control_error(cfg: &PidConfig, pv: f64) -> f64 {
    match cfg.action {
        Action::Direct => cfg.sp - pv,
        Action::Reverse => pv - cfg.sp,
    }
}

/// One controller update with rectangle-rule integration and conditional
/// integration anti-windup: the integral is frozen whenever the unclamped
/// output is beyond a limit and integrating would push it further out.
pub fn pid_step(cfg: &PidConfig, st: &PidState, pv: f64, dt: f64) -> (f64, PidState) {
    let e = control_error(cfg, pv);
    let derivative = if st.initialized {
        (e - st.prev_error) / dt
    } else {
        0.0
    };
    let raw_with = |integral: f64| cfg.kp * e + cfg.ki * integral + cfg.kd * derivative;

    let mut integral = st.integral + e * dt;
    let mut raw = raw_with(integral);
    let push = cfg.ki * e;
    if (raw > cfg.out_max && push > 0.0) || (raw < cfg.out_min && push < 0.0) {
        integral = st.integral;
        raw = raw_with(integral);
    }

    let out = raw.clamp(cfg.out_min, cfg.out_max);
    (
        out,
        PidState {
            integral,
            prev_error: e,
            initialized: true,
        },
    )
}
