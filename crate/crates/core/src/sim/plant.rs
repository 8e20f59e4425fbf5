use serde::{Deserialize, Serialize};

/// Tank-pump plant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams {
    /// Inflow gain, %/s per % of valve opening.
    pub k_in: f64,
    /// Pump outflow while running, %/s.
    pub q_out: f64,
    /// Discharge pressure of a running pump with a clear pipe, bar.
    pub p_base: f64,
    /// Extra discharge pressure per unit of blockage, bar.
    pub k_block: f64,
    /// Discharge pipe blockage in [0, 1].
    pub blockage: f64,
    /// Fail-open inlet valve: a command of 0% opens it fully.
    #[serde(default)]
    pub fail_open: bool,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            k_in: 0.02,
            q_out: 1.0,
            p_base: 2.0,
            k_block: 4.0,
            blockage: 0.0,
            fail_open: false,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("k_in", self.k_in),
            ("q_out", self.q_out),
            ("p_base", self.p_base),
            ("k_block", self.k_block),
            ("blockage", self.blockage),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.blockage > 1.0 {
            return Err(format!("blockage must be at most 1, got {}", self.blockage));
        }
        Ok(())
    }

    /// Physical valve opening, in %, for a valve command.
    pub fn opening(&self, command: f64) -> f64 {
        let c = command.clamp(0.0, 100.0);
        if self.fail_open {
            100.0 - c
        } else {
            c
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Tank level, % in [0, 100].
    pub level: f64,
    /// Pump discharge pressure, bar.
    pub pressure: f64,
    /// Inlet valve command, % in [0, 100].
    pub valve: f64,
    pub pump_on: bool,
}

impl PlantState {
    pub fn at_level(level: f64) -> Self {
        Self {
            level,
            pressure: 0.0,
            valve: 0.0,
            pump_on: true,
        }
    }
}

/// Explicit Euler step of the tank mass balance. Pressure follows the pump
/// state instantly.
pub fn plant_step(s: &PlantState, params: &PlantParams, dt: f64) -> PlantState {
    let inflow = params.k_in * params.opening(s.valve);
    let outflow = if s.pump_on { params.q_out } else { 0.0 };
    let level = (s.level + (inflow - outflow) * dt).clamp(0.0, 100.0);
    let pressure = if s.pump_on {
        params.p_base + params.k_block * params.blockage
    } else {
        0.0
    };
    PlantState {
        level,
        pressure,
        valve: s.valve,
        pump_on: s.pump_on,
    }
}
