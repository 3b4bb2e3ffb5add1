use crate::cvs::{self, CvsState, Drive, Hemodynamics};
use crate::error::{Error, Result};
use crate::params::CvsParameters;
use crate::pump::PumpParameters;

/// Internal integration step, s.
pub const DEFAULT_DT: f64 = 1e-4;
/// Rate of every measured signal, Hz.
pub const SAMPLE_RATE: f64 = 200.0;

/// Circulation + pump integrated at a fixed internal step and observed at
/// [`SAMPLE_RATE`].
#[derive(Debug, Clone)]
pub struct Simulator {
    pub params: CvsParameters,
    pub pump: PumpParameters,
    pub state: CvsState,
    pub beating: bool,
    dt: f64,
    steps_per_sample: u32,
    steps: u64,
    transferred: f64,
}

impl Simulator {
    pub fn new(params: CvsParameters, pump: PumpParameters, dt: f64) -> Result<Self> {
        params.validate()?;
        pump.validate()?;
        let ratio = 1.0 / (SAMPLE_RATE * dt);
        let steps_per_sample = ratio.round() as u32;
        if !(dt > 0.0 && dt <= 1e-3) || (ratio - steps_per_sample as f64).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "dt".into(),
                reason: format!("must be in (0, 1 ms] and divide the sample period (got {dt})"),
            });
        }
        let state = CvsState::initial(&params);
        Ok(Self {
            params,
            pump,
            state,
            beating: true,
            dt,
            steps_per_sample,
            steps: 0,
            transferred: 0.0,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Net volume added from the external reservoir so far, mL.
    pub fn transferred(&self) -> f64 {
        self.transferred
    }

    /// Σ volumes − (Vtotal + transfers), mL.
    pub fn conservation_error(&self) -> f64 {
        self.state.total_volume() - (self.params.v_total + self.transferred)
    }

    pub fn hemodynamics(&self) -> Hemodynamics {
        Hemodynamics::evaluate(&self.state, &self.params, self.beating)
    }

    /// Advance by one internal step.
    pub fn step(&mut self, speed: f64, transfer_rate: f64) -> Result<()> {
        let drive = Drive { speed, transfer_rate, beating: self.beating };
        self.state = cvs::step(&self.state, &self.params, &self.pump, &drive, self.dt).map_err(|e| match e {
            Error::NonFinite { what, .. } => Error::NonFinite { t: self.time(), what },
            other => other,
        })?;
        self.transferred += transfer_rate * self.dt;
        self.steps += 1;
        Ok(())
    }

    /// Advance to the next output sample with inputs held constant.
    pub fn advance_sample(&mut self, speed: f64, transfer_rate: f64) -> Result<()> {
        for _ in 0..self.steps_per_sample {
            self.step(speed, transfer_rate)?;
        }
        Ok(())
    }
}
