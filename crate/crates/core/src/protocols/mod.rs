//! Reservoir protocols: fully restarting (FRP), memory restricted (MRP),
//! weak measurement (WMP), and dissipative (DSP).
//!
//! All four drive a small spin network with a scalar input sequence in
//! `[-1, 1]` and record time-multiplexed `<sigma_z^(i)>` readouts at
//! `tau_k = k T / N_V` within each clock cycle, producing a trace with
//! `N_S * N_V` columns per input step (column `k * N_S + i` holds site `i`
//! at sub-time `k`).

mod dissipative;
mod reset;

pub use dissipative::{drive_amplitude, dsp_steps_per_cycle, lindblad_rhs, run_dsp};
pub use reset::{backaction_matrix, run_frp, run_mrp, run_wmp};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::DrivenTfimSpec;
use crate::quantum::{CMatrix, DensityMatrix};

/// Clock cycle of length `cycle_time` with `n_virtual` equally spaced
/// readouts per cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub cycle_time: f64,
    pub n_virtual: usize,
}

impl ClockConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cycle_time > 0.0) || !self.cycle_time.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cycle_time must be positive and finite, got {}",
                self.cycle_time
            )));
        }
        if self.n_virtual == 0 {
            return Err(Error::InvalidConfig("n_virtual must be at least 1".into()));
        }
        Ok(())
    }

    /// Sub-cycle readout interval `T / N_V`.
    pub fn readout_interval(&self) -> f64 {
        self.cycle_time / self.n_virtual as f64
    }
}

fn default_steps_per_cycle() -> usize {
    200
}

/// Protocol selector with per-protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum ProtocolKind {
    /// Continuously evolving reservoir; the input qubit is replaced each cycle.
    Frp,
    /// Restarted every step from the initial state, re-injecting the last
    /// `reset_length` inputs.
    Mrp { reset_length: usize },
    /// FRP plus elementwise weak-measurement back-action of strength `angle`.
    Wmp {
        angle: f64,
        /// Apply the back-action at every sub-readout instead of once per cycle.
        #[serde(default)]
        backaction_per_subreadout: bool,
    },
    /// Lindblad dynamics with uniform decay `gamma`; the input enters as the
    /// amplitude of a `sigma_y` drive on the input site. `steps_per_cycle`
    /// caps the integrator step at `T / steps_per_cycle`; in the stiff regime
    /// (large `gamma`) the count is raised automatically to keep fixed-step
    /// RK4 stable.
    Dsp {
        gamma: f64,
        #[serde(default = "default_steps_per_cycle")]
        steps_per_cycle: usize,
    },
}

/// Full protocol configuration shared by all runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(flatten)]
    pub kind: ProtocolKind,
    pub clock: ClockConfig,
    /// Leading steps whose rows are discarded.
    pub washout: usize,
    /// Validate the density matrix at every sub-readout, not just at cycle
    /// ends (slower; used by the invariant suite).
    #[serde(default)]
    pub validate_substates: bool,
}

/// Reservoir substrate handed to `run_protocol`: a prebuilt static
/// Hamiltonian for the unitary protocols, or the driven spec plus couplings
/// for DSP.
#[derive(Debug, Clone)]
pub enum ReservoirHamiltonian {
    Static(CMatrix),
    Driven {
        spec: DrivenTfimSpec,
        couplings: Vec<f64>,
    },
}

impl ReservoirHamiltonian {
    pub fn n_sites(&self) -> Result<usize> {
        match self {
            Self::Static(h) => {
                let dim = h.nrows();
                if dim == 0 || !dim.is_power_of_two() || h.ncols() != dim {
                    return Err(Error::InvalidConfig(format!(
                        "static Hamiltonian must be square with power-of-two dimension, got {}x{}",
                        h.nrows(),
                        h.ncols()
                    )));
                }
                Ok(dim.trailing_zeros() as usize)
            }
            Self::Driven { spec, .. } => Ok(spec.n_sites),
        }
    }
}

/// Row-major matrix of multiplexed readouts, one row per retained input step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutTrace {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl ReadoutTrace {
    pub fn with_capacity(n_cols: usize, rows_hint: usize) -> Self {
        Self {
            n_rows: 0,
            n_cols,
            data: Vec::with_capacity(n_cols * rows_hint),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_cols, "row length mismatch");
        self.data.extend_from_slice(row);
        self.n_rows += 1;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rows `[start, end)` as a new trace.
    pub fn slice_rows(&self, start: usize, end: usize) -> ReadoutTrace {
        assert!(start <= end && end <= self.n_rows);
        ReadoutTrace {
            n_rows: end - start,
            n_cols: self.n_cols,
            data: self.data[start * self.n_cols..end * self.n_cols].to_vec(),
        }
    }

    /// Maximum elementwise difference against another trace of equal shape.
    pub fn max_abs_diff(&self, other: &ReadoutTrace) -> Result<f64> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::LengthMismatch {
                context: "trace comparison",
                left: self.data.len(),
                right: other.data.len(),
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

/// Validates an input sequence: nonempty, finite, inside `[-1, 1]`.
pub fn validate_inputs(inputs: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Empty { what: "input sequence" });
    }
    for &u in inputs {
        if !u.is_finite() || !(-1.0..=1.0).contains(&u) {
            return Err(Error::InputOutOfRange { value: u });
        }
    }
    Ok(())
}

/// Runs the configured protocol from the all-up product state.
pub fn run_protocol(
    config: &ProtocolConfig,
    ham: &ReservoirHamiltonian,
    inputs: &[f64],
) -> Result<ReadoutTrace> {
    let initial = DensityMatrix::ground_state(ham.n_sites()?);
    run_protocol_from(config, ham, inputs, &initial)
}

/// Runs the configured protocol from an explicit initial state.
pub fn run_protocol_from(
    config: &ProtocolConfig,
    ham: &ReservoirHamiltonian,
    inputs: &[f64],
    initial: &DensityMatrix,
) -> Result<ReadoutTrace> {
    config.clock.validate()?;
    validate_inputs(inputs)?;
    let n_sites = ham.n_sites()?;
    if initial.dim() != (1usize << n_sites) {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: 1usize << n_sites,
            got: initial.dim(),
        });
    }
    if config.washout >= inputs.len() {
        return Err(Error::InvalidConfig(format!(
            "washout {} leaves no recorded steps for {} inputs",
            config.washout,
            inputs.len()
        )));
    }
    match (&config.kind, ham) {
        (ProtocolKind::Frp, ReservoirHamiltonian::Static(h)) => {
            run_frp(h, config, inputs, initial)
        }
        (ProtocolKind::Mrp { reset_length }, ReservoirHamiltonian::Static(h)) => {
            run_mrp(h, config, *reset_length, inputs, initial)
        }
        (
            ProtocolKind::Wmp {
                angle,
                backaction_per_subreadout,
            },
            ReservoirHamiltonian::Static(h),
        ) => run_wmp(h, config, *angle, *backaction_per_subreadout, inputs, initial),
        (
            ProtocolKind::Dsp {
                gamma,
                steps_per_cycle,
            },
            ReservoirHamiltonian::Driven { spec, couplings },
        ) => run_dsp(
            spec,
            couplings,
            *gamma,
            *steps_per_cycle,
            config,
            inputs,
            initial,
        ),
        (kind, _) => Err(Error::InvalidConfig(format!(
            "protocol {kind:?} is incompatible with the supplied Hamiltonian variant"
        ))),
    }
}
