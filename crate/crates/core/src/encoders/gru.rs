//! GRU cell with reset gate `r` and update gate `u`:
//!
//! ```text
//! r = σ(W_vr v + W_hr h + b_r)      u = σ(W_vu v + W_hu h + b_u)
//! c = W_vc v + W_hc (r ⊙ h) + b_c   h' = u ⊙ h + (1 − u) ⊙ φ(c)
//! ```

use alloc::format;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lstm::GateParams;
use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GruGates {
    pub reset: Var,
    pub update: Var,
    pub candidate: Var,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub reset_gate: GateParams,
    pub update_gate: GateParams,
    pub candidate: GateParams,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::precondition("GRU dimensions must be positive"));
        }
        let mut gate = |g: &str| GateParams::new(store, &format!("{name}.{g}"), input_dim, hidden_dim, rng);
        Ok(Self {
            input_dim,
            hidden_dim,
            reset_gate: gate("r"),
            update_gate: gate("u"),
            candidate: gate("c"),
        })
    }

    pub fn zero_state(&self, tape: &mut Tape<'_>) -> Result<Var> {
        tape.zeros(self.hidden_dim)
    }

    pub fn step(&self, tape: &mut Tape<'_>, v: Var, h: Var) -> Result<Var> {
        self.step_with_gates(tape, v, h).map(|(h, _)| h)
    }

    pub fn step_with_gates(&self, tape: &mut Tape<'_>, v: Var, h: Var) -> Result<(Var, GruGates)> {
        if tape.shape(v) != [self.input_dim] {
            return Err(Error::shape("gru_step input", &[self.input_dim], tape.shape(v)));
        }
        if tape.shape(h) != [self.hidden_dim] {
            return Err(Error::shape("gru_step state", &[self.hidden_dim], tape.shape(h)));
        }
        let r = self.reset_gate.pre_activation(tape, v, h)?;
        let r = tape.sigmoid(r)?;
        let u = self.update_gate.pre_activation(tape, v, h)?;
        let u = tape.sigmoid(u)?;
        let reset_h = tape.mul(r, h)?;
        let c = self.candidate.pre_activation(tape, v, reset_h)?;

        let carried = tape.mul(u, h)?;
        let one_minus_u = tape.one_minus(u)?;
        let squashed = tape.tanh(c)?;
        let fresh = tape.mul(one_minus_u, squashed)?;
        let h_new = tape.add(carried, fresh)?;
        Ok((
            h_new,
            GruGates {
                reset: r,
                update: u,
                candidate: c,
            },
        ))
    }

    /// Unrolls over `inputs` from the zero state and returns the last hidden state.
    pub fn unroll(&self, tape: &mut Tape<'_>, inputs: &[Var]) -> Result<Var> {
        if inputs.is_empty() {
            return Err(Error::Empty("GRU input sequence"));
        }
        let mut h = self.zero_state(tape)?;
        for &v in inputs {
            h = self.step(tape, v, h)?;
        }
        Ok(h)
    }
}
