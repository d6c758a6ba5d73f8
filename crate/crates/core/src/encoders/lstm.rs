//! LSTM cell:
//!
//! ```text
//! i = σ(W_vi v + W_hi h + b_i)      f = σ(W_vf v + W_hf h + b_f)
//! o = σ(W_vo v + W_ho h + b_o)      g = φ(W_vg v + W_hg h + b_g)
//! c' = f ⊙ c + i ⊙ g                h' = o ⊙ φ(c')
//! ```

use alloc::format;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{glorot_uniform, zeros_vector};
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, ParamStore};

/// Input weight, recurrent weight and bias of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub bias: ParamId,
}

impl GateParams {
    pub(crate) fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            w_input: store.add(format!("{name}.w_input"), glorot_uniform(rng, hidden_dim, input_dim)),
            w_hidden: store.add(format!("{name}.w_hidden"), glorot_uniform(rng, hidden_dim, hidden_dim)),
            bias: store.add(format!("{name}.bias"), zeros_vector(hidden_dim)),
        }
    }

    /// `W_v v + W_h h + b`
    pub(crate) fn pre_activation(&self, tape: &mut Tape<'_>, v: Var, h: Var) -> Result<Var> {
        let wv = tape.param(self.w_input);
        let wh = tape.param(self.w_hidden);
        let b = tape.param(self.bias);
        let a = tape.matvec(wv, v)?;
        let c = tape.matvec(wh, h)?;
        let s = tape.add(a, c)?;
        tape.add(s, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// Gate activations of one step, kept for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmGates {
    pub input: Var,
    pub forget: Var,
    pub output: Var,
    pub modulation: Var,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub input_gate: GateParams,
    pub forget_gate: GateParams,
    pub output_gate: GateParams,
    pub modulation_gate: GateParams,
}

impl LstmCell {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(Error::precondition("LSTM dimensions must be positive"));
        }
        let mut gate = |g: &str| GateParams::new(store, &format!("{name}.{g}"), input_dim, hidden_dim, rng);
        Ok(Self {
            input_dim,
            hidden_dim,
            input_gate: gate("i"),
            forget_gate: gate("f"),
            output_gate: gate("o"),
            modulation_gate: gate("g"),
        })
    }

    pub fn zero_state(&self, tape: &mut Tape<'_>) -> Result<LstmState> {
        Ok(LstmState {
            h: tape.zeros(self.hidden_dim)?,
            c: tape.zeros(self.hidden_dim)?,
        })
    }

    pub fn step(&self, tape: &mut Tape<'_>, v: Var, state: LstmState) -> Result<LstmState> {
        self.step_with_gates(tape, v, state).map(|(s, _)| s)
    }

    pub fn step_with_gates(&self, tape: &mut Tape<'_>, v: Var, state: LstmState) -> Result<(LstmState, LstmGates)> {
        if tape.shape(v) != [self.input_dim] {
            return Err(Error::shape("lstm_step input", &[self.input_dim], tape.shape(v)));
        }
        for s in [state.h, state.c] {
            if tape.shape(s) != [self.hidden_dim] {
                return Err(Error::shape("lstm_step state", &[self.hidden_dim], tape.shape(s)));
            }
        }
        let i = self.input_gate.pre_activation(tape, v, state.h)?;
        let i = tape.sigmoid(i)?;
        let f = self.forget_gate.pre_activation(tape, v, state.h)?;
        let f = tape.sigmoid(f)?;
        let o = self.output_gate.pre_activation(tape, v, state.h)?;
        let o = tape.sigmoid(o)?;
        let g = self.modulation_gate.pre_activation(tape, v, state.h)?;
        let g = tape.tanh(g)?;

        let keep = tape.mul(f, state.c)?;
        let write = tape.mul(i, g)?;
        let c = tape.add(keep, write)?;
        let squashed = tape.tanh(c)?;
        let h = tape.mul(o, squashed)?;
        Ok((
            LstmState { h, c },
            LstmGates {
                input: i,
                forget: f,
                output: o,
                modulation: g,
            },
        ))
    }

    /// Unrolls over `inputs` from the zero state and returns the last state.
    pub fn unroll(&self, tape: &mut Tape<'_>, inputs: &[Var]) -> Result<LstmState> {
        if inputs.is_empty() {
            return Err(Error::Empty("LSTM input sequence"));
        }
        let mut state = self.zero_state(tape)?;
        for &v in inputs {
            state = self.step(tape, v, state)?;
        }
        Ok(state)
    }
}
