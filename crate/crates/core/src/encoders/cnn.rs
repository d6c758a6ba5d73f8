//! Multi-view text CNN: view `k` convolves windows of `k` consecutive word
//! embeddings with `F` feature maps, the per-position outputs are aggregated
//! over time, and the views are concatenated.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lstm::LstmCell;
use crate::error::{Error, Result};
use crate::init::{glorot_uniform, zeros_vector};
use crate::tape::{Tape, Var};
use crate::tensor::{ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvActivation {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    SumPool,
    /// "CNN-RNN": an LSTM with `F` hidden units runs over each view's outputs.
    Rnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvView {
    pub width: usize,
    /// `F × (width · d)`
    pub kernel: ParamId,
    pub bias: ParamId,
    pub rnn: Option<LstmCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCnn {
    pub embed_dim: usize,
    pub feature_maps: usize,
    pub activation: ConvActivation,
    pub aggregation: Aggregation,
    pub views: Vec<ConvView>,
}

impl TextCnn {
    /// Views of widths `1..=num_views`.
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        embed_dim: usize,
        num_views: usize,
        feature_maps: usize,
        activation: ConvActivation,
        aggregation: Aggregation,
        rng: &mut R,
    ) -> Result<Self> {
        if num_views == 0 || feature_maps == 0 || embed_dim == 0 {
            return Err(Error::precondition(
                "CNN needs at least one view, one feature map and d > 0",
            ));
        }
        let mut views = Vec::with_capacity(num_views);
        for width in 1..=num_views {
            let kernel = store.add(
                format!("cnn.view{width}.kernel"),
                glorot_uniform(rng, feature_maps, width * embed_dim),
            );
            let bias = store.add(format!("cnn.view{width}.bias"), zeros_vector(feature_maps));
            let rnn = match aggregation {
                Aggregation::SumPool => None,
                Aggregation::Rnn => Some(LstmCell::new(
                    store,
                    &format!("cnn.view{width}.rnn"),
                    feature_maps,
                    feature_maps,
                    rng,
                )?),
            };
            views.push(ConvView {
                width,
                kernel,
                bias,
                rnn,
            });
        }
        Ok(Self {
            embed_dim,
            feature_maps,
            activation,
            aggregation,
            views,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.views.len() * self.feature_maps
    }

    /// Sequences shorter than a view's width are zero-padded at the end.
    pub fn encode(&self, tape: &mut Tape<'_>, embedded: &[Var]) -> Result<Var> {
        if embedded.is_empty() {
            return Err(Error::Empty("CNN input sequence"));
        }
        for &e in embedded {
            if tape.shape(e) != [self.embed_dim] {
                return Err(Error::shape("encode_cnn", &[self.embed_dim], tape.shape(e)));
            }
        }
        let mut pooled = Vec::with_capacity(self.views.len());
        for view in &self.views {
            let mut seq = embedded.to_vec();
            while seq.len() < view.width {
                seq.push(tape.zeros(self.embed_dim)?);
            }
            let kernel = tape.param(view.kernel);
            let bias = tape.param(view.bias);
            let mut outputs = Vec::with_capacity(seq.len() + 1 - view.width);
            for window in seq.windows(view.width) {
                let x = if view.width == 1 {
                    window[0]
                } else {
                    tape.concat(window)?
                };
                let pre = tape.linear(kernel, x, bias)?;
                outputs.push(match self.activation {
                    ConvActivation::Tanh => tape.tanh(pre)?,
                    ConvActivation::Linear => pre,
                });
            }
            pooled.push(match &view.rnn {
                None => super::sum_pool(tape, &outputs)?,
                Some(cell) => cell.unroll(tape, &outputs)?.h,
            });
        }
        if pooled.len() == 1 {
            Ok(pooled[0])
        } else {
            tape.concat(&pooled)
        }
    }
}
