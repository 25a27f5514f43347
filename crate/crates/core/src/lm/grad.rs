//! Losses and their exact gradients for [`Seq2Seq`].

use super::{EncodedContext, Seq2Seq};
use crate::corpus::{StrategyLabel, TrainingExample};
use crate::error::{Error, Result};
use crate::nn::{log_softmax, LstmStackCache, LstmState, Parameters};
use crate::scalar::Scalar;

/// What a training step optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Generation cross-entropy only.
    Generation,
    /// Generation plus `alpha` times the strategy cross-entropy.
    Joint { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub lm: f64,
    pub strategy: f64,
    /// The optimized quantity under the objective used.
    pub total: f64,
}

pub(crate) struct EncoderTrace<S> {
    fwd: LstmStackCache<S>,
    bwd: LstmStackCache<S>,
}

pub(crate) fn encode_traced<S: Scalar>(
    model: &Seq2Seq<S>,
    ids: &[u32],
) -> (EncodedContext<S>, EncoderTrace<S>) {
    let n = ids.len();
    let embedded = model.embed_all(ids);
    let (fwd_out, _, fwd) = model
        .encoder_fwd
        .forward(&embedded, &model.encoder_fwd.zero_states());
    let reversed: Vec<Vec<S>> = embedded.iter().rev().cloned().collect();
    let (bwd_out, _, bwd) = model
        .encoder_bwd
        .forward(&reversed, &model.encoder_bwd.zero_states());
    let positions = (0..n)
        .map(|t| [fwd_out[t].as_slice(), bwd_out[n - 1 - t].as_slice()].concat())
        .collect();
    let summary = [fwd_out[n - 1].as_slice(), bwd_out[n - 1].as_slice()].concat();
    (
        EncodedContext { positions, summary },
        EncoderTrace { fwd, bwd },
    )
}

fn one_hot_residual<S: Scalar>(log_probs: &[S], gold: usize, scale: S) -> Vec<S> {
    log_probs
        .iter()
        .enumerate()
        .map(|(i, &lp)| {
            let p = lp.exp();
            scale * if i == gold { p - S::one() } else { p }
        })
        .collect()
}

impl<S: Scalar> Seq2Seq<S> {
    fn check_example(&self, example: &TrainingExample) -> Result<()> {
        self.check_input(&example.input)?;
        self.check_tokens(example.target.ids())?;
        if example.target.len() < 2 {
            return Err(Error::InvalidInput(
                "target needs a strategy marker and at least one token".into(),
            ));
        }
        if example.gold_strategy.index() >= self.config.strategy_count {
            return Err(Error::InvalidInput("gold strategy out of range".into()));
        }
        Ok(())
    }

    /// `-sum_t ln p(target[t] | target[..t], context)` over every target
    /// position after the marker.
    pub fn lm_loss(&self, example: &TrainingExample) -> Result<f64> {
        Ok(self.losses(example, Objective::Generation)?.lm)
    }

    /// `-ln p(gold | cls)` under the strategy head.
    pub fn strategy_loss(&self, ctx: &EncodedContext<S>, gold: StrategyLabel) -> f64 {
        let lp = log_softmax(&self.strategy_head.forward(ctx.cls_vector()));
        -lp[gold.index()].as_f64()
    }

    /// `lm_loss + alpha * strategy_loss`.
    pub fn joint_loss(&self, example: &TrainingExample, alpha: f64) -> Result<f64> {
        Ok(self.losses(example, Objective::Joint { alpha })?.total)
    }

    pub fn losses(&self, example: &TrainingExample, objective: Objective) -> Result<LossParts> {
        Ok(self.run(example, objective, false)?.0)
    }

    /// Loss parts and the gradient of `total` with respect to every parameter.
    pub fn loss_and_gradient(
        &self,
        example: &TrainingExample,
        objective: Objective,
    ) -> Result<(LossParts, Seq2Seq<S>)> {
        let (parts, grad) = self.run(example, objective, true)?;
        Ok((parts, grad.expect("gradient requested")))
    }

    fn run(
        &self,
        example: &TrainingExample,
        objective: Objective,
        want_grad: bool,
    ) -> Result<(LossParts, Option<Seq2Seq<S>>)> {
        self.check_example(example)?;
        if let Objective::Joint { alpha } = objective {
            if alpha.is_nan() || alpha < 0.0 {
                return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
            }
        }
        let hd = self.config.hidden_dim;
        let ids = example.input.ids();
        let n = ids.len();
        let (ctx, enc) = encode_traced(self, ids);

        let h0 = self.initial_hidden(ctx.summary());
        let init: Vec<LstmState<S>> = h0
            .chunks(hd)
            .map(|c| LstmState {
                h: c.to_vec(),
                c: vec![S::zero(); hd],
            })
            .collect();
        let target = example.target.ids();
        let steps = target.len() - 1;
        let dec_inputs = self.embed_all(&target[..steps]);
        let (tops, _, dec_cache) = self.decoder.forward(&dec_inputs, &init);

        let mut grad = if want_grad {
            let mut g = self.clone();
            g.zero_all();
            Some(g)
        } else {
            None
        };

        let mut lm = S::zero();
        let mut d_tops = Vec::with_capacity(steps);
        for t in 0..steps {
            let (projected, logits) = self.vocab_logits(&tops[t]);
            let lp = log_softmax(&logits);
            let gold = target[t + 1] as usize;
            lm -= lp[gold];
            if let Some(g) = grad.as_mut() {
                let d_logits = one_hot_residual(&lp, gold, S::one());
                g.vocab_bias.add_vec(&d_logits);
                g.embedding.table.outer_acc(&d_logits, &projected);
                let mut d_proj = vec![S::zero(); projected.len()];
                self.embedding.table.matvec_t_acc(&d_logits, &mut d_proj);
                d_tops.push(self.output.backward(&tops[t], &d_proj, &mut g.output));
            }
        }

        let strategy_lp = log_softmax(&self.strategy_head.forward(ctx.cls_vector()));
        let gold_strategy = example.gold_strategy.index();
        let strategy = -strategy_lp[gold_strategy];
        let total = match objective {
            Objective::Generation => lm,
            Objective::Joint { alpha } => lm + S::of(alpha) * strategy,
        };
        let parts = LossParts {
            lm: lm.as_f64(),
            strategy: strategy.as_f64(),
            total: total.as_f64(),
        };

        let Some(mut g) = grad else {
            return Ok((parts, None));
        };

        let (d_dec_inputs, d_init) =
            self.decoder
                .backward(&dec_cache, &d_tops, None, &mut g.decoder);
        for (&id, d) in target[..steps].iter().zip(&d_dec_inputs) {
            g.embedding.accumulate(id, d);
        }

        let d_pre: Vec<S> = d_init
            .iter()
            .flat_map(|s| s.h.iter().copied())
            .zip(&h0)
            .map(|(dh, &h)| dh * (S::one() - h * h))
            .collect();
        let d_summary = self.bridge.backward(ctx.summary(), &d_pre, &mut g.bridge);

        let mut d_fwd = vec![vec![S::zero(); hd]; n];
        let mut d_bwd = vec![vec![S::zero(); hd]; n];
        add(&mut d_fwd[n - 1], &d_summary[..hd]);
        add(&mut d_bwd[n - 1], &d_summary[hd..]);

        if let Objective::Joint { alpha } = objective {
            let d_logits = one_hot_residual(&strategy_lp, gold_strategy, S::of(alpha));
            let d_cls =
                self.strategy_head
                    .backward(ctx.cls_vector(), &d_logits, &mut g.strategy_head);
            add(&mut d_fwd[0], &d_cls[..hd]);
            // position 0 is the last step of the backward-direction run
            add(&mut d_bwd[n - 1], &d_cls[hd..]);
        }

        let (d_emb_fwd, _) = self
            .encoder_fwd
            .backward(&enc.fwd, &d_fwd, None, &mut g.encoder_fwd);
        let (d_emb_bwd, _) = self
            .encoder_bwd
            .backward(&enc.bwd, &d_bwd, None, &mut g.encoder_bwd);
        for t in 0..n {
            g.embedding.accumulate(ids[t], &d_emb_fwd[t]);
            g.embedding.accumulate(ids[t], &d_emb_bwd[n - 1 - t]);
        }
        Ok((parts, Some(g)))
    }
}

fn add<S: Scalar>(acc: &mut [S], v: &[S]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
