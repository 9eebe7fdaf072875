//! Tiny causal language decoder over a fused visual + text token sequence.
//!
//! Visual tokens are context only; the next-token cross-entropy is taken over
//! text positions. Generation is greedy argmax with ties broken by the lowest
//! token id, temperature-0 semantics throughout.

use crate::nn::{LayerNorm, Linear, PositionEmbedding, TransformerBlock};
use crate::numerics::{derive_seed, uniform_init, Graph, NodeId, ParamStore, Tensor};
use crate::NumericsError;

use super::PipelineError;

/// Default ceiling on generated tokens per request.
pub const DEFAULT_MAX_GENERATION_LEN: usize = 4096;

#[derive(Debug, Clone)]
pub struct DecoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    /// Longest supported sequence (visual + text positions).
    pub max_seq: usize,
}

impl DecoderConfig {
    pub fn toy(d_model: usize) -> Self {
        Self {
            vocab_size: super::text::VOCAB_SIZE,
            d_model,
            layers: 2,
            heads: 2,
            max_seq: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyOutput {
    pub ids: Vec<usize>,
    /// Set when generation stopped at the length cap instead of EOS.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct Decoder {
    pub config: DecoderConfig,
    prefix: String,
    token_embed_path: String,
    pos_embed: PositionEmbedding,
    blocks: Vec<TransformerBlock>,
    final_norm: LayerNorm,
    lm_head: Linear,
}

impl Decoder {
    pub fn new(prefix: impl Into<String>, config: DecoderConfig) -> Self {
        let prefix = prefix.into();
        Self {
            token_embed_path: format!("{prefix}.token_embed"),
            pos_embed: PositionEmbedding::new(
                format!("{prefix}.pos_embed"),
                config.max_seq,
                config.d_model,
            ),
            blocks: (0..config.layers)
                .map(|i| {
                    TransformerBlock::new(
                        &format!("{prefix}.block{i}"),
                        config.d_model,
                        config.heads,
                        true,
                    )
                })
                .collect(),
            final_norm: LayerNorm::new(format!("{prefix}.final_norm"), config.d_model),
            lm_head: Linear::new(format!("{prefix}.lm_head"), config.d_model, config.vocab_size),
            config,
            prefix,
        }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn register(&self, store: &mut ParamStore, seed: u64) -> Result<(), NumericsError> {
        let embed = uniform_init(
            &[self.config.vocab_size, self.config.d_model],
            0.02,
            derive_seed(seed, &self.token_embed_path),
        );
        store.insert(&self.token_embed_path, embed, true)?;
        self.pos_embed.register(store, seed)?;
        for block in &self.blocks {
            block.register(store, seed)?;
        }
        self.final_norm.register(store)?;
        self.lm_head.register(store, seed)
    }

    fn check_ids(&self, ids: &[usize]) -> Result<(), PipelineError> {
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(PipelineError::VocabOutOfRange {
                id: bad,
                vocab: self.config.vocab_size,
            });
        }
        Ok(())
    }

    /// Logits (T, vocab) over the concatenated [visual, text] sequence.
    /// `visual` may have zero rows.
    pub fn forward_logits(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        visual: Option<NodeId>,
        text_ids: &[usize],
    ) -> Result<NodeId, PipelineError> {
        self.check_ids(text_ids)?;
        let mut parts = Vec::new();
        if let Some(v) = visual {
            let shape = graph.value(v).shape().to_vec();
            if shape.len() != 2 || shape[1] != self.config.d_model {
                return Err(PipelineError::ShapeMismatch {
                    expected: format!("(T, {})", self.config.d_model),
                    got: shape,
                });
            }
            if shape[0] > 0 {
                parts.push(v);
            }
        }
        if !text_ids.is_empty() {
            let table = graph.param(store, &self.token_embed_path)?;
            parts.push(graph.embedding(table, text_ids));
        }
        if parts.is_empty() {
            return Err(PipelineError::EmptySequence);
        }
        let seq = if parts.len() == 1 {
            parts[0]
        } else {
            graph.concat_rows(&parts)
        };
        let total = graph.value(seq).rows();
        if total > self.config.max_seq {
            return Err(PipelineError::SequenceTooLong {
                len: total,
                max: self.config.max_seq,
            });
        }
        let mut x = self.pos_embed.forward(graph, store, seq)?;
        for block in &self.blocks {
            x = block.forward(graph, store, x)?;
        }
        let x = self.final_norm.forward(graph, store, x)?;
        Ok(self.lm_head.forward(graph, store, x)?)
    }

    /// Next-token cross-entropy over text positions only. The first text
    /// token is a target when visual context exists (its predictor is the
    /// last visual position); without visual context targets start at the
    /// second text token.
    pub fn decode_loss(
        &self,
        graph: &mut Graph,
        store: &ParamStore,
        visual: Option<NodeId>,
        text_ids: &[usize],
    ) -> Result<NodeId, PipelineError> {
        if text_ids.is_empty() {
            return Err(PipelineError::EmptyText);
        }
        let t_vis = visual.map_or(0, |v| graph.value(v).rows());
        let logits = self.forward_logits(graph, store, visual, text_ids)?;
        let mut targets = Vec::new();
        for (j, &id) in text_ids.iter().enumerate() {
            if t_vis == 0 && j == 0 {
                continue;
            }
            targets.push((t_vis + j - 1, id));
        }
        if targets.is_empty() {
            return Err(PipelineError::NoTargets);
        }
        Ok(graph.cross_entropy(logits, &targets))
    }

    /// Greedy decoding: argmax at each step, ties to the lowest token id,
    /// stopping at `eos_id` (included in the output) or after `max_len`
    /// generated tokens (truncated flag set).
    pub fn generate_greedy(
        &self,
        store: &ParamStore,
        visual: Option<&Tensor>,
        prompt_ids: &[usize],
        max_len: usize,
        eos_id: usize,
    ) -> Result<GreedyOutput, PipelineError> {
        assert!(max_len >= 1, "max_len must be >= 1");
        self.check_ids(prompt_ids)?;
        let mut ids = prompt_ids.to_vec();
        let mut generated = Vec::new();
        for _ in 0..max_len {
            let mut graph = Graph::new();
            let visual_node = visual.map(|v| graph.constant(v.clone()));
            let logits = self.forward_logits(&mut graph, store, visual_node, &ids)?;
            let values = graph.value(logits);
            let last = values.rows() - 1;
            let row = &values.data()[last * values.cols()..(last + 1) * values.cols()];
            let next = argmax_lowest_id(row);
            ids.push(next);
            generated.push(next);
            if next == eos_id {
                return Ok(GreedyOutput {
                    ids: generated,
                    truncated: false,
                });
            }
        }
        Ok(GreedyOutput {
            ids: generated,
            truncated: true,
        })
    }
}

/// Index of the maximum value; ties resolve to the lowest index.
pub fn argmax_lowest_id(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::text;

    fn toy_decoder(seed: u64) -> (Decoder, ParamStore) {
        let dec = Decoder::new("decoder", DecoderConfig::toy(8));
        let mut store = ParamStore::new();
        dec.register(&mut store, seed).unwrap();
        (dec, store)
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest_id(&[0.0, 1.0, 1.0]), 1);
        assert_eq!(argmax_lowest_id(&[2.0, 2.0, 2.0]), 0);
        assert_eq!(argmax_lowest_id(&[-1.0]), 0);
    }

    #[test]
    fn uniform_logit_loss_is_ln_vocab() {
        // zeroed parameters give all-equal logits
        let (dec, mut store) = toy_decoder(1);
        let paths = store.paths();
        for path in paths {
            let t = store.tensor_mut(&path).unwrap();
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        let mut graph = Graph::new();
        let text = text::encode_with_specials("hi");
        let loss = dec.decode_loss(&mut graph, &store, None, &text).unwrap();
        let expected = (text::VOCAB_SIZE as f64).ln();
        assert!((graph.value(loss).item() - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_visual_equals_text_only_loss() {
        let (dec, store) = toy_decoder(2);
        let text = text::encode_with_specials("spatial");
        let mut g1 = Graph::new();
        let empty = g1.constant(Tensor::zeros(&[0, 8]));
        let with_empty = dec.decode_loss(&mut g1, &store, Some(empty), &text).unwrap();
        let mut g2 = Graph::new();
        let text_only = dec.decode_loss(&mut g2, &store, None, &text).unwrap();
        assert_eq!(g1.value(with_empty).item(), g2.value(text_only).item());
    }

    #[test]
    fn loss_errors() {
        let (dec, store) = toy_decoder(3);
        let mut graph = Graph::new();
        assert!(matches!(
            dec.decode_loss(&mut graph, &store, None, &[]),
            Err(PipelineError::EmptyText)
        ));
        assert!(matches!(
            dec.decode_loss(&mut graph, &store, None, &[5]),
            Err(PipelineError::NoTargets)
        ));
        assert!(matches!(
            dec.decode_loss(&mut graph, &store, None, &[5, 999]),
            Err(PipelineError::VocabOutOfRange { id: 999, vocab: 258 })
        ));
    }

    #[test]
    fn greedy_is_deterministic() {
        let (dec, store) = toy_decoder(4);
        let prompt = text::encode("ab");
        let a = dec.generate_greedy(&store, None, &prompt, 8, text::EOS).unwrap();
        let b = dec.generate_greedy(&store, None, &prompt, 8, text::EOS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_max_len_one_sets_truncated() {
        let (dec, store) = toy_decoder(5);
        let out = dec
            .generate_greedy(&store, None, &[text::BOS], 1, text::EOS)
            .unwrap();
        assert_eq!(out.ids.len(), 1);
        assert_eq!(out.truncated, out.ids[0] != text::EOS);
    }

    #[test]
    fn rigged_decoder_spells_fixed_sequence() {
        // Zero attention and MLP weights turn each block into the identity,
        // so the logits depend only on the current token's embedding. With a
        // one-hot embedding table and a shift matrix as the LM head, greedy
        // decoding must spell 1, 2, 3 from prompt [0].
        let config = DecoderConfig {
            vocab_size: 4,
            d_model: 4,
            layers: 1,
            heads: 1,
            max_seq: 16,
        };
        let dec = Decoder::new("decoder", config);
        let mut store = ParamStore::new();
        dec.register(&mut store, 6).unwrap();
        for path in store.paths() {
            if path.contains("gamma") {
                continue; // keep layernorm scale at 1
            }
            let t = store.tensor_mut(&path).unwrap();
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
        {
            let embed = store.tensor_mut("decoder.token_embed").unwrap();
            for i in 0..4 {
                embed.set2(i, i, 1.0);
            }
        }
        {
            // lm_head: logit for token (d + 1) mod 4 reads dimension d
            let head = store.tensor_mut("decoder.lm_head.weight").unwrap();
            for d in 0..4 {
                head.set2(d, (d + 1) % 4, 1.0);
            }
        }
        let out = dec.generate_greedy(&store, None, &[0], 3, 3).unwrap();
        assert_eq!(out.ids, vec![1, 2, 3]);
        assert!(!out.truncated);
    }

    #[test]
    fn causality_suffix_perturbation_leaves_prefix_logits_bitwise() {
        let (dec, store) = toy_decoder(7);
        let visual = crate::numerics::uniform_init(&[6, 8], 0.5, 70);
        let text = text::encode("abcd");
        let logits_for = |vis: &Tensor| {
            let mut graph = Graph::new();
            let v = graph.constant(vis.clone());
            let l = dec.forward_logits(&mut graph, &store, Some(v), &text).unwrap();
            graph.value(l).clone()
        };
        let base = logits_for(&visual);
        // perturb visual token 4 (position 4); logits at positions <= 3 must not move
        let mut perturbed = visual.clone();
        perturbed.data_mut()[4 * 8 + 2] += 10.0;
        let after = logits_for(&perturbed);
        let v = base.cols();
        for pos in 0..4 {
            for j in 0..v {
                assert_eq!(
                    base.at2(pos, j).to_bits(),
                    after.at2(pos, j).to_bits(),
                    "pos {pos} logit {j}"
                );
            }
        }
        // and position 4 itself must change
        assert_ne!(base.at2(4, 0).to_bits(), after.at2(4, 0).to_bits());
    }
}
