//! Relation-aware encoder and three-class pointer decoder.

use kbqa_core::dataset::{DefaultSegmenter, QuestionRecord};
use kbqa_core::sparql::Iri;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::autograd::{Tape, Var};
use crate::config::{ConfigError, ModelConfig};
use crate::input::{build_input, EdgeType, EncoderInput, InputError, QuestionGraph, Segment};
use crate::params::ParamStore;
use crate::vocab::{InputVocab, OutputToken, OutputVocab, VocabError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("teacher-forced sequence of {got} steps for {want} targets")]
    LengthMismatch { got: usize, want: usize },
}

/// Dropout randomness; absent in evaluation mode.
pub struct Mode<'r> {
    rng: Option<&'r mut ChaCha8Rng>,
}

impl<'r> Mode<'r> {
    pub fn eval() -> Self {
        Mode { rng: None }
    }

    pub fn train(rng: &'r mut ChaCha8Rng) -> Self {
        Mode { rng: Some(rng) }
    }

    fn dropout(&mut self, tape: &mut Tape, v: Var, rate: f64) -> Var {
        let Some(rng) = self.rng.as_deref_mut() else { return v };
        if rate <= 0.0 {
            return v;
        }
        let keep = 1.0 - rate;
        let mask = Array2::from_shape_fn(tape.value(v).dim(), |_| if rng.gen_bool(keep) { 1.0 / keep } else { 0.0 });
        tape.mul_const(v, mask)
    }
}

/// A record prepared for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub input: EncoderInput,
    pub graph: QuestionGraph,
    pub entities: Vec<Iri>,
    pub relations: Vec<Iri>,
    /// Gold output sequence ending with the end marker; empty when unknown.
    pub target: Vec<OutputToken>,
}

/// Encoder output and the per-layer, per-head attention weights.
pub struct Encoded {
    pub h_enc: Var,
    pub alphas: Vec<Vec<Var>>,
}

/// Decoder-side views of an encoded example, fixed across steps.
pub struct Memory {
    /// `[h_enc; h_keyword] W_K^cb`
    pub keys: Var,
    /// `[h_enc; h_keyword] W_V^cb`
    pub values: Var,
    pub h_keyword: Var,
    pub h_entity: Var,
    pub h_relation: Var,
    /// Token representations `S` for every keyword, entity and relation.
    pub s_keyword: Var,
    pub s_entity: Var,
    pub s_relation: Var,
    pub n_keyword: usize,
    pub n_entity: usize,
    pub n_relation: usize,
}

impl Memory {
    pub fn n_outputs(&self) -> usize {
        self.n_keyword + self.n_entity + self.n_relation
    }

    /// Column of a token in the joint output distribution.
    pub fn column(&self, t: OutputToken) -> usize {
        match t {
            OutputToken::Keyword(k) => k,
            OutputToken::Entity(e) => self.n_keyword + e,
            OutputToken::Relation(r) => self.n_keyword + self.n_entity + r,
        }
    }

    pub fn token(&self, column: usize) -> OutputToken {
        if column < self.n_keyword {
            OutputToken::Keyword(column)
        } else if column < self.n_keyword + self.n_entity {
            OutputToken::Entity(column - self.n_keyword)
        } else {
            OutputToken::Relation(column - self.n_keyword - self.n_entity)
        }
    }
}

/// Recurrent state between decoder steps.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub h: Vec<Var>,
    pub cell: Vec<Var>,
    /// Context vector from the most recent combined attention.
    pub context: Var,
}

/// One decoder step's outputs.
pub struct Step {
    pub state: DecoderState,
    /// Unnormalised joint scores `[o^k; o^e; o^r]`, 1 × (keywords + entities + relations).
    pub logits: Var,
    /// Combined-attention weights over `[h_enc; h_keyword]`.
    pub alpha: Var,
}

/// Which output classes may be emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassMask {
    pub keyword: bool,
    pub entity: bool,
    pub relation: bool,
}

impl ClassMask {
    pub const ALL: ClassMask = ClassMask {
        keyword: true,
        entity: true,
        relation: true,
    };
}

/// Greedy decoding result.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<OutputToken>,
    pub text: String,
    /// True when decoding stopped at the length cap before the end marker.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub input_vocab: InputVocab,
    pub output_vocab: OutputVocab,
}

pub(crate) fn lstm_name(l: usize, what: &str) -> String {
    format!("dec.lstm{l}.{what}")
}

impl Model {
    /// Fresh parameters drawn from a ChaCha8 stream seeded by `seed`.
    pub fn new(config: ModelConfig, input_vocab: InputVocab, output_vocab: OutputVocab, seed: u64) -> Result<Model, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &config;
        let dk = c.head_width();
        let mut p = ParamStore::default();
        let emb_scale = 0.5;
        p.insert("emb.token", ParamStore::uniform(&mut rng, input_vocab.len(), c.d_x, emb_scale));
        p.insert("emb.segment", ParamStore::uniform(&mut rng, Segment::COUNT, c.d_x, emb_scale));
        for l in 0..c.n_layers {
            for h in 0..c.heads {
                for w in ["wq", "wk", "wv"] {
                    p.insert(format!("enc{l}.{w}{h}"), ParamStore::glorot(&mut rng, c.d_x, dk));
                }
            }
            p.insert(format!("enc{l}.edge"), ParamStore::uniform(&mut rng, EdgeType::COUNT, dk, 0.1));
            p.insert(format!("enc{l}.ln1.g"), Array2::ones((1, c.d_x)));
            p.insert(format!("enc{l}.ln1.b"), Array2::zeros((1, c.d_x)));
            p.insert(format!("enc{l}.ff1.w"), ParamStore::glorot(&mut rng, c.d_x, c.d_ff));
            p.insert(format!("enc{l}.ff1.b"), Array2::zeros((1, c.d_ff)));
            p.insert(format!("enc{l}.ff2.w"), ParamStore::glorot(&mut rng, c.d_ff, c.d_x));
            p.insert(format!("enc{l}.ff2.b"), Array2::zeros((1, c.d_x)));
            p.insert(format!("enc{l}.ln2.g"), Array2::ones((1, c.d_x)));
            p.insert(format!("enc{l}.ln2.b"), Array2::zeros((1, c.d_x)));
        }
        p.insert("dec.keyword", ParamStore::uniform(&mut rng, output_vocab.len(), c.d_keyword, emb_scale));
        for cls in ["k", "e", "r"] {
            p.insert(format!("dec.s.w{cls}"), ParamStore::glorot(&mut rng, c.d_x, c.d_s));
            p.insert(format!("dec.s.b{cls}"), Array2::zeros((1, c.d_s)));
            p.insert(format!("dec.out.w{cls}"), ParamStore::glorot(&mut rng, c.d_h + c.d_x, c.d_x));
        }
        p.insert("dec.s0", ParamStore::uniform(&mut rng, 1, c.d_s, 0.1));
        p.insert("dec.c0", ParamStore::uniform(&mut rng, 1, c.d_x, 0.1));
        for l in 0..c.n_lstm {
            let input = if l == 0 { c.d_s + c.d_x } else { c.d_h };
            p.insert(lstm_name(l, "w"), ParamStore::glorot(&mut rng, input + c.d_h, 4 * c.d_h));
            let mut b = Array2::zeros((1, 4 * c.d_h));
            // Forget-gate bias of one keeps early gradients flowing.
            b.slice_mut(ndarray::s![.., c.d_h..2 * c.d_h]).fill(1.0);
            p.insert(lstm_name(l, "b"), b);
            p.insert(lstm_name(l, "h0"), ParamStore::uniform(&mut rng, 1, c.d_h, 0.1));
            p.insert(lstm_name(l, "cell0"), ParamStore::uniform(&mut rng, 1, c.d_h, 0.1));
        }
        p.insert("dec.cb.wq", ParamStore::glorot(&mut rng, c.d_h, c.d_x));
        p.insert("dec.cb.wk", ParamStore::glorot(&mut rng, c.d_x, c.d_x));
        p.insert("dec.cb.wv", ParamStore::glorot(&mut rng, c.d_x, c.d_x));
        Ok(Model {
            config,
            params: p,
            input_vocab,
            output_vocab,
        })
    }

    /// Vocabularies from `records`, then fresh parameters.
    pub fn for_records(config: ModelConfig, records: &[QuestionRecord], seed: u64) -> Result<Model, ModelError> {
        let iv = InputVocab::from_records(records, &DefaultSegmenter);
        let ov = OutputVocab::from_records(records);
        Model::new(config, iv, ov, seed)
    }

    /// Lays out a record; the gold target is included when it can be encoded.
    pub fn example(&self, record: &QuestionRecord) -> Result<Example, ModelError> {
        let mut ex = self.input_only(record)?;
        ex.target = self.output_vocab.encode(&record.gold, &ex.entities, &ex.relations)?;
        Ok(ex)
    }

    /// Lays out a record without a gold target (for prediction).
    pub fn input_only(&self, record: &QuestionRecord) -> Result<Example, ModelError> {
        let (input, graph) = build_input(record, &self.input_vocab, &DefaultSegmenter)?;
        Ok(Example {
            id: record.id.clone(),
            input,
            graph,
            entities: record.entity_candidates.clone(),
            relations: record.relation_candidates.clone(),
            target: Vec::new(),
        })
    }

    /// Token plus segment embedding of every input position.
    pub fn embed(&self, tape: &mut Tape, input: &EncoderInput) -> Var {
        let tok = tape.param("emb.token");
        let seg = tape.param("emb.segment");
        let a = tape.gather_rows(tok, &input.tokens);
        let seg_ids: Vec<usize> = input.segments.iter().map(|s| s.id()).collect();
        let b = tape.gather_rows(seg, &seg_ids);
        tape.add(a, b)
    }

    /// One relation-aware attention layer: per head
    /// `e_ij = x_i W_Q (x_j W_K + r_ij)ᵀ / sqrt(d_z/H)`,
    /// `c_i = Σ_j α_ij (x_j W_V + r_ij)` with one edge table shared by keys
    /// and values, heads concatenated, then residual + layer norm, a ReLU
    /// feed-forward block, and residual + layer norm again.
    pub fn rat_layer(&self, tape: &mut Tape, layer: usize, x: Var, graph: &QuestionGraph, mode: &mut Mode) -> Result<(Var, Vec<Var>), ModelError> {
        let c = &self.config;
        let n = tape.value(x).nrows();
        if tape.value(x).ncols() != c.d_x || graph.edge_type.dim() != (n, n) {
            return Err(ModelError::ShapeMismatch(format!(
                "input {:?} with {:?} edge matrix at width {}",
                tape.value(x).dim(),
                graph.edge_type.dim(),
                c.d_x
            )));
        }
        let scale = 1.0 / (c.d_z as f64 / c.heads as f64).sqrt();
        let edge = tape.param(&format!("enc{layer}.edge"));
        let mut heads = Vec::with_capacity(c.heads);
        let mut alphas = Vec::with_capacity(c.heads);
        for h in 0..c.heads {
            let wq = tape.param(&format!("enc{layer}.wq{h}"));
            let wk = tape.param(&format!("enc{layer}.wk{h}"));
            let wv = tape.param(&format!("enc{layer}.wv{h}"));
            let q = tape.matmul(x, wq);
            let k = tape.matmul(x, wk);
            let v = tape.matmul(x, wv);
            let qk = tape.matmul_t(q, k);
            let qr_all = tape.matmul_t(q, edge);
            let qr = tape.gather_index(qr_all, &graph.edge_type);
            let e = tape.add(qk, qr);
            let e = tape.scale(e, scale);
            let alpha = tape.softmax(e);
            alphas.push(alpha);
            let alpha_d = mode.dropout(tape, alpha, c.dropout_attn);
            let av = tape.matmul(alpha_d, v);
            let buckets = tape.bucket_sum(alpha_d, &graph.edge_type, EdgeType::COUNT);
            let ar = tape.matmul(buckets, edge);
            heads.push(tape.add(av, ar));
        }
        let cat = tape.concat_cols(&heads);
        let res = tape.add(x, cat);
        let (g1, b1) = (tape.param(&format!("enc{layer}.ln1.g")), tape.param(&format!("enc{layer}.ln1.b")));
        let y = tape.layer_norm(res, g1, b1);
        let (w1, bb1) = (tape.param(&format!("enc{layer}.ff1.w")), tape.param(&format!("enc{layer}.ff1.b")));
        let (w2, bb2) = (tape.param(&format!("enc{layer}.ff2.w")), tape.param(&format!("enc{layer}.ff2.b")));
        let f = tape.matmul(y, w1);
        let f = tape.add_row(f, bb1);
        let f = tape.relu(f);
        let f = tape.matmul(f, w2);
        let f = tape.add_row(f, bb2);
        let res2 = tape.add(y, f);
        let (g2, b2) = (tape.param(&format!("enc{layer}.ln2.g")), tape.param(&format!("enc{layer}.ln2.b")));
        Ok((tape.layer_norm(res2, g2, b2), alphas))
    }

    pub fn encode(&self, tape: &mut Tape, input: &EncoderInput, graph: &QuestionGraph, mode: &mut Mode) -> Result<Encoded, ModelError> {
        let mut x = self.embed(tape, input);
        let mut alphas = Vec::new();
        for l in 0..self.config.n_layers {
            let (y, a) = self.rat_layer(tape, l, x, graph, mode)?;
            x = y;
            alphas.push(a);
        }
        Ok(Encoded { h_enc: x, alphas })
    }

    /// Precomputes everything the decoder reads from the encoder.
    pub fn memory(&self, tape: &mut Tape, ex: &Example, h_enc: Var) -> Memory {
        let h_keyword = tape.param("dec.keyword");
        let h_entity = tape.gather_rows(h_enc, &ex.input.entity_positions);
        let h_relation = tape.gather_rows(h_enc, &ex.input.relation_positions);
        let combined = tape.concat_rows(&[h_enc, h_keyword]);
        let wk = tape.param("dec.cb.wk");
        let wv = tape.param("dec.cb.wv");
        let keys = tape.matmul(combined, wk);
        let values = tape.matmul(combined, wv);
        let s = |tape: &mut Tape, h: Var, cls: &str| {
            let w = tape.param(&format!("dec.s.w{cls}"));
            let b = tape.param(&format!("dec.s.b{cls}"));
            let m = tape.matmul(h, w);
            tape.add_row(m, b)
        };
        let s_keyword = s(tape, h_keyword, "k");
        let s_entity = s(tape, h_entity, "e");
        let s_relation = s(tape, h_relation, "r");
        Memory {
            keys,
            values,
            h_keyword,
            h_entity,
            h_relation,
            s_keyword,
            s_entity,
            s_relation,
            n_keyword: self.output_vocab.len(),
            n_entity: ex.entities.len(),
            n_relation: ex.relations.len(),
        }
    }

    /// `S_t` for an output token: the class-specific affine map of the
    /// keyword embedding or the encoder row of the candidate.
    pub fn token_embedding(&self, tape: &mut Tape, mem: &Memory, tok: OutputToken) -> Result<Var, ModelError> {
        let (table, idx, n) = match tok {
            OutputToken::Keyword(k) => (mem.s_keyword, k, mem.n_keyword),
            OutputToken::Entity(e) => (mem.s_entity, e, mem.n_entity),
            OutputToken::Relation(r) => (mem.s_relation, r, mem.n_relation),
        };
        if idx >= n {
            return Err(VocabError::UnknownToken(format!("{tok:?}")).into());
        }
        Ok(tape.gather_rows(table, &[idx]))
    }

    /// Learned initial recurrent state and `S_0`.
    pub fn initial_state(&self, tape: &mut Tape) -> (DecoderState, Var) {
        let h = (0..self.config.n_lstm).map(|l| tape.param(&lstm_name(l, "h0"))).collect();
        let cell = (0..self.config.n_lstm).map(|l| tape.param(&lstm_name(l, "cell0"))).collect();
        let context = tape.param("dec.c0");
        let s0 = tape.param("dec.s0");
        (DecoderState { h, cell, context }, s0)
    }

    /// `h_{t+1} = LSTM([S_t; c_t], h_t)`, then combined attention of
    /// `h_{t+1}` over `[h_enc; h_keyword]` for the new context, then the
    /// three class scores from `[h_{t+1}; c_{t+1}]`, each divided by `sqrt(d_h)`.
    pub fn decoder_step(&self, tape: &mut Tape, mem: &Memory, state: &DecoderState, s_t: Var, mode: &mut Mode) -> Step {
        let c = &self.config;
        let dh = c.d_h;
        let mut x = tape.concat_cols(&[s_t, state.context]);
        let mut hs = Vec::with_capacity(c.n_lstm);
        let mut cells = Vec::with_capacity(c.n_lstm);
        for l in 0..c.n_lstm {
            let w = tape.param(&lstm_name(l, "w"));
            let b = tape.param(&lstm_name(l, "b"));
            let z = tape.concat_cols(&[x, state.h[l]]);
            let z = tape.matmul(z, w);
            let z = tape.add_row(z, b);
            let i = tape.slice_cols(z, 0, dh);
            let i = tape.sigmoid(i);
            let f = tape.slice_cols(z, dh, dh);
            let f = tape.sigmoid(f);
            let g = tape.slice_cols(z, 2 * dh, dh);
            let g = tape.tanh(g);
            let o = tape.slice_cols(z, 3 * dh, dh);
            let o = tape.sigmoid(o);
            let keep = tape.mul(f, state.cell[l]);
            let write = tape.mul(i, g);
            let cell = tape.add(keep, write);
            let tc = tape.tanh(cell);
            let h = tape.mul(o, tc);
            hs.push(h);
            cells.push(cell);
            x = if l + 1 < c.n_lstm { mode.dropout(tape, h, c.dropout_lstm) } else { h };
        }
        let h_top = x;
        let inv = 1.0 / (dh as f64).sqrt();
        let wq = tape.param("dec.cb.wq");
        let q = tape.matmul(h_top, wq);
        let e = tape.matmul_t(q, mem.keys);
        let e = tape.scale(e, inv);
        let alpha = tape.softmax(e);
        let context = tape.matmul(alpha, mem.values);

        let z = tape.concat_cols(&[h_top, context]);
        let class = |tape: &mut Tape, table: Var, cls: &str| {
            let w = tape.param(&format!("dec.out.w{cls}"));
            let a = tape.matmul(z, w);
            let o = tape.matmul_t(a, table);
            tape.scale(o, inv)
        };
        let ok = class(tape, mem.h_keyword, "k");
        let oe = class(tape, mem.h_entity, "e");
        let or = class(tape, mem.h_relation, "r");
        let logits = tape.concat_cols(&[ok, oe, or]);
        Step {
            state: DecoderState { h: hs, cell: cells, context },
            logits,
            alpha,
        }
    }

    /// Softmax over the joint scores, with disallowed classes at zero.
    pub fn distribution(&self, tape: &mut Tape, mem: &Memory, logits: Var, mask: ClassMask) -> Var {
        if mask == ClassMask::ALL {
            return tape.softmax(logits);
        }
        let allowed = |col: usize| match mem.token(col) {
            OutputToken::Keyword(_) => mask.keyword,
            OutputToken::Entity(_) => mask.entity,
            OutputToken::Relation(_) => mask.relation,
        };
        let m = Array2::from_shape_fn((1, mem.n_outputs()), |(_, j)| if allowed(j) { 0.0 } else { f64::NEG_INFINITY });
        let mv = tape.constant(m);
        let masked = tape.add(logits, mv);
        tape.softmax(masked)
    }

    /// Mean token negative log-likelihood of the gold sequence under
    /// teacher forcing. Returns the 1×1 loss node.
    pub fn loss(&self, tape: &mut Tape, ex: &Example, mode: &mut Mode) -> Result<Var, ModelError> {
        let enc = self.encode(tape, &ex.input, &ex.graph, mode)?;
        let mem = self.memory(tape, ex, enc.h_enc);
        let (mut state, s0) = self.initial_state(tape);
        let mut s_t = s0;
        let mut rows = Vec::with_capacity(ex.target.len());
        let mut cols = Vec::with_capacity(ex.target.len());
        for &tok in &ex.target {
            let step = self.decoder_step(tape, &mem, &state, s_t, mode);
            rows.push(step.logits);
            cols.push(mem.column(tok));
            state = step.state;
            s_t = self.token_embedding(tape, &mem, tok)?;
        }
        sequence_loss(tape, &rows, &cols)
    }

    /// Greedy decoding until the end marker or `max_len` tokens.
    pub fn decode_greedy(&self, ex: &Example, max_len: usize) -> Result<Decoded, ModelError> {
        let mut tape = Tape::new(&self.params);
        let mut mode = Mode::eval();
        let enc = self.encode(&mut tape, &ex.input, &ex.graph, &mut mode)?;
        let mem = self.memory(&mut tape, ex, enc.h_enc);
        let (mut state, mut s_t) = self.initial_state(&mut tape);
        let eoq = OutputToken::Keyword(self.output_vocab.eoq());
        let mut tokens = Vec::new();
        let mut truncated = true;
        while tokens.len() < max_len {
            let step = self.decoder_step(&mut tape, &mem, &state, s_t, &mut mode);
            let scores = tape.value(step.logits);
            let best = (0..scores.ncols())
                .max_by(|&a, &b| scores[[0, a]].total_cmp(&scores[[0, b]]).then(b.cmp(&a)))
                .expect("nonempty output space");
            let tok = mem.token(best);
            if tok == eoq {
                truncated = false;
                break;
            }
            tokens.push(tok);
            state = step.state;
            s_t = self.token_embedding(&mut tape, &mem, tok)?;
        }
        let text = self.output_vocab.render(&tokens, &ex.entities, &ex.relations);
        Ok(Decoded { tokens, text, truncated })
    }
}

/// Mean NLL over the rows of a teacher-forced sequence.
pub fn sequence_loss(tape: &mut Tape, rows: &[Var], targets: &[usize]) -> Result<Var, ModelError> {
    if rows.len() != targets.len() || rows.is_empty() {
        return Err(ModelError::LengthMismatch {
            got: rows.len(),
            want: targets.len(),
        });
    }
    let all = tape.concat_rows(rows);
    Ok(tape.cross_entropy(all, targets))
}
