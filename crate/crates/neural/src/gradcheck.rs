//! Finite-difference verification of the analytic gradients.

use std::collections::BTreeMap;
use std::fmt;

use kbqa_core::sparql::Iri;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autograd::Tape;
use crate::config::ModelConfig;
use crate::input::{EdgeType, EncoderInput, QuestionGraph, Segment};
use crate::model::{Example, Mode, Model, ModelError};
use crate::vocab::{InputVocab, OutputToken, OutputVocab, EOQ};

/// Gradient agreement for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub n_scalars: usize,
    /// `‖g_analytic − g_numeric‖ / (‖g_analytic‖ + ‖g_numeric‖)`, zero when both vanish.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub loss: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn passes(&self, tol: f64) -> bool {
        !self.tensors.is_empty() && self.tensors.iter().all(|t| t.rel_error < tol)
    }
}

impl fmt::Display for GradcheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "loss: {:.10}", self.loss)?;
        for t in &self.tensors {
            writeln!(f, "{}: n={} rel_error={:.3e}", t.name, t.n_scalars, t.rel_error)?;
        }
        write!(f, "max_rel_error: {:.3e}", self.max_rel_error())
    }
}

/// Hook that may alter an analytic gradient before comparison.
pub type Corruption<'a> = &'a dyn Fn(&str, &mut Array2<f64>);

fn loss_of(model: &Model, ex: &Example) -> Result<f64, ModelError> {
    let mut tape = Tape::new(&model.params);
    let l = model.loss(&mut tape, ex, &mut Mode::eval())?;
    Ok(tape.scalar(l))
}

/// Compares backpropagated gradients of the teacher-forced loss with
/// central differences of step `h` for every parameter tensor.
pub fn gradcheck(model: &Model, ex: &Example, h: f64, corrupt: Option<Corruption>) -> Result<GradcheckReport, ModelError> {
    let mut tape = Tape::new(&model.params);
    let loss = model.loss(&mut tape, ex, &mut Mode::eval())?;
    let loss_value = tape.scalar(loss);
    let grads = tape.backward(loss);
    let mut analytic: BTreeMap<String, Array2<f64>> = tape.param_grads(&grads);
    drop(tape);
    if let Some(c) = corrupt {
        for (name, g) in analytic.iter_mut() {
            c(name, g);
        }
    }

    let mut probe = model.clone();
    let mut tensors = Vec::new();
    for (name, g) in &analytic {
        let shape = g.dim();
        let mut numeric = Array2::zeros(shape);
        for idx in ndarray::indices(shape) {
            let orig = probe.params.get(name).expect("parameter exists")[idx];
            probe.params.get_mut(name).unwrap()[idx] = orig + h;
            let up = loss_of(&probe, ex)?;
            probe.params.get_mut(name).unwrap()[idx] = orig - h;
            let down = loss_of(&probe, ex)?;
            probe.params.get_mut(name).unwrap()[idx] = orig;
            numeric[idx] = (up - down) / (2.0 * h);
        }
        let diff = (g - &numeric).mapv(|x| x * x).sum().sqrt();
        let scale = g.mapv(|x| x * x).sum().sqrt() + numeric.mapv(|x| x * x).sum().sqrt();
        let rel_error = if scale == 0.0 { 0.0 } else { diff / scale };
        tensors.push(TensorCheck {
            name: name.clone(),
            n_scalars: g.len(),
            rel_error,
        });
    }
    Ok(GradcheckReport {
        loss: loss_value,
        tensors,
    })
}

/// A small model and a six-position synthetic example that touches every
/// edge type, every segment and all three output classes.
pub fn tiny_problem(seed: u64) -> Result<(Model, Example), ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_vocab = InputVocab::new(["甲", "乙", "wd:Q1", "wdt:P1"].map(String::from));
    let output_vocab = OutputVocab::new(
        [EOQ, "<UNK>", "SELECT", "ASK", "WHERE", "{", "}", "?v1", "?v2", "COUNT"].map(String::from),
    );
    let mut model = Model::new(ModelConfig::tiny(), input_vocab, output_vocab, seed)?;
    // Layer-norm gains and biases start at 1 and 0; perturb them so their
    // gradients are not degenerate.
    let names: Vec<String> = model.params.names().filter(|n| n.contains(".ln")).map(String::from).collect();
    for n in names {
        model.params.get_mut(&n).unwrap().mapv_inplace(|x| x + rng.gen_range(-0.3..0.3));
    }

    let segments = vec![
        Segment::Question,
        Segment::Question,
        Segment::Separator,
        Segment::Entity,
        Segment::Separator,
        Segment::Relation,
    ];
    let n = segments.len();
    let tokens: Vec<usize> = (0..n).map(|_| rng.gen_range(0..model.input_vocab.len())).collect();
    let mut edge_type = Array2::from_shape_fn((n, n), |_| rng.gen_range(0..EdgeType::COUNT));
    for (k, t) in EdgeType::ALL.iter().enumerate() {
        edge_type[[k % n, (k * 5 + 1) % n]] = t.id();
    }
    let kw = |s: &str| OutputToken::Keyword(model.output_vocab.keyword_id(s).unwrap());
    let target = vec![
        kw("ASK"),
        kw("WHERE"),
        kw("{"),
        OutputToken::Entity(0),
        OutputToken::Relation(0),
        kw("?v1"),
        kw("}"),
        kw(EOQ),
    ];
    let ex = Example {
        id: "gradcheck".into(),
        input: EncoderInput {
            tokens,
            segments,
            entity_positions: vec![3],
            relation_positions: vec![5],
        },
        graph: QuestionGraph { edge_type },
        entities: vec!["wd:Q1".parse::<Iri>().expect("valid IRI")],
        relations: vec!["wdt:P1".parse::<Iri>().expect("valid IRI")],
        target,
    };
    Ok((model, ex))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_problem_is_within_bounds() {
        let (m, ex) = tiny_problem(0).unwrap();
        assert_eq!(ex.input.len(), 6);
        assert!(m.input_vocab.len() + m.output_vocab.len() + 2 <= 30);
        let mut seen = [false; EdgeType::COUNT];
        ex.graph.edge_type.iter().for_each(|&t| seen[t] = true);
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn report_formatting() {
        let r = GradcheckReport {
            loss: 1.0,
            tensors: vec![TensorCheck {
                name: "w".into(),
                n_scalars: 3,
                rel_error: 2e-7,
            }],
        };
        assert!(r.passes(1e-4));
        assert!(r.to_string().ends_with("max_rel_error: 2.000e-7"));
        assert!(!GradcheckReport { loss: 0.0, tensors: vec![] }.passes(1.0));
    }
}
