//! Neural substrate: parameter tensors, a bi-LSTM body shared across tasks,
//! per-task softmax heads, and the Adadelta optimizer.
//!
//! All arithmetic is `f64`. A sentence is processed at its true length;
//! batching is done by the caller summing per-sentence gradients.

mod checkpoint;
pub mod gradcheck;
mod lstm;
mod model;
mod param;

pub use checkpoint::{checkpoint_to_string, parse_checkpoint, write_checkpoint};
pub use lstm::LstmDirection;
pub use model::{
    accumulate_gradients, backward, forward, predict, softmax, BodyDims, SharedBody, Tagger,
    TaskHead,
};
pub use param::{adadelta_step, Adadelta, ParamTensor};

/// Mean-NLL backward pass through head `task` of a multi-head tagger.
pub fn backward_task(
    model: &mut Tagger,
    task: usize,
    sentence: &[usize],
    gold: &[usize],
) -> crate::Result<f64> {
    let n = sentence.len().max(1) as f64;
    Ok(model.accumulate_gradients(task, sentence, gold, 1.0 / n)? / n)
}
