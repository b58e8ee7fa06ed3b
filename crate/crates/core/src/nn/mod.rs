//! Minimal dense numeric kernel: matrices, embedding lookup, LSTM cell and
//! bidirectional composition with exact backprop, dropout, and Adam.

pub mod adam;
pub mod dropout;
pub mod embedding;
pub mod linalg;
pub mod lstm;

/// Forward-pass mode: training enables dropout, evaluation is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub use adam::{AdamConfig, AdamState};
pub use dropout::{dropout_backward, dropout_forward};
pub use embedding::{parse_embedding_text, EmbeddingTable};
pub use linalg::{logsumexp, Matrix};
pub use lstm::{
    bilstm_backward, bilstm_forward, bilstm_forward_cached, lstm_backward, lstm_forward_cached,
    lstm_step, BiLstmCache, BiLstmGrads, BiLstmParams, LstmCache, LstmGrads, LstmParams, LstmState,
};
