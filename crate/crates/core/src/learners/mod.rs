//! The three model families: an online linear model trained by SGD, a CART
//! decision tree and ordinary least squares.

mod ols;
mod sgd;
mod tree;

pub use ols::{OlsModel, RIDGE_JITTER};
pub use sgd::{
    LinearModel, LossMode, SgdParams, DEFAULT_L2_STRENGTH, DEFAULT_LEARNING_RATE,
    STATE_RECORD_LINES,
};
pub use tree::{DecisionTree, Node, SplitChoice, TreeParams, TreeTask};
