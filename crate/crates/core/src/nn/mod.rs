//! Minimal dense autodiff: tensors, a recording tape, parameters and Adam.

mod params;
mod tape;
mod tensor;

pub use params::{clip_grad_norm, global_norm, gradient_check, Adam, ParamSet};
pub use tape::{bce, sigmoid, ConvGeom, Tape, TrilinearPlan, Var};
pub use tensor::{gemm_nn, gemm_nt, gemm_tn, Tensor};

#[cfg(test)]
mod tests;
