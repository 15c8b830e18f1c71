//! Concrete degree-4 objectives: phase retrieval, matrix completion, and the
//! Rosenbrock benchmark.

pub mod matrix_completion;
pub mod phase_retrieval;
pub mod rosenbrock;

pub use matrix_completion::{
    gen_matrix_completion, mc_grad, mc_line_quartic, mc_value, MatrixCompletionInstance,
    MatrixCompletionRecipe,
};
pub use phase_retrieval::{
    gen_phase_retrieval, gen_phase_retrieval_with, hessian_cond, pr_grad, pr_line_quartic,
    pr_value, spectral_init, HessianCond, PhaseRetrievalInstance, PhaseRetrievalRecipe,
};
pub use rosenbrock::{
    rosenbrock_grad, rosenbrock_hessian, rosenbrock_hessian_cond, rosenbrock_value, Rosenbrock,
};
