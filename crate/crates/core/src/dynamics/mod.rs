//! Two-dimensional toy dynamics, latent-basis descent and synthetic datasets.

mod datasets;
mod limit;
mod toy;

pub use datasets::{
    make_mixture, make_mixture_dataset, make_patch_dataset, DatasetKind, DatasetSpec,
    MixtureDataset, MixtureSpec, Split,
};
pub use limit::{run_basis_limit, LimitTrace};
pub use toy::{
    compare_joint_vs_basis, run_toy, toy_gradients, toy_init, toy_loss, ToyComparison, ToyGrads,
    ToySpec, ToyState, ToySummary, ToyTrace, ToyVariant, TOY_POINTS, TOY_TARGET_MEANS,
};
