//! Workbench for training small 3D convolutional classifiers on synthetic
//! brain-like volumes, extracting attribution heatmaps (LRP beta-rule,
//! Integrated Gradients, Guided Grad-CAM) plus a linear-SVM coefficient
//! baseline, building binary ground-truth maps (known lesion masks or
//! coordinate-based meta-analysis maps), and quantifying heatmap/ground-truth
//! agreement over a smoothing-and-threshold grid with Dice, ROC-AUC and
//! PR-AUC.
//!
//! The crate is organised around [`volume::Volume3D`], a dense 3D scalar
//! field with voxel spacing, which is the common currency between all
//! subsystems:
//!
//! * [`volume`] — volumetric data type, NIfTI-1 I/O, Gaussian smoothing,
//!   thresholding, downsampling.
//! * [`nn`] — dense tensors with reverse-mode differentiation and the layer
//!   set used by the classifier families (3D convolution, batch norm, ReLU,
//!   max-pooling, fully-connected, dropout, Adam).
//! * [`models`] — architecture builders, k-fold cross-validation and the
//!   early-stopping training driver.
//! * [`attribution`] — LRP, Integrated Gradients, Guided Backpropagation,
//!   Grad-CAM and Guided Grad-CAM over a trained model.
//! * [`svm`] — linear SVM baseline with hinge loss and coefficient maps.
//! * [`ale`] — simplified activation-likelihood-estimation maps from foci
//!   tables with permutation thresholding.
//! * [`synthgen`] — procedural phantom and synthetic dataset generators.
//! * [`evalx`] — Dice/ROC/PR overlap harness over the smoothing grid.
//! * [`pipeline`] — end-to-end orchestration, artifact manifests, reports.

pub mod ale;
pub mod attribution;
pub mod evalx;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod svm;
pub mod synthgen;
pub mod volume;
