//! Fused geometry-augmented images (FGAIs) from textured triangle meshes.
//!
//! The pipeline projects a textured mesh onto its principal plane, resamples
//! it on a regular grid, computes per-vertex surface descriptors (Gaussian and
//! mean curvature, shape index, local depth), renders each descriptor into the
//! original texture's image space, and stacks triples of those images into
//! three-channel pictures suitable for pretrained image networks.
//!
//! Alongside the geometry side sits an evaluation harness for the features a
//! network extracts from those pictures: a Fisher-style per-feature
//! discrimination criterion, one-vs-rest linear SVMs trained on the squared
//! hinge loss, subject-disjoint cross-validation, AuC, and sliding-window
//! majority voting over frame sequences.
//!
//! Module map:
//!
//! - [`mesh`]: OBJ loading, validation, metrics
//! - [`resample`]: principal frame, grid resampling, texture map rebuild
//! - [`descriptors`]: neighborhoods, Monge-patch curvatures, shape index, local depth
//! - [`gai`]: rasterizing descriptor fields and the tessellated gray image
//! - [`fuse`]: three-channel fusion and augmentation
//! - [`analyze`]: feature matrices, FMX1 files, the discrimination criterion
//! - [`classify`]: SVMs, metrics, cross-validation, majority voting
//! - [`pipeline`]: manifests, configuration and the end-to-end driver
//! - [`synth`]: analytic and synthetic test meshes

pub mod analyze;
pub mod classify;
pub mod descriptors;
pub mod fuse;
pub mod gai;
pub mod mesh;
pub mod pipeline;
pub mod resample;
pub mod synth;

mod par;

pub use descriptors::DescriptorKind;
pub use mesh::{TexturedMesh, TriMesh};
