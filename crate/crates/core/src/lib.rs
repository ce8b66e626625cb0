//! Simplex-shape analysis of word embedding clouds.
//!
//! The pipeline fits principal axes to the cloud, takes the extreme words at
//! both ends of each axis as corner candidates, glues candidates that share
//! their nearest-neighbor lists, and drops candidates that fail a
//! random-triangle convexity test. Surviving corners are described by their
//! nearest words and summarized by how much of the cloud falls inside the
//! triangles they span.

pub mod embedding;
pub mod error;
pub mod extract;
pub mod geometry;
pub mod pca;
pub mod report;
pub mod synth;

pub use embedding::{detect_format, parse_embeddings, EmbeddingSpace, Format};
pub use error::{Error, Result};
pub use extract::{
    describe_vertex, filter_false_vertices, find_candidates, glue_candidates, topk_neighbors,
    vertex_profile, AxisEnd, ExtractionParams, FilterOutcome, Vertex, VertexCandidate,
};
pub use geometry::{
    barycentric, incircle, plane_basis, project_to_plane, triangle_stats, PlaneFrame,
    TriangleProjection, TripleStats,
};
pub use pca::{fit_pca, project_onto_axis, PcaModel};
pub use synth::{generate_simplex_cloud, GenParams, GroundTruth, SyntheticCloud};
pub use report::{
    analyze_space, emit_projection, emit_report, run_analysis, AnalysisConfig, AnalysisReport,
    ProjectionFormat, ReportFormat,
};
