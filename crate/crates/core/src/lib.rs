//! Raster-to-vector conversion for satellite-style imagery, plus the
//! machinery to run it at scale: a packed image bundle container, a
//! map-only coordinator/worker engine, and a scalability benchmark.
//!
//! The per-image pipeline is: grayscale, Otsu threshold, binarize,
//! small-component removal, morphological close and open, hole filling,
//! large-component selection, and outer-contour tracing into polygons.
//!
//! Module map:
//! - [`raster`]: image containers, PNG/JPEG/PNM decode, grayscale, PNG encode
//! - [`threshold`]: Otsu threshold selection and binarization
//! - [`binary`]: binary masks, connected-component labeling, area opening, hole filling
//! - [`morph`]: structuring elements, erosion, dilation, opening, closing
//! - [`contour`]: Moore-neighbor outer-boundary tracing into pixel polygons
//! - [`pipeline`]: the composed per-image pipeline and render-back rasterization
//! - [`geojson`]: deterministic GeoJSON serialization of vector scenes
//! - [`bundle`]: packed multi-image container with index and header-only culling
//! - [`synth`]: seeded synthetic island imagery for tests and benchmarks
//! - [`engine`]: map-only job execution over local threads or TCP workers

pub mod binary;
pub mod bundle;
pub mod contour;
pub mod engine;
pub mod geojson;
pub mod morph;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod threshold;

pub use binary::{BinaryImage, Connectivity, LabelMap};
pub use bundle::{BundleEntryHeader, BundleError, CullPredicate, ImageBundle};
pub use contour::{ContourError, Point, Polygon};
pub use engine::{Execution, JobError, JobReport, JobSpec};
pub use geojson::GeoJsonError;
pub use morph::StructuringElement;
pub use pipeline::{PipelineConfig, VectorScene};
pub use raster::{GrayImage, ImageFormat, RasterError, RgbImage};
pub use threshold::ThresholdLevel;
