//! Explicit ball covers of cylinder images and empirical box counting.

mod boxcount;
mod cover;
mod verify;

pub use boxcount::{box_count, box_dimension, BoxCountSeries, DROP_LARGE, DROP_SMALL, SATURATION};
pub use cover::{base_cover, cover_word, ellipsoid_cover, extend_cover, BallCover};
pub use verify::{cover_survey, cylinder_cloud, verify_cover, CoverCheck, CoverSurvey, CONTROL_SCALE, RADIUS_RTOL};
