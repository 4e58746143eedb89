//! The `image_crop_and_zoom_in` tool.
//!
//! Bounding boxes arrive in normalized integer coordinates in [0, 1000]
//! (per-mille of width/height), are converted to pixels, then corrected:
//! clamp to the image, expand any side below the minimum crop dimension
//! symmetrically about its center (shifting inward at the edges), cap the
//! aspect ratio by widening the short side, re-clamp. Small crops are
//! upsampled by a factor of 2 for readability.

use image::imageops::FilterType;
use image::DynamicImage;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::memory::ImageArtifact;
use crate::toolkit::{ParamSpec, ParamType, Tool, ToolCtx, ToolResponse, ToolSchema};

pub const NORMALIZED_RANGE: i64 = 1000;

#[derive(Debug, Clone)]
pub struct ImageToolConfig {
    /// Minimum width/height of a corrected crop, in pixels.
    pub min_dimension: u32,
    /// Crops whose long side is below this threshold are upsampled 2x.
    pub small_crop_threshold: u32,
    /// Maximum long-side : short-side ratio; exceeding boxes are widened.
    pub max_aspect_ratio: f64,
}

impl Default for ImageToolConfig {
    fn default() -> Self {
        ImageToolConfig { min_dimension: 28, small_crop_threshold: 112, max_aspect_ratio: 20.0 }
    }
}

/// Normalized integer box; valid iff 0 <= x1 < x2 <= 1000 and likewise in y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedBBox {
    pub x1: i64,
    pub y1: i64,
    pub x2: i64,
    pub y2: i64,
}

/// Pixel box with exclusive right/bottom edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelBBox {
    pub left: u32,
    pub top: u32,
    pub right: u32,
    pub bottom: u32,
}

impl PixelBBox {
    pub fn width(&self) -> u32 {
        self.right - self.left
    }

    pub fn height(&self) -> u32 {
        self.bottom - self.top
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BBoxError {
    #[error("invalid bbox: {0}")]
    Invalid(String),
    #[error("image too small to crop: {axis} is {size} px but the minimum crop dimension is {min} px")]
    Degenerate { axis: &'static str, size: u32, min: u32 },
}

impl NormalizedBBox {
    pub fn from_values(values: &[i64]) -> Result<Self, BBoxError> {
        let [x1, y1, x2, y2] = <[i64; 4]>::try_from(values)
            .map_err(|_| BBoxError::Invalid("bbox_2d must have exactly 4 values".into()))?;
        let bbox = NormalizedBBox { x1, y1, x2, y2 };
        bbox.validate()?;
        Ok(bbox)
    }

    pub fn validate(&self) -> Result<(), BBoxError> {
        let in_range = |v: i64| (0..=NORMALIZED_RANGE).contains(&v);
        if ![self.x1, self.y1, self.x2, self.y2].iter().copied().all(in_range) {
            return Err(BBoxError::Invalid(format!(
                "coordinates must lie in [0, {NORMALIZED_RANGE}]"
            )));
        }
        if self.x1 >= self.x2 {
            return Err(BBoxError::Invalid("x1 < x2 violated".into()));
        }
        if self.y1 >= self.y2 {
            return Err(BBoxError::Invalid("y1 < y2 violated".into()));
        }
        Ok(())
    }
}

/// Round half away from zero; inputs here are non-negative.
fn scale(value: i64, size: u32) -> u32 {
    ((value as f64) * (size as f64) / (NORMALIZED_RANGE as f64)).round() as u32
}

/// Converts a normalized box to pixel coordinates (pre-correction). The
/// result is ordered but may be thinner than the minimum crop dimension.
pub fn to_pixels(bbox: &NormalizedBBox, width: u32, height: u32) -> Result<PixelBBox, BBoxError> {
    bbox.validate()?;
    Ok(PixelBBox {
        left: scale(bbox.x1, width),
        top: scale(bbox.y1, height),
        right: scale(bbox.x2, width),
        bottom: scale(bbox.y2, height),
    })
}

/// Grows `[lo, hi)` to at least `min_len` about its center, shifting inward
/// so the result stays within `[0, limit)`. `limit >= min_len` must hold.
fn expand_axis(lo: u32, hi: u32, min_len: u32, limit: u32) -> (u32, u32) {
    debug_assert!(lo <= hi && hi <= limit && min_len <= limit);
    let len = hi - lo;
    if len >= min_len {
        return (lo, hi);
    }
    let needed = (min_len - len) as i64;
    let mut new_lo = lo as i64 - needed / 2;
    let mut new_hi = new_lo + min_len as i64;
    if new_lo < 0 {
        new_hi -= new_lo;
        new_lo = 0;
    }
    if new_hi > limit as i64 {
        new_lo -= new_hi - limit as i64;
        new_hi = limit as i64;
        new_lo = new_lo.max(0);
    }
    (new_lo as u32, new_hi as u32)
}

/// Clamps the box to the image, enforces the minimum crop dimension, and
/// caps the aspect ratio. Fails only when the image itself is smaller than
/// the minimum dimension on some axis.
pub fn correct_bbox(
    bbox: &PixelBBox,
    width: u32,
    height: u32,
    cfg: &ImageToolConfig,
) -> Result<PixelBBox, BBoxError> {
    if width < cfg.min_dimension {
        return Err(BBoxError::Degenerate { axis: "width", size: width, min: cfg.min_dimension });
    }
    if height < cfg.min_dimension {
        return Err(BBoxError::Degenerate { axis: "height", size: height, min: cfg.min_dimension });
    }
    let left = bbox.left.min(width);
    let right = bbox.right.min(width);
    let top = bbox.top.min(height);
    let bottom = bbox.bottom.min(height);
    if left > right || top > bottom {
        return Err(BBoxError::Invalid("box is not ordered".into()));
    }

    let (left, right) = expand_axis(left, right, cfg.min_dimension, width);
    let (top, bottom) = expand_axis(top, bottom, cfg.min_dimension, height);

    let (w, h) = (right - left, bottom - top);
    let max_ratio = cfg.max_aspect_ratio;
    let (left, right, top, bottom) = if (w as f64) > (h as f64) * max_ratio {
        let needed = ((w as f64) / max_ratio).ceil() as u32;
        log::warn!("bbox aspect ratio above {max_ratio}:1; widening height to {needed}");
        let (top, bottom) = expand_axis(top, bottom, needed.min(height), height);
        (left, right, top, bottom)
    } else if (h as f64) > (w as f64) * max_ratio {
        let needed = ((h as f64) / max_ratio).ceil() as u32;
        log::warn!("bbox aspect ratio above {max_ratio}:1; widening width to {needed}");
        let (left, right) = expand_axis(left, right, needed.min(width), width);
        (left, right, top, bottom)
    } else {
        (left, right, top, bottom)
    };

    Ok(PixelBBox { left, top, right, bottom })
}

/// Crops the corrected region out of `image` (no upsampling).
pub fn crop_region(image: &DynamicImage, bbox: &PixelBBox) -> DynamicImage {
    image.crop_imm(bbox.left, bbox.top, bbox.width(), bbox.height())
}

/// Doubles small crops with bicubic interpolation; larger crops pass through.
pub fn maybe_upsample(crop: DynamicImage, cfg: &ImageToolConfig) -> DynamicImage {
    let long_side = crop.width().max(crop.height());
    if long_side < cfg.small_crop_threshold {
        crop.resize_exact(crop.width() * 2, crop.height() * 2, FilterType::CatmullRom)
    } else {
        crop
    }
}

pub struct ImageZoomTool {
    cfg: ImageToolConfig,
    schema: ToolSchema,
}

impl ImageZoomTool {
    pub fn new(cfg: ImageToolConfig) -> Self {
        ImageZoomTool {
            cfg,
            schema: ToolSchema {
                name: "image_crop_and_zoom_in",
                description: "Crops a sub-region from an image in imgs_map and zooms in for fine-grained inspection. Coordinates are normalized integers in [0, 1000] along each axis.",
                parameters: vec![
                    ParamSpec::required(
                        "image",
                        ParamType::String,
                        "Key of the source image in imgs_map (e.g. original_image).",
                    ),
                    ParamSpec::required(
                        "bbox_2d",
                        ParamType::Array,
                        "[x1, y1, x2, y2] with 0 <= x1 < x2 <= 1000 and 0 <= y1 < y2 <= 1000.",
                    ),
                ],
            },
        }
    }
}

impl Default for ImageZoomTool {
    fn default() -> Self {
        Self::new(ImageToolConfig::default())
    }
}

fn bbox_values(raw: &Value) -> Result<Vec<i64>, BBoxError> {
    let arr = raw
        .as_array()
        .ok_or_else(|| BBoxError::Invalid("bbox_2d must be an array of 4 numbers".into()))?;
    arr.iter()
        .map(|v| {
            v.as_i64()
                .or_else(|| v.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
                .ok_or_else(|| BBoxError::Invalid("bbox_2d values must be integers".into()))
        })
        .collect()
}

impl Tool for ImageZoomTool {
    fn schema(&self) -> &ToolSchema {
        &self.schema
    }

    fn execute(&self, args: &Map<String, Value>, ctx: &mut ToolCtx<'_>) -> ToolResponse {
        let key = args["image"].as_str().unwrap_or_default();
        let artifact = match ctx.memory.resolve_image(key) {
            Ok(a) => a.clone(),
            Err(e) => return ToolResponse::error(e.to_string()),
        };
        let bbox = match bbox_values(&args["bbox_2d"]).and_then(|v| NormalizedBBox::from_values(&v))
        {
            Ok(b) => b,
            Err(e) => return ToolResponse::error(e.to_string()),
        };
        let image = match image::open(&artifact.path) {
            Ok(img) => img,
            Err(e) => {
                return ToolResponse::error(format!(
                    "failed to load image {key:?} from {}: {e}",
                    artifact.path.display()
                ))
            }
        };
        let pixels = match to_pixels(&bbox, image.width(), image.height())
            .and_then(|p| correct_bbox(&p, image.width(), image.height(), &self.cfg))
        {
            Ok(p) => p,
            Err(e) => return ToolResponse::error(e.to_string()),
        };
        let crop = maybe_upsample(crop_region(&image, &pixels), &self.cfg);

        let new_key = ctx.fresh_image_key();
        let path = ctx.scratch_path(&format!("{new_key}.png"));
        if let Err(e) = crop.save(&path) {
            return ToolResponse::error(format!("failed to save crop: {e}"));
        }
        let (w, h) = (crop.width(), crop.height());
        if let Err(e) = ctx.memory.bind_image(&new_key, ImageArtifact::new(&path, w, h)) {
            return ToolResponse::error(e.to_string());
        }
        let obs = ctx.next_observation_name();
        ToolResponse::with_image(
            format!(
                "Cropped region [{}, {}, {}, {}] of {key:?} is bound as {new_key:?} ({obs}, {w}x{h}). \
                 Continue your reasoning within <think></think>; you may call another tool or \
                 provide your final answer within <answer></answer>.",
                pixels.left, pixels.top, pixels.right, pixels.bottom
            ),
            new_key,
        )
    }
}
