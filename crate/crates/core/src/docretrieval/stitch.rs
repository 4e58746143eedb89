//! Horizontal page stitching for retrieval results.
//!
//! Each page is isotropically resized so its long side does not exceed the
//! configured maximum, pages are concatenated left to right on a white
//! canvas with fixed inter-page padding, and the whole canvas is downsampled
//! isotropically if it exceeds the total pixel budget.

use image::imageops::FilterType;
use image::{DynamicImage, Rgb, RgbImage};

#[derive(Debug, Clone)]
pub struct StitchConfig {
    /// Maximum long side of an individual page, in pixels.
    pub max_side: u32,
    /// Horizontal padding between adjacent pages, in pixels.
    pub padding: u32,
    /// Hard cap on the stitched canvas pixel count.
    pub max_total_pixels: u64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig { max_side: 1120, padding: 10, max_total_pixels: 16_777_216 }
    }
}

/// Downscales so the long side is at most `max_side`; smaller images pass
/// through untouched. The short side scales proportionally, rounded down.
pub fn resize_to_long_side(image: &DynamicImage, max_side: u32) -> DynamicImage {
    let (w, h) = (image.width(), image.height());
    let long = w.max(h);
    if long <= max_side {
        return image.clone();
    }
    let new_w = ((w as u64 * max_side as u64) / long as u64).max(1) as u32;
    let new_h = ((h as u64 * max_side as u64) / long as u64).max(1) as u32;
    image.resize_exact(new_w, new_h, FilterType::Triangle)
}

/// Concatenates pages horizontally. Canvas width is the sum of resized
/// widths plus padding between pages; height is the max resized height.
pub fn stitch_pages(images: &[DynamicImage], cfg: &StitchConfig) -> DynamicImage {
    assert!(!images.is_empty(), "stitch_pages requires at least one image");
    let resized: Vec<RgbImage> =
        images.iter().map(|img| resize_to_long_side(img, cfg.max_side).to_rgb8()).collect();
    let total_w: u32 =
        resized.iter().map(RgbImage::width).sum::<u32>() + cfg.padding * (resized.len() as u32 - 1);
    let total_h: u32 = resized.iter().map(RgbImage::height).max().unwrap_or(1);

    let mut canvas = RgbImage::from_pixel(total_w.max(1), total_h.max(1), Rgb([255, 255, 255]));
    let mut x = 0u32;
    for page in &resized {
        image::imageops::overlay(&mut canvas, page, x as i64, 0);
        x += page.width() + cfg.padding;
    }

    let canvas = DynamicImage::ImageRgb8(canvas);
    let area = canvas.width() as u64 * canvas.height() as u64;
    if area <= cfg.max_total_pixels {
        return canvas;
    }
    let scale = (cfg.max_total_pixels as f64 / area as f64).sqrt();
    let new_w = ((canvas.width() as f64 * scale).floor() as u32).max(1);
    let new_h = ((canvas.height() as f64 * scale).floor() as u32).max(1);
    canvas.resize_exact(new_w, new_h, FilterType::Triangle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn page(w: u32, h: u32) -> DynamicImage {
        DynamicImage::ImageRgb8(RgbImage::from_pixel(w, h, Rgb([10, 20, 30])))
    }

    #[test]
    fn pages_resize_to_the_long_side_cap() {
        let cfg = StitchConfig::default();
        let stitched = stitch_pages(&[page(800, 1200), page(900, 1500)], &cfg);
        // 800*1120/1200 = 746 (floored) and 900*1120/1500 = 672.
        assert_eq!(stitched.width(), 746 + 672 + 10);
        assert_eq!(stitched.height(), 1120);
    }

    #[test]
    fn small_single_page_is_unchanged() {
        let cfg = StitchConfig::default();
        let stitched = stitch_pages(&[page(500, 500)], &cfg);
        assert_eq!((stitched.width(), stitched.height()), (500, 500));
    }

    #[test]
    fn canvas_respects_the_total_pixel_cap() {
        let cfg = StitchConfig::default();
        let pages: Vec<DynamicImage> = (0..30).map(|_| page(1120, 1120)).collect();
        let stitched = stitch_pages(&pages, &cfg);
        let area = stitched.width() as u64 * stitched.height() as u64;
        assert!(area <= cfg.max_total_pixels, "area {area}");
        // Without the cap the canvas would be 30*1120 + 29*10 wide.
        assert!(stitched.width() < 33890);
    }

    #[test]
    fn upscaling_never_happens() {
        let resized = resize_to_long_side(&page(100, 50), 1120);
        assert_eq!((resized.width(), resized.height()), (100, 50));
    }
}
