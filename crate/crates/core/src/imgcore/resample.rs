use super::ImageBuffer;

/// Bilinear sample at continuous pixel coordinates with clamp-to-edge.
pub fn sample_bilinear(img: &ImageBuffer, x: f64, y: f64, c: usize) -> f32 {
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x = x.clamp(0.0, w - 1.0);
    let y = y.clamp(0.0, h - 1.0);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
    let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
    let bot = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
    top * (1.0 - fy) + bot * fy
}

/// Resizes with pixel-center alignment.
pub fn resize_bilinear(img: &ImageBuffer, width: usize, height: usize) -> ImageBuffer {
    let sx = img.width() as f64 / width as f64;
    let sy = img.height() as f64 / height as f64;
    ImageBuffer::from_fn(width, height, img.channels(), |x, y, c| {
        let src_x = (x as f64 + 0.5) * sx - 0.5;
        let src_y = (y as f64 + 0.5) * sy - 0.5;
        sample_bilinear(img, src_x, src_y, c)
    })
}

/// Copies the region `[x0, x0 + w) × [y0, y0 + h)`; the region must lie inside the image.
pub fn crop(img: &ImageBuffer, x0: usize, y0: usize, w: usize, h: usize) -> ImageBuffer {
    assert!(x0 + w <= img.width() && y0 + h <= img.height(), "crop outside image");
    ImageBuffer::from_fn(w, h, img.channels(), |x, y, c| img.get(x0 + x, y0 + y, c))
}
