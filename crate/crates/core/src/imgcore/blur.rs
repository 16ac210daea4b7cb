use super::ImageBuffer;

/// Normalized 1-D Gaussian taps on `[-r, r]` with `r = ceil(3 * sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius).map(|i| (-((i * i) as f64) / denom).exp()).collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur with clamp-to-edge borders, applied per channel.
///
/// `sigma == 0` returns an exact copy.
pub fn gaussian_blur(img: &ImageBuffer, sigma: f64) -> ImageBuffer {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and non-negative");
    if sigma == 0.0 || img.data().is_empty() {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let (w, h, ch) = (img.width(), img.height(), img.channels());
    let src = img.data();

    let mut tmp = vec![0.0f32; src.len()];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (k, &t) in kernel.iter().enumerate() {
                    let sx = (x as i64 + k as i64 - radius).clamp(0, w as i64 - 1) as usize;
                    acc += t * f64::from(src[(row + sx) * ch + c]);
                }
                tmp[(row + x) * ch + c] = acc as f32;
            }
        }
    }

    let mut out = vec![0.0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0f64;
                for (k, &t) in kernel.iter().enumerate() {
                    let sy = (y as i64 + k as i64 - radius).clamp(0, h as i64 - 1) as usize;
                    acc += t * f64::from(tmp[(sy * w + x) * ch + c]);
                }
                out[(y * w + x) * ch + c] = acc as f32;
            }
        }
    }
    ImageBuffer::new(w, h, ch, out).expect("blur preserves shape")
}
