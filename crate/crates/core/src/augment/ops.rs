//! Photometric operations and horizontal flipping.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::imgcore::{gaussian_blur, luma, rgb_to_ycrcb, ycrcb_to_rgb, ImageBuffer, LandmarkSet};
use crate::seeding::rng_from;

fn require_rgb(img: &ImageBuffer) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::dims("3 channels", format!("{} channels", img.channels())));
    }
    Ok(())
}

fn gaussian_field(w: usize, h: usize, rng: &mut impl Rng) -> ImageBuffer {
    let data = (0..w * h).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    ImageBuffer::new(w, h, 1, data).expect("field shape")
}

/// Sample standard deviation.
fn std_dev(v: &[f32]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
    let ss: f64 = v.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
    (ss / (n - 1.0).max(1.0)).sqrt()
}

/// YCrCb sensor noise. Strengths are on the 0 to 255 scale.
pub fn sensor_noise(img: &ImageBuffer, alpha_y: f64, alpha_c: f64, blotch: f64, seed: u64) -> Result<ImageBuffer> {
    require_rgb(img)?;
    if alpha_y < 0.0 || alpha_c < 0.0 || blotch < 0.0 {
        return Err(Error::invalid("noise strengths must be non-negative"));
    }
    if alpha_y == 0.0 && alpha_c == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = (img.width(), img.height());
    let ycc = rgb_to_ycrcb(img)?;
    let mut planes = [ycc.channel(0), ycc.channel(1), ycc.channel(2)];
    let mut rng = rng_from(seed);
    if alpha_y > 0.0 {
        let n = gaussian_field(w, h, &mut rng);
        let a = (alpha_y / 255.0) as f32;
        for (y, v) in planes[0].data_mut().iter_mut().zip(n.data()) {
            *y += a * v;
        }
    }
    if alpha_c > 0.0 {
        let a = alpha_c / 255.0;
        for plane in &mut planes[1..] {
            let n = gaussian_blur(&gaussian_field(w, h, &mut rng), blotch);
            let sd = std_dev(n.data());
            if sd < 1e-8 {
                continue;
            }
            let scale = (a / sd) as f32;
            for (c, v) in plane.data_mut().iter_mut().zip(n.data()) {
                *c += scale * v;
            }
        }
    }
    for p in &mut planes {
        p.clamp01();
    }
    let mut out = ycrcb_to_rgb(&ImageBuffer::merge([&planes[0], &planes[1], &planes[2]])?)?;
    out.clamp01();
    Ok(out)
}

/// Linear gradient overlay. `direction` in degrees, 0 = towards +x, 90 = towards +y.
pub fn illumination(img: &ImageBuffer, direction: f64, opacity: f64, tint: [f32; 3]) -> Result<ImageBuffer> {
    require_rgb(img)?;
    if !(0.0..=1.0).contains(&opacity) {
        return Err(Error::invalid(format!("opacity {opacity} outside [0, 1]")));
    }
    if opacity == 0.0 {
        return Ok(img.clone());
    }
    let (s, c) = direction.to_radians().sin_cos();
    let (w, h) = ((img.width() - 1) as f64, (img.height() - 1) as f64);
    let corners = [0.0, w * c, h * s, w * c + h * s];
    let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = ImageBuffer::from_fn(img.width(), img.height(), 3, |x, y, ch| {
        let g = if span > 0.0 { ((x as f64 * c + y as f64 * s - lo) / span) as f32 } else { 0.0 };
        let o = opacity as f32 * g;
        img.get(x, y, ch) * (1.0 - o) + o * tint[ch]
    });
    out.clamp01();
    Ok(out)
}

/// `matte·img + (1 − matte)·bg` with a 1-channel soft matte.
pub fn background_replace(img: &ImageBuffer, matte: &ImageBuffer, bg: &ImageBuffer) -> Result<ImageBuffer> {
    if !img.same_shape(bg) {
        return Err(Error::dims(img.shape_string(), bg.shape_string()));
    }
    if matte.channels() != 1 || matte.width() != img.width() || matte.height() != img.height() {
        return Err(Error::dims(format!("{}x{}x1 matte", img.width(), img.height()), matte.shape_string()));
    }
    Ok(ImageBuffer::from_fn(img.width(), img.height(), img.channels(), |x, y, c| {
        let m = matte.get(x, y, 0);
        m * img.get(x, y, c) + (1.0 - m) * bg.get(x, y, c)
    }))
}

/// Per-channel gain plus a shared brightness offset, clamped.
pub fn color_jitter(img: &ImageBuffer, gain: [f32; 3], offset: f32) -> Result<ImageBuffer> {
    require_rgb(img)?;
    let mut out = ImageBuffer::from_fn(img.width(), img.height(), 3, |x, y, c| img.get(x, y, c) * gain[c] + offset);
    out.clamp01();
    Ok(out)
}

/// Blends each pixel towards its luma; `amount = 1` gives grayscale.
pub fn desaturate(img: &ImageBuffer, amount: f32) -> Result<ImageBuffer> {
    require_rgb(img)?;
    Ok(ImageBuffer::from_fn(img.width(), img.height(), 3, |x, y, c| {
        let l = luma(img.get(x, y, 0), img.get(x, y, 1), img.get(x, y, 2));
        img.get(x, y, c) * (1.0 - amount) + l * amount
    }))
}

pub fn blur(img: &ImageBuffer, sigma: f64) -> Result<ImageBuffer> {
    if !(sigma >= 0.0) {
        return Err(Error::invalid("blur sigma must be non-negative"));
    }
    Ok(gaussian_blur(img, sigma))
}

/// Mirrors the image and landmarks, negating yaw.
pub fn flip(
    img: &ImageBuffer,
    landmarks: Option<&LandmarkSet>,
    gaze: GazeAngles,
    mirror_pairs: &[(u32, u32)],
) -> (ImageBuffer, Option<LandmarkSet>, GazeAngles) {
    (
        img.flipped_horizontal(),
        landmarks.map(|l| l.mirrored(img.width(), mirror_pairs)),
        GazeAngles::new(gaze.pitch, -gaze.yaw),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(seed: u64) -> ImageBuffer {
        let mut rng = rng_from(seed);
        ImageBuffer::from_fn(23, 17, 3, |_, _, _| rng.gen())
    }

    #[test]
    fn noise_zero_strength_is_identity() {
        let img = noisy(1);
        assert_eq!(sensor_noise(&img, 0.0, 0.0, 2.0, 5).unwrap(), img);
        assert!(sensor_noise(&img, -1.0, 0.0, 2.0, 5).is_err());
    }

    #[test]
    fn noise_luma_std() {
        let img = ImageBuffer::filled(128, 128, 3, 0.5);
        let out = sensor_noise(&img, 11.0, 0.0, 2.0, 7).unwrap();
        let y: Vec<f32> =
            (0..128 * 128).map(|i| luma(out.data()[3 * i], out.data()[3 * i + 1], out.data()[3 * i + 2])).collect();
        let sd = std_dev(&y);
        assert!((sd - 11.0 / 255.0).abs() < 0.1 * 11.0 / 255.0, "std {sd}");
        assert_eq!(out, sensor_noise(&img, 11.0, 0.0, 2.0, 7).unwrap());
        assert_ne!(out, sensor_noise(&img, 11.0, 0.0, 2.0, 8).unwrap());
    }

    #[test]
    fn chroma_noise_leaves_mean_luma() {
        let img = ImageBuffer::filled(96, 96, 3, 0.5);
        let out = sensor_noise(&img, 0.0, 15.0, 2.0, 3).unwrap();
        let mean_y: f64 = (0..96 * 96)
            .map(|i| luma(out.data()[3 * i], out.data()[3 * i + 1], out.data()[3 * i + 2]) as f64)
            .sum::<f64>()
            / (96.0 * 96.0);
        assert!((mean_y - 0.5).abs() < 2e-3);
        assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn illumination_examples() {
        let img = noisy(2);
        assert_eq!(illumination(&img, 30.0, 0.0, [1.0; 3]).unwrap(), img);
        let lit = illumination(&img, 0.0, 1.0, [1.0; 3]).unwrap();
        for y in 0..img.height() {
            for c in 0..3 {
                assert!((lit.get(img.width() - 1, y, c) - 1.0).abs() < 1e-6);
                assert_eq!(lit.get(0, y, c), img.get(0, y, c));
            }
        }
        let means: Vec<f64> = [0.0, 0.25, 0.5, 1.0]
            .iter()
            .map(|&o| illumination(&img, 135.0, o, [0.95, 0.9, 1.0]).unwrap().mean())
            .collect();
        assert!(means.windows(2).all(|w| w[1] >= w[0]));
        assert!(illumination(&img, 0.0, 1.5, [1.0; 3]).is_err());
    }

    #[test]
    fn background_examples() {
        let img = noisy(3);
        let bg = noisy(4);
        let ones = ImageBuffer::filled(img.width(), img.height(), 1, 1.0);
        let zeros = ImageBuffer::filled(img.width(), img.height(), 1, 0.0);
        let half = ImageBuffer::filled(img.width(), img.height(), 1, 0.5);
        assert_eq!(background_replace(&img, &ones, &bg).unwrap(), img);
        assert_eq!(background_replace(&img, &zeros, &bg).unwrap(), bg);
        let avg = background_replace(&img, &half, &bg).unwrap();
        for ((a, b), m) in img.data().iter().zip(bg.data()).zip(avg.data()) {
            assert!(((a + b) / 2.0 - m).abs() < 1e-6);
        }
        let small = ImageBuffer::filled(3, 3, 3, 0.0);
        assert!(background_replace(&img, &ones, &small).is_err());
    }

    #[test]
    fn flip_involution() {
        let img = noisy(5);
        let lm = LandmarkSet::from_points([(33, [2.0, 3.0]), (263, [20.0, 4.0]), (1, [11.0, 9.0])]).unwrap();
        let g = GazeAngles::new(-4.0, 12.0);
        let pairs = [(33, 263)];
        let (i1, l1, g1) = flip(&img, Some(&lm), g, &pairs);
        assert_eq!(g1, GazeAngles::new(-4.0, -12.0));
        assert_eq!(l1.as_ref().unwrap().get(33), Some([2.0, 4.0]));
        let (i2, l2, g2) = flip(&i1, l1.as_ref(), g1, &pairs);
        assert_eq!((i2, l2.unwrap(), g2), (img, lm, g));
    }

    #[test]
    fn jitter_and_desaturate() {
        let img = noisy(6);
        assert_eq!(color_jitter(&img, [1.0; 3], 0.0).unwrap(), img);
        let gray = desaturate(&img, 1.0).unwrap();
        for px in gray.data().chunks(3) {
            assert!((px[0] - px[1]).abs() < 1e-6 && (px[1] - px[2]).abs() < 1e-6);
        }
    }
}
