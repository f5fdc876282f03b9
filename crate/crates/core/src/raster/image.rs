use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major `height x width x channels` float image.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * channels, "image buffer size");
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// The first `n` channels.
    pub fn take_channels(&self, n: usize) -> Image {
        assert!(n <= self.channels);
        let mut data = Vec::with_capacity(self.width * self.height * n);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(&px[..n]);
        }
        Image::from_vec(self.width, self.height, n, data)
    }

    /// Pads with zero channels up to `n`.
    pub fn pad_channels(&self, n: usize) -> Image {
        assert!(n >= self.channels);
        let mut data = Vec::with_capacity(self.width * self.height * n);
        for px in self.data.chunks_exact(self.channels) {
            data.extend_from_slice(px);
            data.extend(std::iter::repeat(0.0).take(n - self.channels));
        }
        Image::from_vec(self.width, self.height, n, data)
    }

    /// Separable Gaussian blur with clamped edges. `sigma <= 0` is a copy.
    pub fn gaussian_blur(&self, sigma: f64) -> Image {
        if !(sigma > 0.0) {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);

        let (w, h, ch) = (self.width as isize, self.height as isize, self.channels);
        let mut tmp = Image::zeros(self.width, self.height, ch);
        for y in 0..h {
            for x in 0..w {
                let out = tmp.pixel_mut(x as usize, y as usize);
                for (k, wt) in kernel.iter().enumerate() {
                    let sx = (x + k as isize - radius).clamp(0, w - 1) as usize;
                    let src = self.pixel(sx, y as usize);
                    for c in 0..ch {
                        out[c] += wt * src[c];
                    }
                }
            }
        }
        let mut out_img = Image::zeros(self.width, self.height, ch);
        for y in 0..h {
            for x in 0..w {
                let mut acc = vec![0.0; ch];
                for (k, wt) in kernel.iter().enumerate() {
                    let sy = (y + k as isize - radius).clamp(0, h - 1) as usize;
                    let src = tmp.pixel(x as usize, sy);
                    for c in 0..ch {
                        acc[c] += wt * src[c];
                    }
                }
                out_img.pixel_mut(x as usize, y as usize).copy_from_slice(&acc);
            }
        }
        out_img
    }

    /// 8-bit quantized copy, as it would round-trip through a PNG.
    pub fn quantized(&self) -> Image {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = quantize(*v) as f64 / 255.0;
        }
        out
    }
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit RGBA PNG. One- and three-channel images are written
/// opaque; four-channel render outputs are written with opaque alpha too,
/// since their color is already composited over the background.
pub fn write_png(path: &Path, image: &Image) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width as u32,
        image.height as u32,
    );
    encoder.set_color(png::ColorType::Rgba);
    encoder.set_depth(png::BitDepth::Eight);
    encoder.set_compression(png::Compression::Default);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Png(e.to_string()))?;
    let mut bytes = Vec::with_capacity(image.width * image.height * 4);
    for px in image.data.chunks_exact(image.channels) {
        match image.channels {
            1 => bytes.extend_from_slice(&[quantize(px[0]); 3]),
            _ => bytes.extend(px[..3].iter().map(|v| quantize(*v))),
        }
        bytes.push(255);
    }
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::Png(e.to_string()))?;
    writer.finish().map_err(|e| Error::Png(e.to_string()))
}

/// Reads an 8-bit RGB or RGBA PNG as a three-channel image in [0, 1].
pub fn read_png(path: &Path) -> Result<Image> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::Png(format!("{}: expected 8-bit PNG", path.display())));
    }
    let stride = match info.color_type {
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(Error::Png(format!(
                "{}: unsupported color type {other:?}",
                path.display()
            )))
        }
    };
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h * 3);
    for px in buf[..info.buffer_size()].chunks_exact(stride) {
        data.extend(px[..3].iter().map(|&b| b as f64 / 255.0));
    }
    Ok(Image::from_vec(w, h, 3, data))
}
