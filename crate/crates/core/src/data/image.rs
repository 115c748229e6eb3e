use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

/// 8-bit interleaved RGB image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("image extents must be >= 1, got {width}x{height}")));
        }
        if pixels.len() != 3 * width * height {
            return Err(Error::Shape(format!(
                "{}x{} image needs {} bytes, got {}",
                width,
                height,
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(ImageBuffer { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb.iter().copied().cycle().take(3 * width * height).collect();
        ImageBuffer::new(width, height, pixels)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        ImageBuffer::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[3 * (y * self.width + x) + c]
    }

    /// Sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Contract(format!(
                "crop {width}x{height} at ({x0}, {y0}) exceeds {}x{} image",
                self.width, self.height
            )));
        }
        ImageBuffer::from_fn(width, height, |x, y| {
            let i = 3 * ((y0 + y) * self.width + x0 + x);
            [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
        })
    }

    /// Reflect-pads up to `width x height`: the original sits at offset
    /// `(left, top)` and borders mirror without repeating the edge pixel.
    pub fn reflect_pad(&self, left: usize, top: usize, width: usize, height: usize) -> Result<Self> {
        let mirror = |i: isize, n: usize| -> usize {
            let n = n as isize;
            if n == 1 {
                return 0;
            }
            let period = 2 * (n - 1);
            let m = i.rem_euclid(period);
            (if m < n { m } else { period - m }) as usize
        };
        ImageBuffer::from_fn(width, height, |x, y| {
            let sx = mirror(x as isize - left as isize, self.width);
            let sy = mirror(y as isize - top as isize, self.height);
            let i = 3 * (sy * self.width + sx);
            [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
        })
    }
}

pub fn write_ppm<W: Write>(mut w: W, image: &ImageBuffer) -> Result<()> {
    write!(w, "P6\n{} {}\n255\n", image.width, image.height)?;
    w.write_all(&image.pixels)?;
    Ok(())
}

pub fn save_ppm(image: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::with_capacity(image.pixels.len() + 20);
    write_ppm(&mut bytes, image)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    read_ppm(&fs::read(path)?)
}

/// Parses a binary `P6` PPM with maxval 255. Comments (`#` to end of line)
/// are accepted between header fields.
pub fn read_ppm(bytes: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0;
    let parse_err = |offset: usize, message: &str| Error::Parse { offset, message: message.to_string() };
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(parse_err(0, "missing P6 magic"));
    }
    pos += 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        let start_ws = pos;
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        if pos == start_ws {
            return Err(parse_err(pos, "expected whitespace in header"));
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(pos, "expected a decimal header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are ascii");
        *field = text.parse().map_err(|_| parse_err(start, "header field out of range"))?;
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(parse_err(pos, "expected single whitespace after maxval"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(parse_err(pos, &format!("unsupported maxval {maxval}, expected 255")));
    }
    if width == 0 || height == 0 {
        return Err(parse_err(pos, "image extents must be >= 1"));
    }
    let need = 3 * width * height;
    if bytes.len() - pos < need {
        return Err(parse_err(
            bytes.len(),
            &format!("truncated pixel data: expected {need} bytes, found {}", bytes.len() - pos),
        ));
    }
    ImageBuffer::new(width, height, bytes[pos..pos + need].to_vec())
}

/// Stacks equally sized images into an `(N, 3, H, W)` tensor scaled to `[0, 1]`.
pub fn image_to_tensor(images: &[&ImageBuffer]) -> Result<Tensor<f32>> {
    let first = images.first().ok_or_else(|| Error::Contract("no images to convert".into()))?;
    let (w, h) = (first.width, first.height);
    if images.iter().any(|im| im.width != w || im.height != h) {
        return Err(Error::Shape("images in a batch must share extents".into()));
    }
    let shape = Shape::new(images.len(), 3, h, w)?;
    Ok(Tensor::from_fn(shape, |n, c, y, x| images[n].pixels[3 * (y * w + x) + c] as f32 / 255.0))
}

/// Inverse of [`image_to_tensor`]: scales by 255, rounds half up and clamps.
pub fn tensor_to_images(t: &Tensor<f32>) -> Result<Vec<ImageBuffer>> {
    let s = t.shape();
    if s.channels != 3 {
        return Err(Error::Shape(format!("expected 3 channels, got {s}")));
    }
    (0..s.batch)
        .map(|n| {
            ImageBuffer::from_fn(s.width, s.height, |x, y| {
                let px = |c| (t.at(n, c, y, x) as f64 * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
                [px(0), px(1), px(2)]
            })
        })
        .collect()
}
