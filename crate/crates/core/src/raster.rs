//! Interleaved 8-bit RGB raster.

/// An RGB image with 8-bit interleaved channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    pub width: u32,
    pub height: u32,
    /// len = width * height * 3, layout RGBRGB...
    pub data: Vec<u8>,
}

impl RgbRaster {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![0; (width * height * 3) as usize] }
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Bilinear sample at continuous coordinates where integer positions are
    /// pixel centres. Out-of-range coordinates clamp to the edge.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let w = self.width as i64;
        let h = self.height as i64;
        let x = x.clamp(0.0, (w - 1) as f64);
        let y = y.clamp(0.0, (h - 1) as f64);
        let x0 = x.floor() as i64;
        let y0 = y.floor() as i64;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let p00 = self.pixel(x0 as u32, y0 as u32);
        let p10 = self.pixel(x1 as u32, y0 as u32);
        let p01 = self.pixel(x0 as u32, y1 as u32);
        let p11 = self.pixel(x1 as u32, y1 as u32);
        let mut out = [0.0f64; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = top * (1.0 - fy) + bot * fy;
        }
        out
    }
}
