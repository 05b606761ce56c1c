//! Line drawings of scenes as 256x256 grayscale PNGs.

use rewardforge_core::envs::mountain_car::{MAX_POSITION, MIN_POSITION};
use rewardforge_core::envs::Scene;

pub const SIZE: usize = 256;

struct Canvas {
    pixels: Vec<u8>,
}

impl Canvas {
    fn new() -> Self {
        Self { pixels: vec![255; SIZE * SIZE] }
    }

    fn plot(&mut self, x: i64, y: i64) {
        if (0..SIZE as i64).contains(&x) && (0..SIZE as i64).contains(&y) {
            self.pixels[y as usize * SIZE + x as usize] = 0;
        }
    }

    fn line(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64)) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as i64;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            self.plot((x0 + t * (x1 - x0)).round() as i64, (y0 + t * (y1 - y0)).round() as i64);
        }
    }

    fn rect(&mut self, (cx, cy): (f64, f64), w: f64, h: f64) {
        let (l, r, t, b) = (cx - w / 2.0, cx + w / 2.0, cy - h / 2.0, cy + h / 2.0);
        self.line((l, t), (r, t));
        self.line((r, t), (r, b));
        self.line((r, b), (l, b));
        self.line((l, b), (l, t));
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut encoder = png::Encoder::new(&mut out, SIZE as u32, SIZE as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().expect("in-memory png header");
        writer.write_image_data(&self.pixels).expect("in-memory png data");
        writer.finish().expect("in-memory png");
        out
    }
}

/// Draws one scene. CartPole: track, cart box and pole over x in [-3, 3];
/// MountainCar: the hill curve and a box at the car position.
pub fn render_png(scene: &Scene) -> Vec<u8> {
    let mut canvas = Canvas::new();
    match *scene {
        Scene::CartPole { cart_x, pole_tip } => {
            let scale = SIZE as f64 / 6.0;
            let ground = 170.0;
            let px = |x: f64, y: f64| ((x + 3.0) * scale, ground - y * scale);
            canvas.line(px(-3.0, 0.0), px(3.0, 0.0));
            canvas.rect(px(cart_x, 0.0), 0.5 * scale, 0.3 * scale);
            canvas.line(px(cart_x, 0.0), px(pole_tip.0, pole_tip.1));
        }
        Scene::MountainCar { car } => {
            let width = MAX_POSITION - MIN_POSITION;
            let px = |x: f64, y: f64| ((x - MIN_POSITION) / width * (SIZE as f64 - 1.0), 128.0 - y * 100.0);
            let n = 200;
            for i in 0..n {
                let x0 = MIN_POSITION + width * i as f64 / n as f64;
                let x1 = MIN_POSITION + width * (i + 1) as f64 / n as f64;
                canvas.line(px(x0, (3.0 * x0).sin()), px(x1, (3.0 * x1).sin()));
            }
            canvas.rect(px(car.0, car.1), 12.0, 8.0);
        }
    }
    canvas.encode()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_as_256_square_with_ink() {
        let bytes = render_png(&Scene::CartPole { cart_x: 0.0, pole_tip: (0.0, 1.0) });
        let decoder = png::Decoder::new(bytes.as_slice());
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (256, 256));
        let ink = buf.iter().filter(|p| **p == 0).count();
        assert!(ink > 100 && ink < buf.len() / 4, "{ink}");
    }
}
