//! Fixed letter-like binary sprites and scenes that place one of them,
//! translated and scaled with area-weighted rendering, over a background
//! texture.

use std::sync::OnceLock;

use serde::Serialize;

use super::textures::TextureKind;
use crate::error::{invalid, Result};
use crate::substrate::{Image, RngStream};

pub const SPRITE_SIDE: usize = 12;
pub const SPRITE_COUNT: usize = 10;
/// Pixel value of sprite foreground.
pub const FOREGROUND_LEVEL: f64 = 1.0;
/// Peak value of the background texture.
pub const BACKGROUND_LEVEL: f64 = 0.3;

const SPRITE_DATA: &str = include_str!("../../data/sprites.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sprite {
    pub name: String,
    /// Row-major `SPRITE_SIDE x SPRITE_SIDE` support.
    pub bits: Vec<bool>,
}

impl Sprite {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * SPRITE_SIDE + col]
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
}

fn parse_sprites(text: &str) -> Vec<Sprite> {
    let mut out: Vec<Sprite> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with(';')) {
        if let Some(name) = line.strip_prefix("sprite ") {
            out.push(Sprite {
                name: name.to_string(),
                bits: Vec::with_capacity(SPRITE_SIDE * SPRITE_SIDE),
            });
        } else if let Some(s) = out.last_mut() {
            s.bits.extend(line.chars().map(|c| c == '#'));
        }
    }
    out
}

/// The shipped sprite set, in file order.
pub fn sprites() -> &'static [Sprite] {
    static SPRITES: OnceLock<Vec<Sprite>> = OnceLock::new();
    SPRITES.get_or_init(|| {
        let s = parse_sprites(SPRITE_DATA);
        assert!(
            s.len() == SPRITE_COUNT && s.iter().all(|x| x.bits.len() == SPRITE_SIDE * SPRITE_SIDE),
            "malformed sprite data"
        );
        s
    })
}

/// Side of a sprite canvas after nearest-neighbour scaling by `scale`.
pub fn scaled_side(scale: f64) -> usize {
    (SPRITE_SIDE as f64 * scale).round() as usize
}

/// Support of sprite `id` scaled by `scale`: pixel `i` of the scaled canvas
/// samples base pixel `floor((i + 0.5) / scale)`.
pub fn scaled_sprite(id: usize, scale: f64) -> Result<(usize, Vec<bool>)> {
    let Some(sprite) = sprites().get(id) else {
        return invalid(format!("sprite id {id} out of range 0..{SPRITE_COUNT}"));
    };
    if !(scale > 0.0 && scale.is_finite()) {
        return invalid(format!("scale {scale} must be positive"));
    }
    let side = scaled_side(scale);
    let sample = |i: usize| (((i as f64 + 0.5) / scale).floor() as usize).min(SPRITE_SIDE - 1);
    let mut bits = vec![false; side * side];
    for r in 0..side {
        for c in 0..side {
            bits[r * side + c] = sprite.get(sample(r), sample(c));
        }
    }
    Ok((side, bits))
}

/// Sub-samples per pixel side used to compute sprite coverage.
pub const SUPERSAMPLE: usize = 4;

/// One sprite, translated and scaled, over a background texture.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpriteScene {
    pub sprite: usize,
    /// Top-left corner (row, col) of the scaled canvas.
    pub translation: (i64, i64),
    pub scale: f64,
    pub size: usize,
    pub background: TextureKind,
    /// Peak value of the background texture.
    pub background_level: f64,
    /// Half-width of the uniform per-pixel jitter.
    pub jitter: f64,
}

impl SpriteScene {
    pub fn new(sprite: usize, translation: (i64, i64), scale: f64, size: usize) -> Self {
        Self {
            sprite,
            translation,
            scale,
            size,
            background: TextureKind::Dots,
            background_level: BACKGROUND_LEVEL,
            jitter: 0.0,
        }
    }

    /// Renders the scene. A pixel takes the mean over its
    /// `SUPERSAMPLE x SUPERSAMPLE` sub-samples of [`FOREGROUND_LEVEL`] where
    /// the sample falls on the sprite and of the background elsewhere, plus
    /// jitter. The row-major mask flags pixels whose centre lies on the
    /// sprite.
    pub fn render(&self, rng: &mut RngStream) -> Result<(Image, Vec<bool>)> {
        let (side, bits) = scaled_sprite(self.sprite, self.scale)?;
        let (top, left) = self.translation;
        let size = self.size;
        if top < 0 || left < 0 || top as usize + side > size || left as usize + side > size {
            return invalid(format!(
                "sprite of side {side} at {:?} does not fit a {size}x{size} scene",
                self.translation
            ));
        }
        if !(0.0..=1.0).contains(&self.jitter) || !(0.0..=1.0).contains(&self.background_level) {
            return invalid("jitter and background level must lie in [0, 1]");
        }
        let sprite = &sprites()[self.sprite];
        let (top, left) = (top as usize, left as usize);
        let covered = |y: f64, x: f64| {
            let (y, x) = ((y - top as f64) / self.scale, (x - left as f64) / self.scale);
            (0.0..SPRITE_SIDE as f64).contains(&y)
                && (0.0..SPRITE_SIDE as f64).contains(&x)
                && sprite.get(y as usize, x as usize)
        };
        let mut mask = vec![false; size * size];
        for r in 0..side {
            for c in 0..side {
                mask[(top + r) * size + left + c] = bits[r * side + c];
            }
        }
        let n = SUPERSAMPLE as f64;
        let image = Image::from_fn(size, size, |r, c| {
            let ground = self.background_level * self.background.value(r, c);
            let mut sum = 0.0;
            for a in 0..SUPERSAMPLE {
                for b in 0..SUPERSAMPLE {
                    let y = r as f64 + (a as f64 + 0.5) / n;
                    let x = c as f64 + (b as f64 + 0.5) / n;
                    sum += if covered(y, x) { FOREGROUND_LEVEL } else { ground };
                }
            }
            let clean = sum / (n * n);
            if self.jitter == 0.0 {
                clean
            } else {
                (clean + rng.draw_range(-self.jitter, self.jitter)).clamp(0.0, 1.0)
            }
        })?;
        Ok((image, mask))
    }
}

/// Image of independent uniform pixels.
pub fn noise_image(size: usize, rng: &mut RngStream) -> Result<Image> {
    Image::from_fn(size, size, |_, _| rng.draw_uniform())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_distinct_sprites() {
        let s = sprites();
        assert_eq!(s.len(), SPRITE_COUNT);
        for i in 0..s.len() {
            assert!(s[i].area() > 20);
            for j in 0..i {
                assert_ne!(s[i].bits, s[j].bits);
            }
        }
    }

    #[test]
    fn unit_scale_at_origin_is_the_sprite() {
        let (image, mask) = SpriteScene::new(3, (0, 0), 1.0, 32).render(&mut RngStream::new(1, 0)).unwrap();
        let s = &sprites()[3];
        for r in 0..32 {
            for c in 0..32 {
                let expected = r < SPRITE_SIDE && c < SPRITE_SIDE && s.get(r, c);
                assert_eq!(mask[r * 32 + c], expected);
                if expected {
                    assert_eq!(image.get(r, c), FOREGROUND_LEVEL);
                }
            }
        }
    }

    #[test]
    fn scaled_area_tracks_square_of_scale() {
        for id in 0..SPRITE_COUNT {
            let base = sprites()[id].area() as f64;
            let (_, bits) = scaled_sprite(id, 1.25).unwrap();
            let area = bits.iter().filter(|b| **b).count() as f64;
            assert!((area / (1.5625 * base) - 1.0).abs() <= 0.1, "sprite {id}: {area} vs {base}");
        }
    }

    #[test]
    fn out_of_bounds_placement_rejected() {
        let mut rng = RngStream::new(1, 0);
        assert!(SpriteScene::new(0, (25, 0), 1.0, 32).render(&mut rng).is_err());
        assert!(SpriteScene::new(0, (-1, 0), 1.0, 32).render(&mut rng).is_err());
        assert!(SpriteScene::new(10, (0, 0), 1.0, 32).render(&mut rng).is_err());
    }

    #[test]
    fn fractional_scale_gives_partial_coverage_at_edges() {
        let mut scene = SpriteScene::new(7, (4, 4), 1.25, 32);
        scene.background_level = 0.0;
        let (image, _) = scene.render(&mut RngStream::new(1, 0)).unwrap();
        let values: Vec<f64> = image.pixels().to_vec();
        assert!(values.iter().any(|v| *v > 0.0 && *v < FOREGROUND_LEVEL));
        assert!(values.iter().all(|v| (0.0..=FOREGROUND_LEVEL).contains(v)));
    }
}
