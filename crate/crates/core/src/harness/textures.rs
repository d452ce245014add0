//! Periodic binary textures with optional pixel jitter, and textured
//! object-on-background scenes.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, NetfragError, Result};
use crate::substrate::{Image, RngStream};

pub const TEXTURE_PERIOD: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TextureKind {
    /// Horizontal bands, two rows on and two off.
    Stripes0,
    /// Vertical bands, two columns on and two off.
    Stripes90,
    /// Checkerboard of 2x2 cells.
    Checker,
    /// One bright pixel per 4x4 cell.
    Dots,
}

impl TextureKind {
    pub const ALL: [TextureKind; 4] = [Self::Stripes0, Self::Stripes90, Self::Checker, Self::Dots];

    pub fn name(self) -> &'static str {
        match self {
            Self::Stripes0 => "stripes_0",
            Self::Stripes90 => "stripes_90",
            Self::Checker => "checker",
            Self::Dots => "dots",
        }
    }

    /// Clean pattern value at absolute pixel `(row, col)`.
    pub fn value(self, row: usize, col: usize) -> f64 {
        let (r, c) = (row % TEXTURE_PERIOD, col % TEXTURE_PERIOD);
        let on = match self {
            Self::Stripes0 => r < 2,
            Self::Stripes90 => c < 2,
            Self::Checker => (r < 2) != (c < 2),
            Self::Dots => r == 1 && c == 1,
        };
        if on {
            1.0
        } else {
            0.0
        }
    }
}

impl fmt::Display for TextureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TextureKind {
    type Err = NetfragError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| NetfragError::InvalidArgument(format!("unknown texture kind {s:?}")))
    }
}

fn jittered(clean: f64, jitter: f64, rng: &mut RngStream) -> f64 {
    if jitter == 0.0 {
        return clean;
    }
    (clean + rng.draw_range(-jitter, jitter)).clamp(0.0, 1.0)
}

fn check_jitter(jitter: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&jitter) {
        return invalid(format!("jitter {jitter} must lie in [0, 1]"));
    }
    Ok(())
}

/// Square image of one texture with uniform jitter in `[-jitter, jitter]`
/// per pixel, clipped to `[0, 1]`.
pub fn generate_texture_mosaic(kind: TextureKind, size: usize, jitter: f64, rng: &mut RngStream) -> Result<Image> {
    if size < 16 {
        return invalid(format!("texture size {size} must be >= 16"));
    }
    check_jitter(jitter)?;
    Image::from_fn(size, size, |r, c| jittered(kind.value(r, c), jitter, rng))
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.top && row < self.top + self.height && col >= self.left && col < self.left + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

/// Scene of `object` texture inside `rect` over `background` texture. The
/// mask is row-major over the image and marks the object pixels.
pub fn generate_object_scene(
    object: TextureKind,
    background: TextureKind,
    rect: Rect,
    size: usize,
    jitter: f64,
    rng: &mut RngStream,
) -> Result<(Image, Vec<bool>)> {
    if size < 16 {
        return invalid(format!("scene size {size} must be >= 16"));
    }
    check_jitter(jitter)?;
    if rect.height == 0 || rect.width == 0 || rect.top + rect.height > size || rect.left + rect.width > size {
        return invalid(format!("object rectangle {rect:?} does not fit a {size}x{size} scene"));
    }
    let mut mask = vec![false; size * size];
    let image = Image::from_fn(size, size, |r, c| {
        let inside = rect.contains(r, c);
        mask[r * size + c] = inside;
        let kind = if inside { object } else { background };
        jittered(kind.value(r, c), jitter, rng)
    })?;
    Ok((image, mask))
}

/// Rectangle of random size in `[min_side, max_side]` placed uniformly with
/// at least `margin` pixels to the frame.
pub fn random_rect(size: usize, min_side: usize, max_side: usize, margin: usize, rng: &mut RngStream) -> Result<Rect> {
    if min_side == 0 || min_side > max_side || max_side + 2 * margin > size {
        return invalid(format!("cannot place a {min_side}..{max_side} rectangle with margin {margin} in {size}"));
    }
    let side = |rng: &mut RngStream| min_side + rng.draw_index(max_side - min_side + 1);
    let height = side(rng);
    let width = side(rng);
    let top = margin + rng.draw_index(size - 2 * margin - height + 1);
    let left = margin + rng.draw_index(size - 2 * margin - width + 1);
    Ok(Rect { top, left, height, width })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stripes_0_bands() {
        let im = generate_texture_mosaic(TextureKind::Stripes0, 16, 0.0, &mut RngStream::new(1, 0)).unwrap();
        for r in 0..16 {
            let expected = if r % 4 < 2 { 1.0 } else { 0.0 };
            assert!((0..16).all(|c| im.get(r, c) == expected));
        }
    }

    #[test]
    fn checker_has_period_four() {
        let im = generate_texture_mosaic(TextureKind::Checker, 16, 0.0, &mut RngStream::new(1, 0)).unwrap();
        for r in 0..12 {
            for c in 0..12 {
                assert_eq!(im.get(r, c), im.get(r + 4, c));
                assert_eq!(im.get(r, c), im.get(r, c + 4));
                assert_ne!(im.get(r, c), im.get(r + 2, c));
            }
        }
    }

    #[test]
    fn jitter_mean_absolute_deviation() {
        let mut rng = RngStream::new(5, 1);
        let mut total = 0.0;
        let mut n = 0;
        for kind in TextureKind::ALL {
            let im = generate_texture_mosaic(kind, 32, 0.1, &mut rng).unwrap();
            for r in 0..32 {
                for c in 0..32 {
                    total += (im.get(r, c) - kind.value(r, c)).abs();
                    n += 1;
                }
            }
        }
        let mad = total / n as f64;
        assert!(mad <= 0.05 && (mad - 0.025).abs() < 0.005, "{mad}");
    }

    #[test]
    fn names_round_trip_and_unknown_rejected() {
        for k in TextureKind::ALL {
            assert_eq!(k.name().parse::<TextureKind>().unwrap(), k);
        }
        assert!("plaid".parse::<TextureKind>().is_err());
    }

    #[test]
    fn small_size_rejected() {
        assert!(generate_texture_mosaic(TextureKind::Dots, 15, 0.0, &mut RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn object_scene_mask_matches_rect() {
        let rect = Rect { top: 10, left: 7, height: 12, width: 12 };
        let (im, mask) =
            generate_object_scene(TextureKind::Checker, TextureKind::Stripes0, rect, 32, 0.0, &mut RngStream::new(2, 0))
                .unwrap();
        assert_eq!(mask.iter().filter(|m| **m).count(), 144);
        assert_eq!(im.get(12, 9), TextureKind::Checker.value(12, 9));
        assert_eq!(im.get(0, 0), TextureKind::Stripes0.value(0, 0));
        let bad = Rect { top: 25, ..rect };
        assert!(generate_object_scene(TextureKind::Checker, TextureKind::Dots, bad, 32, 0.0, &mut RngStream::new(2, 0))
            .is_err());
    }

    #[test]
    fn random_rects_fit() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..200 {
            let r = random_rect(32, 10, 14, 3, &mut rng).unwrap();
            assert!(r.top >= 3 && r.left >= 3 && r.top + r.height <= 29 && r.left + r.width <= 29);
            assert!((10..=14).contains(&r.height) && (10..=14).contains(&r.width));
        }
    }
}
