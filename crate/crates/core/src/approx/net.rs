//! Grid nets around a center point.

use nalgebra::DVector;

use crate::scalar::{lit, to_f64, Real};

/// An axis-aligned grid of spacing `h` through `center`, restricted to the
/// cube `|j_i| <= half_width` in grid coordinates and optionally to a
/// Euclidean ball around the center.
#[derive(Clone, Debug)]
pub struct Grid<T: Real> {
    pub center: DVector<T>,
    pub spacing: T,
    pub half_width: usize,
    pub clip_radius: Option<T>,
}

impl<T: Real> Grid<T> {
    /// Grid whose points cover the ball of radius `radius` around `center`
    /// to within `cover` (every ball point has a grid point at distance at
    /// most `cover`).
    pub fn covering(center: DVector<T>, radius: T, cover: T, clip: bool) -> Self {
        let k = center.len();
        if radius <= T::zero() || cover <= T::zero() || k == 0 {
            return Self {
                center,
                spacing: T::one(),
                half_width: 0,
                clip_radius: None,
            };
        }
        let spacing = lit::<T>(2.0) * cover / lit::<T>(k as f64).sqrt();
        let half_width = to_f64((radius / spacing).ceil()) as usize;
        Self {
            center,
            spacing,
            half_width,
            clip_radius: clip.then(|| radius + cover),
        }
    }

    /// Points in the full cube, ignoring the clip.
    pub fn cube_size(&self) -> u128 {
        (2 * self.half_width as u128 + 1).saturating_pow(self.center.len() as u32)
    }

    /// Visits the points in row-major order (first axis slowest) together
    /// with their position in that order, skipping clipped points.
    pub fn for_each(&self, mut f: impl FnMut(u128, &DVector<T>)) {
        let k = self.center.len();
        let w = self.half_width as i64;
        let mut j = vec![-w; k];
        let mut p = self.center.clone();
        let clip2 = self.clip_radius.map(|r| r * r);
        let mut index: u128 = 0;
        loop {
            let mut dist2 = T::zero();
            for i in 0..k {
                let off = self.spacing * lit::<T>(j[i] as f64);
                p[i] = self.center[i] + off;
                dist2 += off * off;
            }
            if clip2.is_none_or(|r2| dist2 <= r2) {
                f(index, &p);
            }
            index += 1;
            let mut pos = k;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                if j[pos] < w {
                    j[pos] += 1;
                    break;
                }
                j[pos] = -w;
            }
        }
    }

    pub fn points(&self) -> Vec<DVector<T>> {
        let mut out = Vec::new();
        self.for_each(|_, p| out.push(p.clone()));
        out
    }
}

/// A `sqrt(eps r / c)`-net of the ball of radius `sqrt(c r)` around
/// `w_tilde`: the full axis-aligned grid through `w_tilde` with spacing
/// `2 sqrt(eps r / c) / sqrt(k)` over the enclosing cube.
pub fn build_net<T: Real>(w_tilde: &DVector<T>, r_b: T, eps: T, c: T) -> Vec<DVector<T>> {
    if r_b <= T::zero() {
        return vec![w_tilde.clone()];
    }
    let radius = (c * r_b).sqrt();
    let cover = (eps * r_b / c).sqrt();
    Grid::covering(w_tilde.clone(), radius, cover, false).points()
}
