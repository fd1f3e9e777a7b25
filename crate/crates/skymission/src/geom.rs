//! Scalar-generic 3D vector math used by the simulator and its motion filters.

use num_traits::Float;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Float> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or zero if the norm is zero.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == T::zero() {
            Vec3::zero()
        } else {
            self * (T::one() / n)
        }
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }
}

/// Clamp the magnitude of `v` to `limit`, preserving direction.
pub fn clamp_speed<T: Float>(v: Vec3<T>, limit: T) -> Vec3<T> {
    let n = v.norm();
    if n > limit && n > T::zero() {
        v * (limit / n)
    } else {
        v
    }
}

/// Remove from `v` any positive component along unit direction `dir`.
pub fn remove_approach<T: Float>(v: Vec3<T>, dir: Vec3<T>) -> Vec3<T> {
    let a = v.dot(dir);
    if a > T::zero() {
        v - dir * a
    } else {
        v
    }
}

impl<T: Float> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Float> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Float> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl<T: Float> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_345() {
        let v: Vec3<f64> = Vec3::new(3.0, 4.0, 0.0);
        assert_eq!(v.norm(), 5.0);
        let w: Vec3<f32> = Vec3::new(3.0, 4.0, 0.0);
        assert_eq!(w.norm(), 5.0);
    }

    #[test]
    fn clamp_preserves_direction() {
        let v = Vec3::new(3.0_f64, 4.0, 0.0);
        let c = clamp_speed(v, 2.0);
        assert!((c.norm() - 2.0).abs() < 1e-12);
        assert!((c.normalized() - v.normalized()).norm() < 1e-12);
    }

    #[test]
    fn remove_approach_zeroes_radial_component() {
        let v = Vec3::new(2.0_f64, 0.0, 0.0);
        let dir = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(remove_approach(v, dir), Vec3::zero());
        // moving away is untouched
        assert_eq!(remove_approach(-v, dir), -v);
    }
}
