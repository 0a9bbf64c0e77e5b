#pragma once

#include <optional>

namespace cmfd {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

/// Planar affine map x' = A x + t. Stored as the top two rows of the
/// homogeneous 3x3 matrix; the third row is implicitly (0, 0, 1).
struct AffineTransform {
    double a11 = 1.0, a12 = 0.0;
    double a21 = 0.0, a22 = 1.0;
    double tx = 0.0, ty = 0.0;

    Vec2 apply(Vec2 p) const {
        return {a11 * p.x + a12 * p.y + tx, a21 * p.x + a22 * p.y + ty};
    }
    /// Linear part only (rotation/scale, no translation).
    Vec2 apply_linear(Vec2 p) const {
        return {a11 * p.x + a12 * p.y, a21 * p.x + a22 * p.y};
    }

    double det() const { return a11 * a22 - a12 * a21; }

    /// Inverse map; requires det() != 0.
    AffineTransform inverse() const;

    /// Compose A = R(theta) * diag(sx, sy) with translation t.
    static AffineTransform from_rotation_scale(double theta_rad, double sx, double sy,
                                               double tx, double ty);

    bool operator==(const AffineTransform&) const = default;
};

/// Rotation angle plus per-axis scale factors recovered from the linear
/// part, assuming the A = R(theta) * diag(sx, sy) composition.
struct AffineDecomposition {
    double theta = 0.0;  // radians
    double sx = 1.0;
    double sy = 1.0;
    double tx = 0.0;
    double ty = 0.0;
};

/// Decompose A = R(theta) * diag(sx, sy). theta = atan2(a21, a11); sx is the
/// norm of the first column; sy comes from rotating A back by -theta.
/// Returns nullopt when the first column is numerically zero.
std::optional<AffineDecomposition> decompose_affine(const AffineTransform& h);

}  // namespace cmfd
