#include "cmfd/affine.hpp"

#include <cmath>
#include <stdexcept>

namespace cmfd {

AffineTransform AffineTransform::inverse() const {
    const double d = det();
    if (d == 0.0) {
        throw std::domain_error("AffineTransform::inverse: singular linear part");
    }
    AffineTransform inv;
    inv.a11 = a22 / d;
    inv.a12 = -a12 / d;
    inv.a21 = -a21 / d;
    inv.a22 = a11 / d;
    inv.tx = -(inv.a11 * tx + inv.a12 * ty);
    inv.ty = -(inv.a21 * tx + inv.a22 * ty);
    return inv;
}

AffineTransform AffineTransform::from_rotation_scale(double theta_rad, double sx, double sy,
                                                     double tx, double ty) {
    const double c = std::cos(theta_rad);
    const double s = std::sin(theta_rad);
    AffineTransform h;
    h.a11 = sx * c;
    h.a12 = -sy * s;
    h.a21 = sx * s;
    h.a22 = sy * c;
    h.tx = tx;
    h.ty = ty;
    return h;
}

std::optional<AffineDecomposition> decompose_affine(const AffineTransform& h) {
    const double col1_norm = std::hypot(h.a11, h.a21);
    if (col1_norm < 1e-12) {
        return std::nullopt;
    }
    AffineDecomposition d;
    d.theta = std::atan2(h.a21, h.a11);
    d.sx = col1_norm;  // atan2 keeps cos(theta) sign-consistent with a11, so sx >= 0
    const double c = std::cos(d.theta);
    const double s = std::sin(d.theta);
    // Second diagonal entry of R(-theta) * A; negative sy flags a reflection.
    d.sy = -h.a12 * s + h.a22 * c;
    d.tx = h.tx;
    d.ty = h.ty;
    return d;
}

}  // namespace cmfd
