#include "vlmlab/rope.hpp"

#include <cassert>
#include <cmath>

namespace vlmlab {

RopeParams make_thetas(int head_dim, double base) {
    if (head_dim < 2 || head_dim % 2 != 0)
        throw ShapeError("make_thetas: head_dim must be even and >= 2, got " + std::to_string(head_dim));
    if (!(base > 0.0))
        throw ConfigError("make_thetas: base must be positive");
    RopeParams params;
    params.head_dim = head_dim;
    params.base = base;
    params.thetas.resize(static_cast<size_t>(head_dim / 2));
    for (int m = 0; m < head_dim / 2; ++m)
        params.thetas[static_cast<size_t>(m)] = std::pow(base, -2.0 * m / head_dim);
    return params;
}

void rotate_inplace(const RopeParams& params, double position, double* v) {
    for (int m = 0; m < params.head_dim / 2; ++m) {
        const double angle = position * params.thetas[static_cast<size_t>(m)];
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double v0 = v[2 * m];
        const double v1 = v[2 * m + 1];
        v[2 * m] = c * v0 - s * v1;
        v[2 * m + 1] = s * v0 + c * v1;
    }
}

RotatedVector apply_rotation(const RopeParams& params, double position, const Vec& v) {
    if (static_cast<int>(v.size()) != params.head_dim)
        throw ShapeError("apply_rotation: vector length " + std::to_string(v.size()) +
                         " != head_dim " + std::to_string(params.head_dim));
    RotatedVector out{position, v};
    rotate_inplace(params, position, out.values.data());
    return out;
}

double rotated_dot_direct(const RopeParams& params, double p, const Vec& u, double q, const Vec& v) {
    const RotatedVector ru = apply_rotation(params, p, u);
    const RotatedVector rv = apply_rotation(params, q, v);
    return dot(ru.values, rv.values);
}

double rotated_dot_relative(const RopeParams& params, double p, const Vec& u, double q, const Vec& v) {
    const RotatedVector rv = apply_rotation(params, q - p, v);
    if (u.size() != rv.values.size())
        throw ShapeError("rotated_dot_relative: length mismatch");
    return dot(u, rv.values);
}

double rotated_dot(const RopeParams& params, double p, const Vec& u, double q, const Vec& v) {
    const double direct = rotated_dot_direct(params, p, u, q, v);
#ifndef NDEBUG
    const double relative = rotated_dot_relative(params, p, u, q, v);
    assert(std::abs(direct - relative) < 1e-6);
#endif
    return direct;
}

}  // namespace vlmlab
