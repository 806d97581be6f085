#pragma once

#include <vector>

#include "vlmlab/errors.hpp"
#include "vlmlab/numeric.hpp"

namespace vlmlab {

// Rotary-embedding frequency table for one head dimension. thetas[m] =
// base^(-2m/head_dim) for m = 0..head_dim/2-1; strictly decreasing for
// base > 1.
struct RopeParams {
    int head_dim = 0;
    double base = 10000.0;
    std::vector<double> thetas;
};

// A vector tagged with the position it was rotated to. The rotation is an
// isometry, so values keeps the pre-rotation Euclidean norm.
struct RotatedVector {
    double position = 0.0;
    Vec values;
};

// head_dim must be even and >= 2; base must be positive.
RopeParams make_thetas(int head_dim, double base = 10000.0);

// Rotates consecutive pairs (v[2m], v[2m+1]) by angle position * thetas[m],
// in place. position is a real number here so closed-form checks can use
// fractional angles; the model path only ever passes integer ids.
void rotate_inplace(const RopeParams& params, double position, double* v);

RotatedVector apply_rotation(const RopeParams& params, double position, const Vec& v);

// dot(R_p u, R_q v): the two rotated vectors' inner product.
double rotated_dot_direct(const RopeParams& params, double p, const Vec& u, double q, const Vec& v);

// dot(u, R_{q-p} v): the same quantity via the relative form, which shows the
// product depends on q-p only.
double rotated_dot_relative(const RopeParams& params, double p, const Vec& u, double q, const Vec& v);

// Direct form; in debug builds also evaluates the relative form and asserts
// agreement.
double rotated_dot(const RopeParams& params, double p, const Vec& u, double q, const Vec& v);

}  // namespace vlmlab
