#pragma once

#include <vector>

#include "cdi/geometry.hpp"
#include "cdi/tensor.hpp"

namespace cdi::tomo {

// Joseph-style ray trace shared by the forward and back projector so the
// pair is an exact matrix transpose.
//
// Discrete model for ray (theta, s): step once per image row (column when
// the ray runs closer to horizontal), linearly interpolating between the two
// adjacent pixel centers; each step contributes weight dl = pixel / |dominant
// direction component|. With an attenuation map, a sample emitted at step k
// is damped by exp(-(half its own step's mu path + the full mu path of every
// step between it and the detector)); the detector sits in the +t direction
// along (-sin theta, cos theta).
struct RayTrace {
    std::vector<int> pix0, pix1;     // flat pixel pairs per step, -1 = outside
    std::vector<double> w0, w1;      // interpolation weights in [0, 1]
    std::vector<double> att;         // per-step attenuation factor (1 without mu)
    double dl = 0.0;
    int steps = 0;

    void resize(int n);
};

// mu may be null (no attenuation). angle_idx is the global angle index.
void trace_ray(const double* mu, const Geometry& g, int angle_idx, int bin, RayTrace& ws);

// activity [n,n] -> sinogram [rows(set), n]; linear in activity for fixed mu.
Tensor forward_project(const Tensor& activity, const Tensor* mu, const Geometry& g, AngleSet set);

// Exact adjoint of forward_project with the same mu and angle set.
Tensor back_project(const Tensor& sino, const Tensor* mu, const Geometry& g, AngleSet set);

// Serial reference implementations, kept for testing and benchmarking the
// OpenMP kernels above.
namespace ref {
Tensor forward_project(const Tensor& activity, const Tensor* mu, const Geometry& g, AngleSet set);
Tensor back_project(const Tensor& sino, const Tensor* mu, const Geometry& g, AngleSet set);
} // namespace ref

} // namespace cdi::tomo
