#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference
// implementation and, on x86-64, an AVX2 variant. The variant is picked once
// at runtime from the CPU feature flags; ForceBackend() overrides the choice
// (tests use it to check the variants against each other).
//
// Point sets are passed structure-of-arrays. Poses are 3x4 row-major.

#include <cstddef>
#include <span>
#include <vector>

#include "gbot/geom.h"

namespace gbot::kernels {

enum class Backend { kScalar, kAvx2 };

const char *BackendName(Backend backend);
bool BackendAvailable(Backend backend);
Backend ActiveBackend();
// Throws std::invalid_argument if the backend is not available on this CPU.
void ForceBackend(Backend backend);
// Restores the automatically detected backend.
void ResetBackend();

struct Pose34 {
  double r[9];  // row-major rotation
  double t[3];

  static Pose34 From(const RigidTransform &pose);
};

struct PointsSoA {
  std::vector<double> x, y, z;

  PointsSoA() = default;
  explicit PointsSoA(std::span<const Vec3> points);

  std::size_t size() const { return x.size(); }
  void push_back(const Vec3 &p) {
    x.push_back(p.x());
    y.push_back(p.y());
    z.push_back(p.z());
  }
  void clear() {
    x.clear();
    y.clear();
    z.clear();
  }
  PointsSoA Transformed(const Pose34 &pose) const;
};

// Weighted reprojection problem in the frame of a single 6-DoF body.
struct ReprojectionProblem {
  double fx, fy, cx, cy;
  PointsSoA points;          // model points in the optimized body's frame
  std::vector<double> u, v;  // observed pixels
  std::vector<double> w;     // row weights (confidence); 0 disables a point

  std::size_t size() const { return points.size(); }
};

// Camera-space depth below which a point counts as behind the camera.
inline constexpr double kMinDepth = 1e-6;

// Gauss-Newton normal equations of the weighted residual
// r_i = w_i * (project(pose * X_i) - (u_i, v_i)) under a left-multiplied twist
// perturbation (angular, linear).
struct NormalEquations {
  double h[36] = {};  // row-major 6x6, full
  double g[6] = {};   // Jᵀr
  double cost = 0.0;  // Σ |r_i|²
  std::size_t used = 0;    // points with w > 0 in front of the camera
  std::size_t behind = 0;  // points with w > 0 at depth <= kMinDepth
};

struct KernelTable {
  // Σ_i ‖pred·x_i − gt·x_i‖, summed in index order.
  double (*add_distance_sum)(const Pose34 &pred, const Pose34 &gt,
                             const double *x, const double *y, const double *z,
                             std::size_t n);
  // Σ_i min_j ‖p_i − q_j‖, summed in index order.
  double (*closest_distance_sum)(const double *px, const double *py,
                                 const double *pz, std::size_t n,
                                 const double *qx, const double *qy,
                                 const double *qz, std::size_t m);
  // For every i with min_d2[i] >= 0: min_d2[i] = min(min_d2[i], ‖x_i − c‖²).
  // Returns the index of the largest min_d2 (lowest index on ties), or n if
  // every entry is negative. Negative entries mark already selected points.
  std::size_t (*fps_update)(const double *x, const double *y, const double *z,
                            std::size_t n, const double c[3], double *min_d2);
  void (*reprojection_normal_equations)(const Pose34 &pose,
                                        const ReprojectionProblem &problem,
                                        NormalEquations *out);
  // Σ |r_i|²; +inf if any weighted point lies behind the camera.
  double (*reprojection_cost)(const Pose34 &pose,
                              const ReprojectionProblem &problem);
};

const KernelTable &Active();
const KernelTable &Table(Backend backend);

namespace scalar {
extern const KernelTable kTable;
}
#if defined(GBOT_HAVE_AVX2)
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace gbot::kernels
