#include <atomic>
#include <stdexcept>
#include <string>

#include "gbot/kernels.h"

namespace gbot::kernels {
namespace {

Backend DetectBackend() {
#if defined(GBOT_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2")) return Backend::kAvx2;
#endif
  return Backend::kScalar;
}

std::atomic<Backend> &Selected() {
  static std::atomic<Backend> selected{DetectBackend()};
  return selected;
}

}  // namespace

const char *BackendName(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool BackendAvailable(Backend backend) {
  if (backend == Backend::kScalar) return true;
#if defined(GBOT_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend ActiveBackend() { return Selected().load(std::memory_order_relaxed); }

void ForceBackend(Backend backend) {
  if (!BackendAvailable(backend)) {
    throw std::invalid_argument(std::string("kernel backend not available: ") +
                                BackendName(backend));
  }
  Selected().store(backend, std::memory_order_relaxed);
}

void ResetBackend() {
  Selected().store(DetectBackend(), std::memory_order_relaxed);
}

const KernelTable &Table(Backend backend) {
#if defined(GBOT_HAVE_AVX2)
  if (backend == Backend::kAvx2) return avx2::kTable;
#endif
  if (backend != Backend::kScalar) {
    throw std::invalid_argument(std::string("kernel backend not compiled: ") +
                                BackendName(backend));
  }
  return scalar::kTable;
}

const KernelTable &Active() { return Table(ActiveBackend()); }

Pose34 Pose34::From(const RigidTransform &pose) {
  Pose34 p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.r[3 * r + c] = pose.rotation(r, c);
    p.t[r] = pose.translation[r];
  }
  return p;
}

PointsSoA::PointsSoA(std::span<const Vec3> points) {
  x.reserve(points.size());
  y.reserve(points.size());
  z.reserve(points.size());
  for (const Vec3 &p : points) push_back(p);
}

PointsSoA PointsSoA::Transformed(const Pose34 &pose) const {
  PointsSoA out;
  out.x.resize(size());
  out.y.resize(size());
  out.z.resize(size());
  const double *r = pose.r;
  for (std::size_t i = 0; i < size(); ++i) {
    out.x[i] = r[0] * x[i] + r[1] * y[i] + r[2] * z[i] + pose.t[0];
    out.y[i] = r[3] * x[i] + r[4] * y[i] + r[5] * z[i] + pose.t[1];
    out.z[i] = r[6] * x[i] + r[7] * y[i] + r[8] * z[i] + pose.t[2];
  }
  return out;
}

}  // namespace gbot::kernels
