// Portable reference kernels. Compiled with -ffp-contract=off so that the
// AVX2 variants, which repeat the same operation order lane by lane, produce
// bit-identical per-point values.

#include <cmath>
#include <limits>

#include "gbot/kernels.h"

namespace gbot::kernels::scalar {
namespace {

double AddDistanceSum(const Pose34 &pred, const Pose34 &gt, const double *x,
                      const double *y, const double *z, std::size_t n) {
  const double *a = pred.r;
  const double *b = gt.r;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = a[0] * x[i] + a[1] * y[i] + a[2] * z[i] + pred.t[0];
    const double ay = a[3] * x[i] + a[4] * y[i] + a[5] * z[i] + pred.t[1];
    const double az = a[6] * x[i] + a[7] * y[i] + a[8] * z[i] + pred.t[2];
    const double bx = b[0] * x[i] + b[1] * y[i] + b[2] * z[i] + gt.t[0];
    const double by = b[3] * x[i] + b[4] * y[i] + b[5] * z[i] + gt.t[1];
    const double bz = b[6] * x[i] + b[7] * y[i] + b[8] * z[i] + gt.t[2];
    const double dx = ax - bx;
    const double dy = ay - by;
    const double dz = az - bz;
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum;
}

double ClosestDistanceSum(const double *px, const double *py, const double *pz,
                          std::size_t n, const double *qx, const double *qy,
                          const double *qz, std::size_t m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = px[i] - qx[j];
      const double dy = py[i] - qy[j];
      const double dz = pz[i] - qz[j];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) best = d2;
    }
    sum += std::sqrt(best);
  }
  return sum;
}

std::size_t FpsUpdate(const double *x, const double *y, const double *z,
                      std::size_t n, const double c[3], double *min_d2) {
  std::size_t best = n;
  double best_d2 = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (min_d2[i] < 0.0) continue;
    const double dx = x[i] - c[0];
    const double dy = y[i] - c[1];
    const double dz = z[i] - c[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 < min_d2[i]) min_d2[i] = d2;
    if (min_d2[i] > best_d2) {
      best_d2 = min_d2[i];
      best = i;
    }
  }
  return best;
}

void ReprojectionNormalEquations(const Pose34 &pose,
                                 const ReprojectionProblem &p,
                                 NormalEquations *out) {
  *out = NormalEquations{};
  const double *r = pose.r;
  const double *t = pose.t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = p.w[i];
    if (!(w > 0.0)) continue;
    const double xo = p.points.x[i], yo = p.points.y[i], zo = p.points.z[i];
    const double X = r[0] * xo + r[1] * yo + r[2] * zo + t[0];
    const double Y = r[3] * xo + r[4] * yo + r[5] * zo + t[1];
    const double Z = r[6] * xo + r[7] * yo + r[8] * zo + t[2];
    if (!(Z > kMinDepth)) {
      ++out->behind;
      continue;
    }
    ++out->used;
    const double iz = 1.0 / Z;
    const double xn = X * iz;
    const double yn = Y * iz;
    const double ru = w * (p.fx * xn + p.cx - p.u[i]);
    const double rv = w * (p.fy * yn + p.cy - p.v[i]);
    const double wfx = w * p.fx;
    const double wfy = w * p.fy;
    // Rows of d r / d (omega, v) for a left-multiplied perturbation.
    const double ju[6] = {-wfx * xn * yn, wfx * (1.0 + xn * xn), -wfx * yn,
                          wfx * iz,       0.0,                   -wfx * xn * iz};
    const double jv[6] = {-wfy * (1.0 + yn * yn), wfy * xn * yn, wfy * xn,
                          0.0,                    wfy * iz,      -wfy * yn * iz};
    for (int a = 0; a < 6; ++a) {
      for (int b = a; b < 6; ++b) {
        out->h[a * 6 + b] += ju[a] * ju[b] + jv[a] * jv[b];
      }
      out->g[a] += ju[a] * ru + jv[a] * rv;
    }
    out->cost += ru * ru + rv * rv;
  }
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < a; ++b) out->h[a * 6 + b] = out->h[b * 6 + a];
  }
}

double ReprojectionCost(const Pose34 &pose, const ReprojectionProblem &p) {
  const double *r = pose.r;
  const double *t = pose.t;
  double cost = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = p.w[i];
    if (!(w > 0.0)) continue;
    const double xo = p.points.x[i], yo = p.points.y[i], zo = p.points.z[i];
    const double X = r[0] * xo + r[1] * yo + r[2] * zo + t[0];
    const double Y = r[3] * xo + r[4] * yo + r[5] * zo + t[1];
    const double Z = r[6] * xo + r[7] * yo + r[8] * zo + t[2];
    if (!(Z > kMinDepth)) return std::numeric_limits<double>::infinity();
    const double iz = 1.0 / Z;
    const double ru = w * (p.fx * (X * iz) + p.cx - p.u[i]);
    const double rv = w * (p.fy * (Y * iz) + p.cy - p.v[i]);
    cost += ru * ru + rv * rv;
  }
  return cost;
}

}  // namespace

const KernelTable kTable = {
    AddDistanceSum,
    ClosestDistanceSum,
    FpsUpdate,
    ReprojectionNormalEquations,
    ReprojectionCost,
};

}  // namespace gbot::kernels::scalar
