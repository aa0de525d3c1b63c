// AVX2 kernels, four doubles per lane group. Per-point arithmetic follows the
// scalar reference operation by operation (no FMA), so per-point distances
// are bit-identical. Reductions that must match the scalar result exactly
// (distance sums) are finished in index order; the normal-equation
// accumulators reduce lane-wise and agree to rounding.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "gbot/kernels.h"

namespace gbot::kernels::avx2 {
namespace {

struct Rot4 {
  __m256d r[9];
  __m256d t[3];

  explicit Rot4(const Pose34 &p) {
    for (int k = 0; k < 9; ++k) r[k] = _mm256_set1_pd(p.r[k]);
    for (int k = 0; k < 3; ++k) t[k] = _mm256_set1_pd(p.t[k]);
  }

  // ((r0*x + r1*y) + r2*z) + t, matching the scalar evaluation order.
  __m256d Row(int row, __m256d x, __m256d y, __m256d z) const {
    __m256d s = _mm256_add_pd(_mm256_mul_pd(r[3 * row], x),
                              _mm256_mul_pd(r[3 * row + 1], y));
    s = _mm256_add_pd(s, _mm256_mul_pd(r[3 * row + 2], z));
    return _mm256_add_pd(s, t[row]);
  }
};

inline __m256d Norm2(__m256d dx, __m256d dy, __m256d dz) {
  return _mm256_add_pd(
      _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
      _mm256_mul_pd(dz, dz));
}

// Loads min(count, 4) doubles and zero-fills the remaining lanes.
inline __m256d LoadPartial(const double *src, std::size_t count) {
  if (count >= 4) return _mm256_loadu_pd(src);
  alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < count; ++k) buf[k] = src[k];
  return _mm256_load_pd(buf);
}

inline double HorizontalSum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double AddDistanceSum(const Pose34 &pred, const Pose34 &gt, const double *x,
                      const double *y, const double *z, std::size_t n) {
  const Rot4 a(pred);
  const Rot4 b(gt);
  alignas(32) double dist[4];
  double sum = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vx = _mm256_loadu_pd(x + i);
    const __m256d vy = _mm256_loadu_pd(y + i);
    const __m256d vz = _mm256_loadu_pd(z + i);
    const __m256d dx = _mm256_sub_pd(a.Row(0, vx, vy, vz), b.Row(0, vx, vy, vz));
    const __m256d dy = _mm256_sub_pd(a.Row(1, vx, vy, vz), b.Row(1, vx, vy, vz));
    const __m256d dz = _mm256_sub_pd(a.Row(2, vx, vy, vz), b.Row(2, vx, vy, vz));
    _mm256_store_pd(dist, _mm256_sqrt_pd(Norm2(dx, dy, dz)));
    sum += dist[0];
    sum += dist[1];
    sum += dist[2];
    sum += dist[3];
  }
  // Tail in the same order; summing it separately would regroup the adds.
  for (; i < n; ++i) {
    const double *ra = pred.r;
    const double *rb = gt.r;
    const double dx = (ra[0] * x[i] + ra[1] * y[i] + ra[2] * z[i] + pred.t[0]) -
                      (rb[0] * x[i] + rb[1] * y[i] + rb[2] * z[i] + gt.t[0]);
    const double dy = (ra[3] * x[i] + ra[4] * y[i] + ra[5] * z[i] + pred.t[1]) -
                      (rb[3] * x[i] + rb[4] * y[i] + rb[5] * z[i] + gt.t[1]);
    const double dz = (ra[6] * x[i] + ra[7] * y[i] + ra[8] * z[i] + pred.t[2]) -
                      (rb[6] * x[i] + rb[7] * y[i] + rb[8] * z[i] + gt.t[2]);
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return sum;
}

double ClosestDistanceSum(const double *px, const double *py, const double *pz,
                          std::size_t n, const double *qx, const double *qy,
                          const double *qz, std::size_t m) {
  const double inf = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const __m256d ax = _mm256_set1_pd(px[i]);
    const __m256d ay = _mm256_set1_pd(py[i]);
    const __m256d az = _mm256_set1_pd(pz[i]);
    __m256d best4 = _mm256_set1_pd(inf);
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const __m256d dx = _mm256_sub_pd(ax, _mm256_loadu_pd(qx + j));
      const __m256d dy = _mm256_sub_pd(ay, _mm256_loadu_pd(qy + j));
      const __m256d dz = _mm256_sub_pd(az, _mm256_loadu_pd(qz + j));
      best4 = _mm256_min_pd(best4, Norm2(dx, dy, dz));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, best4);
    double best = std::min(std::min(lanes[0], lanes[1]),
                           std::min(lanes[2], lanes[3]));
    for (; j < m; ++j) {
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
  const __m256d cx = _mm256_set1_pd(c[0]);
  const __m256d cy = _mm256_set1_pd(c[1]);
  const __m256d cz = _mm256_set1_pd(c[2]);
  const __m256d zero = _mm256_setzero_pd();
  // Lane-wise running maximum and the index where it was first reached.
  __m256d best_val = _mm256_set1_pd(-1.0);
  __m256d best_idx = _mm256_set1_pd(static_cast<double>(n));
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d step = _mm256_set1_pd(4.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d cur = _mm256_loadu_pd(min_d2 + i);
    const __m256d active = _mm256_cmp_pd(cur, zero, _CMP_GE_OQ);
    const __m256d d2 = Norm2(_mm256_sub_pd(_mm256_loadu_pd(x + i), cx),
                             _mm256_sub_pd(_mm256_loadu_pd(y + i), cy),
                             _mm256_sub_pd(_mm256_loadu_pd(z + i), cz));
    const __m256d updated = _mm256_blendv_pd(cur, _mm256_min_pd(d2, cur), active);
    _mm256_storeu_pd(min_d2 + i, updated);
    const __m256d better =
        _mm256_and_pd(_mm256_cmp_pd(updated, best_val, _CMP_GT_OQ), active);
    best_val = _mm256_blendv_pd(best_val, updated, better);
    best_idx = _mm256_blendv_pd(best_idx, idx, better);
    idx = _mm256_add_pd(idx, step);
  }
  alignas(32) double vals[4];
  alignas(32) double idxs[4];
  _mm256_store_pd(vals, best_val);
  _mm256_store_pd(idxs, best_idx);
  double best_d2 = -1.0;
  std::size_t best = n;
  for (int k = 0; k < 4; ++k) {
    const auto lane_idx = static_cast<std::size_t>(idxs[k]);
    if (lane_idx >= n) continue;
    if (vals[k] > best_d2 || (vals[k] == best_d2 && lane_idx < best)) {
      best_d2 = vals[k];
      best = lane_idx;
    }
  }
  for (; i < n; ++i) {
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
  const Rot4 rot(pose);
  const __m256d fx = _mm256_set1_pd(p.fx), fy = _mm256_set1_pd(p.fy);
  const __m256d cx = _mm256_set1_pd(p.cx), cy = _mm256_set1_pd(p.cy);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d min_depth = _mm256_set1_pd(kMinDepth);

  __m256d h[21];
  for (auto &acc : h) acc = zero;
  __m256d g[6] = {zero, zero, zero, zero, zero, zero};
  __m256d cost = zero;

  // Lanes past the end load w = 0 and drop out through the weight mask.
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; i += 4) {
    const std::size_t count = n - i;
    const __m256d w_raw = LoadPartial(p.w.data() + i, count);
    const __m256d weighted = _mm256_cmp_pd(w_raw, zero, _CMP_GT_OQ);
    const __m256d xo = LoadPartial(p.points.x.data() + i, count);
    const __m256d yo = LoadPartial(p.points.y.data() + i, count);
    const __m256d zo = LoadPartial(p.points.z.data() + i, count);
    const __m256d X = rot.Row(0, xo, yo, zo);
    const __m256d Y = rot.Row(1, xo, yo, zo);
    const __m256d Z = rot.Row(2, xo, yo, zo);
    const __m256d front = _mm256_cmp_pd(Z, min_depth, _CMP_GT_OQ);
    const __m256d use = _mm256_and_pd(weighted, front);
    const int use_mask = _mm256_movemask_pd(use);
    const int weighted_mask = _mm256_movemask_pd(weighted);
    out->used += static_cast<std::size_t>(__builtin_popcount(use_mask));
    out->behind +=
        static_cast<std::size_t>(__builtin_popcount(weighted_mask & ~use_mask));
    if (use_mask == 0) continue;

    // Masked lanes get w = 0 and a safe depth so they contribute exact zeros.
    const __m256d w = _mm256_and_pd(w_raw, use);
    const __m256d zs = _mm256_blendv_pd(one, Z, use);
    const __m256d iz = _mm256_div_pd(one, zs);
    const __m256d xn = _mm256_mul_pd(X, iz);
    const __m256d yn = _mm256_mul_pd(Y, iz);
    const __m256d ru = _mm256_mul_pd(
        w, _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(fx, xn), cx),
                         LoadPartial(p.u.data() + i, count)));
    const __m256d rv = _mm256_mul_pd(
        w, _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(fy, yn), cy),
                         LoadPartial(p.v.data() + i, count)));
    const __m256d wfx = _mm256_mul_pd(w, fx);
    const __m256d wfy = _mm256_mul_pd(w, fy);
    const __m256d xnyn = _mm256_mul_pd(xn, yn);
    const __m256d ju[6] = {
        _mm256_sub_pd(zero, _mm256_mul_pd(wfx, xnyn)),
        _mm256_mul_pd(wfx, _mm256_add_pd(one, _mm256_mul_pd(xn, xn))),
        _mm256_sub_pd(zero, _mm256_mul_pd(wfx, yn)),
        _mm256_mul_pd(wfx, iz),
        zero,
        _mm256_sub_pd(zero, _mm256_mul_pd(_mm256_mul_pd(wfx, xn), iz)),
    };
    const __m256d jv[6] = {
        _mm256_sub_pd(zero,
                      _mm256_mul_pd(wfy, _mm256_add_pd(one, _mm256_mul_pd(yn, yn)))),
        _mm256_mul_pd(wfy, xnyn),
        _mm256_mul_pd(wfy, xn),
        zero,
        _mm256_mul_pd(wfy, iz),
        _mm256_sub_pd(zero, _mm256_mul_pd(_mm256_mul_pd(wfy, yn), iz)),
    };
    int k = 0;
    for (int a = 0; a < 6; ++a) {
      for (int b = a; b < 6; ++b, ++k) {
        h[k] = _mm256_add_pd(h[k], _mm256_add_pd(_mm256_mul_pd(ju[a], ju[b]),
                                                 _mm256_mul_pd(jv[a], jv[b])));
      }
      g[a] = _mm256_add_pd(g[a], _mm256_add_pd(_mm256_mul_pd(ju[a], ru),
                                               _mm256_mul_pd(jv[a], rv)));
    }
    cost = _mm256_add_pd(cost, _mm256_add_pd(_mm256_mul_pd(ru, ru),
                                             _mm256_mul_pd(rv, rv)));
  }

  int k = 0;
  for (int a = 0; a < 6; ++a) {
    for (int b = a; b < 6; ++b, ++k) out->h[a * 6 + b] = HorizontalSum(h[k]);
    out->g[a] = HorizontalSum(g[a]);
  }
  out->cost = HorizontalSum(cost);

  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < a; ++b) out->h[a * 6 + b] = out->h[b * 6 + a];
  }
}

double ReprojectionCost(const Pose34 &pose, const ReprojectionProblem &p) {
  const Rot4 rot(pose);
  const __m256d fx = _mm256_set1_pd(p.fx), fy = _mm256_set1_pd(p.fy);
  const __m256d cx = _mm256_set1_pd(p.cx), cy = _mm256_set1_pd(p.cy);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d min_depth = _mm256_set1_pd(kMinDepth);
  __m256d cost = zero;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; i += 4) {
    const std::size_t count = n - i;
    const __m256d w_raw = LoadPartial(p.w.data() + i, count);
    const __m256d weighted = _mm256_cmp_pd(w_raw, zero, _CMP_GT_OQ);
    const __m256d xo = LoadPartial(p.points.x.data() + i, count);
    const __m256d yo = LoadPartial(p.points.y.data() + i, count);
    const __m256d zo = LoadPartial(p.points.z.data() + i, count);
    const __m256d Z = rot.Row(2, xo, yo, zo);
    const __m256d front = _mm256_cmp_pd(Z, min_depth, _CMP_GT_OQ);
    if (_mm256_movemask_pd(weighted) & ~_mm256_movemask_pd(front)) {
      return std::numeric_limits<double>::infinity();
    }
    const __m256d w = _mm256_and_pd(w_raw, weighted);
    const __m256d iz = _mm256_div_pd(one, _mm256_blendv_pd(one, Z, weighted));
    const __m256d X = rot.Row(0, xo, yo, zo);
    const __m256d Y = rot.Row(1, xo, yo, zo);
    const __m256d ru = _mm256_mul_pd(
        w, _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(fx, _mm256_mul_pd(X, iz)), cx),
                         LoadPartial(p.u.data() + i, count)));
    const __m256d rv = _mm256_mul_pd(
        w, _mm256_sub_pd(_mm256_add_pd(_mm256_mul_pd(fy, _mm256_mul_pd(Y, iz)), cy),
                         LoadPartial(p.v.data() + i, count)));
    cost = _mm256_add_pd(cost, _mm256_add_pd(_mm256_mul_pd(ru, ru),
                                             _mm256_mul_pd(rv, rv)));
  }
  return HorizontalSum(cost);
}

}  // namespace

const KernelTable kTable = {
    AddDistanceSum,
    ClosestDistanceSum,
    FpsUpdate,
    ReprojectionNormalEquations,
    ReprojectionCost,
};

}  // namespace gbot::kernels::avx2
