// Scalar reference vs AVX2 variants. Distance sums and FPS must agree bit for
// bit; the normal equations reduce in a different order and agree to
// rounding.

#include "doctest.h"

#include "gbot/kernels.h"
#include "support.h"

using namespace gbot;
using namespace gbot::kernels;

namespace {

bool HaveAvx2() { return BackendAvailable(Backend::kAvx2); }

ReprojectionProblem RandomProblem(testing::Random &rng, std::size_t n,
                                  const RigidTransform &pose) {
  CameraIntrinsics k;
  ReprojectionProblem p{k.fx, k.fy, k.cx, k.cy, {}, {}, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 x = rng.InBox(0.08);
    p.points.push_back(x);
    const Vec2 px = testing::PinholeProject(k, pose, x);
    p.u.push_back(px.x() + rng.Normal(2.0));
    p.v.push_back(px.y() + rng.Normal(2.0));
    p.w.push_back(i % 5 == 3 ? 0.0 : rng.Uniform(0.1, 1.0));
  }
  return p;
}

}  // namespace

TEST_CASE("scalar backend can always be forced") {
  CHECK(BackendAvailable(Backend::kScalar));
  ForceBackend(Backend::kScalar);
  CHECK(ActiveBackend() == Backend::kScalar);
  ResetBackend();
  if (!HaveAvx2()) {
    CHECK_THROWS_AS(ForceBackend(Backend::kAvx2), std::invalid_argument);
  }
}

#if defined(GBOT_HAVE_AVX2)

TEST_CASE("distance sums are bit-identical") {
  if (!HaveAvx2()) return;
  const KernelTable &s = Table(Backend::kScalar), &v = Table(Backend::kAvx2);
  testing::Random rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.Index(40);
    const auto pts = testing::RandomCloud(rng, n, 0.1);
    const PointsSoA soa(pts);
    const Pose34 a = Pose34::From(rng.Pose()), b = Pose34::From(rng.Pose());
    CHECK(s.add_distance_sum(a, b, soa.x.data(), soa.y.data(), soa.z.data(), n) ==
          v.add_distance_sum(a, b, soa.x.data(), soa.y.data(), soa.z.data(), n));
    const PointsSoA q = soa.Transformed(a), r = soa.Transformed(b);
    CHECK(s.closest_distance_sum(q.x.data(), q.y.data(), q.z.data(), n, r.x.data(),
                                 r.y.data(), r.z.data(), n) ==
          v.closest_distance_sum(q.x.data(), q.y.data(), q.z.data(), n, r.x.data(),
                                 r.y.data(), r.z.data(), n));
  }
}

TEST_CASE("fps update is bit-identical") {
  if (!HaveAvx2()) return;
  const KernelTable &s = Table(Backend::kScalar), &v = Table(Backend::kAvx2);
  testing::Random rng(22);
  for (std::size_t n : {1u, 3u, 4u, 9u, 64u, 201u}) {
    const PointsSoA soa(testing::RandomCloud(rng, n, 0.1));
    std::vector<double> ds(n, std::numeric_limits<double>::infinity()), dv = ds;
    for (std::size_t i = 0; i < n; i += 3) ds[i] = dv[i] = -1.0;
    for (int step = 0; step < 5; ++step) {
      const Vec3 c = rng.InBox(0.1);
      const double cc[3] = {c.x(), c.y(), c.z()};
      const std::size_t is = s.fps_update(soa.x.data(), soa.y.data(), soa.z.data(), n, cc, ds.data());
      const std::size_t iv = v.fps_update(soa.x.data(), soa.y.data(), soa.z.data(), n, cc, dv.data());
      CHECK(is == iv);
      CHECK(ds == dv);
    }
  }
  // Ties go to the lowest index in both.
  const PointsSoA same(std::vector<Vec3>(9, Vec3(1, 1, 1)));
  std::vector<double> d1(9, 1e300), d2 = d1;
  const double origin[3] = {0, 0, 0};
  CHECK(s.fps_update(same.x.data(), same.y.data(), same.z.data(), 9, origin, d1.data()) == 0);
  CHECK(v.fps_update(same.x.data(), same.y.data(), same.z.data(), 9, origin, d2.data()) == 0);
}

TEST_CASE("reprojection kernels agree to rounding") {
  if (!HaveAvx2()) return;
  const KernelTable &s = Table(Backend::kScalar), &v = Table(Backend::kAvx2);
  testing::Random rng(23);
  for (std::size_t n : {4u, 5u, 6u, 17u, 34u, 136u}) {
    const RigidTransform pose = rng.ViewPose();
    const ReprojectionProblem p = RandomProblem(rng, n, pose);
    const Pose34 p34 = Pose34::From(pose);
    NormalEquations a, b;
    s.reprojection_normal_equations(p34, p, &a);
    v.reprojection_normal_equations(p34, p, &b);
    CHECK(a.used == b.used);
    CHECK(a.behind == b.behind);
    CHECK(a.cost == doctest::Approx(b.cost).epsilon(1e-12));
    for (int i = 0; i < 36; ++i) {
      CHECK(a.h[i] == doctest::Approx(b.h[i]).epsilon(1e-11).scale(std::abs(a.h[0])));
    }
    for (int i = 0; i < 6; ++i) {
      CHECK(a.g[i] == doctest::Approx(b.g[i]).epsilon(1e-11).scale(std::abs(a.g[0]) + 1.0));
    }
    CHECK(s.reprojection_cost(p34, p) == doctest::Approx(v.reprojection_cost(p34, p)).epsilon(1e-12));
  }
}

TEST_CASE("points behind the camera") {
  if (!HaveAvx2()) return;
  const KernelTable &s = Table(Backend::kScalar), &v = Table(Backend::kAvx2);
  testing::Random rng(24);
  RigidTransform pose = rng.ViewPose();
  ReprojectionProblem p = RandomProblem(rng, 9, pose);
  pose.translation.z() = -1.0;
  const Pose34 p34 = Pose34::From(pose);
  CHECK(std::isinf(s.reprojection_cost(p34, p)));
  CHECK(std::isinf(v.reprojection_cost(p34, p)));
  NormalEquations a, b;
  s.reprojection_normal_equations(p34, p, &a);
  v.reprojection_normal_equations(p34, p, &b);
  CHECK(a.behind == b.behind);
  CHECK(a.behind > 0);
}

#endif
