#include "doctest.h"

#include "gbot/kernels.h"
#include "gbot/metrics.h"
#include "support.h"

using namespace gbot;

namespace {

ObjectModel Model(const std::string &id, bool symmetric, std::uint64_t seed) {
  testing::Random rng(seed);
  Mesh m;
  m.vertices = testing::RandomCloud(rng, 60, 0.05);
  return MakeObjectModel(id, m, symmetric);
}

RigidTransform Offset(const RigidTransform &p, const Vec3 &d) {
  RigidTransform q = p;
  q.translation += d;
  return q;
}

}  // namespace

TEST_CASE("add and add-s match brute force") {
  testing::Random rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = testing::RandomCloud(rng, 10 + rng.Index(120), 0.08);
    const RigidTransform gt = rng.Pose(0.5);
    RigidTransform pred = gt;
    pred.rotation = rng.RotationUpTo(0.5) * gt.rotation;
    pred.translation += rng.InBox(0.05);
    const double add = AddError(pred, gt, v);
    const double adds = AddsError(pred, gt, v);
    CHECK(add == doctest::Approx(testing::BruteAdd(pred, gt, v)).epsilon(1e-12));
    CHECK(adds == doctest::Approx(testing::BruteAdds(pred, gt, v)).epsilon(1e-12));
    CHECK(adds <= add);  // exact: same per-point distances, same summation order
    CHECK(adds >= 0.0);

    // Both are unchanged by a common rigid motion of the scene.
    const RigidTransform m = rng.Pose(1.0);
    CHECK(AddError(Compose(m, pred), Compose(m, gt), v) == doctest::Approx(add).epsilon(1e-9));
    CHECK(AddsError(Compose(m, pred), Compose(m, gt), v) == doctest::Approx(adds).epsilon(1e-9));
  }
}

TEST_CASE("add-s never exceeds add on either backend") {
  testing::Random rng(87);
  for (kernels::Backend b : {kernels::Backend::kScalar, kernels::Backend::kAvx2}) {
    if (!kernels::BackendAvailable(b)) continue;
    kernels::ForceBackend(b);
    for (int trial = 0; trial < 2000; ++trial) {
      const auto v = testing::RandomCloud(rng, 1 + rng.Index(30), 0.1);
      const RigidTransform gt = rng.Pose(0.5);
      RigidTransform pred = gt;
      pred.rotation = rng.RotationUpTo(0.3) * gt.rotation;
      pred.translation += rng.InBox(0.02);
      CHECK(AddsError(pred, gt, v) <= AddError(pred, gt, v));
    }
  }
  kernels::ResetBackend();
}

TEST_CASE("pure translation offset") {
  testing::Random rng(82);
  const auto v = testing::RandomCloud(rng, 50, 0.05);
  const RigidTransform gt = rng.Pose(0.5);
  for (double d : {0.0, 0.001, 0.02, 0.3}) {
    CHECK(AddError(Offset(gt, Vec3(0, 0, d)), gt, v) == doctest::Approx(d).epsilon(1e-12));
    CHECK(AddError(gt, gt, v) == 0.0);
  }
}

TEST_CASE("add-s forgives a symmetry") {
  // Square in the xy plane; a quarter turn maps it onto itself.
  const std::vector<Vec3> square{{1, 1, 0}, {-1, 1, 0}, {-1, -1, 0}, {1, -1, 0}};
  RigidTransform gt;
  RigidTransform pred;
  pred.rotation = RotZ(kPi / 2);
  CHECK(AddsError(pred, gt, square) < 1e-12);
  CHECK(AddError(pred, gt, square) > 1.0);

  ObjectModel sym;
  sym.id = "sq";
  sym.vertices = square;
  sym.symmetric = true;
  CHECK(PoseError(sym, pred, gt) < 1e-12);
  sym.symmetric = false;
  CHECK(PoseError(sym, pred, gt) == doctest::Approx(AddError(pred, gt, square)));
}

TEST_CASE("score examples") {
  const double t = kDefaultScoreThresholdM;
  const std::vector<double> e{0.0, t, 2 * t};
  CHECK(Score(e) == doctest::Approx(1.0 / 3.0));
  const std::vector<double> half{t / 2};
  CHECK(Score(half) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Score(std::vector<double>{}), UndefinedInputError);
  CHECK_THROWS_AS(Score(half, 0.0), std::invalid_argument);
  const std::vector<double> perfect(7, 0.0);
  CHECK(Score(perfect) == 1.0);
}

TEST_CASE("score is bounded and monotone") {
  testing::Random rng(83);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> e(1 + rng.Index(20));
    for (double &x : e) x = rng.Uniform(0.0, 0.3);
    const double s = Score(e);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    std::vector<double> worse = e;
    worse[rng.Index(worse.size())] += rng.Uniform(0.0, 0.1);
    CHECK(Score(worse) <= s);
  }
}

TEST_CASE("average errors skip rotation of symmetric objects") {
  const std::vector<PoseErrorSample> samples{{0.01, 2.0}, {0.03, std::nullopt}, {0.02, 4.0}};
  const AverageErrors a = ComputeAverageErrors(samples);
  CHECK(a.trans_m == doctest::Approx(0.02));
  REQUIRE(a.rot_deg.has_value());
  CHECK(*a.rot_deg == doctest::Approx(3.0));

  const std::vector<PoseErrorSample> all_sym{{0.01, std::nullopt}};
  CHECK_FALSE(ComputeAverageErrors(all_sym).rot_deg.has_value());
  CHECK_THROWS_AS(ComputeAverageErrors(std::vector<PoseErrorSample>{}), UndefinedInputError);
}

TEST_CASE("frame and sequence evaluation") {
  const std::vector<ObjectModel> models{Model("a", false, 84), Model("b", true, 85)};
  testing::Random rng(86);
  std::vector<GroundTruthFrame> gt(4);
  std::vector<PoseMap> pred(4);
  for (std::size_t f = 0; f < 4; ++f) {
    gt[f].frame_index = f;
    gt[f].poses["a"] = rng.ViewPose();
    gt[f].poses["b"] = rng.ViewPose();
    pred[f]["a"] = Offset(gt[f].poses["a"], Vec3(0.02, 0, 0));
    if (f != 2) pred[f]["b"] = gt[f].poses["b"];
  }

  const FrameErrors fe = EvaluateFrame(gt[2], pred[2], models);
  REQUIRE(fe.entries.size() == 2);
  CHECK(fe.entries[0].object_id == "a");
  CHECK(*fe.entries[0].add_or_adds == doctest::Approx(0.02));
  CHECK(fe.entries[0].sample.e_trans == doctest::Approx(0.02));
  CHECK(*fe.entries[0].sample.e_rot == doctest::Approx(0.0).epsilon(1e-6));
  CHECK_FALSE(fe.entries[1].add_or_adds.has_value());

  const SequenceEvaluation ev = EvaluateSequence(gt, pred, models);
  CHECK(ev.samples == 8);
  CHECK(ev.missing == 1);
  // 4 x 0.8 for a, 3 x 1.0 for b, one missing b scored as 0.
  CHECK(ev.score == doctest::Approx((4 * 0.8 + 3 * 1.0) / 8.0));
  CHECK(ev.mean_trans_m == doctest::Approx(4 * 0.02 / 7.0));
  REQUIRE(ev.mean_rot_deg.has_value());
  CHECK(*ev.mean_rot_deg < 1e-5);

  const SequenceEvaluation tail = EvaluateSequence(gt, pred, models, 3);
  CHECK(tail.samples == 2);
  CHECK(tail.missing == 0);
  CHECK(tail.score == doctest::Approx(0.9));
}
