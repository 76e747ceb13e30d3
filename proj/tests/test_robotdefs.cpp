#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rems/robotdefs/builtins.hpp"
#include "rems/robotdefs/definition_file.hpp"
#include "test_util.hpp"

using namespace rems;
using std::numbers::pi;

TEST_CASE("diffdrive fk examples") {
  const DiffDriveParams<double> p(0.05, 0.2);
  auto t = diffdrive_fk(DiffWheels<double>(10, 10), p);
  CHECK(t.vx == doctest::Approx(0.5));
  CHECK(t.wz == 0.0);
  t = diffdrive_fk(DiffWheels<double>(5, -5), p);
  CHECK(t.vx == 0.0);
  CHECK(t.wz == doctest::Approx(-2.5));
  t = diffdrive_fk(DiffWheels<double>(2, 4), p);
  // r(wl+wr)/2 and r(wr-wl)/d by hand.
  CHECK(t.vx == doctest::Approx(0.05 * 6 / 2).epsilon(1e-14));
  CHECK(t.wz == doctest::Approx(0.05 * 2 / 0.2).epsilon(1e-14));
  CHECK(t.vy == 0.0);
}

TEST_CASE("diffdrive ik examples and errors") {
  const DiffDriveParams<double> p(0.05, 0.2);
  auto w = diffdrive_ik(Twist2d{0.5, 0, 0}, p);
  CHECK(w(0) == doctest::Approx(10));
  CHECK(w(1) == doctest::Approx(10));
  w = diffdrive_ik(Twist2d{0, 0, -2.5}, p);
  CHECK(w(0) == doctest::Approx(5));
  CHECK(w(1) == doctest::Approx(-5));
  CHECK_THROWS_KIND(diffdrive_ik(Twist2d{0, 0.1, 0}, p), ErrorKind::nonholonomic_violation);
  CHECK_THROWS_KIND(DiffDriveParams<double>(0, 0.2), ErrorKind::invalid_argument);
  CHECK_THROWS_KIND(DiffDriveParams<double>(0.1, -1), ErrorKind::invalid_argument);
}

TEST_CASE("mecanum modes") {
  const MecanumParams<double> p(0.05, 0.2, 0.15);
  const double k = 0.35, w = 3.0;
  auto t = mecanum_fk(MecanumWheels<double>(w, w, w, w), p);
  CHECK(t.vx == doctest::Approx(0.05 * w));
  CHECK(std::abs(t.vy) < 1e-15);
  CHECK(std::abs(t.wz) < 1e-15);
  t = mecanum_fk(MecanumWheels<double>(-w, w, w, -w), p);
  CHECK(std::abs(t.vx) < 1e-15);
  CHECK(t.vy == doctest::Approx(0.05 * w));
  t = mecanum_fk(MecanumWheels<double>(-w, w, -w, w), p);
  CHECK(t.wz == doctest::Approx(0.05 * w / k));
  CHECK(std::abs(t.vx) + std::abs(t.vy) < 1e-15);

  auto wheels = mecanum_ik(Twist2d{0.05 * w, 0, 0}, p);
  for (int i = 0; i < 4; ++i) CHECK(wheels(i) == doctest::Approx(w));
  wheels = mecanum_ik(Twist2d{0, 0.05 * w, 0}, p);
  CHECK(wheels(0) == doctest::Approx(-w));
  CHECK(wheels(1) == doctest::Approx(w));
  CHECK(wheels(2) == doctest::Approx(w));
  CHECK(wheels(3) == doctest::Approx(-w));
}

TEST_CASE("fk inverts ik on random twists") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2, 2);
  const DiffDriveParams<double> dd(0.035, 0.09);
  const MecanumParams<double> mk(0.0475, 0.228, 0.158);
  double worst = 0;
  for (int i = 0; i < 2000; ++i) {
    const Twist2d a{u(rng), 0, u(rng)};
    const auto b = diffdrive_fk(diffdrive_ik(a, dd), dd);
    worst = std::max({worst, std::abs(a.vx - b.vx), std::abs(b.vy), std::abs(a.wz - b.wz)});
    const Twist2d c{u(rng), u(rng), u(rng)};
    const auto d = mecanum_fk(mecanum_ik(c, mk), mk);
    worst = std::max({worst, std::abs(c.vx - d.vx), std::abs(c.vy - d.vy), std::abs(c.wz - d.wz)});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("diffdrive fk is linear") {
  const DiffDriveParams<double> p(0.1, 0.3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const DiffWheels<double> w(u(rng), u(rng));
    const double a = u(rng);
    const auto t1 = diffdrive_fk<double>(a * w, p);
    const auto t0 = diffdrive_fk(w, p);
    CHECK(t1.vx == doctest::Approx(a * t0.vx).epsilon(1e-12));
    CHECK(t1.wz == doctest::Approx(a * t0.wz).epsilon(1e-12));
  }
}

TEST_CASE("integrate_pose examples") {
  auto p = integrate_pose(Pose2d{0, 0, 0}, Twist2d{1, 0, 0}, 10.0);
  CHECK(p.x == doctest::Approx(10));
  CHECK(p.y == 0.0);
  CHECK(p.theta == 0.0);
  p = integrate_pose(Pose2d{0, 0, 0}, Twist2d{1, 0, pi / 2}, 1.0);
  // x = v/w sin(wt), y = v/w (1 - cos(wt))
  CHECK(p.x == doctest::Approx(1 / (pi / 2) * std::sin(pi / 2)).epsilon(1e-14));
  CHECK(p.y == doctest::Approx(1 / (pi / 2) * (1 - std::cos(pi / 2))).epsilon(1e-14));
  CHECK(p.theta == doctest::Approx(pi / 2));
  const Pose2d q{1.5, -2, 0.7};
  p = integrate_pose(q, Twist2d{}, 3.0);
  CHECK(p.x == q.x);
  CHECK(p.y == q.y);
  CHECK(p.theta == q.theta);
}

TEST_CASE("integrate_pose composes and is continuous at wz = 0") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 500; ++i) {
    const Pose2d p{u(rng), u(rng), pi * u(rng)};
    const Twist2d t{u(rng), u(rng), 3 * u(rng)};
    const double dt = 0.5 + u(rng) * 0.4;
    const auto whole = integrate_pose(p, t, dt);
    const auto halves = integrate_pose(integrate_pose(p, t, dt / 2), t, dt / 2);
    CHECK(std::abs(whole.x - halves.x) <= 1e-12);
    CHECK(std::abs(whole.y - halves.y) <= 1e-12);
    CHECK(std::abs(normalize_angle(whole.theta - halves.theta)) <= 1e-12);
  }
  const Pose2d p{0.3, 0.2, 1.0};
  const auto straight = integrate_pose(p, Twist2d{1, 0.2, 0}, 1.0);
  for (double wz : {1e-8, -1e-8}) {
    const auto curved = integrate_pose(p, Twist2d{1, 0.2, wz}, 1.0);
    CHECK(std::abs(curved.x - straight.x) <= 1e-7);
    CHECK(std::abs(curved.y - straight.y) <= 1e-7);
  }
}

TEST_CASE("integrate_pose agrees with RK4") {
  const Twist2d t{0.4, 0.1, 0.9};
  Pose2d p{0, 0, 0.2};
  for (int i = 0; i < 1000; ++i) p = integrate_pose(p, t, 0.01);
  const Eigen::Vector3d ref = oracle::rk4_pose({0, 0, 0.2}, t.vx, t.vy, t.wz, 10.0, 1e-4);
  CHECK(std::abs(p.x - ref.x()) <= 1e-6);
  CHECK(std::abs(p.y - ref.y()) <= 1e-6);
  CHECK(std::abs(normalize_angle(p.theta - ref.z())) <= 1e-6);
}

TEST_CASE("euler integrator differs from the exact flow") {
  const Twist2d t{1, 0, 1};
  const auto e = integrate_pose(Pose2d{}, t, 0.5, Integrator::euler);
  CHECK(e.x == doctest::Approx(0.5));
  CHECK(e.y == 0.0);
  const auto x = integrate_pose(Pose2d{}, t, 0.5, Integrator::exact);
  CHECK(x.y > 0.1);
}

TEST_CASE("normalize_angle range") {
  CHECK(normalize_angle(pi) == doctest::Approx(pi));
  CHECK(normalize_angle(-pi) == doctest::Approx(pi));
  CHECK(normalize_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
}

TEST_CASE("arm_fk examples") {
  ArmParamsd two({{Eigen::Vector3d::UnitZ(), {0.1, 0, 0}, Eigen::Quaterniond::Identity()},
                  {Eigen::Vector3d::UnitY(), {0.2, 0, 0}, Eigen::Quaterniond::Identity()}});
  auto pose = arm_fk(Eigen::Vector2d::Zero(), two);
  CHECK(pose.position.isApprox(Eigen::Vector3d(0.3, 0, 0)));
  CHECK(pose.orientation.angularDistance(Eigen::Quaterniond::Identity()) < 1e-12);

  ArmParamsd one({{Eigen::Vector3d::UnitZ(), {1, 0, 0}, Eigen::Quaterniond::Identity()}});
  pose = arm_fk(Eigen::Matrix<double, 1, 1>(pi / 2), one);
  CHECK(std::abs(pose.position.x()) < 1e-12);
  CHECK(pose.position.y() == doctest::Approx(1));
  const auto R = pose.orientation.toRotationMatrix();
  CHECK(std::atan2(R(1, 0), R(0, 0)) == doctest::Approx(pi / 2));

  CHECK_THROWS_KIND(arm_fk(Eigen::Vector3d::Zero(), two), ErrorKind::dof_mismatch);
  CHECK_THROWS_KIND(ArmParamsd({{Eigen::Vector3d(1, 1, 0), {}, Eigen::Quaterniond::Identity()}}),
                    ErrorKind::invalid_argument);
}

TEST_CASE("arm_fk matches the homogeneous matrix chain") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ArmLink<double>> links;
    std::vector<oracle::ChainLink> ref;
    std::vector<double> q;
    Eigen::VectorXd joints(6);
    for (int i = 0; i < 6; ++i) {
      const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
      const Eigen::Vector3d offset(u(rng), u(rng), u(rng));
      const Eigen::Vector4d qv = Eigen::Vector4d(u(rng), u(rng), u(rng), u(rng)).normalized();
      links.push_back({axis, offset, Eigen::Quaterniond(qv(0), qv(1), qv(2), qv(3))});
      ref.push_back({axis, offset, qv(0), qv(1), qv(2), qv(3)});
      joints(i) = pi * u(rng);
      q.push_back(joints(i));
    }
    const auto pose = arm_fk(joints, ArmParamsd(links));
    const Eigen::Matrix4d T = oracle::chain_transform(ref, q);
    CHECK((pose.position - T.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((pose.orientation.toRotationMatrix() - T.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(pose.orientation.norm() - 1) <= 1e-9);
  }
}

TEST_CASE("range sensor model") {
  const ArenaSpec arena(-1, 2, -1, 1);
  const std::vector<RangeMount> fwd{{"front", {0, 0, 0}}};
  CHECK(range_sensor_model({0, 0, 0}, fwd, arena, 5.0)[0] == doctest::Approx(2.0));
  CHECK(range_sensor_model({0, 0, 0}, fwd, arena, 1.0)[0] == doctest::Approx(1.0));

  const ArenaSpec unit(-0.5, 0.5, -0.5, 0.5);
  const double d = range_sensor_model({0, 0, pi / 4}, fwd, unit, 5.0)[0];
  CHECK(d == doctest::Approx(oracle::ray_to_box(0, 0, pi / 4, -0.5, 0.5, -0.5, 0.5)));
  CHECK(d == doctest::Approx(0.5 * std::sqrt(2.0)));

  CHECK_THROWS_KIND(range_sensor_model({3, 0, 0}, fwd, arena, 1.0), ErrorKind::outside_arena);
  CHECK_THROWS_KIND(ArenaSpec(1, 0, 0, 1), ErrorKind::invalid_argument);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  const std::vector<RangeMount> mounts{{"a", {0.05, 0.02, 0.3}}, {"b", {0, -0.03, -1.2}}};
  for (int i = 0; i < 300; ++i) {
    const Pose2d p{u(rng), u(rng), pi * u(rng)};
    const auto r = range_sensor_model(p, mounts, arena, 10.0);
    for (std::size_t m = 0; m < mounts.size(); ++m) {
      const auto& o = mounts[m].offset;
      const double mx = p.x + std::cos(p.theta) * o.x - std::sin(p.theta) * o.y;
      const double my = p.y + std::sin(p.theta) * o.x + std::cos(p.theta) * o.y;
      if (!arena.contains(mx, my)) continue;
      CHECK(r[m] == doctest::Approx(oracle::ray_to_box(mx, my, p.theta + o.theta, -1, 2, -1, 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("built-in definitions have the expected spaces") {
  for (const auto& name : builtin_definition_names()) {
    const auto def = builtin_definition(name);
    CHECK(def.name() == name);
    CHECK(def.input_schema().fields().size() > 0);
  }
  CHECK_THROWS_KIND(builtin_definition("nope"), ErrorKind::unknown_key);

  const auto wb = builtin_definition("woodbot");
  CHECK(wb.input_schema().keys() == std::vector<std::string>{"wh.l", "wh.r"});
  CHECK(wb.state_schema().keys() == std::vector<std::string>{"x", "y", "theta"});
  CHECK(wb.output_schema().keys() ==
        std::vector<std::string>{"range.front", "range.right", "pose.x", "pose.y", "pose.theta"});
  CHECK(wb.input_schema().field("wh.l").spec.unit_name() == "rad/s");
}

TEST_CASE("drive map and sense map of a woodbot") {
  const auto wb = builtin_definition("woodbot");
  auto in = make_record(wb.input_schema(), {{"wh.l", 2}, {"wh.r", 4}});
  const auto cmd = wb.drive_map(in);
  REQUIRE(cmd.size() == 1);
  const auto t = std::get<Twist2d>(cmd[0]);
  CHECK(t.vx == doctest::Approx(0.035 * 3));
  CHECK(t.wz == doctest::Approx(0.035 * 2 / 0.09));

  // rpm inputs are converted before the Jacobian.
  const auto rpm = wb.with_field(Space::input, "wh.l", UnitSpec("rpm")).with_field(Space::input, "wh.r", UnitSpec("rpm"));
  in = make_record(rpm.input_schema(), {{"wh.l", 60}, {"wh.r", 60}});
  CHECK(std::get<Twist2d>(rpm.drive_map(in)[0]).vx == doctest::Approx(0.035 * 2 * pi));

  auto state = make_record(wb.state_schema(), {{"x", 0.5}, {"y", 0}, {"theta", 0}});
  const auto out = wb.sense_map(state);
  CHECK(out["range.front"] == doctest::Approx(2.0));  // wall at 10 m, capped at 2
  CHECK(out["pose.x"] == 0.5);
  state = make_record(wb.state_schema(), {{"x", 9.5}, {"y", 0}, {"theta", 0}});
  CHECK(wb.sense_map(state)["range.front"] == doctest::Approx(10 - 9.5 - 0.04));
}

TEST_CASE("merge omnibase with arm5") {
  const auto base = builtin_definition("omnibase");
  const auto arm = builtin_definition("arm5");
  const auto both = merge_definitions(base, arm);
  CHECK(both.input_schema().fields().size() == 9);
  CHECK(both.input_schema().keys().front() == "wh.fl");
  CHECK(both.input_schema().keys().back() == "joint.q5");
  CHECK(both.has_arm());

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 50; ++i) {
    ValueMap vals;
    for (const auto& k : both.input_schema().keys()) vals[k] = u(rng);
    const auto rec = make_record(both.input_schema(), vals);
    const auto merged = both.drive_map(rec);
    const auto a = base.drive_map(project(rec, base.input_schema()));
    const auto b = arm.drive_map(project(rec, arm.input_schema()));
    REQUIRE(merged.size() == 2);
    const auto tm = std::get<Twist2d>(merged[0]);
    const auto ta = std::get<Twist2d>(a[0]);
    CHECK(tm.vx == ta.vx);
    CHECK(tm.vy == ta.vy);
    CHECK(tm.wz == ta.wz);
    CHECK(std::get<Eigen::VectorXd>(merged[1]) == std::get<Eigen::VectorXd>(b[0]));
  }

  const auto same = merge_definitions(base, RobotDefinition{});
  CHECK(same.input_schema() == base.input_schema());
  CHECK(same.state_schema() == base.state_schema());
  CHECK(same.output_schema() == base.output_schema());
  CHECK(merge_definitions(RobotDefinition{}, base).input_schema() == base.input_schema());
  CHECK_THROWS_KIND(merge_definitions(base, base), ErrorKind::key_collision);
  try {
    merge_definitions(base, base);
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const auto& k : {"wh.fl", "wh.rr", "x", "pose.theta", "range.front"}) CHECK(msg.find(k) != std::string::npos);
  }
}

TEST_CASE("merge is associative and errors regardless of grouping") {
  const auto a = builtin_definition("omnibase");
  const auto b = builtin_definition("arm5");
  const auto c = builtin_definition("arm5").renamed("arm5b");
  CHECK_THROWS_KIND(merge_definitions(a, merge_definitions(b, c)), ErrorKind::key_collision);
  CHECK_THROWS_KIND(merge_definitions(merge_definitions(a, b), c), ErrorKind::key_collision);
  const auto left = merge_definitions(merge_definitions(RobotDefinition{}, a), b);
  const auto right = merge_definitions(a, merge_definitions(b, RobotDefinition{}));
  CHECK(left.input_schema() == right.input_schema());
  CHECK(left.state_schema() == right.state_schema());
  CHECK(left.output_schema() == right.output_schema());
}

TEST_CASE("wheel links") {
  const auto p3at = builtin_definition("pioneer3at");
  auto masters = make_record(p3at.input_schema(), {{"wh.l", 3}, {"wh.r", 5}});
  auto all = expand_wheel_links(masters, p3at.wheel_links());
  CHECK(all["wh.l"] == 3);
  CHECK(all["wh.l2"] == 3);
  CHECK(all["wh.r"] == 5);
  CHECK(all["wh.r2"] == 5);
  CHECK(all.schema() == p3at.actuator_schema());

  const auto moose = builtin_definition("moose");
  masters = make_record(moose.input_schema(), {{"wh.l", 1.5}, {"wh.r", -2}});
  all = expand_wheel_links(masters, moose.wheel_links());
  CHECK(all.schema().fields().size() == 8);
  int left = 0, right = 0;
  for (std::size_t i = 0; i < all.values().size(); ++i) {
    const auto& key = all.schema().field(i).key;
    if (key.rfind("wh.l", 0) == 0 && all.at(i) == 1.5) ++left;
    if (key.rfind("wh.r", 0) == 0 && all.at(i) == -2) ++right;
  }
  CHECK(left == 4);
  CHECK(right == 4);

  CHECK(expand_wheel_links(masters, {}) == masters);
  const std::vector<WheelLinkRule> bad{{"wh.x", {"wh.y"}, {1.0}}};
  CHECK_THROWS_KIND(expand_wheel_links(masters, bad), ErrorKind::unknown_key);
  // Chains and slaves shadowing inputs are rejected.
  const auto wb = builtin_definition("woodbot");
  CHECK_THROWS(wb.with_wheel_links({{"wh.l", {"wh.l2"}, {1.0}}, {"wh.l2", {"wh.l3"}, {1.0}}}));
  CHECK_THROWS(wb.with_wheel_links({{"wh.l", {"wh.r"}, {1.0}}}));
}

TEST_CASE("actuator and teleop maps") {
  const auto wb = builtin_definition("woodbot");
  auto maps = wb.actuator_maps(UnitSpec("duty").with_range(-1, 1));
  auto in = make_record(wb.input_schema(), {{"wh.l", 6}, {"wh.r", 24}});
  auto native = bind_record(make_record(maps.native), in, maps.to_native);
  CHECK(native["wh.l"] == doctest::Approx(0.5));
  CHECK(native["wh.r"] == 1.0);  // saturated
  auto back = bind_record(make_record(wb.input_schema()), native, maps.from_native);
  CHECK(back["wh.l"] == doctest::Approx(6));

  const auto c2 = builtin_definition("create2");
  maps = c2.actuator_maps(UnitSpec("count").with_range(-500, 500));
  in = make_record(c2.input_schema(), {{"wh.l", 10}, {"wh.r", -20}});
  native = bind_record(make_record(maps.native), in, maps.to_native);
  CHECK(native["wh.l"] == doctest::Approx(360));  // 10 rad/s * 36 mm
  CHECK(native["wh.r"] == -500);

  CHECK_THROWS_KIND(builtin_definition("arm5").actuator_maps(UnitSpec("duty")), ErrorKind::schema_incompatible);

  const Schema teleop("teleop", {{"fwd", UnitSpec("1").with_range(-1, 1)}, {"turn", UnitSpec("1").with_range(-1, 1)}});
  const auto rules = wb.teleop_rules(teleop);
  auto cmd = bind_record(make_record(wb.input_schema()), make_record(teleop, {{"fwd", 1}}), rules);
  CHECK(cmd["wh.l"] == doctest::Approx(12));
  CHECK(cmd["wh.r"] == doctest::Approx(12));
  cmd = bind_record(make_record(wb.input_schema()), make_record(teleop, {{"turn", 1}}), rules);
  CHECK(cmd["wh.l"] == doctest::Approx(-12));
  CHECK(cmd["wh.r"] == doctest::Approx(12));
}

TEST_CASE("arm state record carries end-effector pose") {
  const auto arm = builtin_definition("arm5");
  auto states = arm.initial_part_states();
  const auto rec = arm.state_record(states);
  CHECK(rec["ee.z"] == doctest::Approx(0.147 + 0.155 + 0.135 + 0.081 + 0.137));
  CHECK(rec["ee.x"] == doctest::Approx(0.033));
  CHECK(rec["ee.qw"] == doctest::Approx(1));
  const auto round = arm.part_states(rec);
  CHECK(std::get<Eigen::VectorXd>(round[0]) == std::get<Eigen::VectorXd>(states[0]));
}

TEST_CASE("definition files") {
  auto def = parse_definition(R"(
name = "wide-woodbot"
extends = "woodbot"
[params]
track_width = 0.12
max_range = 3.0
[input]
"wh.l" = { unit = "rpm", range = [-120, 120] }
"wh.r" = { unit = "rpm", range = [-120, 120] }
)",
                              "wide.toml");
  CHECK(def.name() == "wide-woodbot");
  CHECK(std::get<DiffDriveKinematics>(def.parts()[0].kinematics).params.track_width() == 0.12);
  CHECK(def.input_schema().field("wh.l").spec.unit_name() == "rpm");
  CHECK(def.output_schema().field("range.front").spec.range()->hi == 3.0);

  def = parse_definition(R"(
name = "skid"
[params]
kind = "diffdrive"
wheel_radius = 0.1
track_width = 0.5
max_wheel_speed = 5
mounts = [{ name = "front", x = 0.2 }]
[rules]
links = [{ master = "wh.l", slaves = ["wh.l2"], gains = [1.0] }, { master = "wh.r", slaves = ["wh.r2"], gains = [1.0] }]
)",
                         "skid.toml");
  CHECK(def.actuator_schema().fields().size() == 4);
  CHECK(def.output_schema().contains("range.front"));

  def = parse_definition("name = \"mm\"\nmerge = [\"omnibase\", \"arm5\"]\n", "mm.toml");
  CHECK(def.input_schema().fields().size() == 9);
  CHECK(def.name() == "mm");

  CHECK_THROWS_KIND(parse_definition("name = \n", "bad.toml"), ErrorKind::parse_error);
  CHECK_THROWS_KIND(parse_definition("[params]\nkind = \"hover\"\n", "k.toml"), ErrorKind::config_error);
  CHECK_THROWS_KIND(parse_definition("extends = \"woodbot\"\n[input]\n\"wh.l\" = { unit = \"m\" }\n", "u.toml"),
                    ErrorKind::config_error);
  CHECK_THROWS_KIND(parse_definition("merge = [\"woodbot\", \"woodbot\"]\n", "m.toml"), ErrorKind::config_error);

  const auto dir = std::filesystem::temp_directory_path() / "rems_def_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "base.toml") << "extends = \"epuck\"\nname = \"e2\"\n";
  std::ofstream(dir / "top.toml") << "extends = \"base.toml\"\nname = \"e3\"\n";
  def = load_definition_file(dir / "top.toml");
  CHECK(def.name() == "e3");
  CHECK(resolve_definition("woodbot").name() == "woodbot");
  CHECK_THROWS_KIND(resolve_definition("nothing-here"), ErrorKind::unknown_key);
  std::filesystem::remove_all(dir);
}
