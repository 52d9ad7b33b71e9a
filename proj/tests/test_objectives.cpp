#include <doctest.h>

#include <cmath>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/modes.hpp"
#include "bridgelab/net.hpp"
#include "bridgelab/objectives.hpp"
#include "bridgelab/schedule.hpp"

using namespace bridgelab;

namespace {

MatrixXd random_batch(int rows, Rng& rng) {
  MatrixXd m(rows, 2);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = rng.normal();
  return m;
}

// Net computing x + c for every timestep: zero weights, residual head,
// constant bias on the (only) layer.
DriftNet constant_drift_net(int n_steps, const Vec2& c) {
  NetConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {};
  cfg.time_embed_dim = 4;
  cfg.n_steps = n_steps;
  auto net = make_drift_net(cfg, 1);
  net.b.back() = c;
  net.out_map = OutputMap::residual(n_steps);
  net.mode = ParamMode::SDsb;
  return net;
}

}  // namespace

TEST_CASE("parameterization registry lists every documented family") {
  const auto& rows = parameterization_registry();
  REQUIRE(rows.size() == 8);
  CHECK(registry_row("dsb").implemented);
  CHECK(registry_row("s-dsb").implemented);
  CHECK(registry_row("tr-dsb").implemented);
  CHECK(registry_row("fr-dsb").implemented);
  CHECK(registry_row("ddpm").implemented);
  CHECK(registry_row("fm").implemented);
  CHECK_FALSE(registry_row("i2sb").implemented);
  CHECK_FALSE(registry_row("bridge-tts").implemented);
  CHECK_THROWS_AS(registry_row("nope"), ConfigError);
  for (const auto& r : rows) {
    CHECK_FALSE(r.noised_sample.empty());
    CHECK_FALSE(r.target.empty());
  }
}

TEST_CASE("mode strings round-trip; unimplemented families are rejected") {
  for (auto m : {ParamMode::DsbOriginal, ParamMode::SDsb, ParamMode::TrDsb,
                 ParamMode::FrDsb, ParamMode::Ddpm, ParamMode::Fm})
    CHECK(mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(mode_from_string("i2sb"), ConfigError);
  CHECK_THROWS_AS(mode_from_string("bridge-tts"), ConfigError);
  CHECK_THROWS_AS(mode_from_string("???"), ConfigError);

  CHECK(direction_from_string("forward") == Direction::Forward);
  CHECK(direction_from_string("backward") == Direction::Backward);
  CHECK_THROWS_AS(direction_from_string("up"), ConfigError);
  CHECK(opposite(Direction::Forward) == Direction::Backward);

  for (auto s : {InitStrategy::Scratch, InitStrategy::InitB,
                 InitStrategy::InitBothSame, InitStrategy::InitBothSeparate})
    CHECK(init_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(init_from_string("warm"), ConfigError);
}

TEST_CASE("mode predicates") {
  CHECK(is_next_state(ParamMode::DsbOriginal));
  CHECK(is_next_state(ParamMode::SDsb));
  CHECK_FALSE(is_next_state(ParamMode::TrDsb));
  CHECK(is_reparam(ParamMode::TrDsb));
  CHECK(is_reparam(ParamMode::FrDsb));
  CHECK(is_pretrain(ParamMode::Ddpm));
  CHECK(is_pretrain(ParamMode::Fm));
  CHECK(is_bridge(ParamMode::SDsb));
  CHECK_FALSE(is_bridge(ParamMode::Ddpm));
}

TEST_CASE("variance-preserving coefficient table") {
  auto sched = make_schedule(16, 1e-4, 1e-2, ScheduleShape::LinearSymmetric, true);
  auto t = AlphaBarTable::from_schedule(sched);
  CHECK(t.abar(0) == 1.0);
  CHECK(t.abar(16) == doctest::Approx(1e-4).epsilon(1e-12));
  for (int k = 0; k < 16; ++k) CHECK(t.abar(k + 1) < t.abar(k));

  // on a unit horizon, abar_k = terminal^{gbar_k}
  for (int k = 0; k <= 16; ++k)
    CHECK(t.abar(k) ==
          doctest::Approx(std::pow(1e-4, sched.gbar(k))).epsilon(1e-12));

  CHECK_THROWS_AS(AlphaBarTable::from_schedule(sched, 0.0), ConfigError);
  CHECK_THROWS_AS(AlphaBarTable::from_schedule(sched, 1.0), ConfigError);
  CHECK_THROWS_AS(AlphaBarTable::from_schedule(sched, -0.1), ConfigError);
}

TEST_CASE("pretraining pairs") {
  auto sched = make_schedule(8, 0.125, 0.125, ScheduleShape::Constant, false);
  auto abar = AlphaBarTable::from_schedule(sched);
  Rng rng(3);
  MatrixXd x0 = random_batch(6, rng), xN = random_batch(6, rng);

  SUBCASE("ddpm interpolates with the vp coefficients, target is the noise") {
    std::vector<int> ks = {0, 1, 3, 5, 8, 8};
    auto p = make_pretrain_pair(ParamMode::Ddpm, abar, 8, ks, x0, xN);
    CHECK(p.target == xN);
    for (int i = 0; i < 6; ++i) {
      double a = abar(ks[static_cast<std::size_t>(i)]);
      Vec2 want = std::sqrt(a) * x0.row(i).transpose() +
                  std::sqrt(1.0 - a) * xN.row(i).transpose();
      CHECK((p.x_k.row(i).transpose() - want).norm() < 1e-15);
    }
    // k = 0 keeps the data point exactly
    CHECK(p.x_k.row(0) == x0.row(0));
  }

  SUBCASE("fm interpolates linearly, target is the displacement") {
    std::vector<int> ks = {0, 2, 4, 6, 8, 3};
    auto p = make_pretrain_pair(ParamMode::Fm, abar, 8, ks, x0, xN);
    CHECK(p.target == MatrixXd(xN - x0));
    CHECK(p.x_k.row(0) == x0.row(0));
    CHECK(p.x_k.row(4) == xN.row(4));
    for (int i = 0; i < 6; ++i) {
      double t = ks[static_cast<std::size_t>(i)] / 8.0;
      Vec2 want = (1.0 - t) * x0.row(i).transpose() + t * xN.row(i).transpose();
      CHECK((p.x_k.row(i).transpose() - want).norm() < 1e-15);
    }
  }

  SUBCASE("validation") {
    std::vector<int> bad = {0, 1, 2, 3, 4, 9};
    CHECK_THROWS_AS(make_pretrain_pair(ParamMode::Ddpm, abar, 8, bad, x0, xN),
                    ConfigError);
    std::vector<int> neg = {0, 1, 2, 3, 4, -1};
    CHECK_THROWS_AS(make_pretrain_pair(ParamMode::Fm, abar, 8, neg, x0, xN),
                    ConfigError);
    std::vector<int> short_ks = {0, 1};
    CHECK_THROWS_AS(
        make_pretrain_pair(ParamMode::Ddpm, abar, 8, short_ks, x0, xN),
        ConfigError);
    std::vector<int> ks = {0, 1, 2, 3, 4, 5};
    CHECK_THROWS_AS(make_pretrain_pair(ParamMode::SDsb, abar, 8, ks, x0, xN),
                    ConfigError);
  }
}

TEST_CASE("original target collapses to the neighbour state for constant drift") {
  // when the frozen drift is state-independent the two frozen evaluations
  // cancel and the target reduces to the simplified one
  const int n = 8;
  auto frozen = constant_drift_net(n, Vec2(0.7, -0.4));
  Rng rng(4);
  const int rows = 64;
  MatrixXd x_lo = random_batch(rows, rng), x_hi = random_batch(rows, rng);
  std::vector<int> ks(rows);
  for (int i = 0; i < rows; ++i) ks[static_cast<std::size_t>(i)] = i % n;

  SUBCASE("backward, cached step mean") {
    MatrixXd step_mean = frozen.forward(ks, x_lo);  // what the cache stores
    int64_t before = frozen.eval_count.load();
    MatrixXd y = target_dsb_original(frozen, Direction::Backward, ks, x_lo,
                                     x_hi, step_mean);
    CHECK(frozen.eval_count.load() - before == rows);  // one eval per pair
    CHECK((y - x_lo).cwiseAbs().maxCoeff() < 1e-14);
    MatrixXd simplified = target_s_dsb(Direction::Backward, x_lo, x_hi);
    CHECK((y - simplified).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("forward, cached step mean") {
    std::vector<int> ks1(rows);
    for (int i = 0; i < rows; ++i) ks1[static_cast<std::size_t>(i)] = ks[static_cast<std::size_t>(i)] + 1;
    MatrixXd step_mean = frozen.forward(ks1, x_hi);  // backward cache stores this
    int64_t before = frozen.eval_count.load();
    MatrixXd y = target_dsb_original(frozen, Direction::Forward, ks, x_lo,
                                     x_hi, step_mean);
    CHECK(frozen.eval_count.load() - before == rows);
    CHECK((y - x_hi).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("two-evaluation overload agrees bit-for-bit with the cached form") {
    MatrixXd step_mean = frozen.forward(ks, x_lo);
    MatrixXd cached = target_dsb_original(frozen, Direction::Backward, ks,
                                          x_lo, x_hi, step_mean);
    int64_t before = frozen.eval_count.load();
    MatrixXd twice =
        target_dsb_original(frozen, Direction::Backward, ks, x_lo, x_hi);
    CHECK(frozen.eval_count.load() - before == 2 * rows);
    CHECK(cached == twice);
  }
}

TEST_CASE("simplified target and the score-model target are the same object") {
  Rng rng(5);
  MatrixXd x_lo = random_batch(16, rng), x_hi = random_batch(16, rng);
  CHECK(target_s_dsb(Direction::Backward, x_lo, x_hi) == x_lo);
  CHECK(target_s_dsb(Direction::Forward, x_lo, x_hi) == x_hi);
  CHECK(sgm_next_state_target(Direction::Backward, x_lo, x_hi) ==
        target_s_dsb(Direction::Backward, x_lo, x_hi));
  CHECK(sgm_next_state_target(Direction::Forward, x_lo, x_hi) ==
        target_s_dsb(Direction::Forward, x_lo, x_hi));
}

TEST_CASE("terminal and flow targets") {
  auto sched = make_schedule(8, 0.05, 0.3, ScheduleShape::LinearSymmetric, true);
  Rng rng(6);
  const int rows = 32;
  MatrixXd x_lo = random_batch(rows, rng), x_hi = random_batch(rows, rng);
  MatrixXd endpoint = random_batch(rows, rng);
  std::vector<int> ks(rows);
  for (int i = 0; i < rows; ++i) ks[static_cast<std::size_t>(i)] = i % 8;

  CHECK(target_tr_dsb(Direction::Backward, endpoint) == endpoint);
  CHECK(target_tr_dsb(Direction::Forward, endpoint) == endpoint);

  MatrixXd yb = target_fr_dsb(sched, Direction::Backward, ks, x_lo, x_hi, endpoint);
  MatrixXd yf = target_fr_dsb(sched, Direction::Forward, ks, x_lo, x_hi, endpoint);
  for (int i = 0; i < rows; ++i) {
    int k = ks[static_cast<std::size_t>(i)];
    Vec2 wb = (endpoint.row(i) - x_hi.row(i)).transpose() / sched.gbar(k + 1);
    Vec2 wf = (endpoint.row(i) - x_lo.row(i)).transpose() / (1.0 - sched.gbar(k));
    CHECK((yb.row(i).transpose() - wb).norm() == 0.0);
    CHECK((yf.row(i).transpose() - wf).norm() == 0.0);
  }

  auto raw = make_schedule(8, 0.05, 0.3, ScheduleShape::LinearSymmetric, false);
  CHECK_THROWS_AS(
      target_fr_dsb(raw, Direction::Backward, ks, x_lo, x_hi, endpoint),
      ConfigError);
}

TEST_CASE("build_targets dispatches to the per-mode functions") {
  auto sched = make_schedule(8, 0.05, 0.3, ScheduleShape::LinearSymmetric, true);
  auto frozen = constant_drift_net(8, Vec2(0.1, 0.2));
  Rng rng(7);
  const int rows = 16;
  MatrixXd x_lo = random_batch(rows, rng), x_hi = random_batch(rows, rng);
  MatrixXd endpoint = random_batch(rows, rng);
  std::vector<int> ks(rows);
  for (int i = 0; i < rows; ++i) ks[static_cast<std::size_t>(i)] = i % 8;
  MatrixXd step_mean = frozen.forward(ks, x_lo);

  CHECK(build_targets(ParamMode::DsbOriginal, Direction::Backward, sched,
                      &frozen, ks, x_lo, x_hi, endpoint, step_mean) ==
        target_dsb_original(frozen, Direction::Backward, ks, x_lo, x_hi,
                            step_mean));
  CHECK(build_targets(ParamMode::SDsb, Direction::Forward, sched, nullptr, ks,
                      x_lo, x_hi, endpoint, step_mean) == x_hi);
  CHECK(build_targets(ParamMode::TrDsb, Direction::Backward, sched, nullptr,
                      ks, x_lo, x_hi, endpoint, step_mean) == endpoint);
  CHECK(build_targets(ParamMode::FrDsb, Direction::Forward, sched, nullptr, ks,
                      x_lo, x_hi, endpoint, step_mean) ==
        target_fr_dsb(sched, Direction::Forward, ks, x_lo, x_hi, endpoint));

  CHECK_THROWS_AS(build_targets(ParamMode::DsbOriginal, Direction::Backward,
                                sched, nullptr, ks, x_lo, x_hi, endpoint,
                                step_mean),
                  ConfigError);
  CHECK_THROWS_AS(build_targets(ParamMode::Ddpm, Direction::Backward, sched,
                                nullptr, ks, x_lo, x_hi, endpoint, step_mean),
                  ConfigError);
}

TEST_CASE("noise-prediction adapter reproduces exact identities") {
  // If raw(k, x_k) is the exact noise eps of x_k = sa_k x0 + sb_k eps, the
  // adapted head must emit the semantically converted quantity, exactly.
  auto sched = make_schedule(8, 0.05, 0.3, ScheduleShape::LinearSymmetric, true);
  auto abar = AlphaBarTable::from_schedule(sched);
  auto sa = [&](int k) { return std::sqrt(abar(k)); };
  auto sb = [&](int k) { return std::sqrt(1.0 - abar(k)); };
  Rng rng(8);

  for (int k = 0; k <= 8; ++k) {
    Vec2 x0(rng.normal(), rng.normal());
    Vec2 eps(rng.normal(), rng.normal());
    Vec2 xk = sa(k) * x0 + sb(k) * eps;
    auto out = [&](const OutputMap& m) -> Vec2 {
      return m.scale_x(k) * xk + m.scale_raw(k) * eps;
    };

    // next state: slot k emits the neighbouring interpolant
    auto mb = adapter_output_map(ParamMode::Ddpm, ParamMode::SDsb,
                                 Direction::Backward, sched, abar);
    if (k == 0) {
      CHECK(mb.scale_x(0) == 0.0);  // no slot below zero
      CHECK(mb.scale_raw(0) == 0.0);
    } else {
      Vec2 want = sa(k - 1) * x0 + sb(k - 1) * eps;
      CHECK((out(mb) - want).norm() < 1e-12);
    }
    auto mf = adapter_output_map(ParamMode::Ddpm, ParamMode::DsbOriginal,
                                 Direction::Forward, sched, abar);
    if (k == 8) {
      CHECK(mf.scale_x(8) == 0.0);
      CHECK(mf.scale_raw(8) == 0.0);
    } else {
      Vec2 want = sa(k + 1) * x0 + sb(k + 1) * eps;
      CHECK((out(mf) - want).norm() < 1e-12);
    }

    // terminal prediction: x0 backward, the k = N interpolant forward
    auto tb = adapter_output_map(ParamMode::Ddpm, ParamMode::TrDsb,
                                 Direction::Backward, sched, abar);
    CHECK((out(tb) - x0).norm() < 1e-10);
    auto tf = adapter_output_map(ParamMode::Ddpm, ParamMode::TrDsb,
                                 Direction::Forward, sched, abar);
    Vec2 want_n = sa(8) * x0 + sb(8) * eps;
    CHECK((out(tf) - want_n).norm() < 1e-12);

    // average flow toward the terminal point
    auto fb = adapter_output_map(ParamMode::Ddpm, ParamMode::FrDsb,
                                 Direction::Backward, sched, abar);
    if (k == 0) {
      CHECK(fb.scale_x(0) == 0.0);
      CHECK(fb.scale_raw(0) == 0.0);
    } else {
      Vec2 want = (x0 - xk) / sched.gbar(k);
      CHECK((out(fb) - want).norm() < 1e-9);
    }
    auto ff = adapter_output_map(ParamMode::Ddpm, ParamMode::FrDsb,
                                 Direction::Forward, sched, abar);
    if (k == 8) {
      CHECK(ff.scale_x(8) == 0.0);
      CHECK(ff.scale_raw(8) == 0.0);
    } else {
      Vec2 want = (want_n - xk) / (1.0 - sched.gbar(k));
      CHECK((out(ff) - want).norm() < 1e-9);
    }
  }
}

TEST_CASE("flow-matching adapter reproduces exact identities") {
  // Constant unit-horizon schedule: the pretraining grid k/N coincides with
  // gbar_k, so every converted identity is exact.
  auto sched = make_schedule(8, 0.125, 0.125, ScheduleShape::Constant, false);
  REQUIRE(sched.normalized);
  auto abar = AlphaBarTable::from_schedule(sched);
  Rng rng(9);

  for (int k = 0; k <= 8; ++k) {
    Vec2 x0(rng.normal(), rng.normal());
    Vec2 xN(rng.normal(), rng.normal());
    double t = k / 8.0;
    Vec2 xk = (1.0 - t) * x0 + t * xN;
    Vec2 v = xN - x0;  // what a perfect fm net emits everywhere
    auto out = [&](const OutputMap& m) -> Vec2 {
      return m.scale_x(k) * xk + m.scale_raw(k) * v;
    };

    auto mf = adapter_output_map(ParamMode::Fm, ParamMode::SDsb,
                                 Direction::Forward, sched, abar);
    if (k == 8) {
      CHECK(mf.scale_x(8) == 1.0);  // identity where no next slot exists
      CHECK(mf.scale_raw(8) == 0.0);
    } else {
      Vec2 want = (1.0 - (t + 0.125)) * x0 + (t + 0.125) * xN;
      CHECK((out(mf) - want).norm() < 1e-12);
    }
    auto mb = adapter_output_map(ParamMode::Fm, ParamMode::SDsb,
                                 Direction::Backward, sched, abar);
    if (k == 0) {
      CHECK(mb.scale_x(0) == 1.0);
      CHECK(mb.scale_raw(0) == 0.0);
    } else {
      Vec2 want = (1.0 - (t - 0.125)) * x0 + (t - 0.125) * xN;
      CHECK((out(mb) - want).norm() < 1e-12);
    }

    auto tf = adapter_output_map(ParamMode::Fm, ParamMode::TrDsb,
                                 Direction::Forward, sched, abar);
    CHECK((out(tf) - xN).norm() < 1e-12);
    auto tb = adapter_output_map(ParamMode::Fm, ParamMode::TrDsb,
                                 Direction::Backward, sched, abar);
    CHECK((out(tb) - x0).norm() < 1e-12);

    auto ff = adapter_output_map(ParamMode::Fm, ParamMode::FrDsb,
                                 Direction::Forward, sched, abar);
    CHECK(ff.scale_x(k) == 0.0);
    CHECK((out(ff) - v).norm() == 0.0);
    auto fb = adapter_output_map(ParamMode::Fm, ParamMode::FrDsb,
                                 Direction::Backward, sched, abar);
    CHECK((out(fb) + v).norm() == 0.0);
  }
}

TEST_CASE("adapter mode validation") {
  auto sched = make_schedule(4, 0.25, 0.25, ScheduleShape::Constant, false);
  auto abar = AlphaBarTable::from_schedule(sched);
  CHECK_THROWS_AS(adapter_output_map(ParamMode::SDsb, ParamMode::TrDsb,
                                     Direction::Backward, sched, abar),
                  ConfigError);
  CHECK_THROWS_AS(adapter_output_map(ParamMode::Ddpm, ParamMode::Fm,
                                     Direction::Backward, sched, abar),
                  ConfigError);
  CHECK_THROWS_AS(adapter_output_map(ParamMode::Fm, ParamMode::Ddpm,
                                     Direction::Forward, sched, abar),
                  ConfigError);
}

TEST_CASE("converting a pretrained net rewires the head and resets state") {
  NetConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {16};
  cfg.time_embed_dim = 8;
  cfg.n_steps = 8;
  auto sched = make_schedule(8, 0.05, 0.3, ScheduleShape::LinearSymmetric, true);
  auto abar = AlphaBarTable::from_schedule(sched);

  auto pre = make_drift_net(cfg, 77);
  Rng rng(10);
  for (int64_t i = 0; i < pre.num_params(); ++i) pre.param_at(i) += 0.2 * rng.normal();
  pre.mode = ParamMode::Ddpm;
  pre.role = Direction::Backward;
  // give the optimizer some state so the reset is observable
  GradBuffer g = pre.zero_grads();
  for (auto& m : g.w) m.setOnes();
  pre.adam_step(g, 1e-3);
  REQUIRE(pre.adam.step == 1);
  pre.forward(0, MatrixXd::Zero(3, 2));
  REQUIRE(pre.eval_count.load() > 0);

  auto conv = convert_pretrained_to_bridge(pre, ParamMode::TrDsb,
                                           Direction::Backward, sched);
  CHECK(conv.mode == ParamMode::TrDsb);
  CHECK(conv.role == Direction::Backward);
  CHECK(conv.adam.step == 0);
  CHECK(conv.adam.m_w[0].isZero(0.0));
  CHECK(conv.eval_count.load() == 0);
  CHECK(conv.w == pre.w);  // body weights untouched

  // behavioural check: prediction equals (x - sb_k raw) / sa_k where raw is
  // the pretrained net's noise output
  MatrixXd x = random_batch(5, rng);
  for (int k : {1, 4, 8}) {
    MatrixXd raw = pre.forward(k, x);  // pretrained head is (0, 1)
    double sa = std::sqrt(abar(k)), sb = std::sqrt(1.0 - abar(k));
    MatrixXd want = (x - sb * raw) / sa;
    MatrixXd got = conv.forward(k, x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conversion composes over a non-trivial existing head") {
  NetConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {8};
  cfg.time_embed_dim = 4;
  cfg.n_steps = 4;
  auto sched = make_schedule(4, 0.25, 0.25, ScheduleShape::Constant, false);
  auto abar = AlphaBarTable::from_schedule(sched);

  auto pre = make_drift_net(cfg, 5);
  pre.mode = ParamMode::Fm;
  for (int k = 0; k <= 4; ++k) {
    pre.out_map.scale_x(k) = 0.5;
    pre.out_map.scale_raw(k) = 2.0;
  }
  auto conv = convert_pretrained_to_bridge(pre, ParamMode::FrDsb,
                                           Direction::Forward, sched);
  auto adapter = adapter_output_map(ParamMode::Fm, ParamMode::FrDsb,
                                    Direction::Forward, sched, abar);
  for (int k = 0; k <= 4; ++k) {
    CHECK(conv.out_map.scale_x(k) ==
          adapter.scale_x(k) + adapter.scale_raw(k) * 0.5);
    CHECK(conv.out_map.scale_raw(k) == adapter.scale_raw(k) * 2.0);
  }
}

TEST_CASE("conversion validation") {
  NetConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {8};
  cfg.time_embed_dim = 4;
  cfg.n_steps = 4;
  auto sched = make_schedule(4, 0.25, 0.25, ScheduleShape::Constant, false);

  auto bridge_net = make_drift_net(cfg, 1);
  bridge_net.mode = ParamMode::SDsb;
  CHECK_THROWS_AS(convert_pretrained_to_bridge(bridge_net, ParamMode::TrDsb,
                                               Direction::Backward, sched),
                  ConfigError);

  auto pre = make_drift_net(cfg, 1);
  pre.mode = ParamMode::Ddpm;
  CHECK_THROWS_AS(convert_pretrained_to_bridge(pre, ParamMode::Fm,
                                               Direction::Backward, sched),
                  ConfigError);

  auto sched5 = make_schedule(5, 0.2, 0.2, ScheduleShape::Constant, false);
  CHECK_THROWS_AS(convert_pretrained_to_bridge(pre, ParamMode::TrDsb,
                                               Direction::Backward, sched5),
                  ConfigError);
}

TEST_CASE("gradients flow through a converted head") {
  NetConfig cfg;
  cfg.data_dim = 2;
  cfg.hidden = {8};
  cfg.time_embed_dim = 4;
  cfg.n_steps = 4;
  auto sched = make_schedule(4, 0.1, 0.4, ScheduleShape::LinearSymmetric, true);
  auto pre = make_drift_net(cfg, 33);
  Rng rng(11);
  for (int64_t i = 0; i < pre.num_params(); ++i) pre.param_at(i) += 0.2 * rng.normal();
  pre.mode = ParamMode::Ddpm;
  auto net = convert_pretrained_to_bridge(pre, ParamMode::SDsb,
                                          Direction::Backward, sched);

  MatrixXd x = random_batch(4, rng), up = random_batch(4, rng);
  std::vector<int> ks = {1, 2, 3, 4};
  Tape tape = net.forward_tape(ks, x);
  GradBuffer g = net.backward(tape, up);

  auto probe = [&]() {
    return (net.forward(ks, x).array() * up.array()).sum();
  };
  auto grad_at = [&](int64_t flat) {
    int64_t i = flat;
    for (std::size_t l = 0; l < g.w.size(); ++l) {
      if (i < g.w[l].size()) return g.w[l].data()[i];
      i -= g.w[l].size();
      if (i < g.b[l].size()) return g.b[l].data()[i];
      i -= g.b[l].size();
    }
    return g.embed.data()[i];
  };
  Rng pick(12);
  for (int trial = 0; trial < 30; ++trial) {
    int64_t i = pick.uniform_int(0, static_cast<int>(net.num_params()) - 1);
    double orig = net.param_at(i);
    double h = 1e-6 * (1.0 + std::abs(orig));
    net.param_at(i) = orig + h;
    double upv = probe();
    net.param_at(i) = orig - h;
    double dnv = probe();
    net.param_at(i) = orig;
    double fd = (upv - dnv) / (2.0 * h);
    double an = grad_at(i);
    CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-4}));
  }
}

TEST_CASE("coefficient table renders one line per timestep") {
  auto sched = make_schedule(4, 0.25, 0.25, ScheduleShape::Constant, false);
  auto abar = AlphaBarTable::from_schedule(sched);
  auto m = adapter_output_map(ParamMode::Fm, ParamMode::FrDsb,
                              Direction::Forward, sched, abar);
  auto table = adapter_coefficient_table(m);
  CHECK(table.substr(0, 22) == "k,scale_x,scale_raw\n0,");
  int lines = 0;
  for (char c : table)
    if (c == '\n') ++lines;
  CHECK(lines == 6);  // header + five timesteps
}

TEST_CASE("mean squared error over a batch") {
  MatrixXd pred(1, 2), target(1, 2);
  pred << 1.0, 0.0;
  target << 0.0, 0.0;
  auto l = loss_mse(pred, target);
  CHECK(l.value == 1.0);
  CHECK(l.grad(0, 0) == 2.0);
  CHECK(l.grad(0, 1) == 0.0);

  // batch mean: squared error summed over coordinates, averaged over rows
  MatrixXd p2(2, 2), t2(2, 2);
  p2 << 1.0, 1.0, 0.0, 0.0;
  t2 << 0.0, 0.0, 0.0, 3.0;
  auto l2 = loss_mse(p2, t2);
  CHECK(l2.value == doctest::Approx((2.0 + 9.0) / 2.0).epsilon(1e-15));
  CHECK(l2.grad(0, 0) == 1.0);   // 2 * 1 / 2
  CHECK(l2.grad(1, 1) == -3.0);  // 2 * (-3) / 2

  MatrixXd bad(3, 2);
  CHECK_THROWS_AS(loss_mse(p2, bad), ConfigError);
  MatrixXd empty(0, 2);
  CHECK_THROWS_AS(loss_mse(empty, empty), ConfigError);
}
