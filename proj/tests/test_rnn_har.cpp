#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "varsmc/kernels.hpp"
#include "varsmc/rnn_har.hpp"
#include "varsmc/stats.hpp"

using namespace varsmc;
using namespace varsmc::rnn;

namespace {

struct Data {
  std::vector<double> returns, rv;
  HarInputs in;
};

Data make_data(oracle::Rand& r, std::size_t n) {
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    d.returns.push_back(r.normal(0.0, 1.0));
    d.rv.push_back(std::exp(r.normal(0.0, 0.6)));
  }
  d.in = build_har_inputs(d.returns, d.rv);
  return d;
}

ParamVector random_theta(oracle::Rand& r, double cell_sd = 0.5, double beta_sd = 1.0) {
  ParamVector th{};
  for (std::size_t k = 0; k < kParamDim; ++k) th[k] = r.normal(0.0, k < 4 ? beta_sd : cell_sd);
  return th;
}

}  // namespace

TEST_SUITE("rnn_har") {
  TEST_CASE("zero cells give VaR equal to beta0") {
    oracle::Rand r(31);
    const auto d = make_data(r, 60);
    ParamVector th{};
    th[kBeta0] = 0.7;
    th[kBeta1] = 3.0;
    th[kBeta2] = -2.0;
    th[kBeta3] = 1.0;
    const auto path = forward(RnnHarParams::from_vector(th), d.in, {first_target_day(d.in), 60});
    for (double q : path.q) CHECK(q == 0.7);
    CHECK(path.final_hidden == HiddenState{});
  }

  TEST_CASE("two-step daily recursion") {
    std::vector<double> rv(40, 1.0), y(40, 0.0);
    const std::size_t first = 23;
    rv[first - 1] = 1.0;
    rv[first] = 2.0;
    const auto in = build_har_inputs(y, rv);
    RnnHarParams p;
    p.daily = {0.0, 1.0, 0.5};
    p.beta = {0.0, 1.0, 0.0, 0.0};
    const auto path = forward(p, in, {first, first + 2});
    CHECK(path.q[0] == doctest::Approx(0.761594).epsilon(1e-6));
    CHECK(path.q[1] == doctest::Approx(0.983041).epsilon(1e-6));
    CHECK(path.q[1] == doctest::Approx(std::tanh(2.0 + 0.5 * std::tanh(1.0))).epsilon(1e-15));
  }

  TEST_CASE("decoupled output layer") {
    oracle::Rand r(32);
    const auto d = make_data(r, 80);
    auto th = random_theta(r);
    th[kBeta0] = -2.0;
    th[kBeta1] = th[kBeta2] = th[kBeta3] = 0.0;
    const auto path = forward(RnnHarParams::from_vector(th), d.in, {23, 80});
    for (double q : path.q) CHECK(q == -2.0);
  }

  TEST_CASE("range errors") {
    oracle::Rand r(33);
    const auto d = make_data(r, 40);
    RnnHarParams p;
    CHECK_THROWS_AS(forward(p, d.in, {22, 30}), std::out_of_range);
    CHECK_THROWS_AS(forward(p, d.in, {23, 42}), std::out_of_range);
    CHECK_NOTHROW(forward(p, d.in, {23, 41}));
  }

  TEST_CASE("quantile score examples") {
    CHECK(quantile_score(1.0, -1.0, 0.05) == doctest::Approx(0.1));
    CHECK(quantile_score(-2.0, -1.0, 0.05) == doctest::Approx(0.95));
    CHECK(quantile_score(-1.5, -1.5, 0.05) == 0.0);
  }

  TEST_CASE("aggregate loss examples") {
    oracle::Rand r(34);
    const auto d = make_data(r, 200);
    const TimeRange range{23, 200};
    std::vector<double> ys(d.returns.begin() + 23, d.returns.end());
    const double qa = stats::empirical_quantile(ys, 0.05);
    RnnHarParams p;
    p.beta[0] = qa;
    double ref = 0;
    for (double y : ys) ref += oracle::check_loss(y, qa, 0.05, false);
    CHECK(aggregate_loss(p, d.in, d.returns, range, 0.05) == doctest::Approx(ref).epsilon(1e-12));

    CHECK(aggregate_loss(p, d.in, d.returns, {50, 51}, 0.05) ==
          doctest::Approx(quantile_score(d.returns[50], qa, 0.05)).epsilon(1e-15));

    p.beta[0] = -100.0;
    double no_hit = 0;
    for (double y : ys) no_hit += 0.001 * (y + 100.0);
    CHECK(aggregate_loss(p, d.in, d.returns, range, 0.001) == doctest::Approx(no_hit).epsilon(1e-12));
  }

  TEST_CASE("property: forward equals the scalar recursion oracle (100 cases)") {
    oracle::Rand r(35);
    for (int c = 0; c < 100; ++c) {
      const auto d = make_data(r, 30 + r.index(150));
      const auto th = random_theta(r, 1.0, 2.0);
      const std::size_t first = 23 + r.index(5);
      const auto path = forward(RnnHarParams::from_vector(th), d.in, {first, d.in.size()});
      const auto ref = oracle::rnn_path(th, d.in.rv_d, d.in.rv_w, d.in.rv_m, first, d.in.size());
      REQUIRE(path.q.size() == ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i)
        REQUIRE(std::abs(path.q[i] - ref[i]) <= 1e-12 * (1.0 + std::abs(ref[i])));
    }
  }

  TEST_CASE("property: VaR stays within the output-layer bound (100 cases)") {
    oracle::Rand r(36);
    for (int c = 0; c < 100; ++c) {
      const auto d = make_data(r, 80);
      const auto th = random_theta(r, 3.0, 3.0);
      const auto path = forward(RnnHarParams::from_vector(th), d.in, {23, 80});
      const double bound = std::abs(th[1]) + std::abs(th[2]) + std::abs(th[3]);
      for (double q : path.q) {
        REQUIRE(std::isfinite(q));
        REQUIRE(std::abs(q - th[0]) <= bound + 1e-12);
      }
      REQUIRE(std::abs(path.final_hidden.d) < 1.0);
      REQUIRE(std::abs(path.final_hidden.w) < 1.0);
      REQUIRE(std::abs(path.final_hidden.m) < 1.0);
    }
  }

  TEST_CASE("property: causality, perturbing RV at s moves only later VaRs (100 cases)") {
    oracle::Rand r(37);
    for (int c = 0; c < 100; ++c) {
      auto d = make_data(r, 90);
      const auto th = random_theta(r, 0.8);
      const auto p = RnnHarParams::from_vector(th);
      const auto base = forward(p, d.in, {23, 90});
      const std::size_t s = 23 + r.index(60);
      d.rv[s] *= 1.5 + r.uniform();
      const auto in2 = build_har_inputs(d.returns, d.rv);
      const auto moved = forward(p, in2, {23, 90});
      for (std::size_t i = 0; i < base.q.size(); ++i) {
        const std::size_t tau = 23 + i;
        if (tau <= s) REQUIRE(moved.q[i] == base.q[i]);
      }
      REQUIRE(moved.q[s + 1 - 23] != base.q[s + 1 - 23]);
    }
  }

  TEST_CASE("property: hidden state contracts to a fixed point (100 cases)") {
    oracle::Rand r(38);
    for (int c = 0; c < 100; ++c) {
      CellParams cell{r.normal(), r.normal(), r.uniform(-0.95, 0.95)};
      const double x = std::exp(r.normal());
      double h1 = r.uniform(-0.99, 0.99), h2 = r.uniform(-0.99, 0.99);
      for (int k = 0; k < 200; ++k) {
        h1 = cell.step(x, h1);
        h2 = cell.step(x, h2);
      }
      REQUIRE(std::abs(h1 - h2) < 1e-10);
    }
  }

  TEST_CASE("property: loss over a beta0 grid is minimized at the empirical quantile (100 cases)") {
    oracle::Rand r(39);
    for (int c = 0; c < 100; ++c) {
      const auto d = make_data(r, 23 + 40 + r.index(100));
      const double alpha = r.uniform(0.01, 0.2);
      const TimeRange range{23, d.in.size()};
      std::vector<double> ys(d.returns.begin() + 23, d.returns.end());
      const double step = 0.01;
      double best = 0, best_loss = INFINITY;
      RnnHarParams p;
      for (double b = -4.0; b <= 4.0; b += step) {
        p.beta[0] = b;
        const double l = aggregate_loss(p, d.in, d.returns, range, alpha);
        if (l < best_loss) best_loss = l, best = b;
      }
      // Any minimizer lies between the order statistics bracketing alpha * n.
      std::sort(ys.begin(), ys.end());
      const double na = alpha * static_cast<double>(ys.size());
      const auto k = static_cast<std::size_t>(std::ceil(na));
      const double lo = ys[std::max<std::size_t>(k, 1) - 1];
      const double hi = std::floor(na) == na ? ys[k] : lo;
      REQUIRE(best >= lo - step);
      REQUIRE(best <= hi + step);
    }
  }

  TEST_CASE("property: parallel sweep equals the serial reference (100 cases)") {
    oracle::Rand r(40);
    for (int c = 0; c < 100; ++c) {
      const auto d = make_data(r, 60 + r.index(100));
      std::vector<ParamVector> particles(1 + r.index(300));
      for (auto& th : particles) th = random_theta(r);
      const kernels::LossProblem pb{&d.in, d.returns, {23, d.in.size()}, r.uniform(0.01, 0.1)};
      kernels::SweepOutput a, b;
      kernels::sweep_loss(particles, pb, a, kernels::Backend::parallel);
      kernels::sweep_loss(particles, pb, b, kernels::Backend::serial);
      for (std::size_t j = 0; j < particles.size(); ++j) {
        REQUIRE(a.loss[j] == doctest::Approx(b.loss[j]).epsilon(1e-12));
        REQUIRE(a.hidden[j].d == doctest::Approx(b.hidden[j].d).epsilon(1e-13));
        REQUIRE(a.hidden[j].m == doctest::Approx(b.hidden[j].m).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("step_particles continues the recursion") {
    oracle::Rand r(41);
    const auto d = make_data(r, 100);
    std::vector<ParamVector> particles(50);
    for (auto& th : particles) th = random_theta(r);
    const kernels::LossProblem pb{&d.in, d.returns, {23, 70}, 0.05};
    kernels::SweepOutput out;
    kernels::sweep_loss(particles, pb, out);
    std::vector<double> q(particles.size());
    for (auto backend : {kernels::Backend::parallel, kernels::Backend::serial}) {
      auto hidden = out.hidden;
      kernels::step_particles(particles, d.in, 69, hidden, q, backend);
      for (std::size_t j = 0; j < particles.size(); ++j) {
        const auto full = forward(RnnHarParams::from_vector(particles[j]), d.in, {23, 71});
        CHECK(q[j] == doctest::Approx(full.q.back()).epsilon(1e-12));
      }
    }
  }
}
