#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "oracles.hpp"
#include "varsmc/data.hpp"
#include "varsmc/errors.hpp"
#include "varsmc/stats.hpp"

using namespace varsmc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& contents) {
  const auto dir = fs::temp_directory_path() / "varsmc_tests";
  fs::create_directories(dir);
  const auto p = dir / name;
  std::ofstream(p) << contents;
  return p;
}

MarketSeries random_series(oracle::Rand& r, std::size_t n) {
  MarketSeries s;
  s.name = "rand";
  std::chrono::sys_days day{std::chrono::year{2010} / 1 / 1};
  for (std::size_t i = 0; i < n; ++i) {
    s.dates.emplace_back(day);
    day += std::chrono::days{1 + static_cast<int>(r.index(3))};
    s.returns.push_back(r.normal(0.0, 1.3));
    s.rv.push_back(std::exp(r.normal(0.0, 0.8)));
  }
  return s;
}

}  // namespace

TEST_SUITE("stats") {
  TEST_CASE("normal quantile agrees with the inverse error function") {
    oracle::Rand r(1);
    for (int i = 0; i < 2000; ++i) {
      const double p = i < 1000 ? r.uniform(1e-12, 1.0 - 1e-12) : std::pow(10.0, -r.uniform(1, 14));
      CHECK(stats::normal_quantile(p) == doctest::Approx(oracle::normal_quantile(p)).epsilon(1e-9).scale(1.0));
    }
    CHECK(stats::normal_quantile(0.5) == 0.0);
    CHECK(stats::normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
  }

  TEST_CASE("chi-square upper tail spot values") {
    CHECK(std::abs(stats::chi2_upper_tail(7.8147, 3) - 0.05) < 1e-4);
    CHECK(stats::chi2_upper_tail(0.0, 4) == doctest::Approx(1.0));
    // dof 2: exp(-x/2) in closed form.
    for (double x : {0.1, 1.0, 5.0, 20.0})
      CHECK(stats::chi2_upper_tail(x, 2) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-13));
  }

  TEST_CASE("empirical quantile and moments") {
    const std::vector<double> xs{3, 1, 2, 4};
    CHECK(stats::mean(xs) == 2.5);
    CHECK(stats::variance(xs) == doctest::Approx(5.0 / 3.0));
    CHECK(stats::empirical_quantile(xs, 0.0) == 1.0);
    CHECK(stats::empirical_quantile(xs, 1.0) == 4.0);
    CHECK(stats::empirical_quantile(xs, 0.5) == 2.5);
  }
}

TEST_SUITE("data") {
  TEST_CASE("constant prices give zero returns") {
    const auto p = temp_file("prices0.csv",
                             "date,price,rv\n2020-01-01,100,1\n2020-01-02,100,1\n2020-01-03,100,1\n");
    CsvSchema schema;
    schema.price_column = "price";
    const auto s = load_market_csv(p, schema);
    REQUIRE(s.returns.size() == 2);
    CHECK(s.returns[0] == 0.0);
    CHECK(s.returns[1] == 0.0);
  }

  TEST_CASE("log-price difference of 0.01 is a 1 percent return") {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "date,price,rv\n2020-01-01,100,1\n2020-01-02,%.17g,1\n",
                  100.0 * std::exp(0.01));
    CsvSchema schema;
    schema.price_column = "price";
    const auto s = load_market_csv(temp_file("prices1.csv", buf), schema);
    REQUIRE(s.returns.size() == 1);
    CHECK(s.returns[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("malformed date names the row") {
    const auto p = temp_file("baddate.csv",
                             "date,return,rv\n2020-01-01,0.1,1\n2020-13-45,0.2,1\n2020-01-03,0.3,1\n");
    try {
      load_market_csv(p);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }

  TEST_CASE("other ingestion errors") {
    CHECK_THROWS_AS(load_market_csv("/nonexistent/file.csv"), DataError);
    CHECK_THROWS_AS(load_market_csv(temp_file("neg.csv", "date,return,rv\n2020-01-01,0.1,-1\n")),
                    DataError);
    CHECK_THROWS_AS(load_market_csv(temp_file("order.csv",
                                              "date,return,rv\n2020-01-02,0.1,1\n2020-01-01,0.1,1\n")),
                    DataError);
    CHECK_THROWS_AS(load_market_csv(temp_file("nocol.csv", "date,ret,rv\n2020-01-02,0.1,1\n")),
                    DataError);
  }

  TEST_CASE("missing values are dropped and counted") {
    const auto p = temp_file("missing.csv",
                             "date,return,rv\n2020-01-01,0.1,1\n2020-01-02,NA,1\n2020-01-03,0.3,\n"
                             "2020-01-04,0.4,2\n");
    LoadReport rep;
    const auto s = load_market_csv(p, {}, &rep);
    CHECK(s.size() == 2);
    CHECK(rep.rows_read == 4);
    CHECK(rep.rows_dropped == 2);
  }

  TEST_CASE("aggregates on a ramp and on constants") {
    std::vector<double> rv(40), ret(40, 0.5);
    for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = static_cast<double>(i + 1);
    const auto in = build_har_inputs(ret, rv);
    CHECK(in.valid_from == 22);
    CHECK(in.rv_w[4] == 3.0);
    CHECK(in.rv_w[22] == doctest::Approx((19 + 20 + 21 + 22 + 23) / 5.0));
    for (double x : in.neg_ret_d) CHECK(x == 0.0);
    for (std::size_t t = in.valid_from; t < in.size(); ++t) {
      CHECK(in.neg_ret_w[t] == 0.0);
      CHECK(in.neg_ret_m[t] == 0.0);
    }

    const std::vector<double> c(30, 2.5);
    const auto ci = build_har_inputs(std::span<const double>(ret).first(30), c);
    for (std::size_t t = ci.valid_from; t < ci.size(); ++t) {
      CHECK(ci.rv_w[t] == 2.5);
      CHECK(ci.rv_m[t] == 2.5);
    }
  }

  TEST_CASE("too short for aggregates") {
    const std::vector<double> x(22, 1.0);
    CHECK_THROWS_AS(build_har_inputs(x, x), DataError);
  }

  TEST_CASE("split lengths") {
    oracle::Rand r(3);
    const auto s = random_series(r, 3000);
    auto [a, b] = split(s, {2000, 1000});
    CHECK(a.size() == 2000);
    CHECK(b.size() == 1000);
    CHECK(a.dates.back() < b.dates.front());
    CHECK(b.returns.back() == s.returns.back());

    const auto bvlg = random_series(r, 2398);
    auto [c, d] = split(bvlg, {1398, 1000});
    CHECK(c.size() == 1398);
    CHECK(d.size() == 1000);
    CHECK_THROWS_AS(split(s, {3000, 1000}), ConfigError);
  }

  TEST_CASE("synthetic market") {
    DgpConfig dgp;
    const auto a = generate_synthetic_market(5, 500, dgp);
    const auto b = generate_synthetic_market(5, 500, dgp);
    CHECK(a.series.returns == b.series.returns);
    CHECK(a.series.rv == b.series.rv);
    a.series.validate();

    dgp.rv_noise_sd = 0.0;
    const auto c = generate_synthetic_market(5, 500, dgp);
    CHECK(c.series.rv == c.cond_variance);

    DgpConfig bad;
    bad.arch = 0.2;
    bad.garch = 0.8;
    CHECK_THROWS_AS(generate_synthetic_market(1, 500, bad), ConfigError);
    CHECK_THROWS_AS(generate_synthetic_market(1, 99, DgpConfig{}), ConfigError);
  }

  TEST_CASE("true quantile uses the standardized t") {
    DgpConfig dgp;
    dgp.nu = 6;
    // t_6 0.05 quantile is -1.943180281; standardized by sqrt(4/6).
    CHECK(dgp.true_quantile(4.0, 0.05) ==
          doctest::Approx(dgp.mu + 2.0 * -1.9431802805153 * std::sqrt(4.0 / 6.0)).epsilon(1e-9));
  }

  TEST_CASE("property: window means match direct sums (100 cases)") {
    oracle::Rand r(11);
    for (int c = 0; c < 100; ++c) {
      const auto s = random_series(r, 23 + r.index(80));
      for (bool inclusive : {true, false}) {
        const auto in = build_har_inputs(s, inclusive);
        for (std::size_t t = in.valid_from; t < in.size(); ++t) {
          const std::size_t last = inclusive ? t : t - 1;
          double w = 0, m = 0, y5 = 0, y20 = 0;
          for (std::size_t k = last - 4; k <= last; ++k) w += s.rv[k], y5 += s.returns[k];
          for (std::size_t k = last - 21; k <= last; ++k) m += s.rv[k];
          for (std::size_t k = last - 19; k <= last; ++k) y20 += s.returns[k];
          REQUIRE(in.rv_w[t] == doctest::Approx(w / 5).epsilon(1e-14));
          REQUIRE(in.rv_m[t] == doctest::Approx(m / 22).epsilon(1e-14));
          REQUIRE(in.neg_ret_w[t] == doctest::Approx(std::min(0.0, y5 / 5)).epsilon(1e-14));
          REQUIRE(in.neg_ret_m[t] == doctest::Approx(std::min(0.0, y20 / 20)).epsilon(1e-14));
          REQUIRE(in.neg_ret_w[t] <= 0.0);
          REQUIRE(in.neg_ret_m[t] <= 0.0);
        }
      }
    }
  }

  TEST_CASE("property: aggregation is linear in rv (100 cases)") {
    oracle::Rand r(12);
    for (int c = 0; c < 100; ++c) {
      auto s = random_series(r, 23 + r.index(60));
      const double k = std::exp(r.normal(0, 1.5));
      const auto base = build_har_inputs(s);
      for (double& v : s.rv) v *= k;
      const auto scaled = build_har_inputs(s);
      for (std::size_t t = base.valid_from; t < base.size(); ++t) {
        REQUIRE(scaled.rv_w[t] == doctest::Approx(k * base.rv_w[t]).epsilon(1e-13));
        REQUIRE(scaled.rv_m[t] == doctest::Approx(k * base.rv_m[t]).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("property: dropping leading rows reproduces the aggregate tail (100 cases)") {
    oracle::Rand r(13);
    for (int c = 0; c < 100; ++c) {
      const auto s = random_series(r, 50 + r.index(60));
      const std::size_t k = 1 + r.index(s.size() - 23);
      const auto full = build_har_inputs(s);
      const auto tail = build_har_inputs(s.slice(k, s.size() - k));
      for (std::size_t t = tail.valid_from; t < tail.size(); ++t) {
        REQUIRE(tail.rv_w[t] == full.rv_w[t + k]);
        REQUIRE(tail.rv_m[t] == full.rv_m[t + k]);
        REQUIRE(tail.rv_m20[t] == full.rv_m20[t + k]);
        REQUIRE(tail.sqrt_rv_m[t] == full.sqrt_rv_m[t + k]);
        REQUIRE(tail.neg_ret_m[t] == full.neg_ret_m[t + k]);
      }
    }
  }

  TEST_CASE("property: CSV round trip is exact (100 cases)") {
    oracle::Rand r(14);
    for (int c = 0; c < 100; ++c) {
      const auto s = random_series(r, 23 + r.index(40));
      const auto p = temp_file("roundtrip.csv", "");
      write_market_csv(p, s);
      const auto back = load_market_csv(p);
      REQUIRE(back.dates == s.dates);
      REQUIRE(back.returns == s.returns);
      REQUIRE(back.rv == s.rv);
    }
  }
}
