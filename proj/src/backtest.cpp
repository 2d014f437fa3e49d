#include "varsmc/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "varsmc/errors.hpp"
#include "varsmc/stats.hpp"

namespace varsmc::backtest {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> q, const char* what) {
  if (y.size() != q.size())
    throw std::invalid_argument(std::string(what) + ": returns and forecasts differ in length");
  if (y.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double num_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

double mean_quantile_score(std::span<const double> y, std::span<const double> q, double alpha) {
  check_lengths(y, q, "mean_quantile_score");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    s += (y[i] - q[i]) * (alpha - (y[i] <= q[i] ? 1.0 : 0.0));
  return s / static_cast<double>(y.size());
}

double vrate(std::span<const double> y, std::span<const double> q) {
  check_lengths(y, q, "vrate");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] < q[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

std::vector<std::vector<double>> dq_design(std::span<const double> y, std::span<const double> q,
                                           double alpha, int lags, std::vector<double>* hits) {
  check_lengths(y, q, "dq_design");
  if (lags < 1) throw std::invalid_argument("dq_design: lags must be >= 1");
  const std::size_t n = y.size();
  const auto L = static_cast<std::size_t>(lags);
  std::vector<double> h(n);
  for (std::size_t t = 0; t < n; ++t) h[t] = (y[t] < q[t] ? 1.0 : 0.0) - alpha;
  std::vector<std::vector<double>> w;
  if (hits) hits->clear();
  for (std::size_t t = L; t < n; ++t) {
    std::vector<double> row{1.0};
    for (std::size_t k = 1; k <= L; ++k) row.push_back(h[t - k]);
    row.push_back(q[t]);
    w.push_back(std::move(row));
    if (hits) hits->push_back(h[t]);
  }
  return w;
}

DqResult dq_test(std::span<const double> y, std::span<const double> q, double alpha,
                 DqVariant variant) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("dq_test: alpha must lie in (0, 1)");
  const int lags = static_cast<int>(variant);
  const std::size_t cols = static_cast<std::size_t>(lags) + 2;
  check_lengths(y, q, "dq_test");
  if (y.size() <= 4 + cols) throw std::invalid_argument("dq_test: test sample too short");

  std::vector<double> h;
  const auto rows = dq_design(y, q, alpha, lags, &h);
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd W(n, static_cast<Eigen::Index>(cols));
  Eigen::VectorXd H(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < cols; ++k) W(i, static_cast<Eigen::Index>(k)) = rows[i][k];
    H(i) = h[static_cast<std::size_t>(i)];
  }

  DqResult r;
  r.dof = static_cast<int>(cols);
  r.n_rows = rows.size();
  Eigen::MatrixXd G = W.transpose() * W;
  const Eigen::VectorXd b = W.transpose() * H;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(W);
  rank_check.setThreshold(1e-10);
  if (rank_check.rank() < static_cast<Eigen::Index>(cols)) {
    G.diagonal().array() += 1e-10;
    r.ridge_applied = true;
  }
  const Eigen::VectorXd x = G.ldlt().solve(b);
  r.statistic = std::max(0.0, b.dot(x) / (alpha * (1.0 - alpha)));
  r.p_value = stats::chi2_upper_tail(r.statistic, static_cast<double>(r.dof));
  return r;
}

TailLoss tail_loss_ratio(std::span<const double> y, std::span<const double> q) {
  check_lengths(y, q, "tail_loss_ratio");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += std::max(0.0, y[i] - q[i]);
    den += y[i];
  }
  if (den == 0.0) return {std::numeric_limits<double>::quiet_NaN(), false};
  return {num / den, true};
}

int BacktestReport::dq_rejections(double level) const {
  int n = 0;
  for (const auto& d : dq) n += d.p_value < level ? 1 : 0;
  return n;
}

BacktestReport evaluate(std::string model_id, std::string market, double alpha,
                        std::span<const double> y, std::span<const double> q) {
  BacktestReport r;
  r.model_id = std::move(model_id);
  r.market = std::move(market);
  r.alpha = alpha;
  r.qs = mean_quantile_score(y, q, alpha);
  r.vrate = vrate(y, q);
  r.vrate_ratio = r.vrate / alpha;
  for (int v = 1; v <= 4; ++v) r.dq[v - 1] = dq_test(y, q, alpha, static_cast<DqVariant>(v));
  r.tail_loss = tail_loss_ratio(y, q);
  r.n_test = y.size();
  return r;
}

nlohmann::json to_json(const BacktestReport& r) {
  nlohmann::json dq = nlohmann::json::array();
  for (int v = 0; v < 4; ++v)
    dq.push_back({{"variant", "DQ" + std::to_string(v + 1)},
                  {"statistic", num(r.dq[v].statistic)},
                  {"dof", r.dq[v].dof},
                  {"p_value", num(r.dq[v].p_value)},
                  {"ridge_applied", r.dq[v].ridge_applied},
                  {"n_rows", r.dq[v].n_rows}});
  return {{"model_id", r.model_id},
          {"market", r.market},
          {"alpha", r.alpha},
          {"n_test", r.n_test},
          {"qs", num(r.qs)},
          {"vrate", num(r.vrate)},
          {"vrate_ratio", num(r.vrate_ratio)},
          {"dq", dq},
          {"dq_rejections_5pct", r.dq_rejections()},
          {"tail_loss_ratio", num(r.tail_loss.value)},
          {"tail_loss_defined", r.tail_loss.defined}};
}

BacktestReport report_from_json(const nlohmann::json& j) {
  try {
    BacktestReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.market = j.at("market").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.qs = num_or_nan(j.at("qs"));
    r.vrate = num_or_nan(j.at("vrate"));
    r.vrate_ratio = num_or_nan(j.at("vrate_ratio"));
    const auto& dq = j.at("dq");
    if (dq.size() != 4) throw DataError("report JSON: expected four DQ entries");
    for (std::size_t v = 0; v < 4; ++v) {
      r.dq[v].statistic = num_or_nan(dq[v].at("statistic"));
      r.dq[v].dof = dq[v].at("dof").get<int>();
      r.dq[v].p_value = num_or_nan(dq[v].at("p_value"));
      r.dq[v].ridge_applied = dq[v].at("ridge_applied").get<bool>();
      r.dq[v].n_rows = dq[v].at("n_rows").get<std::size_t>();
    }
    r.tail_loss = {num_or_nan(j.at("tail_loss_ratio")), j.at("tail_loss_defined").get<bool>()};
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report JSON: ") + e.what());
  }
}

void write_report_json(const std::filesystem::path& path, const BacktestReport& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(r).dump(2) << '\n';
}

BacktestReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::qs: return "qs";
    case Metric::vrate: return "vrate";
    case Metric::dq: return "dq";
    case Metric::tail_loss: return "tail_loss";
  }
  return "?";
}

namespace {

// Lower score is better; NaN entries never win.
void mark_best(const std::vector<double>& score, std::vector<bool>& fav, bool& tie) {
  double best = std::numeric_limits<double>::infinity();
  for (double s : score)
    if (!std::isnan(s)) best = std::min(best, s);
  fav.assign(score.size(), false);
  int count = 0;
  if (std::isinf(best) && best > 0) return;
  for (std::size_t i = 0; i < score.size(); ++i)
    if (score[i] == best) {
      fav[i] = true;
      ++count;
    }
  tie = count > 1;
}

void rank_market(MarketComparison& mc) {
  const auto n = mc.reports.size();
  std::vector<double> qs(n), vr(n), dq(n), tl(n);
  int positive = 0, negative = 0;
  for (const auto& r : mc.reports)
    if (r.tail_loss.defined) (r.tail_loss.value < 0 ? negative : positive)++;
  const bool negative_group = negative > positive;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = mc.reports[i];
    qs[i] = r.qs;
    vr[i] = std::abs(r.vrate_ratio - 1.0);
    dq[i] = r.dq_rejections();
    const bool in_group = r.tail_loss.defined && ((r.tail_loss.value < 0) == negative_group);
    tl[i] = in_group ? std::abs(r.tail_loss.value) : std::numeric_limits<double>::quiet_NaN();
  }
  mark_best(qs, mc.favoured[0], mc.tie[0]);
  mark_best(vr, mc.favoured[1], mc.tie[1]);
  mark_best(dq, mc.favoured[2], mc.tie[2]);
  mark_best(tl, mc.favoured[3], mc.tie[3]);
}

}  // namespace

ComparisonTable compare(std::span<const BacktestReport> reports) {
  if (reports.size() < 2) throw ConfigError("compare: need at least two reports");
  ComparisonTable table;
  table.alpha = reports.front().alpha;
  for (const auto& r : reports)
    if (r.alpha != table.alpha) throw ConfigError("compare: reports mix different alpha levels");

  std::vector<std::string> market_order;
  std::map<std::string, std::vector<const BacktestReport*>> by_market;
  for (const auto& r : reports) {
    if (!by_market.count(r.market)) market_order.push_back(r.market);
    by_market[r.market].push_back(&r);
    if (std::find(table.models.begin(), table.models.end(), r.model_id) == table.models.end())
      table.models.push_back(r.model_id);
  }
  if (table.models.size() < 2) throw ConfigError("compare: need reports from at least two models");

  for (const auto& market : market_order) {
    MarketComparison mc;
    mc.market = market;
    for (const auto& model : table.models) {
      const BacktestReport* found = nullptr;
      for (const auto* r : by_market[market])
        if (r->model_id == model) {
          if (found) throw ConfigError("compare: duplicate report for " + model + " on " + market);
          found = r;
        }
      if (!found) throw ConfigError("compare: no report for " + model + " on " + market);
      mc.reports.push_back(*found);
    }
    rank_market(mc);
    table.markets.push_back(std::move(mc));
  }
  return table;
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "market,alpha";
  for (const auto& m : table.models)
    out << ',' << m << "_qs," << m << "_vrate," << m << "_vrate_ratio," << m << "_dq1_p," << m
        << "_dq2_p," << m << "_dq3_p," << m << "_dq4_p," << m << "_dq_rejections," << m
        << "_tail_loss," << m << "_favoured";
  out << '\n';
  for (const auto& mc : table.markets) {
    out << mc.market << ',' << fmt(table.alpha);
    for (std::size_t i = 0; i < mc.reports.size(); ++i) {
      const auto& r = mc.reports[i];
      out << ',' << fmt(r.qs) << ',' << fmt(r.vrate) << ',' << fmt(r.vrate_ratio);
      for (const auto& d : r.dq) out << ',' << fmt(d.p_value);
      out << ',' << r.dq_rejections() << ','
          << (r.tail_loss.defined ? fmt(r.tail_loss.value) : std::string("undefined")) << ',';
      std::string fav;
      for (std::size_t k = 0; k < kMetrics.size(); ++k)
        if (mc.favoured[k][i]) {
          if (!fav.empty()) fav += '|';
          fav += metric_name(kMetrics[k]);
          if (mc.tie[k]) fav += "(tie)";
        }
      out << fav;
    }
    out << '\n';
  }
}

nlohmann::json to_json(const ComparisonTable& table) {
  nlohmann::json markets = nlohmann::json::array();
  for (const auto& mc : table.markets) {
    nlohmann::json models = nlohmann::json::object();
    for (std::size_t i = 0; i < mc.reports.size(); ++i) {
      auto entry = to_json(mc.reports[i]);
      nlohmann::json fav = nlohmann::json::array();
      for (std::size_t k = 0; k < kMetrics.size(); ++k)
        if (mc.favoured[k][i]) fav.push_back(metric_name(kMetrics[k]));
      entry["favoured"] = fav;
      models[mc.reports[i].model_id] = entry;
    }
    nlohmann::json ties = nlohmann::json::array();
    for (std::size_t k = 0; k < kMetrics.size(); ++k)
      if (mc.tie[k]) ties.push_back(metric_name(kMetrics[k]));
    markets.push_back({{"market", mc.market}, {"models", models}, {"ties", ties}});
  }
  return {{"alpha", table.alpha}, {"models", table.models}, {"markets", markets}};
}

}  // namespace varsmc::backtest
