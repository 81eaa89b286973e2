#include "sevpr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sevpr/errors.hpp"
#include "sevpr/event_io.hpp"

namespace sevpr::eval {

RetrievalResult match_all(const std::vector<std::vector<double>>& query_descs,
                          const std::vector<std::vector<double>>& db_descs,
                          std::vector<std::optional<GeoPose>> query_poses,
                          std::vector<std::optional<GeoPose>> db_poses) {
  if (db_descs.empty()) throw config_error("match_all: empty database");
  if (query_poses.size() != query_descs.size() ||
      db_poses.size() != db_descs.size())
    throw config_error("match_all: pose/descriptor count mismatch");

  RetrievalResult r;
  r.query_poses = std::move(query_poses);
  r.db_poses = std::move(db_poses);
  r.queries.resize(query_descs.size());
  for (std::size_t q = 0; q < query_descs.size(); ++q) {
    std::vector<std::pair<double, int>> scored(db_descs.size());
    for (std::size_t j = 0; j < db_descs.size(); ++j) {
      if (db_descs[j].size() != query_descs[q].size())
        throw config_error("match_all: descriptor dimension mismatch");
      double s = 0.0;
      for (std::size_t k = 0; k < db_descs[j].size(); ++k) {
        const double d = query_descs[q][k] - db_descs[j][k];
        s += d * d;
      }
      scored[j] = {std::sqrt(s), int(j)};
    }
    std::sort(scored.begin(), scored.end());
    auto& qr = r.queries[q];
    qr.ranked_db.resize(scored.size());
    qr.distances.resize(scored.size());
    for (std::size_t j = 0; j < scored.size(); ++j) {
      qr.distances[j] = scored[j].first;
      qr.ranked_db[j] = scored[j].second;
    }
  }
  return r;
}

namespace {

// True when the db volume at rank `rank` is geographically correct.
bool correct_at(const RetrievalResult& r, std::size_t q, std::size_t rank,
                double phi_m) {
  const auto& qp = r.query_poses[q];
  const int id = r.queries[q].ranked_db[rank];
  const auto& dp = r.db_poses[std::size_t(id)];
  if (!qp || !dp) return false;
  return io::geo_distance(*qp, *dp) <= phi_m;
}

} // namespace

double recall_at_n(const RetrievalResult& r, int n, double phi_m) {
  int total = 0, hit = 0;
  for (std::size_t q = 0; q < r.queries.size(); ++q) {
    if (!r.query_poses[q]) continue;
    ++total;
    const std::size_t top = std::min<std::size_t>(std::size_t(n),
                                                  r.queries[q].ranked_db.size());
    for (std::size_t j = 0; j < top; ++j)
      if (correct_at(r, q, j, phi_m)) {
        ++hit;
        break;
      }
  }
  return total > 0 ? double(hit) / total : 0.0;
}

std::vector<PrPoint> pr_curve(const RetrievalResult& r, double phi_m) {
  struct Entry {
    double d1;
    bool correct;
  };
  std::vector<Entry> entries;
  for (std::size_t q = 0; q < r.queries.size(); ++q) {
    if (!r.query_poses[q] || r.queries[q].ranked_db.empty()) continue;
    entries.push_back({r.queries[q].distances[0], correct_at(r, q, 0, phi_m)});
  }
  std::vector<PrPoint> points;
  if (entries.empty()) return points;
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.d1 < b.d1; });
  const double total = double(entries.size());
  double accepted = 0, correct = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    accepted += 1;
    correct += entries[i].correct ? 1 : 0;
    // Collapse runs of equal distance into the point at the last of the run.
    if (i + 1 < entries.size() && entries[i + 1].d1 == entries[i].d1) continue;
    PrPoint p;
    p.tau = entries[i].d1;
    p.precision = correct / accepted;
    p.recall = correct / total;
    points.push_back(p);
  }
  return points;
}

double f1_max(const std::vector<PrPoint>& points) {
  double best = 0.0;
  for (const auto& p : points) {
    const double denom = p.precision + p.recall;
    if (denom <= 0.0) continue;
    best = std::max(best, 2.0 * p.precision * p.recall / denom);
  }
  return best;
}

MetricReport report_at(const RetrievalResult& r, double phi_m,
                       const std::vector<int>& ns) {
  MetricReport rep;
  rep.phi_m = phi_m;
  for (std::size_t q = 0; q < r.queries.size(); ++q)
    (r.query_poses[q] ? rep.queries : rep.skipped) += 1;
  for (int n : ns) rep.recall_at[n] = recall_at_n(r, n, phi_m);
  rep.f1max = f1_max(pr_curve(r, phi_m));
  return rep;
}

std::vector<MetricReport> sweep_thresholds(const RetrievalResult& r,
                                           const std::vector<double>& phis,
                                           const std::vector<int>& ns) {
  for (std::size_t i = 0; i + 1 < phis.size(); ++i)
    if (!(phis[i] > 0) || phis[i] >= phis[i + 1])
      throw config_error("sweep_thresholds: phi list must be positive ascending");
  if (!phis.empty() && !(phis.back() > 0))
    throw config_error("sweep_thresholds: phi list must be positive");
  std::vector<MetricReport> out;
  for (double phi : phis) out.push_back(report_at(r, phi, ns));
  return out;
}

std::string report_csv(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "phi_m";
  if (!reports.empty())
    for (const auto& [n, _] : reports.front().recall_at) os << ",recall@" << n;
  os << ",f1_max,queries,skipped\n";
  char buf[64];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.9g", r.phi_m);
    os << buf;
    for (const auto& [n, v] : r.recall_at) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f,%d,%d\n", r.f1max, r.queries, r.skipped);
    os << buf;
  }
  return os.str();
}

std::string report_table(const std::vector<MetricReport>& reports) {
  std::ostringstream os;
  os << "  phi(m)";
  if (!reports.empty())
    for (const auto& [n, _] : reports.front().recall_at) {
      char h[24];
      std::snprintf(h, sizeof h, "  R@%-4d", n);
      os << h;
    }
  os << "  F1-max  queries  skipped\n";
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%8.6g", r.phi_m);
    os << buf;
    for (const auto& [n, v] : r.recall_at) {
      std::snprintf(buf, sizeof buf, "  %6.4f", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "  %6.4f  %7d  %7d\n", r.f1max, r.queries,
                  r.skipped);
    os << buf;
  }
  return os.str();
}

std::string pr_points_csv(const std::vector<PrPoint>& points) {
  std::ostringstream os;
  os << "tau,precision,recall\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.6f,%.6f\n", p.tau, p.precision,
                  p.recall);
    os << buf;
  }
  return os.str();
}

} // namespace sevpr::eval
