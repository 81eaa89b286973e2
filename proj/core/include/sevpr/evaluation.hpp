#ifndef SEVPR_EVALUATION_HPP
#define SEVPR_EVALUATION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sevpr/event.hpp"

namespace sevpr::eval {

struct QueryRanking {
  std::vector<int> ranked_db;     // ascending descriptor distance
  std::vector<double> distances;  // L2, same order
};

struct RetrievalResult {
  std::vector<QueryRanking> queries;
  std::vector<std::optional<GeoPose>> query_poses;
  std::vector<std::optional<GeoPose>> db_poses;
};

// Exhaustive L2 ranking of every query against the whole database. Ties in
// distance break toward the lower database id.
RetrievalResult match_all(const std::vector<std::vector<double>>& query_descs,
                          const std::vector<std::vector<double>>& db_descs,
                          std::vector<std::optional<GeoPose>> query_poses,
                          std::vector<std::optional<GeoPose>> db_poses);

// Fraction of queries whose top-N contains a database volume within phi
// meters. Queries without a pose are excluded from the denominator.
double recall_at_n(const RetrievalResult& r, int n, double phi_m);

struct PrPoint {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Acceptance-threshold sweep over rank-1 distances: a query is accepted
// when its best distance is <= tau, correct when the retrieved volume lies
// within phi of the query pose. Points are ordered by ascending tau.
std::vector<PrPoint> pr_curve(const RetrievalResult& r, double phi_m);

double f1_max(const std::vector<PrPoint>& points);

struct MetricReport {
  double phi_m = 0.0;
  std::map<int, double> recall_at; // N -> recall
  double f1max = 0.0;
  int queries = 0; // with usable pose
  int skipped = 0; // without pose
};

MetricReport report_at(const RetrievalResult& r, double phi_m,
                       const std::vector<int>& ns);

// One report per threshold, all from the same fixed ranking.
std::vector<MetricReport> sweep_thresholds(const RetrievalResult& r,
                                           const std::vector<double>& phis,
                                           const std::vector<int>& ns);

std::string report_csv(const std::vector<MetricReport>& reports);
std::string report_table(const std::vector<MetricReport>& reports);
std::string pr_points_csv(const std::vector<PrPoint>& points);

} // namespace sevpr::eval

#endif
