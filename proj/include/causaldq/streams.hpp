#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "causaldq/types.hpp"

namespace causaldq::streams {

/// Directed acyclic graph over p streams; adjacency(i, j) means i -> j.
struct CausalGraph {
  int p = 0;
  BoolMatrix adjacency;
  /// topo_rank[i] is the position of node i in a topological order.
  std::vector<int> topo_rank;

  int edge_count() const;
  IndexSet parents(int j) const;
  IndexSet children(int i) const;
  /// Nodes listed in topological order.
  std::vector<int> order() const;
  /// True iff a directed path from `from` to `to` exists (length >= 1).
  bool reachable(int from, int to) const;
};

/// Builds a graph from an adjacency matrix; throws if it contains a cycle.
CausalGraph make_graph(const BoolMatrix& adjacency);

struct WeightedDag {
  CausalGraph graph;
  /// weights(i, j) is the SEM coefficient on edge i -> j, zero elsewhere.
  Matrix weights;
};

enum class ShiftPattern { AllPositive, Alternating };

struct ShiftSpec {
  IndexSet shifted;
  ShiftPattern pattern = ShiftPattern::AllPositive;
  double delta = 0.0;
  /// 1-based time of the change; the shift is active for onset <= t <= onset + duration.
  int onset = 1;
  int duration = 0;
  double noise_sigma = 0.0;

  bool active(int t) const { return t >= onset && t <= onset + duration; }
};

/// Builds a spec with shifts on the first k streams. duration < 0 means
/// "until the end of the horizon".
ShiftSpec make_shift(int k, ShiftPattern pattern, double delta, int onset, int horizon,
                     double noise_sigma = 0.0, int duration = -1);

/// Exogenous shift added to each stream while the shift is active.
Vector shift_vector(const ShiftSpec& spec, int p);

struct GroundTruth {
  ShiftSpec shift;
  WeightedDag dag;
};

struct StreamBatch {
  Matrix values;  // horizon x p, row t-1 holds time t
  std::optional<GroundTruth> truth;

  int horizon() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
};

CausalGraph sample_er_dag(int p, double edge_prob, std::uint64_t seed);

WeightedDag assign_sem_weights(const CausalGraph& graph, double low, double high, std::uint64_t seed);

/// Simulates the linear-Gaussian SEM with unit exogenous noise. The shift
/// enters the exogenous term, so it propagates to descendants.
StreamBatch generate_streams(const WeightedDag& dag, const ShiftSpec& spec, int horizon,
                             std::uint64_t seed);

/// Marginal covariance implied by the in-control SEM.
Matrix sem_covariance(const WeightedDag& dag);

/// Loads columns first_col..last_col (1-based, inclusive) of a CSV file.
StreamBatch load_csv_streams(const std::string& path, int first_col, int last_col);

void write_csv_streams(const StreamBatch& batch, const std::string& path);

}  // namespace causaldq::streams
