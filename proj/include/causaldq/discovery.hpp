#pragma once

#include <iosfwd>
#include <map>
#include <utility>

#include "causaldq/streams.hpp"
#include "causaldq/types.hpp"

namespace causaldq::discovery {

struct CiResult {
  double p_value = 1.0;
  bool independent = true;
};

/// Fisher-z test of X_i _||_ X_j | X_cond on the rows of `data` (n x p).
CiResult fisher_z_test(const Matrix& data, int i, int j, const IndexSet& cond, double alpha);

/// Same test from a precomputed correlation matrix of n samples.
CiResult fisher_z_from_correlation(const Matrix& corr, int n, int i, int j, const IndexSet& cond,
                                   double alpha);

Matrix correlation_matrix(const Matrix& data);

/// Separating sets keyed by (min(i, j), max(i, j)).
using SepsetMap = std::map<std::pair<int, int>, IndexSet>;

struct Skeleton {
  BoolMatrix adjacency;  // symmetric
  SepsetMap sepsets;
};

/// PC-stable skeleton search up to conditioning sets of size max_cond.
Skeleton discover_skeleton(const Matrix& data, double alpha, int max_cond = 3);

/// Partially directed graph. directed(i, j) means i -> j; undirected is symmetric.
struct Cpdag {
  int p = 0;
  BoolMatrix directed;
  BoolMatrix undirected;

  static Cpdag empty(int p);
  static Cpdag from_dag(const streams::CausalGraph& g);
  bool adjacent(int i, int j) const { return directed(i, j) || directed(j, i) || undirected(i, j); }
  int edge_count() const;
  /// Directed part acyclic, no pair marked twice.
  bool valid() const;
};

/// Orients v-structures, then applies Meek rules R1-R3 until nothing changes.
Cpdag orient_edges(const BoolMatrix& skeleton, const SepsetMap& sepsets);

/// Full PC: skeleton then orientation.
Cpdag pc_algorithm(const Matrix& data, double alpha, int max_cond = 3);

struct CpeMatrix {
  /// eta(i, j): strength of the causal path effect of i on j, in [0, 1).
  /// Diagonal is 1.
  Matrix eta;

  int p() const { return static_cast<int>(eta.rows()); }
};

CpeMatrix identity_cpe(int p);

/// Orients remaining undirected edges from lower to higher index unless that
/// would close a cycle.
BoolMatrix resolve_dag(const Cpdag& cpdag);

/// Path-effect matrix from standardized least-squares coefficients along the
/// resolved DAG. |eta| is clamped to 1 - 1e-6 off the diagonal.
CpeMatrix estimate_cpe(const Matrix& data, const Cpdag& cpdag);

/// Places a CPE estimated on `vars` into a p x p identity.
CpeMatrix embed_cpe(const CpeMatrix& sub, const IndexSet& vars, int p);

struct GraphMetrics {
  int shd = 0;
  double tpr = 0.0;
  double fdr = 0.0;
  bool fdr_defined = true;
  int true_positive = 0;
  int false_positive = 0;
  int false_negative = 0;
};

GraphMetrics graph_metrics(const Cpdag& estimated, const streams::CausalGraph& truth);

/// One line per edge: "i j -> w" or "i j -- w" with 1-based indices. The
/// weight is eta(i, j) when a CPE is given, else 1.
void write_edge_list(std::ostream& out, const Cpdag& cpdag, const CpeMatrix* cpe = nullptr);
Cpdag read_edge_list(std::istream& in, int p);

}  // namespace causaldq::discovery
