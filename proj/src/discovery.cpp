#include "causaldq/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace causaldq::discovery {

namespace {

std::string format_set(const IndexSet& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) out += (k ? "," : "") + std::to_string(s[k] + 1);
  return out + "}";
}

// True iff a directed path from `from` to `to` exists.
bool reaches(const BoolMatrix& directed, int from, int to) {
  const int p = static_cast<int>(directed.rows());
  std::vector<char> seen(p, 0);
  std::vector<int> stack{from};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[v]) continue;
    seen[v] = 1;
    for (int c = 0; c < p; ++c)
      if (directed(v, c) && !seen[c]) stack.push_back(c);
  }
  return false;
}

bool in_set(const IndexSet& s, int v) { return std::find(s.begin(), s.end(), v) != s.end(); }

// Calls fn on each size-l subset of `pool` in lexicographic order until fn returns true.
template <class Fn>
bool for_each_subset(const IndexSet& pool, int l, Fn&& fn) {
  const int n = static_cast<int>(pool.size());
  if (l > n) return false;
  std::vector<int> idx(l);
  for (int k = 0; k < l; ++k) idx[k] = k;
  IndexSet subset(l);
  while (true) {
    for (int k = 0; k < l; ++k) subset[k] = pool[idx[k]];
    if (fn(subset)) return true;
    int k = l - 1;
    while (k >= 0 && idx[k] == n - l + k) --k;
    if (k < 0) return false;
    ++idx[k];
    for (int r = k + 1; r < l; ++r) idx[r] = idx[r - 1] + 1;
  }
}

}  // namespace

Matrix correlation_matrix(const Matrix& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw std::invalid_argument("correlation_matrix: need at least two rows");
  Matrix centered = data.rowwise() - data.colwise().mean();
  Vector sd = (centered.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < centered.cols(); ++j) {
    if (sd(j) > 0.0)
      centered.col(j) /= sd(j);
    else
      centered.col(j).setZero();
  }
  Matrix corr = centered.transpose() * centered / static_cast<double>(n - 1);
  for (Eigen::Index j = 0; j < corr.rows(); ++j) corr(j, j) = 1.0;
  return corr;
}

CiResult fisher_z_from_correlation(const Matrix& corr, int n, int i, int j, const IndexSet& cond,
                                   double alpha) {
  const int p = static_cast<int>(corr.rows());
  if (i < 0 || j < 0 || i >= p || j >= p || i == j)
    throw std::invalid_argument("fisher_z_test: invalid variable pair");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("fisher_z_test: alpha must lie in (0, 1)");
  for (int c : cond)
    if (c < 0 || c >= p || c == i || c == j)
      throw std::invalid_argument("fisher_z_test: invalid conditioning set " + format_set(cond));
  const int k = static_cast<int>(cond.size());
  if (n <= k + 3)
    throw std::invalid_argument("fisher_z_test: need more than |cond| + 3 samples");

  double sii = 1.0, sjj = 1.0, sij = corr(i, j);
  if (k > 0) {
    Matrix rcc(k, k);
    Matrix rc2(k, 2);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) rcc(a, b) = corr(cond[a], cond[b]);
      rc2(a, 0) = corr(cond[a], i);
      rc2(a, 1) = corr(cond[a], j);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(rcc, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < 1e-10)
      throw std::runtime_error("fisher_z_test: singular covariance for conditioning set " +
                               format_set(cond));
    Matrix sol = rcc.ldlt().solve(rc2);
    Matrix schur = rc2.transpose() * sol;
    sii = 1.0 - schur(0, 0);
    sjj = 1.0 - schur(1, 1);
    sij -= schur(0, 1);
  }
  CiResult res;
  if (sii <= 1e-12 || sjj <= 1e-12) {
    // One variable is a deterministic function of the conditioning set.
    res.p_value = 1.0;
    res.independent = true;
    return res;
  }
  double r = std::clamp(sij / std::sqrt(sii * sjj), -1.0, 1.0);
  if (std::fabs(r) >= 1.0 - 1e-15) {
    res.p_value = 0.0;
  } else {
    double z = 0.5 * std::log((1.0 + r) / (1.0 - r)) * std::sqrt(static_cast<double>(n - k - 3));
    res.p_value = std::erfc(std::fabs(z) / std::sqrt(2.0));
  }
  res.independent = res.p_value >= alpha;
  return res;
}

CiResult fisher_z_test(const Matrix& data, int i, int j, const IndexSet& cond, double alpha) {
  return fisher_z_from_correlation(correlation_matrix(data), static_cast<int>(data.rows()), i, j, cond,
                                   alpha);
}

Skeleton discover_skeleton(const Matrix& data, double alpha, int max_cond) {
  if (max_cond < 0) throw std::invalid_argument("discover_skeleton: max_cond must be >= 0");
  const int p = static_cast<int>(data.cols());
  const int n = static_cast<int>(data.rows());
  const Matrix corr = correlation_matrix(data);

  Skeleton sk;
  sk.adjacency = BoolMatrix::Constant(p, p, true);
  for (int i = 0; i < p; ++i) sk.adjacency(i, i) = false;

  for (int l = 0; l <= max_cond; ++l) {
    if (n <= l + 3) break;
    const BoolMatrix snapshot = sk.adjacency;
    bool tested = false;
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        if (!snapshot(i, j)) continue;
        bool removed = false;
        for (int side = 0; side < 2 && !removed; ++side) {
          int a = side == 0 ? i : j;
          int b = side == 0 ? j : i;
          IndexSet pool;
          for (int c = 0; c < p; ++c)
            if (c != b && snapshot(a, c)) pool.push_back(c);
          if (static_cast<int>(pool.size()) < l) continue;
          tested = true;
          removed = for_each_subset(pool, l, [&](const IndexSet& s) {
            if (!fisher_z_from_correlation(corr, n, i, j, s, alpha).independent) return false;
            sk.sepsets[{i, j}] = s;
            return true;
          });
        }
        if (removed) sk.adjacency(i, j) = sk.adjacency(j, i) = false;
      }
    }
    if (!tested) break;
  }
  return sk;
}

Cpdag Cpdag::empty(int p) {
  Cpdag g;
  g.p = p;
  g.directed = BoolMatrix::Constant(p, p, false);
  g.undirected = BoolMatrix::Constant(p, p, false);
  return g;
}

Cpdag Cpdag::from_dag(const streams::CausalGraph& dag) {
  Cpdag g = empty(dag.p);
  g.directed = dag.adjacency;
  return g;
}

int Cpdag::edge_count() const {
  return static_cast<int>(directed.count() + undirected.count() / 2);
}

bool Cpdag::valid() const {
  for (int i = 0; i < p; ++i) {
    if (directed(i, i) || undirected(i, i)) return false;
    for (int j = 0; j < p; ++j) {
      if (undirected(i, j) != undirected(j, i)) return false;
      if (directed(i, j) && (directed(j, i) || undirected(i, j))) return false;
    }
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (directed(i, j) && reaches(directed, j, i)) return false;
  return true;
}

namespace {

// Orients a - b as a -> b when that keeps the directed part acyclic.
bool orient(Cpdag& g, int a, int b) {
  if (!g.undirected(a, b)) return false;
  if (reaches(g.directed, b, a)) return false;
  g.undirected(a, b) = g.undirected(b, a) = false;
  g.directed(a, b) = true;
  return true;
}

bool meek_pass(Cpdag& g) {
  const int p = g.p;
  bool changed = false;
  for (int b = 0; b < p; ++b) {
    for (int c = 0; c < p; ++c) {
      if (!g.undirected(b, c)) continue;
      // R1: a -> b - c, a and c not adjacent.
      bool done = false;
      for (int a = 0; a < p && !done; ++a)
        if (a != c && g.directed(a, b) && !g.adjacent(a, c)) done = orient(g, b, c);
      if (done) {
        changed = true;
        continue;
      }
      // R2: b -> k -> c with b - c.
      for (int k = 0; k < p && !done; ++k)
        if (g.directed(b, k) && g.directed(k, c)) done = orient(g, b, c);
      if (done) {
        changed = true;
        continue;
      }
      // R3: b - k1, b - k2, k1 -> c, k2 -> c, k1 and k2 not adjacent.
      for (int k1 = 0; k1 < p && !done; ++k1) {
        if (!(g.undirected(b, k1) && g.directed(k1, c))) continue;
        for (int k2 = k1 + 1; k2 < p && !done; ++k2)
          if (g.undirected(b, k2) && g.directed(k2, c) && !g.adjacent(k1, k2)) done = orient(g, b, c);
      }
      if (done) changed = true;
    }
  }
  return changed;
}

}  // namespace

Cpdag orient_edges(const BoolMatrix& skeleton, const SepsetMap& sepsets) {
  const int p = static_cast<int>(skeleton.rows());
  Cpdag g = Cpdag::empty(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j && (skeleton(i, j) || skeleton(j, i))) g.undirected(i, j) = true;

  for (int k = 0; k < p; ++k) {
    for (int i = 0; i < p; ++i) {
      if (i == k || !skeleton(i, k)) continue;
      for (int j = i + 1; j < p; ++j) {
        if (j == k || !skeleton(j, k) || skeleton(i, j)) continue;
        auto it = sepsets.find({i, j});
        if (it != sepsets.end() && in_set(it->second, k)) continue;
        if (g.undirected(i, k) || g.directed(i, k)) orient(g, i, k);
        if (g.undirected(j, k) || g.directed(j, k)) orient(g, j, k);
      }
    }
  }
  while (meek_pass(g)) {
  }
  return g;
}

Cpdag pc_algorithm(const Matrix& data, double alpha, int max_cond) {
  Skeleton sk = discover_skeleton(data, alpha, max_cond);
  return orient_edges(sk.adjacency, sk.sepsets);
}

CpeMatrix identity_cpe(int p) { return CpeMatrix{Matrix::Identity(p, p)}; }

BoolMatrix resolve_dag(const Cpdag& cpdag) {
  BoolMatrix d = cpdag.directed;
  for (int i = 0; i < cpdag.p; ++i)
    for (int j = i + 1; j < cpdag.p; ++j) {
      if (!cpdag.undirected(i, j)) continue;
      if (reaches(d, j, i))
        d(j, i) = true;
      else
        d(i, j) = true;
    }
  return d;
}

CpeMatrix estimate_cpe(const Matrix& data, const Cpdag& cpdag) {
  const int p = cpdag.p;
  if (data.cols() != p) throw std::invalid_argument("estimate_cpe: data width does not match graph");
  if (!cpdag.valid()) throw std::invalid_argument("estimate_cpe: graph is not a valid CPDAG");
  const BoolMatrix dag = resolve_dag(cpdag);
  const Matrix corr = correlation_matrix(data);

  Matrix b = Matrix::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    IndexSet pa;
    for (int i = 0; i < p; ++i)
      if (dag(i, j)) pa.push_back(i);
    if (pa.empty()) continue;
    const int k = static_cast<int>(pa.size());
    Matrix rpp(k, k);
    Vector rpj(k);
    for (int a = 0; a < k; ++a) {
      for (int c = 0; c < k; ++c) rpp(a, c) = corr(pa[a], pa[c]);
      rpj(a) = corr(pa[a], j);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(rpp);
    if (qr.rank() < k) rpp += 1e-6 * Matrix::Identity(k, k);
    Vector beta = rpp.ldlt().solve(rpj);
    for (int a = 0; a < k; ++a) b(pa[a], j) = beta(a);
  }

  // Sum over all directed paths of coefficient products.
  Matrix total = (Matrix::Identity(p, p) - b).inverse() - Matrix::Identity(p, p);
  CpeMatrix cpe{Matrix::Identity(p, p)};
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (i != j) cpe.eta(i, j) = std::min(std::fabs(total(i, j)), 1.0 - 1e-6);
  return cpe;
}

CpeMatrix embed_cpe(const CpeMatrix& sub, const IndexSet& vars, int p) {
  if (sub.p() != static_cast<int>(vars.size()))
    throw std::invalid_argument("embed_cpe: size mismatch");
  CpeMatrix out = identity_cpe(p);
  for (std::size_t a = 0; a < vars.size(); ++a)
    for (std::size_t c = 0; c < vars.size(); ++c)
      out.eta(vars[a], vars[c]) = sub.eta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
  return out;
}

GraphMetrics graph_metrics(const Cpdag& est, const streams::CausalGraph& truth) {
  if (est.p != truth.p) throw std::invalid_argument("graph_metrics: graphs differ in size");
  GraphMetrics m;
  for (int i = 0; i < est.p; ++i) {
    for (int j = i + 1; j < est.p; ++j) {
      int t = truth.adjacency(i, j) ? 1 : truth.adjacency(j, i) ? 2 : 0;
      int e = est.directed(i, j) ? 1 : est.directed(j, i) ? 2 : est.undirected(i, j) ? 3 : 0;
      if (t == 0 && e == 0) continue;
      if (t == 0) {
        ++m.shd;
        ++m.false_positive;
      } else if (e == 0) {
        ++m.shd;
        ++m.false_negative;
      } else if (e == t) {
        ++m.true_positive;
      } else if (e == 3) {
        // Right adjacency, orientation left open.
        ++m.shd;
        ++m.false_negative;
      } else {
        ++m.shd;
        ++m.false_positive;
        ++m.false_negative;
      }
    }
  }
  const int true_edges = m.true_positive + m.false_negative;
  m.tpr = true_edges > 0 ? static_cast<double>(m.true_positive) / true_edges : 1.0;
  const int predicted = m.true_positive + m.false_positive;
  m.fdr_defined = predicted > 0;
  m.fdr = predicted > 0 ? static_cast<double>(m.false_positive) / predicted : 0.0;
  return m;
}

void write_edge_list(std::ostream& out, const Cpdag& g, const CpeMatrix* cpe) {
  auto weight = [&](int i, int j) { return cpe ? cpe->eta(i, j) : 1.0; };
  for (int i = 0; i < g.p; ++i)
    for (int j = 0; j < g.p; ++j) {
      if (g.directed(i, j)) out << i + 1 << ' ' << j + 1 << " -> " << weight(i, j) << '\n';
      if (i < j && g.undirected(i, j)) out << i + 1 << ' ' << j + 1 << " -- " << weight(i, j) << '\n';
    }
}

Cpdag read_edge_list(std::istream& in, int p) {
  Cpdag g = Cpdag::empty(p);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    int i = 0, j = 0;
    std::string kind;
    if (!(ss >> i >> j >> kind) || i < 1 || j < 1 || i > p || j > p || i == j ||
        (kind != "->" && kind != "--"))
      throw std::invalid_argument("read_edge_list: malformed line " + std::to_string(line_no));
    if (kind == "->")
      g.directed(i - 1, j - 1) = true;
    else
      g.undirected(i - 1, j - 1) = g.undirected(j - 1, i - 1) = true;
  }
  if (!g.valid()) throw std::invalid_argument("read_edge_list: edges do not form a valid CPDAG");
  return g;
}

}  // namespace causaldq::discovery
