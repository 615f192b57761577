#include "causaldq/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "causaldq/rng.hpp"

namespace causaldq::streams {

int CausalGraph::edge_count() const { return static_cast<int>(adjacency.count()); }

IndexSet CausalGraph::parents(int j) const {
  IndexSet out;
  for (int i = 0; i < p; ++i)
    if (adjacency(i, j)) out.push_back(i);
  return out;
}

IndexSet CausalGraph::children(int i) const {
  IndexSet out;
  for (int j = 0; j < p; ++j)
    if (adjacency(i, j)) out.push_back(j);
  return out;
}

std::vector<int> CausalGraph::order() const {
  std::vector<int> nodes(p);
  for (int i = 0; i < p; ++i) nodes[topo_rank[i]] = i;
  return nodes;
}

bool CausalGraph::reachable(int from, int to) const {
  std::vector<char> seen(p, 0);
  std::vector<int> stack = children(from);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[v]) continue;
    seen[v] = 1;
    for (int c : children(v))
      if (!seen[c]) stack.push_back(c);
  }
  return false;
}

CausalGraph make_graph(const BoolMatrix& adjacency) {
  if (adjacency.rows() != adjacency.cols())
    throw std::invalid_argument("make_graph: adjacency must be square");
  const int p = static_cast<int>(adjacency.rows());
  // Kahn's algorithm, smallest index first among ready nodes.
  std::vector<int> indegree(p, 0);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (adjacency(i, j)) ++indegree[j];
  CausalGraph g;
  g.p = p;
  g.adjacency = adjacency;
  g.topo_rank.assign(p, -1);
  int pos = 0;
  std::vector<char> done(p, 0);
  while (pos < p) {
    int next = -1;
    for (int i = 0; i < p; ++i)
      if (!done[i] && indegree[i] == 0) {
        next = i;
        break;
      }
    if (next < 0) throw std::invalid_argument("make_graph: adjacency contains a directed cycle");
    done[next] = 1;
    g.topo_rank[next] = pos++;
    for (int j = 0; j < p; ++j)
      if (adjacency(next, j)) --indegree[j];
  }
  return g;
}

ShiftSpec make_shift(int k, ShiftPattern pattern, double delta, int onset, int horizon,
                     double noise_sigma, int duration) {
  ShiftSpec s;
  s.shifted.resize(std::max(k, 0));
  std::iota(s.shifted.begin(), s.shifted.end(), 0);
  s.pattern = pattern;
  s.delta = delta;
  s.onset = onset;
  s.duration = duration < 0 ? horizon - onset : duration;
  s.noise_sigma = noise_sigma;
  return s;
}

Vector shift_vector(const ShiftSpec& spec, int p) {
  Vector v = Vector::Zero(p);
  for (std::size_t pos = 0; pos < spec.shifted.size(); ++pos) {
    int idx = spec.shifted[pos];
    if (idx < 0 || idx >= p) throw std::invalid_argument("shift_vector: shifted index out of range");
    double sign = (spec.pattern == ShiftPattern::Alternating && pos % 2 == 1) ? -1.0 : 1.0;
    v(idx) = sign * spec.delta;
  }
  return v;
}

CausalGraph sample_er_dag(int p, double edge_prob, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("sample_er_dag: p must be >= 1");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
    throw std::invalid_argument("sample_er_dag: edge probability must lie in [0, 1]");
  Rng rng = make_rng(seed);
  std::vector<int> nodes(p);
  std::iota(nodes.begin(), nodes.end(), 0);
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::vector<int> rank(p);
  for (int pos = 0; pos < p; ++pos) rank[nodes[pos]] = pos;

  std::bernoulli_distribution coin(edge_prob);
  BoolMatrix adj = BoolMatrix::Constant(p, p, false);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (rank[i] < rank[j]) adj(i, j) = coin(rng);

  CausalGraph g;
  g.p = p;
  g.adjacency = adj;
  g.topo_rank = rank;
  return g;
}

WeightedDag assign_sem_weights(const CausalGraph& graph, double low, double high, std::uint64_t seed) {
  if (!(low >= 0.0 && high >= low)) throw std::invalid_argument("assign_sem_weights: need 0 <= low <= high");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> mag(low, high);
  std::bernoulli_distribution coin(0.5);
  WeightedDag out{graph, Matrix::Zero(graph.p, graph.p)};
  for (int i = 0; i < graph.p; ++i)
    for (int j = 0; j < graph.p; ++j)
      if (graph.adjacency(i, j)) {
        double w = mag(rng);
        out.weights(i, j) = coin(rng) ? w : -w;
      }
  return out;
}

StreamBatch generate_streams(const WeightedDag& dag, const ShiftSpec& spec, int horizon,
                             std::uint64_t seed) {
  const int p = dag.graph.p;
  if (horizon < 1) throw std::invalid_argument("generate_streams: horizon must be >= 1");
  if (spec.onset < 1) throw std::invalid_argument("generate_streams: onset must be >= 1");
  if (spec.duration < 0 || spec.onset + spec.duration > horizon)
    throw std::invalid_argument("generate_streams: onset + duration exceeds the horizon");
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("generate_streams: noise sigma must be >= 0");
  for (int idx : spec.shifted)
    if (idx < 0 || idx >= p) throw std::invalid_argument("generate_streams: shifted index out of range");

  const Vector shift = shift_vector(spec, p);
  const std::vector<int> order = dag.graph.order();
  std::vector<IndexSet> parents(p);
  for (int j = 0; j < p; ++j) parents[j] = dag.graph.parents(j);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  StreamBatch batch;
  batch.values.resize(horizon, p);
  Vector x(p);
  for (int t = 1; t <= horizon; ++t) {
    const bool on = spec.active(t);
    for (int j : order) {
      double v = normal(rng);
      if (on) v += shift(j);
      for (int i : parents[j]) v += dag.weights(i, j) * x(i);
      x(j) = v;
    }
    for (int j = 0; j < p; ++j) {
      double obs = x(j);
      if (spec.noise_sigma > 0.0) obs += spec.noise_sigma * normal(rng);
      batch.values(t - 1, j) = obs;
    }
  }
  batch.truth = GroundTruth{spec, dag};
  return batch;
}

Matrix sem_covariance(const WeightedDag& dag) {
  const int p = dag.graph.p;
  Matrix a = (Matrix::Identity(p, p) - dag.weights.transpose()).inverse();
  return a * a.transpose();
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

}  // namespace

StreamBatch load_csv_streams(const std::string& path, int first_col, int last_col) {
  if (first_col < 1 || last_col < first_col)
    throw std::invalid_argument("load_csv_streams: need 1 <= first_col <= last_col");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv_streams: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  bool first_nonempty = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (static_cast<int>(cells.size()) < last_col)
      throw std::invalid_argument("load_csv_streams: row " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " columns, need " +
                                  std::to_string(last_col));
    std::vector<double> row;
    row.reserve(last_col - first_col + 1);
    bool numeric = true;
    int bad_col = 0;
    for (int c = first_col; c <= last_col; ++c) {
      double v = 0.0;
      if (!parse_double(cells[c - 1], v)) {
        numeric = false;
        bad_col = c;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first_nonempty) {  // header
        first_nonempty = false;
        continue;
      }
      throw std::invalid_argument("load_csv_streams: non-numeric value at row " +
                                  std::to_string(line_no) + ", column " + std::to_string(bad_col));
    }
    first_nonempty = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("load_csv_streams: no data rows in " + path);

  StreamBatch batch;
  const int p = last_col - first_col + 1;
  batch.values.resize(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < p; ++c) batch.values(static_cast<Eigen::Index>(r), c) = rows[r][c];
  return batch;
}

void write_csv_streams(const StreamBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv_streams: cannot open " + path);
  for (int j = 0; j < batch.p(); ++j) out << (j ? "," : "") << "x" << (j + 1);
  out << "\n";
  char buf[64];
  for (int t = 0; t < batch.horizon(); ++t) {
    for (int j = 0; j < batch.p(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, batch.values(t, j));
      if (j) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_csv_streams: write failed for " + path);
}

}  // namespace causaldq::streams
