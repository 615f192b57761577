#include "causaldq/qnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace causaldq::qnet {

std::vector<int> NetParams::layout() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(input_width());
  for (const auto& l : layers) out.push_back(static_cast<int>(l.weight.rows()));
  return out;
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

NetParams init_params(const std::vector<int>& layout, std::uint64_t seed) {
  if (layout.size() < 2) throw std::invalid_argument("init_params: layout needs input and output widths");
  for (int w : layout)
    if (w < 1) throw std::invalid_argument("init_params: widths must be positive");
  Rng rng = make_rng(seed);
  NetParams net;
  for (std::size_t l = 1; l < layout.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layout[l - 1]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer{Matrix(layout[l], layout[l - 1]), Vector(layout[l])};
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = u(rng);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

NetParams zeros_like(const NetParams& params) {
  NetParams z;
  for (const auto& l : params.layers)
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  return z;
}

Matrix forward_batch(const NetParams& params, const Matrix& states) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (states.rows() != params.input_width())
    throw std::invalid_argument("forward: state length " + std::to_string(states.rows()) +
                                " does not match input width " + std::to_string(params.input_width()));
  Matrix a = states;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    if (l + 1 < params.layers.size())
      a = z.cwiseMax(0.0);
    else
      a = std::move(z);
  }
  return a;
}

Vector forward(const NetParams& params, const Vector& state) { return forward_batch(params, state); }

PolicyDistribution boltzmann(const Vector& q, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("boltzmann: tau must be positive");
  if (q.size() == 0) throw std::invalid_argument("boltzmann: empty value vector");
  PolicyDistribution pi;
  pi.tau = tau;
  pi.probs = ((q.array() - q.maxCoeff()) / tau).exp();
  pi.probs /= pi.probs.sum();
  return pi;
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double mask_at(const Vector& mask, Eigen::Index i) { return mask.size() == 0 ? 0.0 : mask(i); }

}  // namespace

double causal_entropy(const PolicyDistribution& pi, const Vector& mask) {
  if (mask.size() != 0 && mask.size() != pi.probs.size())
    throw std::invalid_argument("causal_entropy: mask length mismatch");
  double h = 0.0;
  for (Eigen::Index i = 0; i < pi.probs.size(); ++i) h -= mask_at(mask, i) * xlogx(pi.probs(i));
  return h;
}

Vector causal_entropy_grad(const PolicyDistribution& pi, const Vector& mask) {
  const Eigen::Index n = pi.probs.size();
  Vector g(n);
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    double pk = pi.probs(k);
    g(k) = pk > 0.0 ? mask_at(mask, k) * pk * (std::log(pk) + 1.0) : 0.0;
    s += g(k);
  }
  for (Eigen::Index i = 0; i < n; ++i) g(i) = -(g(i) - pi.probs(i) * s) / pi.tau;
  return g;
}

double td_target(double reward, double gamma, double q_next_best, double h_c) {
  return reward + gamma * q_next_best + h_c;
}

namespace {

void check_action(const IndexSet& a, int p, std::size_t b) {
  if (a.empty() || static_cast<int>(a.size()) > p)
    throw std::invalid_argument("loss_and_grad: action size invalid at batch index " + std::to_string(b));
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] < 0 || a[k] >= p || (k > 0 && a[k] <= a[k - 1]))
      throw std::invalid_argument("loss_and_grad: malformed action at batch index " + std::to_string(b));
}

template <class Get>
LossAndGrad loss_and_grad_impl(const NetParams& online, const NetParams& target, std::size_t batch_size,
                               Get&& get, const LossOptions& opts) {
  if (batch_size == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (online.layout() != target.layout()) throw std::invalid_argument("loss_and_grad: net shapes differ");
  const int in = online.input_width();
  const int p = online.output_width();
  const Eigen::Index nb = static_cast<Eigen::Index>(batch_size);

  Matrix s(in, nb), s_next(in, nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Transition& t = get(static_cast<std::size_t>(b));
    if (t.state.size() != in || t.next_state.size() != in)
      throw std::invalid_argument("loss_and_grad: state width mismatch at batch index " + std::to_string(b));
    check_action(t.action, p, static_cast<std::size_t>(b));
    s.col(b) = t.state;
    s_next.col(b) = t.next_state;
  }

  // Forward with cached activations.
  const std::size_t nl = online.layers.size();
  std::vector<Matrix> acts(nl + 1);
  std::vector<Matrix> pre(nl);
  acts[0] = s;
  for (std::size_t l = 0; l < nl; ++l) {
    pre[l].noalias() = online.layers[l].weight * acts[l];
    pre[l].colwise() += online.layers[l].bias;
    acts[l + 1] = l + 1 < nl ? Matrix(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Matrix& q = acts[nl];
  const Matrix q_next_online = forward_batch(online, s_next);
  const Matrix q_next_target = forward_batch(target, s_next);

  LossAndGrad out;
  Matrix dq = Matrix::Zero(p, nb);
  const double inv_b = 1.0 / static_cast<double>(nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Transition& t = get(static_cast<std::size_t>(b));
    const int m = static_cast<int>(t.action.size());
    const IndexSet best = select_top_m(q_next_online.col(b), m);
    double q_next_best = 0.0;
    for (int i : best) q_next_best += q_next_target(i, b);
    q_next_best /= m;
    const double h_next = causal_entropy(boltzmann(q_next_target.col(b), opts.tau), t.causal_mask);
    const double y = td_target(t.reward, opts.gamma, q_next_best, h_next);

    double q_sa = 0.0;
    for (int i : t.action) q_sa += q(i, b);
    q_sa /= m;
    const double err = y - q_sa;

    const PolicyDistribution pi = boltzmann(q.col(b), opts.tau);
    const double h = causal_entropy(pi, t.causal_mask);
    if (!std::isfinite(err) || !std::isfinite(h))
      throw std::runtime_error("loss_and_grad: non-finite loss at batch index " + std::to_string(b));
    out.loss += inv_b * (err * err - opts.alpha_ent * h);

    for (int i : t.action) dq(i, b) -= 2.0 * err * inv_b / m;
    if (opts.alpha_ent != 0.0) dq.col(b) -= opts.alpha_ent * inv_b * causal_entropy_grad(pi, t.causal_mask);
  }

  out.grad = zeros_like(online);
  Matrix g = std::move(dq);
  for (std::size_t l = nl; l-- > 0;) {
    out.grad.layers[l].weight.noalias() = g * acts[l].transpose();
    out.grad.layers[l].bias = g.rowwise().sum();
    if (l > 0) {
      Matrix back = online.layers[l].weight.transpose() * g;
      g = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  for (std::size_t l = 0; l < nl; ++l)
    if (!out.grad.layers[l].weight.allFinite() || !out.grad.layers[l].bias.allFinite())
      throw std::runtime_error("loss_and_grad: non-finite gradient in layer " + std::to_string(l));
  return out;
}

}  // namespace

LossAndGrad loss_and_grad(const NetParams& online, const NetParams& target,
                          std::span<const Transition* const> batch, const LossOptions& opts) {
  return loss_and_grad_impl(online, target, batch.size(),
                            [&](std::size_t b) -> const Transition& { return *batch[b]; }, opts);
}

LossAndGrad loss_and_grad(const NetParams& online, const NetParams& target, std::span<const Transition> batch,
                          const LossOptions& opts) {
  return loss_and_grad_impl(online, target, batch.size(),
                            [&](std::size_t b) -> const Transition& { return batch[b]; }, opts);
}

void sgd_step_inplace(NetParams& params, const NetParams& grad, double lr) {
  if (params.layout() != grad.layout()) throw std::invalid_argument("sgd_step: shape mismatch");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weight -= lr * grad.layers[l].weight;
    params.layers[l].bias -= lr * grad.layers[l].bias;
  }
}

NetParams sgd_step(const NetParams& params, const NetParams& grad, double lr) {
  NetParams out = params;
  sgd_step_inplace(out, grad, lr);
  return out;
}

NetParams sync_target(const NetParams& online, const NetParams& target, const SyncRule& rule) {
  if (online.layout() != target.layout()) throw std::invalid_argument("sync_target: shape mismatch");
  if (rule.mode == SyncMode::Hard) return online;
  if (!(rule.rate >= 0.0 && rule.rate <= 1.0)) throw std::invalid_argument("sync_target: rate must lie in [0, 1]");
  NetParams out = target;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    out.layers[l].weight = rule.rate * online.layers[l].weight + (1.0 - rule.rate) * target.layers[l].weight;
    out.layers[l].bias = rule.rate * online.layers[l].bias + (1.0 - rule.rate) * target.layers[l].bias;
  }
  return out;
}

IndexSet select_top_m(const Vector& q, int m) {
  const int p = static_cast<int>(q.size());
  if (m < 1 || m > p) throw std::invalid_argument("select_top_m: need 1 <= m <= p");
  IndexSet idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](int a, int b) {
    if (q(a) != q(b)) return q(a) > q(b);
    return a < b;
  });
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

IndexSet sample_without_replacement(const PolicyDistribution& pi, int m, Rng& rng) {
  const int p = static_cast<int>(pi.probs.size());
  if (m < 1 || m > p) throw std::invalid_argument("sample_without_replacement: need 1 <= m <= p");
  Vector w = pi.probs;
  IndexSet out;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < m; ++k) {
    double total = w.sum();
    int pick = -1;
    if (total > 0.0) {
      double r = u(rng) * total;
      for (int i = 0; i < p; ++i) {
        if (w(i) <= 0.0) continue;
        pick = i;
        r -= w(i);
        if (r < 0.0) break;
      }
    }
    if (pick < 0) {  // remaining mass underflowed; take the lowest unused index
      for (int i = 0; i < p && pick < 0; ++i)
        if (std::find(out.begin(), out.end(), i) == out.end()) pick = i;
    }
    out.push_back(pick);
    w(pick) = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > items_.size())
    throw std::invalid_argument("ReplayBuffer::sample: batch " + std::to_string(batch) + " exceeds size " +
                                std::to_string(items_.size()));
  // Partial Fisher-Yates over an index array.
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t k = 0; k < batch; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
    out.push_back(&items_[idx[k]]);
  }
  return out;
}

namespace {

void write_double(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

double read_double(std::istream& in, const std::string& path) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error("load_checkpoint: truncated file " + path);
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("load_checkpoint: bad number '" + tok + "' in " + path);
  return v;
}

}  // namespace

void save_checkpoint(const NetParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "causaldq-qnet 1\n" << params.layers.size() << "\n";
  for (const auto& l : params.layers) {
    out << l.weight.rows() << ' ' << l.weight.cols() << "\n";
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        if (c) out << ' ';
        write_double(out, l.weight(r, c));
      }
      out << "\n";
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
      if (r) out << ' ';
      write_double(out, l.bias(r));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic;
  int version = 0;
  std::size_t n_layers = 0;
  if (!(in >> magic >> version >> n_layers) || magic != "causaldq-qnet" || version != 1)
    throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
  NetParams net;
  for (std::size_t l = 0; l < n_layers; ++l) {
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1)
      throw std::runtime_error("load_checkpoint: bad layer header in " + path);
    Layer layer{Matrix(rows, cols), Vector(rows)};
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = read_double(in, path);
    for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = read_double(in, path);
    if (!net.layers.empty() && net.layers.back().weight.rows() != cols)
      throw std::runtime_error("load_checkpoint: inconsistent layer widths in " + path);
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw std::runtime_error("load_checkpoint: no layers in " + path);
  return net;
}

}  // namespace causaldq::qnet
