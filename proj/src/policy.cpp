#include "coil/policy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

namespace coil {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void check_finite(std::span<const double> params) {
  for (double p : params)
    if (!std::isfinite(p)) throw DivergenceError();
}

}  // namespace

// ------------------------------------------------------ TabularSoftmaxPolicy

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int n_states, int n_actions)
    : TabularSoftmaxPolicy(n_states, n_actions,
                           std::vector<double>(static_cast<std::size_t>(std::max(n_states, 0)) * std::max(n_actions, 0),
                                               0.0)) {}

TabularSoftmaxPolicy::TabularSoftmaxPolicy(int n_states, int n_actions, std::vector<double> logits)
    : n_states_(n_states), n_actions_(n_actions), logits_(std::move(logits)) {
  if (n_states <= 0 || n_actions <= 0) throw InputError("softmax policy needs positive dimensions");
  if (logits_.size() != static_cast<std::size_t>(n_states) * n_actions) throw InputError("logit table shape mismatch");
}

TabularSoftmaxPolicy TabularSoftmaxPolicy::from_table(const PolicyTable& table, double floor) {
  std::vector<double> logits(table.data().size());
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = std::log(std::max(table.data()[i], floor));
  return TabularSoftmaxPolicy(table.n_states(), table.n_actions(), std::move(logits));
}

std::size_t TabularSoftmaxPolicy::index(int s, int a) const {
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_) throw InputError("state/action out of range");
  return static_cast<std::size_t>(s) * n_actions_ + a;
}

void TabularSoftmaxPolicy::probs(int s, std::span<double> out) const {
  const std::size_t base = index(s, 0);
  double mx = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n_actions_; ++a) mx = std::max(mx, logits_[base + a]);
  double z = 0.0;
  for (int a = 0; a < n_actions_; ++a) {
    out[static_cast<std::size_t>(a)] = std::exp(logits_[base + a] - mx);
    z += out[static_cast<std::size_t>(a)];
  }
  for (int a = 0; a < n_actions_; ++a) out[static_cast<std::size_t>(a)] /= z;
}

double TabularSoftmaxPolicy::log_prob(int s, int a) const {
  const std::size_t base = index(s, 0);
  double mx = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < n_actions_; ++b) mx = std::max(mx, logits_[base + b]);
  double z = 0.0;
  for (int b = 0; b < n_actions_; ++b) z += std::exp(logits_[base + b] - mx);
  return logits_[index(s, a)] - mx - std::log(z);
}

double TabularSoftmaxPolicy::prob(int s, int a) const { return std::exp(log_prob(s, a)); }

int TabularSoftmaxPolicy::sample_action(int s, Rng& rng) const {
  std::vector<double> p(static_cast<std::size_t>(n_actions_));
  probs(s, p);
  return sample_categorical(p, rng);
}

int TabularSoftmaxPolicy::argmax(int s) const {
  const std::size_t base = index(s, 0);
  int best = 0;
  for (int a = 1; a < n_actions_; ++a)
    if (logits_[base + a] > logits_[base + best]) best = a;
  return best;
}

PolicyTable TabularSoftmaxPolicy::table() const {
  std::vector<double> p(logits_.size());
  for (int s = 0; s < n_states_; ++s)
    probs(s, std::span<double>(p).subspan(static_cast<std::size_t>(s) * n_actions_, static_cast<std::size_t>(n_actions_)));
  return PolicyTable(n_states_, n_actions_, std::move(p));
}

// ------------------------------------------------------ LinearGaussianPolicy

LinearGaussianPolicy::LinearGaussianPolicy(int state_dim, int action_dim, double initial_log_std)
    : state_dim_(state_dim), action_dim_(action_dim) {
  if (state_dim <= 0 || action_dim <= 0) throw InputError("gaussian policy needs positive dimensions");
  params_.assign(weight_count() + 2 * static_cast<std::size_t>(action_dim), 0.0);
  for (int j = 0; j < action_dim; ++j) log_std(j) = initial_log_std;
  clamp();
}

void LinearGaussianPolicy::check_dims(std::span<const double> state, std::span<const double> action) const {
  if (state.size() != static_cast<std::size_t>(state_dim_)) throw InputError("state dimension mismatch");
  if (action.size() != static_cast<std::size_t>(action_dim_)) throw InputError("action dimension mismatch");
}

std::vector<double> LinearGaussianPolicy::mean(std::span<const double> state) const {
  if (state.size() != static_cast<std::size_t>(state_dim_)) throw InputError("state dimension mismatch");
  std::vector<double> mu(static_cast<std::size_t>(action_dim_));
  for (int j = 0; j < action_dim_; ++j) {
    double v = bias(j);
    for (int k = 0; k < state_dim_; ++k) v += weight(j, k) * state[static_cast<std::size_t>(k)];
    mu[static_cast<std::size_t>(j)] = v;
  }
  return mu;
}

double LinearGaussianPolicy::log_density(std::span<const double> state, std::span<const double> action) const {
  check_dims(state, action);
  const auto mu = mean(state);
  double lp = 0.0;
  for (int j = 0; j < action_dim_; ++j) {
    const double z = (action[static_cast<std::size_t>(j)] - mu[static_cast<std::size_t>(j)]) / std::exp(log_std(j));
    lp += -0.5 * z * z - log_std(j) - kHalfLog2Pi;
  }
  return lp;
}

double LinearGaussianPolicy::density(std::span<const double> state, std::span<const double> action) const {
  return std::exp(log_density(state, action));
}

std::vector<double> LinearGaussianPolicy::sample_action(std::span<const double> state, Rng& rng) const {
  auto a = mean(state);
  for (int j = 0; j < action_dim_; ++j) a[static_cast<std::size_t>(j)] += std::exp(log_std(j)) * standard_normal(rng);
  return a;
}

void LinearGaussianPolicy::clamp() {
  for (int j = 0; j < action_dim_; ++j) log_std(j) = std::clamp(log_std(j), kLogStdMin, kLogStdMax);
}

// ------------------------------------------------------------------- losses

double bc_loss_and_gradient(const TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, std::span<double> grad) {
  if (batch.pairs.empty()) throw InputError("empty batch");
  if (grad.size() != pi.params().size()) throw InputError("gradient buffer shape mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const int n_actions = pi.n_actions();
  std::vector<double> p(static_cast<std::size_t>(n_actions));
  const double inv_b = 1.0 / static_cast<double>(batch.pairs.size());
  double loss = 0.0;
  for (const auto& [s, a] : batch.pairs) {
    if (a < 0 || a >= n_actions) throw InputError("action out of range");
    pi.probs(s, p);
    loss -= pi.log_prob(s, a);
    const std::size_t base = static_cast<std::size_t>(s) * n_actions;
    for (int b = 0; b < n_actions; ++b)
      grad[base + b] += inv_b * (p[static_cast<std::size_t>(b)] - (b == a ? 1.0 : 0.0));
  }
  return loss * inv_b;
}

double bc_loss_and_gradient(const LinearGaussianPolicy& pi, const ContinuousBatch& batch, std::span<double> grad) {
  if (batch.pairs.empty()) throw InputError("empty batch");
  if (grad.size() != pi.params().size()) throw InputError("gradient buffer shape mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const int sd = pi.state_dim(), ad = pi.action_dim();
  const std::size_t bias_off = static_cast<std::size_t>(ad) * sd;
  const std::size_t std_off = bias_off + static_cast<std::size_t>(ad);
  const double inv_b = 1.0 / static_cast<double>(batch.pairs.size());
  double loss = 0.0;
  for (const auto& [s, a] : batch.pairs) {
    loss -= pi.log_density(s, a);
    const auto mu = pi.mean(s);
    for (int j = 0; j < ad; ++j) {
      const double var = std::exp(2.0 * pi.log_std(j));
      const double diff = a[static_cast<std::size_t>(j)] - mu[static_cast<std::size_t>(j)];
      const double d_mu = -diff / var;  // d NLL / d mu_j
      for (int k = 0; k < sd; ++k)
        grad[static_cast<std::size_t>(j) * sd + k] += inv_b * d_mu * s[static_cast<std::size_t>(k)];
      grad[bias_off + j] += inv_b * d_mu;
      grad[std_off + j] += inv_b * (1.0 - diff * diff / var);
    }
  }
  return loss * inv_b;
}

double bc_loss(const TabularSoftmaxPolicy& pi, const DiscreteBatch& batch) {
  if (batch.pairs.empty()) throw InputError("empty batch");
  double loss = 0.0;
  for (const auto& [s, a] : batch.pairs) loss -= pi.log_prob(s, a);
  return loss / static_cast<double>(batch.pairs.size());
}

double bc_loss(const LinearGaussianPolicy& pi, const ContinuousBatch& batch) {
  if (batch.pairs.empty()) throw InputError("empty batch");
  double loss = 0.0;
  for (const auto& [s, a] : batch.pairs) loss -= pi.log_density(s, a);
  return loss / static_cast<double>(batch.pairs.size());
}

// --------------------------------------------------------------- optimizers

Optimizer::Optimizer(OptimizerConfig cfg) : cfg_(cfg) {
  if (!(cfg_.eta > 0.0)) throw InputError("learning rate must be positive");
}

void Optimizer::apply(std::span<double> params, std::span<const double> grad) {
  if (cfg_.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.eta * grad[i];
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    params[i] -= cfg_.eta * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.epsilon);
  }
}

namespace {

template <class Policy, class Batch>
double step_with(Policy& pi, const Batch& batch, Optimizer& opt) {
  std::vector<double> grad(pi.params().size());
  const double loss = bc_loss_and_gradient(pi, batch, grad);
  opt.apply(pi.params(), grad);
  if constexpr (std::is_same_v<Policy, LinearGaussianPolicy>) {
    check_finite(pi.params());
    pi.clamp();
  }
  check_finite(pi.params());
  return loss;
}

}  // namespace

double bc_gradient_step(TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, double eta) {
  Optimizer opt({OptimizerKind::sgd, eta});
  return step_with(pi, batch, opt);
}

double bc_gradient_step(LinearGaussianPolicy& pi, const ContinuousBatch& batch, double eta) {
  Optimizer opt({OptimizerKind::sgd, eta});
  return step_with(pi, batch, opt);
}

double bc_gradient_step(TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, Optimizer& opt) {
  return step_with(pi, batch, opt);
}

double bc_gradient_step(LinearGaussianPolicy& pi, const ContinuousBatch& batch, Optimizer& opt) {
  return step_with(pi, batch, opt);
}

// ----------------------------------------------------------------------- KL

double kl_to(const PolicyTable& p, const PolicyTable& q, std::span<const double> state_weights) {
  if (p.n_states() != q.n_states() || p.n_actions() != q.n_actions()) throw InputError("kl_to: shape mismatch");
  if (state_weights.size() != static_cast<std::size_t>(p.n_states())) throw InputError("kl_to: weight length mismatch");
  double total = 0.0;
  for (int s = 0; s < p.n_states(); ++s) {
    const double w = state_weights[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    double row = 0.0;
    for (int a = 0; a < p.n_actions(); ++a) {
      const double pa = p(s, a);
      if (pa == 0.0) continue;
      const double qa = q(s, a);
      if (qa == 0.0) return std::numeric_limits<double>::infinity();
      row += pa * std::log(pa / qa);
    }
    total += w * row;
  }
  return total;
}

double kl_to(const TabularSoftmaxPolicy& p, const TabularSoftmaxPolicy& q, std::span<const double> state_weights) {
  return kl_to(p.table(), q.table(), state_weights);
}

// -------------------------------------------------------------- checkpoints

namespace {

constexpr std::array<char, 8> kMagic{'C', 'O', 'I', 'L', 'P', 'O', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::ostream& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

std::uint64_t get_bytes(std::istream& in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw ParseError("truncated checkpoint", 0);
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const AnyPolicy& policy) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  std::visit(
      [&](const auto& pi) {
        using P = std::decay_t<decltype(pi)>;
        if constexpr (std::is_same_v<P, TabularSoftmaxPolicy>) {
          put_u32(out, 0);
          put_u32(out, static_cast<std::uint32_t>(pi.n_states()));
          put_u32(out, static_cast<std::uint32_t>(pi.n_actions()));
        } else {
          put_u32(out, 1);
          put_u32(out, static_cast<std::uint32_t>(pi.state_dim()));
          put_u32(out, static_cast<std::uint32_t>(pi.action_dim()));
        }
        for (double p : pi.params()) put_f64(out, p);
      },
      policy);
  if (!out) throw std::runtime_error("checkpoint write failed");
}

AnyPolicy read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ParseError("not a policy checkpoint", 0);
  const auto version = static_cast<std::uint32_t>(get_bytes(in, 4));
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  const auto kind = static_cast<std::uint32_t>(get_bytes(in, 4));
  const auto d0 = static_cast<int>(get_bytes(in, 4));
  const auto d1 = static_cast<int>(get_bytes(in, 4));
  if (d0 <= 0 || d1 <= 0 || d0 > (1 << 20) || d1 > (1 << 20)) throw ParseError("bad checkpoint dimensions", 0);
  auto read_params = [&](std::span<double> params) {
    for (double& p : params) p = std::bit_cast<double>(get_bytes(in, 8));
  };
  AnyPolicy out;
  if (kind == 0) {
    TabularSoftmaxPolicy pi(d0, d1);
    read_params(pi.params());
    out = std::move(pi);
  } else if (kind == 1) {
    LinearGaussianPolicy pi(d0, d1);
    read_params(pi.params());
    out = std::move(pi);
  } else {
    throw ParseError("unknown checkpoint kind", 0);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in checkpoint", 0);
  return out;
}

void save_checkpoint(const std::string& path, const AnyPolicy& policy) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_checkpoint(out, policy);
}

AnyPolicy load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace coil
