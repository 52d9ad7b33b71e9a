#include "bridgelab/net.hpp"

#include <cmath>

namespace bridgelab {

double silu(double z) { return z / (1.0 + std::exp(-z)); }

double silu_grad(double z) {
  double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

OutputMap OutputMap::raw(int n_steps) {
  OutputMap m;
  m.scale_x = VectorXd::Zero(n_steps + 1);
  m.scale_raw = VectorXd::Ones(n_steps + 1);
  return m;
}

OutputMap OutputMap::residual(int n_steps) {
  OutputMap m;
  m.scale_x = VectorXd::Ones(n_steps + 1);
  m.scale_raw = VectorXd::Ones(n_steps + 1);
  return m;
}

bool OutputMap::operator==(const OutputMap& o) const {
  return scale_x.size() == o.scale_x.size() && scale_x == o.scale_x &&
         scale_raw == o.scale_raw;
}

void GradBuffer::set_zero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
  embed.setZero();
}

bool GradBuffer::all_finite() const {
  for (const auto& m : w)
    if (!m.allFinite()) return false;
  for (const auto& v : b)
    if (!v.allFinite()) return false;
  return embed.size() == 0 || embed.allFinite();
}

DriftNet::DriftNet(const DriftNet& o)
    : cfg(o.cfg),
      w(o.w),
      b(o.b),
      embed(o.embed),
      out_map(o.out_map),
      adam(o.adam),
      role(o.role),
      mode(o.mode),
      eval_count(o.eval_count.load()) {}

DriftNet& DriftNet::operator=(const DriftNet& o) {
  if (this == &o) return *this;
  cfg = o.cfg;
  w = o.w;
  b = o.b;
  embed = o.embed;
  out_map = o.out_map;
  adam = o.adam;
  role = o.role;
  mode = o.mode;
  eval_count.store(o.eval_count.load());
  return *this;
}

namespace {

std::vector<int> layer_dims(const NetConfig& cfg) {
  std::vector<int> dims;
  dims.push_back(cfg.input_dim());
  for (int h : cfg.hidden) dims.push_back(h);
  dims.push_back(cfg.data_dim);
  return dims;
}

}  // namespace

DriftNet make_drift_net(const NetConfig& cfg, uint64_t seed) {
  if (cfg.data_dim < 1 || cfg.time_embed_dim < 0 || cfg.n_steps < 1)
    throw ConfigError("bad net configuration");
  for (int h : cfg.hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");

  DriftNet net;
  net.cfg = cfg;
  Rng rng(seed);

  auto dims = layer_dims(cfg);
  std::size_t n_layers = dims.size() - 1;
  net.w.resize(n_layers);
  net.b.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    int in = dims[l], out = dims[l + 1];
    net.w[l].resize(out, in);
    net.b[l] = VectorXd::Zero(out);
    if (l + 1 == n_layers) {
      // Zero-initialized head: the untrained net predicts 0 through a raw
      // output map, or the identity through a residual one.
      net.w[l].setZero();
    } else {
      double a = std::sqrt(6.0 / static_cast<double>(in + out));
      for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j)
          net.w[l](i, j) = (2.0 * rng.uniform() - 1.0) * a;
    }
  }

  net.embed.resize(cfg.n_steps + 1, cfg.time_embed_dim);
  for (Eigen::Index i = 0; i < net.embed.rows(); ++i)
    for (Eigen::Index j = 0; j < net.embed.cols(); ++j)
      net.embed(i, j) = 0.02 * rng.normal();

  net.out_map = OutputMap::raw(cfg.n_steps);
  net.reset_adam();
  return net;
}

void DriftNet::reset_adam() {
  adam.m_w.clear();
  adam.v_w.clear();
  adam.m_b.clear();
  adam.v_b.clear();
  for (const auto& m : w) {
    adam.m_w.push_back(MatrixXd::Zero(m.rows(), m.cols()));
    adam.v_w.push_back(MatrixXd::Zero(m.rows(), m.cols()));
  }
  for (const auto& v : b) {
    adam.m_b.push_back(VectorXd::Zero(v.size()));
    adam.v_b.push_back(VectorXd::Zero(v.size()));
  }
  adam.m_embed = MatrixXd::Zero(embed.rows(), embed.cols());
  adam.v_embed = MatrixXd::Zero(embed.rows(), embed.cols());
  adam.step = 0;
}

GradBuffer DriftNet::zero_grads() const {
  GradBuffer g;
  for (const auto& m : w) g.w.push_back(MatrixXd::Zero(m.rows(), m.cols()));
  for (const auto& v : b) g.b.push_back(VectorXd::Zero(v.size()));
  g.embed = MatrixXd::Zero(embed.rows(), embed.cols());
  return g;
}

MatrixXd DriftNet::forward(int k, const MatrixXd& x) const {
  std::vector<int> ks(static_cast<std::size_t>(x.rows()), k);
  return forward(ks, x);
}

MatrixXd DriftNet::forward(const std::vector<int>& ks, const MatrixXd& x) const {
  return forward_tape(ks, x).output;
}

Tape DriftNet::forward_tape(const std::vector<int>& ks, const MatrixXd& x) const {
  const Eigen::Index n = x.rows();
  if (x.cols() != cfg.data_dim) throw ConfigError("input width mismatch");
  if (static_cast<Eigen::Index>(ks.size()) != n)
    throw ConfigError("timestep count mismatch");

  Tape t;
  t.steps = ks;
  t.input.resize(n, cfg.input_dim());
  t.input.leftCols(cfg.data_dim) = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    int k = ks[static_cast<std::size_t>(i)];
    if (k < 0 || k > cfg.n_steps) throw ConfigError("timestep out of range");
    if (cfg.time_embed_dim > 0)
      t.input.row(i).tail(cfg.time_embed_dim) = embed.row(k);
  }

  const std::size_t n_hidden = cfg.hidden.size();
  t.pre.resize(n_hidden);
  t.act.resize(n_hidden);
  MatrixXd cur = t.input;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    t.pre[l].noalias() = cur * w[l].transpose();
    t.pre[l].rowwise() += b[l].transpose();
    t.act[l] = t.pre[l].unaryExpr([](double z) { return silu(z); });
    cur = t.act[l];
  }
  t.raw.noalias() = cur * w.back().transpose();
  t.raw.rowwise() += b.back().transpose();

  t.output.resize(n, cfg.data_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    int k = ks[static_cast<std::size_t>(i)];
    t.output.row(i) = out_map.scale_x(k) * x.row(i) +
                      out_map.scale_raw(k) * t.raw.row(i);
  }

  eval_count.fetch_add(n, std::memory_order_relaxed);
  return t;
}

GradBuffer DriftNet::backward(const Tape& tape, const MatrixXd& upstream) const {
  const Eigen::Index n = tape.input.rows();
  if (upstream.rows() != n || upstream.cols() != cfg.data_dim)
    throw ConfigError("upstream gradient shape mismatch");

  GradBuffer g = zero_grads();

  // Through the affine head: d raw_i = upstream_i * scale_raw[k_i].
  MatrixXd d_raw(n, cfg.data_dim);
  for (Eigen::Index i = 0; i < n; ++i)
    d_raw.row(i) =
        upstream.row(i) * out_map.scale_raw(tape.steps[static_cast<std::size_t>(i)]);

  const std::size_t n_hidden = cfg.hidden.size();
  const MatrixXd& last_in = n_hidden == 0 ? tape.input : tape.act.back();
  g.w.back().noalias() = d_raw.transpose() * last_in;
  g.b.back() = d_raw.colwise().sum();

  MatrixXd d_act = d_raw * w.back();
  for (std::size_t l = n_hidden; l-- > 0;) {
    MatrixXd d_pre =
        d_act.array() *
        tape.pre[l].unaryExpr([](double z) { return silu_grad(z); }).array();
    const MatrixXd& in = l == 0 ? tape.input : tape.act[l - 1];
    g.w[l].noalias() = d_pre.transpose() * in;
    g.b[l] = d_pre.colwise().sum();
    d_act = d_pre * w[l];
  }

  if (cfg.time_embed_dim > 0) {
    // d_act now holds the gradient w.r.t. the stacked [x, embed(k)] input.
    for (Eigen::Index i = 0; i < n; ++i)
      g.embed.row(tape.steps[static_cast<std::size_t>(i)]) +=
          d_act.row(i).tail(cfg.time_embed_dim);
  }
  return g;
}

namespace {

void adam_update(Eigen::Ref<MatrixXd> p, Eigen::Ref<MatrixXd> m,
                 Eigen::Ref<MatrixXd> v, const MatrixXd& g, double lr,
                 double b1, double b2, double eps, double bc1, double bc2) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v.array().matrix() + (1.0 - b2) * g.array().square().matrix();
  p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

bool DriftNet::adam_step(const GradBuffer& g, double lr, double beta1,
                         double beta2, double eps) {
  if (g.w.size() != w.size() || g.b.size() != b.size() ||
      g.embed.rows() != embed.rows() || g.embed.cols() != embed.cols())
    throw ConfigError("gradient shape mismatch");
  if (!g.all_finite()) return false;

  adam.step += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));

  for (std::size_t l = 0; l < w.size(); ++l) {
    adam_update(w[l], adam.m_w[l], adam.v_w[l], g.w[l], lr, beta1, beta2, eps,
                bc1, bc2);
    adam.m_b[l] = beta1 * adam.m_b[l] + (1.0 - beta1) * g.b[l];
    adam.v_b[l] = beta2 * adam.v_b[l].array().matrix() +
                  (1.0 - beta2) * g.b[l].array().square().matrix();
    b[l].array() -= lr * (adam.m_b[l].array() / bc1) /
                    ((adam.v_b[l].array() / bc2).sqrt() + eps);
  }
  if (embed.size() > 0)
    adam_update(embed, adam.m_embed, adam.v_embed, g.embed, lr, beta1, beta2,
                eps, bc1, bc2);
  return true;
}

int64_t DriftNet::num_params() const {
  int64_t n = 0;
  for (const auto& m : w) n += m.size();
  for (const auto& v : b) n += v.size();
  n += embed.size();
  return n;
}

double& DriftNet::param_at(int64_t flat_index) {
  int64_t i = flat_index;
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (i < w[l].size()) return w[l].data()[i];
    i -= w[l].size();
    if (i < b[l].size()) return b[l].data()[i];
    i -= b[l].size();
  }
  if (i < embed.size()) return embed.data()[i];
  throw std::out_of_range("parameter index");
}

double DriftNet::param_at(int64_t flat_index) const {
  return const_cast<DriftNet*>(this)->param_at(flat_index);
}

uint64_t DriftNet::fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  for (const auto& m : w)
    h = fnv1a(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), h);
  for (const auto& v : b)
    h = fnv1a(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()), h);
  h = fnv1a(embed.data(), sizeof(double) * static_cast<std::size_t>(embed.size()), h);
  h = fnv1a(out_map.scale_x.data(),
            sizeof(double) * static_cast<std::size_t>(out_map.scale_x.size()), h);
  h = fnv1a(out_map.scale_raw.data(),
            sizeof(double) * static_cast<std::size_t>(out_map.scale_raw.size()), h);
  return h;
}

void copy_params_into(const DriftNet& src, DriftNet& dst) {
  if (!(src.cfg == dst.cfg)) throw ConfigError("architecture mismatch");
  dst.w = src.w;
  dst.b = src.b;
  dst.embed = src.embed;
  dst.out_map = src.out_map;
}

}  // namespace bridgelab
