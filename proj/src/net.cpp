#include "lieode/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

namespace lieode {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<double> MlpParams::flatten() const {
  std::vector<double> theta;
  theta.reserve(static_cast<std::size_t>(param_count()));
  theta.insert(theta.end(), w.begin(), w.end());
  theta.insert(theta.end(), b.begin(), b.end());
  theta.insert(theta.end(), v.begin(), v.end());
  theta.insert(theta.end(), c.begin(), c.end());
  return theta;
}

MlpParams MlpParams::unflatten(int m, int n, std::span<const double> theta,
                               std::uint64_t seed) {
  MlpParams p;
  p.hidden = m;
  p.outputs = n;
  p.seed = seed;
  if (theta.size() != static_cast<std::size_t>(p.param_count()))
    throw std::invalid_argument("parameter vector has wrong length");
  auto it = theta.begin();
  p.w.assign(it, it + m);
  it += m;
  p.b.assign(it, it + m);
  it += m;
  p.v.assign(it, it + static_cast<std::ptrdiff_t>(n) * m);
  it += static_cast<std::ptrdiff_t>(n) * m;
  p.c.assign(it, it + n);
  return p;
}

MlpParams init_params(int m, int n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("network needs m, n >= 1");
  std::mt19937_64 gen(seed);
  auto uniform = [&gen]() {
    // 53 random bits -> [0,1), shifted to [-0.5, 0.5).
    return static_cast<double>(gen() >> 11) * 0x1p-53 - 0.5;
  };
  MlpParams p;
  p.hidden = m;
  p.outputs = n;
  p.seed = seed;
  p.w.resize(m);
  p.b.resize(m);
  p.v.resize(static_cast<std::size_t>(n) * m);
  p.c.resize(n);
  for (double& x : p.w) x = uniform();
  for (double& x : p.b) x = uniform();
  for (double& x : p.v) x = uniform();
  for (double& x : p.c) x = uniform();
  return p;
}

void forward_into(const MlpParams& p, double x, std::span<double> out) {
  for (int j = 0; j < p.outputs; ++j) {
    double acc = p.c[j];
    for (int i = 0; i < p.hidden; ++i)
      acc += p.v[static_cast<std::size_t>(j) * p.hidden + i] *
             sigmoid(x * p.w[i] + p.b[i]);
    out[static_cast<std::size_t>(j)] = acc;
  }
}

void dforward_dx_into(const MlpParams& p, double x, std::span<double> out) {
  for (int j = 0; j < p.outputs; ++j) {
    double acc = 0.0;
    for (int i = 0; i < p.hidden; ++i) {
      const double s = sigmoid(x * p.w[i] + p.b[i]);
      const double sp = s * (1.0 - s);
      acc += p.v[static_cast<std::size_t>(j) * p.hidden + i] * sp * p.w[i];
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
}

std::vector<double> forward(const MlpParams& p, double x) {
  std::vector<double> out(p.outputs, 0.0);
  forward_into(p, x, out);
  return out;
}

std::vector<double> dforward_dx(const MlpParams& p, double x) {
  std::vector<double> out(p.outputs, 0.0);
  dforward_dx_into(p, x, out);
  return out;
}

void gradients_into(const MlpParams& p, double x, NetEval& e) {
  const int m = p.hidden, n = p.outputs;
  const int P = p.param_count();
  e.value.assign(n, 0.0);
  e.dvalue.assign(n, 0.0);
  e.value_jac.assign(static_cast<std::size_t>(n) * P, 0.0);
  e.dvalue_jac.assign(static_cast<std::size_t>(n) * P, 0.0);

  // Shared per-neuron activations.
  std::vector<double> s(m), sp(m), spp(m);
  for (int i = 0; i < m; ++i) {
    s[i] = sigmoid(x * p.w[i] + p.b[i]);
    sp[i] = s[i] * (1.0 - s[i]);
    spp[i] = sp[i] * (1.0 - 2.0 * s[i]);
  }

  for (int j = 0; j < n; ++j) {
    const double* vrow = p.v.data() + static_cast<std::size_t>(j) * m;
    double val = p.c[j], dval = 0.0;
    double* jac = e.value_jac.data() + static_cast<std::size_t>(j) * P;
    double* djac = e.dvalue_jac.data() + static_cast<std::size_t>(j) * P;
    for (int i = 0; i < m; ++i) {
      val += vrow[i] * s[i];
      dval += vrow[i] * sp[i] * p.w[i];
      // d/dw_i and d/db_i
      jac[i] = vrow[i] * sp[i] * x;
      jac[m + i] = vrow[i] * sp[i];
      djac[i] = vrow[i] * (spp[i] * p.w[i] * x + sp[i]);
      djac[m + i] = vrow[i] * spp[i] * p.w[i];
      // d/dv_ji
      jac[2 * m + j * m + i] = s[i];
      djac[2 * m + j * m + i] = sp[i] * p.w[i];
    }
    // d/dc_j: 1 for the value, 0 for the x-derivative.
    jac[2 * m + n * m + j] = 1.0;
    e.value[j] = val;
    e.dvalue[j] = dval;
  }
}

NetEval gradients(const MlpParams& p, double x) {
  NetEval e;
  gradients_into(p, x, e);
  return e;
}

void save_params(const MlpParams& p, std::ostream& out) {
  out << "mlp-params-v1\n" << p.hidden << ' ' << p.outputs << ' ' << p.seed << '\n';
  char buf[40];
  for (double x : p.flatten()) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf << '\n';
  }
}

MlpParams load_params(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "mlp-params-v1")
    throw std::runtime_error("not a parameter file (bad magic)");
  int m = 0, n = 0;
  std::uint64_t seed = 0;
  in >> m >> n >> seed;
  if (!in || m < 1 || n < 1) throw std::runtime_error("bad parameter header");
  const int P = 2 * m + n * m + n;
  std::vector<double> theta(static_cast<std::size_t>(P));
  for (double& x : theta) {
    if (!(in >> x)) throw std::runtime_error("truncated parameter file");
  }
  return MlpParams::unflatten(m, n, theta, seed);
}

void save_params_file(const MlpParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  save_params(p, out);
}

MlpParams load_params_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  return load_params(in);
}

}  // namespace lieode
