#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lieode {

/// Parameters of the one-input, m-hidden-sigmoid-neuron, n-linear-output
/// network N_j(x) = sum_i v_ji * sigmoid(x w_i + b_i) + c_j.
///
/// Flattened parameter order is fixed: w (m), b (m), v row-major (n x m),
/// then c (n). Every gradient vector in this project uses that order.
struct MlpParams {
  int hidden = 0;   // m
  int outputs = 0;  // n
  std::uint64_t seed = 0;
  std::vector<double> w;  // m
  std::vector<double> b;  // m
  std::vector<double> v;  // n*m, v[j*m + i]
  std::vector<double> c;  // n

  int param_count() const { return 2 * hidden + outputs * hidden + outputs; }
  std::vector<double> flatten() const;
  static MlpParams unflatten(int m, int n, std::span<const double> theta,
                             std::uint64_t seed = 0);
};

/// Seeded init, all parameters i.i.d. uniform on [-0.5, 0.5]. The generator
/// is fixed (not the standard library distribution), so equal seeds give
/// bit-identical parameters everywhere.
MlpParams init_params(int m, int n, std::uint64_t seed);

std::vector<double> forward(const MlpParams& p, double x);
std::vector<double> dforward_dx(const MlpParams& p, double x);

/// Allocation-free variants for hot loops; out must hold n values.
void forward_into(const MlpParams& p, double x, std::span<double> out);
void dforward_dx_into(const MlpParams& p, double x, std::span<double> out);

/// Everything the trainer needs at one input point: the outputs, their
/// x-derivatives, and the Jacobians of both with respect to the flattened
/// parameters (row j holds output j, param_count columns).
struct NetEval {
  std::vector<double> value;          // n
  std::vector<double> dvalue;         // n
  std::vector<double> value_jac;      // n x P
  std::vector<double> dvalue_jac;     // n x P
};
NetEval gradients(const MlpParams& p, double x);

/// Reusing-buffer variant; resizes `out` on first use.
void gradients_into(const MlpParams& p, double x, NetEval& out);

void save_params(const MlpParams& p, std::ostream& out);
MlpParams load_params(std::istream& in);
void save_params_file(const MlpParams& p, const std::string& path);
MlpParams load_params_file(const std::string& path);

}  // namespace lieode
