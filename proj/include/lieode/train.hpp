#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lieode/assoc.hpp"
#include "lieode/net.hpp"
#include "lieode/problem.hpp"

namespace lieode {

/// The trial solution yhat(x) = ybar(x) + x * N(x; theta). Components get
/// one network output each, except the synthetic time component, which is
/// carried exactly by ybar. yhat(0) = alpha by construction.
struct TrialSolution {
  OperatorSplit split;
  AssociatedSolution first;
  MlpParams params;
  std::vector<std::size_t> trained;       // component index per network output
  std::vector<Expr> jacobian;             // d f_i / d y_j, (i * size + j), bound

  static TrialSolution make(OperatorSplit split, AssociatedSolution first,
                            MlpParams params);
  /// Same split/first term, freshly initialized parameters.
  static TrialSolution make(OperatorSplit split, AssociatedSolution first,
                            int hidden, std::uint64_t seed);

  std::size_t dimension() const { return split.system.size(); }

  struct Eval {
    std::vector<double> value;       // yhat(x)
    std::vector<double> derivative;  // dyhat/dx, exact
  };
  /// Evaluate the trial solution and its exact x-derivative
  /// dyhat_i/dx = ybar_i'(x) + N_i + x dN_i/dx. Throws outside the first
  /// term's domain.
  Eval eval(double x) const;
};

struct BoundaryCondition {
  double x = 0.0;
  std::size_t component = 0;
  double value = 0.0;
  double weight = 1.0;
};

struct TrainConfig {
  int grid_points = 21;  // N >= 2 equidistant collocation points
  std::optional<Interval> interval;  // defaults to the system interval
  double learning_rate = 0.1;
  int max_iterations = 50000;
  double target_loss = 1e-9;
  enum class Optimizer { PlainGd, Adam };
  Optimizer optimizer = Optimizer::PlainGd;
  std::optional<BoundaryCondition> boundary;
};

struct TrainReport {
  enum class Status { TargetReached, MaxIterations, Diverged };
  Status status = Status::MaxIterations;
  int iterations = 0;
  std::vector<double> loss_trajectory;  // loss at theta_0 .. theta_final
  double final_loss = 0.0;
  MlpParams final_params;
  std::vector<std::vector<double>> residuals;  // per grid point, per component
  double final_learning_rate = 0.0;
  double wall_seconds = 0.0;
};

/// N equidistant points on the interval; 0 is hit exactly when it lies on
/// the grid.
std::vector<double> collocation_grid(Interval interval, int n);

/// Collocation residual machinery with the theta-independent pieces
/// (ybar(x_k), its derivative, and the symbolic f-Jacobian) precomputed.
class Collocation {
 public:
  Collocation(const TrialSolution& trial, std::vector<double> grid,
              std::optional<BoundaryCondition> boundary = std::nullopt);

  double loss(const MlpParams& p) const;

  struct Evaluation {
    double loss = 0.0;
    std::vector<double> gradient;                // over flattened theta
    std::vector<std::vector<double>> residuals;  // grid x components
  };
  Evaluation evaluate(const MlpParams& p) const;

  std::span<const double> grid() const { return xs_; }

 private:
  const TrialSolution* trial_;
  std::vector<double> xs_;
  std::vector<std::vector<double>> ybar_;   // first term at grid
  std::vector<std::vector<double>> dybar_;  // first-term derivative at grid
  std::optional<BoundaryCondition> boundary_;
  std::vector<CompiledExpr> rhs_;       // compiled system rhs
  std::vector<CompiledExpr> jacobian_;  // compiled df_i/dy_j, trained j only
};

/// Mean squared collocation residual of Eq-style loss: (1/N) sum_k sum_i r^2.
double loss(const TrialSolution& trial, std::span<const double> grid);

/// Exact gradient of the loss over the flattened parameters.
std::vector<double> loss_gradient(const TrialSolution& trial,
                                  std::span<const double> grid);

/// Run the descent loop. Plain gradient descent halves the learning rate
/// whenever a step would increase the loss (the step is retried from the
/// previous parameters), so its recorded trajectory never increases. Adam
/// uses beta1 = 0.9, beta2 = 0.999, eps = 1e-8. Updates trial.params in
/// place and reports the trajectory.
TrainReport train(TrialSolution& trial, const TrainConfig& cfg);

/// Pointwise reference for error metrics: x -> full state vector.
using ReferenceFn = std::function<std::vector<double>(double)>;

struct Metrics {
  double max_abs_error = 0.0;   // max_i,k |y_i - yhat_i|
  double mean_abs_error = 0.0;
  double max_deviation = 0.0;   // max_i,k |x (y_i - yhat_i)|
  double ave_deviation = 0.0;   // mean of the same
  double ave_error = 0.0;       // mean squared equation residual, (1/N) sum_k sum_i r^2
  int points = 0;
};

/// Error and residual metrics against a reference on the given grid. The
/// synthetic time component is excluded. `reference` may be empty, in which
/// case only the residual metric is filled.
Metrics metrics(const TrialSolution& trial, const ReferenceFn& reference,
                std::span<const double> grid);

}  // namespace lieode
