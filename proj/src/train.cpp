#include "lieode/train.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace lieode {

TrialSolution TrialSolution::make(OperatorSplit split, AssociatedSolution first,
                                  MlpParams params) {
  TrialSolution t;
  const std::size_t n = split.system.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!split.system.is_time(i)) t.trained.push_back(i);
  if (params.outputs != static_cast<int>(t.trained.size()))
    throw std::invalid_argument("network outputs (" +
                                std::to_string(params.outputs) +
                                ") must match trained components (" +
                                std::to_string(t.trained.size()) + ")");
  t.jacobian.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      t.jacobian.push_back(split.system.rhs[i]
                               .diff(split.system.variables[j])
                               .bind(split.system.variables));
    }
  }
  t.split = std::move(split);
  t.first = std::move(first);
  t.params = std::move(params);
  return t;
}

TrialSolution TrialSolution::make(OperatorSplit split, AssociatedSolution first,
                                  int hidden, std::uint64_t seed) {
  std::size_t outputs = 0;
  for (std::size_t i = 0; i < split.system.size(); ++i)
    if (!split.system.is_time(i)) ++outputs;
  return make(std::move(split), std::move(first),
              init_params(hidden, static_cast<int>(outputs), seed));
}

TrialSolution::Eval TrialSolution::eval(double x) const {
  if (!first.domain.contains(x))
    throw std::out_of_range("x = " + std::to_string(x) +
                            " outside the trial solution domain [" +
                            std::to_string(first.domain.lo) + ", " +
                            std::to_string(first.domain.hi) + "]");
  Eval e;
  e.value = first.value(x);
  e.derivative = first.derivative(x);
  const std::vector<double> n = forward(params, x);
  const std::vector<double> dn = dforward_dx(params, x);
  for (std::size_t j = 0; j < trained.size(); ++j) {
    const std::size_t i = trained[j];
    e.value[i] += x * n[j];
    e.derivative[i] += n[j] + x * dn[j];
  }
  return e;
}

std::vector<double> collocation_grid(Interval interval, int n) {
  if (n < 2) throw std::invalid_argument("need at least 2 collocation points");
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k)
    xs[static_cast<std::size_t>(k)] =
        interval.lo + interval.length() * k / (n - 1);
  return xs;
}

Collocation::Collocation(const TrialSolution& trial, std::vector<double> grid,
                         std::optional<BoundaryCondition> boundary)
    : trial_(&trial), xs_(std::move(grid)), boundary_(std::move(boundary)) {
  if (xs_.empty()) throw std::invalid_argument("empty collocation grid");
  ybar_.reserve(xs_.size());
  dybar_.reserve(xs_.size());
  for (double x : xs_) {
    ybar_.push_back(trial.first.value(x));
    dybar_.push_back(trial.first.derivative(x));
  }
  if (boundary_ && boundary_->component >= trial.dimension())
    throw std::invalid_argument("boundary condition component out of range");

  const std::size_t dim = trial.dimension();
  rhs_.reserve(dim);
  for (const Expr& f : trial.split.system.rhs) rhs_.emplace_back(f);
  jacobian_.reserve(dim * trial.trained.size());
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t l : trial.trained)
      jacobian_.emplace_back(trial.jacobian[i * dim + l]);
}

double Collocation::loss(const MlpParams& p) const {
  const TrialSolution& t = *trial_;
  const std::size_t dim = t.dimension();
  std::vector<double> yhat(dim);
  std::vector<double> n(t.trained.size()), dn(t.trained.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < xs_.size(); ++k) {
    const double x = xs_[k];
    forward_into(p, x, n);
    dforward_dx_into(p, x, dn);
    yhat = ybar_[k];
    for (std::size_t j = 0; j < t.trained.size(); ++j)
      yhat[t.trained[j]] += x * n[j];
    for (std::size_t j = 0, i = 0; i < dim; ++i) {
      double r = dybar_[k][i] - rhs_[i].eval(yhat);
      if (j < t.trained.size() && t.trained[j] == i) {
        r += n[j] + x * dn[j];
        ++j;
      }
      acc += r * r;
    }
  }
  acc /= static_cast<double>(xs_.size());
  if (boundary_) {
    const double x = boundary_->x;
    std::vector<double> yb = trial_->first.value(x);
    forward_into(p, x, n);
    for (std::size_t j = 0; j < t.trained.size(); ++j)
      yb[t.trained[j]] += x * n[j];
    const double d = yb[boundary_->component] - boundary_->value;
    acc += boundary_->weight * d * d;
  }
  return acc;
}

Collocation::Evaluation Collocation::evaluate(const MlpParams& p) const {
  const TrialSolution& t = *trial_;
  const std::size_t dim = t.dimension();
  const std::size_t nout = t.trained.size();
  const int P = p.param_count();

  Evaluation out;
  out.gradient.assign(static_cast<std::size_t>(P), 0.0);
  out.residuals.assign(xs_.size(), std::vector<double>(dim, 0.0));

  std::vector<double> yhat(dim);
  std::vector<double> dr(static_cast<std::size_t>(P));
  NetEval net;
  for (std::size_t k = 0; k < xs_.size(); ++k) {
    const double x = xs_[k];
    gradients_into(p, x, net);
    yhat = ybar_[k];
    for (std::size_t j = 0; j < nout; ++j) yhat[t.trained[j]] += x * net.value[j];

    for (std::size_t j = 0, i = 0; i < dim; ++i) {
      double r = dybar_[k][i] - rhs_[i].eval(yhat);
      const bool has_net = j < nout && t.trained[j] == i;
      if (has_net) r += net.value[j] + x * net.dvalue[j];
      out.residuals[k][i] = r;
      out.loss += r * r;

      // dr/dtheta = dN_i/dtheta + x d(dN_i/dx)/dtheta
      //             - sum_l (df_i/dy_l)(yhat) * x * dN_l/dtheta
      std::fill(dr.begin(), dr.end(), 0.0);
      if (has_net) {
        const double* jv = net.value_jac.data() + j * static_cast<std::size_t>(P);
        const double* jd = net.dvalue_jac.data() + j * static_cast<std::size_t>(P);
        for (int q = 0; q < P; ++q) dr[static_cast<std::size_t>(q)] = jv[q] + x * jd[q];
      }
      for (std::size_t l = 0; l < nout; ++l) {
        const double dfdy = jacobian_[i * nout + l].eval(yhat);
        if (dfdy == 0.0) continue;
        const double* jv = net.value_jac.data() + l * static_cast<std::size_t>(P);
        const double scale = dfdy * x;
        for (int q = 0; q < P; ++q) dr[static_cast<std::size_t>(q)] -= scale * jv[q];
      }
      for (int q = 0; q < P; ++q)
        out.gradient[static_cast<std::size_t>(q)] += 2.0 * r * dr[static_cast<std::size_t>(q)];

      if (has_net) ++j;
    }
  }
  const double inv = 1.0 / static_cast<double>(xs_.size());
  out.loss *= inv;
  for (double& gq : out.gradient) gq *= inv;

  if (boundary_) {
    const double x = boundary_->x;
    gradients_into(p, x, net);
    std::vector<double> yb = trial_->first.value(x);
    for (std::size_t j = 0; j < nout; ++j) yb[t.trained[j]] += x * net.value[j];
    const double d = yb[boundary_->component] - boundary_->value;
    out.loss += boundary_->weight * d * d;
    for (std::size_t j = 0; j < nout; ++j) {
      if (t.trained[j] != boundary_->component) continue;
      const double* jv = net.value_jac.data() + j * static_cast<std::size_t>(P);
      for (int q = 0; q < P; ++q)
        out.gradient[static_cast<std::size_t>(q)] +=
            2.0 * boundary_->weight * d * x * jv[q];
    }
  }
  return out;
}

double loss(const TrialSolution& trial, std::span<const double> grid) {
  Collocation colloc(trial, std::vector<double>(grid.begin(), grid.end()));
  return colloc.loss(trial.params);
}

std::vector<double> loss_gradient(const TrialSolution& trial,
                                  std::span<const double> grid) {
  Collocation colloc(trial, std::vector<double>(grid.begin(), grid.end()));
  return colloc.evaluate(trial.params).gradient;
}

namespace {

bool diverged(double loss_value) {
  return !std::isfinite(loss_value) || loss_value > 1e12;
}

void axpy(std::vector<double>& theta, double scale, const std::vector<double>& d) {
  for (std::size_t q = 0; q < theta.size(); ++q) theta[q] -= scale * d[q];
}

}  // namespace

TrainReport train(TrialSolution& trial, const TrainConfig& cfg) {
  if (cfg.grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  if (cfg.max_iterations < 1)
    throw std::invalid_argument("max_iterations must be >= 1");
  if (!(cfg.learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");

  const auto t0 = std::chrono::steady_clock::now();
  const Interval interval =
      cfg.interval.value_or(trial.split.system.interval);
  Collocation colloc(trial, collocation_grid(interval, cfg.grid_points),
                     cfg.boundary);

  TrainReport report;
  double eta = cfg.learning_rate;
  std::vector<double> theta = trial.params.flatten();
  const int m = trial.params.hidden, n = trial.params.outputs;
  const std::uint64_t seed = trial.params.seed;
  auto with = [&](const std::vector<double>& th) {
    return MlpParams::unflatten(m, n, th, seed);
  };

  Collocation::Evaluation cur = colloc.evaluate(trial.params);
  report.loss_trajectory.push_back(cur.loss);

  if (cfg.optimizer == TrainConfig::Optimizer::PlainGd) {
    for (int it = 0; it < cfg.max_iterations; ++it) {
      if (cur.loss <= cfg.target_loss) {
        report.status = TrainReport::Status::TargetReached;
        break;
      }
      if (diverged(cur.loss)) {
        report.status = TrainReport::Status::Diverged;
        break;
      }
      std::vector<double> cand = theta;
      axpy(cand, eta, cur.gradient);
      double cand_loss = colloc.loss(with(cand));
      int halvings = 0;
      // Backtrack: never accept a step that increases the loss.
      while (!(cand_loss <= cur.loss) && halvings < 60) {
        eta *= 0.5;
        ++halvings;
        cand = theta;
        axpy(cand, eta, cur.gradient);
        cand_loss = colloc.loss(with(cand));
      }
      if (!(cand_loss <= cur.loss)) {
        report.status = TrainReport::Status::Diverged;
        break;
      }
      theta = std::move(cand);
      cur = colloc.evaluate(with(theta));
      report.loss_trajectory.push_back(cur.loss);
      report.iterations = it + 1;
      if (cur.loss <= cfg.target_loss) {
        report.status = TrainReport::Status::TargetReached;
        break;
      }
    }
  } else {
    // Adam oscillates once it reaches its eta-sized floor, so the returned
    // parameters are the best iterate seen, not the last one.
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::vector<double> m1(theta.size(), 0.0), m2(theta.size(), 0.0);
    std::vector<double> best_theta = theta;
    double best_loss = cur.loss;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      if (cur.loss <= cfg.target_loss) {
        report.status = TrainReport::Status::TargetReached;
        break;
      }
      if (diverged(cur.loss)) {
        report.status = TrainReport::Status::Diverged;
        break;
      }
      const double bc1 = 1.0 - std::pow(beta1, it + 1);
      const double bc2 = 1.0 - std::pow(beta2, it + 1);
      for (std::size_t q = 0; q < theta.size(); ++q) {
        const double gq = cur.gradient[q];
        m1[q] = beta1 * m1[q] + (1.0 - beta1) * gq;
        m2[q] = beta2 * m2[q] + (1.0 - beta2) * gq * gq;
        theta[q] -= eta * (m1[q] / bc1) / (std::sqrt(m2[q] / bc2) + adam_eps);
      }
      cur = colloc.evaluate(with(theta));
      report.loss_trajectory.push_back(cur.loss);
      report.iterations = it + 1;
      if (cur.loss < best_loss) {
        best_loss = cur.loss;
        best_theta = theta;
      }
      if (diverged(cur.loss)) {
        report.status = TrainReport::Status::Diverged;
        break;
      }
      if (cur.loss <= cfg.target_loss) {
        report.status = TrainReport::Status::TargetReached;
        break;
      }
    }
    if (best_loss < cur.loss &&
        report.status != TrainReport::Status::Diverged) {
      theta = best_theta;
      cur = colloc.evaluate(with(theta));
    }
  }

  if (report.status == TrainReport::Status::MaxIterations &&
      report.loss_trajectory.back() <= cfg.target_loss)
    report.status = TrainReport::Status::TargetReached;

  trial.params = with(theta);
  report.final_params = trial.params;
  report.final_loss = cur.loss;
  report.residuals = std::move(cur.residuals);
  report.final_learning_rate = eta;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Metrics metrics(const TrialSolution& trial, const ReferenceFn& reference,
                std::span<const double> grid) {
  Metrics m;
  m.points = static_cast<int>(grid.size());
  double err_sum = 0.0, dev_sum = 0.0, res_sum = 0.0;
  std::size_t samples = 0;
  for (double x : grid) {
    const TrialSolution::Eval e = trial.eval(x);
    const std::vector<double> fv = [&] {
      std::vector<double> v(trial.dimension());
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = trial.split.system.rhs[i].eval(e.value);
      return v;
    }();
    std::vector<double> ref;
    if (reference) ref = reference(x);
    for (std::size_t i = 0; i < trial.dimension(); ++i) {
      if (trial.split.system.is_time(i)) continue;
      const double r = e.derivative[i] - fv[i];
      res_sum += r * r;
      if (reference) {
        const double err = ref[i] - e.value[i];
        const double dev = std::abs(x * err);
        m.max_abs_error = std::max(m.max_abs_error, std::abs(err));
        m.max_deviation = std::max(m.max_deviation, dev);
        err_sum += std::abs(err);
        dev_sum += dev;
      }
      ++samples;
    }
  }
  if (samples > 0) {
    m.mean_abs_error = err_sum / static_cast<double>(samples);
    m.ave_deviation = dev_sum / static_cast<double>(samples);
  }
  if (!grid.empty()) m.ave_error = res_sum / static_cast<double>(grid.size());
  return m;
}

}  // namespace lieode
