#include "dagsched/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace dagsched {

void AdamOptimizer::update(const std::string &name, Matrix &param, const Matrix &grad,
                           double lr_scale) {
  if (!param.same_shape(grad)) {
    throw std::invalid_argument("adam: parameter/gradient shape mismatch");
  }
  if (step_count_ == 0) {
    throw std::logic_error("adam: begin_step() must be called before update()");
  }
  auto [it, inserted] = moments_.try_emplace(name);
  Moments &mom = it->second;
  if (inserted) {
    mom.m = Matrix::zeros(param.rows, param.cols);
    mom.v = Matrix::zeros(param.rows, param.cols);
  } else if (!mom.m.same_shape(param)) {
    throw std::invalid_argument("adam: parameter shape changed between steps");
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double m_corr = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double v_corr = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  const double lr = config_.lr * lr_scale;
  for (int i = 0; i < param.size(); ++i) {
    const double g = grad.data[i];
    mom.m.data[i] = b1 * mom.m.data[i] + (1.0 - b1) * g;
    mom.v.data[i] = b2 * mom.v.data[i] + (1.0 - b2) * g * g;
    const double m_hat = mom.m.data[i] / m_corr;
    const double v_hat = mom.v.data[i] / v_corr;
    param.data[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace dagsched
