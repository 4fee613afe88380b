#pragma once

#include <map>
#include <string>

#include "dagsched/matrix.hpp"

namespace dagsched {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 0.1;
};

// Adam with bias correction over a named set of parameter matrices. Call
// begin_step() once per optimization step, then update() for each parameter;
// lr_scale multiplies the learning rate for that parameter (0 freezes it).
class AdamOptimizer {
public:
  explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {}

  void begin_step() { ++step_count_; }
  void update(const std::string &name, Matrix &param, const Matrix &grad, double lr_scale = 1.0);

  long step_count() const { return step_count_; }
  const AdamConfig &config() const { return config_; }

private:
  struct Moments {
    Matrix m;
    Matrix v;
  };

  AdamConfig config_;
  long step_count_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace dagsched
