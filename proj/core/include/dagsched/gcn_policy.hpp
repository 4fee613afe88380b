#pragma once

#include <random>
#include <vector>

#include "dagsched/autodiff.hpp"
#include "dagsched/checkpoint.hpp"
#include "dagsched/sim_env.hpp"

namespace dagsched {

// Actor-critic network over an observation sub-DAG: a stack of 1+w graph
// convolutions (9 -> h, then h -> h) with ReLU between layers, a per-node
// logit head, and pass-logit and value heads reading the mean-pooled final
// embedding. All heads are single linear layers h -> 1.
struct PolicyParams {
  int window = 1;
  int hidden = 64;
  bool cp_feature = true;
  std::vector<Matrix> gcn;  // layer_count() weight matrices
  Matrix node_head;         // hidden x 1
  Matrix pass_head;         // hidden x 1
  Matrix value_head;        // hidden x 1

  int layer_count() const { return static_cast<int>(gcn.size()); }
};

// Glorot-initialized parameters; layer count defaults to 1 + window.
PolicyParams make_policy_params(int window, int hidden, std::mt19937_64 &rng,
                                bool cp_feature = true, int layer_count = -1);

Checkpoint to_checkpoint(const PolicyParams &params);
PolicyParams params_from_checkpoint(const Checkpoint &checkpoint);

// One graph convolution: h_i' = sum over incoming edges (j -> i), self-loops
// included, of (d_i d_j)^(-1/2) h_j W.
Var gcn_layer(Tape &tape, Var features, const std::vector<std::pair<int, int>> &edges,
              Var weights);

// Parameter leaves registered on a tape, shared across the forwards of one
// update so gradients accumulate.
struct PolicyVars {
  std::vector<Var> gcn;
  Var node_head;
  Var pass_head;
  Var value_head;
};

PolicyVars make_policy_vars(Tape &tape, const PolicyParams &params);

struct PolicyForward {
  Var probs;    // 1 x action_count, pass slot last, masked entries exactly 0
  Var value;    // 1x1
  Var entropy;  // 1x1
  std::vector<std::uint8_t> mask;
};

PolicyForward policy_forward(Tape &tape, const Observation &obs, const PolicyVars &vars);

struct PolicyOutput {
  std::vector<double> probs;  // over action slots, pass last
  double value = 0.0;
  double entropy = 0.0;
};

// Convenience evaluation on a throwaway tape.
PolicyOutput evaluate_policy(const Observation &obs, const PolicyParams &params);

enum class ActMode { Sample, Greedy };

// Slot into the observation's action map: sampling for training, argmax
// (ties to the lowest slot) for evaluation.
int act(const PolicyOutput &output, ActMode mode, std::mt19937_64 *rng);

Action slot_to_action(const Observation &obs, int slot);

}  // namespace dagsched
