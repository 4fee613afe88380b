#include "dagsched/gcn_policy.hpp"

#include <stdexcept>

namespace dagsched {

PolicyParams make_policy_params(int window, int hidden, std::mt19937_64 &rng, bool cp_feature,
                                int layer_count) {
  if (window < 0 || hidden < 1) {
    throw std::invalid_argument("make_policy_params: bad window/hidden");
  }
  if (layer_count < 0) {
    layer_count = window + 1;
  }
  PolicyParams params;
  params.window = window;
  params.hidden = hidden;
  params.cp_feature = cp_feature;
  params.gcn.reserve(layer_count);
  for (int l = 0; l < layer_count; ++l) {
    const int in = l == 0 ? kFeatureDim : hidden;
    params.gcn.push_back(glorot_uniform(in, hidden, rng));
  }
  params.node_head = glorot_uniform(hidden, 1, rng);
  params.pass_head = glorot_uniform(hidden, 1, rng);
  params.value_head = glorot_uniform(hidden, 1, rng);
  return params;
}

Checkpoint to_checkpoint(const PolicyParams &params) {
  Checkpoint checkpoint;
  checkpoint.window = params.window;
  checkpoint.hidden = params.hidden;
  checkpoint.cp_feature = params.cp_feature;
  for (int l = 0; l < params.layer_count(); ++l) {
    checkpoint.arrays["gcn." + std::to_string(l)] = params.gcn[l];
  }
  checkpoint.arrays["node_head"] = params.node_head;
  checkpoint.arrays["pass_head"] = params.pass_head;
  checkpoint.arrays["value_head"] = params.value_head;
  return checkpoint;
}

PolicyParams params_from_checkpoint(const Checkpoint &checkpoint) {
  PolicyParams params;
  params.window = checkpoint.window;
  params.hidden = checkpoint.hidden;
  params.cp_feature = checkpoint.cp_feature;
  for (int l = 0;; ++l) {
    auto it = checkpoint.arrays.find("gcn." + std::to_string(l));
    if (it == checkpoint.arrays.end()) {
      break;
    }
    params.gcn.push_back(it->second);
  }
  if (params.gcn.empty()) {
    throw std::runtime_error("checkpoint: no gcn layers found");
  }
  params.node_head = checkpoint.arrays.at("node_head");
  params.pass_head = checkpoint.arrays.at("pass_head");
  params.value_head = checkpoint.arrays.at("value_head");
  return params;
}

Var gcn_layer(Tape &tape, Var features, const std::vector<std::pair<int, int>> &edges,
              Var weights) {
  return tape.matmul(tape.graph_aggregate(features, edges), weights);
}

PolicyVars make_policy_vars(Tape &tape, const PolicyParams &params) {
  PolicyVars vars;
  vars.gcn.reserve(params.layer_count());
  for (const Matrix &w : params.gcn) {
    vars.gcn.push_back(tape.leaf(w));
  }
  vars.node_head = tape.leaf(params.node_head);
  vars.pass_head = tape.leaf(params.pass_head);
  vars.value_head = tape.leaf(params.value_head);
  return vars;
}

PolicyForward policy_forward(Tape &tape, const Observation &obs, const PolicyVars &vars) {
  if (obs.node_count() == 0) {
    throw std::invalid_argument("policy_forward: empty observation");
  }

  Matrix features(obs.node_count(), kFeatureDim);
  features.data.assign(obs.features.begin(), obs.features.end());
  Var h = tape.leaf(std::move(features));
  const int layers = static_cast<int>(vars.gcn.size());
  for (int l = 0; l < layers; ++l) {
    h = gcn_layer(tape, h, obs.edges, vars.gcn[l]);
    if (l + 1 < layers) {
      h = tape.relu(h);
    }
  }

  Var node_logits = tape.matmul(h, vars.node_head);      // n x 1
  Var pooled = tape.mean_pool_rows(h);                   // 1 x hidden
  Var pass_logit = tape.matmul(pooled, vars.pass_head);  // 1 x 1
  Var value = tape.matmul(pooled, vars.value_head);      // 1 x 1

  std::vector<EntryRef> entries;
  entries.reserve(obs.action_count());
  for (int row : obs.action_rows) {
    entries.push_back({node_logits, row, 0});
  }
  entries.push_back({pass_logit, 0, 0});
  Var logits = tape.concat_entries(entries);

  PolicyForward out;
  out.mask.assign(obs.action_count(), 1);
  out.mask.back() = obs.pass_allowed ? 1 : 0;
  out.probs = tape.masked_row_softmax(logits, out.mask);
  out.entropy = tape.masked_entropy(out.probs, out.mask);
  out.value = value;
  return out;
}

PolicyOutput evaluate_policy(const Observation &obs, const PolicyParams &params) {
  Tape tape;
  PolicyVars vars = make_policy_vars(tape, params);
  PolicyForward fwd = policy_forward(tape, obs, vars);
  PolicyOutput out;
  out.probs = tape.value(fwd.probs).data;
  out.value = tape.value(fwd.value).scalar();
  out.entropy = tape.value(fwd.entropy).scalar();
  return out;
}

int act(const PolicyOutput &output, ActMode mode, std::mt19937_64 *rng) {
  const int n = static_cast<int>(output.probs.size());
  if (mode == ActMode::Greedy) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (output.probs[i] > output.probs[best]) {
        best = i;
      }
    }
    return best;
  }
  if (rng == nullptr) {
    throw std::invalid_argument("act: sampling requires an rng");
  }
  const double u = canonical_uniform(*rng);
  double cumulative = 0.0;
  for (int i = 0; i < n; ++i) {
    cumulative += output.probs[i];
    if (u < cumulative) {
      return i;
    }
  }
  // Guard against the cumulative sum rounding just below 1: fall back to the
  // last slot with nonzero probability.
  for (int i = n - 1; i >= 0; --i) {
    if (output.probs[i] > 0.0) {
      return i;
    }
  }
  return n - 1;
}

Action slot_to_action(const Observation &obs, int slot) {
  if (slot < 0 || slot >= obs.action_count()) {
    throw std::invalid_argument("slot_to_action: slot out of range");
  }
  return slot == obs.pass_slot() ? Action::pass() : Action::select(slot);
}

}  // namespace dagsched
