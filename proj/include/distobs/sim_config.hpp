#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace distobs {

/// One channel of the exogenous input u(t).
struct InputChannel {
  enum class Kind { kZero, kConstant, kSinusoid };

  Kind kind = Kind::kZero;
  double value = 0.0;   // constant level, or sinusoid amplitude
  double period = 1.0;  // sinusoid period in steps, > 0

  double evaluate(int t) const;
};

enum class ObserverInit { kZero, kRandom, kExplicit };

struct SimConfig {
  int horizon = 100;
  // Plant initial state, Jordan coordinates. Empty means zero.
  Eigen::VectorXd x0;
  ObserverInit observer_init = ObserverInit::kZero;
  // kExplicit: one full n-vector per agent (Jordan coordinates); the local
  // observer and the consensus layer each take the entries they own.
  std::vector<Eigen::VectorXd> explicit_init;
  // One entry per input channel. Empty means all-zero input.
  std::vector<InputChannel> input;
  std::uint64_t seed = 0;

  Eigen::VectorXd input_at(int t, int channels) const;
};

}  // namespace distobs
