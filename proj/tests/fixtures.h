#ifndef FISHMPC_TESTS_FIXTURES_H_
#define FISHMPC_TESTS_FIXTURES_H_

#include <random>

#include "fishmpc/fdm.h"
#include "fishmpc/simharness.h"

namespace fixtures {

// FDM trained once per process on 300 default-surrogate transitions.
inline const fishmpc::FdmTrainResult& surrogate_fdm() {
  static const fishmpc::FdmTrainResult r = [] {
    const auto data = fishmpc::collect_transitions(fishmpc::SurrogateParams{}, 300, 1);
    return fishmpc::train_fdm(data, fishmpc::FdmTrainConfig{}, 1);
  }();
  return r;
}

inline fishmpc::WorldState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 600.0);
  std::uniform_real_distribution<double> ang(-3.1, 3.1);
  std::uniform_real_distribution<double> vel(-40.0, 40.0);
  std::uniform_real_distribution<double> om(-1.0, 1.0);
  return {pos(rng), pos(rng), ang(rng), vel(rng), vel(rng), om(rng)};
}

inline fishmpc::Action random_action(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> on(200.0, 900.0);
  return {on(rng), on(rng)};
}

}  // namespace fixtures

#endif  // FISHMPC_TESTS_FIXTURES_H_
