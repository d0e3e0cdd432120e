#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mida/domains.hpp"

namespace mida {

// Built-in two-class scenarios exercising different flavours of domain shift:
//   two_domain_shift  2-D source/target pair with a constant covariate shift
//   continuous_drift  2-D stream whose class centers drift over time
//   label_mixing_3d   3-D, class separation on one axis, domain shift on the
//                     same axis, noise elsewhere; built so label information is
//                     needed to keep the discriminative direction
//   nonlinear_shift   2-D, target classes rotated around the origin so a linear
//                     kernel cannot align the domains but an rbf kernel can
enum class ScenarioKind { two_domain_shift, continuous_drift, label_mixing_3d, nonlinear_shift };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(const std::string& name);  // accepts fig1..fig4 aliases

struct SynthScenario {
  ScenarioKind kind = ScenarioKind::two_domain_shift;
  int n_per_class_per_domain = 100;
  std::uint64_t seed = 7;
  // two_domain_shift only: shift the class means by different amounts so the
  // conditional distribution changes across domains, not just the marginal.
  bool conditional_shift = false;
};

struct SynthData {
  Eigen::MatrixXd X;  // features, one column per sample
  std::vector<BackgroundRecord> backgrounds;
  std::vector<int> labels;  // 0/1
};

SynthData generate(const SynthScenario& scenario);

}  // namespace mida
