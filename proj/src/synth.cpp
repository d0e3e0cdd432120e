#include "mida/synth.hpp"

#include "mida/rng.hpp"

namespace mida {

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::two_domain_shift: return "two-domain-shift";
    case ScenarioKind::continuous_drift: return "continuous-drift";
    case ScenarioKind::label_mixing_3d: return "label-mixing-3d";
    case ScenarioKind::nonlinear_shift: return "nonlinear-shift";
  }
  throw std::invalid_argument("unknown scenario");
}

ScenarioKind scenario_from_string(const std::string& name) {
  if (name == "two-domain-shift" || name == "fig1") return ScenarioKind::two_domain_shift;
  if (name == "continuous-drift" || name == "fig2") return ScenarioKind::continuous_drift;
  if (name == "label-mixing-3d" || name == "fig3") return ScenarioKind::label_mixing_3d;
  if (name == "nonlinear-shift" || name == "fig4") return ScenarioKind::nonlinear_shift;
  throw std::invalid_argument("unknown scenario: " + name);
}

namespace {

struct Builder {
  Eigen::MatrixXd X;
  std::vector<BackgroundRecord> backgrounds;
  std::vector<int> labels;
  Eigen::Index next = 0;

  Builder(Eigen::Index dim, Eigen::Index n) : X(dim, n) {
    backgrounds.reserve(static_cast<std::size_t>(n));
    labels.reserve(static_cast<std::size_t>(n));
  }

  void push(const Eigen::VectorXd& x, int label, const BackgroundRecord& rec) {
    X.col(next++) = x;
    labels.push_back(label);
    backgrounds.push_back(rec);
  }
};

SynthData two_domain_shift(int n, Rng& rng, bool conditional) {
  Builder b(2, 4 * static_cast<Eigen::Index>(n));
  const double noise = 0.45;
  const Eigen::Vector2d centers[2] = {{0.0, 0.0}, {2.0, 0.0}};
  // Covariate shift moves both classes the same way; the conditional variant
  // moves class 1 by less along the second axis, so the class boundary itself
  // differs between domains.
  const Eigen::Vector2d shifts[2] = {{2.0, 1.0}, conditional ? Eigen::Vector2d{2.0, 0.3}
                                                             : Eigen::Vector2d{2.0, 1.0}};
  for (int domain = 0; domain < 2; ++domain) {
    BackgroundRecord rec;
    rec.device = domain + 1;
    rec.batch = domain + 1;
    rec.time = domain;
    rec.role = domain == 0 ? Role::source_labeled : Role::target_test;
    for (int cls = 0; cls < 2; ++cls) {
      Eigen::Vector2d center = centers[cls];
      if (domain == 1) center += shifts[cls];
      for (int i = 0; i < n; ++i) {
        Eigen::Vector2d x = center + noise * Eigen::Vector2d{rng.normal(), rng.normal()};
        b.push(x, cls, rec);
      }
    }
  }
  return {std::move(b.X), std::move(b.backgrounds), std::move(b.labels)};
}

SynthData continuous_drift(int n, Rng& rng) {
  const int steps = 2 * n;  // first half source, second half target
  Builder b(2, 4 * static_cast<Eigen::Index>(n));
  const double noise = 0.35;
  const Eigen::Vector2d class_offset{1.5, 0.0};
  const Eigen::Vector2d drift{4.0, 1.0};
  int chrono = 0;
  for (int t = 0; t < steps; ++t) {
    const double progress = static_cast<double>(t) / static_cast<double>(steps - 1);
    for (int cls = 0; cls < 2; ++cls) {
      Eigen::Vector2d center = progress * drift;
      if (cls == 1) center += class_offset;
      Eigen::Vector2d x = center + noise * Eigen::Vector2d{rng.normal(), rng.normal()};
      BackgroundRecord rec;
      rec.device = 1;
      rec.batch = ++chrono;  // chronological index doubles as the domain feature
      rec.time = chrono;
      rec.role = t < n ? Role::source_labeled : Role::target_test;
      b.push(x, cls, rec);
    }
  }
  return {std::move(b.X), std::move(b.backgrounds), std::move(b.labels)};
}

SynthData label_mixing_3d(int n, Rng& rng) {
  Builder b(3, 4 * static_cast<Eigen::Index>(n));
  const double class_sep = 1.7;   // along the third axis
  const double domain_shift = 1.5;  // along the same axis
  const double noise_plane = 1.0;
  const double noise_axis = 0.25;
  for (int domain = 0; domain < 2; ++domain) {
    BackgroundRecord rec;
    rec.device = domain + 1;
    rec.batch = domain + 1;
    rec.time = domain;
    rec.role = domain == 0 ? Role::source_labeled : Role::target_test;
    for (int cls = 0; cls < 2; ++cls) {
      for (int i = 0; i < n; ++i) {
        Eigen::Vector3d x;
        x(0) = noise_plane * rng.normal();
        x(1) = noise_plane * rng.normal();
        x(2) = cls * class_sep + domain * domain_shift + noise_axis * rng.normal();
        b.push(x, cls, rec);
      }
    }
  }
  return {std::move(b.X), std::move(b.backgrounds), std::move(b.labels)};
}

SynthData nonlinear_shift(int n, Rng& rng) {
  Builder b(2, 4 * static_cast<Eigen::Index>(n));
  // Target classes sit rotated about the origin relative to the source pair, so
  // no single translation aligns both classes; scaled so an rbf width of 10 is
  // in the useful range.
  const double noise = 1.6;
  const Eigen::Vector2d centers[2][2] = {
      {{0.0, 0.0}, {12.0, 0.0}},  // source class 0, 1
      {{2.0, 2.0}, {2.0, 12.0}},  // target class 0, 1
  };
  for (int domain = 0; domain < 2; ++domain) {
    BackgroundRecord rec;
    rec.device = domain + 1;
    rec.batch = domain + 1;
    rec.time = domain;
    rec.role = domain == 0 ? Role::source_labeled : Role::target_test;
    for (int cls = 0; cls < 2; ++cls) {
      for (int i = 0; i < n; ++i) {
        Eigen::Vector2d x =
            centers[domain][cls] + noise * Eigen::Vector2d{rng.normal(), rng.normal()};
        b.push(x, cls, rec);
      }
    }
  }
  return {std::move(b.X), std::move(b.backgrounds), std::move(b.labels)};
}

}  // namespace

SynthData generate(const SynthScenario& scenario) {
  if (scenario.n_per_class_per_domain < 10)
    throw std::invalid_argument("generate: need at least 10 samples per class per domain");
  if (scenario.conditional_shift && scenario.kind != ScenarioKind::two_domain_shift)
    throw std::invalid_argument("generate: conditional_shift only applies to two-domain-shift");
  Rng rng(scenario.seed);
  const int n = scenario.n_per_class_per_domain;
  switch (scenario.kind) {
    case ScenarioKind::two_domain_shift:
      return two_domain_shift(n, rng, scenario.conditional_shift);
    case ScenarioKind::continuous_drift: return continuous_drift(n, rng);
    case ScenarioKind::label_mixing_3d: return label_mixing_3d(n, rng);
    case ScenarioKind::nonlinear_shift: return nonlinear_shift(n, rng);
  }
  throw std::invalid_argument("unknown scenario");
}

}  // namespace mida
