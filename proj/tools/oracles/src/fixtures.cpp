#include "sosvi/oracles/fixtures.hpp"

#include <vector>

namespace sosvi::oracles {

std::filesystem::path data_dir() { return SOSVI_DATA_DIR; }

model::LogJointModel conjugate_fixture() {
  const auto ds = model::load_csv_dataset((data_dir() / "conjugate.csv").string(), false);
  const std::vector<double> x(ds.observations.data(), ds.observations.data() + ds.rows());
  return model::conjugate_gaussian(x, 0.0, 1.0, 1.0);
}

model::LogJointModel linreg_fixture() {
  const auto ds = model::load_csv_dataset((data_dir() / "linreg.csv").string(), true);
  return model::bayes_linreg(ds.observations, *ds.targets, 1.0, 1.0);
}

model::LogJointModel logreg_fixture() {
  const auto ds = model::load_csv_dataset((data_dir() / "logreg.csv").string(), true);
  return model::bayes_logreg(ds.observations, *ds.targets, 1.0);
}

}  // namespace sosvi::oracles
