#pragma once

#include <stdexcept>

namespace aris {

// Nonlinear energy-harvesting transfer curve and its analytic inverse.
// All powers here are in mW; the fitted coefficients (a, b, c) are only
// meaningful on that scale.
class EhModel {
 public:
  EhModel(double a, double b, double c) : a_(a), b_(b), c_(c) {
    if (a <= 0.0 || b <= 0.0 || c <= 0.0)
      throw std::invalid_argument("EhModel: a, b, c must be positive");
    if (a <= b / c)
      throw std::invalid_argument("EhModel: requires a > b/c");
  }

  // Harvested power for a given linear input power, both mW.
  // Strictly increasing, 0 at 0, saturates below a - b/c.
  double harvest(double p_in_mw) const {
    if (p_in_mw < 0.0)
      throw std::domain_error("EhModel::harvest: negative input power");
    return (a_ * p_in_mw + b_) / (p_in_mw + c_) - b_ / c_;
  }

  // Inverse of harvest(): the input power needed to harvest e_mw.
  double required_input(double e_mw) const {
    if (e_mw < 0.0)
      throw std::domain_error("EhModel::required_input: negative target");
    if (e_mw >= saturation())
      throw std::domain_error(
          "EhModel::required_input: target at or above saturation level");
    if (e_mw == 0.0) return 0.0;
    const double s = e_mw + b_ / c_;
    return (b_ - s * c_) / (s - a_);
  }

  // Supremum of harvestable power, a - b/c (never attained).
  double saturation() const { return a_ - b_ / c_; }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }

 private:
  double a_, b_, c_;
};

}  // namespace aris
