#pragma once

#include <map>
#include <utility>
#include <vector>

#include "efm/schema.hpp"

namespace efm {

// Selected attribute subset and interaction subset. The interacting attribute
// set is derived from the interactions.
struct FeatureConfig {
  std::vector<int> attributes;                   // ascending attribute indices
  std::vector<std::pair<int, int>> interactions; // ascending pairs, first < second

  std::vector<int> interacting_attributes() const;
  bool has_attribute(int c) const;
  bool has_interaction(std::pair<int, int> pair) const;
  void validate(const AttributeSchema& schema) const;

  bool empty() const { return attributes.empty() && interactions.empty(); }
};

// Model coefficients. beta is defined for the selected attributes, mu for the
// attributes that appear in a selected interaction; every mu row has length f.
struct ParameterSet {
  double beta0 = 0.0;
  int f = 0;
  std::map<int, std::vector<double>> beta;
  std::map<int, std::vector<std::vector<double>>> mu;

  std::size_t scalar_count() const;
};

struct ParamRef {
  enum class Kind { beta0, beta, mu };
  Kind kind = Kind::beta0;
  int attr = -1;
  int level = -1;
  int factor = -1;

  friend auto operator<=>(const ParamRef&, const ParamRef&) = default;
};

std::vector<ParamRef> enumerate_params(const ParameterSet& params);
double get_param(const ParameterSet& params, const ParamRef& ref);
void set_param(ParameterSet& params, const ParamRef& ref, double value);

// Zero-initialized coefficients for a feature configuration.
ParameterSet zero_parameters(const AttributeSchema& schema, const FeatureConfig& features, int f);

// Writes the forecast as exp(theta * h + g); h and g do not depend on theta.
struct LinearDecomposition {
  double h = 0.0;
  double g = 0.0;
};

// Linear factorization-machine score: beta0 + sum of active betas + sum of
// factor dot products over selected interactions. Only inter-attribute
// interactions contribute; two levels of one attribute never pair.
double linear_score(const ParameterSet& params, const FeatureConfig& features,
                    const Observation& obs);

// exp(score) with the exponent clamped to +-500; always positive.
double forecast(const ParameterSet& params, const FeatureConfig& features,
                const Observation& obs);

// The un-exponentiated model used by the log-transform mode.
double logfm_forecast(const ParameterSet& params, const FeatureConfig& features,
                      const Observation& obs);

LinearDecomposition decompose(const ParameterSet& params, const FeatureConfig& features,
                              const Observation& obs, const ParamRef& ref);

// Number of forecasts whose exponent hit the clamp since the last reset.
long exponent_clamp_count();
void reset_exponent_clamp_count();

}  // namespace efm
