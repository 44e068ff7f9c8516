#pragma once

#include <algorithm>
#include <vector>

#include "exom/common.hpp"

namespace exom {

// One submodel's worth of counterfactual information: observed endogenous
// variables Y, intervened endogenous variables X and their values x.
struct CtfGroup {
  std::vector<int> observed;             // endogenous indices, sorted
  std::vector<int> intervened;           // endogenous indices, sorted
  std::vector<double> intervened_values; // aligned with intervened

  bool valid() const {
    for (int y : observed) {
      if (std::find(intervened.begin(), intervened.end(), y) != intervened.end()) return false;
    }
    return intervened.size() == intervened_values.size();
  }
};

// Counterfactual variables grouped by submodel.
struct CtfVariableSet {
  std::vector<CtfGroup> groups;

  int submodel_count() const { return static_cast<int>(groups.size()); }

  int flat_dim() const {
    int d = 0;
    for (const auto& g : groups) d += static_cast<int>(g.observed.size());
    return d;
  }

  void validate() const {
    if (groups.empty()) throw ConfigError("counterfactual variable set needs >= 1 submodel");
    for (const auto& g : groups) {
      if (!g.valid()) throw ConfigError("observed/intervened sets must be disjoint and aligned");
    }
  }
};

// One observed coordinate of a counterfactual event: an exact value (discrete
// variables) or a closed interval (one axis of a cube).
struct Region {
  bool point = true;
  double lo = 0.0;
  double hi = 0.0;

  static Region exact(double v) { return {true, v, v}; }
  static Region interval(double lo, double hi) { return {false, lo, hi}; }
  static Region cube_axis(double center, double side) {
    return {false, center - side / 2.0, center + side / 2.0};
  }

  bool contains(double v) const { return point ? v == lo : (v >= lo && v <= hi); }
  double center() const { return point ? lo : 0.5 * (lo + hi); }
};

// A measurable product subset of the joint domain of a counterfactual
// variable set.
struct CtfEvent {
  CtfVariableSet variables;
  std::vector<std::vector<Region>> regions;  // per group, per observed coordinate

  void validate() const {
    variables.validate();
    if (regions.size() != variables.groups.size())
      throw ConfigError("event region group count mismatch");
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (regions[i].size() != variables.groups[i].observed.size())
        throw ConfigError("event region width mismatch");
      for (const auto& r : regions[i]) {
        if (!r.point && !(r.hi > r.lo)) throw ConfigError("cube side length must be > 0");
      }
    }
  }

  // Representative conditioning point (cube centers / exact values), one list
  // per group.
  std::vector<std::vector<double>> centers() const {
    std::vector<std::vector<double>> out;
    for (const auto& group_regions : regions) {
      std::vector<double> row;
      for (const auto& r : group_regions) row.push_back(r.center());
      out.push_back(std::move(row));
    }
    return out;
  }
};

}  // namespace exom
