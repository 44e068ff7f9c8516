#pragma once

#include <string>
#include <vector>

#include "exom/scm_io.hpp"

namespace exom {

// Built-in SCM collection. The named graph shapes follow the usual benchmark
// families: -LIN entries are linear-Gaussian, -NLIN entries use smooth
// tanh/softplus mechanisms, the semi-Markovian entries (M, NAPKIN, BACK-DOOR,
// FRONT-DOOR) express confounding through shared exogenous parents, and the
// FAIRNESS variants are binary SCMs whose mechanisms select a response
// function by a categorical exogenous index (with a shared selector for the
// -XW/-XY/-YW confounded pairs). All entries are written in the declarative
// JSON format, so `zoo show NAME` prints a spec that `build_scm` round-trips.

struct ZooEntry {
  std::string name;
  std::string json_text;
};

inline const std::vector<ZooEntry>& zoo_entries() {
  static const std::vector<ZooEntry> entries = {
      {"CHAIN-LIN-3", R"json({
  "name": "CHAIN-LIN-3",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "0.7 * V1 + 0.5 * U2"},
    {"target": "V3", "expr": "0.7 * V2 + 0.5 * U3"}
  ]
})json"},
      {"CHAIN-NLIN-3", R"json({
  "name": "CHAIN-NLIN-3",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "tanh(V1) + 0.5 * U2"},
    {"target": "V3", "expr": "softplus(V2) - 1 + 0.5 * U3"}
  ]
})json"},
      {"CHAIN-LIN-4", R"json({
  "name": "CHAIN-LIN-4",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "0.7 * V1 + 0.5 * U2"},
    {"target": "V3", "expr": "0.7 * V2 + 0.5 * U3"},
    {"target": "V4", "expr": "0.7 * V3 + 0.5 * U4"}
  ]
})json"},
      {"CHAIN-LIN-5", R"json({
  "name": "CHAIN-LIN-5",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"},
    {"name": "V5", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U5", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "0.7 * V1 + 0.5 * U2"},
    {"target": "V3", "expr": "0.7 * V2 + 0.5 * U3"},
    {"target": "V4", "expr": "0.7 * V3 + 0.5 * U4"},
    {"target": "V5", "expr": "0.7 * V4 + 0.5 * U5"}
  ]
})json"},
      {"COLLIDER-LIN", R"json({
  "name": "COLLIDER-LIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "U2"},
    {"target": "V3", "expr": "0.6 * V1 + 0.6 * V2 + 0.4 * U3"}
  ]
})json"},
      {"FORK-LIN", R"json({
  "name": "FORK-LIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "0.8 * V1 + 0.5 * U2"},
    {"target": "V3", "expr": "0.8 * V1 + 0.5 * U3"},
    {"target": "V4", "expr": "0.5 * V2 + 0.5 * V3 + 0.4 * U4"}
  ]
})json"},
      {"FORK-NLIN", R"json({
  "name": "FORK-NLIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "tanh(V1) + 0.5 * U2"},
    {"target": "V3", "expr": "softplus(V1) - 1 + 0.5 * U3"},
    {"target": "V4", "expr": "tanh(V2 + V3) + 0.4 * U4"}
  ]
})json"},
      {"TRIANGLE-LIN", R"json({
  "name": "TRIANGLE-LIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1 + 1"},
    {"target": "V2", "expr": "0.7 * V1 + 0.5 * U2"},
    {"target": "V3", "expr": "0.5 * V1 + 0.5 * V2 + 0.4 * U3"}
  ]
})json"},
      {"TRIANGLE-NLIN", R"json({
  "name": "TRIANGLE-NLIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1 + 1"},
    {"target": "V2", "expr": "softplus(V1) - 1 + 0.5 * U2"},
    {"target": "V3", "expr": "tanh(V1) + 0.3 * V2 + 0.4 * U3"}
  ]
})json"},
      {"SIMPSON-NLIN", R"json({
  "name": "SIMPSON-NLIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "softplus(1 - V1) - 1 + 0.5 * U2"},
    {"target": "V3", "expr": "tanh(2 * V2) + 0.8 * V1 + 0.3 * U3"},
    {"target": "V4", "expr": "tanh(V3) + 0.3 * U4"}
  ]
})json"},
      {"LARGEBD-NLIN", R"json({
  "name": "LARGEBD-NLIN",
  "variables": [
    {"name": "V1", "domain": "continuous"},
    {"name": "V2", "domain": "continuous"},
    {"name": "V3", "domain": "continuous"},
    {"name": "V4", "domain": "continuous"},
    {"name": "V5", "domain": "continuous"},
    {"name": "V6", "domain": "continuous"},
    {"name": "V7", "domain": "continuous"},
    {"name": "V8", "domain": "continuous"},
    {"name": "V9", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U2", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U3", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U4", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U5", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U6", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U7", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U8", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "U9", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"},
    {"target": "V2", "expr": "tanh(V1) + 0.5 * U2"},
    {"target": "V3", "expr": "tanh(V2) + 0.5 * U3"},
    {"target": "V4", "expr": "tanh(V3) + 0.5 * U4"},
    {"target": "V5", "expr": "softplus(V1) - 1 + 0.5 * U5"},
    {"target": "V6", "expr": "tanh(V5) + 0.5 * U6"},
    {"target": "V7", "expr": "tanh(V6) + 0.5 * U7"},
    {"target": "V8", "expr": "tanh(0.7 * V4 + 0.7 * V7) + 0.4 * U8"},
    {"target": "V9", "expr": "tanh(V8) + 0.3 * V4 + 0.3 * V7 + 0.4 * U9"}
  ]
})json"},
      {"M", R"json({
  "name": "M",
  "variables": [
    {"name": "X", "domain": "continuous"},
    {"name": "W", "domain": "continuous"},
    {"name": "Y", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "Uxw", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uwy", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Ux", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uw", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uy", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "X", "expr": "tanh(Uxw) + 0.5 * Ux"},
    {"target": "W", "expr": "0.6 * Uxw + 0.6 * Uwy + 0.4 * Uw"},
    {"target": "Y", "expr": "softplus(X) - 1 + 0.6 * Uwy + 0.4 * Uy"}
  ]
})json"},
      {"NAPKIN", R"json({
  "name": "NAPKIN",
  "variables": [
    {"name": "W", "domain": "continuous"},
    {"name": "R", "domain": "continuous"},
    {"name": "X", "domain": "continuous"},
    {"name": "Y", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "Uwx", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uwy", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uw", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Ur", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Ux", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uy", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "W", "expr": "0.6 * Uwx + 0.6 * Uwy + 0.4 * Uw"},
    {"target": "R", "expr": "tanh(W) + 0.5 * Ur"},
    {"target": "X", "expr": "softplus(R) - 1 + 0.6 * Uwx + 0.4 * Ux"},
    {"target": "Y", "expr": "tanh(X) + 0.6 * Uwy + 0.4 * Uy"}
  ]
})json"},
      {"BACK-DOOR", R"json({
  "name": "BACK-DOOR",
  "variables": [
    {"name": "Z", "domain": "continuous"},
    {"name": "X", "domain": "continuous"},
    {"name": "Y", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "Uzx", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uz", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Ux", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uy", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "Z", "expr": "0.7 * Uzx + 0.5 * Uz"},
    {"target": "X", "expr": "tanh(Z) + 0.7 * Uzx + 0.4 * Ux"},
    {"target": "Y", "expr": "softplus(X) - 1 + 0.5 * Z + 0.4 * Uy"}
  ]
})json"},
      {"FRONT-DOOR", R"json({
  "name": "FRONT-DOOR",
  "variables": [
    {"name": "X", "domain": "continuous"},
    {"name": "M", "domain": "continuous"},
    {"name": "Y", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "Uxy", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Ux", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Um", "marginal": {"type": "normal", "mean": 0, "sd": 1}},
    {"name": "Uy", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "X", "expr": "0.7 * Uxy + 0.5 * Ux"},
    {"target": "M", "expr": "tanh(X) + 0.4 * Um"},
    {"target": "Y", "expr": "softplus(M) - 1 + 0.6 * Uxy + 0.3 * Uy"}
  ]
})json"},
      {"FAIRNESS", R"json({
  "name": "FAIRNESS",
  "variables": [
    {"name": "Z", "domain": {"discrete": 2}},
    {"name": "X", "domain": {"discrete": 2}},
    {"name": "W", "domain": {"discrete": 2}},
    {"name": "Y", "domain": {"discrete": 2}}
  ],
  "exogenous": [
    {"name": "Uz", "marginal": {"type": "categorical", "weights": [0.35, 0.25, 0.25, 0.15]}},
    {"name": "Ux", "marginal": {"type": "categorical", "weights": [0.3, 0.2, 0.3, 0.2]}},
    {"name": "Uw", "marginal": {"type": "categorical", "weights": [0.25, 0.25, 0.3, 0.2]}},
    {"name": "Uy", "marginal": {"type": "categorical", "weights": [0.3, 0.3, 0.25, 0.15]}}
  ],
  "mechanisms": [
    {"target": "Z", "expr": "indicator(Uz - 1.5)"},
    {"target": "X", "expr": "cond(0.25 - Ux * Ux, 0, cond(0.25 - (Ux - 1) * (Ux - 1), 1, cond(0.25 - (Ux - 2) * (Ux - 2), Z, 1 - Z)))"},
    {"target": "W", "expr": "cond(0.25 - Uw * Uw, 0, cond(0.25 - (Uw - 1) * (Uw - 1), 1, cond(0.25 - (Uw - 2) * (Uw - 2), X, 1 - X)))"},
    {"target": "Y", "expr": "cond(0.25 - Uy * Uy, X + W - 2 * X * W, cond(0.25 - (Uy - 1) * (Uy - 1), Z, cond(0.25 - (Uy - 2) * (Uy - 2), indicator(Z + X + W - 1.5), X)))"}
  ],
  "defaults": {"treatment": "X", "outcome": "Y"}
})json"},
      {"FAIRNESS-XW", R"json({
  "name": "FAIRNESS-XW",
  "variables": [
    {"name": "Z", "domain": {"discrete": 2}},
    {"name": "X", "domain": {"discrete": 2}},
    {"name": "W", "domain": {"discrete": 2}},
    {"name": "Y", "domain": {"discrete": 2}}
  ],
  "exogenous": [
    {"name": "Uz", "marginal": {"type": "categorical", "weights": [0.35, 0.25, 0.25, 0.15]}},
    {"name": "Uc", "marginal": {"type": "categorical", "weights": [0.3, 0.2, 0.3, 0.2]}},
    {"name": "Ux", "marginal": {"type": "categorical", "weights": [0.4, 0.3, 0.2, 0.1]}},
    {"name": "Uw", "marginal": {"type": "categorical", "weights": [0.35, 0.3, 0.2, 0.15]}},
    {"name": "Uy", "marginal": {"type": "categorical", "weights": [0.3, 0.3, 0.25, 0.15]}}
  ],
  "mechanisms": [
    {"target": "Z", "expr": "indicator(Uz - 1.5)"},
    {"target": "X", "expr": "cond(indicator(Ux - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, 0, cond(0.25 - (Uc - 1) * (Uc - 1), 1, cond(0.25 - (Uc - 2) * (Uc - 2), Z, 1 - Z))), cond(0.25 - Uc * Uc, 0, cond(0.25 - (Uc - 1) * (Uc - 1), 1, cond(0.25 - (Uc - 2) * (Uc - 2), Z, 1 - Z))))"},
    {"target": "W", "expr": "cond(indicator(Uw - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, 1, cond(0.25 - (Uc - 1) * (Uc - 1), 0, cond(0.25 - (Uc - 2) * (Uc - 2), X, 1 - X))), cond(0.25 - Uc * Uc, 1, cond(0.25 - (Uc - 1) * (Uc - 1), 0, cond(0.25 - (Uc - 2) * (Uc - 2), X, 1 - X))))"},
    {"target": "Y", "expr": "cond(0.25 - Uy * Uy, X + W - 2 * X * W, cond(0.25 - (Uy - 1) * (Uy - 1), Z, cond(0.25 - (Uy - 2) * (Uy - 2), indicator(Z + X + W - 1.5), X)))"}
  ],
  "defaults": {"treatment": "X", "outcome": "Y"}
})json"},
      {"FAIRNESS-XY", R"json({
  "name": "FAIRNESS-XY",
  "variables": [
    {"name": "Z", "domain": {"discrete": 2}},
    {"name": "X", "domain": {"discrete": 2}},
    {"name": "W", "domain": {"discrete": 2}},
    {"name": "Y", "domain": {"discrete": 2}}
  ],
  "exogenous": [
    {"name": "Uz", "marginal": {"type": "categorical", "weights": [0.35, 0.25, 0.25, 0.15]}},
    {"name": "Uc", "marginal": {"type": "categorical", "weights": [0.3, 0.2, 0.3, 0.2]}},
    {"name": "Ux", "marginal": {"type": "categorical", "weights": [0.4, 0.3, 0.2, 0.1]}},
    {"name": "Uw", "marginal": {"type": "categorical", "weights": [0.25, 0.25, 0.3, 0.2]}},
    {"name": "Uy", "marginal": {"type": "categorical", "weights": [0.45, 0.3, 0.15, 0.1]}}
  ],
  "mechanisms": [
    {"target": "Z", "expr": "indicator(Uz - 1.5)"},
    {"target": "X", "expr": "cond(indicator(Ux - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, 0, cond(0.25 - (Uc - 1) * (Uc - 1), 1, cond(0.25 - (Uc - 2) * (Uc - 2), Z, 1 - Z))), cond(0.25 - Uc * Uc, 0, cond(0.25 - (Uc - 1) * (Uc - 1), 1, cond(0.25 - (Uc - 2) * (Uc - 2), Z, 1 - Z))))"},
    {"target": "W", "expr": "cond(0.25 - Uw * Uw, 0, cond(0.25 - (Uw - 1) * (Uw - 1), 1, cond(0.25 - (Uw - 2) * (Uw - 2), X, 1 - X)))"},
    {"target": "Y", "expr": "cond(indicator(Uy - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, X + W - 2 * X * W, cond(0.25 - (Uc - 1) * (Uc - 1), Z, cond(0.25 - (Uc - 2) * (Uc - 2), indicator(Z + X + W - 1.5), X))), cond(0.25 - Uc * Uc, X + W - 2 * X * W, cond(0.25 - (Uc - 1) * (Uc - 1), Z, cond(0.25 - (Uc - 2) * (Uc - 2), indicator(Z + X + W - 1.5), X))))"}
  ],
  "defaults": {"treatment": "X", "outcome": "Y"}
})json"},
      {"FAIRNESS-YW", R"json({
  "name": "FAIRNESS-YW",
  "variables": [
    {"name": "Z", "domain": {"discrete": 2}},
    {"name": "X", "domain": {"discrete": 2}},
    {"name": "W", "domain": {"discrete": 2}},
    {"name": "Y", "domain": {"discrete": 2}}
  ],
  "exogenous": [
    {"name": "Uz", "marginal": {"type": "categorical", "weights": [0.35, 0.25, 0.25, 0.15]}},
    {"name": "Uc", "marginal": {"type": "categorical", "weights": [0.3, 0.2, 0.3, 0.2]}},
    {"name": "Ux", "marginal": {"type": "categorical", "weights": [0.3, 0.2, 0.3, 0.2]}},
    {"name": "Uw", "marginal": {"type": "categorical", "weights": [0.4, 0.3, 0.2, 0.1]}},
    {"name": "Uy", "marginal": {"type": "categorical", "weights": [0.45, 0.3, 0.15, 0.1]}}
  ],
  "mechanisms": [
    {"target": "Z", "expr": "indicator(Uz - 1.5)"},
    {"target": "X", "expr": "cond(0.25 - Ux * Ux, 0, cond(0.25 - (Ux - 1) * (Ux - 1), 1, cond(0.25 - (Ux - 2) * (Ux - 2), Z, 1 - Z)))"},
    {"target": "W", "expr": "cond(indicator(Uw - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, 1, cond(0.25 - (Uc - 1) * (Uc - 1), 0, cond(0.25 - (Uc - 2) * (Uc - 2), X, 1 - X))), cond(0.25 - Uc * Uc, 1, cond(0.25 - (Uc - 1) * (Uc - 1), 0, cond(0.25 - (Uc - 2) * (Uc - 2), X, 1 - X))))"},
    {"target": "Y", "expr": "cond(indicator(Uy - 2.5) - 0.5, 1 - cond(0.25 - Uc * Uc, X + W - 2 * X * W, cond(0.25 - (Uc - 1) * (Uc - 1), Z, cond(0.25 - (Uc - 2) * (Uc - 2), indicator(Z + X + W - 1.5), X))), cond(0.25 - Uc * Uc, X + W - 2 * X * W, cond(0.25 - (Uc - 1) * (Uc - 1), Z, cond(0.25 - (Uc - 2) * (Uc - 2), indicator(Z + X + W - 1.5), X))))"}
  ],
  "defaults": {"treatment": "X", "outcome": "Y"}
})json"},
      {"GAUSSIAN-1D", R"json({
  "name": "GAUSSIAN-1D",
  "variables": [
    {"name": "V1", "domain": "continuous"}
  ],
  "exogenous": [
    {"name": "U1", "marginal": {"type": "normal", "mean": 0, "sd": 1}}
  ],
  "mechanisms": [
    {"target": "V1", "expr": "U1"}
  ]
})json"},
  };
  return entries;
}

inline std::vector<std::string> zoo_names() {
  std::vector<std::string> names;
  for (const auto& e : zoo_entries()) names.push_back(e.name);
  return names;
}

inline std::string canonical_zoo_name(const std::string& name) {
  std::string upper;
  for (char c : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return upper;
}

inline const ZooEntry& zoo_entry(const std::string& name) {
  const std::string canonical = canonical_zoo_name(name);
  for (const auto& e : zoo_entries()) {
    if (e.name == canonical) return e;
  }
  throw UnknownVariableError("no such zoo SCM: " + name);
}

inline Scm load_zoo_scm(const std::string& name, QueryDefaults* defaults = nullptr) {
  return load_scm_json(zoo_entry(name).json_text, defaults);
}

inline std::uint64_t zoo_version_hash() {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& e : zoo_entries()) h = fnv1a(e.json_text, h);
  return h;
}

}  // namespace exom
