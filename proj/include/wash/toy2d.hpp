// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two points descending a 2D landscape made of exponential wells, trained
// independently, with an EMA pull toward their mean, or with per-coordinate
// shuffling.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace wash::toy2d {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Term -amplitude * g(x, y, center, sharpness).
struct Well {
  Point center;
  double amplitude = 0.0;
  double sharpness = 0.0;
};

struct Landscape {
  std::vector<Well> wells;
};

/// Global well at (10, 10), local wells at (8, 3) and (3, 8).
Landscape default_landscape();

/// exp(-lambda * sqrt(0.5 ((x - xm)^2 + (y - ym)^2)))
double g(double x, double y, double xm, double ym, double lambda);

double f(const Landscape& land, double x, double y);
double f(double x, double y);

/// Analytic gradient. A well is not differentiable at its center; there the
/// minimum-norm subgradient is returned, which is (0, 0) at each minimum of
/// the default landscape.
Point grad_f(const Landscape& land, double x, double y);
Point grad_f(double x, double y);

enum class Strategy { kNone, kPapa, kWash };
std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

enum class Basin { kGlobal, kLocalA, kLocalB, kNone };
std::string to_string(Basin b);

/// Nearest well center within radius 1 of the default landscape:
/// global (10, 10), local_A (3, 8), local_B (8, 3).
Basin classify_endpoint(Point p);

struct ToyConfig {
  Strategy strategy = Strategy::kNone;
  std::uint64_t seed = 0;
  std::size_t steps = 1000;
  double lr = 0.1;
  double noise_sigma = 0.2;
  /// EMA retention for papa.
  double alpha = 0.99;
  /// Steps between EMA applications.
  std::size_t papa_period = 1;
  /// Per-coordinate selection probability for wash.
  double shuffle_p = 0.01;
  /// When set, a selected coordinate is always swapped; otherwise it gets a
  /// uniform permutation of the two points (identity half of the time).
  bool swap_on_select = false;
  std::array<Point, 2> start = {Point{0.0, 5.0}, Point{5.0, 0.0}};
  /// Exchanges the x and y components of every noise draw and shuffle
  /// decision, for mirror-symmetry checks.
  bool mirror_streams = false;
  Landscape landscape = default_landscape();
};

struct ToyResult {
  /// positions[t][k]: point k after t steps; positions[0] is the start.
  std::vector<std::array<Point, 2>> positions;
  std::array<Basin, 2> endpoints{};
  /// Number of coordinate swaps that exchanged values.
  std::size_t swaps = 0;
};

ToyResult run_toy(const ToyConfig& cfg);

/// CSV with header `step,point_id,x,y`.
void write_trajectory_csv(std::ostream& out, const ToyResult& result);

}  // namespace wash::toy2d
