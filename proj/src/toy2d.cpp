// Copyright 2026 The washsim Authors
// SPDX-License-Identifier: Apache-2.0

#include "wash/toy2d.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <ostream>

#include "wash/artifacts.hpp"
#include "wash/error.hpp"
#include "wash/rng.hpp"

namespace wash::toy2d {

Landscape default_landscape() {
  return {{
      {{10.0, 10.0}, 10.0, 0.1},
      {{8.0, 3.0}, 5.0, 0.3},
      {{3.0, 8.0}, 5.0, 0.3},
  }};
}

namespace {

// Summing in sorted order makes the result independent of well order, so
// mirrored landscapes give bitwise-mirrored gradients.
double sorted_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace

double g(double x, double y, double xm, double ym, double lambda) {
  const double dx = x - xm;
  const double dy = y - ym;
  return std::exp(-lambda * std::sqrt(0.5 * (dx * dx + dy * dy)));
}

double f(const Landscape& land, double x, double y) {
  std::vector<double> terms;
  for (const auto& w : land.wells) {
    terms.push_back(-w.amplitude * g(x, y, w.center.x, w.center.y, w.sharpness));
  }
  return sorted_sum(terms);
}

double f(double x, double y) { return f(default_landscape(), x, y); }

Point grad_f(const Landscape& land, double x, double y) {
  // d/dx [-a exp(-l r)] = a l exp(-l r) dr/dx,  r = sqrt(0.5 s),
  // dr/dx = 0.5 dx / r.
  std::vector<double> gx, gy;
  const Well* cusp = nullptr;
  for (const auto& w : land.wells) {
    const double dx = x - w.center.x;
    const double dy = y - w.center.y;
    const double r = std::sqrt(0.5 * (dx * dx + dy * dy));
    if (r == 0.0) {
      cusp = &w;
      continue;
    }
    const double scale =
        w.amplitude * w.sharpness * std::exp(-w.sharpness * r) * 0.5 / r;
    gx.push_back(scale * dx);
    gy.push_back(scale * dy);
  }
  Point grad{sorted_sum(gx), sorted_sum(gy)};
  if (cusp != nullptr) {
    // The cusp's subdifferential is a disc of this radius around the rest;
    // return its minimum-norm element.
    const double radius =
        cusp->amplitude * cusp->sharpness * std::sqrt(0.5);
    const double norm = std::hypot(grad.x, grad.y);
    const double keep = norm > radius ? (norm - radius) / norm : 0.0;
    grad.x *= keep;
    grad.y *= keep;
  }
  return grad;
}

Point grad_f(double x, double y) { return grad_f(default_landscape(), x, y); }

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kPapa: return "papa";
    case Strategy::kWash: return "wash";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::kNone, Strategy::kPapa, Strategy::kWash}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown toy strategy '" + name + "'");
}

std::string to_string(Basin b) {
  switch (b) {
    case Basin::kGlobal: return "global";
    case Basin::kLocalA: return "local_A";
    case Basin::kLocalB: return "local_B";
    case Basin::kNone: return "none";
  }
  return "?";
}

Basin classify_endpoint(Point p) {
  struct Center {
    Point at;
    Basin basin;
  };
  constexpr Center centers[] = {{{10.0, 10.0}, Basin::kGlobal},
                                {{3.0, 8.0}, Basin::kLocalA},
                                {{8.0, 3.0}, Basin::kLocalB}};
  Basin best = Basin::kNone;
  double best_dist = 1.0;
  for (const auto& c : centers) {
    const double dist = std::hypot(p.x - c.at.x, p.y - c.at.y);
    if (dist <= best_dist) {
      best = c.basin;
      best_dist = dist;
    }
  }
  return best;
}

namespace {

double& component(Point& p, int axis) { return axis == 0 ? p.x : p.y; }

}  // namespace

ToyResult run_toy(const ToyConfig& cfg) {
  ToyResult result;
  result.positions.reserve(cfg.steps + 1);
  std::array<Point, 2> pts = cfg.start;
  result.positions.push_back(pts);

  for (std::size_t t = 0; t < cfg.steps; ++t) {
    for (std::uint32_t k = 0; k < 2; ++k) {
      CounterRng noise(cfg.seed, Purpose::kToyNoise, t, k);
      double nx = noise.normal();
      double ny = noise.normal();
      if (cfg.mirror_streams) std::swap(nx, ny);
      const Point grad = grad_f(cfg.landscape, pts[k].x, pts[k].y);
      pts[k].x -= cfg.lr * (grad.x + cfg.noise_sigma * nx);
      pts[k].y -= cfg.lr * (grad.y + cfg.noise_sigma * ny);
    }

    if (cfg.strategy == Strategy::kPapa) {
      if (cfg.papa_period > 0 && (t + 1) % cfg.papa_period == 0) {
        const Point mean{0.5 * (pts[0].x + pts[1].x),
                         0.5 * (pts[0].y + pts[1].y)};
        for (auto& p : pts) {
          p.x = cfg.alpha * p.x + (1.0 - cfg.alpha) * mean.x;
          p.y = cfg.alpha * p.y + (1.0 - cfg.alpha) * mean.y;
        }
      }
    } else if (cfg.strategy == Strategy::kWash) {
      for (int axis = 0; axis < 2; ++axis) {
        const int stream_axis = cfg.mirror_streams ? 1 - axis : axis;
        CounterRng rng(cfg.seed, Purpose::kToyShuffle, t,
                       static_cast<std::uint32_t>(stream_axis));
        if (!rng.bernoulli(cfg.shuffle_p)) continue;
        // A uniform permutation of two points swaps with probability 1/2.
        const bool swap = cfg.swap_on_select || rng.below(2) == 1;
        if (swap) {
          std::swap(component(pts[0], axis), component(pts[1], axis));
          ++result.swaps;
        }
      }
    }
    result.positions.push_back(pts);
  }
  result.endpoints = {classify_endpoint(pts[0]), classify_endpoint(pts[1])};
  return result;
}

void write_trajectory_csv(std::ostream& out, const ToyResult& result) {
  out << "step,point_id,x,y\n";
  for (std::size_t t = 0; t < result.positions.size(); ++t) {
    for (std::size_t k = 0; k < 2; ++k) {
      out << t << ',' << k << ',' << format_double(result.positions[t][k].x)
          << ',' << format_double(result.positions[t][k].y) << '\n';
    }
  }
}

}  // namespace wash::toy2d
