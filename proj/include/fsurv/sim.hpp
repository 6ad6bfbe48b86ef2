#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsurv/rng.hpp"
#include "fsurv/types.hpp"

namespace fsurv {

// Two synthetic designs: trig mixtures on [0,180] (A) and a linear trend with
// an optional sine offset on [0,100] (B).  Group 1 holds the events.
struct SimConfig {
  char scenario = 'A';
  std::size_t n = 200;
  double event_fraction = 0.40;
  std::uint64_t seed = 1;

  // Scenario A coefficient regimes: group 1 draws both trig coefficients from
  // [1,20]; group 2 mixes two regimes selected by a Bernoulli(mix_prob) flag.
  double group1_lo = 1.0, group1_hi = 20.0;
  double mix_prob = 0.60;
  double regime0_lo = 15.0, regime0_hi = 30.0;  // flag = 0
  double regime1_lo = 10.0, regime1_hi = 30.0;  // flag = 1

  // Scenario B trend and sine offset.
  double slope = 4.0;
  double amplitude = 12.0;
  double rate = 0.7;
  double theta_lo = 0.10, theta_hi = 0.45;

  double gp_scale = 12.0;
  double gp_rate = 0.5;
  double obs_noise_variance = 18.0;
  std::size_t grid_points = 0;  // 0 = scenario default (A: 60, B: 40)
  double keep_probability = 0.5;

  Interval window() const { return scenario == 'A' ? Interval{0.0, 180.0} : Interval{0.0, 100.0}; }
  std::size_t grid_size() const {
    return grid_points ? grid_points : (scenario == 'A' ? 60 : 40);
  }
};

// Ground truth kept alongside the dataset: per-subject group labels and the
// noise-free trajectories (design curve plus Gaussian-process wiggle) on the
// global grid, so observation residuals are pure measurement noise.
struct SimTruth {
  char scenario = 'A';
  std::uint64_t seed = 0;
  Interval window;
  std::vector<double> grid;
  std::vector<std::string> ids;
  std::vector<int> group;  // 1 = event, 2 = censored
  std::vector<std::vector<double>> trajectories;
};

struct SimResult {
  MixedSurvivalDataset data;
  SimTruth truth;
};

SimResult simulate(const SimConfig& config);

// Zero-mean draw with covariance scale * exp(-rate * |t_a - t_b|), via the
// symmetric square root with eigenvalues floored at 1e-10.
std::vector<double> gp_noise(const std::vector<double>& times, double scale, double rate,
                             Rng& rng);

// Two Bernoulli(0.5) columns followed by two standard normal columns.
std::vector<std::vector<double>> scalar_covariates(std::size_t n, Rng& rng);

std::string truth_to_json(const SimTruth& truth);
SimTruth truth_from_json(const std::string& text);

}  // namespace fsurv
