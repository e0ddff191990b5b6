#pragma once

// Tiny probe fixtures and a straight-line reference forward pass.

#include "apz/classifier.hpp"

#include <vector>

namespace apz::testing {

inline ProbeArchitecture tiny_arch() {
  ProbeArchitecture a;
  a.in_channels = 2;
  a.conv_channels = 2;
  a.hidden1 = 4;
  a.hidden2 = 4;
  return a;
}

inline ProbeExample random_example(Rng &rng, int channels, Label label = Label::Correct) {
  ProbeExample x;
  x.label = label;
  for (int i = 0; i < kProbePositions * channels; ++i) x.features.push_back(static_cast<float>(rng.normal()));
  return x;
}

inline ProbeModel random_model(const ProbeArchitecture &a, std::uint64_t seed) {
  ProbeModel m(a);
  Rng rng(seed);
  std::vector<double> p(a.parameter_count());
  for (auto &v : p) v = 0.6 * rng.normal();
  m.set_parameters(p);
  return m;
}

// Straight-line evaluation of the probe from its flat parameter vector.
inline double oracle_logit(const ProbeArchitecture &a, const std::vector<double> &p, const std::vector<float> &x) {
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    std::vector<double> out(p.begin() + static_cast<std::ptrdiff_t>(at), p.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
    return out;
  };
  const int ci = a.in_channels, co = a.conv_channels, k = a.kernel, pc = a.positions - a.kernel + 1;
  const auto cw = take(static_cast<std::size_t>(co * ci * k));
  const auto cb = take(static_cast<std::size_t>(co));
  const int flat = co * pc;
  const auto w1 = take(static_cast<std::size_t>(a.hidden1 * flat));
  const auto b1 = take(static_cast<std::size_t>(a.hidden1));
  const auto w2 = take(static_cast<std::size_t>(a.hidden2 * a.hidden1));
  const auto b2 = take(static_cast<std::size_t>(a.hidden2));
  const auto w3 = take(static_cast<std::size_t>(a.hidden2));
  const double b3 = take(1)[0];
  std::vector<double> f(static_cast<std::size_t>(flat));
  for (int o = 0; o < co; ++o) {
    for (int t = 0; t < pc; ++t) {
      double s = cb[static_cast<std::size_t>(o)];
      for (int c = 0; c < ci; ++c) {
        for (int j = 0; j < k; ++j) {
          s += cw[static_cast<std::size_t>((o * ci + c) * k + j)] * x[static_cast<std::size_t>((t + j) * ci + c)];
        }
      }
      f[static_cast<std::size_t>(o * pc + t)] = s > 0 ? s : 0;
    }
  }
  std::vector<double> h1(static_cast<std::size_t>(a.hidden1)), h2(static_cast<std::size_t>(a.hidden2));
  for (int i = 0; i < a.hidden1; ++i) {
    double s = b1[static_cast<std::size_t>(i)];
    for (int j = 0; j < flat; ++j) s += w1[static_cast<std::size_t>(i * flat + j)] * f[static_cast<std::size_t>(j)];
    h1[static_cast<std::size_t>(i)] = s > 0 ? s : 0;
  }
  for (int i = 0; i < a.hidden2; ++i) {
    double s = b2[static_cast<std::size_t>(i)];
    for (int j = 0; j < a.hidden1; ++j) {
      s += w2[static_cast<std::size_t>(i * a.hidden1 + j)] * h1[static_cast<std::size_t>(j)];
    }
    h2[static_cast<std::size_t>(i)] = s > 0 ? s : 0;
  }
  double s = b3;
  for (int j = 0; j < a.hidden2; ++j) s += w3[static_cast<std::size_t>(j)] * h2[static_cast<std::size_t>(j)];
  return s;
}

} // namespace apz::testing
