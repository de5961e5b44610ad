#pragma once

// Reproducible i.i.d. noise for simulations.
//
// Each replicate draws from its own stream: the engine is seeded from the
// pair (base_seed, stream_id), so replicate r produces the same values no
// matter which thread runs it or in which order.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posir/core_stat.hpp"
#include "posir/error.hpp"
#include "posir/format.hpp"

namespace posir {

enum class NoiseFamily { gaussian, laplace, pareto_centered };

/// Noise family with its parameters. Laplace uses the scale parameterization
/// (density proportional to exp(-|x| / scale)); the centered Pareto is
/// Pareto(shape, xm) minus its mean xm * shape / (shape - 1).
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double sd = 1.0;     // gaussian
  double scale = 1.0;  // laplace
  double shape = 3.0;  // pareto_centered
  double xm = 1.0;     // pareto_centered

  static NoiseSpec gaussian(double sd = 1.0) { return checked({NoiseFamily::gaussian, sd, 1.0, 3.0, 1.0}); }
  static NoiseSpec laplace(double scale = 1.0) { return checked({NoiseFamily::laplace, 1.0, scale, 3.0, 1.0}); }
  static NoiseSpec pareto_centered(double shape, double xm = 1.0) {
    return checked({NoiseFamily::pareto_centered, 1.0, 1.0, shape, xm});
  }

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    switch (family) {
      case NoiseFamily::gaussian:
        if (!positive(sd)) fail(ErrorKind::usage, "gaussian sd must be > 0");
        break;
      case NoiseFamily::laplace:
        if (!positive(scale)) fail(ErrorKind::usage, "laplace scale must be > 0");
        break;
      case NoiseFamily::pareto_centered:
        if (!positive(xm)) fail(ErrorKind::usage, "pareto xm must be > 0");
        if (!(std::isfinite(shape) && shape > 1.0)) fail(ErrorKind::usage, "pareto shape must be > 1");
        break;
    }
  }

  /// Population mean of the un-centered Pareto variable.
  double pareto_mean() const { return xm * shape / (shape - 1.0); }

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;

 private:
  static NoiseSpec checked(NoiseSpec s) {
    s.validate();
    return s;
  }
};

inline std::string family_name(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::laplace: return "laplace";
    case NoiseFamily::pareto_centered: return "pareto";
  }
  return "?";
}

/// Parameters in the short text form, e.g. "sd=1" or "shape=2.1,xm=1".
inline std::string noise_params(const NoiseSpec& s) {
  switch (s.family) {
    case NoiseFamily::gaussian: return "sd=" + format_number(s.sd);
    case NoiseFamily::laplace: return "scale=" + format_number(s.scale);
    case NoiseFamily::pareto_centered: return "shape=" + format_number(s.shape) + ",xm=" + format_number(s.xm);
  }
  return {};
}

/// Short text form, e.g. "pareto:shape=2.1,xm=1".
inline std::string to_string(const NoiseSpec& s) { return family_name(s.family) + ":" + noise_params(s); }

/// Parses the short text form. Missing parameters keep their defaults
/// (sd = 1, scale = 1, xm = 1); a Pareto spec needs its shape.
inline NoiseSpec parse_noise_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string family(text.substr(0, colon));
  NoiseSpec s;
  bool have_shape = false;
  if (family == "gaussian" || family == "normal") {
    s.family = NoiseFamily::gaussian;
  } else if (family == "laplace") {
    s.family = NoiseFamily::laplace;
  } else if (family == "pareto" || family == "pareto_centered") {
    s.family = NoiseFamily::pareto_centered;
  } else {
    fail(ErrorKind::usage, "unknown noise family '" + family + "'");
  }
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) fail(ErrorKind::usage, "noise parameter without '=': " + std::string(item));
      const std::string key(item.substr(0, eq));
      const auto parsed = parse_number(item.substr(eq + 1));
      if (!parsed) fail(ErrorKind::usage, "bad noise parameter value: " + std::string(item));
      const double value = *parsed;
      if (s.family == NoiseFamily::gaussian && key == "sd") {
        s.sd = value;
      } else if (s.family == NoiseFamily::laplace && (key == "scale" || key == "lambda")) {
        s.scale = value;
      } else if (s.family == NoiseFamily::pareto_centered && key == "shape") {
        s.shape = value;
        have_shape = true;
      } else if (s.family == NoiseFamily::pareto_centered && key == "xm") {
        s.xm = value;
      } else {
        fail(ErrorKind::usage, "unknown parameter '" + key + "' for " + family_name(s.family));
      }
    }
  }
  if (s.family == NoiseFamily::pareto_centered && !have_shape) fail(ErrorKind::usage, "pareto noise needs shape=");
  s.validate();
  return s;
}

/// Identifies one random stream.
struct RngSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_id = 0;
};

using Engine = std::mt19937_64;

/// Engine for a stream; distinct stream ids give unrelated seed sequences.
inline Engine make_engine(const RngSpec& rng) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng.base_seed), static_cast<std::uint32_t>(rng.base_seed >> 32),
                    static_cast<std::uint32_t>(rng.stream_id), static_cast<std::uint32_t>(rng.stream_id >> 32),
                    0x504f5349u};
  return Engine(seq);
}

/// Fills out with i.i.d. centered draws.
inline void sample_into(const NoiseSpec& spec, Engine& engine, std::span<double> out) {
  spec.validate();
  switch (spec.family) {
    case NoiseFamily::gaussian: {
      std::normal_distribution<double> dist(0.0, spec.sd);
      for (double& x : out) x = dist(engine);
      break;
    }
    case NoiseFamily::laplace: {
      std::exponential_distribution<double> magnitude(1.0 / spec.scale);
      std::bernoulli_distribution negative(0.5);
      for (double& x : out) {
        const double m = magnitude(engine);
        x = negative(engine) ? -m : m;
      }
      break;
    }
    case NoiseFamily::pareto_centered: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double mean = spec.pareto_mean();
      const double inv_shape = 1.0 / spec.shape;
      for (double& x : out) x = spec.xm * std::pow(1.0 - unit(engine), -inv_shape) - mean;
      break;
    }
  }
}

inline Series sample(const NoiseSpec& spec, const RngSpec& rng, std::size_t count) {
  if (count == 0) fail(ErrorKind::usage, "sample count must be >= 1");
  std::vector<double> values(count);
  Engine engine = make_engine(rng);
  sample_into(spec, engine, values);
  return Series(std::move(values));
}

/// Population standard deviation.
inline double true_sd(const NoiseSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case NoiseFamily::gaussian: return spec.sd;
    case NoiseFamily::laplace: return std::sqrt(2.0) * spec.scale;
    case NoiseFamily::pareto_centered: {
      const double s = spec.shape;
      if (s <= 2.0) fail(ErrorKind::numeric, "infinite variance");
      return spec.xm * std::sqrt(s / ((s - 1.0) * (s - 1.0) * (s - 2.0)));
    }
  }
  return 0.0;
}

}  // namespace posir
