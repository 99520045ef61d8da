#pragma once

#include <traffic2d/error.hpp>

#include <cstddef>
#include <span>

namespace traffic2d {

struct Line {
  double intercept = 0.0;
  double slope = 0.0;

  double operator()(double t) const { return intercept + slope * t; }
};

/// Ordinary least-squares line through (t_k, y_k), centered for stability.
inline Line fit_line(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw ParameterError("fit_line: size mismatch");
  if (t.size() < 2) throw InputError("fit_line needs at least two samples");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    tm += t[k];
    ym += y[k];
  }
  tm /= n;
  ym /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    stt += (t[k] - tm) * (t[k] - tm);
    sty += (t[k] - tm) * (y[k] - ym);
  }
  if (stt == 0.0) throw InputError("fit_line: all timestamps are equal");
  const double slope = sty / stt;
  return {ym - slope * tm, slope};
}

}  // namespace traffic2d
