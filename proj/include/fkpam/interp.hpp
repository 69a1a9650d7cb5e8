#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "fkpam/errors.hpp"

namespace fkpam {

/// Shape-preserving cubic Hermite interpolation (Fritsch-Carlson slopes) on a
/// strictly increasing abscissa grid. No overshoot between nodes, which keeps
/// interpolated covariance factors bounded by their sampled extrema.
class PchipCurve {
public:
    PchipCurve() = default;
    PchipCurve(std::vector<double> xs, std::vector<double> ys);

    double eval(double x) const;
    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }
    bool empty() const { return xs_.empty(); }

private:
    std::vector<double> xs_, ys_, slopes_;
};

/// Lookup table for an even function of one variable, sampled log-uniformly
/// on |x| in [x_min, x_max] with the exact value at 0 stored separately.
/// Uniform spacing in log x gives O(1) indexing; values interpolate with
/// Fritsch-Carlson cubics. Queries below x_min interpolate linearly against
/// the zero value; queries beyond x_max throw (extrapolation refused).
class EvenLogTable {
public:
    EvenLogTable() = default;
    EvenLogTable(const std::function<double(double)>& fn, double value_at_zero, double x_min,
                 double x_max, int points_per_decade);

    double eval(double x) const;
    double value_at_zero() const { return value0_; }
    double x_max() const { return x_max_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_, slopes_;  // over uniform u = log(x)
    double value0_ = 0.0;
    double x_min_ = 0.0;
    double x_max_ = 0.0;
    double u0_ = 0.0;
    double du_ = 1.0;
};

}  // namespace fkpam
