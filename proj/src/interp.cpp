#include "fkpam/interp.hpp"

#include <algorithm>

namespace fkpam {

PchipCurve::PchipCurve(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    const std::size_t n = xs_.size();
    if (n < 2 || ys_.size() != n) throw DomainError("PchipCurve: need >= 2 matched nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(xs_[i] > xs_[i - 1])) throw DomainError("PchipCurve: abscissae must increase");

    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs_[i + 1] - xs_[i];
        delta[i] = (ys_[i + 1] - ys_[i]) / h[i];
    }
    slopes_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            slopes_[i] = 0.0;
        } else {
            double w1 = 2.0 * h[i] + h[i - 1];
            double w2 = h[i] + 2.0 * h[i - 1];
            slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    // One-sided endpoint slopes with monotonicity clipping.
    auto edge_slope = [](double h0, double h1, double d0, double d1) {
        double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return d;
    };
    if (n == 2) {
        slopes_[0] = slopes_[1] = delta[0];
    } else {
        slopes_[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
        slopes_[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
}

double PchipCurve::eval(double x) const {
    if (xs_.empty()) throw DomainError("PchipCurve: empty");
    if (x < xs_.front() || x > xs_.back())
        throw OutOfRange("PchipCurve: query outside table range");
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
    if (i >= xs_.size() - 1) i = xs_.size() - 2;
    double h = xs_[i + 1] - xs_[i];
    double s = (x - xs_[i]) / h;
    double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    double h10 = s * (1.0 - s) * (1.0 - s);
    double h01 = s * s * (3.0 - 2.0 * s);
    double h11 = s * s * (s - 1.0);
    return h00 * ys_[i] + h10 * h * slopes_[i] + h01 * ys_[i + 1] + h11 * h * slopes_[i + 1];
}

EvenLogTable::EvenLogTable(const std::function<double(double)>& fn, double value_at_zero,
                           double x_min, double x_max, int points_per_decade) {
    if (!(x_min > 0.0 && x_max > x_min)) throw DomainError("EvenLogTable: bad range");
    if (points_per_decade < 4) throw DomainError("EvenLogTable: too few points per decade");
    value0_ = value_at_zero;
    x_min_ = x_min;
    x_max_ = x_max;
    u0_ = std::log(x_min);
    const double u1 = std::log(x_max);
    const double per_e = points_per_decade / std::log(10.0);
    const std::size_t count = static_cast<std::size_t>(std::ceil((u1 - u0_) * per_e)) + 1;
    du_ = (u1 - u0_) / static_cast<double>(count - 1);
    values_.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        values_[i] = fn(std::exp(u0_ + du_ * static_cast<double>(i)));

    // Fritsch-Carlson slopes on the uniform grid.
    slopes_.assign(count, 0.0);
    auto secant = [&](std::size_t i) { return (values_[i + 1] - values_[i]) / du_; };
    for (std::size_t i = 1; i + 1 < count; ++i) {
        double d0 = secant(i - 1), d1 = secant(i);
        slopes_[i] = d0 * d1 <= 0.0 ? 0.0 : 2.0 * d0 * d1 / (d0 + d1);
    }
    if (count >= 3) {
        auto edge = [&](double d0, double d1) {
            double d = 1.5 * d0 - 0.5 * d1;
            if (d * d0 <= 0.0) return 0.0;
            if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
            return d;
        };
        slopes_[0] = edge(secant(0), secant(1));
        slopes_[count - 1] = edge(secant(count - 2), secant(count - 3));
    } else {
        slopes_[0] = slopes_[count - 1] = secant(0);
    }
}

double EvenLogTable::eval(double x) const {
    double ax = std::abs(x);
    if (ax == 0.0) return value0_;
    if (ax < x_min_) {
        // The sampled function is flat below x_min at table accuracy.
        double w = ax / x_min_;
        return (1.0 - w) * value0_ + w * values_.front();
    }
    if (ax > x_max_ * (1.0 + 1e-12)) throw OutOfRange("EvenLogTable: query beyond table range");
    double u = (std::log(ax) - u0_) / du_;
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= values_.size() - 1) i = values_.size() - 2;
    double s = u - static_cast<double>(i);
    double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    double h10 = s * (1.0 - s) * (1.0 - s);
    double h01 = s * s * (3.0 - 2.0 * s);
    double h11 = s * s * (s - 1.0);
    return h00 * values_[i] + h10 * du_ * slopes_[i] + h01 * values_[i + 1] +
           h11 * du_ * slopes_[i + 1];
}

}  // namespace fkpam
