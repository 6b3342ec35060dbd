#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace perciso {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double rms_residual = 0.0;
};

// Weighted least squares y ~ a + b x; weights default to 1. With per-point
// standard errors, pass w_i = 1/se_i^2 to get the propagated slope error.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w = {}) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: bad input");
    std::vector<double> wt = w.empty() ? std::vector<double>(x.size(), 1.0) : w;
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += wt[i];
        sx += wt[i] * x[i];
        sy += wt[i] * y[i];
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += wt[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += wt[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if (sxx <= 0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = ybar - f.slope * xbar;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / static_cast<double>(x.size()));
    // 1/sqrt(sum w (x-xbar)^2) when weights are inverse variances; falls back
    // to the residual-based estimate for unit weights.
    if (!w.empty())
        f.slope_stderr = 1.0 / std::sqrt(sxx);
    else if (x.size() > 2)
        f.slope_stderr = std::sqrt(ss / static_cast<double>(x.size() - 2) / sxx);
    return f;
}

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

// 95% Wilson score interval.
inline WilsonInterval wilson95(long long successes, long long trials) {
    if (trials <= 0) throw std::invalid_argument("wilson95: trials must be positive");
    const double z = 1.959963984540054;
    const double nn = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / nn;
    const double denom = 1.0 + z * z / nn;
    const double center = (phat + z * z / (2 * nn)) / denom;
    const double half = z * std::sqrt(phat * (1 - phat) / nn + z * z / (4 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stderr_of_mean(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace perciso
