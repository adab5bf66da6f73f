#include "strefine/bd_metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace strefine {

std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 4)
        throw std::invalid_argument("fit_cubic: need at least four (x, y) pairs");
    const Eigen::Index n = Eigen::Index(x.size());
    Eigen::MatrixXd v(n, 4);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[std::size_t(i)];
        v(i, 0) = 1.0;
        v(i, 1) = xi;
        v(i, 2) = xi * xi;
        v(i, 3) = xi * xi * xi;
        rhs(i) = y[std::size_t(i)];
    }
    const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
    return {c(0), c(1), c(2), c(3)};
}

namespace {

double integral(const std::array<double, 4>& c, double lo, double hi)
{
    auto prim = [&](double t) {
        return c[0] * t + c[1] * t * t / 2.0 + c[2] * t * t * t / 3.0 + c[3] * t * t * t * t / 4.0;
    };
    return prim(hi) - prim(lo);
}

struct Columns {
    std::vector<double> log_rate;
    std::vector<double> quality;
};

Columns columns(const RDCurve& curve, const char* which)
{
    if (curve.points.size() < 4)
        throw std::invalid_argument(std::string("bd_metrics: ") + which + " curve has fewer than four points");
    Columns c;
    for (const RDPoint& p : curve.points) {
        if (!(p.rate_kbps > 0.0))
            throw std::invalid_argument(std::string("bd_metrics: ") + which + " curve has a non-positive rate");
        c.log_rate.push_back(std::log10(p.rate_kbps));
        c.quality.push_back(p.psnr_db);
    }
    return c;
}

}  // namespace

BdResult bd_metrics(const RDCurve& base, const RDCurve& test)
{
    const Columns a = columns(base, "base");
    const Columns b = columns(test, "test");

    const auto [a_rlo, a_rhi] = std::minmax_element(a.log_rate.begin(), a.log_rate.end());
    const auto [b_rlo, b_rhi] = std::minmax_element(b.log_rate.begin(), b.log_rate.end());
    const double rlo = std::max(*a_rlo, *b_rlo);
    const double rhi = std::min(*a_rhi, *b_rhi);
    if (!(rhi > rlo))
        throw std::invalid_argument("bd_metrics: the curves' rate ranges do not overlap");

    const auto [a_qlo, a_qhi] = std::minmax_element(a.quality.begin(), a.quality.end());
    const auto [b_qlo, b_qhi] = std::minmax_element(b.quality.begin(), b.quality.end());
    const double qlo = std::max(*a_qlo, *b_qlo);
    const double qhi = std::min(*a_qhi, *b_qhi);
    if (!(qhi > qlo))
        throw std::invalid_argument("bd_metrics: the curves' PSNR ranges do not overlap");

    BdResult r;
    const auto qa = fit_cubic(a.log_rate, a.quality);
    const auto qb = fit_cubic(b.log_rate, b.quality);
    r.psnr_gain_db = (integral(qb, rlo, rhi) - integral(qa, rlo, rhi)) / (rhi - rlo);

    const auto ra = fit_cubic(a.quality, a.log_rate);
    const auto rb = fit_cubic(b.quality, b.log_rate);
    const double mean_log_diff = (integral(rb, qlo, qhi) - integral(ra, qlo, qhi)) / (qhi - qlo);
    r.rate_reduction_pct = -(std::pow(10.0, mean_log_diff) - 1.0) * 100.0;
    return r;
}

}  // namespace strefine
