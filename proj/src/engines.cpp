#include "strefine/engines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "strefine/simd/kernels.hpp"

namespace strefine {

std::string_view engine_name(Engine e)
{
    switch (e) {
    case Engine::None:
        return "none";
    case Engine::Fsa:
        return "fsa";
    case Engine::Ba:
        return "ba";
    case Engine::Rba:
        return "rba";
    }
    return "unknown";
}

Engine parse_engine(std::string_view name)
{
    for (Engine e : {Engine::None, Engine::Fsa, Engine::Ba, Engine::Rba})
        if (engine_name(e) == name)
            return e;
    throw std::invalid_argument("unknown engine '" + std::string(name) + "' (expected none, fsa, ba or rba)");
}

ProjectionGain projection_gain(std::span<const double> residual, const WeightMask& mask,
                               std::span<const double> phi, std::size_t basis_index)
{
    const std::size_t n = residual.size();
    if (phi.size() != n || mask.weights.size() != n)
        throw std::invalid_argument("projection_gain: dimension mismatch");
    // Reference path, not used by the engines: extended precision keeps the
    // small correlations of nearly orthogonal pairs accurate.
    long double num_acc = 0.0L, den_acc = 0.0L, scale_acc = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double wphi = (long double)mask.weights[i] * phi[i];
        num_acc += wphi * residual[i];
        den_acc += wphi * phi[i];
        scale_acc += (long double)mask.weights[i] * std::max(1.0, phi[i] * phi[i]);
    }
    const double num = double(num_acc);
    const double den = double(den_acc);
    const double scale = double(scale_acc);
    ProjectionGain g;
    g.basis_index = basis_index;
    if (den <= kZeroNormTolerance * scale)
        return g;
    g.coeff = num / den;
    g.delta_e = num * g.coeff;
    return g;
}

void EngineConfig::validate() const
{
    if (max_iterations < 1)
        throw std::invalid_argument("EngineConfig: max_iterations must be at least 1");
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("EngineConfig: tau must lie in [0, 1]");
    if (max_per_iteration < 1)
        throw std::invalid_argument("EngineConfig: max_per_iteration must be at least 1");
    if (!(stop_energy >= 0.0))
        throw std::invalid_argument("EngineConfig: stop_energy must be non-negative");
}

// ---------------------------------------------------------------------------

ProjectionContext::ProjectionContext(std::shared_ptr<const BasisSet> basis, const WeightMask& mask)
    : basis_(std::move(basis)), weights_(mask.weights)
{
    if (!basis_)
        throw std::invalid_argument("ProjectionContext: null basis");
    const BasisSet& b = *basis_;
    const std::size_t samples = std::size_t(b.rows()) * std::size_t(b.cols());
    if (weights_.size() != samples)
        throw std::invalid_argument("ProjectionContext: mask does not match the basis grid");
    for (double w : weights_)
        if (!(w >= 0.0))
            throw std::invalid_argument("ProjectionContext: weights must be non-negative");
    total_weight_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);

    const auto& kern = simd::kernels();
    norms_.resize(b.size());
    inverse_norms_.resize(b.size());
    std::vector<double> phi(samples);
    const double floor = kZeroNormTolerance * total_weight_;
    for (std::size_t k = 0; k < b.size(); ++k) {
        std::fill(phi.begin(), phi.end(), 0.0);
        b.accumulate(k, 1.0, phi);
        norms_[k] = kern.weighted_dot(weights_.data(), phi.data(), phi.data(), samples);
        if (norms_[k] > floor && norms_[k] > 0.0) {
            inverse_norms_[k] = 1.0 / norms_[k];
        } else {
            inverse_norms_[k] = 0.0;
            ineligible_.push_back(k);
        }
    }

    mask_spectrum_.resize(b.spectrum_size());
    b.analyze(weights_, mask_spectrum_);
}

void ProjectionContext::mask_sums(int p, int q, double& cos_sum, double& sin_sum) const
{
    const BasisSet& b = *basis_;
    const int M = b.rows();
    const int N = b.cols();
    const int Q = b.half_cols();
    int pm = ((p % M) + M) % M;
    int qm = ((q % N) + N) % N;
    double sign = 1.0;
    if (qm >= Q) {
        // Outside the stored half: use X(-d) = conj X(d).
        pm = (M - pm) % M;
        qm = N - qm;
        sign = -1.0;
    }
    const std::size_t slot = std::size_t(pm) * std::size_t(Q) + std::size_t(qm);
    cos_sum = mask_spectrum_[slot];
    sin_sum = sign * mask_spectrum_[std::size_t(M) * std::size_t(Q) + slot];
}

double ProjectionContext::gram(std::size_t k, std::size_t u) const
{
    if (k == u)
        return norms_[k];
    const BasisFunction& a = basis_->function(k);
    const BasisFunction& b = basis_->function(u);
    double cd, sd, cs, ss;
    mask_sums(a.p - b.p, a.q - b.q, cd, sd);
    mask_sums(a.p + b.p, a.q + b.q, cs, ss);
    const bool a_sin = a.phase == Phase::Sine;
    const bool b_sin = b.phase == Phase::Sine;
    if (!a_sin && !b_sin)
        return 0.5 * (cd + cs);  // cos a cos b
    if (a_sin && b_sin)
        return 0.5 * (cd - cs);  // sin a sin b
    if (a_sin)
        return 0.5 * (ss + sd);  // sin a cos b
    return 0.5 * (ss - sd);      // cos a sin b
}

// ---------------------------------------------------------------------------

namespace {

struct Workspace {
    std::vector<double> weighted_residual;
    std::vector<double> spectrum;
    std::vector<double> gains;

    explicit Workspace(const BasisSet& b)
        : weighted_residual(std::size_t(b.rows()) * std::size_t(b.cols())),
          spectrum(b.spectrum_size()),
          gains(b.size())
    {
    }
};

// gains[k] for the residual f - g; ineligible functions get -1.
void scan_gains(const ProjectionContext& ctx, std::span<const double> f, std::span<const double> g, Workspace& ws)
{
    const auto& kern = simd::kernels();
    const BasisSet& b = ctx.basis();
    kern.weighted_difference(ctx.weights().data(), f.data(), g.data(), ws.weighted_residual.data(), f.size());
    b.analyze(ws.weighted_residual, ws.spectrum);
    kern.gather_gains(ws.spectrum.data(), b.spectral_slots().data(), ctx.inverse_norms().data(), ws.gains.data(),
                      b.size());
    for (std::size_t k : ctx.ineligible())
        ws.gains[k] = -1.0;
}

double numerator(const ProjectionContext& ctx, const Workspace& ws, std::size_t k)
{
    return ws.spectrum[std::size_t(ctx.basis().spectral_slot(k))];
}

void check_patch(const Patch& patch, const ProjectionContext& ctx)
{
    if (patch.values.size() != ctx.weights().size())
        throw std::invalid_argument("refine: patch does not match the projection context grid");
}

RefineResult greedy_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config)
{
    config.validate();
    check_patch(patch, ctx);
    const auto& kern = simd::kernels();
    const BasisSet& basis = ctx.basis();
    const std::span<const double> f = patch.values;
    const std::size_t samples = f.size();

    RefineResult res;
    res.model_grid.assign(samples, 0.0);
    std::vector<double>& g = res.model_grid;
    std::vector<std::ptrdiff_t> position(basis.size(), -1);
    Workspace ws(basis);

    double energy = kern.weighted_sq_error(ctx.weights().data(), f.data(), g.data(), samples);
    res.initial_energy = energy;
    std::vector<double> trial(samples);

    for (int it = 0; it < config.max_iterations; ++it) {
        scan_gains(ctx, f, g, ws);
        const std::size_t best = kern.argmax_first(ws.gains.data(), ws.gains.size());
        const double max_gain = ws.gains[best];
        if (!(max_gain > config.stop_energy))
            break;
        const double coeff = numerator(ctx, ws, best) / ctx.norm(best);

        trial = g;
        basis.accumulate(best, coeff, trial);
        const double next = kern.weighted_sq_error(ctx.weights().data(), f.data(), trial.data(), samples);
        if (next > energy)
            break;  // the step is below rounding noise

        g.swap(trial);
        energy = next;
        if (position[best] < 0) {
            position[best] = std::ptrdiff_t(res.model.selected.size());
            res.model.selected.push_back(best);
            res.model.coefficients.push_back(coeff);
        } else {
            res.model.coefficients[std::size_t(position[best])] += coeff;
        }
        res.model.iterations = it + 1;
        res.trace.push_back({{best}, max_gain, energy, false});
    }
    return res;
}

enum class Selection { Single, Relaxed };

RefineResult orthogonal_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config,
                               Selection rule)
{
    config.validate();
    check_patch(patch, ctx);
    const auto& kern = simd::kernels();
    const BasisSet& basis = ctx.basis();
    const std::span<const double> f = patch.values;
    const std::size_t samples = f.size();

    RefineResult res;
    res.model_grid.assign(samples, 0.0);
    std::vector<std::size_t>& selected = res.model.selected;
    std::vector<double>& coeffs = res.model.coefficients;
    Workspace ws(basis);

    double energy = kern.weighted_sq_error(ctx.weights().data(), f.data(), res.model_grid.data(), samples);
    res.initial_energy = energy;

    std::vector<double> gram;  // selected.size()^2, row-major
    std::vector<double> trial(samples);
    std::vector<double> trial_coeffs;

    for (int it = 0; it < config.max_iterations; ++it) {
        scan_gains(ctx, f, res.model_grid, ws);
        for (std::size_t k : selected)
            ws.gains[k] = -1.0;
        const std::size_t best = kern.argmax_first(ws.gains.data(), ws.gains.size());
        const double max_gain = ws.gains[best];
        if (!(max_gain > config.stop_energy))
            break;

        std::vector<std::size_t> added;
        if (rule == Selection::Single)
            added = {best};
        else
            added = select_relaxed(ws.gains, config.tau, std::size_t(config.max_per_iteration));

        const std::size_t old_n = selected.size();
        const std::size_t n = old_n + added.size();
        std::vector<std::size_t> next_selected = selected;
        next_selected.insert(next_selected.end(), added.begin(), added.end());

        std::vector<double> next_gram(n * n);
        for (std::size_t i = 0; i < old_n; ++i)
            std::copy_n(gram.begin() + std::ptrdiff_t(i * old_n), old_n, next_gram.begin() + std::ptrdiff_t(i * n));
        for (std::size_t i = old_n; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = ctx.gram(next_selected[i], next_selected[j]);
                next_gram[i * n + j] = v;
                next_gram[j * n + i] = v;
            }
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = numerator(ctx, ws, next_selected[i]);

        CoefficientUpdate update = solve_normal_equations(next_gram, rhs, n);

        trial_coeffs = coeffs;
        trial_coeffs.resize(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            trial_coeffs[i] += update.delta[i];
        std::fill(trial.begin(), trial.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            basis.accumulate(next_selected[i], trial_coeffs[i], trial);
        const double next = kern.weighted_sq_error(ctx.weights().data(), f.data(), trial.data(), samples);
        if (next > energy)
            break;  // no representable improvement left

        selected.swap(next_selected);
        coeffs.swap(trial_coeffs);
        gram.swap(next_gram);
        res.model_grid.swap(trial);
        energy = next;
        res.model.iterations = it + 1;
        res.trace.push_back({std::move(added), max_gain, energy, update.regularized || update.degenerate});
    }
    return res;
}

bool cholesky_solve(std::vector<double>& a, std::span<const double> rhs, std::size_t n, std::vector<double>& x)
{
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_diag = std::max(max_diag, a[i * n + i]);
    if (!(max_diag > 0.0))
        return false;
    const double pivot_floor = 1e-13 * max_diag;
    // In-place lower factor.
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k)
            d -= a[j * n + k] * a[j * n + k];
        if (!(d > pivot_floor))
            return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k)
                s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / l;
        }
    }
    x.assign(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k)
            s -= a[i * n + k] * x[k];
        x[i] = s / a[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k)
            s -= a[k * n + i] * x[k];
        x[i] = s / a[i * n + i];
    }
    return true;
}

}  // namespace

std::vector<double> candidate_gains(const ProjectionContext& ctx, std::span<const double> residual)
{
    if (residual.size() != ctx.weights().size())
        throw std::invalid_argument("candidate_gains: residual does not match the context grid");
    Workspace ws(ctx.basis());
    const std::vector<double> zero(residual.size(), 0.0);
    scan_gains(ctx, residual, zero, ws);
    for (std::size_t k : ctx.ineligible())
        ws.gains[k] = 0.0;
    return ws.gains;
}

std::vector<std::size_t> select_relaxed(std::span<const double> gains, double tau, std::size_t cap)
{
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("select_relaxed: tau must lie in [0, 1]");
    std::vector<std::size_t> picked;
    if (gains.empty() || cap == 0)
        return picked;
    const double max_gain = *std::max_element(gains.begin(), gains.end());
    if (!(max_gain > 0.0))
        return picked;
    const double threshold = tau * max_gain;
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] >= threshold && gains[i] >= 0.0)
            picked.push_back(i);
    auto better = [&](std::size_t a, std::size_t b) {
        return gains[a] > gains[b] || (gains[a] == gains[b] && a < b);
    };
    const std::size_t keep = std::min(cap, picked.size());
    std::partial_sort(picked.begin(), picked.begin() + std::ptrdiff_t(keep), picked.end(), better);
    picked.resize(keep);
    return picked;
}

CoefficientUpdate solve_normal_equations(std::vector<double> gram, std::span<const double> rhs, std::size_t n)
{
    if (gram.size() != n * n || rhs.size() != n)
        throw std::invalid_argument("solve_normal_equations: dimension mismatch");
    CoefficientUpdate out;
    if (n == 0)
        return out;
    if (n == 1 && gram[0] > 0.0) {
        out.delta = {rhs[0] / gram[0]};
        return out;
    }
    const std::vector<double> original = gram;
    if (cholesky_solve(gram, rhs, n, out.delta))
        return out;

    out.regularized = true;
    gram = original;
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        trace += original[i * n + i];
    const double load = 1e-9 * trace / double(n);
    for (std::size_t i = 0; i < n; ++i)
        gram[i * n + i] += load;
    if (cholesky_solve(gram, rhs, n, out.delta))
        return out;

    out.degenerate = true;
    out.delta.assign(n, 0.0);
    return out;
}

CoefficientUpdate solve_coefficient_update(const ProjectionContext& ctx, std::span<const double> residual,
                                           std::span<const std::size_t> selected)
{
    if (selected.empty())
        throw std::invalid_argument("solve_coefficient_update: empty selection");
    if (residual.size() != ctx.weights().size())
        throw std::invalid_argument("solve_coefficient_update: residual does not match the context grid");
    for (std::size_t k : selected)
        if (k >= ctx.basis().size())
            throw std::invalid_argument("solve_coefficient_update: unknown basis index " + std::to_string(k));
    Workspace ws(ctx.basis());
    const std::vector<double> zero(residual.size(), 0.0);
    scan_gains(ctx, residual, zero, ws);
    const std::size_t n = selected.size();
    std::vector<double> gram(n * n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        rhs[i] = numerator(ctx, ws, selected[i]);
        for (std::size_t j = 0; j < n; ++j)
            gram[i * n + j] = ctx.gram(selected[i], selected[j]);
    }
    return solve_normal_equations(std::move(gram), rhs, n);
}

RefineResult fsa_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config)
{
    return greedy_refine(patch, ctx, config);
}

RefineResult ba_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config)
{
    return orthogonal_refine(patch, ctx, config, Selection::Single);
}

RefineResult rba_refine(const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config)
{
    return orthogonal_refine(patch, ctx, config, Selection::Relaxed);
}

RefineResult fsa_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                        const EngineConfig& config)
{
    return fsa_refine(patch, ProjectionContext(std::move(basis), mask), config);
}

RefineResult ba_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                       const EngineConfig& config)
{
    return ba_refine(patch, ProjectionContext(std::move(basis), mask), config);
}

RefineResult rba_refine(const Patch& patch, const WeightMask& mask, std::shared_ptr<const BasisSet> basis,
                        const EngineConfig& config)
{
    return rba_refine(patch, ProjectionContext(std::move(basis), mask), config);
}

RefineResult run_engine(Engine engine, const Patch& patch, const ProjectionContext& ctx, const EngineConfig& config)
{
    switch (engine) {
    case Engine::Fsa:
        return fsa_refine(patch, ctx, config);
    case Engine::Ba:
        return ba_refine(patch, ctx, config);
    case Engine::Rba:
        return rba_refine(patch, ctx, config);
    case Engine::None:
        break;
    }
    check_patch(patch, ctx);
    RefineResult res;
    res.model_grid.assign(patch.values.size(), 0.0);
    res.initial_energy = simd::kernels().weighted_sq_error(ctx.weights().data(), patch.values.data(),
                                                           res.model_grid.data(), patch.values.size());
    return res;
}

LumaPlane extract_predictor(std::span<const double> model_grid, const PatchGeometry& geometry)
{
    if (model_grid.size() != geometry.sample_count())
        throw std::invalid_argument("extract_predictor: grid does not match geometry");
    const int bw = geometry.block_width();
    const int bh = geometry.block_height();
    LumaPlane block(bw, bh);
    for (int y = 0; y < bh; ++y)
        for (int x = 0; x < bw; ++x) {
            double v = model_grid[geometry.index(bh + y, bw + x)];
            if (!(v > 0.0))
                v = 0.0;  // also catches NaN
            v = std::min(v, 255.0);
            block.at(x, y) = static_cast<unsigned char>(std::lround(v));
        }
    return block;
}

LumaPlane extract_predictor(const SparseModel& model, const BasisSet& basis, const PatchGeometry& geometry)
{
    return extract_predictor(evaluate_model(model, basis, geometry), geometry);
}

}  // namespace strefine
