#include "tcbm/paths.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tcbm/errors.hpp"
#include "tcbm/format.hpp"

namespace tcbm {

namespace {

std::vector<double> uniform_grid(double horizon, std::size_t n) {
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    }
    grid.back() = horizon;
    return grid;
}

std::size_t exact_index(const std::vector<double>& grid, double x, const char* which) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    if (it == grid.end() || *it != x) {
        throw DomainError(std::string(which) + " time " + format_double(x) +
                          " is not a grid point");
    }
    return static_cast<std::size_t>(it - grid.begin());
}

}  // namespace

std::size_t GridPair::physical_index(double t) const {
    return exact_index(physical, t, "physical");
}

std::size_t GridPair::market_index(double s) const { return exact_index(market, s, "market"); }

GridPair build_grid_pair(const TimeChangePath& lambda, std::size_t n_physical,
                         std::size_t n_market) {
    if (n_physical < 2 || n_market < 2) {
        throw PreconditionError("grid sizes must be at least 2");
    }
    const double horizon = lambda.horizon();
    GridPair g;

    // Uniform points closer than this to a jump time are replaced by the jump time.
    const double merge_tol = 1e-9 * horizon;
    const auto jumps = lambda.jump_times();
    const auto uniform = uniform_grid(horizon, n_physical);
    g.physical.reserve(uniform.size() + jumps.size());
    std::size_t k = 0;
    for (double t : uniform) {
        while (k < jumps.size() && jumps[k] < t - merge_tol) g.physical.push_back(jumps[k++]);
        const bool interior = t > 0.0 && t < horizon;
        if (interior && k < jumps.size() && std::abs(jumps[k] - t) <= merge_tol) {
            g.physical.push_back(jumps[k++]);
            continue;
        }
        g.physical.push_back(t);
    }
    while (k < jumps.size()) g.physical.push_back(jumps[k++]);
    g.physical.erase(std::unique(g.physical.begin(), g.physical.end()), g.physical.end());

    const auto n = g.physical.size();
    g.lambda.resize(n);
    g.lambda_left.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.lambda[i] = lambda.value(g.physical[i]);
        g.lambda_left[i] = lambda.left_limit(g.physical[i]);
    }

    g.market = uniform_grid(lambda.market_horizon(), n_market);
    g.market.insert(g.market.end(), g.lambda.begin(), g.lambda.end());
    g.market.insert(g.market.end(), g.lambda_left.begin(), g.lambda_left.end());
    std::sort(g.market.begin(), g.market.end());
    g.market.erase(std::unique(g.market.begin(), g.market.end()), g.market.end());
    if (g.market.back() > lambda.market_horizon()) {
        throw PreconditionError("time-change exceeds the market horizon");
    }

    g.image.resize(n);
    g.image_left.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto locate = [&](double value) {
            auto it = std::lower_bound(g.market.begin(), g.market.end(), value);
            if (it == g.market.end() || *it != value) {
                throw AlignmentError("market grid misses the image " + format_double(value));
            }
            return static_cast<std::size_t>(it - g.market.begin());
        };
        g.image[i] = locate(g.lambda[i]);
        g.image_left[i] = locate(g.lambda_left[i]);
    }

    g.owner.assign(g.market.size() - 1, n - 2);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (std::size_t j = g.image[i]; j < g.image[i + 1]; ++j) g.owner[j] = i;
    }
    return g;
}

std::vector<double> sample_brownian(std::span<const double> market, RngStream& rng) {
    std::vector<double> w(market.size(), 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 1; j < market.size(); ++j) {
        w[j] = w[j - 1] + std::sqrt(market[j] - market[j - 1]) * normal(rng);
    }
    return w;
}

std::vector<double> time_changed_path(std::span<const double> w, const GridPair& grids) {
    if (w.size() != grids.market.size()) {
        throw AlignmentError("Brownian path does not live on the market grid");
    }
    std::vector<double> m(grids.image.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = w[grids.image[i]];
    return m;
}

std::vector<double> push_to_market(std::span<const double> physical_values,
                                   const GridPair& grids) {
    if (physical_values.size() != grids.physical_intervals()) {
        throw PreconditionError("expected one value per physical interval");
    }
    std::vector<double> out(grids.market_intervals());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = physical_values[grids.owner[j]];
    return out;
}

DriftPath drift_path(const Strategy& theta, const GridPair& grids, std::span<const double> m) {
    DriftPath d;
    d.theta = evaluate_on_grid(theta, grids.physical, grids.lambda, grids.lambda_left, m);
    d.theta_market = push_to_market(d.theta, grids);
    d.a.assign(grids.physical.size(), 0.0);
    double acc = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 1; i < d.a.size(); ++i) {
        for (; j < grids.image[i]; ++j) {
            acc += d.theta_market[j] * (grids.market[j + 1] - grids.market[j]);
        }
        d.a[i] = acc;
    }
    return d;
}

PathBundle assemble_bundle(std::size_t path_id, const TimeChangePath& lambda,
                           std::size_t n_physical, std::size_t n_market, const Strategy& theta,
                           double s0, RngStream& brownian) {
    auto grids = build_grid_pair(lambda, n_physical, n_market);
    auto w = sample_brownian(grids.market, brownian);
    return assemble_bundle(path_id, lambda, std::move(grids), std::move(w), theta, s0);
}

PathBundle assemble_bundle(std::size_t path_id, const TimeChangePath& lambda, GridPair grids,
                           std::vector<double> w, const Strategy& theta, double s0) {
    PathBundle b;
    b.path_id = path_id;
    b.lambda = lambda.refined(grids.physical);
    b.m = time_changed_path(w, grids);
    auto drift = drift_path(theta, grids, b.m);
    b.grids = std::move(grids);
    b.w = std::move(w);
    b.a = std::move(drift.a);
    b.theta = std::move(drift.theta);
    b.theta_market = std::move(drift.theta_market);
    b.s0 = s0;
    b.s.resize(b.m.size());
    for (std::size_t i = 0; i < b.s.size(); ++i) b.s[i] = s0 + b.m[i] + b.a[i];
    return b;
}

void write_physical_csv(std::ostream& out, const PathBundle& bundle) {
    out << "t,Lambda,M,A,S\n";
    const auto& g = bundle.grids;
    for (std::size_t i = 0; i < g.physical.size(); ++i) {
        const double row[] = {g.physical[i], g.lambda[i], bundle.m[i], bundle.a[i], bundle.s[i]};
        out << csv_row(std::span<const double>(row));
    }
}

void write_market_csv(std::ostream& out, const PathBundle& bundle) {
    out << "s,W\n";
    for (std::size_t j = 0; j < bundle.grids.market.size(); ++j) {
        const double row[] = {bundle.grids.market[j], bundle.w[j]};
        out << csv_row(std::span<const double>(row));
    }
}

}  // namespace tcbm
