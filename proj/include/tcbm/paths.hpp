#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "tcbm/rng.hpp"
#include "tcbm/strategy.hpp"
#include "tcbm/timechange.hpp"

namespace tcbm {

/// Physical grid 0 = t_0 < ... < t_n = T and market grid 0 = s_0 < ... < s_m = T_bar.
///
/// The physical grid holds every jump time of Λ. The market grid holds both
/// Λ(t_i) and Λ(t_i-) for every physical point, so M = W∘Λ is a lookup and every
/// market interval lies inside exactly one image interval [Λ(t_i), Λ(t_{i+1})].
struct GridPair {
    std::vector<double> physical;
    std::vector<double> market;
    std::vector<double> lambda;              // Λ(t_i)
    std::vector<double> lambda_left;         // Λ(t_i-)
    std::vector<std::size_t> image;          // market index of Λ(t_i)
    std::vector<std::size_t> image_left;     // market index of Λ(t_i-)
    // For market interval j, the physical interval i with [s_j, s_{j+1}] inside
    // [Λ(t_i), Λ(t_{i+1})]. Intervals beyond Λ(T) belong to the last physical interval.
    std::vector<std::size_t> owner;

    std::size_t physical_intervals() const noexcept { return physical.size() - 1; }
    std::size_t market_intervals() const noexcept { return market.size() - 1; }
    std::size_t terminal_market_index() const noexcept { return image.back(); }

    // Index of a grid point; DomainError when `t` is not on the grid.
    std::size_t physical_index(double t) const;
    std::size_t market_index(double s) const;
};

// n_physical and n_market are the numbers of uniform intervals before images and
// jump times are merged in.
GridPair build_grid_pair(const TimeChangePath& lambda, std::size_t n_physical,
                         std::size_t n_market);

// W_0 = 0 with independent N(0, s_{j+1} - s_j) increments.
std::vector<double> sample_brownian(std::span<const double> market, RngStream& rng);

// M(t_i) = W(Λ(t_i)), read off the aligned market grid without interpolation.
std::vector<double> time_changed_path(std::span<const double> w, const GridPair& grids);

// Grid-constant pushforward of per-physical-interval values onto market intervals.
std::vector<double> push_to_market(std::span<const double> physical_values,
                                   const GridPair& grids);

struct DriftPath {
    std::vector<double> theta;         // per physical interval
    std::vector<double> theta_market;  // per market interval, θ∘Λ←
    std::vector<double> a;             // A(t_i) on the physical grid
};

// A(t_i) is the left-point sum of θ̃ over the market grid up to Λ(t_i). A jumps
// together with Λ.
DriftPath drift_path(const Strategy& theta, const GridPair& grids, std::span<const double> m);

/// One joint realization of (Λ, W) and the derived M, A and S = S_0 + M + A.
struct PathBundle {
    std::size_t path_id = 0;
    TimeChangePath lambda;  // refined so that every physical grid point is a knot
    GridPair grids;
    std::vector<double> w;  // market grid
    std::vector<double> m;  // physical grid
    std::vector<double> a;
    std::vector<double> s;
    std::vector<double> theta;         // per physical interval
    std::vector<double> theta_market;  // per market interval
    double s0 = 0.0;
};

PathBundle assemble_bundle(std::size_t path_id, const TimeChangePath& lambda,
                           std::size_t n_physical, std::size_t n_market, const Strategy& theta,
                           double s0, RngStream& brownian);

// Same as above with a caller-supplied Brownian path on the market grid of `grids`.
PathBundle assemble_bundle(std::size_t path_id, const TimeChangePath& lambda, GridPair grids,
                           std::vector<double> w, const Strategy& theta, double s0);

// Columns t,Lambda,M,A,S on the physical grid.
void write_physical_csv(std::ostream& out, const PathBundle& bundle);
// Columns s,W on the market grid.
void write_market_csv(std::ostream& out, const PathBundle& bundle);

}  // namespace tcbm
