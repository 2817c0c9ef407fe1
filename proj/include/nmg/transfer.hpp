#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmg/grid.hpp"

namespace nmg {

enum class Coarsening { Full, RedBlack };

/// Red-black coarsening alternates between regular grids and checkerboard
/// levels stored on the same array with the (i + j) odd points masked out.
enum class LevelLayout { Regular, Checkerboard };

const char* to_string(Coarsening c) noexcept;
Coarsening coarsening_from_string(const std::string& s);

/// Restriction R and prolongation P between two levels, with R = P^T / c
/// where c = duality_factor() (4 for full weighting, 2 for red-black).
class TransferPair {
public:
    /// Chooses the coarse grid for the scheme. Throws ConfigError when the fine
    /// grid cannot be coarsened.
    static TransferPair build(Coarsening scheme, SpecPtr fine, LevelLayout fine_layout = LevelLayout::Regular);

    Coarsening scheme() const noexcept { return scheme_; }
    LevelLayout fine_layout() const noexcept { return fine_layout_; }
    LevelLayout coarse_layout() const noexcept { return coarse_layout_; }
    const SpecPtr& fine() const noexcept { return fine_; }
    const SpecPtr& coarse() const noexcept { return coarse_; }
    double duality_factor() const noexcept { return scheme_ == Coarsening::Full ? 4.0 : 2.0; }

    /// Printed stencils (3x3, offsets in the fine array frame rotated for
    /// checkerboard levels).
    ConvKernel restriction_stencil() const;
    ConvKernel prolongation_stencil() const;

    /// For each coarse flat index, the coincident fine flat index (-1 if inactive).
    const std::vector<std::int32_t>& coarse_to_fine() const noexcept { return coarse_to_fine_; }

    GridFunction restrict_to_coarse(const GridFunction& fine) const;
    GridFunction prolong_to_fine(const GridFunction& coarse) const;

    struct Table {
        std::vector<std::int32_t> start;
        std::vector<std::int32_t> index;
        std::vector<double> weight;
    };
    /// Row tables of R (rows = coarse points) and P (rows = fine points).
    const Table& restriction_table() const noexcept { return r_; }
    const Table& prolongation_table() const noexcept { return p_; }

private:
    Coarsening scheme_ = Coarsening::Full;
    LevelLayout fine_layout_ = LevelLayout::Regular;
    LevelLayout coarse_layout_ = LevelLayout::Regular;
    SpecPtr fine_;
    SpecPtr coarse_;
    std::vector<std::int32_t> coarse_to_fine_;
    Table r_;
    Table p_;
};

} // namespace nmg
