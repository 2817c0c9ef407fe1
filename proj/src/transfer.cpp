#include "nmg/transfer.hpp"

#include <cstdlib>
#include <string>

#include "nmg/errors.hpp"
#include "nmg/kernels.hpp"
#include "nmg/materialize.hpp"

namespace nmg {

const char* to_string(Coarsening c) noexcept { return c == Coarsening::Full ? "full" : "redblack"; }

Coarsening coarsening_from_string(const std::string& s) {
    if (s == "full") return Coarsening::Full;
    if (s == "redblack" || s == "red-black" || s == "rb") return Coarsening::RedBlack;
    throw ConfigError("unknown coarsening scheme '" + s + "'");
}

namespace {

struct Tap {
    int di;
    int dj;
    double w;
};

// Restriction taps around the coincident fine point.
std::vector<Tap> restriction_taps(Coarsening scheme, LevelLayout fine_layout) {
    if (scheme == Coarsening::Full) {
        std::vector<Tap> t;
        for (int di = -1; di <= 1; ++di)
            for (int dj = -1; dj <= 1; ++dj)
                t.push_back({di, dj, static_cast<double>((2 - std::abs(di)) * (2 - std::abs(dj))) / 16.0});
        return t;
    }
    if (fine_layout == LevelLayout::Regular)
        return {{0, 0, 0.5}, {-1, 0, 0.125}, {1, 0, 0.125}, {0, -1, 0.125}, {0, 1, 0.125}};
    return {{0, 0, 0.5}, {-1, -1, 0.125}, {-1, 1, 0.125}, {1, -1, 0.125}, {1, 1, 0.125}};
}

TransferPair::Table transpose_table(const TransferPair::Table& t, std::size_t n_cols, double scale) {
    TransferPair::Table out;
    std::vector<std::int32_t> count(n_cols + 1, 0);
    for (std::int32_t c : t.index) ++count[static_cast<std::size_t>(c) + 1];
    for (std::size_t k = 1; k <= n_cols; ++k) count[k] += count[k - 1];
    out.start = count;
    out.index.assign(t.index.size(), 0);
    out.weight.assign(t.weight.size(), 0.0);
    std::vector<std::int32_t> fill(count.begin(), count.end() - 1);
    const std::size_t n_rows = t.start.size() - 1;
    for (std::size_t r = 0; r < n_rows; ++r)
        for (auto k = t.start[r]; k < t.start[r + 1]; ++k) {
            const auto c = static_cast<std::size_t>(t.index[static_cast<std::size_t>(k)]);
            const auto slot = static_cast<std::size_t>(fill[c]++);
            out.index[slot] = static_cast<std::int32_t>(r);
            out.weight[slot] = scale * t.weight[static_cast<std::size_t>(k)];
        }
    return out;
}

} // namespace

TransferPair TransferPair::build(Coarsening scheme, SpecPtr fine, LevelLayout fine_layout) {
    if (!fine) throw ContractError("TransferPair::build: null fine spec");
    if (scheme == Coarsening::Full && fine_layout != LevelLayout::Regular)
        throw ContractError("TransferPair::build: full coarsening needs a regular fine level");
    TransferPair tp;
    tp.scheme_ = scheme;
    tp.fine_layout_ = fine_layout;
    const GridSpec& f = *fine;

    // Coarse grid and the coincident fine point of every coarse point.
    int crows = 0;
    int ccols = 0;
    bool same_array = false;
    if (scheme == Coarsening::Full || fine_layout == LevelLayout::Checkerboard) {
        crows = f.rows() / 2;
        ccols = f.cols() / 2;
        tp.coarse_layout_ = LevelLayout::Regular;
    } else {
        crows = f.rows();
        ccols = f.cols();
        same_array = true;
        tp.coarse_layout_ = LevelLayout::Checkerboard;
    }
    if (crows < 1 || ccols < 1)
        throw ConfigError("grid of " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                          " cannot be coarsened further");
    std::vector<std::uint8_t> cmask(static_cast<std::size_t>(crows) * static_cast<std::size_t>(ccols), 0);
    std::vector<std::int32_t> c2f(cmask.size(), -1);
    for (int i = 0; i < crows; ++i)
        for (int j = 0; j < ccols; ++j) {
            const int fi = same_array ? i : 2 * i + 1;
            const int fj = same_array ? j : 2 * j + 1;
            if (same_array && (i + j) % 2 != 0) continue;
            if (!f.active(fi, fj)) continue;
            const std::size_t cp = static_cast<std::size_t>(i) * static_cast<std::size_t>(ccols) + static_cast<std::size_t>(j);
            cmask[cp] = 1;
            c2f[cp] = static_cast<std::int32_t>(f.flat(fi, fj));
        }
    bool any = false;
    for (auto m : cmask) any = any || m != 0;
    if (!any) throw ConfigError("coarsening leaves no active points");
    const double coarse_h = same_array ? f.spacing() : 2.0 * f.spacing();
    tp.coarse_ = std::make_shared<const GridSpec>(crows, ccols, coarse_h, std::move(cmask));
    if (tp.coarse_->active_count() >= f.active_count())
        throw ConfigError("coarsening does not reduce the number of active points");
    tp.fine_ = std::move(fine);
    tp.coarse_to_fine_ = std::move(c2f);

    const auto taps = restriction_taps(scheme, fine_layout);
    tp.r_.start.assign(1, 0);
    for (std::size_t cp = 0; cp < tp.coarse_to_fine_.size(); ++cp) {
        const std::int32_t fp = tp.coarse_to_fine_[cp];
        if (fp >= 0) {
            const int fi = fp / f.cols();
            const int fj = fp % f.cols();
            for (const Tap& t : taps)
                if (f.active(fi + t.di, fj + t.dj)) {
                    tp.r_.index.push_back(static_cast<std::int32_t>(f.flat(fi + t.di, fj + t.dj)));
                    tp.r_.weight.push_back(t.w);
                }
        }
        tp.r_.start.push_back(static_cast<std::int32_t>(tp.r_.index.size()));
    }
    tp.p_ = transpose_table(tp.r_, f.size(), tp.duality_factor());
    return tp;
}

ConvKernel TransferPair::restriction_stencil() const {
    ConvKernel k(3);
    for (const Tap& t : restriction_taps(scheme_, fine_layout_)) k.at(t.di, t.dj) = t.w;
    return k;
}

ConvKernel TransferPair::prolongation_stencil() const {
    ConvKernel k = restriction_stencil();
    for (double& w : k.weights_mut()) w *= duality_factor();
    return k;
}

GridFunction TransferPair::restrict_to_coarse(const GridFunction& u) const {
    require_same_spec(*fine_, u.spec(), "restrict_to_coarse");
    GridFunction out(coarse_);
    kernels::omp::gather({static_cast<int>(coarse_->size()), r_.start.data(), r_.index.data(), r_.weight.data()},
                         u.data(), out.data());
    return out;
}

GridFunction TransferPair::prolong_to_fine(const GridFunction& u) const {
    require_same_spec(*coarse_, u.spec(), "prolong_to_fine");
    GridFunction out(fine_);
    kernels::omp::gather({static_cast<int>(fine_->size()), p_.start.data(), p_.index.data(), p_.weight.data()},
                         u.data(), out.data());
    return out;
}

DenseMatrix materialize(const StencilField& a) {
    return materialize([&](const GridFunction& e) { return apply_stencil(a, e); }, a.spec_ptr());
}

} // namespace nmg
