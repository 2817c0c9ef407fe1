#include "nmg/krylov.hpp"

#include <chrono>
#include <cmath>

#include "nmg/errors.hpp"

namespace nmg {

void FgmresConfig::validate() const {
    if (!(tol > 0.0)) throw ConfigError("krylov: tol must be positive");
    if (max_iter < 1) throw ConfigError("krylov: max_iter must be >= 1");
    if (restart && *restart < 1) throw ConfigError("krylov: restart must be >= 1");
    if (!(reorth_threshold > 0.0)) throw ConfigError("krylov: reorth_threshold must be positive");
}

namespace {

// Least-squares state of one Arnoldi cycle: H is reduced to upper triangular
// form by Givens rotations as columns arrive.
class GivensLeastSquares {
public:
    GivensLeastSquares(int m, double beta) : h_(static_cast<std::size_t>(m)), g_(static_cast<std::size_t>(m) + 1, 0.0) {
        g_[0] = beta;
    }

    // column holds h(0..j+1, j); returns the new residual norm |g(j+1)|.
    double add_column(std::vector<double> column) {
        const std::size_t j = static_cast<std::size_t>(cols_);
        for (std::size_t i = 0; i < j; ++i) {
            const double t = c_[i] * column[i] + s_[i] * column[i + 1];
            column[i + 1] = -s_[i] * column[i] + c_[i] * column[i + 1];
            column[i] = t;
        }
        const double a = column[j], b = column[j + 1];
        const double r = std::hypot(a, b);
        const double c = r == 0.0 ? 1.0 : a / r;
        const double s = r == 0.0 ? 0.0 : b / r;
        c_.push_back(c);
        s_.push_back(s);
        column[j] = r;
        column[j + 1] = 0.0;
        g_[j + 1] = -s * g_[j];
        g_[j] = c * g_[j];
        column.resize(j + 1);
        h_[j] = std::move(column);
        ++cols_;
        return std::abs(g_[j + 1]);
    }

    std::vector<double> solve() const {
        const std::size_t k = static_cast<std::size_t>(cols_);
        std::vector<double> y(k, 0.0);
        for (std::size_t ii = k; ii-- > 0;) {
            double acc = g_[ii];
            for (std::size_t jj = ii + 1; jj < k; ++jj) acc -= h_[jj][ii] * y[jj];
            if (h_[ii][ii] == 0.0) throw NumericError("krylov: singular Hessenberg system");
            y[ii] = acc / h_[ii][ii];
        }
        return y;
    }

private:
    std::vector<std::vector<double>> h_;  // column j: R(0..j, j)
    std::vector<double> g_;
    std::vector<double> c_, s_;
    int cols_ = 0;
};

enum class Ortho { ModifiedGs, ClassicalGsTwice };

KrylovResult run(const LinearAction& a, const GridFunction& f, const LinearAction* precond, const FgmresConfig& cfg,
                 Ortho ortho, std::string tag) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    KrylovResult res{GridFunction(f.spec_ptr()), {}};
    res.report.preconditioner = std::move(tag);
    const double fnorm = norm2(f);
    if (fnorm == 0.0) {
        res.report.residual_history = {0.0};
        res.report.converged = true;
        return res;
    }
    GridFunction r = f;
    double beta = fnorm;
    res.report.residual_history.push_back(1.0);
    const int m_max = cfg.restart ? *cfg.restart : cfg.max_iter;
    int total = 0;
    while (total < cfg.max_iter) {
        const int m = std::min(m_max, cfg.max_iter - total);
        std::vector<GridFunction> v{(1.0 / beta) * r};
        std::vector<GridFunction> z;
        GivensLeastSquares ls(m, beta);
        bool stop = false;
        for (int j = 0; j < m && !stop; ++j) {
            z.push_back(precond ? (*precond)(v.back()) : v.back());
            GridFunction w = a(z.back());
            const double wnorm0 = norm2(w);
            std::vector<double> h(static_cast<std::size_t>(j) + 2, 0.0);
            if (ortho == Ortho::ModifiedGs) {
                for (int i = 0; i <= j; ++i) {
                    const double c = dot(w, v[static_cast<std::size_t>(i)]);
                    h[static_cast<std::size_t>(i)] = c;
                    w.axpy(-c, v[static_cast<std::size_t>(i)]);
                }
                double loss = 0.0;
                const double wn = norm2(w);
                if (wn > 0.0)
                    for (int i = 0; i <= j; ++i) loss = std::max(loss, std::abs(dot(w, v[static_cast<std::size_t>(i)])) / wn);
                if (loss > cfg.reorth_threshold) {
                    ++res.report.reorthogonalizations;
                    for (int i = 0; i <= j; ++i) {
                        const double c = dot(w, v[static_cast<std::size_t>(i)]);
                        h[static_cast<std::size_t>(i)] += c;
                        w.axpy(-c, v[static_cast<std::size_t>(i)]);
                    }
                }
            } else {
                for (int pass = 0; pass < 2; ++pass) {
                    std::vector<double> c(static_cast<std::size_t>(j) + 1);
                    for (int i = 0; i <= j; ++i) c[static_cast<std::size_t>(i)] = dot(w, v[static_cast<std::size_t>(i)]);
                    for (int i = 0; i <= j; ++i) {
                        h[static_cast<std::size_t>(i)] += c[static_cast<std::size_t>(i)];
                        w.axpy(-c[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)]);
                    }
                }
            }
            const double hnext = norm2(w);
            h[static_cast<std::size_t>(j) + 1] = hnext;
            const double rel = ls.add_column(std::move(h)) / fnorm;
            ++total;
            res.report.residual_history.push_back(rel);
            if (!std::isfinite(rel)) throw NumericError("krylov: residual is not finite");
            if (rel < cfg.tol) {
                stop = true;
            } else if (hnext <= 1e-14 * std::max(wnorm0, 1e-300)) {
                throw NumericError("krylov: Arnoldi breakdown with nonzero residual at iteration " +
                                   std::to_string(total));
            } else {
                v.push_back((1.0 / hnext) * w);
            }
        }
        const std::vector<double> y = ls.solve();
        for (std::size_t i = 0; i < y.size(); ++i) res.u.axpy(y[i], z[i]);
        r = f - a(res.u);
        beta = norm2(r);
        if (beta / fnorm < cfg.tol) {
            res.report.converged = true;
            break;
        }
    }
    res.report.iterations = total;
    res.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace

KrylovResult fgmres(const LinearAction& a, const GridFunction& f, const LinearAction& precond, const FgmresConfig& cfg,
                    std::string tag) {
    return run(a, f, &precond, cfg, Ortho::ModifiedGs, std::move(tag));
}

KrylovResult gmres(const LinearAction& a, const GridFunction& f, const FgmresConfig& cfg) {
    return run(a, f, nullptr, cfg, Ortho::ClassicalGsTwice, "none");
}

LinearAction stencil_action(const StencilField& a) {
    return [&a](const GridFunction& x) { return apply_stencil(a, x); };
}

LinearAction vcycle_preconditioner(const MultigridHierarchy& h) {
    return [&h](const GridFunction& r) { return v_cycle(h, 0, r, GridFunction(r.spec_ptr())); };
}

LinearAction identity_action() {
    return [](const GridFunction& x) { return x; };
}

} // namespace nmg
