#include "stopf/ipm.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

namespace stopf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxRegularization = 1e40;
constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-12;
constexpr double kMultiplierCap = 1e10;

struct Inertia {
    int pos = 0;
    int neg = 0;
    int zero = 0;
};

/// Dense symmetric-indefinite factorization (Bunch-Kaufman) holding the factors for re-solves.
class DenseLdl {
  public:
    bool factor(const Eigen::MatrixXd& k) {
        a_ = k;
        const auto n = static_cast<lapack_int>(a_.rows());
        ipiv_.assign(static_cast<std::size_t>(n), 0);
        const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, a_.data(), n, ipiv_.data());
        if (info < 0) throw std::logic_error("dsytrf: invalid argument");
        singular_ = info > 0;
        inertia_ = {};
        const double zero_tol = 1e-200;
        for (lapack_int i = 0; i < n;) {
            if (ipiv_[static_cast<std::size_t>(i)] > 0) {
                count(a_(i, i), zero_tol);
                ++i;
            } else {
                const double p = a_(i, i), q = a_(i + 1, i), r = a_(i + 1, i + 1);
                const double det = p * r - q * q;
                if (det < 0.0) {
                    ++inertia_.pos;
                    ++inertia_.neg;
                } else {
                    const double tr = p + r;
                    count(tr, zero_tol);
                    count(det == 0.0 ? 0.0 : tr, zero_tol);
                }
                i += 2;
            }
        }
        return !singular_ && inertia_.zero == 0;
    }

    [[nodiscard]] const Inertia& inertia() const { return inertia_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd x = rhs;
        const auto n = static_cast<lapack_int>(a_.rows());
        const lapack_int info =
            LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, a_.data(), n, ipiv_.data(), x.data(), n);
        if (info != 0) throw std::logic_error("dsytrs failed");
        return x;
    }

  private:
    void count(double d, double tol) {
        if (std::abs(d) <= tol) {
            ++inertia_.zero;
        } else if (d > 0.0) {
            ++inertia_.pos;
        } else {
            ++inertia_.neg;
        }
    }

    Eigen::MatrixXd a_;
    std::vector<lapack_int> ipiv_;
    Inertia inertia_;
    bool singular_ = false;
};

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// Dense copy of selected columns of a sparse row-major matrix block.
Eigen::MatrixXd dense_columns(const Eigen::SparseMatrix<double, Eigen::RowMajor>& j, Eigen::Index row0, Eigen::Index rows,
                              const std::vector<int>& col_map, Eigen::Index cols) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(j, row0 + r); it; ++it) {
            const int c = col_map[static_cast<std::size_t>(it.col())];
            if (c >= 0) out(r, c) = it.value();
        }
    }
    return out;
}

class InteriorPoint {
  public:
    InteriorPoint(const OpfProblem& problem, const SolverOptions& options)
        : p_(problem), o_(options), sigma_(objective_scale(problem)) {
        const std::size_t n = p_.num_vars();
        col_map_.assign(n, -1);
        for (std::size_t k = 0; k < n; ++k) {
            const double lo = p_.lower[static_cast<Eigen::Index>(k)], up = p_.upper[static_cast<Eigen::Index>(k)];
            if (lo > up) throw InputError("crossed bounds on " + p_.variable_name(k));
            if (lo == up) continue;
            col_map_[k] = static_cast<int>(free_.size());
            free_.push_back(static_cast<int>(k));
        }
        nf_ = static_cast<Eigen::Index>(free_.size());
        me_ = static_cast<Eigen::Index>(p_.equalities.size());
        mi_ = static_cast<Eigen::Index>(p_.inequalities.size());
        lo_.resize(nf_);
        up_.resize(nf_);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            lo_[k] = p_.lower[free_[static_cast<std::size_t>(k)]];
            up_[k] = p_.upper[free_[static_cast<std::size_t>(k)]];
        }
        has_lo_ = lo_.array().isFinite().cast<double>();
        has_up_ = up_.array().isFinite().cast<double>();
    }

    Solution run(const Eigen::VectorXd& start) {
        Solution sol;
        x_full_ = start;
        for (std::size_t k = 0; k < p_.num_vars(); ++k) {
            if (col_map_[k] < 0) x_full_[static_cast<Eigen::Index>(k)] = p_.lower[static_cast<Eigen::Index>(k)];
        }
        x_ = gather(x_full_);
        push_inside();
        scatter();
        mu_ = o_.mu0;
        evaluate();

        s_ = (-d_).cwiseMax(1e-2);
        lam_ = mu_ * s_.cwiseInverse();
        zl_ = Eigen::VectorXd::Zero(nf_);
        zu_ = Eigen::VectorXd::Zero(nf_);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) zl_[k] = mu_ / (x_[k] - lo_[k]);
            if (has_up_[k] > 0) zu_[k] = mu_ / (up_[k] - x_[k]);
        }
        init_equality_multipliers();

        const double feas_tol = 1e-3 * o_.tol_kkt;
        const double mu_min = o_.tol_kkt / 10.0;
        double delta_w_last = 0.0;
        int failures = 0;

        for (int iter = 0;; ++iter) {
            const KktNorms e0 = errors(0.0);
            sol.iterations = iter;
            if (e0.stationarity <= o_.tol_kkt && e0.complementarity <= o_.tol_kkt && e0.feasibility <= feas_tol) {
                finish(sol);
                const KktNorms check = kkt_residuals(p_, sol.point, sol.multipliers, 0.0);
                if (check.stationarity <= o_.tol_kkt && check.complementarity <= o_.tol_kkt &&
                    check.feasibility <= feas_tol) {
                    sol.status = SolveStatus::optimal;
                    sol.kkt = check;
                    sol.message = "optimal";
                    return sol;
                }
            }
            if (iter >= o_.max_iter) {
                finish(sol);
                sol.status = SolveStatus::iteration_limit;
                sol.message = "iteration limit reached";
                return sol;
            }
            while (mu_ > mu_min) {
                const KktNorms em = errors(mu_);
                if (std::max({em.stationarity, em.feasibility, em.complementarity}) > 10.0 * mu_) break;
                mu_ = std::max(mu_min, std::min(o_.mu_factor * mu_, std::pow(mu_, 1.5)));
            }

            // Condensed primal-dual system over (dx, dy).
            const Eigen::MatrixXd w = hessian();
            Eigen::VectorXd sig = Eigen::VectorXd::Zero(nf_);
            for (Eigen::Index k = 0; k < nf_; ++k) {
                if (has_lo_[k] > 0) sig[k] += zl_[k] / (x_[k] - lo_[k]);
                if (has_up_[k] > 0) sig[k] += zu_[k] / (up_[k] - x_[k]);
            }
            const Eigen::VectorXd ls = lam_.cwiseQuotient(s_);
            Eigen::MatrixXd h = w + jd_.transpose() * ls.asDiagonal() * jd_;
            h.diagonal() += sig;

            const Eigen::Index nk = nf_ + me_;
            Eigen::MatrixXd k(nk, nk);
            k.topLeftCorner(nf_, nf_) = h;
            k.bottomLeftCorner(me_, nf_) = jc_;
            k.topRightCorner(nf_, me_) = jc_.transpose();
            k.bottomRightCorner(me_, me_).setZero();

            DenseLdl ldl;
            double delta_w = 0.0, delta_c = 0.0;
            bool factored = false;
            for (int attempt = 0; attempt < 80; ++attempt) {
                Eigen::MatrixXd kk = k;
                kk.diagonal().head(nf_).array() += delta_w;
                kk.diagonal().tail(me_).array() -= delta_c;
                const bool nonsingular = ldl.factor(kk);
                const Inertia& in = ldl.inertia();
                if (nonsingular && in.pos == nf_ && in.neg == me_) {
                    factored = true;
                    break;
                }
                if (!nonsingular && delta_c == 0.0) {
                    delta_c = o_.reg_floor * std::pow(mu_, 0.25);
                    continue;
                }
                if (delta_w == 0.0) {
                    delta_w = delta_w_last == 0.0 ? std::max(o_.reg_floor, 1e-4) : std::max(o_.reg_floor, delta_w_last / 3.0);
                } else {
                    delta_w *= delta_w_last == 0.0 ? 100.0 : 8.0;
                }
                if (delta_w > kMaxRegularization) break;
            }
            if (!factored) {
                finish(sol);
                sol.status = SolveStatus::numerical_failure;
                sol.message = "KKT matrix singular after maximal regularization";
                return sol;
            }
            if (delta_w > 0.0) delta_w_last = delta_w;

            const Eigen::VectorXd dist_lo = barrier_terms_lo();
            const Eigen::VectorXd dist_up = barrier_terms_up();
            const Eigen::VectorXd grad_phi = sigma_ * gf_ - mu_ * dist_lo + mu_ * dist_up;
            const Eigen::VectorXd lam_shift = (mu_ * Eigen::VectorXd::Ones(mi_) + lam_.cwiseProduct(d_)).cwiseQuotient(s_);
            Eigen::VectorXd rhs(nk);
            rhs.head(nf_) = -(grad_phi + jc_.transpose() * y_ + jd_.transpose() * lam_) - jd_.transpose() * lam_shift;
            rhs.tail(me_) = -c_;
            const Eigen::VectorXd sol_k = ldl.solve(rhs);
            const Eigen::VectorXd dx = sol_k.head(nf_);
            const Eigen::VectorXd dy = sol_k.tail(me_);
            const Eigen::VectorXd jd_dx = jd_ * dx;
            const Eigen::VectorXd ds = -(d_ + s_) - jd_dx;
            const Eigen::VectorXd dlam = lam_shift + ls.cwiseProduct(jd_dx);
            Eigen::VectorXd dzl = Eigen::VectorXd::Zero(nf_), dzu = Eigen::VectorXd::Zero(nf_);
            for (Eigen::Index j = 0; j < nf_; ++j) {
                if (has_lo_[j] > 0) dzl[j] = mu_ / (x_[j] - lo_[j]) - zl_[j] - zl_[j] / (x_[j] - lo_[j]) * dx[j];
                if (has_up_[j] > 0) dzu[j] = mu_ / (up_[j] - x_[j]) - zu_[j] + zu_[j] / (up_[j] - x_[j]) * dx[j];
            }

            const double tau = std::max(o_.tau, 1.0 - mu_);
            double alpha_p = 1.0;
            for (Eigen::Index i = 0; i < mi_; ++i) {
                if (ds[i] < 0.0) alpha_p = std::min(alpha_p, -tau * s_[i] / ds[i]);
            }
            for (Eigen::Index j = 0; j < nf_; ++j) {
                if (has_lo_[j] > 0 && dx[j] < 0.0) alpha_p = std::min(alpha_p, -tau * (x_[j] - lo_[j]) / dx[j]);
                if (has_up_[j] > 0 && dx[j] > 0.0) alpha_p = std::min(alpha_p, tau * (up_[j] - x_[j]) / dx[j]);
            }
            double alpha_d = 1.0;
            auto cap_dual = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& dv, const Eigen::VectorXd* mask) {
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    if (mask && (*mask)[i] == 0.0) continue;
                    if (dv[i] < 0.0) alpha_d = std::min(alpha_d, -tau * v[i] / dv[i]);
                }
            };
            cap_dual(lam_, dlam, nullptr);
            cap_dual(zl_, dzl, &has_lo_);
            cap_dual(zu_, dzu, &has_up_);

            // l1 merit with penalty from the multiplier estimates.
            const double theta = c_.lpNorm<1>() + (d_ + s_).lpNorm<1>();
            const double mult = std::max(max_abs(y_ + dy), max_abs(lam_ + dlam));
            if (nu_ < mult + 1e-6) nu_ = std::max(2.0 * nu_, mult + 1.0);
            const double slope_phi = grad_phi.dot(dx) - mu_ * s_.cwiseInverse().dot(ds);
            double slope = slope_phi - nu_ * theta;
            if (slope >= 0.0 && theta > 0.0) {
                nu_ = slope_phi / (0.5 * theta) + 1.0;
                slope = slope_phi - nu_ * theta;
            }
            if (nu_ > kMultiplierCap) {
                finish(sol);
                sol.status = SolveStatus::infeasible_detected;
                sol.message = "penalty parameter diverged";
                return sol;
            }
            const double merit0 = merit(x_, s_, c_, d_, sigma_ * f_);

            double alpha = alpha_p;
            bool accepted = false;
            Eigen::VectorXd xt, st;
            while (alpha >= kMinStep) {
                xt = x_ + alpha * dx;
                st = s_ + alpha * ds;
                if (trial_merit(xt, st) <= merit0 + kArmijo * alpha * std::min(slope, 0.0)) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                ++failures;
                if (failures >= 3) {
                    finish(sol);
                    const double feas = std::max(max_abs(c_), mi_ > 0 ? d_.cwiseMax(0.0).maxCoeff() : 0.0);
                    sol.status = feas > std::sqrt(o_.tol_kkt) ? SolveStatus::infeasible_detected
                                                              : SolveStatus::numerical_failure;
                    sol.message = "line search failed repeatedly";
                    return sol;
                }
                // Take a short step regardless; the next iterate re-linearizes.
                alpha = std::min(alpha_p, 1e-4);
                xt = x_ + alpha * dx;
                st = s_ + alpha * ds;
            } else {
                failures = 0;
            }

            x_ = xt;
            s_ = st;
            y_ += alpha * dy;
            const double ad = std::min(alpha_d, 1.0);
            lam_ += ad * dlam;
            zl_ += ad * dzl;
            zu_ += ad * dzu;
            scatter();
            evaluate();
            safeguard_duals();

            IterationRecord rec;
            rec.iter = iter + 1;
            rec.mu = mu_;
            rec.alpha_primal = alpha;
            rec.alpha_dual = ad;
            rec.kkt = errors(0.0);
            rec.objective = f_;
            rec.min_slack = min_distance();
            rec.min_multiplier = min_multiplier();
            rec.regularization = delta_w;
            sol.trace.push_back(rec);
            if (o_.log) {
                char line[256];
                std::snprintf(line, sizeof line, "%4d %10.3e %10.3e %10.3e %10.3e %10.3e %10.3e %18.10e %8.1e\n", rec.iter,
                              rec.mu, rec.alpha_primal, rec.alpha_dual, rec.kkt.stationarity, rec.kkt.feasibility,
                              rec.kkt.complementarity, rec.objective, rec.regularization);
                *o_.log << line;
            }
            if (!x_.allFinite() || max_abs(x_) > 1e20) {
                finish(sol);
                sol.status = SolveStatus::numerical_failure;
                sol.message = "iterates diverged";
                return sol;
            }
        }
    }

  private:
    Eigen::VectorXd gather(const Eigen::VectorXd& full) const {
        Eigen::VectorXd v(nf_);
        for (Eigen::Index k = 0; k < nf_; ++k) v[k] = full[free_[static_cast<std::size_t>(k)]];
        return v;
    }

    void scatter() {
        for (Eigen::Index k = 0; k < nf_; ++k) x_full_[free_[static_cast<std::size_t>(k)]] = x_[k];
    }

    void push_inside() {
        for (Eigen::Index k = 0; k < nf_; ++k) {
            const double range = up_[k] - lo_[k];
            double lo = lo_[k], up = up_[k];
            if (has_lo_[k] > 0) lo += std::min(1e-2 * std::max(1.0, std::abs(lo_[k])), 1e-2 * range);
            if (has_up_[k] > 0) up -= std::min(1e-2 * std::max(1.0, std::abs(up_[k])), 1e-2 * range);
            x_[k] = std::clamp(x_[k], lo, up);
        }
    }

    void evaluate() {
        const Evaluation e = eval_objective_and_constraints(p_, x_full_);
        f_ = e.objective;
        c_ = e.equalities;
        d_ = e.inequalities;
        gf_ = gather(eval_objective_gradient(p_, x_full_));
        const auto j = eval_jacobian(p_, x_full_);
        jc_ = dense_columns(j, 0, me_, col_map_, nf_);
        jd_ = dense_columns(j, me_, mi_, col_map_, nf_);
    }

    Eigen::MatrixXd hessian() const {
        const Eigen::MatrixXd full = eval_lagrangian_hessian(p_, x_full_, sigma_, y_, lam_);
        Eigen::MatrixXd h(nf_, nf_);
        for (Eigen::Index a = 0; a < nf_; ++a) {
            for (Eigen::Index b = 0; b < nf_; ++b) h(a, b) = full(free_[a], free_[b]);
        }
        return h;
    }

    void init_equality_multipliers() {
        y_ = Eigen::VectorXd::Zero(me_);
        if (me_ == 0) return;
        const Eigen::Index nk = nf_ + me_;
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nk, nk);
        k.topLeftCorner(nf_, nf_).diagonal().setOnes();
        k.bottomLeftCorner(me_, nf_) = jc_;
        k.topRightCorner(nf_, me_) = jc_.transpose();
        k.bottomRightCorner(me_, me_).diagonal().setConstant(-1e-8);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nk);
        rhs.head(nf_) = -(sigma_ * gf_ + jd_.transpose() * lam_ - zl_ + zu_);
        DenseLdl ldl;
        ldl.factor(k);
        const Eigen::VectorXd y = ldl.solve(rhs).tail(me_);
        if (y.allFinite() && max_abs(y) <= 1e3) y_ = y;
    }

    Eigen::VectorXd barrier_terms_lo() const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(nf_);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) v[k] = 1.0 / (x_[k] - lo_[k]);
        }
        return v;
    }

    Eigen::VectorXd barrier_terms_up() const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(nf_);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_up_[k] > 0) v[k] = 1.0 / (up_[k] - x_[k]);
        }
        return v;
    }

    double merit(const Eigen::VectorXd& x, const Eigen::VectorXd& s, const Eigen::VectorXd& c, const Eigen::VectorXd& d,
                 double f_scaled) const {
        double phi = f_scaled;
        for (Eigen::Index i = 0; i < s.size(); ++i) phi -= mu_ * std::log(s[i]);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) phi -= mu_ * std::log(x[k] - lo_[k]);
            if (has_up_[k] > 0) phi -= mu_ * std::log(up_[k] - x[k]);
        }
        return phi + nu_ * (c.lpNorm<1>() + (d + s).lpNorm<1>());
    }

    double trial_merit(const Eigen::VectorXd& x, const Eigen::VectorXd& s) {
        Eigen::VectorXd full = x_full_;
        for (Eigen::Index k = 0; k < nf_; ++k) full[free_[static_cast<std::size_t>(k)]] = x[k];
        Evaluation e;
        try {
            e = eval_objective_and_constraints(p_, full);
        } catch (const EvaluationError&) {
            return kInf;
        }
        const double m = merit(x, s, e.equalities, e.inequalities, sigma_ * e.objective);
        return std::isfinite(m) ? m : kInf;
    }

    void safeguard_duals() {
        constexpr double kappa = 1e10;
        for (Eigen::Index i = 0; i < mi_; ++i) {
            lam_[i] = std::clamp(lam_[i], mu_ / (kappa * s_[i]), kappa * mu_ / s_[i]);
        }
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) {
                const double dist = x_[k] - lo_[k];
                zl_[k] = std::clamp(zl_[k], mu_ / (kappa * dist), kappa * mu_ / dist);
            }
            if (has_up_[k] > 0) {
                const double dist = up_[k] - x_[k];
                zu_[k] = std::clamp(zu_[k], mu_ / (kappa * dist), kappa * mu_ / dist);
            }
        }
    }

    KktNorms errors(double mu) const {
        KktNorms e;
        e.stationarity = max_abs(sigma_ * gf_ + jc_.transpose() * y_ + jd_.transpose() * lam_ - zl_ + zu_);
        e.feasibility = std::max(max_abs(c_), max_abs(d_ + s_));
        double comp = 0.0;
        for (Eigen::Index i = 0; i < mi_; ++i) comp = std::max(comp, std::abs(s_[i] * lam_[i] - mu));
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) comp = std::max(comp, std::abs((x_[k] - lo_[k]) * zl_[k] - mu));
            if (has_up_[k] > 0) comp = std::max(comp, std::abs((up_[k] - x_[k]) * zu_[k] - mu));
        }
        e.complementarity = comp;
        return e;
    }

    double min_distance() const {
        double m = kInf;
        if (mi_ > 0) m = s_.minCoeff();
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) m = std::min(m, x_[k] - lo_[k]);
            if (has_up_[k] > 0) m = std::min(m, up_[k] - x_[k]);
        }
        return m;
    }

    double min_multiplier() const {
        double m = kInf;
        if (mi_ > 0) m = lam_.minCoeff();
        for (Eigen::Index k = 0; k < nf_; ++k) {
            if (has_lo_[k] > 0) m = std::min(m, zl_[k]);
            if (has_up_[k] > 0) m = std::min(m, zu_[k]);
        }
        return m;
    }

    void finish(Solution& sol) const {
        const auto n = static_cast<Eigen::Index>(p_.num_vars());
        sol.point = x_full_;
        sol.objective = f_;
        sol.multipliers.y_eq = y_ / sigma_;
        sol.multipliers.lambda_ineq = lam_ / sigma_;
        sol.multipliers.z_lower = Eigen::VectorXd::Zero(n);
        sol.multipliers.z_upper = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < nf_; ++k) {
            sol.multipliers.z_lower[free_[static_cast<std::size_t>(k)]] = zl_[k] / sigma_;
            sol.multipliers.z_upper[free_[static_cast<std::size_t>(k)]] = zu_[k] / sigma_;
        }
        sol.kkt = errors(0.0);
    }

    const OpfProblem& p_;
    const SolverOptions& o_;
    double sigma_ = 1.0;
    std::vector<int> free_;
    std::vector<int> col_map_;
    Eigen::Index nf_ = 0, me_ = 0, mi_ = 0;
    Eigen::VectorXd lo_, up_, has_lo_, has_up_;

    Eigen::VectorXd x_full_, x_, s_, y_, lam_, zl_, zu_;
    double mu_ = 0.1;
    double nu_ = 1.0;

    double f_ = 0.0;
    Eigen::VectorXd c_, d_, gf_;
    Eigen::MatrixXd jc_, jd_;
};

bool better(const Solution& a, const Solution& b) {
    const bool ao = a.status == SolveStatus::optimal, bo = b.status == SolveStatus::optimal;
    if (ao != bo) return ao;
    return a.objective < b.objective;
}

}  // namespace

void validate_options(const SolverOptions& o) {
    if (!(o.tol_kkt > 0.0)) throw std::invalid_argument("tol_kkt must be positive");
    if (o.max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
    if (!(o.mu0 > 0.0)) throw std::invalid_argument("mu0 must be positive");
    if (!(o.mu_factor > 0.0 && o.mu_factor < 1.0)) throw std::invalid_argument("mu_factor must lie in (0,1)");
    if (!(o.tau > 0.0 && o.tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    if (!(o.reg_floor > 0.0)) throw std::invalid_argument("reg_floor must be positive");
    if (o.multistart < 0) throw std::invalid_argument("multistart must be non-negative");
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible_detected: return "infeasible-detected";
        case SolveStatus::iteration_limit: return "iteration-limit";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

Eigen::VectorXd initial_point(const OpfProblem& problem) {
    const VariableLayout& lay = problem.layout;
    const auto n = static_cast<Eigen::Index>(problem.num_vars());
    for (Eigen::Index k = 0; k < n; ++k) {
        if (problem.lower[k] > problem.upper[k]) {
            throw InputError("crossed bounds on " + problem.variable_name(static_cast<std::size_t>(k)));
        }
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (std::size_t b = 0; b < lay.n_bus; ++b) x[lay.v(b)] = 1.0;

    double p_demand = 0.0, q_demand = 0.0;
    for (const LoadSpec& l : problem.effective_loads) {
        p_demand += l.p0;
        q_demand += l.q0;
    }
    double p_cap = 0.0, q_cap = 0.0;
    for (std::size_t g = 0; g < lay.n_gen; ++g) {
        p_cap += problem.upper[lay.pg(g)];
        q_cap += std::abs(problem.upper[lay.qg(g)]);
    }
    for (std::size_t g = 0; g < lay.n_gen; ++g) {
        if (p_cap > 0.0) x[lay.pg(g)] = problem.upper[lay.pg(g)] * p_demand / p_cap;
        if (q_cap > 0.0) x[lay.qg(g)] = std::abs(problem.upper[lay.qg(g)]) * q_demand / q_cap;
    }
    for (std::size_t l = 0; l < lay.n_load; ++l) {
        const LoadSpec& eff = problem.effective_loads[l];
        const LoadPower nominal = eval_load(eff, eff.v0);
        x[lay.pl(l)] = nominal.p;
        x[lay.ql(l)] = nominal.q;
    }
    for (std::size_t k = 0; k < lay.n_st(); ++k) {
        const std::size_t l = lay.st_load[k];
        const LoadSpec& eff = problem.effective_loads[l];
        const StParams& params = problem.st_params[k];
        const double v_s = std::clamp(eff.v0, params.v_s_min, params.v_s_max);
        const LoadPower lp = eval_load(eff, v_s);
        const std::size_t iq = lay.st(k, StVar::q_st);
        const double q_st = std::clamp(eval_load(eff, eff.v0).q, problem.lower[iq], problem.upper[iq]);
        StState st;
        try {
            st = solve_pcc_power(1.0, q_st, v_s, eff, params);
        } catch (const StModelError&) {
            st = StState{};
            st.p_st = lp.p;
            st.q_st = q_st;
            st.v_s = v_s;
            const DqCurrent rec = pcc_currents(st.p_st, st.q_st, 1.0);
            const DqCurrent inv = inverter_currents(lp.p, lp.q, v_s);
            st.i_drec = rec.d;
            st.i_qrec = rec.q;
            st.i_dinv = inv.d;
            st.i_qinv = inv.q;
        }
        const Modulation m = recover_modulation(st, params, 1.0);
        const double vals[kStVarCount] = {st.p_st, st.q_st, st.i_drec, st.i_qrec, st.i_dinv, st.i_qinv,
                                          m.drec,  m.qrec,  m.dinv,    m.qinv,    st.v_s};
        for (std::size_t v = 0; v < kStVarCount; ++v) x[lay.st(k, static_cast<StVar>(v))] = vals[v];
        x[lay.pl(l)] = lp.p;
        x[lay.ql(l)] = lp.q;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        const double lo = problem.lower[k], up = problem.upper[k];
        if (lo == up) {
            x[k] = lo;
            continue;
        }
        const double range = up - lo;
        const double margin = std::isfinite(range) ? 1e-4 * range : 1e-4;
        double a = std::isfinite(lo) ? lo + margin : -kInf;
        double b = std::isfinite(up) ? up - margin : kInf;
        x[k] = std::clamp(x[k], a, b);
    }
    return x;
}

double objective_scale(const OpfProblem& problem) {
    const auto n = static_cast<Eigen::Index>(problem.num_vars());
    Eigen::VectorXd ref = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (std::isfinite(problem.upper[k])) {
            ref[k] = problem.upper[k];
        } else if (std::isfinite(problem.lower[k])) {
            ref[k] = problem.lower[k];
        }
    }
    const double g = max_abs(eval_objective_gradient(problem, ref));
    return g > 100.0 ? 100.0 / g : 1.0;
}

KktNorms kkt_residuals(const OpfProblem& problem, const Eigen::VectorXd& point, const Multipliers& mult, double mu) {
    const double sigma = objective_scale(problem);
    const Evaluation e = eval_objective_and_constraints(problem, point);
    const Eigen::VectorXd grad = eval_objective_gradient(problem, point);
    const auto jac = eval_jacobian(problem, point);
    const auto me = static_cast<Eigen::Index>(problem.equalities.size());
    const auto mi = static_cast<Eigen::Index>(problem.inequalities.size());
    Eigen::VectorXd duals(me + mi);
    duals << mult.y_eq, mult.lambda_ineq;
    const Eigen::VectorXd r = sigma * (grad + jac.transpose() * duals - mult.z_lower + mult.z_upper);

    KktNorms out;
    double comp = 0.0, stat = 0.0;
    for (Eigen::Index k = 0; k < point.size(); ++k) {
        const double lo = problem.lower[k], up = problem.upper[k];
        if (lo == up) continue;
        stat = std::max(stat, std::abs(r[k]));
        if (std::isfinite(lo)) comp = std::max(comp, std::abs(sigma * (point[k] - lo) * mult.z_lower[k] - mu));
        if (std::isfinite(up)) comp = std::max(comp, std::abs(sigma * (up - point[k]) * mult.z_upper[k] - mu));
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
        comp = std::max(comp, std::abs(sigma * (-e.inequalities[i]) * mult.lambda_ineq[i] - mu));
    }
    out.stationarity = stat;
    out.complementarity = comp;
    out.feasibility = std::max(max_abs(e.equalities), mi > 0 ? std::max(0.0, e.inequalities.maxCoeff()) : 0.0);
    return out;
}

Solution solve(const OpfProblem& problem, const SolverOptions& options) {
    validate_options(options);
    Eigen::VectorXd start;
    if (options.warm_start && options.warm_start->size() == static_cast<Eigen::Index>(problem.num_vars())) {
        start = *options.warm_start;
    } else {
        start = initial_point(problem);
    }
    Solution best = InteriorPoint(problem, options).run(start);
    if (options.multistart > 0) {
        std::mt19937_64 rng(options.multistart_seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (int r = 0; r < options.multistart; ++r) {
            Eigen::VectorXd x = start;
            for (Eigen::Index k = 0; k < x.size(); ++k) {
                const double lo = problem.lower[k], up = problem.upper[k];
                if (lo == up) continue;
                const double width = std::isfinite(up - lo) ? 0.05 * (up - lo) : 0.05;
                x[k] += width * unit(rng);
            }
            Solution trial = InteriorPoint(problem, options).run(x);
            if (better(trial, best)) best = std::move(trial);
        }
    }
    return best;
}

}  // namespace stopf
