#include "wsosvm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "wsosvm/simd.hpp"

namespace wsosvm::qp {

namespace {

constexpr double kBoundEps = 1e-9;

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

void QPInstance::validate() const {
    if (q.size() != n * n || lin.size() != n || lower.size() != n || upper.size() != n)
        throw DataError("QPInstance: inconsistent dimensions");
    if (!eq.empty() && eq.size() != n)
        throw DataError("QPInstance: equality vector length mismatch");
    if (!ineq.empty() && ineq.size() != n)
        throw DataError("QPInstance: inequality vector length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (lower[i] > upper[i])
            throw DataError("QPInstance: infeasible box at variable " + std::to_string(i));
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(q_at(i, j) - q_at(j, i)) > 1e-10)
                throw DataError("QPInstance: Q not symmetric at (" + std::to_string(i) +
                                "," + std::to_string(j) + ")");
    }
}

double KKTReport::max_residual() const {
    return std::max({stationarity_residual, primal_feas_residual,
                     complementarity_residual});
}

double objective(const QPInstance& qp, const std::vector<double>& gamma) {
    double quad = 0.0;
    for (std::size_t i = 0; i < qp.n; ++i)
        quad += gamma[i] * simd::dot(qp.q.data() + i * qp.n, gamma.data(), qp.n);
    return 0.5 * quad - simd::dot(qp.lin.data(), gamma.data(), qp.n);
}

KKTReport kkt_residuals(const QPInstance& qp, const std::vector<double>& gamma,
                        const Multipliers& multipliers) {
    if (gamma.size() != qp.n) throw DataError("kkt_residuals: gamma length mismatch");
    const std::size_t n = qp.n;

    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i)
        r[i] = simd::dot(qp.q.data() + i * n, gamma.data(), n) - qp.lin[i];
    if (!qp.eq.empty())
        simd::axpy(multipliers.lagrange_eq, qp.eq.data(), r.data(), n);
    if (!qp.ineq.empty())
        simd::axpy(-multipliers.lagrange_ineq, qp.ineq.data(), r.data(), n);

    KKTReport report;
    double compl_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double span = 1.0 + qp.upper[i] - qp.lower[i];
        bool at_lo = gamma[i] <= qp.lower[i] + kBoundEps * span;
        bool at_hi = gamma[i] >= qp.upper[i] - kBoundEps * span;
        double v;
        if (at_lo && at_hi)
            v = 0.0;  // fixed variable, either bound dual absorbs the gradient
        else if (at_lo)
            v = std::max(0.0, -r[i]);
        else if (at_hi)
            v = std::max(0.0, r[i]);
        else
            v = std::abs(r[i]);
        report.stationarity_residual = std::max(report.stationarity_residual, v);

        compl_sum += std::max(0.0, r[i]) * (gamma[i] - qp.lower[i]) +
                     std::max(0.0, -r[i]) * (qp.upper[i] - gamma[i]);

        double box_violation = std::max(qp.lower[i] - gamma[i], gamma[i] - qp.upper[i]);
        report.primal_feas_residual = std::max(report.primal_feas_residual,
                                               std::max(0.0, box_violation));
    }
    if (!qp.eq.empty())
        report.primal_feas_residual =
            std::max(report.primal_feas_residual,
                     std::abs(simd::dot(qp.eq.data(), gamma.data(), n)));
    if (!qp.ineq.empty()) {
        double slack = simd::dot(qp.ineq.data(), gamma.data(), n);
        report.primal_feas_residual = std::max(report.primal_feas_residual,
                                               std::max(0.0, -slack));
        compl_sum += std::abs(multipliers.lagrange_ineq * slack);
    }
    report.complementarity_residual = compl_sum;
    return report;
}

namespace {

// Dense Cholesky, in place on the lower triangle. Returns false on failure.
bool cholesky(std::vector<double>& m, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j * n + j] - simd::dot(m.data() + j * n, m.data() + j * n, j);
        if (d <= 0.0 || !std::isfinite(d)) return false;
        d = std::sqrt(d);
        m[j * n + j] = d;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = m[i * n + j] - simd::dot(m.data() + i * n, m.data() + j * n, j);
            m[i * n + j] = v / d;
        }
    }
    return true;
}

void chol_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& x) {
    for (std::size_t i = 0; i < n; ++i)
        x[i] = (x[i] - simd::dot(l.data() + i * n, x.data(), i)) / l[i * n + i];
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) acc -= l[k * n + ii] * x[k];
        x[ii] = acc / l[ii * n + ii];
    }
}

// Projection of z onto {lower <= g <= upper} intersected with up to two
// homogeneous hyperplanes. One hyperplane reduces to a monotone 1-D root
// find on the shift multiplier; two nest a second bisection outside it.
// The returned shift multipliers are the projection's exact dual variables:
// the clip structure makes the one-sided bound conditions hold by
// construction, which is what turns a projected-gradient fixed point into a
// KKT certificate.
struct ProjectionDuals {
    double nu[2] = {0.0, 0.0};
};

class BoxProjector {
public:
    BoxProjector(const QPInstance& qp, std::vector<const std::vector<double>*> planes)
        : qp_(qp), planes_(std::move(planes)) {}

    ProjectionDuals project(std::vector<double>& z) const {
        const std::size_t n = qp_.n;
        ProjectionDuals duals;
        if (planes_.empty()) {
            for (std::size_t i = 0; i < n; ++i)
                z[i] = clip(z[i], qp_.lower[i], qp_.upper[i]);
            return duals;
        }
        if (planes_.size() == 1) {
            duals.nu[0] = solve_single(z, *planes_[0], nullptr, 0.0);
            apply(z, *planes_[0], duals.nu[0], nullptr, 0.0);
            return duals;
        }
        // Outer bisection on the second plane's multiplier; the partially
        // maximized dual is concave, so the outer map is non-increasing.
        const std::vector<double>& a = *planes_[0];
        const std::vector<double>& d = *planes_[1];
        std::vector<double> scratch(n);
        auto outer_val = [&](double nu2) {
            double nu1 = solve_single(z, a, &d, nu2);
            scratch = z;
            apply(scratch, a, nu1, &d, nu2);
            return simd::dot(d.data(), scratch.data(), qp_.n);
        };
        double lo = -1.0, hi = 1.0;
        for (int it = 0; it < 120 && outer_val(lo) < 0.0; ++it) lo *= 2.0;
        for (int it = 0; it < 120 && outer_val(hi) > 0.0; ++it) hi *= 2.0;
        for (int it = 0; it < 120; ++it) {
            double mid = 0.5 * (lo + hi);
            if (outer_val(mid) >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        duals.nu[1] = 0.5 * (lo + hi);
        duals.nu[0] = solve_single(z, a, &d, duals.nu[1]);
        apply(z, a, duals.nu[0], &d, duals.nu[1]);
        return duals;
    }

private:
    void apply(std::vector<double>& g, const std::vector<double>& a, double nu1,
               const std::vector<double>* d, double nu2) const {
        for (std::size_t i = 0; i < qp_.n; ++i) {
            double v = g[i] - nu1 * a[i];
            if (d) v -= nu2 * (*d)[i];
            g[i] = clip(v, qp_.lower[i], qp_.upper[i]);
        }
    }

    // Root of nu -> a' clip(z - nu*a - nu2*d), which is non-increasing.
    double solve_single(const std::vector<double>& z, const std::vector<double>& a,
                        const std::vector<double>* d, double nu2) const {
        auto value = [&](double nu) {
            double acc = 0.0;
            for (std::size_t i = 0; i < qp_.n; ++i) {
                double v = z[i] - nu * a[i];
                if (d) v -= nu2 * (*d)[i];
                acc += a[i] * clip(v, qp_.lower[i], qp_.upper[i]);
            }
            return acc;
        };
        double lo = -1.0, hi = 1.0;
        for (int it = 0; it < 120 && value(lo) < 0.0; ++it) lo *= 2.0;
        for (int it = 0; it < 120 && value(hi) > 0.0; ++it) hi *= 2.0;
        for (int it = 0; it < 120; ++it) {
            double mid = 0.5 * (lo + hi);
            if (value(mid) >= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    const QPInstance& qp_;
    std::vector<const std::vector<double>*> planes_;
};

// Gradient-projection / active-set solver for the box QP with the given
// equality rows (0, 1, or 2 of them). Fills multipliers for each row.
struct SubproblemResult {
    std::vector<double> gamma;
    std::vector<double> plane_multipliers;
    int iterations = 0;
    bool converged = false;
};

class Solver {
public:
    Solver(const QPInstance& qp, const SolveOptions& options) : qp_(qp), opts_(options) {
        // Gershgorin bound on the largest eigenvalue gives a safe PG step.
        lipschitz_ = 0.0;
        for (std::size_t i = 0; i < qp_.n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < qp_.n; ++j) row += std::abs(qp_.q_at(i, j));
            lipschitz_ = std::max(lipschitz_, row);
        }
        if (lipschitz_ <= 0.0) lipschitz_ = 1.0;
    }

    // Alternates one projected-gradient step with an exact subspace solve on
    // the current free set. The PG step doubles as the convergence
    // certificate: projecting gamma - s*grad returns the projection duals,
    // and at a fixed point those are exact KKT multipliers (scaled by 1/s).
    SubproblemResult run(std::vector<const std::vector<double>*> planes,
                         std::size_t max_iter, double tol) {
        const std::size_t n = qp_.n;
        BoxProjector projector(qp_, planes);
        const bool ineq_active = !qp_.ineq.empty() && !planes.empty() &&
                                 planes.back() == &qp_.ineq;
        const double step = 1.0 / lipschitz_;

        SubproblemResult res;
        res.gamma.assign(n, 0.0);
        res.plane_multipliers.assign(planes.size(), 0.0);
        projector.project(res.gamma);

        std::vector<double> grad(n), trial(n), subspace_lambda(planes.size(), 0.0);
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            res.iterations = static_cast<int>(iter) + 1;

            // PG step; its projection duals certify the previous iterate.
            gradient(res.gamma, grad);
            trial = res.gamma;
            simd::axpy(-step, grad.data(), trial.data(), n);
            ProjectionDuals duals = projector.project(trial);
            res.gamma = trial;  // monotone: projection-arc descent at step 1/L
            for (std::size_t j = 0; j < planes.size(); ++j)
                res.plane_multipliers[j] = duals.nu[j] / step;
            refine_multipliers(res, planes, ineq_active);
            if (kkt_residuals(qp_, res.gamma, to_multipliers(res, ineq_active))
                    .max_residual() <= tol) {
                res.converged = true;
                return res;
            }

            // Proximal subspace descent, then an exact polish attempt on the
            // identified face; the polish is what certifies at machine
            // precision once the face settles.
            subspace_step(res.gamma, planes, subspace_lambda);
            if (try_polish(res, planes, ineq_active, tol)) {
                res.converged = true;
                return res;
            }
        }
        res.converged =
            kkt_residuals(qp_, res.gamma, to_multipliers(res, ineq_active))
                .max_residual() <= tol;
        return res;
    }

    // The projection duals inherit the iteration's residual wobble; a least
    // squares fit of the plane multipliers over the strictly interior
    // coordinates often certifies tighter. Keeps whichever is better.
    void refine_multipliers(SubproblemResult& res,
                            const std::vector<const std::vector<double>*>& planes,
                            bool ineq_active) const {
        const std::size_t n = qp_.n;
        const std::size_t k = planes.size();
        if (k == 0) return;

        std::vector<std::size_t> interior;
        for (std::size_t i = 0; i < n; ++i) {
            double span = 1.0 + qp_.upper[i] - qp_.lower[i];
            if (res.gamma[i] > qp_.lower[i] + kBoundEps * span &&
                res.gamma[i] < qp_.upper[i] - kBoundEps * span)
                interior.push_back(i);
        }
        if (interior.empty()) return;

        std::vector<double> g(n);
        gradient(res.gamma, g);
        double s[4] = {0, 0, 0, 0};
        double t[2] = {0, 0};
        for (std::size_t j = 0; j < k; ++j) {
            for (std::size_t m = 0; m < k; ++m)
                for (std::size_t i : interior)
                    s[j * 2 + m] += (*planes[j])[i] * (*planes[m])[i];
            for (std::size_t i : interior) t[j] -= (*planes[j])[i] * g[i];
        }
        std::vector<double> refined = res.plane_multipliers;
        if (k == 1) {
            if (s[0] <= 1e-300) return;
            refined[0] = t[0] / s[0];
        } else {
            double det = s[0] * s[3] - s[1] * s[2];
            double scale = std::abs(s[0] * s[3]) + std::abs(s[1] * s[2]) + 1e-300;
            if (std::abs(det) > 1e-9 * scale) {
                refined[0] = (t[0] * s[3] - t[1] * s[1]) / det;
                refined[1] = (s[0] * t[1] - s[2] * t[0]) / det;
            } else if (s[0] > 1e-300) {
                refined[0] = (t[0] - s[1] * refined[1]) / s[0];
            } else {
                return;
            }
        }
        SubproblemResult candidate = res;
        candidate.plane_multipliers = refined;
        double before = kkt_residuals(qp_, res.gamma, to_multipliers(res, ineq_active))
                            .max_residual();
        double after =
            kkt_residuals(qp_, candidate.gamma, to_multipliers(candidate, ineq_active))
                .max_residual();
        if (after < before) res.plane_multipliers = refined;
    }

    Multipliers to_multipliers(const SubproblemResult& res, bool ineq_active) const {
        Multipliers m;
        if (!qp_.eq.empty() && !res.plane_multipliers.empty())
            m.lagrange_eq = res.plane_multipliers[0];
        if (ineq_active) {
            // Stationarity accumulates +lambda*plane; the report convention
            // subtracts the inequality term, so flip the sign.
            std::size_t idx = qp_.eq.empty() ? 0 : 1;
            if (idx < res.plane_multipliers.size())
                m.lagrange_ineq = -res.plane_multipliers[idx];
        }
        return m;
    }

private:
    void gradient(const std::vector<double>& gamma, std::vector<double>& grad) const {
        for (std::size_t i = 0; i < qp_.n; ++i)
            grad[i] = simd::dot(qp_.q.data() + i * qp_.n, gamma.data(), qp_.n) - qp_.lin[i];
    }

    // Exact minimization over the current free set with the plane
    // constraints kept, then the largest feasible line step toward that
    // minimizer; repeated while bound multipliers with the wrong sign can be
    // released. Skipped silently whenever a constraint block is singular on
    // the free set; the PG iteration then carries the progress.
    void subspace_step(std::vector<double>& gamma,
                       const std::vector<const std::vector<double>*>& planes,
                       std::vector<double>& lambda) {
        const std::size_t n = qp_.n;
        const std::size_t k = planes.size();

        std::vector<std::size_t> free_idx;
        for (std::size_t i = 0; i < n; ++i)
            if (gamma[i] > qp_.lower[i] && gamma[i] < qp_.upper[i]) free_idx.push_back(i);

        for (int attempt = 0; attempt < static_cast<int>(n) + 1; ++attempt) {
            std::vector<double> target = gamma;
            std::fill(lambda.begin(), lambda.end(), 0.0);
            if (!solve_kkt(gamma, free_idx, planes, target, lambda)) return;

            // Largest feasible step toward the subspace minimizer. The step
            // direction keeps the plane residual contracting: E(gamma + a*p)
            // = (1-a) * E(gamma) because the target satisfies the planes.
            double alpha = 1.0;
            for (std::size_t i : free_idx) {
                double p = target[i] - gamma[i];
                if (p > 0.0)
                    alpha = std::min(alpha, (qp_.upper[i] - gamma[i]) / p);
                else if (p < 0.0)
                    alpha = std::min(alpha, (qp_.lower[i] - gamma[i]) / p);
            }
            alpha = std::max(alpha, 0.0);
            bool moved = false;
            for (std::size_t i : free_idx) {
                double next = gamma[i] + alpha * (target[i] - gamma[i]);
                if (next != gamma[i]) moved = true;
                gamma[i] = clip(next, qp_.lower[i], qp_.upper[i]);
            }

            if (alpha < 1.0) {
                // A bound was hit: shrink the free set and continue pulling
                // toward the face minimum.
                std::vector<std::size_t> still_free;
                for (std::size_t i : free_idx)
                    if (gamma[i] > qp_.lower[i] && gamma[i] < qp_.upper[i])
                        still_free.push_back(i);
                if (still_free.size() == free_idx.size()) return;  // blocked, no progress
                free_idx.swap(still_free);
                continue;
            }
            if (!moved) return;  // subspace optimum reached; PG handles releases
        }
    }

    // Unregularized KKT solve on the current face. Adopted only when the
    // solution stays in the box, keeps the planes, does not increase the
    // objective, and its (refined) multipliers certify within tol.
    bool try_polish(SubproblemResult& res,
                    const std::vector<const std::vector<double>*>& planes,
                    bool ineq_active, double tol) {
        const std::size_t n = qp_.n;
        std::vector<std::size_t> free_idx;
        for (std::size_t i = 0; i < n; ++i) {
            double span = 1.0 + qp_.upper[i] - qp_.lower[i];
            if (res.gamma[i] > qp_.lower[i] + kBoundEps * span &&
                res.gamma[i] < qp_.upper[i] - kBoundEps * span)
                free_idx.push_back(i);
        }

        std::vector<double> target = res.gamma;
        std::vector<double> lambda(planes.size(), 0.0);
        if (!solve_kkt(res.gamma, free_idx, planes, target, lambda,
                       /*prox=*/false))
            return false;
        for (std::size_t i : free_idx) {
            double span = 1.0 + qp_.upper[i] - qp_.lower[i];
            if (target[i] < qp_.lower[i] - 1e-12 * span ||
                target[i] > qp_.upper[i] + 1e-12 * span)
                return false;  // wrong face
            target[i] = clip(target[i], qp_.lower[i], qp_.upper[i]);
        }
        double f_old = objective(qp_, res.gamma);
        double f_new = objective(qp_, target);
        if (f_new > f_old + 1e-12 * (1.0 + std::abs(f_old))) return false;

        SubproblemResult candidate = res;
        candidate.gamma = target;
        candidate.plane_multipliers = lambda;
        refine_multipliers(candidate, planes, ineq_active);
        if (kkt_residuals(qp_, candidate.gamma, to_multipliers(candidate, ineq_active))
                .max_residual() <= tol) {
            res.gamma = candidate.gamma;
            res.plane_multipliers = candidate.plane_multipliers;
            return true;
        }
        return false;
    }

    // Equality-constrained KKT system on the free set, solved by Cholesky of
    // Q_FF (with escalating jitter) and a k x k Schur complement.
    bool solve_kkt(const std::vector<double>& gamma,
                   const std::vector<std::size_t>& free_idx,
                   const std::vector<const std::vector<double>*>& planes,
                   std::vector<double>& target, std::vector<double>& lambda,
                   bool prox = true) {
        const std::size_t f = free_idx.size();
        const std::size_t k = planes.size();

        std::vector<double> qff(f * f);
        double diag_max = 0.0;
        for (std::size_t a = 0; a < f; ++a) {
            for (std::size_t b = 0; b < f; ++b)
                qff[a * f + b] = qp_.q_at(free_idx[a], free_idx[b]);
            diag_max = std::max(diag_max, qff[a * f + a]);
        }
        // Proximal regularization bounds the conditioning of the free-set
        // solve; Y K Y blocks are often exactly singular because the
        // weak-supervision pool repeats the biopsy columns. The extra
        // rho*gamma_F term below turns the step into a proximal one, whose
        // fixed points are unchanged. The polish pass runs unregularized.
        const double rho =
            prox ? std::max(opts_.jitter, 1e-8 * (1.0 + diag_max)) : 0.0;
        for (std::size_t a = 0; a < f; ++a) qff[a * f + a] += rho;

        std::vector<double> chol;
        if (f > 0) {
            double jitter = 0.0;
            bool ok = false;
            for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
                chol = qff;
                if (jitter > 0.0)
                    for (std::size_t a = 0; a < f; ++a) chol[a * f + a] += jitter;
                ok = cholesky(chol, f);
                jitter = jitter == 0.0 ? opts_.jitter : jitter * 100.0;
            }
            if (!ok) return false;
        }

        // rhs = lin_F - Q_FA gamma_A + rho gamma_F: subtract the full row
        // product, then add back the (regularized) free-free part.
        std::vector<double> rhs(f);
        for (std::size_t a = 0; a < f; ++a) {
            std::size_t i = free_idx[a];
            double acc = qp_.lin[i];
            acc -= simd::dot(qp_.q.data() + i * qp_.n, gamma.data(), qp_.n);
            for (std::size_t b = 0; b < f; ++b)
                acc += qff[a * f + b] * gamma[free_idx[b]];
            rhs[a] = acc;
        }

        std::vector<double> y0 = rhs;
        chol_solve(chol, f, y0);

        std::vector<std::vector<double>> yk(k);
        for (std::size_t j = 0; j < k; ++j) {
            yk[j].resize(f);
            for (std::size_t a = 0; a < f; ++a) yk[j][a] = (*planes[j])[free_idx[a]];
            chol_solve(chol, f, yk[j]);
        }

        // Constraint rows that vanish on the free set are fixed by the bound
        // variables; their multipliers stay 0 and the step cannot move them.
        std::vector<std::size_t> effective;
        for (std::size_t j = 0; j < k; ++j) {
            double norm = 0.0;
            for (std::size_t a = 0; a < f; ++a)
                norm = std::max(norm, std::abs((*planes[j])[free_idx[a]]));
            if (norm > 1e-12) effective.push_back(j);
        }

        // Schur system S lambda = E_F y0 + E_A gamma_A over the effective rows.
        double s[4] = {0, 0, 0, 0};
        if (!effective.empty()) {
            double t[2] = {0, 0};
            for (std::size_t jj = 0; jj < effective.size(); ++jj) {
                std::size_t j = effective[jj];
                for (std::size_t mm = 0; mm < effective.size(); ++mm) {
                    std::size_t m = effective[mm];
                    double acc = 0.0;
                    for (std::size_t a = 0; a < f; ++a)
                        acc += (*planes[j])[free_idx[a]] * yk[m][a];
                    s[jj * 2 + mm] = acc;
                }
                double acc = simd::dot(planes[j]->data(), gamma.data(), qp_.n);
                for (std::size_t a = 0; a < f; ++a) {
                    acc -= (*planes[j])[free_idx[a]] * gamma[free_idx[a]];
                    acc += (*planes[j])[free_idx[a]] * y0[a];
                }
                t[jj] = acc;
            }
            if (effective.size() == 2) {
                double det = s[0] * s[3] - s[1] * s[2];
                double scale = std::abs(s[0] * s[3]) + std::abs(s[1] * s[2]) + 1e-300;
                if (std::abs(det) > 1e-9 * scale) {
                    lambda[effective[0]] = (t[0] * s[3] - t[1] * s[1]) / det;
                    lambda[effective[1]] = (s[0] * t[1] - s[2] * t[0]) / det;
                } else {
                    // Rows coincide on the free set (the WSO equality and
                    // ordering rows do on the alpha block); a feasible
                    // current point makes the second row redundant here.
                    effective.pop_back();
                }
            }
            if (effective.size() == 1) {
                std::size_t j = effective[0];
                if (std::abs(s[0]) <= 1e-300) return false;
                lambda[j] = t[0] / s[0];
            }
        }

        // gamma_F* = Qff^{-1} (rhs - E_F' lambda)
        std::vector<double> x = rhs;
        for (std::size_t j = 0; j < k; ++j) {
            if (lambda[j] == 0.0) continue;
            for (std::size_t a = 0; a < f; ++a)
                x[a] -= lambda[j] * (*planes[j])[free_idx[a]];
        }
        chol_solve(chol, f, x);

        // Iterative refinement against the (rho-regularized) saddle system;
        // the factor may carry extra jitter and the Schur solve loses digits
        // on near-singular blocks, both of which refinement recovers.
        for (int pass = 0; pass < 3; ++pass) {
            std::vector<double> r1(f), dlam(k, 0.0);
            for (std::size_t a = 0; a < f; ++a) {
                double acc = rhs[a];
                for (std::size_t b = 0; b < f; ++b) acc -= qff[a * f + b] * x[b];
                for (std::size_t j = 0; j < k; ++j)
                    acc -= lambda[j] * (*planes[j])[free_idx[a]];
                r1[a] = acc;
            }
            std::vector<double> r2(k, 0.0);
            for (std::size_t j = 0; j < k; ++j) {
                double acc = simd::dot(planes[j]->data(), gamma.data(), qp_.n);
                for (std::size_t a = 0; a < f; ++a) {
                    acc -= (*planes[j])[free_idx[a]] * gamma[free_idx[a]];
                    acc += (*planes[j])[free_idx[a]] * x[a];
                }
                r2[j] = -acc;
            }
            // correction via the same factorization and Schur data
            std::vector<double> y = r1;
            chol_solve(chol, f, y);
            if (!effective.empty()) {
                double tt[2] = {0, 0};
                for (std::size_t jj = 0; jj < effective.size(); ++jj) {
                    std::size_t j = effective[jj];
                    double acc = -r2[j];
                    for (std::size_t a = 0; a < f; ++a)
                        acc += (*planes[j])[free_idx[a]] * y[a];
                    tt[jj] = acc;
                }
                if (effective.size() == 2) {
                    double det = s[0] * s[3] - s[1] * s[2];
                    dlam[effective[0]] = (tt[0] * s[3] - tt[1] * s[1]) / det;
                    dlam[effective[1]] = (s[0] * tt[1] - s[2] * tt[0]) / det;
                } else if (std::abs(s[0]) > 1e-300) {
                    dlam[effective[0]] = tt[0] / s[0];
                }
            }
            std::vector<double> dx = r1;
            for (std::size_t j = 0; j < k; ++j)
                for (std::size_t a = 0; a < f; ++a)
                    dx[a] -= dlam[j] * (*planes[j])[free_idx[a]];
            chol_solve(chol, f, dx);
            for (std::size_t a = 0; a < f; ++a) x[a] += dx[a];
            for (std::size_t j = 0; j < k; ++j) lambda[j] += dlam[j];
        }
        for (std::size_t a = 0; a < f; ++a) target[free_idx[a]] = x[a];

        // Guard against conditioning loss: the target must still satisfy the
        // plane constraints, otherwise the step would walk off the feasible
        // manifold. Bail and let the projected-gradient iteration carry on.
        double norm_inf = 0.0;
        for (std::size_t a = 0; a < f; ++a) norm_inf = std::max(norm_inf, std::abs(x[a]));
        for (std::size_t j = 0; j < k; ++j) {
            double acc = simd::dot(planes[j]->data(), gamma.data(), qp_.n);
            for (std::size_t a = 0; a < f; ++a) {
                acc -= (*planes[j])[free_idx[a]] * gamma[free_idx[a]];
                acc += (*planes[j])[free_idx[a]] * target[free_idx[a]];
            }
            if (std::abs(acc) > 1e-10 * (1.0 + norm_inf)) return false;
        }
        return true;
    }

    const QPInstance& qp_;
    SolveOptions opts_;
    double lipschitz_ = 1.0;
};

DualSolution package(const QPInstance& qp, const SubproblemResult& res,
                     const Multipliers& m) {
    DualSolution sol;
    sol.gamma = res.gamma;
    sol.objective = objective(qp, res.gamma);
    sol.mu = qp.ineq.empty()
                 ? 0.0
                 : simd::dot(qp.ineq.data(), res.gamma.data(), qp.n);
    sol.lagrange_eq = m.lagrange_eq;
    sol.lagrange_ineq = m.lagrange_ineq;
    sol.kkt = kkt_residuals(qp, res.gamma, m);
    sol.kkt.iterations = res.iterations;
    return sol;
}

}  // namespace

DualSolution solve(const QPInstance& qp, const SolveOptions& options) {
    qp.validate();
    SolveOptions opts = options;
    if (opts.tol <= 0.0) throw ConfigError("qp::solve: tol must be positive");
    std::size_t max_iter = opts.max_iter ? opts.max_iter : 50 * std::max<std::size_t>(qp.n, 1);

    Solver solver(qp, opts);

    std::vector<const std::vector<double>*> planes;
    if (!qp.eq.empty()) planes.push_back(&qp.eq);

    // Branch with the inequality inactive first.
    SubproblemResult relaxed = solver.run(planes, max_iter, opts.tol);
    double slack = qp.ineq.empty()
                       ? 0.0
                       : simd::dot(qp.ineq.data(), relaxed.gamma.data(), qp.n);
    if (qp.ineq.empty() || slack >= -opts.tol) {
        Multipliers m = solver.to_multipliers(relaxed, false);
        DualSolution sol = package(qp, relaxed, m);
        if (relaxed.converged) return sol;
        throw NonConvergence(
            "qp::solve did not reach tol " + std::to_string(opts.tol) + " in " +
                std::to_string(max_iter) + " iterations (max KKT residual " +
                std::to_string(sol.kkt.max_residual()) + ")",
            sol);
    }

    // Inequality binds: re-solve with it pinned as a second equality.
    planes.push_back(&qp.ineq);
    SubproblemResult pinned = solver.run(planes, max_iter, opts.tol);
    Multipliers m = solver.to_multipliers(pinned, true);
    if (m.lagrange_ineq < 0.0) {
        // Degenerate optimum shared with the relaxed problem.
        Multipliers zeroed = m;
        zeroed.lagrange_ineq = 0.0;
        if (kkt_residuals(qp, pinned.gamma, zeroed).max_residual() <=
            kkt_residuals(qp, pinned.gamma, m).max_residual())
            m = zeroed;
    }
    DualSolution sol = package(qp, pinned, m);
    if (pinned.converged && sol.kkt.max_residual() <= opts.tol) return sol;
    throw NonConvergence(
        "qp::solve (active ordering constraint) did not reach tol " +
            std::to_string(opts.tol) + " (max KKT residual " +
            std::to_string(sol.kkt.max_residual()) + ")",
        sol);
}

void dump_qp(const QPInstance& qp, const std::vector<double>& gamma,
             const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_matrix = [&](const std::string& name, const std::vector<double>& data,
                            std::size_t rows, std::size_t cols) {
        std::ofstream out(dir / (name + ".csv"));
        if (!out) throw DataError("cannot open for writing: " + (dir / name).string());
        out.precision(17);
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c)
                out << (c ? "," : "") << data[r * cols + c];
            out << "\n";
        }
    };
    write_matrix("Q", qp.q, qp.n, qp.n);
    write_matrix("lin", qp.lin, 1, qp.n);
    if (!qp.eq.empty()) write_matrix("eq", qp.eq, 1, qp.n);
    if (!qp.ineq.empty()) write_matrix("ineq", qp.ineq, 1, qp.n);
    write_matrix("lower", qp.lower, 1, qp.n);
    write_matrix("upper", qp.upper, 1, qp.n);
    if (!gamma.empty()) write_matrix("gamma", gamma, 1, qp.n);
}

}  // namespace wsosvm::qp
