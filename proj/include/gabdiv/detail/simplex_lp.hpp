#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace gabdiv::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;
    double value = 0.0;
};

// Dense two-phase simplex with Bland's rule: maximize c.x s.t. A x = b, x >= 0.
class SimplexLp {
public:
    SimplexLp(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) : n_(a.cols()), c_(c) {
        const Eigen::Index m = a.rows();
        t_ = Eigen::MatrixXd::Zero(m, n_ + m + 1);
        basis_.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) {
            const double sign = b(i) < 0.0 ? -1.0 : 1.0;
            t_.row(i).head(n_) = sign * a.row(i);
            t_(i, n_ + i) = 1.0;
            t_(i, n_ + m) = sign * b(i);
            basis_[static_cast<std::size_t>(i)] = n_ + i;
        }
    }

    LpResult solve() {
        const Eigen::Index m = t_.rows();
        LpResult out;
        // Phase 1: minimize the artificial sum.
        Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_ + m);
        phase1.tail(m).setConstant(-1.0);
        if (!run(phase1, n_ + m)) return out;
        double infeas = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (basis_[static_cast<std::size_t>(i)] >= n_) infeas += t_(i, n_ + m);
        if (infeas > 1e-9) return out;
        // Drive remaining artificials out of the basis; rows with no pivot are redundant.
        for (Eigen::Index i = 0; i < m; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_) continue;
            for (Eigen::Index j = 0; j < n_; ++j) {
                if (std::abs(t_(i, j)) > kEps) {
                    pivot(i, j);
                    break;
                }
            }
        }
        Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n_ + m);
        phase2.head(n_) = c_;
        if (!run(phase2, n_)) {
            out.status = LpStatus::Unbounded;
            return out;
        }
        out.status = LpStatus::Optimal;
        out.x = Eigen::VectorXd::Zero(n_);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
            if (j < n_) out.x(j) = std::max(0.0, t_(i, n_ + m));
        }
        out.value = c_.dot(out.x);
        return out;
    }

private:
    static constexpr double kEps = 1e-11;

    void pivot(Eigen::Index r, Eigen::Index col) {
        t_.row(r) /= t_(r, col);
        for (Eigen::Index i = 0; i < t_.rows(); ++i)
            if (i != r && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(r);
        basis_[static_cast<std::size_t>(r)] = col;
    }

    // Maximizes obj over the first `allowed` columns. Returns false if unbounded.
    bool run(const Eigen::VectorXd& obj, Eigen::Index allowed) {
        const Eigen::Index m = t_.rows();
        const Eigen::Index rhs = t_.cols() - 1;
        for (int iter = 0; iter < 100000; ++iter) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed && enter < 0; ++j) {
                double reduced = obj(j);
                for (Eigen::Index i = 0; i < m; ++i) reduced -= obj(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
                if (reduced > kEps) enter = j;
            }
            if (enter < 0) return true;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (t_(i, enter) <= kEps) continue;
                const double ratio = t_(i, rhs) / t_(i, enter);
                if (ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
        return true;
    }

    Eigen::Index n_;
    Eigen::VectorXd c_;
    Eigen::MatrixXd t_;
    std::vector<Eigen::Index> basis_;
};

inline LpResult lp_maximize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    return SimplexLp(a, b, c).solve();
}

} // namespace gabdiv::detail
