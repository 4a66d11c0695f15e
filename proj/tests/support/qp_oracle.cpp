#include "qp_oracle.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

namespace {

std::size_t index(std::size_t i, std::size_t j, std::size_t n) { return i * (n - 1) + (j < i ? j : j - 1); }

// Visits every subset of {0..m-1} with at most max_size elements.
template <typename F>
void for_each_subset(std::size_t m, std::size_t max_size, std::vector<std::size_t>& chosen,
                     std::size_t from, F&& visit) {
    visit(chosen);
    if (chosen.size() == max_size) return;
    for (std::size_t k = from; k < m; ++k) {
        chosen.push_back(k);
        for_each_subset(m, max_size, chosen, k + 1, visit);
        chosen.pop_back();
    }
}

}  // namespace

double objective(const Qp& qp, const Eigen::VectorXd& x) {
    double v = (qp.q.array() * (x - qp.target).array().square()).sum();
    if (qp.linear.size() > 0) v += qp.linear.dot(x);
    return v;
}

Solution solve(const Qp& qp) {
    const auto nv = static_cast<Eigen::Index>(qp.q.size());
    const auto m = static_cast<std::size_t>(qp.A.rows());
    const Eigen::VectorXd c = qp.linear.size() > 0 ? qp.linear : Eigen::VectorXd::Zero(nv);
    const double scale = 1.0 + qp.b.cwiseAbs().maxCoeff() + qp.target.cwiseAbs().maxCoeff();

    Solution best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> chosen;
    for_each_subset(m, static_cast<std::size_t>(nv), chosen, 0, [&](const std::vector<std::size_t>& act) {
        ++best.active_sets_tried;
        const auto na = static_cast<Eigen::Index>(act.size());
        // [2Q  A_S'] [x]   [2Q t - c]
        // [A_S  0  ] [l] = [b_S     ]
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + na, nv + na);
        Eigen::VectorXd rhs(nv + na);
        kkt.topLeftCorner(nv, nv) = (2.0 * qp.q).asDiagonal();
        rhs.head(nv) = 2.0 * qp.q.cwiseProduct(qp.target) - c;
        for (Eigen::Index a = 0; a < na; ++a) {
            const auto row = static_cast<Eigen::Index>(act[static_cast<std::size_t>(a)]);
            kkt.block(nv + a, 0, 1, nv) = qp.A.row(row);
            kkt.block(0, nv + a, nv, 1) = qp.A.row(row).transpose();
            rhs(nv + a) = qp.b(row);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
        if (lu.rank() < nv + na) return;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd x = sol.head(nv);
        if (na > 0 && sol.tail(na).minCoeff() < -1e-10 * scale) return;
        if (((qp.A * x - qp.b).array() > 1e-10 * scale).any()) return;
        const double v = objective(qp, x);
        if (v < best.objective) {
            best.objective = v;
            best.x = x;
        }
    });
    if (best.x.size() == 0) throw std::runtime_error("oracle: no KKT point found");
    return best;
}

void hemimetric_rows(std::size_t n, double r, Eigen::MatrixXd& A, Eigen::VectorXd& b) {
    const std::size_t nv = n * n - n;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                if (i == j || j == k || i == k) continue;
                Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
                row(static_cast<Eigen::Index>(index(i, j, n))) = 1.0;
                row(static_cast<Eigen::Index>(index(i, k, n))) = -1.0;
                row(static_cast<Eigen::Index>(index(k, j, n))) = -1.0;
                rows.push_back(row);
                rhs.push_back(0.0);
            }
        }
    }
    for (std::size_t v = 0; v < nv; ++v) {
        Eigen::VectorXd up = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
        up(static_cast<Eigen::Index>(v)) = 1.0;
        rows.push_back(up);
        rhs.push_back(r);
    }
    for (std::size_t v = 0; v < nv; ++v) {
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
        lo(static_cast<Eigen::Index>(v)) = -1.0;
        rows.push_back(lo);
        rhs.push_back(0.0);
    }
    A.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nv));
    b.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        A.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
        b(static_cast<Eigen::Index>(k)) = rhs[k];
    }
}

}  // namespace oracle
