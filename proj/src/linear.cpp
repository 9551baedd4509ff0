#include "costgate/linear.hpp"

#include <algorithm>
#include <cmath>

#include "costgate/common.hpp"
#include "costgate/kernels.hpp"
#include "costgate/linalg.hpp"

namespace costgate {

namespace k = kernels;

double LinearModel::score(std::span<const double> x) const {
    return k::dot(weights, x) + intercept;
}

void LinearModel::scores(const Dataset& ds, std::vector<double>& out) const {
    out.resize(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) out[i] = score(ds.row(i));
}

std::vector<std::size_t> LinearModel::used_features() const {
    std::vector<std::size_t> s;
    for (std::size_t a = 0; a < weights.size(); ++a)
        if (weights[a] != 0.0) s.push_back(a);
    return s;
}

// ===========================================================================
// Weighted logistic regression (damped Newton)
// ===========================================================================

namespace {

struct LogisticEval {
    double value;
    std::vector<double> grad;  // size k+1, intercept last
};

LogisticEval logistic_eval(const Dataset& ds, double l2,
                           std::span<const double> w,
                           std::span<const double> theta) {
    const std::size_t kdim = ds.k;
    const double inv_n = 1.0 / static_cast<double>(ds.n);
    LogisticEval ev;
    ev.grad.assign(kdim + 1, 0.0);

    std::vector<double> neg_margin(ds.n), sp(ds.n), sig(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double m = k::dot(theta.first(kdim), ds.row(i)) + theta[kdim];
        neg_margin[i] = -ds.labels[i] * m;
    }
    k::softplus(neg_margin, sp);
    k::sigmoid(neg_margin, sig);

    double loss = 0.0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        loss += wi * sp[i];
        const double coef = inv_n * wi * (-ds.labels[i]) * sig[i];
        k::axpy(coef, ds.row(i), std::span<double>(ev.grad.data(), kdim));
        ev.grad[kdim] += coef;
    }
    ev.value = inv_n * loss;
    for (std::size_t a = 0; a < kdim; ++a) {
        ev.value += 0.5 * l2 * theta[a] * theta[a];
        ev.grad[a] += l2 * theta[a];
    }
    return ev;
}

double grad_norm(std::span<const double> g) {
    return std::sqrt(k::dot(g, g));
}

}  // namespace

LinearModel train_logistic(const Dataset& ds, double l2,
                           std::span<const double> sample_weights,
                           const LogisticOptions& opts) {
    require(l2 >= 0.0, "train_logistic: l2 must be non-negative");
    require(sample_weights.empty() || sample_weights.size() == ds.n,
            "train_logistic: sample weight length mismatch");
    if (!sample_weights.empty()) {
        double total = 0.0;
        for (double w : sample_weights) {
            require(w >= 0.0, "train_logistic: negative sample weight");
            total += w;
        }
        require(total > 0.0, "train_logistic: all sample weights are zero");
    }

    const std::size_t dim = ds.k + 1;
    std::vector<double> theta(dim, 0.0);
    LogisticEval ev = logistic_eval(ds, l2, sample_weights, theta);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (grad_norm(ev.grad) <= opts.grad_tol) {
            LinearModel m;
            m.weights.assign(theta.begin(), theta.begin() + ds.k);
            m.intercept = theta[ds.k];
            return m;
        }
        // weighted Hessian: (1/N) sum w sig(1-sig) xx^T + l2 on weight block
        std::vector<double> h(dim * dim, 0.0);
        const double inv_n = 1.0 / static_cast<double>(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double wi = sample_weights.empty() ? 1.0 : sample_weights[i];
            if (wi == 0.0) continue;
            const double m = k::dot(std::span<const double>(theta).first(ds.k), ds.row(i)) + theta[ds.k];
            const double s = k::sigmoid1(-ds.labels[i] * m);
            const double cw = inv_n * wi * s * (1.0 - s);
            if (cw == 0.0) continue;
            const auto x = ds.row(i);
            for (std::size_t a = 0; a < ds.k; ++a) {
                const double cx = cw * x[a];
                for (std::size_t b = a; b < ds.k; ++b) h[a * dim + b] += cx * x[b];
                h[a * dim + ds.k] += cx;
            }
            h[ds.k * dim + ds.k] += cw;
        }
        for (std::size_t a = 0; a < ds.k; ++a) h[a * dim + a] += l2;
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = 0; b < a; ++b) h[a * dim + b] = h[b * dim + a];

        std::vector<double> dir(dim), neg_grad(dim);
        for (std::size_t j = 0; j < dim; ++j) neg_grad[j] = -ev.grad[j];
        linalg::spd_solve(h, dim, neg_grad, dir);

        const double slope = k::dot(ev.grad, dir);
        double step = 1.0;
        std::vector<double> trial(dim);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < dim; ++j) trial[j] = theta[j] + step * dir[j];
            LogisticEval tev = logistic_eval(ds, l2, sample_weights, trial);
            if (tev.value <= ev.value + 0.25 * step * slope) {
                theta.swap(trial);
                ev = std::move(tev);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // flat region: gradient may already be essentially zero
            if (grad_norm(ev.grad) <= 10.0 * opts.grad_tol) break;
            fail("train_logistic: line search failed, gradient norm " +
                 format_double(grad_norm(ev.grad)));
        }
    }
    const double gn = grad_norm(ev.grad);
    if (gn <= opts.grad_tol) {
        LinearModel m;
        m.weights.assign(theta.begin(), theta.begin() + ds.k);
        m.intercept = theta[ds.k];
        return m;
    }
    fail("train_logistic: no convergence after " + std::to_string(opts.max_iter) +
         " iterations, gradient norm " + format_double(gn));
}

LinearModel train_logistic_subset(const Dataset& ds,
                                  const std::vector<std::size_t>& support, double l2,
                                  std::span<const double> sample_weights,
                                  const LogisticOptions& opts) {
    require(!support.empty(), "train_logistic_subset: empty support");
    Dataset sub;
    sub.n = ds.n;
    sub.k = support.size();
    sub.labels = ds.labels;
    sub.costs.assign(sub.k, 1.0);
    sub.features.reserve(sub.n * sub.k);
    for (std::size_t i = 0; i < ds.n; ++i)
        for (std::size_t a : support) sub.features.push_back(ds.at(i, a));
    LinearModel m = train_logistic(sub, l2, sample_weights, opts);
    LinearModel full = LinearModel::zeros(ds.k);
    full.intercept = m.intercept;
    for (std::size_t j = 0; j < support.size(); ++j) full.weights[support[j]] = m.weights[j];
    return full;
}

// ===========================================================================
// L1 logistic (FISTA with adaptive restart)
// ===========================================================================

namespace {

double l1_smooth(const Dataset& ds, std::span<const double> theta,
                 std::vector<double>* grad) {
    const std::size_t kdim = ds.k;
    const double inv_n = 1.0 / static_cast<double>(ds.n);
    std::vector<double> neg_margin(ds.n), sp(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double m = k::dot(theta.first(kdim), ds.row(i)) + theta[kdim];
        neg_margin[i] = -ds.labels[i] * m;
    }
    k::softplus(neg_margin, sp);
    if (grad != nullptr) {
        grad->assign(kdim + 1, 0.0);
        std::vector<double> sig(ds.n);
        k::sigmoid(neg_margin, sig);
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double coef = inv_n * (-ds.labels[i]) * sig[i];
            k::axpy(coef, ds.row(i), std::span<double>(grad->data(), kdim));
            (*grad)[kdim] += coef;
        }
    }
    return inv_n * k::sum(sp);
}

double l1_norm(std::span<const double> theta, std::size_t kdim) {
    double s = 0.0;
    for (std::size_t a = 0; a < kdim; ++a) s += std::fabs(theta[a]);
    return s;
}

}  // namespace

LinearModel train_l1_logistic(const Dataset& ds, double c, const L1Options& opts) {
    require(c > 0.0, "train_l1_logistic: c must be positive");
    const double lambda = 1.0 / c;
    const std::size_t dim = ds.k + 1;

    std::vector<double> x(dim, 0.0), y = x, x_prev = x, grad;
    double t_momentum = 1.0;
    double step = 1.0;
    double fx = l1_smooth(ds, x, nullptr) + lambda * l1_norm(x, ds.k);
    int stall = 0;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const double fy = l1_smooth(ds, y, &grad);
        std::vector<double> z(dim);
        double fz_smooth = 0.0;
        for (int ls = 0;; ++ls) {
            for (std::size_t j = 0; j < dim; ++j) z[j] = y[j] - step * grad[j];
            for (std::size_t a = 0; a < ds.k; ++a) {
                const double th = step * lambda;
                z[a] = z[a] > th ? z[a] - th : (z[a] < -th ? z[a] + th : 0.0);
            }
            fz_smooth = l1_smooth(ds, z, nullptr);
            double q_upper = fy, dist2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = z[j] - y[j];
                q_upper += grad[j] * d;
                dist2 += d * d;
            }
            q_upper += dist2 / (2.0 * step);
            if (fz_smooth <= q_upper + 1e-15) break;
            step *= 0.5;
            require(step > 1e-20, "train_l1_logistic: line search failed");
            (void)ls;
        }
        const double fz = fz_smooth + lambda * l1_norm(z, ds.k);
        if (fz > fx) {  // restart momentum from the last good point
            y = x;
            t_momentum = 1.0;
            if (++stall >= 40) break;  // wobbling at the optimum
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        const double mom = (t_momentum - 1.0) / t_next;
        x_prev.swap(x);
        x = z;
        for (std::size_t j = 0; j < dim; ++j) y[j] = x[j] + mom * (x[j] - x_prev[j]);
        t_momentum = t_next;
        const double improve = fx - fz;
        fx = fz;
        step = std::min(step * 1.5, 1e6);
        if (improve <= opts.rel_tol * std::max(1.0, std::fabs(fx))) {
            if (++stall >= 40 && iter > 16) break;
        } else {
            stall = 0;
        }
    }
    if (stall >= 40) {
        LinearModel m;
        m.weights.assign(x.begin(), x.begin() + ds.k);
        m.intercept = x[ds.k];
        return m;
    }
    fail("train_l1_logistic: iteration cap exceeded");
}

// ===========================================================================
// OPT2: joint group-sparse gating + prediction pair
// ===========================================================================

std::pair<double, double> group_prox(std::pair<double, double> v, double threshold) {
    require(threshold >= 0.0, "group_prox: negative threshold");
    const double norm = std::sqrt(v.first * v.first + v.second * v.second);
    if (norm <= threshold) return {0.0, 0.0};
    const double scale = 1.0 - threshold / norm;
    return {v.first * scale, v.second * scale};
}

// theta layout: [g weights (k), g intercept, f1 weights (k), f1 intercept]
Opt2Smooth opt2_smooth_eval(const Dataset& ds, std::span<const double> q,
                            std::span<const double> theta) {
    const std::size_t kd = ds.k;
    const std::size_t dim = 2 * kd + 2;
    const double inv_n = 1.0 / static_cast<double>(ds.n);
    const auto gw = theta.first(kd);
    const double gb = theta[kd];
    const auto fw = theta.subspan(kd + 1, kd);
    const double fb = theta[dim - 1];

    std::vector<double> mg(ds.n), neg_yf(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) {
        mg[i] = k::dot(gw, ds.row(i)) + gb;
        neg_yf[i] = -ds.labels[i] * (k::dot(fw, ds.row(i)) + fb);
    }
    std::vector<double> sp_f(ds.n), sp_g(ds.n), sp_ng(ds.n), sig_f(ds.n), sig_g(ds.n), sig_ng(ds.n);
    k::softplus(neg_yf, sp_f);
    k::sigmoid(neg_yf, sig_f);
    k::softplus(mg, sp_g);
    k::sigmoid(mg, sig_g);
    std::vector<double> neg_mg(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) neg_mg[i] = -mg[i];
    k::softplus(neg_mg, sp_ng);
    k::sigmoid(neg_mg, sig_ng);

    Opt2Smooth ev;
    ev.grad.assign(dim, 0.0);
    double loss = 0.0;
    auto grad_g = std::span<double>(ev.grad.data(), kd);
    auto grad_f = std::span<double>(ev.grad.data() + kd + 1, kd);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double qi = q[i];
        loss += (1.0 - qi) * (sp_f[i] + sp_g[i]) + qi * sp_ng[i];
        const double cf = inv_n * (1.0 - qi) * (-ds.labels[i]) * sig_f[i];
        const double cg = inv_n * ((1.0 - qi) * sig_g[i] - qi * sig_ng[i]);
        k::axpy(cf, ds.row(i), grad_f);
        k::axpy(cg, ds.row(i), grad_g);
        ev.grad[kd] += cg;
        ev.grad[dim - 1] += cf;
    }
    ev.value = inv_n * loss;
    return ev;
}

namespace {

double opt2_penalty(const Dataset& ds, double gamma, std::span<const double> theta) {
    double p = 0.0;
    for (std::size_t a = 0; a < ds.k; ++a) {
        const double g = theta[a], f = theta[ds.k + 1 + a];
        p += gamma * ds.costs[a] * std::sqrt(g * g + f * f);
    }
    return p;
}

}  // namespace

double opt2_objective(const Dataset& ds, std::span<const double> q, double gamma,
                      const LinearModel& g, const LinearModel& f1) {
    std::vector<double> theta(2 * ds.k + 2, 0.0);
    std::copy(g.weights.begin(), g.weights.end(), theta.begin());
    theta[ds.k] = g.intercept;
    std::copy(f1.weights.begin(), f1.weights.end(), theta.begin() + ds.k + 1);
    theta[2 * ds.k + 1] = f1.intercept;
    return opt2_smooth_eval(ds, q, theta).value + opt2_penalty(ds, gamma, theta);
}

JointLinearPair solve_opt2(const Dataset& ds, std::span<const double> q, double gamma,
                           const JointLinearPair& init, const Opt2Options& opts) {
    require(q.size() == ds.n, "solve_opt2: q length mismatch");
    for (double qi : q)
        require(qi >= 0.0 && qi <= 1.0, "solve_opt2: q entries must be in [0,1]");
    require(gamma >= 0.0, "solve_opt2: gamma must be non-negative");

    const std::size_t kd = ds.k;
    const std::size_t dim = 2 * kd + 2;
    std::vector<double> theta(dim, 0.0);
    if (!init.g.weights.empty()) {
        std::copy(init.g.weights.begin(), init.g.weights.end(), theta.begin());
        theta[kd] = init.g.intercept;
    }
    if (!init.f1.weights.empty()) {
        std::copy(init.f1.weights.begin(), init.f1.weights.end(), theta.begin() + kd + 1);
        theta[dim - 1] = init.f1.intercept;
    }

    Opt2Smooth ev = opt2_smooth_eval(ds, q, theta);
    double objective = ev.value + opt2_penalty(ds, gamma, theta);
    JointLinearPair out;
    out.objective_trace.push_back(objective);

    std::vector<double> z(dim);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        double step = 1.0;
        bool accepted = false;
        Opt2Smooth zev;
        while (step > 1e-20) {
            for (std::size_t j = 0; j < dim; ++j) z[j] = theta[j] - step * ev.grad[j];
            for (std::size_t a = 0; a < kd; ++a) {
                const auto [pg, pf] =
                    group_prox({z[a], z[kd + 1 + a]}, step * gamma * ds.costs[a]);
                z[a] = pg;
                z[kd + 1 + a] = pf;
            }
            zev = opt2_smooth_eval(ds, q, z);
            double q_upper = ev.value, dist2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double d = z[j] - theta[j];
                q_upper += ev.grad[j] * d;
                dist2 += d * d;
            }
            q_upper += dist2 / (2.0 * step);
            if (zev.value <= q_upper + 1e-15) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        require(accepted, "solve_opt2: line search failed (step below floor)");
        theta.swap(z);
        ev = std::move(zev);
        const double new_objective = ev.value + opt2_penalty(ds, gamma, theta);
        out.objective_trace.push_back(new_objective);
        const double change = objective - new_objective;
        objective = new_objective;
        if (std::fabs(change) <= opts.rel_tol * std::max(1.0, std::fabs(objective))) break;
    }

    out.g.weights.assign(theta.begin(), theta.begin() + kd);
    out.g.intercept = theta[kd];
    out.f1.weights.assign(theta.begin() + kd + 1, theta.begin() + kd + 1 + kd);
    out.f1.intercept = theta[dim - 1];
    return out;
}

}  // namespace costgate
